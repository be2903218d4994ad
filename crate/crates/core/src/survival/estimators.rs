use serde::{Deserialize, Serialize};

use crate::error::{domain, rejected, Result};
use crate::model::SortedSample;

/// Right-censored lifetimes ordered by time, events before censorings at equal times.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifetimes {
    time: Vec<f64>,
    event: Vec<bool>,
    source: Vec<usize>,
}

impl Lifetimes {
    pub fn new(time: &[f64], event: &[bool]) -> Result<Self> {
        if time.len() != event.len() {
            return Err(rejected("one status per time is required"));
        }
        if time.is_empty() {
            return Err(rejected("no lifetimes"));
        }
        if let Some(t) = time.iter().find(|t| !t.is_finite()) {
            return Err(rejected(format!("non-finite time {t}")));
        }
        let mut order: Vec<usize> = (0..time.len()).collect();
        order.sort_by(|&a, &b| time[a].total_cmp(&time[b]).then(event[b].cmp(&event[a])));
        Ok(Lifetimes {
            time: order.iter().map(|&i| time[i]).collect(),
            event: order.iter().map(|&i| event[i]).collect(),
            source: order,
        })
    }

    pub fn from_sample(sample: &SortedSample) -> Result<Self> {
        let status = sample
            .status()
            .ok_or_else(|| domain("survival analysis needs an event status"))?;
        let event: Vec<bool> = sample.perm().iter().map(|&i| status[i] == 1).collect();
        Lifetimes::new(sample.values(), &event)
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.time
    }

    pub fn events(&self) -> &[bool] {
        &self.event
    }

    /// Input position of every ordered lifetime.
    pub fn source(&self) -> &[usize] {
        &self.source
    }

    pub fn n_events(&self) -> usize {
        self.event.iter().filter(|&&e| e).count()
    }

    /// Event times in order (with repeats).
    pub fn event_times(&self) -> Vec<f64> {
        self.time.iter().zip(&self.event).filter(|(_, &e)| e).map(|(&t, _)| t).collect()
    }

    /// Walks the ordered observations, calling `step(i, event)` with 1-based
    /// rank `i` for each one, and records the value returned after the last
    /// event at every distinct event time.
    fn steps(&self, kind: StepKind, mut step: impl FnMut(usize, bool) -> f64) -> StepEstimate {
        let mut times: Vec<f64> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for (idx, (&t, &e)) in self.time.iter().zip(&self.event).enumerate() {
            let v = step(idx + 1, e);
            if !e {
                continue;
            }
            if times.last() == Some(&t) {
                *values.last_mut().expect("paired with times") = v;
            } else {
                times.push(t);
                values.push(v);
            }
        }
        StepEstimate { times, values, kind }
    }

    /// Product-limit estimate. Consecutive event factors telescope, so the
    /// product is kept as `base * (r0 - d) / r0` since the last censoring,
    /// which makes the uncensored case exactly `1 - ECDF`.
    pub fn kaplan_meier(&self) -> StepEstimate {
        let n = self.len();
        let (mut base, mut r0, mut deaths) = (1.0, n, 0usize);
        self.steps(StepKind::Survival, |i, event| {
            if event {
                deaths += 1;
                base * (r0 - deaths) as f64 / r0 as f64
            } else {
                base *= (r0 - deaths) as f64 / r0 as f64;
                r0 = n - i;
                deaths = 0;
                base
            }
        })
    }

    pub fn nelson_aalen(&self) -> StepEstimate {
        let n = self.len();
        let mut h = 0.0;
        self.steps(StepKind::Cumhaz, |i, event| {
            if event {
                h += 1.0 / (n - i + 1) as f64;
            }
            h
        })
    }

    /// `n * sum of 1/((n-i)(n-i+1))` over events at times in `[t_lo, t_hi]`, skipping `i = n`.
    pub fn variance_integral(&self, t_lo: f64, t_hi: f64) -> Result<f64> {
        if t_lo > t_hi {
            return Err(domain(format!("empty interval [{t_lo}, {t_hi}]")));
        }
        Ok(self.integral_terms().filter(|&(t, _)| t_lo <= t && t <= t_hi).map(|(_, v)| v).sum())
    }

    fn integral_terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.len();
        self.time
            .iter()
            .zip(&self.event)
            .enumerate()
            .filter(move |&(idx, (_, &e))| e && idx + 1 < n)
            .map(move |(idx, (&t, _))| {
                let i = idx + 1;
                (t, n as f64 / ((n - i) as f64 * (n - i + 1) as f64))
            })
    }

    /// Variance integrals per bin of the grid `edges` (`K + 1` values). Bin
    /// `k` collects events in `(edges[k], edges[k + 1]]`; the first bin is
    /// closed on the left. Events outside the grid are ignored.
    pub fn bin_integrals(&self, edges: &[f64]) -> Result<Vec<f64>> {
        check_edges(edges)?;
        let mut out = vec![0.0; edges.len() - 1];
        for (t, v) in self.integral_terms() {
            if let Some(k) = bin_index(edges, t) {
                out[k] += v;
            }
        }
        Ok(out)
    }
}

pub(crate) fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(domain("bin edges must be at least two non-decreasing values"));
    }
    Ok(())
}

/// Bin of `t` on the grid: `(edges[k], edges[k + 1]]`, first bin closed.
pub(crate) fn bin_index(edges: &[f64], t: f64) -> Option<usize> {
    let k = edges.len() - 1;
    if t < edges[0] || t > edges[k] {
        return None;
    }
    Some(edges[1..].partition_point(|&e| e < t).min(k - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Survival,
    Cumhaz,
}

/// A right-continuous step function with jumps at the event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEstimate {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: StepKind,
}

impl StepEstimate {
    fn initial(&self) -> f64 {
        match self.kind {
            StepKind::Survival => 1.0,
            StepKind::Cumhaz => 0.0,
        }
    }

    /// Value at `t`, including a jump at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => self.initial(),
            i => self.values[i - 1],
        }
    }

    /// Value just before `t`.
    pub fn eval_left(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x < t) {
            0 => self.initial(),
            i => self.values[i - 1],
        }
    }
}

pub fn kaplan_meier(sample: &SortedSample) -> Result<StepEstimate> {
    Ok(Lifetimes::from_sample(sample)?.kaplan_meier())
}

pub fn nelson_aalen(sample: &SortedSample) -> Result<StepEstimate> {
    Ok(Lifetimes::from_sample(sample)?.nelson_aalen())
}

pub fn variance_integral(sample: &SortedSample, t_lo: f64, t_hi: f64) -> Result<f64> {
    Lifetimes::from_sample(sample)?.variance_integral(t_lo, t_hi)
}
