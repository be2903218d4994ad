use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::hc1d::Linkage;
use crate::uniformity::CriterionInfo;

/// What lies beyond one edge of a bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMark {
    /// The neighbouring bin starts right here.
    None,
    /// An empty interval separates this bin from its neighbour.
    Gap,
    /// First or last bin: the edge is an estimated end of the support.
    BoundaryOfSupport,
}

/// How the space between two consecutive bins is adjudicated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    /// Compare the right bin's extended left end with the left bin's extended right end.
    #[default]
    BoundaryExtension,
    /// Stretch both bins to the midpoint of the facing observations and re-test uniformity.
    MidpointDess,
}

/// Outcome of a gap check between two consecutive bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDecision {
    pub method: GapMethod,
    pub is_gap: bool,
    /// Extended right end of the left bin.
    pub left_bhat: f64,
    /// Extended left end of the right bin.
    pub right_ahat: f64,
    /// One of the bins has a single distinct value, so its extension is zero.
    #[serde(default)]
    pub low_confidence: bool,
}

/// A closed interval holding a contiguous run of the sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub a: f64,
    pub b: f64,
    /// Indices into the sorted sample.
    pub members: Range<usize>,
    /// Decoding error over the members' own range.
    pub dess: f64,
    pub left_gap: EdgeMark,
    pub right_gap: EdgeMark,
}

impl Bin {
    pub fn count(&self) -> usize {
        self.members.len()
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Ordered bins, the decision taken at every junction, and the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HistRepr")]
pub struct GappedHistogram {
    pub bins: Vec<Bin>,
    pub gaps: Vec<GapDecision>,
    pub l0: f64,
    pub criterion: CriterionInfo,
    pub linkage: Linkage,
}

#[derive(Deserialize)]
struct HistRepr {
    bins: Vec<Bin>,
    gaps: Vec<GapDecision>,
    l0: f64,
    criterion: CriterionInfo,
    linkage: Linkage,
}

impl TryFrom<HistRepr> for GappedHistogram {
    type Error = Error;

    fn try_from(r: HistRepr) -> Result<Self> {
        let h = GappedHistogram {
            bins: r.bins,
            gaps: r.gaps,
            l0: r.l0,
            criterion: r.criterion,
            linkage: r.linkage,
        };
        h.validate()?;
        Ok(h)
    }
}

impl GappedHistogram {
    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn n_gaps(&self) -> usize {
        self.gaps.iter().filter(|g| g.is_gap).count()
    }

    pub fn total_dess(&self) -> f64 {
        self.bins.iter().map(|b| b.dess).sum()
    }

    /// Total number of observations covered.
    pub fn n(&self) -> usize {
        self.bins.iter().map(Bin::count).sum()
    }

    /// Bin boundaries `t_0 < t_1 < ... < t_K`: the first left edge followed by every right edge.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.bins.len() + 1);
        if let Some(first) = self.bins.first() {
            e.push(first.a);
        }
        e.extend(self.bins.iter().map(|b| b.b));
        e
    }

    /// Index of the bin holding sorted position `i`.
    pub fn bin_of(&self, i: usize) -> Option<usize> {
        let k = self.bins.partition_point(|b| b.members.end <= i);
        (k < self.bins.len() && self.bins[k].members.contains(&i)).then_some(k)
    }

    /// Checks ordering, member contiguity and edge-marker consistency.
    pub fn validate(&self) -> Result<()> {
        if self.bins.is_empty() {
            return Err(domain("histogram without bins"));
        }
        if self.gaps.len() + 1 != self.bins.len() {
            return Err(domain("one gap decision is needed per junction"));
        }
        if self.bins[0].members.start != 0 {
            return Err(domain("bins must start at the first observation"));
        }
        for b in &self.bins {
            if b.members.is_empty() {
                return Err(domain("empty bin"));
            }
            if !(b.a <= b.b) || !(b.dess >= 0.0) {
                return Err(domain(format!("malformed bin [{}, {}]", b.a, b.b)));
            }
        }
        let first = &self.bins[0];
        let last = &self.bins[self.bins.len() - 1];
        if first.left_gap != EdgeMark::BoundaryOfSupport || last.right_gap != EdgeMark::BoundaryOfSupport {
            return Err(domain("outer edges must be marked as support boundaries"));
        }
        for (j, w) in self.bins.windows(2).enumerate() {
            let (l, r) = (&w[0], &w[1]);
            if l.members.end != r.members.start {
                return Err(domain(format!("bins {j} and {} do not partition the sample", j + 1)));
            }
            if l.b > r.a {
                return Err(domain(format!("bins {j} and {} overlap", j + 1)));
            }
            let mark = if self.gaps[j].is_gap { EdgeMark::Gap } else { EdgeMark::None };
            if l.right_gap != mark || r.left_gap != mark {
                return Err(domain(format!("inconsistent gap markers at junction {j}")));
            }
        }
        Ok(())
    }
}
