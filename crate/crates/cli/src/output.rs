use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anoht::anoht_tree::AuthenticityReport;
use serde::Serialize;

use crate::analysis::{Anoht1Report, Anoht2Report, DessRow, HistReport, SurvivalReport};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::svg;

/// Where the data came from, as given on the command line.
#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub value_col: String,
    pub label_col: Option<String>,
    pub status_col: Option<String>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    input: &'a InputInfo,
    config: &'a RunConfig,
    result: &'a T,
}

/// Result of any subcommand.
#[derive(Debug, Clone)]
pub enum Report {
    Hist(HistReport),
    Anoht1(Anoht1Report),
    Anoht2(Anoht2Report),
    Survival(SurvivalReport),
}

impl Report {
    pub fn command(&self) -> &'static str {
        match self {
            Report::Hist(_) => "hist",
            Report::Anoht1(_) => "anoht1",
            Report::Anoht2(_) => "anoht2",
            Report::Survival(_) => "survival",
        }
    }

    /// Canonical JSON document written to `results.json`.
    pub fn to_json(&self, input: &InputInfo, config: &RunConfig) -> CliResult<String> {
        fn env<T: Serialize>(c: &str, i: &InputInfo, cfg: &RunConfig, r: &T) -> CliResult<String> {
            let mut s = serde_json::to_string_pretty(&Envelope {
                command: c,
                input: i,
                config: cfg,
                result: r,
            })?;
            s.push('\n');
            Ok(s)
        }
        let c = self.command();
        match self {
            Report::Hist(r) => env(c, input, config, r),
            Report::Anoht1(r) => env(c, input, config, r),
            Report::Anoht2(r) => env(c, input, config, r),
            Report::Survival(r) => env(c, input, config, r),
        }
    }

    /// Plain tab-separated tables, keyed by file name.
    pub fn tables(&self) -> Vec<(&'static str, String)> {
        match self {
            Report::Hist(h) => vec![("bins.tsv", bins_tsv(h))],
            Report::Anoht1(r) => {
                let mut t = String::from("bin\tentropy_ratio\tp_value\tcounts\n");
                for b in &r.bins {
                    let counts: Vec<String> = b.counts.iter().map(u64::to_string).collect();
                    let _ = writeln!(t, "{}\t{}\t{}\t{}", b.bin_index + 1, b.entropy_ratio, b.p_value, counts.join(","));
                }
                let _ = writeln!(t, "global\t{}\t{}\t", r.global.weighted_entropy, r.global.p_value);
                vec![("bins.tsv", bins_tsv(&r.histogram)), ("phase1.tsv", t)]
            }
            Report::Anoht2(r) => vec![
                ("bins.tsv", bins_tsv(&r.histogram)),
                ("authenticity.tsv", authenticity_tsv(&r.authenticity)),
            ],
            Report::Survival(r) => {
                let mut t = String::from("bin\ta\tb\ta_original\tb_original\tevents\tmass\tsurvival_at_b\n");
                for (k, bin) in r.censored.histogram.bins.iter().enumerate() {
                    let _ = writeln!(
                        t,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                        k + 1,
                        bin.a,
                        bin.b,
                        r.bins_original[k][0],
                        r.bins_original[k][1],
                        bin.count(),
                        r.censored.masses[k],
                        r.censored.survival_at_edges[k]
                    );
                }
                let mut out = vec![("bins.tsv", t)];
                if let Some(a) = &r.authenticity {
                    out.push(("authenticity.tsv", authenticity_tsv(a)));
                }
                out
            }
        }
    }

    /// SVG views, keyed by file name.
    pub fn plots(&self) -> Vec<(&'static str, String)> {
        let hist_plots = |h: &HistReport| {
            let counts: Vec<f64> = h.histogram.bins.iter().map(|b| b.count() as f64).collect();
            let stacks: Option<Vec<Vec<f64>>> = h
                .composition
                .as_ref()
                .map(|t| t.counts().iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect());
            let names = h.composition.as_ref().map(|t| t.treatment_names().to_vec());
            let stacked = names.as_deref().zip(stacks.as_deref());
            vec![
                ("histogram.svg", svg::histogram(&h.histogram, &counts, stacked, "Histogram")),
                ("dess.svg", svg::dess_bars(&h.dess_table, "Decoding error per bin")),
            ]
        };
        match self {
            Report::Hist(h) => hist_plots(h),
            Report::Anoht1(r) => hist_plots(&r.histogram),
            Report::Anoht2(r) => {
                let mut p = hist_plots(&r.histogram);
                p.push(("tree.svg", svg::heatmap_tree(&r.proportions, &r.authenticity, "Treatment tree")));
                p
            }
            Report::Survival(r) => {
                let h = &r.censored.histogram;
                let mut p = vec![
                    ("histogram.svg", svg::histogram(h, &r.censored.masses, None, "Survival-weighted histogram")),
                    ("dess.svg", svg::dess_bars(&r.dess_table, "Decoding error per bin")),
                ];
                if let (Some(rows), Some(a)) = (&r.rows, &r.authenticity) {
                    let kept: Vec<Vec<f64>> = rows.iter().map(|row| row.row.clone()).collect();
                    p.push(("tree.svg", svg::heatmap_tree(&kept, a, "Treatment tree")));
                }
                p
            }
        }
    }
}

fn bins_tsv(h: &HistReport) -> String {
    let mut t = String::from("bin\ta\tb\ta_original\tb_original\tcount\tdess\treference\tratio\taccepted\tleft_edge\tright_edge\n");
    for (k, (bin, row)) in h.histogram.bins.iter().zip(&h.dess_table).enumerate() {
        let DessRow {
            dess,
            reference,
            ratio,
            accepted,
            ..
        } = row;
        let _ = writeln!(
            t,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{:?}",
            k + 1,
            bin.a,
            bin.b,
            h.bins_original[k][0],
            h.bins_original[k][1],
            bin.count(),
            dess,
            reference,
            ratio.map_or_else(|| "NA".to_string(), |r| r.to_string()),
            accepted,
            bin.left_gap,
            bin.right_gap
        );
    }
    t
}

fn authenticity_tsv(a: &AuthenticityReport) -> String {
    let mut t = String::from("node\tleaves\theight\trank\tindex\n");
    for n in &a.nodes {
        let _ = writeln!(t, "{}\t{}\t{}\t{}\t{}", n.node, n.leaf_names.join(","), n.height, n.rank_digit, n.index);
    }
    t
}

/// Writes results.json, the tables and (optionally) the plots into `dir`.
pub fn write_all(
    dir: &Path,
    report: &Report,
    input: &InputInfo,
    config: &RunConfig,
    plots: bool,
) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = vec![("results.json", report.to_json(input, config)?)];
    files.extend(report.tables());
    if plots {
        files.extend(report.plots());
    }
    files
        .into_iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}
