use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::trial::{method_rank, read_results, TrialResult};
use crate::error::Result;

/// Type-7 quantile (linear interpolation between order statistics) of a
/// sorted, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        FiveNumber {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.min <= self.q1 && self.q1 <= self.median && self.median <= self.q3 && self.q3 <= self.max
    }
}

/// Five-number summaries for one `(method, nominal)` group. Failed rows enter
/// the statistics as `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub method: String,
    pub nominal: String,
    pub trials: usize,
    pub failures: usize,
    pub stable: usize,
    pub err1: FiveNumber,
    pub err2: FiveNumber,
}

pub fn summarize_rows(rows: &[TrialResult]) -> Vec<SummaryStats> {
    let mut groups: BTreeMap<(usize, String, String), Vec<&TrialResult>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((method_rank(&r.method), r.method.clone(), r.nominal.clone()))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((_, method, nominal), g)| {
            let pick = |f: fn(&TrialResult) -> Option<f64>| -> Vec<f64> {
                g.iter().map(|r| f(r).unwrap_or(f64::INFINITY)).collect()
            };
            SummaryStats {
                method,
                nominal,
                trials: g.len(),
                failures: g.iter().filter(|r| r.failed()).count(),
                stable: g.iter().filter(|r| r.cl_stable).count(),
                err1: FiveNumber::of(&pick(|r| r.err1)),
                err2: FiveNumber::of(&pick(|r| r.err2)),
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    method: &'a str,
    nominal: &'a str,
    trials: usize,
    failures: usize,
    stable: usize,
    err1_min: f64,
    err1_q1: f64,
    err1_median: f64,
    err1_q3: f64,
    err1_max: f64,
    err2_min: f64,
    err2_q1: f64,
    err2_median: f64,
    err2_q3: f64,
    err2_max: f64,
}

pub fn write_summary(stats: &[SummaryStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in stats {
        w.serialize(SummaryRow {
            method: &s.method,
            nominal: &s.nominal,
            trials: s.trials,
            failures: s.failures,
            stable: s.stable,
            err1_min: s.err1.min,
            err1_q1: s.err1.q1,
            err1_median: s.err1.median,
            err1_q3: s.err1.q3,
            err1_max: s.err1.max,
            err2_min: s.err2.min,
            err2_q1: s.err2.q1,
            err2_median: s.err2.median,
            err2_q3: s.err2.q3,
            err2_max: s.err2.max,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated box data, one line per group, for gnuplot
/// `candlesticks` (`using 1:3:2:6:5` with whiskers from columns 3 and 7).
pub fn write_boxplot_data(stats: &[SummaryStats], path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# index label err1_min err1_q1 err1_median err1_q3 err1_max err2_min err2_q1 err2_median err2_q3 err2_max")?;
    for (i, s) in stats.iter().enumerate() {
        let (a, b) = (s.err1, s.err2);
        writeln!(
            f,
            "{i} {}/{} {} {} {} {} {} {} {} {} {} {}",
            s.method, s.nominal, a.min, a.q1, a.median, a.q3, a.max, b.min, b.q1, b.median, b.q3, b.max
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Path of the box data written next to a summary file.
pub fn boxplot_path(summary: &Path) -> PathBuf {
    summary.with_extension("dat")
}

/// Reads a results CSV, writes the summary CSV and the box data next to it.
pub fn summarize(input: &Path, output: &Path) -> Result<Vec<SummaryStats>> {
    let rows = read_results(input)?;
    let stats = summarize_rows(&rows);
    write_summary(&stats, output)?;
    write_boxplot_data(&stats, &boxplot_path(output))?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let f = FiveNumber::of(&[5.0, 3.0, 1.0, 4.0, 2.0]);
        assert_eq!((f.min, f.q1, f.median, f.q3, f.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let c = FiveNumber::of(&[7.0; 9]);
        assert_eq!((c.min, c.q1, c.median, c.q3, c.max), (7.0, 7.0, 7.0, 7.0, 7.0));
        let e = FiveNumber::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((e.q1, e.median, e.q3), (1.75, 2.5, 3.25));
    }

    #[test]
    fn infinite_entries_stay_ordered() {
        let f = FiveNumber::of(&[1.0, f64::INFINITY, 2.0, f64::INFINITY]);
        assert!(f.is_ordered());
        assert_eq!(f.max, f64::INFINITY);
        assert_eq!(f.median, f64::INFINITY);
        assert_eq!(f.min, 1.0);
    }
}
