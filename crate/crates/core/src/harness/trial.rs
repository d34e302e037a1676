use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, Nominal, PURPOSE_PRIMARY, PURPOSE_SECOND_STAGE};
use super::summary::quantile_sorted;
use crate::baselines::{coprime_estimate, coprime_factorize, dual_youla_estimate, CoprimeFactors, Subject};
use crate::closed_loop::{simulate_loop, validate_loop, LoopDataset};
use crate::error::{Error, Result};
use crate::estimator::{estimate_dual_params, realize_plant_ss};
use crate::lti::{Evaluable, RationalTF, StateSpaceModel};
use crate::metrics::{closed_loop_stable, err1, err2, freq_grid};

/// Nominal label of the first dual-Youla stage of a two-stage trial.
pub const STAGE_ONE_LABEL: &str = "two_stage_s1";

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub dataset_hash: String,
    pub method: String,
    pub nominal: String,
    /// Empty when the method failed.
    pub err1: Option<f64>,
    pub err2: Option<f64>,
    pub cl_stable: bool,
    pub fit_residual: Option<f64>,
    /// D-SLP only.
    pub constraint_residual: Option<f64>,
    pub wall_ms: f64,
    /// Failure message; not part of the CSV.
    #[serde(skip)]
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some() || self.err1.is_none() || self.err2.is_none()
    }

    /// The row with timing zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> TrialResult {
        TrialResult {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}

pub(crate) fn method_rank(method: &str) -> usize {
    match method {
        "dslp" => 0,
        "dual_youla" => 1,
        "coprime" => 2,
        _ => 3,
    }
}

fn sort_rows(rows: &mut [TrialResult]) {
    rows.sort_by(|a, b| {
        (a.trial, method_rank(&a.method), &a.method, &a.nominal).cmp(&(b.trial, method_rank(&b.method), &b.method, &b.nominal))
    });
}

struct Context {
    plant: RationalTF,
    controller: RationalTF,
    controller_ss: StateSpaceModel,
    controller_factors: CoprimeFactors,
    grid: Vec<f64>,
    horizon: usize,
    seed: u64,
    trial: usize,
}

struct Outcome {
    err1: Option<f64>,
    err2: Option<f64>,
    cl_stable: bool,
    fit_residual: Option<f64>,
    constraint_residual: Option<f64>,
    error: Option<String>,
}

impl Outcome {
    fn failure(e: &Error) -> Self {
        Outcome {
            err1: None,
            err2: None,
            cl_stable: false,
            fit_residual: None,
            constraint_residual: None,
            error: Some(e.to_string()),
        }
    }
}

impl Context {
    fn assess(&self, ghat: &impl Evaluable, ghat_ss: Result<StateSpaceModel>, fit: f64, constraint: Option<f64>) -> Outcome {
        let mut errors = Vec::new();
        let e1 = err1(&self.plant, ghat, &self.grid).map_err(|e| errors.push(e.to_string())).ok();
        let e2 = err2(&self.plant, ghat, &self.controller, &self.grid)
            .map_err(|e| errors.push(e.to_string()))
            .ok();
        let stable = ghat_ss
            .and_then(|ss| closed_loop_stable(&ss, &self.controller_ss))
            .map_err(|e| errors.push(e.to_string()))
            .map(|(s, _)| s)
            .unwrap_or(false);
        Outcome {
            err1: e1,
            err2: e2,
            cl_stable: stable,
            fit_residual: Some(fit),
            constraint_residual: constraint,
            error: if errors.is_empty() { None } else { Some(errors.join("; ")) },
        }
    }

    fn dslp(&self, data: &LoopDataset) -> Outcome {
        match estimate_dual_params(data, &self.controller_ss, self.horizon) {
            Ok(est) => {
                let ss = realize_plant_ss(&est);
                self.assess(&est, ss, est.fit_residual, Some(est.constraint_residual))
            }
            Err(e) => Outcome::failure(&e),
        }
    }

    fn dual_youla(&self, data: &LoopDataset, g0: &RationalTF) -> (Outcome, Option<RationalTF>) {
        let run = || -> Result<_> {
            let f = coprime_factorize(g0, Subject::Plant)?;
            dual_youla_estimate(data, &self.controller_factors, &f, self.horizon)
        };
        match run() {
            Ok(est) => {
                let out = self.assess(&est.ghat, est.ghat.to_ss(), est.fit_residual, None);
                (out, Some(est.ghat))
            }
            Err(e) => (Outcome::failure(&e), None),
        }
    }

    fn coprime(&self, data: &LoopDataset, g0: &RationalTF) -> Outcome {
        let run = || -> Result<_> {
            let f = coprime_factorize(g0, Subject::Plant)?;
            coprime_estimate(data, &self.controller, &f, self.horizon)
        };
        match run() {
            Ok(est) => self.assess(&est.ghat, est.ghat.to_ss(), est.fit_residual, None),
            Err(e) => Outcome::failure(&e),
        }
    }

    fn row(&self, data: &LoopDataset, method: &str, nominal: &str, out: Outcome, wall_ms: f64) -> TrialResult {
        TrialResult {
            trial: self.trial,
            seed: self.seed,
            dataset_hash: data.hash(),
            method: method.to_string(),
            nominal: nominal.to_string(),
            err1: out.err1,
            err2: out.err2,
            cl_stable: out.cl_stable,
            fit_residual: out.fit_residual,
            constraint_residual: out.constraint_residual,
            wall_ms,
            error: out.error,
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed().as_secs_f64() * 1e3)
}

/// Runs every configured method/nominal combination for one trial.
///
/// Method failures become flagged rows; only dataset generation errors abort
/// the trial.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<TrialResult>> {
    let controller = config.controller_tf()?;
    let ctx = Context {
        plant: config.plant_tf()?,
        controller_ss: controller.to_ss()?,
        controller_factors: coprime_factorize(&controller, Subject::Controller)?,
        controller,
        grid: freq_grid(config.grid_size())?,
        horizon: config.estimation.horizon,
        seed: config.estimation.seed,
        trial,
    };
    let nominals = config.nominals()?;
    let methods = &config.estimation.methods;
    let primary = simulate_loop(&config.loop_config(trial, PURPOSE_PRIMARY)?)?;
    let second = if nominals.contains(&Nominal::TwoStage) {
        Some(simulate_loop(&config.loop_config(trial, PURPOSE_SECOND_STAGE)?)?)
    } else {
        None
    };

    let mut dslp_cache: Vec<(String, Outcome, f64)> = Vec::new();
    let mut dslp_on = |ctx: &Context, data: &LoopDataset, nominal: &str| -> TrialResult {
        let hash = data.hash();
        if !dslp_cache.iter().any(|(h, _, _)| *h == hash) {
            let (out, ms) = timed(|| ctx.dslp(data));
            dslp_cache.push((hash.clone(), out, ms));
        }
        let (_, out, ms) = dslp_cache.iter().find(|(h, _, _)| *h == hash).expect("cached");
        let copy = Outcome {
            error: out.error.clone(),
            ..*out
        };
        ctx.row(data, Method::Dslp.as_str(), nominal, copy, *ms)
    };

    let mut rows = Vec::new();
    if nominals.is_empty() && methods.contains(&Method::Dslp) {
        rows.push(dslp_on(&ctx, &primary, "-"));
    }
    for nominal in &nominals {
        let (data, g0): (&LoopDataset, Result<RationalTF>) = match nominal {
            Nominal::Zero => (&primary, Ok(RationalTF::zero())),
            Nominal::Expr { tf, .. } => (&primary, Ok(tf.clone())),
            Nominal::TwoStage => {
                let ((out, ghat), ms) = timed(|| ctx.dual_youla(&primary, &RationalTF::zero()));
                let g0 = ghat.ok_or_else(|| Error::Config(format!("first stage failed: {}", out.error.clone().unwrap_or_default())));
                rows.push(ctx.row(&primary, Method::DualYoula.as_str(), STAGE_ONE_LABEL, out, ms));
                (second.as_ref().expect("second dataset"), g0)
            }
        };
        let label = nominal.label();
        for method in methods {
            let row = match method {
                Method::Dslp => dslp_on(&ctx, data, label),
                Method::DualYoula => {
                    let ((out, _), ms) = timed(|| match &g0 {
                        Ok(g0) => ctx.dual_youla(data, g0),
                        Err(e) => (Outcome::failure(e), None),
                    });
                    ctx.row(data, method.as_str(), label, out, ms)
                }
                Method::Coprime => {
                    let (out, ms) = timed(|| match &g0 {
                        Ok(g0) => ctx.coprime(data, g0),
                        Err(e) => Outcome::failure(e),
                    });
                    ctx.row(data, method.as_str(), label, out, ms)
                }
            };
            rows.push(row);
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn aborted_rows(config: &ExperimentConfig, trial: usize, err: &Error) -> Vec<TrialResult> {
    let labels: Vec<String> = match config.nominals() {
        Ok(n) if !n.is_empty() => n.iter().map(|n| n.label().to_string()).collect(),
        _ => vec!["-".to_string()],
    };
    let mut rows = Vec::new();
    for m in &config.estimation.methods {
        for l in &labels {
            rows.push(TrialResult {
                trial,
                seed: config.estimation.seed,
                dataset_hash: String::new(),
                method: m.as_str().to_string(),
                nominal: l.clone(),
                err1: None,
                err2: None,
                cl_stable: false,
                fit_residual: None,
                constraint_residual: None,
                wall_ms: 0.0,
                error: Some(format!("trial aborted: {err}")),
            });
        }
    }
    rows
}

/// Runs all trials in parallel and returns rows sorted by
/// `(trial, method, nominal)`.
///
/// Fails up front when the configured loop is invalid (for example
/// `UnstableLoop`); later failures are flagged in the rows.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    validate_loop(&config.loop_config(0, PURPOSE_PRIMARY)?)?;
    let per_trial: Vec<Vec<TrialResult>> = (0..config.estimation.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t).unwrap_or_else(|e| aborted_rows(config, t, &e)))
        .collect();
    let mut rows: Vec<TrialResult> = per_trial.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn write_results(rows: &[TrialResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<TrialResult>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::MalformedResults(e.to_string()))?;
    let expected = [
        "trial",
        "seed",
        "dataset_hash",
        "method",
        "nominal",
        "err1",
        "err2",
        "cl_stable",
        "fit_residual",
        "constraint_residual",
        "wall_ms",
    ];
    let headers = rdr.headers().map_err(|e| Error::MalformedResults(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedResults(format!("unexpected header: {:?}", headers)));
    }
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| Error::MalformedResults(e.to_string())).map(|mut row: TrialResult| {
                if row.err1.is_none() || row.err2.is_none() {
                    row.error = Some("failed".into());
                }
                row
            })
        })
        .collect()
}

/// Median `err1`/`err2` per method and nominal at one data length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub length: usize,
    pub method: String,
    pub nominal: String,
    pub trials: usize,
    pub failures: usize,
    pub median_err1: f64,
    pub median_err2: f64,
}

/// Median of `values`, with failed entries counted as `+inf`.
pub(crate) fn median_with_failures(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let mut v: Vec<f64> = values.map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Runs the Monte Carlo at each data length. The metric grid is held at the
/// configured size so the summed errors stay comparable across lengths.
pub fn convergence_sweep(config: &ExperimentConfig, lengths: &[usize]) -> Result<Vec<SweepRow>> {
    if lengths.is_empty() {
        return Err(Error::Config("no sweep lengths given".into()));
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("sweep lengths must be strictly ascending".into()));
    }
    let horizon = config.estimation.horizon;
    if let Some(&bad) = lengths.iter().find(|&&n| n <= horizon) {
        return Err(Error::LengthTooShort { length: bad, horizon });
    }
    let mut out = Vec::new();
    for &n in lengths {
        let rows = run_monte_carlo(&config.with_length(n))?;
        let mut keys: Vec<(String, String)> = rows.iter().map(|r| (r.method.clone(), r.nominal.clone())).collect();
        keys.sort_by(|a, b| (method_rank(&a.0), &a.0, &a.1).cmp(&(method_rank(&b.0), &b.0, &b.1)));
        keys.dedup();
        for (method, nominal) in keys {
            let sel: Vec<&TrialResult> = rows.iter().filter(|r| r.method == method && r.nominal == nominal).collect();
            out.push(SweepRow {
                length: n,
                trials: sel.len(),
                failures: sel.iter().filter(|r| r.failed()).count(),
                median_err1: median_with_failures(sel.iter().map(|r| r.err1)),
                median_err2: median_with_failures(sel.iter().map(|r| r.err2)),
                method,
                nominal,
            });
        }
    }
    Ok(out)
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::preset;

    fn small(trials: usize) -> ExperimentConfig {
        let mut c = preset("benchmark").unwrap();
        c.estimation.trials = trials;
        c.estimation.grid_size = Some(256);
        c
    }

    #[test]
    fn rows_per_trial() {
        let rows = run_trial(&small(1), 0).unwrap();
        // 3 methods x 3 nominals, plus the first dual-Youla stage.
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().any(|r| r.nominal == STAGE_ONE_LABEL));
        let primary: Vec<_> = rows.iter().filter(|r| r.nominal == "zero" || r.nominal == "g0_a").collect();
        assert!(primary.windows(2).all(|w| w[0].dataset_hash == w[1].dataset_hash));
        let two: Vec<_> = rows.iter().filter(|r| r.nominal == "two_stage").collect();
        assert!(two.windows(2).all(|w| w[0].dataset_hash == w[1].dataset_hash));
        assert_ne!(two[0].dataset_hash, primary[0].dataset_hash);
    }

    #[test]
    fn nominal_a_baselines_are_flagged() {
        let rows = run_trial(&small(1), 0).unwrap();
        for r in rows.iter().filter(|r| r.nominal == "g0_a") {
            if r.method == "dslp" {
                assert!(!r.failed());
            } else {
                assert!(r.failed(), "{r:?}");
                assert!(!r.cl_stable);
            }
        }
    }

    #[test]
    fn noiseless_dslp_rows_are_accurate() {
        let mut c = small(1);
        c.excitation.sigma = 0.0;
        let rows = run_trial(&c, 0).unwrap();
        for r in rows.iter().filter(|r| r.method == "dslp") {
            // Summed percent error over 256 points at the truncation floor.
            assert!(r.err1.unwrap() < 256.0 * 100.0 * 1e-4, "{r:?}");
            assert!(r.cl_stable);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let c = small(3);
        let a: Vec<_> = run_monte_carlo(&c).unwrap().iter().map(TrialResult::without_timing).collect();
        let b: Vec<_> = run_monte_carlo(&c).unwrap().iter().map(TrialResult::without_timing).collect();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].trial <= w[1].trial));
    }

    #[test]
    fn unstable_loop_is_rejected() {
        let mut c = small(1);
        c.controller.num = vec![-0.8, 1.0];
        assert!(matches!(run_monte_carlo(&c), Err(Error::UnstableLoop { .. })));
    }

    #[test]
    fn results_csv_roundtrip() {
        let rows = run_trial(&small(1), 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_results(&rows, &path).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.err1, b.err1);
            assert_eq!(a.failed(), b.failed());
        }
        let header = std::fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
        assert_eq!(
            header,
            "trial,seed,dataset_hash,method,nominal,err1,err2,cl_stable,fit_residual,constraint_residual,wall_ms"
        );
    }

    #[test]
    fn sweep_validates_lengths() {
        let c = small(1);
        assert!(matches!(convergence_sweep(&c, &[100, 50]), Err(Error::Config(_))));
        assert!(matches!(convergence_sweep(&c, &[10]), Err(Error::LengthTooShort { .. })));
    }

    #[test]
    fn median_counts_failures_as_infinite() {
        assert_eq!(median_with_failures([Some(1.0), None, Some(3.0)].into_iter()), 3.0);
        assert_eq!(median_with_failures([None, None, Some(3.0)].into_iter()), f64::INFINITY);
    }
}
