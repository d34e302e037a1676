//! Closed-loop data generation.
//!
//! Loop equations, implemented literally:
//!
//! ```text
//! ubar = K (y + r1_sign * r1) + r2      (controller output plus plant-input injection)
//! y    = G ubar + S e
//! r    = r1_sign * K r1 + r2            (composite reference)
//! y    = (1 - G K)^-1 G r + (1 - G K)^-1 S e
//! ```
//!
//! The loop is **positive feedback** in `K`. A negative-feedback controller
//! `C` enters as `K = -C`; the benchmark controller `(z - 0.8)/z^2` therefore
//! appears as `K_loop = -(z - 0.8)/z^2`, which places the closed-loop poles at
//! `{0, 0, 0.3, 0.3}`. With `+(z - 0.8)/z^2` the same equations give a double
//! pole at `1.3`.
//!
//! `y` is produced by filtering `r` and `e` through the composed closed-loop
//! rationals, so biproper plants need no algebraic-loop handling.
//! [`simulate_loop_state_space`] iterates the loop sample by sample and is
//! kept as an independent cross-check.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{pole_list, Error, Result};
use crate::lti::{Polynomial, RationalTF, StabilityReport};
use crate::signals::{gaussian_noise, PrbsSpec, RngStream, Signal};

/// How an external signal is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSpec {
    Zero,
    Impulse,
    Prbs(PrbsSpec),
    Samples(Vec<f64>),
}

impl SignalSpec {
    pub fn generate(&self, name: &str, len: usize) -> Result<Signal> {
        let s = match self {
            SignalSpec::Zero => Signal::zeros(name, len),
            SignalSpec::Impulse => Signal::impulse(name, len),
            SignalSpec::Prbs(spec) => spec.generate_len(len)?.renamed(name),
            SignalSpec::Samples(v) => {
                if v.len() != len {
                    return Err(Error::LengthMismatch(v.len(), len));
                }
                Signal::new(name, v.clone())?
            }
        };
        Ok(s)
    }
}

/// Everything needed to generate one closed-loop dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub plant: RationalTF,
    /// Signed loop controller (positive-feedback convention, see module docs).
    pub controller: RationalTF,
    pub noise_filter: RationalTF,
    pub r1: SignalSpec,
    pub r2: SignalSpec,
    pub length: usize,
    pub sigma: f64,
    pub rng: RngStream,
    /// Sign of `K r1` in the composite reference; `+1` by default.
    #[serde(default = "default_r1_sign")]
    pub r1_sign: f64,
}

fn default_r1_sign() -> f64 {
    1.0
}

impl LoopConfig {
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        short_hash(json.as_bytes())
    }
}

/// Closed-loop characteristic polynomial and its roots.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    pub characteristic: Polynomial,
    pub stability: StabilityReport,
}

/// `den_G den_K - num_G num_K` for the positive-feedback loop.
pub fn characteristic_polynomial(g: &RationalTF, k: &RationalTF) -> Polynomial {
    &(g.den() * k.den()) - &(g.num() * k.num())
}

/// Checks well-posedness and internal stability of the `(G, K)` loop.
pub fn validate_pair(g: &RationalTF, k: &RationalTF) -> Result<LoopReport> {
    k.require_proper()?;
    g.require_proper()?;
    match g.feedback(k) {
        Err(Error::AlgebraicLoop) => return Err(Error::IllPosedLoop),
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    let characteristic = characteristic_polynomial(g, k);
    let poles = match characteristic.degree() {
        Some(0) => Vec::new(),
        _ => characteristic.roots()?,
    };
    let stability = StabilityReport::from_poles(poles);
    if !stability.stable {
        return Err(Error::UnstableLoop {
            poles: pole_list(&stability.unstable_poles()),
        });
    }
    Ok(LoopReport {
        characteristic,
        stability,
    })
}

/// Validates the loop of a config, including the noise filter.
pub fn validate_loop(config: &LoopConfig) -> Result<LoopReport> {
    let s = &config.noise_filter;
    if !s.is_proper() || !s.is_stable()?.stable {
        return Err(Error::UnstableNoiseFilter);
    }
    validate_pair(&config.plant, &config.controller)
}

/// `r = r1_sign * K r1 + r2`.
pub fn composite_reference(r1: &Signal, r2: &Signal, k: &RationalTF, r1_sign: f64) -> Result<Signal> {
    if r1.len() != r2.len() {
        return Err(Error::LengthMismatch(r1.len(), r2.len()));
    }
    let kr1 = k.simulate(r1.samples())?;
    let r = kr1.iter().zip(r2.samples()).map(|(a, b)| r1_sign * a + b).collect();
    Signal::new("r", r)
}

/// One simulated closed-loop experiment. All signals share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopDataset {
    pub r1: Signal,
    pub r2: Signal,
    pub e: Signal,
    pub u: Signal,
    pub ubar: Signal,
    pub y: Signal,
    pub ybar: Signal,
    pub r: Signal,
    pub config_hash: String,
    pub rng: RngStream,
}

impl LoopDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn columns(&self) -> [&Signal; 8] {
        [
            &self.r1, &self.r2, &self.e, &self.u, &self.ubar, &self.y, &self.ybar, &self.r,
        ]
    }

    /// Content hash over every sample; identical data gives identical hashes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for s in self.columns() {
            for v in s.samples() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex16(&h.finalize())
    }

    /// Writes `t,r1,r2,e,u,ubar,y,ybar,r` CSV plus a JSON sidecar with the
    /// config and seed at `<csv path>.json`.
    pub fn write(&self, csv_path: &Path, config: &LoopConfig) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["t", "r1", "r2", "e", "u", "ubar", "y", "ybar", "r"])?;
        let cols = self.columns();
        for t in 0..self.len() {
            let mut rec = vec![t.to_string()];
            rec.extend(cols.iter().map(|s| format!("{:?}", s.samples()[t])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        let sidecar = serde_json::json!({
            "config": config,
            "config_hash": self.config_hash,
            "seed": self.rng.seed,
            "stream": self.rng.stream,
            "dataset_hash": self.hash(),
        });
        let mut p = csv_path.as_os_str().to_owned();
        p.push(".json");
        std::fs::write(p, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

/// Generates a dataset by filtering through the composed closed-loop maps.
pub fn simulate_loop(config: &LoopConfig) -> Result<LoopDataset> {
    validate_loop(config)?;
    let n = config.length;
    let g = &config.plant;
    let k = &config.controller;
    let r1 = config.r1.generate("r1", n)?;
    let r2 = config.r2.generate("r2", n)?;
    let e = gaussian_noise(n, config.sigma, config.rng)?;
    let r = composite_reference(&r1, &r2, k, config.r1_sign)?;

    let lk = g.feedback(k)?;
    let sensitivity = RationalTF::one().feedback(&g.series(k))?;
    let se = config.noise_filter.simulate(e.samples())?;
    let y_r = lk.simulate(r.samples())?;
    let y_e = sensitivity.simulate(&se)?;
    let y: Vec<f64> = y_r.iter().zip(&y_e).map(|(a, b)| a + b).collect();
    let ybar: Vec<f64> = y.iter().zip(&se).map(|(a, b)| a - b).collect();
    let k_in: Vec<f64> = y.iter().zip(r1.samples()).map(|(a, b)| a + config.r1_sign * b).collect();
    let u = k.simulate(&k_in)?;
    let ubar: Vec<f64> = u.iter().zip(r2.samples()).map(|(a, b)| a + b).collect();

    Ok(LoopDataset {
        r1,
        r2,
        e: e.renamed("e"),
        u: Signal::new("u", u)?,
        ubar: Signal::new("ubar", ubar)?,
        y: Signal::new("y", y)?,
        ybar: Signal::new("ybar", ybar)?,
        r,
        config_hash: config.config_hash(),
        rng: config.rng,
    })
}

/// Sample-by-sample state-space simulation of the same loop.
///
/// Independent of the rational composition used by [`simulate_loop`]; the
/// per-step algebraic loop is solved explicitly.
pub fn simulate_loop_state_space(config: &LoopConfig) -> Result<LoopDataset> {
    validate_loop(config)?;
    let n = config.length;
    let g = config.plant.to_ss()?;
    let k = config.controller.to_ss()?;
    let s = config.noise_filter.to_ss()?;
    let r1 = config.r1.generate("r1", n)?;
    let r2 = config.r2.generate("r2", n)?;
    let e = gaussian_noise(n, config.sigma, config.rng)?;
    let r = composite_reference(&r1, &r2, &config.controller, config.r1_sign)?;
    let sign = config.r1_sign;

    let (dg, dk, ds) = (g.d[(0, 0)], k.d[(0, 0)], s.d[(0, 0)]);
    let denom = 1.0 - dk * dg;
    if denom.abs() < 1e-12 {
        return Err(Error::IllPosedLoop);
    }
    let mut xg = DVector::zeros(g.n_states());
    let mut xk = DVector::zeros(k.n_states());
    let mut xs = DVector::zeros(s.n_states());
    let (mut u, mut ubar, mut y, mut ybar) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for t in 0..n {
        let et = e.samples()[t];
        let se = (&s.c * &xs)[0] + ds * et;
        let cg = (&g.c * &xg)[0];
        let ck = (&k.c * &xk)[0];
        let s_r1 = sign * r1.samples()[t];
        let ub = (ck + dk * (cg + se + s_r1) + r2.samples()[t]) / denom;
        let yt = cg + dg * ub + se;
        let k_in = yt + s_r1;
        u[t] = ck + dk * k_in;
        ubar[t] = ub;
        y[t] = yt;
        ybar[t] = yt - se;
        xg = &g.a * &xg + &g.b * ub;
        xk = &k.a * &xk + &k.b * k_in;
        xs = &s.a * &xs + &s.b * et;
    }
    Ok(LoopDataset {
        r1,
        r2,
        e,
        u: Signal::new("u", u)?,
        ubar: Signal::new("ubar", ubar)?,
        y: Signal::new("y", y)?,
        ybar: Signal::new("ybar", ybar)?,
        r,
        config_hash: config.config_hash(),
        rng: config.rng,
    })
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn short_hash(bytes: &[u8]) -> String {
    hex16(&Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant() -> RationalTF {
        RationalTF::from_descending(&[1.0, 0.0, 0.0], &[1.0, -1.6, 0.89]).unwrap()
    }

    fn k_loop() -> RationalTF {
        RationalTF::from_descending(&[-1.0, 0.8], &[1.0, 0.0, 0.0]).unwrap()
    }

    fn noise_filter() -> RationalTF {
        RationalTF::from_descending(&[1.0, -1.56, 1.045, -0.3338], &[1.0, -2.35, 2.09, -0.6675]).unwrap()
    }

    fn config(sigma: f64, r2: SignalSpec, len: usize) -> LoopConfig {
        LoopConfig {
            plant: plant(),
            controller: k_loop(),
            noise_filter: noise_filter(),
            r1: SignalSpec::Zero,
            r2,
            length: len,
            sigma,
            rng: RngStream::new(11, 0),
            r1_sign: 1.0,
        }
    }

    #[test]
    fn benchmark_loop_is_stable() {
        let rep = validate_pair(&plant(), &k_loop()).unwrap();
        let p = &rep.stability.poles;
        assert_eq!(p.len(), 4);
        assert!(p[0].norm() < 1e-12 && p[1].norm() < 1e-12);
        assert!((p[2].re - 0.3).abs() < 1e-7 && (p[3].re - 0.3).abs() < 1e-7);
    }

    #[test]
    fn literal_controller_sign_is_unstable() {
        let k = k_loop().neg();
        match validate_pair(&plant(), &k) {
            Err(Error::UnstableLoop { poles }) => {
                assert_eq!(poles.len(), 2);
                assert!(poles.iter().all(|(re, _)| (re - 1.3).abs() < 1e-6));
            }
            other => panic!("expected UnstableLoop, got {other:?}"),
        }
    }

    #[test]
    fn open_loop_with_stable_plant() {
        let g = RationalTF::from_descending(&[1.0], &[1.0, -0.5]).unwrap();
        assert!(validate_pair(&g, &RationalTF::zero()).unwrap().stability.stable);
    }

    #[test]
    fn ill_posed_loop() {
        assert_eq!(
            validate_pair(&RationalTF::one(), &RationalTF::one()),
            Err(Error::IllPosedLoop)
        );
    }

    #[test]
    fn composite_reference_cases() {
        let r1 = Signal::new("r1", vec![1.0, 2.0, 3.0]).unwrap();
        let r2 = Signal::new("r2", vec![0.5, 0.5, 0.5]).unwrap();
        let z = Signal::zeros("z", 3);
        assert_eq!(composite_reference(&z, &r2, &k_loop(), 1.0).unwrap().samples(), r2.samples());
        assert_eq!(composite_reference(&r1, &z, &RationalTF::one(), 1.0).unwrap().samples(), r1.samples());
        let d = composite_reference(&r1, &r2, &RationalTF::delay(1), 1.0).unwrap();
        assert_eq!(d.samples(), &[0.5, 1.5, 2.5]);
        let short = Signal::zeros("s", 2);
        assert_eq!(composite_reference(&short, &r2, &RationalTF::one(), 1.0), Err(Error::LengthMismatch(2, 3)));
    }

    #[test]
    fn noiseless_impulse_gives_dual_parameter() {
        let ds = simulate_loop(&config(0.0, SignalSpec::Impulse, 30)).unwrap();
        for (t, v) in ds.y.samples().iter().enumerate() {
            let expected = (t as f64 + 1.0) * 0.3f64.powi(t as i32);
            assert!((v - expected).abs() < 1e-12, "t={t}: {v} vs {expected}");
        }
    }

    #[test]
    fn structural_identities_hold_exactly() {
        let prbs = SignalSpec::Prbs(PrbsSpec::new(9, 10.0, 10));
        let ds = simulate_loop(&config(2.0, prbs, 5110)).unwrap();
        let se = noise_filter().simulate(ds.e.samples()).unwrap();
        for t in 0..ds.len() {
            assert_eq!(ds.ubar.samples()[t], ds.u.samples()[t] + ds.r2.samples()[t]);
            assert_eq!(ds.ybar.samples()[t], ds.y.samples()[t] - se[t]);
        }
        assert!(ds.y.samples().iter().all(|v| v.is_finite()));
        assert!(ds.y.variance() < 1e4);
    }

    #[test]
    fn zero_plant_outputs_filtered_noise() {
        let mut cfg = config(1.0, SignalSpec::Prbs(PrbsSpec::new(5, 1.0, 2)), 62);
        cfg.plant = RationalTF::zero();
        let ds = simulate_loop(&cfg).unwrap();
        let se = noise_filter().simulate(ds.e.samples()).unwrap();
        assert_eq!(ds.y.samples(), se.as_slice());
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = config(2.0, SignalSpec::Prbs(PrbsSpec::new(9, 10.0, 2)), 1022);
        let a = simulate_loop(&cfg).unwrap();
        let b = simulate_loop(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn state_space_simulation_agrees() {
        let cfg = config(2.0, SignalSpec::Prbs(PrbsSpec::new(9, 10.0, 1)), 511);
        let a = simulate_loop(&cfg).unwrap();
        let b = simulate_loop_state_space(&cfg).unwrap();
        for t in 0..a.len() {
            assert!((a.y.samples()[t] - b.y.samples()[t]).abs() < 1e-9);
            assert!((a.ubar.samples()[t] - b.ubar.samples()[t]).abs() < 1e-9);
        }
    }
}
