//! Excitation and noise generation, and the Toeplitz regressor.
//!
//! Gaussian noise is drawn from ChaCha20 (`rand_chacha`) keyed by the 64-bit
//! seed, with the 64-bit stream id selecting the ChaCha stream, and mapped to
//! `N(0, 1)` by `rand_distr`'s ziggurat sampler. Both crates are pinned by the
//! lockfile; changing either changes every simulated dataset.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, finite-valued sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    name: String,
    samples: Vec<f64>,
}

impl Signal {
    pub fn new(name: impl Into<String>, samples: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { name, index });
        }
        Ok(Signal { name, samples })
    }

    pub fn zeros(name: impl Into<String>, len: usize) -> Self {
        Signal {
            name: name.into(),
            samples: vec![0.0; len],
        }
    }

    /// Unit impulse of length `len`.
    pub fn impulse(name: impl Into<String>, len: usize) -> Self {
        let mut s = Signal::zeros(name, len);
        if len > 0 {
            s.samples[0] = 1.0;
        }
        s
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Writes `t,value` CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "value"])?;
        for (t, v) in self.samples.iter().enumerate() {
            w.write_record([t.to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(name: impl Into<String>, path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Io(format!("expected header `t,value`, got {headers:?}")));
        }
        let mut samples = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let v: f64 = rec[1]
                .trim()
                .parse()
                .map_err(|e| Error::Io(format!("bad sample `{}`: {e}", &rec[1])))?;
            samples.push(v);
        }
        Signal::new(name, samples)
    }
}

/// Reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// i.i.d. `N(0, sigma^2)` samples.
pub fn gaussian_noise(length: usize, sigma: f64, rng: RngStream) -> Result<Signal> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(Signal::zeros("e", length));
    }
    let mut g = rng.rng();
    let samples = (0..length)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut g);
            sigma * z
        })
        .collect();
    Signal::new("e", samples)
}

/// Feedback taps of a maximal-length Fibonacci LFSR for common orders.
pub fn default_taps(order: usize) -> Option<Vec<usize>> {
    let taps: &[usize] = match order {
        2 => &[2, 1],
        3 => &[3, 2],
        4 => &[4, 3],
        5 => &[5, 3],
        6 => &[6, 5],
        7 => &[7, 6],
        8 => &[8, 6, 5, 4],
        9 => &[9, 5],
        10 => &[10, 7],
        11 => &[11, 9],
        12 => &[12, 6, 4, 1],
        13 => &[13, 4, 3, 1],
        14 => &[14, 5, 3, 1],
        15 => &[15, 14],
        16 => &[16, 15, 13, 4],
        _ => return None,
    };
    Some(taps.to_vec())
}

/// PRBS settings. `taps` and `init` fall back to [`default_taps`] and the
/// all-ones register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrbsSpec {
    pub order: usize,
    pub amplitude: f64,
    pub periods: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<bool>>,
}

impl PrbsSpec {
    pub fn new(order: usize, amplitude: f64, periods: usize) -> Self {
        PrbsSpec {
            order,
            amplitude,
            periods,
            taps: None,
            init: None,
        }
    }

    pub fn period(&self) -> usize {
        (1usize << self.order) - 1
    }

    fn resolved(&self) -> Result<(Vec<usize>, Vec<bool>)> {
        let taps = match &self.taps {
            Some(t) => t.clone(),
            None => default_taps(self.order)
                .ok_or_else(|| Error::InvalidLfsr(format!("no default taps for order {}", self.order)))?,
        };
        let init = self.init.clone().unwrap_or_else(|| vec![true; self.order]);
        Ok((taps, init))
    }

    /// The full `periods`-fold sequence.
    pub fn generate(&self) -> Result<Signal> {
        let (taps, init) = self.resolved()?;
        prbs_generate(self.order, self.amplitude, self.periods, &taps, &init)
    }

    /// The periodic schedule truncated or extended to exactly `len` samples.
    pub fn generate_len(&self, len: usize) -> Result<Signal> {
        let (taps, init) = self.resolved()?;
        let one = prbs_generate(self.order, self.amplitude, 1, &taps, &init)?;
        let period = one.samples();
        let samples = (0..len).map(|t| period[t % period.len()]).collect();
        Signal::new("prbs", samples)
    }
}

/// One period of a Fibonacci LFSR; errors if the state recurs early.
fn lfsr_period(order: usize, taps: &[usize], init: &[bool]) -> Result<Vec<bool>> {
    if !(2..=32).contains(&order) {
        return Err(Error::InvalidLfsr(format!("order {order} outside 2..=32")));
    }
    if init.len() != order {
        return Err(Error::InvalidLfsr(format!("init has {} bits, order is {order}", init.len())));
    }
    if taps.is_empty() || taps.iter().any(|&t| t == 0 || t > order) || !taps.contains(&order) {
        return Err(Error::InvalidLfsr(format!("taps {taps:?} invalid for order {order}")));
    }
    if init.iter().all(|&b| !b) {
        return Err(Error::ZeroInitialState);
    }
    let expected = (1usize << order) - 1;
    let mut reg = init.to_vec();
    let mut bits = Vec::with_capacity(expected);
    for step in 1..=expected {
        bits.push(reg[order - 1]);
        let fb = taps.iter().fold(false, |acc, &t| acc ^ reg[t - 1]);
        reg.rotate_right(1);
        reg[0] = fb;
        if reg == init && step < expected {
            return Err(Error::NonMaximalLength {
                period: step,
                expected,
            });
        }
    }
    if reg != init {
        return Err(Error::NonMaximalLength {
            period: 0,
            expected,
        });
    }
    Ok(bits)
}

/// Maximal-length PRBS, bit 1 mapped to `+amplitude`, repeated `periods` times.
pub fn prbs_generate(order: usize, amplitude: f64, periods: usize, taps: &[usize], init: &[bool]) -> Result<Signal> {
    let bits = lfsr_period(order, taps, init)?;
    let one: Vec<f64> = bits.iter().map(|&b| if b { amplitude } else { -amplitude }).collect();
    let mut samples = Vec::with_capacity(one.len() * periods);
    for _ in 0..periods {
        samples.extend_from_slice(&one);
    }
    Signal::new("prbs", samples)
}

/// Lower-triangular Toeplitz matrix: column `j` is `r` delayed by `j` samples.
pub fn toeplitz_regressor(r: &Signal, horizon: usize) -> Result<DMatrix<f64>> {
    let x = r.samples();
    if x.is_empty() || x.len() <= horizon {
        return Err(Error::EmptySignal);
    }
    let n = x.len();
    Ok(DMatrix::from_fn(n, horizon + 1, |t, j| if t >= j { x[t - j] } else { 0.0 }))
}
