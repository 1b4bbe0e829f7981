use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gauss;
use crate::error::{Error, Result};

/// Single-mode seeded amplifier read out by two photodiodes.
///
/// The probe seed carries `seed_photons` per sample. Both outputs pass the
/// same detection efficiency and collect a scattered-pump background of
/// `background` mean counts with Poissonian noise. The spatial structure of
/// the pump plays no part here beyond that background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalModel {
    pub gain: f64,
    pub efficiency: f64,
    pub seed_photons: f64,
    pub background: f64,
}

impl Default for TemporalModel {
    fn default() -> Self {
        Self { gain: 2.6, efficiency: 1.0, seed_photons: 1e6, background: 0.0 }
    }
}

/// Paired photocount samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub probe: Vec<f64>,
    pub conjugate: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.probe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probe.is_empty()
    }
}

/// Model intensity-difference noise of a [`TemporalModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalNoise {
    /// `Var(N_pr − N_c)` over the shot-noise reference.
    pub variance_ratio: f64,
    pub variance_ratio_db: f64,
    /// Shot-noise variance `η(2G−1)|α|²` of the detected beams.
    pub shot_noise_ref: f64,
}

/// `η/(2G−1) + (1−η)`: seeded twin beams reduce the difference noise to
/// `1/(2G−1)` of shot noise, and loss mixes vacuum back in.
pub fn ideal_difference_ratio(gain: f64, efficiency: f64) -> Result<f64> {
    if !(gain > 1.0) {
        return Err(Error::Domain(format!("gain must exceed 1, got {gain}")));
    }
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::Domain(format!("efficiency must lie in (0, 1], got {efficiency}")));
    }
    Ok(efficiency / (2.0 * gain - 1.0) + (1.0 - efficiency))
}

pub fn temporal_difference_noise(model: &TemporalModel) -> Result<TemporalNoise> {
    model.validate()?;
    let r = ideal_difference_ratio(model.gain, model.efficiency)?;
    Ok(TemporalNoise {
        variance_ratio: r,
        variance_ratio_db: 10.0 * r.log10(),
        shot_noise_ref: model.efficiency * (2.0 * model.gain - 1.0) * model.seed_photons,
    })
}

impl TemporalModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain > 1.0) {
            return Err(Error::Domain(format!("gain must exceed 1, got {}", self.gain)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Domain(format!("efficiency must lie in (0, 1], got {}", self.efficiency)));
        }
        if !(self.seed_photons > 0.0) || !(self.background >= 0.0) {
            return Err(Error::Domain("seed flux must be positive and background non-negative".into()));
        }
        Ok(())
    }

    /// Detected counts with the twin-beam fluctuations
    /// `δN_pr = √2√G|α|(√G x_a + √(G−1) x_b)` and
    /// `δN_c = √2√(G−1)|α|(√G x_b + √(G−1) x_a)`, `x` vacuum quadratures.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Trace> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, eta, a) = (self.gain, self.efficiency, self.seed_photons.sqrt());
        let (mean_pr, mean_c) = (g * a * a, (g - 1.0) * a * a);
        let r2 = std::f64::consts::SQRT_2;
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let mut t = Trace { probe: Vec::with_capacity(n), conjugate: Vec::with_capacity(n) };
        for _ in 0..n {
            let (xa, xb) = (half * gauss(&mut rng), half * gauss(&mut rng));
            let dpr = r2 * g.sqrt() * a * (g.sqrt() * xa + (g - 1.0).sqrt() * xb);
            let dc = r2 * (g - 1.0).sqrt() * a * (g.sqrt() * xb + (g - 1.0).sqrt() * xa);
            let lpr = (eta * (1.0 - eta) * mean_pr).sqrt() * gauss(&mut rng);
            let lc = (eta * (1.0 - eta) * mean_c).sqrt() * gauss(&mut rng);
            let (bpr, bc) = self.background_draw(&mut rng);
            t.probe.push(eta * (mean_pr + dpr) + lpr + bpr);
            t.conjugate.push(eta * (mean_c + dc) + lc + bc);
        }
        Ok(t)
    }

    /// Independent coherent beams with the same mean counts and background:
    /// the shot-noise control.
    pub fn sample_coherent(&self, n: usize, seed: u64) -> Result<Trace> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = self.efficiency;
        let (mpr, mc) = (eta * self.gain * self.seed_photons, eta * (self.gain - 1.0) * self.seed_photons);
        let mut t = Trace { probe: Vec::with_capacity(n), conjugate: Vec::with_capacity(n) };
        for _ in 0..n {
            let (bpr, bc) = self.background_draw(&mut rng);
            t.probe.push(mpr + mpr.sqrt() * gauss(&mut rng) + bpr);
            t.conjugate.push(mc + mc.sqrt() * gauss(&mut rng) + bc);
        }
        Ok(t)
    }

    /// Scattered-pump light alone, for background subtraction.
    pub fn sample_background(&self, n: usize, seed: u64) -> Result<Trace> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Trace { probe: Vec::with_capacity(n), conjugate: Vec::with_capacity(n) };
        for _ in 0..n {
            let (bpr, bc) = self.background_draw(&mut rng);
            t.probe.push(bpr);
            t.conjugate.push(bc);
        }
        Ok(t)
    }

    fn background_draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let b = self.background;
        if b == 0.0 {
            return (0.0, 0.0);
        }
        (b + b.sqrt() * gauss(rng), b + b.sqrt() * gauss(rng))
    }
}
