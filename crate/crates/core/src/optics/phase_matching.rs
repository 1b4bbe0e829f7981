use super::OpticalConfig;
use crate::error::{Error, Result};

/// How the longitudinal wavenumber `k_z` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KzModel {
    /// `k_z ≈ k − |k⊥|²/(2k)`.
    Paraxial,
    /// `k_z = √(k² − |k⊥|²)`.
    Exact,
}

const MAX_TRANSVERSE_RATIO: f64 = 0.1;

fn kz(kp: [f64; 2], k: f64, model: KzModel) -> Result<f64> {
    let t2 = kp[0] * kp[0] + kp[1] * kp[1];
    if t2.sqrt() / k > MAX_TRANSVERSE_RATIO {
        return Err(Error::Domain(format!("|k⊥|/k = {:.3} exceeds the paraxial limit {MAX_TRANSVERSE_RATIO}", t2.sqrt() / k)));
    }
    Ok(match model {
        KzModel::Paraxial => k - t2 / (2.0 * k),
        KzModel::Exact => (k * k - t2).sqrt(),
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Longitudinal mismatch `2k_p^z − k_pr^z − k_c^z`, both pump photons
/// carrying half the summed transverse momentum.
fn delta_kz(k_pr: [f64; 2], k_c: [f64; 2], k: f64, model: KzModel) -> Result<f64> {
    let kp = [(k_pr[0] + k_c[0]) / 2.0, (k_pr[1] + k_c[1]) / 2.0];
    Ok(2.0 * kz(kp, k, model)? - kz(k_pr, k, model)? - kz(k_c, k, model)?)
}

/// `sinc(Δk_z·L/2)` for a probe/conjugate pair of transverse wavevectors.
pub fn phase_mismatch_weight(k_pr: [f64; 2], k_c: [f64; 2], cfg: &OpticalConfig, model: KzModel) -> Result<f64> {
    Ok(sinc(delta_kz(k_pr, k_c, cfg.k(), model)? * cfg.cell_length / 2.0))
}

/// Weight applied to Φ at summed momentum `q`.
///
/// Probe and conjugate are taken at the bright-beam carriers `±k₀` (set by
/// the probe–pump angle) plus `q/2` each. The mismatch at the carriers
/// themselves is subtracted: the medium is phase matched along the seeded
/// direction, so only the departure from it reduces the gain.
pub fn sinc_weight_at_q(q: [f64; 2], cfg: &OpticalConfig, model: KzModel) -> Result<f64> {
    let k = cfg.k();
    let k0 = k * cfg.probe_pump_angle.sin();
    let k_pr = [k0 + q[0] / 2.0, q[1] / 2.0];
    let k_c = [-k0 + q[0] / 2.0, q[1] / 2.0];
    let reference = delta_kz([k0, 0.0], [-k0, 0.0], k, model)?;
    Ok(sinc((delta_kz(k_pr, k_c, k, model)? - reference) * cfg.cell_length / 2.0))
}
