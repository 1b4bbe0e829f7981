use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{apply_constant_phase_disk, quantize_8bit, ConstantDisk, Objective, PhasePattern, QuantizedHologram, TargetSpec};
use crate::error::{Error, Result};
use crate::field::ComplexField;

/// Settings of the nonlinear conjugate-gradient search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Cost prefactor exponent.
    pub d: f64,
    pub max_iters: usize,
    /// Largest per-sample phase change of the first line-search trial, rad.
    pub initial_step_rad: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
    /// Iterations between forced steepest-descent restarts; `None` uses the
    /// number of free phase samples.
    pub restart_period: Option<usize>,
    /// Relative cost decrease over `stagnation_window` iterations below
    /// which the search stops.
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            d: 10.0,
            max_iters: 2000,
            initial_step_rad: 0.5,
            shrink: 0.5,
            c1: 1e-4,
            max_backtracks: 40,
            restart_period: None,
            stagnation_tol: 1e-9,
            stagnation_window: 25,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.d >= 0.0
            && self.initial_step_rad > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.c1 > 0.0
            && self.c1 < 1.0
            && self.stagnation_tol > 0.0
            && self.stagnation_window > 0
            && self.max_iters > 0
            && self.restart_period != Some(0);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid optimizer settings: {self:?}")))
        }
    }
}

/// Starting phase for the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialGuess {
    /// `φ = curvature·r²`, with `r` in samples from the grid center.
    Quadratic { curvature: f64 },
    /// Uniform on `[0, 2π)` from a seeded generator.
    Random { seed: u64 },
}

impl InitialGuess {
    /// Gentle defocus spreading a pump of `waist` samples over roughly
    /// `spread` far-field samples on an `n` grid.
    pub fn defocus(n: usize, waist: f64, spread: f64) -> Self {
        Self::Quadratic { curvature: 2.0 * PI * spread / (4.0 * waist * n as f64) }
    }

    pub fn build(&self, n: usize) -> Array2<f64> {
        match *self {
            InitialGuess::Quadratic { curvature } => {
                let c = (n / 2) as f64;
                Array2::from_shape_fn((n, n), |(i, j)| curvature * ((i as f64 - c).powi(2) + (j as f64 - c).powi(2)))
            }
            InitialGuess::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..2.0 * PI))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative decrease stalled, or the cost or gradient vanished.
    Converged,
    MaxIterations,
    /// No sufficient decrease after the allowed backtracks; best-so-far returned.
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct CghResult {
    pub phase: PhasePattern,
    /// `(iteration, C)` at every accepted step, starting with iteration 0.
    pub cost_history: Vec<(usize, f64)>,
    pub final_overlap: f64,
    pub termination: Termination,
    pub quantized: QuantizedHologram,
}

impl CghResult {
    pub fn final_cost(&self) -> f64 {
        self.cost_history.last().map(|&(_, c)| c).unwrap_or(f64::NAN)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a).and(b).fold(0.0, |acc, x, y| acc + x * y)
}

/// Polak–Ribière+ conjugate gradient over the free (non-disk) phase samples
/// with an Armijo backtracking line search.
///
/// The first trial step moves the largest phase sample by
/// `initial_step_rad`, so the iterate sequence does not depend on `d`.
pub fn conjugate_gradient_minimize(e0: &ComplexField, target: &TargetSpec, init: &PhasePattern, opt: &OptimizerConfig) -> Result<CghResult> {
    opt.validate()?;
    let disk: ConstantDisk = *init.disk();
    let obj = Objective::new(e0, target, &disk, opt.d)?;
    let n = init.n();
    let n_free = disk.free_mask(n).iter().filter(|&&f| f).count().max(1);
    let restart = opt.restart_period.unwrap_or(n_free);

    let mut phi = init.phi().clone();
    let mut grad = Array2::zeros((n, n));
    let mut c = obj.cost_and_gradient(&phi, &mut grad);
    let mut dir = grad.mapv(|g| -g);
    let mut history = vec![(0, c)];
    let mut termination = Termination::MaxIterations;
    let mut trial = Array2::zeros((n, n));
    let mut new_grad = Array2::zeros((n, n));

    for it in 1..=opt.max_iters {
        if c == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir = grad.mapv(|g| -g);
            slope = -dot(&grad, &grad);
        }
        if slope == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let pmax = dir.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut alpha = opt.initial_step_rad / pmax;
        let eval = |alpha: f64, trial: &mut Array2<f64>| {
            Zip::from(&mut *trial).and(&phi).and(&dir).for_each(|t, &p, &d| *t = p + alpha * d);
            obj.cost(trial)
        };
        let armijo = |alpha: f64, ct: f64| ct <= c + opt.c1 * alpha * slope;

        let mut ct = eval(alpha, &mut trial);
        let mut backtracks = 0;
        while !armijo(alpha, ct) && backtracks < opt.max_backtracks {
            alpha *= opt.shrink;
            ct = eval(alpha, &mut trial);
            backtracks += 1;
        }
        if !armijo(alpha, ct) {
            termination = Termination::LineSearchFailed;
            break;
        }
        if backtracks == 0 {
            for _ in 0..30 {
                let a2 = alpha / opt.shrink;
                let c2 = eval(a2, &mut trial);
                if armijo(a2, c2) && c2 < ct {
                    alpha = a2;
                    ct = c2;
                } else {
                    break;
                }
            }
        }
        Zip::from(&mut phi).and(&dir).for_each(|p, &d| *p += alpha * d);
        let c_new = obj.cost_and_gradient(&phi, &mut new_grad);
        let gg = dot(&grad, &grad);
        let mut beta = if gg > 0.0 { (dot(&new_grad, &new_grad) - dot(&new_grad, &grad)) / gg } else { 0.0 };
        if beta < 0.0 || it % restart == 0 {
            beta = 0.0;
        }
        Zip::from(&mut dir).and(&new_grad).for_each(|d, &g| *d = -g + beta * *d);
        std::mem::swap(&mut grad, &mut new_grad);
        c = c_new;
        history.push((it, c));

        if history.len() > opt.stagnation_window {
            let past = history[history.len() - 1 - opt.stagnation_window].1;
            if c == 0.0 || (past - c) / c < opt.stagnation_tol {
                termination = Termination::Converged;
                break;
            }
        }
    }

    let phase = apply_constant_phase_disk(&phi, disk)?;
    let final_overlap = obj.overlap(phase.phi());
    let quantized = quantize_8bit(&phase);
    Ok(CghResult { phase, cost_history: history, final_overlap, termination, quantized })
}
