//! Query and Toffoli budgets for QSP time evolution, and readout-averaging costs.
//!
//! The Jacobi-Anger truncation degree uses the natural logarithm together with
//! the analytic constant `c = 4 / (sqrt(2 pi) e^{1/13})`.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Atomic units of time per femtosecond.
pub const AU_PER_FS: f64 = 41.3414;

/// Errors raised by the planner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    /// The target error must be positive.
    #[error("error target must be positive, got {0}")]
    NonPositiveDelta(f64),
    /// The block-encoding error budget divides by `|t|`.
    #[error("block-encoding error budget is undefined at t = 0")]
    ZeroTime,
    /// The sampling yield must lie in `(0, 1]`.
    #[error("yield must lie in (0, 1], got {0}")]
    InvalidYield(f64),
    /// The relative readout error must be positive.
    #[error("relative error must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    /// A non-finite or negative normalization was supplied.
    #[error("invalid normalization {0}")]
    InvalidLambda(f64),
    /// The call count does not fit in 64 bits.
    #[error("iterate count overflows")]
    Overflow,
}

/// The Jacobi-Anger constant `4 / (sqrt(2 pi) e^{1/13})`.
pub fn jacobi_anger_constant() -> f64 {
    4.0 / ((2.0 * PI).sqrt() * (1.0 / 13.0f64).exp())
}

fn ceil_count(x: f64) -> Result<u64, PlanError> {
    let c = x.ceil();
    if !c.is_finite() || c > u64::MAX as f64 {
        return Err(PlanError::Overflow);
    }
    Ok(c.max(0.0) as u64)
}

/// Truncation degree `r = ceil(|tau| e / 2 + ln(c / delta))`, clamped at 0.
pub fn jacobi_anger_degree(tau: f64, delta: f64) -> Result<u64, PlanError> {
    if !(delta > 0.0) {
        return Err(PlanError::NonPositiveDelta(delta));
    }
    ceil_count(tau.abs() * E / 2.0 + (jacobi_anger_constant() / delta).ln())
}

/// Iterate calls `ceil(|tau| e / 2 + ln(2c / delta)) + 2`.
pub fn iterate_calls(tau: f64, delta: f64) -> Result<u64, PlanError> {
    if !(delta > 0.0) {
        return Err(PlanError::NonPositiveDelta(delta));
    }
    Ok(ceil_count(tau.abs() * E / 2.0 + (2.0 * jacobi_anger_constant() / delta).ln())? + 2)
}

/// Block-encoding error budget `delta / (2 |t|)`.
pub fn block_encoding_budget(t: f64, delta: f64) -> Result<f64, PlanError> {
    if !(delta > 0.0) {
        return Err(PlanError::NonPositiveDelta(delta));
    }
    if t == 0.0 {
        return Err(PlanError::ZeroTime);
    }
    Ok(delta / (2.0 * t.abs()))
}

/// Budget for one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionPlan {
    /// Evolution time in atomic units.
    pub t: f64,
    /// `lambda t`.
    pub tau: f64,
    /// Jacobi-Anger truncation degree.
    pub degree: u64,
    /// Total error.
    pub delta: f64,
    /// Block-encoding error budget; `None` at `t = 0`.
    pub delta_be: Option<f64>,
    /// Calls to the block-encoding iterate.
    pub iterate_calls: u64,
    /// Toffolis per block-encoding call.
    pub toffolis_per_call: u64,
    /// `iterate_calls * toffolis_per_call`.
    pub toffoli_total: u128,
    /// Toffolis per femtosecond at this `tau / t`.
    pub per_fs: f64,
    /// Optional one-time state-preparation estimate.
    pub state_prep: Option<f64>,
}

/// Plan a time evolution of length `t` (atomic units) given the total normalization and the per-call cost.
pub fn evolution_cost(lambda: f64, toffolis_per_call: u64, t: f64, delta: f64) -> Result<EvolutionPlan, PlanError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(PlanError::InvalidLambda(lambda));
    }
    let tau = lambda * t;
    let calls = iterate_calls(tau, delta)?;
    let toffoli_total = calls as u128 * toffolis_per_call as u128;
    let per_fs = if t == 0.0 {
        // At t = 0 only the additive error floor remains; report the rate at one femtosecond.
        iterate_calls(lambda * AU_PER_FS, delta)? as f64 * toffolis_per_call as f64
    } else {
        toffoli_total as f64 / t.abs() * AU_PER_FS
    };
    Ok(EvolutionPlan {
        t,
        tau,
        degree: jacobi_anger_degree(tau, delta)?,
        delta,
        delta_be: if t == 0.0 { None } else { Some(block_encoding_budget(t, delta)?) },
        iterate_calls: calls,
        toffolis_per_call,
        toffoli_total,
        per_fs,
        state_prep: None,
    })
}

/// Plans over a grid of times, evaluated in parallel and returned in input order.
pub fn time_sweep(
    lambda: f64,
    toffolis_per_call: u64,
    times: &[f64],
    delta: f64,
) -> Result<Vec<EvolutionPlan>, PlanError> {
    times.par_iter().map(|&t| evolution_cost(lambda, toffolis_per_call, t, delta)).collect()
}

/// One-time state-preparation estimate `eta_val |G| + eta_ion |G-bar|` with unit constant.
pub fn state_prep_estimate(eta_val: u64, g: u64, eta_ion: u64, gbar: u64) -> f64 {
    eta_val as f64 * g as f64 + eta_ion as f64 * gbar as f64
}

/// Readout strategy for expectation values over a post-selected ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AveragingMode {
    /// Repeat and post-select classically.
    Sample,
    /// Amplitude-estimate over a coherent superposition.
    Coherent,
}

/// Readout cost with every big-O constant set to 1.
///
/// Sample mode: `(C_init + C_algo) / (s eps^2)`. Coherent mode:
/// `(|S| C_init + C_algo) / (sqrt(s) eps)`.
pub fn averaging_cost(
    mode: AveragingMode,
    s: f64,
    eps: f64,
    c_init: f64,
    c_algo: f64,
    s_size: u64,
) -> Result<f64, PlanError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(PlanError::InvalidYield(s));
    }
    if !(eps > 0.0) {
        return Err(PlanError::NonPositiveEpsilon(eps));
    }
    Ok(match mode {
        AveragingMode::Sample => (c_init + c_algo) / (s * eps * eps),
        AveragingMode::Coherent => (s_size as f64 * c_init + c_algo) / (s.sqrt() * eps),
    })
}

/// The three scaling terms of the total complexity, unitless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticTerms {
    /// `eta^{4/3} |G|^{2/3}`.
    pub kinetic_coulomb: f64,
    /// `eta^{2/3} eta_val^2 |G|^{1/3}`.
    pub electron_pseudo: f64,
    /// `eta eta_val eta_ion`.
    pub ion_coupling: f64,
}

impl AsymptoticTerms {
    /// Sum of the three terms.
    pub fn total(&self) -> f64 {
        self.kinetic_coulomb + self.electron_pseudo + self.ion_coupling
    }

    /// Labeled magnitudes.
    pub fn labeled(&self) -> [(&'static str, f64); 3] {
        [
            ("eta^(4/3) |G|^(2/3)", self.kinetic_coulomb),
            ("eta^(2/3) eta_val^2 |G|^(1/3)", self.electron_pseudo),
            ("eta eta_val eta_ion", self.ion_coupling),
        ]
    }
}

/// Evaluate the scaling terms for particle counts and electron basis size.
pub fn asymptotic_terms(eta_val: u64, eta_ion: u64, g: u64) -> AsymptoticTerms {
    let eta = (eta_val + eta_ion) as f64;
    let (ev, ei, g) = (eta_val as f64, eta_ion as f64, g as f64);
    AsymptoticTerms {
        kinetic_coulomb: eta.powf(4.0 / 3.0) * g.powf(2.0 / 3.0),
        electron_pseudo: eta.powf(2.0 / 3.0) * ev * ev * g.cbrt(),
        ion_coupling: eta * ev * ei,
    }
}
