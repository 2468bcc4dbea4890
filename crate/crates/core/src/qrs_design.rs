//! Reference states for quantum rejection sampling.
//!
//! A reference function must dominate the modulus of its target at every
//! basis point. The success probability of one rejection-sampling step is
//! the ratio of the squared sums of target and reference, and it fixes the
//! number of amplitude-amplification rounds.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_basis::{box_fold_vec, BasisSpec};
use crate::pseudopotential::{g_radial_all, nonlocal_eigen, PseudoIonParams};

/// Errors raised by reference-state construction and scans.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrsError {
    /// The reference falls below the target at a basis point.
    #[error("reference does not dominate the target at p = {p:?} (target {target:e}, reference {reference:e})")]
    Domination {
        /// First violating index in lexicographic order.
        p: [i64; 3],
        /// Target modulus there.
        target: f64,
        /// Reference value there.
        reference: f64,
    },
    /// No parameters exist for the requested context.
    #[error("no reference parameters for {0}")]
    MissingContext(String),
    /// The zero momentum was passed where it is excluded.
    #[error("the zero exchange vector is excluded")]
    ZeroExchange,
    /// The QHO level exceeds the configured maximum.
    #[error("QHO level {level} exceeds the maximum {max}")]
    LevelTooHigh { level: u32, max: u32 },
    /// The parameter file could not be read.
    #[error("reference parameter file: {0}")]
    Params(String),
}

/// `(pi/6)^(1/3)`, the unit of the plateau half-width.
pub fn k_star_unit() -> f64 {
    (PI / 6.0).cbrt()
}

/// Success-probability thresholds for 1, 2 and 3 amplification rounds.
pub const ROUND_THRESHOLDS: [f64; 3] = [0.25, 0.095, 0.05];

/// Rounds needed for success probability `p`; `None` below the 3-round threshold.
pub fn rounds_for(p: f64) -> Option<u32> {
    ROUND_THRESHOLDS.iter().position(|&t| p >= t).map(|i| i as u32 + 1)
}

/// Plateau-plus-tail parameters in the dimensionless units of the parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    /// Plateau half-width in units of `(pi/6)^(1/3)`.
    pub k_star: f64,
    /// `sqrt(3) r gamma`.
    pub gamma: f64,
    /// Tail prefactor.
    pub d: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailEntry {
    k_star: f64,
    gamma: f64,
    d: Option<f64>,
    d_exp: Option<f64>,
}

impl TailEntry {
    fn resolve(&self, what: &str) -> Result<TailParams, QrsError> {
        let d = match (self.d, self.d_exp) {
            (Some(d), None) => d,
            (None, Some(e)) => e.exp(),
            _ => return Err(QrsError::Params(format!("{what}: give exactly one of d or d_exp"))),
        };
        Ok(TailParams { k_star: self.k_star, gamma: self.gamma, d })
    }
}

/// Per-channel parameter adjustment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelOverride {
    /// Species label.
    pub species: String,
    /// Angular momentum.
    pub l: usize,
    /// Eigen-channel, 1-based in ascending eigenvalue order.
    pub alpha: usize,
    /// Replacement plateau half-width.
    pub k_star: Option<f64>,
    /// Replacement tail decay.
    pub gamma: Option<f64>,
    /// Replacement tail prefactor.
    pub d: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamFile {
    nonlocal: std::collections::BTreeMap<String, TailEntry>,
    local: std::collections::BTreeMap<String, TailEntry>,
    coulomb_tail: TailEntry,
    #[serde(default, rename = "override")]
    overrides: Vec<ChannelOverride>,
}

/// The full reference-parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrsParams {
    /// Non-local channels by `l`.
    pub nonlocal: [TailParams; 3],
    /// Local terms by `s = 0..3`.
    pub local: [TailParams; 4],
    /// Tail of the `s = -1` ladder reference.
    pub coulomb_tail: TailParams,
    /// Per-channel adjustments.
    pub overrides: Vec<ChannelOverride>,
}

/// The parameter table shipped with the crate.
pub const BUNDLED_QRS_PARAMS: &str = include_str!("../data/qrs_params.toml");

impl QrsParams {
    /// Parse a parameter file.
    pub fn parse(text: &str) -> Result<Self, QrsError> {
        let f: ParamFile = toml::from_str(text).map_err(|e| QrsError::Params(e.to_string()))?;
        let get = |m: &std::collections::BTreeMap<String, TailEntry>, key: String| {
            m.get(&key).ok_or_else(|| QrsError::Params(format!("missing entry {key}"))).and_then(|e| e.resolve(&key))
        };
        let nonlocal = [get(&f.nonlocal, "l0".into())?, get(&f.nonlocal, "l1".into())?, get(&f.nonlocal, "l2".into())?];
        let local = [
            get(&f.local, "s0".into())?,
            get(&f.local, "s1".into())?,
            get(&f.local, "s2".into())?,
            get(&f.local, "s3".into())?,
        ];
        for o in &f.overrides {
            if o.l > 2 || !(1..=3).contains(&o.alpha) {
                return Err(QrsError::Params(format!("override {} l={} alpha={}", o.species, o.l, o.alpha)));
            }
        }
        Ok(QrsParams { nonlocal, local, coulomb_tail: f.coulomb_tail.resolve("coulomb_tail")?, overrides: f.overrides })
    }

    /// The bundled table.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_QRS_PARAMS).expect("bundled reference parameters are valid")
    }

    /// The bundled table without per-channel overrides.
    pub fn tabulated() -> Self {
        QrsParams { overrides: vec![], ..Self::bundled() }
    }

    /// Parameters for a non-local channel after overrides (`alpha` 1-based).
    pub fn nonlocal_params(&self, species: &str, l: usize, alpha: usize) -> Result<TailParams, QrsError> {
        let mut tp = *self.nonlocal.get(l).ok_or_else(|| QrsError::MissingContext(format!("l = {l}")))?;
        for o in self.overrides.iter().filter(|o| o.species == species && o.l == l && o.alpha == alpha) {
            tp.k_star = o.k_star.unwrap_or(tp.k_star);
            tp.gamma = o.gamma.unwrap_or(tp.gamma);
            tp.d = o.d.unwrap_or(tp.d);
        }
        Ok(tp)
    }

    /// Parameters for a local `s >= 0` term.
    pub fn local_params(&self, s: i32) -> Result<TailParams, QrsError> {
        usize::try_from(s)
            .ok()
            .and_then(|i| self.local.get(i))
            .copied()
            .ok_or_else(|| QrsError::MissingContext(format!("s = {s}")))
    }
}

/// Reference family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Plateau with exponential tail.
    Type1,
    /// Power-of-two ladder.
    Type2,
    /// Ladder with exponential tail.
    Type3,
    /// One-dimensional oscillator reference.
    Qho,
}

/// What a reference state is built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Context {
    /// Non-local channel `(species, l, alpha)`, `alpha` 1-based.
    Nonlocal { species: String, l: usize, alpha: usize },
    /// Local term `s` of a species.
    Local { species: String, s: i32 },
    /// Coulomb kernel `1/|k|`.
    Coulomb,
    /// Oscillator level.
    Qho { level: u32 },
}

/// A fully parameterized reference function in dimensionless momentum `x = k r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    /// Family.
    pub family: Family,
    /// Plateau (or ladder) half-width in dimensionless units.
    pub k_star: f64,
    /// Tail decay per unit of the 1-norm.
    pub gamma: f64,
    /// Tail prefactor.
    pub d: f64,
    /// Plateau height (Type I).
    pub plateau: f64,
    /// Infrared cutoff below which the ladder is zero (Types II and III).
    pub ladder_ir_cutoff: f64,
    /// Context.
    pub context: Context,
}

fn ladder(r: f64) -> f64 {
    2f64.powi(-(r.log2().floor() as i32))
}

impl ReferenceSpec {
    /// Type I reference from tabulated parameters and a plateau height.
    pub fn type1(tp: TailParams, plateau: f64, context: Context) -> Self {
        ReferenceSpec {
            family: Family::Type1,
            k_star: tp.k_star * k_star_unit(),
            gamma: tp.gamma / 3f64.sqrt(),
            d: tp.d,
            plateau,
            ladder_ir_cutoff: 0.0,
            context,
        }
    }

    /// Type II ladder with infrared cutoff `ir`.
    pub fn type2(ir: f64) -> Self {
        ReferenceSpec {
            family: Family::Type2,
            k_star: f64::INFINITY,
            gamma: 0.0,
            d: 0.0,
            plateau: 0.0,
            ladder_ir_cutoff: ir,
            context: Context::Coulomb,
        }
    }

    /// Type III ladder-plus-tail reference.
    pub fn type3(tp: TailParams, ir: f64, context: Context) -> Self {
        ReferenceSpec {
            family: Family::Type3,
            k_star: tp.k_star * k_star_unit(),
            gamma: tp.gamma / 3f64.sqrt(),
            d: tp.d,
            plateau: 0.0,
            ladder_ir_cutoff: ir,
            context,
        }
    }

    /// Evaluate at a Cartesian dimensionless momentum.
    pub fn eval(&self, x: &Vector3<f64>) -> Result<f64, QrsError> {
        let r = x.amax();
        let tail = || self.d * (-self.gamma * x.lp_norm(1)).exp();
        match self.family {
            Family::Type1 | Family::Qho => Ok(if r <= self.k_star { self.plateau } else { tail() }),
            Family::Type2 | Family::Type3 => {
                if r == 0.0 {
                    return Err(QrsError::ZeroExchange);
                }
                if r < self.ladder_ir_cutoff {
                    Ok(0.0)
                } else if r < self.k_star {
                    Ok(ladder(r))
                } else {
                    Ok(tail())
                }
            }
        }
    }
}

/// Result of a success-probability computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    /// `sum target^2 / sum reference^2`.
    pub p_succ: f64,
    /// Amplification rounds; `None` when below every threshold.
    pub rounds: Option<u32>,
    /// Thresholds used.
    pub thresholds: [f64; 3],
}

impl SuccessReport {
    fn new(p: f64) -> Self {
        SuccessReport { p_succ: p, rounds: rounds_for(p), thresholds: ROUND_THRESHOLDS }
    }
}

/// Success probability together with a domination diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// Success probability and rounds.
    pub success: SuccessReport,
    /// Basis points where the reference is below the target.
    pub violations: u64,
    /// Largest `target / reference` ratio over the basis.
    pub worst_ratio: f64,
}

const DOMINATION_SLACK: f64 = 1e-12;

/// Scan a box of integer indices, returning success probability and violations.
///
/// `pair` maps an index to `(|target|, reference)`.
pub fn scan_box<F>(range: [i64; 3], exclude_zero: bool, pair: F) -> ScanReport
where
    F: Fn([i64; 3]) -> (f64, f64) + Sync,
{
    let acc = box_fold_vec(range, exclude_zero, 3, |p, acc| {
        let (t, r) = pair(p);
        acc[0] += t * t;
        acc[1] += r * r;
        if t > r * (1.0 + DOMINATION_SLACK) {
            acc[2] += 1.0;
        }
    });
    let worst = max_over_box(range, exclude_zero, |p| {
        let (t, r) = pair(p);
        if r > 0.0 {
            t / r
        } else if t > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    });
    ScanReport {
        success: SuccessReport::new(if acc[1] > 0.0 { acc[0] / acc[1] } else { 0.0 }),
        violations: acc[2] as u64,
        worst_ratio: worst,
    }
}

/// Maximum of `f` over the integer box.
pub fn max_over_box<F>(range: [i64; 3], exclude_zero: bool, f: F) -> f64
where
    F: Fn([i64; 3]) -> f64 + Sync,
{
    (-range[0]..=range[0])
        .into_par_iter()
        .map(|p0| {
            let mut m = 0.0f64;
            for p1 in -range[1]..=range[1] {
                for p2 in -range[2]..=range[2] {
                    if exclude_zero && p0 == 0 && p1 == 0 && p2 == 0 {
                        continue;
                    }
                    m = m.max(f([p0, p1, p2]));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max)
}

/// Strict success probability: fails on the first (lexicographic) domination violation.
pub fn success_probability<F>(range: [i64; 3], exclude_zero: bool, pair: F) -> Result<SuccessReport, QrsError>
where
    F: Fn([i64; 3]) -> (f64, f64) + Sync,
{
    let scan = scan_box(range, exclude_zero, &pair);
    if scan.violations == 0 {
        return Ok(scan.success);
    }
    for p0 in -range[0]..=range[0] {
        for p1 in -range[1]..=range[1] {
            for p2 in -range[2]..=range[2] {
                let p = [p0, p1, p2];
                if exclude_zero && p == [0, 0, 0] {
                    continue;
                }
                let (t, r) = pair(p);
                if t > r * (1.0 + DOMINATION_SLACK) {
                    return Err(QrsError::Domination { p, target: t, reference: r });
                }
            }
        }
    }
    unreachable!("violation counted but not found")
}

fn cartesian(bmat: &Matrix3<f64>, p: [i64; 3], scale: f64) -> Vector3<f64> {
    bmat * Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64) * scale
}

/// Smallest nonzero `|k|` on the exchange set, scaled by `scale`.
fn infrared_cutoff(basis: &BasisSpec, scale: f64) -> f64 {
    let m = basis.reciprocal_matrix();
    let r = basis.exchange_range();
    -max_over_box(r, true, |p| -cartesian(&m, p, scale).norm())
}

/// Type II reference on the exchange set of `basis`, target `1/|k|`.
pub fn type2_scan(basis: &BasisSpec) -> Result<(ReferenceSpec, ScanReport), QrsError> {
    let m = basis.reciprocal_matrix();
    let spec = ReferenceSpec::type2(infrared_cutoff(basis, 1.0));
    let scan = scan_box(basis.exchange_range(), true, |p| {
        let k = cartesian(&m, p, 1.0);
        (1.0 / k.norm(), spec.eval(&k).unwrap_or(0.0))
    });
    Ok((spec, scan))
}

/// Type II success probability (strict).
pub fn type2_success(basis: &BasisSpec) -> Result<SuccessReport, QrsError> {
    let m = basis.reciprocal_matrix();
    let spec = ReferenceSpec::type2(infrared_cutoff(basis, 1.0));
    success_probability(basis.exchange_range(), true, |p| {
        let k = cartesian(&m, p, 1.0);
        (1.0 / k.norm(), spec.eval(&k).unwrap_or(0.0))
    })
}

/// Local kernel `e^{-x^2/4} x^s` (square root of the local summand).
pub fn local_target(s: i32, x: f64) -> f64 {
    (-x * x / 4.0).exp() * x.powi(s)
}

/// Type III reference for the `s = -1` local term of a species.
pub fn type3_reference(params: &PseudoIonParams, basis: &BasisSpec, qp: &QrsParams) -> ReferenceSpec {
    ReferenceSpec::type3(
        qp.coulomb_tail,
        infrared_cutoff(basis, params.r_loc),
        Context::Local { species: params.label.clone(), s: -1 },
    )
}

/// Type III scan on the exchange set of `basis`.
pub fn type3_scan(params: &PseudoIonParams, basis: &BasisSpec, qp: &QrsParams) -> ScanReport {
    let m = basis.reciprocal_matrix();
    let spec = type3_reference(params, basis, qp);
    scan_box(basis.exchange_range(), true, |p| {
        let x = cartesian(&m, p, params.r_loc);
        (local_target(-1, x.norm()), spec.eval(&x).unwrap_or(0.0))
    })
}

/// Type III success probability (strict).
pub fn type3_success(params: &PseudoIonParams, basis: &BasisSpec, qp: &QrsParams) -> Result<SuccessReport, QrsError> {
    let m = basis.reciprocal_matrix();
    let spec = type3_reference(params, basis, qp);
    success_probability(basis.exchange_range(), true, |p| {
        let x = cartesian(&m, p, params.r_loc);
        (local_target(-1, x.norm()), spec.eval(&x).unwrap_or(0.0))
    })
}

/// Type I reference for a local `s >= 0` term; the plateau is `(2s/e)^{s/2}` (1 for `s = 0`).
pub fn local_reference(params: &PseudoIonParams, s: i32, qp: &QrsParams) -> Result<ReferenceSpec, QrsError> {
    let tp = qp.local_params(s)?;
    let plateau = if s == 0 { 1.0 } else { (2.0 * s as f64 / std::f64::consts::E).powf(s as f64 / 2.0) };
    Ok(ReferenceSpec::type1(tp, plateau, Context::Local { species: params.label.clone(), s }))
}

fn local_pair(
    params: &PseudoIonParams,
    s: i32,
    basis: &BasisSpec,
    spec: &ReferenceSpec,
) -> impl Fn([i64; 3]) -> (f64, f64) + Sync {
    let m = basis.reciprocal_matrix();
    let r = params.r_loc;
    let spec = spec.clone();
    move |p| {
        let x = cartesian(&m, p, r);
        (local_target(s, x.norm()), spec.eval(&x).unwrap_or(0.0))
    }
}

/// Local `s >= 0` scan on the exchange set of `basis`.
pub fn local_scan(params: &PseudoIonParams, s: i32, basis: &BasisSpec, qp: &QrsParams) -> Result<ScanReport, QrsError> {
    let spec = local_reference(params, s, qp)?;
    Ok(scan_box(basis.exchange_range(), true, local_pair(params, s, basis, &spec)))
}

/// Local `s >= 0` success probability (strict).
pub fn local_success(
    params: &PseudoIonParams,
    s: i32,
    basis: &BasisSpec,
    qp: &QrsParams,
) -> Result<SuccessReport, QrsError> {
    let spec = local_reference(params, s, qp)?;
    success_probability(basis.exchange_range(), true, local_pair(params, s, basis, &spec))
}

struct NonlocalTarget {
    l: usize,
    r_l: f64,
    column: [f64; 3],
    bmat: Matrix3<f64>,
}

impl NonlocalTarget {
    fn new(params: &PseudoIonParams, l: usize, alpha: usize, basis: &BasisSpec) -> Result<Self, QrsError> {
        let blk = params
            .block(l)
            .ok_or_else(|| QrsError::MissingContext(format!("{} has no l = {l} block", params.label)))?;
        if !(1..=3).contains(&alpha) {
            return Err(QrsError::MissingContext(format!("alpha = {alpha}")));
        }
        let eig = nonlocal_eigen(blk);
        let a = alpha - 1;
        Ok(NonlocalTarget {
            l,
            r_l: blk.r_l,
            column: [eig.x[(0, a)], eig.x[(1, a)], eig.x[(2, a)]],
            bmat: basis.reciprocal_matrix(),
        })
    }

    fn point(&self, p: [i64; 3]) -> (Vector3<f64>, f64) {
        let x = cartesian(&self.bmat, p, self.r_l);
        let g = g_radial_all(self.l, x.norm());
        (x, (self.column[0] * g[0] + self.column[1] * g[1] + self.column[2] * g[2]).abs())
    }
}

/// Type I reference for a non-local channel; the plateau is the maximum of `|G_alpha|` over `basis`.
pub fn nonlocal_reference(
    params: &PseudoIonParams,
    l: usize,
    alpha: usize,
    basis: &BasisSpec,
    qp: &QrsParams,
) -> Result<ReferenceSpec, QrsError> {
    let t = NonlocalTarget::new(params, l, alpha, basis)?;
    let plateau = max_over_box(basis.range(), false, |p| t.point(p).1);
    Ok(ReferenceSpec::type1(
        qp.nonlocal_params(&params.label, l, alpha)?,
        plateau,
        Context::Nonlocal { species: params.label.clone(), l, alpha },
    ))
}

/// Non-local channel scan over the electron basis.
pub fn nonlocal_scan(
    params: &PseudoIonParams,
    l: usize,
    alpha: usize,
    basis: &BasisSpec,
    qp: &QrsParams,
) -> Result<ScanReport, QrsError> {
    let t = NonlocalTarget::new(params, l, alpha, basis)?;
    let spec = nonlocal_reference(params, l, alpha, basis, qp)?;
    Ok(scan_box(basis.range(), false, |p| {
        let (x, g) = t.point(p);
        (g, spec.eval(&x).unwrap_or(0.0))
    }))
}

/// Non-local channel success probability (strict).
pub fn nonlocal_success(
    params: &PseudoIonParams,
    l: usize,
    alpha: usize,
    basis: &BasisSpec,
    qp: &QrsParams,
) -> Result<SuccessReport, QrsError> {
    let t = NonlocalTarget::new(params, l, alpha, basis)?;
    let spec = nonlocal_reference(params, l, alpha, basis, qp)?;
    success_probability(basis.range(), false, |p| {
        let (x, g) = t.point(p);
        (g, spec.eval(&x).unwrap_or(0.0))
    })
}

/// Non-local channels `(l, alpha)` with nonzero eigenvalue, `alpha` 1-based.
pub fn nonlocal_channels(params: &PseudoIonParams) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for blk in &params.blocks {
        let eig = nonlocal_eigen(blk);
        for a in 0..3 {
            if eig.d[a].abs() > 0.0 {
                out.push((blk.l, a + 1));
            }
        }
    }
    out
}

/// Largest number of rounds over every non-local channel of the given species.
///
/// Channels below the 3-round threshold count as 3 rounds. Species without
/// non-local channels need 0 rounds.
pub fn nonlocal_rounds(species: &[&PseudoIonParams], basis: &BasisSpec, qp: &QrsParams) -> Result<u32, QrsError> {
    let mut r = 0;
    for p in species {
        for (l, a) in nonlocal_channels(p) {
            let s = nonlocal_scan(p, l, a, basis, qp)?;
            r = r.max(s.success.rounds.unwrap_or(3));
        }
    }
    Ok(r)
}

/// One sample of a cut along an index axis: `(x along the axis, |target|, reference)`.
pub type CutRow = (f64, f64, f64);

/// Cut through a non-local channel along index axis `axis` (0, 1 or 2).
pub fn nonlocal_cut(
    params: &PseudoIonParams,
    l: usize,
    alpha: usize,
    basis: &BasisSpec,
    qp: &QrsParams,
    axis: usize,
) -> Result<Vec<CutRow>, QrsError> {
    let t = NonlocalTarget::new(params, l, alpha, basis)?;
    let spec = nonlocal_reference(params, l, alpha, basis, qp)?;
    let r = basis.range()[axis.min(2)];
    Ok((-r..=r)
        .map(|i| {
            let mut p = [0i64; 3];
            p[axis.min(2)] = i;
            let (x, g) = t.point(p);
            (x.norm() * i.signum() as f64, g, spec.eval(&x).unwrap_or(0.0))
        })
        .collect())
}

/// How the `l = 0` oscillator constants are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QhoConstants {
    /// Value and derivative matching at the turning point for every level.
    Matched,
    /// Literal ground-state constants `gamma = -1/2`, `d = pi^{-1/4}`.
    Literal,
}

/// Grid for the one-dimensional oscillator scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QhoGrid {
    /// Number of grid points.
    pub points: usize,
    /// Extra span beyond the turning point.
    pub margin: f64,
    /// Highest supported level.
    pub max_level: u32,
}

impl Default for QhoGrid {
    fn default() -> Self {
        QhoGrid { points: 1 << 12, margin: 12.0, max_level: 64 }
    }
}

/// Normalized Hermite function `psi_l(q)` by the stable three-term recurrence.
pub fn hermite_function(l: u32, q: f64) -> f64 {
    let mut p0 = PI.powf(-0.25) * (-q * q / 2.0).exp();
    if l == 0 {
        return p0;
    }
    let mut p1 = 2f64.sqrt() * q * p0;
    for n in 2..=l {
        let nf = n as f64;
        let p2 = (2.0 / nf).sqrt() * q * p1 - ((nf - 1.0) / nf).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Derivative of the normalized Hermite function.
pub fn hermite_function_derivative(l: u32, q: f64) -> f64 {
    let down = if l > 0 { (l as f64 / 2.0).sqrt() * hermite_function(l - 1, q) } else { 0.0 };
    down - ((l as f64 + 1.0) / 2.0).sqrt() * hermite_function(l + 1, q)
}

/// Oscillator reference with its success probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhoReference {
    /// The reference function (`k_star` is the turning point `q*`).
    pub spec: ReferenceSpec,
    /// Success probability on the grid.
    pub success: SuccessReport,
}

/// Build the oscillator reference for `level` and evaluate it on the symmetric grid.
pub fn qho_reference(level: u32, constants: QhoConstants, grid: &QhoGrid) -> Result<QhoReference, QrsError> {
    if level > grid.max_level {
        return Err(QrsError::LevelTooHigh { level, max: grid.max_level });
    }
    let q_star = (2.0 * level as f64 + 1.0).sqrt();
    let phi_star = hermite_function(level, q_star);
    let (gamma, d) = match (constants, level) {
        (QhoConstants::Literal, 0) => (-0.5, PI.powf(-0.25)),
        _ => {
            let g = -hermite_function_derivative(level, q_star) / phi_star;
            (g, ((g * q_star).exp() * phi_star).abs())
        }
    };
    let span = q_star + grid.margin;
    let n = grid.points.max(2);
    let qs: Vec<f64> = (0..n).map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64).collect();
    let plateau =
        qs.iter().filter(|q| q.abs() <= q_star).map(|&q| hermite_function(level, q).abs()).fold(0.0, f64::max);
    let spec = ReferenceSpec {
        family: Family::Qho,
        k_star: q_star,
        gamma,
        d,
        plateau,
        ladder_ir_cutoff: 0.0,
        context: Context::Qho { level },
    };
    let (mut st, mut sr) = (0.0, 0.0);
    for &q in &qs {
        let t = hermite_function(level, q).abs();
        let r = qho_eval(&spec, q);
        if t > r * (1.0 + DOMINATION_SLACK) + 1e-300 {
            return Err(QrsError::Domination { p: [0, 0, 0], target: t, reference: r });
        }
        st += t * t;
        sr += r * r;
    }
    Ok(QhoReference { spec, success: SuccessReport::new(st / sr) })
}

/// Evaluate a one-dimensional oscillator reference at `q`.
pub fn qho_eval(spec: &ReferenceSpec, q: f64) -> f64 {
    if q.abs() <= spec.k_star {
        spec.plateau
    } else {
        spec.d * (-spec.gamma * q.abs()).exp()
    }
}
