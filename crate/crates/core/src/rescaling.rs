//! Block-encoding rescaling factors.
//!
//! Exact values are lattice sums over the electron basis `G`, the electron
//! exchange set `G0` and the truncated ion exchange set. Analytic upper
//! bounds replace each sum by a bounding-sphere integral. All sums use the
//! deterministic slab reduction of [`crate::cell_basis::box_fold_vec`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_basis::{
    basis_from_qubits, box_fold_vec, ksq, max_ksq_on_box, BasisError, BasisRole, BasisSpec, SimulationCell,
    BOHR_ANGSTROM,
};
use crate::pseudopotential::{c_tilde, g_radial_all, local_coeffs, nonlocal_eigen, PseudoIonParams};

/// Errors raised while computing rescaling factors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RescalingError {
    /// The exchange set has no points.
    #[error("empty momentum-exchange set")]
    EmptyExchange,
    /// The C-tilde quadrature did not reach its tolerance.
    #[error("quadrature for {label} (l={l}) did not converge: error estimate {error:e}")]
    Quadrature { label: String, l: usize, error: f64 },
    /// A basis could not be built.
    #[error(transparent)]
    Basis(#[from] BasisError),
}

/// Absolute tolerance accepted for C-tilde integrals.
pub const C_TILDE_TOL: f64 = 1e-8;

/// One pseudoion species of an instance with its multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesCount {
    /// HGH parameters.
    pub params: PseudoIonParams,
    /// Number of pseudoions of this species.
    pub count: u64,
}

/// Everything the lattice sums need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingInput {
    /// Cell volume in cubic Bohr.
    pub omega: f64,
    /// Electron basis `G`.
    pub electron: BasisSpec,
    /// Ion basis `G-bar`.
    pub ion: BasisSpec,
    /// Truncated ion exchange basis.
    pub trunc: BasisSpec,
    /// Pseudoion census.
    pub census: Vec<SpeciesCount>,
}

impl RescalingInput {
    /// Valence electrons `sum count * Z_pi`.
    pub fn eta_val(&self) -> u64 {
        self.census.iter().map(|s| s.count * s.params.z_pi as u64).sum()
    }

    /// Number of pseudoions.
    pub fn eta_ion(&self) -> u64 {
        self.census.iter().map(|s| s.count).sum()
    }

    /// `sum_{I != J} Z_I Z_J = (sum Z)^2 - sum Z^2`.
    pub fn ion_pair_charge(&self) -> f64 {
        let sum: f64 = self.census.iter().map(|s| s.count as f64 * s.params.z_pi as f64).sum();
        let sq: f64 = self.census.iter().map(|s| s.count as f64 * (s.params.z_pi as f64).powi(2)).sum();
        sum * sum - sq
    }

    fn species(&self) -> Vec<&PseudoIonParams> {
        self.census.iter().map(|s| &s.params).collect()
    }
}

/// The six term values of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermValues {
    /// Electron kinetic energy.
    pub t_el: f64,
    /// Ion kinetic energy.
    pub t_ion: f64,
    /// Electron-electron Coulomb.
    pub v_el: f64,
    /// Ion-ion Coulomb.
    pub v_ion: f64,
    /// Local pseudopotential.
    pub loc: f64,
    /// Non-local pseudopotential.
    pub nl: f64,
}

impl TermValues {
    /// Sum of the six terms.
    pub fn total(&self) -> f64 {
        self.t_el + self.t_ion + self.v_el + self.v_ion + self.loc + self.nl
    }

    /// `(name, value)` pairs in report order, total last.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("t_el", self.t_el),
            ("t_ion", self.t_ion),
            ("v_el", self.v_el),
            ("v_ion", self.v_ion),
            ("loc", self.loc),
            ("nl", self.nl),
            ("total", self.total()),
        ]
    }
}

/// Exact values, bounds and per-pair values for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingReport {
    /// Exact lattice-sum values.
    pub exact: TermValues,
    /// Analytic upper bounds.
    pub bounds: TermValues,
    /// Per electron-ion pair local value per species.
    pub per_ion_loc: BTreeMap<String, f64>,
    /// Per electron-ion pair non-local value per species.
    pub per_ion_nl: BTreeMap<String, f64>,
    /// Bound on the per-pair local value.
    pub per_ion_loc_bound: BTreeMap<String, f64>,
    /// Bound on the per-pair non-local value.
    pub per_ion_nl_bound: BTreeMap<String, f64>,
}

impl RescalingReport {
    /// Bound-to-exact ratio for every entry (`t_el, t_ion, v_el, v_ion, loc, nl, total`).
    pub fn ratios(&self) -> [(&'static str, f64); 7] {
        let e = self.exact.entries();
        let b = self.bounds.entries();
        std::array::from_fn(|i| (e[i].0, if e[i].1 == 0.0 { 1.0 } else { b[i].1 / e[i].1 }))
    }
}

/// `lambda_T_el = eta_val max|k|^2/2` and `lambda_T_ion = (sum 1/M_I) max|K|^2/2`.
pub fn lambda_kinetic(input: &RescalingInput) -> (f64, f64) {
    let t_el = input.eta_val() as f64 * input.electron.max_ksq() / 2.0;
    let inv_mass: f64 = input.census.iter().map(|s| s.count as f64 / s.params.mass).sum();
    (t_el, inv_mass * input.ion.max_ksq() / 2.0)
}

/// `sum_{q in G0} 1/|k_q|^2` over the exchange set of `basis`.
pub fn inverse_ksq_sum(basis: &BasisSpec) -> Result<f64, RescalingError> {
    if basis.exchange_size() == 0 {
        return Err(RescalingError::EmptyExchange);
    }
    let g = basis.gram();
    Ok(box_fold_vec(basis.exchange_range(), true, 1, |p, acc| acc[0] += 1.0 / ksq(p, &g))[0])
}

/// Exact Coulomb factors `(lambda_V_el, lambda_V_ion)`.
pub fn lambda_coulomb(input: &RescalingInput) -> Result<(f64, f64), RescalingError> {
    let ev = input.eta_val() as f64;
    let v_el =
        if ev > 1.0 { 2.0 * PI / input.omega * ev * (ev - 1.0) * inverse_ksq_sum(&input.electron)? } else { 0.0 };
    let v_ion = 2.0 * PI / input.omega * input.ion_pair_charge() * inverse_ksq_sum(&input.trunc)?;
    Ok((v_el, v_ion))
}

/// One pass over the electron exchange set: `[sum 1/|k|^2, local sums per species...]`.
fn exchange_pass(electron: &BasisSpec, omega: f64, species: &[&PseudoIonParams]) -> Vec<f64> {
    let g = electron.gram();
    let coeffs: Vec<([f64; 5], f64)> =
        species.iter().map(|p| (local_coeffs(p).c.map(f64::abs), p.r_loc * p.r_loc)).collect();
    let mut sums = box_fold_vec(electron.exchange_range(), true, 1 + species.len(), |p, acc| {
        let k2 = ksq(p, &g);
        acc[0] += 1.0 / k2;
        for (i, (c, r2)) in coeffs.iter().enumerate() {
            let y = k2 * r2;
            let poly = c[0] / y + c[1] + y * (c[2] + y * (c[3] + y * c[4]));
            acc[i + 1] += (-y / 2.0).exp() * poly;
        }
    });
    for (i, p) in species.iter().enumerate() {
        sums[i + 1] *= 4.0 * PI * p.r_loc.powi(3) / omega * (PI / 2.0).sqrt();
    }
    sums
}

/// Per electron-ion pair local values on the exchange set of `electron`.
pub fn per_pair_local(species: &[&PseudoIonParams], electron: &BasisSpec, omega: f64) -> Vec<f64> {
    exchange_pass(electron, omega, species).split_off(1)
}

struct Channel {
    species: usize,
    block: usize,
    column: [f64; 3],
    weight: f64,
}

/// Per electron-ion pair non-local values, summing `|G_alpha|^2` over the basis `electron`.
pub fn per_pair_nonlocal(species: &[&PseudoIonParams], electron: &BasisSpec, omega: f64) -> Vec<f64> {
    let mut blocks: Vec<(usize, f64)> = Vec::new();
    let mut channels: Vec<Channel> = Vec::new();
    for (si, p) in species.iter().enumerate() {
        for blk in &p.blocks {
            let eig = nonlocal_eigen(blk);
            let bi = blocks.len();
            blocks.push((blk.l, blk.r_l));
            for a in 0..3 {
                if eig.d[a].abs() > 0.0 {
                    channels.push(Channel {
                        species: si,
                        block: bi,
                        column: [eig.x[(0, a)], eig.x[(1, a)], eig.x[(2, a)]],
                        weight: 4.0 * PI / omega * blk.r_l.powi(3) * (2 * blk.l + 1) as f64 * eig.d[a].abs(),
                    });
                }
            }
        }
    }
    if channels.is_empty() {
        return vec![0.0; species.len()];
    }
    let g = electron.gram();
    let sums = box_fold_vec(electron.range(), false, channels.len(), |p, acc| {
        let k = ksq(p, &g).sqrt();
        let gs: Vec<[f64; 3]> = blocks.iter().map(|&(l, r)| g_radial_all(l, k * r)).collect();
        for (ci, ch) in channels.iter().enumerate() {
            let v = &gs[ch.block];
            let ga = ch.column[0] * v[0] + ch.column[1] * v[1] + ch.column[2] * v[2];
            acc[ci] += ga * ga;
        }
    });
    let mut out = vec![0.0; species.len()];
    for (ch, s) in channels.iter().zip(sums) {
        out[ch.species] += ch.weight * s;
    }
    out
}

/// Local per-pair bound `|c_-1| + |c_0| + 3|c_1| + 15|c_2| + 105|c_3|`.
pub fn per_pair_local_bound(params: &PseudoIonParams) -> f64 {
    let c = local_coeffs(params).c;
    c[0].abs() + c[1].abs() + 3.0 * c[2].abs() + 15.0 * c[3].abs() + 105.0 * c[4].abs()
}

/// Non-local per-pair bound `sum (2l+1)|D_alpha| C~_alpha`.
pub fn per_pair_nonlocal_bound(params: &PseudoIonParams) -> Result<f64, RescalingError> {
    let mut total = 0.0;
    for blk in &params.blocks {
        let eig = nonlocal_eigen(blk);
        for a in 0..3 {
            if eig.d[a].abs() == 0.0 {
                continue;
            }
            let q = c_tilde(&eig, a);
            if q.error > C_TILDE_TOL {
                return Err(RescalingError::Quadrature { label: params.label.clone(), l: blk.l, error: q.error });
            }
            total += (2 * blk.l + 1) as f64 * eig.d[a].abs() * q.value;
        }
    }
    Ok(total)
}

/// Exact local factor `eta_val sum_I lambda~_loc^I` and the per-pair map.
pub fn lambda_local(input: &RescalingInput) -> (f64, BTreeMap<String, f64>) {
    let per = per_pair_local(&input.species(), &input.electron, input.omega);
    aggregate(input, &per)
}

/// Exact non-local factor and the per-pair map.
pub fn lambda_nonlocal(input: &RescalingInput) -> (f64, BTreeMap<String, f64>) {
    let per = per_pair_nonlocal(&input.species(), &input.electron, input.omega);
    aggregate(input, &per)
}

fn aggregate(input: &RescalingInput, per: &[f64]) -> (f64, BTreeMap<String, f64>) {
    let ev = input.eta_val() as f64;
    let total = input.census.iter().zip(per).map(|(s, v)| ev * s.count as f64 * v).sum();
    let map = input.census.iter().zip(per).map(|(s, &v)| (s.params.label.clone(), v)).collect();
    (total, map)
}

/// Analytic bounds for every term.
pub fn lambda_bounds(input: &RescalingInput) -> Result<RescalingReportBounds, RescalingError> {
    let (t_el, t_ion) = lambda_kinetic(input);
    let ev = input.eta_val() as f64;
    let q = max_ksq_on_box(input.electron.exchange_range(), &input.electron.gram()).sqrt();
    let q_trunc = max_ksq_on_box(input.trunc.exchange_range(), &input.trunc.gram()).sqrt();
    let v_el = ev * (ev - 1.0).max(0.0) * q / PI;
    let v_ion = input.ion_pair_charge() * q_trunc / PI;
    let mut per_loc = BTreeMap::new();
    let mut per_nl = BTreeMap::new();
    let (mut loc, mut nl) = (0.0, 0.0);
    for s in &input.census {
        let lb = per_pair_local_bound(&s.params);
        let nb = per_pair_nonlocal_bound(&s.params)?;
        loc += ev * s.count as f64 * lb;
        nl += ev * s.count as f64 * nb;
        per_loc.insert(s.params.label.clone(), lb);
        per_nl.insert(s.params.label.clone(), nb);
    }
    Ok(RescalingReportBounds {
        values: TermValues { t_el, t_ion, v_el, v_ion, loc, nl },
        per_ion_loc: per_loc,
        per_ion_nl: per_nl,
    })
}

/// Bound entries together with their per-pair maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescalingReportBounds {
    /// Term bounds.
    pub values: TermValues,
    /// Per-pair local bounds.
    pub per_ion_loc: BTreeMap<String, f64>,
    /// Per-pair non-local bounds.
    pub per_ion_nl: BTreeMap<String, f64>,
}

/// Full report: one pass over `G0` (Coulomb and local) and one over `G` (non-local).
pub fn rescaling_report(input: &RescalingInput) -> Result<RescalingReport, RescalingError> {
    let species = input.species();
    let ev = input.eta_val() as f64;
    let (t_el, t_ion) = lambda_kinetic(input);
    let pass = exchange_pass(&input.electron, input.omega, &species);
    let v_el = if ev > 1.0 { 2.0 * PI / input.omega * ev * (ev - 1.0) * pass[0] } else { 0.0 };
    let v_ion = 2.0 * PI / input.omega * input.ion_pair_charge() * inverse_ksq_sum(&input.trunc)?;
    let (loc, per_ion_loc) = aggregate(input, &pass[1..]);
    let (nl, per_ion_nl) = aggregate(input, &per_pair_nonlocal(&species, &input.electron, input.omega));
    let bounds = lambda_bounds(input)?;
    Ok(RescalingReport {
        exact: TermValues { t_el, t_ion, v_el, v_ion, loc, nl },
        bounds: bounds.values,
        per_ion_loc,
        per_ion_nl,
        per_ion_loc_bound: bounds.per_ion_loc,
        per_ion_nl_bound: bounds.per_ion_nl,
    })
}

/// Cell on which the per-pair reference values are evaluated: a 10 x 10 x 12 Angstrom cuboid.
pub fn per_pair_reference_cell() -> SimulationCell {
    SimulationCell::cuboid(10.0 / BOHR_ANGSTROM, 10.0 / BOHR_ANGSTROM, 12.0 / BOHR_ANGSTROM)
}

/// Electron basis for the per-pair reference values, `n = (6, 6, 7)` on [`per_pair_reference_cell`].
pub fn per_pair_reference_basis() -> BasisSpec {
    basis_from_qubits(&per_pair_reference_cell(), [6, 6, 7], BasisRole::Electron).expect("reference cell is valid")
}

/// Per-pair `(loc, loc bound, nl, nl bound)` for each species on the reference basis.
pub fn per_pair_table(species: &[&PseudoIonParams]) -> Result<Vec<PerPairRow>, RescalingError> {
    let basis = per_pair_reference_basis();
    let omega = per_pair_reference_cell().volume();
    let loc = per_pair_local(species, &basis, omega);
    let nl = per_pair_nonlocal(species, &basis, omega);
    species
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(PerPairRow {
                label: p.label.clone(),
                loc: loc[i],
                loc_bound: per_pair_local_bound(p),
                nl: nl[i],
                nl_bound: per_pair_nonlocal_bound(p)?,
            })
        })
        .collect()
}

/// One row of the per-pair table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPairRow {
    /// Species label.
    pub label: String,
    /// Exact local value.
    pub loc: f64,
    /// Local bound.
    pub loc_bound: f64,
    /// Exact non-local value.
    pub nl: f64,
    /// Non-local bound.
    pub nl_bound: f64,
}
