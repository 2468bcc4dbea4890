//! Supercells, reciprocal lattices and plane-wave basis bookkeeping.
//!
//! Momenta are indexed by integer triples `p` with `k_p = sum_a p_a b_a`.
//! Signed-representation bases hold `p_a` in `[-p_max_a, p_max_a]` with
//! `p_max_a = 2^{n_a - 1} - 1`, so each axis needs `n_a` qubits.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bohr radius in Angstrom.
pub const BOHR_ANGSTROM: f64 = 0.529177210903;

/// Errors raised while building cells and bases.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    /// The lattice vectors span no volume.
    #[error("degenerate cell: volume {0:e}")]
    DegenerateCell(f64),
    /// The cutoff is below the smallest reciprocal spacing.
    #[error("cutoff {cutoff} is below the smallest reciprocal spacing {spacing}")]
    EmptyBasis { cutoff: f64, spacing: f64 },
    /// A cutoff is not positive.
    #[error("cutoff targets must be positive")]
    NonPositiveCutoff,
    /// An unknown shape tag was supplied.
    #[error("unknown cell shape `{0}`")]
    UnknownShape(String),
}

/// Geometric family of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeTag {
    /// Orthogonal edges.
    Cuboid,
    /// Two in-plane edges at 120 degrees and a perpendicular third edge.
    #[serde(rename = "rhombohedron-120")]
    Rhombohedron120,
    /// Any other non-degenerate cell.
    General,
}

impl std::str::FromStr for ShapeTag {
    type Err = BasisError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cuboid" => Ok(ShapeTag::Cuboid),
            "rhombohedron-120" => Ok(ShapeTag::Rhombohedron120),
            "general" => Ok(ShapeTag::General),
            other => Err(BasisError::UnknownShape(other.to_string())),
        }
    }
}

/// A periodic simulation cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    /// Lattice vectors `a_1..a_3` in Bohr.
    pub lattice: [Vector3<f64>; 3],
    /// Geometric family.
    pub shape: ShapeTag,
}

impl SimulationCell {
    /// Orthogonal cell with the given edge lengths (Bohr).
    pub fn cuboid(a: f64, b: f64, c: f64) -> Self {
        SimulationCell {
            lattice: [Vector3::new(a, 0.0, 0.0), Vector3::new(0.0, b, 0.0), Vector3::new(0.0, 0.0, c)],
            shape: ShapeTag::Cuboid,
        }
    }

    /// Hexagonal-plane cell: `a_1 = (a,0,0)`, `a_2 = (-b/2, b sqrt(3)/2, 0)`, `a_3 = (0,0,c)`.
    pub fn rhombohedron_120(a: f64, b: f64, c: f64) -> Self {
        SimulationCell {
            lattice: [
                Vector3::new(a, 0.0, 0.0),
                Vector3::new(-b / 2.0, b * 3f64.sqrt() / 2.0, 0.0),
                Vector3::new(0.0, 0.0, c),
            ],
            shape: ShapeTag::Rhombohedron120,
        }
    }

    /// Build a cell of the given family from three edge lengths.
    pub fn from_lengths(shape: ShapeTag, l: [f64; 3]) -> Self {
        match shape {
            ShapeTag::Rhombohedron120 => Self::rhombohedron_120(l[0], l[1], l[2]),
            _ => {
                let mut c = Self::cuboid(l[0], l[1], l[2]);
                c.shape = shape;
                c
            }
        }
    }

    /// Cell volume `|a_1 . (a_2 x a_3)|`.
    pub fn volume(&self) -> f64 {
        self.lattice[0].dot(&self.lattice[1].cross(&self.lattice[2])).abs()
    }

    /// Multiply every lattice vector by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        SimulationCell { lattice: self.lattice.map(|v| v * s), shape: self.shape }
    }
}

/// Reciprocal vectors `b_a` satisfying `b_a . a_b = 2 pi delta_ab`.
pub fn reciprocal_vectors(cell: &SimulationCell) -> Result<[Vector3<f64>; 3], BasisError> {
    let [a1, a2, a3] = &cell.lattice;
    let signed = a1.dot(&a2.cross(a3));
    let scale = a1.norm() * a2.norm() * a3.norm();
    if !(signed.abs() > 1e-12 * scale) {
        return Err(BasisError::DegenerateCell(signed));
    }
    let f = 2.0 * PI / signed;
    Ok([a2.cross(a3) * f, a3.cross(a1) * f, a1.cross(a2) * f])
}

/// Role of a basis in the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisRole {
    /// Electron momentum basis `G`.
    Electron,
    /// Pseudoion momentum basis `G-bar`.
    Ion,
    /// Truncated ion-ion exchange range.
    IonTrunc,
}

/// A discretized plane-wave basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    /// Largest index per axis.
    pub p_max: [u32; 3],
    /// Qubits per axis (signed representation); for `IonTrunc` the width needed for `p_max`.
    pub n: [u32; 3],
    /// Realized cutoff per axis, `p_max_a |b_a|`.
    pub true_cutoffs: [f64; 3],
    /// Reciprocal vectors.
    pub reciprocal: [Vector3<f64>; 3],
    /// Role of the basis.
    pub role: BasisRole,
}

fn qubits_for(p: f64) -> u32 {
    ((p + 1.0).log2().ceil() as u32) + 1
}

/// Default scale factor for the ion-ion truncation rule.
pub const DEFAULT_TRUNC_KAPPA: f64 = 1.5;

/// Build a basis from per-axis cutoff targets.
///
/// Electron and ion roles round up to a full signed register; the
/// `IonTrunc` role takes `p_max = round(kappa * cutoff / |b_a|)`.
pub fn build_basis(
    cell: &SimulationCell,
    cutoff: [f64; 3],
    role: BasisRole,
    kappa: f64,
) -> Result<BasisSpec, BasisError> {
    if cutoff.iter().any(|&c| !(c > 0.0)) || !(kappa > 0.0) {
        return Err(BasisError::NonPositiveCutoff);
    }
    let b = reciprocal_vectors(cell)?;
    let spacing: [f64; 3] = std::array::from_fn(|a| b[a].norm());
    let min_spacing = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_cut = cutoff.iter().cloned().fold(0.0, f64::max);
    if max_cut < min_spacing {
        return Err(BasisError::EmptyBasis { cutoff: max_cut, spacing: min_spacing });
    }
    let (p_max, n): ([u32; 3], [u32; 3]) = match role {
        BasisRole::Electron | BasisRole::Ion => {
            let n: [u32; 3] = std::array::from_fn(|a| qubits_for(cutoff[a] / spacing[a]));
            (n.map(|k| (1u32 << (k - 1)) - 1), n)
        }
        BasisRole::IonTrunc => {
            let p: [u32; 3] = std::array::from_fn(|a| (kappa * cutoff[a] / spacing[a]).round() as u32);
            (p, p.map(|x| qubits_for(x as f64)))
        }
    };
    Ok(BasisSpec { p_max, n, true_cutoffs: std::array::from_fn(|a| p_max[a] as f64 * spacing[a]), reciprocal: b, role })
}

/// Build an `IonTrunc` basis with explicit per-axis `p_max`.
pub fn trunc_basis_explicit(cell: &SimulationCell, p_max: [u32; 3]) -> Result<BasisSpec, BasisError> {
    let b = reciprocal_vectors(cell)?;
    Ok(BasisSpec {
        p_max,
        n: p_max.map(|x| qubits_for(x as f64)),
        true_cutoffs: std::array::from_fn(|a| p_max[a] as f64 * b[a].norm()),
        reciprocal: b,
        role: BasisRole::IonTrunc,
    })
}

/// Build a signed-representation basis with explicit per-axis qubit widths.
pub fn basis_from_qubits(cell: &SimulationCell, n: [u32; 3], role: BasisRole) -> Result<BasisSpec, BasisError> {
    if n.iter().any(|&k| !(2..=31).contains(&k)) {
        return Err(BasisError::NonPositiveCutoff);
    }
    let b = reciprocal_vectors(cell)?;
    let p_max = n.map(|k| (1u32 << (k - 1)) - 1);
    Ok(BasisSpec {
        p_max,
        n,
        true_cutoffs: std::array::from_fn(|a| p_max[a] as f64 * b[a].norm()),
        reciprocal: b,
        role,
    })
}

impl BasisSpec {
    /// Gramian `b_a . b_b` of the reciprocal vectors.
    pub fn gram(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.reciprocal[i].dot(&self.reciprocal[j]))
    }

    /// Matrix with the reciprocal vectors as columns.
    pub fn reciprocal_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.reciprocal)
    }

    /// Number of basis points, `prod (2 p_max + 1)`.
    pub fn size(&self) -> u64 {
        self.p_max.iter().map(|&p| 2 * p as u64 + 1).product()
    }

    /// Total qubits `sum n_a`.
    pub fn total_qubits(&self) -> u32 {
        self.n.iter().sum()
    }

    /// Index range of the momentum-exchange set, `2 p_max` per axis.
    pub fn exchange_range(&self) -> [i64; 3] {
        self.p_max.map(|p| 2 * p as i64)
    }

    /// Index range of the basis itself.
    pub fn range(&self) -> [i64; 3] {
        self.p_max.map(|p| p as i64)
    }

    /// Number of exchange vectors excluding the zero vector.
    pub fn exchange_size(&self) -> u64 {
        self.p_max.iter().map(|&p| 4 * p as u64 + 1).product::<u64>() - 1
    }

    /// Largest `|k_p|^2` over the basis; attained at a corner since `|k|^2` is convex.
    pub fn max_ksq(&self) -> f64 {
        max_ksq_on_box(self.range(), &self.gram())
    }

    /// Cartesian momentum of index `p`.
    pub fn k_vector(&self, p: [i64; 3]) -> Vector3<f64> {
        self.reciprocal[0] * p[0] as f64 + self.reciprocal[1] * p[1] as f64 + self.reciprocal[2] * p[2] as f64
    }
}

/// `|G| = prod (2^{n_a} - 1)` for signed-representation bases.
pub fn basis_size(spec: &BasisSpec) -> u64 {
    spec.n.iter().map(|&k| (1u64 << k) - 1).product()
}

/// Quadratic form `|k_p|^2 = sum p_a p_b (b_a . b_b)`.
pub fn ksq(p: [i64; 3], gram: &Matrix3<f64>) -> f64 {
    let v = Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64);
    (v.transpose() * gram * v)[(0, 0)]
}

/// Largest `|k|^2` on the box `[-r, r]^3`, evaluated on its eight corners.
pub fn max_ksq_on_box(r: [i64; 3], gram: &Matrix3<f64>) -> f64 {
    let mut best = 0.0f64;
    for s0 in [-1, 1] {
        for s1 in [-1, 1] {
            for s2 in [-1, 1] {
                best = best.max(ksq([s0 * r[0], s1 * r[1], s2 * r[2]], gram));
            }
        }
    }
    best
}

/// Total system qubits `eta_val sum n + eta_ion sum n-bar`.
pub fn system_qubits(eta_val: u64, eta_ion: u64, n: [u32; 3], nbar: [u32; 3]) -> u64 {
    eta_val * n.iter().map(|&x| x as u64).sum::<u64>() + eta_ion * nbar.iter().map(|&x| x as u64).sum::<u64>()
}

/// Deterministic parallel fold over the integer box `[-r, r]^3`.
///
/// The closure receives the index triple and returns `N` partial values.
/// Slabs of constant first index are summed sequentially in lexicographic
/// order and reduced in slab order, so results do not depend on thread count.
pub fn box_fold<const N: usize, F>(r: [i64; 3], exclude_zero: bool, f: F) -> [f64; N]
where
    F: Fn([i64; 3]) -> [f64; N] + Sync,
{
    let slabs: Vec<[f64; N]> = (-r[0]..=r[0])
        .into_par_iter()
        .map(|p0| {
            let mut acc = [0.0; N];
            for p1 in -r[1]..=r[1] {
                for p2 in -r[2]..=r[2] {
                    if exclude_zero && p0 == 0 && p1 == 0 && p2 == 0 {
                        continue;
                    }
                    let v = f([p0, p1, p2]);
                    for k in 0..N {
                        acc[k] += v[k];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; N];
    for s in slabs {
        for k in 0..N {
            total[k] += s[k];
        }
    }
    total
}

/// Runtime-width variant of [`box_fold`].
///
/// The closure adds its contribution for index `p` into the accumulator
/// slice of length `width`. Reduction order matches [`box_fold`].
pub fn box_fold_vec<F>(r: [i64; 3], exclude_zero: bool, width: usize, f: F) -> Vec<f64>
where
    F: Fn([i64; 3], &mut [f64]) + Sync,
{
    let slabs: Vec<Vec<f64>> = (-r[0]..=r[0])
        .into_par_iter()
        .map(|p0| {
            let mut acc = vec![0.0; width];
            for p1 in -r[1]..=r[1] {
                for p2 in -r[2]..=r[2] {
                    if exclude_zero && p0 == 0 && p1 == 0 && p2 == 0 {
                        continue;
                    }
                    f([p0, p1, p2], &mut acc);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; width];
    for s in slabs {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    total
}

/// Precomputed helper for evaluating `|k|^2` and Cartesian `k` quickly over a box.
#[derive(Debug, Clone)]
pub struct KGrid {
    /// Reciprocal vectors as columns.
    pub bmat: Matrix3<f64>,
}

impl KGrid {
    /// Helper for a given basis.
    pub fn new(spec: &BasisSpec) -> Self {
        KGrid { bmat: spec.reciprocal_matrix() }
    }

    /// Cartesian momentum for index `p`.
    #[inline]
    pub fn k(&self, p: [i64; 3]) -> Vector3<f64> {
        self.bmat * Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn nh3bf3() -> SimulationCell {
        SimulationCell::cuboid(18.90, 18.90, 28.35)
    }

    #[test]
    fn cubic_reciprocal() {
        let a = 7.3;
        let b = reciprocal_vectors(&SimulationCell::cuboid(a, a, a)).unwrap();
        for (i, v) in b.iter().enumerate() {
            let mut e = Vector3::zeros();
            e[i] = 2.0 * PI / a;
            assert!((v - e).norm() < 1e-14);
        }
    }

    #[test]
    fn rhombohedral_duality() {
        let cell = SimulationCell::rhombohedron_120(14.18, 14.18, 37.80);
        let b = reciprocal_vectors(&cell).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 2.0 * PI } else { 0.0 };
                assert!((b[i].dot(&cell.lattice[j]) - expect).abs() < 1e-12);
            }
        }
        let vol_b = b[0].dot(&b[1].cross(&b[2])).abs();
        assert_relative_eq!(vol_b, (2.0 * PI).powi(3) / cell.volume(), max_relative = 1e-12);
    }

    #[test]
    fn degenerate_cell_rejected() {
        let mut c = SimulationCell::cuboid(1.0, 1.0, 1.0);
        c.lattice[2] = c.lattice[0] + c.lattice[1];
        assert!(matches!(reciprocal_vectors(&c), Err(BasisError::DegenerateCell(_))));
    }

    #[test]
    fn nh3bf3_bases() {
        let e = build_basis(&nh3bf3(), [10.0; 3], BasisRole::Electron, 1.0).unwrap();
        assert_eq!(e.n, [6, 6, 7]);
        assert_eq!(basis_size(&e), 504_063);
        assert_eq!(e.size(), 504_063);
        for (got, want) in e.true_cutoffs.iter().zip([10.31, 10.31, 13.96]) {
            assert!((got - want).abs() < 0.01, "{got}");
        }
        let i = build_basis(&nh3bf3(), [30.0; 3], BasisRole::Ion, 1.0).unwrap();
        assert_eq!(i.n, [8, 8, 9]);
        assert_eq!(basis_size(&i), 33_227_775);
        for (got, want) in i.true_cutoffs.iter().zip([42.22, 42.22, 56.52]) {
            assert!((got - want).abs() < 0.01, "{got}");
        }
        let t = build_basis(&nh3bf3(), [1.0; 3], BasisRole::IonTrunc, DEFAULT_TRUNC_KAPPA).unwrap();
        for (got, want) in t.true_cutoffs.iter().zip([1.66, 1.66, 1.55]) {
            assert!((got - want).abs() < 0.01, "{got}");
        }
    }

    #[test]
    fn unit_spacing_basis() {
        let cell = SimulationCell::cuboid(2.0 * PI, 2.0 * PI, 2.0 * PI);
        let b = build_basis(&cell, [3.0; 3], BasisRole::Electron, 1.0).unwrap();
        assert_eq!(b.n, [3, 3, 3]);
        assert_eq!(b.p_max, [3, 3, 3]);
        for c in b.true_cutoffs {
            assert_relative_eq!(c, 3.0, epsilon = 1e-12);
        }
        assert!(matches!(build_basis(&cell, [0.5; 3], BasisRole::Electron, 1.0), Err(BasisError::EmptyBasis { .. })));
    }

    #[test]
    fn basis_size_examples() {
        let mut b = build_basis(&nh3bf3(), [10.0; 3], BasisRole::Electron, 1.0).unwrap();
        b.n = [8, 8, 9];
        assert_eq!(basis_size(&b), 33_227_775);
        b.n = [9, 9, 9];
        assert_eq!(basis_size(&b), 133_432_831);
    }

    #[test]
    fn ksq_examples() {
        let a = 3.0;
        let b = build_basis(&SimulationCell::cuboid(a, a, a), [10.0; 3], BasisRole::Electron, 1.0).unwrap();
        assert_eq!(ksq([0, 0, 0], &b.gram()), 0.0);
        assert_relative_eq!(ksq([1, 0, 0], &b.gram()), (2.0 * PI / a).powi(2), max_relative = 1e-14);
    }

    #[test]
    fn ksq_matches_cartesian_expansion() {
        let cell = SimulationCell::rhombohedron_120(14.18, 14.18, 37.80);
        let b = build_basis(&cell, [10.0; 3], BasisRole::Electron, 1.0).unwrap();
        let g = b.gram();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = [rng.gen_range(-60..=60), rng.gen_range(-60..=60), rng.gen_range(-60..=60)];
            let mut cart = [0.0f64; 3];
            for a in 0..3 {
                for x in 0..3 {
                    cart[x] += p[a] as f64 * b.reciprocal[a][x];
                }
            }
            let oracle: f64 = cart.iter().map(|c| c * c).sum();
            let got = ksq(p, &g);
            assert!((got - oracle).abs() <= 1e-12 * oracle.max(1e-300));
        }
    }

    #[test]
    fn corner_max_matches_scan() {
        let cell = SimulationCell::rhombohedron_120(14.18, 14.18, 37.80);
        let b = build_basis(&cell, [4.0; 3], BasisRole::Electron, 1.0).unwrap();
        let g = b.gram();
        let r = b.range();
        let mut best = 0.0f64;
        for i in -r[0]..=r[0] {
            for j in -r[1]..=r[1] {
                for k in -r[2]..=r[2] {
                    best = best.max(ksq([i, j, k], &g));
                }
            }
        }
        assert_relative_eq!(b.max_ksq(), best, max_relative = 1e-14);
    }

    #[test]
    fn system_qubit_examples() {
        assert_eq!(system_qubits(32, 8, [6, 6, 7], [8, 8, 9]), 808);
        assert_eq!(system_qubits(158, 95, [7, 6, 6], [9, 8, 8]), 5377);
        assert_eq!(system_qubits(0, 0, [6, 6, 7], [8, 8, 9]), 0);
    }

    #[test]
    fn exchange_set_size() {
        let b = build_basis(&SimulationCell::cuboid(2.0 * PI, 2.0 * PI, 2.0 * PI), [1.0; 3], BasisRole::Electron, 1.0)
            .unwrap();
        assert_eq!(b.p_max, [1, 1, 1]);
        assert_eq!(b.exchange_size(), 124);
        let [count] = box_fold(b.exchange_range(), true, |_| [1.0]);
        assert_eq!(count, 124.0);
    }

    proptest! {
        #[test]
        fn duality_on_random_cells(m in prop::array::uniform9(-5.0f64..5.0)) {
            let lattice = [
                Vector3::new(m[0] + 6.0, m[1], m[2]),
                Vector3::new(m[3], m[4] + 6.0, m[5]),
                Vector3::new(m[6], m[7], m[8] + 6.0),
            ];
            let cell = SimulationCell { lattice, shape: ShapeTag::General };
            prop_assume!(cell.volume() > 1.0);
            let b = reciprocal_vectors(&cell).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 2.0 * PI } else { 0.0 };
                    prop_assert!((b[i].dot(&cell.lattice[j]) - expect).abs() < 1e-12 * 10.0);
                }
            }
        }

        #[test]
        fn ksq_axis_relabeling(p in prop::array::uniform3(-40i64..40), perm in 0usize..6) {
            let cell = SimulationCell::rhombohedron_120(9.0, 9.0, 20.0);
            let b = build_basis(&cell, [5.0; 3], BasisRole::Electron, 1.0).unwrap();
            let perms = [[0,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
            let s = perms[perm];
            let g = b.gram();
            let gp = Matrix3::from_fn(|i, j| g[(s[i], s[j])]);
            let pp = [p[s[0]], p[s[1]], p[s[2]]];
            let a = ksq(p, &g);
            prop_assert!((a - ksq(pp, &gp)).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn electron_basis_invariants(l in prop::array::uniform3(5.0f64..40.0), cut in 2.0f64..20.0) {
            let cell = SimulationCell::cuboid(l[0], l[1], l[2]);
            let b = build_basis(&cell, [cut; 3], BasisRole::Electron, 1.0).unwrap();
            for a in 0..3 {
                prop_assert_eq!(b.p_max[a], (1u32 << (b.n[a] - 1)) - 1);
                prop_assert!((b.true_cutoffs[a] - b.p_max[a] as f64 * b.reciprocal[a].norm()).abs() < 1e-12);
                prop_assert!(b.true_cutoffs[a] >= cut - 1e-9);
            }
            prop_assert_eq!(basis_size(&b), b.size());
        }
    }

    #[test]
    fn fold_variants_agree() {
        let cell = SimulationCell::rhombohedron_120(9.0, 9.0, 13.0);
        let spec = basis_from_qubits(&cell, [4, 4, 5], BasisRole::Electron).unwrap();
        let g = spec.gram();
        let a = box_fold::<2, _>(spec.exchange_range(), true, |p| {
            let k = ksq(p, &g);
            [1.0 / k, (-k).exp()]
        });
        let b = box_fold_vec(spec.exchange_range(), true, 2, |p, acc| {
            let k = ksq(p, &g);
            acc[0] += 1.0 / k;
            acc[1] += (-k).exp();
        });
        assert_eq!(a.to_vec(), b);
        assert_eq!(spec.p_max, [7, 7, 15]);
    }
}
