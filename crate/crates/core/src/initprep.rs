//! Classical initial-state precomputation.
//!
//! Normal modes with the Euclidean zero modes projected out, Eckart and
//! inertia diagnostics, truncated thermal weights for vibrational levels,
//! wavepacket discretization parameters and injective grid matching.

use std::collections::HashSet;
use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cell_basis::BasisSpec;

/// Wavenumbers (cm^-1) per Hartree.
pub const HARTREE_CM: f64 = 219_474.631_363_2;

/// Reduced eigenvalues below `-NEGATIVE_TOL` mean the geometry is not a minimum.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Default seed for the random QR fill.
pub const DEFAULT_SEED: u64 = 0x5eed;

const RANK_TOL: f64 = 1e-8;
const MAX_REDRAWS: usize = 16;

/// Errors raised by initial-state precomputation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum InitError {
    /// Array sizes disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A mass is not positive.
    #[error("mass {index} is not positive ({value})")]
    NonPositiveMass { index: usize, value: f64 },
    /// The Hessian is not symmetric.
    #[error("hessian is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
    /// A projected eigenvalue is negative, so the geometry is not at a minimum.
    #[error("negative curvature {value:e} in mode {mode}; geometry is not a minimum")]
    NotMinimum { mode: usize, value: f64 },
    /// The symmetry generators have lower rank than the topology requires.
    #[error("symmetry generators have rank {found}, expected {expected}")]
    RankDeficient { found: usize, expected: usize },
    /// The random fill kept producing a singular completion.
    #[error("could not complete the generator block to a basis")]
    Completion,
    /// The width of a Gaussian must be positive.
    #[error("wavepacket width must be positive, got {0}")]
    NonPositiveSigma(f64),
    /// More source points than free lattice sites.
    #[error("{points} points do not fit on {sites} lattice sites")]
    Capacity { points: usize, sites: u64 },
    /// A geometry/Hessian file could not be parsed.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Shape class that fixes how many Euclidean modes are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Nonlinear molecule: 3 translations and 3 rotations.
    Nonlinear,
    /// Linear molecule: 3 translations and 2 rotations.
    Linear,
    /// Periodic substrate: 3 translations only.
    Substrate,
    /// Isolated atom: no internal modes.
    Atom,
}

impl Topology {
    /// Number of Euclidean modes removed for `n_atoms` atoms.
    pub fn removed(self, n_atoms: usize) -> usize {
        match self {
            Topology::Nonlinear => 6,
            Topology::Linear => 5,
            Topology::Substrate => 3,
            Topology::Atom => 3 * n_atoms,
        }
        .min(3 * n_atoms)
    }

    fn has_rotations(self) -> bool {
        matches!(self, Topology::Nonlinear | Topology::Linear)
    }
}

impl std::str::FromStr for Topology {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nonlinear" => Ok(Topology::Nonlinear),
            "linear" => Ok(Topology::Linear),
            "substrate" => Ok(Topology::Substrate),
            "atom" => Ok(Topology::Atom),
            other => Err(format!("unknown topology {other}")),
        }
    }
}

/// Equilibrium geometry of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MolecularGeometry {
    /// Masses in electron masses.
    pub masses: Vec<f64>,
    /// Equilibrium positions in Bohr.
    pub positions: Vec<Vector3<f64>>,
    /// Shape class.
    pub topology: Topology,
}

impl MolecularGeometry {
    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.masses.len()
    }

    /// True when there are no atoms.
    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Mass-weighted centre.
    pub fn center_of_mass(&self) -> Vector3<f64> {
        let m: f64 = self.masses.iter().sum();
        self.masses.iter().zip(&self.positions).fold(Vector3::zeros(), |acc, (mi, r)| acc + r * *mi) / m
    }

    fn validate(&self) -> Result<(), InitError> {
        if self.masses.len() != self.positions.len() {
            return Err(InitError::Shape(format!(
                "{} masses and {} positions",
                self.masses.len(),
                self.positions.len()
            )));
        }
        if let Some((index, &value)) = self.masses.iter().enumerate().find(|(_, m)| !(**m > 0.0)) {
            return Err(InitError::NonPositiveMass { index, value });
        }
        Ok(())
    }
}

/// Harmonic modes of one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    /// Frequencies in Hartree, ascending.
    pub frequencies: Vec<f64>,
    /// Mass-weighted polarization vectors as columns (3N rows).
    pub polarizations: DMatrix<f64>,
    /// Rayleigh quotient of each removed generator, relative to the largest curvature.
    pub zero_mode_residuals: Vec<f64>,
}

impl NormalModes {
    /// Frequencies in cm^-1.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.frequencies.iter().map(|w| w * HARTREE_CM).collect()
    }
}

/// Orthonormal translation and rotation generators in mass-weighted coordinates.
pub fn symmetry_generators(geom: &MolecularGeometry) -> Vec<DVector<f64>> {
    let n = geom.len();
    let com = geom.center_of_mass();
    let mut raw = Vec::new();
    for a in 0..3 {
        raw.push(DVector::from_fn(3 * n, |i, _| if i % 3 == a { geom.masses[i / 3].sqrt() } else { 0.0 }));
    }
    if geom.topology.has_rotations() {
        for a in 0..3 {
            let axis = Vector3::ith(a, 1.0);
            raw.push(DVector::from_fn(3 * n, |i, _| {
                let v = axis.cross(&(geom.positions[i / 3] - com));
                geom.masses[i / 3].sqrt() * v[i % 3]
            }));
        }
    }
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in raw {
        let scale = v.norm().max(1.0);
        let mut w = v;
        for u in &out {
            let c = u.dot(&w);
            w -= u * c;
        }
        let nw = w.norm();
        if nw > RANK_TOL * scale {
            out.push(w / nw);
        }
    }
    out
}

/// Complete `gens` to an orthonormal basis and return the complementary columns.
fn complement(gens: &[DVector<f64>], dim: usize, seed: u64) -> Result<DMatrix<f64>, InitError> {
    let k = gens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REDRAWS {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (j, g) in gens.iter().enumerate() {
            m.set_column(j, g);
        }
        for j in k..dim {
            for i in 0..dim {
                m[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let qr = m.qr();
        let r = qr.r();
        if (0..dim).all(|i| r[(i, i)].abs() > RANK_TOL) {
            let q = qr.q();
            return Ok(q.columns(k, dim - k).into_owned());
        }
    }
    Err(InitError::Completion)
}

/// Normal modes with the Euclidean zero modes removed, using the default seed.
pub fn normal_modes(geom: &MolecularGeometry, hessian: &DMatrix<f64>) -> Result<NormalModes, InitError> {
    normal_modes_seeded(geom, hessian, DEFAULT_SEED)
}

/// Normal modes with a chosen seed for the random QR fill.
pub fn normal_modes_seeded(
    geom: &MolecularGeometry,
    hessian: &DMatrix<f64>,
    seed: u64,
) -> Result<NormalModes, InitError> {
    geom.validate()?;
    let n = geom.len();
    let dim = 3 * n;
    if hessian.shape() != (dim, dim) {
        return Err(InitError::Shape(format!("hessian is {:?}, expected {dim}x{dim}", hessian.shape())));
    }
    let asym = (hessian - hessian.transpose()).amax();
    if asym > 1e-10 * hessian.amax().max(1.0) {
        return Err(InitError::Asymmetric(asym));
    }
    let sq: Vec<f64> = geom.masses.iter().map(|m| m.sqrt()).collect();
    let fw = DMatrix::from_fn(dim, dim, |i, j| hessian[(i, j)] / (sq[i / 3] * sq[j / 3]));
    let expected = geom.topology.removed(n);
    let gens = if geom.topology == Topology::Atom { Vec::new() } else { symmetry_generators(geom) };
    if geom.topology != Topology::Atom && gens.len() != expected {
        return Err(InitError::RankDeficient { found: gens.len(), expected });
    }
    let scale = fw.amax().max(f64::MIN_POSITIVE);
    let zero_mode_residuals = gens.iter().map(|g| (g.transpose() * &fw * g)[(0, 0)].abs() / scale).collect();
    if expected == dim {
        return Ok(NormalModes { frequencies: vec![], polarizations: DMatrix::zeros(dim, 0), zero_mode_residuals });
    }
    let qt = complement(&gens, dim, seed)?;
    let reduced = qt.transpose() * &fw * &qt;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frequencies = Vec::with_capacity(order.len());
    let mut pol = DMatrix::zeros(dim, order.len());
    for (k, &i) in order.iter().enumerate() {
        let f = eig.eigenvalues[i];
        if f < -NEGATIVE_TOL * scale.max(1.0) {
            return Err(InitError::NotMinimum { mode: k, value: f });
        }
        frequencies.push(f.max(0.0).sqrt());
        pol.set_column(k, &(&qt * eig.eigenvectors.column(i)));
    }
    Ok(NormalModes { frequencies, polarizations: pol, zero_mode_residuals })
}

/// Normal modes for several species in parallel.
pub fn normal_modes_batch(species: &[(MolecularGeometry, DMatrix<f64>)]) -> Vec<Result<NormalModes, InitError>> {
    species.par_iter().map(|(g, h)| normal_modes(g, h)).collect()
}

/// Hessian of central pair springs `(i, j, k)` at their rest lengths.
pub fn pair_spring_hessian(positions: &[Vector3<f64>], springs: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let n = positions.len();
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for &(i, j, k) in springs {
        let u = (positions[j] - positions[i]).normalize();
        add_pair_block(&mut h, i, j, &(u * u.transpose() * k));
    }
    h
}

/// Hessian of isotropic pair springs `k I` (translation invariant, not rotation invariant).
pub fn isotropic_spring_hessian(n: usize, springs: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for &(i, j, k) in springs {
        add_pair_block(&mut h, i, j, &(Matrix3::identity() * k));
    }
    h
}

fn add_pair_block(h: &mut DMatrix<f64>, i: usize, j: usize, b: &Matrix3<f64>) {
    for a in 0..3 {
        for c in 0..3 {
            h[(3 * i + a, 3 * i + c)] += b[(a, c)];
            h[(3 * j + a, 3 * j + c)] += b[(a, c)];
            h[(3 * i + a, 3 * j + c)] -= b[(a, c)];
            h[(3 * j + a, 3 * i + c)] -= b[(a, c)];
        }
    }
}

/// Parse a geometry and Hessian file.
///
/// ```text
/// # comment
/// topology nonlinear
/// atoms 3
/// <mass> <x> <y> <z>      (one line per atom)
/// hessian
/// <3N numbers>            (one row per line)
/// ```
pub fn parse_geometry_hessian(text: &str) -> Result<(MolecularGeometry, DMatrix<f64>), InitError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: &str| InitError::Parse { line, msg: msg.to_string() };
    let nums = |line: usize, s: &str| -> Result<Vec<f64>, InitError> {
        s.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| err(line, &format!("{t}: {e}")))).collect()
    };
    let mut keyed = |key: &str| -> Result<(usize, String), InitError> {
        let (ln, l) = lines.next().ok_or_else(|| err(0, &format!("missing {key}")))?;
        let rest = l.strip_prefix(key).ok_or_else(|| err(ln, &format!("expected `{key}`")))?;
        Ok((ln, rest.trim().to_string()))
    };
    let (ln, topo) = keyed("topology")?;
    let topology: Topology = topo.parse().map_err(|e: String| err(ln, &e))?;
    let (ln, count) = keyed("atoms")?;
    let n: usize = count.parse().map_err(|_| err(ln, "atom count"))?;
    let mut masses = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "missing atom line"))?;
        let v = nums(ln, l)?;
        if v.len() != 4 {
            return Err(err(ln, "atom lines hold mass x y z"));
        }
        masses.push(v[0]);
        positions.push(Vector3::new(v[1], v[2], v[3]));
    }
    let (ln, rest) = lines.next().ok_or_else(|| err(0, "missing hessian"))?;
    if rest != "hessian" {
        return Err(err(ln, "expected `hessian`"));
    }
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    for r in 0..3 * n {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "missing hessian row"))?;
        let v = nums(ln, l)?;
        if v.len() != 3 * n {
            return Err(err(ln, &format!("expected {} entries", 3 * n)));
        }
        for (c, x) in v.into_iter().enumerate() {
            h[(r, c)] = x;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(err(ln, "trailing content"));
    }
    Ok((MolecularGeometry { masses, positions, topology }, h))
}

/// Highest retained vibrational level `ceil((1/(beta w)) ln((1 - e^{-beta w}) / eps))`, at least 0.
pub fn thermal_cutoff(omega: f64, beta: f64, eps: f64) -> u32 {
    let x = beta * omega;
    if eps >= 1.0 || x.is_infinite() {
        return 0;
    }
    let v = ((-(-x).exp_m1()) / eps).ln() / x;
    // Absorb rounding so exact integers do not step up by one.
    let c = (v - 1e-12 * v.abs().max(1.0)).ceil();
    if c.is_nan() || c <= 0.0 {
        0
    } else {
        c.min(u32::MAX as f64) as u32
    }
}

/// Truncated thermal populations of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalVibSpec {
    /// Frequency in Hartree.
    pub omega: f64,
    /// Inverse temperature in 1/Hartree.
    pub beta: f64,
    /// Highest retained level.
    pub l_max: u32,
    /// Normalized populations `Pr(0..=l_max)`.
    pub weights: Vec<f64>,
    /// Truncated partition function.
    pub z_vib: f64,
}

/// Populations `Pr(l) = e^{-beta w (l + 1/2)} / Z` for `l = 0..=l_max`.
pub fn vib_weights(omega: f64, beta: f64, l_max: u32) -> ThermalVibSpec {
    let x = beta * omega;
    let raw: Vec<f64> = (0..=l_max).map(|l| (-x * (l as f64 + 0.5)).exp()).collect();
    let z: f64 = raw.iter().sum();
    let weights = if z > 0.0 {
        raw.iter().map(|w| w / z).collect()
    } else {
        // Underflow of every factor leaves only the ground state.
        (0..=l_max).map(|l| if l == 0 { 1.0 } else { 0.0 }).collect()
    };
    ThermalVibSpec { omega, beta, l_max, weights, z_vib: z }
}

/// Form of the rotational frame condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EckartVariant {
    /// `sum R_I x R_I^0`.
    #[default]
    AsPrinted,
    /// `sum M_I R_I x R_I^0`.
    MassWeighted,
}

/// Frame and inertia diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EckartReport {
    /// Residual of the frame condition.
    pub residual: Vector3<f64>,
    /// Principal moments of the equilibrium inertia tensor, ascending.
    pub moments: [f64; 3],
    /// Inverse moments; `None` for a vanishing moment.
    pub mu: [Option<f64>; 3],
    /// True when a principal moment vanishes (linear or single-atom species).
    pub degenerate: bool,
}

/// Inertia tensor `sum M_I (|R_I|^2 delta - R_I R_I^T)` of the supplied coordinates.
pub fn inertia_tensor(masses: &[f64], positions: &[Vector3<f64>]) -> Matrix3<f64> {
    masses
        .iter()
        .zip(positions)
        .fold(Matrix3::zeros(), |acc, (m, r)| acc + (Matrix3::identity() * r.norm_squared() - r * r.transpose()) * *m)
}

/// Frame residual and principal moments for displaced positions `r` relative to `geom`.
pub fn eckart_inertia(
    geom: &MolecularGeometry,
    r: &[Vector3<f64>],
    variant: EckartVariant,
) -> Result<EckartReport, InitError> {
    geom.validate()?;
    if r.len() != geom.len() {
        return Err(InitError::Shape(format!("{} displaced positions for {} atoms", r.len(), geom.len())));
    }
    let residual = r.iter().zip(&geom.positions).zip(&geom.masses).fold(Vector3::zeros(), |acc, ((ri, r0), m)| {
        let w = match variant {
            EckartVariant::AsPrinted => 1.0,
            EckartVariant::MassWeighted => *m,
        };
        acc + ri.cross(r0) * w
    });
    let eig = inertia_tensor(&geom.masses, &geom.positions).symmetric_eigenvalues();
    let mut moments = [eig[0], eig[1], eig[2]];
    moments.sort_by(f64::total_cmp);
    let tol = 1e-10 * moments[2].abs().max(f64::MIN_POSITIVE);
    let mu = moments.map(|m| if m.abs() > tol { Some(1.0 / m) } else { None });
    Ok(EckartReport { residual, moments, degenerate: mu.iter().any(Option::is_none), mu })
}

/// A regular lattice of sites `sum_a i_a s_a` with `|i_a| <= extent_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    /// Step vectors as columns.
    pub steps: Matrix3<f64>,
    /// Largest index per axis.
    pub extent: [i64; 3],
}

impl Lattice {
    /// Real-space grid dual to a momentum basis: `2 p_max + 1` sites per cell vector.
    pub fn from_basis(basis: &BasisSpec) -> Self {
        let b = basis.reciprocal_matrix();
        let a = b.transpose().try_inverse().expect("reciprocal vectors are independent") * (2.0 * PI);
        let mut steps = a;
        for c in 0..3 {
            let m = 2.0 * basis.p_max[c] as f64 + 1.0;
            let col = steps.column(c) / m;
            steps.set_column(c, &col);
        }
        Lattice { steps, extent: basis.range() }
    }

    /// Number of sites.
    pub fn sites(&self) -> u64 {
        self.extent.iter().map(|&e| 2 * e as u64 + 1).product()
    }

    fn contains(&self, p: [i64; 3]) -> bool {
        (0..3).all(|a| p[a].abs() <= self.extent[a])
    }

    /// Cartesian position of a site.
    pub fn site(&self, p: [i64; 3]) -> Vector3<f64> {
        self.steps * Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64)
    }
}

/// Injectively assign each point to a lattice site.
///
/// Each point goes to its nearest site (clamped into the lattice). When that
/// site is taken, the nearest free site by Euclidean distance is used, with
/// ties broken lexicographically on the index. Points are processed in
/// input order.
pub fn grid_match(points: &[Vector3<f64>], lattice: &Lattice) -> Result<Vec<[i64; 3]>, InitError> {
    if points.len() as u64 > lattice.sites() {
        return Err(InitError::Capacity { points: points.len(), sites: lattice.sites() });
    }
    let inv = lattice.steps.try_inverse().ok_or_else(|| InitError::Shape("lattice steps are singular".into()))?;
    let mut taken: HashSet<[i64; 3]> = HashSet::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for x in points {
        let f = inv * x;
        let home: [i64; 3] =
            std::array::from_fn(|a| (f[a].round() as i64).clamp(-lattice.extent[a], lattice.extent[a]));
        if taken.insert(home) {
            out.push(home);
            continue;
        }
        let dist = |p: [i64; 3]| (lattice.site(p) - x).norm();
        let max_shell = *lattice.extent.iter().max().unwrap_or(&0) * 2 + 1;
        let mut best: Option<(f64, [i64; 3])> = None;
        for s in 1..=max_shell {
            for d0 in -s..=s {
                for d1 in -s..=s {
                    for d2 in -s..=s {
                        if d0.abs().max(d1.abs()).max(d2.abs()) != s {
                            continue;
                        }
                        let p = [home[0] + d0, home[1] + d1, home[2] + d2];
                        if !lattice.contains(p) || taken.contains(&p) {
                            continue;
                        }
                        let d = dist(p);
                        let better = match best {
                            None => true,
                            Some((bd, bp)) => d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && p < bp),
                        };
                        if better {
                            best = Some((d, p));
                        }
                    }
                }
            }
            if let Some((bd, _)) = best {
                if bd <= shell_lower_bound(&inv, s) {
                    break;
                }
            }
        }
        let (_, p) = best.ok_or(InitError::Capacity { points: points.len(), sites: lattice.sites() })?;
        taken.insert(p);
        out.push(p);
    }
    Ok(out)
}

/// Smallest Euclidean distance from a point to any site whose index differs from the point's rounded index by more than `s` on some axis.
fn shell_lower_bound(inv: &Matrix3<f64>, s: i64) -> f64 {
    // A displacement y with |(inv y)_a| >= s + 1/2 has |y| >= (s + 1/2) / |row_a(inv)|.
    let worst_row = (0..3).map(|a| inv.row(a).norm()).fold(0.0, f64::max);
    (s as f64 + 0.5) / worst_row
}

/// Inputs for one species' translational and rotational wavepacket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketEntry {
    /// Mean position in Bohr.
    pub r_bar: Vector3<f64>,
    /// Mean momentum in a.u.
    pub p_bar: Vector3<f64>,
    /// Position spread in Bohr.
    pub sigma: f64,
    /// Qubits per translational axis.
    pub n_trans: u32,
    /// Qubits per rotational angle.
    pub n_rot: u32,
    /// Grid spacing in Bohr.
    pub spacing: f64,
    /// Linear species skip the third Euler angle.
    pub linear: bool,
}

/// Validated wavepacket discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavepacketParams {
    /// Echo of the inputs.
    pub entry: WavepacketEntry,
    /// Normalization constant of the discretized Gaussian.
    pub gaussian_norm: f64,
    /// Euler angles discretized (2 for linear species).
    pub angles: u32,
    /// Rotational grid points, `2^{angles n_rot}`.
    pub rot_points: u64,
    /// Rotational normalization `2^{angles n_rot / 2}`.
    pub n_rot_norm: f64,
    /// Uniform rotational amplitude `1 / n_rot_norm`.
    pub rot_amplitude: f64,
}

impl WavepacketEntry {
    /// Grid coordinate of index `j` on one axis, centred on 0.
    pub fn coordinate(&self, j: usize) -> f64 {
        let m = (1u64 << self.n_trans) as f64;
        (j as f64 - (m - 1.0) / 2.0) * self.spacing
    }

    fn unnormalized(&self, axis: usize) -> Vec<Complex<f64>> {
        let m = 1usize << self.n_trans;
        (0..m)
            .map(|j| {
                let x = self.coordinate(j);
                let dx = x - self.r_bar[axis];
                Complex::from_polar((-dx * dx / (4.0 * self.sigma * self.sigma)).exp(), self.p_bar[axis] * x)
            })
            .collect()
    }

    /// Normalized amplitudes along one axis.
    pub fn amplitudes(&self, axis: usize) -> Vec<Complex<f64>> {
        let v = self.unnormalized(axis);
        let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|c| c / n).collect()
    }
}

/// Validate a wavepacket entry and derive its normalizations.
pub fn wavepacket_params(entry: &WavepacketEntry) -> Result<WavepacketParams, InitError> {
    if !(entry.sigma > 0.0) {
        return Err(InitError::NonPositiveSigma(entry.sigma));
    }
    if entry.n_trans == 0 || entry.n_trans > 24 || entry.n_rot > 20 || !(entry.spacing > 0.0) {
        return Err(InitError::Shape("grid widths or spacing out of range".into()));
    }
    let norm2: f64 = (0..3).map(|a| entry.unnormalized(a).iter().map(|c| c.norm_sqr()).sum::<f64>()).product();
    let angles = if entry.linear { 2 } else { 3 };
    let bits = angles * entry.n_rot;
    let n_rot_norm = 2f64.powf(bits as f64 / 2.0);
    Ok(WavepacketParams {
        entry: entry.clone(),
        gaussian_norm: 1.0 / norm2.sqrt(),
        angles,
        rot_points: 1u64 << bits,
        n_rot_norm,
        rot_amplitude: 1.0 / n_rot_norm,
    })
}
