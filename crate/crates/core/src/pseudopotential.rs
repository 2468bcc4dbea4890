//! HGH pseudopotential parameters and the matrix-element functions built on them.
//!
//! A record holds the local part (`r_loc`, `C_1..C_4`) and up to three
//! separable non-local channels (`l = 0, 1, 2`), each with a radius `r_l`
//! and a symmetric coupling matrix `B_l`. The functions here evaluate the
//! plane-wave matrix elements of both parts.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

/// Largest angular momentum supported by the separable form.
pub const L_MAX: usize = 2;

/// Tolerance on `|B - B^T|` accepted for a coupling matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Errors raised while parsing or evaluating pseudopotential data.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PseudoError {
    /// A numeric field could not be parsed.
    #[error("line {line}: malformed numeric field `{field}`")]
    MalformedNumber { line: usize, field: String },
    /// A line had the wrong shape for its position in the record.
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    /// A coupling matrix is not symmetric.
    #[error("species {label}: B matrix for l = {l} is not symmetric")]
    NotSymmetric { label: String, l: usize },
    /// Two records share a label.
    #[error("duplicate species label `{0}`")]
    DuplicateLabel(String),
    /// The record violates a structural invariant.
    #[error("species {label}: {message}")]
    Invalid { label: String, message: String },
    /// A requested non-local channel is absent.
    #[error("species {label} has no non-local channel l = {l}")]
    MissingChannel { label: String, l: usize },
    /// The projector index is outside 1..=3.
    #[error("projector index {0} outside 1..=3")]
    BadProjector(usize),
    /// The q = 0 exchange was requested for the local term.
    #[error("h_loc is singular at zero momentum exchange")]
    ZeroExchange,
    /// The Legendre argument is not a cosine.
    #[error("cos(theta) = {0} outside [-1, 1]")]
    BadCosine(f64),
}

/// One separable non-local channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlocalBlock {
    /// Angular momentum of the channel.
    pub l: usize,
    /// Projector radius `r_l` in Bohr.
    pub r_l: f64,
    /// Number of projectors actually supplied (1..=3).
    pub dim: usize,
    /// Coupling matrix, zero-padded to 3x3.
    pub b: Matrix3<f64>,
}

/// HGH parameter bundle for one pseudoion species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoIonParams {
    /// Species label, e.g. `N^5`.
    pub label: String,
    /// Nuclear charge.
    pub z_full: u32,
    /// Effective pseudoion charge (valence electrons).
    pub z_pi: u32,
    /// Mass in electron masses.
    pub mass: f64,
    /// Local radius in Bohr.
    pub r_loc: f64,
    /// Local coefficients `C_1..C_4` in Hartree.
    pub c: [f64; 4],
    /// Non-local channels ordered by `l`.
    pub blocks: Vec<NonlocalBlock>,
}

/// Coefficients `c_s` of the reorganized local polynomial, `s = -1..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalCoeffs {
    /// `c[s + 1]` holds `c_s`.
    pub c: [f64; 5],
}

impl LocalCoeffs {
    /// Coefficient `c_s` for `s` in `-1..=3`.
    pub fn get(&self, s: i32) -> f64 {
        self.c[(s + 1) as usize]
    }
}

/// Eigendecomposition of a zero-padded coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalEigen {
    /// Angular momentum of the channel.
    pub l: usize,
    /// Eigenvalues `D_alpha`, ascending.
    pub d: Vector3<f64>,
    /// Orthogonal matrix whose columns are the eigenvectors.
    pub x: Matrix3<f64>,
}

impl PseudoIonParams {
    /// Check the structural invariants of the record.
    pub fn validate(&self) -> Result<(), PseudoError> {
        let bad = |message: &str| PseudoError::Invalid { label: self.label.clone(), message: message.to_string() };
        if self.z_pi < 1 || self.z_pi > self.z_full {
            return Err(bad("Z_pi must lie in 1..=Z_full"));
        }
        if !(self.r_loc > 0.0) {
            return Err(bad("r_loc must be positive"));
        }
        if !(self.mass > 1000.0) {
            return Err(bad("mass must exceed 1000 electron masses"));
        }
        let mut seen = [false; L_MAX + 1];
        for blk in &self.blocks {
            if blk.l > L_MAX {
                return Err(bad("l_max above 2 is not supported"));
            }
            if seen[blk.l] {
                return Err(bad("repeated angular-momentum channel"));
            }
            seen[blk.l] = true;
            if !(blk.r_l > 0.0) {
                return Err(bad("r_l must be positive"));
            }
            if (blk.b - blk.b.transpose()).amax() > SYMMETRY_TOL {
                return Err(PseudoError::NotSymmetric { label: self.label.clone(), l: blk.l });
            }
        }
        Ok(())
    }

    /// The channel with angular momentum `l`, if present.
    pub fn block(&self, l: usize) -> Option<&NonlocalBlock> {
        self.blocks.iter().find(|b| b.l == l)
    }

    /// Number of core electrons folded into the pseudoion.
    pub fn eta_core(&self) -> u32 {
        self.z_full - self.z_pi
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, PseudoError> {
    tok.parse::<f64>().map_err(|_| PseudoError::MalformedNumber { line, field: tok.to_string() })
}

fn is_numeric(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Parse a line-oriented HGH parameter file.
///
/// Each record starts with `label Z_full Z_pi mass`, followed by
/// `r_loc C1 C2 C3 C4` (trailing C values may be omitted) and zero or more
/// blocks `l r_l` each followed by the upper triangle of `B_l`.
pub fn parse_hgh(text: &str) -> Result<Vec<PseudoIonParams>, PseudoError> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            (i + 1, body.split_whitespace().collect::<Vec<_>>())
        })
        .filter(|(_, toks)| !toks.is_empty())
        .collect();

    let mut out: Vec<PseudoIonParams> = Vec::new();
    let mut labels = HashSet::new();
    let mut i = 0;
    while i < lines.len() {
        let (ln, toks) = &lines[i];
        if is_numeric(toks[0]) || toks.len() != 4 {
            return Err(PseudoError::Malformed {
                line: *ln,
                message: "expected record header `label Z_full Z_pi mass`".into(),
            });
        }
        let label = toks[0].to_string();
        let z_full = parse_f64(toks[1], *ln)?;
        let z_pi = parse_f64(toks[2], *ln)?;
        if z_full.fract() != 0.0 || z_pi.fract() != 0.0 || z_full < 0.0 || z_pi < 0.0 {
            return Err(PseudoError::MalformedNumber { line: *ln, field: format!("{} {}", toks[1], toks[2]) });
        }
        let mass = parse_f64(toks[3], *ln)?;
        i += 1;

        let (ln, toks) = lines
            .get(i)
            .ok_or(PseudoError::Malformed { line: *ln, message: "record ends before the local line".into() })?;
        if toks.len() > 5 || !is_numeric(toks[0]) {
            return Err(PseudoError::Malformed { line: *ln, message: "expected `r_loc C1 C2 C3 C4`".into() });
        }
        let r_loc = parse_f64(toks[0], *ln)?;
        let mut c = [0.0; 4];
        for (k, t) in toks[1..].iter().enumerate() {
            c[k] = parse_f64(t, *ln)?;
        }
        i += 1;

        let mut blocks = Vec::new();
        while i < lines.len() && is_numeric(lines[i].1[0]) {
            let (ln, toks) = &lines[i];
            if toks.len() != 2 {
                return Err(PseudoError::Malformed { line: *ln, message: "expected block header `l r_l`".into() });
            }
            let l = toks[0]
                .parse::<usize>()
                .map_err(|_| PseudoError::MalformedNumber { line: *ln, field: toks[0].to_string() })?;
            let r_l = parse_f64(toks[1], *ln)?;
            i += 1;
            let (ln0, first) = lines
                .get(i)
                .ok_or(PseudoError::Malformed { line: *ln, message: "block header without B rows".into() })?;
            let dim = first.len();
            if dim == 0 || dim > 3 {
                return Err(PseudoError::Malformed {
                    line: *ln0,
                    message: "first B row must have 1 to 3 entries".into(),
                });
            }
            let mut b = Matrix3::zeros();
            for row in 0..dim {
                let (lnr, toks) = lines
                    .get(i)
                    .ok_or(PseudoError::Malformed { line: *ln0, message: "record ends inside a B block".into() })?;
                if toks.len() != dim - row {
                    return Err(PseudoError::Malformed {
                        line: *lnr,
                        message: format!("B row {} needs {} entries", row + 1, dim - row),
                    });
                }
                for (k, t) in toks.iter().enumerate() {
                    let v = parse_f64(t, *lnr)?;
                    b[(row, row + k)] = v;
                    b[(row + k, row)] = v;
                }
                i += 1;
            }
            blocks.push(NonlocalBlock { l, r_l, dim, b });
        }
        blocks.sort_by_key(|b| b.l);

        if !labels.insert(label.clone()) {
            return Err(PseudoError::DuplicateLabel(label));
        }
        let rec = PseudoIonParams { label, z_full: z_full as u32, z_pi: z_pi as u32, mass, r_loc, c, blocks };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// Serialize records in the format read by [`parse_hgh`].
///
/// Numbers use Rust's shortest round-trip representation, so parsing the
/// output reproduces every value bit for bit.
pub fn write_hgh(records: &[PseudoIonParams]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{} {} {} {:?}", r.label, r.z_full, r.z_pi, r.mass);
        let _ = writeln!(s, "{:?} {:?} {:?} {:?} {:?}", r.r_loc, r.c[0], r.c[1], r.c[2], r.c[3]);
        for b in &r.blocks {
            let _ = writeln!(s, "{} {:?}", b.l, b.r_l);
            for row in 0..b.dim {
                let vals: Vec<String> = (row..b.dim).map(|k| format!("{:?}", b.b[(row, k)])).collect();
                let _ = writeln!(s, "{}", vals.join(" "));
            }
        }
        s.push('\n');
    }
    s
}

/// Coefficients `c_{-1}..c_3` of the local polynomial in `(k r_loc)^2`.
pub fn local_coeffs(params: &PseudoIonParams) -> LocalCoeffs {
    let [c1, c2, c3, c4] = params.c;
    LocalCoeffs {
        c: [
            -(2.0 / PI).sqrt() * params.z_pi as f64 / params.r_loc,
            c1 + 3.0 * c2 + 15.0 * c3 + 105.0 * c4,
            -c2 - 10.0 * c3 - 105.0 * c4,
            c3 + 21.0 * c4,
            -c4,
        ],
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Generalized Laguerre polynomial `L_n^{alpha}(y)` for `n <= 2`.
fn laguerre(n: usize, alpha: f64, y: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 1.0 + alpha - y,
        2 => 0.5 * (y * y - 2.0 * (alpha + 2.0) * y + (alpha + 1.0) * (alpha + 2.0)),
        _ => panic!("Laguerre degree above 2 is not needed for l_max <= 2"),
    }
}

/// Radial projector in momentum space, `g_a^l(x)` with `a` in 1..=3.
///
/// `x` is the dimensionless momentum `|k| r_l`.
pub fn g_radial(a: usize, l: usize, x: f64) -> f64 {
    assert!((1..=3).contains(&a) && l <= L_MAX, "g_radial needs a in 1..=3 and l <= 2");
    let norm = PI.sqrt() * 2f64.powi(a as i32 - 1) * factorial(a - 1) / gamma(l as f64 + 2.0 * a as f64 - 0.5).sqrt();
    (-x * x / 2.0).exp() * x.powi(l as i32) * norm * laguerre(a - 1, l as f64 + 0.5, x * x / 2.0)
}

fn g_norms() -> &'static [[f64; 3]; 3] {
    static NORMS: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    NORMS.get_or_init(|| {
        std::array::from_fn(|l| {
            std::array::from_fn(|a| {
                PI.sqrt() * 2f64.powi(a as i32) * factorial(a) / gamma(l as f64 + 2.0 * (a + 1) as f64 - 0.5).sqrt()
            })
        })
    })
}

/// All three radial projectors `[g_1^l(x), g_2^l(x), g_3^l(x)]` with cached normalizations.
pub fn g_radial_all(l: usize, x: f64) -> [f64; 3] {
    assert!(l <= L_MAX, "g_radial_all needs l <= 2");
    let norms = &g_norms()[l];
    let env = (-x * x / 2.0).exp() * x.powi(l as i32);
    let y = x * x / 2.0;
    let alpha = l as f64 + 0.5;
    std::array::from_fn(|a| env * norms[a] * laguerre(a, alpha, y))
}

/// Diagonalize a coupling matrix, eigenvalues ascending.
pub fn nonlocal_eigen(block: &NonlocalBlock) -> NonlocalEigen {
    let eig = SymmetricEigen::new(block.b);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let d = Vector3::from_fn(|k, _| eig.eigenvalues[idx[k]]);
    let x = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, idx[c])]);
    NonlocalEigen { l: block.l, d, x }
}

/// Rotated projector `G_alpha(x) = sum_b X_{b alpha} g_b^l(x)` from a precomputed eigensystem.
///
/// `alpha` is zero-based here.
pub fn g_alpha_eigen(eig: &NonlocalEigen, alpha: usize, x: f64) -> f64 {
    (0..3).map(|b| eig.x[(b, alpha)] * g_radial(b + 1, eig.l, x)).sum()
}

/// Rotated projector `G_alpha^{l}(x)` for `alpha` in 1..=3.
pub fn g_alpha(params: &PseudoIonParams, l: usize, alpha: usize, x: f64) -> Result<f64, PseudoError> {
    if !(1..=3).contains(&alpha) {
        return Err(PseudoError::BadProjector(alpha));
    }
    let blk = params.block(l).ok_or(PseudoError::MissingChannel { label: params.label.clone(), l })?;
    Ok(g_alpha_eigen(&nonlocal_eigen(blk), alpha - 1, x))
}

/// Local matrix element at squared momentum exchange `ksq` in a cell of volume `omega`.
pub fn h_loc(params: &PseudoIonParams, ksq: f64, omega: f64) -> Result<f64, PseudoError> {
    if ksq <= 0.0 {
        return Err(PseudoError::ZeroExchange);
    }
    let cs = local_coeffs(params);
    let rl = params.r_loc;
    let y = ksq * rl * rl;
    let poly: f64 = (-1..=3).map(|s| cs.get(s) * y.powi(s)).sum();
    Ok(4.0 * PI * rl.powi(3) / omega * (PI / 2.0).sqrt() * (-y / 2.0).exp() * poly)
}

/// Legendre polynomial `P_l(cos theta)` for `l <= 2`.
pub fn legendre_eval(l: usize, cos_theta: f64) -> Result<f64, PseudoError> {
    if cos_theta.abs() > 1.0 + 1e-12 || cos_theta.is_nan() {
        return Err(PseudoError::BadCosine(cos_theta));
    }
    match l {
        0 => Ok(1.0),
        1 => Ok(cos_theta),
        2 => Ok(0.5 * (3.0 * cos_theta * cos_theta - 1.0)),
        _ => Err(PseudoError::MissingChannel { label: "legendre".into(), l }),
    }
}

/// Result of a one-dimensional quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    /// Integral estimate.
    pub value: f64,
    /// Error estimate reported by the integrator.
    pub error: f64,
}

/// Integrate `f` on `[a, b]` with the double-exponential rule, splitting the
/// range into unit-width panels so that each panel converges quickly.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Quadrature {
    let panels = ((b - a).ceil() as usize).max(1);
    let h = (b - a) / panels as f64;
    let tol = abs_tol / panels as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let o = quadrature::double_exponential::integrate(&f, lo, lo + h, tol);
        value += o.integral;
        error += o.error_estimate;
    }
    Quadrature { value, error }
}

/// Upper integration limit (in units of `x = k r`) for Gaussian-suppressed integrands.
pub const QUAD_X_MAX: f64 = 40.0;

/// `int_0^inf x^2 g_a^l(x)^2 dx`, which equals `pi / 2` for every `(a, l)`.
pub fn g_norm_integral(a: usize, l: usize) -> Quadrature {
    integrate(|x| x * x * g_radial(a, l, x).powi(2), 0.0, QUAD_X_MAX, 1e-10)
}

/// Near-unity constant `C~_alpha = (2/pi) int_0^inf x^2 G_alpha(x)^2 dx` for a channel.
///
/// `alpha` is zero-based.
pub fn c_tilde(eig: &NonlocalEigen, alpha: usize) -> Quadrature {
    let q = integrate(|x| x * x * g_alpha_eigen(eig, alpha, x).powi(2), 0.0, QUAD_X_MAX, 1e-10);
    Quadrature { value: 2.0 / PI * q.value, error: 2.0 / PI * q.error }
}

/// The HGH table shipped with the crate (LDA, 22 species).
pub const BUNDLED_HGH: &str = include_str!("../data/hgh_lda.dat");

/// Parse the bundled HGH table.
pub fn bundled_table() -> Vec<PseudoIonParams> {
    parse_hgh(BUNDLED_HGH).expect("bundled HGH table is valid")
}
