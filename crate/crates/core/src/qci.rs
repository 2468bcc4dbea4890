//! Chemical species identification from ionic positions.
//!
//! Coulomb-matrix power features feed logistic fingerprints; a counting
//! compiler enumerates candidate atom subsets per species, applies the
//! fingerprints and removes candidates explained by a larger species.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by feature evaluation and species counting.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QciError {
    /// Two atoms share a position.
    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),
    /// Positions and charges differ in length.
    #[error("{positions} positions but {charges} charges")]
    LengthMismatch { positions: usize, charges: usize },
    /// Power depths must be at least 1.
    #[error("p and q must be positive")]
    ZeroDepth,
    /// Feature and weight vectors differ in length.
    #[error("feature vector has {features} entries but the model expects {weights}")]
    DimensionMismatch { features: usize, weights: usize },
    /// A model's feature permutation is not a permutation of `0..2pq`.
    #[error("feature order for {0} is not a permutation")]
    BadOrder(String),
    /// Unknown element symbol.
    #[error("unknown element {0}")]
    UnknownElement(String),
    /// Too many candidate subsets.
    #[error("{species}: {candidates} candidates exceed the budget of {budget}")]
    BudgetExceeded { species: String, candidates: u128, budget: u64 },
    /// A frame's element roster differs from the first frame.
    #[error("frame {0} has a different atom roster")]
    RosterMismatch(usize),
    /// An exclusion rule names a species without a rule.
    #[error("exclusion references unknown species {0}")]
    UnknownSpecies(String),
    /// Model or trajectory text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

const SYMBOLS: [&str; 86] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K", "Ca",
    "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",
    "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce",
    "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir",
    "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn",
];

/// Atomic number of an element symbol.
pub fn atomic_number(symbol: &str) -> Result<u32, QciError> {
    SYMBOLS
        .iter()
        .position(|s| *s == symbol)
        .map(|i| i as u32 + 1)
        .ok_or_else(|| QciError::UnknownElement(symbol.to_string()))
}

/// Coulomb matrix: `0.5 z_i^2.4` on the diagonal and `z_i z_j / |x_i - x_j|` off it.
pub fn coulomb_matrix(positions: &[Vector3<f64>], charges: &[f64]) -> Result<DMatrix<f64>, QciError> {
    if positions.len() != charges.len() {
        return Err(QciError::LengthMismatch { positions: positions.len(), charges: charges.len() });
    }
    let n = positions.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 0.5 * charges[i].powf(2.4);
        for j in 0..i {
            let d = (positions[i] - positions[j]).norm();
            if d == 0.0 {
                return Err(QciError::CoincidentAtoms(j, i));
            }
            let v = charges[i] * charges[j] / d;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Squared Frobenius norms of `A^1..A^p`.
fn power_norms(a: &DMatrix<f64>, p: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p);
    let mut pw = a.clone();
    for k in 0..p {
        if k > 0 {
            pw = &pw * a;
        }
        out.push(pw.norm_squared());
    }
    out
}

/// Feature vector `(m_1..m_p, n_1..n_p)` raised to powers `1..q`, blocks in that order.
pub fn features(positions: &[Vector3<f64>], charges: &[f64], p: usize, q: usize) -> Result<Vec<f64>, QciError> {
    if p == 0 || q == 0 {
        return Err(QciError::ZeroDepth);
    }
    let m = coulomb_matrix(positions, charges)?;
    let n = m.map(|x| 1.0 / x);
    let base: Vec<f64> = power_norms(&m, p).into_iter().chain(power_norms(&n, p)).collect();
    Ok((1..=q as i32).flat_map(|k| base.iter().map(move |b| b.powi(k))).collect())
}

/// Logistic fingerprint `Theta(w . u + b)` for one species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerprintModel {
    /// Species label.
    pub species: String,
    /// Element symbols of one instance of the species.
    pub elements: Vec<String>,
    /// Matrix-power depth.
    pub p: usize,
    /// Scalar-power depth.
    pub q: usize,
    /// Weights, length `2 p q`.
    pub w: Vec<f64>,
    /// Intercept.
    pub b: f64,
    /// Part of `b` added after fitting; informational.
    #[serde(default)]
    pub b_shift: f64,
    /// `order[k]` is the feature index paired with `w[k]`; identity when absent.
    #[serde(default)]
    pub order: Option<Vec<usize>>,
    /// Species whose firing instances suppress overlapping instances of this one.
    #[serde(default)]
    pub exclude_within: Vec<String>,
}

/// Bundled model files.
pub const BUNDLED_MODELS: [(&str, &str); 4] = [
    ("H2O", include_str!("../data/qci/h2o.toml")),
    ("CO", include_str!("../data/qci/co.toml")),
    ("CO2", include_str!("../data/qci/co2.toml")),
    ("H2", include_str!("../data/qci/h2.toml")),
];

impl FingerprintModel {
    /// Parse and validate a model file.
    pub fn parse(text: &str) -> Result<Self, QciError> {
        let m: FingerprintModel = toml::from_str(text).map_err(|e| QciError::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Check dimensions, the feature permutation and the element symbols.
    pub fn validate(&self) -> Result<(), QciError> {
        if self.p == 0 || self.q == 0 {
            return Err(QciError::ZeroDepth);
        }
        let dim = 2 * self.p * self.q;
        if self.w.len() != dim {
            return Err(QciError::DimensionMismatch { features: dim, weights: self.w.len() });
        }
        if let Some(o) = &self.order {
            let mut s = o.clone();
            s.sort_unstable();
            if s != (0..dim).collect::<Vec<_>>() {
                return Err(QciError::BadOrder(self.species.clone()));
            }
        }
        for e in &self.elements {
            atomic_number(e)?;
        }
        Ok(())
    }

    /// The four bundled models.
    pub fn bundled() -> Vec<Self> {
        BUNDLED_MODELS.iter().map(|(_, t)| Self::parse(t).expect("bundled model is valid")).collect()
    }

    /// `w . u + b`.
    pub fn score(&self, u: &[f64]) -> Result<f64, QciError> {
        if u.len() != self.w.len() {
            return Err(QciError::DimensionMismatch { features: u.len(), weights: self.w.len() });
        }
        let dot: f64 = match &self.order {
            None => self.w.iter().zip(u).map(|(w, x)| w * x).sum(),
            Some(o) => self.w.iter().zip(o).map(|(w, &k)| w * u[k]).sum(),
        };
        Ok(dot + self.b)
    }

    /// Fingerprint bit; a score of exactly zero gives `false`.
    pub fn fingerprint(&self, u: &[f64]) -> Result<bool, QciError> {
        Ok(self.score(u)? > 0.0)
    }

    /// Evaluate on atoms given in angstrom with atomic-number charges.
    pub fn fires(&self, positions: &[Vector3<f64>], charges: &[f64]) -> Result<bool, QciError> {
        self.fingerprint(&features(positions, charges, self.p, self.q)?)
    }
}

/// How a species rule decides whether a candidate subset is an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Indicator {
    /// Logistic fingerprint.
    Fingerprint(FingerprintModel),
    /// Every pair within the subset is closer than `max` angstrom.
    DistanceThreshold {
        /// Largest allowed pair distance.
        max: f64,
    },
    /// Constant answer.
    Constant {
        /// The answer.
        value: bool,
    },
}

impl Indicator {
    fn fires(&self, positions: &[Vector3<f64>], charges: &[f64]) -> Result<bool, QciError> {
        match self {
            Indicator::Fingerprint(m) => m.fires(positions, charges),
            Indicator::DistanceThreshold { max } => {
                Ok(positions.iter().enumerate().all(|(i, a)| positions[..i].iter().all(|b| (a - b).norm() < *max)))
            }
            Indicator::Constant { value } => Ok(*value),
        }
    }
}

/// One species: its stoichiometry, indicator and exclusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRule {
    /// Species label.
    pub species: String,
    /// Element symbols of one instance.
    pub elements: Vec<String>,
    /// Instance test.
    pub indicator: Indicator,
    /// Species whose firing instances suppress overlapping instances of this one.
    pub exclude_within: Vec<String>,
}

/// Ordered species rules with a per-species candidate budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRuleSet {
    /// Rules in report order.
    pub rules: Vec<SpeciesRule>,
    /// Largest number of candidate subsets enumerated per species.
    pub budget: u64,
}

/// Default candidate budget per species.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

impl SpeciesRuleSet {
    /// Rules built from the bundled fingerprint models.
    pub fn bundled() -> Self {
        Self::from_models(FingerprintModel::bundled())
    }

    /// Rules built from fingerprint models.
    pub fn from_models(models: Vec<FingerprintModel>) -> Self {
        SpeciesRuleSet {
            rules: models
                .into_iter()
                .map(|m| SpeciesRule {
                    species: m.species.clone(),
                    elements: m.elements.clone(),
                    exclude_within: m.exclude_within.clone(),
                    indicator: Indicator::Fingerprint(m),
                })
                .collect(),
            budget: DEFAULT_BUDGET,
        }
    }

    fn index_of(&self, species: &str) -> Result<usize, QciError> {
        self.rules
            .iter()
            .position(|r| r.species == species)
            .ok_or_else(|| QciError::UnknownSpecies(species.to_string()))
    }
}

/// One frame of ionic positions (angstrom).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Element symbols.
    pub elements: Vec<String>,
    /// Positions in angstrom.
    pub positions: Vec<Vector3<f64>>,
}

impl Frame {
    /// Atomic numbers as charges.
    pub fn charges(&self) -> Result<Vec<f64>, QciError> {
        self.elements.iter().map(|e| atomic_number(e).map(f64::from)).collect()
    }

    fn sorted_roster(&self) -> Vec<&str> {
        let mut r: Vec<&str> = self.elements.iter().map(String::as_str).collect();
        r.sort_unstable();
        r
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// All atom subsets (sorted index lists) matching a stoichiometry.
pub fn candidates(frame: &Frame, elements: &[String], budget: u64, species: &str) -> Result<Vec<Vec<usize>>, QciError> {
    let mut need: BTreeMap<&str, usize> = BTreeMap::new();
    for e in elements {
        *need.entry(e.as_str()).or_default() += 1;
    }
    let pools: Vec<(Vec<usize>, usize)> = need
        .iter()
        .map(|(e, &k)| {
            let idx: Vec<usize> = frame.elements.iter().enumerate().filter(|(_, x)| x == e).map(|(i, _)| i).collect();
            (idx, k)
        })
        .collect();
    let total = pools.iter().fold(1u128, |acc, (idx, k)| acc.saturating_mul(binomial(idx.len(), *k)));
    if total > budget as u128 {
        return Err(QciError::BudgetExceeded { species: species.to_string(), candidates: total, budget });
    }
    if total == 0 || elements.is_empty() {
        return Ok(vec![]);
    }
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for (idx, k) in &pools {
        let combos = combinations(idx, *k);
        out = out
            .iter()
            .flat_map(|prefix| {
                combos.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.extend_from_slice(c);
                    v
                })
            })
            .collect();
    }
    for v in &mut out {
        v.sort_unstable();
    }
    out.sort();
    Ok(out)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Candidates of every rule, each flagged with its indicator bit.
pub type FiringTable = Vec<Vec<(Vec<usize>, bool)>>;

/// Evaluate every candidate subset of every rule.
pub fn firing_table(frame: &Frame, rules: &SpeciesRuleSet) -> Result<FiringTable, QciError> {
    let charges = frame.charges()?;
    rules
        .rules
        .iter()
        .map(|r| {
            candidates(frame, &r.elements, rules.budget, &r.species)?
                .into_iter()
                .map(|c| {
                    let pos: Vec<_> = c.iter().map(|&i| frame.positions[i]).collect();
                    let ch: Vec<_> = c.iter().map(|&i| charges[i]).collect();
                    let bit = r.indicator.fires(&pos, &ch)?;
                    Ok((c, bit))
                })
                .collect()
        })
        .collect()
}

/// Apply exclusions to a firing table.
///
/// A firing candidate is counted unless it shares an atom with a firing
/// candidate of a species listed in its rule's `exclude_within`.
pub fn compile_counts(table: &FiringTable, rules: &SpeciesRuleSet) -> Result<BTreeMap<String, u64>, QciError> {
    let mut out = BTreeMap::new();
    for (ri, rule) in rules.rules.iter().enumerate() {
        let blockers: Vec<&Vec<usize>> = rule
            .exclude_within
            .iter()
            .map(|s| rules.index_of(s))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flat_map(|bi| table[bi].iter().filter(|(_, f)| *f).map(|(c, _)| c))
            .collect();
        let count = table[ri]
            .iter()
            .filter(|(c, fired)| *fired && !blockers.iter().any(|b| b.iter().any(|a| c.contains(a))))
            .count() as u64;
        out.insert(rule.species.clone(), count);
    }
    Ok(out)
}

/// Species counts for one frame.
pub fn species_counts(frame: &Frame, rules: &SpeciesRuleSet) -> Result<BTreeMap<String, u64>, QciError> {
    if frame.elements.len() != frame.positions.len() {
        return Err(QciError::LengthMismatch { positions: frame.positions.len(), charges: frame.elements.len() });
    }
    compile_counts(&firing_table(frame, rules)?, rules)
}

/// Per-frame counts, computed in parallel and returned in frame order.
pub fn classify_trajectory(frames: &[Frame], rules: &SpeciesRuleSet) -> Result<Vec<BTreeMap<String, u64>>, QciError> {
    if let Some(first) = frames.first() {
        let roster = first.sorted_roster();
        if let Some(i) = frames.iter().position(|f| f.sorted_roster() != roster) {
            return Err(QciError::RosterMismatch(i));
        }
    }
    frames.par_iter().map(|f| species_counts(f, rules)).collect()
}

/// Render per-frame counts as CSV with a `frame` column followed by species in rule order.
pub fn counts_csv(counts: &[BTreeMap<String, u64>], rules: &SpeciesRuleSet) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["frame".to_string()];
    header.extend(rules.rules.iter().map(|r| r.species.clone()));
    w.write_record(&header).expect("in-memory write");
    for (i, c) in counts.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(rules.rules.iter().map(|r| c.get(&r.species).copied().unwrap_or(0).to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Parse multi-frame XYZ text (count line, comment line, then `symbol x y z` lines in angstrom).
pub fn parse_xyz(text: &str) -> Result<Vec<Frame>, QciError> {
    let mut lines = text.lines().enumerate().peekable();
    let mut frames = Vec::new();
    let err = |ln: usize, m: &str| QciError::Parse(format!("line {}: {m}", ln + 1));
    while let Some((ln, l)) = lines.next() {
        if l.trim().is_empty() {
            continue;
        }
        let n: usize = l.trim().parse().map_err(|_| err(ln, "expected an atom count"))?;
        lines.next().ok_or_else(|| err(ln, "missing comment line"))?;
        let mut f = Frame { elements: Vec::with_capacity(n), positions: Vec::with_capacity(n) };
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(ln, "truncated frame"))?;
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() < 4 {
                return Err(err(ln, "expected symbol x y z"));
            }
            atomic_number(t[0])?;
            let c: Result<Vec<f64>, _> = t[1..4].iter().map(|s| s.parse::<f64>()).collect();
            let c = c.map_err(|e| err(ln, &e.to_string()))?;
            f.elements.push(t[0].to_string());
            f.positions.push(Vector3::new(c[0], c[1], c[2]));
        }
        frames.push(f);
    }
    Ok(frames)
}

/// Write frames as XYZ text.
pub fn write_xyz(frames: &[Frame]) -> String {
    let mut s = String::new();
    for (i, f) in frames.iter().enumerate() {
        s += &format!("{}\nframe {i}\n", f.elements.len());
        for (e, p) in f.elements.iter().zip(&f.positions) {
            s += &format!("{e} {:.10} {:.10} {:.10}\n", p.x, p.y, p.z);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Translation3};
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn coulomb_matrix_examples() {
        assert_eq!(coulomb_matrix(&[v(0.0, 0.0, 0.0)], &[1.0]).unwrap()[(0, 0)], 0.5);
        let d = 1.128;
        let m = coulomb_matrix(&[v(0.0, 0.0, 0.0), v(0.0, 0.0, d)], &[6.0, 8.0]).unwrap();
        assert_relative_eq!(m[(0, 1)], 48.0 / d, max_relative = 1e-15);
        assert_relative_eq!(m[(0, 0)], 0.5 * 6f64.powf(2.4));
        assert_relative_eq!(m[(1, 1)], 0.5 * 8f64.powf(2.4));
        let s = coulomb_matrix(&[v(0.0, 0.0, 0.0), v(0.0, 0.0, 3.0 * d)], &[6.0, 8.0]).unwrap();
        assert_relative_eq!(s[(0, 1)], m[(0, 1)] / 3.0, max_relative = 1e-15);
        assert_eq!(s[(0, 0)], m[(0, 0)]);
        assert_eq!(
            coulomb_matrix(&[v(1.0, 0.0, 0.0), v(1.0, 0.0, 0.0)], &[1.0, 1.0]),
            Err(QciError::CoincidentAtoms(0, 1))
        );
    }

    #[test]
    fn two_atom_features_by_hand() {
        let d = 0.74;
        let u = features(&[v(0.0, 0.0, 0.0), v(d, 0.0, 0.0)], &[1.0, 1.0], 2, 3).unwrap();
        let (a, c) = (0.5, 1.0 / d);
        let m1 = 2.0 * a * a + 2.0 * c * c;
        // M^2 = [[a^2 + c^2, 2ac], [2ac, a^2 + c^2]].
        let m2 = 2.0 * (a * a + c * c).powi(2) + 2.0 * (2.0 * a * c).powi(2);
        let (ai, ci) = (2.0, d);
        let n1 = 2.0 * ai * ai + 2.0 * ci * ci;
        let n2 = 2.0 * (ai * ai + ci * ci).powi(2) + 2.0 * (2.0 * ai * ci).powi(2);
        let expect =
            [m1, m2, n1, n2, m1 * m1, m2 * m2, n1 * n1, n2 * n2, m1.powi(3), m2.powi(3), n1.powi(3), n2.powi(3)];
        for (x, y) in u.iter().zip(expect) {
            assert_relative_eq!(*x, y, max_relative = 1e-13);
        }
    }

    #[test]
    fn bundled_models_load() {
        let models = FingerprintModel::bundled();
        assert_eq!(models.len(), 4);
        for m in &models {
            assert_eq!(m.w.len(), 12);
            assert_eq!((m.p, m.q), (2, 3));
        }
        let co = &models[1];
        assert_eq!(co.w[9], -2.350e17);
        assert_eq!(co.b, 8.487e2);
        assert_eq!(co.b_shift, 500.0);
        assert_eq!(models[2].b_shift, 2000.0);
        assert_eq!(models[3].w[0], 5.254e-1);
        assert_eq!(models[0].b, -7.954e3);
    }

    #[test]
    fn fingerprint_constant_models() {
        let mut m = FingerprintModel::bundled().remove(3);
        m.w = vec![0.0; 12];
        m.b = 1.0;
        assert!(m.fingerprint(&[123.0; 12]).unwrap());
        m.b = -1.0;
        assert!(!m.fingerprint(&[123.0; 12]).unwrap());
        m.b = 0.0;
        assert!(!m.fingerprint(&[1.0; 12]).unwrap());
        assert!(matches!(m.fingerprint(&[1.0; 3]), Err(QciError::DimensionMismatch { .. })));
    }

    #[test]
    fn h2_score_against_explicit_sum() {
        let m = FingerprintModel::bundled().remove(3);
        let u = features(&[v(0.0, 0.0, 0.0), v(0.74, 0.0, 0.0)], &[1.0, 1.0], 2, 3).unwrap();
        // Term-by-term products written out independently of the model's dot product.
        let w = [
            5.254e-1, -2.254e-2, -5.564e0, -7.897e-1, -1.189e-1, -2.355e-3, -4.304e-1, 3.710e-3, -1.824e-2, -3.551e-5,
            -1.053e-2, -7.813e-5,
        ];
        let mut acc = 1.068e2;
        for k in 0..12 {
            acc += w[k] * u[k];
        }
        assert_relative_eq!(m.score(&u).unwrap(), acc, max_relative = 1e-12);
        assert_eq!(m.fingerprint(&u).unwrap(), acc > 0.0);
    }

    #[test]
    fn order_permutation_is_applied() {
        let mut m = FingerprintModel::bundled().remove(3);
        m.w = (0..12).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        m.b = 0.0;
        let u: Vec<f64> = (0..12).map(|i| i as f64).collect();
        m.order = Some((0..12).rev().collect());
        assert_eq!(m.score(&u).unwrap(), 11.0);
        m.order = Some(vec![0; 12]);
        assert!(matches!(m.validate(), Err(QciError::BadOrder(_))));
    }

    fn stub(species: &str, elements: &[&str], indicator: Indicator, excl: &[&str]) -> SpeciesRule {
        SpeciesRule {
            species: species.into(),
            elements: elements.iter().map(|s| s.to_string()).collect(),
            indicator,
            exclude_within: excl.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn co_rules(co_fires: bool, co2_fires: bool) -> SpeciesRuleSet {
        SpeciesRuleSet {
            rules: vec![
                stub("CO2", &["C", "O", "O"], Indicator::Constant { value: co2_fires }, &[]),
                stub("CO", &["C", "O"], Indicator::Constant { value: co_fires }, &["CO2"]),
            ],
            budget: DEFAULT_BUDGET,
        }
    }

    fn co2_frame() -> Frame {
        Frame {
            elements: vec!["O".into(), "C".into(), "O".into()],
            positions: vec![v(-1.16, 0.0, 0.0), v(0.0, 0.0, 0.0), v(1.16, 0.0, 0.0)],
        }
    }

    #[test]
    fn co_within_co2_is_not_counted() {
        let c = species_counts(&co2_frame(), &co_rules(true, true)).unwrap();
        assert_eq!(c["CO2"], 1);
        assert_eq!(c["CO"], 0);
        let c = species_counts(&co2_frame(), &co_rules(true, false)).unwrap();
        assert_eq!(c["CO"], 2);
    }

    #[test]
    fn empty_frame_and_disjoint_pairs() {
        let empty = Frame { elements: vec![], positions: vec![] };
        let c = species_counts(&empty, &co_rules(true, true)).unwrap();
        assert!(c.values().all(|&n| n == 0));
        let rules = SpeciesRuleSet {
            rules: vec![stub("CO", &["C", "O"], Indicator::DistanceThreshold { max: 1.5 }, &[])],
            budget: DEFAULT_BUDGET,
        };
        let two = Frame {
            elements: vec!["C".into(), "O".into(), "C".into(), "O".into()],
            positions: vec![v(0.0, 0.0, 0.0), v(1.13, 0.0, 0.0), v(10.0, 0.0, 0.0), v(11.13, 0.0, 0.0)],
        };
        assert_eq!(species_counts(&two, &rules).unwrap()["CO"], 2);
    }

    #[test]
    fn budget_and_unknown_species() {
        let mut rules = co_rules(true, true);
        rules.budget = 1;
        assert!(matches!(species_counts(&co2_frame(), &rules), Err(QciError::BudgetExceeded { .. })));
        let mut rules = co_rules(true, true);
        rules.rules[1].exclude_within = vec!["CO3".into()];
        assert_eq!(species_counts(&co2_frame(), &rules), Err(QciError::UnknownSpecies("CO3".into())));
    }

    /// Bitmask oracle: a candidate counts when it fires and its atom mask is disjoint from every firing blocker mask.
    fn oracle(table: &FiringTable, rules: &SpeciesRuleSet) -> Vec<u64> {
        let mask = |c: &Vec<usize>| c.iter().fold(0u64, |m, &i| m | (1 << i));
        rules
            .rules
            .iter()
            .enumerate()
            .map(|(ri, r)| {
                let mut block = Vec::new();
                for s in &r.exclude_within {
                    let bi = rules.rules.iter().position(|x| &x.species == s).unwrap();
                    block.extend(table[bi].iter().filter(|e| e.1).map(|e| mask(&e.0)));
                }
                table[ri].iter().filter(|e| e.1 && block.iter().all(|b| b & mask(&e.0) == 0)).count() as u64
            })
            .collect()
    }

    #[test]
    fn exhaustive_indicator_patterns() {
        // Every composition of up to six C and O atoms; every assignment of indicator bits over all candidates.
        let rules = co_rules(false, false);
        for n in 0..=6usize {
            for carbons in 0..=n {
                let frame = Frame {
                    elements: (0..n).map(|i| if i < carbons { "C".into() } else { "O".into() }).collect(),
                    positions: (0..n).map(|i| v(i as f64, 0.0, 0.0)).collect(),
                };
                let base = firing_table(&frame, &rules).unwrap();
                let total: usize = base.iter().map(Vec::len).sum();
                assert!(total <= 20);
                for bits in 0..(1u32 << total) {
                    let mut t = base.clone();
                    let mut k = 0;
                    for row in &mut t {
                        for e in row.iter_mut() {
                            e.1 = bits >> k & 1 == 1;
                            k += 1;
                        }
                    }
                    let got = compile_counts(&t, &rules).unwrap();
                    let want = oracle(&t, &rules);
                    for (r, w) in rules.rules.iter().zip(want) {
                        assert_eq!(got[&r.species], w);
                    }
                }
            }
        }
    }

    #[test]
    fn trajectory_examples() {
        let rules = SpeciesRuleSet {
            rules: vec![stub("CO", &["C", "O"], Indicator::DistanceThreshold { max: 1.5 }, &[])],
            budget: DEFAULT_BUDGET,
        };
        let bonded =
            Frame { elements: vec!["C".into(), "O".into()], positions: vec![v(0.0, 0.0, 0.0), v(1.13, 0.0, 0.0)] };
        let apart = Frame { positions: vec![v(0.0, 0.0, 0.0), v(5.0, 0.0, 0.0)], ..bonded.clone() };
        let c = classify_trajectory(&[bonded.clone(), apart], &rules).unwrap();
        assert_eq!((c[0]["CO"], c[1]["CO"]), (1, 0));
        let constant = classify_trajectory(&vec![bonded.clone(); 5], &rules).unwrap();
        assert!(constant.windows(2).all(|w| w[0] == w[1]));
        let other = Frame { elements: vec!["C".into(), "N".into()], ..bonded.clone() };
        assert_eq!(classify_trajectory(&[bonded, other], &rules), Err(QciError::RosterMismatch(1)));
        assert!(counts_csv(&c, &rules).starts_with("frame,CO\n0,1\n1,0"));
    }

    #[test]
    fn shuffled_frames_give_identical_counts() {
        let rules = SpeciesRuleSet::bundled();
        let f = Frame {
            elements: vec!["O".into(), "C".into(), "O".into(), "H".into(), "H".into(), "O".into()],
            positions: vec![
                v(-1.16, 0.0, 0.0),
                v(0.0, 0.0, 0.0),
                v(1.16, 0.0, 0.0),
                v(5.0, 0.0, 0.0),
                v(5.74, 0.0, 0.0),
                v(5.3, 0.9, 0.2),
            ],
        };
        let base = species_counts(&f, &rules).unwrap();
        let perm = [4, 2, 0, 5, 1, 3];
        let g = Frame {
            elements: perm.iter().map(|&i| f.elements[i].clone()).collect(),
            positions: perm.iter().map(|&i| f.positions[i]).collect(),
        };
        assert_eq!(species_counts(&g, &rules).unwrap(), base);
    }

    #[test]
    fn xyz_round_trip() {
        let frames = vec![co2_frame(), co2_frame()];
        let parsed = parse_xyz(&write_xyz(&frames)).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].elements, frames[0].elements);
        assert!((parsed[1].positions[2] - frames[1].positions[2]).norm() < 1e-9);
        assert!(parse_xyz("2\nc\nC 0 0 0\n").is_err());
        assert!(parse_xyz("1\nc\nXx 0 0 0\n").is_err());
    }

    fn cloud() -> impl Strategy<Value = (Vec<Vector3<f64>>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|n| {
            (
                proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), n),
                proptest::collection::vec(prop_oneof![Just(1.0), Just(6.0), Just(8.0)], n),
            )
                .prop_map(|(p, z)| (p.into_iter().map(|(a, b, c)| v(a, b, c)).collect(), z))
        })
    }

    fn well_separated(p: &[Vector3<f64>]) -> bool {
        p.iter().enumerate().all(|(i, a)| p[..i].iter().all(|b| (a - b).norm() > 0.3))
    }

    proptest! {
        #[test]
        fn features_permutation_invariant((p, z) in cloud(), seed in any::<u64>()) {
            prop_assume!(well_separated(&p));
            let u = features(&p, &z, 2, 3).unwrap();
            let mut idx: Vec<usize> = (0..p.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let pp: Vec<_> = idx.iter().map(|&i| p[i]).collect();
            let zz: Vec<_> = idx.iter().map(|&i| z[i]).collect();
            let w = features(&pp, &zz, 2, 3).unwrap();
            for (a, b) in u.iter().zip(&w) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn features_rigid_motion_invariant((p, z) in cloud(), r in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), t in (-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0)) {
            prop_assume!(well_separated(&p));
            let iso = Translation3::new(t.0, t.1, t.2) * Rotation3::from_euler_angles(r.0, r.1, r.2);
            let moved: Vec<_> = p.iter().map(|x| (iso * nalgebra::Point3::from(*x)).coords).collect();
            let u = features(&p, &z, 2, 3).unwrap();
            let w = features(&moved, &z, 2, 3).unwrap();
            for (a, b) in u.iter().zip(&w) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn two_atom_monotonicity(d1 in 0.2f64..10.0, dd in 1e-3f64..5.0, z1 in 1.0f64..9.0, z2 in 1.0f64..9.0) {
            let f = |d: f64| features(&[v(0.0, 0.0, 0.0), v(d, 0.0, 0.0)], &[z1, z2], 2, 1).unwrap();
            let (a, b) = (f(d1), f(d1 + dd));
            prop_assert!(b[0] < a[0]);
            prop_assert!(b[2] > a[2]);
        }

        #[test]
        fn intercept_shift_is_monotone(u in proptest::collection::vec(-1e3f64..1e3, 12), b in -1e3f64..1e3, db in 0.0f64..1e3) {
            let mut m = FingerprintModel::bundled().remove(3);
            m.b = b;
            let before = m.fingerprint(&u).unwrap();
            m.b = b + db;
            prop_assert!(!before || m.fingerprint(&u).unwrap());
        }
    }
}
