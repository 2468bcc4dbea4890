//! Toffoli and ancilla cost ledger for one block-encoding call.
//!
//! Every subroutine row is an integer formula in the register widths
//! (`n`, `n-bar`), particle counts and tunable bit widths. Rows with
//! fractional coefficients are evaluated exactly in quarter units and then
//! rounded up to whole Toffolis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while evaluating the cost ledger.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    /// A bit width or the amplification setting is out of range.
    #[error("invalid bit configuration: {0}")]
    InvalidConfig(String),
    /// A row evaluated to a negative count.
    #[error("row `{row}` evaluates to a negative Toffoli count ({value})")]
    NegativeRow { row: String, value: i128 },
}

/// Tunable bit widths and the amplification setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BitConfig {
    /// Rotation precision for PREP over terms.
    pub b_p: u32,
    /// Precision of the kinetic amplitude preparation.
    pub b_t: u32,
    /// `epsilon_T = 2^{-eps_t_exp}`.
    pub eps_t_exp: u32,
    /// Electron momentum arithmetic width.
    pub b: u32,
    /// Ion momentum arithmetic width.
    pub b_bar: u32,
    /// Kinetic reference-state width.
    pub b_k: u32,
    /// Coulomb inequality-test width.
    pub b_g: u32,
    /// Coulomb charge-weight width.
    pub b_kappa: u32,
    /// Species-register width.
    pub b_z: u32,
    /// Ion-selection rotation width.
    pub b_i: u32,
    /// Electron-selection rotation width.
    pub b_eta_el: u32,
    /// Local coefficient width.
    pub b_s: u32,
    /// Keep-probability width for coherent alias sampling.
    pub b_keep: u32,
    /// Nuclear data width.
    pub b_m: u32,
    /// Non-local channel weight width.
    pub b_alpha_l: u32,
    /// Plateau width of the non-local reference state.
    pub b_pl: u32,
    /// Exponential-tail width of the non-local reference state.
    pub b_exp: u32,
    /// Rotation width in the reference-state preparation.
    pub b_rot: u32,
    /// Width of the uniform-superposition comparison value.
    pub b_m_tilde: u32,
    /// `log2 M` for the Legendre inequality test.
    pub log_m: u32,
    /// Amplification rounds `R`; `None` derives it from the instance's reference states.
    pub r: Option<u32>,
}

impl Default for BitConfig {
    fn default() -> Self {
        BitConfig {
            b_p: 16,
            b_t: 16,
            eps_t_exp: 16,
            b: 32,
            b_bar: 32,
            b_k: 16,
            b_g: 16,
            b_kappa: 16,
            b_z: 16,
            b_i: 16,
            b_eta_el: 16,
            b_s: 16,
            b_keep: 16,
            b_m: 16,
            b_alpha_l: 16,
            b_pl: 16,
            b_exp: 16,
            b_rot: 16,
            b_m_tilde: 16,
            log_m: 16,
            r: None,
        }
    }
}

/// Largest supported amplification setting.
pub const R_MAX: u32 = 3;

/// Fallback amplification rounds when no reference-state data is available.
pub const R_FALLBACK: u32 = 2;

impl BitConfig {
    /// Every width as `(name, value)`.
    pub fn widths(&self) -> [(&'static str, u32); 20] {
        [
            ("b_p", self.b_p),
            ("b_t", self.b_t),
            ("eps_t_exp", self.eps_t_exp),
            ("b", self.b),
            ("b_bar", self.b_bar),
            ("b_k", self.b_k),
            ("b_g", self.b_g),
            ("b_kappa", self.b_kappa),
            ("b_z", self.b_z),
            ("b_i", self.b_i),
            ("b_eta_el", self.b_eta_el),
            ("b_s", self.b_s),
            ("b_keep", self.b_keep),
            ("b_m", self.b_m),
            ("b_alpha_l", self.b_alpha_l),
            ("b_pl", self.b_pl),
            ("b_exp", self.b_exp),
            ("b_rot", self.b_rot),
            ("b_m_tilde", self.b_m_tilde),
            ("log_m", self.log_m),
        ]
    }

    /// Check widths are at least 4 and `R` is at most 3.
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, v) in self.widths() {
            if v < 4 {
                return Err(CostError::InvalidConfig(format!("{name} = {v} is below 4")));
            }
            if v > 1024 {
                return Err(CostError::InvalidConfig(format!("{name} = {v} exceeds 1024")));
            }
        }
        if let Some(r) = self.r {
            if r > R_MAX {
                return Err(CostError::InvalidConfig(format!("R = {r} exceeds {R_MAX}")));
            }
        }
        Ok(())
    }
}

/// Register and particle sizes that enter the cost formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostContext {
    /// Electron qubits per axis.
    pub n: [u32; 3],
    /// Ion qubits per axis.
    pub nbar: [u32; 3],
    /// Valence electrons.
    pub eta_val: u64,
    /// Pseudoions.
    pub eta_ion: u64,
    /// Number of distinct pseudoion types.
    pub z_types: u64,
    /// Amplification rounds used in the non-local reference-state rows.
    pub r: u32,
}

impl CostContext {
    fn eta(&self) -> u64 {
        self.eta_val + self.eta_ion
    }
    fn n_sum(&self) -> i128 {
        self.n.iter().map(|&x| x as i128).sum()
    }
    fn nbar_sum(&self) -> i128 {
        self.nbar.iter().map(|&x| x as i128).sum()
    }
    fn n_tilde(&self) -> i128 {
        self.n.iter().map(|&x| (x as i128).pow(2)).sum()
    }
    fn nbar_tilde(&self) -> i128 {
        self.nbar.iter().map(|&x| (x as i128).pow(2)).sum()
    }
    fn n_max(&self) -> i128 {
        *self.n.iter().max().unwrap() as i128
    }
    fn nbar_max(&self) -> i128 {
        *self.nbar.iter().max().unwrap() as i128
    }
}

/// Hamiltonian term a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Term {
    /// Subroutines shared by every term.
    Shared,
    /// Electron and ion kinetic energy.
    Kinetic,
    /// Electron-electron and ion-ion Coulomb interaction.
    Coulomb,
    /// Local pseudopotential.
    Local,
    /// Non-local pseudopotential.
    Nonlocal,
}

impl Term {
    /// All terms in report order.
    pub const ALL: [Term; 5] = [Term::Shared, Term::Kinetic, Term::Coulomb, Term::Local, Term::Nonlocal];

    /// Short name.
    pub fn name(self) -> &'static str {
        match self {
            Term::Shared => "shared",
            Term::Kinetic => "kinetic",
            Term::Coulomb => "coulomb",
            Term::Local => "local",
            Term::Nonlocal => "nonlocal",
        }
    }
}

/// One subroutine row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostRow {
    /// Subroutine name.
    pub name: String,
    /// Term the row belongs to.
    pub term: Term,
    /// Toffoli gates.
    pub toffolis: u64,
    /// Ancilla qubits.
    pub ancillae: u64,
}

/// Per-term totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermTotal {
    /// The term.
    pub term: Term,
    /// Sum of its rows.
    pub toffolis: u64,
    /// Fraction of the grand total.
    pub fraction: f64,
}

/// Full cost ledger of one block-encoding call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Context the ledger was evaluated for.
    pub context: CostContext,
    /// Every subroutine row in table order.
    pub rows: Vec<CostRow>,
    /// Totals per term.
    pub terms: Vec<TermTotal>,
    /// Sum of all rows.
    pub grand_total: u64,
    /// Peak ancilla estimate (largest single row, rows taken as sequential).
    pub peak_ancillae: u64,
}

impl CostReport {
    /// Total for one term.
    pub fn term_total(&self, term: Term) -> u64 {
        self.terms.iter().find(|t| t.term == term).map_or(0, |t| t.toffolis)
    }
}

fn clog2(x: u64) -> i128 {
    if x <= 1 {
        0
    } else {
        (64 - (x - 1).leading_zeros()) as i128
    }
}

/// Quarter-unit value to Toffolis, rounded up.
fn quarters(q: i128) -> i128 {
    q.div_euclid(4) + i128::from(q.rem_euclid(4) != 0)
}

struct Rows {
    term: Term,
    zero: bool,
    out: Vec<CostRow>,
}

impl Rows {
    fn new(term: Term, zero: bool) -> Self {
        Rows { term, zero, out: Vec::new() }
    }

    fn push(&mut self, name: &str, toffolis: i128, ancillae: i128) -> Result<(), CostError> {
        let (t, a) = if self.zero { (0, 0) } else { (toffolis, ancillae) };
        if t < 0 {
            return Err(CostError::NegativeRow { row: name.to_string(), value: t });
        }
        self.out.push(CostRow {
            name: name.to_string(),
            term: self.term,
            toffolis: t as u64,
            ancillae: a.max(0) as u64,
        });
        Ok(())
    }
}

/// Shared subroutines: PREP over terms and the four SWUP rows.
pub fn cost_shared(ctx: &CostContext, cfg: &BitConfig) -> Result<Vec<CostRow>, CostError> {
    let mut rows = Rows::new(Term::Shared, false);
    let (ev, ei) = (ctx.eta_val as i128, ctx.eta_ion as i128);
    let prep = 3 * cfg.b_p as i128 + 3;
    let swup_el = if ev == 0 { 0 } else { 2 * ctx.n_sum() * ev + 2 * ev - 4 };
    let swup_ion = if ei == 0 { 0 } else { 2 * ctx.nbar_sum() * ei + 2 * ei - 4 };
    rows.push("PREP_terms", prep, 2)?;
    rows.push("SWUP_el", swup_el, 0)?;
    rows.push("SWUP_el_dag", swup_el, 0)?;
    rows.push("SWUP_ion", swup_ion, 0)?;
    rows.push("SWUP_ion_dag", swup_ion, 0)?;
    rows.push("PREP_terms_dag", prep, 2)?;
    Ok(rows.out)
}

/// Kinetic-term rows.
pub fn cost_kinetic(ctx: &CostContext, cfg: &BitConfig) -> Result<Vec<CostRow>, CostError> {
    let mut rows = Rows::new(Term::Kinetic, ctx.eta() == 0);
    let log_eta = clog2(ctx.eta());
    let log_eps = cfg.eps_t_exp as i128 + 1;
    let (b, bb, bt, bk) = (cfg.b as i128, cfg.b_bar as i128, cfg.b_t as i128, cfg.b_k as i128);
    let prep0 = 6 * log_eps + 13 * log_eta + 8 * bt - 30;
    let prep0_anc = log_eps.max(log_eta).max(bt);
    let refstate = log_eta + 7 * b + 7 * bb + 4 * bk - 12;
    let ref_anc = (bb + 1).max(bk);
    let (nb, nbt, nbm) = (ctx.nbar_sum(), ctx.nbar_tilde(), ctx.nbar_max());
    let comp = quarters(10 * nbt + 8 * nb * nb + 16 * bb * nb - 8 * nbm * (nbm + bb));
    rows.push("PREP_0", prep0, prep0_anc)?;
    rows.push("kinetic reference state", refstate, ref_anc)?;
    rows.push("compute |k_P|^2", comp, bb)?;
    rows.push("kinetic inequality test", bb + b, bb + b)?;
    rows.push("uncompute |k_P|^2", comp, bb)?;
    rows.push("kinetic reference state dag", refstate, ref_anc)?;
    rows.push("PREP_0_dag", prep0, prep0_anc)?;
    Ok(rows.out)
}

/// Coulomb-term rows.
pub fn cost_coulomb(ctx: &CostContext, cfg: &BitConfig) -> Result<Vec<CostRow>, CostError> {
    let mut rows = Rows::new(Term::Coulomb, ctx.eta() == 0);
    let ev = ctx.eta_val as i128;
    let bracket = ev + 5 * clog2(ctx.eta()) + 2 * clog2(2 * ctx.eta_val) + 2 * cfg.b_kappa as i128 - 8;
    let anc1 = clog2(2 * ctx.eta_val);
    let bg = cfg.b_g as i128;
    let (n, nt, nm) = (ctx.n_sum(), ctx.n_tilde(), ctx.n_max());
    let (nb, nbt, nbm) = (ctx.nbar_sum(), ctx.nbar_tilde(), ctx.nbar_max());
    rows.push("PREP_1", 6 * bracket, anc1)?;
    rows.push("PREP_coul_el", 5 * nt + 4 * n * n + 8 * bg * n, nt)?;
    rows.push("PREP_coul_ion", 5 * nbt + 4 * nb * nb + 8 * bg * nb, nbt)?;
    rows.push("SEL_coul_el", 8 * n, nm)?;
    rows.push("SEL_coul_ion", 8 * nb, nbm)?;
    rows.push("PREP_coul_ion_dag", quarters(10 * nbt + 8 * nb * nb + 16 * bg * nb), 0)?;
    rows.push("PREP_coul_el_dag", quarters(10 * nt + 8 * n * n + 16 * bg * n), 0)?;
    rows.push("PREP_1_dag", 2 * bracket, anc1)?;
    Ok(rows.out)
}

/// Local-term rows.
pub fn cost_local(ctx: &CostContext, cfg: &BitConfig) -> Result<Vec<CostRow>, CostError> {
    let mut rows = Rows::new(Term::Local, ctx.eta() == 0);
    let z = ctx.z_types as i128;
    let (bz, bi, bel, bs, bkeep) =
        (cfg.b_z as i128, cfg.b_i as i128, cfg.b_eta_el as i128, cfg.b_s as i128, cfg.b_keep as i128);
    let log_ev = clog2(ctx.eta_val);
    let log_ei = clog2(ctx.eta_ion);
    let p2el = 7 * log_ev + 2 * bel - 6;
    let p2el_anc = bz.max(log_ev);
    let p2ion = 6 * z + clog2(ctx.z_types) * (bz - 3) + 7 * log_ei + 2 * bi - 6;
    let p2ion_anc = bz + bi.max(log_ei);
    let ploc1 = z * (2 * bs + bkeep + 25);
    let nb = ctx.nbar_sum();
    rows.push("PREP_2_el", p2el, p2el_anc)?;
    rows.push("PREP_2_ion", p2ion, p2ion_anc)?;
    rows.push("PREP_loc_1", ploc1, 2 * bkeep + 3)?;
    rows.push("PREP_loc_2", 0, 0)?;
    rows.push("SEL_loc", 8 * nb, nb)?;
    rows.push("PREP_loc_2_dag", 0, 0)?;
    rows.push("PREP_loc_1_dag", ploc1, 0)?;
    rows.push("PREP_2_ion_dag", p2ion, p2ion_anc)?;
    rows.push("PREP_2_el_dag", p2el, p2el_anc)?;
    Ok(rows.out)
}

/// Non-local-term rows.
pub fn cost_nonlocal(ctx: &CostContext, cfg: &BitConfig) -> Result<Vec<CostRow>, CostError> {
    let mut rows = Rows::new(Term::Nonlocal, ctx.eta() == 0);
    let z = ctx.z_types as i128;
    let r = ctx.r as i128;
    let (b, bz, bm, bmt) = (cfg.b as i128, cfg.b_z as i128, cfg.b_m as i128, cfg.b_m_tilde as i128);
    let (bal, bkeep, bpl, bexp, brot) =
        (cfg.b_alpha_l as i128, cfg.b_keep as i128, cfg.b_pl as i128, cfg.b_exp as i128, cfg.b_rot as i128);
    let (n, nt, nm) = (ctx.n_sum(), ctx.n_tilde(), ctx.n_max());
    let nb = ctx.nbar_sum();
    let log9z = clog2(9 * ctx.z_types);

    let p3ion = 4 * z + clog2(ctx.z_types) * (bz - 3) - 2;
    let nl1 = 11 * z + 3 * log9z + 2 * bal + bkeep - 8;
    let psi = (1 + 2 * r) * (12 * nt + 74 * n + 4 * n * n + 6 * n * bpl + 6 * n * bexp + 3 * brot + 8);
    let gbar = (1 + r) * quarters(16 * nt + 8 * n * n + 28 * b * n + 51 * b * b + 128 * b + 464 - 8 * nm * (nm + b));
    let ineq = (1 + r) * (b + bmt);
    let arith = quarters(20 * nt + 20 * n * n + 32 * b * n + 21 * b * b + 26 * b - 8 * nm * (nm + b) - 24);
    let m = b.max(cfg.log_m as i128);

    rows.push("load zeta", ctx.eta_ion as i128, 5 + bm)?;
    rows.push("PREP_3_el", 0, 0)?;
    rows.push("PREP_3_ion", p3ion, bz)?;
    rows.push("PREP_NL_1", nl1, 2 * bkeep + log9z)?;
    rows.push("reference state psi_G~", psi, 2 * n + bexp.max(bpl))?;
    rows.push("prepare G-bar", gbar, 65 * b)?;
    rows.push("NL inequality test", ineq, b + 2 * bmt)?;
    rows.push("Legendre arithmetic", arith, 0)?;
    rows.push("Legendre inequality test", 2 * m * m + m, 2 * m + 1)?;
    rows.push("Legendre arithmetic dag", arith, 0)?;
    rows.push("nuclear momentum update", 2 * nb, nb)?;
    rows.push("NL inequality test dag", ineq, 0)?;
    rows.push("unprepare G-bar", gbar, 0)?;
    rows.push("unprepare psi_G~", psi, 0)?;
    rows.push("PREP_NL_1_dag", nl1, 0)?;
    rows.push("PREP_3_ion_dag", p3ion, 0)?;
    rows.push("PREP_3_el_dag", 0, 0)?;
    Ok(rows.out)
}

/// Assemble the full ledger of one block-encoding call.
pub fn block_encoding_cost(ctx: &CostContext, cfg: &BitConfig) -> Result<CostReport, CostError> {
    cfg.validate()?;
    let mut rows = cost_shared(ctx, cfg)?;
    rows.extend(cost_kinetic(ctx, cfg)?);
    rows.extend(cost_coulomb(ctx, cfg)?);
    rows.extend(cost_local(ctx, cfg)?);
    rows.extend(cost_nonlocal(ctx, cfg)?);
    let grand_total: u64 = rows.iter().map(|r| r.toffolis).sum();
    let terms = Term::ALL
        .iter()
        .map(|&term| {
            let t: u64 = rows.iter().filter(|r| r.term == term).map(|r| r.toffolis).sum();
            TermTotal {
                term,
                toffolis: t,
                fraction: if grand_total == 0 { 0.0 } else { t as f64 / grand_total as f64 },
            }
        })
        .collect();
    let peak_ancillae = rows.iter().map(|r| r.ancillae).max().unwrap_or(0);
    Ok(CostReport { context: *ctx, rows, terms, grand_total, peak_ancillae })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nh3bf3(r: u32) -> CostContext {
        CostContext { n: [6, 6, 7], nbar: [8, 8, 9], eta_val: 32, eta_ion: 8, z_types: 4, r }
    }

    fn row(rows: &[CostRow], name: &str) -> u64 {
        rows.iter().find(|r| r.name == name).unwrap().toffolis
    }

    #[test]
    fn shared_examples() {
        let cfg = BitConfig::default();
        let rows = cost_shared(&nh3bf3(2), &cfg).unwrap();
        assert_eq!(row(&rows, "SWUP_el"), 1276);
        assert_eq!(row(&rows, "SWUP_ion"), 412);
        let mut tiny = nh3bf3(2);
        tiny.n = [1, 0, 0];
        tiny.eta_val = 2;
        assert_eq!(row(&cost_shared(&tiny, &cfg).unwrap(), "SWUP_el"), 4);
    }

    #[test]
    fn kinetic_examples() {
        let cfg = BitConfig { eps_t_exp: 15, b_t: 15, ..BitConfig::default() };
        let rows = cost_kinetic(&nh3bf3(2), &cfg).unwrap();
        // ceil(log2(2 / 2^-15)) = 16, ceil(log2 40) = 6.
        assert_eq!(row(&rows, "PREP_0"), 6 * 16 + 13 * 6 + 8 * 15 - 30);
        assert_eq!(row(&rows, "kinetic inequality test"), (cfg.b + cfg.b_bar) as u64);
    }

    #[test]
    fn prep0_hand_value() {
        // eta = 40, epsilon_T = 2^-15 read as ceil(log 2/eps) = 15 in the hand example,
        // b_T = 15: 6*15 + 13*6 + 8*15 - 30 = 258.
        let cfg = BitConfig { eps_t_exp: 14, b_t: 15, ..BitConfig::default() };
        let rows = cost_kinetic(&nh3bf3(2), &cfg).unwrap();
        assert_eq!(row(&rows, "PREP_0"), 258);
    }

    #[test]
    fn coulomb_examples() {
        let cfg = BitConfig::default();
        let rows = cost_coulomb(&nh3bf3(2), &cfg).unwrap();
        assert_eq!(row(&rows, "SEL_coul_el"), 152);
        assert_eq!(row(&rows, "SEL_coul_ion"), 200);
        assert_eq!(row(&rows, "PREP_coul_el"), 5 * 121 + 4 * 361 + 8 * 16 * 19);
        let bracket = 32 + 5 * 6 + 2 * 6 + 2 * 16 - 8;
        assert_eq!(row(&rows, "PREP_1"), 6 * bracket);
        assert_eq!(row(&rows, "PREP_1_dag"), 2 * bracket);
    }

    #[test]
    fn local_examples() {
        let cfg = BitConfig { b_s: 8, b_keep: 8, ..BitConfig::default() };
        let rows = cost_local(&nh3bf3(2), &cfg).unwrap();
        assert_eq!(row(&rows, "SEL_loc"), 200);
        assert_eq!(row(&rows, "PREP_loc_2"), 0);
        assert_eq!(row(&rows, "PREP_loc_2_dag"), 0);
        assert_eq!(row(&rows, "PREP_loc_1"), 196);
    }

    #[test]
    fn nonlocal_examples() {
        let cfg = BitConfig { b_pl: 8, b_exp: 8, b_rot: 8, ..BitConfig::default() };
        let rows = cost_nonlocal(&nh3bf3(2), &cfg).unwrap();
        // 5 * (1452 + 1406 + 1444 + 912 + 912 + 24 + 8) = 5 * 6158.
        assert_eq!(row(&rows, "reference state psi_G~"), 30790);
        assert_eq!(row(&rows, "load zeta"), 8);
        let (n, nt, nm, b) = (19u64, 121u64, 7u64, 32u64);
        let arith = 5 * nt + 5 * n * n + 8 * b * n + 21 * b * b / 4 + 13 * b / 2 - 2 * nm * (nm + b) - 6;
        assert_eq!(row(&rows, "Legendre arithmetic"), arith);
    }

    #[test]
    fn zero_particles_leave_only_prep_terms() {
        let ctx = CostContext { n: [6, 6, 7], nbar: [8, 8, 9], eta_val: 0, eta_ion: 0, z_types: 0, r: 2 };
        let rep = block_encoding_cost(&ctx, &BitConfig::default()).unwrap();
        for r in &rep.rows {
            assert_eq!(r.toffolis > 0, r.name.starts_with("PREP_terms"), "{}", r.name);
        }
    }

    #[test]
    fn nonlocal_dominates_and_swups_dominate_shared() {
        let rep = block_encoding_cost(&nh3bf3(1), &BitConfig::default()).unwrap();
        let nl = rep.term_total(Term::Nonlocal);
        for t in Term::ALL {
            assert!(rep.term_total(t) <= nl);
        }
        let shared: Vec<_> = rep.rows.iter().filter(|r| r.term == Term::Shared).collect();
        let swup: u64 = shared.iter().filter(|r| r.name.starts_with("SWUP")).map(|r| r.toffolis).sum();
        assert!(2 * swup > rep.term_total(Term::Shared));
        let frac: f64 = rep.terms.iter().map(|t| t.fraction).sum();
        assert!((frac - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let cfg = BitConfig { b_g: 3, ..BitConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = BitConfig { r: Some(4), ..BitConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn minimum_widths_positive() {
        let cfg = BitConfig {
            b_p: 4,
            b_t: 4,
            eps_t_exp: 4,
            b: 4,
            b_bar: 4,
            b_k: 4,
            b_g: 4,
            b_kappa: 4,
            b_z: 4,
            b_i: 4,
            b_eta_el: 4,
            b_s: 4,
            b_keep: 4,
            b_m: 4,
            b_alpha_l: 4,
            b_pl: 4,
            b_exp: 4,
            b_rot: 4,
            b_m_tilde: 4,
            log_m: 4,
            r: Some(0),
        };
        let ctx = CostContext { n: [2, 2, 2], nbar: [2, 2, 2], eta_val: 1, eta_ion: 1, z_types: 1, r: 0 };
        for r in cost_kinetic(&ctx, &cfg).unwrap() {
            assert!(r.toffolis > 0, "{}", r.name);
        }
    }

    #[test]
    fn determinism() {
        let a = serde_json::to_string(&block_encoding_cost(&nh3bf3(2), &BitConfig::default()).unwrap()).unwrap();
        let b = serde_json::to_string(&block_encoding_cost(&nh3bf3(2), &BitConfig::default()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    fn arb_cfg() -> impl Strategy<Value = BitConfig> {
        prop::collection::vec(4u32..40, 20).prop_map(|v| BitConfig {
            b_p: v[0],
            b_t: v[1],
            eps_t_exp: v[2],
            b: v[3],
            b_bar: v[4],
            b_k: v[5],
            b_g: v[6],
            b_kappa: v[7],
            b_z: v[8],
            b_i: v[9],
            b_eta_el: v[10],
            b_s: v[11],
            b_keep: v[12],
            b_m: v[13],
            b_alpha_l: v[14],
            b_pl: v[15],
            b_exp: v[16],
            b_rot: v[17],
            b_m_tilde: v[18],
            log_m: v[19],
            r: None,
        })
    }

    fn arb_ctx() -> impl Strategy<Value = CostContext> {
        (prop::array::uniform3(2u32..12), prop::array::uniform3(2u32..12), 1u64..800, 1u64..300, 1u64..8, 0u32..=3)
            .prop_map(|(n, nbar, eta_val, eta_ion, z_types, r)| CostContext { n, nbar, eta_val, eta_ion, z_types, r })
    }

    fn totals(ctx: &CostContext, cfg: &BitConfig) -> Vec<u64> {
        block_encoding_cost(ctx, cfg).unwrap().rows.iter().map(|r| r.toffolis).collect()
    }

    proptest! {
        #[test]
        fn monotone_in_bit_widths(cfg in arb_cfg(), ctx in arb_ctx(), which in 0usize..20) {
            let base = totals(&ctx, &cfg);
            let mut up = cfg.clone();
            let field: &mut u32 = match which {
                0 => &mut up.b_p, 1 => &mut up.b_t, 2 => &mut up.eps_t_exp, 3 => &mut up.b,
                4 => &mut up.b_bar, 5 => &mut up.b_k, 6 => &mut up.b_g, 7 => &mut up.b_kappa,
                8 => &mut up.b_z, 9 => &mut up.b_i, 10 => &mut up.b_eta_el, 11 => &mut up.b_s,
                12 => &mut up.b_keep, 13 => &mut up.b_m, 14 => &mut up.b_alpha_l, 15 => &mut up.b_pl,
                16 => &mut up.b_exp, 17 => &mut up.b_rot, 18 => &mut up.b_m_tilde, _ => &mut up.log_m,
            };
            *field += 1;
            for (a, b) in base.iter().zip(totals(&ctx, &up)) {
                prop_assert!(b >= *a);
            }
        }

        #[test]
        fn monotone_in_sizes(cfg in arb_cfg(), ctx in arb_ctx(), which in 0usize..8) {
            let base = totals(&ctx, &cfg);
            let mut up = ctx;
            match which {
                0..=2 => up.n[which] += 1,
                3..=5 => up.nbar[which - 3] += 1,
                6 => up.eta_val += 1,
                _ => up.eta_ion += 1,
            }
            for (a, b) in base.iter().zip(totals(&up, &cfg)) {
                prop_assert!(b >= *a);
            }
        }

        #[test]
        fn grand_total_is_row_sum(cfg in arb_cfg(), ctx in arb_ctx()) {
            let rep = block_encoding_cost(&ctx, &cfg).unwrap();
            prop_assert_eq!(rep.grand_total, rep.rows.iter().map(|r| r.toffolis).sum::<u64>());
            prop_assert_eq!(rep.grand_total, rep.terms.iter().map(|t| t.toffolis).sum::<u64>());
        }
    }
}
