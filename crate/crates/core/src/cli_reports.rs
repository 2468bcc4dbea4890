//! Instance catalog and report assembly.
//!
//! Instance files name a cell, cutoff targets and a pseudoion census. Loading
//! derives the three bases and particle counts; a full report chains the
//! rescaling sums, the cost ledger and evolution plans into one serializable
//! bundle with CSV views.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::cell_basis::{
    basis_from_qubits, basis_size, build_basis, system_qubits, BasisRole, BasisSpec, ShapeTag, SimulationCell,
    BOHR_ANGSTROM, DEFAULT_TRUNC_KAPPA,
};
use crate::evolution_planner::{asymptotic_terms, time_sweep, AsymptoticTerms, EvolutionPlan, AU_PER_FS};
use crate::pseudopotential::{bundled_table, PseudoIonParams};
use crate::qrs_design::{
    local_scan, nonlocal_channels, nonlocal_rounds, nonlocal_scan, type3_scan, QrsParams, ScanReport,
};
use crate::rescaling::{rescaling_report, RescalingInput, RescalingReport, SpeciesCount};
use crate::toffoli_model::{block_encoding_cost, BitConfig, CostContext, CostReport, Term};
use crate::Error;

/// Version tag written into every JSON bundle.
pub const SCHEMA_VERSION: &str = "pwqre-report/1";

/// Errors raised by the instance catalog and report writers.
#[derive(Debug, ThisError, Clone, PartialEq)]
pub enum ReportError {
    /// A census label has no pseudopotential record.
    #[error("instance {instance}: unknown species `{label}`")]
    UnknownSpecies { instance: String, label: String },
    /// Declared particle counts disagree with the census.
    #[error("instance {instance}: declared eta {declared:?} but the census gives {derived:?}")]
    EtaMismatch { instance: String, declared: [u64; 3], derived: [u64; 3] },
    /// No bundled instance has this name.
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    /// Structured text could not be parsed.
    #[error("{0}")]
    Toml(String),
    /// File-system failure.
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    /// A time argument could not be read.
    #[error("invalid time `{0}` (use e.g. 2.5, 2.5au or 0.1fs)")]
    InvalidTime(String),
    /// JSON serialization failed.
    #[error("serialization: {0}")]
    Serialize(String),
}

impl ReportError {
    /// True for failures that are not caused by the input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, ReportError::Serialize(_))
    }
}

fn io_err(path: &Path, e: std::io::Error) -> ReportError {
    ReportError::Io { path: path.display().to_string(), msg: e.to_string() }
}

/// Length unit of cell edges in an instance file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    /// Atomic units.
    #[default]
    Bohr,
    /// Angstrom.
    Angstrom,
}

/// Cell section of an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    /// `cuboid`, `rhombohedron-120` or `general`.
    pub shape: ShapeTag,
    /// Unit of `lengths`.
    #[serde(default)]
    pub units: LengthUnit,
    /// Edge lengths.
    pub lengths: [f64; 3],
}

/// A scalar cutoff or one value per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cutoff {
    /// Same target on every axis.
    Scalar(f64),
    /// Per-axis targets.
    PerAxis([f64; 3]),
}

impl Cutoff {
    /// Per-axis targets.
    pub fn axes(self) -> [f64; 3] {
        match self {
            Cutoff::Scalar(c) => [c; 3],
            Cutoff::PerAxis(c) => c,
        }
    }
}

fn default_trunc_cutoff() -> Cutoff {
    Cutoff::Scalar(1.0)
}

fn default_kappa() -> f64 {
    DEFAULT_TRUNC_KAPPA
}

/// Cutoff section of an instance file (atomic units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    /// Electron cutoff target.
    pub electron: Cutoff,
    /// Ion cutoff target.
    pub ion: Cutoff,
    /// Ion-ion truncation target.
    #[serde(default = "default_trunc_cutoff")]
    pub trunc: Cutoff,
    /// Scale factor of the truncation rule.
    #[serde(default = "default_kappa")]
    pub trunc_kappa: f64,
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    /// Instance name.
    pub name: String,
    /// Declared `(eta_val, eta_ion, eta)`.
    pub eta: [u64; 3],
    /// Simulation cell.
    pub cell: CellSection,
    /// Cutoff targets.
    pub cutoffs: CutoffSection,
    /// Species label to count.
    pub census: BTreeMap<String, u64>,
    /// Optional bit widths.
    #[serde(default)]
    pub bits: Option<BitConfig>,
}

/// A fully derived instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    /// Instance name.
    pub name: String,
    /// Simulation cell in Bohr.
    pub cell: SimulationCell,
    /// Cutoff targets as given.
    pub cutoffs: CutoffSection,
    /// Pseudoion census with parameters.
    pub census: Vec<SpeciesCount>,
    /// Bit widths.
    pub bits: BitConfig,
    /// Valence electrons.
    pub eta_val: u64,
    /// Pseudoions.
    pub eta_ion: u64,
    /// All particles.
    pub eta: u64,
    /// Electron basis `G`.
    pub electron: BasisSpec,
    /// Ion basis `G-bar`.
    pub ion: BasisSpec,
    /// Truncated ion exchange basis.
    pub trunc: BasisSpec,
}

/// Bundled instance files, `(file stem, contents)`.
pub const BUILTIN_INSTANCES: [(&str, &str); 7] = [
    ("nh3bf3", include_str!("../data/instances/nh3bf3.toml")),
    ("dmtm_molecular", include_str!("../data/instances/dmtm_molecular.toml")),
    ("dmtm_3x3", include_str!("../data/instances/dmtm_3x3.toml")),
    ("dmtm_5x5", include_str!("../data/instances/dmtm_5x5.toml")),
    ("dmtm_9x9", include_str!("../data/instances/dmtm_9x9.toml")),
    ("wgs_2x3x3", include_str!("../data/instances/wgs_2x3x3.toml")),
    ("wgs_2x5x5", include_str!("../data/instances/wgs_2x5x5.toml")),
];

impl InstanceFile {
    /// Parse instance text.
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        toml::from_str(text).map_err(|e| ReportError::Toml(e.to_string()))
    }

    /// Derive bases and counts against a pseudopotential table.
    pub fn derive(&self, table: &[PseudoIonParams]) -> Result<InstanceSpec, Error> {
        let mut census = Vec::with_capacity(self.census.len());
        for (label, &count) in &self.census {
            let params = table
                .iter()
                .find(|p| &p.label == label)
                .ok_or_else(|| ReportError::UnknownSpecies { instance: self.name.clone(), label: label.clone() })?;
            census.push(SpeciesCount { params: params.clone(), count });
        }
        let eta_val: u64 = census.iter().map(|s| s.count * s.params.z_pi as u64).sum();
        let eta_ion: u64 = census.iter().map(|s| s.count).sum();
        let derived = [eta_val, eta_ion, eta_val + eta_ion];
        if derived != self.eta {
            return Err(ReportError::EtaMismatch { instance: self.name.clone(), declared: self.eta, derived }.into());
        }
        let scale = match self.cell.units {
            LengthUnit::Bohr => 1.0,
            LengthUnit::Angstrom => 1.0 / BOHR_ANGSTROM,
        };
        let cell = SimulationCell::from_lengths(self.cell.shape, self.cell.lengths.map(|l| l * scale));
        let bits = self.bits.clone().unwrap_or_default();
        bits.validate()?;
        let kappa = self.cutoffs.trunc_kappa;
        Ok(InstanceSpec {
            name: self.name.clone(),
            electron: build_basis(&cell, self.cutoffs.electron.axes(), BasisRole::Electron, kappa)?,
            ion: build_basis(&cell, self.cutoffs.ion.axes(), BasisRole::Ion, kappa)?,
            trunc: build_basis(&cell, self.cutoffs.trunc.axes(), BasisRole::IonTrunc, kappa)?,
            cell,
            cutoffs: self.cutoffs.clone(),
            census,
            bits,
            eta_val,
            eta_ion,
            eta: eta_val + eta_ion,
        })
    }
}

/// Parse and derive instance text against the bundled pseudopotential table.
pub fn parse_instance(text: &str) -> Result<InstanceSpec, Error> {
    InstanceFile::parse(text)?.derive(&bundled_table())
}

/// Load an instance file.
pub fn load_instance(path: &Path) -> Result<InstanceSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_instance(&text)
}

/// A bundled instance by file stem or by its `name` field (case-insensitive).
pub fn builtin_instance(name: &str) -> Result<InstanceSpec, Error> {
    let key = name.to_ascii_lowercase();
    for (stem, text) in BUILTIN_INSTANCES {
        let file = InstanceFile::parse(text)?;
        if stem == key || file.name.to_ascii_lowercase() == key {
            return file.derive(&bundled_table());
        }
    }
    Err(ReportError::UnknownInstance(name.to_string()).into())
}

/// All bundled instances in catalog order.
pub fn builtin_instances() -> Result<Vec<InstanceSpec>, Error> {
    BUILTIN_INSTANCES.iter().map(|(_, t)| parse_instance(t)).collect()
}

/// Resolve an `--instance` argument: an existing path, else a bundled name.
pub fn resolve_instance(arg: &str) -> Result<InstanceSpec, Error> {
    let p = Path::new(arg);
    if p.is_file() {
        load_instance(p)
    } else {
        builtin_instance(arg)
    }
}

/// Parse a time such as `2.5`, `2.5au` or `0.1fs` into atomic units.
pub fn parse_time(s: &str) -> Result<f64, ReportError> {
    let t = s.trim();
    let (num, scale) = if let Some(v) = t.strip_suffix("fs") {
        (v, AU_PER_FS)
    } else if let Some(v) = t.strip_suffix("au") {
        (v, 1.0)
    } else {
        (t, 1.0)
    };
    num.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(|v| v * scale)
        .ok_or_else(|| ReportError::InvalidTime(s.to_string()))
}

/// Electron basis on which amplification rounds are determined: the NH3BF3 box at n = (6, 6, 7).
pub fn rounds_reference_basis() -> BasisSpec {
    basis_from_qubits(&SimulationCell::cuboid(18.8973, 18.8973, 28.35), [6, 6, 7], BasisRole::Electron)
        .expect("reference basis is valid")
}

/// Amplification rounds for an instance: the configured value, else the largest non-local requirement (at least 1).
pub fn resolve_rounds(inst: &InstanceSpec, qp: &QrsParams) -> Result<u32, Error> {
    if let Some(r) = inst.bits.r {
        return Ok(r);
    }
    let species: Vec<&PseudoIonParams> = inst.census.iter().map(|s| &s.params).collect();
    Ok(nonlocal_rounds(&species, &rounds_reference_basis(), qp)?.max(1))
}

/// Basis sizes and widths of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSummary {
    /// `|G|`.
    pub g_size: u64,
    /// `|G-bar|`.
    pub gbar_size: u64,
    /// Electron qubits per axis.
    pub n: [u32; 3],
    /// Ion qubits per axis.
    pub nbar: [u32; 3],
    /// `eta_val sum n + eta_ion sum n-bar`.
    pub system_qubits: u64,
    /// Realized electron cutoffs.
    pub electron_cutoffs: [f64; 3],
    /// Realized ion cutoffs.
    pub ion_cutoffs: [f64; 3],
    /// Realized truncation cutoffs.
    pub trunc_cutoffs: [f64; 3],
    /// Truncation `p_max`.
    pub trunc_p_max: [u32; 3],
}

/// Summarize the bases of an instance.
pub fn basis_summary(inst: &InstanceSpec) -> BasisSummary {
    BasisSummary {
        g_size: basis_size(&inst.electron),
        gbar_size: basis_size(&inst.ion),
        n: inst.electron.n,
        nbar: inst.ion.n,
        system_qubits: system_qubits(inst.eta_val, inst.eta_ion, inst.electron.n, inst.ion.n),
        electron_cutoffs: inst.electron.true_cutoffs,
        ion_cutoffs: inst.ion.true_cutoffs,
        trunc_cutoffs: inst.trunc.true_cutoffs,
        trunc_p_max: inst.trunc.p_max,
    }
}

/// Lattice-sum input of an instance.
pub fn rescaling_input(inst: &InstanceSpec) -> RescalingInput {
    RescalingInput {
        omega: inst.cell.volume(),
        electron: inst.electron.clone(),
        ion: inst.ion.clone(),
        trunc: inst.trunc.clone(),
        census: inst.census.clone(),
    }
}

/// Cost context of an instance for a given number of rounds.
pub fn cost_context(inst: &InstanceSpec, r: u32) -> CostContext {
    CostContext {
        n: inst.electron.n,
        nbar: inst.ion.n,
        eta_val: inst.eta_val,
        eta_ion: inst.eta_ion,
        z_types: inst.census.len() as u64,
        r,
    }
}

/// Instance identification in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceHeader {
    /// Name.
    pub name: String,
    /// `(eta_val, eta_ion, eta)`.
    pub eta: [u64; 3],
    /// Census.
    pub census: BTreeMap<String, u64>,
    /// Cell volume in cubic Bohr.
    pub volume: f64,
}

/// Everything computed for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    /// Schema tag.
    pub schema: String,
    /// Instance identification.
    pub instance: InstanceHeader,
    /// Bases.
    pub basis: BasisSummary,
    /// Rescaling factors and bounds.
    pub rescaling: RescalingReport,
    /// Bit widths used.
    pub bits: BitConfig,
    /// Amplification rounds used.
    pub rounds: u32,
    /// Cost ledger of one block-encoding call.
    pub cost: CostReport,
    /// Total error target.
    pub delta: f64,
    /// Plans over the time grid.
    pub plans: Vec<EvolutionPlan>,
    /// Scaling-term magnitudes.
    pub asymptotic: AsymptoticTerms,
}

/// Cost ledger for an instance (rescaling sums not needed).
pub fn instance_cost(inst: &InstanceSpec) -> Result<(u32, CostReport), Error> {
    let r = resolve_rounds(inst, &QrsParams::bundled())?;
    Ok((r, block_encoding_cost(&cost_context(inst, r), &inst.bits)?))
}

/// Run every stage for one instance.
pub fn run_full_report(inst: &InstanceSpec, times: &[f64], delta: f64) -> Result<ReportBundle, Error> {
    let rescaling = rescaling_report(&rescaling_input(inst))?;
    let (rounds, cost) = instance_cost(inst)?;
    let plans = time_sweep(rescaling.exact.total(), cost.grand_total, times, delta)?;
    let basis = basis_summary(inst);
    Ok(ReportBundle {
        schema: SCHEMA_VERSION.to_string(),
        instance: InstanceHeader {
            name: inst.name.clone(),
            eta: [inst.eta_val, inst.eta_ion, inst.eta],
            census: inst.census.iter().map(|s| (s.params.label.clone(), s.count)).collect(),
            volume: inst.cell.volume(),
        },
        asymptotic: asymptotic_terms(inst.eta_val, inst.eta_ion, basis.g_size),
        basis,
        rescaling,
        bits: inst.bits.clone(),
        rounds,
        cost,
        delta,
        plans,
    })
}

/// Full reports for several instances, computed concurrently, in input order.
pub fn run_reports(instances: &[InstanceSpec], times: &[f64], delta: f64) -> Vec<Result<ReportBundle, Error>> {
    use rayon::prelude::*;
    instances.par_iter().map(|i| run_full_report(i, times, delta)).collect()
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn num(x: f64) -> String {
    format!("{x:.10e}")
}

/// Plans as CSV: `t_au,tau,degree,iterate_calls,toffoli_total,per_fs`.
pub fn plans_csv(plans: &[EvolutionPlan]) -> String {
    csv_string(
        &["t_au", "tau", "degree", "iterate_calls", "toffoli_total", "per_fs"],
        plans.iter().map(|p| {
            vec![
                num(p.t),
                num(p.tau),
                p.degree.to_string(),
                p.iterate_calls.to_string(),
                p.toffoli_total.to_string(),
                num(p.per_fs),
            ]
        }),
    )
}

/// Cost rows as CSV: `row,term,toffolis,ancillae`.
pub fn cost_csv(cost: &CostReport) -> String {
    csv_string(
        &["row", "term", "toffolis", "ancillae"],
        cost.rows
            .iter()
            .map(|r| vec![r.name.clone(), r.term.name().to_string(), r.toffolis.to_string(), r.ancillae.to_string()]),
    )
}

/// Per-term cost fractions as CSV: `term,toffolis,fraction`.
pub fn term_csv(cost: &CostReport) -> String {
    csv_string(
        &["term", "toffolis", "fraction"],
        Term::ALL.iter().map(|&t| {
            let tt = cost.terms.iter().find(|x| x.term == t);
            vec![t.name().to_string(), cost.term_total(t).to_string(), num(tt.map_or(0.0, |x| x.fraction))]
        }),
    )
}

/// Rescaling terms as CSV: `term,exact,bound,ratio`.
pub fn rescaling_csv(r: &RescalingReport) -> String {
    let e = r.exact.entries();
    let b = r.bounds.entries();
    let ratios = r.ratios();
    csv_string(
        &["term", "exact", "bound", "ratio"],
        (0..7).map(|i| vec![e[i].0.to_string(), num(e[i].1), num(b[i].1), num(ratios[i].1)]),
    )
}

/// Basis summary as CSV: one row per quantity and axis.
pub fn basis_csv(b: &BasisSummary) -> String {
    let mut rows = vec![
        vec!["g_size".into(), "".into(), b.g_size.to_string()],
        vec!["gbar_size".into(), "".into(), b.gbar_size.to_string()],
        vec!["system_qubits".into(), "".into(), b.system_qubits.to_string()],
    ];
    for a in 0..3 {
        rows.push(vec!["n".into(), a.to_string(), b.n[a].to_string()]);
        rows.push(vec!["nbar".into(), a.to_string(), b.nbar[a].to_string()]);
        rows.push(vec!["electron_cutoff".into(), a.to_string(), num(b.electron_cutoffs[a])]);
        rows.push(vec!["ion_cutoff".into(), a.to_string(), num(b.ion_cutoffs[a])]);
        rows.push(vec!["trunc_cutoff".into(), a.to_string(), num(b.trunc_cutoffs[a])]);
    }
    csv_string(&["quantity", "axis", "value"], rows)
}

/// Output format of written reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// One JSON document.
    Json,
    /// One CSV file per table.
    Csv,
}

/// Render a bundle as named files.
pub fn render_bundle(bundle: &ReportBundle, format: Format) -> Result<Vec<(String, String)>, ReportError> {
    let stem = bundle.instance.name.to_ascii_lowercase().replace(['/', ' '], "_");
    Ok(match format {
        Format::Json => vec![(
            format!("{stem}.json"),
            serde_json::to_string_pretty(bundle).map_err(|e| ReportError::Serialize(e.to_string()))? + "\n",
        )],
        Format::Csv => vec![
            (format!("{stem}_basis.csv"), basis_csv(&bundle.basis)),
            (format!("{stem}_rescaling.csv"), rescaling_csv(&bundle.rescaling)),
            (format!("{stem}_cost.csv"), cost_csv(&bundle.cost)),
            (format!("{stem}_terms.csv"), term_csv(&bundle.cost)),
            (format!("{stem}_plan.csv"), plans_csv(&bundle.plans)),
        ],
    })
}

/// Write rendered files into a directory, creating it when needed.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> Result<(), ReportError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}

/// One reference-state check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrsRow {
    /// Species label.
    pub species: String,
    /// `nonlocal l=.. alpha=..` or `local s=..`.
    pub context: String,
    /// Success probability.
    pub p_succ: f64,
    /// Amplification rounds, `None` when below every threshold.
    pub rounds: Option<u32>,
    /// Basis points where the reference is below the target.
    pub violations: u64,
    /// Largest target-to-reference ratio.
    pub worst_ratio: f64,
}

impl QrsRow {
    fn new(species: &str, context: String, s: ScanReport) -> Self {
        QrsRow {
            species: species.to_string(),
            context,
            p_succ: s.success.p_succ,
            rounds: s.success.rounds,
            violations: s.violations,
            worst_ratio: s.worst_ratio,
        }
    }
}

/// Scan every local and non-local reference state of the instance's species on the rounds reference basis.
pub fn qrs_check(inst: &InstanceSpec, qp: &QrsParams) -> Result<Vec<QrsRow>, Error> {
    let basis = rounds_reference_basis();
    let mut rows = Vec::new();
    for sc in &inst.census {
        let p = &sc.params;
        rows.push(QrsRow::new(&p.label, "local s=-1".to_string(), type3_scan(p, &basis, qp)));
        for s in 0..4 {
            if p.c[s] != 0.0 {
                let scan = local_scan(p, s as i32, &basis, qp)?;
                rows.push(QrsRow::new(&p.label, format!("local s={s}"), scan));
            }
        }
        for (l, a) in nonlocal_channels(p) {
            let scan = nonlocal_scan(p, l, a, &basis, qp)?;
            rows.push(QrsRow::new(&p.label, format!("nonlocal l={l} alpha={a}"), scan));
        }
    }
    Ok(rows)
}

/// Reference-state checks as CSV.
pub fn qrs_csv(rows: &[QrsRow]) -> String {
    csv_string(
        &["species", "context", "p_succ", "rounds", "violations", "worst_ratio"],
        rows.iter().map(|r| {
            vec![
                r.species.clone(),
                r.context.clone(),
                num(r.p_succ),
                r.rounds.map_or_else(|| "none".to_string(), |x| x.to_string()),
                r.violations.to_string(),
                num(r.worst_ratio),
            ]
        }),
    )
}

/// Parse a bit-width file.
pub fn parse_bits(text: &str) -> Result<BitConfig, Error> {
    let b: BitConfig = toml::from_str(text).map_err(|e| ReportError::Toml(e.to_string()))?;
    b.validate()?;
    Ok(b)
}
