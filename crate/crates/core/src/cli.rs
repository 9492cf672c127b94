//! Command-line driver: JSON experiment specs in, JSON reports, tables and CSV out.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dynamics::{
    certify_kernel, convolution_with_setup, propagate_response, random_non_kernel_direction, DynamicsCertification,
    PulseSpec, PulseTemplate,
};
use crate::ensemble::{
    canonical_weights, check_monotone, custom_weights, diagonalize_grand_canonical, grand_canonical_weights,
    pure_ground_state, Ensemble, DEFAULT_TOL_WEIGHT,
};
use crate::error::Error;
use crate::fock::{build_model, model_basis, DensityPair, ManyBodyOperator, ModelSpec, OneBodyCoefficients, Sector};
use crate::linalg::C64;
use crate::probes::{custom_probes, ensemble_1rdm, one_body_hermitian_basis, site_density_probes, ProbeSet, DEFAULT_TOL_RANK};
use crate::response_kernel::{KernelOptions, KernelReport, ResponseSetup, DEFAULT_TOL_SUFFICIENCY};
use crate::spectrum::{diagonalize, SpectralDecomposition, DEFAULT_TOL_ENERGY};
use crate::write_atomic;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ASSERTION: i32 = 3;

pub const DEFAULT_SWEEP_BETAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

// ---------------------------------------------------------------------------
// experiment spec

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub model: ModelConfig,
    pub sector: SectorConfig,
    pub ensemble: EnsembleConfig,
    pub probes: ProbeConfig,
    #[serde(default)]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(self) -> C64 {
        match self {
            Scalar::Real(x) => C64::new(x, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub p: usize,
    pub q: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    HubbardChain {
        sites: usize,
        t: f64,
        u: f64,
        #[serde(default)]
        periodic: bool,
    },
    Custom {
        sites: usize,
        #[serde(default = "default_true")]
        spinful: bool,
        h: Vec<Vec<Scalar>>,
        #[serde(default)]
        interaction: Vec<PairConfig>,
    },
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectorName {
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSector {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Sz", default, skip_serializing_if = "Option::is_none")]
    pub sz: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SectorConfig {
    Named(SectorName),
    Fixed(FixedSector),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleConfig {
    Pure,
    Canonical { beta: f64 },
    GrandCanonical { beta: f64, mu: f64 },
    /// Weights in ascending-energy eigenstate order.
    Custom { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProbe {
    pub label: String,
    pub h: Vec<Vec<Scalar>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeConfig {
    SiteDensity,
    OneBodyFull,
    Custom(Vec<CustomProbe>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisName {
    Spectrum,
    Kernel,
    Verify,
    SweepBeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisDetail {
    Verify(PulseTemplate),
    Propagate(PulseSpec),
    SweepBeta(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalysisConfig {
    Name(AnalysisName),
    Detail(AnalysisDetail),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub energy: Option<f64>,
    pub weight: Option<f64>,
    pub rank: Option<f64>,
    pub sufficiency: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
}

/// Resolved analysis request.
#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Spectrum,
    Kernel,
    Verify(PulseTemplate),
    Propagate(PulseSpec),
    SweepBeta(Vec<f64>),
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::Spectrum => "spectrum",
            Analysis::Kernel => "kernel",
            Analysis::Verify(_) => "verify",
            Analysis::Propagate(_) => "propagate",
            Analysis::SweepBeta(_) => "sweep_beta",
        }
    }
}

/// Parse a spec, reporting the JSON path of the first offending field.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, Error> {
    let mut de = serde_json::Deserializer::from_str(text);
    let spec: ExperimentSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." || path.is_empty() { "$".to_string() } else { path };
        Error::invalid(field, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| Error::invalid("$", e.to_string()))?;
    Ok(spec)
}

// ---------------------------------------------------------------------------
// command line

#[derive(Debug, Parser)]
#[command(name = "ensemble-kernel", version, about = "Kernel of ensemble linear-response functions by exact diagonalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Experiment spec (JSON).
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Directory for reports and trajectories.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Suppress tables on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Seed for randomized directions.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the relative rank tolerance.
    #[arg(long = "tol-rank", global = true)]
    pub tol_rank: Option<f64>,
    /// Override the inverse temperature of a thermal ensemble.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Override the chemical potential of a grand canonical ensemble.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the analysis named in the spec (kernel if absent).
    Run,
    /// Energies and degeneracy groups.
    Spectrum,
    /// Response kernel with commutant comparison.
    Kernel,
    /// Kernel plus time-domain certification of every kernel vector.
    Verify,
    /// Propagate the pulse from the spec and write the trajectory CSV.
    Propagate,
    /// Kernel dimension against inverse temperature.
    SweepBeta,
}

/// Resolve the analysis for a subcommand, taking parameters from the spec when they match.
pub fn resolve_analysis(command: Command, spec: &ExperimentSpec) -> Result<Analysis, Error> {
    let from_spec = match &spec.analysis {
        None => Analysis::Kernel,
        Some(AnalysisConfig::Name(AnalysisName::Spectrum)) => Analysis::Spectrum,
        Some(AnalysisConfig::Name(AnalysisName::Kernel)) => Analysis::Kernel,
        Some(AnalysisConfig::Name(AnalysisName::Verify)) => Analysis::Verify(PulseTemplate::default()),
        Some(AnalysisConfig::Name(AnalysisName::SweepBeta)) => Analysis::SweepBeta(DEFAULT_SWEEP_BETAS.to_vec()),
        Some(AnalysisConfig::Detail(AnalysisDetail::Verify(t))) => Analysis::Verify(*t),
        Some(AnalysisConfig::Detail(AnalysisDetail::Propagate(p))) => Analysis::Propagate(p.clone()),
        Some(AnalysisConfig::Detail(AnalysisDetail::SweepBeta(b))) => Analysis::SweepBeta(b.clone()),
    };
    let wanted = match command {
        Command::Run => return Ok(from_spec),
        Command::Spectrum => Analysis::Spectrum,
        Command::Kernel => Analysis::Kernel,
        Command::Verify => Analysis::Verify(PulseTemplate::default()),
        Command::SweepBeta => Analysis::SweepBeta(DEFAULT_SWEEP_BETAS.to_vec()),
        Command::Propagate => {
            return match from_spec {
                Analysis::Propagate(p) => Ok(Analysis::Propagate(p)),
                _ => Err(Error::invalid("analysis.propagate", "propagate needs a pulse in the spec")),
            }
        }
    };
    if std::mem::discriminant(&wanted) == std::mem::discriminant(&from_spec) {
        Ok(from_spec)
    } else {
        Ok(wanted)
    }
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSummary {
    pub dim: usize,
    pub n_orbitals: usize,
    pub sector: String,
    pub generator: String,
    pub chemical_potential: f64,
    pub energies: Vec<f64>,
    pub degeneracy_groups: Vec<Vec<usize>>,
    pub max_residual: f64,
    pub tol_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSummary {
    pub kind: String,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub weights: Vec<f64>,
    pub tol_weight: f64,
    pub monotone: bool,
    pub monotone_violations: Vec<(usize, usize)>,
    pub natural_occupations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub beta: f64,
    pub candidate_dim: usize,
    pub kernel_dim: usize,
    pub commutant_dim: usize,
    pub kernel_equals_commutant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySummary {
    pub path: PathBuf,
    pub n_points: usize,
    pub max_abs_response: f64,
    pub max_norm_drift: f64,
    pub convolution_relative_l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub analysis: String,
    pub spectrum: SpectrumSummary,
    pub ensemble: EnsembleSummary,
    pub kernel_report: Option<KernelReport>,
    pub dynamics_certification: Option<DynamicsCertification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_beta: Option<Vec<SweepRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySummary>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

/// Failure with its exit code; assertion failures still carry the report.
#[derive(Debug)]
pub enum Failure {
    Validation(Error),
    Assertion { message: String, report: Box<Report> },
    Internal(Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Assertion { .. } => EXIT_ASSERTION,
            Failure::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let code = self.exit_code();
        match self {
            Failure::Validation(e) | Failure::Internal(e) => {
                let mut obj = json!({ "code": code, "message": e.to_string() });
                match e {
                    Error::Invalid { field, message } => {
                        obj["kind"] = json!("validation");
                        obj["field"] = json!(field);
                        obj["message"] = json!(message);
                    }
                    Error::NonMonotone { pairs } => {
                        obj["kind"] = json!("non_monotone");
                        obj["field"] = json!("ensemble");
                        obj["pairs"] = json!(pairs);
                    }
                    Error::UnderResolved { n_steps, required } => {
                        obj["kind"] = json!("under_resolved");
                        obj["field"] = json!("analysis.n_steps");
                        obj["n_steps"] = json!(n_steps);
                        obj["required"] = json!(required);
                    }
                    Error::Eigensolver { max_residual, .. } => {
                        obj["kind"] = json!("eigensolver");
                        obj["max_residual"] = json!(max_residual);
                    }
                }
                json!({ "error": obj })
            }
            Failure::Assertion { message, .. } => {
                json!({ "error": { "code": code, "kind": "assertion", "message": message } })
            }
        }
    }
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Eigensolver { .. } => Failure::Internal(e),
        other => Failure::Validation(other),
    }
}

// ---------------------------------------------------------------------------
// building blocks

/// Everything derived from a spec before any analysis runs.
pub struct System {
    pub hamiltonian: ManyBodyOperator,
    pub spectrum: Arc<SpectralDecomposition>,
    pub ensemble: Ensemble,
    pub probes: ProbeSet,
    pub options: KernelOptions,
}

fn coefficient_matrix(rows: &[Vec<Scalar>], m: usize, field: &str) -> Result<OneBodyCoefficients, Error> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid(field, format!("expected a {m}x{m} matrix")));
    }
    let h = DMatrix::from_fn(m, m, |p, q| rows[p][q].value());
    OneBodyCoefficients::new(h).map_err(|e| match e {
        Error::Invalid { message, .. } => Error::invalid(field, message),
        other => other,
    })
}

fn model_spec(cfg: &ModelConfig) -> Result<ModelSpec, Error> {
    match cfg {
        ModelConfig::HubbardChain { sites, t, u, periodic } => Ok(ModelSpec::HubbardChain {
            sites: *sites,
            t: *t,
            u: *u,
            periodic: *periodic,
        }),
        ModelConfig::Custom {
            sites,
            spinful,
            h,
            interaction,
        } => {
            let m = sites * if *spinful { 2 } else { 1 };
            Ok(ModelSpec::Custom {
                sites: *sites,
                spinful: *spinful,
                h: coefficient_matrix(h, m, "model.h")?,
                interaction: interaction.iter().map(|p| DensityPair { p: p.p, q: p.q, u: p.u }).collect(),
            })
        }
    }
}

fn sector(cfg: &SectorConfig) -> Result<Sector, Error> {
    match cfg {
        SectorConfig::Named(SectorName::Full) => Ok(Sector::Full),
        SectorConfig::Fixed(FixedSector { n, sz: None }) => Ok(Sector::FixedN(*n)),
        SectorConfig::Fixed(FixedSector { n, sz: Some(sz) }) => {
            let twice = 2.0 * sz;
            if !twice.is_finite() || (twice - twice.round()).abs() > 1e-12 {
                return Err(Error::invalid("sector.Sz", "must be a multiple of 1/2"));
            }
            Ok(Sector::FixedNSz {
                n: *n,
                twice_sz: twice.round() as i32,
            })
        }
    }
}

fn positive(value: Option<f64>, default: f64, field: &str) -> Result<f64, Error> {
    match value {
        None => Ok(default),
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(Error::invalid(field, format!("must be positive, got {x}"))),
    }
}

/// Apply `--beta` / `--mu` overrides to the ensemble config.
pub fn apply_overrides(cfg: &EnsembleConfig, beta: Option<f64>, mu: Option<f64>) -> Result<EnsembleConfig, Error> {
    let mut out = cfg.clone();
    if let Some(b) = beta {
        match &mut out {
            EnsembleConfig::Canonical { beta } | EnsembleConfig::GrandCanonical { beta, .. } => *beta = b,
            _ => return Err(Error::invalid("ensemble.beta", "--beta needs a canonical or grand canonical ensemble")),
        }
    }
    if let Some(m) = mu {
        match &mut out {
            EnsembleConfig::GrandCanonical { mu, .. } => *mu = m,
            _ => return Err(Error::invalid("ensemble.mu", "--mu needs a grand canonical ensemble")),
        }
    }
    Ok(out)
}

fn build_ensemble(
    h: &ManyBodyOperator,
    cfg: &EnsembleConfig,
    tol_energy: f64,
    tol_weight: f64,
) -> Result<(Arc<SpectralDecomposition>, Ensemble), Error> {
    let (spec, ens) = match cfg {
        EnsembleConfig::GrandCanonical { beta, mu } => {
            let spec = Arc::new(diagonalize_grand_canonical(h, *mu, tol_energy)?);
            let ens = grand_canonical_weights(&spec, *beta, *mu)?;
            (spec, ens)
        }
        other => {
            let spec = Arc::new(diagonalize(h, tol_energy)?);
            let ens = match other {
                EnsembleConfig::Pure => pure_ground_state(&spec)?,
                EnsembleConfig::Canonical { beta } => canonical_weights(&spec, *beta)?,
                EnsembleConfig::Custom { weights } => custom_weights(&spec, weights)?,
                EnsembleConfig::GrandCanonical { .. } => unreachable!(),
            };
            (spec, ens)
        }
    };
    Ok((spec, ens.with_tol_weight(tol_weight)))
}

pub fn build_system(spec: &ExperimentSpec, ensemble: &EnsembleConfig, tol_rank: Option<f64>) -> Result<System, Error> {
    let tol = &spec.tolerances;
    let tol_energy = positive(tol.energy, DEFAULT_TOL_ENERGY, "tolerances.energy")?;
    let tol_weight = positive(tol.weight, DEFAULT_TOL_WEIGHT, "tolerances.weight")?;
    let options = KernelOptions {
        tol_rank: positive(tol_rank.or(tol.rank), DEFAULT_TOL_RANK, "tolerances.rank")?,
        tol_sufficiency: positive(tol.sufficiency, DEFAULT_TOL_SUFFICIENCY, "tolerances.sufficiency")?,
    };
    let model = model_spec(&spec.model)?;
    let basis = model_basis(&model, sector(&spec.sector)?)?;
    let hamiltonian = build_model(&model, &basis)?;
    let probes = match &spec.probes {
        ProbeConfig::SiteDensity => site_density_probes(&basis)?,
        ProbeConfig::OneBodyFull => one_body_hermitian_basis(&basis),
        ProbeConfig::Custom(items) => {
            if items.is_empty() {
                return Err(Error::invalid("probes.custom", "at least one probe is required"));
            }
            let m = basis.n_orbitals();
            let coeffs = items
                .iter()
                .enumerate()
                .map(|(i, p)| Ok((p.label.clone(), coefficient_matrix(&p.h, m, &format!("probes.custom[{i}].h"))?)))
                .collect::<Result<Vec<_>, Error>>()?;
            custom_probes(&basis, coeffs)?
        }
    };
    let (spectrum, ensemble) = build_ensemble(&hamiltonian, ensemble, tol_energy, tol_weight)?;
    Ok(System {
        hamiltonian,
        spectrum,
        ensemble,
        probes,
        options,
    })
}

fn sector_label(s: Sector) -> String {
    match s {
        Sector::Full => "full".into(),
        Sector::FixedN(n) => format!("N={n}"),
        Sector::FixedNSz { n, twice_sz } => format!("N={n},Sz={}", twice_sz as f64 / 2.0),
    }
}

pub fn spectrum_summary(spec: &SpectralDecomposition) -> SpectrumSummary {
    let basis = spec.generator().basis();
    let mu = spec.chemical_potential();
    SpectrumSummary {
        dim: spec.dim(),
        n_orbitals: basis.n_orbitals(),
        sector: sector_label(basis.sector()),
        generator: if mu == 0.0 { "H".into() } else { "H - mu N".into() },
        chemical_potential: mu,
        energies: spec.energies().to_vec(),
        degeneracy_groups: spec.degeneracy_groups().to_vec(),
        max_residual: spec.max_residual(),
        tol_energy: spec.tol_energy(),
    }
}

pub fn ensemble_summary(ens: &Ensemble) -> EnsembleSummary {
    let violations = check_monotone(ens);
    let (beta, mu) = match ens.kind() {
        crate::ensemble::EnsembleKind::Canonical { beta } => (Some(beta), None),
        crate::ensemble::EnsembleKind::GrandCanonical { beta, mu } => (Some(beta), Some(mu)),
        _ => (None, None),
    };
    EnsembleSummary {
        kind: ens.kind().name().into(),
        beta,
        mu,
        weights: ens.weights().to_vec(),
        tol_weight: ens.tol_weight(),
        monotone: violations.is_empty(),
        monotone_violations: violations,
        natural_occupations: ensemble_1rdm(ens).occupations,
    }
}

fn resolve_path(out: &Path, file: Option<&PathBuf>, default: &str) -> PathBuf {
    match file {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => out.join(p),
        None => out.join(default),
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

/// Run one analysis and return the report; writes the trajectory CSV for `propagate`.
pub fn execute(spec: &ExperimentSpec, analysis: &Analysis, flags: &Flags) -> Result<Report, Failure> {
    let mut timer = Timer(BTreeMap::new());
    let ens_cfg = apply_overrides(&spec.ensemble, flags.beta, flags.mu).map_err(Failure::Validation)?;
    let sys = timer
        .time("build", || build_system(spec, &ens_cfg, flags.tol_rank))
        .map_err(classify)?;
    let mut report = Report {
        analysis: analysis.name().into(),
        spectrum: spectrum_summary(&sys.spectrum),
        ensemble: ensemble_summary(&sys.ensemble),
        kernel_report: None,
        dynamics_certification: None,
        sweep_beta: None,
        trajectory: None,
        timings: BTreeMap::new(),
    };
    let mut failures = Vec::new();

    match analysis {
        Analysis::Spectrum => {}
        Analysis::Kernel | Analysis::Verify(_) => {
            let setup = ResponseSetup::new(&sys.probes, &sys.ensemble).map_err(classify)?;
            let kr = timer.time("kernel", || setup.compute_kernel(&sys.options)).map_err(classify)?;
            if kr.commutant_theorem == Some(false) {
                failures.push(format!(
                    "thermal kernel (dim {}) differs from the commutant (dim {}), max principal angle {:.3e}",
                    kr.kernel_dim, kr.commutant_dim, kr.max_principal_angle
                ));
            }
            if let Analysis::Verify(template) = analysis {
                let kernel = kr.kernel_matrix();
                let other = random_non_kernel_direction(&kernel, sys.probes.len(), flags.seed);
                let cert = timer
                    .time("dynamics", || {
                        certify_kernel(&sys.hamiltonian, &setup, &kr.kernel_basis, other, template)
                    })
                    .map_err(classify)?;
                if !cert.all_pass {
                    failures.push("dynamics certification failed".to_string());
                }
                report.dynamics_certification = Some(cert);
            }
            report.kernel_report = Some(kr);
        }
        Analysis::SweepBeta(betas) => {
            if betas.is_empty() {
                return Err(Failure::Validation(Error::invalid("analysis.sweep_beta", "no inverse temperatures given")));
            }
            let rows = timer.time("sweep", || {
                betas
                    .iter()
                    .enumerate()
                    .map(|(i, &b)| {
                        if !(b > 0.0 && b.is_finite()) {
                            return Err(Error::invalid(format!("analysis.sweep_beta[{i}]"), "must be positive"));
                        }
                        let ens = match sys.ensemble.kind() {
                            crate::ensemble::EnsembleKind::GrandCanonical { mu, .. } => {
                                grand_canonical_weights(&sys.spectrum, b, mu)?
                            }
                            _ => canonical_weights(&sys.spectrum, b)?,
                        }
                        .with_tol_weight(sys.ensemble.tol_weight());
                        let kr = ResponseSetup::new(&sys.probes, &ens)?.compute_kernel(&sys.options)?;
                        Ok(SweepRow {
                            beta: b,
                            candidate_dim: kr.candidate_dim,
                            kernel_dim: kr.kernel_dim,
                            commutant_dim: kr.commutant_dim,
                            kernel_equals_commutant: kr.kernel_equals_commutant,
                        })
                    })
                    .collect::<Result<Vec<_>, Error>>()
            });
            let rows = rows.map_err(classify)?;
            if rows.iter().any(|r| !r.kernel_equals_commutant) {
                failures.push("thermal kernel differs from the commutant for some beta".to_string());
            }
            report.sweep_beta = Some(rows);
        }
        Analysis::Propagate(pulse) => {
            let (traj, rel) = timer
                .time("dynamics", || -> Result<_, Error> {
                    let traj = propagate_response(&sys.hamiltonian, &sys.ensemble, &sys.probes, pulse)?;
                    let setup = ResponseSetup::new(&sys.probes, &sys.ensemble)?;
                    let conv = convolution_with_setup(&setup, pulse)?;
                    let rel = traj.relative_l2(&conv);
                    Ok((traj, rel))
                })
                .map_err(classify)?;
            let path = resolve_path(&flags.out, spec.output.trajectory.as_ref(), "trajectory.csv");
            traj.save_csv(&path).map_err(Failure::Internal)?;
            report.trajectory = Some(TrajectorySummary {
                path,
                n_points: traj.times.len(),
                max_abs_response: traj.max_abs(),
                max_norm_drift: traj.max_norm_drift,
                convolution_relative_l2: rel,
            });
        }
    }
    report.timings = timer.0;
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Failure::Assertion {
            message: failures.join("; "),
            report: Box::new(report),
        })
    }
}

/// Serialize a report; `timings` is the only run-dependent field.
pub fn report_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// tables

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
}

pub fn render_tables(report: &Report) -> String {
    let mut s = String::new();
    let sp = &report.spectrum;
    s += &format!(
        "spectrum  dim={}  orbitals={}  sector={}  generator={}  max residual={:.2e}\n",
        sp.dim, sp.n_orbitals, sp.sector, sp.generator, sp.max_residual
    );
    s += "  group  degeneracy        energy\n";
    for (g, idx) in sp.degeneracy_groups.iter().enumerate() {
        s += &format!("  {g:>5}  {:>10}  {:>12.8}\n", idx.len(), sp.energies[idx[0]]);
    }
    let en = &report.ensemble;
    s += &format!("ensemble  kind={}", en.kind);
    if let Some(b) = en.beta {
        s += &format!("  beta={b}");
    }
    if let Some(m) = en.mu {
        s += &format!("  mu={m}");
    }
    s += &format!("  monotone={}\n", en.monotone);
    if !en.monotone {
        s += &format!("  violating pairs (K, L): {:?}\n", en.monotone_violations);
    }
    s += &format!("  natural occupations: {}\n", fmt_list(&en.natural_occupations));
    if let Some(kr) = &report.kernel_report {
        s += &format!(
            "kernel    probes={}  pairs={}  candidate={}  kernel={}  commutant={}  max angle={:.2e}\n",
            kr.probe_labels.len(),
            kr.pair_count,
            kr.candidate_dim,
            kr.kernel_dim,
            kr.commutant_dim,
            kr.max_principal_angle
        );
        let gap = kr.necessary.gap().map_or("n/a".to_string(), |g| format!("{g:.2e}"));
        s += &format!(
            "  necessary-map gap={gap}  sufficiency rejected={}  excess over commutant={}  missing={}\n",
            kr.sufficiency.rejected_dim, kr.excess_over_commutant, kr.missing_from_kernel
        );
        for (n, v) in kr.kernel_basis.iter().enumerate() {
            let terms: Vec<String> = v
                .iter()
                .zip(&kr.probe_labels)
                .filter(|(c, _)| c.abs() > 1e-8)
                .map(|(c, l)| format!("{c:+.4}*{l}"))
                .collect();
            s += &format!("  k{n}: {}\n", terms.join(" "));
        }
        if let Some(ok) = kr.commutant_theorem {
            s += &format!("  thermal kernel equals commutant: {ok}\n");
        }
    }
    if let Some(c) = &report.dynamics_certification {
        s += &format!("dynamics  lambda={:e}  t_end={}  steps={}\n", c.pulse.amplitude, c.pulse.t_end, c.pulse.n_steps);
        s += "  direction  in_kernel  max|dQ|/lambda   threshold  pass\n";
        for (n, d) in c.directions.iter().enumerate() {
            s += &format!(
                "  {n:>9}  {:>9}  {:>14.3e}  {:>10.3e}  {}\n",
                d.in_kernel, d.max_response, d.threshold, d.passes
            );
        }
        if let Some(r) = c.convolution_relative_l2 {
            s += &format!("  propagation vs convolution relative L2: {r:.3e}\n");
        }
    }
    if let Some(rows) = &report.sweep_beta {
        s += "sweep     beta  candidate  kernel  commutant  equal\n";
        for r in rows {
            s += &format!(
                "  {:>10}  {:>9}  {:>6}  {:>9}  {}\n",
                r.beta, r.candidate_dim, r.kernel_dim, r.commutant_dim, r.kernel_equals_commutant
            );
        }
    }
    if let Some(t) = &report.trajectory {
        s += &format!(
            "trajectory  {}  points={}  max|dQ|={:.3e}  vs convolution={:.3e}\n",
            t.path.display(),
            t.n_points,
            t.max_abs_response,
            t.convolution_relative_l2
        );
    }
    s
}

// ---------------------------------------------------------------------------
// entry point

fn emit_error(f: &Failure) {
    eprintln!("{}", f.to_json());
}

fn write_report(report: &Report, spec: &ExperimentSpec, flags: &Flags) -> Result<(), Failure> {
    let path = resolve_path(&flags.out, spec.output.report.as_ref(), "report.json");
    write_atomic(&path, report_json(report).as_bytes()).map_err(Failure::Internal)
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let flags = cli.flags;
    let outcome = (|| {
        let path = flags
            .spec
            .as_ref()
            .ok_or_else(|| Failure::Validation(Error::invalid("--spec", "a spec file is required")))?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(Error::invalid("--spec", format!("{}: {e}", path.display()))))?;
        let spec = parse_spec(&text).map_err(Failure::Validation)?;
        let analysis = resolve_analysis(cli.command, &spec).map_err(Failure::Validation)?;
        std::fs::create_dir_all(&flags.out)
            .map_err(|e| Failure::Internal(Error::invalid("--out", format!("{}: {e}", flags.out.display()))))?;
        match execute(&spec, &analysis, &flags) {
            Ok(report) => {
                write_report(&report, &spec, &flags)?;
                Ok(report)
            }
            Err(Failure::Assertion { message, report }) => {
                write_report(&report, &spec, &flags)?;
                Err(Failure::Assertion { message, report })
            }
            Err(other) => Err(other),
        }
    })();
    match outcome {
        Ok(report) => {
            if !flags.quiet {
                print!("{}", render_tables(&report));
            }
            EXIT_OK
        }
        Err(f) => {
            if let Failure::Assertion { report, .. } = &f {
                if !flags.quiet {
                    print!("{}", render_tables(report));
                }
            }
            emit_error(&f);
            f.exit_code()
        }
    }
}
