//! Scenario configuration: JSON schema, validation, and conversion into
//! core types.
//!
//! Every struct rejects unknown keys so a typo fails loudly instead of
//! silently falling back to a default. Choice fields (`reliability`,
//! `demand.spec`, `estimator`, `sweep.mode`, `loader`) are discriminated
//! by a `kind` string and validated by hand, which lets the error message
//! name both the offending key and the kind it does not belong to.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use qnv_core::encoding::LoaderSpec;
use qnv_core::model::{DemandDistribution, MarketParams, ReliabilityModel, Supplier};
use qnv_core::optimizer::{EstimatorChoice, SweepMode};
use qnv_core::qsim::Circuit;

use crate::CliError;

/// Largest demand register the CLI will accept. The full estimation
/// circuit uses `2n + 1` qubits plus estimator ancillas, so this keeps
/// accidental statevector sizes out of the gigabyte range.
const MAX_DEMAND_QUBITS: usize = 12;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Free-text note carried into output records.
    #[serde(default)]
    pub description: Option<String>,
    pub market: MarketConfig,
    pub suppliers: Vec<SupplierConfig>,
    pub demand: DemandConfig,
    /// Defaults to exact enumeration when omitted.
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    /// Master seed for every stochastic component. Defaults to 0.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Where output files land. Defaults to `out`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Reliability grid for the `sweep` command.
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Demand loader for the quantum estimators and for `load-dist`.
    #[serde(default)]
    pub loader: Option<LoaderConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub price: f64,
    pub salvage: f64,
    pub shortage_cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupplierConfig {
    pub unit_cost: f64,
    pub fixed_cost: f64,
    pub capacity: u32,
    pub reliability: ReliabilityConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityConfig {
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub variance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandConfig {
    pub n_qubits: usize,
    /// Units of demand at grid index 0. Defaults to 0.
    #[serde(default)]
    pub phi_offset: Option<f64>,
    /// Units of demand per grid step. Defaults to 1.
    #[serde(default)]
    pub phi_slope: Option<f64>,
    pub spec: DemandSpecConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpecConfig {
    pub kind: String,
    /// `explicit`: one probability per grid point.
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
    /// `bimodal`: peak centers on the demand grid.
    #[serde(default)]
    pub peaks: Option<Vec<f64>>,
    /// `bimodal`: per-peak Gaussian widths. Defaults to 1.5 each.
    #[serde(default)]
    pub sigmas: Option<Vec<f64>>,
    /// `bimodal`: per-peak mixture weights. Defaults to equal weights.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    /// `seeded_random`: generator seed, independent of the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: String,
    #[serde(default)]
    pub n_samples: Option<u64>,
    #[serde(default)]
    pub n_scenarios: Option<u64>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub c_scale: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    /// Defaults to deterministic reliabilities.
    #[serde(default)]
    pub mode: Option<SweepModeConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepModeConfig {
    pub kind: String,
    #[serde(default)]
    pub variance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoaderConfig {
    pub kind: String,
    /// `variational`: ansatz entangling depth. Defaults to 3.
    #[serde(default)]
    pub depth: Option<usize>,
    /// `variational`: objective evaluation budget. Defaults to 50000.
    #[serde(default)]
    pub budget: Option<u64>,
    /// `file`: path to a previously written loader spec, relative to the
    /// config file's directory unless absolute.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

/// A fully validated scenario, ready to run.
pub struct Scenario {
    pub description: Option<String>,
    pub market: MarketParams,
    pub suppliers: Vec<Supplier>,
    pub demand: DemandDistribution,
    pub estimator: EstimatorChoice,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sweep: Option<SweepPlan>,
    pub loader: LoaderPlan,
}

pub struct SweepPlan {
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub mode: SweepMode,
}

/// What `load-dist` should train, and what the other commands should feed
/// the quantum estimators.
pub enum LoaderPlan {
    /// Let the core build the exact loader from the demand distribution.
    Exact,
    /// Train an ansatz of this depth within this evaluation budget.
    Variational { depth: usize, budget: u64 },
    /// A pre-trained loader read from disk.
    File { circuit: Circuit },
}

impl Scenario {
    /// The loader circuit for this run's estimator. Classical estimators
    /// never touch a loader, so a configured variational loader is not
    /// trained for them.
    pub fn loader_for_estimator(&self, train_seed: u64) -> Result<Option<Circuit>, CliError> {
        match self.estimator {
            EstimatorChoice::Exact
            | EstimatorChoice::MonteCarlo { .. }
            | EstimatorChoice::Saa { .. } => Ok(None),
            EstimatorChoice::CanonicalQae { .. } | EstimatorChoice::Iqae { .. } => {
                self.loader_circuit(train_seed)
            }
        }
    }

    /// The loader circuit to pass into the quantum evaluation path, if any.
    /// `Exact` returns `None`: the core derives that circuit itself.
    pub fn loader_circuit(&self, train_seed: u64) -> Result<Option<Circuit>, CliError> {
        match &self.loader {
            LoaderPlan::Exact => Ok(None),
            LoaderPlan::Variational { depth, budget } => {
                let spec =
                    qnv_core::encoding::variational_load(&self.demand, *depth, *budget, train_seed)
                        .map_err(|e| CliError::Runtime(format!("loader training failed: {e}")))?;
                let circuit = spec
                    .circuit()
                    .map_err(|e| CliError::Runtime(format!("loader circuit: {e}")))?;
                Ok(Some(circuit))
            }
            LoaderPlan::File { circuit } => Ok(Some(circuit.clone())),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Fails when a key was set that the chosen kind has no use for.
fn reject_foreign_keys(
    context: &str,
    kind: &str,
    keys: &[(&str, bool)],
) -> Result<(), CliError> {
    for (name, present) in keys {
        if *present {
            return Err(config_err(format!(
                "{context}: key \"{name}\" does not apply to kind \"{kind}\""
            )));
        }
    }
    Ok(())
}

impl ReliabilityConfig {
    fn build(&self, supplier_index: usize) -> Result<ReliabilityModel, CliError> {
        let ctx = format!("suppliers[{supplier_index}].reliability");
        match self.kind.as_str() {
            "deterministic" => {
                reject_foreign_keys(
                    &ctx,
                    &self.kind,
                    &[("mean", self.mean.is_some()), ("variance", self.variance.is_some())],
                )?;
                let value = self
                    .value
                    .ok_or_else(|| config_err(format!("{ctx}: \"value\" is required")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(config_err(format!(
                        "{ctx}: value {value} is outside [0, 1]"
                    )));
                }
                Ok(ReliabilityModel::Deterministic { value })
            }
            "truncated_normal" => {
                reject_foreign_keys(&ctx, &self.kind, &[("value", self.value.is_some())])?;
                let mean = self
                    .mean
                    .ok_or_else(|| config_err(format!("{ctx}: \"mean\" is required")))?;
                let variance = self
                    .variance
                    .ok_or_else(|| config_err(format!("{ctx}: \"variance\" is required")))?;
                if !(0.0..=1.0).contains(&mean) {
                    return Err(config_err(format!("{ctx}: mean {mean} is outside [0, 1]")));
                }
                if variance <= 0.0 {
                    return Err(config_err(format!(
                        "{ctx}: variance must be positive, got {variance}"
                    )));
                }
                Ok(ReliabilityModel::TruncatedNormal { mean, variance })
            }
            other => Err(config_err(format!(
                "{ctx}: unknown kind \"{other}\" (expected deterministic or truncated_normal)"
            ))),
        }
    }
}

impl DemandConfig {
    fn build(&self) -> Result<DemandDistribution, CliError> {
        if self.n_qubits == 0 || self.n_qubits > MAX_DEMAND_QUBITS {
            return Err(config_err(format!(
                "demand.n_qubits must be in 1..={MAX_DEMAND_QUBITS}, got {}",
                self.n_qubits
            )));
        }
        let n_points = 1usize << self.n_qubits;
        let probs = self.spec.build(n_points)?;
        DemandDistribution::new(
            self.n_qubits,
            probs,
            self.phi_offset.unwrap_or(0.0),
            self.phi_slope.unwrap_or(1.0),
        )
        .map_err(|e| config_err(format!("demand: {e}")))
    }
}

impl DemandSpecConfig {
    fn build(&self, n_points: usize) -> Result<Vec<f64>, CliError> {
        let ctx = "demand.spec";
        match self.kind.as_str() {
            "uniform" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[
                        ("probs", self.probs.is_some()),
                        ("peaks", self.peaks.is_some()),
                        ("sigmas", self.sigmas.is_some()),
                        ("weights", self.weights.is_some()),
                        ("seed", self.seed.is_some()),
                    ],
                )?;
                Ok(vec![1.0 / n_points as f64; n_points])
            }
            "explicit" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[
                        ("peaks", self.peaks.is_some()),
                        ("sigmas", self.sigmas.is_some()),
                        ("weights", self.weights.is_some()),
                        ("seed", self.seed.is_some()),
                    ],
                )?;
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| config_err(format!("{ctx}: \"probs\" is required")))?;
                if probs.len() != n_points {
                    return Err(config_err(format!(
                        "{ctx}: expected {n_points} probabilities for {} qubits, got {}",
                        n_points.trailing_zeros(),
                        probs.len()
                    )));
                }
                Ok(probs)
            }
            "bimodal" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[("probs", self.probs.is_some()), ("seed", self.seed.is_some())],
                )?;
                let peaks = self
                    .peaks
                    .clone()
                    .ok_or_else(|| config_err(format!("{ctx}: \"peaks\" is required")))?;
                if peaks.is_empty() {
                    return Err(config_err(format!("{ctx}: \"peaks\" must not be empty")));
                }
                let sigmas = self.sigmas.clone().unwrap_or_else(|| vec![1.5; peaks.len()]);
                let weights = self
                    .weights
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / peaks.len() as f64; peaks.len()]);
                if sigmas.len() != peaks.len() || weights.len() != peaks.len() {
                    return Err(config_err(format!(
                        "{ctx}: peaks, sigmas, and weights must have equal length"
                    )));
                }
                if sigmas.iter().any(|&s| s <= 0.0) {
                    return Err(config_err(format!("{ctx}: sigmas must be positive")));
                }
                if weights.iter().any(|&w| w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                    return Err(config_err(format!(
                        "{ctx}: weights must be non-negative with positive sum"
                    )));
                }
                let mut probs: Vec<f64> = (0..n_points)
                    .map(|i| {
                        peaks
                            .iter()
                            .zip(&sigmas)
                            .zip(&weights)
                            .map(|((&mu, &sigma), &w)| {
                                let z = (i as f64 - mu) / sigma;
                                w * (-0.5 * z * z).exp()
                            })
                            .sum::<f64>()
                    })
                    .collect();
                let total: f64 = probs.iter().sum();
                if total <= 0.0 {
                    return Err(config_err(format!(
                        "{ctx}: every grid point has zero mass; move the peaks onto the grid"
                    )));
                }
                probs.iter_mut().for_each(|p| *p /= total);
                Ok(probs)
            }
            "seeded_random" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[
                        ("probs", self.probs.is_some()),
                        ("peaks", self.peaks.is_some()),
                        ("sigmas", self.sigmas.is_some()),
                        ("weights", self.weights.is_some()),
                    ],
                )?;
                let seed = self
                    .seed
                    .ok_or_else(|| config_err(format!("{ctx}: \"seed\" is required")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut probs: Vec<f64> =
                    (0..n_points).map(|_| rng.random::<f64>() + 1e-9).collect();
                let total: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= total);
                Ok(probs)
            }
            other => Err(config_err(format!(
                "{ctx}: unknown kind \"{other}\" (expected uniform, explicit, bimodal, or seeded_random)"
            ))),
        }
    }
}

impl EstimatorConfig {
    fn build(&self) -> Result<EstimatorChoice, CliError> {
        let ctx = "estimator";
        match self.kind.as_str() {
            "exact" => {
                self.reject_all_but(ctx, &[])?;
                Ok(EstimatorChoice::Exact)
            }
            "monte_carlo" => {
                self.reject_all_but(ctx, &["n_samples"])?;
                Ok(EstimatorChoice::MonteCarlo {
                    n_samples: self.n_samples.unwrap_or(10_000),
                })
            }
            "saa" => {
                self.reject_all_but(ctx, &["n_scenarios"])?;
                Ok(EstimatorChoice::Saa {
                    n_scenarios: self.n_scenarios.unwrap_or(10_000),
                })
            }
            "canonical_qae" => {
                self.reject_all_but(ctx, &["m", "shots", "repetitions", "c_scale"])?;
                Ok(EstimatorChoice::CanonicalQae {
                    m: self.m.unwrap_or(5),
                    shots: self.shots.unwrap_or(1024),
                    repetitions: self.repetitions.unwrap_or(5),
                    c_scale: self.c_scale.unwrap_or(0.05),
                })
            }
            "iqae" => {
                self.reject_all_but(ctx, &["epsilon", "alpha", "shots", "c_scale"])?;
                Ok(EstimatorChoice::Iqae {
                    epsilon: self.epsilon.unwrap_or(0.01),
                    alpha: self.alpha.unwrap_or(0.05),
                    shots: self.shots.unwrap_or(1024),
                    c_scale: self.c_scale.unwrap_or(0.05),
                })
            }
            other => Err(config_err(format!(
                "{ctx}: unknown kind \"{other}\" \
                 (expected exact, monte_carlo, saa, canonical_qae, or iqae)"
            ))),
        }
    }

    fn reject_all_but(&self, ctx: &str, allowed: &[&str]) -> Result<(), CliError> {
        let keys: [(&str, bool); 8] = [
            ("n_samples", self.n_samples.is_some()),
            ("n_scenarios", self.n_scenarios.is_some()),
            ("m", self.m.is_some()),
            ("shots", self.shots.is_some()),
            ("repetitions", self.repetitions.is_some()),
            ("c_scale", self.c_scale.is_some()),
            ("epsilon", self.epsilon.is_some()),
            ("alpha", self.alpha.is_some()),
        ];
        let foreign: Vec<(&str, bool)> = keys
            .into_iter()
            .filter(|(name, _)| !allowed.contains(name))
            .collect();
        reject_foreign_keys(ctx, &self.kind, &foreign)
    }
}

/// Builds the estimator named on the command line, with that kind's
/// default parameters. When the config already selects the same kind its
/// parameters win, so the flag only forces the kind.
pub fn estimator_override(name: &str, from_config: &EstimatorChoice) -> EstimatorChoice {
    let matches_config = matches!(
        (name, from_config),
        ("exact", EstimatorChoice::Exact)
            | ("monte_carlo", EstimatorChoice::MonteCarlo { .. })
            | ("saa", EstimatorChoice::Saa { .. })
            | ("canonical_qae", EstimatorChoice::CanonicalQae { .. })
            | ("iqae", EstimatorChoice::Iqae { .. })
    );
    if matches_config {
        return *from_config;
    }
    match name {
        "exact" => EstimatorChoice::Exact,
        "monte_carlo" => EstimatorChoice::MonteCarlo { n_samples: 10_000 },
        "saa" => EstimatorChoice::Saa {
            n_scenarios: 10_000,
        },
        "canonical_qae" => EstimatorChoice::CanonicalQae {
            m: 5,
            shots: 1024,
            repetitions: 5,
            c_scale: 0.05,
        },
        "iqae" => EstimatorChoice::Iqae {
            epsilon: 0.01,
            alpha: 0.05,
            shots: 1024,
            c_scale: 0.05,
        },
        // clap restricts the flag to the five names above.
        other => unreachable!("estimator name {other} passed clap validation"),
    }
}

impl SweepConfig {
    fn build(&self) -> Result<SweepPlan, CliError> {
        for (name, axis) in [("axis1", &self.axis1), ("axis2", &self.axis2)] {
            if axis.is_empty() {
                return Err(config_err(format!("sweep.{name} must not be empty")));
            }
            if axis.iter().any(|&r| !(0.0..=1.0).contains(&r)) {
                return Err(config_err(format!(
                    "sweep.{name} values must lie in [0, 1]"
                )));
            }
        }
        let mode = match &self.mode {
            None => SweepMode::Deterministic,
            Some(mc) => match mc.kind.as_str() {
                "deterministic" => {
                    reject_foreign_keys(
                        "sweep.mode",
                        &mc.kind,
                        &[("variance", mc.variance.is_some())],
                    )?;
                    SweepMode::Deterministic
                }
                "truncated_normal_mean" => {
                    let variance = mc.variance.ok_or_else(|| {
                        config_err("sweep.mode: \"variance\" is required".to_string())
                    })?;
                    if variance <= 0.0 {
                        return Err(config_err(format!(
                            "sweep.mode: variance must be positive, got {variance}"
                        )));
                    }
                    SweepMode::TruncatedNormalMean { variance }
                }
                other => {
                    return Err(config_err(format!(
                        "sweep.mode: unknown kind \"{other}\" \
                         (expected deterministic or truncated_normal_mean)"
                    )))
                }
            },
        };
        Ok(SweepPlan {
            axis1: self.axis1.clone(),
            axis2: self.axis2.clone(),
            mode,
        })
    }
}

impl LoaderConfig {
    fn build(&self, config_dir: &Path, demand_qubits: usize) -> Result<LoaderPlan, CliError> {
        let ctx = "loader";
        match self.kind.as_str() {
            "exact" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[
                        ("depth", self.depth.is_some()),
                        ("budget", self.budget.is_some()),
                        ("path", self.path.is_some()),
                    ],
                )?;
                Ok(LoaderPlan::Exact)
            }
            "variational" => {
                reject_foreign_keys(ctx, &self.kind, &[("path", self.path.is_some())])?;
                let depth = self.depth.unwrap_or(3);
                let budget = self.budget.unwrap_or(50_000);
                if depth == 0 {
                    return Err(config_err(format!("{ctx}: depth must be at least 1")));
                }
                if budget == 0 {
                    return Err(config_err(format!("{ctx}: budget must be at least 1")));
                }
                Ok(LoaderPlan::Variational { depth, budget })
            }
            "file" => {
                reject_foreign_keys(
                    ctx,
                    &self.kind,
                    &[
                        ("depth", self.depth.is_some()),
                        ("budget", self.budget.is_some()),
                    ],
                )?;
                let raw = self
                    .path
                    .clone()
                    .ok_or_else(|| config_err(format!("{ctx}: \"path\" is required")))?;
                let path = if raw.is_absolute() {
                    raw
                } else {
                    config_dir.join(raw)
                };
                let text = std::fs::read_to_string(&path).map_err(|e| {
                    config_err(format!("{ctx}: cannot read {}: {e}", path.display()))
                })?;
                let spec: LoaderSpec = serde_json::from_str(&text).map_err(|e| {
                    config_err(format!("{ctx}: {} is not a loader spec: {e}", path.display()))
                })?;
                let circuit = spec.circuit().map_err(|e| {
                    config_err(format!("{ctx}: {}: {e}", path.display()))
                })?;
                if circuit.n_qubits() != demand_qubits {
                    return Err(config_err(format!(
                        "{ctx}: loader in {} acts on {} qubits but the demand register has {}",
                        path.display(),
                        circuit.n_qubits(),
                        demand_qubits
                    )));
                }
                Ok(LoaderPlan::File { circuit })
            }
            other => Err(config_err(format!(
                "{ctx}: unknown kind \"{other}\" (expected exact, variational, or file)"
            ))),
        }
    }
}

/// Reads and validates a scenario file, then applies command-line
/// overrides for seed, output directory, and estimator kind.
pub fn load_scenario(
    path: &Path,
    seed_override: Option<u64>,
    out_override: Option<&Path>,
    estimator_name: Option<&str>,
) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let raw: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;

    if raw.suppliers.is_empty() {
        return Err(config_err("suppliers must not be empty"));
    }
    let suppliers: Vec<Supplier> = raw
        .suppliers
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(Supplier {
                unit_cost: s.unit_cost,
                fixed_cost: s.fixed_cost,
                capacity: s.capacity,
                reliability: s.reliability.build(i)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let market = MarketParams {
        price: raw.market.price,
        salvage: raw.market.salvage,
        shortage_cost: raw.market.shortage_cost,
    };
    qnv_core::model::validate(&market, &suppliers)
        .map_err(|e| config_err(format!("scenario: {e}")))?;

    let demand = raw.demand.build()?;

    let mut estimator = match &raw.estimator {
        None => EstimatorChoice::Exact,
        Some(ec) => ec.build()?,
    };
    if let Some(name) = estimator_name {
        estimator = estimator_override(name, &estimator);
    }

    let sweep = raw.sweep.as_ref().map(SweepConfig::build).transpose()?;

    let config_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let loader = match &raw.loader {
        None => LoaderPlan::Exact,
        Some(lc) => lc.build(config_dir, raw.demand.n_qubits)?,
    };

    Ok(Scenario {
        description: raw.description,
        market,
        suppliers,
        demand,
        estimator,
        seed: seed_override.or(raw.seed).unwrap_or(0),
        out_dir: out_override
            .map(Path::to_path_buf)
            .or(raw.out_dir)
            .unwrap_or_else(|| PathBuf::from("out")),
        sweep,
        loader,
    })
}
