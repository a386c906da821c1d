//! Scenario file loading (TOML), run reports (JSON and CSV), and the run
//! manifest with input hashing.

use crate::equilibrium::Welfare;
use crate::invest::Regime;
use crate::model::{
    build_network, calibrate_demand, validate_scenario, DemandCurve, InvestmentCatalog, Line,
    Producer, ScenarioModel, StorageAsset, StorageTech, VresAsset, VresKind,
};
use crate::solver::SolverSettings;
use crate::verify::VerificationReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("parse {path}: {source}")]
    Toml {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("unknown node name {0:?}")]
    UnknownNode(String),
    #[error("network: {0}")]
    Network(#[from] crate::model::NetworkError),
    #[error("demand calibration at node {node:?}: {source}")]
    Calibration {
        node: String,
        source: crate::model::CalibrationError,
    },
    #[error("demand for node {node:?} has wrong shape")]
    DemandShape { node: String },
    #[error("scenario is invalid:\n{0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// scenario file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    nodes: Vec<String>,
    slack: String,
    #[serde(default)]
    storage_discharge_cost: f64,
    #[serde(default)]
    lines: Vec<LineFile>,
    clusters: Vec<ClusterFile>,
    #[serde(default)]
    producers: Vec<ProducerFile>,
    demand: DemandFile,
    investment: InvestmentFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineFile {
    from: String,
    to: String,
    susceptance: f64,
    capacity_mw: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterFile {
    weight: f64,
    period_hours: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProducerFile {
    name: String,
    #[serde(default)]
    units: Vec<UnitFile>,
    #[serde(default)]
    vres: Vec<VresFile>,
    #[serde(default)]
    storage: Vec<StorageFile>,
    storage_tech: Option<StorageTech>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitFile {
    tech: String,
    node: String,
    marginal_cost: f64,
    capacity_mw: f64,
    #[serde(default = "one")]
    ramp_up: f64,
    #[serde(default = "one")]
    ramp_down: f64,
    #[serde(default)]
    emission_factor: f64,
    #[serde(default = "one")]
    availability: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VresFile {
    kind: VresKind,
    node: String,
    capacity_mw: f64,
    /// availability[m][t]
    availability: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StorageFile {
    node: String,
    energy_capacity_mwh: f64,
    #[serde(default)]
    min_factor: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandFile {
    /// Point elasticity at each reference point, negative.
    elasticity: f64,
    nodes: Vec<DemandNodeFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandNodeFile {
    node: String,
    /// quantity_mwh[m][t], reference energy demand per period.
    quantity_mwh: Vec<Vec<f64>>,
    /// Reference price, one value or one per (m, t).
    price: PriceSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PriceSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

// ---------------------------------------------------------------------------
// loading
// ---------------------------------------------------------------------------

/// Load, convert, and validate a scenario TOML file.
pub fn load_scenario(path: &Path) -> Result<ScenarioModel, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

/// Parse scenario TOML from a string; `origin` is used in error messages.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioModel, IoError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|source| IoError::Toml {
        path: origin.to_string(),
        source: Box::new(source),
    })?;
    let node_index = |name: &str| -> Result<usize, IoError> {
        file.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| IoError::UnknownNode(name.to_string()))
    };

    let lines = file
        .lines
        .iter()
        .map(|l| {
            Ok(Line {
                from: node_index(&l.from)?,
                to: node_index(&l.to)?,
                susceptance: l.susceptance,
                capacity_mw: l.capacity_mw,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let network = build_network(file.nodes.len(), lines, node_index(&file.slack)?)?;

    let clusters: Vec<crate::model::Cluster> = file
        .clusters
        .iter()
        .map(|c| crate::model::Cluster {
            weight: c.weight,
            period_hours: c.period_hours.clone(),
        })
        .collect();

    let producers = file
        .producers
        .into_iter()
        .map(|p| {
            Ok(Producer {
                name: p.name,
                units: p
                    .units
                    .into_iter()
                    .map(|u| {
                        Ok(crate::model::GenerationUnit {
                            tech: u.tech,
                            node: node_index(&u.node)?,
                            marginal_cost: u.marginal_cost,
                            capacity_mw: u.capacity_mw,
                            ramp_up: u.ramp_up,
                            ramp_down: u.ramp_down,
                            emission_factor: u.emission_factor,
                            availability: u.availability,
                        })
                    })
                    .collect::<Result<Vec<_>, IoError>>()?,
                vres: p
                    .vres
                    .into_iter()
                    .map(|e| {
                        Ok(VresAsset {
                            kind: e.kind,
                            node: node_index(&e.node)?,
                            capacity_mw: e.capacity_mw,
                            availability: e.availability,
                        })
                    })
                    .collect::<Result<Vec<_>, IoError>>()?,
                storage: p
                    .storage
                    .into_iter()
                    .map(|s| {
                        Ok(StorageAsset {
                            node: node_index(&s.node)?,
                            energy_capacity_mwh: s.energy_capacity_mwh,
                            min_factor: s.min_factor,
                        })
                    })
                    .collect::<Result<Vec<_>, IoError>>()?,
                storage_tech: p.storage_tech.unwrap_or(StorageTech {
                    input_efficiency: 1.0,
                    decay: 0.0,
                    rate_in: 1.0,
                    rate_out: 1.0,
                }),
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;

    // demand calibration per (m, t, n)
    let mut demand: Vec<Vec<Vec<Option<DemandCurve>>>> = clusters
        .iter()
        .map(|c| vec![vec![None; file.nodes.len()]; c.num_periods()])
        .collect();
    for d in &file.demand.nodes {
        let n = node_index(&d.node)?;
        if d.quantity_mwh.len() != clusters.len() {
            return Err(IoError::DemandShape {
                node: d.node.clone(),
            });
        }
        for (m, row) in d.quantity_mwh.iter().enumerate() {
            if row.len() != clusters[m].num_periods() {
                return Err(IoError::DemandShape {
                    node: d.node.clone(),
                });
            }
            for (t, &q_ref) in row.iter().enumerate() {
                let p_ref = match &d.price {
                    PriceSpec::Scalar(p) => *p,
                    PriceSpec::Matrix(mat) => *mat
                        .get(m)
                        .and_then(|r| r.get(t))
                        .ok_or_else(|| IoError::DemandShape {
                            node: d.node.clone(),
                        })?,
                };
                let curve = calibrate_demand(q_ref, p_ref, file.demand.elasticity).map_err(
                    |source| IoError::Calibration {
                        node: d.node.clone(),
                        source,
                    },
                )?;
                demand[m][t][n] = Some(curve);
            }
        }
    }

    let investment = InvestmentCatalog {
        sizes_mwh: file.investment.sizes_mwh,
        weekly_cost: file.investment.weekly_cost,
        tech: file.investment.tech,
        min_factor: file.investment.min_factor,
        candidates: file
            .investment
            .candidates
            .iter()
            .map(|n| node_index(n))
            .collect::<Result<Vec<_>, IoError>>()?,
    };

    let scenario = ScenarioModel {
        name: file.name,
        nodes: file.nodes,
        network,
        clusters,
        producers,
        storage_discharge_cost: file.storage_discharge_cost,
        demand,
        investment,
    };
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        let text = violations
            .iter()
            .map(|v| format!("  - {v}"))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(IoError::Invalid(text));
    }
    Ok(scenario)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InvestmentFile {
    sizes_mwh: Vec<f64>,
    weekly_cost: f64,
    tech: StorageTech,
    #[serde(default)]
    min_factor: f64,
    candidates: Vec<String>,
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

/// Identity of one run: inputs, settings, and code version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_name: String,
    /// SHA-256 of the scenario file bytes.
    pub scenario_sha256: String,
    pub solver: SolverSettings,
    pub version: String,
}

impl RunManifest {
    pub fn new(scenario_name: &str, scenario_bytes: &[u8], solver: &SolverSettings) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(scenario_bytes);
        RunManifest {
            scenario_name: scenario_name.to_string(),
            scenario_sha256: format!("{:x}", hasher.finalize()),
            solver: solver.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Results for one regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegimeReport {
    /// Regime label: CP, SW-PC, M-PC, SW-CO, M-CO.
    pub model: String,
    pub social_welfare: f64,
    pub investor_surplus: f64,
    pub producer_surplus: f64,
    pub consumer_surplus: f64,
    pub grid_revenue: f64,
    pub price_mean: f64,
    pub emissions_tons: f64,
    pub investment_cost: f64,
    pub investment_total_mwh: f64,
    /// Installed MWh by node name, only nonzero entries.
    pub investment_by_node: BTreeMap<String, f64>,
    pub decision: Vec<usize>,
    pub verification: Option<VerificationReport>,
}

impl RegimeReport {
    pub fn from_parts(
        scenario: &ScenarioModel,
        regime: Regime,
        welfare: &Welfare,
        decision: &crate::model::InvestmentDecision,
        verification: Option<VerificationReport>,
    ) -> Self {
        let cat = &scenario.investment;
        let mut by_node = BTreeMap::new();
        for (k, &n) in cat.candidates.iter().enumerate() {
            let mwh = cat.sizes_mwh[decision.size_index[k]];
            if mwh > 0.0 {
                by_node.insert(scenario.nodes[n].clone(), mwh);
            }
        }
        RegimeReport {
            model: regime.label().to_string(),
            social_welfare: welfare.social_welfare,
            investor_surplus: welfare.investor_surplus,
            producer_surplus: welfare.producer_surplus_total,
            consumer_surplus: welfare.consumer_surplus,
            grid_revenue: welfare.grid_revenue,
            price_mean: welfare.price_mean,
            emissions_tons: welfare.emissions_tons,
            investment_cost: welfare.investment_cost,
            investment_total_mwh: decision.total_mwh(cat),
            investment_by_node: by_node,
            decision: decision.size_index.clone(),
            verification,
        }
    }
}

/// A complete run: manifest plus one report per regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub regimes: Vec<RegimeReport>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String, IoError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Summary CSV, one row per regime.
    pub fn to_csv(&self) -> Result<String, IoError> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record([
            "model",
            "SW",
            "IS",
            "PS",
            "CS",
            "GR",
            "price_mean",
            "investment_total_gwh",
            "investment_by_node",
        ])?;
        for r in &self.regimes {
            let by_node = r
                .investment_by_node
                .iter()
                .map(|(n, mwh)| format!("{n}={:.3}", mwh / 1000.0))
                .collect::<Vec<_>>()
                .join(";");
            wtr.write_record([
                r.model.clone(),
                format!("{:.6}", r.social_welfare),
                format!("{:.6}", r.investor_surplus),
                format!("{:.6}", r.producer_surplus),
                format!("{:.6}", r.consumer_surplus),
                format!("{:.6}", r.grid_revenue),
                format!("{:.6}", r.price_mean),
                format!("{:.6}", r.investment_total_mwh / 1000.0),
                by_node,
            ])?;
        }
        let bytes = wtr.into_inner().expect("csv writer over Vec cannot fail");
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// One changed quantity between two runs.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineDelta {
    pub model: String,
    pub field: String,
    pub baseline: f64,
    pub current: f64,
    pub delta: f64,
}

/// Field-by-field comparison against a baseline run, matched by regime label.
pub fn compare_to_baseline(current: &RunReport, baseline: &RunReport) -> Vec<BaselineDelta> {
    let mut deltas = Vec::new();
    for cur in &current.regimes {
        let Some(base) = baseline.regimes.iter().find(|r| r.model == cur.model) else {
            continue;
        };
        let fields = [
            ("SW", base.social_welfare, cur.social_welfare),
            ("IS", base.investor_surplus, cur.investor_surplus),
            ("PS", base.producer_surplus, cur.producer_surplus),
            ("CS", base.consumer_surplus, cur.consumer_surplus),
            ("GR", base.grid_revenue, cur.grid_revenue),
            ("price_mean", base.price_mean, cur.price_mean),
            (
                "investment_total_mwh",
                base.investment_total_mwh,
                cur.investment_total_mwh,
            ),
            ("emissions_tons", base.emissions_tons, cur.emissions_tons),
        ];
        for (name, b, c) in fields {
            deltas.push(BaselineDelta {
                model: cur.model.clone(),
                field: name.to_string(),
                baseline: b,
                current: c,
                delta: c - b,
            });
        }
    }
    deltas
}
