//! Domain types for the market scenario: sets, network, producers, demand,
//! storage, and the discrete investment catalog.

mod network;
mod validate;

pub use network::{build_network, Line, NetworkError, TransmissionNetwork};
pub use validate::{validate_scenario, Violation};

use serde::{Deserialize, Serialize};

/// VRES technology type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VresKind {
    Solar,
    Wind,
}

impl std::fmt::Display for VresKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VresKind::Solar => write!(f, "solar"),
            VresKind::Wind => write!(f, "wind"),
        }
    }
}

/// One representative period set with its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Dimensionless weight; all cluster weights sum to one.
    pub weight: f64,
    /// Period durations in hours.
    pub period_hours: Vec<f64>,
}

impl Cluster {
    pub fn num_periods(&self) -> usize {
        self.period_hours.len()
    }
}

/// A conventional generation unit owned by one producer at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationUnit {
    pub tech: String,
    pub node: usize,
    /// Marginal cost in EUR/MWh.
    pub marginal_cost: f64,
    /// Installed capacity in MW.
    pub capacity_mw: f64,
    /// Max hourly ramp up/down as a fraction of capacity.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// kg CO2 per kWh of output.
    pub emission_factor: f64,
    /// Fraction of installed capacity that is available.
    pub availability: f64,
}

impl GenerationUnit {
    /// Derated capacity actually offered to the market (MW).
    pub fn effective_capacity(&self) -> f64 {
        self.availability * self.capacity_mw
    }
}

/// A VRES asset (one type at one node for one producer) with per-period
/// availability factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VresAsset {
    pub kind: VresKind,
    pub node: usize,
    pub capacity_mw: f64,
    /// availability[m][t] in [0, 1]
    pub availability: Vec<Vec<f64>>,
}

/// Shared storage technology parameters for one owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageTech {
    /// Input (charging) efficiency, (0, 1].
    pub input_efficiency: f64,
    /// Hourly decay rate in [0, 1).
    pub decay: f64,
    /// Max hourly charge rate as a fraction of energy capacity.
    pub rate_in: f64,
    /// Max hourly discharge rate as a fraction of energy capacity.
    pub rate_out: f64,
}

/// Existing storage owned by a producer at a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageAsset {
    pub node: usize,
    pub energy_capacity_mwh: f64,
    /// Minimum state of charge as a fraction of capacity, [0, 1).
    #[serde(default)]
    pub min_factor: f64,
}

/// A producer company with its generation and storage fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Producer {
    pub name: String,
    #[serde(default)]
    pub units: Vec<GenerationUnit>,
    #[serde(default)]
    pub vres: Vec<VresAsset>,
    #[serde(default)]
    pub storage: Vec<StorageAsset>,
    #[serde(default = "default_storage_tech")]
    pub storage_tech: StorageTech,
}

fn default_storage_tech() -> StorageTech {
    StorageTech {
        input_efficiency: 1.0,
        decay: 0.0,
        rate_in: 1.0,
        rate_out: 1.0,
    }
}

/// Linear inverse demand p(q) = intercept - slope * q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandCurve {
    /// EUR/MWh
    pub intercept: f64,
    /// EUR/MWh^2
    pub slope: f64,
}

impl DemandCurve {
    pub fn price(&self, q: f64) -> f64 {
        self.intercept - self.slope * q
    }
}

/// The discrete investment options open to the upper-level investor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvestmentCatalog {
    /// Discrete sizes in MWh, strictly increasing, first entry exactly zero.
    pub sizes_mwh: Vec<f64>,
    /// Amortized weekly cost in EUR/MWh.
    pub weekly_cost: f64,
    pub tech: StorageTech,
    /// Minimum state of charge of the new storage, fraction.
    #[serde(default)]
    pub min_factor: f64,
    /// Candidate node indices.
    pub candidates: Vec<usize>,
}

/// A binary size selection per candidate node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvestmentDecision {
    /// size_index[k] selects `catalog.sizes_mwh[size_index[k]]` for
    /// `catalog.candidates[k]`.
    pub size_index: Vec<usize>,
}

impl InvestmentDecision {
    pub fn all_zero(catalog: &InvestmentCatalog) -> Self {
        InvestmentDecision {
            size_index: vec![0; catalog.candidates.len()],
        }
    }

    /// Installed capacity at a node (MWh); zero off the candidate set.
    pub fn capacity_at(&self, catalog: &InvestmentCatalog, node: usize) -> f64 {
        catalog
            .candidates
            .iter()
            .position(|&c| c == node)
            .map(|k| catalog.sizes_mwh[self.size_index[k]])
            .unwrap_or(0.0)
    }

    pub fn total_mwh(&self, catalog: &InvestmentCatalog) -> f64 {
        self.size_index
            .iter()
            .map(|&s| catalog.sizes_mwh[s])
            .sum()
    }

    /// Amortized weekly investment cost charged for this decision (EUR).
    pub fn cost(&self, catalog: &InvestmentCatalog) -> f64 {
        catalog.weekly_cost * self.total_mwh(catalog)
    }

    pub fn is_valid_for(&self, catalog: &InvestmentCatalog) -> bool {
        self.size_index.len() == catalog.candidates.len()
            && self.size_index.iter().all(|&s| s < catalog.sizes_mwh.len())
    }
}

/// Full immutable market description. Validated once, then shared freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioModel {
    pub name: String,
    pub nodes: Vec<String>,
    pub network: TransmissionNetwork,
    pub clusters: Vec<Cluster>,
    pub producers: Vec<Producer>,
    /// Cost of discharging any storage, EUR/MWh.
    #[serde(default)]
    pub storage_discharge_cost: f64,
    /// demand[m][t][n], None at nodes without load.
    pub demand: Vec<Vec<Vec<Option<DemandCurve>>>>,
    pub investment: InvestmentCatalog,
}

impl ScenarioModel {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    pub fn demand_at(&self, m: usize, t: usize, n: usize) -> Option<DemandCurve> {
        self.demand[m][t][n]
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("reference quantity must be positive, got {0}")]
    NonPositiveQuantity(f64),
    #[error("reference price must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("demand elasticity must be negative, got {0}")]
    NonNegativeElasticity(f64),
}

/// Calibrate a linear inverse demand curve to pass through
/// (`q_ref`, `p_ref`) with the given point elasticity.
pub fn calibrate_demand(
    q_ref: f64,
    p_ref: f64,
    elasticity: f64,
) -> Result<DemandCurve, CalibrationError> {
    if q_ref <= 0.0 {
        return Err(CalibrationError::NonPositiveQuantity(q_ref));
    }
    if p_ref <= 0.0 {
        return Err(CalibrationError::NonPositivePrice(p_ref));
    }
    if elasticity >= 0.0 {
        return Err(CalibrationError::NonNegativeElasticity(elasticity));
    }
    let slope = -p_ref / (elasticity * q_ref);
    let intercept = p_ref + slope * q_ref;
    Ok(DemandCurve { intercept, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrate_reference_case() {
        let c = calibrate_demand(100.0, 50.0, -0.25).unwrap();
        assert!((c.slope - 2.0).abs() < 1e-12);
        assert!((c.intercept - 250.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_unit_elasticity() {
        let (q, p) = (37.0, 81.5);
        let c = calibrate_demand(q, p, -1.0).unwrap();
        assert!((c.slope - p / q).abs() < 1e-12);
        assert!((c.intercept - 2.0 * p).abs() < 1e-12);
    }

    #[test]
    fn calibrate_roundtrip_through_reference() {
        let c = calibrate_demand(100.0, 50.0, -0.25).unwrap();
        assert!((c.price(100.0) - 50.0).abs() < 1e-12);
    }

    #[test]
    fn calibrate_rejects_bad_inputs() {
        assert!(calibrate_demand(0.0, 50.0, -0.25).is_err());
        assert!(calibrate_demand(100.0, -1.0, -0.25).is_err());
        assert!(calibrate_demand(100.0, 50.0, 0.0).is_err());
    }

    #[test]
    fn decision_capacity_lookup() {
        let catalog = InvestmentCatalog {
            sizes_mwh: vec![0.0, 50.0, 100.0],
            weekly_cost: 10.0,
            tech: default_storage_tech(),
            min_factor: 0.0,
            candidates: vec![0, 2],
        };
        let z = InvestmentDecision {
            size_index: vec![2, 1],
        };
        assert_eq!(z.capacity_at(&catalog, 0), 100.0);
        assert_eq!(z.capacity_at(&catalog, 1), 0.0);
        assert_eq!(z.capacity_at(&catalog, 2), 50.0);
        assert_eq!(z.total_mwh(&catalog), 150.0);
        assert_eq!(z.cost(&catalog), 1500.0);
    }
}
