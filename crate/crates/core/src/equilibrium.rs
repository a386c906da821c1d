//! Lower-level market equilibrium: solve the ISO QP for a fixed investment
//! decision and read prices, quantities, and welfare out of the primal-dual
//! solution.

use crate::model::{InvestmentDecision, ScenarioModel};
use crate::qp::{assemble_iso_qp, AssembleError, CompetitionMode, ConKey, StandardQP, StoRef, VarKey};
use crate::solver::{
    solve_qp_warm, PrimalDualSolution, SolveStatus, SolverSettings, WarmStart,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MarketError {
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error("market QP did not solve: {0:?}")]
    NotSolved(SolveStatus),
}

/// A solved market equilibrium for one (mode, decision) pair.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub mode: CompetitionMode,
    pub decision: InvestmentDecision,
    pub qp: StandardQP,
    pub solution: PrimalDualSolution,
    /// prices[m][t][n] in EUR/MWh; zero at nodes without a demand curve.
    pub prices: Vec<Vec<Vec<f64>>>,
    /// ISO objective value (maximization sense).
    pub objective: f64,
}

impl EquilibriumSolution {
    pub fn primal(&self, key: VarKey) -> f64 {
        self.qp.var(key).map(|j| self.solution.x[j]).unwrap_or(0.0)
    }

    pub fn dual_eq(&self, key: ConKey) -> f64 {
        self.qp
            .eq_row(key)
            .map(|i| self.solution.y_eq[i])
            .unwrap_or(0.0)
    }

    pub fn dual_in(&self, key: ConKey) -> f64 {
        self.qp
            .in_row(key)
            .map(|i| self.solution.y_in[i])
            .unwrap_or(0.0)
    }

    pub fn price(&self, m: usize, t: usize, n: usize) -> f64 {
        self.prices[m][t][n]
    }

    /// Warm-start data for a related solve (same scenario structure).
    pub fn warm_start(&self) -> WarmStart {
        let n_eq = self.qp.b_eq.len();
        let mut y = Vec::with_capacity(n_eq + self.qp.h.len());
        y.extend_from_slice(&self.solution.y_eq);
        y.extend_from_slice(&self.solution.y_in);
        let mut z = self.qp.a_eq.mul_vec(&self.solution.x);
        let ax_in = self.qp.a_in.mul_vec(&self.solution.x);
        z.extend(
            ax_in
                .iter()
                .zip(&self.qp.h)
                .map(|(&ax, &hh)| ax.min(hh)),
        );
        WarmStart {
            x: self.solution.x.clone(),
            y,
            z,
        }
    }
}

/// Solve the market for one mode and investment decision.
pub fn solve_market(
    scenario: &ScenarioModel,
    mode: CompetitionMode,
    z: &InvestmentDecision,
    settings: &SolverSettings,
    warm: Option<&WarmStart>,
) -> Result<EquilibriumSolution, MarketError> {
    let qp = assemble_iso_qp(scenario, mode, z)?;
    let solution = solve_qp_warm(&qp, settings, warm);
    if solution.status != SolveStatus::Solved {
        return Err(MarketError::NotSolved(solution.status));
    }

    let mut prices = Vec::with_capacity(scenario.clusters.len());
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        let w = cluster.weight;
        let mut per_t = Vec::with_capacity(cluster.num_periods());
        for t in 0..cluster.num_periods() {
            let mut per_n = vec![0.0; scenario.num_nodes()];
            for (n, price) in per_n.iter_mut().enumerate() {
                if let Some(row) = qp.eq_row(ConKey::Balance { m, t, n }) {
                    // theta is the balance dual of the min-form problem;
                    // prices are theta / W_m.
                    if scenario.demand_at(m, t, n).is_some() {
                        *price = solution.y_eq[row] / w;
                    }
                }
            }
            per_t.push(per_n);
        }
        prices.push(per_t);
    }

    let objective = qp
        .objective_value(&solution.x)
        .expect("solution has QP dimensions");
    Ok(EquilibriumSolution {
        mode,
        decision: z.clone(),
        qp,
        solution,
        prices,
        objective,
    })
}

/// Surplus decomposition of one equilibrium, all in EUR per week.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Welfare {
    pub consumer_surplus: f64,
    /// Per producer, in scenario order.
    pub producer_surplus: Vec<f64>,
    pub producer_surplus_total: f64,
    /// Merchant operating profit of the new storage minus investment cost.
    pub investor_surplus: f64,
    pub grid_revenue: f64,
    /// CS + PS + IS + GR.
    pub social_welfare: f64,
    pub investment_cost: f64,
    /// Tonnes of CO2 per week.
    pub emissions_tons: f64,
    /// Duration-weighted mean price over demand-bearing nodes, EUR/MWh.
    pub price_mean: f64,
}

/// Operating profit of the investor's storage fleet (before investment
/// cost), EUR per week.
pub fn investor_operating_profit(scenario: &ScenarioModel, eq: &EquilibriumSolution) -> f64 {
    let cat = &scenario.investment;
    let c_sto = scenario.storage_discharge_cost;
    let mut profit = 0.0;
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        let w = cluster.weight;
        for t in 0..cluster.num_periods() {
            for (k, &node) in cat.candidates.iter().enumerate() {
                let sto = StoRef::Investor { candidate: k };
                let r_out = eq.primal(VarKey::StoOut { m, t, sto });
                let r_in = eq.primal(VarKey::StoIn { m, t, sto });
                let p = eq.price(m, t, node);
                profit += w * (p * (r_out - r_in) - c_sto * r_out);
            }
        }
    }
    profit
}

/// Merchant objective: operating profit minus amortized investment cost.
pub fn merchant_profit(scenario: &ScenarioModel, eq: &EquilibriumSolution) -> f64 {
    investor_operating_profit(scenario, eq) - eq.decision.cost(&scenario.investment)
}

/// Full surplus decomposition at an equilibrium.
pub fn compute_welfare(scenario: &ScenarioModel, eq: &EquilibriumSolution) -> Welfare {
    let nn = scenario.num_nodes();
    let c_sto = scenario.storage_discharge_cost;

    let mut consumer_surplus = 0.0;
    let mut grid_revenue = 0.0;
    let mut emissions_tons = 0.0;
    let mut price_num = 0.0;
    let mut price_den = 0.0;
    let mut producer_surplus = vec![0.0; scenario.producers.len()];

    for (m, cluster) in scenario.clusters.iter().enumerate() {
        let w = cluster.weight;
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            // consumer surplus and mean price
            for n in 0..nn {
                if let Some(curve) = scenario.demand_at(m, t, n) {
                    let q = eq.primal(VarKey::Demand { m, t, n });
                    let p = eq.price(m, t, n);
                    let utility = curve.intercept * q - 0.5 * curve.slope * q * q;
                    consumer_surplus += w * (utility - p * q);
                    price_num += w * dur * p;
                    price_den += w * dur;
                }
            }
            // grid revenue: payment for net imports, p' (T_t B v)
            let mut angles = vec![0.0; nn];
            for (n, a) in angles.iter_mut().enumerate() {
                *a = eq.primal(VarKey::Angle { m, t, n });
            }
            for n in 0..nn {
                let mut net_import = 0.0;
                for n2 in 0..nn {
                    net_import += dur * scenario.network.b[n][n2] * angles[n2];
                }
                grid_revenue += w * eq.price(m, t, n) * net_import;
            }
            // producer surplus and emissions
            for (i, p) in scenario.producers.iter().enumerate() {
                let mut surplus = 0.0;
                for (u, unit) in p.units.iter().enumerate() {
                    let g = eq.primal(VarKey::Conv {
                        m,
                        t,
                        producer: i,
                        unit: u,
                    });
                    surplus += eq.price(m, t, unit.node) * g - unit.marginal_cost * g;
                    emissions_tons += w * unit.emission_factor * g;
                }
                for (e, asset) in p.vres.iter().enumerate() {
                    let g = eq.primal(VarKey::Vres {
                        m,
                        t,
                        producer: i,
                        asset: e,
                    });
                    surplus += eq.price(m, t, asset.node) * g;
                }
                for (k, asset) in p.storage.iter().enumerate() {
                    let sto = StoRef::Producer {
                        producer: i,
                        asset: k,
                    };
                    let r_out = eq.primal(VarKey::StoOut { m, t, sto });
                    let r_in = eq.primal(VarKey::StoIn { m, t, sto });
                    surplus +=
                        eq.price(m, t, asset.node) * (r_out - r_in) - c_sto * r_out;
                }
                producer_surplus[i] += w * surplus;
            }
        }
    }

    let investment_cost = eq.decision.cost(&scenario.investment);
    let investor_surplus = investor_operating_profit(scenario, eq) - investment_cost;
    let producer_surplus_total: f64 = producer_surplus.iter().sum();
    let social_welfare =
        consumer_surplus + producer_surplus_total + investor_surplus + grid_revenue;
    Welfare {
        consumer_surplus,
        producer_surplus,
        producer_surplus_total,
        investor_surplus,
        grid_revenue,
        social_welfare,
        investment_cost,
        emissions_tons,
        price_mean: if price_den > 0.0 {
            price_num / price_den
        } else {
            0.0
        },
    }
}
