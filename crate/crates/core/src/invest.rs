//! Upper-level investment search: exhaustive enumeration of the discrete
//! decision lattice, one lower-level equilibrium per decision, deterministic
//! tie-breaking.

use crate::equilibrium::{
    compute_welfare, merchant_profit, solve_market, EquilibriumSolution, MarketError, Welfare,
};
use crate::model::{InvestmentCatalog, InvestmentDecision, ScenarioModel};
use crate::qp::CompetitionMode;
use crate::solver::SolverSettings;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Hard cap on the enumerated lattice.
pub const MAX_DECISIONS: usize = 1 << 20;

/// Upper-objective ties closer than this (EUR/week) are broken by size.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// The five market-design regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Central planner: welfare-maximizing investment, competitive dispatch.
    CentralPlanning,
    /// Welfare-maximizing investor over a perfectly competitive market.
    WelfarePc,
    /// Merchant investor over a perfectly competitive market.
    MerchantPc,
    /// Welfare-maximizing investor over a Cournot market.
    WelfareCo,
    /// Merchant investor over a Cournot market.
    MerchantCo,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::CentralPlanning,
        Regime::WelfarePc,
        Regime::MerchantPc,
        Regime::WelfareCo,
        Regime::MerchantCo,
    ];

    /// Lower-level competition mode.
    pub fn mode(&self) -> CompetitionMode {
        match self {
            Regime::CentralPlanning | Regime::WelfarePc | Regime::MerchantPc => {
                CompetitionMode::PerfectCompetition
            }
            Regime::WelfareCo | Regime::MerchantCo => CompetitionMode::CournotOligopoly,
        }
    }

    /// True when the upper level maximizes the investor's own profit.
    pub fn is_merchant(&self) -> bool {
        matches!(self, Regime::MerchantPc | Regime::MerchantCo)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Regime::CentralPlanning => "CP",
            Regime::WelfarePc => "SW-PC",
            Regime::MerchantPc => "M-PC",
            Regime::WelfareCo => "SW-CO",
            Regime::MerchantCo => "M-CO",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        Regime::ALL.iter().copied().find(|r| r.label() == s)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("decision lattice has more than {MAX_DECISIONS} points")]
    LatticeTooLarge,
    #[error("equilibrium for decision {decision:?} failed: {source}")]
    Equilibrium {
        decision: Vec<usize>,
        source: MarketError,
    },
}

/// All decisions in lexicographic order (last candidate varies fastest).
pub fn enumerate_decisions(
    catalog: &InvestmentCatalog,
) -> Result<Vec<InvestmentDecision>, SearchError> {
    let k = catalog.candidates.len();
    let s = catalog.sizes_mwh.len();
    let mut count = 1usize;
    for _ in 0..k {
        count = count
            .checked_mul(s)
            .filter(|&c| c <= MAX_DECISIONS)
            .ok_or(SearchError::LatticeTooLarge)?;
    }
    let mut out = Vec::with_capacity(count);
    let mut idx = vec![0usize; k];
    loop {
        out.push(InvestmentDecision {
            size_index: idx.clone(),
        });
        // increment from the last position
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < s {
                break;
            }
            idx[pos] = 0;
            if pos == 0 {
                return Ok(out);
            }
        }
        if k == 0 {
            return Ok(out);
        }
    }
}

/// Per-decision search record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision: InvestmentDecision,
    pub total_mwh: f64,
    /// Value of the regime's upper-level objective, EUR/week.
    pub upper_objective: f64,
    pub social_welfare: f64,
    pub merchant_profit: f64,
    pub iterations: usize,
}

/// Result of an exhaustive upper-level search.
#[derive(Debug)]
pub struct SearchOutcome {
    pub regime: Regime,
    pub best: EquilibriumSolution,
    pub best_welfare: Welfare,
    pub best_merchant_profit: f64,
    /// One record per enumerated decision, lexicographic order.
    pub records: Vec<DecisionRecord>,
}

impl SearchOutcome {
    pub fn best_record(&self) -> &DecisionRecord {
        let best_idx = self
            .records
            .iter()
            .position(|r| r.decision == self.best.decision)
            .expect("best decision is among the records");
        &self.records[best_idx]
    }
}

/// Solve the bi-level problem for one regime by full enumeration. Lower-level
/// solves run in parallel; the selection is deterministic: highest upper
/// objective, ties broken by smallest installed energy, then lexicographic
/// order of the decision vector.
pub fn optimize_investment(
    scenario: &ScenarioModel,
    regime: Regime,
    settings: &SolverSettings,
) -> Result<SearchOutcome, SearchError> {
    let decisions = enumerate_decisions(&scenario.investment)?;
    let mode = regime.mode();

    // Chunked parallelism: each worker carries a warm start through its
    // contiguous slice of the (similar) lattice.
    let chunk = decisions.len().div_ceil(rayon::current_num_threads().max(1));
    let records: Result<Vec<Vec<DecisionRecord>>, SearchError> = decisions
        .par_chunks(chunk.max(1))
        .map(|slice| {
            let mut out = Vec::with_capacity(slice.len());
            let mut warm = None;
            for z in slice {
                let eq = solve_market(scenario, mode, z, settings, warm.as_ref()).map_err(
                    |source| SearchError::Equilibrium {
                        decision: z.size_index.clone(),
                        source,
                    },
                )?;
                let welfare = compute_welfare(scenario, &eq);
                let mp = merchant_profit(scenario, &eq);
                let upper = match regime {
                    // The planner maximizes the dispatch objective (the ISO's
                    // gross-surplus QP value) net of investment cost, without
                    // going through the welfare decomposition.
                    Regime::CentralPlanning => {
                        eq.objective - z.cost(&scenario.investment)
                    }
                    Regime::MerchantPc | Regime::MerchantCo => mp,
                    Regime::WelfarePc | Regime::WelfareCo => welfare.social_welfare,
                };
                out.push(DecisionRecord {
                    decision: z.clone(),
                    total_mwh: z.total_mwh(&scenario.investment),
                    upper_objective: upper,
                    social_welfare: welfare.social_welfare,
                    merchant_profit: mp,
                    iterations: eq.solution.iterations,
                });
                warm = Some(eq.warm_start());
            }
            Ok(out)
        })
        .collect();
    let records: Vec<DecisionRecord> = records?.into_iter().flatten().collect();

    let best = records
        .iter()
        .reduce(|a, b| if better(b, a) { b } else { a })
        .expect("lattice contains at least the all-zero decision");

    let eq = solve_market(scenario, mode, &best.decision, settings, None).map_err(|source| {
        SearchError::Equilibrium {
            decision: best.decision.size_index.clone(),
            source,
        }
    })?;
    let best_welfare = compute_welfare(scenario, &eq);
    let best_merchant_profit = merchant_profit(scenario, &eq);
    Ok(SearchOutcome {
        regime,
        best: eq,
        best_welfare,
        best_merchant_profit,
        records,
    })
}

/// Is `b` strictly preferred to `a`?
fn better(b: &DecisionRecord, a: &DecisionRecord) -> bool {
    if (b.upper_objective - a.upper_objective).abs() > TIE_TOLERANCE {
        return b.upper_objective > a.upper_objective;
    }
    if (b.total_mwh - a.total_mwh).abs() > 1e-9 {
        return b.total_mwh < a.total_mwh;
    }
    b.decision.size_index < a.decision.size_index
}

/// Central-planning benchmark: welfare-maximizing investment over
/// competitive dispatch.
pub fn solve_central_planning(
    scenario: &ScenarioModel,
    settings: &SolverSettings,
) -> Result<SearchOutcome, SearchError> {
    optimize_investment(scenario, Regime::CentralPlanning, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StorageTech;

    fn catalog(sizes: Vec<f64>, candidates: Vec<usize>) -> InvestmentCatalog {
        InvestmentCatalog {
            sizes_mwh: sizes,
            weekly_cost: 1.0,
            tech: StorageTech {
                input_efficiency: 1.0,
                decay: 0.0,
                rate_in: 0.5,
                rate_out: 0.5,
            },
            min_factor: 0.0,
            candidates,
        }
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let cat = catalog(vec![0.0, 100.0], vec![0, 1, 2]);
        let d = enumerate_decisions(&cat).unwrap();
        assert_eq!(d.len(), 8);
        assert_eq!(d[0].size_index, vec![0, 0, 0]);
        assert_eq!(d[1].size_index, vec![0, 0, 1]);
        assert_eq!(d[7].size_index, vec![1, 1, 1]);
        let mut sorted = d.clone();
        sorted.sort_by(|a, b| a.size_index.cmp(&b.size_index));
        assert_eq!(d, sorted);
    }

    #[test]
    fn enumeration_no_candidates() {
        let cat = catalog(vec![0.0, 100.0], vec![]);
        let d = enumerate_decisions(&cat).unwrap();
        assert_eq!(d.len(), 1);
        assert!(d[0].size_index.is_empty());
    }

    #[test]
    fn enumeration_rejects_huge_lattice() {
        let cat = catalog((0..64).map(|i| i as f64 * 10.0).collect(), (0..16).collect());
        assert!(matches!(
            enumerate_decisions(&cat),
            Err(SearchError::LatticeTooLarge)
        ));
    }

    #[test]
    fn tie_break_prefers_smaller_then_lex() {
        let rec = |obj: f64, idx: Vec<usize>, mwh: f64| DecisionRecord {
            decision: InvestmentDecision { size_index: idx },
            total_mwh: mwh,
            upper_objective: obj,
            social_welfare: 0.0,
            merchant_profit: 0.0,
            iterations: 0,
        };
        let a = rec(10.0, vec![0, 1], 100.0);
        let b = rec(10.0, vec![1, 0], 100.0);
        let c = rec(10.0, vec![1, 1], 50.0);
        assert!(!better(&b, &a)); // lex order keeps a
        assert!(better(&c, &a)); // smaller size wins a tie
        let d = rec(20.0, vec![1, 1], 500.0);
        assert!(better(&d, &c)); // objective dominates
    }
}
