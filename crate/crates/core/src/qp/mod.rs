//! Standard-form sparse convex QP with bidirectional index maps back to
//! market-model symbols.

mod assemble;

pub use assemble::{assemble_iso_qp, AssembleError};

use crate::sparse::CscMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Lower-level market regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompetitionMode {
    PerfectCompetition,
    CournotOligopoly,
}

impl std::fmt::Display for CompetitionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CompetitionMode::PerfectCompetition => write!(f, "PC"),
            CompetitionMode::CournotOligopoly => write!(f, "CO"),
        }
    }
}

/// Which storage fleet a storage variable belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StoRef {
    /// `asset` indexes into the producer's `storage` vector.
    Producer { producer: usize, asset: usize },
    /// `candidate` indexes into the investment catalog's candidate list.
    Investor { candidate: usize },
}

impl StoRef {
    pub fn is_investor(&self) -> bool {
        matches!(self, StoRef::Investor { .. })
    }
}

/// Primal variable identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKey {
    /// q_{m,t,n}
    Demand { m: usize, t: usize, n: usize },
    /// v_{m,t,n}
    Angle { m: usize, t: usize, n: usize },
    /// g^conv; `unit` indexes into the producer's unit list.
    Conv { m: usize, t: usize, producer: usize, unit: usize },
    /// g^e; `asset` indexes into the producer's VRES list.
    Vres { m: usize, t: usize, producer: usize, asset: usize },
    /// r^sto
    StoLevel { m: usize, t: usize, sto: StoRef },
    /// r^in
    StoIn { m: usize, t: usize, sto: StoRef },
    /// r^out
    StoOut { m: usize, t: usize, sto: StoRef },
}

/// Constraint family and instance identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConKey {
    /// Nodal energy balance (equality), dual theta.
    Balance { m: usize, t: usize, n: usize },
    /// Slack-node voltage angle pinned to zero (equality).
    SlackPin { m: usize, t: usize },
    /// VRES availability equality, dual beta^e.
    VresEq { m: usize, t: usize, producer: usize, asset: usize },
    /// Storage energy balance (equality), dual lambda^bal.
    StoBalance { m: usize, t: usize, sto: StoRef },
    /// Generation capacity, dual beta^conv.
    GenCap { m: usize, t: usize, producer: usize, unit: usize },
    /// Ramping, duals beta^up / beta^down.
    RampUp { m: usize, t: usize, producer: usize, unit: usize },
    RampDown { m: usize, t: usize, producer: usize, unit: usize },
    /// Storage charge/discharge/level bounds, duals lambda^{in,out,ub,lb}.
    StoInCap { m: usize, t: usize, sto: StoRef },
    StoOutCap { m: usize, t: usize, sto: StoRef },
    StoUb { m: usize, t: usize, sto: StoRef },
    StoLb { m: usize, t: usize, sto: StoRef },
    /// Line limits in each direction, duals mu-bar / mu-underbar.
    LineFwd { m: usize, t: usize, line: usize },
    LineBwd { m: usize, t: usize, line: usize },
    /// Sign restriction -x <= 0 for the variable at the given column.
    NonNeg { var: usize },
}

/// Coarse family label, used for residual reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Balance,
    SlackPin,
    VresEq,
    StoBalance,
    GenCap,
    RampUp,
    RampDown,
    StoInCap,
    StoOutCap,
    StoUb,
    StoLb,
    LineFwd,
    LineBwd,
    NonNeg,
}

impl ConKey {
    pub fn family(&self) -> Family {
        match self {
            ConKey::Balance { .. } => Family::Balance,
            ConKey::SlackPin { .. } => Family::SlackPin,
            ConKey::VresEq { .. } => Family::VresEq,
            ConKey::StoBalance { .. } => Family::StoBalance,
            ConKey::GenCap { .. } => Family::GenCap,
            ConKey::RampUp { .. } => Family::RampUp,
            ConKey::RampDown { .. } => Family::RampDown,
            ConKey::StoInCap { .. } => Family::StoInCap,
            ConKey::StoOutCap { .. } => Family::StoOutCap,
            ConKey::StoUb { .. } => Family::StoUb,
            ConKey::StoLb { .. } => Family::StoLb,
            ConKey::LineFwd { .. } => Family::LineFwd,
            ConKey::LineBwd { .. } => Family::LineBwd,
            ConKey::NonNeg { .. } => Family::NonNeg,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Family::Balance => "balance",
            Family::SlackPin => "slack-pin",
            Family::VresEq => "vres-eq",
            Family::StoBalance => "sto-balance",
            Family::GenCap => "gen-cap",
            Family::RampUp => "ramp-up",
            Family::RampDown => "ramp-down",
            Family::StoInCap => "sto-in",
            Family::StoOutCap => "sto-out",
            Family::StoUb => "sto-ub",
            Family::StoLb => "sto-lb",
            Family::LineFwd => "line-fwd",
            Family::LineBwd => "line-bwd",
            Family::NonNeg => "nonneg",
        };
        write!(f, "{s}")
    }
}

/// Sparse convex QP in the form
///   minimize (1/2) x' P x + c' x
///   s.t.     A_eq x = b_eq,  A_in x <= h
/// with index maps between columns/rows and model symbols. The market
/// objective is a maximization; it is stored negated.
#[derive(Debug, Clone)]
pub struct StandardQP {
    pub p: CscMatrix,
    pub c: Vec<f64>,
    pub a_eq: CscMatrix,
    pub b_eq: Vec<f64>,
    pub a_in: CscMatrix,
    pub h: Vec<f64>,
    pub vars: Vec<VarKey>,
    pub var_index: HashMap<VarKey, usize>,
    pub eq_cons: Vec<ConKey>,
    pub eq_index: HashMap<ConKey, usize>,
    pub in_cons: Vec<ConKey>,
    pub in_index: HashMap<ConKey, usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum QpError {
    #[error("vector length {got} does not match {want} variables")]
    DimensionMismatch { got: usize, want: usize },
}

impl StandardQP {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.var_index.get(&key).copied()
    }

    pub fn eq_row(&self, key: ConKey) -> Option<usize> {
        self.eq_index.get(&key).copied()
    }

    pub fn in_row(&self, key: ConKey) -> Option<usize> {
        self.in_index.get(&key).copied()
    }

    /// ISO objective in the maximization sense at a primal point.
    pub fn objective_value(&self, x: &[f64]) -> Result<f64, QpError> {
        if x.len() != self.num_vars() {
            return Err(QpError::DimensionMismatch {
                got: x.len(),
                want: self.num_vars(),
            });
        }
        let px = self.p.mul_vec(x);
        let quad: f64 = 0.5 * x.iter().zip(&px).map(|(a, b)| a * b).sum::<f64>();
        let lin: f64 = x.iter().zip(&self.c).map(|(a, b)| a * b).sum();
        Ok(-(quad + lin))
    }

    /// Plain-text sparse triplet dump with an index-map header, for
    /// external cross-checks.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# vars {} eq {} in {}\n",
            self.num_vars(),
            self.b_eq.len(),
            self.h.len()
        ));
        for (i, v) in self.vars.iter().enumerate() {
            out.push_str(&format!("# var {i} {v:?}\n"));
        }
        for (i, k) in self.eq_cons.iter().enumerate() {
            out.push_str(&format!("# eq {i} {k:?}\n"));
        }
        for (i, k) in self.in_cons.iter().enumerate() {
            out.push_str(&format!("# in {i} {k:?}\n"));
        }
        for (section, m) in [("P", &self.p), ("Aeq", &self.a_eq), ("Ain", &self.a_in)] {
            out.push_str(&format!("# section {section}\n"));
            for (r, c, v) in m.triplets() {
                out.push_str(&format!("{r} {c} {v:.17e}\n"));
            }
        }
        out.push_str("# section beq\n");
        for (i, v) in self.b_eq.iter().enumerate() {
            out.push_str(&format!("{i} {v:.17e}\n"));
        }
        out.push_str("# section h\n");
        for (i, v) in self.h.iter().enumerate() {
            out.push_str(&format!("{i} {v:.17e}\n"));
        }
        out
    }
}
