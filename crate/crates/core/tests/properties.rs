//! Property-based invariants over random scenarios and QPs.

mod common;

use common::{random_scenario, rng};
use equigrid::model::InvestmentDecision;
use equigrid::qp::{assemble_iso_qp, CompetitionMode};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The assembled quadratic form is positive semidefinite: x'Px >= 0 for
    /// random x, both with and without the Cournot extension.
    #[test]
    fn assembled_p_is_psd(seed in any::<u64>(), mode_co in any::<bool>()) {
        let mut r = rng(seed);
        let scenario = random_scenario(&mut r);
        let z = InvestmentDecision::all_zero(&scenario.investment);
        let mode = if mode_co {
            CompetitionMode::CournotOligopoly
        } else {
            CompetitionMode::PerfectCompetition
        };
        let qp = assemble_iso_qp(&scenario, mode, &z).expect("assembles");
        let n = qp.num_vars();
        for _ in 0..8 {
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
            let px = qp.p.mul_vec(&x);
            let quad: f64 = x.iter().zip(&px).map(|(a, b)| a * b).sum();
            prop_assert!(quad >= -1e-9 * (1.0 + quad.abs()), "x'Px = {quad}");
        }
    }

    /// The Cournot extension only adds curvature: quadratic form under CO
    /// dominates the PC one at every point.
    #[test]
    fn cournot_adds_curvature(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scenario = random_scenario(&mut r);
        let z = InvestmentDecision::all_zero(&scenario.investment);
        let pc = assemble_iso_qp(&scenario, CompetitionMode::PerfectCompetition, &z).unwrap();
        let co = assemble_iso_qp(&scenario, CompetitionMode::CournotOligopoly, &z).unwrap();
        prop_assert_eq!(pc.num_vars(), co.num_vars());
        let n = pc.num_vars();
        for _ in 0..8 {
            let x: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
            let qpc: f64 = x.iter().zip(&pc.p.mul_vec(&x)).map(|(a, b)| a * b).sum();
            let qco: f64 = x.iter().zip(&co.p.mul_vec(&x)).map(|(a, b)| a * b).sum();
            prop_assert!(qco >= qpc - 1e-9 * (1.0 + qpc.abs()));
        }
    }

    /// Equality right-hand sides and inequality bounds are finite, and the
    /// investor's storage bounds scale linearly with the decision.
    #[test]
    fn investor_bounds_scale_with_decision(seed in any::<u64>()) {
        let mut r = rng(seed);
        let scenario = random_scenario(&mut r);
        let k = scenario.investment.candidates.len();
        let z0 = InvestmentDecision { size_index: vec![0; k] };
        let z1 = InvestmentDecision { size_index: vec![1; k] };
        let q0 = assemble_iso_qp(&scenario, CompetitionMode::PerfectCompetition, &z0).unwrap();
        let q1 = assemble_iso_qp(&scenario, CompetitionMode::PerfectCompetition, &z1).unwrap();
        prop_assert!(q0.b_eq.iter().chain(&q0.h).all(|v| v.is_finite()));
        prop_assert!(q1.b_eq.iter().chain(&q1.h).all(|v| v.is_finite()));
        let size = scenario.investment.sizes_mwh[1];
        for (row, key) in q1.in_cons.iter().enumerate() {
            use equigrid::qp::{ConKey, StoRef};
            let (is_inv, factor) = match key {
                ConKey::StoUb { sto: StoRef::Investor { .. }, .. } => (true, 1.0),
                ConKey::StoInCap { sto: StoRef::Investor { .. }, .. } => {
                    (true, scenario.investment.tech.rate_in)
                }
                ConKey::StoOutCap { sto: StoRef::Investor { .. }, .. } => {
                    (true, scenario.investment.tech.rate_out)
                }
                _ => (false, 0.0),
            };
            if is_inv {
                // duration scaling may multiply the rate rows; the bound must
                // be proportional to the installed size either way
                let h = q1.h[row];
                prop_assert!(h >= 0.0 && h <= size * factor.max(1.0) * 200.0 + 1e-9,
                    "row {row}: bound {h} size {size}");
                let z0_row = q0.in_row(*key).expect("same structure");
                prop_assert!(q0.h[z0_row].abs() < 1e-12, "zero decision keeps bound 0");
            }
        }
    }
}
