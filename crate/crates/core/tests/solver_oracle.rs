//! The iterative QP solver against a brute-force active-set oracle on
//! hundreds of random strictly convex problems.

mod common;

use common::{max_abs_diff, oracle_solve, random_qp, rng};
use equigrid::solver::{solve_qp, SolveStatus, SolverSettings};

#[test]
fn solver_matches_oracle_on_random_qps() {
    let mut r = rng(0x5eed_01);
    let settings = SolverSettings::default();
    let mut worst_obj = 0.0f64;
    let mut worst_dual = 0.0f64;
    for case in 0..200 {
        let qp = random_qp(&mut r);
        let oracle = oracle_solve(&qp).expect("random QPs are feasible by construction");
        let sol = solve_qp(&qp, &settings);
        assert_eq!(
            sol.status,
            SolveStatus::Solved,
            "case {case}: solver failed ({:?})",
            sol.residuals
        );
        let obj = {
            let px = qp.p.mul_vec(&sol.x);
            0.5 * sol.x.iter().zip(&px).map(|(a, b)| a * b).sum::<f64>()
                + sol.x.iter().zip(&qp.c).map(|(a, b)| a * b).sum::<f64>()
        };
        let obj_err = (obj - oracle.objective).abs() / (1.0 + oracle.objective.abs());
        assert!(
            obj_err < 1e-6,
            "case {case}: objective mismatch {obj} vs {} (rel {obj_err:.2e})",
            oracle.objective
        );
        let x_err = max_abs_diff(&sol.x, &oracle.x);
        assert!(x_err < 1e-5, "case {case}: primal mismatch {x_err:.2e}");
        let eq_err = max_abs_diff(&sol.y_eq, &oracle.y_eq);
        let in_err = max_abs_diff(&sol.y_in, &oracle.y_in);
        assert!(
            eq_err < 1e-5 && in_err < 1e-5,
            "case {case}: dual mismatch eq {eq_err:.2e} in {in_err:.2e}"
        );
        worst_obj = worst_obj.max(obj_err);
        worst_dual = worst_dual.max(eq_err.max(in_err));
    }
    println!("worst relative objective error: {worst_obj:.3e}");
    println!("worst dual error: {worst_dual:.3e}");
}
