//! Active-set polishing: re-solve the equality-constrained QP restricted to
//! the constraints detected active by ADMM, through a lightly regularized
//! KKT system with iterative refinement.

use super::{kkt_residuals_parts, PrimalDualSolution, SolveStatus, SolverSettings};
use crate::qp::StandardQP;
use crate::sparse::{inf_norm, CscMatrix, KktSystem};

const POLISH_DELTA: f64 = 1e-7;
const REFINE_STEPS: usize = 10;

/// Attempt to polish `(x, y)` (unscaled, `y` stacked eq-then-in). Returns a
/// finished solution only if the polished point satisfies the strict
/// tolerances; otherwise the caller keeps iterating.
pub(super) fn polish(
    qp: &StandardQP,
    n_eq: usize,
    x: &[f64],
    y: &[f64],
    settings: &SolverSettings,
    iterations: usize,
) -> Option<PrimalDualSolution> {
    let m_in = qp.h.len();
    // A row is guessed active when its multiplier dominates its slack; at a
    // loose ADMM tolerance both carry noise of similar magnitude, so the
    // comparison separates them far better than a sign test on y alone.
    let slack = {
        let ax = qp.a_in.mul_vec(x);
        qp.h.iter().zip(&ax).map(|(&h, &a)| h - a).collect::<Vec<f64>>()
    };
    let mut is_active: Vec<bool> = (0..m_in)
        .map(|i| y[n_eq + i] > slack[i].max(0.0))
        .collect();

    // Crude active-set refinement: a negative polished multiplier means the
    // row should leave the working set, a violated inactive row must enter
    // it. Iterate until the set is consistent or the pass budget runs out.
    for _pass in 0..8 {
        let active: Vec<usize> = (0..m_in).filter(|&i| is_active[i]).collect();
        let (px, mut yr) = solve_reduced(qp, &active)?;
        let n_act = active.len();
        let mut changed = 0usize;
        for k in 0..n_act {
            if yr[n_eq + k] < 0.0 {
                is_active[active[k]] = false;
                changed += 1;
            }
        }
        let ain = qp.a_in.mul_vec(&px);
        let feas_tol = 1e-9 * (1.0 + inf_norm(&qp.h));
        for i in 0..m_in {
            if !is_active[i] && ain[i] - qp.h[i] > feas_tol {
                is_active[i] = true;
                changed += 1;
            }
        }
        if changed > 0 {
            if std::env::var_os("EQUIGRID_POLISH_DEBUG").is_some() {
                eprintln!("polish: pass={_pass} active={n_act} changed={changed}");
            }
            continue;
        }
        // expand reduced duals to the full inequality set
        let mut y_in = vec![0.0; m_in];
        for (k, &row) in active.iter().enumerate() {
            y_in[row] = yr[n_eq + k];
        }
        let y_eq: Vec<f64> = yr.drain(..n_eq).collect();
        let residuals = kkt_residuals_parts(qp, &px, &y_eq, &y_in);

        let scale_p = inf_norm(&qp.b_eq).max(inf_norm(&qp.h)).max(1.0);
        let scale_d = inf_norm(&qp.c).max(1.0);
        let ok_p = residuals.primal <= settings.eps_abs + settings.eps_rel * scale_p;
        let ok_d = residuals.dual <= settings.eps_abs + settings.eps_rel * scale_d;
        if std::env::var_os("EQUIGRID_POLISH_DEBUG").is_some() {
            let aeq = qp.a_eq.mul_vec(&px);
            let req = aeq
                .iter()
                .zip(&qp.b_eq)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let ain = qp.a_in.mul_vec(&px);
            let rin = ain
                .iter()
                .zip(&qp.h)
                .map(|(a, h)| (a - h).max(0.0))
                .fold(0.0f64, f64::max);
            eprintln!(
                "polish: pass={_pass} active={} primal={:.3e} (eq={req:.3e} in={rin:.3e}) dual={:.3e} ok_p={ok_p} ok_d={ok_d}",
                active.len(),
                residuals.primal,
                residuals.dual
            );
        }
        if ok_p && ok_d {
            return Some(PrimalDualSolution {
                x: px,
                y_eq,
                y_in,
                status: SolveStatus::Solved,
                iterations,
                polished: true,
                residuals,
            });
        }
        break;
    }
    None
}

/// Solve the reduced KKT [P + dI, G'; G, -dI][x; y] = [-c; rhs] where G
/// stacks all equality rows and the active inequality rows, refining against
/// the unregularized system.
fn solve_reduced(qp: &StandardQP, active: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = qp.num_vars();
    let n_eq = qp.b_eq.len();
    let m_red = n_eq + active.len();

    let mut g_triplets: Vec<(usize, usize, f64)> = qp.a_eq.triplets();
    let mut act_pos = vec![usize::MAX; qp.h.len()];
    for (k, &row) in active.iter().enumerate() {
        act_pos[row] = n_eq + k;
    }
    for (r, c, v) in qp.a_in.triplets() {
        if act_pos[r] != usize::MAX {
            g_triplets.push((act_pos[r], c, v));
        }
    }
    let g = CscMatrix::from_triplets(m_red, n, &g_triplets);

    let p_upper_triplets: Vec<(usize, usize, f64)> = qp
        .p
        .triplets()
        .into_iter()
        .filter(|&(r, c, _)| r <= c)
        .collect();
    let p_upper = CscMatrix::from_triplets(n, n, &p_upper_triplets);

    // The reduced system can be rank-deficient (redundant active rows), so
    // escalate the regularization until the factorization goes through;
    // iterative refinement corrects the perturbation afterwards.
    let mut delta = POLISH_DELTA;
    let kkt = loop {
        let rho = vec![1.0 / delta; m_red];
        let mut kkt = KktSystem::new(&p_upper, &g, delta, &rho);
        match kkt.factorize() {
            Ok(()) => break kkt,
            Err(e) => {
                if std::env::var_os("EQUIGRID_POLISH_DEBUG").is_some() {
                    eprintln!("polish: reduced KKT factorization failed at delta={delta:.1e}: {e:?}");
                }
                delta *= 100.0;
                if delta > 1e-1 {
                    return None;
                }
            }
        }
    };

    let mut rhs = vec![0.0; n + m_red];
    for j in 0..n {
        rhs[j] = -qp.c[j];
    }
    for (i, &b) in qp.b_eq.iter().enumerate() {
        rhs[n + i] = b;
    }
    for (k, &row) in active.iter().enumerate() {
        rhs[n + n_eq + k] = qp.h[row];
    }

    // iterative refinement against the unregularized KKT matrix
    let mut sol = vec![0.0; n + m_red];
    for _ in 0..REFINE_STEPS {
        let mut resid = rhs.clone();
        // resid -= K_exact * sol
        let (xs, ys) = sol.split_at(n);
        let mut kx = qp.p.mul_vec(xs);
        g.tr_mul_vec_acc(ys, &mut kx);
        for j in 0..n {
            resid[j] -= kx[j];
        }
        let gx = g.mul_vec(xs);
        for i in 0..m_red {
            resid[n + i] -= gx[i];
        }
        if inf_norm(&resid) < 1e-14 * (1.0 + inf_norm(&rhs)) {
            break;
        }
        let delta = kkt.solve(&resid);
        for (s, d) in sol.iter_mut().zip(&delta) {
            *s += d;
        }
    }
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let y = sol.split_off(n);
    Some((sol, y))
}
