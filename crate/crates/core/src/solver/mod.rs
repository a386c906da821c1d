//! Operator-splitting QP solver with active-set polishing.
//!
//! Solves  min (1/2) x'Px + c'x  s.t.  A_eq x = b_eq, A_in x <= h  by ADMM
//! on the boxed form l <= Ax <= u, with Ruiz equilibration, over-relaxation,
//! residual-balancing rho adaptation, and an optional KKT polish restricted
//! to the detected active set. Fully deterministic for fixed settings.

mod polish;

use crate::qp::StandardQP;
use crate::sparse::{inf_norm, CscMatrix, KktSystem};
use serde::{Deserialize, Serialize};

const INF: f64 = f64::INFINITY;
const RHO_EQ_FACTOR: f64 = 1e3;
const EPS_INFEAS: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    /// Initial penalty parameter and its adaptation bounds.
    pub rho: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Over-relaxation, in (0, 2).
    pub alpha: f64,
    /// Primal regularization of the KKT system.
    pub sigma: f64,
    pub polish: bool,
    pub scaling_iters: usize,
    /// Residual check / rho adaptation interval.
    pub check_interval: usize,
    /// Reserved for randomized scaling variants; kept for reproducibility.
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_abs: 1e-8,
            eps_rel: 1e-8,
            max_iter: 50_000,
            rho: 0.1,
            rho_min: 1e-6,
            rho_max: 1e6,
            alpha: 1.6,
            sigma: 1e-6,
            polish: true,
            scaling_iters: 10,
            check_interval: 25,
            seed: 0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), String> {
        if self.eps_abs <= 0.0 || self.eps_rel <= 0.0 {
            return Err("tolerances must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err("alpha must be in (0, 2)".into());
        }
        if self.max_iter == 0 {
            return Err("max_iter must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Solved,
    MaxIterations,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ResidualReport {
    /// max violation of A_eq x = b and positive part of A_in x - h
    pub primal: f64,
    /// || Px + c + A_eq' y + A_in' lambda ||_inf
    pub dual: f64,
    /// |primal objective - dual objective|
    pub duality_gap: f64,
    /// max_i lambda_i * (h - A_in x)_i
    pub complementarity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    pub y_eq: Vec<f64>,
    /// Inequality duals, nonnegative on success.
    pub y_in: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub polished: bool,
    pub residuals: ResidualReport,
}

/// Warm-start data carried across related solves.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

struct BoxedProblem {
    p_full: CscMatrix,
    p_upper: CscMatrix,
    c: Vec<f64>,
    a: CscMatrix,
    l: Vec<f64>,
    u: Vec<f64>,
    n_eq: usize,
}

fn boxed(qp: &StandardQP) -> BoxedProblem {
    let n = qp.num_vars();
    let n_eq = qp.b_eq.len();
    let m = n_eq + qp.h.len();
    let mut triplets = Vec::with_capacity(qp.a_eq.nnz() + qp.a_in.nnz());
    for (r, c, v) in qp.a_eq.triplets() {
        triplets.push((r, c, v));
    }
    for (r, c, v) in qp.a_in.triplets() {
        triplets.push((r + n_eq, c, v));
    }
    let a = CscMatrix::from_triplets(m, n, &triplets);
    let mut l = Vec::with_capacity(m);
    let mut u = Vec::with_capacity(m);
    for &b in &qp.b_eq {
        l.push(b);
        u.push(b);
    }
    for &hh in &qp.h {
        l.push(-INF);
        u.push(hh);
    }
    let p_upper_triplets: Vec<(usize, usize, f64)> = qp
        .p
        .triplets()
        .into_iter()
        .filter(|&(r, c, _)| r <= c)
        .collect();
    let p_upper = CscMatrix::from_triplets(n, n, &p_upper_triplets);
    BoxedProblem {
        p_full: qp.p.clone(),
        p_upper,
        c: qp.c.clone(),
        a,
        l,
        u,
        n_eq,
    }
}

struct Scaling {
    d: Vec<f64>,
    e: Vec<f64>,
    cost: f64,
}

/// Modified Ruiz equilibration with cost normalization.
fn ruiz_scaling(prob: &mut BoxedProblem, iters: usize) -> Scaling {
    let n = prob.c.len();
    let m = prob.l.len();
    let mut d = vec![1.0; n];
    let mut e = vec![1.0; m];
    let mut cost = 1.0;

    for _ in 0..iters {
        let p_cols = prob.p_full.col_inf_norms();
        let a_cols = prob.a.col_inf_norms();
        let a_rows = prob.a.row_inf_norms();
        let mut dd = vec![1.0; n];
        for j in 0..n {
            let norm = p_cols[j].max(a_cols[j]);
            if norm > 1e-12 {
                dd[j] = 1.0 / norm.sqrt();
            }
        }
        let mut de = vec![1.0; m];
        for i in 0..m {
            if a_rows[i] > 1e-12 {
                de[i] = 1.0 / a_rows[i].sqrt();
            }
        }
        prob.p_full.scale(&dd, &dd);
        prob.p_upper.scale(&dd, &dd);
        prob.a.scale(&de, &dd);
        for j in 0..n {
            prob.c[j] *= dd[j];
            d[j] *= dd[j];
        }
        for i in 0..m {
            if prob.l[i].is_finite() {
                prob.l[i] *= de[i];
            }
            if prob.u[i].is_finite() {
                prob.u[i] *= de[i];
            }
            e[i] *= de[i];
        }
        // cost normalization
        let p_cols = prob.p_full.col_inf_norms();
        let mean_p = if n > 0 {
            p_cols.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        let denom = mean_p.max(inf_norm(&prob.c));
        if denom > 1e-12 {
            let g = 1.0 / denom;
            for v in prob.p_full.values.iter_mut() {
                *v *= g;
            }
            for v in prob.p_upper.values.iter_mut() {
                *v *= g;
            }
            for cj in prob.c.iter_mut() {
                *cj *= g;
            }
            cost *= g;
        }
    }
    Scaling { d, e, cost }
}

fn rho_vector(rho: f64, m: usize, n_eq: usize) -> Vec<f64> {
    (0..m)
        .map(|i| if i < n_eq { rho * RHO_EQ_FACTOR } else { rho })
        .collect()
}

/// Solve a QP cold.
pub fn solve_qp(qp: &StandardQP, settings: &SolverSettings) -> PrimalDualSolution {
    solve_qp_warm(qp, settings, None)
}

/// Solve a QP, optionally warm-starting from a previous related solution.
pub fn solve_qp_warm(
    qp: &StandardQP,
    settings: &SolverSettings,
    warm: Option<&WarmStart>,
) -> PrimalDualSolution {
    settings.validate().expect("invalid solver settings");
    let n = qp.num_vars();
    let mut prob = boxed(qp);
    let m = prob.l.len();
    let n_eq = prob.n_eq;

    let scaling = ruiz_scaling(&mut prob, settings.scaling_iters);

    // scaled iterates
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    let mut z = vec![0.0; m];
    if let Some(w) = warm {
        if w.x.len() == n && w.y.len() == m && w.z.len() == m {
            for j in 0..n {
                x[j] = w.x[j] / scaling.d[j];
            }
            for i in 0..m {
                y[i] = w.y[i] * scaling.cost / scaling.e[i];
                z[i] = w.z[i] * scaling.e[i];
            }
        }
    }

    let mut rho = settings.rho;
    let mut rho_vec = rho_vector(rho, m, n_eq);
    let mut kkt = KktSystem::new(&prob.p_upper, &prob.a, settings.sigma, &rho_vec);
    if kkt.factorize().is_err() {
        // fall back to a heavier regularization
        let mut sigma = settings.sigma.max(1e-7);
        loop {
            sigma *= 10.0;
            kkt = KktSystem::new(&prob.p_upper, &prob.a, sigma, &rho_vec);
            if kkt.factorize().is_ok() || sigma > 1.0 {
                break;
            }
        }
    }

    // ADMM loop; polish from a looser tolerance first, then tighten.
    let loose_abs = settings.eps_abs.max(1e-6);
    let loose_rel = settings.eps_rel.max(1e-6);
    let mut rhs = vec![0.0; n + m];
    let mut iterations = 0usize;
    let mut status = SolveStatus::MaxIterations;
    let mut polish_attempted_at_loose = !settings.polish;

    while iterations < settings.max_iter {
        iterations += 1;
        // (1) KKT solve
        for j in 0..n {
            rhs[j] = settings.sigma * x[j] - prob.c[j];
        }
        for i in 0..m {
            rhs[n + i] = z[i] - y[i] / rho_vec[i];
        }
        let sol = kkt.solve(&rhs);
        let x_tilde = &sol[..n];
        let nu = &sol[n..];
        let mut z_tilde = vec![0.0; m];
        for i in 0..m {
            z_tilde[i] = z[i] + (nu[i] - y[i]) / rho_vec[i];
        }
        // (2) over-relaxed updates
        let alpha = settings.alpha;
        let mut x_next = vec![0.0; n];
        for j in 0..n {
            x_next[j] = alpha * x_tilde[j] + (1.0 - alpha) * x[j];
        }
        let mut z_next = vec![0.0; m];
        let mut y_next = vec![0.0; m];
        for i in 0..m {
            let zr = alpha * z_tilde[i] + (1.0 - alpha) * z[i];
            let cand = zr + y[i] / rho_vec[i];
            let proj = cand.clamp(prob.l[i], prob.u[i]);
            z_next[i] = proj;
            y_next[i] = y[i] + rho_vec[i] * (zr - proj);
        }
        let delta_y: Vec<f64> = (0..m).map(|i| y_next[i] - y[i]).collect();
        let delta_x: Vec<f64> = (0..n).map(|j| x_next[j] - x[j]).collect();
        x = x_next;
        z = z_next;
        y = y_next;

        if iterations % settings.check_interval != 0 && iterations != settings.max_iter {
            continue;
        }

        // unscaled residuals
        let (rp, rd, eps_p_scale, eps_d_scale) = residuals_unscaled(&prob, &scaling, &x, &y, &z);
        let tol_p = |ea: f64, er: f64| ea + er * eps_p_scale;
        let tol_d = |ea: f64, er: f64| ea + er * eps_d_scale;

        let loose_ok = rp <= tol_p(loose_abs, loose_rel) && rd <= tol_d(loose_abs, loose_rel);
        let strict_ok =
            rp <= tol_p(settings.eps_abs, settings.eps_rel) && rd <= tol_d(settings.eps_abs, settings.eps_rel);

        if strict_ok {
            status = SolveStatus::Solved;
            break;
        }
        if loose_ok && !polish_attempted_at_loose {
            polish_attempted_at_loose = true;
            if let Some(out) = try_polish(qp, &prob, &scaling, &x, &y, settings, iterations) {
                return out;
            }
        }

        // infeasibility certificates
        if let Some(s) = infeasibility_check(&prob, &scaling, &delta_x, &delta_y) {
            status = s;
            break;
        }

        // rho adaptation
        let denom_p = eps_p_scale.max(1e-12);
        let denom_d = eps_d_scale.max(1e-12);
        let ratio = ((rp / denom_p) / (rd / denom_d).max(1e-16)).sqrt();
        if ratio.is_finite() && (ratio > 5.0 || ratio < 0.2) {
            let new_rho = (rho * ratio).clamp(settings.rho_min, settings.rho_max);
            if (new_rho / rho).max(rho / new_rho) > 1.0001 {
                rho = new_rho;
                rho_vec = rho_vector(rho, m, n_eq);
                let _ = kkt.update_rho(&rho_vec);
            }
        }
    }

    // unscale
    let mut xu = vec![0.0; n];
    for j in 0..n {
        xu[j] = x[j] * scaling.d[j];
    }
    let mut yu = vec![0.0; m];
    for i in 0..m {
        yu[i] = y[i] * scaling.e[i] / scaling.cost;
    }

    if status == SolveStatus::Solved && settings.polish {
        if let Some(out) = try_polish(qp, &prob, &scaling, &x, &y, settings, iterations) {
            return out;
        }
    }

    let (y_eq, y_in) = split_duals(&yu, n_eq);
    let residuals = kkt_residuals_parts(qp, &xu, &y_eq, &y_in);
    PrimalDualSolution {
        x: xu,
        y_eq,
        y_in,
        status,
        iterations,
        polished: false,
        residuals,
    }
}

fn split_duals(y: &[f64], n_eq: usize) -> (Vec<f64>, Vec<f64>) {
    let y_eq = y[..n_eq].to_vec();
    // tiny negatives from finite convergence are clipped
    let y_in = y[n_eq..]
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    (y_eq, y_in)
}

fn residuals_unscaled(
    prob: &BoxedProblem,
    s: &Scaling,
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> (f64, f64, f64, f64) {
    let n = x.len();
    let m = y.len();
    // Ax (scaled) then unscale rows with E^-1
    let ax = prob.a.mul_vec(x);
    let mut rp = 0.0f64;
    let mut ax_norm = 0.0f64;
    let mut z_norm = 0.0f64;
    for i in 0..m {
        let axi = ax[i] / s.e[i];
        let zi = z[i] / s.e[i];
        rp = rp.max((axi - zi).abs());
        ax_norm = ax_norm.max(axi.abs());
        z_norm = z_norm.max(zi.abs());
    }
    let px = prob.p_full.mul_vec(x);
    let aty = prob.a.tr_mul_vec(y);
    let mut rd = 0.0f64;
    let mut px_norm = 0.0f64;
    let mut aty_norm = 0.0f64;
    let mut c_norm = 0.0f64;
    for j in 0..n {
        let pxj = px[j] / (s.d[j] * s.cost);
        let atyj = aty[j] / (s.d[j] * s.cost);
        let cj = prob.c[j] / (s.d[j] * s.cost);
        rd = rd.max((pxj + cj + atyj).abs());
        px_norm = px_norm.max(pxj.abs());
        aty_norm = aty_norm.max(atyj.abs());
        c_norm = c_norm.max(cj.abs());
    }
    (
        rp,
        rd,
        ax_norm.max(z_norm),
        px_norm.max(aty_norm).max(c_norm),
    )
}

fn infeasibility_check(
    prob: &BoxedProblem,
    s: &Scaling,
    delta_x: &[f64],
    delta_y: &[f64],
) -> Option<SolveStatus> {
    let n = delta_x.len();
    let m = delta_y.len();
    // primal infeasibility: unscaled dy
    let dy: Vec<f64> = (0..m).map(|i| delta_y[i] * s.e[i] / s.cost).collect();
    let dy_norm = inf_norm(&dy);
    if dy_norm > EPS_INFEAS {
        let at_dy = prob.a.tr_mul_vec(delta_y);
        let at_ok = (0..n).all(|j| (at_dy[j] / (s.d[j] * s.cost)).abs() <= EPS_INFEAS * dy_norm);
        if at_ok {
            let mut support = 0.0;
            let mut valid = true;
            for i in 0..m {
                let li = if prob.l[i].is_finite() {
                    prob.l[i] / s.e[i]
                } else {
                    -INF
                };
                let ui = if prob.u[i].is_finite() {
                    prob.u[i] / s.e[i]
                } else {
                    INF
                };
                if dy[i] > EPS_INFEAS * dy_norm {
                    if ui.is_infinite() {
                        valid = false;
                        break;
                    }
                    support += ui * dy[i];
                } else if dy[i] < -EPS_INFEAS * dy_norm {
                    if li.is_infinite() {
                        valid = false;
                        break;
                    }
                    support += li * dy[i];
                }
            }
            if valid && support <= -EPS_INFEAS * dy_norm {
                return Some(SolveStatus::Infeasible);
            }
        }
    }
    // dual infeasibility: unscaled dx
    let dx: Vec<f64> = (0..n).map(|j| delta_x[j] * s.d[j]).collect();
    let dx_norm = inf_norm(&dx);
    if dx_norm > EPS_INFEAS {
        let p_dx = prob.p_full.mul_vec(delta_x);
        let p_ok = (0..n).all(|j| (p_dx[j] / (s.d[j] * s.cost)).abs() <= EPS_INFEAS * dx_norm);
        let c_dot: f64 = (0..n)
            .map(|j| prob.c[j] / (s.d[j] * s.cost) * dx[j] * s.d[j] / s.d[j])
            .sum();
        // c'dx in unscaled space
        let c_dot_unscaled: f64 = (0..n)
            .map(|j| (prob.c[j] / (s.d[j] * s.cost)) * dx[j])
            .sum();
        let _ = c_dot;
        if p_ok && c_dot_unscaled <= -EPS_INFEAS * dx_norm {
            let a_dx = prob.a.mul_vec(delta_x);
            let mut ok = true;
            for i in 0..prob.l.len() {
                let adxi = a_dx[i] / s.e[i];
                let upper_finite = prob.u[i].is_finite();
                let lower_finite = prob.l[i].is_finite();
                if upper_finite && adxi > EPS_INFEAS * dx_norm {
                    ok = false;
                    break;
                }
                if lower_finite && adxi < -EPS_INFEAS * dx_norm {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Some(SolveStatus::Unbounded);
            }
        }
    }
    None
}

fn try_polish(
    qp: &StandardQP,
    prob: &BoxedProblem,
    s: &Scaling,
    x_scaled: &[f64],
    y_scaled: &[f64],
    settings: &SolverSettings,
    iterations: usize,
) -> Option<PrimalDualSolution> {
    let n = x_scaled.len();
    let m = y_scaled.len();
    let mut xu = vec![0.0; n];
    for j in 0..n {
        xu[j] = x_scaled[j] * s.d[j];
    }
    let mut yu = vec![0.0; m];
    for i in 0..m {
        yu[i] = y_scaled[i] * s.e[i] / s.cost;
    }
    polish::polish(qp, prob.n_eq, &xu, &yu, settings, iterations)
}

/// Residual report of a candidate primal-dual pair against the QP's KKT
/// conditions.
pub fn kkt_residuals(qp: &StandardQP, sol: &PrimalDualSolution) -> ResidualReport {
    kkt_residuals_parts(qp, &sol.x, &sol.y_eq, &sol.y_in)
}

pub(crate) fn kkt_residuals_parts(
    qp: &StandardQP,
    x: &[f64],
    y_eq: &[f64],
    y_in: &[f64],
) -> ResidualReport {
    assert_eq!(x.len(), qp.num_vars());
    assert_eq!(y_eq.len(), qp.b_eq.len());
    assert_eq!(y_in.len(), qp.h.len());

    let mut stat = qp.p.mul_vec(x);
    for (j, v) in stat.iter_mut().enumerate() {
        *v += qp.c[j];
    }
    qp.a_eq.tr_mul_vec_acc(y_eq, &mut stat);
    qp.a_in.tr_mul_vec_acc(y_in, &mut stat);
    let dual = inf_norm(&stat);

    let ax_eq = qp.a_eq.mul_vec(x);
    let mut primal = 0.0f64;
    for (i, &b) in qp.b_eq.iter().enumerate() {
        primal = primal.max((ax_eq[i] - b).abs());
    }
    let ax_in = qp.a_in.mul_vec(x);
    let mut comp = 0.0f64;
    for (i, &hh) in qp.h.iter().enumerate() {
        primal = primal.max(ax_in[i] - hh);
        comp = comp.max((y_in[i] * (hh - ax_in[i])).abs());
    }

    // duality gap: (1/2)x'Px + c'x  vs  -(1/2)x'Px - b'y - h'lambda
    let px = qp.p.mul_vec(x);
    let quad: f64 = 0.5 * x.iter().zip(&px).map(|(a, b)| a * b).sum::<f64>();
    let lin: f64 = x.iter().zip(&qp.c).map(|(a, b)| a * b).sum();
    let primal_obj = quad + lin;
    let dual_obj = -quad
        - qp.b_eq.iter().zip(y_eq).map(|(a, b)| a * b).sum::<f64>()
        - qp.h.iter().zip(y_in).map(|(a, b)| a * b).sum::<f64>();
    ResidualReport {
        primal,
        dual,
        duality_gap: (primal_obj - dual_obj).abs(),
        complementarity: comp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::CscMatrix;
    use std::collections::HashMap;

    /// Hand-built QP without market structure, for solver unit tests.
    pub(crate) fn raw_qp(
        p: Vec<(usize, usize, f64)>,
        c: Vec<f64>,
        a_eq: Vec<(usize, usize, f64)>,
        b_eq: Vec<f64>,
        a_in: Vec<(usize, usize, f64)>,
        h: Vec<f64>,
    ) -> StandardQP {
        let n = c.len();
        let vars = (0..n)
            .map(|i| crate::qp::VarKey::Demand { m: 0, t: 0, n: i })
            .collect::<Vec<_>>();
        let var_index: HashMap<_, _> = vars.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let eq_cons = (0..b_eq.len())
            .map(|i| crate::qp::ConKey::Balance { m: 0, t: 0, n: i })
            .collect::<Vec<_>>();
        let eq_index: HashMap<_, _> =
            eq_cons.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let in_cons = (0..h.len())
            .map(|i| crate::qp::ConKey::NonNeg { var: i })
            .collect::<Vec<_>>();
        let in_index: HashMap<_, _> =
            in_cons.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        StandardQP {
            p: CscMatrix::from_triplets(n, n, &p),
            c,
            a_eq: CscMatrix::from_triplets(b_eq.len(), n, &a_eq),
            b_eq,
            a_in: CscMatrix::from_triplets(h.len(), n, &a_in),
            h,
            vars,
            var_index,
            eq_cons,
            eq_index,
            in_cons,
            in_index,
        }
    }

    #[test]
    fn interior_optimum_has_zero_dual() {
        // min (1/2)x^2 - x, x >= 0  ->  x = 1, bound dual 0
        let qp = raw_qp(
            vec![(0, 0, 1.0)],
            vec![-1.0],
            vec![],
            vec![],
            vec![(0, 0, -1.0)],
            vec![0.0],
        );
        let sol = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-7, "x = {}", sol.x[0]);
        assert!(sol.y_in[0].abs() < 1e-7);
    }

    #[test]
    fn active_bound_dual_matches_stationarity() {
        // min (1/2)x^2 - x, x <= 0.5  ->  x = 0.5, dual = 0.5
        let qp = raw_qp(
            vec![(0, 0, 1.0)],
            vec![-1.0],
            vec![],
            vec![],
            vec![(0, 0, 1.0)],
            vec![0.5],
        );
        let sol = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!((sol.x[0] - 0.5).abs() < 1e-7);
        assert!((sol.y_in[0] - 0.5).abs() < 1e-6, "dual = {}", sol.y_in[0]);
    }

    #[test]
    fn detects_infeasible() {
        // x >= 1 and x <= 0
        let qp = raw_qp(
            vec![(0, 0, 1.0)],
            vec![0.0],
            vec![],
            vec![],
            vec![(0, 0, -1.0), (0, 0, 1.0)],
            vec![-1.0, 0.0],
        );
        let sol = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x, x >= 0 (no upper bound)
        let qp = raw_qp(
            vec![],
            vec![-1.0],
            vec![],
            vec![],
            vec![(0, 0, -1.0)],
            vec![0.0],
        );
        let sol = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_constrained_quadratic() {
        // min (1/2)(x0^2 + x1^2) s.t. x0 + x1 = 2  ->  x = (1, 1), y = -1
        let qp = raw_qp(
            vec![(0, 0, 1.0), (1, 1, 1.0)],
            vec![0.0, 0.0],
            vec![(0, 0, 1.0), (0, 1, 1.0)],
            vec![2.0],
            vec![],
            vec![],
        );
        let sol = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(sol.status, SolveStatus::Solved);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
        assert!((sol.x[1] - 1.0).abs() < 1e-7);
        assert!((sol.y_eq[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_repeat() {
        let qp = raw_qp(
            vec![(0, 0, 2.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5)],
            vec![-1.0, -2.0],
            vec![],
            vec![],
            vec![(0, 0, -1.0), (1, 1, -1.0), (2, 0, 1.0), (2, 1, 1.0)],
            vec![0.0, 0.0, 1.5],
        );
        let a = solve_qp(&qp, &SolverSettings::default());
        let b = solve_qp(&qp, &SolverSettings::default());
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.x, b.x);
        assert_eq!(a.y_in, b.y_in);
    }
}
