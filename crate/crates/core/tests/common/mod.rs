//! Shared helpers for integration tests: a brute-force QP oracle, random
//! QP generation, and random small-scenario generation.
#![allow(dead_code)]

use equigrid::model::{
    build_network, calibrate_demand, Cluster, GenerationUnit, InvestmentCatalog,
    Line, Producer, ScenarioModel, StorageAsset, StorageTech, VresAsset, VresKind,
};
use equigrid::qp::{ConKey, StandardQP, VarKey};
use equigrid::sparse::CscMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// dense linear algebra
// ---------------------------------------------------------------------------

/// Solve `a x = b` for dense row-major `a` by Gaussian elimination with
/// partial pivoting. Returns None when the matrix is numerically singular.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-11 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = m[row][col] / m[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..=n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn dense_of(m: &CscMatrix) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; m.ncols]; m.nrows];
    for (r, c, v) in m.triplets() {
        out[r][c] += v;
    }
    out
}

/// Primal-dual optimum produced by the oracle.
pub struct OracleSolution {
    pub x: Vec<f64>,
    pub y_eq: Vec<f64>,
    pub y_in: Vec<f64>,
    pub objective: f64,
}

/// Brute-force reference solver for small strictly convex QPs: enumerate
/// every active set of the inequality rows, solve the equality-constrained
/// KKT system exactly, and keep the KKT-consistent point. Exponential in the
/// number of inequalities; intended for problems with at most ~14 rows.
pub fn oracle_solve(qp: &StandardQP) -> Option<OracleSolution> {
    let n = qp.num_vars();
    let n_eq = qp.b_eq.len();
    let m_in = qp.h.len();
    assert!(m_in <= 16, "oracle is exponential in inequality count");

    let p = dense_of(&qp.p);
    let a_eq = dense_of(&qp.a_eq);
    let a_in = dense_of(&qp.a_in);
    let feas_tol = 1e-7;

    let mut best: Option<OracleSolution> = None;
    'subsets: for mask in 0u32..(1u32 << m_in) {
        let active: Vec<usize> = (0..m_in).filter(|&i| mask & (1 << i) != 0).collect();
        let dim = n + n_eq + active.len();
        let mut k = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for i in 0..n {
            for j in 0..n {
                k[i][j] = p[i][j];
            }
            rhs[i] = -qp.c[i];
        }
        for (e, row) in a_eq.iter().enumerate() {
            for j in 0..n {
                k[n + e][j] = row[j];
                k[j][n + e] = row[j];
            }
            rhs[n + e] = qp.b_eq[e];
        }
        for (s, &r) in active.iter().enumerate() {
            for j in 0..n {
                k[n + n_eq + s][j] = a_in[r][j];
                k[j][n + n_eq + s] = a_in[r][j];
            }
            rhs[n + n_eq + s] = qp.h[r];
        }
        let Some(sol) = dense_solve(&k, &rhs) else {
            continue;
        };
        let x = &sol[..n];
        // dual feasibility on the active rows
        for (s, _) in active.iter().enumerate() {
            if sol[n + n_eq + s] < -feas_tol {
                continue 'subsets;
            }
        }
        // primal feasibility on the inactive rows
        for (i, row) in a_in.iter().enumerate() {
            if active.contains(&i) {
                continue;
            }
            let ax: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            if ax > qp.h[i] + feas_tol * (1.0 + qp.h[i].abs()) {
                continue 'subsets;
            }
        }
        let mut y_in = vec![0.0; m_in];
        for (s, &r) in active.iter().enumerate() {
            y_in[r] = sol[n + n_eq + s].max(0.0);
        }
        let obj = {
            let quad: f64 = (0..n)
                .map(|i| (0..n).map(|j| x[i] * p[i][j] * x[j]).sum::<f64>())
                .sum::<f64>()
                * 0.5;
            let lin: f64 = x.iter().zip(&qp.c).map(|(a, b)| a * b).sum();
            quad + lin
        };
        let cand = OracleSolution {
            x: x.to_vec(),
            y_eq: sol[n..n + n_eq].to_vec(),
            y_in,
            objective: obj,
        };
        match &best {
            Some(b) if b.objective <= cand.objective => {}
            _ => best = Some(cand),
        }
    }
    best
}

// ---------------------------------------------------------------------------
// random QP generation
// ---------------------------------------------------------------------------

/// Build a [`StandardQP`] from raw matrices, assigning synthetic keys.
pub fn qp_from_raw(
    n: usize,
    p: Vec<(usize, usize, f64)>,
    c: Vec<f64>,
    a_eq: Vec<(usize, usize, f64)>,
    b_eq: Vec<f64>,
    a_in: Vec<(usize, usize, f64)>,
    h: Vec<f64>,
) -> StandardQP {
    let vars: Vec<VarKey> = (0..n).map(|j| VarKey::Demand { m: 0, t: 0, n: j }).collect();
    let var_index: HashMap<VarKey, usize> = vars.iter().copied().zip(0..).collect();
    let eq_cons: Vec<ConKey> = (0..b_eq.len())
        .map(|i| ConKey::Balance { m: 0, t: 0, n: i })
        .collect();
    let eq_index: HashMap<ConKey, usize> = eq_cons.iter().copied().zip(0..).collect();
    let in_cons: Vec<ConKey> = (0..h.len()).map(|i| ConKey::NonNeg { var: i }).collect();
    let in_index: HashMap<ConKey, usize> = in_cons.iter().copied().zip(0..).collect();
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

/// Random strictly convex QP with a known feasible point: 2-6 variables,
/// up to 2 equalities, up to 4 inequalities.
pub fn random_qp(rng: &mut ChaCha8Rng) -> StandardQP {
    let n = rng.gen_range(2..=6);
    let n_eq = rng.gen_range(0..=2.min(n - 1));
    let m_in = rng.gen_range(1..=4);

    // P = M'M + 0.1 I
    let m: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut p_triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut v: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum();
            if i == j {
                v += 0.1;
            }
            p_triplets.push((i, j, v));
        }
    }
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();

    let mut a_eq = Vec::new();
    let mut b_eq = Vec::new();
    for r in 0..n_eq {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (j, &v) in row.iter().enumerate() {
            a_eq.push((r, j, v));
        }
        b_eq.push(row.iter().zip(&x0).map(|(a, b)| a * b).sum());
    }
    let mut a_in = Vec::new();
    let mut h = Vec::new();
    for r in 0..m_in {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (j, &v) in row.iter().enumerate() {
            a_in.push((r, j, v));
        }
        let ax: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
        h.push(ax + rng.gen_range(0.0..2.0));
    }
    qp_from_raw(n, p_triplets, c, a_eq, b_eq, a_in, h)
}

// ---------------------------------------------------------------------------
// random small scenarios
// ---------------------------------------------------------------------------

/// Random 2-3 node scenario with one or two clusters, a couple of thermal
/// units, optional wind and existing storage, and a small investment catalog.
/// Always passes scenario validation.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> ScenarioModel {
    let nn = rng.gen_range(2..=3);
    let nodes: Vec<String> = (0..nn).map(|i| format!("n{}", i + 1)).collect();
    let mut lines = vec![Line {
        from: 0,
        to: 1,
        susceptance: rng.gen_range(5.0..15.0),
        capacity_mw: rng.gen_range(100.0..400.0),
    }];
    if nn == 3 {
        lines.push(Line {
            from: 1,
            to: 2,
            susceptance: rng.gen_range(5.0..15.0),
            capacity_mw: rng.gen_range(100.0..400.0),
        });
        if rng.gen_bool(0.5) {
            lines.push(Line {
                from: 0,
                to: 2,
                susceptance: rng.gen_range(5.0..15.0),
                capacity_mw: rng.gen_range(100.0..400.0),
            });
        }
    }
    let network = build_network(nn, lines, 0).expect("valid network");

    let nm = rng.gen_range(1..=2);
    let nt = 2;
    let clusters: Vec<Cluster> = (0..nm)
        .map(|_| Cluster {
            weight: 1.0 / nm as f64,
            period_hours: vec![1.0; nt],
        })
        .collect();

    let np = rng.gen_range(1..=2);
    let producers: Vec<Producer> = (0..np)
        .map(|i| {
            let node = rng.gen_range(0..nn);
            let mut units = vec![GenerationUnit {
                tech: format!("u{}", i + 1),
                node,
                marginal_cost: rng.gen_range(5.0..60.0),
                capacity_mw: rng.gen_range(800.0..2500.0),
                ramp_up: rng.gen_range(0.3..1.0),
                ramp_down: rng.gen_range(0.3..1.0),
                emission_factor: rng.gen_range(0.0..1.0),
                availability: rng.gen_range(0.8..1.0),
            }];
            if rng.gen_bool(0.4) {
                units.push(GenerationUnit {
                    tech: format!("u{}b", i + 1),
                    node: rng.gen_range(0..nn),
                    marginal_cost: rng.gen_range(5.0..60.0),
                    capacity_mw: rng.gen_range(400.0..1200.0),
                    ramp_up: 1.0,
                    ramp_down: 1.0,
                    emission_factor: rng.gen_range(0.0..1.0),
                    availability: 1.0,
                });
            }
            let vres = if rng.gen_bool(0.5) {
                vec![VresAsset {
                    kind: VresKind::Wind,
                    node: rng.gen_range(0..nn),
                    capacity_mw: rng.gen_range(50.0..300.0),
                    availability: (0..nm)
                        .map(|_| (0..nt).map(|_| rng.gen_range(0.1..0.9)).collect())
                        .collect(),
                }]
            } else {
                Vec::new()
            };
            let storage = if rng.gen_bool(0.3) {
                vec![StorageAsset {
                    node: rng.gen_range(0..nn),
                    energy_capacity_mwh: rng.gen_range(50.0..400.0),
                    min_factor: 0.0,
                }]
            } else {
                Vec::new()
            };
            Producer {
                name: format!("p{}", i + 1),
                units,
                vres,
                storage,
                storage_tech: StorageTech {
                    input_efficiency: rng.gen_range(0.7..1.0),
                    decay: 0.0,
                    rate_in: rng.gen_range(0.2..0.6),
                    rate_out: rng.gen_range(0.2..0.6),
                },
            }
        })
        .collect();

    let mut demand = vec![vec![vec![None; nn]; nt]; nm];
    for (m, row) in demand.iter_mut().enumerate() {
        let _ = m;
        for period in row.iter_mut() {
            for cell in period.iter_mut().take(nn) {
                let q_ref = rng.gen_range(300.0..1500.0);
                let p_ref = rng.gen_range(30.0..80.0);
                *cell = Some(
                    calibrate_demand(q_ref, p_ref, -0.25).expect("valid calibration"),
                );
            }
        }
    }

    let size = rng.gen_range(30.0..120.0);
    let investment = InvestmentCatalog {
        sizes_mwh: vec![0.0, size],
        weekly_cost: rng.gen_range(5.0..30.0),
        tech: StorageTech {
            input_efficiency: 0.95,
            decay: 0.0,
            rate_in: 0.5,
            rate_out: 0.5,
        },
        min_factor: 0.0,
        candidates: (0..nn.min(2)).collect(),
    };

    ScenarioModel {
        name: "random".to_string(),
        nodes,
        network,
        clusters,
        producers,
        storage_discharge_cost: 0.0,
        demand,
        investment,
    }
}

/// Inf-norm distance between two vectors.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Path to a fixture shipped with the crate.
pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}
