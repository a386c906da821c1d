//! Assembly of the lower-level ISO problem as a standard-form QP.

use super::{CompetitionMode, ConKey, StandardQP, StoRef, VarKey};
use crate::model::{InvestmentDecision, ScenarioModel};
use crate::sparse::CscMatrix;
use std::collections::HashMap;

#[derive(Debug, thiserror::Error)]
pub enum AssembleError {
    #[error("investment decision has {got} entries, catalog has {want} candidates")]
    DecisionShape { got: usize, want: usize },
    #[error("investment decision size index {index} out of range ({sizes} sizes)")]
    DecisionSizeIndex { index: usize, sizes: usize },
}

/// One storage fleet as seen by the assembled problem.
struct Fleet {
    sto: StoRef,
    node: usize,
    capacity_mwh: f64,
    min_factor: f64,
    input_efficiency: f64,
    decay: f64,
    rate_in: f64,
    rate_out: f64,
}

fn fleets(scenario: &ScenarioModel, z: &InvestmentDecision) -> Vec<Fleet> {
    let mut out = Vec::new();
    for (i, p) in scenario.producers.iter().enumerate() {
        for (k, a) in p.storage.iter().enumerate() {
            out.push(Fleet {
                sto: StoRef::Producer {
                    producer: i,
                    asset: k,
                },
                node: a.node,
                capacity_mwh: a.energy_capacity_mwh,
                min_factor: a.min_factor,
                input_efficiency: p.storage_tech.input_efficiency,
                decay: p.storage_tech.decay,
                rate_in: p.storage_tech.rate_in,
                rate_out: p.storage_tech.rate_out,
            });
        }
    }
    let cat = &scenario.investment;
    for (k, &node) in cat.candidates.iter().enumerate() {
        out.push(Fleet {
            sto: StoRef::Investor { candidate: k },
            node,
            capacity_mwh: cat.sizes_mwh[z.size_index[k]],
            min_factor: cat.min_factor,
            input_efficiency: cat.tech.input_efficiency,
            decay: cat.tech.decay,
            rate_in: cat.tech.rate_in,
            rate_out: cat.tech.rate_out,
        });
    }
    out
}

/// Assemble the ISO problem for a scenario, competition mode, and investment
/// decision. Maximization is encoded as minimization of the negated
/// objective; all index maps are deterministic (m-major, then t, then n,
/// then owner).
pub fn assemble_iso_qp(
    scenario: &ScenarioModel,
    mode: CompetitionMode,
    z: &InvestmentDecision,
) -> Result<StandardQP, AssembleError> {
    let cat = &scenario.investment;
    if z.size_index.len() != cat.candidates.len() {
        return Err(AssembleError::DecisionShape {
            got: z.size_index.len(),
            want: cat.candidates.len(),
        });
    }
    if let Some(&bad) = z.size_index.iter().find(|&&s| s >= cat.sizes_mwh.len()) {
        return Err(AssembleError::DecisionSizeIndex {
            index: bad,
            sizes: cat.sizes_mwh.len(),
        });
    }

    let nn = scenario.num_nodes();
    let fleets = fleets(scenario, z);
    let c_sto = scenario.storage_discharge_cost;

    // ---- variable index ----
    let mut vars: Vec<VarKey> = Vec::new();
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for t in 0..cluster.num_periods() {
            for n in 0..nn {
                if scenario.demand_at(m, t, n).is_some() {
                    vars.push(VarKey::Demand { m, t, n });
                }
            }
            for n in 0..nn {
                vars.push(VarKey::Angle { m, t, n });
            }
            for (i, p) in scenario.producers.iter().enumerate() {
                for u in 0..p.units.len() {
                    vars.push(VarKey::Conv {
                        m,
                        t,
                        producer: i,
                        unit: u,
                    });
                }
            }
            for (i, p) in scenario.producers.iter().enumerate() {
                for e in 0..p.vres.len() {
                    vars.push(VarKey::Vres {
                        m,
                        t,
                        producer: i,
                        asset: e,
                    });
                }
            }
            for f in &fleets {
                vars.push(VarKey::StoLevel { m, t, sto: f.sto });
                vars.push(VarKey::StoIn { m, t, sto: f.sto });
                vars.push(VarKey::StoOut { m, t, sto: f.sto });
            }
        }
    }
    let var_index: HashMap<VarKey, usize> =
        vars.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let nv = vars.len();
    let col = |k: VarKey| -> usize { var_index[&k] };

    // ---- objective ----
    let mut c = vec![0.0; nv];
    let mut p_triplets: Vec<(usize, usize, f64)> = Vec::new();

    for (m, cluster) in scenario.clusters.iter().enumerate() {
        let w = cluster.weight;
        for t in 0..cluster.num_periods() {
            for n in 0..nn {
                if let Some(curve) = scenario.demand_at(m, t, n) {
                    let q = col(VarKey::Demand { m, t, n });
                    c[q] -= w * curve.intercept;
                    p_triplets.push((q, q, w * curve.slope));
                }
            }
            for (i, p) in scenario.producers.iter().enumerate() {
                for (u, unit) in p.units.iter().enumerate() {
                    c[col(VarKey::Conv {
                        m,
                        t,
                        producer: i,
                        unit: u,
                    })] += w * unit.marginal_cost;
                }
            }
            for f in &fleets {
                c[col(VarKey::StoOut { m, t, sto: f.sto })] += w * c_sto;
            }
            if mode == CompetitionMode::CournotOligopoly {
                // extended cost term: (1/2) W D^slp (producer output at n)^2
                // per (n, producer); investor storage never enters.
                for n in 0..nn {
                    let Some(curve) = scenario.demand_at(m, t, n) else {
                        continue;
                    };
                    for (i, p) in scenario.producers.iter().enumerate() {
                        let mut signed: Vec<(usize, f64)> = Vec::new();
                        for (u, unit) in p.units.iter().enumerate() {
                            if unit.node == n {
                                signed.push((
                                    col(VarKey::Conv {
                                        m,
                                        t,
                                        producer: i,
                                        unit: u,
                                    }),
                                    1.0,
                                ));
                            }
                        }
                        for (e, asset) in p.vres.iter().enumerate() {
                            if asset.node == n {
                                signed.push((
                                    col(VarKey::Vres {
                                        m,
                                        t,
                                        producer: i,
                                        asset: e,
                                    }),
                                    1.0,
                                ));
                            }
                        }
                        for f in &fleets {
                            if let StoRef::Producer { producer, .. } = f.sto {
                                if producer == i && f.node == n {
                                    signed
                                        .push((col(VarKey::StoOut { m, t, sto: f.sto }), 1.0));
                                    signed
                                        .push((col(VarKey::StoIn { m, t, sto: f.sto }), -1.0));
                                }
                            }
                        }
                        let coeff = w * curve.slope;
                        for &(a, sa) in &signed {
                            for &(b, sb) in &signed {
                                p_triplets.push((a, b, coeff * sa * sb));
                            }
                        }
                    }
                }
            }
        }
    }
    let p = CscMatrix::from_triplets(nv, nv, &p_triplets);

    // ---- equality constraints (family-contiguous) ----
    let mut eq_cons: Vec<ConKey> = Vec::new();
    let mut eq_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b_eq: Vec<f64> = Vec::new();

    let push_eq = |cons: &mut Vec<ConKey>,
                       triplets: &mut Vec<(usize, usize, f64)>,
                       rhs: &mut Vec<f64>,
                       key: ConKey,
                       terms: &[(usize, f64)],
                       b: f64| {
        let row = cons.len();
        cons.push(key);
        for &(v, coeff) in terms {
            triplets.push((row, v, coeff));
        }
        rhs.push(b);
    };

    // balance
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            for n in 0..nn {
                let mut terms: Vec<(usize, f64)> = Vec::new();
                if scenario.demand_at(m, t, n).is_some() {
                    terms.push((col(VarKey::Demand { m, t, n }), 1.0));
                }
                for (i, p) in scenario.producers.iter().enumerate() {
                    for (u, unit) in p.units.iter().enumerate() {
                        if unit.node == n {
                            terms.push((
                                col(VarKey::Conv {
                                    m,
                                    t,
                                    producer: i,
                                    unit: u,
                                }),
                                -1.0,
                            ));
                        }
                    }
                    for (e, asset) in p.vres.iter().enumerate() {
                        if asset.node == n {
                            terms.push((
                                col(VarKey::Vres {
                                    m,
                                    t,
                                    producer: i,
                                    asset: e,
                                }),
                                -1.0,
                            ));
                        }
                    }
                }
                for f in &fleets {
                    if f.node == n {
                        terms.push((col(VarKey::StoOut { m, t, sto: f.sto }), -1.0));
                        terms.push((col(VarKey::StoIn { m, t, sto: f.sto }), 1.0));
                    }
                }
                for n2 in 0..nn {
                    let bval = scenario.network.b[n][n2];
                    if bval != 0.0 {
                        terms.push((col(VarKey::Angle { m, t, n: n2 }), -dur * bval));
                    }
                }
                push_eq(
                    &mut eq_cons,
                    &mut eq_triplets,
                    &mut b_eq,
                    ConKey::Balance { m, t, n },
                    &terms,
                    0.0,
                );
            }
        }
    }
    // slack pin
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for t in 0..cluster.num_periods() {
            let v = col(VarKey::Angle {
                m,
                t,
                n: scenario.network.slack,
            });
            push_eq(
                &mut eq_cons,
                &mut eq_triplets,
                &mut b_eq,
                ConKey::SlackPin { m, t },
                &[(v, 1.0)],
                0.0,
            );
        }
    }
    // VRES equality
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            for (i, p) in scenario.producers.iter().enumerate() {
                for (e, asset) in p.vres.iter().enumerate() {
                    let g = col(VarKey::Vres {
                        m,
                        t,
                        producer: i,
                        asset: e,
                    });
                    let rhs = dur * asset.availability[m][t] * asset.capacity_mw;
                    push_eq(
                        &mut eq_cons,
                        &mut eq_triplets,
                        &mut b_eq,
                        ConKey::VresEq {
                            m,
                            t,
                            producer: i,
                            asset: e,
                        },
                        &[(g, 1.0)],
                        rhs,
                    );
                }
            }
        }
    }
    // storage balance, cyclic within each cluster
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        let nt = cluster.num_periods();
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            let prev = (t + nt - 1) % nt;
            for f in &fleets {
                let carry = (1.0 - f.decay).powf(dur);
                let terms = [
                    (col(VarKey::StoLevel { m, t, sto: f.sto }), 1.0),
                    (
                        col(VarKey::StoLevel {
                            m,
                            t: prev,
                            sto: f.sto,
                        }),
                        -carry,
                    ),
                    (
                        col(VarKey::StoIn { m, t, sto: f.sto }),
                        -f.input_efficiency,
                    ),
                    (col(VarKey::StoOut { m, t, sto: f.sto }), 1.0),
                ];
                push_eq(
                    &mut eq_cons,
                    &mut eq_triplets,
                    &mut b_eq,
                    ConKey::StoBalance { m, t, sto: f.sto },
                    &terms,
                    0.0,
                );
            }
        }
    }

    let a_eq = CscMatrix::from_triplets(eq_cons.len(), nv, &eq_triplets);
    let eq_index: HashMap<ConKey, usize> =
        eq_cons.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    // ---- inequality constraints (family-contiguous, A_in x <= h) ----
    let mut in_cons: Vec<ConKey> = Vec::new();
    let mut in_triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut h: Vec<f64> = Vec::new();

    // gen-cap
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            for (i, p) in scenario.producers.iter().enumerate() {
                for (u, unit) in p.units.iter().enumerate() {
                    push_eq(
                        &mut in_cons,
                        &mut in_triplets,
                        &mut h,
                        ConKey::GenCap {
                            m,
                            t,
                            producer: i,
                            unit: u,
                        },
                        &[(
                            col(VarKey::Conv {
                                m,
                                t,
                                producer: i,
                                unit: u,
                            }),
                            1.0,
                        )],
                        dur * unit.effective_capacity(),
                    );
                }
            }
        }
    }
    // ramping, cyclic within each cluster
    for ramp_up in [true, false] {
        for (m, cluster) in scenario.clusters.iter().enumerate() {
            let nt = cluster.num_periods();
            for (t, &dur) in cluster.period_hours.iter().enumerate() {
                let prev = (t + nt - 1) % nt;
                for (i, p) in scenario.producers.iter().enumerate() {
                    for (u, unit) in p.units.iter().enumerate() {
                        let g = col(VarKey::Conv {
                            m,
                            t,
                            producer: i,
                            unit: u,
                        });
                        let gp = col(VarKey::Conv {
                            m,
                            t: prev,
                            producer: i,
                            unit: u,
                        });
                        let (key, terms, rate) = if ramp_up {
                            (
                                ConKey::RampUp {
                                    m,
                                    t,
                                    producer: i,
                                    unit: u,
                                },
                                [(g, 1.0), (gp, -1.0)],
                                unit.ramp_up,
                            )
                        } else {
                            (
                                ConKey::RampDown {
                                    m,
                                    t,
                                    producer: i,
                                    unit: u,
                                },
                                [(gp, 1.0), (g, -1.0)],
                                unit.ramp_down,
                            )
                        };
                        // skip the degenerate self-coupled row on single-period clusters
                        if nt == 1 {
                            continue;
                        }
                        push_eq(
                            &mut in_cons,
                            &mut in_triplets,
                            &mut h,
                            key,
                            &terms,
                            dur * rate * unit.effective_capacity(),
                        );
                    }
                }
            }
        }
    }
    // storage charge / discharge / level bounds
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            for f in &fleets {
                push_eq(
                    &mut in_cons,
                    &mut in_triplets,
                    &mut h,
                    ConKey::StoInCap { m, t, sto: f.sto },
                    &[(col(VarKey::StoIn { m, t, sto: f.sto }), 1.0)],
                    dur * f.rate_in * f.capacity_mwh,
                );
            }
        }
    }
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for (t, &dur) in cluster.period_hours.iter().enumerate() {
            for f in &fleets {
                push_eq(
                    &mut in_cons,
                    &mut in_triplets,
                    &mut h,
                    ConKey::StoOutCap { m, t, sto: f.sto },
                    &[(col(VarKey::StoOut { m, t, sto: f.sto }), 1.0)],
                    dur * f.rate_out * f.capacity_mwh,
                );
            }
        }
    }
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for t in 0..cluster.num_periods() {
            for f in &fleets {
                push_eq(
                    &mut in_cons,
                    &mut in_triplets,
                    &mut h,
                    ConKey::StoUb { m, t, sto: f.sto },
                    &[(col(VarKey::StoLevel { m, t, sto: f.sto }), 1.0)],
                    f.capacity_mwh,
                );
            }
        }
    }
    for (m, cluster) in scenario.clusters.iter().enumerate() {
        for t in 0..cluster.num_periods() {
            for f in &fleets {
                push_eq(
                    &mut in_cons,
                    &mut in_triplets,
                    &mut h,
                    ConKey::StoLb { m, t, sto: f.sto },
                    &[(col(VarKey::StoLevel { m, t, sto: f.sto }), -1.0)],
                    -f.min_factor * f.capacity_mwh,
                );
            }
        }
    }
    // line limits
    for fwd in [true, false] {
        for (m, cluster) in scenario.clusters.iter().enumerate() {
            for (t, &dur) in cluster.period_hours.iter().enumerate() {
                for (l, line) in scenario.network.lines.iter().enumerate() {
                    let sign = if fwd { 1.0 } else { -1.0 };
                    let mut terms: Vec<(usize, f64)> = Vec::new();
                    for n in 0..nn {
                        let hval = scenario.network.h[l][n];
                        if hval != 0.0 {
                            terms.push((col(VarKey::Angle { m, t, n }), sign * dur * hval));
                        }
                    }
                    let key = if fwd {
                        ConKey::LineFwd { m, t, line: l }
                    } else {
                        ConKey::LineBwd { m, t, line: l }
                    };
                    push_eq(
                        &mut in_cons,
                        &mut in_triplets,
                        &mut h,
                        key,
                        &terms,
                        dur * line.capacity_mw,
                    );
                }
            }
        }
    }
    // sign restrictions: everything except angles is nonnegative
    for (v, key) in vars.iter().enumerate() {
        if matches!(key, VarKey::Angle { .. }) {
            continue;
        }
        push_eq(
            &mut in_cons,
            &mut in_triplets,
            &mut h,
            ConKey::NonNeg { var: v },
            &[(v, -1.0)],
            0.0,
        );
    }

    let a_in = CscMatrix::from_triplets(in_cons.len(), nv, &in_triplets);
    let in_index: HashMap<ConKey, usize> =
        in_cons.iter().enumerate().map(|(i, &k)| (k, i)).collect();

    Ok(StandardQP {
        p,
        c,
        a_eq,
        b_eq,
        a_in,
        h,
        vars,
        var_index,
        eq_cons,
        eq_index,
        in_cons,
        in_index,
    })
}
