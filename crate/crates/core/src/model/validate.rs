//! Scenario invariant checking. Violations are returned as data, not errors,
//! so callers can report all of them at once.

use super::ScenarioModel;

/// One broken invariant with a human-readable location.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn push(out: &mut Vec<Violation>, location: impl Into<String>, message: impl Into<String>) {
    out.push(Violation {
        location: location.into(),
        message: message.into(),
    });
}

/// Check every structural invariant of the scenario; an empty list means valid.
pub fn validate_scenario(s: &ScenarioModel) -> Vec<Violation> {
    let mut v = Vec::new();
    let nn = s.num_nodes();
    let nm = s.clusters.len();

    if nm == 0 {
        push(&mut v, "clusters", "at least one cluster is required");
    }
    let wsum: f64 = s.clusters.iter().map(|c| c.weight).sum();
    if (wsum - 1.0).abs() > 1e-12 {
        push(
            &mut v,
            "clusters",
            format!("cluster weights sum to {wsum}, expected 1"),
        );
    }
    for (m, c) in s.clusters.iter().enumerate() {
        if c.weight <= 0.0 {
            push(&mut v, format!("clusters[{m}]"), "weight must be positive");
        }
        if c.period_hours.is_empty() {
            push(&mut v, format!("clusters[{m}]"), "no periods");
        }
        for (t, &h) in c.period_hours.iter().enumerate() {
            if h <= 0.0 {
                push(
                    &mut v,
                    format!("clusters[{m}].periods[{t}]"),
                    format!("duration must be positive, got {h}"),
                );
            }
        }
    }

    // network shape
    if s.network.b.len() != nn {
        push(&mut v, "network", "susceptance matrix dimension mismatch");
    }
    if s.network.slack >= nn && nn > 0 {
        push(&mut v, "network", "slack node out of range");
    }

    // demand table shape and curve invariants
    if s.demand.len() != nm {
        push(&mut v, "demand", "cluster dimension mismatch");
    }
    for (m, per_t) in s.demand.iter().enumerate() {
        let nt = s.clusters.get(m).map(|c| c.num_periods()).unwrap_or(0);
        if per_t.len() != nt {
            push(&mut v, format!("demand[{m}]"), "period dimension mismatch");
            continue;
        }
        for (t, per_n) in per_t.iter().enumerate() {
            if per_n.len() != nn {
                push(
                    &mut v,
                    format!("demand[{m}][{t}]"),
                    "node dimension mismatch",
                );
                continue;
            }
            for (n, curve) in per_n.iter().enumerate() {
                if let Some(c) = curve {
                    if c.slope <= 0.0 {
                        push(
                            &mut v,
                            format!("demand[{m}][{t}][{n}]"),
                            format!("slope must be positive, got {}", c.slope),
                        );
                    }
                    if c.intercept <= 0.0 {
                        push(
                            &mut v,
                            format!("demand[{m}][{t}][{n}]"),
                            format!("intercept must be positive, got {}", c.intercept),
                        );
                    }
                }
            }
        }
    }

    for (i, p) in s.producers.iter().enumerate() {
        let loc = |what: &str| format!("producers[{i}] ({}) {what}", p.name);
        for (u, unit) in p.units.iter().enumerate() {
            if unit.node >= nn {
                push(&mut v, loc(&format!("units[{u}]")), "node out of range");
            }
            if unit.marginal_cost < 0.0 {
                push(&mut v, loc(&format!("units[{u}]")), "negative marginal cost");
            }
            if unit.capacity_mw < 0.0 {
                push(&mut v, loc(&format!("units[{u}]")), "negative capacity");
            }
            for (name, r) in [("ramp_up", unit.ramp_up), ("ramp_down", unit.ramp_down)] {
                if !(r > 0.0 && r <= 1.0) {
                    push(
                        &mut v,
                        loc(&format!("units[{u}]")),
                        format!("{name} must be in (0, 1], got {r}"),
                    );
                }
            }
            if !(0.0..=1.0).contains(&unit.availability) {
                push(
                    &mut v,
                    loc(&format!("units[{u}]")),
                    "availability outside [0, 1]",
                );
            }
        }
        for (e, asset) in p.vres.iter().enumerate() {
            if asset.node >= nn {
                push(&mut v, loc(&format!("vres[{e}]")), "node out of range");
            }
            if asset.capacity_mw < 0.0 {
                push(&mut v, loc(&format!("vres[{e}]")), "negative capacity");
            }
            if asset.availability.len() != nm {
                push(
                    &mut v,
                    loc(&format!("vres[{e}]")),
                    "availability cluster dimension mismatch",
                );
            } else {
                for (m, row) in asset.availability.iter().enumerate() {
                    let nt = s.clusters[m].num_periods();
                    if row.len() != nt {
                        push(
                            &mut v,
                            loc(&format!("vres[{e}].availability[{m}]")),
                            "period dimension mismatch",
                        );
                        continue;
                    }
                    if row.iter().any(|&a| !(0.0..=1.0).contains(&a)) {
                        push(
                            &mut v,
                            loc(&format!("vres[{e}].availability[{m}]")),
                            "factor outside [0, 1]",
                        );
                    }
                }
            }
        }
        let tech = &p.storage_tech;
        if !(tech.input_efficiency > 0.0 && tech.input_efficiency <= 1.0) {
            push(&mut v, loc("storage_tech"), "input efficiency outside (0, 1]");
        }
        if !(0.0..1.0).contains(&tech.decay) {
            push(&mut v, loc("storage_tech"), "decay outside [0, 1)");
        }
        for (name, r) in [("rate_in", tech.rate_in), ("rate_out", tech.rate_out)] {
            if !(r > 0.0 && r <= 1.0) {
                push(
                    &mut v,
                    loc("storage_tech"),
                    format!("{name} must be in (0, 1], got {r}"),
                );
            }
        }
        for (k, a) in p.storage.iter().enumerate() {
            if a.node >= nn {
                push(&mut v, loc(&format!("storage[{k}]")), "node out of range");
            }
            if a.energy_capacity_mwh < 0.0 {
                push(&mut v, loc(&format!("storage[{k}]")), "negative capacity");
            }
            if !(0.0..1.0).contains(&a.min_factor) {
                push(
                    &mut v,
                    loc(&format!("storage[{k}]")),
                    "min factor outside [0, 1)",
                );
            }
        }
    }

    // investment catalog
    let cat = &s.investment;
    if cat.sizes_mwh.first() != Some(&0.0) {
        push(&mut v, "investment", "first discrete size must be exactly 0");
    }
    if cat.sizes_mwh.windows(2).any(|w| w[1] <= w[0]) {
        push(&mut v, "investment", "sizes must be strictly increasing");
    }
    if cat.weekly_cost < 0.0 {
        push(&mut v, "investment", "negative weekly cost");
    }
    if !(cat.tech.input_efficiency > 0.0 && cat.tech.input_efficiency <= 1.0) {
        push(&mut v, "investment.tech", "input efficiency outside (0, 1]");
    }
    if !(0.0..1.0).contains(&cat.tech.decay) {
        push(&mut v, "investment.tech", "decay outside [0, 1)");
    }
    for (name, r) in [("rate_in", cat.tech.rate_in), ("rate_out", cat.tech.rate_out)] {
        if !(r > 0.0 && r <= 1.0) {
            push(
                &mut v,
                "investment.tech",
                format!("{name} must be in (0, 1], got {r}"),
            );
        }
    }
    if !(0.0..1.0).contains(&cat.min_factor) {
        push(&mut v, "investment", "min factor outside [0, 1)");
    }
    for (k, &c) in cat.candidates.iter().enumerate() {
        if c >= nn {
            push(
                &mut v,
                format!("investment.candidates[{k}]"),
                "node out of range",
            );
        }
    }
    let mut sorted = cat.candidates.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        push(&mut v, "investment.candidates", "duplicate candidate node");
    }

    v
}
