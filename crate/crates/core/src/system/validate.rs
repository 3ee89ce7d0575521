use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SystemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Dangling or duplicate identifier.
    Reference,
    /// Value outside its admissible range.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

struct Check(Vec<Violation>);

impl Check {
    fn domain(&mut self, ok: bool, entity: impl fmt::Display, rule: &str) {
        if !ok {
            self.0.push(Violation { kind: ViolationKind::Domain, entity: entity.to_string(), rule: rule.into() });
        }
    }

    fn bus(&mut self, known: &HashSet<u32>, bus: u32, entity: impl fmt::Display) {
        if !known.contains(&bus) {
            self.0.push(Violation {
                kind: ViolationKind::Reference,
                entity: entity.to_string(),
                rule: format!("unknown bus {bus}"),
            });
        }
    }
}

fn frac(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}

fn nonneg(v: f64) -> bool {
    v >= 0.0 && v.is_finite()
}

/// Every broken schema invariant, in a stable order. Empty means valid.
pub fn validate(sys: &SystemData) -> Vec<Violation> {
    let mut c = Check(Vec::new());
    let e = &sys.economics;
    c.domain(e.interest_rate > 0.0 && e.interest_rate.is_finite(), "economics", "interest_rate > 0");
    for (name, t) in [
        ("line", e.lifetimes.line),
        ("wind", e.lifetimes.wind),
        ("pv", e.lifetimes.pv),
        ("thermal", e.lifetimes.thermal),
        ("storage", e.lifetimes.storage),
    ] {
        c.domain(t >= 1, format!("economics.lifetimes.{name}"), "lifetime ≥ 1");
    }
    c.domain(e.stage_count >= 1, "economics", "stage_count ≥ 1");
    c.domain(e.years_per_stage == 2, "economics", "years_per_stage = 2");
    c.domain(e.base_power > 0.0 && e.base_power.is_finite(), "economics", "base_power > 0");
    match &e.load_growth {
        super::LoadGrowth::Scalar(v) => c.domain(v.is_finite() && *v > -1.0, "economics", "load_growth > -1"),
        super::LoadGrowth::PerStage(v) => {
            c.domain(v.len() == e.stage_count as usize, "economics", "load_growth has one value per stage");
            c.domain(v.iter().all(|x| x.is_finite() && *x > -1.0), "economics", "load_growth > -1");
        }
    }

    let mut known = HashSet::new();
    for b in &sys.buses {
        if !known.insert(b.id) {
            c.0.push(Violation {
                kind: ViolationKind::Reference,
                entity: format!("bus {}", b.id),
                rule: "bus ids unique".into(),
            });
        }
        c.domain(nonneg(b.peak_load), format!("bus {}", b.id), "peak_load ≥ 0");
    }
    c.domain(!sys.buses.is_empty(), "buses", "at least one bus");

    let mut line_ids = HashSet::new();
    for l in &sys.lines {
        let ent = format!("line {}", l.id);
        if !line_ids.insert(l.id) {
            c.0.push(Violation { kind: ViolationKind::Reference, entity: ent.clone(), rule: "line ids unique".into() });
        }
        c.bus(&known, l.from_bus, &ent);
        c.bus(&known, l.to_bus, &ent);
        c.domain(l.from_bus != l.to_bus, &ent, "from_bus ≠ to_bus");
        c.domain(l.capacity > 0.0 && l.capacity.is_finite(), &ent, "capacity > 0");
        c.domain(l.susceptance > 0.0 && l.susceptance.is_finite(), &ent, "susceptance > 0");
        for v in [l.length, l.conductor_cost, l.row_cost, l.substation_cost] {
            c.domain(nonneg(v), &ent, "costs and length ≥ 0");
        }
        if !l.is_existing {
            c.domain(l.corridor_slots >= 1, &ent, "corridor_slots ≥ 1");
        }
    }

    for (k, g) in sys.thermal_types.iter().enumerate() {
        let ent = format!("thermal {k} (bus {}, {})", g.bus, g.tech);
        c.bus(&known, g.bus, &ent);
        c.domain(!g.segments.is_empty(), &ent, "segments nonempty");
        c.domain(g.capacity > 0.0 && g.capacity.is_finite(), &ent, "capacity > 0");
        for v in [
            g.invest_cost,
            g.maint_cost,
            g.emission_rate,
            g.frsr_cost,
            g.ramp_up,
            g.ramp_down,
            g.frsr_up_max,
            g.frsr_dn_max,
        ] {
            c.domain(nonneg(v), &ent, "costs and limits ≥ 0");
        }
        for s in &g.segments {
            for v in [s.fuel_price, s.heat_rate, s.emission_price] {
                c.domain(nonneg(v), &ent, "segment costs ≥ 0");
            }
        }
        if let Some(t) = g.tunnel_limit {
            c.domain(t <= g.candidate_slots, &ent, "tunnel_limit ≤ candidate_slots");
        }
        c.domain(g.existing_count + g.candidate_slots > 0, &ent, "existing_count + candidate_slots ≥ 1");
        if let Some(t) = g.lifetime {
            c.domain(t >= 1, &ent, "lifetime ≥ 1");
        }
    }

    let mut sites = HashSet::new();
    for r in &sys.renewable_sites {
        let ent = format!("{:?} site at bus {}", r.kind, r.bus).to_lowercase();
        c.bus(&known, r.bus, &ent);
        if !sites.insert((r.bus, r.kind)) {
            c.0.push(Violation {
                kind: ViolationKind::Reference,
                entity: ent.clone(),
                rule: "one site per (bus, kind)".into(),
            });
        }
        for v in [r.cap_max, r.invest_cost, r.maint_cost] {
            c.domain(nonneg(v), &ent, "cap_max and costs ≥ 0");
        }
    }

    let mut stores = HashSet::new();
    for st in &sys.storage_types {
        let ent = format!("storage type {} at bus {}", st.type_id, st.bus);
        c.bus(&known, st.bus, &ent);
        if !stores.insert((st.bus, st.type_id)) {
            c.0.push(Violation {
                kind: ViolationKind::Reference,
                entity: ent.clone(),
                rule: "one storage per (bus, type_id)".into(),
            });
        }
        c.domain(st.eta_charge > 0.0 && st.eta_charge <= 1.0, &ent, "0 < eta_charge ≤ 1");
        c.domain(st.eta_discharge > 0.0 && st.eta_discharge <= 1.0, &ent, "0 < eta_discharge ≤ 1");
        c.domain(st.energy_cap > 0.0 && st.energy_cap.is_finite(), &ent, "energy_cap > 0");
        c.domain(st.power_cap > 0.0 && st.power_cap.is_finite(), &ent, "power_cap > 0");
        for v in [st.energy_cost, st.power_cost, st.degradation_cost] {
            c.domain(nonneg(v), &ent, "costs ≥ 0");
        }
        if let Some(t) = st.lifetime {
            c.domain(t >= 1, &ent, "lifetime ≥ 1");
        }
    }

    let p = &sys.policy;
    for (name, v) in [
        ("rps_alpha", p.rps_alpha),
        ("wind_curtail_beta", p.wind_curtail_beta),
        ("shed_gamma", p.shed_gamma),
        ("shed_phi", p.shed_phi),
        ("frsr_res_frac", p.frsr_res_frac),
        ("frsr_load_frac", p.frsr_load_frac),
    ] {
        c.domain(frac(v), format!("policy.{name}"), "fraction in [0,1]");
    }
    c.domain(nonneg(p.reserve_margin), "policy.reserve_margin", "reserve_margin ≥ 0");
    c.domain(p.ramp_window_minutes > 0.0 && p.ramp_window_minutes <= 60.0, "policy.ramp_window_minutes", "0 < τ ≤ 60");
    for (k, m) in p.mix.iter().enumerate() {
        let ent = format!("policy.mix[{k}] ({})", m.tech);
        c.domain(frac(m.min) && frac(m.max), &ent, "mix bounds in [0,1]");
        c.domain(m.min <= m.max, &ent, "mix_min ≤ mix_max");
        if let Some(s) = m.stage {
            c.domain(s >= 1 && s <= e.stage_count, &ent, "stage in 1..=S");
        }
    }
    for (name, price) in [("shed_penalty", &p.shed_penalty), ("curtail_penalty", &p.curtail_penalty)] {
        match price {
            super::BusPrice::Scalar(v) => c.domain(nonneg(*v), format!("policy.{name}"), "penalty ≥ 0"),
            super::BusPrice::PerBus(list) => {
                for b in list {
                    c.bus(&known, b.bus, format!("policy.{name}"));
                    c.domain(nonneg(b.value), format!("policy.{name}"), "penalty ≥ 0");
                }
            }
        }
    }

    if let Some(h) = &sys.timeseries.hourly {
        c.domain(
            h.wind_factor.len() == h.len() && h.pv_factor.len() == h.len(),
            "timeseries.hourly",
            "series lengths equal",
        );
        for (name, v) in [("load_factor", &h.load_factor), ("wind_factor", &h.wind_factor), ("pv_factor", &h.pv_factor)]
        {
            c.domain(v.iter().all(|x| frac(*x)), format!("timeseries.hourly.{name}"), "factors in [0,1]");
        }
    }
    if let Some(r) = &sys.timeseries.representatives {
        for v in r.violations() {
            c.domain(false, "timeseries.representatives", &v);
        }
    }
    c.0
}
