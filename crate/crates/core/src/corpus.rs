//! Deterministic synthetic planning instances and yearly profiles.
//!
//! Everything here is seeded, so a seed always reproduces the same instance byte for byte.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::rephours::{self, RepresentativeSet};
use crate::system::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YearProfile {
    Temperate,
    Sunny,
    Windy,
}

impl YearProfile {
    pub const ALL: [YearProfile; 3] = [YearProfile::Temperate, YearProfile::Sunny, YearProfile::Windy];
}

/// 8760 hours of load, wind and pv factors in `[0, 1]`.
pub fn synthetic_year(profile: YearProfile, seed: u64) -> HourlySeries {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (wind_mean, pv_scale, load_swing) = match profile {
        YearProfile::Temperate => (0.35, 0.8, 0.10),
        YearProfile::Sunny => (0.25, 1.0, 0.15),
        YearProfile::Windy => (0.50, 0.6, 0.08),
    };
    let mut out = HourlySeries::default();
    let mut wind: f64 = wind_mean;
    let mut cloud = 1.0;
    for t in 0..8760usize {
        let day = (t / 24) as f64;
        let hod = (t % 24) as f64;
        let season = (2.0 * std::f64::consts::PI * (day - 15.0) / 365.0).cos();
        if t % 24 == 0 {
            cloud = r.random_range(0.35..1.0);
        }
        let daily = (std::f64::consts::PI * (hod - 4.0) / 14.0).sin().max(-0.3);
        let load = 0.62 + 0.22 * daily + load_swing * season + r.random_range(-0.03..0.03);
        wind = wind + 0.15 * (wind_mean - wind) + r.random_range(-0.08..0.08);
        wind = wind.clamp(0.0, 1.0);
        let sun = (std::f64::consts::PI * (hod - 6.0) / 12.0).sin().max(0.0);
        let pv = pv_scale * sun * cloud * (0.75 - 0.25 * season);
        out.load_factor.push(load.clamp(0.05, 1.0));
        out.wind_factor.push(wind);
        out.pv_factor.push(pv.clamp(0.0, 1.0));
    }
    out
}

/// Knobs of the instance generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    pub stages: u32,
    pub hours: usize,
    pub buses: usize,
    pub line_slots: u32,
    pub unit_slots: u32,
    pub storage: bool,
    /// Last bus is reachable only through the candidate corridor.
    pub island: bool,
    pub shed_gamma: f64,
}

impl GenSpec {
    pub fn binary_count(&self) -> u32 {
        let per_stage = self.line_slots + self.unit_slots + if self.storage { 1 + self.hours as u32 } else { 0 };
        self.stages * per_stage
    }

    /// Draws the knobs from `seed`, keeping at most 12 binaries.
    pub fn from_seed(seed: u64) -> Self {
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_c0de);
        let mut g = GenSpec {
            seed,
            stages: r.random_range(1..=3),
            hours: r.random_range(4..=8),
            buses: r.random_range(2..=3),
            line_slots: r.random_range(1..=2),
            unit_slots: r.random_range(1..=2),
            storage: r.random_bool(0.3),
            island: r.random_bool(0.4),
            shed_gamma: if r.random_bool(0.3) { 0.1 } else { 0.0 },
        };
        if g.storage && (g.stages > 1 || g.binary_count() > 12) {
            g.storage = false;
        }
        while g.binary_count() > 12 {
            if g.line_slots > 1 {
                g.line_slots -= 1;
            } else if g.unit_slots > 1 {
                g.unit_slots -= 1;
            } else {
                g.stages -= 1;
            }
        }
        g
    }
}

fn representatives(hours: usize, seed: u64) -> RepresentativeSet {
    let year = synthetic_year(YearProfile::ALL[(seed % 3) as usize], seed);
    rephours::cluster_chronological(&year.triples(), hours).expect("valid k")
}

fn thermal(
    bus: u32,
    tech: &str,
    capacity: f64,
    existing: u32,
    slots: u32,
    fuel: f64,
    emission: f64,
) -> ThermalUnitType {
    ThermalUnitType {
        bus,
        tech: tech.into(),
        capacity,
        existing_count: existing,
        candidate_slots: slots,
        tunnel_limit: None,
        invest_cost: 0.9,
        maint_cost: 12_000.0,
        segments: vec![
            CostSegment { fuel_price: fuel, heat_rate: 8.5, emission_price: 20.0 },
            CostSegment { fuel_price: fuel, heat_rate: 10.5, emission_price: 20.0 },
        ],
        emission_rate: emission,
        ramp_up: 0.6 * capacity,
        ramp_down: 0.6 * capacity,
        frsr_up_max: 0.25 * capacity,
        frsr_dn_max: 0.25 * capacity,
        frsr_cost: 2.0,
        lifetime: None,
    }
}

/// Builds one instance from explicit knobs.
pub fn generate_from(spec: &GenSpec) -> SystemData {
    let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
    let nb = spec.buses as u32;
    let buses: Vec<Bus> = (1..=nb)
        .map(|id| Bus { id, peak_load: (r.random_range(40.0..120.0f64)).round(), is_expansion_bus: id == nb })
        .collect();
    let peak: f64 = buses.iter().map(|b| b.peak_load).sum();

    let mut lines = Vec::new();
    let chain_end = if spec.island { nb - 1 } else { nb };
    for k in 1..chain_end {
        lines.push(LineCandidate {
            id: k,
            from_bus: k,
            to_bus: k + 1,
            susceptance: 12.0,
            capacity: (r.random_range(0.5..0.9) * peak).round(),
            length: 0.0,
            conductor_cost: 0.0,
            row_cost: 0.0,
            substation_cost: 0.0,
            is_existing: true,
            corridor_slots: 1,
            is_new_corridor: false,
        });
    }
    let cand_from = if spec.island && nb > 2 { nb - 1 } else { 1 };
    lines.push(LineCandidate {
        id: nb + 10,
        from_bus: cand_from,
        to_bus: nb,
        susceptance: 10.0,
        capacity: (0.8 * peak).round(),
        length: r.random_range(60.0..160.0f64).round(),
        conductor_cost: 0.12,
        row_cost: 0.03,
        substation_cost: if spec.island { 4.0 } else { 0.0 },
        is_existing: false,
        corridor_slots: spec.line_slots,
        is_new_corridor: spec.island,
    });

    let existing_cap = (0.45 * peak).round();
    let cand_cap = (r.random_range(0.3..0.5) * peak).round();
    let mut thermal_types = vec![
        thermal(1, "gas", existing_cap, 2, 0, 4.0, 0.45),
        thermal(2.min(nb), "coal", cand_cap, 0, spec.unit_slots, 2.2, 0.95),
    ];
    thermal_types[1].invest_cost = r.random_range(0.6..1.2);

    let renewable_sites = vec![
        RenewableSite {
            bus: 2.min(nb),
            kind: RenewableKind::Wind,
            cap_max: (0.6 * peak).round(),
            invest_cost: 1.3,
            maint_cost: 25_000.0,
        },
        RenewableSite {
            bus: 1,
            kind: RenewableKind::Pv,
            cap_max: (0.4 * peak).round(),
            invest_cost: 0.9,
            maint_cost: 15_000.0,
        },
    ];

    let storage_types = if spec.storage {
        vec![StorageType {
            bus: nb,
            type_id: 1,
            energy_cap: (0.3 * peak).round(),
            power_cap: (0.15 * peak).round(),
            energy_cost: 20_000.0,
            power_cost: 40_000.0,
            degradation_cost: 5.0,
            eta_charge: 0.9,
            eta_discharge: 0.9,
            lifetime: None,
        }]
    } else {
        Vec::new()
    };

    SystemData {
        name: format!("synthetic-{}", spec.seed),
        economics: EconomicParams {
            interest_rate: 0.05,
            lifetimes: Lifetimes { line: 40, wind: 20, pv: 20, thermal: 30, storage: 15 },
            load_growth: LoadGrowth::Scalar(0.1),
            base_power: 100.0,
            stage_count: spec.stages,
            years_per_stage: 2,
        },
        buses,
        lines,
        thermal_types,
        renewable_sites,
        storage_types,
        policy: PolicyParams {
            rps_alpha: 0.1,
            wind_curtail_beta: 0.5,
            shed_gamma: spec.shed_gamma,
            shed_phi: 0.03,
            reserve_margin: 0.15,
            mix: Vec::new(),
            shed_penalty: BusPrice::Scalar(1000.0),
            curtail_penalty: BusPrice::Scalar(1000.0),
            frsr_res_frac: 0.05,
            frsr_load_frac: 0.03,
            ramp_window_minutes: 10.0,
        },
        timeseries: TimeSeries {
            representatives: Some(representatives(spec.hours, spec.seed)),
            ..TimeSeries::default()
        },
    }
}

pub fn generate(seed: u64) -> SystemData {
    generate_from(&GenSpec::from_seed(seed))
}

/// Small three-bus system used across examples and tests: two stages, four hours.
pub fn three_bus() -> SystemData {
    generate_from(&GenSpec {
        seed: 3,
        stages: 2,
        hours: 4,
        buses: 3,
        line_slots: 2,
        unit_slots: 2,
        storage: false,
        island: false,
        shed_gamma: 0.0,
    })
}

/// Seeds of the reference corpus.
pub const CORPUS_SEEDS: [u64; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub fn corpus() -> Vec<SystemData> {
    CORPUS_SEEDS.iter().map(|&s| generate(s)).collect()
}
