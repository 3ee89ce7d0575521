//! Planning instance schema, loading and validation.

mod finance;
mod io;
mod validate;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::rephours::RepresentativeSet;

pub use finance::{annuity_factor, stage_discount, stage_load_factor, DiscountKind};
pub use io::{
    instance_digest, load_system, load_system_str, read_sidecar, save_system, to_document, write_sidecar, DocFormat,
};
pub use validate::{validate, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lifetimes {
    pub line: u32,
    pub wind: u32,
    pub pv: u32,
    pub thermal: u32,
    pub storage: u32,
}

/// Scalar load growth broadcast to every stage, or one value per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LoadGrowth {
    Scalar(f64),
    PerStage(Vec<f64>),
}

impl LoadGrowth {
    pub fn at(&self, s: u32) -> f64 {
        match self {
            LoadGrowth::Scalar(v) => *v,
            LoadGrowth::PerStage(v) => v[(s as usize - 1).min(v.len().saturating_sub(1))],
        }
    }
}

fn two() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomicParams {
    pub interest_rate: f64,
    pub lifetimes: Lifetimes,
    pub load_growth: LoadGrowth,
    /// MVA.
    pub base_power: f64,
    pub stage_count: u32,
    #[serde(default = "two")]
    pub years_per_stage: u32,
}

impl EconomicParams {
    /// `(1 + LG_s)^s`.
    pub fn load_factor(&self, s: u32) -> f64 {
        stage_load_factor(s, self.load_growth.at(s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: u32,
    /// MW.
    pub peak_load: f64,
    #[serde(default)]
    pub is_expansion_bus: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineCandidate {
    pub id: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    /// Per unit.
    pub susceptance: f64,
    /// MW.
    pub capacity: f64,
    /// km.
    #[serde(default)]
    pub length: f64,
    /// 10^6 $/km.
    #[serde(default)]
    pub conductor_cost: f64,
    /// 10^6 $/km.
    #[serde(default)]
    pub row_cost: f64,
    /// 10^6 $, charged once on the first circuit of a new corridor.
    #[serde(default)]
    pub substation_cost: f64,
    #[serde(default)]
    pub is_existing: bool,
    #[serde(default = "one")]
    pub corridor_slots: u32,
    #[serde(default)]
    pub is_new_corridor: bool,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSegment {
    /// $/MBTU.
    pub fuel_price: f64,
    /// MBTU/MWh.
    pub heat_rate: f64,
    /// $/ton.
    #[serde(default)]
    pub emission_price: f64,
}

impl CostSegment {
    /// $/MWh of fuel.
    pub fn fuel_cost(&self) -> f64 {
        self.fuel_price * self.heat_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalUnitType {
    pub bus: u32,
    pub tech: String,
    /// MW per unit.
    pub capacity: f64,
    #[serde(default)]
    pub existing_count: u32,
    #[serde(default)]
    pub candidate_slots: u32,
    /// New units per stage; absent means only `candidate_slots` limits builds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tunnel_limit: Option<u32>,
    /// 10^6 $/MW.
    #[serde(default)]
    pub invest_cost: f64,
    /// $/MW-year.
    #[serde(default)]
    pub maint_cost: f64,
    pub segments: Vec<CostSegment>,
    /// ton/MWh.
    #[serde(default)]
    pub emission_rate: f64,
    /// MW/h.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// MW.
    pub frsr_up_max: f64,
    pub frsr_dn_max: f64,
    /// $/MWh.
    #[serde(default)]
    pub frsr_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<u32>,
}

impl ThermalUnitType {
    pub fn is_candidate(&self) -> bool {
        self.candidate_slots > 0
    }

    pub fn tunnel(&self) -> u32 {
        self.tunnel_limit.unwrap_or(self.candidate_slots)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenewableKind {
    Wind,
    Pv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableSite {
    pub bus: u32,
    pub kind: RenewableKind,
    /// MW.
    pub cap_max: f64,
    /// 10^6 $/MW.
    #[serde(default)]
    pub invest_cost: f64,
    /// $/MW-year.
    #[serde(default)]
    pub maint_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageType {
    pub bus: u32,
    pub type_id: u32,
    /// MWh.
    pub energy_cap: f64,
    /// MW.
    pub power_cap: f64,
    /// $/MWh.
    #[serde(default)]
    pub energy_cost: f64,
    /// $/MW.
    #[serde(default)]
    pub power_cost: f64,
    /// $/MWh discharged.
    #[serde(default)]
    pub degradation_cost: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusValue {
    pub bus: u32,
    pub value: f64,
}

/// $/MWh price, either one value for every bus or listed per bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BusPrice {
    Scalar(f64),
    PerBus(Vec<BusValue>),
}

impl BusPrice {
    pub fn at(&self, bus: u32) -> f64 {
        match self {
            BusPrice::Scalar(v) => *v,
            BusPrice::PerBus(list) => list.iter().find(|b| b.bus == bus).map_or(0.0, |b| b.value),
        }
    }
}

impl Default for BusPrice {
    fn default() -> Self {
        BusPrice::Scalar(0.0)
    }
}

/// Share bounds of one technology in total thermal capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixBound {
    /// Applies to every stage when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<u32>,
    pub tech: String,
    #[serde(default)]
    pub min: f64,
    #[serde(default = "unit")]
    pub max: f64,
}

fn unit() -> f64 {
    1.0
}

fn frsr_res() -> f64 {
    0.05
}

fn frsr_load() -> f64 {
    0.03
}

fn ten() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyParams {
    #[serde(default)]
    pub rps_alpha: f64,
    #[serde(default = "unit")]
    pub wind_curtail_beta: f64,
    #[serde(default)]
    pub shed_gamma: f64,
    #[serde(default)]
    pub shed_phi: f64,
    #[serde(default)]
    pub reserve_margin: f64,
    #[serde(default)]
    pub mix: Vec<MixBound>,
    #[serde(default)]
    pub shed_penalty: BusPrice,
    #[serde(default)]
    pub curtail_penalty: BusPrice,
    #[serde(default = "frsr_res")]
    pub frsr_res_frac: f64,
    #[serde(default = "frsr_load")]
    pub frsr_load_frac: f64,
    #[serde(default = "ten")]
    pub ramp_window_minutes: f64,
}

impl PolicyParams {
    /// `(min, max)` capacity share of `tech` at stage `s`; tightest over matching entries.
    pub fn mix_bounds(&self, s: u32, tech: &str) -> (f64, f64) {
        self.mix
            .iter()
            .filter(|m| m.tech == tech && m.stage.is_none_or(|st| st == s))
            .fold((0.0, 1.0), |(lo, hi), m| (lo.max(m.min), hi.min(m.max)))
    }
}

/// Full-year hourly factor profiles.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HourlySeries {
    pub load_factor: Vec<f64>,
    pub wind_factor: Vec<f64>,
    pub pv_factor: Vec<f64>,
}

impl HourlySeries {
    pub fn len(&self) -> usize {
        self.load_factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load_factor.is_empty()
    }

    /// `(Lf, Wf, PVf)` per hour.
    pub fn triples(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|h| [self.load_factor[h], self.wind_factor[h], self.pv_factor[h]]).collect()
    }

    pub fn from_triples(t: &[[f64; 3]]) -> Self {
        Self {
            load_factor: t.iter().map(|v| v[0]).collect(),
            wind_factor: t.iter().map(|v| v[1]).collect(),
            pv_factor: t.iter().map(|v| v[2]).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSeries {
    /// Sidecar table path, relative to the document; resolved on load.
    #[serde(default, skip_serializing)]
    pub hourly_file: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub representatives_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hourly: Option<HourlySeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representatives: Option<RepresentativeSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemData {
    #[serde(default)]
    pub name: String,
    pub economics: EconomicParams,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub lines: Vec<LineCandidate>,
    #[serde(default)]
    pub thermal_types: Vec<ThermalUnitType>,
    #[serde(default)]
    pub renewable_sites: Vec<RenewableSite>,
    #[serde(default)]
    pub storage_types: Vec<StorageType>,
    pub policy: PolicyParams,
    #[serde(default)]
    pub timeseries: TimeSeries,
}

impl SystemData {
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn total_peak(&self) -> f64 {
        self.buses.iter().map(|b| b.peak_load).sum()
    }

    pub fn thermal_lifetime(&self, g: &ThermalUnitType) -> u32 {
        g.lifetime.unwrap_or(self.economics.lifetimes.thermal)
    }

    pub fn storage_lifetime(&self, t: &StorageType) -> u32 {
        t.lifetime.unwrap_or(self.economics.lifetimes.storage)
    }

    /// Distinct thermal technology tags in first-seen order.
    pub fn techs(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in &self.thermal_types {
            if !out.contains(&g.tech) {
                out.push(g.tech.clone());
            }
        }
        out
    }
}
