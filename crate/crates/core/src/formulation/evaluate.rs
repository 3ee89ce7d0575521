use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::system::{annuity_factor, stage_discount, DiscountKind, RenewableKind, SystemData};

use super::build::Ctx;
use super::{CompactMilp, VarKind, View};

/// Discounted cost terms and physical totals of one stage. Energy is MWh over the whole stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCosts {
    pub line_invest: f64,
    pub thermal_invest: f64,
    pub renewable_invest: f64,
    pub storage_invest: f64,
    pub fuel: f64,
    pub reserve: f64,
    pub degradation: f64,
    pub shed_and_curtail: f64,
    pub thermal_maint: f64,
    pub renewable_maint: f64,
    pub emission_cost: f64,
    pub emission_tons: f64,
    pub demand_mwh: f64,
    pub served_mwh: f64,
    pub shed_mwh: f64,
    pub thermal_mwh: f64,
    pub wind_mwh: f64,
    pub pv_mwh: f64,
    pub curtailed_mwh: f64,
    pub discharge_mwh: f64,
    pub charge_mwh: f64,
}

impl StageCosts {
    pub fn investment(&self) -> f64 {
        self.line_invest + self.thermal_invest + self.renewable_invest + self.storage_invest
    }

    pub fn operation(&self) -> f64 {
        self.fuel + self.reserve + self.degradation + self.shed_and_curtail
    }

    pub fn maintenance(&self) -> f64 {
        self.thermal_maint + self.renewable_maint
    }

    pub fn total(&self) -> f64 {
        self.investment() + self.operation() + self.maintenance() + self.emission_cost
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub stages: Vec<StageCosts>,
    pub tc_inv: f64,
    pub tc_o: f64,
    pub tc_m: f64,
    pub tc_e: f64,
    pub z: f64,
}

/// Recomputes every cost term from raw variable values.
pub fn evaluate_objective(sys: &SystemData, milp: &CompactMilp, x: &[f64]) -> Result<ObjectiveBreakdown> {
    milp.check_values(x)?;
    let c = Ctx::new(sys)?;
    let v = View { milp, x };
    let e = &sys.economics;
    let i = e.interest_rate;
    let yrs = e.years_per_stage as f64;
    let lcp = milp.options.with_lcp;
    let mut out = ObjectiveBreakdown::default();

    for s in c.stages() {
        let dinv = stage_discount(s, e.stage_count, i, DiscountKind::Investment)?;
        let dop = stage_discount(s, e.stage_count, i, DiscountKind::Operation)?;
        let mut st = StageCosts::default();

        let crf = annuity_factor(i, e.lifetimes.line)?;
        let mut icl = 0.0;
        for (l, line) in sys.lines.iter().enumerate().filter(|(_, l)| !l.is_existing) {
            let built: f64 = (1..=line.corridor_slots).map(|cc| v.get(VarKind::Line, &[s, l as u32 + 1, cc])).sum();
            icl += (line.conductor_cost + line.row_cost) * line.length * built;
            if line.is_new_corridor {
                icl += line.substation_cost * v.get(VarKind::Line, &[s, l as u32 + 1, 1]);
            }
        }
        st.line_invest = dinv * 1e6 * crf * icl;

        let mut mct = 0.0;
        for (g, u) in sys.thermal_types.iter().enumerate() {
            let n = v.get(VarKind::NewUnits, &[s, g as u32 + 1]);
            let crf = annuity_factor(i, sys.thermal_lifetime(u))?;
            st.thermal_invest += dinv * 1e6 * crf * u.invest_cost * u.capacity * n;
            mct += u.maint_cost * u.capacity * (u.existing_count as f64 + n);
        }
        st.thermal_maint = dop * mct;

        let (crf_w, crf_v) = (annuity_factor(i, e.lifetimes.wind)?, annuity_factor(i, e.lifetimes.pv)?);
        let mut mcr = 0.0;
        for (w, site) in sys.renewable_sites.iter().enumerate() {
            let (kind, crf) = match site.kind {
                RenewableKind::Wind => (VarKind::Wind, crf_w),
                RenewableKind::Pv => (VarKind::Pv, crf_v),
            };
            let cap = v.get(kind, &[s, w as u32 + 1]);
            st.renewable_invest += dinv * 1e6 * crf * site.invest_cost * cap;
            mcr += site.maint_cost * cap;
        }
        st.renewable_maint = dop * mcr;

        for (t, sto) in sys.storage_types.iter().enumerate() {
            let crf = annuity_factor(i, sys.storage_lifetime(sto))?;
            let built = v.get(VarKind::Storage, &[s, t as u32 + 1]);
            st.storage_invest +=
                dinv * crf * built * (sto.energy_cost * sto.energy_cap + sto.power_cost * sto.power_cap);
        }

        for h in c.hour_iter() {
            let rho = c.rho[h as usize - 1];
            let w = dop * 8760.0 * rho;
            let mwh = yrs * 8760.0 * rho;
            let (mut oct, mut ocr, mut ocd, mut oclwc, mut em) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (g, u) in sys.thermal_types.iter().enumerate() {
                let gi = g as u32 + 1;
                let mut seg_price = 0.0;
                for (p, seg) in u.segments.iter().enumerate() {
                    let ps = v.get(VarKind::Seg, &[s, gi, h, p as u32 + 1]);
                    oct += seg.fuel_price * seg.heat_rate * ps;
                    seg_price += seg.emission_price * ps;
                }
                em += u.emission_rate * seg_price;
                ocr += u.frsr_cost * (v.get(VarKind::ResUp, &[s, gi, h]) + v.get(VarKind::ResDn, &[s, gi, h]));
                let pg = v.get(VarKind::Gen, &[s, gi, h]);
                st.thermal_mwh += mwh * pg;
                st.emission_tons += mwh * u.emission_rate * pg;
            }
            for (t, sto) in sys.storage_types.iter().enumerate() {
                let pd = v.get(VarKind::Discharge, &[s, t as u32 + 1, h]);
                ocd += sto.degradation_cost * pd;
                st.discharge_mwh += mwh * pd;
                st.charge_mwh += mwh * v.get(VarKind::Charge, &[s, t as u32 + 1, h]);
            }
            for (j, bus) in sys.buses.iter().enumerate() {
                let ls = v.get(VarKind::Shed, &[s, j as u32 + 1, h]);
                oclwc += sys.policy.shed_penalty.at(bus.id) * ls;
                let d = c.demand(s, j, h);
                st.demand_mwh += mwh * d;
                st.shed_mwh += mwh * ls;
                st.served_mwh += mwh * (d - ls);
            }
            for (wi, site) in sys.renewable_sites.iter().enumerate() {
                let sub = [s, wi as u32 + 1];
                match site.kind {
                    RenewableKind::Wind => {
                        let pc = v.get(VarKind::Curtail, &[s, wi as u32 + 1, h]);
                        oclwc += sys.policy.curtail_penalty.at(site.bus) * pc;
                        st.wind_mwh += mwh * (c.wf[h as usize - 1] * v.get(VarKind::Wind, &sub) - pc);
                        st.curtailed_mwh += mwh * pc;
                    }
                    RenewableKind::Pv => st.pv_mwh += mwh * c.pvf[h as usize - 1] * v.get(VarKind::Pv, &sub),
                }
            }
            st.fuel += w * oct;
            st.reserve += w * ocr;
            st.degradation += w * ocd;
            st.shed_and_curtail += w * oclwc;
            if lcp {
                st.emission_cost += w * em;
            }
        }

        out.tc_inv += st.investment();
        out.tc_o += st.operation();
        out.tc_m += st.maintenance();
        out.tc_e += st.emission_cost;
        out.stages.push(st);
    }
    out.z = out.tc_inv + out.tc_o + out.tc_m + out.tc_e;
    Ok(out)
}
