use std::fmt;

use serde::{Deserialize, Serialize};

use crate::system::{RenewableKind, SystemData};

use super::build::Ctx;
use super::{big_m_value, CompactMilp, Family, Partition, VarKind, View};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    pub family: Family,
    pub subscripts: Vec<u32>,
    /// Positive amount by which the constraint is missed.
    pub amount: f64,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subs: Vec<String> = self.subscripts.iter().map(|s| s.to_string()).collect();
        write!(f, "{}[{}] violated by {:.3e}", self.family, subs.join(","), self.amount)
    }
}

struct Checker<'a> {
    tol: f64,
    out: Vec<ConstraintViolation>,
    v: View<'a>,
}

impl Checker<'_> {
    fn get(&self, k: VarKind, subs: &[u32]) -> f64 {
        self.v.get(k, subs)
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, family: Family, subs: &[u32], lhs: f64, rhs: f64) {
        let d = lhs - rhs;
        if d > self.tol || d.is_nan() {
            self.out.push(ConstraintViolation { family, subscripts: subs.to_vec(), amount: d });
        }
    }

    fn equal(&mut self, family: Family, subs: &[u32], lhs: f64, rhs: f64) {
        let d = (lhs - rhs).abs();
        if d > self.tol || d.is_nan() {
            self.out.push(ConstraintViolation { family, subscripts: subs.to_vec(), amount: d });
        }
    }
}

/// Re-verifies every constraint family directly from the instance data.
///
/// Values are read by variable identity, so a model built with storage or shedding switched
/// off is checked with those quantities at zero. A length mismatch is reported as a domain
/// violation rather than an error.
pub fn check_solution(sys: &SystemData, milp: &CompactMilp, x: &[f64], tol: f64) -> Vec<ConstraintViolation> {
    let c = match Ctx::new(sys) {
        Ok(c) => c,
        Err(_) => {
            return vec![ConstraintViolation { family: Family::Domain, subscripts: vec![], amount: f64::INFINITY }]
        }
    };
    if x.len() != milp.num_vars() {
        return vec![ConstraintViolation { family: Family::Domain, subscripts: vec![], amount: f64::INFINITY }];
    }
    let mut k = Checker { tol, out: Vec::new(), v: View { milp, x } };
    use Family::*;
    use VarKind::*;

    for (j, var) in milp.vars.iter().enumerate() {
        let val = x[j];
        let bad = match var.partition() {
            Partition::Y => (val - val.round()).abs().max(-val).max(val - 1.0),
            Partition::R | Partition::P => -val,
            Partition::F => 0.0,
        };
        if bad > tol || val.is_nan() {
            let mut subs = vec![j as u32];
            subs.extend(&var.subscripts);
            k.out.push(ConstraintViolation { family: Domain, subscripts: subs, amount: bad });
        }
    }

    let tau = sys.policy.ramp_window_minutes / 60.0;
    let psi = sys.economics.base_power;
    let peak = sys.total_peak();
    let opt = &milp.options;
    let gamma = opt.gamma(sys);
    let phi = opt.phi(sys);

    for s in c.stages() {
        let lm = c.load_mult(s);
        let mut installed = 0.0;
        for (g, u) in sys.thermal_types.iter().enumerate() {
            let gi = g as u32 + 1;
            let n = k.get(NewUnits, &[s, gi]);
            let cap_total = (u.existing_count as f64 + n) * u.capacity;
            installed += cap_total;
            let np = u.segments.len() as f64;
            for h in c.hour_iter() {
                let hp = c.prev(h);
                let p = k.get(Gen, &[s, gi, h]);
                let pp = k.get(Gen, &[s, gi, hp]);
                let ru = k.get(ResUp, &[s, gi, h]);
                let rd = k.get(ResDn, &[s, gi, h]);
                let mut seg_sum = 0.0;
                for q in 1..=u.segments.len() as u32 {
                    let ps = k.get(Seg, &[s, gi, h, q]);
                    seg_sum += ps;
                    k.le(SegmentCap, &[s, gi, h, q], ps, cap_total / np);
                }
                k.equal(SegmentSum, &[s, gi, h], p, seg_sum);
                k.le(GenCap, &[s, gi, h], p + ru, cap_total);
                k.le(DownReserve, &[s, gi, h], rd, p);
                k.le(RampUp, &[s, gi, h], p + ru - pp, u.ramp_up);
                k.le(RampDown, &[s, gi, h], pp + rd - p, u.ramp_down);
                k.le(ReserveUpCap, &[s, gi, h], ru, u.frsr_up_max);
                k.le(ReserveDnCap, &[s, gi, h], rd, u.frsr_dn_max);
                k.le(DeliverUp, &[s, gi, h], tau * (p - pp) + ru, u.frsr_up_max);
                k.le(DeliverDn, &[s, gi, h], tau * (pp - p) + rd, u.frsr_dn_max);
                k.le(DeliverCapUp, &[s, gi, h], tau * p + (1.0 - tau) * pp + ru, cap_total);
                k.le(DeliverCapDn, &[s, gi, h], rd, tau * p + (1.0 - tau) * pp);
            }
            if u.is_candidate() {
                let xs: f64 = (1..=u.candidate_slots).map(|d| k.get(Unit, &[s, gi, d])).sum();
                k.equal(UnitCount, &[s, gi], n, xs);
                let n_prev = if s > 1 { k.get(NewUnits, &[s - 1, gi]) } else { 0.0 };
                k.le(Tunnel, &[s, gi], n - n_prev, u.tunnel() as f64);
                for d in 1..=u.candidate_slots {
                    let xv = k.get(Unit, &[s, gi, d]);
                    let xp = if s > 1 { k.get(Unit, &[s - 1, gi, d]) } else { 0.0 };
                    k.le(UnitPersist, &[s, gi, d], xp, xv);
                    if d < u.candidate_slots {
                        k.le(UnitOrder, &[s, gi, d], k.get(Unit, &[s, gi, d + 1]), xv);
                    }
                }
            }
        }

        let mut res_cap = 0.0;
        for (w, site) in sys.renewable_sites.iter().enumerate() {
            let wi = w as u32 + 1;
            let (kind, fam_cap, fam_per) = match site.kind {
                RenewableKind::Wind => (Wind, WindCap, WindPersist),
                RenewableKind::Pv => (Pv, PvCap, PvPersist),
            };
            let cap = k.get(kind, &[s, wi]);
            res_cap += cap;
            k.le(fam_cap, &[s, wi], cap, site.cap_max);
            let prev = if s > 1 { k.get(kind, &[s - 1, wi]) } else { 0.0 };
            k.le(fam_per, &[s, wi], prev, cap);
        }
        k.le(Adequacy, &[s], (1.0 + sys.policy.reserve_margin) * lm * peak, installed + res_cap);

        for (vi, tech) in sys.techs().iter().enumerate() {
            let (lo, hi) = sys.policy.mix_bounds(s, tech);
            let mut share = 0.0;
            let mut total = 0.0;
            for (g, u) in sys.thermal_types.iter().enumerate() {
                let cap = (u.existing_count as f64 + k.get(NewUnits, &[s, g as u32 + 1])) * u.capacity;
                total += cap;
                if &u.tech == tech {
                    share += cap;
                }
            }
            let sub = [s, vi as u32 + 1];
            k.le(MixMax, &sub, share, hi * total);
            k.le(MixMin, &sub, lo * total, share);
        }

        let mut rps_lhs = 0.0;
        let mut curtail_total = 0.0;
        let mut wind_avail_total = 0.0;
        for h in c.hour_iter() {
            let hz = h as usize - 1;
            let mut expected = 0.0;
            for (w, site) in sys.renewable_sites.iter().enumerate() {
                let wi = w as u32 + 1;
                match site.kind {
                    RenewableKind::Wind => {
                        let avail = c.wf[hz] * k.get(Wind, &[s, wi]);
                        let pc = k.get(Curtail, &[s, wi, h]);
                        k.le(CurtailHour, &[s, wi, h], pc, avail);
                        expected += avail;
                        rps_lhs += avail - pc;
                        curtail_total += pc;
                        wind_avail_total += avail;
                    }
                    RenewableKind::Pv => {
                        let avail = c.pvf[hz] * k.get(Pv, &[s, wi]);
                        expected += avail;
                        rps_lhs += avail;
                    }
                }
            }
            let system_load = lm * c.lf[hz] * peak;
            let floor = sys.policy.frsr_res_frac * expected + sys.policy.frsr_load_frac * system_load;
            let ru: f64 = (1..=sys.thermal_types.len() as u32).map(|g| k.get(ResUp, &[s, g, h])).sum();
            let rd: f64 = (1..=sys.thermal_types.len() as u32).map(|g| k.get(ResDn, &[s, g, h])).sum();
            k.le(ReserveUpFloor, &[s, h], floor, ru);
            k.le(ReserveDnFloor, &[s, h], floor, rd);
        }
        let lf_sum: f64 = c.lf.iter().sum();
        k.le(Rps, &[s], c.rps_coef(s, opt.rps_reading) * lm * lf_sum * peak, rps_lhs);
        k.le(CurtailCap, &[s], curtail_total, sys.policy.wind_curtail_beta * wind_avail_total);

        let mut shed_total = 0.0;
        let mut demand_total = 0.0;
        for j in 0..sys.buses.len() {
            for h in c.hour_iter() {
                let ls = k.get(Shed, &[s, j as u32 + 1, h]);
                let d = c.demand(s, j, h);
                k.le(ShedHour, &[s, j as u32 + 1, h], ls, gamma.max(0.0) * d);
                shed_total += ls;
                demand_total += d;
            }
        }
        k.le(ShedTotal, &[s], shed_total, phi.max(0.0) * demand_total);

        for (t, st) in sys.storage_types.iter().enumerate() {
            let ti = t as u32 + 1;
            let built = k.get(Storage, &[s, ti]);
            let prev = if s > 1 { k.get(Storage, &[s - 1, ti]) } else { 0.0 };
            k.le(StoragePersist, &[s, ti], prev, built);
            let cm = st.power_cap;
            for h in c.hour_iter() {
                let sub = [s, ti, h];
                let pc = k.get(Charge, &sub);
                let pd = k.get(Discharge, &sub);
                let u = k.get(Mode, &sub);
                let e = k.get(Energy, &sub);
                let ep = k.get(Energy, &[s, ti, c.prev(h)]);
                k.le(ChargeCap, &sub, st.eta_charge * pc, cm * built);
                k.le(DischargeCap, &sub, pd / st.eta_discharge, cm * built);
                k.le(ChargeMode, &sub, st.eta_charge * pc, cm * u);
                k.le(DischargeMode, &sub, pd / st.eta_discharge, cm * (1.0 - u));
                k.equal(StorageBalance, &sub, e, ep + st.eta_charge * pc - pd / st.eta_discharge);
                k.le(EnergyCap, &sub, e, st.energy_cap * built);
            }
        }

        for (l, line) in sys.lines.iter().enumerate() {
            let li = l as u32 + 1;
            let (f, t) = c.line_ends[l];
            let k_l = psi * line.susceptance;
            for h in c.hour_iter() {
                let dtheta = k.get(Angle, &[s, f as u32 + 1, h]) - k.get(Angle, &[s, t as u32 + 1, h]);
                if line.is_existing {
                    let pe = k.get(ExistingFlow, &[s, li, h]);
                    k.le(ExistingFlowLimit, &[s, li, h], pe.abs(), line.capacity);
                    k.equal(FlowDef, &[s, li, h], pe, k_l * dtheta);
                    continue;
                }
                let m = big_m_value(line, psi, opt.max_angle);
                for cc in 1..=line.corridor_slots {
                    let pl = k.get(CandidateFlow, &[s, li, cc, h]);
                    let y = k.get(Line, &[s, li, cc]);
                    k.le(CandidateFlowLimit, &[s, li, cc, h], pl.abs(), line.capacity * y);
                    k.le(CandidateFlowDef, &[s, li, cc, h], (pl - k_l * dtheta).abs(), m * (1.0 - y));
                }
                k.le(AngleLimit, &[s, li, h], dtheta.abs(), opt.max_angle);
            }
            if !line.is_existing {
                for cc in 1..=line.corridor_slots {
                    let y = k.get(Line, &[s, li, cc]);
                    let prev = if s > 1 { k.get(Line, &[s - 1, li, cc]) } else { 0.0 };
                    k.le(LinePersist, &[s, li, cc], prev, y);
                    if cc < line.corridor_slots {
                        k.le(LineOrder, &[s, li, cc], k.get(Line, &[s, li, cc + 1]), y);
                    }
                }
            }
        }

        for (j, bus) in sys.buses.iter().enumerate() {
            for h in c.hour_iter() {
                let hz = h as usize - 1;
                let mut supply = 0.0;
                for (g, u) in sys.thermal_types.iter().enumerate() {
                    if u.bus == bus.id {
                        supply += k.get(Gen, &[s, g as u32 + 1, h]);
                    }
                }
                for (w, site) in sys.renewable_sites.iter().enumerate().filter(|(_, x)| x.bus == bus.id) {
                    let wi = w as u32 + 1;
                    supply += match site.kind {
                        RenewableKind::Wind => c.wf[hz] * k.get(Wind, &[s, wi]) - k.get(Curtail, &[s, wi, h]),
                        RenewableKind::Pv => c.pvf[hz] * k.get(Pv, &[s, wi]),
                    };
                }
                for (t, st) in sys.storage_types.iter().enumerate() {
                    if st.bus == bus.id {
                        let sub = [s, t as u32 + 1, h];
                        supply += k.get(Discharge, &sub) - k.get(Charge, &sub);
                    }
                }
                let mut outflow = 0.0;
                for (l, line) in sys.lines.iter().enumerate() {
                    let dir = if line.from_bus == bus.id {
                        1.0
                    } else if line.to_bus == bus.id {
                        -1.0
                    } else {
                        continue;
                    };
                    let li = l as u32 + 1;
                    let flow = if line.is_existing {
                        k.get(ExistingFlow, &[s, li, h])
                    } else {
                        (1..=line.corridor_slots).map(|cc| k.get(CandidateFlow, &[s, li, cc, h])).sum()
                    };
                    outflow += dir * flow;
                }
                let demand = lm * c.lf[hz] * bus.peak_load - k.get(Shed, &[s, j as u32 + 1, h]);
                k.equal(Balance, &[s, j as u32 + 1, h], supply - outflow, demand);
            }
        }
    }
    k.out
}
