use crate::error::{Error, Result};
use crate::lp::RowSense;
use crate::system::{annuity_factor, stage_discount, validate, DiscountKind, RenewableKind, SystemData, ViolationKind};

use super::{big_m_value, BlockRow, BuildOptions, CompactMilp, Family, RpsReading, VarKind};

/// Index data shared by the builder, evaluator and checker.
pub(crate) struct Ctx<'a> {
    pub sys: &'a SystemData,
    pub stages: u32,
    pub hours: u32,
    /// Per representative hour: load, wind, pv factors and weight.
    pub lf: Vec<f64>,
    pub wf: Vec<f64>,
    pub pvf: Vec<f64>,
    pub rho: Vec<f64>,
    pub gen_bus: Vec<usize>,
    pub site_bus: Vec<usize>,
    pub store_bus: Vec<usize>,
    pub line_ends: Vec<(usize, usize)>,
}

impl<'a> Ctx<'a> {
    pub fn new(sys: &'a SystemData) -> Result<Self> {
        let rep = sys.timeseries.representatives.as_ref().ok_or(Error::MissingRepresentativeSet)?;
        if rep.is_empty() {
            return Err(Error::MissingRepresentativeSet);
        }
        let bus = |id: u32| sys.bus_index(id).ok_or_else(|| Error::Reference(format!("bus {id}")));
        Ok(Self {
            sys,
            stages: sys.economics.stage_count,
            hours: rep.len() as u32,
            lf: rep.hours.iter().map(|h| h.load_factor).collect(),
            wf: rep.hours.iter().map(|h| h.wind_factor).collect(),
            pvf: rep.hours.iter().map(|h| h.pv_factor).collect(),
            rho: rep.hours.iter().map(|h| h.weight).collect(),
            gen_bus: sys.thermal_types.iter().map(|g| bus(g.bus)).collect::<Result<_>>()?,
            site_bus: sys.renewable_sites.iter().map(|w| bus(w.bus)).collect::<Result<_>>()?,
            store_bus: sys.storage_types.iter().map(|t| bus(t.bus)).collect::<Result<_>>()?,
            line_ends: sys.lines.iter().map(|l| Ok((bus(l.from_bus)?, bus(l.to_bus)?))).collect::<Result<_>>()?,
        })
    }

    /// Cyclic predecessor of 1-based hour `h`.
    pub fn prev(&self, h: u32) -> u32 {
        if h == 1 {
            self.hours
        } else {
            h - 1
        }
    }

    pub fn load_mult(&self, s: u32) -> f64 {
        self.sys.economics.load_factor(s)
    }

    /// Demand at bus position `j`, stage `s`, hour `h` (1-based).
    pub fn demand(&self, s: u32, j: usize, h: u32) -> f64 {
        self.load_mult(s) * self.lf[h as usize - 1] * self.sys.buses[j].peak_load
    }

    pub fn is_wind(&self, w: usize) -> bool {
        self.sys.renewable_sites[w].kind == RenewableKind::Wind
    }

    /// Renewable availability factor of site `w` in hour `h`.
    pub fn avail(&self, w: usize, h: u32) -> f64 {
        if self.is_wind(w) {
            self.wf[h as usize - 1]
        } else {
            self.pvf[h as usize - 1]
        }
    }

    pub fn rps_coef(&self, s: u32, reading: RpsReading) -> f64 {
        let a = self.sys.policy.rps_alpha;
        match reading {
            RpsReading::Ramp => a * s as f64 / self.stages as f64,
            RpsReading::Constant => a,
        }
    }

    pub fn stages(&self) -> impl Iterator<Item = u32> {
        1..=self.stages
    }

    pub fn hour_iter(&self) -> impl Iterator<Item = u32> {
        1..=self.hours
    }
}

pub(crate) fn check_preconditions(sys: &SystemData) -> Result<()> {
    let v = validate(sys);
    if !v.is_empty() {
        let msg = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
        return Err(if v.iter().any(|x| x.kind == ViolationKind::Reference) {
            Error::Reference(msg)
        } else {
            Error::Domain(msg)
        });
    }
    if sys.thermal_types.is_empty() && sys.total_peak() > 0.0 {
        return Err(Error::Infeasible("no thermal unit types: capacity adequacy cannot hold with nonzero load".into()));
    }
    Ok(())
}

struct Builder<'a> {
    c: Ctx<'a>,
    m: CompactMilp,
}

impl Builder<'_> {
    fn var(&mut self, kind: VarKind, subs: Vec<u32>, cost: f64) -> usize {
        self.m.push_var(kind, subs, cost)
    }

    fn id(&self, kind: VarKind, subs: &[u32]) -> usize {
        self.m.index_of(kind, subs).unwrap_or_else(|| panic!("missing {} {:?}", kind.symbol(), subs))
    }

    fn row(&mut self, family: Family, subscripts: Vec<u32>, terms: Vec<(usize, f64)>, sense: RowSense, rhs: f64) {
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (j, a) in terms {
            match coeffs.iter_mut().find(|(k, _)| *k == j) {
                Some(e) => e.1 += a,
                None => coeffs.push((j, a)),
            }
        }
        coeffs.retain(|&(_, a)| a != 0.0);
        self.m.rows.push(BlockRow { family, subscripts, coeffs, sense, rhs });
    }

    fn ge(&mut self, family: Family, subs: Vec<u32>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.row(family, subs, terms, RowSense::Ge, rhs);
    }

    fn eq(&mut self, family: Family, subs: Vec<u32>, terms: Vec<(usize, f64)>, rhs: f64) {
        self.row(family, subs, terms, RowSense::Eq, rhs);
    }
}

/// Assembles the full planning MILP.
pub fn build_milp(sys: &SystemData, options: &BuildOptions) -> Result<CompactMilp> {
    check_preconditions(sys)?;
    let c = Ctx::new(sys)?;
    if !(options.max_angle > 0.0) {
        return Err(Error::Domain("max_angle must be positive".into()));
    }
    let m = CompactMilp::empty(options.clone(), c.stages, c.hours);
    let mut b = Builder { c, m };
    add_variables(&mut b)?;
    add_rows(&mut b);
    Ok(b.m)
}

fn add_variables(b: &mut Builder) -> Result<()> {
    let sys = b.c.sys;
    let opt = b.m.options.clone();
    let e = &sys.economics;
    let i = e.interest_rate;
    let stages: Vec<u32> = b.c.stages().collect();
    let hours: Vec<u32> = b.c.hour_iter().collect();
    let d_inv: Vec<f64> =
        stages.iter().map(|&s| stage_discount(s, e.stage_count, i, DiscountKind::Investment)).collect::<Result<_>>()?;
    let d_op: Vec<f64> =
        stages.iter().map(|&s| stage_discount(s, e.stage_count, i, DiscountKind::Operation)).collect::<Result<_>>()?;
    let crf_line = annuity_factor(i, e.lifetimes.line)?;
    let crf_wind = annuity_factor(i, e.lifetimes.wind)?;
    let crf_pv = annuity_factor(i, e.lifetimes.pv)?;
    let with_storage = opt.with_bes;
    let shed = opt.gamma(sys) > 0.0;

    // Y: lines, units, storage, modes.
    for &s in &stages {
        let di = d_inv[s as usize - 1];
        for (l, line) in sys.lines.iter().enumerate() {
            if line.is_existing {
                continue;
            }
            for cc in 1..=line.corridor_slots {
                let mut k = (line.conductor_cost + line.row_cost) * line.length;
                if line.is_new_corridor && cc == 1 {
                    k += line.substation_cost;
                }
                b.var(VarKind::Line, vec![s, l as u32 + 1, cc], di * 1e6 * crf_line * k);
            }
        }
        for (g, u) in sys.thermal_types.iter().enumerate() {
            for d in 1..=u.candidate_slots {
                b.var(VarKind::Unit, vec![s, g as u32 + 1, d], 0.0);
            }
        }
        if with_storage {
            for (t, st) in sys.storage_types.iter().enumerate() {
                let crf = annuity_factor(i, sys.storage_lifetime(st))?;
                let k = st.energy_cost * st.energy_cap + st.power_cost * st.power_cap;
                b.var(VarKind::Storage, vec![s, t as u32 + 1], di * crf * k);
            }
            for t in 0..sys.storage_types.len() {
                for &h in &hours {
                    b.var(VarKind::Mode, vec![s, t as u32 + 1, h], 0.0);
                }
            }
        }
    }

    // R: renewable capacity.
    for &s in &stages {
        let (di, dop) = (d_inv[s as usize - 1], d_op[s as usize - 1]);
        for (w, site) in sys.renewable_sites.iter().enumerate() {
            let (kind, crf) = match site.kind {
                RenewableKind::Wind => (VarKind::Wind, crf_wind),
                RenewableKind::Pv => (VarKind::Pv, crf_pv),
            };
            b.var(kind, vec![s, w as u32 + 1], di * 1e6 * crf * site.invest_cost + dop * site.maint_cost);
        }
    }

    // P: operation.
    for &s in &stages {
        let (di, dop) = (d_inv[s as usize - 1], d_op[s as usize - 1]);
        for (g, u) in sys.thermal_types.iter().enumerate() {
            let gi = g as u32 + 1;
            if u.is_candidate() {
                let crf = annuity_factor(i, sys.thermal_lifetime(u))?;
                let k = di * 1e6 * crf * u.invest_cost * u.capacity + dop * u.maint_cost * u.capacity;
                b.var(VarKind::NewUnits, vec![s, gi], k);
            }
            for &h in &hours {
                let w = dop * 8760.0 * b.c.rho[h as usize - 1];
                b.var(VarKind::Gen, vec![s, gi, h], 0.0);
                for (p, seg) in u.segments.iter().enumerate() {
                    let mut k = seg.fuel_cost();
                    if opt.with_lcp {
                        k += u.emission_rate * seg.emission_price;
                    }
                    b.var(VarKind::Seg, vec![s, gi, h, p as u32 + 1], w * k);
                }
                b.var(VarKind::ResUp, vec![s, gi, h], w * u.frsr_cost);
                b.var(VarKind::ResDn, vec![s, gi, h], w * u.frsr_cost);
            }
        }
        if with_storage {
            for (t, st) in sys.storage_types.iter().enumerate() {
                for &h in &hours {
                    let w = dop * 8760.0 * b.c.rho[h as usize - 1];
                    let sub = vec![s, t as u32 + 1, h];
                    b.var(VarKind::Discharge, sub.clone(), w * st.degradation_cost);
                    b.var(VarKind::Charge, sub.clone(), 0.0);
                    b.var(VarKind::Energy, sub, 0.0);
                }
            }
        }
        for w in 0..sys.renewable_sites.len() {
            if !b.c.is_wind(w) {
                continue;
            }
            let bus_id = sys.buses[b.c.site_bus[w]].id;
            let price = sys.policy.curtail_penalty.at(bus_id);
            for &h in &hours {
                let wt = dop * 8760.0 * b.c.rho[h as usize - 1];
                b.var(VarKind::Curtail, vec![s, w as u32 + 1, h], wt * price);
            }
        }
        if shed {
            for (j, bus) in sys.buses.iter().enumerate() {
                let price = sys.policy.shed_penalty.at(bus.id);
                for &h in &hours {
                    let wt = dop * 8760.0 * b.c.rho[h as usize - 1];
                    b.var(VarKind::Shed, vec![s, j as u32 + 1, h], wt * price);
                }
            }
        }
    }

    // F: network.
    for &s in &stages {
        for (l, line) in sys.lines.iter().enumerate() {
            for &h in &hours {
                if line.is_existing {
                    b.var(VarKind::ExistingFlow, vec![s, l as u32 + 1, h], 0.0);
                } else {
                    for cc in 1..=line.corridor_slots {
                        b.var(VarKind::CandidateFlow, vec![s, l as u32 + 1, cc, h], 0.0);
                    }
                }
            }
        }
        for j in 0..sys.buses.len() {
            for &h in &hours {
                b.var(VarKind::Angle, vec![s, j as u32 + 1, h], 0.0);
            }
        }
    }

    b.m.objective_offset = stages
        .iter()
        .map(|&s| {
            d_op[s as usize - 1]
                * sys.thermal_types.iter().map(|u| u.maint_cost * u.capacity * u.existing_count as f64).sum::<f64>()
        })
        .sum();
    Ok(())
}

fn add_rows(b: &mut Builder) {
    use Family::*;
    use VarKind::*;
    let sys = b.c.sys;
    let opt = b.m.options.clone();
    let stages: Vec<u32> = b.c.stages().collect();
    let hours: Vec<u32> = b.c.hour_iter().collect();
    let tau = sys.policy.ramp_window_minutes / 60.0;
    let psi = sys.economics.base_power;
    let peak = sys.total_peak();
    let gamma = opt.gamma(sys);
    let phi = opt.phi(sys);

    // Thermal units.
    for &s in &stages {
        for (g, u) in sys.thermal_types.iter().enumerate() {
            let gi = g as u32 + 1;
            let ne = u.existing_count as f64;
            let cap = u.capacity;
            let n = u.is_candidate().then(|| b.id(NewUnits, &[s, gi]));
            let with_n = |terms: &mut Vec<(usize, f64)>, a: f64| {
                if let Some(n) = n {
                    terms.push((n, a));
                }
            };
            let np = u.segments.len() as f64;
            for &h in &hours {
                let hp = b.c.prev(h);
                let p = b.id(Gen, &[s, gi, h]);
                let pp = b.id(Gen, &[s, gi, hp]);
                let ru = b.id(ResUp, &[s, gi, h]);
                let rd = b.id(ResDn, &[s, gi, h]);
                let mut sum = vec![(p, 1.0)];
                for k in 1..=u.segments.len() as u32 {
                    let ps = b.id(Seg, &[s, gi, h, k]);
                    sum.push((ps, -1.0));
                    let mut t = vec![(ps, -1.0)];
                    with_n(&mut t, cap / np);
                    b.ge(SegmentCap, vec![s, gi, h, k], t, -ne * cap / np);
                }
                b.eq(SegmentSum, vec![s, gi, h], sum, 0.0);
                let mut t = vec![(p, -1.0), (ru, -1.0)];
                with_n(&mut t, cap);
                b.ge(GenCap, vec![s, gi, h], t, -ne * cap);
                b.ge(DownReserve, vec![s, gi, h], vec![(p, 1.0), (rd, -1.0)], 0.0);
                b.ge(RampUp, vec![s, gi, h], vec![(p, -1.0), (ru, -1.0), (pp, 1.0)], -u.ramp_up);
                b.ge(RampDown, vec![s, gi, h], vec![(pp, -1.0), (rd, -1.0), (p, 1.0)], -u.ramp_down);
                b.ge(ReserveUpCap, vec![s, gi, h], vec![(ru, -1.0)], -u.frsr_up_max);
                b.ge(ReserveDnCap, vec![s, gi, h], vec![(rd, -1.0)], -u.frsr_dn_max);
                b.ge(DeliverUp, vec![s, gi, h], vec![(p, -tau), (pp, tau), (ru, -1.0)], -u.frsr_up_max);
                b.ge(DeliverDn, vec![s, gi, h], vec![(pp, -tau), (p, tau), (rd, -1.0)], -u.frsr_dn_max);
                let mut t = vec![(p, -tau), (pp, -(1.0 - tau)), (ru, -1.0)];
                with_n(&mut t, cap);
                b.ge(DeliverCapUp, vec![s, gi, h], t, -ne * cap);
                b.ge(DeliverCapDn, vec![s, gi, h], vec![(p, tau), (pp, 1.0 - tau), (rd, -1.0)], 0.0);
            }
            if let Some(n) = n {
                let mut t = vec![(n, 1.0)];
                for d in 1..=u.candidate_slots {
                    t.push((b.id(Unit, &[s, gi, d]), -1.0));
                }
                b.eq(UnitCount, vec![s, gi], t, 0.0);
                let mut t = vec![(n, -1.0)];
                if s > 1 {
                    t.push((b.id(NewUnits, &[s - 1, gi]), 1.0));
                }
                b.ge(Tunnel, vec![s, gi], t, -(u.tunnel() as f64));
                for d in 1..=u.candidate_slots {
                    let x = b.id(Unit, &[s, gi, d]);
                    if s > 1 {
                        let xp = b.id(Unit, &[s - 1, gi, d]);
                        b.ge(UnitPersist, vec![s, gi, d], vec![(x, 1.0), (xp, -1.0)], 0.0);
                    }
                    if d < u.candidate_slots {
                        let xn = b.id(Unit, &[s, gi, d + 1]);
                        b.ge(UnitOrder, vec![s, gi, d], vec![(x, 1.0), (xn, -1.0)], 0.0);
                    }
                }
            }
        }
    }

    // System-wide capacity, mix, reserve floors.
    for &s in &stages {
        let lm = b.c.load_mult(s);
        let mut t = Vec::new();
        let mut existing = 0.0;
        for (g, u) in sys.thermal_types.iter().enumerate() {
            existing += u.existing_count as f64 * u.capacity;
            if u.is_candidate() {
                t.push((b.id(NewUnits, &[s, g as u32 + 1]), u.capacity));
            }
        }
        for w in 0..sys.renewable_sites.len() {
            let kind = if b.c.is_wind(w) { Wind } else { Pv };
            t.push((b.id(kind, &[s, w as u32 + 1]), 1.0));
        }
        b.ge(Adequacy, vec![s], t, (1.0 + sys.policy.reserve_margin) * lm * peak - existing);

        for (v, tech) in sys.techs().iter().enumerate() {
            let (lo, hi) = sys.policy.mix_bounds(s, tech);
            for (fam, active) in [(MixMax, hi < 1.0), (MixMin, lo > 0.0)] {
                if !active {
                    continue;
                }
                let mut t = Vec::new();
                let mut rhs = 0.0;
                for (g, u) in sys.thermal_types.iter().enumerate() {
                    let mx = if &u.tech == tech { 1.0 } else { 0.0 };
                    let a = if fam == MixMax { hi - mx } else { mx - lo } * u.capacity;
                    rhs -= a * u.existing_count as f64;
                    if u.is_candidate() {
                        t.push((b.id(NewUnits, &[s, g as u32 + 1]), a));
                    }
                }
                b.ge(fam, vec![s, v as u32 + 1], t, rhs);
            }
        }

        for &h in &hours {
            let floor = sys.policy.frsr_load_frac * lm * b.c.lf[h as usize - 1] * peak;
            for (fam, kind) in [(ReserveUpFloor, ResUp), (ReserveDnFloor, ResDn)] {
                let mut t = Vec::new();
                for g in 0..sys.thermal_types.len() {
                    t.push((b.id(kind, &[s, g as u32 + 1, h]), 1.0));
                }
                for w in 0..sys.renewable_sites.len() {
                    let kind = if b.c.is_wind(w) { Wind } else { Pv };
                    t.push((b.id(kind, &[s, w as u32 + 1]), -sys.policy.frsr_res_frac * b.c.avail(w, h)));
                }
                b.ge(fam, vec![s, h], t, floor);
            }
        }
    }

    // Renewables.
    let any_wind = (0..sys.renewable_sites.len()).any(|w| b.c.is_wind(w));
    for &s in &stages {
        let lm = b.c.load_mult(s);
        for (w, site) in sys.renewable_sites.iter().enumerate() {
            let wi = w as u32 + 1;
            let (kind, cap_fam, per_fam) =
                if b.c.is_wind(w) { (Wind, WindCap, WindPersist) } else { (Pv, PvCap, PvPersist) };
            let x = b.id(kind, &[s, wi]);
            b.ge(cap_fam, vec![s, wi], vec![(x, -1.0)], -site.cap_max);
            if s > 1 {
                let xp = b.id(kind, &[s - 1, wi]);
                b.ge(per_fam, vec![s, wi], vec![(x, 1.0), (xp, -1.0)], 0.0);
            }
            if b.c.is_wind(w) {
                for &h in &hours {
                    let pc = b.id(Curtail, &[s, wi, h]);
                    b.ge(CurtailHour, vec![s, wi, h], vec![(pc, -1.0), (x, b.c.wf[h as usize - 1])], 0.0);
                }
            }
        }
        if sys.policy.rps_alpha > 0.0 {
            let mut t = Vec::new();
            for w in 0..sys.renewable_sites.len() {
                let wi = w as u32 + 1;
                let kind = if b.c.is_wind(w) { Wind } else { Pv };
                let avail: f64 = hours.iter().map(|&h| b.c.avail(w, h)).sum();
                t.push((b.id(kind, &[s, wi]), avail));
                if b.c.is_wind(w) {
                    for &h in &hours {
                        t.push((b.id(Curtail, &[s, wi, h]), -1.0));
                    }
                }
            }
            let lf_sum: f64 = b.c.lf.iter().sum();
            b.ge(Rps, vec![s], t, b.c.rps_coef(s, opt.rps_reading) * lm * lf_sum * peak);
        }
        if any_wind {
            let beta = sys.policy.wind_curtail_beta;
            let wf_sum: f64 = b.c.wf.iter().sum();
            let mut t = Vec::new();
            for w in 0..sys.renewable_sites.len() {
                if !b.c.is_wind(w) {
                    continue;
                }
                let wi = w as u32 + 1;
                t.push((b.id(Wind, &[s, wi]), beta * wf_sum));
                for &h in &hours {
                    t.push((b.id(Curtail, &[s, wi, h]), -1.0));
                }
            }
            b.ge(CurtailCap, vec![s], t, 0.0);
        }
        if gamma > 0.0 {
            let mut total = Vec::new();
            let mut cap = 0.0;
            for j in 0..sys.buses.len() {
                for &h in &hours {
                    let ls = b.id(Shed, &[s, j as u32 + 1, h]);
                    let d = b.c.demand(s, j, h);
                    b.ge(ShedHour, vec![s, j as u32 + 1, h], vec![(ls, -1.0)], -gamma * d);
                    total.push((ls, -1.0));
                    cap += d;
                }
            }
            b.ge(ShedTotal, vec![s], total, -phi * cap);
        }
    }

    // Storage.
    if opt.with_bes {
        for &s in &stages {
            for (t, st) in sys.storage_types.iter().enumerate() {
                let ti = t as u32 + 1;
                let i = b.id(Storage, &[s, ti]);
                if s > 1 {
                    let ip = b.id(Storage, &[s - 1, ti]);
                    b.ge(StoragePersist, vec![s, ti], vec![(i, 1.0), (ip, -1.0)], 0.0);
                }
                let (ec, ed, cm) = (st.eta_charge, 1.0 / st.eta_discharge, st.power_cap);
                for &h in &hours {
                    let sub = vec![s, ti, h];
                    let pc = b.id(Charge, &sub);
                    let pd = b.id(Discharge, &sub);
                    let en = b.id(Energy, &sub);
                    let enp = b.id(Energy, &[s, ti, b.c.prev(h)]);
                    let u = b.id(Mode, &sub);
                    b.ge(ChargeCap, sub.clone(), vec![(pc, -ec), (i, cm)], 0.0);
                    b.ge(DischargeCap, sub.clone(), vec![(pd, -ed), (i, cm)], 0.0);
                    b.ge(ChargeMode, sub.clone(), vec![(pc, -ec), (u, cm)], 0.0);
                    b.ge(DischargeMode, sub.clone(), vec![(pd, -ed), (u, -cm)], -cm);
                    b.eq(StorageBalance, sub.clone(), vec![(en, 1.0), (enp, -1.0), (pc, -ec), (pd, ed)], 0.0);
                    b.ge(EnergyCap, sub, vec![(en, -1.0), (i, st.energy_cap)], 0.0);
                }
            }
        }
    }

    // Network.
    for &s in &stages {
        for (l, line) in sys.lines.iter().enumerate() {
            let li = l as u32 + 1;
            let (f, t) = b.c.line_ends[l];
            let k = psi * line.susceptance;
            for &h in &hours {
                let tf = b.id(Angle, &[s, f as u32 + 1, h]);
                let tt = b.id(Angle, &[s, t as u32 + 1, h]);
                if line.is_existing {
                    let pe = b.id(ExistingFlow, &[s, li, h]);
                    b.ge(ExistingFlowLimit, vec![s, li, h, 1], vec![(pe, 1.0)], -line.capacity);
                    b.ge(ExistingFlowLimit, vec![s, li, h, 2], vec![(pe, -1.0)], -line.capacity);
                    b.eq(FlowDef, vec![s, li, h], vec![(pe, 1.0), (tf, -k), (tt, k)], 0.0);
                    continue;
                }
                let big_m = big_m_value(line, psi, opt.max_angle);
                for cc in 1..=line.corridor_slots {
                    let pl = b.id(CandidateFlow, &[s, li, cc, h]);
                    let y = b.id(Line, &[s, li, cc]);
                    b.ge(CandidateFlowLimit, vec![s, li, cc, h, 1], vec![(pl, 1.0), (y, line.capacity)], 0.0);
                    b.ge(CandidateFlowLimit, vec![s, li, cc, h, 2], vec![(pl, -1.0), (y, line.capacity)], 0.0);
                    b.ge(
                        CandidateFlowDef,
                        vec![s, li, cc, h, 1],
                        vec![(pl, 1.0), (tf, -k), (tt, k), (y, -big_m)],
                        -big_m,
                    );
                    b.ge(
                        CandidateFlowDef,
                        vec![s, li, cc, h, 2],
                        vec![(pl, -1.0), (tf, k), (tt, -k), (y, -big_m)],
                        -big_m,
                    );
                }
                b.ge(AngleLimit, vec![s, li, h, 1], vec![(tf, 1.0), (tt, -1.0)], -opt.max_angle);
                b.ge(AngleLimit, vec![s, li, h, 2], vec![(tf, -1.0), (tt, 1.0)], -opt.max_angle);
            }
            if !line.is_existing {
                for cc in 1..=line.corridor_slots {
                    let y = b.id(Line, &[s, li, cc]);
                    if s > 1 {
                        let yp = b.id(Line, &[s - 1, li, cc]);
                        b.ge(LinePersist, vec![s, li, cc], vec![(y, 1.0), (yp, -1.0)], 0.0);
                    }
                    if cc < line.corridor_slots {
                        let yn = b.id(Line, &[s, li, cc + 1]);
                        b.ge(LineOrder, vec![s, li, cc], vec![(y, 1.0), (yn, -1.0)], 0.0);
                    }
                }
            }
        }
    }

    // Nodal balance.
    for &s in &stages {
        for j in 0..sys.buses.len() {
            let ji = j as u32 + 1;
            for &h in &hours {
                let mut t = Vec::new();
                for g in (0..sys.thermal_types.len()).filter(|&g| b.c.gen_bus[g] == j) {
                    t.push((b.id(Gen, &[s, g as u32 + 1, h]), 1.0));
                }
                for w in (0..sys.renewable_sites.len()).filter(|&w| b.c.site_bus[w] == j) {
                    let wi = w as u32 + 1;
                    if b.c.is_wind(w) {
                        t.push((b.id(Wind, &[s, wi]), b.c.wf[h as usize - 1]));
                        t.push((b.id(Curtail, &[s, wi, h]), -1.0));
                    } else {
                        t.push((b.id(Pv, &[s, wi]), b.c.pvf[h as usize - 1]));
                    }
                }
                if opt.with_bes {
                    for st in (0..sys.storage_types.len()).filter(|&st| b.c.store_bus[st] == j) {
                        let sub = [s, st as u32 + 1, h];
                        t.push((b.id(Discharge, &sub), 1.0));
                        t.push((b.id(Charge, &sub), -1.0));
                    }
                }
                for (l, line) in sys.lines.iter().enumerate() {
                    let (f, to) = b.c.line_ends[l];
                    let a = if f == j {
                        1.0
                    } else if to == j {
                        -1.0
                    } else {
                        continue;
                    };
                    let li = l as u32 + 1;
                    if line.is_existing {
                        t.push((b.id(ExistingFlow, &[s, li, h]), -a));
                    } else {
                        for cc in 1..=line.corridor_slots {
                            t.push((b.id(CandidateFlow, &[s, li, cc, h]), -a));
                        }
                    }
                }
                if gamma > 0.0 {
                    t.push((b.id(Shed, &[s, ji, h]), 1.0));
                }
                b.eq(Balance, vec![s, ji, h], t, b.c.demand(s, j, h));
            }
        }
    }
}
