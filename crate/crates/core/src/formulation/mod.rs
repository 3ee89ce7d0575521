//! Expansion-planning MILP in block form, objective evaluation and an independent checker.

pub(crate) mod build;
mod check;
mod evaluate;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{mps, LinearProgram, RowSense};
use crate::system::{LineCandidate, SystemData};

pub use build::build_milp;
pub use check::{check_solution, ConstraintViolation};
pub use evaluate::{evaluate_objective, ObjectiveBreakdown, StageCosts};

/// Default angle-spread bound behind the disjunctive big-M, radians.
pub const DEFAULT_MAX_ANGLE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Partition {
    /// Binary investment and mode decisions.
    Y,
    /// Renewable capacities.
    R,
    /// Nonnegative operating variables.
    P,
    /// Free network variables.
    F,
}

/// Variable family. Subscripts are 1-based positions:
///
/// | kind | subscripts |
/// |---|---|
/// | `Line` | s, line, circuit |
/// | `Unit` | s, thermal type, slot |
/// | `Storage` | s, storage type |
/// | `Mode`, `Discharge`, `Charge`, `Energy` | s, storage type, h |
/// | `Wind`, `Pv` | s, site |
/// | `Gen`, `ResUp`, `ResDn` | s, thermal type, h |
/// | `Seg` | s, thermal type, h, segment |
/// | `NewUnits` | s, thermal type |
/// | `Curtail` | s, site, h |
/// | `Shed`, `Angle` | s, bus, h |
/// | `ExistingFlow` | s, line, h |
/// | `CandidateFlow` | s, line, circuit, h |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    Line,
    Unit,
    Storage,
    Mode,
    Wind,
    Pv,
    Gen,
    Seg,
    NewUnits,
    ResUp,
    ResDn,
    Discharge,
    Charge,
    Energy,
    Curtail,
    Shed,
    ExistingFlow,
    CandidateFlow,
    Angle,
}

impl VarKind {
    pub fn symbol(self) -> &'static str {
        use VarKind::*;
        match self {
            Line => "Y",
            Unit => "X",
            Storage => "I",
            Mode => "U",
            Wind => "Pw",
            Pv => "Pv",
            Gen => "P",
            Seg => "PS",
            NewUnits => "N",
            ResUp => "RU",
            ResDn => "RD",
            Discharge => "Pd",
            Charge => "Pc",
            Energy => "E",
            Curtail => "PC",
            Shed => "LS",
            ExistingFlow => "Pe",
            CandidateFlow => "Pl",
            Angle => "theta",
        }
    }

    pub fn partition(self) -> Partition {
        use VarKind::*;
        match self {
            Line | Unit | Storage | Mode => Partition::Y,
            Wind | Pv => Partition::R,
            ExistingFlow | CandidateFlow | Angle => Partition::F,
            _ => Partition::P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableIndex {
    pub kind: VarKind,
    pub subscripts: Vec<u32>,
}

impl VariableIndex {
    pub fn partition(&self) -> Partition {
        self.kind.partition()
    }

    pub fn name(&self) -> String {
        let mut s = self.kind.symbol().to_string();
        for k in &self.subscripts {
            s.push('_');
            s.push_str(&k.to_string());
        }
        s
    }
}

impl fmt::Display for VariableIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Block {
    /// `A Y ≥ B`.
    Master,
    /// `C1 Y + D1 R + E1 P + G1 F = H1`.
    Equality,
    /// `C2 Y + D2 R + E2 P + G2 F ≥ H2`.
    Inequality,
    /// `J R + K P + L F = M`.
    Balance,
}

/// Constraint family; its tag prefixes exported row names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    SegmentCap,
    SegmentSum,
    GenCap,
    DownReserve,
    UnitCount,
    UnitPersist,
    Tunnel,
    RampUp,
    RampDown,
    Adequacy,
    MixMax,
    MixMin,
    ReserveUpCap,
    ReserveDnCap,
    ReserveUpFloor,
    ReserveDnFloor,
    DeliverUp,
    DeliverDn,
    DeliverCapUp,
    DeliverCapDn,
    WindCap,
    PvCap,
    Rps,
    WindPersist,
    PvPersist,
    CurtailHour,
    CurtailCap,
    ShedHour,
    ShedTotal,
    ChargeCap,
    DischargeCap,
    ChargeMode,
    DischargeMode,
    StorageBalance,
    EnergyCap,
    StoragePersist,
    ExistingFlowLimit,
    FlowDef,
    CandidateFlowLimit,
    CandidateFlowDef,
    LinePersist,
    Balance,
    LineOrder,
    UnitOrder,
    AngleLimit,
    /// Checker only: binary or sign domain.
    Domain,
}

impl Family {
    pub fn tag(self) -> &'static str {
        use Family::*;
        match self {
            SegmentCap => "seg_cap",
            SegmentSum => "seg_sum",
            GenCap => "gen_cap",
            DownReserve => "dn_res",
            UnitCount => "unit_count",
            UnitPersist => "unit_persist",
            Tunnel => "tunnel",
            RampUp => "ramp_up",
            RampDown => "ramp_dn",
            Adequacy => "adequacy",
            MixMax => "mix_max",
            MixMin => "mix_min",
            ReserveUpCap => "res_up_cap",
            ReserveDnCap => "res_dn_cap",
            ReserveUpFloor => "res_up_floor",
            ReserveDnFloor => "res_dn_floor",
            DeliverUp => "deliv_up",
            DeliverDn => "deliv_dn",
            DeliverCapUp => "deliv_cap_up",
            DeliverCapDn => "deliv_cap_dn",
            WindCap => "wind_cap",
            PvCap => "pv_cap",
            Rps => "rps",
            WindPersist => "wind_persist",
            PvPersist => "pv_persist",
            CurtailHour => "curtail_hour",
            CurtailCap => "curtail_cap",
            ShedHour => "shed_hour",
            ShedTotal => "shed_total",
            ChargeCap => "charge_cap",
            DischargeCap => "discharge_cap",
            ChargeMode => "charge_mode",
            DischargeMode => "discharge_mode",
            StorageBalance => "storage_balance",
            EnergyCap => "energy_cap",
            StoragePersist => "storage_persist",
            ExistingFlowLimit => "flow_lim",
            FlowDef => "flow",
            CandidateFlowLimit => "cand_flow_lim",
            CandidateFlowDef => "cand_flow",
            LinePersist => "line_persist",
            Balance => "balance",
            LineOrder => "line_order",
            UnitOrder => "unit_order",
            AngleLimit => "angle",
            Domain => "domain",
        }
    }

    pub fn block(self) -> Block {
        use Family::*;
        match self {
            UnitPersist | StoragePersist | LinePersist | LineOrder | UnitOrder | Domain => Block::Master,
            SegmentSum | UnitCount | StorageBalance | FlowDef => Block::Equality,
            Balance => Block::Balance,
            _ => Block::Inequality,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One row in `≥` or `=` form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub family: Family,
    pub subscripts: Vec<u32>,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl BlockRow {
    pub fn block(&self) -> Block {
        self.family.block()
    }

    pub fn name(&self) -> String {
        let mut s = self.family.tag().to_string();
        for (k, v) in self.subscripts.iter().enumerate() {
            s.push_str(if k == 0 { "_" } else { "." });
            s.push_str(&v.to_string());
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RpsReading {
    /// Floor grows linearly to α at the last stage.
    Ramp,
    /// Floor is α at every stage.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub with_bes: bool,
    pub with_lcp: bool,
    /// Overrides the instance's policy value when set.
    pub shed_gamma: Option<f64>,
    pub shed_phi: Option<f64>,
    /// Radians.
    pub max_angle: f64,
    pub rps_reading: RpsReading,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            with_bes: true,
            with_lcp: true,
            shed_gamma: None,
            shed_phi: None,
            max_angle: DEFAULT_MAX_ANGLE,
            rps_reading: RpsReading::Ramp,
        }
    }
}

impl BuildOptions {
    pub fn gamma(&self, sys: &SystemData) -> f64 {
        self.shed_gamma.unwrap_or(sys.policy.shed_gamma)
    }

    pub fn phi(&self, sys: &SystemData) -> f64 {
        self.shed_phi.unwrap_or(sys.policy.shed_phi)
    }
}

/// `Ψ·B·Δθ_max`: at least the largest flow a disconnected circuit's angle term can reach.
pub fn big_m_value(line: &LineCandidate, base_power: f64, max_angle: f64) -> f64 {
    base_power * line.susceptance * max_angle
}

/// Sparse block extracted from a `CompactMilp`: rows of one block, columns of one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)` with positions local to the block.
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactMilp {
    pub options: BuildOptions,
    pub stage_count: u32,
    pub hour_count: u32,
    pub vars: Vec<VariableIndex>,
    pub cost: Vec<f64>,
    pub rows: Vec<BlockRow>,
    /// Constant objective term: maintenance of the existing fleet.
    pub objective_offset: f64,
    #[serde(skip)]
    lookup: HashMap<VariableIndex, usize>,
}

impl CompactMilp {
    pub(crate) fn empty(options: BuildOptions, stage_count: u32, hour_count: u32) -> Self {
        Self {
            options,
            stage_count,
            hour_count,
            vars: Vec::new(),
            cost: Vec::new(),
            rows: Vec::new(),
            objective_offset: 0.0,
            lookup: HashMap::new(),
        }
    }

    pub(crate) fn push_var(&mut self, kind: VarKind, subscripts: Vec<u32>, cost: f64) -> usize {
        let key = VariableIndex { kind, subscripts };
        let j = self.vars.len();
        let prev = self.lookup.insert(key.clone(), j);
        assert!(prev.is_none(), "duplicate variable {key}");
        self.vars.push(key);
        self.cost.push(cost);
        j
    }

    /// Rebuilds the lookup table, e.g. after deserialisation.
    pub fn reindex(&mut self) {
        self.lookup = self.vars.iter().enumerate().map(|(j, v)| (v.clone(), j)).collect();
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn index_of(&self, kind: VarKind, subscripts: &[u32]) -> Option<usize> {
        self.lookup.get(&VariableIndex { kind, subscripts: subscripts.to_vec() }).copied()
    }

    pub fn count_kind(&self, kind: VarKind) -> usize {
        self.vars.iter().filter(|v| v.kind == kind).count()
    }

    /// Variable positions of one partition, in model order.
    pub fn partition(&self, p: Partition) -> Vec<usize> {
        (0..self.vars.len()).filter(|&j| self.vars[j].partition() == p).collect()
    }

    pub fn binaries(&self) -> Vec<usize> {
        self.partition(Partition::Y)
    }

    pub fn rows_in(&self, block: Block) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i].block() == block).collect()
    }

    /// `I`, `I_R`, `O_P` (and zeros for `F`).
    pub fn cost_vector(&self, p: Partition) -> Vec<f64> {
        self.partition(p).into_iter().map(|j| self.cost[j]).collect()
    }

    pub fn block_matrix(&self, block: Block, p: Partition) -> SparseBlock {
        let rows = self.rows_in(block);
        let cols = self.partition(p);
        let mut local = vec![usize::MAX; self.vars.len()];
        for (k, &j) in cols.iter().enumerate() {
            local[j] = k;
        }
        let mut entries = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            for &(j, a) in &self.rows[i].coeffs {
                if local[j] != usize::MAX {
                    entries.push((r, local[j], a));
                }
            }
        }
        SparseBlock { rows: rows.len(), cols: cols.len(), entries }
    }

    pub fn block_rhs(&self, block: Block) -> Vec<f64> {
        self.rows_in(block).into_iter().map(|i| self.rows[i].rhs).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        match self.vars[j].partition() {
            Partition::Y => (0.0, 1.0),
            Partition::R | Partition::P => (0.0, f64::INFINITY),
            Partition::F => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Monolithic LP relaxation; binaries are the `Y` positions.
    pub fn to_linear_program(&self) -> (LinearProgram, Vec<usize>) {
        let mut lp = LinearProgram::new();
        for (j, v) in self.vars.iter().enumerate() {
            let (lo, up) = self.bounds(j);
            lp.add_var(v.name(), self.cost[j], lo, up);
        }
        for r in &self.rows {
            lp.add_row(r.name(), r.coeffs.clone(), r.sense, r.rhs);
        }
        lp.offset = self.objective_offset;
        (lp, self.binaries())
    }

    pub fn to_mps(&self, name: &str) -> String {
        let (lp, bin) = self.to_linear_program();
        mps::write_mps(name, &lp, &bin)
    }

    /// Fails unless `x` has one finite value per variable.
    pub fn check_values(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.vars.len() {
            return Err(Error::MissingValue(format!("{} values for {} variables", x.len(), self.vars.len())));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::MissingValue(format!("{} is not finite", self.vars[j])));
        }
        Ok(())
    }
}

/// Values for every variable of a model plus the evaluated cost breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSolution {
    pub values: Vec<f64>,
    pub costs: ObjectiveBreakdown,
}

impl PlanSolution {
    pub fn new(sys: &SystemData, milp: &CompactMilp, values: Vec<f64>) -> Result<Self> {
        let costs = evaluate_objective(sys, milp, &values)?;
        Ok(Self { values, costs })
    }

    pub fn value(&self, milp: &CompactMilp, kind: VarKind, subscripts: &[u32]) -> f64 {
        milp.index_of(kind, subscripts).map_or(0.0, |j| self.values[j])
    }
}

/// Value getter shared by the evaluator and checker; absent variables read as zero.
pub(crate) struct View<'a> {
    pub milp: &'a CompactMilp,
    pub x: &'a [f64],
}

impl View<'_> {
    pub fn get(&self, kind: VarKind, subs: &[u32]) -> f64 {
        self.milp.index_of(kind, subs).map_or(0.0, |j| self.x[j])
    }
}
