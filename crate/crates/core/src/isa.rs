//! Strict load/store machines.
//!
//! Memory consists of `2^aw` data cells of word length `wl`, `ous` operating
//! unit bits, `nrpl` load register pairs `ld[n]`/`la[n]`, `nrps` store
//! register pairs `sd[n]`/`sa[n]`, and the reply register `rr`. The
//! instruction set is `load:n` and `store:n` for every register pair plus a
//! finite set of data manipulation instructions.
//!
//! * `load:n` sets `ld[n]` to the content of the data cell addressed by
//!   `la[n]` and replies `T`; nothing else changes.
//! * `store:n` writes `sd[n]` to the data cell addressed by `sa[n]` and
//!   replies `T`; nothing else changes.
//! * A data manipulation instruction may read only operating unit bits and
//!   load data registers, and may write only operating unit bits, address
//!   registers, store data registers and `rr`. It is given by an explicit
//!   total table over its readable subspace, with a fixed written subset.

use std::collections::BTreeSet;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bta::ActionId;
use crate::maurer::{
    compute_input_region, compute_output_region, BaseValue, Limits, MachineError, MachineState,
    MaurerMachine, MemoryElement, MemoryLayout, Operation, ValueKind,
};

pub mod config;

/// Size parameters of a strict load/store machine.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IsaParams {
    /// Address width; there are `2^aw` data cells.
    pub aw: u32,
    /// Word length in bits; cells and data registers hold `[0, 2^wl)`.
    pub wl: u32,
    /// Operating unit size in bits.
    pub ous: u32,
    /// Number of load register pairs.
    pub nrpl: u32,
    /// Number of store register pairs.
    pub nrps: u32,
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum IsaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("duplicate or reserved action id {0}")]
    BadActionId(ActionId),
    #[error("table for {action}: {msg}")]
    BadTable { action: ActionId, msg: String },
    #[error("element {0} is not writable by a data manipulation instruction")]
    BadOutputElement(MemoryElement),
    #[error(transparent)]
    Machine(#[from] MachineError),
}

impl IsaParams {
    pub fn validate(&self) -> Result<(), IsaError> {
        if self.wl == 0 || self.nrpl == 0 || self.nrps == 0 {
            return Err(IsaError::InvalidParams(format!(
                "wl, nrpl, nrps must be positive (got {}, {}, {})",
                self.wl, self.nrpl, self.nrps
            )));
        }
        // Explicit-construction limits; beyond these the tables and layouts
        // stop fitting in memory long before any check could run.
        if self.aw > 20 || self.wl > 32 || self.ous > 1 << 20 || self.nrpl > 1024 || self.nrps > 1024
        {
            return Err(IsaError::InvalidParams(format!(
                "parameters too large for explicit construction: aw={} wl={} ous={} nrpl={} nrps={}",
                self.aw, self.wl, self.ous, self.nrpl, self.nrps
            )));
        }
        Ok(())
    }

    pub fn data_cells(&self) -> u64 {
        1u64 << self.aw
    }

    pub fn word_max(&self) -> u64 {
        (1u64 << self.wl) - 1
    }

    pub fn addr_max(&self) -> u64 {
        (1u64 << self.aw) - 1
    }

    /// All memory elements with their value kinds, in canonical order.
    pub fn memory(&self) -> Vec<(MemoryElement, ValueKind)> {
        let word = ValueKind::Nat { max: self.word_max() };
        let addr = ValueKind::Nat { max: self.addr_max() };
        let bit = ValueKind::Nat { max: 1 };
        let mut elems = Vec::new();
        for i in 0..self.data_cells() {
            elems.push((MemoryElement::Data(i as u32), word));
        }
        for i in 0..self.ous {
            elems.push((MemoryElement::Ou(i), bit));
        }
        for n in 0..self.nrpl {
            elems.push((MemoryElement::LoadData(n), word));
            elems.push((MemoryElement::LoadAddr(n), addr));
        }
        for n in 0..self.nrps {
            elems.push((MemoryElement::StoreData(n), word));
            elems.push((MemoryElement::StoreAddr(n), addr));
        }
        elems.push((MemoryElement::ReplyReg, ValueKind::Bool));
        elems
    }

    /// Elements a data manipulation instruction may read: all operating unit
    /// bits and all load data registers, in canonical order.
    pub fn dm_readable(&self) -> Vec<MemoryElement> {
        let mut v: Vec<MemoryElement> = (0..self.ous).map(MemoryElement::Ou).collect();
        v.extend((0..self.nrpl).map(MemoryElement::LoadData));
        v
    }

    /// True if a data manipulation instruction may write `e`.
    pub fn dm_writable(&self, e: MemoryElement) -> bool {
        match e {
            MemoryElement::Ou(i) => i < self.ous,
            MemoryElement::LoadAddr(n) => n < self.nrpl,
            MemoryElement::StoreData(n) | MemoryElement::StoreAddr(n) => n < self.nrps,
            MemoryElement::ReplyReg => true,
            MemoryElement::Data(_) | MemoryElement::LoadData(_) => false,
        }
    }

    fn kind_of(&self, e: MemoryElement) -> ValueKind {
        match e {
            MemoryElement::Data(_) | MemoryElement::LoadData(_) | MemoryElement::StoreData(_) => {
                ValueKind::Nat { max: self.word_max() }
            }
            MemoryElement::LoadAddr(_) | MemoryElement::StoreAddr(_) => {
                ValueKind::Nat { max: self.addr_max() }
            }
            MemoryElement::Ou(_) => ValueKind::Nat { max: 1 },
            MemoryElement::ReplyReg => ValueKind::Bool,
        }
    }

    /// Number of rows of a data manipulation table: the cardinality of the
    /// readable subspace.
    pub fn dm_row_count(&self) -> Result<u64, IsaError> {
        let bits = self.ous as u64 + self.nrpl as u64 * self.wl as u64;
        if bits > 24 {
            return Err(IsaError::InvalidParams(format!(
                "data manipulation tables would need 2^{bits} rows"
            )));
        }
        Ok(1 << bits)
    }

    /// Packs readable-subspace values (in `dm_readable` order) into a row
    /// index; the last element varies fastest, matching state enumeration.
    pub fn dm_pack(&self, key: &[u64]) -> u64 {
        let readable = self.dm_readable();
        debug_assert_eq!(key.len(), readable.len());
        let mut idx = 0u64;
        for (e, &v) in readable.iter().zip(key) {
            idx = idx * self.kind_of(*e).cardinality() + v;
        }
        idx
    }

    /// Inverse of [`IsaParams::dm_pack`].
    pub fn dm_unpack(&self, mut idx: u64) -> Vec<u64> {
        let readable = self.dm_readable();
        let mut out = vec![0u64; readable.len()];
        for (i, e) in readable.iter().enumerate().rev() {
            let card = self.kind_of(*e).cardinality();
            out[i] = idx % card;
            idx /= card;
        }
        out
    }
}

/// A data manipulation instruction as an explicit table.
///
/// `outputs` is the written subset, fixed across rows; `rows[i]` lists the
/// written values (Booleans as 0/1) for the readable subspace point with
/// packed index `i`, aligned with `outputs`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DmTable {
    pub id: ActionId,
    pub outputs: Vec<MemoryElement>,
    pub rows: Vec<Vec<u64>>,
}

impl DmTable {
    /// Validates shape, output families and value ranges against `params`.
    pub fn validate(&self, params: &IsaParams) -> Result<(), IsaError> {
        let mut prev: Option<MemoryElement> = None;
        for &e in &self.outputs {
            if !params.dm_writable(e) {
                return Err(IsaError::BadOutputElement(e));
            }
            if let Some(p) = prev {
                if p >= e {
                    return Err(IsaError::BadTable {
                        action: self.id.clone(),
                        msg: "outputs must be strictly ascending".into(),
                    });
                }
            }
            prev = Some(e);
        }
        let expect = params.dm_row_count()?;
        if self.rows.len() as u64 != expect {
            return Err(IsaError::BadTable {
                action: self.id.clone(),
                msg: format!("expected {expect} rows, got {}", self.rows.len()),
            });
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.outputs.len() {
                return Err(IsaError::BadTable {
                    action: self.id.clone(),
                    msg: format!("row {i} has {} values, expected {}", row.len(), self.outputs.len()),
                });
            }
            for (&e, &v) in self.outputs.iter().zip(row) {
                if v >= params.kind_of(e).cardinality() {
                    return Err(IsaError::BadTable {
                        action: self.id.clone(),
                        msg: format!("row {i} assigns out-of-range value {v} to {e}"),
                    });
                }
            }
        }
        Ok(())
    }

    /// The written value of `e` in the row for `key`, if `e` is written.
    pub fn lookup(&self, params: &IsaParams, key: &[u64], e: MemoryElement) -> Option<u64> {
        let col = self.outputs.iter().position(|&o| o == e)?;
        Some(self.rows[params.dm_pack(key) as usize][col])
    }
}

/// A strict load/store machine: parameters, the underlying machine, and the
/// data manipulation tables it was built from.
#[derive(Clone, Debug)]
pub struct LsIsaMachine {
    params: IsaParams,
    machine: MaurerMachine,
    dm: BTreeMap<ActionId, DmTable>,
}

pub fn load_action(n: u32) -> ActionId {
    ActionId::new(format!("load:{n}"))
}

pub fn store_action(n: u32) -> ActionId {
    ActionId::new(format!("store:{n}"))
}

fn is_reserved(id: &ActionId) -> bool {
    let s = id.as_str();
    ["load:", "store:"].iter().any(|p| {
        s.strip_prefix(p).map_or(false, |rest| rest.parse::<u32>().is_ok())
    })
}

/// Builds a strict load/store machine from parameters and data manipulation
/// tables.
pub fn build_isa(params: IsaParams, dm: Vec<DmTable>) -> Result<LsIsaMachine, IsaError> {
    params.validate()?;
    let layout = Arc::new(MemoryLayout::new(params.memory())?);

    let mut ops: Vec<Operation> = Vec::new();
    let rr = MemoryElement::ReplyReg;
    let rr_slot = slot(&layout, rr);
    let data_slots: Vec<usize> =
        (0..params.data_cells()).map(|i| slot(&layout, MemoryElement::Data(i as u32))).collect();
    let all_data: BTreeSet<MemoryElement> =
        (0..params.data_cells()).map(|i| MemoryElement::Data(i as u32)).collect();

    for n in 0..params.nrpl {
        let ld = slot(&layout, MemoryElement::LoadData(n));
        let la = slot(&layout, MemoryElement::LoadAddr(n));
        let cells = data_slots.clone();
        let mut ireg = all_data.clone();
        ireg.insert(MemoryElement::LoadAddr(n));
        let oreg = BTreeSet::from([MemoryElement::LoadData(n), rr]);
        ops.push(Operation::new(load_action(n), rr, ireg, oreg, move |s: &MachineState| {
            let mut t = s.clone();
            t.set_raw(ld, s.raw(cells[s.raw(la) as usize]));
            t.set_raw(rr_slot, 1);
            t
        }));
    }
    for n in 0..params.nrps {
        let sd = slot(&layout, MemoryElement::StoreData(n));
        let sa = slot(&layout, MemoryElement::StoreAddr(n));
        let cells = data_slots.clone();
        let mut ireg = all_data.clone();
        ireg.insert(MemoryElement::StoreData(n));
        ireg.insert(MemoryElement::StoreAddr(n));
        let mut oreg = all_data.clone();
        oreg.insert(rr);
        ops.push(Operation::new(store_action(n), rr, ireg, oreg, move |s: &MachineState| {
            let mut t = s.clone();
            t.set_raw(cells[s.raw(sa) as usize], s.raw(sd));
            t.set_raw(rr_slot, 1);
            t
        }));
    }

    let mut tables = BTreeMap::new();
    for table in dm {
        if is_reserved(&table.id) || tables.contains_key(&table.id) {
            return Err(IsaError::BadActionId(table.id));
        }
        table.validate(&params)?;
        ops.push(lift_dm_table(&params, &layout, &table));
        tables.insert(table.id.clone(), table);
    }

    let machine = MaurerMachine::new(layout, ops)?;
    Ok(LsIsaMachine { params, machine, dm: tables })
}

fn slot(layout: &Arc<MemoryLayout>, e: MemoryElement) -> usize {
    layout
        .elements()
        .iter()
        .position(|&x| x == e)
        .unwrap_or_else(|| panic!("{e} missing from layout"))
}

/// Turns a table into a state transformer reading only the readable subspace
/// and writing only the declared outputs.
fn lift_dm_table(params: &IsaParams, layout: &Arc<MemoryLayout>, table: &DmTable) -> Operation {
    let key_slots: Vec<usize> = params.dm_readable().iter().map(|&e| slot(layout, e)).collect();
    let out_slots: Vec<usize> = table.outputs.iter().map(|&e| slot(layout, e)).collect();
    let radices: Vec<u64> =
        params.dm_readable().iter().map(|&e| params.kind_of(e).cardinality()).collect();
    let rows = table.rows.clone();
    let ireg: BTreeSet<MemoryElement> = params.dm_readable().into_iter().collect();
    let oreg: BTreeSet<MemoryElement> = table.outputs.iter().copied().collect();
    Operation::new(table.id.clone(), MemoryElement::ReplyReg, ireg, oreg, move |s| {
        let mut idx = 0u64;
        for (&slot, &radix) in key_slots.iter().zip(&radices) {
            idx = idx * radix + s.raw(slot);
        }
        let mut t = s.clone();
        for (&slot, &v) in out_slots.iter().zip(&rows[idx as usize]) {
            t.set_raw(slot, v);
        }
        t
    })
}

impl LsIsaMachine {
    pub fn params(&self) -> &IsaParams {
        &self.params
    }

    pub fn machine(&self) -> &MaurerMachine {
        &self.machine
    }

    pub fn layout(&self) -> &Arc<MemoryLayout> {
        self.machine.layout()
    }

    pub fn dm_tables(&self) -> impl Iterator<Item = &DmTable> {
        self.dm.values()
    }

    pub fn dm_table(&self, id: &ActionId) -> Option<&DmTable> {
        self.dm.get(id)
    }

    pub fn dm_actions(&self) -> BTreeSet<ActionId> {
        self.dm.keys().cloned().collect()
    }

    pub fn dm_count(&self) -> usize {
        self.dm.len()
    }

    /// The data cell elements, ascending.
    pub fn data_elements(&self) -> Vec<MemoryElement> {
        (0..self.params.data_cells()).map(|i| MemoryElement::Data(i as u32)).collect()
    }

    /// The operating unit elements, ascending.
    pub fn ou_elements(&self) -> Vec<MemoryElement> {
        (0..self.params.ous).map(MemoryElement::Ou).collect()
    }

    /// Replaces one operation with an arbitrary transformer, keeping the
    /// declared regions it claims. The table (if any) for that action is
    /// dropped: the result is a machine that merely claims to be strict, for
    /// feeding to [`validate_dm_regions`].
    pub fn with_raw_operation(&self, op: Operation) -> LsIsaMachine {
        let mut dm = self.dm.clone();
        dm.remove(&op.id);
        let mut ops: Vec<Operation> =
            self.machine.operations().filter(|o| o.id != op.id).cloned().collect();
        ops.push(op);
        let machine = MaurerMachine::new(Arc::clone(self.machine.layout()), ops)
            .expect("layout unchanged, reply element still Boolean");
        LsIsaMachine { params: self.params, machine, dm }
    }
}

/// How a region check was performed.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CheckMode {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
}

/// Outcome of checking one action's regions against the strictness bounds.
#[derive(Clone, Debug)]
pub struct DmRegionCheck {
    pub action: ActionId,
    pub input_region: Option<BTreeSet<MemoryElement>>,
    pub output_region: Option<BTreeSet<MemoryElement>>,
    pub offending: Vec<(MemoryElement, crate::maurer::RegionKind)>,
}

impl DmRegionCheck {
    pub fn is_pass(&self) -> bool {
        self.offending.is_empty()
    }
}

/// Report of [`validate_dm_regions`].
#[derive(Clone, Debug)]
pub struct DmRegionReport {
    pub mode: CheckMode,
    pub checks: Vec<DmRegionCheck>,
}

impl DmRegionReport {
    pub fn is_pass(&self) -> bool {
        self.checks.iter().all(|c| c.is_pass())
    }
}

/// Verifies that every non-load/store operation reads only operating unit
/// bits and load data registers and writes only operating unit bits, address
/// registers, store data registers and `rr`.
///
/// Within `limits` the regions are computed exhaustively; beyond them the
/// check falls back to sampling with the given budget and is marked so.
pub fn validate_dm_regions(
    m: &LsIsaMachine,
    limits: &Limits,
    samples: usize,
    seed: u64,
) -> Result<DmRegionReport, MachineError> {
    let exhaustive = limits.check_states(m.layout()).is_ok();
    let params = m.params();
    let readable: BTreeSet<MemoryElement> = params.dm_readable().into_iter().collect();
    let mut checks = Vec::new();
    for op in m.machine().operations() {
        if is_reserved(&op.id) {
            continue;
        }
        let mut offending = Vec::new();
        let (ireg, oreg) = if exhaustive {
            let o = compute_output_region(m.machine(), op, limits)?;
            let i = compute_input_region(m.machine(), op, limits)?;
            (Some(i), Some(o))
        } else {
            (None, None)
        };
        if let (Some(i), Some(o)) = (&ireg, &oreg) {
            for &e in i {
                if !readable.contains(&e) {
                    offending.push((e, crate::maurer::RegionKind::Input));
                }
            }
            for &e in o {
                if !params.dm_writable(e) {
                    offending.push((e, crate::maurer::RegionKind::Output));
                }
            }
        } else {
            // Sampled: treat the strictness bounds as declared regions.
            let bound_in = readable.clone();
            let bound_out: BTreeSet<MemoryElement> = m
                .layout()
                .elements()
                .iter()
                .copied()
                .filter(|&e| params.dm_writable(e))
                .collect();
            let probe = Operation::new(
                op.id.clone(),
                op.reply,
                bound_in,
                bound_out,
                clone_transform(op),
            );
            if let crate::maurer::RegionVerdict::Fail { kind, element, .. } =
                crate::maurer::verify_declared_regions(m.machine(), &probe, samples, seed)
            {
                offending.push((element, kind));
            }
        }
        checks.push(DmRegionCheck { action: op.id.clone(), input_region: ireg, output_region: oreg, offending });
    }
    let mode =
        if exhaustive { CheckMode::Exhaustive } else { CheckMode::Sampled { samples, seed } };
    Ok(DmRegionReport { mode, checks })
}

fn clone_transform(op: &Operation) -> impl Fn(&MachineState) -> MachineState + Send + Sync {
    let op = op.clone();
    move |s| op.apply(s)
}

/// Generates a deterministic pseudorandom data manipulation table.
///
/// The written subset is `outputs` plus `rr`; every row assigns independent
/// uniform in-range values (for `rr`, a uniform Boolean). The same seed always
/// yields the same table.
pub fn random_dm_spec(
    params: &IsaParams,
    id: impl Into<ActionId>,
    outputs: &BTreeSet<MemoryElement>,
    seed: u64,
) -> Result<DmTable, IsaError> {
    params.validate()?;
    for &e in outputs {
        if !params.dm_writable(e) {
            return Err(IsaError::BadOutputElement(e));
        }
    }
    let mut outs: BTreeSet<MemoryElement> = outputs.clone();
    outs.insert(MemoryElement::ReplyReg);
    let outputs: Vec<MemoryElement> = outs.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..params.dm_row_count()?)
        .map(|_| {
            outputs
                .iter()
                .map(|&e| rng.gen_range(0..params.kind_of(e).cardinality()))
                .collect()
        })
        .collect();
    Ok(DmTable { id: id.into(), outputs, rows })
}

/// Exhaustively checks the load/store postcondition equations at desk scale:
/// the loaded register equals the addressed cell, the addressed cell equals
/// the stored register, `rr` is set, and nothing else changes.
pub fn check_load_store_equations(
    m: &LsIsaMachine,
    limits: &Limits,
) -> Result<Option<(ActionId, MachineState)>, MachineError> {
    limits.check_states(m.layout())?;
    let params = m.params();
    let others = |exclude: &[MemoryElement]| -> Vec<MemoryElement> {
        m.layout().elements().iter().copied().filter(|e| !exclude.contains(e)).collect()
    };
    for n in 0..params.nrpl {
        let a = load_action(n);
        let op = m.machine().operation(&a).expect("load ops exist").clone();
        let keep = others(&[MemoryElement::LoadData(n), MemoryElement::ReplyReg]);
        for s in m.layout().states() {
            let t = op.apply(&s);
            let addr = match s.get(MemoryElement::LoadAddr(n)) {
                BaseValue::Nat(v) => v as u32,
                _ => unreachable!(),
            };
            let ok = t.get(MemoryElement::LoadData(n)) == s.get(MemoryElement::Data(addr))
                && t.get(MemoryElement::ReplyReg) == BaseValue::Bool(true)
                && t.agrees_on(&s, &keep);
            if !ok {
                return Ok(Some((a, s)));
            }
        }
    }
    for n in 0..params.nrps {
        let a = store_action(n);
        let op = m.machine().operation(&a).expect("store ops exist").clone();
        for s in m.layout().states() {
            let t = op.apply(&s);
            let addr = match s.get(MemoryElement::StoreAddr(n)) {
                BaseValue::Nat(v) => v as u32,
                _ => unreachable!(),
            };
            let keep = others(&[MemoryElement::Data(addr), MemoryElement::ReplyReg]);
            let ok = t.get(MemoryElement::Data(addr)) == s.get(MemoryElement::StoreData(n))
                && t.get(MemoryElement::ReplyReg) == BaseValue::Bool(true)
                && t.agrees_on(&s, &keep);
            if !ok {
                return Ok(Some((a, s)));
            }
        }
    }
    Ok(None)
}

/// Packs a projection of the data memory (cells ascending) for pair-set
/// comparisons.
pub fn data_image(m: &LsIsaMachine, s: &MachineState) -> Vec<u64> {
    s.project(&m.data_elements())
}

/// The set of (initial, final) data memory pairs of `p` over all states
/// satisfying `filter`; `None` final marks the undefined result.
#[allow(clippy::type_complexity)]
pub fn data_pairs(
    p: &crate::bta::ThreadHandle,
    m: &LsIsaMachine,
    limits: &Limits,
    mut filter: impl FnMut(&MachineState) -> bool,
) -> Result<BTreeSet<(Vec<u64>, Option<Vec<u64>>)>, MachineError> {
    limits.check_states(m.layout())?;
    let mut out = BTreeSet::new();
    for s in m.layout().states() {
        if !filter(&s) {
            continue;
        }
        let fin = crate::maurer::apply_thread(p, m.machine(), &s, limits)?;
        out.insert((data_image(m, &s), fin.map(|t| data_image(m, &t))));
    }
    Ok(out)
}

/// Sampled property: a lifted data manipulation operation never reacts to
/// elements outside its readable subspace.
pub fn check_dm_locality(
    m: &LsIsaMachine,
    table: &DmTable,
    samples: usize,
    seed: u64,
) -> Result<bool, MachineError> {
    let op = m
        .machine()
        .operation(&table.id)
        .ok_or_else(|| MachineError::UnknownAction(table.id.clone()))?;
    let readable: BTreeSet<MemoryElement> = m.params().dm_readable().into_iter().collect();
    let declared = Operation::new(
        table.id.clone(),
        op.reply,
        readable,
        table.outputs.iter().copied().collect::<BTreeSet<_>>(),
        clone_transform(op),
    );
    Ok(crate::maurer::verify_declared_regions(m.machine(), &declared, samples, seed).is_pass())
}

/// Used by tests and the reduction: a HashMap keyed by packed readable-space
/// index for quick row comparisons.
pub fn dm_rows_by_key(table: &DmTable) -> HashMap<u64, &Vec<u64>> {
    table.rows.iter().enumerate().map(|(i, r)| (i as u64, r)).collect()
}
