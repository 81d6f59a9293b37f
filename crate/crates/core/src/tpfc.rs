//! Which transformations of external memory a bounded thread on a strict
//! load/store machine can compute.
//!
//! The centerpiece is a constructive completeness result: for any total
//! transformation of the data memory (or of its first half, when the second
//! half serves as scratch space) there is a machine with five data
//! manipulation instructions and a thread with eight states that computes
//! it. The five instructions walk a counter through the data cells, copy
//! them into an operating unit staging area, apply the transformation there
//! in one step, and write the result back:
//!
//! * `init`  zeroes the counter.
//! * `prel`  publishes the counter as the load address and increments it,
//!           replying F once every cell has been visited.
//! * `postl` files the just-loaded word into the staging slot of the cell
//!           the counter pointed at.
//! * `pres`  publishes the counter as the store address, moves the staged
//!           word for that cell into the store data register, increments,
//!           replying F at the end.
//! * `trf`   rewrites the whole staging area through the target
//!           transformation and resets the counter.
//!
//! [`counting`] has the other direction: exact cardinality certificates
//! showing that machines with small operating units cannot be complete.

pub mod counting;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bta::{residuals, ActionId, LinearRhs, LinearSpec, ThreadHandle, VarId};
use crate::isa::{
    build_isa, load_action, store_action, DmTable, IsaError, IsaParams, LsIsaMachine,
};
use crate::maurer::{
    apply_thread, computation, BaseValue, Limits, MachineError, MachineState, MemoryElement,
    RunStatus,
};
use crate::reduce::{reduce_to_zero, ReduceError, ZeroReduction};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum TpfcError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("size exceeded: {0}")]
    SizeExceeded(String),
    #[error("bit range is not contiguous")]
    NonContiguousDomain,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Isa(#[from] IsaError),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// The parameter tuple naming a thread powered function class: address
/// width, word length, operating unit size, instruction set size, state
/// bound, and whether only the first half of data memory is checked (the
/// rest being a free working area).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TpfcParams {
    pub aw: u32,
    pub wl: u32,
    pub ous: u32,
    pub iss: u32,
    pub ssb: u32,
    pub waf: bool,
}

impl TpfcParams {
    pub fn validate(&self) -> Result<(), TpfcError> {
        let fail = |m: &str| Err(TpfcError::InvalidParams(m.into()));
        if self.wl == 0 {
            return fail("word length must be positive");
        }
        if self.iss == 0 {
            return fail("instruction set size must be positive");
        }
        if self.ssb == 0 {
            return fail("state bound must be positive");
        }
        if self.waf && self.aw == 0 {
            return fail("a one-cell memory has no free half");
        }
        if self.aw > 20 || self.wl > 32 {
            return fail("address width or word length out of supported range");
        }
        Ok(())
    }

    /// Bits of checked memory: the whole data memory, or its first half.
    pub fn external_bits(&self) -> u64 {
        let cells = if self.waf { 1u64 << (self.aw - 1) } else { 1u64 << self.aw };
        cells * self.wl as u64
    }
}

/// The number of data cells a transformation acts on.
pub fn external_cells(aw: u32, waf: bool) -> u32 {
    if waf {
        1 << (aw - 1)
    } else {
        1 << aw
    }
}

/// A total map from external memory states to external memory states,
/// tabulated. States are tuples of `cells` words of `wl` bits; the table is
/// indexed by the packed state, cell 0 least significant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExtTransformation {
    cells: u32,
    wl: u32,
    table: Vec<u64>,
}

// Past this the tabulated map stops fitting in memory.
const MAX_EXT_BITS: u32 = 20;

impl ExtTransformation {
    pub fn new(cells: u32, wl: u32, table: Vec<u64>) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        if table.len() as u64 != n {
            return Err(TpfcError::InvalidParams(format!(
                "table has {} entries, the state space has {n}",
                table.len()
            )));
        }
        if table.iter().any(|&v| v >= n) {
            return Err(TpfcError::InvalidParams("table entry out of range".into()));
        }
        Ok(ExtTransformation { cells, wl, table })
    }

    pub fn cells(&self) -> u32 {
        self.cells
    }

    pub fn wl(&self) -> u32 {
        self.wl
    }

    pub fn state_count(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn identity(cells: u32, wl: u32) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        ExtTransformation::new(cells, wl, (0..n).collect())
    }

    /// Exchanges the contents of cells 0 and 1; identity on a single cell.
    pub fn swap_first_two(cells: u32, wl: u32) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        let mask = (1u64 << wl) - 1;
        let table = (0..n)
            .map(|s| {
                if cells < 2 {
                    s
                } else {
                    let (a, b) = (s & mask, (s >> wl) & mask);
                    (s & !(mask | mask << wl)) | (a << wl) | b
                }
            })
            .collect();
        ExtTransformation::new(cells, wl, table)
    }

    /// Adds one to the packed state, wrapping around.
    pub fn increment(cells: u32, wl: u32) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        ExtTransformation::new(cells, wl, (0..n).map(|s| (s + 1) % n).collect())
    }

    /// Maps every state to the one packed as `image`.
    pub fn constant(cells: u32, wl: u32, image: u64) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        ExtTransformation::new(cells, wl, vec![image; n as usize])
    }

    pub fn random(cells: u32, wl: u32, seed: u64) -> Result<Self, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ExtTransformation::new(cells, wl, (0..n).map(|_| rng.gen_range(0..n)).collect())
    }

    /// Every transformation on the given state space, all `n^n` of them.
    /// Only available for spaces of at most 4 states.
    pub fn enumerate(cells: u32, wl: u32) -> Result<Vec<Self>, TpfcError> {
        let n = ext_state_count(cells, wl)?;
        if n > 4 {
            return Err(TpfcError::SizeExceeded(format!(
                "{n}^{n} transformations will not be enumerated"
            )));
        }
        let count = n.pow(n as u32);
        let mut out = Vec::with_capacity(count as usize);
        for mut code in 0..count {
            let mut table = Vec::with_capacity(n as usize);
            for _ in 0..n {
                table.push(code % n);
                code /= n;
            }
            out.push(ExtTransformation::new(cells, wl, table)?);
        }
        Ok(out)
    }

    pub fn pack(&self, words: &[u64]) -> u64 {
        assert_eq!(words.len(), self.cells as usize);
        words
            .iter()
            .rev()
            .fold(0, |acc, &w| (acc << self.wl) | (w & ((1u64 << self.wl) - 1)))
    }

    pub fn unpack(&self, mut idx: u64) -> Vec<u64> {
        let mask = (1u64 << self.wl) - 1;
        (0..self.cells)
            .map(|_| {
                let w = idx & mask;
                idx >>= self.wl;
                w
            })
            .collect()
    }

    pub fn apply_packed(&self, idx: u64) -> u64 {
        self.table[idx as usize]
    }

    pub fn apply_words(&self, words: &[u64]) -> Vec<u64> {
        self.unpack(self.apply_packed(self.pack(words)))
    }
}

fn ext_state_count(cells: u32, wl: u32) -> Result<u64, TpfcError> {
    if cells == 0 || wl == 0 {
        return Err(TpfcError::InvalidParams("empty external memory".into()));
    }
    let bits = cells.checked_mul(wl).filter(|&b| b <= MAX_EXT_BITS);
    match bits {
        Some(b) => Ok(1u64 << b),
        None => Err(TpfcError::SizeExceeded(format!(
            "external memory of {cells} x {wl}-bit cells cannot be tabulated"
        ))),
    }
}

/// A transformation together with the machine shape it is meant for.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransformationSpec {
    pub aw: u32,
    pub wl: u32,
    pub waf: bool,
    pub map: ExtTransformation,
}

/// Parses a transformation file: `aw`, `wl` and `waf` header lines in any
/// order, then one `in-state -> out-state` line per external state, states
/// written as space-separated cell values. `#` starts a comment.
pub fn parse_transformation(input: &str) -> Result<TransformationSpec, TpfcError> {
    let mut aw: Option<u32> = None;
    let mut wl: Option<u32> = None;
    let mut waf: Option<bool> = None;
    let mut rows: Vec<(usize, Vec<u64>, Vec<u64>)> = Vec::new();

    for (ln, raw) in input.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| TpfcError::Parse { line: ln, msg };
        if let Some((lhs, rhs)) = line.split_once("->") {
            let parse_state = |side: &str| -> Result<Vec<u64>, TpfcError> {
                side.split_whitespace()
                    .map(|t| t.parse::<u64>().map_err(|_| err(format!("bad cell value {t}"))))
                    .collect()
            };
            rows.push((ln, parse_state(lhs)?, parse_state(rhs)?));
            continue;
        }
        let mut toks = line.split_whitespace();
        let (key, val) = (toks.next().unwrap_or(""), toks.next().unwrap_or(""));
        if toks.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
        let set_u32 = |slot: &mut Option<u32>| -> Result<(), TpfcError> {
            if slot.is_some() {
                return Err(err(format!("{key} given twice")));
            }
            *slot = Some(val.parse().map_err(|_| err(format!("bad value {val}")))?);
            Ok(())
        };
        match key {
            "aw" => set_u32(&mut aw)?,
            "wl" => set_u32(&mut wl)?,
            "waf" => {
                if waf.is_some() {
                    return Err(err("waf given twice".into()));
                }
                waf = Some(match val {
                    "T" => true,
                    "F" => false,
                    _ => return Err(err(format!("bad truth value {val}"))),
                });
            }
            _ => return Err(err(format!("unknown directive {key}"))),
        }
    }

    let missing = |what: &str| TpfcError::Parse { line: 0, msg: format!("missing {what} header") };
    let aw = aw.ok_or_else(|| missing("aw"))?;
    let wl = wl.ok_or_else(|| missing("wl"))?;
    let waf = waf.ok_or_else(|| missing("waf"))?;
    if waf && aw == 0 {
        return Err(TpfcError::InvalidParams("a one-cell memory has no free half".into()));
    }
    let cells = external_cells(aw, waf);
    let n = ext_state_count(cells, wl)?;
    let word_max = (1u64 << wl) - 1;

    let mut table: Vec<Option<u64>> = vec![None; n as usize];
    let probe = ExtTransformation::identity(cells, wl)?;
    for (ln, lhs, rhs) in rows {
        let err = |msg: String| TpfcError::Parse { line: ln, msg };
        for side in [&lhs, &rhs] {
            if side.len() != cells as usize {
                return Err(err(format!("state needs {cells} cell values")));
            }
            if side.iter().any(|&w| w > word_max) {
                return Err(err("cell value exceeds the word range".into()));
            }
        }
        let slot = &mut table[probe.pack(&lhs) as usize];
        if slot.is_some() {
            return Err(err("state mapped twice".into()));
        }
        *slot = Some(probe.pack(&rhs));
    }
    let table: Option<Vec<u64>> = table.into_iter().collect();
    let table = table.ok_or(TpfcError::Parse { line: 0, msg: "some state is unmapped".into() })?;
    Ok(TransformationSpec { aw, wl, waf, map: ExtTransformation::new(cells, wl, table)? })
}

/// Renders a transformation file that [`parse_transformation`] reads back,
/// rows in packed-state order.
pub fn print_transformation(spec: &TransformationSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("aw {}\n", spec.aw));
    out.push_str(&format!("wl {}\n", spec.wl));
    out.push_str(&format!("waf {}\n", if spec.waf { "T" } else { "F" }));
    let fmt_state = |words: &[u64]| {
        words.iter().map(u64::to_string).collect::<Vec<_>>().join(" ")
    };
    for idx in 0..spec.map.state_count() {
        let lhs = spec.map.unpack(idx);
        let rhs = spec.map.unpack(spec.map.apply_packed(idx));
        out.push_str(&format!("{} -> {}\n", fmt_state(&lhs), fmt_state(&rhs)));
    }
    out
}

/// The value of a contiguous run of operating unit bits read as a binary
/// number, least index least significant. The empty run has value 0.
pub fn bn(bits: &BTreeMap<u32, u8>) -> Result<u64, TpfcError> {
    let Some((&lo, _)) = bits.first_key_value() else { return Ok(0) };
    let (&hi, _) = bits.last_key_value().expect("nonempty");
    if (hi - lo) as usize + 1 != bits.len() {
        return Err(TpfcError::NonContiguousDomain);
    }
    if hi - lo >= 64 {
        return Err(TpfcError::InvalidParams("bit range wider than 64".into()));
    }
    if bits.values().any(|&b| b > 1) {
        return Err(TpfcError::InvalidParams("bit value above 1".into()));
    }
    Ok(bits.iter().map(|(&i, &b)| u64::from(b) << (i - lo)).sum())
}

/// Where things live inside the operating unit: staging slots for the
/// external cells at the bottom, the cell counter above them.
#[derive(Clone, Copy, Debug)]
struct OuPlan {
    wl: u32,
    ext_cells: u32,
    slot_bits: u32,
    ctr_lo: u32,
    ctr_len: u32,
    ous: u32,
}

fn ou_plan(aw: u32, wl: u32, waf: bool) -> OuPlan {
    let ext_cells = external_cells(aw, waf);
    let slot_bits = ext_cells * wl;
    // The counter must reach ext_cells itself, one past the last cell index.
    let ctr_len = if waf { aw } else { aw + 1 };
    OuPlan { wl, ext_cells, slot_bits, ctr_lo: slot_bits, ctr_len, ous: slot_bits + ctr_len }
}

pub fn init_action() -> ActionId {
    ActionId::new("init")
}
pub fn prel_action() -> ActionId {
    ActionId::new("prel")
}
pub fn postl_action() -> ActionId {
    ActionId::new("postl")
}
pub fn pres_action() -> ActionId {
    ActionId::new("pres")
}
pub fn trf_action() -> ActionId {
    ActionId::new("trf")
}

fn key_bits(key: &[u64], lo: u32, len: u32) -> u64 {
    (0..len).map(|j| key[(lo + j) as usize] << j).sum()
}

fn push_bits(row: &mut Vec<u64>, value: u64, len: u32) {
    for j in 0..len {
        row.push((value >> j) & 1);
    }
}

fn ou_range(lo: u32, len: u32) -> impl Iterator<Item = MemoryElement> {
    (lo..lo + len).map(MemoryElement::Ou)
}

/// The five data manipulation tables computing `t`, in the order init, prel,
/// postl, pres, trf. Table keys follow the machine's readable order:
/// operating unit bits 0.. then the load data register.
pub fn instruction_tables(
    aw: u32,
    wl: u32,
    waf: bool,
    t: &ExtTransformation,
) -> Result<Vec<DmTable>, TpfcError> {
    let g = ou_plan(aw, wl, waf);
    if t.cells() != g.ext_cells || t.wl() != wl {
        return Err(TpfcError::InvalidParams(format!(
            "transformation acts on {} cells of {} bits, the machine stages {} of {}",
            t.cells(),
            t.wl(),
            g.ext_cells,
            wl
        )));
    }
    let params = IsaParams { aw, wl, ous: g.ous, nrpl: 1, nrps: 1 };
    params.validate()?;
    let row_count = params.dm_row_count()?;
    let ext = g.ext_cells as u64;

    let table = |id: ActionId,
                 outputs: Vec<MemoryElement>,
                 f: &dyn Fn(&[u64], &mut Vec<u64>)| {
        let mut rows = Vec::with_capacity(row_count as usize);
        for idx in 0..row_count {
            let key = params.dm_unpack(idx);
            let mut row = Vec::with_capacity(outputs.len());
            f(&key, &mut row);
            rows.push(row);
        }
        DmTable { id, outputs, rows }
    };

    let mut tables = Vec::with_capacity(5);

    let mut outs: Vec<MemoryElement> = ou_range(g.ctr_lo, g.ctr_len).collect();
    outs.push(MemoryElement::ReplyReg);
    tables.push(table(init_action(), outs, &|_key, row| {
        push_bits(row, 0, g.ctr_len);
        row.push(1);
    }));

    let mut outs: Vec<MemoryElement> = ou_range(g.ctr_lo, g.ctr_len).collect();
    outs.push(MemoryElement::LoadAddr(0));
    outs.push(MemoryElement::ReplyReg);
    tables.push(table(prel_action(), outs, &|key, row| {
        let cnt = key_bits(key, g.ctr_lo, g.ctr_len);
        if cnt < ext {
            push_bits(row, cnt + 1, g.ctr_len);
            row.push(cnt);
            row.push(1);
        } else {
            push_bits(row, cnt, g.ctr_len);
            row.push(0);
            row.push(0);
        }
    }));

    let mut outs: Vec<MemoryElement> = ou_range(0, g.slot_bits).collect();
    outs.push(MemoryElement::ReplyReg);
    tables.push(table(postl_action(), outs, &|key, row| {
        let cnt = key_bits(key, g.ctr_lo, g.ctr_len);
        let ld = key[g.ous as usize];
        for i in 0..ext {
            // The counter has already moved past the cell that was loaded.
            if (1..=ext).contains(&cnt) && i == cnt - 1 {
                push_bits(row, ld, g.wl);
            } else {
                push_bits(row, key_bits(key, i as u32 * g.wl, g.wl), g.wl);
            }
        }
        row.push(1);
    }));

    let mut outs: Vec<MemoryElement> = ou_range(g.ctr_lo, g.ctr_len).collect();
    outs.push(MemoryElement::StoreData(0));
    outs.push(MemoryElement::StoreAddr(0));
    outs.push(MemoryElement::ReplyReg);
    tables.push(table(pres_action(), outs, &|key, row| {
        let cnt = key_bits(key, g.ctr_lo, g.ctr_len);
        if cnt < ext {
            push_bits(row, cnt + 1, g.ctr_len);
            row.push(key_bits(key, cnt as u32 * g.wl, g.wl));
            row.push(cnt);
            row.push(1);
        } else {
            push_bits(row, cnt, g.ctr_len);
            row.push(0);
            row.push(0);
            row.push(0);
        }
    }));

    let mut outs: Vec<MemoryElement> = ou_range(0, g.slot_bits).collect();
    outs.extend(ou_range(g.ctr_lo, g.ctr_len));
    outs.push(MemoryElement::ReplyReg);
    tables.push(table(trf_action(), outs, &|key, row| {
        let image = t.apply_packed(key_bits(key, 0, g.slot_bits));
        push_bits(row, image, g.slot_bits);
        push_bits(row, 0, g.ctr_len);
        row.push(1);
    }));

    Ok(tables)
}

/// The eight-state thread driving the five instructions: load every external
/// cell into its staging slot, transform the staging area, store every slot
/// back, stop.
pub fn witness_thread() -> ThreadHandle {
    let v = |s: &str| VarId::new(s);
    let post = |yes: &str, a: ActionId, no: &str| LinearRhs::Post {
        yes: VarId::new(yes),
        action: a,
        no: VarId::new(no),
    };
    let eqs = vec![
        (v("X"), post("Y", init_action(), "Y")),
        (v("Y"), post("Yl", prel_action(), "Yt")),
        (v("Yl"), post("Yp", load_action(0), "Yp")),
        (v("Yp"), post("Y", postl_action(), "Y")),
        (v("Yt"), post("Z", trf_action(), "Z")),
        (v("Z"), post("Zs", pres_action(), "W")),
        (v("Zs"), post("Z", store_action(0), "Z")),
        (v("W"), LinearRhs::Stop),
    ];
    let spec = LinearSpec::new(eqs.into_iter().collect()).expect("equations are closed");
    ThreadHandle::new(VarId::new("X"), Arc::new(spec)).expect("root is bound")
}

/// A machine and thread that compute a given external transformation.
#[derive(Clone, Debug)]
pub struct CompletenessWitness {
    pub isa: LsIsaMachine,
    pub thread: ThreadHandle,
    pub target: ExtTransformation,
    pub waf: bool,
}

impl CompletenessWitness {
    pub fn ext_cells(&self) -> u32 {
        external_cells(self.isa.params().aw, self.waf)
    }
}

/// Builds the machine and thread computing `t`.
///
/// The operating unit holds one staging slot per external cell plus the
/// counter, so its size is `2^aw·wl + aw + 1`, or `2^{aw-1}·wl + aw` when
/// only the first half of memory is checked.
pub fn synthesize_complete(
    aw: u32,
    wl: u32,
    waf: bool,
    t: &ExtTransformation,
) -> Result<CompletenessWitness, TpfcError> {
    if wl == 0 {
        return Err(TpfcError::InvalidParams("word length must be positive".into()));
    }
    if waf && aw == 0 {
        return Err(TpfcError::InvalidParams("a one-cell memory has no free half".into()));
    }
    let g = ou_plan(aw, wl, waf);
    let params = IsaParams { aw, wl, ous: g.ous, nrpl: 1, nrps: 1 };
    let tables = instruction_tables(aw, wl, waf, t)?;
    let isa = build_isa(params, tables)?;
    Ok(CompletenessWitness { isa, thread: witness_thread(), target: t.clone(), waf })
}

/// What membership verification found.
#[derive(Clone, Debug)]
pub struct MembershipReport {
    /// Data manipulation instruction count and the class's required count.
    pub instructions: (usize, usize),
    /// Thread residual count and the class's bound.
    pub residuals: (usize, usize),
    pub states_checked: usize,
    /// First state whose run diverges or lands outside the target image.
    pub failure: Option<String>,
}

impl MembershipReport {
    pub fn is_pass(&self) -> bool {
        self.instructions.0 == self.instructions.1
            && self.residuals.0 <= self.residuals.1
            && self.failure.is_none()
    }
}

fn data_words(s: &MachineState, cells: u32) -> Vec<u64> {
    (0..cells)
        .map(|i| match s.get(MemoryElement::Data(i)) {
            BaseValue::Nat(v) => v,
            BaseValue::Bool(b) => b as u64,
        })
        .collect()
}

/// Checks that a witness places its target inside the class named by
/// `params`: the instruction count matches, the thread fits the state
/// bound, and from every machine state the run converges with the checked
/// data region transformed as the target prescribes. Exhaustive over all
/// machine states.
pub fn verify_membership(
    params: &TpfcParams,
    w: &CompletenessWitness,
    limits: &Limits,
) -> Result<MembershipReport, TpfcError> {
    params.validate()?;
    let m = w.isa.machine();
    limits.check_states(m.layout())?;

    let mut failure = None;
    let p = w.isa.params();
    if p.aw != params.aw || p.wl != params.wl || p.ous != params.ous || w.waf != params.waf {
        failure = Some(format!(
            "machine shape (aw {}, wl {}, ous {}, waf {}) differs from the class parameters",
            p.aw,
            p.wl,
            p.ous,
            if w.waf { "T" } else { "F" }
        ));
    }
    let ext = w.ext_cells();
    let mut states_checked = 0;
    if failure.is_none() {
        for s in m.layout().states() {
            states_checked += 1;
            let want = w.target.apply_words(&data_words(&s, ext));
            match apply_thread(&w.thread, m, &s, limits)? {
                Some(out) if data_words(&out, ext) == want => {}
                Some(out) => {
                    failure = Some(format!(
                        "from {} the checked cells end as {:?}, target says {:?}",
                        s.dump(),
                        data_words(&out, ext),
                        want
                    ));
                    break;
                }
                None => {
                    failure = Some(format!("run from {} does not converge", s.dump()));
                    break;
                }
            }
        }
    }

    Ok(MembershipReport {
        instructions: (w.isa.dm_count(), params.iss as usize),
        residuals: (residuals(&w.thread).len(), params.ssb as usize),
        states_checked,
        failure,
    })
}

/// What replaying one run against the staged-copy schedule found.
#[derive(Clone, Debug)]
pub struct TraceReport {
    /// States at which the run sits at a loop head (X, Y, Z) or has stopped.
    pub milestones: usize,
    /// Machine steps of the whole run.
    pub steps: usize,
    /// First violated milestone, if any.
    pub fault: Option<String>,
}

impl TraceReport {
    pub fn is_pass(&self) -> bool {
        self.fault.is_none()
    }
}

/// Replays the witness from `s0` and checks the copy schedule milestone by
/// milestone. With `ext` external cells the milestones are: arrival at the
/// load loop with the counter at 0; after the i-th load, slots 0..i staged
/// and the counter at i; after the transform, the staging area holding the
/// target image and the counter reset; after the i-th store, cells 0..i
/// rewritten; at the stop, the checked region equal to the target image
/// (and the free half untouched, when there is one). That makes `2·ext + 4`
/// milestones and `5·ext + 4` machine steps, both independent of `s0`.
pub fn trace_invariant_check(
    w: &CompletenessWitness,
    s0: &MachineState,
    limits: &Limits,
) -> Result<TraceReport, TpfcError> {
    let comp = computation(&w.thread, w.isa.machine(), s0, limits)?;
    let steps = comp.path.len() - 1;
    let g = {
        let p = w.isa.params();
        ou_plan(p.aw, p.wl, w.waf)
    };
    let ext = g.ext_cells as usize;
    let t_img = w.target.apply_words(&data_words(s0, g.ext_cells));
    let s0_data = data_words(s0, w.isa.params().data_cells() as u32);

    if !matches!(comp.status, RunStatus::Converged { .. }) {
        return Ok(TraceReport { milestones: 0, steps, fault: Some("run does not converge".into()) });
    }

    let ou_word = |s: &MachineState, lo: u32, len: u32| -> u64 {
        let bits: BTreeMap<u32, u8> = (lo..lo + len)
            .map(|i| {
                let b = match s.get(MemoryElement::Ou(i)) {
                    BaseValue::Nat(v) => v as u8,
                    BaseValue::Bool(b) => b as u8,
                };
                (i, b)
            })
            .collect();
        bn(&bits).expect("a bit range is contiguous")
    };
    let counter = |s: &MachineState| ou_word(s, g.ctr_lo, g.ctr_len);
    let slot = |s: &MachineState, i: usize| ou_word(s, i as u32 * g.wl, g.wl);
    let data = |s: &MachineState, i: usize| data_words(s, g.ext_cells.max(i as u32 + 1))[i];

    let loop_heads = [VarId::new("X"), VarId::new("Y"), VarId::new("Z")];
    let marks: Vec<(&ThreadHandle, &MachineState)> = comp
        .path
        .iter()
        .filter(|(h, _)| {
            loop_heads.contains(h.root()) || matches!(h.root_rhs(), LinearRhs::Stop)
        })
        .map(|(h, s)| (h, s))
        .collect();

    let mut fault = None;
    let expected = 2 * ext + 4;
    if marks.len() != expected {
        fault = Some(format!("{} milestones, the schedule has {expected}", marks.len()));
    }
    for (i, (h, s)) in marks.iter().enumerate() {
        if fault.is_some() {
            break;
        }
        let at = |v: &str| *h.root() == VarId::new(v);
        let mut check = |ok: bool, msg: String| {
            if !ok && fault.is_none() {
                fault = Some(format!("milestone {i}: {msg}"));
            }
        };
        if i == 0 {
            check(at("X"), "run does not begin at the entry".into());
        } else if i == 1 {
            check(at("Y") && counter(s) == 0, "counter not cleared at the load loop".into());
        } else if i <= ext + 1 {
            check(at("Y"), "not at the load loop head".into());
            check(counter(s) == i as u64 - 1, format!("counter is {}", counter(s)));
            for j in 0..=(i - 2) {
                check(
                    slot(s, j) == data(s, j),
                    format!("slot {j} holds {}, cell {j} holds {}", slot(s, j), data(s, j)),
                );
            }
        } else if i == ext + 2 {
            check(at("Z") && counter(s) == 0, "counter not cleared at the store loop".into());
            for j in 0..ext {
                check(
                    slot(s, j) == t_img[j],
                    format!("slot {j} holds {}, the image needs {}", slot(s, j), t_img[j]),
                );
            }
        } else if i <= 2 * ext + 2 {
            check(at("Z"), "not at the store loop head".into());
            check(counter(s) == (i - ext - 2) as u64, format!("counter is {}", counter(s)));
            for j in 0..=(i - ext - 3) {
                check(
                    data(s, j) == t_img[j],
                    format!("cell {j} holds {}, the image needs {}", data(s, j), t_img[j]),
                );
            }
        } else {
            check(matches!(h.root_rhs(), LinearRhs::Stop), "run has not stopped".into());
            for j in 0..ext {
                check(
                    data(s, j) == t_img[j],
                    format!("cell {j} holds {}, the image needs {}", data(s, j), t_img[j]),
                );
            }
            if w.waf {
                for j in ext..w.isa.params().data_cells() as usize {
                    check(
                        data(s, j) == s0_data[j],
                        format!("free cell {j} was touched"),
                    );
                }
            }
        }
    }

    Ok(TraceReport { milestones: marks.len(), steps, fault })
}

/// A completeness witness pushed all the way down to an empty operating
/// unit, with one thread per original operating unit assignment.
#[derive(Clone, Debug)]
pub struct ZeroOuWitness {
    pub base: CompletenessWitness,
    pub zero: ZeroReduction,
    /// Final data manipulation instruction count and its bound `5·4^ous`.
    pub instructions: (usize, usize),
    /// Largest per-thread residual count and its bound `8·6^ous`.
    pub residuals: (usize, usize),
    /// Selector entries and their bound `2^ous`.
    pub selector: (usize, usize),
    /// First selector entry whose thread misses the target, if any.
    pub failure: Option<String>,
}

impl ZeroOuWitness {
    pub fn is_pass(&self) -> bool {
        self.instructions.0 <= self.instructions.1
            && self.residuals.0 <= self.residuals.1
            && self.selector.0 <= self.selector.1
            && self.failure.is_none()
    }
}

/// Composes the synthesis with the iterated operating unit reduction, down
/// to zero bits. Guarded to the smallest memory, one cell of one bit, where
/// the synthesized machine has a 2-bit operating unit.
pub fn synthesize_zero_ou(
    t: &ExtTransformation,
    limits: &Limits,
) -> Result<ZeroOuWitness, TpfcError> {
    if t.cells() != 1 || t.wl() != 1 {
        return Err(TpfcError::SizeExceeded(
            "the zero operating unit construction is exercised on a 1-cell 1-bit memory".into(),
        ));
    }
    let base = synthesize_complete(0, 1, false, t)?;
    let ous = base.isa.params().ous;
    let zero = reduce_to_zero(&base.isa, &base.thread, false, limits)?;

    let mut failure = None;
    let cells = base.isa.params().data_cells() as u32;
    'keys: for (key, q) in &zero.selector {
        for s in zero.machine.layout().states() {
            let want = t.apply_words(&data_words(&s, cells));
            match apply_thread(q, zero.machine.machine(), &s, limits)? {
                Some(out) if data_words(&out, cells) == want => {}
                _ => {
                    failure = Some(format!("assignment {key:?} misses the target from {}", s.dump()));
                    break 'keys;
                }
            }
        }
    }

    let max_res = zero.selector.values().map(|q| residuals(q).len()).max().unwrap_or(0);
    Ok(ZeroOuWitness {
        instructions: (zero.machine.dm_count(), 5 * 4usize.pow(ous)),
        residuals: (max_res, 8 * 6usize.pow(ous)),
        selector: (zero.selector.len(), 1 << ous),
        failure,
        base,
        zero,
    })
}
