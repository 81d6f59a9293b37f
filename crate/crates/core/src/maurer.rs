//! Machines with a finite memory and operations as total state transformers.
//!
//! A machine fixes a finite set of memory elements, a finite range of values
//! for each element, a set of named operations, and for each operation a
//! Boolean reply element. States are total assignments of in-range values to
//! elements. Applying a thread to a state performs the root action's
//! operation, inspects the reply element of the resulting state, and recurses
//! into the chosen branch; `stop` yields the current state, `dead` yields no
//! state, and a run that revisits a (residual, state) configuration never
//! terminates and also yields no state. The absent result is written `↑` and
//! is represented by `None` throughout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bta::{ActionId, LinearRhs, ThreadHandle, VarId};

/// One cell of machine memory.
///
/// The variant order is the canonical element order used by state dumps,
/// layouts and restrictions: data memory, operating unit bits, load data and
/// address registers, store data and address registers, reply register.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum MemoryElement {
    Data(u32),
    Ou(u32),
    LoadData(u32),
    LoadAddr(u32),
    StoreData(u32),
    StoreAddr(u32),
    ReplyReg,
}

impl fmt::Display for MemoryElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryElement::Data(i) => write!(f, "data[{i}]"),
            MemoryElement::Ou(i) => write!(f, "ou[{i}]"),
            MemoryElement::LoadData(i) => write!(f, "ld[{i}]"),
            MemoryElement::LoadAddr(i) => write!(f, "la[{i}]"),
            MemoryElement::StoreData(i) => write!(f, "sd[{i}]"),
            MemoryElement::StoreAddr(i) => write!(f, "sa[{i}]"),
            MemoryElement::ReplyReg => write!(f, "rr"),
        }
    }
}

impl MemoryElement {
    /// Parses the display form, e.g. `data[3]` or `rr`.
    pub fn parse(s: &str) -> Option<MemoryElement> {
        if s == "rr" {
            return Some(MemoryElement::ReplyReg);
        }
        let open = s.find('[')?;
        if !s.ends_with(']') {
            return None;
        }
        let idx: u32 = s[open + 1..s.len() - 1].parse().ok()?;
        match &s[..open] {
            "data" => Some(MemoryElement::Data(idx)),
            "ou" => Some(MemoryElement::Ou(idx)),
            "ld" => Some(MemoryElement::LoadData(idx)),
            "la" => Some(MemoryElement::LoadAddr(idx)),
            "sd" => Some(MemoryElement::StoreData(idx)),
            "sa" => Some(MemoryElement::StoreAddr(idx)),
            _ => None,
        }
    }
}

/// Value held by a memory element: a bounded natural or a Boolean.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum BaseValue {
    Nat(u64),
    Bool(bool),
}

impl fmt::Display for BaseValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseValue::Nat(n) => write!(f, "{n}"),
            BaseValue::Bool(true) => write!(f, "T"),
            BaseValue::Bool(false) => write!(f, "F"),
        }
    }
}

/// Admissible values of one element.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ValueKind {
    /// Naturals `0 ..= max`.
    Nat { max: u64 },
    Bool,
}

impl ValueKind {
    pub fn cardinality(&self) -> u64 {
        match self {
            ValueKind::Nat { max } => max + 1,
            ValueKind::Bool => 2,
        }
    }

    fn contains_raw(&self, raw: u64) -> bool {
        raw < self.cardinality()
    }

    fn to_value(self, raw: u64) -> BaseValue {
        match self {
            ValueKind::Nat { .. } => BaseValue::Nat(raw),
            ValueKind::Bool => BaseValue::Bool(raw != 0),
        }
    }

    fn from_value(self, v: BaseValue) -> Option<u64> {
        match (self, v) {
            (ValueKind::Nat { max }, BaseValue::Nat(n)) if n <= max => Some(n),
            (ValueKind::Bool, BaseValue::Bool(b)) => Some(b as u64),
            _ => None,
        }
    }
}

/// Memory of a machine: elements in canonical order with their value ranges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MemoryLayout {
    elems: Vec<MemoryElement>,
    kinds: Vec<ValueKind>,
    index: BTreeMap<MemoryElement, usize>,
}

impl MemoryLayout {
    /// Builds a layout; elements are sorted into canonical order. Duplicate
    /// elements are rejected.
    pub fn new(mut elems: Vec<(MemoryElement, ValueKind)>) -> Result<Self, MachineError> {
        elems.sort_by_key(|(e, _)| *e);
        let mut index = BTreeMap::new();
        for (i, (e, _)) in elems.iter().enumerate() {
            if index.insert(*e, i).is_some() {
                return Err(MachineError::DuplicateElement(*e));
            }
        }
        let kinds = elems.iter().map(|(_, k)| *k).collect();
        let elems = elems.into_iter().map(|(e, _)| e).collect();
        Ok(MemoryLayout { elems, kinds, index })
    }

    pub fn elements(&self) -> &[MemoryElement] {
        &self.elems
    }

    pub fn contains(&self, e: MemoryElement) -> bool {
        self.index.contains_key(&e)
    }

    pub fn kind_of(&self, e: MemoryElement) -> Option<ValueKind> {
        self.index.get(&e).map(|&i| self.kinds[i])
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    fn slot(&self, e: MemoryElement) -> Option<usize> {
        self.index.get(&e).copied()
    }

    /// Number of states, i.e. the product of all element cardinalities,
    /// saturating at `u128::MAX` (anything that large fails every limit
    /// check anyway).
    pub fn state_count(&self) -> u128 {
        self.kinds
            .iter()
            .try_fold(1u128, |acc, k| acc.checked_mul(k.cardinality() as u128))
            .unwrap_or(u128::MAX)
    }

    /// The state with every element zero / false.
    pub fn zero_state(self: &Arc<Self>) -> MachineState {
        MachineState { layout: Arc::clone(self), vals: vec![0; self.elems.len()].into() }
    }

    /// All states, in mixed-radix counting order over the canonical element
    /// order (last element varies fastest).
    pub fn states(self: &Arc<Self>) -> StateIter {
        StateIter { layout: Arc::clone(self), next: Some(vec![0; self.elems.len()]) }
    }

    /// A uniformly random state.
    pub fn random_state(self: &Arc<Self>, rng: &mut impl Rng) -> MachineState {
        let vals = self
            .kinds
            .iter()
            .map(|k| rng.gen_range(0..k.cardinality()))
            .collect::<Vec<_>>()
            .into();
        MachineState { layout: Arc::clone(self), vals }
    }
}

/// Iterator over all states of a layout.
pub struct StateIter {
    layout: Arc<MemoryLayout>,
    next: Option<Vec<u64>>,
}

impl Iterator for StateIter {
    type Item = MachineState;

    fn next(&mut self) -> Option<MachineState> {
        let cur = self.next.take()?;
        let state = MachineState { layout: Arc::clone(&self.layout), vals: cur.clone().into() };
        let mut bumped = cur;
        let mut i = bumped.len();
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            i -= 1;
            bumped[i] += 1;
            if bumped[i] < self.layout.kinds[i].cardinality() {
                self.next = Some(bumped);
                break;
            }
            bumped[i] = 0;
        }
        Some(state)
    }
}

/// A total assignment of values to the elements of one layout.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MachineState {
    layout: Arc<MemoryLayout>,
    vals: Box<[u64]>,
}

impl std::hash::Hash for MachineState {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // Layouts are shared; the values identify the state.
        self.vals.hash(state);
    }
}

impl MachineState {
    pub fn layout(&self) -> &Arc<MemoryLayout> {
        &self.layout
    }

    pub fn get(&self, e: MemoryElement) -> BaseValue {
        let i = self.layout.slot(e).unwrap_or_else(|| panic!("element {e} not in layout"));
        self.layout.kinds[i].to_value(self.vals[i])
    }

    /// Sets an element; fails on unknown element or out-of-range value.
    pub fn set(&mut self, e: MemoryElement, v: BaseValue) -> Result<(), MachineError> {
        let i = self.layout.slot(e).ok_or(MachineError::UnknownElement(e))?;
        let raw = self.layout.kinds[i]
            .from_value(v)
            .ok_or(MachineError::RangeViolation { element: e, value: v })?;
        self.vals_mut()[i] = raw;
        Ok(())
    }

    pub(crate) fn raw(&self, slot: usize) -> u64 {
        self.vals[slot]
    }

    pub(crate) fn set_raw(&mut self, slot: usize, raw: u64) {
        debug_assert!(self.layout.kinds[slot].contains_raw(raw));
        self.vals_mut()[slot] = raw;
    }

    fn vals_mut(&mut self) -> &mut [u64] {
        &mut self.vals
    }

    /// Raw values of the given elements, in the order given.
    pub fn project(&self, elems: &[MemoryElement]) -> Vec<u64> {
        elems.iter().map(|&e| self.vals[self.layout.slot(e).expect("element in layout")]).collect()
    }

    /// True if the two states agree on every element of `elems`.
    pub fn agrees_on(&self, other: &MachineState, elems: &[MemoryElement]) -> bool {
        elems.iter().all(|&e| self.get(e) == other.get(e))
    }

    /// Elements on which the two states differ (same layout assumed).
    pub fn diff(&self, other: &MachineState) -> Vec<MemoryElement> {
        debug_assert_eq!(self.layout.elems, other.layout.elems);
        self.layout
            .elems
            .iter()
            .enumerate()
            .filter(|&(i, _)| self.vals[i] != other.vals[i])
            .map(|(_, &e)| e)
            .collect()
    }

    /// Canonical dump: one `element = value` line per element in canonical
    /// order, Booleans as `T` / `F`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.layout.elems.iter().enumerate() {
            out.push_str(&format!("{e} = {}\n", self.layout.kinds[i].to_value(self.vals[i])));
        }
        out
    }

    /// 64-bit FNV-1a digest of the canonical dump.
    pub fn digest(&self) -> u64 {
        fnv1a64(self.dump().as_bytes())
    }

    /// Parses a dump against a layout. Every element must be assigned exactly
    /// once.
    pub fn parse(layout: &Arc<MemoryLayout>, input: &str) -> Result<MachineState, MachineError> {
        let mut vals: Vec<Option<u64>> = vec![None; layout.elems.len()];
        for (ln, raw) in input.lines().enumerate() {
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| MachineError::StateParse {
                line: ln + 1,
                msg: "expected `element = value`".into(),
            })?;
            let elem = MemoryElement::parse(lhs.trim()).ok_or_else(|| MachineError::StateParse {
                line: ln + 1,
                msg: format!("unknown element `{}`", lhs.trim()),
            })?;
            let slot = layout.slot(elem).ok_or(MachineError::UnknownElement(elem))?;
            let kind = layout.kinds[slot];
            let value = parse_value(rhs.trim(), kind).ok_or_else(|| MachineError::StateParse {
                line: ln + 1,
                msg: format!("bad value `{}` for {elem}", rhs.trim()),
            })?;
            if vals[slot].replace(value).is_some() {
                return Err(MachineError::StateParse {
                    line: ln + 1,
                    msg: format!("{elem} assigned twice"),
                });
            }
        }
        let mut out = Vec::with_capacity(vals.len());
        for (i, v) in vals.into_iter().enumerate() {
            match v {
                Some(v) => out.push(v),
                None => {
                    return Err(MachineError::StateParse {
                        line: 0,
                        msg: format!("{} not assigned", layout.elems[i]),
                    })
                }
            }
        }
        Ok(MachineState { layout: Arc::clone(layout), vals: out.into() })
    }
}

fn parse_value(s: &str, kind: ValueKind) -> Option<u64> {
    match (kind, s) {
        (ValueKind::Bool, "T") => Some(1),
        (ValueKind::Bool, "F") => Some(0),
        (ValueKind::Bool, _) => None,
        (ValueKind::Nat { max }, _) => {
            let n: u64 = s.parse().ok()?;
            (n <= max).then_some(n)
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A named operation: a total state transformer plus declared upper bounds on
/// its input and output regions and the element carrying its reply.
#[derive(Clone)]
pub struct Operation {
    pub id: ActionId,
    transform: Arc<dyn Fn(&MachineState) -> MachineState + Send + Sync>,
    pub declared_input: BTreeSet<MemoryElement>,
    pub declared_output: BTreeSet<MemoryElement>,
    pub reply: MemoryElement,
}

impl Operation {
    pub fn new(
        id: impl Into<ActionId>,
        reply: MemoryElement,
        declared_input: BTreeSet<MemoryElement>,
        declared_output: BTreeSet<MemoryElement>,
        transform: impl Fn(&MachineState) -> MachineState + Send + Sync + 'static,
    ) -> Self {
        Operation {
            id: id.into(),
            transform: Arc::new(transform),
            declared_input,
            declared_output,
            reply,
        }
    }

    pub fn apply(&self, s: &MachineState) -> MachineState {
        (self.transform)(s)
    }
}

impl fmt::Debug for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operation")
            .field("id", &self.id)
            .field("declared_input", &self.declared_input)
            .field("declared_output", &self.declared_output)
            .field("reply", &self.reply)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum MachineError {
    #[error("unknown action {0}")]
    UnknownAction(ActionId),
    #[error("unknown memory element {0}")]
    UnknownElement(MemoryElement),
    #[error("duplicate memory element {0}")]
    DuplicateElement(MemoryElement),
    #[error("value {value} out of range for {element}")]
    RangeViolation { element: MemoryElement, value: BaseValue },
    #[error("reply element {element} of {action} is not Boolean")]
    NonBooleanReply { action: ActionId, element: MemoryElement },
    #[error("state space has {states} states, limit is {limit}")]
    ThresholdExceeded { states: u128, limit: u64 },
    #[error("step cap of {cap} steps exceeded")]
    StepCapExceeded { cap: usize },
    #[error("state parse error at line {line}: {msg}")]
    StateParse { line: usize, msg: String },
}

/// Enumeration and simulation limits.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    /// Refuse exhaustive enumeration beyond this many states.
    pub max_states: u64,
    /// Abort a single run after this many steps.
    pub step_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1 << 24, step_cap: 1_000_000 }
    }
}

impl Limits {
    pub fn check_states(&self, layout: &MemoryLayout) -> Result<(), MachineError> {
        let states = layout.state_count();
        if states > self.max_states as u128 {
            return Err(MachineError::ThresholdExceeded { states, limit: self.max_states });
        }
        Ok(())
    }
}

/// A machine: a memory layout plus named operations.
#[derive(Clone, Debug)]
pub struct MaurerMachine {
    layout: Arc<MemoryLayout>,
    ops: BTreeMap<ActionId, Operation>,
}

impl MaurerMachine {
    /// Builds a machine, checking that every reply element exists and is
    /// Boolean.
    pub fn new(layout: Arc<MemoryLayout>, ops: Vec<Operation>) -> Result<Self, MachineError> {
        let mut map = BTreeMap::new();
        for op in ops {
            match layout.kind_of(op.reply) {
                None => return Err(MachineError::UnknownElement(op.reply)),
                Some(ValueKind::Bool) => {}
                Some(_) => {
                    return Err(MachineError::NonBooleanReply {
                        action: op.id.clone(),
                        element: op.reply,
                    })
                }
            }
            map.insert(op.id.clone(), op);
        }
        Ok(MaurerMachine { layout, ops: map })
    }

    pub fn layout(&self) -> &Arc<MemoryLayout> {
        &self.layout
    }

    pub fn operation(&self, a: &ActionId) -> Option<&Operation> {
        self.ops.get(a)
    }

    pub fn operations(&self) -> impl Iterator<Item = &Operation> {
        self.ops.values()
    }

    pub fn action_ids(&self) -> impl Iterator<Item = &ActionId> {
        self.ops.keys()
    }

    fn resolve(&self, a: &ActionId) -> Result<&Operation, MachineError> {
        self.ops.get(a).ok_or_else(|| MachineError::UnknownAction(a.clone()))
    }
}

/// One configuration of a run: current residual and current state.
pub type Config = (ThreadHandle, MachineState);

/// Performs the root action of a configuration, if any.
///
/// Returns `Ok(None)` when the residual is `stop` or `dead` (no step), and
/// the successor configuration otherwise.
pub fn step_once(m: &MaurerMachine, cfg: &Config) -> Result<Option<Config>, MachineError> {
    let (h, s) = cfg;
    match h.root_rhs() {
        LinearRhs::Stop | LinearRhs::Dead => Ok(None),
        LinearRhs::Post { yes, action, no } => {
            let op = m.resolve(action)?;
            let s2 = op.apply(s);
            let reply = match s2.get(op.reply) {
                BaseValue::Bool(b) => b,
                BaseValue::Nat(_) => unreachable!("reply kind checked at machine build"),
            };
            let next = if reply { yes } else { no };
            let h2 = h.at(next).expect("spec is closed");
            Ok(Some((h2, s2)))
        }
    }
}

/// Applies a thread to a state. `Ok(None)` is the undefined result `↑`:
/// reached on `dead`, and on runs that never terminate (detected exactly,
/// since a deterministic run over finitely many configurations fails to
/// terminate iff it revisits one).
pub fn apply_thread(
    p: &ThreadHandle,
    m: &MaurerMachine,
    s: &MachineState,
    limits: &Limits,
) -> Result<Option<MachineState>, MachineError> {
    let mut seen: std::collections::HashSet<(VarId, Box<[u64]>)> = std::collections::HashSet::new();
    let mut cur: Config = (p.clone(), s.clone());
    loop {
        match cur.0.root_rhs() {
            LinearRhs::Stop => return Ok(Some(cur.1)),
            LinearRhs::Dead => return Ok(None),
            LinearRhs::Post { .. } => {}
        }
        if seen.len() >= limits.step_cap {
            return Err(MachineError::StepCapExceeded { cap: limits.step_cap });
        }
        if !seen.insert((cur.0.root().clone(), cur.1.vals.clone())) {
            return Ok(None);
        }
        cur = step_once(m, &cur)?.expect("postconditional always steps");
    }
}

/// How a run ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RunStatus {
    /// Reached `stop`; the thread converges and `steps` actions were
    /// performed.
    Converged { steps: usize },
    /// Reached `dead`; the path is finite but the applied result is `↑`.
    Deadlocked { steps: usize },
    /// Revisited a configuration; the path is the lasso prefix up to (and
    /// including) the first repeat, and the applied result is `↑`.
    Diverged { lasso_start: usize },
}

/// A full run: every configuration from the initial one to termination, the
/// first repeated configuration, or `dead`.
#[derive(Clone, Debug)]
pub struct Computation {
    pub path: Vec<Config>,
    pub status: RunStatus,
}

impl Computation {
    pub fn last_state(&self) -> &MachineState {
        &self.path.last().expect("path is never empty").1
    }

    /// Numbered trace: residual root and state digest per configuration,
    /// then a status line.
    pub fn render_trace(&self) -> String {
        let mut out = String::new();
        for (i, (h, s)) in self.path.iter().enumerate() {
            out.push_str(&format!("{i} {} fnv1a={:016x}\n", h.root(), s.digest()));
        }
        match self.status {
            RunStatus::Converged { steps } => out.push_str(&format!("CONVERGED steps={steps}\n")),
            RunStatus::Deadlocked { steps } => {
                out.push_str(&format!("DEADLOCKED steps={steps}\n"))
            }
            RunStatus::Diverged { lasso_start } => {
                out.push_str(&format!("DIVERGED lasso_start={lasso_start}\n"))
            }
        }
        out
    }
}

/// Runs a thread from a state, recording the whole path.
pub fn computation(
    p: &ThreadHandle,
    m: &MaurerMachine,
    s: &MachineState,
    limits: &Limits,
) -> Result<Computation, MachineError> {
    let mut path: Vec<Config> = vec![(p.clone(), s.clone())];
    let mut index: HashMap<(VarId, Box<[u64]>), usize> = HashMap::new();
    index.insert((p.root().clone(), s.vals.clone()), 0);
    loop {
        let cur = path.last().unwrap();
        match cur.0.root_rhs() {
            LinearRhs::Stop => {
                let steps = path.len() - 1;
                return Ok(Computation { path, status: RunStatus::Converged { steps } });
            }
            LinearRhs::Dead => {
                let steps = path.len() - 1;
                return Ok(Computation { path, status: RunStatus::Deadlocked { steps } });
            }
            LinearRhs::Post { .. } => {}
        }
        if path.len() > limits.step_cap {
            return Err(MachineError::StepCapExceeded { cap: limits.step_cap });
        }
        let next = step_once(m, cur)?.expect("postconditional always steps");
        let key = (next.0.root().clone(), next.1.vals.clone());
        if let Some(&at) = index.get(&key) {
            path.push(next);
            return Ok(Computation { path, status: RunStatus::Diverged { lasso_start: at } });
        }
        index.insert(key, path.len());
        path.push(next);
    }
}

/// Output region of an operation: elements some state's image changes,
/// computed by exhaustive enumeration.
pub fn compute_output_region(
    m: &MaurerMachine,
    op: &Operation,
    limits: &Limits,
) -> Result<BTreeSet<MemoryElement>, MachineError> {
    limits.check_states(m.layout())?;
    let mut out = BTreeSet::new();
    for s in m.layout().states() {
        let t = op.apply(&s);
        for e in s.diff(&t) {
            out.insert(e);
        }
        if out.len() == m.layout().len() {
            break;
        }
    }
    Ok(out)
}

/// Input region of an operation: elements whose value alone can influence the
/// image on the output region. Exhaustive over all states and single-element
/// modifications.
pub fn compute_input_region(
    m: &MaurerMachine,
    op: &Operation,
    limits: &Limits,
) -> Result<BTreeSet<MemoryElement>, MachineError> {
    limits.check_states(m.layout())?;
    let oreg: Vec<MemoryElement> = compute_output_region(m, op, limits)?.into_iter().collect();
    let mut ireg = BTreeSet::new();
    if oreg.is_empty() {
        return Ok(ireg);
    }
    let layout = m.layout();
    for s in layout.states() {
        let img = op.apply(&s);
        let base = img.project(&oreg);
        for (slot, &e) in layout.elems.iter().enumerate() {
            if ireg.contains(&e) {
                continue;
            }
            let card = layout.kinds[slot].cardinality();
            // Unordered pairs once: only raise the value.
            for alt in (s.raw(slot) + 1)..card {
                let mut s2 = s.clone();
                s2.set_raw(slot, alt);
                if op.apply(&s2).project(&oreg) != base {
                    ireg.insert(e);
                    break;
                }
            }
        }
        if ireg.len() == layout.len() {
            break;
        }
    }
    Ok(ireg)
}

/// Which declared region a check failed against.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RegionKind {
    Input,
    Output,
}

/// Result of a sampled region check.
#[derive(Clone, Debug)]
pub enum RegionVerdict {
    Pass,
    Fail { kind: RegionKind, element: MemoryElement, witness: MachineState },
}

impl RegionVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, RegionVerdict::Pass)
    }
}

/// Randomized check that an operation respects its declared regions: sampled
/// states must not change outside the declared output region, and flipping an
/// element outside the declared input region must not change the image on the
/// rest of the declared output region. The flipped element itself is exempt:
/// when the operation leaves it alone the flip carries through to the image,
/// which is a passthrough, not a read. The price is that an element
/// influencing only its own image slips past this check; the exhaustive
/// region computation has no such blind spot.
pub fn verify_declared_regions(
    m: &MaurerMachine,
    op: &Operation,
    samples: usize,
    seed: u64,
) -> RegionVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = m.layout();
    let oreg: Vec<MemoryElement> = op.declared_output.iter().copied().collect();
    let free: Vec<usize> = layout
        .elems
        .iter()
        .enumerate()
        .filter(|(_, e)| !op.declared_input.contains(e))
        .map(|(i, _)| i)
        .collect();
    for _ in 0..samples {
        let s = layout.random_state(&mut rng);
        let img = op.apply(&s);
        for e in s.diff(&img) {
            if !op.declared_output.contains(&e) {
                return RegionVerdict::Fail { kind: RegionKind::Output, element: e, witness: s };
            }
        }
        if free.is_empty() {
            continue;
        }
        let slot = free[rng.gen_range(0..free.len())];
        let card = layout.kinds[slot].cardinality();
        if card < 2 {
            continue;
        }
        let mut alt = rng.gen_range(0..card - 1);
        if alt >= s.raw(slot) {
            alt += 1;
        }
        let mut s2 = s.clone();
        s2.set_raw(slot, alt);
        let flipped = layout.elems[slot];
        let cmp: Vec<MemoryElement> = oreg.iter().copied().filter(|&e| e != flipped).collect();
        if op.apply(&s2).project(&cmp) != img.project(&cmp) {
            return RegionVerdict::Fail {
                kind: RegionKind::Input,
                element: flipped,
                witness: s,
            };
        }
    }
    RegionVerdict::Pass
}

/// Exhaustive check of the coincidence property for one operation: states
/// agreeing on the computed input region must have images agreeing on the
/// computed output region. Returns a witness pair on failure.
pub fn check_coincidence(
    m: &MaurerMachine,
    op: &Operation,
    limits: &Limits,
) -> Result<Option<(MachineState, MachineState)>, MachineError> {
    limits.check_states(m.layout())?;
    let oreg: Vec<MemoryElement> = compute_output_region(m, op, limits)?.into_iter().collect();
    let ireg: Vec<MemoryElement> = compute_input_region(m, op, limits)?.into_iter().collect();
    let mut groups: HashMap<Vec<u64>, (Vec<u64>, MachineState)> = HashMap::new();
    for s in m.layout().states() {
        let key = s.project(&ireg);
        let img = op.apply(&s).project(&oreg);
        match groups.entry(key) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert((img, s));
            }
            std::collections::hash_map::Entry::Occupied(e) => {
                if e.get().0 != img {
                    return Ok(Some((e.get().1.clone(), s)));
                }
            }
        }
    }
    Ok(None)
}
