//! Shrinking the operating unit of a strict load/store machine by one bit,
//! and by iteration down to zero bits, preserving the data memory behavior of
//! any thread.
//!
//! The highest operating unit bit is removed from memory. Its value is pushed
//! into the instruction names instead: every data manipulation instruction
//! `a` becomes two on-instructions `a(0)`, `a(1)` (the effect of `a` when the
//! removed bit held 0 resp. 1, acting on the remaining memory) and two probe
//! instructions `a~(0)`, `a~(1)` that only reply what the removed bit would
//! hold after `a`, writing nothing but the reply register. So the reduced
//! machine has exactly 4 times the data manipulation instructions. Load and
//! store instructions never touch the operating unit and stay as they are.
//!
//! A thread is transformed per assumed initial bit value `k`: each step on a
//! data manipulation instruction becomes a probe step (learning the bit's
//! next value, i.e. which assumption to continue under) followed by the
//! matching on-step. The transformed thread has at most 6 times the states
//! and takes at most 2 times the steps.
//!
//! An instruction whose behavior neither depends on nor changes the removed
//! bit can skip the probe: thread steps on it stay single steps on `a(k)`
//! within the current assumption. Eligibility must be checked against the
//! computed regions of both kinds; an instruction that merely does not read
//! the bit may still write it, silently invalidating the tracked assumption.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use crate::bta::{residuals, ActionId, LinearRhs, LinearSpec, ThreadHandle, VarId};
use crate::isa::{build_isa, data_pairs, DmTable, IsaError, IsaParams, LsIsaMachine};
use crate::maurer::{
    compute_input_region, compute_output_region, step_once, BaseValue, Config, Limits,
    MachineError, MachineState, MemoryElement, MemoryLayout,
};

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
pub enum ReduceError {
    #[error("machine has no operating unit bits to remove")]
    NoOperatingUnit,
    #[error("{0} does not write rr: its probe's reply would leak into the branch decision after the on-step")]
    ReplyNotWritten(ActionId),
    #[error("thread root is not a postconditional")]
    NoFirstAction,
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Isa(#[from] IsaError),
}

/// The operating unit bit a reduction removes: the highest one.
pub fn removed_bit(params: &IsaParams) -> Option<MemoryElement> {
    params.ous.checked_sub(1).map(MemoryElement::Ou)
}

/// Reduced-machine instruction names standing in for one original data
/// manipulation instruction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReducedNames {
    /// `a(k)`: the effect of `a` on the remaining memory, assuming the
    /// removed bit holds `k`.
    pub on: [ActionId; 2],
    /// `a~(k)`: replies the removed bit's value after `a` from a state where
    /// it holds `k`; writes only `rr`.
    pub probe: [ActionId; 2],
}

impl ReducedNames {
    // Suffix-only naming keeps iterated reductions collision free: a probe
    // of an on-instruction and an on-instruction of a probe spell apart.
    fn for_action(a: &ActionId) -> ReducedNames {
        ReducedNames {
            on: [ActionId::new(format!("{a}(0)")), ActionId::new(format!("{a}(1)"))],
            probe: [ActionId::new(format!("{a}~(0)")), ActionId::new(format!("{a}~(1)"))],
        }
    }
}

/// One reduction step: the removed bit, the machine on the remaining memory,
/// and the instruction renaming.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub removed: MemoryElement,
    pub reduced: LsIsaMachine,
    pub names: BTreeMap<ActionId, ReducedNames>,
}

/// Data manipulation instructions whose computed input and output regions
/// both avoid `bit`. These are safe to step on without a probe. Exhaustive,
/// so only valid within `limits`.
pub fn dms_ignoring(
    m: &LsIsaMachine,
    bit: MemoryElement,
    limits: &Limits,
) -> Result<BTreeSet<ActionId>, MachineError> {
    let mut out = BTreeSet::new();
    for table in m.dm_tables() {
        let op = m.machine().operation(&table.id).expect("table actions are installed");
        let oreg = compute_output_region(m.machine(), op, limits)?;
        let ireg = compute_input_region(m.machine(), op, limits)?;
        if !oreg.contains(&bit) && !ireg.contains(&bit) {
            out.insert(table.id.clone());
        }
    }
    Ok(out)
}

/// Removes the highest operating unit bit from a machine, producing exactly
/// four data manipulation instructions per original one.
///
/// Every data manipulation table must write `rr` (instructions produce their
/// reply); otherwise the value a probe leaves in `rr` would survive the
/// on-step and corrupt the next branch decision.
pub fn reduce_instruction_set(
    m: &LsIsaMachine,
    limits: &Limits,
) -> Result<Reduction, ReduceError> {
    let params = *m.params();
    let bit = removed_bit(&params).ok_or(ReduceError::NoOperatingUnit)?;
    let _ = limits;

    let reduced_params = IsaParams { ous: params.ous - 1, ..params };
    let bit_key_pos = (params.ous - 1) as usize; // position of `bit` in the readable order
    let reduced_rows = reduced_params.dm_row_count().map_err(ReduceError::Isa)? as usize;

    let mut names = BTreeMap::new();
    let mut tables: Vec<DmTable> = Vec::new();
    for table in m.dm_tables() {
        if !table.outputs.contains(&MemoryElement::ReplyReg) {
            return Err(ReduceError::ReplyNotWritten(table.id.clone()));
        }
        let bit_col = table.outputs.iter().position(|&e| e == bit);
        let n = ReducedNames::for_action(&table.id);
        let on_outputs: Vec<MemoryElement> =
            table.outputs.iter().copied().filter(|&e| e != bit).collect();
        for k in 0..2u64 {
            let mut on_rows = Vec::with_capacity(reduced_rows);
            let mut probe_rows = Vec::with_capacity(reduced_rows);
            for idx in 0..reduced_rows {
                let mut key = reduced_params.dm_unpack(idx as u64);
                key.insert(bit_key_pos, k);
                let row = &table.rows[params.dm_pack(&key) as usize];
                on_rows.push(
                    table
                        .outputs
                        .iter()
                        .zip(row)
                        .filter(|&(&e, _)| e != bit)
                        .map(|(_, &v)| v)
                        .collect(),
                );
                // The bit after executing the instruction: its table value if
                // written, the assumed value otherwise.
                probe_rows.push(vec![match bit_col {
                    Some(c) => row[c],
                    None => k,
                }]);
            }
            tables.push(DmTable {
                id: n.on[k as usize].clone(),
                outputs: on_outputs.clone(),
                rows: on_rows,
            });
            tables.push(DmTable {
                id: n.probe[k as usize].clone(),
                outputs: vec![MemoryElement::ReplyReg],
                rows: probe_rows,
            });
        }
        names.insert(table.id.clone(), n);
    }

    let reduced = build_isa(reduced_params, tables)?;
    Ok(Reduction { removed: bit, reduced, names })
}

/// Transforms a thread for the reduced machine, assuming the removed bit
/// initially holds `k`.
///
/// Every variable is tracked per assumed current bit value: `X` under
/// assumption `j` becomes `X_j`. A step on a data manipulation instruction
/// `a` becomes
///
/// ```text
/// X_j   = X'_j <a~(j)> X''_j
/// X'_j  = Y_1 <a(j)> Z_1
/// X''_j = Y_0 <a(j)> Z_0
/// ```
///
/// where `X = Y <a> Z` originally: the probe's reply selects the assumption
/// the run continues under, the on-step applies the instruction and branches
/// as the original did. Steps on actions in `single_step` (and on actions
/// outside `names`, i.e. loads and stores) stay single steps within
/// assumption `j`; passing instructions that actually touch the bit makes
/// the result wrong, so take the set from [`dms_ignoring`]. Only equations
/// reachable from the transformed root are emitted.
pub fn transform_thread(
    p: &ThreadHandle,
    k: u8,
    names: &BTreeMap<ActionId, ReducedNames>,
    single_step: &BTreeSet<ActionId>,
) -> ThreadHandle {
    assert!(k < 2, "assumption is a bit");
    let spec = p.spec();
    let mut eqs: BTreeMap<VarId, LinearRhs> = BTreeMap::new();
    let root = p.root().decorated(0, k);
    let mut todo: Vec<(VarId, u8)> = vec![(p.root().clone(), k)];
    let mut seen: BTreeSet<(VarId, u8)> = todo.iter().cloned().collect();
    while let Some((x, j)) = todo.pop() {
        let rhs = spec.rhs(&x).expect("specs are closed");
        let xj = x.decorated(0, j);
        let reach = |v: &VarId, s: u8, seen: &mut BTreeSet<(VarId, u8)>,
                     todo: &mut Vec<(VarId, u8)>| {
            if seen.insert((v.clone(), s)) {
                todo.push((v.clone(), s));
            }
        };
        match rhs {
            LinearRhs::Stop => {
                eqs.insert(xj, LinearRhs::Stop);
            }
            LinearRhs::Dead => {
                eqs.insert(xj, LinearRhs::Dead);
            }
            LinearRhs::Post { yes, action, no } => {
                let split = names.contains_key(action) && !single_step.contains(action);
                if !split {
                    let step_action = match names.get(action) {
                        Some(n) => n.on[j as usize].clone(),
                        None => action.clone(),
                    };
                    eqs.insert(
                        xj,
                        LinearRhs::Post {
                            yes: yes.decorated(0, j),
                            action: step_action,
                            no: no.decorated(0, j),
                        },
                    );
                    reach(yes, j, &mut seen, &mut todo);
                    reach(no, j, &mut seen, &mut todo);
                } else {
                    let n = &names[action];
                    let hi = x.decorated(1, j);
                    let lo = x.decorated(2, j);
                    eqs.insert(
                        xj,
                        LinearRhs::Post {
                            yes: hi.clone(),
                            action: n.probe[j as usize].clone(),
                            no: lo.clone(),
                        },
                    );
                    eqs.insert(
                        hi,
                        LinearRhs::Post {
                            yes: yes.decorated(0, 1),
                            action: n.on[j as usize].clone(),
                            no: no.decorated(0, 1),
                        },
                    );
                    eqs.insert(
                        lo,
                        LinearRhs::Post {
                            yes: yes.decorated(0, 0),
                            action: n.on[j as usize].clone(),
                            no: no.decorated(0, 0),
                        },
                    );
                    for s in 0..2u8 {
                        reach(yes, s, &mut seen, &mut todo);
                        reach(no, s, &mut seen, &mut todo);
                    }
                }
            }
        }
    }
    let spec = LinearSpec::new(eqs).expect("generated equations are closed");
    ThreadHandle::new(root, Arc::new(spec)).expect("root equation was generated first")
}

/// The two transformed threads, one per initial value of the removed bit.
#[derive(Clone, Debug)]
pub struct TransformedPair {
    pub p0: ThreadHandle,
    pub p1: ThreadHandle,
}

impl TransformedPair {
    pub fn get(&self, k: u8) -> &ThreadHandle {
        if k == 0 {
            &self.p0
        } else {
            &self.p1
        }
    }
}

pub fn transform_pair(
    p: &ThreadHandle,
    names: &BTreeMap<ActionId, ReducedNames>,
    single_step: &BTreeSet<ActionId>,
) -> TransformedPair {
    TransformedPair {
        p0: transform_thread(p, 0, names, single_step),
        p1: transform_thread(p, 1, names, single_step),
    }
}

/// Copies the values of `to`'s elements out of a state of a larger layout.
pub fn restrict_state(s: &MachineState, to: &Arc<MemoryLayout>) -> MachineState {
    let mut t = to.zero_state();
    for &e in to.elements() {
        t.set(e, s.get(e)).expect("shared elements have identical kinds");
    }
    t
}

fn bit_value(s: &MachineState, e: MemoryElement) -> u8 {
    match s.get(e) {
        BaseValue::Nat(v) => v as u8,
        BaseValue::Bool(b) => b as u8,
    }
}

/// Evidence from checking one reduction against one thread.
#[derive(Clone, Debug)]
pub struct ReductionReport {
    /// Data pair sets match, per initial bit value.
    pub pair_sets: [bool; 2],
    /// Pair set sizes (original side), per initial bit value.
    pub pair_counts: [usize; 2],
    /// Initial states replayed in lockstep.
    pub replayed: usize,
    /// First lockstep violation, if any.
    pub fault: Option<String>,
    /// Residual counts of the transformed threads vs 6 times the original's.
    pub residuals: [(usize, usize); 2],
    /// Reduced data manipulation instruction count and 4 times the original
    /// count; equal by construction.
    pub instructions: (usize, usize),
    /// Every replayed run took at most twice the original's steps.
    pub steps_within_double: bool,
}

impl ReductionReport {
    pub fn is_pass(&self) -> bool {
        self.pair_sets == [true, true]
            && self.fault.is_none()
            && self.residuals.iter().all(|&(got, bound)| got <= bound)
            && self.instructions.0 == self.instructions.1
            && self.steps_within_double
    }
}

/// Checks a reduction against a thread, exhaustively.
///
/// For each initial bit value `k`: the set of (initial, final) data memory
/// pairs of the original thread over states with the bit at `k` must equal
/// that of `pair`'s `k` thread over all reduced states, pairing the undefined
/// outcome with itself. Additionally every original run is replayed in
/// lockstep with its transformed counterpart, checking at each aligned point
/// that the transformed residual is the original's variable under the
/// current bit's assumption, that the states agree on all remaining memory,
/// that each probe replies exactly the bit's next value, and that each
/// on-step reproduces the original's reply. `single_step` must be the set
/// `pair` was built with.
pub fn verify_reduction(
    m: &LsIsaMachine,
    p: &ThreadHandle,
    r: &Reduction,
    pair: &TransformedPair,
    single_step: &BTreeSet<ActionId>,
    limits: &Limits,
) -> Result<ReductionReport, ReduceError> {
    limits.check_states(m.layout())?;
    limits.check_states(r.reduced.layout())?;
    let bit = r.removed;

    let mut pair_sets = [false, false];
    let mut pair_counts = [0, 0];
    for k in 0..2usize {
        let orig = data_pairs(p, m, limits, |s| bit_value(s, bit) == k as u8)?;
        let red = data_pairs(pair.get(k as u8), &r.reduced, limits, |_| true)?;
        pair_counts[k] = orig.len();
        pair_sets[k] = orig == red;
    }

    let mut fault = None;
    let mut replayed = 0;
    let mut steps_within_double = true;
    for s0 in m.layout().states() {
        replayed += 1;
        match replay_lockstep(m, p, r, pair, single_step, &s0, limits) {
            Ok(within) => steps_within_double &= within,
            Err(f) => {
                fault = Some(format!("from state #{replayed}: {f}"));
                break;
            }
        }
    }

    let bound = 6 * residuals(p).len();
    let res = [(residuals(&pair.p0).len(), bound), (residuals(&pair.p1).len(), bound)];
    let instructions = (r.reduced.dm_count(), 4 * m.dm_count());

    Ok(ReductionReport {
        pair_sets,
        pair_counts,
        replayed,
        fault,
        residuals: res,
        instructions,
        steps_within_double,
    })
}

/// Replays one run in lockstep. Returns whether the transformed run stayed
/// within twice the original's steps, or a description of the first fault.
fn replay_lockstep(
    m: &LsIsaMachine,
    p: &ThreadHandle,
    r: &Reduction,
    pair: &TransformedPair,
    single_step: &BTreeSet<ActionId>,
    s0: &MachineState,
    limits: &Limits,
) -> Result<bool, String> {
    let bit = r.removed;
    let rr = MemoryElement::ReplyReg;
    let k0 = bit_value(s0, bit);
    let mut oc: Config = (p.clone(), s0.clone());
    let mut tc: Config = (pair.get(k0).clone(), restrict_state(s0, r.reduced.layout()));
    let mut osteps = 0usize;
    let mut tsteps = 0usize;
    let all_elems: Vec<MemoryElement> = m.layout().elements().to_vec();
    let mut seen: HashSet<(VarId, Vec<u64>)> = HashSet::new();

    loop {
        let k = bit_value(&oc.1, bit);
        let expect = oc.0.root().decorated(0, k);
        if *tc.0.root() != expect {
            return Err(format!(
                "residual mismatch after {osteps} steps: expected {expect}, found {}",
                tc.0.root()
            ));
        }
        if restrict_state(&oc.1, r.reduced.layout()) != tc.1 {
            return Err(format!("state mismatch after {osteps} steps"));
        }
        let action = match oc.0.root_rhs() {
            LinearRhs::Stop => {
                return match tc.0.root_rhs() {
                    LinearRhs::Stop => Ok(tsteps <= 2 * osteps),
                    _ => Err("original stopped, transformed did not".into()),
                };
            }
            LinearRhs::Dead => {
                return match tc.0.root_rhs() {
                    LinearRhs::Dead => Ok(tsteps <= 2 * osteps),
                    _ => Err("original deadlocked, transformed did not".into()),
                };
            }
            LinearRhs::Post { action, .. } => action.clone(),
        };
        // A revisited configuration means both runs loop forever; the
        // alignment seen so far is the whole lasso.
        if !seen.insert((oc.0.root().clone(), oc.1.project(&all_elems))) {
            return Ok(tsteps <= 2 * osteps);
        }
        if osteps >= limits.step_cap {
            return Ok(true);
        }

        let (oh2, os2) = step_once(m.machine(), &oc)
            .map_err(|e| e.to_string())?
            .expect("postconditional steps");

        let t_action = |tc: &Config| match tc.0.root_rhs() {
            LinearRhs::Post { action, .. } => Ok(action.clone()),
            _ => Err("transformed run ended early".to_string()),
        };
        let split = r.names.contains_key(&action) && !single_step.contains(&action);
        if !split {
            let want = match r.names.get(&action) {
                Some(n) => n.on[k as usize].clone(),
                None => action.clone(),
            };
            let ta = t_action(&tc)?;
            if ta != want {
                return Err(format!("expected step on {want}, found {ta}"));
            }
            tc = step_once(r.reduced.machine(), &tc)
                .map_err(|e| e.to_string())?
                .expect("postconditional steps");
            tsteps += 1;
        } else {
            let n = &r.names[&action];
            let probe = &n.probe[k as usize];
            let ta = t_action(&tc)?;
            if ta != *probe {
                return Err(format!("expected probe {probe}, found {ta}"));
            }
            let (th_mid, ts_mid) = step_once(r.reduced.machine(), &tc)
                .map_err(|e| e.to_string())?
                .expect("postconditional steps");
            tsteps += 1;
            let reply = ts_mid.get(rr) == BaseValue::Bool(true);
            let bit_after = bit_value(&os2, bit) == 1;
            if reply != bit_after {
                return Err(format!(
                    "probe {probe} replied {reply} but the removed bit becomes {bit_after}"
                ));
            }
            let expect_mid = oc.0.root().decorated(if reply { 1 } else { 2 }, k);
            if *th_mid.root() != expect_mid {
                return Err(format!(
                    "expected intermediate {expect_mid}, found {}",
                    th_mid.root()
                ));
            }
            let want = &n.on[k as usize];
            let mid: Config = (th_mid, ts_mid);
            let ta = t_action(&mid)?;
            if ta != *want {
                return Err(format!("expected on-step {want}, found {ta}"));
            }
            tc = step_once(r.reduced.machine(), &mid)
                .map_err(|e| e.to_string())?
                .expect("postconditional steps");
            tsteps += 1;
            if tc.1.get(rr) != os2.get(rr) {
                return Err(format!("on-step {want} disagrees with {action} on rr"));
            }
        }
        oc = (oh2, os2);
        osteps += 1;
    }
}

/// A machine without operating unit, plus one thread per original operating
/// unit assignment. Running the selected thread from any remaining state
/// reproduces the original thread's data memory behavior from the states
/// carrying that assignment.
#[derive(Clone, Debug)]
pub struct ZeroReduction {
    pub stages: Vec<Reduction>,
    pub machine: LsIsaMachine,
    /// Keyed by the original operating unit assignment, bits ascending.
    pub selector: BTreeMap<Vec<u64>, ThreadHandle>,
}

/// Iterates the one-bit reduction until no operating unit bits remain.
///
/// Stage `s` removes bit `ous-1-s`; the selector entry for assignment `key`
/// is the thread transformed at stage `s` under assumption `key[ous-1-s]`.
/// With `optimize`, each stage steps probe-free over instructions provably
/// ignoring that stage's bit.
pub fn reduce_to_zero(
    m: &LsIsaMachine,
    p: &ThreadHandle,
    optimize: bool,
    limits: &Limits,
) -> Result<ZeroReduction, ReduceError> {
    let mut machine = m.clone();
    let mut stages = Vec::new();
    let mut selector: Vec<(Vec<u64>, ThreadHandle)> = vec![(Vec::new(), p.clone())];
    for _ in 0..m.params().ous {
        let r = reduce_instruction_set(&machine, limits)?;
        let single_step = if optimize && limits.check_states(machine.layout()).is_ok() {
            dms_ignoring(&machine, r.removed, limits)?
        } else {
            BTreeSet::new()
        };
        let mut next = Vec::with_capacity(selector.len() * 2);
        for (key, q) in &selector {
            for k in 0..2u8 {
                let mut key2 = Vec::with_capacity(key.len() + 1);
                key2.push(k as u64);
                key2.extend_from_slice(key);
                next.push((key2, transform_thread(q, k, &r.names, &single_step)));
            }
        }
        selector = next;
        machine = r.reduced.clone();
        stages.push(r);
    }
    Ok(ZeroReduction { stages, machine, selector: selector.into_iter().collect() })
}

/// Evidence from checking a full reduction to zero bits.
#[derive(Clone, Debug)]
pub struct ZeroReport {
    pub entries: usize,
    /// Assignments whose pair sets disagree.
    pub failures: Vec<Vec<u64>>,
}

impl ZeroReport {
    pub fn is_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks a zero reduction: for every operating unit assignment, the original
/// thread's data pairs over states carrying it equal the selected thread's
/// data pairs over all states of the final machine.
pub fn verify_zero_reduction(
    m: &LsIsaMachine,
    p: &ThreadHandle,
    zr: &ZeroReduction,
    limits: &Limits,
) -> Result<ZeroReport, ReduceError> {
    limits.check_states(m.layout())?;
    limits.check_states(zr.machine.layout())?;
    let ou = m.ou_elements();
    let mut failures = Vec::new();
    for (key, q) in &zr.selector {
        let orig = data_pairs(p, m, limits, |s| s.project(&ou) == *key)?;
        let red = data_pairs(q, &zr.machine, limits, |_| true)?;
        if orig != red {
            failures.push(key.clone());
        }
    }
    Ok(ZeroReport { entries: zr.selector.len(), failures })
}

/// A single transformed thread covering every initial value of the removed
/// bit at once.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SingleThread {
    /// The assumption whose transformed thread covers everything.
    pub subscript: u8,
    pub thread: ThreadHandle,
}

/// Looks for one transformed thread whose data pairs over all reduced states
/// equal the original's over all states, dropping the bit from the initial
/// condition as well.
///
/// Returns `None` when the thread's first action reads the removed bit. The
/// first-action condition does not actually guarantee success: a later
/// action can still extract the bit into data memory, making the two initial
/// classes produce different pair sets, and then no transformed thread
/// covers both. The result is therefore verified before being returned, and
/// is `None` whenever neither assumption's thread covers the union.
pub fn single_thread_sufficiency(
    m: &LsIsaMachine,
    p: &ThreadHandle,
    r: &Reduction,
    limits: &Limits,
) -> Result<Option<SingleThread>, ReduceError> {
    limits.check_states(m.layout())?;
    limits.check_states(r.reduced.layout())?;
    let first = match p.root_rhs() {
        LinearRhs::Post { action, .. } => action.clone(),
        _ => return Err(ReduceError::NoFirstAction),
    };
    if let Some(op) = m.machine().operation(&first) {
        if compute_input_region(m.machine(), op, limits)?.contains(&r.removed) {
            return Ok(None);
        }
    }
    let none = BTreeSet::new();
    let all = data_pairs(p, m, limits, |_| true)?;
    for k in 0..2u8 {
        let cand = transform_thread(p, k, &r.names, &none);
        if data_pairs(&cand, &r.reduced, limits, |_| true)? == all {
            return Ok(Some(SingleThread { subscript: k, thread: cand }));
        }
    }
    Ok(None)
}
