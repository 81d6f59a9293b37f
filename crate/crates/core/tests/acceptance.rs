//! Acceptance gate. One test per criterion, each printing a single
//! `ACCEPT <id> <name>: PASS|FAIL - detail` line (run with `--nocapture`
//! to see them). Two criteria measure known defects in the claimed
//! numbers and are pinned to FAIL: the test asserts the measured values,
//! so the line stays an honest FAIL until the construction itself changes.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lsisa::bta::text::parse_thread;
use lsisa::bta::{residuals, LinearRhs, Residual, ThreadHandle, VarId};
use lsisa::isa::{
    build_isa, check_load_store_equations, random_dm_spec, DmTable, IsaParams, LsIsaMachine,
};
use lsisa::maurer::{
    apply_thread, check_coincidence, computation, Limits, MemoryElement, RunStatus,
};
use lsisa::reduce::{
    reduce_instruction_set, reduce_to_zero, single_thread_sufficiency, transform_pair,
    verify_reduction, verify_zero_reduction,
};
use lsisa::tpfc::counting::{count_transformations, incompleteness_check, ExactNat};
use lsisa::tpfc::{
    external_cells, synthesize_complete, synthesize_zero_ou, trace_invariant_check,
    verify_membership, ExtTransformation, TpfcParams,
};

use MemoryElement::{Ou, ReplyReg};

fn accept(id: &str, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPT {id} {name}: {verdict} - {detail}");
    pass
}

fn class(w: &lsisa::tpfc::CompletenessWitness) -> TpfcParams {
    TpfcParams {
        aw: w.isa.params().aw,
        wl: w.isa.params().wl,
        ous: w.isa.params().ous,
        iss: 5,
        ssb: 8,
        waf: w.waf,
    }
}

/// Random linear specification over the given actions. When `first` is
/// set the root equation performs that action, everything after it is
/// unconstrained.
fn random_spec(rng: &mut ChaCha8Rng, actions: &[&str], first: Option<&str>) -> ThreadHandle {
    let n = rng.gen_range(2..=5usize);
    let eqs: Vec<(VarId, LinearRhs)> = (0..n)
        .map(|i| {
            let v = VarId::new(format!("V{i}"));
            let any = |rng: &mut ChaCha8Rng| VarId::new(format!("V{}", rng.gen_range(0..n)));
            let rhs = match first {
                Some(a) if i == 0 => LinearRhs::post(any(rng), a, any(rng)),
                _ => match rng.gen_range(0..6u8) {
                    0 => LinearRhs::Stop,
                    1 => LinearRhs::Dead,
                    _ => {
                        let a = actions[rng.gen_range(0..actions.len())];
                        LinearRhs::post(any(rng), a, any(rng))
                    }
                },
            };
            (v, rhs)
        })
        .collect();
    ThreadHandle::from_eqs(VarId::new("V0"), eqs).unwrap()
}

/// key order for (aw 1, wl 1, ous 1): `ou[0], ld[0]`; pack = ou*2 + ld.
fn table(id: &str, outputs: Vec<MemoryElement>, f: impl Fn(u64, u64) -> Vec<u64>) -> DmTable {
    let rows = (0..4).map(|i| f(i / 2, i % 2)).collect();
    DmTable { id: id.into(), outputs, rows }
}

fn random_machine(ous: u32, dms: u32, seed: u64) -> LsIsaMachine {
    let p = IsaParams { aw: 1, wl: 1, ous, nrpl: 1, nrps: 1 };
    let tables: Vec<DmTable> = (0..dms)
        .map(|i| {
            let outputs: BTreeSet<MemoryElement> = (0..ous).map(Ou).chain([ReplyReg]).collect();
            random_dm_spec(&p, format!("op{i}"), &outputs, seed * 100 + i as u64).unwrap()
        })
        .collect();
    build_isa(p, tables).unwrap()
}

// ---------------------------------------------------------------------------
// C1: every external transformation of a one-cell-address, one-bit-word
// memory is realized by a five-instruction program with eight residual
// states, verified over the entire state space

#[test]
fn c1_small_complete_program_for_every_word_map() {
    let limits = Limits::default();
    let all = ExtTransformation::enumerate(2, 1).unwrap();
    assert_eq!(all.len(), 256);
    let mut states_each = 0usize;
    for t in &all {
        let w = synthesize_complete(1, 1, false, t).unwrap();
        assert_eq!(w.isa.dm_count(), 5);
        assert_eq!(residuals(&w.thread).len(), 8);
        let r = verify_membership(&class(&w), &w, &limits).unwrap();
        assert!(r.is_pass(), "map {:?}: {:?}", t, r.failure);
        states_each = r.states_checked;
        assert_eq!(states_each as u128, w.isa.layout().state_count());
        let tr = trace_invariant_check(&w, &w.isa.layout().zero_state(), &limits).unwrap();
        assert!(tr.is_pass(), "map {:?}: {:?}", t, tr.fault);
        assert_eq!((tr.milestones, tr.steps), (8, 14));
    }
    let detail = format!(
        "256/256 word maps synthesized; 5 instructions, 8 residual states, \
         all {states_each} start states replayed per map"
    );
    assert!(accept("C1", "complete-family-at-unit-word", true, &detail));
}

#[test]
fn c1_claimed_schedule_length_does_not_match() {
    // the claimed schedule length for this construction is 2^(aw+1)+5,
    // which is 9 at one address bit; no measure of the synthesized run
    // comes out at 9
    let limits = Limits::default();
    let t = ExtTransformation::identity(2, 1).unwrap();
    let w = synthesize_complete(1, 1, false, &t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut seen = BTreeSet::new();
    for _ in 0..25 {
        let s0 = w.isa.layout().random_state(&mut rng);
        let tr = trace_invariant_check(&w, &s0, &limits).unwrap();
        assert!(tr.is_pass(), "{:?}", tr.fault);
        seen.insert((tr.milestones, tr.steps));
    }
    // the schedule is constant over start states, just never 9 long
    assert_eq!(seen, BTreeSet::from([(8usize, 14usize)]));
    let claimed = 2usize.pow(1 + 1) + 5;
    let pass = [8, 14, 15].contains(&claimed);
    let detail = format!(
        "claimed length {claimed}; measured 8 milestones, 14 machine steps, \
         15 configurations, constant over 25 sampled start states"
    );
    assert!(!accept("C1b", "claimed-schedule-length", pass, &detail));
}

// ---------------------------------------------------------------------------
// C2: with word addressing and a scratch half, random transformations of
// the external half still synthesize and verify exhaustively

#[test]
fn c2_word_addressed_synthesis_with_scratch_half() {
    let limits = Limits::default();
    let mut states_each = 0usize;
    for seed in 0..50u64 {
        let t = ExtTransformation::random(2, 1, 1000 + seed).unwrap();
        let w = synthesize_complete(2, 1, true, &t).unwrap();
        assert_eq!(w.ext_cells(), 2);
        assert_eq!(w.isa.dm_count(), 5);
        assert_eq!(residuals(&w.thread).len(), 8);
        let r = verify_membership(&class(&w), &w, &limits).unwrap();
        assert!(r.is_pass(), "seed {seed}: {:?}", r.failure);
        states_each = r.states_checked;
        assert_eq!(states_each, 32768);
        let tr = trace_invariant_check(&w, &w.isa.layout().zero_state(), &limits).unwrap();
        assert!(tr.is_pass(), "seed {seed}: {:?}", tr.fault);
        assert_eq!((tr.milestones, tr.steps), (8, 14));
    }
    let detail = format!(
        "50/50 random external maps synthesized under word addressing; \
         all {states_each} start states replayed per map"
    );
    assert!(accept("C2", "word-addressed-scratch-half", true, &detail));
}

// ---------------------------------------------------------------------------
// C3: dropping one operating unit bit quadruples the instruction set,
// at most sextuples the residual count, at most doubles the step count,
// and preserves every thread's behavior on both bit assumptions

#[test]
fn c3_unit_bit_removal_preserves_behavior() {
    let limits = Limits::default();
    let m = random_machine(2, 2, 7);
    let r = reduce_instruction_set(&m, &limits).unwrap();
    assert_eq!(r.reduced.dm_count(), 4 * m.dm_count());

    let actions = ["op0", "op1", "load:0", "store:0"];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut replayed = 0usize;
    for round in 0..20 {
        let p = random_spec(&mut rng, &actions, None);
        let pair = transform_pair(&p, &r.names, &BTreeSet::new());
        let v = verify_reduction(&m, &p, &r, &pair, &BTreeSet::new(), &limits).unwrap();
        assert!(v.is_pass(), "round {round}: {:?}", v.fault);
        assert_eq!(v.instructions, (8, 8));
        let bound = 6 * residuals(&p).len();
        for k in 0..2 {
            assert!(v.pair_sets[k], "round {round} bit {k}");
            assert!(v.residuals[k].0 <= bound, "round {round} bit {k}");
            assert_eq!(v.residuals[k].1, bound);
        }
        assert!(v.steps_within_double, "round {round}");
        replayed = v.replayed;
        assert_eq!(replayed as u128, m.layout().state_count());
    }
    let detail = format!(
        "20/20 random threads replay in lockstep over {replayed} states on both \
         assumptions; instructions 8 = 4x2 exactly, residuals within 6x, steps within 2x"
    );
    assert!(accept("C3", "one-bit-unit-reduction", true, &detail));
}

// ---------------------------------------------------------------------------
// C4: iterating the reduction empties the operating unit; a selector
// thread per original unit content preserves behavior on a unit-free
// machine

#[test]
fn c4_full_unit_removal_preserves_behavior() {
    let limits = Limits::default();
    let m = random_machine(2, 1, 9);
    let p = parse_thread(
        "root X\nX = Y <load:0> S\nY = Z <op0> S\nZ = S <store:0> S\nS = stop\n",
    )
    .unwrap();
    let z = reduce_to_zero(&m, &p, false, &limits).unwrap();
    assert_eq!(z.machine.params().ous, 0);
    assert_eq!(z.stages.len(), 2);
    assert_eq!(z.selector.len(), 4);
    let rep = verify_zero_reduction(&m, &p, &z, &limits).unwrap();
    assert!(rep.is_pass(), "{:?}", rep.failures);
    assert_eq!(rep.entries, 4);

    // the same pipeline carries a two-bit-unit word map program down to a
    // machine with no unit at all
    let mut budgets = Vec::new();
    for t in [
        ExtTransformation::identity(1, 1).unwrap(),
        ExtTransformation::increment(1, 1).unwrap(),
    ] {
        let zw = synthesize_zero_ou(&t, &limits).unwrap();
        assert!(zw.is_pass(), "{:?}", zw.failure);
        assert_eq!(zw.zero.machine.params().ous, 0);
        assert_eq!(zw.selector, (4, 4));
        budgets.push(zw.instructions);
    }
    assert_eq!(budgets, vec![(80, 80), (80, 80)]);
    let detail = "2-bit unit emptied in 2 stages; 4/4 selector entries replay \
                  equivalently; word map programs land at 80 = 5*16 instructions";
    assert!(accept("C4", "unit-emptied-entirely", true, detail));
}

// ---------------------------------------------------------------------------
// C5: when a thread starts bit-blind and the bit never reaches data
// memory, a single transformed thread under one assumption suffices

#[test]
fn c5_single_assumption_covers_bit_blind_threads() {
    let limits = Limits::default();
    // echo replies the load register, setb writes the unit bit without
    // ever letting it influence a reply or a store
    let echo = table("echo", vec![ReplyReg], |_, ld| vec![ld]);
    let setb = table("setb", vec![Ou(0), ReplyReg], |_, ld| vec![ld, 1]);
    let m = build_isa(
        IsaParams { aw: 1, wl: 1, ous: 1, nrpl: 1, nrps: 1 },
        vec![echo, setb],
    )
    .unwrap();
    let r = reduce_instruction_set(&m, &limits).unwrap();

    let actions = ["echo", "setb", "load:0", "store:0"];
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for round in 0..20 {
        let p = random_spec(&mut rng, &actions, Some("load:0"));
        let one = single_thread_sufficiency(&m, &p, &r, &limits).unwrap();
        let one = one.unwrap_or_else(|| panic!("round {round}: no single thread found"));
        assert!(one.thread.root().is_decoration_of(p.root(), 0, one.subscript));
        // the pair construction agrees, so the single thread is a strict
        // saving, not a different answer
        let pair = transform_pair(&p, &r.names, &BTreeSet::new());
        let v = verify_reduction(&m, &p, &r, &pair, &BTreeSet::new(), &limits).unwrap();
        assert!(v.is_pass(), "round {round}: {:?}", v.fault);
    }
    let detail = "20/20 threads rooted at a load are covered by one transformed \
                  thread under a single bit assumption";
    assert!(accept("C5", "single-assumption-cover", true, detail));
}

// ---------------------------------------------------------------------------
// C6: exact counting shows the bounded program family cannot realize all
// external transformations anywhere on the budget grid

#[test]
fn c6_exact_count_defeats_bounded_programs() {
    let mut cells = 0;
    for aw in 2..=8u32 {
        for wl in 3..=8u32 {
            let ems = external_cells(aw, true) * wl;
            let p = TpfcParams {
                aw,
                wl,
                ous: ems / 2,
                iss: (1 << wl) - 4,
                ssb: 1 << (aw - 2),
                waf: true,
            };
            let c = incompleteness_check(&p).unwrap();
            assert!(c.applicable, "aw {aw} wl {wl}");
            assert!(c.is_incomplete(), "aw {aw} wl {wl}");
            let chain = c.thread_chain.expect("standard budget is in scope");
            assert!(chain[0], "aw {aw} wl {wl}: thread count vs majorant");
            cells += 1;
        }
    }
    assert_eq!(cells, 42);

    // the closed-form count is the count: cross-check against direct
    // exponentiation wherever the full number fits in memory
    let mut points = 0;
    for (aw, wl) in [(0u32, 1u32), (0, 2), (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3), (2, 4)]
    {
        let bits = (1u64 << aw) * wl as u64;
        let states = BigUint::from(1u8) << bits;
        let naive = states.pow((1u64 << bits) as u32);
        assert_eq!(count_transformations(aw, wl), ExactNat::value(naive), "aw {aw} wl {wl}");
        points += 1;
    }
    let detail = format!(
        "{cells}/{cells} budget grid cells INCOMPLETE by exact comparison; \
         closed-form count equals direct exponentiation at {points} small points"
    );
    assert!(accept("C6", "incompleteness-by-counting", true, &detail));
}

#[test]
fn c6_bound_chain_narrows_at_wide_addresses() {
    // the two-link bound chain (thread count <= majorant <= external state
    // count) is claimed across the whole grid; the second link fails
    // whenever wl < 2*aw - 4, though the verdict itself never depends on it
    let mut corners = Vec::new();
    for aw in 2..=8u32 {
        for wl in 3..=8u32 {
            let ems = external_cells(aw, true) * wl;
            let p = TpfcParams {
                aw,
                wl,
                ous: ems / 2,
                iss: (1 << wl) - 4,
                ssb: 1 << (aw - 2),
                waf: true,
            };
            let c = incompleteness_check(&p).unwrap();
            let chain = c.thread_chain.unwrap();
            assert_eq!(chain[1], wl >= 2 * aw - 4, "aw {aw} wl {wl}");
            if !chain[1] {
                corners.push((aw, wl));
            }
        }
    }
    let pass = corners.is_empty();
    let detail = format!(
        "majorant exceeds the external state count at {} of 42 cells \
         (exactly those with wl < 2*aw-4, e.g. aw=8 wl=3); every verdict \
         still INCOMPLETE via the direct comparison",
        corners.len()
    );
    assert!(!accept("C6b", "full-bound-chain-on-grid", pass, &detail));
    assert_eq!(corners.len(), 21);
}

// ---------------------------------------------------------------------------
// C7: the semantic ground rules hold on every machine the other criteria
// touch: computed regions satisfy coincidence, load/store obey their
// defining equations, single-pass application agrees with the full
// computation, and residual counts never exceed equation counts

#[test]
fn c7_semantic_laws_hold_everywhere() {
    let limits = Limits::default();
    let mut machines: Vec<(String, LsIsaMachine)> = Vec::new();
    for seed in 0..3u64 {
        machines.push((format!("unit1 seed {seed}"), random_machine(1, 1, seed)));
    }
    machines.push(("unit2 two ops".into(), random_machine(2, 2, 7)));
    let t = ExtTransformation::identity(2, 1).unwrap();
    let w = synthesize_complete(1, 1, false, &t).unwrap();
    machines.push(("word map witness".into(), w.isa));

    let mut ops_checked = 0;
    for (tag, m) in &machines {
        for id in m.machine().action_ids() {
            let op = m.machine().operation(id).unwrap();
            let witness = check_coincidence(m.machine(), op, &limits).unwrap();
            assert_eq!(witness, None, "{tag}: {id}");
            ops_checked += 1;
        }
    }

    let mut ls_checked = 0;
    for seed in 0..3u64 {
        let m = random_machine(1, 1, seed);
        assert_eq!(check_load_store_equations(&m, &limits).unwrap(), None, "seed {seed}");
        ls_checked += 1;
    }
    let m2 = random_machine(2, 2, 7);
    assert_eq!(check_load_store_equations(&m2, &limits).unwrap(), None);
    ls_checked += 1;

    // single-pass application against the configuration-by-configuration run
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pool: Vec<_> = (0..4).map(|s| random_machine(1, 1, 200 + s)).collect();
    let actions = ["op0", "load:0", "store:0"];
    let mut runs = 0;
    for round in 0..10_000 {
        let m = &pool[round % pool.len()];
        let p = random_spec(&mut rng, &actions, None);
        let s = m.layout().random_state(&mut rng);
        let c = computation(&p, m.machine(), &s, &limits).unwrap();
        let applied = apply_thread(&p, m.machine(), &s, &limits).unwrap();
        match c.status {
            RunStatus::Converged { steps } => {
                assert_eq!(steps, c.path.len() - 1);
                assert!(applied.expect("converged").diff(c.last_state()).is_empty());
            }
            RunStatus::Deadlocked { .. } | RunStatus::Diverged { .. } => {
                assert_eq!(applied, None);
            }
        }
        runs += 1;
    }

    // residual counts stay within the equation count on random specs
    let mut specs = 0;
    for _ in 0..1_000 {
        let p = random_spec(&mut rng, &actions, None);
        let r = residuals(&p);
        assert!(r.len() <= p.spec().len());
        assert!(r.contains(&Residual::of(p.clone())));
        specs += 1;
    }

    let detail = format!(
        "coincidence on {ops_checked} operations over {} machines; load/store \
         equations exhaustive on {ls_checked} machines; {runs} single-pass runs \
         agree with full computations; {specs} random specs stay within the \
         residual bound",
        machines.len()
    );
    assert!(accept("C7", "semantic-ground-rules", true, &detail));
}
