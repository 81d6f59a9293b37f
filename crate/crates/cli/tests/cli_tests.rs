//! End-to-end tests against the compiled binary: exit codes, report text,
//! emitted files, and byte-identical JSON output.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lsisa::bta::text::parse_thread;
use lsisa::isa::config::{parse_machine, print_machine};
use lsisa::isa::{build_isa, random_dm_spec, DmTable, IsaParams};
use lsisa::maurer::MemoryElement::{Ou, ReplyReg};
use lsisa::tpfc::{print_transformation, ExtTransformation, TransformationSpec};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsisa")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("terminated by signal")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a one-address-bit, one-bit-word machine with `ous` unit bits and
/// `dms` seeded tables to `dir` and returns its path.
fn write_machine(dir: &Path, ous: u32, dms: u32, seed: u64) -> PathBuf {
    let p = IsaParams { aw: 1, wl: 1, ous, nrpl: 1, nrps: 1 };
    let tables: Vec<DmTable> = (0..dms)
        .map(|i| {
            let outputs: BTreeSet<_> = (0..ous).map(Ou).chain([ReplyReg]).collect();
            random_dm_spec(&p, format!("op{i}"), &outputs, seed * 100 + i as u64).unwrap()
        })
        .collect();
    let m = build_isa(p, tables).unwrap();
    let path = dir.join(format!("m{ous}_{dms}_{seed}.isa"));
    fs::write(&path, print_machine(&m)).unwrap();
    path
}

fn write_thread(dir: &Path, name: &str, text: &str) -> PathBuf {
    parse_thread(text).expect("fixture thread parses");
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn help_and_version_exit_zero_usage_errors_exit_one() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["simulate", "--no-such-flag"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
}

#[test]
fn simulate_runs_one_state_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 1, 3);
    let thread = write_thread(
        dir.path(),
        "t.txt",
        "root X\nX = Y <load:0> Y\nY = S <op0> S\nS = stop\n",
    );
    let m = parse_machine(&fs::read_to_string(&isa).unwrap()).unwrap();
    let state = dir.path().join("s.txt");
    fs::write(&state, m.layout().zero_state().dump()).unwrap();

    let o = run(&[
        "simulate",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check run: PASS"), "{text}");
    assert!(text.contains("count outcome = CONVERGED"), "{text}");
    assert!(text.contains("count length = 2"), "{text}");
    assert!(text.contains("final state:"), "{text}");

    let o = run(&[
        "simulate",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
        "--trace",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("0 X "), "{text}");
    assert!(text.contains("CONVERGED steps=2"), "{text}");
}

#[test]
fn simulate_stop_thread_has_length_zero() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 1, 4);
    let thread = write_thread(dir.path(), "t.txt", "root X\nX = stop\n");
    let m = parse_machine(&fs::read_to_string(&isa).unwrap()).unwrap();
    let state = dir.path().join("s.txt");
    fs::write(&state, m.layout().zero_state().dump()).unwrap();
    let o = run(&[
        "simulate",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--state",
        state.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("count length = 0"), "{}", stdout(&o));
}

#[test]
fn simulate_sweeps_every_state() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 1, 5);
    let thread = write_thread(dir.path(), "t.txt", "root X\nX = S <op0> S\nS = stop\n");
    let o = run(&[
        "simulate",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--all-states",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("count states = 256"), "{text}");
    assert!(text.contains("count converged = 256"), "{text}");

    // neither --state nor --all-states is a usage error
    let o = run(&[
        "simulate",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--all-states"), "{}", stderr(&o));
}

#[test]
fn simulate_missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let thread = write_thread(dir.path(), "t.txt", "root X\nX = stop\n");
    let o = run(&[
        "simulate",
        "--isa",
        "/nonexistent.isa",
        "--thread",
        thread.to_str().unwrap(),
        "--all-states",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("cannot read"), "{}", stderr(&o));
}

#[test]
fn synthesize_family_verifies_and_emits_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_isa = dir.path().join("w.isa");
    let out_thread = dir.path().join("w.txt");
    let o = run(&[
        "synthesize",
        "--aw",
        "1",
        "--wl",
        "1",
        "--family",
        "identity",
        "--out-isa",
        out_isa.to_str().unwrap(),
        "--out-thread",
        out_thread.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check membership: PASS"), "{text}");
    assert!(text.contains("check trace-schedule: PASS"), "{text}");
    assert!(text.contains("count instructions = 5"), "{text}");
    assert!(text.contains("count residuals = 8"), "{text}");
    assert!(text.contains("count milestones = 8"), "{text}");
    assert!(text.contains("count steps = 14"), "{text}");

    // the emitted files parse and carry the advertised shape
    let m = parse_machine(&fs::read_to_string(&out_isa).unwrap()).unwrap();
    assert_eq!(m.dm_count(), 5);
    let t = parse_thread(&fs::read_to_string(&out_thread).unwrap()).unwrap();
    assert_eq!(t.spec().len(), 8);
}

#[test]
fn synthesize_accepts_a_transformation_file_with_matching_headers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TransformationSpec {
        aw: 1,
        wl: 1,
        waf: false,
        map: ExtTransformation::swap_first_two(2, 1).unwrap(),
    };
    let path = dir.path().join("swap.map");
    fs::write(&path, print_transformation(&spec)).unwrap();

    let o = run(&["synthesize", "--aw", "1", "--wl", "1", "--transformation", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("check membership: PASS"));

    // header mismatch against the flags
    let o = run(&["synthesize", "--aw", "2", "--wl", "1", "--transformation", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("flags say"), "{}", stderr(&o));
}

#[test]
fn synthesize_sweeps_all_transformations_of_a_tiny_memory() {
    // one cell, one bit: four maps in total
    let o = run(&["synthesize", "--aw", "0", "--wl", "1", "--all-transformations"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("count transformations = 4"), "{text}");
    assert!(text.contains("count verified = 4"), "{text}");
    assert!(text.contains("check membership: PASS (4/4 verified)"), "{text}");
}

#[test]
fn synthesize_rejects_conflicting_or_missing_sources() {
    let o = run(&["synthesize", "--aw", "1", "--wl", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("exactly one"), "{}", stderr(&o));
    let o = run(&["synthesize", "--aw", "1", "--wl", "1", "--family", "nosuch"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown family"), "{}", stderr(&o));
    // constant image out of range for one-bit words
    let o = run(&["synthesize", "--aw", "1", "--wl", "1", "--family", "constant:9"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn reduce_drops_one_bit_and_emits_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 2, 6);
    let thread = write_thread(
        dir.path(),
        "t.txt",
        "root X\nX = Y <load:0> Y\nY = S <op0> D\nS = Z <op1> Z\nZ = stop\nD = dead\n",
    );
    let emit = dir.path().join("out");
    let o = run(&[
        "reduce",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--emit-dir",
        emit.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for check in ["pair-set-0", "pair-set-1", "lockstep-replay", "instruction-bound", "residual-bound", "step-bound"] {
        assert!(text.contains(&format!("check {check}: PASS")), "{check} in:\n{text}");
    }
    assert!(text.contains("count instructions-after = 8"), "{text}");

    let reduced = parse_machine(&fs::read_to_string(emit.join("reduced.isa")).unwrap()).unwrap();
    assert_eq!(reduced.params().ous, 0);
    assert_eq!(reduced.dm_count(), 8);
    for k in 0..2 {
        let t = fs::read_to_string(emit.join(format!("thread_{k}.txt"))).unwrap();
        parse_thread(&t).unwrap();
    }
}

#[test]
fn reduce_to_zero_emits_a_selector_per_unit_content() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 2, 1, 8);
    let thread = write_thread(dir.path(), "t.txt", "root X\nX = S <op0> S\nS = stop\n");
    let emit = dir.path().join("out");
    let o = run(&[
        "reduce",
        "--isa",
        isa.to_str().unwrap(),
        "--thread",
        thread.to_str().unwrap(),
        "--to-zero",
        "--emit-dir",
        emit.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check selector-equivalence: PASS (4 assignments)"), "{text}");
    assert!(text.contains("count stages = 2"), "{text}");
    for tag in ["00", "01", "10", "11"] {
        let t = fs::read_to_string(emit.join(format!("thread_{tag}.txt"))).unwrap();
        parse_thread(&t).unwrap();
    }
}

#[test]
fn reduce_needs_an_operating_unit() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 0, 1, 9);
    let thread = write_thread(dir.path(), "t.txt", "root X\nX = S <op0> S\nS = stop\n");
    let o = run(&["reduce", "--isa", isa.to_str().unwrap(), "--thread", thread.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error:"), "{}", stderr(&o));
}

#[test]
fn count_point_reports_incompleteness() {
    let o = run(&[
        "count", "--aw", "2", "--wl", "3", "--ous", "3", "--iss", "4", "--ssb", "1", "--waf",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check incompleteness: PASS"), "{text}");
    assert!(text.trim_end().ends_with("INCOMPLETE"), "{text}");
    assert!(text.contains("count external-bits = 6"), "{text}");
}

#[test]
fn count_outside_the_hypotheses_exits_three() {
    let o = run(&["count", "--aw", "1", "--wl", "1", "--ous", "1", "--iss", "1", "--ssb", "1"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(stdout(&o).contains("check incompleteness: NOT-APPLICABLE"), "{}", stdout(&o));
}

#[test]
fn count_grid_covers_the_standard_budget() {
    let o = run(&["count", "--grid"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check grid: PASS (42 parameter points evaluated)"), "{text}");
    assert!(text.contains("count grid-cells = 42"), "{text}");
    // one-bit and two-bit words fall outside the budget's parameter domain
    assert!(text.contains("aw 2 wl 2 iss 0"), "{text}");
    assert!(text.contains("outside the parameter domain"), "{text}");
    assert!(text.contains("aw 8 wl 8"), "{text}");
}

#[test]
fn json_reports_are_byte_identical_without_timings() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let o1 = run(&["count", "--grid", "--out", a.to_str().unwrap()]);
    let o2 = run(&["count", "--grid", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o1), 0);
    assert_eq!(code(&o2), 0);
    assert_eq!(o1.stdout, o2.stdout);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let json = fs::read_to_string(&a).unwrap();
    assert!(!json.contains("elapsed_ms"), "{json}");

    let c = dir.path().join("c.json");
    let o3 = run(&["count", "--grid", "--timings", "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o3), 0);
    assert!(fs::read_to_string(&c).unwrap().contains("elapsed_ms"));
    assert!(stdout(&o3).contains("elapsed-ms:"));
}

#[test]
fn validate_passes_on_a_strict_machine() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 2, 11);
    let o = run(&["validate", "--isa", isa.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("check regions op0: PASS"), "{text}");
    assert!(text.contains("check regions op1: PASS"), "{text}");
    assert!(text.contains("check load-store-behavior: PASS"), "{text}");
    assert!(text.contains("check coincidence: PASS"), "{text}");
}

#[test]
fn validate_on_an_oversized_machine_is_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 1, 12);
    let o = run(&["validate", "--isa", isa.to_str().unwrap(), "--max-states", "4"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    assert!(
        stdout(&o).contains("check load-store-behavior: NOT-APPLICABLE"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn regions_prints_computed_regions_per_action() {
    let dir = tempfile::tempdir().unwrap();
    let isa = write_machine(dir.path(), 1, 1, 13);
    let o = run(&["regions", "--isa", isa.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    for action in ["op0:", "load:0:", "store:0:"] {
        assert!(text.contains(action), "{action} in:\n{text}");
    }
    assert!(text.contains("ireg {"), "{text}");
    assert!(text.contains("oreg {"), "{text}");

    let o = run(&["regions", "--isa", isa.to_str().unwrap(), "--action", "op0"]);
    assert_eq!(code(&o), 0);
    assert!(!stdout(&o).contains("load:0:"));

    let o = run(&["regions", "--isa", isa.to_str().unwrap(), "--action", "bogus"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no action named bogus"), "{}", stderr(&o));
}
