//! Command line front end for the strict load/store machine library: run
//! threads against machines, synthesize and verify transformation witnesses,
//! reduce operating units, and print counting certificates.
//!
//! Exit codes: 0 all checks pass, 1 parse or usage error, 2 a verification
//! check failed, 3 a check was not applicable to the parameters.

mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;
use std::time::Instant;

use clap::{Parser, Subcommand};

use lsisa::bta::text::{parse_thread, print_thread};
use lsisa::bta::{residuals, ThreadHandle};
use lsisa::isa::config::{parse_machine, print_machine};
use lsisa::isa::{check_load_store_equations, validate_dm_regions, LsIsaMachine};
use lsisa::maurer::{
    check_coincidence, compute_input_region, compute_output_region, computation, Limits,
    MachineState, MemoryElement, RegionKind, RunStatus,
};
use lsisa::reduce::{
    dms_ignoring, reduce_instruction_set, reduce_to_zero, transform_pair, verify_reduction,
    verify_zero_reduction,
};
use lsisa::tpfc::counting::{count_transformations, incompleteness_check};
use lsisa::tpfc::{
    external_cells, parse_transformation, synthesize_complete, trace_invariant_check,
    verify_membership, CompletenessWitness, ExtTransformation, TpfcParams, TransformationSpec,
};

use report::{RunReport, Status};

#[derive(Parser)]
#[command(name = "lsisa", version, about = "Strict load/store machine workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Seed for every randomized construction.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Refuse exhaustive sweeps beyond this many states.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    max_states: u64,
    /// Abort a single run after this many steps.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    step_cap: usize,
    /// Also write the report as JSON to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include elapsed time in the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a thread against a machine from one state or from every state.
    Simulate {
        /// Machine configuration file.
        #[arg(long)]
        isa: PathBuf,
        /// Thread specification file.
        #[arg(long)]
        thread: PathBuf,
        /// Initial state file; omit with --all-states.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Sweep every machine state.
        #[arg(long)]
        all_states: bool,
        /// Print the full configuration trace (single-state mode).
        #[arg(long)]
        trace: bool,
    },
    /// Build the five-instruction machine and eight-state thread for a
    /// transformation, and verify it from every machine state.
    Synthesize {
        #[arg(long)]
        aw: u32,
        #[arg(long)]
        wl: u32,
        /// Check only the first half of data memory; the rest is scratch.
        #[arg(long)]
        waf: bool,
        /// Transformation file (headers must match --aw/--wl/--waf).
        #[arg(long)]
        transformation: Option<PathBuf>,
        /// Named transformation: identity, swap, increment, constant:N,
        /// random (seeded by --seed).
        #[arg(long)]
        family: Option<String>,
        /// Verify every transformation of the external memory.
        #[arg(long)]
        all_transformations: bool,
        /// Write the synthesized machine configuration here.
        #[arg(long)]
        out_isa: Option<PathBuf>,
        /// Write the thread specification here.
        #[arg(long)]
        out_thread: Option<PathBuf>,
    },
    /// Remove the highest operating unit bit (or all bits) and check that
    /// transformed threads preserve data memory behavior.
    Reduce {
        #[arg(long)]
        isa: PathBuf,
        #[arg(long)]
        thread: PathBuf,
        /// Iterate down to an empty operating unit.
        #[arg(long)]
        to_zero: bool,
        /// Step probe-free over instructions that provably ignore the
        /// removed bit.
        #[arg(long)]
        optimize: bool,
        /// Write reduced machine and transformed threads into this
        /// directory.
        #[arg(long)]
        emit_dir: Option<PathBuf>,
    },
    /// Exact counting certificate: can the parameter class reach every
    /// transformation of the checked memory?
    Count {
        #[arg(long, required_unless_present = "grid")]
        aw: Option<u32>,
        #[arg(long, required_unless_present = "grid")]
        wl: Option<u32>,
        #[arg(long, default_value_t = 0)]
        ous: u32,
        #[arg(long, default_value_t = 1)]
        iss: u32,
        #[arg(long, default_value_t = 1)]
        ssb: u32,
        #[arg(long)]
        waf: bool,
        /// Sweep the standard parameter grid instead of a single point.
        #[arg(long)]
        grid: bool,
    },
    /// Print the computed input and output regions of a machine's
    /// operations.
    Regions {
        #[arg(long)]
        isa: PathBuf,
        /// Restrict to one action.
        #[arg(long)]
        action: Option<String>,
    },
    /// Check a machine against the strict load/store constraints: region
    /// bounds per instruction, load/store behavior, reply coincidence.
    Validate {
        #[arg(long)]
        isa: PathBuf,
        /// Random probes per instruction when the machine is too large to
        /// sweep.
        #[arg(long, default_value_t = 1024)]
        samples: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            exit(code);
        }
    };
    let started = Instant::now();
    let timings = cli.timings;
    let out = cli.out.clone();
    match run(cli) {
        Ok(mut report) => {
            if timings {
                report.elapsed_ms = Some(started.elapsed().as_millis());
            }
            print!("{}", report.render());
            if let Some(path) = out {
                if let Err(e) = fs::write(&path, report.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    exit(1);
                }
            }
            exit(report.exit_code());
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            exit(1);
        }
    }
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load_machine(path: &Path) -> Result<LsIsaMachine, String> {
    parse_machine(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_thread(path: &Path) -> Result<ThreadHandle, String> {
    parse_thread(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> Result<RunReport, String> {
    let limits = Limits { max_states: cli.max_states, step_cap: cli.step_cap };
    match cli.cmd {
        Cmd::Simulate { isa, thread, state, all_states, trace } => {
            cmd_simulate(&limits, &isa, &thread, state.as_deref(), all_states, trace)
        }
        Cmd::Synthesize {
            aw,
            wl,
            waf,
            transformation,
            family,
            all_transformations,
            out_isa,
            out_thread,
        } => cmd_synthesize(
            &limits,
            cli.seed,
            aw,
            wl,
            waf,
            transformation.as_deref(),
            family.as_deref(),
            all_transformations,
            out_isa.as_deref(),
            out_thread.as_deref(),
        ),
        Cmd::Reduce { isa, thread, to_zero, optimize, emit_dir } => {
            cmd_reduce(&limits, &isa, &thread, to_zero, optimize, emit_dir.as_deref())
        }
        Cmd::Count { aw, wl, ous, iss, ssb, waf, grid } => {
            cmd_count(aw, wl, ous, iss, ssb, waf, grid)
        }
        Cmd::Regions { isa, action } => cmd_regions(&limits, &isa, action.as_deref()),
        Cmd::Validate { isa, samples } => cmd_validate(&limits, cli.seed, &isa, samples),
    }
}

fn cmd_simulate(
    limits: &Limits,
    isa: &Path,
    thread: &Path,
    state: Option<&Path>,
    all_states: bool,
    trace: bool,
) -> Result<RunReport, String> {
    let m = load_machine(isa)?;
    let p = load_thread(thread)?;
    let mut rep = RunReport::new("simulate");
    rep.param("isa", isa.display());
    rep.param("thread", thread.display());

    if all_states {
        limits.check_states(m.layout()).map_err(|e| e.to_string())?;
        let (mut conv, mut dead, mut div) = (0u64, 0u64, 0u64);
        let (mut min_len, mut max_len) = (usize::MAX, 0usize);
        for s in m.layout().states() {
            let c = computation(&p, m.machine(), &s, limits).map_err(|e| e.to_string())?;
            match c.status {
                RunStatus::Converged { steps } => {
                    conv += 1;
                    min_len = min_len.min(steps);
                    max_len = max_len.max(steps);
                }
                RunStatus::Deadlocked { .. } => dead += 1,
                RunStatus::Diverged { .. } => div += 1,
            }
        }
        rep.count("states", conv + dead + div);
        rep.count("converged", conv);
        rep.count("deadlocked", dead);
        rep.count("diverged", div);
        if conv > 0 {
            rep.count("length-min", min_len);
            rep.count("length-max", max_len);
        }
        rep.verdict("sweep", Status::Pass, format!("{} states run", conv + dead + div));
        return Ok(rep);
    }

    let state = state.ok_or("give --state <file> or --all-states")?;
    let s0 = MachineState::parse(m.layout(), &read(state)?).map_err(|e| e.to_string())?;
    let c = computation(&p, m.machine(), &s0, limits).map_err(|e| e.to_string())?;
    let (status, detail) = match c.status {
        RunStatus::Converged { steps } => {
            rep.count("length", steps);
            ("CONVERGED", format!("{steps} steps"))
        }
        RunStatus::Deadlocked { steps } => {
            rep.count("length", steps);
            ("DEADLOCKED", format!("applied result undefined after {steps} steps"))
        }
        RunStatus::Diverged { lasso_start } => {
            rep.count("lasso-start", lasso_start);
            ("DIVERGED", format!("lasso of {} configurations", c.path.len() - 1 - lasso_start))
        }
    };
    rep.count("outcome", status);
    rep.verdict("run", Status::Pass, detail);
    rep.body = if trace {
        c.render_trace()
    } else {
        format!("final state:\n{}", c.last_state().dump())
    };
    Ok(rep)
}

fn family_map(name: &str, cells: u32, wl: u32, seed: u64) -> Result<ExtTransformation, String> {
    let build = match name {
        "identity" => ExtTransformation::identity(cells, wl),
        "swap" => ExtTransformation::swap_first_two(cells, wl),
        "increment" => ExtTransformation::increment(cells, wl),
        "random" => ExtTransformation::random(cells, wl, seed),
        _ => match name.strip_prefix("constant:") {
            Some(n) => {
                let image = n.parse::<u64>().map_err(|_| format!("bad constant image {n}"))?;
                ExtTransformation::constant(cells, wl, image)
            }
            None => return Err(format!("unknown family {name}")),
        },
    };
    build.map_err(|e| e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn cmd_synthesize(
    limits: &Limits,
    seed: u64,
    aw: u32,
    wl: u32,
    waf: bool,
    transformation: Option<&Path>,
    family: Option<&str>,
    all_transformations: bool,
    out_isa: Option<&Path>,
    out_thread: Option<&Path>,
) -> Result<RunReport, String> {
    if waf && aw == 0 {
        return Err("--waf needs --aw of at least 1".into());
    }
    let cells = external_cells(aw, waf);
    let mut rep = RunReport::new("synthesize");
    rep.param("aw", aw);
    rep.param("wl", wl);
    rep.param("waf", if waf { "T" } else { "F" });

    let class = |w: &CompletenessWitness| TpfcParams {
        aw,
        wl,
        ous: w.isa.params().ous,
        iss: 5,
        ssb: 8,
        waf,
    };

    if all_transformations {
        let all = ExtTransformation::enumerate(cells, wl).map_err(|e| e.to_string())?;
        let total = all.len();
        let mut passed = 0;
        let mut first_failure = None;
        for t in &all {
            let w = synthesize_complete(aw, wl, waf, t).map_err(|e| e.to_string())?;
            let r = verify_membership(&class(&w), &w, limits).map_err(|e| e.to_string())?;
            if r.is_pass() {
                passed += 1;
            } else if first_failure.is_none() {
                first_failure = r.failure;
            }
        }
        rep.count("transformations", total);
        rep.count("verified", passed);
        rep.verdict(
            "membership",
            Status::of(passed == total),
            match first_failure {
                None => format!("{passed}/{total} verified"),
                Some(f) => f,
            },
        );
        return Ok(rep);
    }

    let spec = match (transformation, family) {
        (Some(path), None) => {
            let spec = parse_transformation(&read(path)?).map_err(|e| e.to_string())?;
            if spec.aw != aw || spec.wl != wl || spec.waf != waf {
                return Err(format!(
                    "{} is for aw {} wl {} waf {}, flags say aw {aw} wl {wl} waf {}",
                    path.display(),
                    spec.aw,
                    spec.wl,
                    if spec.waf { "T" } else { "F" },
                    if waf { "T" } else { "F" }
                ));
            }
            spec
        }
        (None, Some(name)) => TransformationSpec {
            aw,
            wl,
            waf,
            map: family_map(name, cells, wl, seed)?,
        },
        _ => return Err("give exactly one of --transformation, --family, --all-transformations".into()),
    };

    let w = synthesize_complete(aw, wl, waf, &spec.map).map_err(|e| e.to_string())?;
    rep.count("ous", w.isa.params().ous);
    rep.count("instructions", w.isa.dm_count());
    rep.count("residuals", residuals(&w.thread).len());
    rep.count("machine-states", w.isa.layout().state_count());

    let r = verify_membership(&class(&w), &w, limits).map_err(|e| e.to_string())?;
    rep.count("states-checked", r.states_checked);
    rep.verdict(
        "membership",
        Status::of(r.is_pass()),
        r.failure.clone().unwrap_or_else(|| format!("{} states", r.states_checked)),
    );
    let s0 = w.isa.layout().zero_state();
    let tr = trace_invariant_check(&w, &s0, limits).map_err(|e| e.to_string())?;
    rep.count("milestones", tr.milestones);
    rep.count("steps", tr.steps);
    rep.verdict(
        "trace-schedule",
        Status::of(tr.is_pass()),
        tr.fault.clone().unwrap_or_else(|| format!("{} milestones, {} steps", tr.milestones, tr.steps)),
    );

    if let Some(path) = out_isa {
        write_file(path, &print_machine(&w.isa))?;
    }
    if let Some(path) = out_thread {
        write_file(path, &print_thread(&w.thread))?;
    }
    Ok(rep)
}

fn cmd_reduce(
    limits: &Limits,
    isa: &Path,
    thread: &Path,
    to_zero: bool,
    optimize: bool,
    emit_dir: Option<&Path>,
) -> Result<RunReport, String> {
    let m = load_machine(isa)?;
    let p = load_thread(thread)?;
    let mut rep = RunReport::new("reduce");
    rep.param("isa", isa.display());
    rep.param("thread", thread.display());
    rep.param("to-zero", to_zero);
    rep.param("optimize", optimize);

    if let Some(dir) = emit_dir {
        fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    }

    if to_zero {
        let zr = reduce_to_zero(&m, &p, optimize, limits).map_err(|e| e.to_string())?;
        let zrep = verify_zero_reduction(&m, &p, &zr, limits).map_err(|e| e.to_string())?;
        rep.count("stages", zr.stages.len());
        rep.count("selector-entries", zr.selector.len());
        rep.count("instructions-before", m.dm_count());
        rep.count("instructions-after", zr.machine.dm_count());
        rep.verdict(
            "selector-equivalence",
            Status::of(zrep.is_pass()),
            if zrep.is_pass() {
                format!("{} assignments", zrep.entries)
            } else {
                format!("failing assignments: {:?}", zrep.failures)
            },
        );
        if let Some(dir) = emit_dir {
            write_file(&dir.join("reduced.isa"), &print_machine(&zr.machine))?;
            for (key, q) in &zr.selector {
                let tag: String = key.iter().map(u64::to_string).collect::<Vec<_>>().join("");
                write_file(&dir.join(format!("thread_{tag}.txt")), &print_thread(q))?;
            }
        }
        return Ok(rep);
    }

    let r = reduce_instruction_set(&m, limits).map_err(|e| e.to_string())?;
    let single_step = if optimize {
        dms_ignoring(&m, r.removed, limits).map_err(|e| e.to_string())?
    } else {
        BTreeSet::new()
    };
    if optimize {
        rep.count("probe-free-instructions", single_step.len());
    }
    let pair = transform_pair(&p, &r.names, &single_step);
    let v = verify_reduction(&m, &p, &r, &pair, &single_step, limits).map_err(|e| e.to_string())?;
    rep.count("removed-bit", r.removed);
    rep.count("instructions-before", m.dm_count());
    rep.count("instructions-after", r.reduced.dm_count());
    rep.count("residuals-original", residuals(&p).len());
    rep.count("residuals-assume-0", v.residuals[0].0);
    rep.count("residuals-assume-1", v.residuals[1].0);
    for k in 0..2 {
        rep.verdict(
            &format!("pair-set-{k}"),
            Status::of(v.pair_sets[k]),
            format!("{} pairs", v.pair_counts[k]),
        );
    }
    rep.verdict(
        "lockstep-replay",
        Status::of(v.fault.is_none()),
        v.fault.clone().unwrap_or_else(|| format!("{} states", v.replayed)),
    );
    rep.verdict(
        "instruction-bound",
        Status::of(v.instructions.0 == v.instructions.1),
        format!("{} of {}", v.instructions.0, v.instructions.1),
    );
    rep.verdict(
        "residual-bound",
        Status::of(v.residuals.iter().all(|&(got, bound)| got <= bound)),
        format!("{}/{} and {}/{}", v.residuals[0].0, v.residuals[0].1, v.residuals[1].0, v.residuals[1].1),
    );
    rep.verdict(
        "step-bound",
        Status::of(v.steps_within_double),
        "every replayed run within twice the original steps",
    );
    if let Some(dir) = emit_dir {
        write_file(&dir.join("reduced.isa"), &print_machine(&r.reduced))?;
        write_file(&dir.join("thread_0.txt"), &print_thread(&pair.p0))?;
        write_file(&dir.join("thread_1.txt"), &print_thread(&pair.p1))?;
    }
    Ok(rep)
}

fn cmd_count(
    aw: Option<u32>,
    wl: Option<u32>,
    ous: u32,
    iss: u32,
    ssb: u32,
    waf: bool,
    grid: bool,
) -> Result<RunReport, String> {
    let mut rep = RunReport::new("count");
    if grid {
        let mut body = String::new();
        let mut all_incomplete = true;
        let mut cells = 0;
        for aw in 2..=8u32 {
            for wl in 2..=8u32 {
                let iss = (1u64 << wl) - 4;
                let ssb = 1u32 << (aw - 2);
                let params = TpfcParams {
                    aw,
                    wl,
                    ous: (external_cells(aw, true) as u64 * wl as u64 / 2) as u32,
                    iss: iss as u32,
                    ssb,
                    waf: true,
                };
                let line = match incompleteness_check(&params) {
                    Ok(c) => {
                        cells += 1;
                        if c.is_incomplete() {
                            "INCOMPLETE".to_string()
                        } else {
                            all_incomplete = false;
                            "NOT-APPLICABLE".to_string()
                        }
                    }
                    Err(e) => format!("outside the parameter domain ({e})"),
                };
                body.push_str(&format!("aw {aw} wl {wl} iss {iss} ssb {ssb}: {line}\n"));
            }
        }
        rep.count("grid-cells", cells);
        rep.verdict(
            "grid",
            Status::of(all_incomplete),
            format!("{cells} parameter points evaluated"),
        );
        rep.body = body;
        return Ok(rep);
    }

    let (aw, wl) = (aw.ok_or("--aw is required")?, wl.ok_or("--wl is required")?);
    let params = TpfcParams { aw, wl, ous, iss, ssb, waf };
    rep.param("aw", aw);
    rep.param("wl", wl);
    rep.param("ous", ous);
    rep.param("iss", iss);
    rep.param("ssb", ssb);
    rep.param("waf", if waf { "T" } else { "F" });
    rep.count("all-transformations", count_transformations(aw, wl));
    let c = incompleteness_check(&params).map_err(|e| e.to_string())?;
    rep.count("external-bits", c.external_bits);
    rep.count("total-transformations", &c.total);
    rep.count("per-instruction-operations", &c.per_instruction_ops);
    rep.count("per-thread-transformations", &c.per_thread_bound);
    rep.count("thread-count-bound", &c.thread_count_bound);
    rep.count("thread-count-majorant", &c.thread_count_majorant);
    rep.count("applicable-threads-bound", &c.applicable_threads_bound);
    rep.count("achievable-transformations", &c.achievable_bound);
    rep.verdict(
        "incompleteness",
        if c.is_incomplete() { Status::Pass } else { Status::NotApplicable },
        if c.is_incomplete() {
            "the budget cannot reach every transformation"
        } else {
            "the counting hypotheses do not cover these parameters"
        },
    );
    rep.body = c.to_string();
    Ok(rep)
}

fn cmd_regions(limits: &Limits, isa: &Path, action: Option<&str>) -> Result<RunReport, String> {
    let m = load_machine(isa)?;
    let mut rep = RunReport::new("regions");
    rep.param("isa", isa.display());
    let fmt_set = |set: &std::collections::BTreeSet<MemoryElement>| {
        let items: Vec<String> = set.iter().map(|e| e.to_string()).collect();
        format!("{{{}}}", items.join(", "))
    };
    let mut body = String::new();
    let mut found = false;
    for id in m.machine().action_ids() {
        if action.is_some_and(|a| a != id.as_str()) {
            continue;
        }
        found = true;
        let op = m.machine().operation(id).expect("listed action");
        let oreg = compute_output_region(m.machine(), op, limits).map_err(|e| e.to_string())?;
        let ireg = compute_input_region(m.machine(), op, limits).map_err(|e| e.to_string())?;
        body.push_str(&format!("{id}:\n  ireg {}\n  oreg {}\n", fmt_set(&ireg), fmt_set(&oreg)));
    }
    if !found {
        return Err(match action {
            Some(a) => format!("no action named {a}"),
            None => "machine has no actions".into(),
        });
    }
    rep.verdict("regions", Status::Pass, "computed exhaustively");
    rep.body = body;
    Ok(rep)
}

fn cmd_validate(
    limits: &Limits,
    seed: u64,
    isa: &Path,
    samples: usize,
) -> Result<RunReport, String> {
    let m = load_machine(isa)?;
    let mut rep = RunReport::new("validate");
    rep.param("isa", isa.display());
    rep.count("instructions", m.dm_count());
    rep.count("machine-states", m.layout().state_count());

    let regions = validate_dm_regions(&m, limits, samples, seed).map_err(|e| e.to_string())?;
    for check in &regions.checks {
        let detail = if check.is_pass() {
            match (&check.input_region, &check.output_region) {
                (Some(i), Some(o)) => format!("ireg {} elements, oreg {} elements", i.len(), o.len()),
                _ => "sampled within bounds".to_string(),
            }
        } else {
            let items: Vec<String> = check
                .offending
                .iter()
                .map(|(e, k)| {
                    let side = match k {
                        RegionKind::Input => "reads",
                        RegionKind::Output => "writes",
                    };
                    format!("{side} {e}")
                })
                .collect();
            format!("out of bounds: {}", items.join(", "))
        };
        rep.verdict(&format!("regions {}", check.action), Status::of(check.is_pass()), detail);
    }

    let exhaustive = limits.check_states(m.layout()).is_ok();
    if exhaustive {
        let ls = check_load_store_equations(&m, limits).map_err(|e| e.to_string())?;
        rep.verdict(
            "load-store-behavior",
            Status::of(ls.is_none()),
            match ls {
                Some((a, s)) => format!("{a} misbehaves from {}", s.digest()),
                None => "all load and store postconditions hold".into(),
            },
        );
        let mut coincidence_ok = true;
        let mut detail = String::from("every operation determined by its input region");
        for id in m.machine().action_ids() {
            let op = m.machine().operation(id).expect("listed action");
            if let Some((s1, _s2)) =
                check_coincidence(m.machine(), op, limits).map_err(|e| e.to_string())?
            {
                coincidence_ok = false;
                detail = format!("{id} differs on states agreeing on its input region ({})", s1.digest());
                break;
            }
        }
        rep.verdict("coincidence", Status::of(coincidence_ok), detail);
    } else {
        rep.verdict(
            "load-store-behavior",
            Status::NotApplicable,
            "machine too large to sweep",
        );
    }
    Ok(rep)
}
