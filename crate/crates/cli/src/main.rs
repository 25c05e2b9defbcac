//! `mixcoef` command-line driver.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 3 when the sample
//! is too short for the requested estimate.

mod args;
mod report;

use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use mixcoef::estimators::{resolve_blocks, BlockCount};
use mixcoef::hypothesis::{rate_test, threshold_test};
use mixcoef::sample::format_sample;
use mixcoef::schedule::{LevelRule, StepRule};
use mixcoef::sequential::RunOptions;
use mixcoef::synthetic::exact_level_coefficients_rational;
use mixcoef::{
    exact_dependence_matrix, exact_level_coefficients, gen_chain, gen_iid, gen_ma,
    independence_test, kappa_t, read_sample, run_strong, run_weak, tau_t, theta_fixed,
    BlockBudget, Error, EstimateCache, FiniteChain, MixingKind, ParameterSchedule, RateFunction,
    SamplePath, ScheduleConfig, SolverConfig, SolverMode,
};

use args::{
    Cli, Command, Common, EstimateCommand, FixedArgs, InputArgs, KindArg, OracleArgs,
    OracleCommand, Preset, Process, ScheduleArgs, SequentialArgs, SimulateArgs, SolverArg,
    TestCommand,
};
use report::{sha256_hex, write_output, Report};

const EXIT_INPUT: u8 = 2;
const EXIT_SHORT: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(cli, argv) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { err, command, output }) => {
            eprintln!("mixcoef: {err}");
            if let Error::InsufficientSample { required, available } = err {
                let body = json!({
                    "schema": report::SCHEMA,
                    "command": command,
                    "error": "insufficient_sample",
                    "required_length": required_json(required),
                    "available_length": available,
                });
                let text = report::to_text(&body);
                if let Err(e) = write_output(output.as_deref(), &text) {
                    eprintln!("mixcoef: {e}");
                }
                ExitCode::from(EXIT_SHORT)
            } else {
                ExitCode::from(EXIT_INPUT)
            }
        }
    }
}

struct Failure {
    err: Error,
    command: String,
    output: Option<std::path::PathBuf>,
}

fn run(cli: Cli, argv: Vec<String>) -> Result<u8, Failure> {
    let (name, output) = describe(&cli.command);
    let fail = |err: Error| Failure {
        err,
        command: name.clone(),
        output: output.clone(),
    };
    match cli.command {
        Command::Simulate(a) => simulate(a).map_err(fail),
        Command::Estimate(cmd) => estimate(cmd, &name, argv).map_err(fail),
        Command::Test(cmd) => test(cmd, &name, argv).map_err(fail),
        Command::Oracle(cmd) => oracle(cmd, &name, argv).map_err(fail),
    }
}

fn describe(command: &Command) -> (String, Option<std::path::PathBuf>) {
    match command {
        Command::Simulate(a) => ("simulate".into(), a.output.clone()),
        Command::Estimate(c) => {
            let (sub, common) = match c {
                EstimateCommand::Alpha(a) => ("alpha", &a.common),
                EstimateCommand::Beta(a) => ("beta", &a.common),
                EstimateCommand::L1Weak(a) => ("l1-weak", &a.common),
                EstimateCommand::L1Strong(a) => ("l1-strong", &a.common),
            };
            (format!("estimate {sub}"), common.output.clone())
        }
        Command::Test(c) => {
            let (sub, common) = match c {
                TestCommand::Rate(a) => ("rate", &a.common),
                TestCommand::Threshold(a) => ("threshold", &a.common),
                TestCommand::Independence(a) => ("independence", &a.common),
            };
            (format!("test {sub}"), common.output.clone())
        }
        Command::Oracle(c) => match c {
            OracleCommand::Coeffs(a) => ("oracle coeffs".into(), a.output.clone()),
            OracleCommand::Matrix(a) => ("oracle matrix".into(), a.oracle.output.clone()),
        },
    }
}

fn required_json(required: u128) -> Value {
    if required == u128::MAX {
        Value::Null
    } else {
        json!(required)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// simulate

fn simulate(a: SimulateArgs) -> mixcoef::Result<u8> {
    let (sample, spec) = match a.process {
        Process::Iid => (gen_iid(a.length, a.seed)?, "iid".to_string()),
        Process::Ma => (gen_ma(a.q, a.length, a.seed)?, format!("ma q={}", a.q)),
        Process::Chain => {
            let path = a.file.as_deref().expect("clap requires --file for chain");
            let chain = FiniteChain::from_file(path)?;
            (gen_chain(&chain, a.length, a.seed)?, format!("chain file={}", path.display()))
        }
    };
    let header = vec![
        format!("mixcoef {} simulate", env!("CARGO_PKG_VERSION")),
        format!("process: {spec}"),
        format!("length: {}", a.length),
        format!("seed: {}", a.seed),
    ];
    write_output(a.output.as_deref(), &format_sample(&sample, &header))?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// shared setup

struct Context {
    sample: SamplePath,
    input: Value,
    schedule: ParameterSchedule,
    budget: BlockBudget,
    solver: SolverConfig,
    time: u64,
}

fn load_input(a: &InputArgs) -> mixcoef::Result<(SamplePath, Value)> {
    if let Some(path) = &a.input {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        let sample = read_sample(path, a.rescale)?;
        let info = json!({
            "source": "file",
            "path": path.display().to_string(),
            "sha256": sha256_hex(&bytes),
            "length": sample.len(),
            "rescale": a.rescale,
        });
        return Ok((sample, info));
    }
    let spec = a.generate.as_deref().expect("clap requires a source");
    let seed = a
        .seed
        .ok_or_else(|| Error::InvalidParameters("--generate needs --seed".into()))?;
    let length = a
        .length
        .ok_or_else(|| Error::InvalidParameters("--generate needs --length".into()))?;
    let sample = generate(spec, length, seed)?;
    let info = json!({
        "source": "generated",
        "generator": spec,
        "seed": seed,
        "length": length,
        "sha256": sha256_hex(format_sample(&sample, &[]).as_bytes()),
    });
    Ok((sample, info))
}

fn generate(spec: &str, length: usize, seed: u64) -> mixcoef::Result<SamplePath> {
    let bad = || Error::InvalidParameters(format!("unknown generator {spec:?}"));
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match name {
        "iid" => gen_iid(length, seed),
        "ma" => gen_ma(arg.parse().map_err(|_| bad())?, length, seed),
        "chain" => gen_chain(&FiniteChain::from_file(Path::new(arg))?, length, seed),
        "two-state" => gen_chain(&two_state(arg)?, length, seed),
        _ => Err(bad()),
    }
}

fn two_state(arg: &str) -> mixcoef::Result<FiniteChain> {
    let parsed = arg
        .split_once(',')
        .and_then(|(p, q)| Some((p.trim().parse().ok()?, q.trim().parse().ok()?)));
    let (p, q) = parsed
        .ok_or_else(|| Error::InvalidParameters(format!("two-state chain wants p,q; got {arg:?}")))?;
    FiniteChain::two_state(p, q, 1)
}

fn load_schedule(a: &ScheduleArgs) -> mixcoef::Result<ParameterSchedule> {
    let mut config = match &a.schedule {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            ScheduleConfig::from_toml_str(&text)?
        }
        None => match a.preset {
            Preset::Default => ScheduleConfig::default(),
            Preset::Desk => ScheduleConfig::desk(),
        },
    };
    // pinned values hold for every t
    if let Some(n) = a.n {
        config.n = StepRule { base: n, step: u64::MAX };
    }
    if let Some(ell) = a.ell {
        config.ell = LevelRule {
            base: ell,
            log_divisor: f64::MAX,
        };
    }
    if let Some(m) = a.max_gap {
        config.max_gap = StepRule { base: m, step: u64::MAX };
    }
    ParameterSchedule::new(config)
}

fn context(common: &Common) -> mixcoef::Result<Context> {
    let (sample, input) = load_input(&common.input)?;
    let schedule = load_schedule(&common.schedule)?;
    let mode = match common.schedule.solver {
        SolverArg::Exact => SolverMode::Exact,
        SolverArg::Heuristic => SolverMode::Heuristic,
        SolverArg::Auto => SolverMode::Auto,
    };
    let solver = SolverConfig {
        mode,
        seed: common.input.seed.unwrap_or(0),
        ..SolverConfig::default()
    };
    let budget = match common.schedule.t_budget {
        Some(0) => return Err(Error::InvalidParameters("--t-budget must be positive".into())),
        Some(b) => BlockBudget::Practical(b),
        None => BlockBudget::Theoretical,
    };
    Ok(Context {
        sample,
        input,
        schedule,
        budget,
        solver,
        time: common.schedule.time.max(1),
    })
}

impl Context {
    fn report(&self, command: &str, argv: Vec<String>, common: &Common) -> Report {
        Report {
            command: command.to_string(),
            argv,
            input: self.input.clone(),
            schedule_config: *self.schedule.config(),
            schedule: self.schedule.values_at(self.time),
            budget: match self.budget {
                BlockBudget::Theoretical => json!({"mode": "theoretical"}),
                BlockBudget::Practical(b) => json!({"mode": "practical", "blocks": b}),
            },
            solver: json!({
                "mode": common.schedule.solver,
                "exact_cap": self.solver.exact_cap,
                "restarts": self.solver.restarts,
                "seed": self.solver.seed,
            }),
            seed: common.input.seed,
            result: Value::Null,
        }
    }

    fn run_options(&self, kind: MixingKind) -> RunOptions {
        RunOptions {
            kind,
            budget: self.budget,
            solver: self.solver,
        }
    }
}

fn kind_of(k: KindArg) -> MixingKind {
    match k {
        KindArg::Alpha => MixingKind::Alpha,
        KindArg::Beta => MixingKind::Beta,
    }
}

fn count_json(count: &BlockCount) -> Value {
    match count {
        BlockCount::Finite(v) => json!({"blocks": v.to_string()}),
        BlockCount::Astronomical { log2 } => json!({"astronomical": true, "log2_blocks": log2}),
    }
}

// ---------------------------------------------------------------------------
// estimate

fn estimate(cmd: EstimateCommand, name: &str, argv: Vec<String>) -> mixcoef::Result<u8> {
    match cmd {
        EstimateCommand::Alpha(a) => fixed(a, MixingKind::Alpha, name, argv),
        EstimateCommand::Beta(a) => fixed(a, MixingKind::Beta, name, argv),
        EstimateCommand::L1Weak(a) => sequential(a, false, name, argv),
        EstimateCommand::L1Strong(a) => sequential(a, true, name, argv),
    }
}

fn fixed(a: FixedArgs, kind: MixingKind, name: &str, argv: Vec<String>) -> mixcoef::Result<u8> {
    let ctx = context(&a.common)?;
    let t = ctx.time;
    let (n, ell) = (ctx.schedule.n(t), ctx.schedule.ell(t));
    let mut cache = EstimateCache::new(&ctx.sample, ctx.solver);
    let result = match a.m {
        Some(m) => {
            let count = tau_t(&ctx.schedule, m, t, kind, ctx.budget)?;
            let blocks = resolve_blocks(&count, n, &ctx.sample)?;
            let pair = cache.get(blocks, n, ell, m)?;
            json!({
                "kind": kind,
                "blocks": blocks,
                "budget": count_json(&count),
                "estimates": [pair.get(kind)],
            })
        }
        None => {
            let count = kappa_t(&ctx.schedule, t, kind, ctx.budget)?;
            let blocks = resolve_blocks(&count, n, &ctx.sample)?;
            let theta = theta_fixed(&mut cache, blocks, n, ell, ctx.schedule.max_gap(t), kind)?;
            json!({
                "kind": kind,
                "blocks": blocks,
                "budget": count_json(&count),
                "estimates": theta.terms,
                "theta": theta.value,
            })
        }
    };
    let mut report = ctx.report(name, argv, &a.common);
    report.result = result;
    write_output(a.common.output.as_deref(), &report.to_text())?;
    Ok(0)
}

fn sequential(a: SequentialArgs, strong: bool, name: &str, argv: Vec<String>) -> mixcoef::Result<u8> {
    let mut ctx = context(&a.common)?;
    ctx.time = a.horizon.max(1);
    let options = ctx.run_options(kind_of(a.kind));
    let run = if strong {
        run_strong(&ctx.sample, &ctx.schedule, a.horizon, &options)?
    } else {
        run_weak(&ctx.sample, &ctx.schedule, a.horizon, &options)?
    };
    let truncated = run.truncated.is_some();
    let mut report = ctx.report(name, argv, &a.common);
    report.result = json!({
        "estimator": run.estimator,
        "kind": run.kind,
        "horizon": run.horizon,
        "final": run.final_estimate(),
        "truncated": run.truncated.as_ref().map(|c| json!({
            "t": c.t,
            "reason": c.reason,
            "required_length": c.required_length.map_or(Value::Null, required_json),
        })),
        "trajectory": run.records,
    });
    write_output(a.common.output.as_deref(), &report.to_text())?;
    Ok(if truncated { EXIT_SHORT } else { 0 })
}

// ---------------------------------------------------------------------------
// test

fn test(cmd: TestCommand, name: &str, argv: Vec<String>) -> mixcoef::Result<u8> {
    let (common, verdict, ctx) = match cmd {
        TestCommand::Rate(a) => {
            let ctx = context(&a.common)?;
            let gamma = match (&a.gamma_file, a.gamma) {
                (Some(path), _) => RateFunction::from_file(path)?,
                (None, Some(c)) => RateFunction::constant(c)?,
                (None, None) => unreachable!("clap requires a rate function"),
            };
            let v = rate_test(&ctx.sample, &gamma, &ctx.schedule, ctx.time, &ctx.run_options(kind_of(a.kind)))?;
            (a.common, v, ctx)
        }
        TestCommand::Threshold(a) => {
            let ctx = context(&a.common)?;
            let opts = ctx.run_options(kind_of(a.kind));
            let v = threshold_test(&ctx.sample, a.gamma, &ctx.schedule, ctx.time, &opts)?;
            (a.common, v, ctx)
        }
        TestCommand::Independence(a) => {
            let ctx = context(&a.common)?;
            let opts = ctx.run_options(MixingKind::Alpha);
            let v = independence_test(&ctx.sample, &ctx.schedule, ctx.time, &opts)?;
            (a.common, v, ctx)
        }
    };
    let mut report = ctx.report(name, argv, &common);
    report.result = serde_json::to_value(&verdict).expect("verdict serializes");
    write_output(common.output.as_deref(), &report.to_text())?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// oracle

fn oracle_chain(a: &OracleArgs) -> mixcoef::Result<FiniteChain> {
    match (&a.chain_file, &a.two_state) {
        (Some(path), _) => FiniteChain::from_file(path),
        (None, Some(pq)) => two_state(pq),
        (None, None) => unreachable!("clap requires a chain"),
    }
}

fn oracle(cmd: OracleCommand, name: &str, argv: Vec<String>) -> mixcoef::Result<u8> {
    let (a, result) = match cmd {
        OracleCommand::Coeffs(a) => {
            let chain = oracle_chain(&a)?;
            let (alpha, beta) = exact_level_coefficients(&chain, a.n, a.ell, a.m)?;
            let rational = exact_level_coefficients_rational(&chain, a.n, a.ell, a.m).ok();
            let result = json!({
                "alpha": alpha,
                "beta": beta,
                "alpha_exact": rational.as_ref().map(|r| r.0.to_string()),
                "beta_exact": rational.as_ref().map(|r| r.1.to_string()),
            });
            (a, result)
        }
        OracleCommand::Matrix(a) => {
            let chain = oracle_chain(&a.oracle)?;
            let d = exact_dependence_matrix(&chain, a.oracle.n, a.oracle.m, a.j, a.oracle.ell)?;
            let result = json!({ "j": a.j, "rows": d.to_rows() });
            (a.oracle, result)
        }
    };
    let body = json!({
        "schema": report::SCHEMA,
        "command": name,
        "argv": argv,
        "config": a,
        "result": result,
    });
    write_output(a.output.as_deref(), &report::to_text(&body))?;
    Ok(0)
}
