use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use teleor::agent::{run_live, run_replay, AgentError, LiveOptions};
use teleor::engine::{
    dependent_predicates, local_dependent_predicates, Engine, EngineError, FiringRecord,
};
use teleor::parser::parse_program;
use teleor::pedro::{Broker, DEFAULT_PORT};
use teleor::sim::{
    asteroids::{AsteroidsConfig, AsteroidsWorld},
    config_u64, parse_config, thermostat::ThermostatWorld, SimWorld,
};
use teleor::term::parse_term;
use teleor::types::check_program;

// Exit codes, stable for scripting:
//   0 success; 1 type diagnostics / usage errors; 2 syntax error;
//   3 exceeded recursion depth; 4 no firable rule; 5 transport failure.
const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_SYNTAX: u8 = 2;
const EXIT_RECURSION: u8 = 3;
const EXIT_NO_RULE: u8 = 4;
const EXIT_TRANSPORT: u8 = 5;

#[derive(Parser)]
#[command(name = "teleor", version, about = "Teleo-reactive agent toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and type-check a program
    Check {
        program: PathBuf,
    },
    /// Print signed dependent-predicate lists for rules of a program
    Analyze {
        program: PathBuf,
        /// procedure to analyze (with --rule); defaults to --all
        #[arg(long)]
        proc: Option<String>,
        /// rule index within --proc (0-based)
        #[arg(long)]
        rule: Option<usize>,
        /// print every rule's list
        #[arg(long)]
        all: bool,
        /// union over a firing stack, e.g. --stack proc1:2,proc2:1
        #[arg(long)]
        stack: Option<String>,
    },
    /// Run a program as an agent, live against a broker or replaying a trace
    RunAgent {
        program: PathBuf,
        /// task call, e.g. `thermostat_task()` or `regulate_temperature(18)`
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 64)]
        max_depth: usize,
        /// replay percepts from a recorded trace file instead of the network
        #[arg(long)]
        percepts_from: Option<PathBuf>,
        /// write the per-cycle trace here (default: stdout)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, env = "TELEOR_BROKER_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "TELEOR_BROKER_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// broker name to register (live mode)
        #[arg(long)]
        name: Option<String>,
        /// cycles per simulated second, for while/until timing
        #[arg(long, default_value_t = 50.0)]
        tick_rate: f64,
        /// stop after this many cycles (live mode; default: run until the feed closes)
        #[arg(long)]
        max_cycles: Option<u64>,
    },
    /// Run the publish/subscribe broker
    RunBroker {
        #[arg(long, env = "TELEOR_BROKER_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
    },
    /// Run a simulation world against a broker
    RunSim {
        /// world kind: thermostat | asteroids
        kind: String,
        /// key=value config file (world parameters, ticks, pace_ms, seed)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "TELEOR_BROKER_HOST", default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = "TELEOR_BROKER_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        /// write the per-tick trace here (default: stdout)
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match cli.command {
        Command::Check { program } => cmd_check(&program),
        Command::Analyze { program, proc, rule, all, stack } => {
            cmd_analyze(&program, proc.as_deref(), rule, all, stack.as_deref())
        }
        Command::RunAgent {
            program,
            task,
            max_depth,
            percepts_from,
            trace,
            host,
            port,
            name,
            tick_rate,
            max_cycles,
        } => cmd_run_agent(
            &program,
            &task,
            max_depth,
            percepts_from.as_deref(),
            trace.as_deref(),
            &host,
            port,
            name,
            tick_rate,
            max_cycles,
        ),
        Command::RunBroker { port } => cmd_run_broker(port),
        Command::RunSim { kind, config, host, port, trace } => {
            cmd_run_sim(&kind, config.as_deref(), &host, port, trace.as_deref())
        }
    }
}

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load_checked(path: &std::path::Path) -> Result<teleor::ast::Program, ExitCode> {
    let source = fs::read_to_string(path)
        .map_err(|e| fail(format!("{}: {e}", path.display()), EXIT_SYNTAX))?;
    let program = parse_program(&source)
        .map_err(|e| fail(format!("{}:{e}", path.display()), EXIT_SYNTAX))?;
    let diagnostics = check_program(&program);
    if diagnostics.is_empty() {
        Ok(program)
    } else {
        for d in &diagnostics {
            eprintln!("{}:{d}", path.display());
        }
        Err(ExitCode::from(EXIT_DIAGNOSTICS))
    }
}

fn cmd_check(path: &std::path::Path) -> ExitCode {
    match load_checked(path) {
        Ok(_) => {
            println!("ok");
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn format_signs<'a>(signs: impl IntoIterator<Item = &'a teleor::engine::DependencySign>) -> String {
    signs.into_iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

fn cmd_analyze(
    path: &std::path::Path,
    proc: Option<&str>,
    rule: Option<usize>,
    all: bool,
    stack: Option<&str>,
) -> ExitCode {
    let program = match load_checked(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Some(stack) = stack {
        // union mode: a firing stack given as proc:rule entries
        let mut records = Vec::new();
        for entry in stack.split(',') {
            let Some((name, idx)) = entry.split_once(':') else {
                return fail(format!("bad stack entry `{entry}` (want proc:rule)"), EXIT_DIAGNOSTICS);
            };
            let Ok(idx) = idx.parse::<usize>() else {
                return fail(format!("bad rule index in `{entry}`"), EXIT_DIAGNOSTICS);
            };
            let Some(proc) = program.procedures.get(name) else {
                return fail(format!("unknown procedure `{name}`"), EXIT_DIAGNOSTICS);
            };
            if idx >= proc.rules.len() {
                return fail(format!("`{name}` has no rule {idx}"), EXIT_DIAGNOSTICS);
            }
            records.push(FiringRecord {
                proc: name.to_string(),
                args: Vec::new(),
                rule_index: idx,
                bindings: Default::default(),
                first_fired: 0.0,
                actions: Vec::new(),
            });
        }
        let union: BTreeSet<_> = dependent_predicates(&records, &program);
        println!("{}", format_signs(&union));
        return ExitCode::SUCCESS;
    }
    if let Some(name) = proc {
        let Some(procedure) = program.procedures.get(name) else {
            return fail(format!("unknown procedure `{name}`"), EXIT_DIAGNOSTICS);
        };
        let Some(idx) = rule else {
            for (idx, _) in procedure.rules.iter().enumerate() {
                println!("{name}:{idx} {}", format_signs(&local_dependent_predicates(procedure, idx)));
            }
            return ExitCode::SUCCESS;
        };
        if idx >= procedure.rules.len() {
            return fail(format!("`{name}` has no rule {idx}"), EXIT_DIAGNOSTICS);
        }
        println!("{}", format_signs(&local_dependent_predicates(procedure, idx)));
        return ExitCode::SUCCESS;
    }
    if !all {
        return fail("pass --proc, --stack, or --all", EXIT_DIAGNOSTICS);
    }
    for (name, procedure) in &program.procedures {
        for (idx, _) in procedure.rules.iter().enumerate() {
            println!("{name}:{idx} {}", format_signs(&local_dependent_predicates(procedure, idx)));
        }
    }
    ExitCode::SUCCESS
}

fn trace_writer(path: Option<&std::path::Path>) -> std::io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_run_agent(
    path: &std::path::Path,
    task: &str,
    max_depth: usize,
    percepts_from: Option<&std::path::Path>,
    trace: Option<&std::path::Path>,
    host: &str,
    port: u16,
    name: Option<String>,
    tick_rate: f64,
    max_cycles: Option<u64>,
) -> ExitCode {
    let program = match load_checked(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let task_call = match parse_term(task) {
        Ok(t) => t,
        Err(e) => return fail(format!("bad task call `{task}`: {e}"), EXIT_SYNTAX),
    };
    let mut engine = match Engine::new(program, &task_call, max_depth) {
        Ok(e) => e,
        Err(e) => return fail(e, EXIT_DIAGNOSTICS),
    };
    let mut out = match trace_writer(trace) {
        Ok(w) => w,
        Err(e) => return fail(e, EXIT_DIAGNOSTICS),
    };
    let result = match percepts_from {
        Some(trace_path) => match fs::read_to_string(trace_path) {
            Ok(text) => run_replay(&mut engine, &text, tick_rate, &mut out),
            Err(e) => return fail(format!("{}: {e}", trace_path.display()), EXIT_DIAGNOSTICS),
        },
        None => {
            let opts = LiveOptions {
                host: host.to_string(),
                port,
                name,
                tick_rate,
                max_cycles,
                idle_timeout: None,
            };
            run_live(&mut engine, &opts, &mut out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(AgentError::Engine(EngineError::ExceededRecursionDepth(d))) => {
            fail(format!("exceeded recursion depth {d}"), EXIT_RECURSION)
        }
        Err(AgentError::Engine(EngineError::NoFirableRule(p))) => {
            fail(format!("no firable rule in `{p}`"), EXIT_NO_RULE)
        }
        Err(AgentError::Engine(e)) => fail(e, EXIT_DIAGNOSTICS),
        Err(AgentError::Transport(e)) => fail(e, EXIT_TRANSPORT),
        Err(AgentError::Io(e)) => fail(e, EXIT_DIAGNOSTICS),
        Err(AgentError::SourceClosed) => fail("percept source closed", EXIT_TRANSPORT),
    }
}

fn cmd_run_broker(port: u16) -> ExitCode {
    match Broker::bind(port) {
        Ok(broker) => {
            eprintln!("broker listening on port {}", broker.port());
            broker.run();
            ExitCode::SUCCESS
        }
        Err(e) => fail(format!("cannot bind port {port}: {e}"), EXIT_TRANSPORT),
    }
}

fn cmd_run_sim(
    kind: &str,
    config: Option<&std::path::Path>,
    host: &str,
    port: u16,
    trace: Option<&std::path::Path>,
) -> ExitCode {
    let cfg = match config {
        Some(p) => match fs::read_to_string(p) {
            Ok(text) => parse_config(&text),
            Err(e) => return fail(format!("{}: {e}", p.display()), EXIT_DIAGNOSTICS),
        },
        None => Default::default(),
    };
    let mut world: Box<dyn SimWorld> = match kind {
        "thermostat" => Box::new(ThermostatWorld::from_config(&cfg)),
        "asteroids" => Box::new(AsteroidsWorld::new(AsteroidsConfig::from_config(&cfg))),
        other => return fail(format!("unknown world `{other}` (thermostat|asteroids)"), EXIT_DIAGNOSTICS),
    };
    let ticks = config_u64(&cfg, "ticks", 600);
    let pace = Duration::from_millis(config_u64(&cfg, "pace_ms", 5));
    let mut out = match trace_writer(trace) {
        Ok(w) => w,
        Err(e) => return fail(e, EXIT_DIAGNOSTICS),
    };
    match teleor::sim::serve_world(world.as_mut(), host, port, ticks, pace, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, EXIT_TRANSPORT),
    }
}
