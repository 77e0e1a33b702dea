//! Drives an engine from a percept source: either a recorded trace file
//! (deterministic replay) or live percept notifications from the broker.
//!
//! Both modes write the same per-cycle trace format, and both derive the
//! engine clock from the cycle counter (`now = cycle / tick_rate`), so a
//! live session and a replay of its percepts produce identical traces.

use std::io::Write;
use std::time::Duration;

use crate::engine::{Engine, EngineError};
use crate::pedro::{Client, PedroError};
use crate::sim::parse_trace_percepts;
use crate::term::{format_term, Term};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Transport(#[from] PedroError),
    #[error("trace write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("percept source closed")]
    SourceClosed,
}

fn controls_term(controls: &[Term]) -> Term {
    Term::compound("controls", vec![Term::List(controls.to_vec())])
}

fn trace_cycle(
    out: &mut dyn Write,
    cycle: u64,
    percepts: &[Term],
    engine: &Engine,
    controls: &[Term],
) -> std::io::Result<()> {
    let stack: Vec<String> = engine
        .fired_rules()
        .iter()
        .map(|r| format!("{}:{}", r.proc, r.rule_index))
        .collect();
    let p: Vec<String> = percepts.iter().map(format_term).collect();
    let c: Vec<String> = controls.iter().map(format_term).collect();
    writeln!(
        out,
        "T={cycle} P=[{}] C=[{}] R=[{}]",
        p.join(","),
        c.join(","),
        stack.join(",")
    )
}

/// Feed a recorded percept trace through the engine, one line per cycle.
pub fn run_replay(
    engine: &mut Engine,
    trace_text: &str,
    tick_rate: f64,
    out: &mut dyn Write,
) -> Result<(), AgentError> {
    let mut controls: Vec<Term> = Vec::new();
    let mut cycle = 0u64;
    for line in trace_text.lines() {
        let Some(percepts) = parse_trace_percepts(line) else {
            continue; // not a trace line
        };
        let now = cycle as f64 / tick_rate;
        if let Some(new_controls) = engine.cycle(percepts.clone(), now)? {
            controls = new_controls;
        }
        trace_cycle(out, cycle, &percepts, engine, &controls)?;
        cycle += 1;
    }
    Ok(())
}

pub struct LiveOptions {
    pub host: String,
    pub port: u16,
    /// broker name to register, when given
    pub name: Option<String>,
    pub tick_rate: f64,
    /// stop after this many cycles (None = run until the source closes)
    pub max_cycles: Option<u64>,
    /// if set, finish cleanly after this long with no percept delivery
    pub idle_timeout: Option<Duration>,
}

/// Subscribe to `percepts(P)` and publish `controls([...])` on change.
/// Pending percept updates coalesce: only the latest is evaluated.
pub fn run_live(
    engine: &mut Engine,
    opts: &LiveOptions,
    out: &mut dyn Write,
) -> Result<(), AgentError> {
    let mut client = Client::connect(&opts.host, opts.port)?;
    if let Some(name) = &opts.name {
        if !client.register(name)? {
            return Err(AgentError::Transport(PedroError::Handshake(format!(
                "name `{name}` already registered"
            ))));
        }
    }
    client.subscribe(
        Term::compound("percepts", vec![Term::var("P")]),
        Term::atom("true"),
        0,
    )?;

    let mut controls: Vec<Term> = Vec::new();
    let mut cycle = 0u64;
    loop {
        if let Some(max) = opts.max_cycles {
            if cycle >= max {
                return Ok(());
            }
        }
        let wait = opts.idle_timeout.unwrap_or(Duration::from_secs(3600));
        let (_, payload) = match client.recv_delivery_checked(wait) {
            Ok(d) => d,
            Err(std::sync::mpsc::RecvTimeoutError::Timeout) => {
                if opts.idle_timeout.is_some() {
                    return Ok(()); // percept feed quiesced; treat as shutdown
                }
                continue;
            }
            Err(std::sync::mpsc::RecvTimeoutError::Disconnected) => {
                return Err(AgentError::SourceClosed)
            }
        };
        let mut latest = payload;
        for (_, newer) in client.drain_deliveries() {
            latest = newer; // coalesce a backlog to the most recent update
        }
        let percepts = match latest {
            Term::Compound(f, mut args) if f == "percepts" && args.len() == 1 => {
                match args.remove(0) {
                    Term::List(items) => items,
                    other => vec![other],
                }
            }
            other => {
                log::warn!("ignoring non-percept delivery {}", format_term(&other));
                continue;
            }
        };
        let now = cycle as f64 / opts.tick_rate;
        if let Some(new_controls) = engine.cycle(percepts.clone(), now)? {
            controls = new_controls;
            client.notify(&controls_term(&controls))?;
        }
        trace_cycle(out, cycle, &percepts, engine, &controls)?;
        cycle += 1;
    }
}
