//! Headless, deterministic simulation worlds. One tick = one physics
//! step = one percept publication; the observable artifact is a trace
//! file with one `T=<tick> P=<percepts> C=<controls>` line per tick.

pub mod asteroids;
pub mod thermostat;

use std::collections::BTreeMap;

use crate::term::{format_term, parse_term, Term};

/// A simulation world: pure state, advanced tick by tick.
pub trait SimWorld {
    /// Full percept set for the current state ("all" convention).
    fn sense(&self) -> Vec<Term>;
    /// Replace the active control set (durative level semantics).
    fn apply_controls(&mut self, controls: &[Term]);
    /// Advance one tick.
    fn step(&mut self);
    /// Ticks per second, for deriving the simulated clock.
    fn tick_rate(&self) -> f64;
}

/// `key=value` per line; `#` starts a comment.
pub fn parse_config(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    out
}

pub fn config_f64(cfg: &BTreeMap<String, String>, key: &str, default: f64) -> f64 {
    cfg.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
}

pub fn config_u64(cfg: &BTreeMap<String, String>, key: &str, default: u64) -> u64 {
    cfg.get(key).and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn list_text(terms: &[Term]) -> String {
    let items: Vec<String> = terms.iter().map(format_term).collect();
    format!("[{}]", items.join(","))
}

pub fn trace_line(tick: u64, percepts: &[Term], controls: &[Term]) -> String {
    format!("T={tick} P={} C={}", list_text(percepts), list_text(controls))
}

/// Pull the percept list out of a trace line (replay input).
pub fn parse_trace_percepts(line: &str) -> Option<Vec<Term>> {
    let rest = line.split(" P=").nth(1)?;
    let percepts_text = rest.split(" C=").next()?;
    match parse_term(percepts_text).ok()? {
        Term::List(items) => Some(items),
        _ => None,
    }
}

/// Serve a world over the broker: publish `percepts([...])` each tick and
/// hold the latest `controls([...])` delivery as the active control set.
pub fn serve_world(
    world: &mut dyn SimWorld,
    host: &str,
    port: u16,
    ticks: u64,
    pace: std::time::Duration,
    out: &mut dyn std::io::Write,
) -> Result<(), crate::pedro::PedroError> {
    use crate::pedro::Client;
    let mut client = Client::connect(host, port)?;
    client.subscribe(
        Term::compound("controls", vec![Term::var("X")]),
        Term::atom("true"),
        0,
    )?;
    let mut controls: Vec<Term> = Vec::new();
    for tick in 0..ticks {
        for (_, delivery) in client.drain_deliveries() {
            if let Term::Compound(f, mut args) = delivery {
                if f == "controls" && args.len() == 1 {
                    if let Term::List(items) = args.remove(0) {
                        controls = items;
                    }
                }
            }
        }
        world.apply_controls(&controls);
        let percepts = world.sense();
        client.notify(&Term::compound("percepts", vec![Term::List(percepts.clone())]))?;
        let _ = writeln!(out, "{}", trace_line(tick, &percepts, &controls));
        world.step();
        if !pace.is_zero() {
            std::thread::sleep(pace);
        }
    }
    Ok(())
}

/// Run an engine and a world in lockstep for `ticks` ticks, with zero
/// sensing/actuation latency. The callback sees each tick's percepts and
/// the control set in force after the engine's decision.
pub fn run_closed_loop<W: SimWorld>(
    engine: &mut crate::engine::Engine,
    world: &mut W,
    ticks: u64,
    mut on_tick: impl FnMut(u64, &[Term], &[Term]),
) -> Result<(), crate::engine::EngineError> {
    let mut controls: Vec<Term> = Vec::new();
    for tick in 0..ticks {
        let percepts = world.sense();
        let now = tick as f64 / world.tick_rate();
        if let Some(new_controls) = engine.cycle(percepts.clone(), now)? {
            controls = new_controls;
            world.apply_controls(&controls);
        }
        on_tick(tick, &percepts, &controls);
        world.step();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let cfg = parse_config("a = 1.5\n# comment\nseed=42 # trailing\n\nbad line\n");
        assert_eq!(config_f64(&cfg, "a", 0.0), 1.5);
        assert_eq!(config_u64(&cfg, "seed", 0), 42);
        assert_eq!(config_f64(&cfg, "missing", 7.0), 7.0);
    }

    #[test]
    fn trace_round_trip() {
        let percepts = vec![parse_term("temperature(15.5)").unwrap()];
        let controls = vec![parse_term("turn_on_heating").unwrap()];
        let line = trace_line(3, &percepts, &controls);
        assert_eq!(line, "T=3 P=[temperature(15.5)] C=[turn_on_heating]");
        assert_eq!(parse_trace_percepts(&line), Some(percepts));
    }

    #[test]
    fn empty_percepts_replay() {
        let line = trace_line(0, &[], &[]);
        assert_eq!(parse_trace_percepts(&line), Some(vec![]));
    }
}
