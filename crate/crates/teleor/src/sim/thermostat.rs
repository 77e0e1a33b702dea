//! A heated room: temperature drifts down on its own and up while the
//! heater runs. Percepts: `temperature(T)`. Controls understood:
//! `turn_on_heating`, `turn_off_heating`.

use std::collections::BTreeMap;

use super::{config_f64, SimWorld};
use crate::term::Term;

#[derive(Debug, Clone)]
pub struct ThermostatWorld {
    pub temperature: f64,
    pub heating_on: bool,
    pub heat_rate: f64,
    pub cool_rate: f64,
    pub tick_rate: f64,
}

impl ThermostatWorld {
    pub fn from_config(cfg: &BTreeMap<String, String>) -> ThermostatWorld {
        ThermostatWorld {
            temperature: config_f64(cfg, "start_temp", 15.0),
            heating_on: false,
            heat_rate: config_f64(cfg, "heat_rate", 0.2),
            cool_rate: config_f64(cfg, "cool_rate", 0.1),
            tick_rate: config_f64(cfg, "tick_rate", 50.0),
        }
    }

    /// Worst-case overshoot beyond the target once the loop is closed:
    /// the strongest drift can keep pushing for the full control latency
    /// before the agent's reaction lands.
    pub fn overshoot_bound(&self, latency_ticks: f64) -> f64 {
        (1.0 + latency_ticks) * self.heat_rate.max(self.cool_rate)
    }
}

impl SimWorld for ThermostatWorld {
    fn sense(&self) -> Vec<Term> {
        vec![Term::compound("temperature", vec![Term::float(self.temperature)])]
    }

    fn apply_controls(&mut self, controls: &[Term]) {
        for c in controls {
            match c {
                Term::Atom(a) if a == "turn_on_heating" => self.heating_on = true,
                Term::Atom(a) if a == "turn_off_heating" => self.heating_on = false,
                other => log::warn!("thermostat world ignores {}", crate::term::format_term(other)),
            }
        }
    }

    fn step(&mut self) {
        if self.heating_on {
            self.temperature += self.heat_rate;
        } else {
            self.temperature -= self.cool_rate;
        }
    }

    fn tick_rate(&self) -> f64 {
        self.tick_rate
    }
}
