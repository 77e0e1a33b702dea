//! A stripped-down Asteroids world on a torus. The ship senses nearby
//! asteroids as `see(asteroid, Dir, Dist)` with a direction bucket
//! relative to its heading, plus `facing_direction(H)` and `speed(S)`.
//! Controls understood: `turn_left`, `turn_right`, `move_forward`,
//! `move_backward`, `shoot`, `nothing`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{config_f64, config_u64, SimWorld};
use crate::term::Term;

#[derive(Debug, Clone)]
pub struct AsteroidsConfig {
    pub width: f64,
    pub height: f64,
    pub vision_range: f64,
    /// bucket half-angles, strictly nested: dead_centre < centre < side
    pub dead_centre_cutoff: f64,
    pub centre_cutoff: f64,
    pub side_cutoff: f64,
    pub thrust: f64,
    pub turn_rate: f64,
    pub friction: f64,
    pub bullet_speed: f64,
    pub bullet_range: f64,
    pub asteroid_radius: f64,
    pub n_asteroids: usize,
    pub seed: u64,
    pub tick_rate: f64,
}

impl Default for AsteroidsConfig {
    fn default() -> AsteroidsConfig {
        AsteroidsConfig {
            width: 800.0,
            height: 600.0,
            vision_range: 300.0,
            dead_centre_cutoff: 0.05,
            centre_cutoff: 0.3,
            side_cutoff: PI / 2.0,
            thrust: 0.4,
            turn_rate: 0.04,
            friction: 0.95,
            bullet_speed: 12.0,
            bullet_range: 400.0,
            asteroid_radius: 30.0,
            n_asteroids: 3,
            seed: 1,
            tick_rate: 20.0,
        }
    }
}

impl AsteroidsConfig {
    pub fn from_config(cfg: &BTreeMap<String, String>) -> AsteroidsConfig {
        let d = AsteroidsConfig::default();
        AsteroidsConfig {
            width: config_f64(cfg, "width", d.width),
            height: config_f64(cfg, "height", d.height),
            vision_range: config_f64(cfg, "vision_range", d.vision_range),
            dead_centre_cutoff: config_f64(cfg, "dead_centre_cutoff", d.dead_centre_cutoff),
            centre_cutoff: config_f64(cfg, "centre_cutoff", d.centre_cutoff),
            side_cutoff: config_f64(cfg, "side_cutoff", d.side_cutoff),
            thrust: config_f64(cfg, "thrust", d.thrust),
            turn_rate: config_f64(cfg, "turn_rate", d.turn_rate),
            friction: config_f64(cfg, "friction", d.friction),
            bullet_speed: config_f64(cfg, "bullet_speed", d.bullet_speed),
            bullet_range: config_f64(cfg, "bullet_range", d.bullet_range),
            asteroid_radius: config_f64(cfg, "asteroid_radius", d.asteroid_radius),
            n_asteroids: config_u64(cfg, "n_asteroids", d.n_asteroids as u64) as usize,
            seed: config_u64(cfg, "seed", d.seed),
            tick_rate: config_f64(cfg, "tick_rate", d.tick_rate),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShipState {
    pub x: f64,
    pub y: f64,
    /// radians, 0 = east, counterclockwise positive
    pub heading: f64,
    pub speed: f64,
    pub active_controls: BTreeSet<String>,
}

#[derive(Debug, Clone)]
pub struct AsteroidState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub radius: f64,
}

#[derive(Debug, Clone)]
struct Bullet {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    ttl: u32,
}

#[derive(Debug, Clone)]
pub struct AsteroidsWorld {
    pub cfg: AsteroidsConfig,
    pub ship: ShipState,
    pub asteroids: Vec<AsteroidState>,
    bullets: Vec<Bullet>,
}

fn normalize_centered(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

fn normalize_positive(mut a: f64) -> f64 {
    a %= 2.0 * PI;
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a
}

impl AsteroidsWorld {
    /// Ship in the middle; asteroids seeded into the forward field of
    /// view (the program never turns without a sighting, so a world with
    /// everything behind the ship would be unplayable by design).
    pub fn new(cfg: AsteroidsConfig) -> AsteroidsWorld {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let ship = ShipState {
            x: cfg.width / 2.0,
            y: cfg.height / 2.0,
            heading: 0.0,
            speed: 0.0,
            active_controls: BTreeSet::new(),
        };
        let mut asteroids = Vec::new();
        for _ in 0..cfg.n_asteroids {
            let bearing: f64 = rng.gen_range(-0.7..0.7);
            let dist: f64 = rng.gen_range(150.0..260.0);
            asteroids.push(AsteroidState {
                x: ship.x + dist * bearing.cos(),
                y: ship.y + dist * bearing.sin(),
                vx: rng.gen_range(-0.3..0.3),
                vy: rng.gen_range(-0.3..0.3),
                radius: cfg.asteroid_radius,
            });
        }
        AsteroidsWorld { cfg, ship, asteroids, bullets: Vec::new() }
    }

    fn direction_bucket(&self, bearing: f64) -> Option<&'static str> {
        let b = bearing.abs();
        if b <= self.cfg.dead_centre_cutoff {
            Some("dead_centre")
        } else if b <= self.cfg.centre_cutoff {
            Some("centre")
        } else if b <= self.cfg.side_cutoff {
            Some(if bearing > 0.0 { "left" } else { "right" })
        } else {
            None // behind the ship
        }
    }
}

impl SimWorld for AsteroidsWorld {
    fn sense(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for a in &self.asteroids {
            let dx = a.x - self.ship.x;
            let dy = a.y - self.ship.y;
            let dist = (dx * dx + dy * dy).sqrt();
            if dist > self.cfg.vision_range {
                continue;
            }
            let bearing = normalize_centered(dy.atan2(dx) - self.ship.heading);
            if let Some(bucket) = self.direction_bucket(bearing) {
                out.push(Term::compound(
                    "see",
                    vec![
                        Term::atom("asteroid"),
                        Term::atom(bucket),
                        Term::float((dist * 10.0).round() / 10.0),
                    ],
                ));
            }
        }
        out.push(Term::compound(
            "facing_direction",
            vec![Term::float((self.ship.heading * 1000.0).round() / 1000.0)],
        ));
        out.push(Term::compound(
            "speed",
            vec![Term::float((self.ship.speed * 100.0).round() / 100.0)],
        ));
        out
    }

    fn apply_controls(&mut self, controls: &[Term]) {
        let mut active = BTreeSet::new();
        for c in controls {
            match c {
                Term::Atom(name)
                    if matches!(
                        name.as_str(),
                        "turn_left" | "turn_right" | "move_forward" | "move_backward"
                            | "shoot" | "nothing"
                    ) =>
                {
                    active.insert(name.clone());
                }
                other => log::warn!(
                    "asteroids world ignores {}",
                    crate::term::format_term(other)
                ),
            }
        }
        self.ship.active_controls = active;
    }

    fn step(&mut self) {
        let cfg = self.cfg.clone();
        let active = |name: &str| self.ship.active_controls.contains(name);

        if active("turn_left") {
            self.ship.heading = normalize_positive(self.ship.heading + cfg.turn_rate);
        }
        if active("turn_right") {
            self.ship.heading = normalize_positive(self.ship.heading - cfg.turn_rate);
        }
        if active("move_forward") {
            self.ship.speed += cfg.thrust;
        }
        if active("move_backward") {
            self.ship.speed = (self.ship.speed - cfg.thrust).max(0.0);
        }
        self.ship.speed *= cfg.friction;
        self.ship.x = (self.ship.x + self.ship.speed * self.ship.heading.cos())
            .rem_euclid(cfg.width);
        self.ship.y = (self.ship.y + self.ship.speed * self.ship.heading.sin())
            .rem_euclid(cfg.height);

        if active("shoot") {
            self.bullets.push(Bullet {
                x: self.ship.x,
                y: self.ship.y,
                vx: cfg.bullet_speed * self.ship.heading.cos(),
                vy: cfg.bullet_speed * self.ship.heading.sin(),
                ttl: (cfg.bullet_range / cfg.bullet_speed).ceil() as u32,
            });
        }

        for a in &mut self.asteroids {
            a.x = (a.x + a.vx).rem_euclid(cfg.width);
            a.y = (a.y + a.vy).rem_euclid(cfg.height);
        }
        for b in &mut self.bullets {
            b.x = (b.x + b.vx).rem_euclid(cfg.width);
            b.y = (b.y + b.vy).rem_euclid(cfg.height);
            b.ttl = b.ttl.saturating_sub(1);
        }
        self.bullets.retain(|b| b.ttl > 0);

        // circle-overlap collisions remove the asteroid and the bullet
        let bullets = std::mem::take(&mut self.bullets);
        for b in bullets {
            let mut hit = false;
            self.asteroids.retain(|a| {
                if hit {
                    return true;
                }
                let dx = a.x - b.x;
                let dy = a.y - b.y;
                if dx * dx + dy * dy <= a.radius * a.radius {
                    hit = true;
                    false
                } else {
                    true
                }
            });
            if !hit {
                self.bullets.push(b);
            }
        }
    }

    fn tick_rate(&self) -> f64 {
        self.cfg.tick_rate
    }
}
