//! The `key = value` run configuration.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use kinetic_core::scenario::{collision_boundary, default_band, CollisionParams};
use kinetic_core::{
    Relaxation, SchemeOperator, Side, SolverSettings, SpaceGrid, TimeGrid, VelIndex, VelocityGrid,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }
}

/// Recognised keys with their defaults, in `describe` order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("L1", "1", "length of the space rectangle along x1"),
    ("L2", "1", "length along x2"),
    ("M1", "31", "interior space nodes along x1 (h1 = L1/(M1+1))"),
    ("M2", "31", "interior space nodes along x2"),
    ("ah1", "0.5", "velocity grid step along alpha1"),
    ("ah2", "0.5", "velocity grid step along alpha2"),
    ("MR1", "2", "velocity nodes below zero along alpha1"),
    ("PR1", "2", "velocity nodes above zero along alpha1"),
    ("MR2", "2", "velocity nodes below zero along alpha2"),
    ("PR2", "2", "velocity nodes above zero along alpha2"),
    ("T", "3", "final time"),
    ("N", "300", "number of time steps (tau = T/N)"),
    ("nu", "0.002", "diffusion coefficient, >= 0"),
    ("kappa", "5", "mixer strength"),
    (
        "relaxation",
        "auto",
        "Richardson parameter s: auto (1/d) or a positive number",
    ),
    (
        "tol_linear",
        "1e-10",
        "Richardson residual tolerance (max norm)",
    ),
    ("max_linear_iters", "500", "Richardson iteration cap"),
    ("tol_picard", "1e-8", "Picard update tolerance (max norm)"),
    (
        "picard_relative",
        "true",
        "scale tol_picard by 1 + max|u^n|",
    ),
    ("max_picard_iters", "50", "Picard iteration cap per step"),
    ("scenario", "collision", "collision, zero or uniform"),
    (
        "uniform_value",
        "1",
        "initial density of the uniform scenario",
    ),
    (
        "ramp_rate",
        "0.02",
        "collision inflow height growth per step",
    ),
    ("base_height", "0", "collision inflow height at step 0"),
    (
        "sides",
        "left,right,bottom,top",
        "collision sides with inflow, or none",
    ),
    (
        "band_left",
        "default",
        "inflow velocity nodes on the left side, e.g. `2:0 1:0`",
    ),
    (
        "band_right",
        "default",
        "inflow velocity nodes on the right side",
    ),
    (
        "band_bottom",
        "default",
        "inflow velocity nodes on the bottom side",
    ),
    (
        "band_top",
        "default",
        "inflow velocity nodes on the top side",
    ),
    (
        "snapshots",
        "0,final",
        "steps with field snapshots: integers, final, all or none",
    ),
    (
        "snapshot_every",
        "0",
        "additional snapshot every k steps (0 = off)",
    ),
    (
        "eps_div",
        "1e-12",
        "density threshold below which the velocity is undefined",
    ),
    ("output", "output", "output directory"),
    ("threads", "0", "worker threads (0 = all available)"),
];

/// `--help` text listing every key and its default.
pub fn keys_help() -> String {
    let mut s = String::from("Configuration keys (key = value, # comments):\n");
    for (key, default, doc) in KEYS {
        let _ = writeln!(s, "  {key:<18} {doc} [default: {default}]");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Collision,
    Zero,
    Uniform,
}

impl ScenarioKind {
    fn name(self) -> &'static str {
        match self {
            ScenarioKind::Collision => "collision",
            ScenarioKind::Zero => "zero",
            ScenarioKind::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub l: [f64; 2],
    pub m: [usize; 2],
    pub ah: [f64; 2],
    pub mr: [usize; 2],
    pub pr: [usize; 2],
    pub t_final: f64,
    pub steps: usize,
    pub nu: f64,
    pub kappa: f64,
    pub solver: SolverSettings,
    pub scenario: ScenarioKind,
    pub uniform_value: f64,
    pub collision: CollisionParams,
    pub snapshots: Vec<usize>,
    pub eps_div: f64,
    pub output: PathBuf,
    pub threads: usize,
}

impl Default for Config {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

impl Config {
    pub fn space(&self) -> SpaceGrid {
        SpaceGrid::new(self.l[0], self.l[1], self.m[0], self.m[1]).expect("validated")
    }

    pub fn velocity(&self) -> VelocityGrid {
        VelocityGrid::new(
            self.ah[0], self.ah[1], self.mr[0], self.pr[0], self.mr[1], self.pr[1],
        )
        .expect("validated")
    }

    pub fn time(&self) -> TimeGrid {
        TimeGrid::new(self.t_final, self.steps).expect("validated")
    }

    pub fn operator(&self) -> SchemeOperator {
        SchemeOperator::new(self.space(), self.velocity(), self.time(), self.nu).expect("validated")
    }

    /// The resolved configuration in the input format, one key per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("L1", fmt_f(self.l[0]));
        put("L2", fmt_f(self.l[1]));
        put("M1", self.m[0].to_string());
        put("M2", self.m[1].to_string());
        put("ah1", fmt_f(self.ah[0]));
        put("ah2", fmt_f(self.ah[1]));
        put("MR1", self.mr[0].to_string());
        put("PR1", self.pr[0].to_string());
        put("MR2", self.mr[1].to_string());
        put("PR2", self.pr[1].to_string());
        put("T", fmt_f(self.t_final));
        put("N", self.steps.to_string());
        put("nu", fmt_f(self.nu));
        put("kappa", fmt_f(self.kappa));
        put(
            "relaxation",
            match self.solver.relaxation {
                Relaxation::Auto => "auto".to_string(),
                Relaxation::Fixed(s) => fmt_f(s),
            },
        );
        put("tol_linear", fmt_f(self.solver.tol_linear));
        put("max_linear_iters", self.solver.max_linear_iters.to_string());
        put("tol_picard", fmt_f(self.solver.tol_picard));
        put("picard_relative", self.solver.picard_relative.to_string());
        put("max_picard_iters", self.solver.max_picard_iters.to_string());
        put("scenario", self.scenario.name().to_string());
        put("uniform_value", fmt_f(self.uniform_value));
        put("ramp_rate", fmt_f(self.collision.ramp_rate));
        put("base_height", fmt_f(self.collision.base_height));
        let sides: Vec<&str> = Side::ALL
            .iter()
            .filter(|s| self.collision.enabled(**s))
            .map(|s| side_name(*s))
            .collect();
        put(
            "sides",
            if sides.is_empty() {
                "none".into()
            } else {
                sides.join(",")
            },
        );
        for side in Side::ALL {
            let band: Vec<String> = self
                .collision
                .band(side)
                .iter()
                .map(|l| format!("{}:{}", l.l1, l.l2))
                .collect();
            put(&format!("band_{}", side_name(side)), band.join(" "));
        }
        let snaps: Vec<String> = self.snapshots.iter().map(|n| n.to_string()).collect();
        put(
            "snapshots",
            if snaps.is_empty() {
                "none".into()
            } else {
                snaps.join(",")
            },
        );
        put("snapshot_every", "0".into());
        put("eps_div", fmt_f(self.eps_div));
        put("output", self.output.display().to_string());
        put("threads", self.threads.to_string());
        s
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Left => "left",
        Side::Right => "right",
        Side::Bottom => "bottom",
        Side::Top => "top",
    }
}

fn parse_side(s: &str) -> Option<Side> {
    Side::ALL.into_iter().find(|side| side_name(*side) == s)
}

/// Raw values with the line they came from.
struct Entries(Vec<(String, String, usize)>);

impl Entries {
    fn raw(&self, key: &str) -> (Option<usize>, String) {
        match self.0.iter().find(|(k, _, _)| k == key) {
            Some((_, v, line)) => (Some(*line), v.clone()),
            None => {
                let default = KEYS
                    .iter()
                    .find(|(k, _, _)| *k == key)
                    .expect("known key")
                    .1;
                (None, default.to_string())
            }
        }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.raw(key).0
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, ConfigError> {
        let (line, v) = self.raw(key);
        v.parse()
            .map_err(|_| ConfigError::new(line, key, format!("expected {what}, got `{v}`")))
    }

    fn real(&self, key: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key, "a number")?;
        if !v.is_finite() {
            return Err(ConfigError::new(self.line(key), key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.real(key)?;
        if v <= 0.0 {
            return Err(ConfigError::new(
                self.line(key),
                key,
                format!("must be > 0, got {v}"),
            ));
        }
        Ok(v)
    }

    fn nonnegative(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.real(key)?;
        if v < 0.0 {
            return Err(ConfigError::new(
                self.line(key),
                key,
                format!("must be ≥ 0, got {v}"),
            ));
        }
        Ok(v)
    }

    fn count(&self, key: &str, min: usize) -> Result<usize, ConfigError> {
        let v: usize = self.parse(key, "a nonnegative integer")?;
        if v < min {
            return Err(ConfigError::new(
                self.line(key),
                key,
                format!("must be ≥ {min}, got {v}"),
            ));
        }
        Ok(v)
    }

    fn boolean(&self, key: &str) -> Result<bool, ConfigError> {
        self.parse(key, "true or false")
    }
}

fn parse_band(
    entries: &Entries,
    key: &str,
    side: Side,
    vg: &VelocityGrid,
) -> Result<Vec<VelIndex>, ConfigError> {
    let (line, v) = entries.raw(key);
    if v == "default" {
        return Ok(default_band(side, vg));
    }
    v.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|t| !t.is_empty())
        .map(|tok| {
            let bad = || ConfigError::new(line, key, format!("expected l1:l2 pairs, got `{tok}`"));
            let (a, b) = tok.split_once(':').ok_or_else(bad)?;
            Ok(VelIndex::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn parse_snapshots(entries: &Entries, steps: usize) -> Result<Vec<usize>, ConfigError> {
    let (line, v) = entries.raw("snapshots");
    let mut out = Vec::new();
    for tok in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok {
            "none" => {}
            "final" => out.push(steps),
            "all" => out.extend(0..=steps),
            _ => {
                let n: usize = tok.parse().map_err(|_| {
                    ConfigError::new(
                        line,
                        "snapshots",
                        format!("expected a step number, got `{tok}`"),
                    )
                })?;
                if n > steps {
                    return Err(ConfigError::new(
                        line,
                        "snapshots",
                        format!("step {n} is beyond N = {steps}"),
                    ));
                }
                out.push(n);
            }
        }
    }
    let every = entries.count("snapshot_every", 0)?;
    if every > 0 {
        out.extend((0..=steps).step_by(every));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Parses and validates a configuration; absent keys take their defaults.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::new(
                Some(line),
                content,
                "expected `key = value`",
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _, _)| *k == key) {
            return Err(ConfigError::new(Some(line), key, "unknown key"));
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::new(Some(line), key, "given more than once"));
        }
        entries.push((key.to_string(), value.to_string(), line));
    }
    let e = Entries(entries);

    let l = [e.positive("L1")?, e.positive("L2")?];
    let m = [e.count("M1", 1)?, e.count("M2", 1)?];
    let ah = [e.positive("ah1")?, e.positive("ah2")?];
    let mr = [e.count("MR1", 0)?, e.count("MR2", 0)?];
    let pr = [e.count("PR1", 0)?, e.count("PR2", 0)?];
    let t_final = e.positive("T")?;
    let steps = e.count("N", 1)?;
    let nu = e.nonnegative("nu")?;
    let kappa = e.real("kappa")?;

    let relaxation = match e.raw("relaxation").1.as_str() {
        "auto" => Relaxation::Auto,
        _ => Relaxation::Fixed(e.positive("relaxation")?),
    };
    let solver = SolverSettings {
        relaxation,
        tol_linear: e.positive("tol_linear")?,
        max_linear_iters: e.count("max_linear_iters", 1)?,
        tol_picard: e.positive("tol_picard")?,
        picard_relative: e.boolean("picard_relative")?,
        max_picard_iters: e.count("max_picard_iters", 1)?,
    };

    let scenario = match e.raw("scenario").1.as_str() {
        "collision" => ScenarioKind::Collision,
        "zero" => ScenarioKind::Zero,
        "uniform" => ScenarioKind::Uniform,
        other => {
            return Err(ConfigError::new(
                e.line("scenario"),
                "scenario",
                format!("expected collision, zero or uniform, got `{other}`"),
            ))
        }
    };
    let uniform_value = e.real("uniform_value")?;

    let space = SpaceGrid::new(l[0], l[1], m[0], m[1])
        .map_err(|err| ConfigError::new(None, "M1", err.to_string()))?;
    let velocity = VelocityGrid::new(ah[0], ah[1], mr[0], pr[0], mr[1], pr[1])
        .map_err(|err| ConfigError::new(None, "ah1", err.to_string()))?;
    TimeGrid::new(t_final, steps).map_err(|err| ConfigError::new(None, "T", err.to_string()))?;

    let mut collision = CollisionParams::new(
        &velocity,
        e.nonnegative("ramp_rate")?,
        e.nonnegative("base_height")?,
    );
    let (sides_line, sides) = e.raw("sides");
    let mut enabled = [false; 4];
    for tok in sides
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty() && *t != "none")
    {
        let side = parse_side(tok).ok_or_else(|| {
            ConfigError::new(
                sides_line,
                "sides",
                format!("expected left, right, bottom, top or none, got `{tok}`"),
            )
        })?;
        enabled[side as usize] = true;
    }
    for side in Side::ALL {
        collision.set_enabled(side, enabled[side as usize]);
        let key = format!("band_{}", side_name(side));
        let band = parse_band(&e, &key, side, &velocity)?;
        collision.set_band(side, band.clone());
        // validate one side at a time so the error can name its key
        let mut single = CollisionParams::new(&velocity, 0.0, 0.0);
        for s in Side::ALL {
            single.set_band(s, Vec::new());
        }
        single.set_band(side, band);
        collision_boundary(single, &space, &velocity)
            .map_err(|err| ConfigError::new(e.line(&key), &key, err.to_string()))?;
    }

    let snapshots = parse_snapshots(&e, steps)?;
    let eps_div = e.nonnegative("eps_div")?;
    let output = PathBuf::from(e.raw("output").1);
    let threads = e.count("threads", 0)?;

    Ok(Config {
        l,
        m,
        ah,
        mr,
        pr,
        t_final,
        steps,
        nu,
        kappa,
        solver,
        scenario,
        uniform_value,
        collision,
        snapshots,
        eps_div,
        output,
        threads,
    })
}
