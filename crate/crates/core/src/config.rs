//! Flat `section.key = value` scenario files.
//!
//! ```text
//! # comment
//! link1.sr.m = 1
//! grid.n_doppler = 8
//! ```
//!
//! Every key must be known and may appear once. Optional keys may be
//! omitted; all others are required. [`Scenario::to_config_string`]
//! writes a file that parses back to an identical scenario.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::fading::{NakagamiParams, SRParams};
use crate::montecarlo::MCConfig;
use crate::otfs::OTFSGrid;
use crate::outage::{db_to_linear, LinkBudget};

pub const MAX_SWEEP_POINTS: usize = 10_000;
pub const MAX_GRID_BINS: usize = 1 << 16;
pub const MAX_WORKERS: usize = 1024;
pub const MAX_ANTENNAS: usize = 256;

pub const FHS_PRESET: &str = include_str!("../presets/fhs.cfg");
pub const KARASAWA_PRESET: &str = include_str!("../presets/karasawa.cfg");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, 0 when the problem is not tied to a line.
    pub line: usize,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, &self.key) {
            (0, Some(k)) => write!(f, "{k}: {}", self.message),
            (0, None) => write!(f, "{}", self.message),
            (l, Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (l, None) => write!(f, "line {l}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(line: usize, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        key: key.map(str::to_owned),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link1Config {
    pub sr: SRParams,
    pub antennas: usize,
    pub tx_power: f64,
    pub distance: f64,
    pub pathloss_exp: f64,
    pub noise_power: f64,
    pub snr_threshold_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link2Config {
    pub nakagami: NakagamiParams,
    /// Fixed relay power. When absent the relay follows the swept SNR.
    pub tx_power: Option<f64>,
    pub distance: f64,
    pub pathloss_exp: f64,
    pub noise_power: f64,
    pub snr_threshold_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
}

impl SweepConfig {
    /// Inclusive grid `start, start+step, …` up to `stop` (with a small
    /// slack so that `stop` itself is kept despite rounding).
    pub fn points(&self) -> Vec<f64> {
        let span = self.snr_db_stop - self.snr_db_start;
        let count = (span / self.snr_db_step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.snr_db_start + i as f64 * self.snr_db_step)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub link1: Link1Config,
    pub link2: Link2Config,
    pub grid: OTFSGrid,
    pub mc: MCConfig,
    pub sweep: SweepConfig,
}

impl Scenario {
    /// Link-1 budget with the transmit power set for `snr_db` average SNR.
    pub fn link1_budget(&self, snr_db: f64) -> LinkBudget {
        let l = &self.link1;
        LinkBudget {
            tx_power: l.tx_power,
            distance: l.distance,
            pathloss_exp: l.pathloss_exp,
            noise_power: l.noise_power,
            snr_threshold: db_to_linear(l.snr_threshold_db),
        }
        .at_average_snr_db(snr_db)
    }

    pub fn link2_budget(&self, snr_db: f64) -> LinkBudget {
        let l = &self.link2;
        let base = LinkBudget {
            tx_power: l.tx_power.unwrap_or(1.0),
            distance: l.distance,
            pathloss_exp: l.pathloss_exp,
            noise_power: l.noise_power,
            snr_threshold: db_to_linear(l.snr_threshold_db),
        };
        match l.tx_power {
            Some(_) => base,
            None => base.at_average_snr_db(snr_db),
        }
    }

    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let l1 = &self.link1;
        let l2 = &self.link2;
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("link1.sr.m", l1.sr.m.to_string());
        put("link1.sr.b0", fmt_f64(l1.sr.b0));
        put("link1.sr.omega", fmt_f64(l1.sr.omega));
        put("link1.antennas", l1.antennas.to_string());
        put("link1.tx_power", fmt_f64(l1.tx_power));
        put("link1.distance", fmt_f64(l1.distance));
        put("link1.pathloss_exp", fmt_f64(l1.pathloss_exp));
        put("link1.noise_power", fmt_f64(l1.noise_power));
        put("link1.snr_threshold_db", fmt_f64(l1.snr_threshold_db));
        put("link2.nakagami.m", fmt_f64(l2.nakagami.m));
        put("link2.nakagami.omega", fmt_f64(l2.nakagami.omega));
        if let Some(p) = l2.tx_power {
            put("link2.tx_power", fmt_f64(p));
        }
        put("link2.distance", fmt_f64(l2.distance));
        put("link2.pathloss_exp", fmt_f64(l2.pathloss_exp));
        put("link2.noise_power", fmt_f64(l2.noise_power));
        put("link2.snr_threshold_db", fmt_f64(l2.snr_threshold_db));
        put("grid.n_doppler", self.grid.n_doppler.to_string());
        put("grid.m_delay", self.grid.m_delay.to_string());
        if let Some(t) = self.grid.symbol_period {
            put("grid.symbol_period", fmt_f64(t));
        }
        if let Some(df) = self.grid.subcarrier_spacing {
            put("grid.subcarrier_spacing", fmt_f64(df));
        }
        put("mc.trials", self.mc.trials.to_string());
        put("mc.seed", self.mc.master_seed.to_string());
        put("mc.workers", self.mc.workers.to_string());
        put("mc.histogram_bins", self.mc.histogram_bins.to_string());
        put("sweep.snr_db_start", fmt_f64(self.sweep.snr_db_start));
        put("sweep.snr_db_stop", fmt_f64(self.sweep.snr_db_stop));
        put("sweep.snr_db_step", fmt_f64(self.sweep.snr_db_step));
        s
    }
}

/// Shortest representation that parses back to the same bits.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Clone, Copy)]
enum Kind {
    F64,
    U32,
    Usize,
    U64,
}

const KEYS: &[(&str, Kind, bool)] = &[
    ("link1.sr.m", Kind::U32, true),
    ("link1.sr.b0", Kind::F64, true),
    ("link1.sr.omega", Kind::F64, true),
    ("link1.antennas", Kind::Usize, true),
    ("link1.tx_power", Kind::F64, true),
    ("link1.distance", Kind::F64, true),
    ("link1.pathloss_exp", Kind::F64, true),
    ("link1.noise_power", Kind::F64, true),
    ("link1.snr_threshold_db", Kind::F64, true),
    ("link2.nakagami.m", Kind::F64, true),
    ("link2.nakagami.omega", Kind::F64, true),
    ("link2.tx_power", Kind::F64, false),
    ("link2.distance", Kind::F64, true),
    ("link2.pathloss_exp", Kind::F64, true),
    ("link2.noise_power", Kind::F64, true),
    ("link2.snr_threshold_db", Kind::F64, true),
    ("grid.n_doppler", Kind::Usize, true),
    ("grid.m_delay", Kind::Usize, true),
    ("grid.symbol_period", Kind::F64, false),
    ("grid.subcarrier_spacing", Kind::F64, false),
    ("mc.trials", Kind::Usize, true),
    ("mc.seed", Kind::U64, true),
    ("mc.workers", Kind::Usize, true),
    ("mc.histogram_bins", Kind::Usize, true),
    ("sweep.snr_db_start", Kind::F64, true),
    ("sweep.snr_db_stop", Kind::F64, true),
    ("sweep.snr_db_step", Kind::F64, true),
];

#[derive(Clone, Copy)]
enum Value {
    F(f64),
    U(u64),
}

struct Entries {
    map: HashMap<&'static str, (usize, Value)>,
}

impl Entries {
    fn f(&self, key: &str) -> Option<(usize, f64)> {
        self.map.get(key).map(|&(l, v)| match v {
            Value::F(x) => (l, x),
            Value::U(x) => (l, x as f64),
        })
    }

    fn u(&self, key: &str) -> Option<(usize, u64)> {
        self.map.get(key).and_then(|&(l, v)| match v {
            Value::U(x) => Some((l, x)),
            Value::F(_) => None,
        })
    }

    fn req_f(&self, key: &str) -> f64 {
        self.f(key).map(|x| x.1).expect("required keys checked")
    }

    fn req_u(&self, key: &str) -> u64 {
        self.u(key).map(|x| x.1).expect("required keys checked")
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.0)
    }
}

fn parse_value(kind: Kind, raw: &str, line: usize, key: &str) -> Result<Value, ConfigError> {
    let bad = |what: &str| err(line, Some(key), format!("expected {what}, got {raw:?}"));
    match kind {
        Kind::F64 => {
            let v: f64 = raw.parse().map_err(|_| bad("a number"))?;
            if !v.is_finite() {
                return Err(err(line, Some(key), "value must be finite"));
            }
            Ok(Value::F(v))
        }
        Kind::U32 => raw
            .parse::<u32>()
            .map(|v| Value::U(v as u64))
            .map_err(|_| bad("a non-negative integer")),
        Kind::Usize | Kind::U64 => raw
            .parse::<u64>()
            .map(Value::U)
            .map_err(|_| bad("a non-negative integer")),
    }
}

/// Parses a scenario file and checks every cross-field invariant.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut map = HashMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| err(line, None, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        let &(name, kind, _) = KEYS
            .iter()
            .find(|e| e.0 == k)
            .ok_or_else(|| err(line, Some(k), "unknown key"))?;
        if v.is_empty() {
            return Err(err(line, Some(k), "missing value"));
        }
        let value = parse_value(kind, v, line, k)?;
        if let Some((first, _)) = map.insert(name, (line, value)) {
            return Err(err(line, Some(k), format!("duplicate key, first set on line {first}")));
        }
    }
    for &(name, _, required) in KEYS {
        if required && !map.contains_key(name) {
            return Err(err(0, Some(name), "missing required key"));
        }
    }
    build(&Entries { map })
}

fn positive(e: &Entries, key: &str) -> Result<f64, ConfigError> {
    let v = e.req_f(key);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(err(e.line(key), Some(key), format!("must be > 0, got {v}")))
    }
}

fn build(e: &Entries) -> Result<Scenario, ConfigError> {
    let at = |key: &str, res: crate::Result<()>| res.map_err(|x| err(e.line(key), Some(key), x.to_string()));

    let sr_m = e.req_u("link1.sr.m");
    if sr_m == 0 {
        return Err(err(e.line("link1.sr.m"), Some("link1.sr.m"), "must be >= 1"));
    }
    let sr = SRParams {
        m: sr_m as u32,
        b0: positive(e, "link1.sr.b0")?,
        omega: e.req_f("link1.sr.omega"),
    };
    at("link1.sr.omega", sr.validate())?;

    let antennas = e.req_u("link1.antennas") as usize;
    if antennas == 0 || antennas > MAX_ANTENNAS {
        return Err(err(
            e.line("link1.antennas"),
            Some("link1.antennas"),
            format!("must be in 1..={MAX_ANTENNAS}"),
        ));
    }
    let link1 = Link1Config {
        sr,
        antennas,
        tx_power: positive(e, "link1.tx_power")?,
        distance: positive(e, "link1.distance")?,
        pathloss_exp: positive(e, "link1.pathloss_exp")?,
        noise_power: positive(e, "link1.noise_power")?,
        snr_threshold_db: e.req_f("link1.snr_threshold_db"),
    };

    let nakagami = NakagamiParams {
        m: e.req_f("link2.nakagami.m"),
        omega: e.req_f("link2.nakagami.omega"),
    };
    at("link2.nakagami.m", nakagami.validate())?;
    let tx2 = match e.f("link2.tx_power") {
        Some((l, v)) if !(v > 0.0) => return Err(err(l, Some("link2.tx_power"), format!("must be > 0, got {v}"))),
        other => other.map(|x| x.1),
    };
    let link2 = Link2Config {
        nakagami,
        tx_power: tx2,
        distance: positive(e, "link2.distance")?,
        pathloss_exp: positive(e, "link2.pathloss_exp")?,
        noise_power: positive(e, "link2.noise_power")?,
        snr_threshold_db: e.req_f("link2.snr_threshold_db"),
    };

    let n = e.req_u("grid.n_doppler") as usize;
    let m = e.req_u("grid.m_delay") as usize;
    let mut grid = OTFSGrid::new(n, m).map_err(|x| err(e.line("grid.n_doppler"), Some("grid.n_doppler"), x.to_string()))?;
    if n.saturating_mul(m) > MAX_GRID_BINS {
        return Err(err(
            e.line("grid.m_delay"),
            Some("grid.m_delay"),
            format!("N*M must be <= {MAX_GRID_BINS}"),
        ));
    }
    match (e.f("grid.symbol_period"), e.f("grid.subcarrier_spacing")) {
        (None, None) => {}
        (Some((_, t)), Some((l, df))) => {
            grid = grid
                .with_physical(t, df)
                .map_err(|x| err(l, Some("grid.subcarrier_spacing"), x.to_string()))?;
        }
        (Some((l, _)), None) | (None, Some((l, _))) => {
            return Err(err(
                l,
                None,
                "symbol_period and subcarrier_spacing must be given together",
            ))
        }
    }

    let workers = e.req_u("mc.workers") as usize;
    if workers == 0 || workers > MAX_WORKERS {
        return Err(err(
            e.line("mc.workers"),
            Some("mc.workers"),
            format!("must be in 1..={MAX_WORKERS}"),
        ));
    }
    let mc = MCConfig {
        trials: e.req_u("mc.trials") as usize,
        master_seed: e.req_u("mc.seed"),
        workers,
        histogram_bins: e.req_u("mc.histogram_bins") as usize,
    };
    if mc.trials == 0 {
        return Err(err(e.line("mc.trials"), Some("mc.trials"), "must be >= 1"));
    }
    if mc.histogram_bins < 10 {
        return Err(err(e.line("mc.histogram_bins"), Some("mc.histogram_bins"), "must be >= 10"));
    }

    let sweep = SweepConfig {
        snr_db_start: e.req_f("sweep.snr_db_start"),
        snr_db_stop: e.req_f("sweep.snr_db_stop"),
        snr_db_step: e.req_f("sweep.snr_db_step"),
    };
    if !(sweep.snr_db_step > 0.0) {
        return Err(err(e.line("sweep.snr_db_step"), Some("sweep.snr_db_step"), "must be > 0"));
    }
    if sweep.snr_db_stop < sweep.snr_db_start {
        return Err(err(
            e.line("sweep.snr_db_stop"),
            Some("sweep.snr_db_stop"),
            "must be >= sweep.snr_db_start",
        ));
    }
    let span_steps = (sweep.snr_db_stop - sweep.snr_db_start) / sweep.snr_db_step;
    if !(span_steps < MAX_SWEEP_POINTS as f64) {
        return Err(err(
            e.line("sweep.snr_db_step"),
            Some("sweep.snr_db_step"),
            format!("sweep must have at most {MAX_SWEEP_POINTS} points"),
        ));
    }

    Ok(Scenario {
        link1,
        link2,
        grid,
        mc,
        sweep,
    })
}

pub fn fhs_scenario() -> Scenario {
    parse_scenario(FHS_PRESET).expect("shipped preset parses")
}

pub fn karasawa_scenario() -> Scenario {
    parse_scenario(KARASAWA_PRESET).expect("shipped preset parses")
}
