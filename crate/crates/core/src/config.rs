//! Scenario description, validation and the flat `key = value` file format.
//!
//! Keys mirror the struct fields; nested values use dotted paths
//! (`weight_params.alpha1`, `mobility.v_max`) and flows are an indexed list
//! (`flow.0.src`, `flow.0.interval`, ...). Lines starting with `#` are
//! comments. `flows = none` clears the flow list. Missing keys keep their [`ScenarioConfig::default`] value.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{NodeId, WeightParams};
use crate::olsr::TcRedundancy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Standard,
    MultiMetric,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Standard => "standard",
            Protocol::MultiMetric => "multimetric",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "standard" | "olsr" => Ok(Protocol::Standard),
            "multimetric" | "multi-metric" | "mm" => Ok(Protocol::MultiMetric),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mobility {
    Static,
    RandomWaypoint { v_min: f64, v_max: f64, pause: f64 },
}

impl Mobility {
    /// Random waypoint with `v_min = v_max / 10` and no pause.
    pub fn random_waypoint(v_max: f64) -> Self {
        Mobility::RandomWaypoint {
            v_min: v_max / 10.0,
            v_max,
            pause: 0.0,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self, Mobility::Static)
    }

    /// Short label used in file names and CSV rows.
    pub fn label(&self) -> String {
        match self {
            Mobility::Static => "static".to_string(),
            Mobility::RandomWaypoint { v_max, .. } => format!("rwp{v_max}"),
        }
    }
}

/// How long a run lasts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunLength {
    /// Fixed horizon in seconds.
    Fixed(f64),
    /// Stop at the first node depletion, or at `max` seconds.
    UntilDepletion { max: f64 },
}

impl RunLength {
    pub fn horizon(&self) -> f64 {
        match *self {
            RunLength::Fixed(t) => t,
            RunLength::UntilDepletion { max } => max,
        }
    }
}

/// A constant-bit-rate flow. Endpoints left as `None` are drawn from the
/// run's random stream.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub flow_id: usize,
    pub src: Option<NodeId>,
    pub dst: Option<NodeId>,
    pub packet_size: usize,
    pub interval: f64,
    pub start: f64,
    /// `None` means until the end of the run.
    pub stop: Option<f64>,
}

impl FlowSpec {
    pub fn random(flow_id: usize, interval: f64) -> Self {
        FlowSpec {
            flow_id,
            src: None,
            dst: None,
            packet_size: 512,
            interval,
            start: 30.0,
            stop: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub node_count: usize,
    pub radio_range: f64,
    /// bits per second
    pub bandwidth: f64,
    pub initial_energy: f64,
    pub tx_power: f64,
    pub rx_power: f64,
    pub idle_power: f64,
    pub flows: Vec<FlowSpec>,
    pub mobility: Mobility,
    pub weight_params: WeightParams,
    pub protocol: Protocol,
    pub hello_interval: f64,
    pub tc_interval: f64,
    /// Overrides every tuple hold time. `None` holds tuples for three
    /// intervals of the message that created them.
    pub tuple_hold_time: Option<f64>,
    pub sim_duration: RunLength,
    pub seed: u64,
    pub mac_queue_capacity: usize,
    pub ttl: u8,
    pub sample_period: f64,
    /// Accepted hop-diameter band for static placements; `None` disables
    /// the placement check.
    pub diameter_gate: Option<(u32, u32)>,
    /// Minimum hop distance, in the initial topology, between randomly
    /// drawn flow endpoints. 1 accepts any distinct pair.
    pub flow_min_hops: u32,
    pub tc_redundancy: TcRedundancy,
}

impl Default for ScenarioConfig {
    /// Common parameters: 30 nodes on 2000 m x 2000 m, 7 J, 1 Mbps, three
    /// random 512 B CBR flows at 10 packets/s from t = 30 s, 250 s horizon.
    /// The radio draws 0.5 W sending and 0.25 W receiving, which puts the
    /// first depletion of a 10 packets/s multi-hop scenario past 100 s.
    fn default() -> Self {
        let node_count = 30;
        let initial_energy = 7.0;
        let mac_queue_capacity = 100;
        ScenarioConfig {
            area_width: 2000.0,
            area_height: 2000.0,
            node_count,
            radio_range: 700.0,
            bandwidth: 1_000_000.0,
            initial_energy,
            tx_power: 0.5,
            rx_power: 0.25,
            idle_power: 0.0,
            flows: (0..3).map(|i| FlowSpec::random(i, 0.1)).collect(),
            mobility: Mobility::Static,
            weight_params: WeightParams::equal_thirds(node_count, initial_energy, mac_queue_capacity),
            protocol: Protocol::MultiMetric,
            hello_interval: 2.0,
            tc_interval: 5.0,
            tuple_hold_time: None,
            sim_duration: RunLength::Fixed(250.0),
            seed: 1,
            mac_queue_capacity,
            ttl: 32,
            sample_period: 5.0,
            diameter_gate: None,
            flow_min_hops: 1,
            tc_redundancy: TcRedundancy::Selectors,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ConfigError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
    #[error("flow indices must be contiguous from 0, missing flow.{0}")]
    FlowGap(usize),
}

fn positive(errs: &mut Vec<ConfigError>, field: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(ConfigError::new(field, format!("must be > 0, got {v}")));
    }
}

fn non_negative(errs: &mut Vec<ConfigError>, field: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        errs.push(ConfigError::new(field, format!("must be >= 0, got {v}")));
    }
}

impl ScenarioConfig {
    /// Returns the config unchanged when every invariant holds, otherwise
    /// one error per violation.
    pub fn validate(self) -> Result<ScenarioConfig, ValidationErrors> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(self)
        } else {
            Err(ValidationErrors(errs))
        }
    }

    pub fn violations(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        positive(&mut errs, "area_width", self.area_width);
        positive(&mut errs, "area_height", self.area_height);
        if self.node_count < 2 {
            errs.push(ConfigError::new(
                "node_count",
                format!("must be >= 2, got {}", self.node_count),
            ));
        }
        positive(&mut errs, "radio_range", self.radio_range);
        positive(&mut errs, "bandwidth", self.bandwidth);
        positive(&mut errs, "initial_energy", self.initial_energy);
        non_negative(&mut errs, "tx_power", self.tx_power);
        non_negative(&mut errs, "rx_power", self.rx_power);
        non_negative(&mut errs, "idle_power", self.idle_power);
        positive(&mut errs, "hello_interval", self.hello_interval);
        positive(&mut errs, "tc_interval", self.tc_interval);
        positive(&mut errs, "sample_period", self.sample_period);
        if let Some(h) = self.tuple_hold_time {
            positive(&mut errs, "tuple_hold_time", h);
        }
        match self.sim_duration {
            RunLength::Fixed(t) => positive(&mut errs, "sim_duration", t),
            RunLength::UntilDepletion { max } => positive(&mut errs, "max_duration", max),
        }
        if self.ttl == 0 {
            errs.push(ConfigError::new("ttl", "must be >= 1"));
        }
        if self.flow_min_hops == 0 {
            errs.push(ConfigError::new("flow_min_hops", "must be >= 1"));
        }
        if let Some((lo, hi)) = self.diameter_gate {
            if lo > hi {
                errs.push(ConfigError::new(
                    "diameter_gate",
                    format!("empty band {lo}..{hi}"),
                ));
            }
        }

        if let Mobility::RandomWaypoint { v_min, v_max, pause } = self.mobility {
            non_negative(&mut errs, "mobility.v_min", v_min);
            positive(&mut errs, "mobility.v_max", v_max);
            non_negative(&mut errs, "mobility.pause", pause);
            if v_min > v_max {
                errs.push(ConfigError::new(
                    "mobility.v_min",
                    format!("v_min {v_min} exceeds v_max {v_max}"),
                ));
            }
        }

        let wp = &self.weight_params;
        for (name, a) in [
            ("weight_params.alpha1", wp.alpha1),
            ("weight_params.alpha2", wp.alpha2),
            ("weight_params.alpha3", wp.alpha3),
        ] {
            non_negative(&mut errs, name, a);
        }
        let sum = wp.alpha_sum();
        if (sum - 1.0).abs() > 1e-9 {
            errs.push(ConfigError::new(
                "weight_params.alpha",
                format!("alpha sum = {sum} (must be 1)"),
            ));
        }
        positive(&mut errs, "weight_params.l_max", wp.l_max);
        positive(&mut errs, "weight_params.e_max", wp.e_max);
        if !(wp.d_max >= 1.0 && wp.d_max.is_finite()) {
            errs.push(ConfigError::new(
                "weight_params.d_max",
                format!("must be >= 1, got {}", wp.d_max),
            ));
        }
        if self.mac_queue_capacity as f64 != wp.l_max {
            errs.push(ConfigError::new(
                "mac_queue_capacity",
                format!(
                    "must equal weight_params.l_max ({} != {})",
                    self.mac_queue_capacity, wp.l_max
                ),
            ));
        }

        let mut random_endpoints = 0usize;
        for (i, f) in self.flows.iter().enumerate() {
            let field = |s: &str| format!("flow.{i}.{s}");
            if f.flow_id != i {
                errs.push(ConfigError::new(field("flow_id"), "must equal list index"));
            }
            for (name, ep) in [("src", f.src), ("dst", f.dst)] {
                match ep {
                    Some(n) if n.index() >= self.node_count => errs.push(ConfigError::new(
                        field(name),
                        format!("node {} out of range", n.0),
                    )),
                    None => random_endpoints += 1,
                    _ => {}
                }
            }
            if f.src.is_some() && f.src == f.dst {
                errs.push(ConfigError::new(field("dst"), "src and dst must differ"));
            }
            if f.packet_size == 0 {
                errs.push(ConfigError::new(field("packet_size"), "must be > 0"));
            }
            positive(&mut errs, &field("interval"), f.interval);
            non_negative(&mut errs, &field("start"), f.start);
            if let Some(stop) = f.stop {
                if !(stop >= f.start) {
                    errs.push(ConfigError::new(
                        field("stop"),
                        format!("stop {stop} before start {}", f.start),
                    ));
                }
            }
        }
        if random_endpoints > self.node_count {
            errs.push(ConfigError::new(
                "flows",
                format!(
                    "{random_endpoints} random endpoints need distinct nodes but only {} exist",
                    self.node_count
                ),
            ));
        }
        errs
    }

    /// Hold time for tuples created by HELLOs.
    pub fn neighbor_hold_time(&self) -> f64 {
        self.tuple_hold_time.unwrap_or(3.0 * self.hello_interval)
    }

    /// Hold time for tuples created by TCs (topology and duplicate sets).
    pub fn topology_hold_time(&self) -> f64 {
        self.tuple_hold_time.unwrap_or(3.0 * self.tc_interval)
    }

    /// Parses the flat config format on top of the defaults.
    pub fn from_config_str(text: &str) -> Result<ScenarioConfig, ParseError> {
        let mut cfg = ScenarioConfig::default();
        let mut flows: BTreeMap<usize, FlowSpec> = BTreeMap::new();
        let mut saw_flows = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ParseError::Syntax { line: line_no })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "flows" {
                if value != "none" {
                    return Err(ParseError::BadValue {
                        line: line_no,
                        key: key.to_string(),
                        value: value.to_string(),
                        reason: "expected none".to_string(),
                    });
                }
                saw_flows = true;
                flows.clear();
            } else if let Some(rest) = key.strip_prefix("flow.") {
                saw_flows = true;
                let (n, field) = rest.split_once('.').ok_or_else(|| ParseError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                })?;
                let n: usize = n.parse().map_err(|_| ParseError::UnknownKey {
                    line: line_no,
                    key: key.to_string(),
                })?;
                let flow = flows.entry(n).or_insert_with(|| FlowSpec::random(n, 0.1));
                set_flow_field(flow, field, value).map_err(|e| e.at(line_no, key, value))?;
            } else {
                cfg.set(key, value).map_err(|e| e.at(line_no, key, value))?;
            }
        }
        if saw_flows {
            for (expect, &n) in flows.keys().enumerate() {
                if n != expect {
                    return Err(ParseError::FlowGap(expect));
                }
            }
            cfg.flows = flows.into_values().collect();
        }
        Ok(cfg)
    }

    /// Sets one top-level key. Used by the parser and for command-line
    /// overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), FieldError> {
        let wp = &mut self.weight_params;
        match key {
            "area" => {
                let (w, h) = value
                    .split_once(['x', 'X'])
                    .ok_or_else(|| FieldError::Bad("expected `WIDTHxHEIGHT`".into()))?;
                self.area_width = num(w)?;
                self.area_height = num(h)?;
            }
            "node_count" => self.node_count = num(value)?,
            "radio_range" => self.radio_range = num(value)?,
            "bandwidth" => self.bandwidth = num(value)?,
            "initial_energy" => self.initial_energy = num(value)?,
            "tx_power" => self.tx_power = num(value)?,
            "rx_power" => self.rx_power = num(value)?,
            "idle_power" => self.idle_power = num(value)?,
            "protocol" => self.protocol = value.parse().map_err(FieldError::Bad)?,
            "hello_interval" => self.hello_interval = num(value)?,
            "tc_interval" => self.tc_interval = num(value)?,
            "tuple_hold_time" => {
                self.tuple_hold_time = match value {
                    "auto" => None,
                    v => Some(num(v)?),
                }
            }
            "sim_duration" => {
                self.sim_duration = match value {
                    "until_depletion" => RunLength::UntilDepletion {
                        max: self.sim_duration.horizon(),
                    },
                    v => RunLength::Fixed(num(v)?),
                }
            }
            "max_duration" => {
                let max = num(value)?;
                if let RunLength::UntilDepletion { max: m } = &mut self.sim_duration {
                    *m = max;
                } else {
                    self.sim_duration = RunLength::UntilDepletion { max };
                }
            }
            "seed" => self.seed = num(value)?,
            "mac_queue_capacity" => self.mac_queue_capacity = num(value)?,
            "ttl" => self.ttl = num(value)?,
            "sample_period" => self.sample_period = num(value)?,
            "flow_min_hops" => self.flow_min_hops = num(value)?,
            "tc_redundancy" => self.tc_redundancy = value.parse().map_err(FieldError::Bad)?,
            "diameter_gate" => {
                self.diameter_gate = match value {
                    "off" => None,
                    v => {
                        let (lo, hi) = v
                            .split_once("..")
                            .ok_or_else(|| FieldError::Bad("expected `LO..HI` or `off`".into()))?;
                        Some((num(lo)?, num(hi)?))
                    }
                }
            }
            "mobility" => {
                self.mobility = match value {
                    "static" => Mobility::Static,
                    "random_waypoint" => match self.mobility {
                        m @ Mobility::RandomWaypoint { .. } => m,
                        Mobility::Static => Mobility::random_waypoint(2.0),
                    },
                    other => return Err(FieldError::Bad(format!("unknown mobility `{other}`"))),
                }
            }
            "mobility.v_min" | "mobility.v_max" | "mobility.pause" => {
                let v = num(value)?;
                let Mobility::RandomWaypoint { v_min, v_max, pause } = &mut self.mobility else {
                    return Err(FieldError::Bad(
                        "set `mobility = random_waypoint` first".into(),
                    ));
                };
                match key {
                    "mobility.v_min" => *v_min = v,
                    "mobility.v_max" => *v_max = v,
                    _ => *pause = v,
                }
            }
            "weight_params.alpha1" => wp.alpha1 = num(value)?,
            "weight_params.alpha2" => wp.alpha2 = num(value)?,
            "weight_params.alpha3" => wp.alpha3 = num(value)?,
            "weight_params.l_max" => wp.l_max = num(value)?,
            "weight_params.e_max" => wp.e_max = num(value)?,
            "weight_params.d_max" => wp.d_max = num(value)?,
            _ => return Err(FieldError::Unknown),
        }
        Ok(())
    }

    /// Serializes to the flat format; [`Self::from_config_str`] reads it back
    /// to an equal value.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let wp = &self.weight_params;
        let _ = writeln!(s, "area = {}x{}", self.area_width, self.area_height);
        let _ = writeln!(s, "node_count = {}", self.node_count);
        let _ = writeln!(s, "radio_range = {}", self.radio_range);
        let _ = writeln!(s, "bandwidth = {}", self.bandwidth);
        let _ = writeln!(s, "initial_energy = {}", self.initial_energy);
        let _ = writeln!(s, "tx_power = {}", self.tx_power);
        let _ = writeln!(s, "rx_power = {}", self.rx_power);
        let _ = writeln!(s, "idle_power = {}", self.idle_power);
        let _ = writeln!(s, "protocol = {}", self.protocol);
        let _ = writeln!(s, "hello_interval = {}", self.hello_interval);
        let _ = writeln!(s, "tc_interval = {}", self.tc_interval);
        match self.tuple_hold_time {
            Some(h) => {
                let _ = writeln!(s, "tuple_hold_time = {h}");
            }
            None => s.push_str("tuple_hold_time = auto\n"),
        }
        match self.sim_duration {
            RunLength::Fixed(t) => {
                let _ = writeln!(s, "sim_duration = {t}");
            }
            RunLength::UntilDepletion { max } => {
                let _ = writeln!(s, "sim_duration = until_depletion\nmax_duration = {max}");
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "mac_queue_capacity = {}", self.mac_queue_capacity);
        let _ = writeln!(s, "ttl = {}", self.ttl);
        let _ = writeln!(s, "sample_period = {}", self.sample_period);
        match self.diameter_gate {
            Some((lo, hi)) => {
                let _ = writeln!(s, "diameter_gate = {lo}..{hi}");
            }
            None => s.push_str("diameter_gate = off\n"),
        }
        let _ = writeln!(s, "flow_min_hops = {}", self.flow_min_hops);
        let _ = writeln!(s, "tc_redundancy = {}", self.tc_redundancy.as_str());
        match self.mobility {
            Mobility::Static => s.push_str("mobility = static\n"),
            Mobility::RandomWaypoint { v_min, v_max, pause } => {
                let _ = writeln!(
                    s,
                    "mobility = random_waypoint\nmobility.v_min = {v_min}\nmobility.v_max = {v_max}\nmobility.pause = {pause}"
                );
            }
        }
        let _ = writeln!(s, "weight_params.alpha1 = {}", wp.alpha1);
        let _ = writeln!(s, "weight_params.alpha2 = {}", wp.alpha2);
        let _ = writeln!(s, "weight_params.alpha3 = {}", wp.alpha3);
        let _ = writeln!(s, "weight_params.l_max = {}", wp.l_max);
        let _ = writeln!(s, "weight_params.e_max = {}", wp.e_max);
        let _ = writeln!(s, "weight_params.d_max = {}", wp.d_max);
        if self.flows.is_empty() {
            let _ = writeln!(s, "flows = none");
        }
        for f in &self.flows {
            let i = f.flow_id;
            let ep = |e: Option<NodeId>| e.map_or("random".to_string(), |n| n.0.to_string());
            let _ = writeln!(s, "flow.{i}.src = {}", ep(f.src));
            let _ = writeln!(s, "flow.{i}.dst = {}", ep(f.dst));
            let _ = writeln!(s, "flow.{i}.packet_size = {}", f.packet_size);
            let _ = writeln!(s, "flow.{i}.interval = {}", f.interval);
            let _ = writeln!(s, "flow.{i}.start = {}", f.start);
            match f.stop {
                Some(t) => {
                    let _ = writeln!(s, "flow.{i}.stop = {t}");
                }
                None => {
                    let _ = writeln!(s, "flow.{i}.stop = end");
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("unknown key")]
    Unknown,
    #[error("{0}")]
    Bad(String),
}

impl FieldError {
    fn at(self, line: usize, key: &str, value: &str) -> ParseError {
        match self {
            FieldError::Unknown => ParseError::UnknownKey {
                line,
                key: key.to_string(),
            },
            FieldError::Bad(reason) => ParseError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
                reason,
            },
        }
    }
}

fn num<T: FromStr>(v: &str) -> Result<T, FieldError>
where
    T::Err: fmt::Display,
{
    v.trim().parse().map_err(|e: T::Err| FieldError::Bad(e.to_string()))
}

fn set_flow_field(flow: &mut FlowSpec, field: &str, value: &str) -> Result<(), FieldError> {
    let endpoint = |v: &str| -> Result<Option<NodeId>, FieldError> {
        match v {
            "random" => Ok(None),
            v => Ok(Some(NodeId(num(v)?))),
        }
    };
    match field {
        "src" => flow.src = endpoint(value)?,
        "dst" => flow.dst = endpoint(value)?,
        "packet_size" => flow.packet_size = num(value)?,
        "interval" => flow.interval = num(value)?,
        "start" => flow.start = num(value)?,
        "stop" => {
            flow.stop = match value {
                "end" => None,
                v => Some(num(v)?),
            }
        }
        _ => return Err(FieldError::Unknown),
    }
    Ok(())
}
