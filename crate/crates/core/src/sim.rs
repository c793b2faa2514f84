//! Closed-loop simulation over two lossy links with an actuator buffer.
//!
//! Each step `k`:
//!
//! 1. the sensor→controller (`s1`) and controller→actuator (`s2`) outcomes
//!    are read from the pre-generated drop sequence;
//! 2. if both succeed the step is effective: the controller sends
//!    `K_q·x(k)` for `q = 1..N_drop` and the buffer refills with stamp `k`;
//! 3. the actuator applies entry `age + 1` of the buffer (zero input
//!    before the first effective step);
//! 4. the plant advances with the mode active during the step.
//!
//! Mode numbers are 1-based here and in trace files. Under
//! `RandomAtEffective` the mode for an effective step is drawn at the start
//! of that step and kept until the next effective step, so the plant is
//! constant over every inter-effective interval.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`; the
//! sensor link uses stream 0 and the control link stream 1 of the drop
//! seed, and the switching signal uses stream 2 of its own seed.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::densela::{matmul, Matrix};
use crate::ncsmodel::{lyapunov_value, GainSchedule, ModelError, SwitchedPlant};

pub const SENSOR_STREAM: u64 = 0;
pub const CONTROL_STREAM: u64 = 1;
pub const SWITCH_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{link} schedule has {len} entries, horizon is {horizon}")]
    ScheduleTooShort {
        link: &'static str,
        len: usize,
        horizon: usize,
    },
    #[error("buffer age reached n_drop = {n_drop} at step {step}")]
    ModelViolation { step: usize, n_drop: usize },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum DropKind {
    /// Per-step success flags for the sensor and control links.
    Schedule { sensor: Vec<bool>, control: Vec<bool> },
    BernoulliLinks,
    /// Gaps between effective steps drawn uniformly from `1..=N_drop`.
    UniformEta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropModel {
    pub kind: DropKind,
    pub p_sensor_loss: f64,
    pub p_control_loss: f64,
    /// Force an effective step after `N_drop − 1` consecutive misses.
    pub enforce_bound: bool,
    pub seed: u64,
}

impl DropModel {
    pub fn lossless() -> Self {
        Self::bernoulli(0.0, 0.0, 0)
    }

    pub fn bernoulli(p_sensor_loss: f64, p_control_loss: f64, seed: u64) -> Self {
        Self {
            kind: DropKind::BernoulliLinks,
            p_sensor_loss,
            p_control_loss,
            enforce_bound: true,
            seed,
        }
    }

    pub fn uniform_eta(seed: u64) -> Self {
        Self {
            kind: DropKind::UniformEta,
            p_sensor_loss: 0.0,
            p_control_loss: 0.0,
            enforce_bound: true,
            seed,
        }
    }

    pub fn schedule(sensor: Vec<bool>, control: Vec<bool>) -> Self {
        Self {
            kind: DropKind::Schedule { sensor, control },
            p_sensor_loss: 0.0,
            p_control_loss: 0.0,
            enforce_bound: true,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [("p_sensor_loss", self.p_sensor_loss), ("p_control_loss", self.p_control_loss)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkOutcome {
    pub s1_ok: bool,
    pub s2_ok: bool,
}

impl LinkOutcome {
    pub fn effective(&self) -> bool {
        self.s1_ok && self.s2_ok
    }
}

/// Per-step link outcomes for `horizon` steps.
pub fn generate_drop_sequence(
    model: &DropModel,
    horizon: usize,
    n_drop: usize,
) -> Result<Vec<LinkOutcome>, SimError> {
    if horizon == 0 {
        return Err(SimError::InvalidConfig("horizon must be at least 1".into()));
    }
    if n_drop == 0 {
        return Err(SimError::InvalidConfig("n_drop must be at least 1".into()));
    }
    model.validate()?;
    let mut out = match &model.kind {
        DropKind::Schedule { sensor, control } => {
            for (link, s) in [("sensor", sensor), ("control", control)] {
                if s.len() < horizon {
                    return Err(SimError::ScheduleTooShort {
                        link,
                        len: s.len(),
                        horizon,
                    });
                }
            }
            (0..horizon)
                .map(|k| LinkOutcome {
                    s1_ok: sensor[k],
                    s2_ok: control[k],
                })
                .collect::<Vec<_>>()
        }
        DropKind::BernoulliLinks => {
            let mut s1 = stream(model.seed, SENSOR_STREAM);
            let mut s2 = stream(model.seed, CONTROL_STREAM);
            (0..horizon)
                .map(|_| LinkOutcome {
                    s1_ok: s1.gen::<f64>() >= model.p_sensor_loss,
                    s2_ok: s2.gen::<f64>() >= model.p_control_loss,
                })
                .collect()
        }
        DropKind::UniformEta => {
            // Gap lengths from the sensor stream; which link drops on a
            // missed step from the control stream.
            let mut gaps = stream(model.seed, SENSOR_STREAM);
            let mut links = stream(model.seed, CONTROL_STREAM);
            let mut out = Vec::with_capacity(horizon);
            while out.len() < horizon {
                out.push(LinkOutcome {
                    s1_ok: true,
                    s2_ok: true,
                });
                let eta = gaps.gen_range(1..=n_drop);
                for _ in 1..eta {
                    if out.len() == horizon {
                        break;
                    }
                    out.push(match links.gen_range(0..3) {
                        0 => LinkOutcome { s1_ok: false, s2_ok: true },
                        1 => LinkOutcome { s1_ok: true, s2_ok: false },
                        _ => LinkOutcome { s1_ok: false, s2_ok: false },
                    });
                }
            }
            out
        }
    };
    if model.enforce_bound {
        let mut misses = 0;
        for o in &mut out {
            if misses + 1 >= n_drop && !o.effective() {
                *o = LinkOutcome {
                    s1_ok: true,
                    s2_ok: true,
                };
            }
            misses = if o.effective() { 0 } else { misses + 1 };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SwitchKind {
    Fixed(usize),
    /// Mode of every step, 1-based.
    Schedule(Vec<usize>),
    RandomAtEffective,
    /// Redraws every step; outside the certified regime.
    RandomEveryStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchSignal {
    pub kind: SwitchKind,
    /// Minimum number of effective intervals between redraws under
    /// `RandomAtEffective`.
    pub dwell_min: usize,
    pub seed: u64,
}

impl SwitchSignal {
    pub fn fixed(mode: usize) -> Self {
        Self {
            kind: SwitchKind::Fixed(mode),
            dwell_min: 1,
            seed: 0,
        }
    }

    pub fn random_at_effective(seed: u64) -> Self {
        Self {
            kind: SwitchKind::RandomAtEffective,
            dwell_min: 1,
            seed,
        }
    }

    fn validate(&self, modes: usize, horizon: usize) -> Result<(), SimError> {
        let check = |l: usize| {
            if l == 0 || l > modes {
                Err(SimError::InvalidConfig(format!("mode {l} outside 1..={modes}")))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            SwitchKind::Fixed(l) => check(*l)?,
            SwitchKind::Schedule(s) => {
                if s.len() < horizon {
                    return Err(SimError::ScheduleTooShort {
                        link: "mode",
                        len: s.len(),
                        horizon,
                    });
                }
                s.iter().try_for_each(|&l| check(l))?;
            }
            SwitchKind::RandomAtEffective | SwitchKind::RandomEveryStep => {}
        }
        if self.dwell_min == 0 {
            return Err(SimError::InvalidConfig("dwell_min must be at least 1".into()));
        }
        Ok(())
    }
}

/// Control vectors delivered by the last effective packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorBuffer {
    controls: Vec<Vec<f64>>,
    stamp: usize,
    age: usize,
}

impl ActuatorBuffer {
    pub fn fill(stamp: usize, controls: Vec<Vec<f64>>) -> Self {
        Self { controls, stamp, age: 0 }
    }

    pub fn stamp(&self) -> usize {
        self.stamp
    }

    pub fn age(&self) -> usize {
        self.age
    }

    pub fn advance(&mut self) {
        self.age += 1;
    }

    /// `u_{p, age+1}`, or `None` once the buffer is exhausted.
    pub fn current(&self) -> Option<&[f64]> {
        self.controls.get(self.age).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub plant: SwitchedPlant,
    pub gains: GainSchedule,
    pub x0: Vec<f64>,
    pub horizon: usize,
    pub drop: DropModel,
    pub switching: SwitchSignal,
    /// Defaults to `1e-3·‖x0‖`.
    pub settle_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// 1-based.
    pub mode: usize,
    pub s1_ok: bool,
    pub s2_ok: bool,
    pub effective: bool,
    /// `None` before the first effective step.
    pub buffer_age: Option<usize>,
    pub u: Vec<f64>,
    /// State at the start of the step.
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub settle_threshold: f64,
    /// First step from which `‖x‖` stays below the threshold.
    pub settled_at: Option<usize>,
    pub max_norm_after_settle: Option<f64>,
    pub effective_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub states: usize,
    pub inputs: usize,
    pub sample_period: f64,
    pub records: Vec<StepRecord>,
    pub summary: TraceSummary,
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn summarize(records: &[StepRecord], threshold: f64) -> TraceSummary {
    let below = |r: &StepRecord| {
        let v = norm(&r.x);
        v < threshold || v == 0.0
    };
    let settled_at = match records.iter().rposition(|r| !below(r)) {
        None => Some(0),
        Some(last) if last + 1 < records.len() => Some(last + 1),
        Some(_) => None,
    };
    TraceSummary {
        settle_threshold: threshold,
        settled_at,
        max_norm_after_settle: settled_at.map(|s| records[s..].iter().map(|r| norm(&r.x)).fold(0.0, f64::max)),
        effective_steps: records.iter().filter(|r| r.effective).count(),
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimTrace, SimError> {
    let plant = &config.plant;
    let (n, m, n_drop) = (plant.states(), plant.inputs(), plant.n_drop());
    let modes = plant.modes().len();
    config.gains.check_compatible(plant)?;
    if config.x0.len() != n {
        return Err(SimError::InvalidConfig(format!("x0 has length {}, plant has {n} states", config.x0.len())));
    }
    if config.x0.iter().any(|v| !v.is_finite()) {
        return Err(SimError::InvalidConfig("x0 must be finite".into()));
    }
    config.switching.validate(modes, config.horizon)?;
    let threshold = config.settle_threshold.unwrap_or(1e-3 * norm(&config.x0));
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(SimError::InvalidConfig(format!("settle threshold must be non-negative, got {threshold}")));
    }
    let links = generate_drop_sequence(&config.drop, config.horizon, n_drop)?;

    let mut switch_rng = stream(config.switching.seed, SWITCH_STREAM);
    let mut mode = match &config.switching.kind {
        SwitchKind::Fixed(l) => *l,
        SwitchKind::Schedule(s) => s[0],
        SwitchKind::RandomAtEffective | SwitchKind::RandomEveryStep => switch_rng.gen_range(1..=modes),
    };
    let mut since_draw = 0usize;

    let mut x = config.x0.clone();
    let mut buffer: Option<ActuatorBuffer> = None;
    let mut records = Vec::with_capacity(config.horizon);
    for (k, link) in links.iter().enumerate() {
        let effective = link.effective();
        match &config.switching.kind {
            SwitchKind::Fixed(_) => {}
            SwitchKind::Schedule(s) => mode = s[k],
            SwitchKind::RandomAtEffective => {
                if effective && k > 0 {
                    since_draw += 1;
                    if since_draw >= config.switching.dwell_min {
                        mode = switch_rng.gen_range(1..=modes);
                        since_draw = 0;
                    }
                }
            }
            SwitchKind::RandomEveryStep => {
                if k > 0 {
                    mode = switch_rng.gen_range(1..=modes);
                }
            }
        }

        if effective {
            let controls = config.gains.gains().iter().map(|kq| kq.mul_vec(&x)).collect();
            buffer = Some(ActuatorBuffer::fill(k, controls));
        } else if let Some(b) = buffer.as_mut() {
            b.advance();
        }
        let u = match &buffer {
            None => vec![0.0; m],
            Some(b) => b
                .current()
                .ok_or(SimError::ModelViolation { step: k, n_drop })?
                .to_vec(),
        };

        let active = &plant.modes()[mode - 1];
        let fx = active.f.mul_vec(&x);
        let gu = active.g.mul_vec(&u);
        let next: Vec<f64> = fx.iter().zip(&gu).map(|(a, b)| a + b).collect();
        records.push(StepRecord {
            step: k,
            time: k as f64 * plant.sample_period(),
            mode,
            s1_ok: link.s1_ok,
            s2_ok: link.s2_ok,
            effective,
            buffer_age: buffer.as_ref().map(ActuatorBuffer::age),
            u,
            x: std::mem::replace(&mut x, next),
        });
    }
    let summary = summarize(&records, threshold);
    Ok(SimTrace {
        states: n,
        inputs: m,
        sample_period: plant.sample_period(),
        records,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveInstants {
    pub steps: Vec<usize>,
    /// `etas[j] = steps[j + 1] − steps[j]`.
    pub etas: Vec<usize>,
}

pub fn effective_instants(trace: &SimTrace) -> EffectiveInstants {
    let steps: Vec<usize> = trace.records.iter().filter(|r| r.effective).map(|r| r.step).collect();
    let etas = steps.windows(2).map(|w| w[1] - w[0]).collect();
    EffectiveInstants { steps, etas }
}

/// `V = ΓᵀPΓ` at each effective step, where `Γ` stacks the states at the
/// last `n_drop` effective steps (newest first), padded with `x0`.
pub fn lyapunov_along_trace(trace: &SimTrace, p: &Matrix, n_drop: usize) -> Result<Vec<f64>, SimError> {
    let order = trace.states * n_drop;
    if p.shape() != (order, order) {
        return Err(SimError::InvalidConfig(format!(
            "P is {}x{}, expected {order}x{order}",
            p.rows(),
            p.cols()
        )));
    }
    let Some(first) = trace.records.first() else {
        return Ok(Vec::new());
    };
    let mut window: Vec<&[f64]> = vec![first.x.as_slice(); n_drop];
    let mut out = Vec::new();
    for r in trace.records.iter().filter(|r| r.effective) {
        window.rotate_right(1);
        window[0] = &r.x;
        let gamma: Vec<f64> = window.iter().flat_map(|x| x.iter().copied()).collect();
        out.push(lyapunov_value(p, &gamma)?);
    }
    Ok(out)
}

/// `(F + G·K_1)^k·x0` for `k = 0..steps`, the lossless fixed-mode oracle.
pub fn matrix_power_oracle(
    plant: &SwitchedPlant,
    gains: &GainSchedule,
    mode: usize,
    x0: &[f64],
    steps: usize,
) -> Result<Vec<Vec<f64>>, SimError> {
    let active = &plant.modes()[mode - 1];
    let closed = active.f.add(&matmul(&active.g, gains.gain(1)).map_err(ModelError::from)?).map_err(ModelError::from)?;
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let next = closed.mul_vec(&x);
        out.push(std::mem::replace(&mut x, next));
    }
    Ok(out)
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(states: usize, inputs: usize) -> Vec<String> {
    let mut h: Vec<String> = ["step", "time", "mode", "s1_ok", "s2_ok", "effective", "buffer_age"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if inputs == 1 {
        h.push("u".into());
    } else {
        h.extend((1..=inputs).map(|i| format!("u{i}")));
    }
    h.extend((1..=states).map(|i| format!("x{i}")));
    h
}

/// Writes the trace as CSV with the summary as trailing `#` lines.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace.states, trace.inputs))?;
    for r in &trace.records {
        let mut row = vec![
            r.step.to_string(),
            fmt_f(r.time),
            r.mode.to_string(),
            u8::from(r.s1_ok).to_string(),
            u8::from(r.s2_ok).to_string(),
            u8::from(r.effective).to_string(),
            r.buffer_age.map(|a| a.to_string()).unwrap_or_default(),
        ];
        row.extend(r.u.iter().map(|&v| fmt_f(v)));
        row.extend(r.x.iter().map(|&v| fmt_f(v)));
        w.write_record(row)?;
    }
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    let s = &trace.summary;
    writeln!(out, "# sample_period={}", fmt_f(trace.sample_period))?;
    writeln!(out, "# settle_threshold={}", fmt_f(s.settle_threshold))?;
    writeln!(
        out,
        "# settled_at={}",
        s.settled_at.map_or_else(|| "none".to_string(), |k| k.to_string())
    )?;
    writeln!(
        out,
        "# max_norm_after_settle={}",
        s.max_norm_after_settle.map_or_else(|| "none".to_string(), fmt_f)
    )?;
    writeln!(out, "# effective_steps={}", s.effective_steps)?;
    out.flush()
}

fn bad(msg: impl Into<String>) -> SimError {
    SimError::MalformedTrace(msg.into())
}

fn parse_flag(s: &str, line: usize, col: &str) -> Result<bool, SimError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(bad(format!("row {line}: {col} must be 0 or 1, got {s:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<T, SimError> {
    s.parse().map_err(|_| bad(format!("row {line}: cannot parse {col} = {s:?}")))
}

/// Reads a trace written by [`write_trace_csv`]. The summary is recomputed
/// from the rows when its comment lines are absent.
pub fn read_trace_csv<R: BufRead>(input: R) -> Result<SimTrace, SimError> {
    let mut body = String::new();
    let mut meta = std::collections::BTreeMap::new();
    for line in input.lines() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let head: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if head.len() < 9 || head[..7] != header(0, 0)[..7] {
        return Err(bad("missing or unexpected header"));
    }
    let inputs = head.iter().filter(|h| *h == "u" || (h.starts_with('u') && h[1..].parse::<usize>().is_ok())).count();
    let states = head.iter().filter(|h| h.starts_with('x') && h[1..].parse::<usize>().is_ok()).count();
    if inputs == 0 || states == 0 || head != header(states, inputs) {
        return Err(bad("header must be step,time,mode,s1_ok,s2_ok,effective,buffer_age,u..,x.."));
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != head.len() {
            return Err(bad(format!("row {line}: expected {} fields, got {}", head.len(), row.len())));
        }
        let floats = |range: std::ops::Range<usize>| -> Result<Vec<f64>, SimError> {
            range.map(|c| parse_num::<f64>(&row[c], line, &head[c])).collect()
        };
        records.push(StepRecord {
            step: parse_num(&row[0], line, "step")?,
            time: parse_num(&row[1], line, "time")?,
            mode: parse_num(&row[2], line, "mode")?,
            s1_ok: parse_flag(&row[3], line, "s1_ok")?,
            s2_ok: parse_flag(&row[4], line, "s2_ok")?,
            effective: parse_flag(&row[5], line, "effective")?,
            buffer_age: if row[6].is_empty() {
                None
            } else {
                Some(parse_num(&row[6], line, "buffer_age")?)
            },
            u: floats(7..7 + inputs)?,
            x: floats(7 + inputs..7 + inputs + states)?,
        });
    }
    if records.is_empty() {
        return Err(bad("trace has no rows"));
    }

    let sample_period = match meta.get("sample_period") {
        Some(v) => parse_num(v, 0, "sample_period")?,
        None if records.len() > 1 => records[1].time - records[0].time,
        None => 0.0,
    };
    let threshold = match meta.get("settle_threshold") {
        Some(v) => parse_num(v, 0, "settle_threshold")?,
        None => 1e-3 * norm(&records[0].x),
    };
    let summary = summarize(&records, threshold);
    Ok(SimTrace {
        states,
        inputs,
        sample_period,
        records,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncsmodel::PlantMode;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn two_state_plant(n_drop: usize) -> SwitchedPlant {
        SwitchedPlant::new(
            vec![
                PlantMode::new(m(&[&[1.1, 0.2], &[0.0, 0.9]]), m(&[&[0.0], &[1.0]]), "a").unwrap(),
                PlantMode::new(m(&[&[0.8, 0.1], &[0.3, 1.05]]), m(&[&[0.5], &[1.0]]), "b").unwrap(),
            ],
            0.1,
            n_drop,
        )
        .unwrap()
    }

    fn gains(n_drop: usize) -> GainSchedule {
        GainSchedule::new((0..n_drop).map(|q| m(&[&[-0.3 / (q + 1) as f64, -0.4]])).collect()).unwrap()
    }

    fn config(drop: DropModel, switching: SwitchSignal) -> SimConfig {
        SimConfig {
            plant: two_state_plant(3),
            gains: gains(3),
            x0: vec![-3.0, 2.0],
            horizon: 60,
            drop,
            switching,
            settle_threshold: None,
        }
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let mut c = config(DropModel::bernoulli(0.3, 0.3, 5), SwitchSignal::random_at_effective(9));
        c.x0 = vec![0.0, 0.0];
        let t = simulate(&c).unwrap();
        assert!(t.records.iter().all(|r| r.x.iter().chain(&r.u).all(|&v| v == 0.0)));
        assert_eq!(t.summary.settled_at, Some(0));
    }

    #[test]
    fn lossless_fixed_mode_matches_matrix_powers() {
        let c = config(DropModel::lossless(), SwitchSignal::fixed(2));
        let t = simulate(&c).unwrap();
        let oracle = matrix_power_oracle(&c.plant, &c.gains, 2, &c.x0, c.horizon).unwrap();
        for (r, o) in t.records.iter().zip(&oracle) {
            for (a, b) in r.x.iter().zip(o) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }
        assert_eq!(t.records.len(), c.horizon);
    }

    #[test]
    fn lossless_links_make_every_step_effective() {
        let seq = generate_drop_sequence(&DropModel::lossless(), 50, 3).unwrap();
        assert!(seq.iter().all(LinkOutcome::effective));
    }

    #[test]
    fn enforced_bound_caps_miss_runs() {
        for seed in 0..20 {
            let seq = generate_drop_sequence(&DropModel::bernoulli(0.9, 0.9, seed), 500, 3).unwrap();
            let mut run = 0;
            for o in &seq {
                run = if o.effective() { 0 } else { run + 1 };
                assert!(run < 3);
            }
        }
    }

    #[test]
    fn uniform_eta_histogram() {
        let n_drop = 3;
        let horizon = 200_000;
        let seq = generate_drop_sequence(&DropModel::uniform_eta(11), horizon, n_drop).unwrap();
        let steps: Vec<usize> = (0..horizon).filter(|&k| seq[k].effective()).collect();
        let mut counts = [0usize; 3];
        for w in steps.windows(2).take(100_000) {
            counts[w[1] - w[0] - 1] += 1;
        }
        let total: usize = counts.iter().sum();
        assert!(total >= 99_000);
        let p = 1.0 / 3.0;
        let sigma = (total as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - total as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn short_schedule_is_rejected() {
        let model = DropModel::schedule(vec![true; 3], vec![true; 5]);
        assert_eq!(
            generate_drop_sequence(&model, 5, 2),
            Err(SimError::ScheduleTooShort {
                link: "sensor",
                len: 3,
                horizon: 5
            })
        );
    }

    #[test]
    fn unbounded_drops_signal_model_violation() {
        let mut drop = DropModel::schedule(vec![true, false, false, false, true], vec![true; 5]);
        drop.enforce_bound = false;
        let mut c = config(drop, SwitchSignal::fixed(1));
        c.horizon = 5;
        assert_eq!(simulate(&c), Err(SimError::ModelViolation { step: 3, n_drop: 3 }));

        let mut c2 = c.clone();
        c2.drop.enforce_bound = true;
        let t = simulate(&c2).unwrap();
        assert!(t.records[3].effective);
    }

    #[test]
    fn buffer_applies_aged_entries() {
        let drop = DropModel::schedule(vec![true, false, true, true, false, false], vec![true, true, false, true, true, true]);
        let mut c = config(drop, SwitchSignal::fixed(1));
        c.horizon = 6;
        let t = simulate(&c).unwrap();
        let ages: Vec<Option<usize>> = t.records.iter().map(|r| r.buffer_age).collect();
        assert_eq!(ages, vec![Some(0), Some(1), Some(2), Some(0), Some(1), Some(2)]);
        for r in &t.records {
            let age = r.buffer_age.unwrap();
            let stamp = r.step - age;
            let want = c.gains.gain(age + 1).mul_vec(&t.records[stamp].x);
            assert_eq!(r.u, want);
        }
    }

    #[test]
    fn input_is_zero_before_first_effective_step() {
        let drop = DropModel::schedule(vec![false, true, true], vec![true; 3]);
        let mut c = config(drop, SwitchSignal::fixed(1));
        c.horizon = 3;
        let t = simulate(&c).unwrap();
        assert_eq!(t.records[0].buffer_age, None);
        assert_eq!(t.records[0].u, vec![0.0]);
        assert_eq!(t.records[1].buffer_age, Some(0));
    }

    #[test]
    fn effective_instant_extraction() {
        let drop = DropModel::schedule(vec![true, false, true, true], vec![true; 4]);
        let mut c = config(drop, SwitchSignal::fixed(1));
        c.horizon = 4;
        let t = simulate(&c).unwrap();
        let e = effective_instants(&t);
        assert_eq!(e.steps, vec![0, 2, 3]);
        assert_eq!(e.etas, vec![2, 1]);

        let mut c = config(DropModel::lossless(), SwitchSignal::fixed(1));
        c.horizon = 5;
        let e = effective_instants(&simulate(&c).unwrap());
        assert_eq!(e.steps, vec![0, 1, 2, 3, 4]);
        assert!(e.etas.iter().all(|&eta| eta == 1));

        let mut t = simulate(&c).unwrap();
        t.records.iter_mut().for_each(|r| r.effective = false);
        assert!(effective_instants(&t).steps.is_empty());
    }

    #[test]
    fn random_at_effective_switches_only_at_effective_steps() {
        let t = simulate(&config(DropModel::bernoulli(0.4, 0.4, 3), SwitchSignal::random_at_effective(8))).unwrap();
        for w in t.records.windows(2) {
            if w[0].mode != w[1].mode {
                assert!(w[1].effective);
            }
        }
        assert!(t.records.iter().any(|r| r.mode == 1) && t.records.iter().any(|r| r.mode == 2));
    }

    #[test]
    fn dwell_time_limits_redraws() {
        let mut s = SwitchSignal::random_at_effective(8);
        s.dwell_min = 4;
        let t = simulate(&config(DropModel::lossless(), s)).unwrap();
        let changes: Vec<usize> = t.records.windows(2).filter(|w| w[0].mode != w[1].mode).map(|w| w[1].step).collect();
        assert!(changes.iter().all(|k| k % 4 == 0), "{changes:?}");
    }

    #[test]
    fn lyapunov_values_on_zero_trace() {
        let mut c = config(DropModel::lossless(), SwitchSignal::fixed(1));
        c.x0 = vec![0.0, 0.0];
        let t = simulate(&c).unwrap();
        let v = lyapunov_along_trace(&t, &Matrix::identity(6), 3).unwrap();
        assert_eq!(v.len(), c.horizon);
        assert!(v.iter().all(|&x| x == 0.0));
        assert!(lyapunov_along_trace(&t, &Matrix::identity(4), 3).is_err());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = config(DropModel::lossless(), SwitchSignal::fixed(3));
        assert!(matches!(simulate(&c), Err(SimError::InvalidConfig(_))));
        c.switching = SwitchSignal::fixed(1);
        c.x0 = vec![1.0];
        assert!(matches!(simulate(&c), Err(SimError::InvalidConfig(_))));
        c.x0 = vec![1.0, 1.0];
        c.drop.p_sensor_loss = 1.5;
        assert!(matches!(simulate(&c), Err(SimError::InvalidConfig(_))));
        c.drop.p_sensor_loss = 0.0;
        c.horizon = 0;
        assert!(matches!(simulate(&c), Err(SimError::InvalidConfig(_))));
    }

    #[test]
    fn csv_round_trip() {
        let t = simulate(&config(DropModel::bernoulli(0.3, 0.3, 1), SwitchSignal::random_at_effective(2))).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("step,time,mode,s1_ok,s2_ok,effective,buffer_age,u,x1,x2\n"));
        assert!(text.contains("# settled_at="));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(read_trace_csv("".as_bytes()).is_err());
        assert!(read_trace_csv("step,time,mode,s1_ok,s2_ok,effective,buffer_age,u,x1\n".as_bytes()).is_err());
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad_row = "step,time,mode,s1_ok,s2_ok,effective,buffer_age,u,x1\n0,0,1,2,1,1,0,0,0\n";
        assert!(read_trace_csv(bad_row.as_bytes()).is_err());
    }
}
