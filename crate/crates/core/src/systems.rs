//! Benchmark skew-product systems.
//!
//! Each case is a pair of coupled logistic maps whose growth terms are forced
//! by a phase variable θ. Promoting the explicit time dependence of the forced
//! system into θ makes the three-variable system autonomous, so the generators
//! here simulate the skew-product form directly.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TimeSeries};
use crate::error::{Error, Result};

/// Phase increment per step for the benchmark systems (1/α with α = 4/3).
pub const DEFAULT_ALPHA: f64 = 4.0 / 3.0;
pub const DEFAULT_X0: f64 = 0.4;
pub const DEFAULT_Y0: f64 = 0.2;
pub const DEFAULT_STEPS: usize = 3000;
pub const DEFAULT_BURN_IN: usize = 1000;
/// Any coordinate leaving `[-DIVERGENCE_BOUND, DIVERGENCE_BOUND]` aborts a run.
pub const DIVERGENCE_BOUND: f64 = 10.0;

/// Advances θ by `1/alpha`, optionally reducing modulo 1 into `[0, 1)`.
pub fn step_theta(theta: f64, alpha: f64, wrap: bool) -> Result<f64> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite and nonzero, got {alpha}")));
    }
    let next = theta + 1.0 / alpha;
    Ok(if wrap { wrap_unit(next) } else { next })
}

fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Bidirectional coupling, θ modulates the Y→X coupling strength.
    Case1,
    /// X drives Y; θ forces both growth rates.
    Case2,
    /// Uncoupled maps sharing the θ forcing.
    Case3,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::Case1 => 1,
            Case::Case2 => 2,
            Case::Case3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Case::Case1),
            2 => Ok(Case::Case2),
            3 => Ok(Case::Case3),
            _ => Err(Error::InvalidSpec(format!("case must be 1, 2 or 3, got {n}"))),
        }
    }

    /// Names of the two β coefficients used by this case.
    pub fn beta_names(self) -> [&'static str; 2] {
        match self {
            Case::Case1 => ["beta1", "beta2"],
            Case::Case2 => ["beta3", "beta4"],
            Case::Case3 => ["beta5", "beta6"],
        }
    }
}

/// Instantaneous state of a benchmark system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Full parameterization of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub case: Case,
    /// The case's (first, second) β coefficients: (β₁, β₂), (β₃, β₄) or (β₅, β₆).
    pub betas: (f64, f64),
    pub x0: f64,
    pub y0: f64,
    pub theta0: f64,
    pub alpha: f64,
    pub steps: usize,
    pub burn_in: usize,
}

impl SystemSpec {
    pub fn new(case: Case, betas: (f64, f64)) -> Self {
        Self {
            case,
            betas,
            x0: DEFAULT_X0,
            y0: DEFAULT_Y0,
            theta0: 0.0,
            alpha: DEFAULT_ALPHA,
            steps: DEFAULT_STEPS,
            burn_in: DEFAULT_BURN_IN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.x0) {
            return Err(Error::InvalidSpec(format!("x0 must lie in (0,1), got {}", self.x0)));
        }
        if !open_unit(self.y0) {
            return Err(Error::InvalidSpec(format!("y0 must lie in (0,1), got {}", self.y0)));
        }
        if !(0.0..1.0).contains(&self.theta0) {
            return Err(Error::InvalidSpec(format!(
                "theta0 must lie in [0,1), got {}",
                self.theta0
            )));
        }
        if self.alpha == 0.0 || !self.alpha.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "alpha must be finite and nonzero, got {}",
                self.alpha
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidSpec("steps must be at least 1".into()));
        }
        if !self.betas.0.is_finite() || !self.betas.1.is_finite() {
            return Err(Error::InvalidSpec("beta coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> State {
        State {
            x: self.x0,
            y: self.y0,
            theta: self.theta0,
        }
    }

    /// One synchronous update: both maps read the state at `t`.
    pub fn step(&self, s: State) -> State {
        let (b1, b2) = self.betas;
        let phase = TAU * s.theta;
        let (x, y) = match self.case {
            Case::Case1 => (
                s.x * (3.8 * (1.0 - s.x) - 0.08 * (1.0 + b1 * phase.cos()) * s.y),
                s.y * (3.5 * (1.0 - s.y) - 0.08 * (1.0 + b2 * phase.cos()) * s.x),
            ),
            Case::Case2 => (
                s.x * (3.6 + b1 * phase.cos()) * (1.0 - s.x),
                s.y * ((3.5 + b2 * phase.sin()) * (1.0 - s.y) - 0.08 * s.x),
            ),
            Case::Case3 => (
                s.x * (3.8 + b1 * phase.sin()) * (1.0 - s.x),
                s.y * (3.5 + b2 * phase.sin()) * (1.0 - s.y),
            ),
        };
        State {
            x,
            y,
            theta: wrap_unit(s.theta + 1.0 / self.alpha),
        }
    }

    pub fn to_config(&self) -> SystemConfig {
        let mut cfg = SystemConfig {
            case: Some(self.case.number()),
            x0: Some(self.x0),
            y0: Some(self.y0),
            theta0: Some(self.theta0),
            alpha: Some(self.alpha),
            steps: Some(self.steps),
            burn_in: Some(self.burn_in),
            ..Default::default()
        };
        let [first, second] = cfg.betas_mut(self.case);
        *first = Some(self.betas.0);
        *second = Some(self.betas.1);
        cfg
    }
}

/// Serializable, partially specified form of [`SystemSpec`].
///
/// Missing fields take the defaults of [`SystemSpec::new`]; β values default
/// to zero. Only the two β keys of the selected case may be given.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta4: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta5: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta6: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: &SystemConfig) -> SystemConfig {
        SystemConfig {
            case: other.case.or(self.case),
            beta1: other.beta1.or(self.beta1),
            beta2: other.beta2.or(self.beta2),
            beta3: other.beta3.or(self.beta3),
            beta4: other.beta4.or(self.beta4),
            beta5: other.beta5.or(self.beta5),
            beta6: other.beta6.or(self.beta6),
            x0: other.x0.or(self.x0),
            y0: other.y0.or(self.y0),
            theta0: other.theta0.or(self.theta0),
            alpha: other.alpha.or(self.alpha),
            steps: other.steps.or(self.steps),
            burn_in: other.burn_in.or(self.burn_in),
        }
    }

    fn betas_mut(&mut self, case: Case) -> [&mut Option<f64>; 2] {
        match case {
            Case::Case1 => [&mut self.beta1, &mut self.beta2],
            Case::Case2 => [&mut self.beta3, &mut self.beta4],
            Case::Case3 => [&mut self.beta5, &mut self.beta6],
        }
    }

    pub fn to_spec(&self) -> Result<SystemSpec> {
        let case = Case::from_number(
            self.case
                .ok_or_else(|| Error::InvalidSpec("missing `case`".into()))?,
        )?;
        let all = [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
            ("beta4", self.beta4),
            ("beta5", self.beta5),
            ("beta6", self.beta6),
        ];
        let allowed = case.beta_names();
        if let Some((name, _)) = all
            .iter()
            .find(|(name, v)| v.is_some() && !allowed.contains(name))
        {
            return Err(Error::InvalidSpec(format!(
                "{name} does not apply to case {}; use {} and {}",
                case.number(),
                allowed[0],
                allowed[1]
            )));
        }
        let beta = |name: &str| all.iter().find(|(n, _)| *n == name).and_then(|(_, v)| *v);
        let mut spec = SystemSpec::new(
            case,
            (
                beta(allowed[0]).unwrap_or(0.0),
                beta(allowed[1]).unwrap_or(0.0),
            ),
        );
        if let Some(v) = self.x0 {
            spec.x0 = v;
        }
        if let Some(v) = self.y0 {
            spec.y0 = v;
        }
        if let Some(v) = self.theta0 {
            spec.theta0 = v;
        }
        if let Some(v) = self.alpha {
            spec.alpha = v;
        }
        if let Some(v) = self.steps {
            spec.steps = v;
        }
        if let Some(v) = self.burn_in {
            spec.burn_in = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Series names produced by [`simulate`].
pub const X_NAME: &str = "X";
pub const Y_NAME: &str = "Y";
pub const THETA_NAME: &str = "theta";

/// Iterates the selected case and returns `steps` samples of X, Y and θ.
///
/// The first sample is the state reached after `burn_in` updates from the
/// initial condition (the initial condition itself when `burn_in` is 0).
pub fn simulate(spec: &SystemSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut xs = Vec::with_capacity(spec.steps);
    let mut ys = Vec::with_capacity(spec.steps);
    let mut thetas = Vec::with_capacity(spec.steps);
    let mut state = spec.initial_state();
    let updates = spec.burn_in + spec.steps - 1;
    for step in 0..=updates {
        if step > 0 {
            state = spec.step(state);
            check_bounded(step, &state)?;
        }
        if step >= spec.burn_in {
            xs.push(state.x);
            ys.push(state.y);
            thetas.push(state.theta);
        }
    }
    Dataset::new(vec![
        TimeSeries::new(X_NAME, xs)?,
        TimeSeries::new(Y_NAME, ys)?,
        TimeSeries::new(THETA_NAME, thetas)?,
    ])
}

fn check_bounded(step: usize, s: &State) -> Result<()> {
    for (variable, value) in [("X", s.x), ("Y", s.y), ("theta", s.theta)] {
        if !value.is_finite() || value.abs() > DIVERGENCE_BOUND {
            return Err(Error::Divergence {
                step,
                variable,
                value,
            });
        }
    }
    Ok(())
}

/// How θ evolves over the samples of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaSpec {
    /// θ advances by `1/alpha` each sample, wrapped into `[0,1)`.
    LinearMod1 { alpha: f64, theta0: f64 },
    /// θ is constant within consecutive segments and jumps by `delta` between them.
    Staircase {
        segment_length: usize,
        delta: f64,
        theta0: f64,
    },
}

impl ThetaSpec {
    pub fn generate(&self, n: usize) -> Result<TimeSeries> {
        match *self {
            ThetaSpec::LinearMod1 { alpha, theta0 } => {
                if n == 0 {
                    return Err(Error::Config("theta length must be at least 1".into()));
                }
                let mut values = Vec::with_capacity(n);
                let mut theta = wrap_unit(theta0);
                values.push(theta);
                for _ in 1..n {
                    theta = step_theta(theta, alpha, true)?;
                    values.push(theta);
                }
                TimeSeries::new(THETA_NAME, values)
            }
            ThetaSpec::Staircase {
                segment_length,
                delta,
                theta0,
            } => staircase_theta(n, segment_length, delta, theta0),
        }
    }
}

/// Piecewise-constant θ: `theta0 + k * delta` on segment `k`, with the
/// segment index recorded as the trial id.
pub fn staircase_theta(
    n: usize,
    segment_length: usize,
    delta: f64,
    theta0: f64,
) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::Config("staircase length must be at least 1".into()));
    }
    if segment_length == 0 {
        return Err(Error::Config("segment length must be at least 1".into()));
    }
    let trials: Vec<i64> = (0..n).map(|i| (i / segment_length) as i64).collect();
    let values = trials.iter().map(|&k| theta0 + k as f64 * delta).collect();
    TimeSeries::with_trials(THETA_NAME, values, Some(trials))
}

/// Layout of a trial-segmented surrogate dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentedSpec {
    pub trials: usize,
    pub trial_length: usize,
    /// Consecutive trials sharing one forcing level.
    pub trials_per_segment: usize,
}

/// Warm-up updates discarded at the start of every trial.
const TRIAL_WARM_UP: usize = 30;

/// Synthetic stand-in for trial-structured recordings: X drives Y, each trial
/// restarts from a fresh state, and the growth rate of X steps through three
/// levels from one segment of trials to the next. Trial ids are the trial
/// index; pair with [`staircase_theta`] using a segment length of
/// `trial_length * trials_per_segment`.
pub fn segmented_surrogate(spec: &SegmentedSpec) -> Result<Dataset> {
    if spec.trials == 0 || spec.trial_length == 0 || spec.trials_per_segment == 0 {
        return Err(Error::InvalidSpec("surrogate dimensions must be positive".into()));
    }
    let n = spec.trials * spec.trial_length;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut trials = Vec::with_capacity(n);
    let golden = 0.618_033_988_749_895;
    for k in 0..spec.trials {
        let level = (k / spec.trials_per_segment) % 3;
        let rx = 3.6 + 0.1 * level as f64;
        let mut x = 0.2 + 0.6 * (0.1 + k as f64 * golden).fract();
        let mut y = 0.2 + 0.6 * (0.7 + k as f64 * golden * golden).fract();
        for i in 0..TRIAL_WARM_UP + spec.trial_length {
            if i >= TRIAL_WARM_UP {
                xs.push(x);
                ys.push(y);
                trials.push(k as i64);
            }
            (x, y) = (x * rx * (1.0 - x), y * (3.8 * (1.0 - y) - 0.1 * x));
            check_bounded(
                k * (TRIAL_WARM_UP + spec.trial_length) + i + 1,
                &State { x, y, theta: 0.0 },
            )?;
        }
    }
    Dataset::new(vec![
        TimeSeries::with_trials(X_NAME, xs, Some(trials.clone()))?,
        TimeSeries::with_trials(Y_NAME, ys, Some(trials))?,
    ])
}
