//! Open-ended CUSUM monitoring.
//!
//! After a training period of length `N` the detector
//!
//! ```text
//! gamma(k) = || (k/N) S_train - S_monitor(k) || / (sqrt(N) (1 + k/N))
//! ```
//!
//! is compared with a threshold `q`; the first `k` with `gamma(k) > q`
//! raises an alarm.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;

/// Capacity of the gamma history ring.
pub const GAMMA_HISTORY_CAP: usize = 1_000_000;

/// What to do with observations arriving after an alarm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostAlarm {
    /// Further input is an error.
    #[default]
    Strict,
    /// Further input is ignored.
    Audit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Alarm,
}

/// Streaming detector state.
#[derive(Debug, Clone)]
pub struct DetectorState {
    n: usize,
    train_sum: GridFunction,
    k: usize,
    monitor_sum: GridFunction,
    q: f64,
    alarm_k: Option<usize>,
    mode: PostAlarm,
    history: Option<VecDeque<f64>>,
}

/// Outcome of [`run_monitor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorResult {
    pub alarmed: bool,
    pub alarm_k: Option<usize>,
    pub max_gamma: f64,
    pub steps_run: usize,
    pub truncated: bool,
}

/// Sums the training sample and arms the detector with threshold `q`.
pub fn init_monitor(training: &[GridFunction], q: f64) -> Result<DetectorState> {
    let first = training.first().ok_or(Error::Empty("training sample"))?;
    if !(q >= 0.0) {
        return Err(Error::config(format!("threshold must be >= 0, got {q}")));
    }
    let mut train_sum = GridFunction::zeros(*first.interval(), first.n_nodes(), first.dim())?;
    for x in training {
        train_sum.add_assign(x)?;
    }
    let monitor_sum = GridFunction::zeros(*first.interval(), first.n_nodes(), first.dim())?;
    Ok(DetectorState {
        n: training.len(),
        train_sum,
        k: 0,
        monitor_sum,
        q,
        alarm_k: None,
        mode: PostAlarm::Strict,
        history: None,
    })
}

impl DetectorState {
    pub fn with_mode(mut self, mode: PostAlarm) -> Self {
        self.mode = mode;
        self
    }

    /// Keeps the most recent gamma values, up to [`GAMMA_HISTORY_CAP`].
    pub fn with_history(mut self) -> Self {
        self.history = Some(VecDeque::new());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn train_sum(&self) -> &GridFunction {
        &self.train_sum
    }

    pub fn monitor_sum(&self) -> &GridFunction {
        &self.monitor_sum
    }

    pub fn alarmed(&self) -> bool {
        self.alarm_k.is_some()
    }

    pub fn alarm_k(&self) -> Option<usize> {
        self.alarm_k
    }

    pub fn gamma_history(&self) -> Option<&VecDeque<f64>> {
        self.history.as_ref()
    }

    /// Detector value at the current `k`; undefined before the first
    /// monitoring observation.
    pub fn gamma(&self) -> Result<f64> {
        if self.k == 0 {
            return Err(Error::domain("gamma is defined for k >= 1"));
        }
        let (n, k) = (self.n as f64, self.k as f64);
        let denom = n.sqrt() * (1.0 + k / n);
        let sup = self
            .train_sum
            .values()
            .iter()
            .zip(self.monitor_sum.values())
            .map(|(t, m)| (k * t / n - m).abs())
            .fold(0.0, f64::max);
        Ok(sup / denom)
    }

    /// Ingests one observation.
    pub fn step(&mut self, x: &GridFunction) -> Result<Decision> {
        if let Some(k) = self.alarm_k {
            return match self.mode {
                PostAlarm::Strict => Err(Error::AlreadyAlarmed(k)),
                PostAlarm::Audit => Ok(Decision::Alarm),
            };
        }
        self.monitor_sum.add_assign(x)?;
        self.k += 1;
        let g = self.gamma()?;
        if let Some(h) = self.history.as_mut() {
            if h.len() == GAMMA_HISTORY_CAP {
                h.pop_front();
            }
            h.push_back(g);
        }
        if g > self.q {
            self.alarm_k = Some(self.k);
            Ok(Decision::Alarm)
        } else {
            Ok(Decision::Continue)
        }
    }
}

/// Feeds `stream` until an alarm or `horizon` steps, whichever is first.
///
/// `truncated` is set when the horizon stopped monitoring without an alarm.
pub fn run_monitor<'a, I>(state: &mut DetectorState, stream: I, horizon: usize) -> Result<MonitorResult>
where
    I: IntoIterator<Item = &'a GridFunction>,
{
    if horizon == 0 {
        return Err(Error::config("horizon must be >= 1"));
    }
    let mut max_gamma = 0.0f64;
    let mut steps = 0;
    for x in stream.into_iter().take(horizon) {
        let decision = state.step(x)?;
        steps += 1;
        max_gamma = max_gamma.max(state.gamma()?);
        if decision == Decision::Alarm {
            break;
        }
    }
    Ok(MonitorResult {
        alarmed: state.alarmed(),
        alarm_k: state.alarm_k(),
        max_gamma,
        steps_run: steps,
        truncated: !state.alarmed() && steps == horizon,
    })
}
