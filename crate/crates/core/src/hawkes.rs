//! Linear Hawkes processes with exponential kernel.
//!
//! The conditional intensity of a channel is
//!
//! ```text
//! λ(t) = λ0 + α Σ_{T_i < t} exp(-β (t - T_i))
//! ```
//!
//! evaluated with the left-limit convention: an event at exactly `t` does not
//! contribute to `λ(t)`. All history sums are carried by the recursive decay
//! form `A_k = exp(-β (T_k - T_{k-1})) A_{k-1} + 1`, so evaluation along an
//! increasing sequence of times costs O(1) per event.

use rand::Rng;
use rand_distr::{Exp1, Open01};

use crate::error::{domain, Error, Result};
use crate::quadrature::adaptive_simpson;

/// Law of the multiplicative jump size: a raw exponential with the given
/// mean, clamped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkDistribution {
    mean: f64,
    cap: f64,
}

impl Default for MarkDistribution {
    fn default() -> Self {
        Self { mean: 1.0, cap: 3.0 }
    }
}

impl MarkDistribution {
    pub fn new(mean: f64, cap: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(domain(format!("mark mean must be finite and > 0, got {mean}")));
        }
        if !(cap.is_finite() && cap > 0.0) {
            return Err(domain(format!("mark cap must be finite and > 0, got {cap}")));
        }
        Ok(Self { mean, cap })
    }

    /// Mean of the raw (untruncated) exponential.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// `E[min(X, cap)]` for `X ~ Exp(mean)`.
    pub fn mean_truncated(&self) -> f64 {
        self.mean * (-(-self.cap / self.mean).exp_m1())
    }

    /// `E[ln(1 + min(X, cap))]`, by adaptive quadrature at relative
    /// tolerance 1e-10 plus the point mass at the cap.
    pub fn mean_log_growth(&self) -> f64 {
        let m = self.mean;
        let body = adaptive_simpson(|x| x.ln_1p() * (-x / m).exp() / m, 0.0, self.cap, 1e-10);
        body + self.cap.ln_1p() * (-self.cap / m).exp()
    }

    /// Draws one mark in `(0, cap]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let raw: f64 = rng.sample::<f64, _>(Exp1) * self.mean;
            if raw > 0.0 {
                return raw.min(self.cap);
            }
        }
    }
}

/// One self-exciting jump channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesChannel {
    lambda0: f64,
    alpha: f64,
    beta: f64,
    marks: MarkDistribution,
}

impl HawkesChannel {
    /// Builds a subcritical channel. A zero baseline is accepted and yields a
    /// channel that never fires.
    pub fn new(lambda0: f64, alpha: f64, beta: f64, marks: MarkDistribution) -> Result<Self> {
        if !(lambda0.is_finite() && lambda0 >= 0.0) {
            return Err(domain(format!("lambda0 must be finite and >= 0, got {lambda0}")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(domain(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(domain(format!("beta must be finite and > 0, got {beta}")));
        }
        let ratio = alpha / beta;
        if ratio >= 1.0 {
            return Err(Error::Supercritical { ratio });
        }
        Ok(Self {
            lambda0,
            alpha,
            beta,
            marks,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn marks(&self) -> &MarkDistribution {
        &self.marks
    }

    pub fn with_marks(mut self, marks: MarkDistribution) -> Self {
        self.marks = marks;
        self
    }

    /// Integral of the kernel over `[0, ∞)`, `alpha / beta`.
    pub fn branching_ratio(&self) -> f64 {
        self.alpha / self.beta
    }

    /// Long-run mean intensity `λ0 / (1 - α/β)`.
    pub fn stationary_intensity(&self) -> f64 {
        self.lambda0 / (1.0 - self.branching_ratio())
    }

    /// Conditional intensity at `t`, counting only events strictly before `t`.
    pub fn intensity_at(&self, events: &EventLog, t: f64) -> Result<f64> {
        check_time(t)?;
        let (_, excitation) = self.history_before(events.times(), t);
        Ok(self.lambda0 + self.alpha * excitation)
    }

    /// Conditional intensity along an increasing sequence of times.
    pub fn intensity_path(&self, events: &EventLog, ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        let times = events.times();
        let mut next = 0usize;
        let mut excitation = 0.0;
        let mut clock = 0.0;
        for &t in ts {
            check_time(t)?;
            if t < clock {
                return Err(domain("intensity_path requires non-decreasing times"));
            }
            while next < times.len() && times[next] < t {
                excitation = excitation * (-self.beta * (times[next] - clock)).exp() + 1.0;
                clock = times[next];
                next += 1;
            }
            excitation *= (-self.beta * (t - clock)).exp();
            clock = t;
            out.push(self.lambda0 + self.alpha * excitation);
        }
        Ok(out)
    }

    /// Compensator `Λ(t) = ∫_0^t λ(s) ds` in closed form.
    pub fn compensator(&self, events: &EventLog, t: f64) -> Result<f64> {
        check_time(t)?;
        let (count, excitation) = self.history_before(events.times(), t);
        Ok(self.lambda0 * t + self.branching_ratio() * (count as f64 - excitation))
    }

    /// Compensator increments between consecutive events, starting from 0.
    /// For a correctly simulated log these are i.i.d. Exp(1).
    ///
    /// The censored gap after the last event is dropped. When gaps are pooled
    /// over many logs this shifts the pooled CDF by `x e^{-x} / Λ(T)`, so each
    /// log should hold many events.
    pub fn rescaled_gaps(&self, events: &EventLog) -> Vec<f64> {
        let ratio = self.branching_ratio();
        let mut gaps = Vec::with_capacity(events.len());
        let mut excitation = 0.0;
        let mut clock = 0.0;
        let mut previous = 0.0;
        for (k, &t) in events.times().iter().enumerate() {
            excitation *= (-self.beta * (t - clock)).exp();
            let lambda_t = self.lambda0 * t + ratio * (k as f64 - excitation);
            gaps.push(lambda_t - previous);
            previous = lambda_t;
            excitation += 1.0;
            clock = t;
        }
        gaps
    }

    /// Number of events before `t` and `Σ_{T_i < t} exp(-β (t - T_i))`.
    fn history_before(&self, times: &[f64], t: f64) -> (usize, f64) {
        let mut excitation = 0.0;
        let mut clock = 0.0;
        let mut count = 0;
        for &ti in times.iter().take_while(|&&ti| ti < t) {
            excitation = excitation * (-self.beta * (ti - clock)).exp() + 1.0;
            clock = ti;
            count += 1;
        }
        if count > 0 {
            excitation *= (-self.beta * (t - clock)).exp();
        }
        (count, excitation)
    }

    /// Exact simulation on `(0, horizon]` by Ogata thinning.
    ///
    /// Between events the intensity only decays, so its right limit at the
    /// current candidate dominates the intensity until the next event.
    pub fn simulate<R: Rng + ?Sized>(&self, channel: usize, horizon: f64, rng: &mut R) -> Result<EventLog> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(domain(format!("horizon must be finite and > 0, got {horizon}")));
        }
        let mut times = Vec::new();
        let mut marks = Vec::new();
        let mut t = 0.0;
        let mut excitation = 0.0;
        loop {
            let bound = self.lambda0 + self.alpha * excitation;
            if bound <= 0.0 {
                break;
            }
            let wait = rng.sample::<f64, _>(Exp1) / bound;
            let candidate = t + wait;
            if candidate > horizon {
                break;
            }
            if candidate <= t {
                continue;
            }
            excitation *= (-self.beta * wait).exp();
            t = candidate;
            let u: f64 = rng.sample(Open01);
            if u * bound <= self.lambda0 + self.alpha * excitation {
                times.push(t);
                marks.push(self.marks.sample(rng));
                excitation += 1.0;
            }
        }
        Ok(EventLog {
            channel,
            times,
            marks,
        })
    }

    /// `E[λ(t)]` from the closed form; rejects `alpha == beta`.
    pub fn expected_intensity(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        self.check_moments()?;
        let (a, b, l0) = (self.alpha, self.beta, self.lambda0);
        let transient = if a == 0.0 { 0.0 } else { l0 / (1.0 - b / a) * (-(b - a) * t).exp() };
        Ok(l0 / (1.0 - a / b) + transient)
    }

    /// `E[H(t)]` from the closed form; rejects `alpha == beta`.
    pub fn expected_count(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        self.check_moments()?;
        let (a, b, l0) = (self.alpha, self.beta, self.lambda0);
        Ok(l0 * t / (1.0 - a / b) + a * l0 / ((a - b) * (a - b)) * (-(b - a) * t).exp_m1())
    }

    fn check_moments(&self) -> Result<()> {
        if self.alpha == self.beta {
            Err(Error::SingularMoments(self.alpha))
        } else {
            Ok(())
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("time must be finite and >= 0, got {t}")))
    }
}

/// Event times and marks of one channel on one path.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    channel: usize,
    times: Vec<f64>,
    marks: Vec<f64>,
}

impl EventLog {
    /// Validates strictly increasing non-negative times and positive marks.
    pub fn new(channel: usize, times: Vec<f64>, marks: Vec<f64>) -> Result<Self> {
        if times.len() != marks.len() {
            return Err(domain("event log needs one mark per event time"));
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(domain("event times must be finite and >= 0"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("event times must be strictly increasing"));
        }
        if marks.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(domain("marks must be finite and > 0"));
        }
        Ok(Self {
            channel,
            times,
            marks,
        })
    }

    /// A log without events, used for history-free evaluation.
    pub fn empty(channel: usize) -> Self {
        Self {
            channel,
            ..Self::default()
        }
    }

    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `H(t)`: number of events at or before `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&ti| ti <= t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.marks.iter().copied())
    }
}
