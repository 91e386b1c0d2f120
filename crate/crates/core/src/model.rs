//! Model parameters and closed-form threshold quantities.

use crate::error::{domain, Result};
use crate::hawkes::{HawkesChannel, MarkDistribution};

/// Human compartments that receive Hawkes jumps, in channel order 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compartment {
    SusceptibleHuman,
    InfectedHuman,
    QuarantinedHuman,
    RecoveredHuman,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [
        Compartment::SusceptibleHuman,
        Compartment::InfectedHuman,
        Compartment::QuarantinedHuman,
        Compartment::RecoveredHuman,
    ];

    /// Maps a 1-based channel index to the compartment it multiplies.
    pub fn from_channel(channel: usize) -> Result<Self> {
        match channel {
            1..=4 => Ok(Self::ALL[channel - 1]),
            _ => Err(domain(format!("unknown jump channel {channel}; expected 1..=4"))),
        }
    }

    pub fn channel(self) -> usize {
        self as usize + 1
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::SusceptibleHuman => "S_h",
            Self::InfectedHuman => "I_h",
            Self::QuarantinedHuman => "Q_h",
            Self::RecoveredHuman => "R_h",
        }
    }
}

/// Which mark mean enters the threshold formulas as `G_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkMean {
    /// Configured mean of the raw exponential.
    #[default]
    Raw,
    /// Mean after truncation at the cap.
    Truncated,
}

/// Epidemiological and demographic rates (per day), volatilities (per
/// sqrt(day)) and the four human jump channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub theta_h: f64,
    pub theta_r: f64,
    pub mu_h: f64,
    pub mu_r: f64,
    pub delta_h: f64,
    pub delta_r: f64,
    pub zeta: f64,
    pub gamma_h: f64,
    /// Enlightenment effectiveness.
    pub p: f64,
    /// Treatment effectiveness in quarantine.
    pub theta_q: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    /// `sigma[k]` is the volatility of Brownian motion `B_{k+1}`.
    pub sigma: [f64; 8],
    /// Jump channels for S_h, I_h, Q_h, R_h.
    pub channels: [HawkesChannel; 4],
    pub mark_mean: MarkMean,
}

impl ModelParams {
    /// Baseline rates, volatilities (0.3 for humans, 0.05 for rodents) and
    /// Hawkes channels (λ0 = 2e-4, α = 0.2/0.2/0.15/0.15, β = 1, Exp(1)
    /// marks capped at 3).
    pub fn baseline() -> Self {
        let marks = MarkDistribution::default();
        let channel = |alpha| HawkesChannel::new(2e-4, alpha, 1.0, marks).expect("baseline channel");
        Self {
            theta_h: 7.95e-5,
            theta_r: 5.48e-4,
            mu_h: 4.11e-3,
            mu_r: 5.48e-6,
            delta_h: 5.48e-4,
            delta_r: 1.37e-3,
            zeta: 5.48e-3,
            gamma_h: 2.27e-3,
            p: 0.3,
            theta_q: 0.8,
            eta1: 6.85e-7,
            eta2: 1.64e-7,
            eta3: 7.4e-5,
            sigma: [0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.05, 0.05],
            channels: [channel(0.2), channel(0.2), channel(0.15), channel(0.15)],
            mark_mean: MarkMean::Raw,
        }
    }

    /// Same parameters with every jump channel's baseline intensity set to 0.
    pub fn without_jumps(mut self) -> Self {
        for ch in &mut self.channels {
            *ch = HawkesChannel::new(0.0, ch.alpha(), ch.beta(), *ch.marks()).expect("valid channel");
        }
        self
    }

    /// Volatility of `B_k`, 1-based.
    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[k - 1]
    }

    /// Jump channel `i`, 1-based.
    pub fn channel(&self, i: usize) -> &HawkesChannel {
        &self.channels[i - 1]
    }

    /// `G_i` for channel `i` under the configured mark-mean convention.
    pub fn mark_mean_of(&self, i: usize) -> f64 {
        let marks = self.channel(i).marks();
        match self.mark_mean {
            MarkMean::Raw => marks.mean(),
            MarkMean::Truncated => marks.mean_truncated(),
        }
    }

    /// Checks finiteness and sign of every rate. Strict positivity of
    /// `mu_h`, `mu_r` and `eta3` is only demanded by the threshold formulas
    /// that divide by them.
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("theta_h", self.theta_h),
            ("theta_r", self.theta_r),
            ("mu_h", self.mu_h),
            ("mu_r", self.mu_r),
            ("delta_h", self.delta_h),
            ("delta_r", self.delta_r),
            ("zeta", self.zeta),
            ("gamma_h", self.gamma_h),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("eta3", self.eta3),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("p", self.p), ("theta_q", self.theta_q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for (k, &s) in self.sigma.iter().enumerate() {
            if !(s.is_finite() && s >= 0.0) {
                return Err(domain(format!("sigma{} must be finite and >= 0, got {s}", k + 1)));
            }
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// Structural population bounds. The defaults are placeholders, not
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralBounds {
    /// Human carrying capacity.
    pub m: f64,
    /// Long-run upper bound on the rodent/human ratio.
    pub k_star: f64,
    /// Almost-sure lower bound on the rodent population.
    pub n_r_floor: f64,
    /// Almost-sure lower bound on the human population.
    pub n_h_floor: f64,
}

impl Default for StructuralBounds {
    fn default() -> Self {
        Self {
            m: 1e5,
            k_star: 0.002,
            n_r_floor: 1e3,
            n_h_floor: 1e4,
        }
    }
}

impl StructuralBounds {
    pub fn new(m: f64, k_star: f64, n_r_floor: f64, n_h_floor: f64) -> Result<Self> {
        let b = Self {
            m,
            k_star,
            n_r_floor,
            n_h_floor,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("k_star", self.k_star),
            ("n_r_floor", self.n_r_floor),
            ("n_h_floor", self.n_h_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.n_h_floor > self.m {
            return Err(domain(format!(
                "n_h_floor ({}) must not exceed m ({})",
                self.n_h_floor, self.m
            )));
        }
        Ok(())
    }
}

/// The reproduction number with its four numerator summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R0Breakdown {
    /// `(1 - p)(η1 + η2)`
    pub contact: f64,
    /// `η3`
    pub rodent: f64,
    /// `λ0,2 G_2 / (1 - α2/β2)`
    pub jump_infected: f64,
    /// `λ0,3 G_3 / (1 - α3/β3)`
    pub jump_quarantined: f64,
    /// `min(μ_h, μ_r) + min(δ_h, δ_r)`
    pub removal: f64,
    pub r0: f64,
}

impl R0Breakdown {
    pub fn numerator(&self) -> f64 {
        self.contact + self.rodent + self.jump_infected + self.jump_quarantined
    }
}

fn removal_rate(params: &ModelParams) -> Result<f64> {
    let removal = params.mu_h.min(params.mu_r) + params.delta_h.min(params.delta_r);
    if !(removal.is_finite() && removal > 0.0) {
        return Err(domain(format!(
            "min(mu_h, mu_r) + min(delta_h, delta_r) must be > 0, got {removal}"
        )));
    }
    Ok(removal)
}

pub fn r0_breakdown(params: &ModelParams) -> Result<R0Breakdown> {
    let removal = removal_rate(params)?;
    let jump = |i: usize| params.channel(i).stationary_intensity() * params.mark_mean_of(i);
    let contact = (1.0 - params.p) * (params.eta1 + params.eta2);
    let rodent = params.eta3;
    let jump_infected = jump(2);
    let jump_quarantined = jump(3);
    let r0 = (contact + rodent + jump_infected + jump_quarantined) / removal;
    Ok(R0Breakdown {
        contact,
        rodent,
        jump_infected,
        jump_quarantined,
        removal,
        r0,
    })
}

/// Basic reproduction number.
pub fn compute_r0(params: &ModelParams) -> Result<f64> {
    r0_breakdown(params).map(|b| b.r0)
}

/// Upper bound on the exponential growth rate of `I_h + Q_h + I_r`:
/// `(min(μ_h, μ_r) + min(δ_h, δ_r)) (R0 - 1)`.
pub fn extinction_exponent(params: &ModelParams) -> Result<f64> {
    let b = r0_breakdown(params)?;
    Ok(b.removal * (b.r0 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodentPersistence {
    /// `η3 - μ_r - δ_r - σ8²/2`
    pub a: f64,
    /// `(N_r_floor / η3) a`, present when `a > 0`.
    pub bound: Option<f64>,
}

pub fn rodent_persistence(params: &ModelParams, bounds: &StructuralBounds) -> Result<RodentPersistence> {
    if params.eta3 <= 0.0 {
        return Err(domain("rodent persistence needs eta3 > 0"));
    }
    let s8 = params.sigma(8);
    let a = params.eta3 - params.mu_r - params.delta_r - 0.5 * s8 * s8;
    let bound = (a > 0.0).then(|| bounds.n_r_floor / params.eta3 * a);
    Ok(RodentPersistence { a, bound })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanPersistence {
    /// Time-average lower bound on `S_h / N_h`.
    pub eps_h: f64,
    /// `E[ln(1 + ε_2)]` under the channel-2 mark law.
    pub l2: f64,
    pub lambda_h: f64,
    pub lambda0_h: f64,
    /// `lambda_h / lambda0_h`, present when `lambda_h > 0`.
    pub bound: Option<f64>,
}

pub fn human_persistence(params: &ModelParams, bounds: &StructuralBounds) -> Result<HumanPersistence> {
    if params.mu_h <= 0.0 {
        return Err(domain("human persistence needs mu_h > 0"));
    }
    let (p, mu_h) = (params.p, params.mu_h);
    let eps_h = params.theta_h / (bounds.m * (mu_h + (1.0 - p) * (params.eta2 + params.eta1 * bounds.k_star)));
    let stationary = |i: usize| params.channel(i).stationary_intensity();
    let jump_load: f64 = (2..=4).map(|i| params.mark_mean_of(i) * stationary(i)).sum();
    let (s2, s3, s4) = (params.sigma(2), params.sigma(3), params.sigma(4));
    let l2 = params.channel(2).marks().mean_log_growth();

    let bracket = (eps_h * eps_h * mu_h + (eps_h.powi(3) - 1.0) * s3 * s3) / mu_h - jump_load / mu_h;
    let losses = mu_h + params.delta_h + params.zeta + 0.5 * (s4 * s4 + (1.0 - p).powi(2) * s2 * s2);
    let lambda_h = (1.0 - p) * params.eta2 * bracket - losses + l2 * stationary(2);
    let lambda0_h = (1.0 - p) * params.eta2 * (params.eta1 + params.eta2) / (mu_h * bounds.n_h_floor);
    let bound = (lambda_h > 0.0).then(|| lambda_h / lambda0_h);
    Ok(HumanPersistence {
        eps_h,
        l2,
        lambda_h,
        lambda0_h,
        bound,
    })
}

/// Non-exclusive threshold flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Classification {
    pub extinction_predicted: bool,
    pub rodent_persistent: bool,
    pub human_persistent: bool,
    /// None of the three conditions above holds.
    pub indeterminate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdReport {
    pub r0: R0Breakdown,
    pub extinction_exponent: f64,
    pub rodent: RodentPersistence,
    pub human: HumanPersistence,
    pub classification: Classification,
}

pub fn threshold_report(params: &ModelParams, bounds: &StructuralBounds) -> Result<ThresholdReport> {
    let r0 = r0_breakdown(params)?;
    let extinction_exponent = r0.removal * (r0.r0 - 1.0);
    let rodent = rodent_persistence(params, bounds)?;
    let human = human_persistence(params, bounds)?;
    let extinction_predicted = r0.r0 < 1.0;
    let rodent_persistent = rodent.a > 0.0;
    let human_persistent = human.lambda_h > 0.0;
    Ok(ThresholdReport {
        r0,
        extinction_exponent,
        rodent,
        human,
        classification: Classification {
            extinction_predicted,
            rodent_persistent,
            human_persistent,
            indeterminate: !(extinction_predicted || rodent_persistent || human_persistent),
        },
    })
}
