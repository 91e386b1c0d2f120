//! Post-processing: time averages, extinction slopes, persistence checks,
//! Hawkes validation and R0 grid scans.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hawkes::HawkesChannel;
use crate::model::{compute_r0, human_persistence, rodent_persistence, ModelParams, StructuralBounds};
use crate::rng::stream_rng;
use crate::simulator::PathRecord;

/// Default trailing-window fraction for slopes and persistence averages.
pub const DEFAULT_WINDOW: f64 = 0.5;

/// Values on a strictly increasing time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(domain("time series needs one value per grid point"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("time series grid must be strictly increasing"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_time(&self) -> Option<f64> {
        self.grid.first().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.grid.last().copied()
    }

    /// Linear interpolation inside the grid.
    fn interpolate(&self, t: f64) -> f64 {
        let i = self.grid.partition_point(|&g| g <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.grid.len() {
            return self.values[i - 1];
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Trapezoidal mean `(1/(T - t0)) ∫_{t0}^T v(t) dt` over the grid.
    pub fn time_average(&self, t0: f64) -> Result<f64> {
        let (Some(first), Some(last)) = (self.first_time(), self.last_time()) else {
            return Err(domain("time average of an empty series"));
        };
        if !(t0 < last) {
            return Err(domain(format!("empty averaging window: t0 = {t0} >= T = {last}")));
        }
        let start = t0.max(first);
        let mut area = 0.0;
        let mut prev_t = start;
        let mut prev_v = self.interpolate(start);
        for (&t, &v) in self.grid.iter().zip(&self.values).filter(|(&t, _)| t > start) {
            area += 0.5 * (prev_v + v) * (t - prev_t);
            prev_t = t;
            prev_v = v;
        }
        Ok(area / (last - start))
    }

    /// Start of the trailing window covering `fraction` of the time span.
    pub fn window_start(&self, fraction: f64) -> Option<f64> {
        let (first, last) = (self.first_time()?, self.last_time()?);
        Some(last - fraction * (last - first))
    }
}

/// Least-squares slope of `ln(value)` against time over the trailing
/// `window` fraction of the series.
///
/// Fails with [`Error::ExtinctBeforeWindow`] when every value in the window
/// is at or below `floor`.
pub fn extinction_slope(ts: &TimeSeries, window: f64, floor: f64) -> Result<f64> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(domain(format!("window fraction must lie in (0, 1], got {window}")));
    }
    let start = ts.window_start(window).ok_or_else(|| domain("slope of an empty series"))?;
    let points: Vec<(f64, f64)> = ts
        .grid()
        .iter()
        .zip(ts.values())
        .filter(|(&t, _)| t >= start)
        .map(|(&t, &v)| (t, v))
        .collect();
    if points.len() < 2 {
        return Err(domain("trailing window holds fewer than two points"));
    }
    if points.iter().all(|&(_, v)| v <= floor) {
        return Err(Error::ExtinctBeforeWindow);
    }
    if let Some(&(t, v)) = points.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(domain(format!("non-positive value {v} at t = {t}")));
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, v) in &points {
        let dt = t - mean_t;
        sxy += dt * (v.ln() - mean_y);
        sxx += dt * dt;
    }
    Ok(sxy / sxx)
}

/// Linear-interpolation (type 7) quantile of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> Option<f64> {
    if data.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    if data.len() < 2 {
        return (mean, 0.0);
    }
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Outcome of comparing simulated averages with a theoretical lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundStatus {
    /// The 5th percentile reaches the bound (within the tolerance used).
    Holds,
    Violated,
    /// The persistence condition fails, so the bound does not apply.
    Inapplicable,
    /// Every path left the region where the bound is valid.
    NoEligiblePaths,
}

impl fmt::Display for BoundStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Holds => "holds",
            Self::Violated => "violated",
            Self::Inapplicable => "inapplicable",
            Self::NoEligiblePaths => "no eligible paths",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentPersistence {
    /// `a` for rodents, `lambda_h` for humans.
    pub condition: f64,
    pub bound: Option<f64>,
    /// Trailing-window averages of the eligible paths.
    pub averages: Vec<f64>,
    /// Paths dropped because the population floor was crossed.
    pub excluded: usize,
    pub percentile_5: Option<f64>,
    pub status: BoundStatus,
}

/// Persistence-in-the-mean check. The liminf of the theory is approximated
/// by a trailing-window average.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceReport {
    pub window_start: f64,
    pub rodent: CompartmentPersistence,
    pub human: CompartmentPersistence,
    pub warnings: Vec<String>,
}

/// Compares trailing-window averages of `I_r` and `I_h` with the
/// persistence bounds. A bound holds when the ensemble 5th percentile is at
/// least `(1 - tolerance) * bound`.
///
/// Rodent paths whose `N_r` ever drops below `n_r_floor` and human paths whose
/// `N_h` drops below `n_h_floor` inside the window are excluded and counted.
pub fn persistence_check(
    records: &[PathRecord],
    params: &ModelParams,
    bounds: &StructuralBounds,
    window: f64,
    tolerance: f64,
) -> Result<PersistenceReport> {
    if records.is_empty() {
        return Err(domain("persistence check needs at least one path"));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(domain(format!("window fraction must lie in (0, 1], got {window}")));
    }
    let rodent = rodent_persistence(params, bounds)?;
    let human = human_persistence(params, bounds)?;
    let horizon = records[0].grid.last().copied().unwrap_or(0.0);
    let t0 = horizon * (1.0 - window);

    let mut rodent_avgs = Vec::new();
    let mut human_avgs = Vec::new();
    let (mut rodent_excluded, mut human_excluded) = (0, 0);
    for rec in records {
        let i_r = TimeSeries::new(rec.grid.clone(), rec.map(|s| s.i_r))?;
        if rec.states.iter().all(|s| s.n_r() >= bounds.n_r_floor) {
            rodent_avgs.push(i_r.time_average(t0)?);
        } else {
            rodent_excluded += 1;
        }
        let i_h = TimeSeries::new(rec.grid.clone(), rec.map(|s| s.i_h))?;
        let human_ok = rec
            .grid
            .iter()
            .zip(&rec.states)
            .filter(|(&t, _)| t >= t0)
            .all(|(_, s)| s.n_h() >= bounds.n_h_floor);
        if human_ok {
            human_avgs.push(i_h.time_average(t0)?);
        } else {
            human_excluded += 1;
        }
    }

    let mut warnings = Vec::new();
    let window_len = horizon - t0;
    for (name, rate) in [("rodent a", rodent.a), ("human lambda_h", human.lambda_h)] {
        if rate != 0.0 && window_len * rate.abs() < 1.0 {
            warnings.push(format!(
                "averaging window ({window_len} d) is shorter than the {name} time scale ({} d)",
                1.0 / rate.abs()
            ));
        }
    }

    let summarize = |condition: f64, bound: Option<f64>, averages: Vec<f64>, excluded: usize| {
        let percentile_5 = quantile(&averages, 0.05);
        let status = match (bound, percentile_5) {
            (None, _) => BoundStatus::Inapplicable,
            (Some(_), None) => BoundStatus::NoEligiblePaths,
            (Some(b), Some(q)) if q >= (1.0 - tolerance) * b => BoundStatus::Holds,
            _ => BoundStatus::Violated,
        };
        CompartmentPersistence {
            condition,
            bound,
            averages,
            excluded,
            percentile_5,
            status,
        }
    };
    Ok(PersistenceReport {
        window_start: t0,
        rodent: summarize(rodent.a, rodent.bound, rodent_avgs, rodent_excluded),
        human: summarize(human.lambda_h, human.bound, human_avgs, human_excluded),
        warnings,
    })
}

/// Empirical `Λ(T)/T` against the limit `λ0 / (1 - α/β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnReport {
    pub horizon: f64,
    pub n_paths: usize,
    pub limit: f64,
    pub mean: f64,
    pub std_error: f64,
    pub deviation: f64,
    pub relative_deviation: f64,
}

impl LlnReport {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.deviation / self.std_error
        } else if self.deviation == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Simulates `n_paths` logs on `[0, horizon]` and reports the compensator
/// rate per path.
pub fn hawkes_lln_check(channel: &HawkesChannel, horizon: f64, n_paths: usize, seed: u64) -> Result<LlnReport> {
    if n_paths == 0 {
        return Err(domain("n_paths must be >= 1"));
    }
    let rates: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let log = channel.simulate(0, horizon, &mut stream_rng(seed, i, 0))?;
            Ok(channel.compensator(&log, horizon)? / horizon)
        })
        .collect::<Result<_>>()?;
    let (mean, std_error) = mean_and_stderr(&rates);
    let limit = channel.stationary_intensity();
    let deviation = mean - limit;
    Ok(LlnReport {
        horizon,
        n_paths,
        limit,
        mean,
        std_error,
        deviation,
        relative_deviation: deviation / limit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    Intensity,
    Count,
}

impl fmt::Display for MomentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Intensity => "E[lambda(t)]",
            Self::Count => "E[H(t)]",
        })
    }
}

/// Monte Carlo estimate of a closed-form moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCheck {
    pub kind: MomentKind,
    pub t: f64,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub std_error: f64,
}

impl MomentCheck {
    pub fn z_score(&self) -> f64 {
        let d = self.mc_mean - self.closed_form;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, n_se: f64) -> bool {
        self.z_score().abs() <= n_se
    }
}

/// Checks `E[λ(t)]` at `intensity_times` and `E[H(t)]` at `count_times`
/// against `n_paths` simulated logs.
pub fn hawkes_moment_check(
    channel: &HawkesChannel,
    intensity_times: &[f64],
    count_times: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<MomentCheck>> {
    if n_paths == 0 {
        return Err(domain("n_paths must be >= 1"));
    }
    let horizon = intensity_times
        .iter()
        .chain(count_times)
        .copied()
        .fold(0.0, f64::max);
    if !(horizon > 0.0) {
        return Err(domain("moment check needs at least one positive time"));
    }
    let samples: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let log = channel.simulate(0, horizon, &mut stream_rng(seed, i, 0))?;
            let mut row = Vec::with_capacity(intensity_times.len() + count_times.len());
            for &t in intensity_times {
                row.push(channel.intensity_at(&log, t)?);
            }
            for &t in count_times {
                row.push(log.count_until(t) as f64);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let column = |k: usize| samples.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let mut out = Vec::new();
    for (k, &t) in intensity_times.iter().enumerate() {
        let (mc_mean, std_error) = mean_and_stderr(&column(k));
        out.push(MomentCheck {
            kind: MomentKind::Intensity,
            t,
            closed_form: channel.expected_intensity(t)?,
            mc_mean,
            std_error,
        });
    }
    for (k, &t) in count_times.iter().enumerate() {
        let (mc_mean, std_error) = mean_and_stderr(&column(intensity_times.len() + k));
        out.push(MomentCheck {
            kind: MomentKind::Count,
            t,
            closed_form: channel.expected_count(t)?,
            mc_mean,
            std_error,
        });
    }
    Ok(out)
}

/// One-sample Kolmogorov–Smirnov test against Exp(1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_test_exp1(samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(domain("KS test needs at least one sample"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let cdf = -(-x.max(0.0)).exp_m1();
        d = d.max((i + 1) as f64 / n - cdf).max(cdf - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult {
        n: v.len(),
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Scalar parameters that can label a scan axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanParam {
    MuH,
    MuR,
    DeltaH,
    DeltaR,
    /// `η1 + η2`, split at the baseline ratio.
    Eta1PlusEta2,
    P,
    /// Common value of `λ0,2` and `λ0,3`.
    Lambda0Joint,
    Alpha2,
    Alpha3,
}

impl ScanParam {
    pub const ALL: [ScanParam; 9] = [
        Self::MuH,
        Self::MuR,
        Self::DeltaH,
        Self::DeltaR,
        Self::Eta1PlusEta2,
        Self::P,
        Self::Lambda0Joint,
        Self::Alpha2,
        Self::Alpha3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MuH => "mu_h",
            Self::MuR => "mu_r",
            Self::DeltaH => "delta_h",
            Self::DeltaR => "delta_r",
            Self::Eta1PlusEta2 => "eta1_plus_eta2",
            Self::P => "p",
            Self::Lambda0Joint => "lambda0_joint",
            Self::Alpha2 => "alpha2",
            Self::Alpha3 => "alpha3",
        }
    }

    /// Returns `params` with this parameter set to `value`.
    pub fn apply(self, params: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut out = *params;
        let rebuild = |ch: &HawkesChannel, lambda0: f64, alpha: f64| {
            HawkesChannel::new(lambda0, alpha, ch.beta(), *ch.marks())
        };
        match self {
            Self::MuH => out.mu_h = value,
            Self::MuR => out.mu_r = value,
            Self::DeltaH => out.delta_h = value,
            Self::DeltaR => out.delta_r = value,
            Self::Eta1PlusEta2 => {
                let total = params.eta1 + params.eta2;
                let share = if total > 0.0 { params.eta1 / total } else { 0.5 };
                out.eta1 = value * share;
                out.eta2 = value * (1.0 - share);
            }
            Self::P => out.p = value,
            Self::Lambda0Joint => {
                for i in [1, 2] {
                    let ch = params.channels[i];
                    out.channels[i] = rebuild(&ch, value, ch.alpha())?;
                }
            }
            Self::Alpha2 | Self::Alpha3 => {
                let i = if self == Self::Alpha2 { 1 } else { 2 };
                let ch = params.channels[i];
                out.channels[i] = rebuild(&ch, ch.lambda0(), value)?;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for ScanParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
                domain(format!("unknown scan axis `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

impl fmt::Display for ScanParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanAxis {
    pub param: ScanParam,
    pub values: Vec<f64>,
}

impl ScanAxis {
    /// `resolution` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(param: ScanParam, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(domain(format!("axis resolution must be >= 2, got {resolution}")));
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(domain("axis bounds must be finite"));
        }
        let step = (hi - lo) / (resolution - 1) as f64;
        let mut values: Vec<f64> = (0..resolution).map(|k| lo + k as f64 * step).collect();
        values[resolution - 1] = hi;
        Ok(Self { param, values })
    }
}

/// R0 over a two-parameter grid with its level-1 contour.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub x: ScanAxis,
    pub y: ScanAxis,
    /// `z[ix][iy]`
    pub z: Vec<Vec<f64>>,
    pub contour: Vec<(f64, f64)>,
}

impl GridScan {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.z[ix][iy]
    }

    /// Rows `(x, y, z)` with `x` varying slowest.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x.values.iter().enumerate().flat_map(move |(ix, &x)| {
            self.y
                .values
                .iter()
                .enumerate()
                .map(move |(iy, &y)| (x, y, self.z[ix][iy]))
        })
    }
}

/// Evaluates R0 on the grid spanned by two distinct parameters.
pub fn scan_r0(params: &ModelParams, x: &ScanAxis, y: &ScanAxis) -> Result<GridScan> {
    scan(params, x, y, 1.0, compute_r0)
}

/// Evaluates any scalar function of the parameters on a grid and extracts the
/// contour at `level`.
pub fn scan<F>(params: &ModelParams, x: &ScanAxis, y: &ScanAxis, level: f64, f: F) -> Result<GridScan>
where
    F: Fn(&ModelParams) -> Result<f64>,
{
    if x.param == y.param {
        return Err(domain(format!("scan axes must differ, both are `{}`", x.param)));
    }
    for axis in [x, y] {
        if axis.values.len() < 2 {
            return Err(domain(format!("axis `{}` needs at least two values", axis.param)));
        }
    }
    let mut z = Vec::with_capacity(x.values.len());
    for &xv in &x.values {
        let with_x = x.param.apply(params, xv)?;
        let column = y
            .values
            .iter()
            .map(|&yv| f(&y.param.apply(&with_x, yv)?))
            .collect::<Result<Vec<f64>>>()?;
        z.push(column);
    }
    let contour = level_contour(&x.values, &y.values, &z, level);
    Ok(GridScan {
        x: x.clone(),
        y: y.clone(),
        z,
        contour,
    })
}

/// Points where the piecewise-linear interpolant along grid edges crosses
/// `level`.
pub fn level_contour(xs: &[f64], ys: &[f64], z: &[Vec<f64>], level: f64) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for (ix, &x) in xs.iter().enumerate() {
        for (iy, &y) in ys.iter().enumerate() {
            let here = z[ix][iy] - level;
            if here == 0.0 {
                points.push((x, y));
                continue;
            }
            if ix + 1 < xs.len() {
                let next = z[ix + 1][iy] - level;
                if here * next < 0.0 {
                    let s = here / (here - next);
                    points.push((x + s * (xs[ix + 1] - x), y));
                }
            }
            if iy + 1 < ys.len() {
                let next = z[ix][iy + 1] - level;
                if here * next < 0.0 {
                    let s = here / (here - next);
                    points.push((x, y + s * (ys[iy + 1] - y)));
                }
            }
        }
    }
    points
}
