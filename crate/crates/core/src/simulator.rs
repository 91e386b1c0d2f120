//! Jump-adapted Euler–Maruyama integration of the human-rodent system.
//!
//! Brownian noise acts on all six compartments through eight independent
//! sources; Hawkes jumps multiply the four human compartments. Hawkes logs do
//! not depend on the state, so they are drawn up front and their event times
//! are merged into the regular grid.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::hawkes::EventLog;
use crate::model::{Compartment, ModelParams};
use crate::rng::{stream_rng, BROWNIAN_STREAM};

pub const COMPONENT_NAMES: [&str; 6] = ["S_h", "I_h", "Q_h", "R_h", "S_r", "I_r"];

/// Population sizes of the six compartments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub s_h: f64,
    pub i_h: f64,
    pub q_h: f64,
    pub r_h: f64,
    pub s_r: f64,
    pub i_r: f64,
}

impl State {
    pub fn new(s_h: f64, i_h: f64, q_h: f64, r_h: f64, s_r: f64, i_r: f64) -> Self {
        Self {
            s_h,
            i_h,
            q_h,
            r_h,
            s_r,
            i_r,
        }
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.s_h, self.i_h, self.q_h, self.r_h, self.s_r, self.i_r]
    }

    pub fn n_h(&self) -> f64 {
        self.s_h + self.i_h + self.q_h + self.r_h
    }

    pub fn n_r(&self) -> f64 {
        self.s_r + self.i_r
    }

    /// `I_h + Q_h + I_r`.
    pub fn infected_total(&self) -> f64 {
        self.i_h + self.q_h + self.i_r
    }

    pub fn get(&self, c: Compartment) -> f64 {
        self.to_array()[c.channel() - 1]
    }

    fn scale(&mut self, c: Compartment, factor: f64) {
        match c {
            Compartment::SusceptibleHuman => self.s_h *= factor,
            Compartment::InfectedHuman => self.i_h *= factor,
            Compartment::QuarantinedHuman => self.q_h *= factor,
            Compartment::RecoveredHuman => self.r_h *= factor,
        }
    }

    fn check_totals(&self) -> Result<(f64, f64)> {
        let (n_h, n_r) = (self.n_h(), self.n_r());
        if !(n_h > 0.0) || !(n_r > 0.0) {
            return Err(domain(format!(
                "human and rodent totals must be > 0 (n_h = {n_h}, n_r = {n_r})"
            )));
        }
        Ok((n_h, n_r))
    }
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Regular grid step, days.
    pub dt: f64,
    pub horizon: f64,
    pub n_paths: usize,
    pub master_seed: u64,
    pub initial_state: State,
    /// Value a component is reset to when an Euler step overshoots below 0.
    pub positivity_floor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 500.0,
            n_paths: 80,
            master_seed: 42,
            initial_state: State::new(9990.0, 10.0, 0.0, 0.0, 4990.0, 10.0),
            positivity_floor: 1e-9,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(domain(format!("dt must be finite and > 0, got {}", self.dt)));
        }
        if !(self.horizon.is_finite() && self.horizon >= self.dt) {
            return Err(domain(format!(
                "horizon must be finite and >= dt, got {}",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(domain("n_paths must be >= 1"));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor > 0.0) {
            return Err(domain("positivity_floor must be finite and > 0"));
        }
        let x = self.initial_state.to_array();
        if let Some(k) = x.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain(format!(
                "initial {} must be finite and >= 0",
                COMPONENT_NAMES[k]
            )));
        }
        self.initial_state.check_totals()?;
        Ok(())
    }

    /// Regular time grid `0, dt, 2dt, ..., horizon`; the last step is shortened
    /// when `horizon` is not a multiple of `dt`.
    pub fn regular_grid(&self) -> Vec<f64> {
        let ratio = self.horizon / self.dt;
        let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * self.dt).collect();
        grid.push(self.horizon);
        grid
    }
}

/// Drift of the non-compensated system, heads/day.
pub fn drift(state: &State, params: &ModelParams) -> Result<[f64; 6]> {
    let (n_h, n_r) = state.check_totals()?;
    let p = params;
    let State {
        s_h,
        i_h,
        q_h,
        r_h,
        s_r,
        i_r,
    } = *state;
    let infection_h = (1.0 - p.p) * (p.eta1 * i_r + p.eta2 * i_h) / n_h * s_h;
    let infection_r = p.eta3 * s_r * i_r / n_r;
    Ok([
        p.theta_h - infection_h - p.mu_h * s_h,
        infection_h - (p.mu_h + p.delta_h + p.zeta) * i_h,
        p.zeta * i_h - (p.mu_h + p.gamma_h + (1.0 - p.theta_q) * p.delta_h) * q_h,
        p.gamma_h * q_h - p.mu_h * r_h,
        p.theta_r - infection_r - p.mu_r * s_r,
        infection_r - (p.mu_r + p.delta_r) * i_r,
    ])
}

/// Brownian contribution for increments `dw[k] = ΔB_{k+1}`.
///
/// The `B_2` term moves `S_h` and `I_h` in opposite directions with the same
/// draw.
pub fn diffusion(state: &State, params: &ModelParams, dw: &[f64; 8]) -> Result<[f64; 6]> {
    let (n_h, _) = state.check_totals()?;
    let s = &params.sigma;
    let q = 1.0 - params.p;
    let State {
        s_h,
        i_h,
        q_h,
        r_h,
        s_r,
        i_r,
    } = *state;
    Ok([
        -q * (s[0] * i_r * dw[0] + s[1] * i_h * dw[1]) / n_h * s_h + s[2] * s_h * dw[2],
        q * s[1] * s_h / n_h * i_h * dw[1] + s[3] * i_h * dw[3],
        s[4] * q_h * dw[4],
        s[5] * r_h * dw[5],
        s[6] * s_r * dw[6],
        s[7] * i_r * dw[7],
    ])
}

/// Multiplies the compartment of `channel` (1..=4) by `∏ (1 + ε_j)`.
pub fn apply_jumps(state: &State, channel: usize, marks: &[f64]) -> Result<State> {
    let target = Compartment::from_channel(channel)?;
    if let Some(m) = marks.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(domain(format!("jump marks must be finite and > 0, got {m}")));
    }
    let mut out = *state;
    out.scale(target, marks.iter().map(|m| 1.0 + m).product());
    Ok(out)
}

/// One simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_index: u64,
    /// Regular grid merged with all jump times.
    pub grid: Vec<f64>,
    pub states: Vec<State>,
    /// Event logs of channels 1..=4.
    pub events: [EventLog; 4],
    /// Number of component updates reset to the positivity floor.
    pub clamp_count: usize,
}

impl PathRecord {
    pub fn steps(&self) -> usize {
        self.grid.len().saturating_sub(1)
    }

    pub fn terminal(&self) -> State {
        *self.states.last().expect("path has at least the initial state")
    }

    /// Values of one component (index into [`COMPONENT_NAMES`]).
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.to_array()[k]).collect()
    }

    pub fn map<F: Fn(&State) -> f64>(&self, f: F) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }

    /// State at `t` with the left-constant convention (last grid point ≤ t).
    pub fn state_at(&self, t: f64) -> State {
        let idx = self.grid.partition_point(|&g| g <= t).max(1) - 1;
        self.states[idx]
    }
}

/// Simulates path `path_index`; deterministic in `(config.master_seed, path_index)`.
pub fn simulate_path(params: &ModelParams, config: &SimConfig, path_index: u64) -> Result<PathRecord> {
    params.validate()?;
    config.validate()?;
    let seed = config.master_seed;

    let mut logs: Vec<EventLog> = Vec::with_capacity(4);
    for i in 1..=4 {
        let mut rng = stream_rng(seed, path_index, i as u64);
        logs.push(params.channel(i).simulate(i, config.horizon, &mut rng)?);
    }
    let mut jumps: Vec<(f64, usize, f64)> = logs
        .iter()
        .flat_map(|log| log.iter().map(move |(t, m)| (t, log.channel(), m)))
        .collect();
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let regular = config.regular_grid();
    let mut grid = Vec::with_capacity(regular.len() + jumps.len());
    let mut states = Vec::with_capacity(regular.len() + jumps.len());
    let mut x = config.initial_state;
    grid.push(0.0);
    states.push(x);

    let mut noise = stream_rng(seed, path_index, BROWNIAN_STREAM);
    let mut clamp_count = 0usize;
    let (mut ri, mut ji) = (1usize, 0usize);
    let mut t = 0.0;
    while ri < regular.len() || ji < jumps.len() {
        let next_regular = regular.get(ri).copied().unwrap_or(f64::INFINITY);
        let next_jump = jumps.get(ji).map_or(f64::INFINITY, |j| j.0);
        let t_next = next_regular.min(next_jump);
        if next_regular == t_next {
            ri += 1;
        }

        let h = t_next - t;
        if h > 0.0 {
            let sq = h.sqrt();
            let mut dw = [0.0; 8];
            for w in &mut dw {
                *w = noise.sample::<f64, _>(StandardNormal) * sq;
            }
            let mu = drift(&x, params)?;
            let sig = diffusion(&x, params, &dw)?;
            let mut next = x.to_array();
            for k in 0..6 {
                next[k] += mu[k] * h + sig[k];
                if !next[k].is_finite() {
                    return Err(Error::NonFinite {
                        path: path_index,
                        time: t_next,
                        component: COMPONENT_NAMES[k],
                    });
                }
                if next[k] < 0.0 {
                    next[k] = config.positivity_floor;
                    clamp_count += 1;
                }
            }
            x = State::from_array(next);
        }

        // Jumps act after the continuous update, using left-limit coefficients.
        while ji < jumps.len() && jumps[ji].0 == t_next {
            let (_, channel, mark) = jumps[ji];
            x = apply_jumps(&x, channel, &[mark])?;
            ji += 1;
        }
        if let Some(k) = x.to_array().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                path: path_index,
                time: t_next,
                component: COMPONENT_NAMES[k],
            });
        }

        t = t_next;
        grid.push(t);
        states.push(x);
    }

    let events: [EventLog; 4] = logs.try_into().expect("four channels");
    Ok(PathRecord {
        path_index,
        grid,
        states,
        events,
        clamp_count,
    })
}

/// Ensemble mean on the regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPath {
    pub grid: Vec<f64>,
    pub states: Vec<State>,
}

/// Paths ordered by index, plus any paths that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub paths: Vec<PathRecord>,
    pub failures: Vec<Error>,
    pub mean: MeanPath,
}

impl Ensemble {
    pub fn total_clamps(&self) -> usize {
        self.paths.iter().map(|p| p.clamp_count).sum()
    }

    pub fn total_steps(&self) -> usize {
        self.paths.iter().map(PathRecord::steps).sum()
    }
}

/// Simulates `config.n_paths` paths in parallel. Output is identical to
/// sequential execution.
pub fn simulate_ensemble(params: &ModelParams, config: &SimConfig) -> Result<Ensemble> {
    config.validate()?;
    let results: Vec<Result<PathRecord>> = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(params, config, i))
        .collect();
    let mut paths = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(p) => paths.push(p),
            Err(e) => failures.push(e),
        }
    }
    if paths.is_empty() {
        return Err(failures.swap_remove(0));
    }
    let mean = mean_path(&paths, &config.regular_grid());
    Ok(Ensemble {
        paths,
        failures,
        mean,
    })
}

/// Pointwise mean over paths at the given times (left-constant sampling).
pub fn mean_path(paths: &[PathRecord], grid: &[f64]) -> MeanPath {
    let n = paths.len() as f64;
    let states = grid
        .iter()
        .map(|&t| {
            let mut acc = [0.0; 6];
            for p in paths {
                for (a, v) in acc.iter_mut().zip(p.state_at(t).to_array()) {
                    *a += v;
                }
            }
            State::from_array(acc.map(|a| a / n))
        })
        .collect();
    MeanPath {
        grid: grid.to_vec(),
        states,
    }
}
