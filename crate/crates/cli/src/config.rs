//! TOML run configuration with baseline defaults and provenance.

use std::fmt;
use std::path::PathBuf;

use hawkes_epi::analysis::{ScanAxis, ScanParam};
use hawkes_epi::model::MarkMean;
use hawkes_epi::{HawkesChannel, MarkDistribution, ModelParams, SimConfig, State, StructuralBounds};
use serde::{Deserialize, Serialize};

/// A configuration problem tied to a key and, when known, a line.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config key `{}` (line {line}): {}", self.key, self.message),
            None => write!(f, "config key `{}`: {}", self.key, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<RawModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<RawBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hawkes: Option<RawHawkes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<RawSimulation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<RawScan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<RawValidation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<RawOutput>,
}

macro_rules! raw_section {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $(
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

raw_section!(RawModel {
    theta_h: f64, theta_r: f64, mu_h: f64, mu_r: f64, delta_h: f64, delta_r: f64,
    zeta: f64, gamma_h: f64, p: f64, theta_q: f64, eta1: f64, eta2: f64, eta3: f64,
    sigma1: f64, sigma2: f64, sigma3: f64, sigma4: f64,
    sigma5: f64, sigma6: f64, sigma7: f64, sigma8: f64,
});

raw_section!(RawBounds { m: f64, k_star: f64, n_r_floor: f64, n_h_floor: f64 });

raw_section!(RawHawkes {
    lambda0_1: f64, lambda0_2: f64, lambda0_3: f64, lambda0_4: f64,
    alpha1: f64, alpha2: f64, alpha3: f64, alpha4: f64,
    beta1: f64, beta2: f64, beta3: f64, beta4: f64,
    mark_mean: f64, mark_cap: f64,
    mark_mean_1: f64, mark_mean_2: f64, mark_mean_3: f64, mark_mean_4: f64,
    mark_cap_1: f64, mark_cap_2: f64, mark_cap_3: f64, mark_cap_4: f64,
    g_from_truncated_mean: bool,
});

raw_section!(RawSimulation {
    dt: f64, horizon: f64, n_paths: u64, seed: u64, positivity_floor: f64,
    s_h: f64, i_h: f64, q_h: f64, r_h: f64, s_r: f64, i_r: f64,
});

raw_section!(RawScan {
    x: String, x_min: f64, x_max: f64,
    y: String, y_min: f64, y_max: f64,
    resolution: u64,
});

raw_section!(RawValidation { channel: u64, moment_paths: u64, lln_paths: u64, lln_horizon: f64, ks_paths: u64, ks_horizon: f64 });

raw_section!(RawOutput { dir: String });

/// Axis ranges for `scan`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub x: ScanParam,
    pub x_range: (f64, f64),
    pub y: ScanParam,
    pub y_range: (f64, f64),
    pub resolution: usize,
}

impl ScanSpec {
    pub fn axes(&self) -> hawkes_epi::Result<(ScanAxis, ScanAxis)> {
        Ok((
            ScanAxis::linspace(self.x, self.x_range.0, self.x_range.1, self.resolution)?,
            ScanAxis::linspace(self.y, self.y_range.0, self.y_range.1, self.resolution)?,
        ))
    }
}

/// Settings for `validate-hawkes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSpec {
    /// Channel index 1..=4.
    pub channel: usize,
    pub moment_paths: usize,
    pub lln_paths: usize,
    pub lln_horizon: f64,
    pub ks_paths: usize,
    pub ks_horizon: f64,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub bounds: StructuralBounds,
    pub sim: SimConfig,
    pub scan: ScanSpec,
    pub validation: ValidationSpec,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("baseline configuration is valid")
    }
}

/// A key filled in from the baseline because the document omitted it.
#[derive(Debug, Clone, PartialEq)]
pub struct Defaulted {
    pub key: String,
    pub value: String,
}

impl fmt::Display for Defaulted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} (defaulted from baseline)", self.key, self.value)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with_provenance(text).map(|(c, _)| c)
}

/// Parses `text` and lists every key that took its baseline value.
pub fn parse_config_with_provenance(text: &str) -> Result<(RunConfig, Vec<Defaulted>), ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    let mut resolver = Resolver {
        text,
        defaulted: Vec::new(),
    };
    let config = resolver.resolve(&raw)?;
    Ok((config, resolver.defaulted))
}

/// Renders every key explicitly, so that parsing the result gives back the
/// same configuration.
pub fn serialize(config: &RunConfig) -> String {
    toml::to_string(&to_raw(config)).expect("configuration serializes")
}

/// Like [`serialize`] but without the `[output]` section, so that the same
/// experiment written to different directories gives identical text.
pub fn serialize_experiment(config: &RunConfig) -> String {
    let raw = RawConfig {
        output: None,
        ..to_raw(config)
    };
    toml::to_string(&raw).expect("configuration serializes")
}

struct Resolver<'a> {
    text: &'a str,
    defaulted: Vec<Defaulted>,
}

impl Resolver<'_> {
    fn take<T: Clone + fmt::Debug>(&mut self, section: &str, key: &str, value: &Option<T>, default: T) -> T {
        match value {
            Some(v) => v.clone(),
            None => {
                self.defaulted.push(Defaulted {
                    key: format!("{section}.{key}"),
                    value: format!("{default:?}"),
                });
                default
            }
        }
    }

    fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            key: format!("{section}.{key}"),
            line: find_key_line(self.text, section, key),
            message: message.into(),
        }
    }

    fn rate(&mut self, section: &str, key: &str, value: &Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = self.take(section, key, value, default);
        if !(v.is_finite() && v >= 0.0) {
            return Err(self.error(section, key, format!("{key} must be finite and >= 0, got {v}")));
        }
        Ok(v)
    }

    fn positive(&mut self, section: &str, key: &str, value: &Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = self.take(section, key, value, default);
        if !(v.is_finite() && v > 0.0) {
            return Err(self.error(section, key, format!("{key} must be finite and > 0, got {v}")));
        }
        Ok(v)
    }

    fn unit(&mut self, section: &str, key: &str, value: &Option<f64>, default: f64) -> Result<f64, ConfigError> {
        let v = self.take(section, key, value, default);
        if !(0.0..=1.0).contains(&v) {
            return Err(self.error(section, key, format!("{key} must lie in [0, 1], got {v}")));
        }
        Ok(v)
    }

    fn count(&mut self, section: &str, key: &str, value: &Option<u64>, default: u64) -> Result<usize, ConfigError> {
        let v = self.take(section, key, value, default);
        if v == 0 {
            return Err(self.error(section, key, format!("{key} must be >= 1")));
        }
        Ok(v as usize)
    }

    fn resolve(&mut self, raw: &RawConfig) -> Result<RunConfig, ConfigError> {
        let params = self.model(raw)?;
        let bounds = self.bounds(raw)?;
        let sim = self.simulation(raw)?;
        let scan = self.scan(raw)?;
        let validation = self.validation(raw)?;
        let out = raw.output.clone().unwrap_or_default();
        let dir = self.take("output", "dir", &out.dir, "out".to_string());
        Ok(RunConfig {
            params,
            bounds,
            sim,
            scan,
            validation,
            output_dir: PathBuf::from(dir),
        })
    }

    fn model(&mut self, raw: &RawConfig) -> Result<ModelParams, ConfigError> {
        let b = ModelParams::baseline();
        let m = raw.model.clone().unwrap_or_default();
        let s = "model";
        let mut params = ModelParams {
            theta_h: self.rate(s, "theta_h", &m.theta_h, b.theta_h)?,
            theta_r: self.rate(s, "theta_r", &m.theta_r, b.theta_r)?,
            mu_h: self.rate(s, "mu_h", &m.mu_h, b.mu_h)?,
            mu_r: self.rate(s, "mu_r", &m.mu_r, b.mu_r)?,
            delta_h: self.rate(s, "delta_h", &m.delta_h, b.delta_h)?,
            delta_r: self.rate(s, "delta_r", &m.delta_r, b.delta_r)?,
            zeta: self.rate(s, "zeta", &m.zeta, b.zeta)?,
            gamma_h: self.rate(s, "gamma_h", &m.gamma_h, b.gamma_h)?,
            p: self.unit(s, "p", &m.p, b.p)?,
            theta_q: self.unit(s, "theta_q", &m.theta_q, b.theta_q)?,
            eta1: self.rate(s, "eta1", &m.eta1, b.eta1)?,
            eta2: self.rate(s, "eta2", &m.eta2, b.eta2)?,
            eta3: self.rate(s, "eta3", &m.eta3, b.eta3)?,
            ..b
        };
        let sigmas = [
            &m.sigma1, &m.sigma2, &m.sigma3, &m.sigma4, &m.sigma5, &m.sigma6, &m.sigma7, &m.sigma8,
        ];
        for (k, value) in sigmas.into_iter().enumerate() {
            params.sigma[k] = self.rate(s, &format!("sigma{}", k + 1), value, b.sigma[k])?;
        }

        let h = raw.hawkes.clone().unwrap_or_default();
        let s = "hawkes";
        let shared_mean = self.positive(s, "mark_mean", &h.mark_mean, MarkDistribution::default().mean())?;
        let shared_cap = self.positive(s, "mark_cap", &h.mark_cap, MarkDistribution::default().cap())?;
        let lambda0 = [&h.lambda0_1, &h.lambda0_2, &h.lambda0_3, &h.lambda0_4];
        let alpha = [&h.alpha1, &h.alpha2, &h.alpha3, &h.alpha4];
        let beta = [&h.beta1, &h.beta2, &h.beta3, &h.beta4];
        let means = [&h.mark_mean_1, &h.mark_mean_2, &h.mark_mean_3, &h.mark_mean_4];
        let caps = [&h.mark_cap_1, &h.mark_cap_2, &h.mark_cap_3, &h.mark_cap_4];
        for i in 0..4 {
            let n = i + 1;
            let base = b.channels[i];
            let l0 = self.rate(s, &format!("lambda0_{n}"), lambda0[i], base.lambda0())?;
            let a = self.rate(s, &format!("alpha{n}"), alpha[i], base.alpha())?;
            let be = self.positive(s, &format!("beta{n}"), beta[i], base.beta())?;
            if a / be >= 1.0 {
                return Err(self.error(
                    s,
                    &format!("alpha{n}"),
                    format!("subcriticality requires alpha{n}/beta{n} < 1, got {a}/{be} = {}", a / be),
                ));
            }
            // Per-channel overrides are optional and never reported as defaulted.
            let mean = means[i].unwrap_or(shared_mean);
            let cap = caps[i].unwrap_or(shared_cap);
            let marks = MarkDistribution::new(mean, cap).map_err(|e| self.error(s, &format!("mark_mean_{n}"), e.to_string()))?;
            params.channels[i] = HawkesChannel::new(l0, a, be, marks).map_err(|e| self.error(s, &format!("alpha{n}"), e.to_string()))?;
        }
        if self.take(s, "g_from_truncated_mean", &h.g_from_truncated_mean, false) {
            params.mark_mean = MarkMean::Truncated;
        }
        params.validate().map_err(|e| self.error("model", "*", e.to_string()))?;
        Ok(params)
    }

    fn bounds(&mut self, raw: &RawConfig) -> Result<StructuralBounds, ConfigError> {
        let d = StructuralBounds::default();
        let r = raw.bounds.clone().unwrap_or_default();
        let s = "bounds";
        let m = self.positive(s, "m", &r.m, d.m)?;
        let k_star = self.positive(s, "k_star", &r.k_star, d.k_star)?;
        let n_r_floor = self.positive(s, "n_r_floor", &r.n_r_floor, d.n_r_floor)?;
        let n_h_floor = self.positive(s, "n_h_floor", &r.n_h_floor, d.n_h_floor)?;
        StructuralBounds::new(m, k_star, n_r_floor, n_h_floor)
            .map_err(|_| self.error(s, "n_h_floor", format!("n_h_floor must not exceed m, got {n_h_floor} > {m}")))
    }

    fn simulation(&mut self, raw: &RawConfig) -> Result<SimConfig, ConfigError> {
        let d = SimConfig::default();
        let r = raw.simulation.clone().unwrap_or_default();
        let s = "simulation";
        let dt = self.positive(s, "dt", &r.dt, d.dt)?;
        let horizon = self.positive(s, "horizon", &r.horizon, d.horizon)?;
        if dt > horizon {
            return Err(self.error(s, "dt", format!("dt must not exceed horizon, got {dt} > {horizon}")));
        }
        let n_paths = self.count(s, "n_paths", &r.n_paths, d.n_paths as u64)?;
        let seed = self.take(s, "seed", &r.seed, d.master_seed);
        if seed > i64::MAX as u64 {
            return Err(self.error(s, "seed", format!("seed must fit a TOML integer (<= {}), got {seed}", i64::MAX)));
        }
        let positivity_floor = self.rate(s, "positivity_floor", &r.positivity_floor, d.positivity_floor)?;
        let x = d.initial_state;
        let initial_state = State::new(
            self.rate(s, "s_h", &r.s_h, x.s_h)?,
            self.rate(s, "i_h", &r.i_h, x.i_h)?,
            self.rate(s, "q_h", &r.q_h, x.q_h)?,
            self.rate(s, "r_h", &r.r_h, x.r_h)?,
            self.rate(s, "s_r", &r.s_r, x.s_r)?,
            self.rate(s, "i_r", &r.i_r, x.i_r)?,
        );
        if initial_state.n_h() <= 0.0 {
            return Err(self.error(s, "s_h", "initial human population must be > 0"));
        }
        if initial_state.n_r() <= 0.0 {
            return Err(self.error(s, "s_r", "initial rodent population must be > 0"));
        }
        Ok(SimConfig {
            dt,
            horizon,
            n_paths,
            master_seed: seed,
            initial_state,
            positivity_floor,
        })
    }

    fn scan(&mut self, raw: &RawConfig) -> Result<ScanSpec, ConfigError> {
        let r = raw.scan.clone().unwrap_or_default();
        let s = "scan";
        let axis = |this: &mut Self, key: &str, value: &Option<String>, default: ScanParam| {
            let name = this.take(s, key, value, default.name().to_string());
            name.parse::<ScanParam>().map_err(|e| this.error(s, key, e.to_string()))
        };
        let x = axis(self, "x", &r.x, ScanParam::MuH)?;
        let y = axis(self, "y", &r.y, ScanParam::MuR)?;
        if x == y {
            return Err(self.error(s, "y", format!("scan axes must differ, both are `{x}`")));
        }
        let x_range = (self.take(s, "x_min", &r.x_min, 1e-4), self.take(s, "x_max", &r.x_max, 1e-2));
        let y_range = (self.take(s, "y_min", &r.y_min, 1e-6), self.take(s, "y_max", &r.y_max, 1e-2));
        let resolution = self.take(s, "resolution", &r.resolution, 50);
        if resolution < 2 {
            return Err(self.error(s, "resolution", format!("resolution must be >= 2, got {resolution}")));
        }
        for (key, v) in [("x_min", x_range.0), ("x_max", x_range.1), ("y_min", y_range.0), ("y_max", y_range.1)] {
            if !v.is_finite() {
                return Err(self.error(s, key, format!("{key} must be finite, got {v}")));
            }
        }
        Ok(ScanSpec {
            x,
            x_range,
            y,
            y_range,
            resolution: resolution as usize,
        })
    }

    fn validation(&mut self, raw: &RawConfig) -> Result<ValidationSpec, ConfigError> {
        let r = raw.validation.clone().unwrap_or_default();
        let s = "validation";
        let channel = self.take(s, "channel", &r.channel, 2);
        if !(1..=4).contains(&channel) {
            return Err(self.error(s, "channel", format!("channel must be 1..=4, got {channel}")));
        }
        Ok(ValidationSpec {
            channel: channel as usize,
            moment_paths: self.count(s, "moment_paths", &r.moment_paths, 200_000)?,
            lln_paths: self.count(s, "lln_paths", &r.lln_paths, 50)?,
            lln_horizon: self.positive(s, "lln_horizon", &r.lln_horizon, 1e6)?,
            ks_paths: self.count(s, "ks_paths", &r.ks_paths, 200)?,
            ks_horizon: self.positive(s, "ks_horizon", &r.ks_horizon, 2e6)?,
        })
    }
}

fn to_raw(c: &RunConfig) -> RawConfig {
    let p = &c.params;
    let ch = &p.channels;
    let x = c.sim.initial_state;
    RawConfig {
        model: Some(RawModel {
            theta_h: Some(p.theta_h),
            theta_r: Some(p.theta_r),
            mu_h: Some(p.mu_h),
            mu_r: Some(p.mu_r),
            delta_h: Some(p.delta_h),
            delta_r: Some(p.delta_r),
            zeta: Some(p.zeta),
            gamma_h: Some(p.gamma_h),
            p: Some(p.p),
            theta_q: Some(p.theta_q),
            eta1: Some(p.eta1),
            eta2: Some(p.eta2),
            eta3: Some(p.eta3),
            sigma1: Some(p.sigma[0]),
            sigma2: Some(p.sigma[1]),
            sigma3: Some(p.sigma[2]),
            sigma4: Some(p.sigma[3]),
            sigma5: Some(p.sigma[4]),
            sigma6: Some(p.sigma[5]),
            sigma7: Some(p.sigma[6]),
            sigma8: Some(p.sigma[7]),
        }),
        bounds: Some(RawBounds {
            m: Some(c.bounds.m),
            k_star: Some(c.bounds.k_star),
            n_r_floor: Some(c.bounds.n_r_floor),
            n_h_floor: Some(c.bounds.n_h_floor),
        }),
        hawkes: Some(RawHawkes {
            lambda0_1: Some(ch[0].lambda0()),
            lambda0_2: Some(ch[1].lambda0()),
            lambda0_3: Some(ch[2].lambda0()),
            lambda0_4: Some(ch[3].lambda0()),
            alpha1: Some(ch[0].alpha()),
            alpha2: Some(ch[1].alpha()),
            alpha3: Some(ch[2].alpha()),
            alpha4: Some(ch[3].alpha()),
            beta1: Some(ch[0].beta()),
            beta2: Some(ch[1].beta()),
            beta3: Some(ch[2].beta()),
            beta4: Some(ch[3].beta()),
            mark_mean: Some(ch[0].marks().mean()),
            mark_cap: Some(ch[0].marks().cap()),
            mark_mean_1: Some(ch[0].marks().mean()),
            mark_mean_2: Some(ch[1].marks().mean()),
            mark_mean_3: Some(ch[2].marks().mean()),
            mark_mean_4: Some(ch[3].marks().mean()),
            mark_cap_1: Some(ch[0].marks().cap()),
            mark_cap_2: Some(ch[1].marks().cap()),
            mark_cap_3: Some(ch[2].marks().cap()),
            mark_cap_4: Some(ch[3].marks().cap()),
            g_from_truncated_mean: Some(p.mark_mean == MarkMean::Truncated),
        }),
        simulation: Some(RawSimulation {
            dt: Some(c.sim.dt),
            horizon: Some(c.sim.horizon),
            n_paths: Some(c.sim.n_paths as u64),
            seed: Some(c.sim.master_seed),
            positivity_floor: Some(c.sim.positivity_floor),
            s_h: Some(x.s_h),
            i_h: Some(x.i_h),
            q_h: Some(x.q_h),
            r_h: Some(x.r_h),
            s_r: Some(x.s_r),
            i_r: Some(x.i_r),
        }),
        scan: Some(RawScan {
            x: Some(c.scan.x.name().to_string()),
            x_min: Some(c.scan.x_range.0),
            x_max: Some(c.scan.x_range.1),
            y: Some(c.scan.y.name().to_string()),
            y_min: Some(c.scan.y_range.0),
            y_max: Some(c.scan.y_range.1),
            resolution: Some(c.scan.resolution as u64),
        }),
        validation: Some(RawValidation {
            channel: Some(c.validation.channel as u64),
            moment_paths: Some(c.validation.moment_paths as u64),
            lln_paths: Some(c.validation.lln_paths as u64),
            lln_horizon: Some(c.validation.lln_horizon),
            ks_paths: Some(c.validation.ks_paths as u64),
            ks_horizon: Some(c.validation.ks_horizon),
        }),
        output: Some(RawOutput {
            dir: Some(c.output_dir.to_string_lossy().into_owned()),
        }),
    }
}

/// 1-based line of `key = ...` inside `[section]`.
pub fn find_key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = trimmed.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn toml_error(text: &str, err: &toml::de::Error) -> ConfigError {
    let Some(span) = err.span() else {
        return ConfigError {
            key: "<document>".to_string(),
            line: None,
            message: err.message().to_string(),
        };
    };
    let start = span.start.min(text.len());
    let line_no = text[..start].matches('\n').count() + 1;
    let mut section = String::new();
    for line in text.lines().take(line_no) {
        let trimmed = line.trim();
        if let Some(name) = trimmed.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            section = name.trim().to_string();
        }
    }
    let line = text.lines().nth(line_no - 1).unwrap_or("");
    let key = match line.split_once('=') {
        Some((k, _)) if !line.trim_start().starts_with('[') => {
            let k = k.trim();
            if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            }
        }
        _ if !section.is_empty() => section,
        _ => "<document>".to_string(),
    };
    ConfigError {
        key,
        line: Some(line_no),
        message: err.message().to_string(),
    }
}
