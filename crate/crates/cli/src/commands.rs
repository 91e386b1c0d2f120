//! Subcommand execution. Every run writes `manifest.toml` and
//! `provenance.log` next to its outputs.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hawkes_epi::analysis::{hawkes_lln_check, hawkes_moment_check, ks_test_exp1, scan_r0};
use hawkes_epi::model::{r0_breakdown, threshold_report};
use hawkes_epi::rng::stream_rng;
use hawkes_epi::simulator::{mean_path, simulate_ensemble, simulate_path};

use crate::config::{serialize_experiment, Defaulted, RunConfig};
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    R0,
    Thresholds,
    Simulate,
    Ensemble,
    Scan,
    ValidateHawkes,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::R0,
        Self::Thresholds,
        Self::Simulate,
        Self::Ensemble,
        Self::Scan,
        Self::ValidateHawkes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::R0 => "r0",
            Self::Thresholds => "thresholds",
            Self::Simulate => "simulate",
            Self::Ensemble => "ensemble",
            Self::Scan => "scan",
            Self::ValidateHawkes => "validate-hawkes",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match Self::ALL.into_iter().find(|c| c.name() == name) {
            Some(c) => Ok(c),
            None => bail!("unknown subcommand `{name}`"),
        }
    }
}

/// Console report, files written, and paths that failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
    pub failed_paths: usize,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn create<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(command: Command, config: &RunConfig, notes: &[String]) -> Result<Outcome> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let mut writer = Writer { dir, files: Vec::new() };

    writer.create("manifest.toml", |w| {
        writeln!(w, "# hawkes-epi {} {}", env!("CARGO_PKG_VERSION"), command.name())?;
        w.write_all(serialize_experiment(config).as_bytes())
    })?;
    writer.create("provenance.log", |w| {
        for n in notes {
            writeln!(w, "{n}")?;
        }
        Ok(())
    })?;

    let mut outcome = match command {
        Command::R0 => r0(config)?,
        Command::Thresholds => thresholds(config)?,
        Command::Simulate => simulate(config, &mut writer)?,
        Command::Ensemble => ensemble(config, &mut writer)?,
        Command::Scan => scan(config, &mut writer)?,
        Command::ValidateHawkes => validate_hawkes(config, &mut writer)?,
    };
    outcome.files = writer.files;
    Ok(outcome)
}

/// Provenance lines for keys that took baseline values.
pub fn provenance_notes(defaulted: &[Defaulted]) -> Vec<String> {
    defaulted.iter().map(ToString::to_string).collect()
}

fn r0(config: &RunConfig) -> Result<Outcome> {
    let b = r0_breakdown(&config.params)?;
    let mut s = String::new();
    writeln!(s, "R0 numerator summands:")?;
    writeln!(s, "  (1-p)(eta1+eta2)            = {}", output::num(b.contact))?;
    writeln!(s, "  eta3                        = {}", output::num(b.rodent))?;
    writeln!(s, "  lambda0_2 G_2/(1-a2/b2)     = {}", output::num(b.jump_infected))?;
    writeln!(s, "  lambda0_3 G_3/(1-a3/b3)     = {}", output::num(b.jump_quarantined))?;
    writeln!(s, "removal min(mu)+min(delta)    = {}", output::num(b.removal))?;
    writeln!(s, "R0 = {}", output::num(b.r0))?;
    writeln!(s, "extinction exponent = {} per day", output::num(b.removal * (b.r0 - 1.0)))?;
    Ok(Outcome {
        report: s,
        ..Outcome::default()
    })
}

fn thresholds(config: &RunConfig) -> Result<Outcome> {
    let r = threshold_report(&config.params, &config.bounds)?;
    let opt = |v: Option<f64>| v.map_or_else(|| "absent".to_string(), output::num);
    let mut s = r0(config)?.report;
    writeln!(s, "rodent a = {}", output::num(r.rodent.a))?;
    writeln!(s, "rodent bound (N_r_floor/eta3) a = {}", opt(r.rodent.bound))?;
    writeln!(s, "human eps_h = {}", output::num(r.human.eps_h))?;
    writeln!(s, "human L_2 = {}", output::num(r.human.l2))?;
    writeln!(s, "human lambda_h = {}", output::num(r.human.lambda_h))?;
    writeln!(s, "human lambda0_h = {}", output::num(r.human.lambda0_h))?;
    writeln!(s, "human bound lambda_h/lambda0_h = {}", opt(r.human.bound))?;
    let c = r.classification;
    writeln!(
        s,
        "classification: extinction_predicted={} rodent_persistent={} human_persistent={} indeterminate={}",
        c.extinction_predicted, c.rodent_persistent, c.human_persistent, c.indeterminate
    )?;
    let b = &config.bounds;
    writeln!(
        s,
        "assumed structural bounds (user inputs, not estimated): M={} K*={} N_r_floor={} N_h_floor={}",
        b.m, b.k_star, b.n_r_floor, b.n_h_floor
    )?;
    Ok(Outcome {
        report: s,
        ..Outcome::default()
    })
}

fn simulate(config: &RunConfig, writer: &mut Writer<'_>) -> Result<Outcome> {
    let path = simulate_path(&config.params, &config.sim, 0)?;
    writer.create("path_0000.csv", |w| output::write_path(w, &path))?;
    for (i, log) in path.events.iter().enumerate() {
        writer.create(&format!("events_ch{}.csv", i + 1), |w| output::write_events(w, std::iter::once(log)))?;
    }
    let mean = mean_path(std::slice::from_ref(&path), &config.sim.regular_grid());
    writer.create("mean_path.csv", |w| output::write_mean(w, &mean))?;
    let events: usize = path.events.iter().map(|l| l.len()).sum();
    Ok(Outcome {
        report: format!(
            "simulated 1 path: {} steps, {} jump events, {} clamp activations\n",
            path.steps(),
            events,
            path.clamp_count
        ),
        ..Outcome::default()
    })
}

fn ensemble(config: &RunConfig, writer: &mut Writer<'_>) -> Result<Outcome> {
    let ens = simulate_ensemble(&config.params, &config.sim)?;
    for p in &ens.paths {
        writer.create(&format!("path_{:04}.csv", p.path_index), |w| output::write_path(w, p))?;
    }
    for i in 0..4 {
        writer.create(&format!("events_ch{}.csv", i + 1), |w| {
            output::write_events(w, ens.paths.iter().map(|p| &p.events[i]))
        })?;
    }
    writer.create("mean_path.csv", |w| output::write_mean(w, &ens.mean))?;
    let mut report = format!(
        "simulated {} paths: {} steps, {} clamp activations\n",
        ens.paths.len(),
        ens.total_steps(),
        ens.total_clamps()
    );
    if !ens.failures.is_empty() {
        writer.create("failures.log", |w| {
            for e in &ens.failures {
                writeln!(w, "{e}")?;
            }
            Ok(())
        })?;
        for e in &ens.failures {
            writeln!(report, "path failed: {e}")?;
        }
    }
    Ok(Outcome {
        report,
        failed_paths: ens.failures.len(),
        ..Outcome::default()
    })
}

fn scan(config: &RunConfig, writer: &mut Writer<'_>) -> Result<Outcome> {
    let (x, y) = config.scan.axes()?;
    let grid = scan_r0(&config.params, &x, &y)?;
    writer.create("scan_grid.csv", |w| output::write_grid(w, &grid))?;
    writer.create("scan_contour.csv", |w| output::write_contour(w, &grid))?;
    let z = grid.z.iter().flatten();
    let (lo, hi) = z.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(Outcome {
        report: format!(
            "scanned R0 over {} x {} ({}x{}): min {}, max {}, {} contour points at R0 = 1\n",
            x.param,
            y.param,
            x.values.len(),
            y.values.len(),
            output::num(lo),
            output::num(hi),
            grid.contour.len()
        ),
        ..Outcome::default()
    })
}

fn validate_hawkes(config: &RunConfig, writer: &mut Writer<'_>) -> Result<Outcome> {
    let v = &config.validation;
    let ch = config.params.channel(v.channel);
    let seed = config.sim.master_seed;
    let mut s = format!(
        "channel {}: lambda0={} alpha={} beta={} stationary mean {}\n",
        v.channel,
        ch.lambda0(),
        ch.alpha(),
        ch.beta(),
        output::num(ch.stationary_intensity())
    );

    let moments = hawkes_moment_check(ch, &[1.0, 5.0, 20.0], &[10.0, 50.0], v.moment_paths, seed)?;
    for m in &moments {
        writeln!(
            s,
            "{} at t={}: closed form {}, Monte Carlo {} +/- {} (z = {:.3})",
            m.kind,
            m.t,
            output::num(m.closed_form),
            output::num(m.mc_mean),
            output::num(m.std_error),
            m.z_score()
        )?;
    }
    let lln = hawkes_lln_check(ch, v.lln_horizon, v.lln_paths, seed)?;
    writeln!(
        s,
        "Lambda(T)/T at T={}: {} +/- {} vs limit {} (relative deviation {:.3e})",
        v.lln_horizon,
        output::num(lln.mean),
        output::num(lln.std_error),
        output::num(lln.limit),
        lln.relative_deviation
    )?;
    let mut gaps = Vec::new();
    for i in 0..v.ks_paths as u64 {
        let log = ch.simulate(v.channel, v.ks_horizon, &mut stream_rng(seed, i, v.channel as u64))?;
        gaps.extend(ch.rescaled_gaps(&log));
    }
    if gaps.is_empty() {
        writeln!(s, "time-rescaling KS: no events simulated")?;
    } else {
        let ks = ks_test_exp1(&gaps)?;
        writeln!(s, "time-rescaling KS on {} gaps: D = {:.6}, p = {:.4}", ks.n, ks.statistic, ks.p_value)?;
    }

    writer.create("hawkes_validation.csv", |w| {
        writeln!(w, "check,t,closed_form,estimate,std_error")?;
        for m in &moments {
            let kind = match m.kind {
                hawkes_epi::analysis::MomentKind::Intensity => "intensity",
                hawkes_epi::analysis::MomentKind::Count => "count",
            };
            writeln!(
                w,
                "{kind},{},{},{},{}",
                output::num(m.t),
                output::num(m.closed_form),
                output::num(m.mc_mean),
                output::num(m.std_error)
            )?;
        }
        writeln!(
            w,
            "lln,{},{},{},{}",
            output::num(lln.horizon),
            output::num(lln.limit),
            output::num(lln.mean),
            output::num(lln.std_error)
        )
    })?;
    Ok(Outcome {
        report: s,
        ..Outcome::default()
    })
}
