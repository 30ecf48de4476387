//! Single runs, sweeps and their file outputs.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::RunConfig;
use super::{fmt_num, CliError, Summary};
use crate::metrics::{amplitude_correlation, fidelity, ShiftSearch};
use crate::model::{synthesize_pulse, FieldRecord, SimParams, SpinMap};
use crate::solver::{
    longitudinal_coverage, run_memory, run_non_transverse, MemoryRun, ReadoutMode,
};

/// Figures of merit of one storage and retrieval run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioMetrics {
    pub eta: f64,
    pub f_prime: f64,
    pub f: f64,
    pub best_shift: f64,
    pub f_prime_nominal: f64,
    pub amplitude_correlation: f64,
    pub d_eff: f64,
    pub n_in: f64,
    pub n_leak: f64,
    pub n_spin: f64,
    pub n_out: f64,
    pub storage_residual: f64,
    pub retrieval_residual: f64,
    /// Time of the largest |a| in the retrieved field.
    pub output_peak: f64,
    /// b·sinθ·Δt/2π for the input envelope.
    pub coverage: f64,
    pub pulse_warnings: usize,
}

pub struct Scenario {
    pub config: RunConfig,
    pub sim: SimParams,
    pub input: FieldRecord,
    pub run: MemoryRun,
    pub metrics: ScenarioMetrics,
}

/// Runs storage then retrieval for `config` without touching the disk.
pub fn simulate(config: &RunConfig) -> Result<Scenario, CliError> {
    let sim = config.sim_params()?;
    let pulse = synthesize_pulse(&config.pulse, sim.n_tau, (-1.0, 0.0))?;
    for w in &pulse.warnings {
        log::warn!("{w}");
    }
    let input = pulse.record;
    let run = if sim.is_transverse() {
        run_memory(&input, &sim, &config.readout)?
    } else {
        run_non_transverse(&input, &sim, &config.readout, config.angle_guard)?
    };
    let output = run.output();
    let h = sim.tau_step();
    // the echo is the input mirrored about t̄ = t′, on the correlation grid
    let origin = input.grid_start + output.grid_start;
    let nominal = origin + ((config.readout.time_shift - origin) / h).round() * h;
    let (f_prime, best_shift, f_prime_nominal, amp) =
        match fidelity(&input, output, ShiftSearch::Grid) {
            Ok(best) => {
                let nom = fidelity(&input, output, ShiftSearch::Nominal(nominal))
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
                let amp = amplitude_correlation(&input, output)
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
                (best.f_prime, best.best_shift, nom.f_prime, amp)
            }
            // nothing came out
            Err(_) => (0.0, nominal, 0.0, 0.0),
        };
    let eta = run.efficiency();
    let st = &run.storage.diagnostics;
    let metrics = ScenarioMetrics {
        eta,
        f_prime,
        f: eta * f_prime,
        best_shift,
        f_prime_nominal,
        amplitude_correlation: amp,
        d_eff: sim.effective_depth(),
        n_in: st.input_norm(),
        n_leak: st.transmitted_norm(),
        n_spin: st.final_spin_norm(),
        n_out: run.retrieval.output_photons(),
        storage_residual: st.residual(),
        retrieval_residual: run.retrieval.diagnostics.residual(),
        output_peak: output.peak_time().unwrap_or(f64::NAN),
        coverage: longitudinal_coverage(&input, &sim).unwrap_or(0.0),
        pulse_warnings: pulse.warnings.len(),
    };
    Ok(Scenario {
        config: config.clone(),
        sim,
        input,
        run,
        metrics,
    })
}

/// Runs `config` and writes the requested CSV files and `summary.txt` into
/// `out_dir`.
pub fn run_scenario(config: &RunConfig, out_dir: &Path) -> Result<ScenarioMetrics, CliError> {
    let sc = simulate(config)?;
    fs::create_dir_all(out_dir)?;
    if config.outputs.fields {
        write_field(&out_dir.join("input.csv"), &sc.input)?;
        write_field(&out_dir.join("leak.csv"), &sc.run.storage.boundary_out)?;
        write_field(&out_dir.join("output.csv"), sc.run.output())?;
    }
    if config.outputs.spin {
        write_spin(&out_dir.join("spin.csv"), &sc.run.storage.spin_final)?;
    }
    if config.outputs.summary {
        fs::write(out_dir.join("summary.txt"), scenario_summary(&sc).render())?;
    }
    Ok(sc.metrics)
}

pub fn scenario_summary(sc: &Scenario) -> Summary {
    let m = &sc.metrics;
    let mut s = Summary::default();
    s.num("eta", m.eta);
    s.num("f_prime", m.f_prime);
    s.num("f", m.f);
    s.num("best_shift", m.best_shift);
    s.num("f_prime_nominal", m.f_prime_nominal);
    s.num("amplitude_correlation", m.amplitude_correlation);
    s.num("d_eff", m.d_eff);
    s.num("n_in", m.n_in);
    s.num("n_leak", m.n_leak);
    s.num("n_spin", m.n_spin);
    s.num("n_out", m.n_out);
    s.num("storage_residual", m.storage_residual);
    s.num("retrieval_residual", m.retrieval_residual);
    s.num("output_peak", m.output_peak);
    s.num("longitudinal_coverage", m.coverage);
    s.int("pulse_warnings", m.pulse_warnings);
    echo_config(&mut s, &sc.config, &sc.sim);
    s
}

/// Appends every resolved input parameter.
pub fn echo_config(s: &mut Summary, cfg: &RunConfig, sim: &SimParams) {
    s.text("preset", cfg.preset.as_deref().unwrap_or("none"));
    let p = &cfg.physical;
    s.num("physical.coupling_density", p.coupling_density);
    s.num("physical.medium_length", p.medium_length);
    s.num("physical.storage_window", p.storage_window);
    s.num("physical.signal_fwhm", p.signal_fwhm);
    s.num("physical.chirp_gradient", p.chirp_gradient);
    s.num("physical.spin_decay", p.spin_decay);
    s.num("physical.two_photon_detuning", p.two_photon_detuning);
    s.num("physical.beam_angle", p.beam_angle);
    s.num("physical.transverse_radius", p.transverse_radius);
    s.num("pulse.center", cfg.pulse.center);
    s.num("pulse.fwhm", cfg.pulse.fwhm);
    match &cfg.pulse.shape {
        crate::model::PulseShape::Gaussian => s.text("pulse.shape", "gaussian"),
        crate::model::PulseShape::DoubleGaussian {
            peak_separation,
            relative_amplitudes,
        } => {
            s.text("pulse.shape", "double_gaussian");
            s.num("pulse.peak_separation", *peak_separation);
            s.text(
                "pulse.relative_amplitudes",
                &format!(
                    "{}, {}",
                    fmt_num(relative_amplitudes.0),
                    fmt_num(relative_amplitudes.1)
                ),
            );
        }
        crate::model::PulseShape::Tabulated(v) => {
            s.text("pulse.shape", "tabulated");
            s.int("pulse.sample_count", v.len());
        }
    }
    s.text(
        "readout.mode",
        match cfg.readout.mode {
            ReadoutMode::Forward => "forward",
            ReadoutMode::Backward => "backward",
        },
    );
    s.num("readout.time_shift", cfg.readout.time_shift);
    s.num("sim.kappa", sim.kappa);
    s.num("sim.chirp", sim.chirp);
    s.num("sim.gamma_n", sim.gamma_n);
    s.num("sim.delta0_n", sim.delta0_n);
    s.num("sim.theta", sim.theta);
    s.num("sim.aspect", sim.aspect);
    s.int("sim.n_z", sim.n_z);
    s.int("sim.n_tau", sim.n_tau);
    s.int("sim.n_x", sim.n_x);
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

pub fn write_field(path: &Path, field: &FieldRecord) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    w.write_record(["tau", "re_a", "im_a", "abs_a", "phase"])?;
    for (t, a) in field.times().zip(&field.values) {
        w.write_record([t, a.re, a.im, a.norm(), a.arg()].map(fmt_num))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spin(path: &Path, spin: &SpinMap) -> Result<(), CliError> {
    let mut w = csv_writer(path)?;
    let with_x = spin.n_x() > 1;
    if with_x {
        w.write_record(["z", "x", "re_s", "im_s", "abs_s"])?;
    } else {
        w.write_record(["z", "re_s", "im_s", "abs_s"])?;
    }
    for (ix, slice) in spin.slices().enumerate() {
        for (&z, s) in spin.z_grid.iter().zip(slice) {
            if with_x {
                w.write_record([z, spin.x_grid[ix], s.re, s.im, s.norm()].map(fmt_num))?;
            } else {
                w.write_record([z, s.re, s.im, s.norm()].map(fmt_num))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// βLΔt.
    Chirp,
    /// |g|²NLΔt.
    Coupling,
    /// θ in radians.
    Angle,
    /// t′ in units of T.
    TimeShift,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "chirp" => Ok(SweepAxis::Chirp),
            "coupling" => Ok(SweepAxis::Coupling),
            "angle" => Ok(SweepAxis::Angle),
            "time_shift" => Ok(SweepAxis::TimeShift),
            other => Err(CliError::Usage(format!(
                "unknown sweep axis `{other}` (chirp, coupling, angle, time_shift)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Chirp => "chirp",
            SweepAxis::Coupling => "coupling",
            SweepAxis::Angle => "angle",
            SweepAxis::TimeShift => "time_shift",
        }
    }

    fn apply(self, base: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = base.clone();
        let ldt = cfg.physical.medium_length * cfg.physical.signal_fwhm;
        match self {
            SweepAxis::Chirp => cfg.physical.chirp_gradient = value / ldt,
            SweepAxis::Coupling => cfg.physical.coupling_density = value / ldt,
            SweepAxis::Angle => cfg.physical.beam_angle = value,
            SweepAxis::TimeShift => cfg.readout.time_shift = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Spacing {
    #[default]
    Linear,
    /// Geometric progression; both ends must share a sign.
    Log,
}

impl Spacing {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "linear" => Ok(Spacing::Linear),
            "log" => Ok(Spacing::Log),
            other => Err(CliError::Usage(format!(
                "unknown spacing `{other}` (linear, log)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl SweepSpec {
    /// Swept values in increasing order.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 {
            return Err(CliError::Usage("a sweep needs at least 2 points".into()));
        }
        if !(self.from.is_finite() && self.to.is_finite()) || self.from == self.to {
            return Err(CliError::Usage("sweep range is empty".into()));
        }
        let (lo, hi) = if self.from < self.to {
            (self.from, self.to)
        } else {
            (self.to, self.from)
        };
        let n = self.points - 1;
        let at = |k: usize| -> f64 {
            let f = k as f64 / n as f64;
            match self.spacing {
                Spacing::Linear => lo + (hi - lo) * f,
                Spacing::Log => lo * (hi / lo).powf(f),
            }
        };
        if self.spacing == Spacing::Log && lo * hi <= 0.0 {
            return Err(CliError::Usage(
                "log spacing needs both ends nonzero and of one sign".into(),
            ));
        }
        Ok((0..=n)
            .map(|k| {
                if k == 0 {
                    lo
                } else if k == n {
                    hi
                } else {
                    at(k)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: ScenarioMetrics,
    pub n_z: usize,
    pub n_tau: usize,
    pub n_x: usize,
    /// Output peak relative to the unshifted readout; time-shift sweeps only.
    pub peak_displacement: Option<f64>,
}

/// Runs every sweep point and returns rows sorted by the swept value.
pub fn sweep(base: &RunConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, CliError> {
    let values = spec.values()?;
    let reference_peak = match spec.axis {
        SweepAxis::TimeShift => Some(
            simulate(&SweepAxis::TimeShift.apply(base, 0.0))?
                .metrics
                .output_peak,
        ),
        _ => None,
    };
    let rows: Vec<Result<SweepRow, CliError>> = values
        .par_iter()
        .map(|&v| {
            let sc = simulate(&spec.axis.apply(base, v))?;
            Ok(SweepRow {
                value: v,
                peak_displacement: reference_peak.map(|p| sc.metrics.output_peak - p),
                n_z: sc.sim.n_z,
                n_tau: sc.sim.n_tau,
                n_x: sc.sim.n_x,
                metrics: sc.metrics,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// Writes `sweep.csv` with one row per point.
pub fn run_sweep(
    base: &RunConfig,
    spec: &SweepSpec,
    out_dir: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let rows = sweep(base, spec)?;
    fs::create_dir_all(out_dir)?;
    let mut w = csv_writer(&out_dir.join("sweep.csv"))?;
    let mut header = vec![
        spec.axis.name(),
        "eta",
        "f_prime",
        "f",
        "best_shift",
        "amplitude_correlation",
        "d_eff",
        "storage_residual",
        "retrieval_residual",
        "output_peak",
    ];
    if spec.axis == SweepAxis::TimeShift {
        header.push("peak_displacement");
    }
    header.extend(["n_z", "n_tau", "n_x"]);
    w.write_record(&header)?;
    for r in &rows {
        let m = &r.metrics;
        let mut rec: Vec<String> = [
            r.value,
            m.eta,
            m.f_prime,
            m.f,
            m.best_shift,
            m.amplitude_correlation,
            m.d_eff,
            m.storage_residual,
            m.retrieval_residual,
            m.output_peak,
        ]
        .iter()
        .map(|&v| fmt_num(v))
        .collect();
        if let Some(d) = r.peak_displacement {
            rec.push(fmt_num(d));
        }
        rec.extend([r.n_z, r.n_tau, r.n_x].map(|n| n.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut s = Summary::default();
    s.text("sweep.axis", spec.axis.name());
    s.num("sweep.from", spec.from);
    s.num("sweep.to", spec.to);
    s.int("sweep.points", spec.points);
    s.text(
        "sweep.spacing",
        match spec.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        },
    );
    let sim = base.sim_params()?;
    echo_config(&mut s, base, &sim);
    fs::write(out_dir.join("summary.txt"), s.render())?;
    Ok(rows)
}

/// βLΔt values of the three Gaussian presets, in increasing order.
pub fn preset_chirp_products() -> [f64; 3] {
    let s = (2.0 * std::f64::consts::LN_2).sqrt();
    [2.0 * PI * s, 4.0 * PI * s, 8.0 * PI * s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::photon_number;

    #[test]
    fn sweep_values_are_sorted_and_validated() {
        let spec = SweepSpec {
            axis: SweepAxis::Angle,
            from: 1.5,
            to: 0.5,
            points: 3,
            spacing: Spacing::Linear,
        };
        assert_eq!(spec.values().unwrap(), vec![0.5, 1.0, 1.5]);
        let log = SweepSpec {
            from: 2.0,
            to: 8.0,
            spacing: Spacing::Log,
            ..spec.clone()
        };
        let v = log.values().unwrap();
        assert_eq!((v[0], v[2]), (2.0, 8.0));
        assert!((v[1] - 4.0).abs() < 1e-12);
        assert!(SweepSpec { from: -1.0, ..log }.values().is_err());
        let one = SweepSpec {
            points: 1,
            ..spec.clone()
        };
        assert!(matches!(one.values(), Err(CliError::Usage(_))));
        let empty = SweepSpec {
            from: 1.0,
            to: 1.0,
            ..spec
        };
        assert!(matches!(empty.values(), Err(CliError::Usage(_))));
        assert!(SweepAxis::parse("nope").is_err());
    }

    #[test]
    fn zero_coupling_override_gives_zero_efficiency() {
        let mut cfg = RunConfig::from_preset("fig2c").unwrap();
        cfg.overrides.kappa = Some(0.0);
        let sc = simulate(&cfg).unwrap();
        assert_eq!(sc.metrics.eta, 0.0);
        assert_eq!(sc.metrics.f_prime, 0.0);
        assert!(sc.metrics.storage_residual < 1e-9);
        assert!(sc.metrics.retrieval_residual < 1e-9);
        assert!((photon_number(&sc.input) - 1.0).abs() < 1e-12);
    }
}
