//! Run configuration and the named presets.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use super::kv::KvDoc;
use super::CliError;
use crate::model::{normalize, PhysicalParams, PulseShape, PulseSpec, ResolutionPolicy, SimParams};
use crate::solver::{AngleGuard, ReadoutMode, ReadoutOptions};
use crate::C64;

/// |g|²NLΔt shared by the presets.
pub const PRESET_COUPLING: f64 = 13.78;
/// Stage duration used by the presets, seconds.
pub const PRESET_WINDOW: f64 = 1e-6;
/// Medium length used by the presets, meters.
pub const PRESET_LENGTH: f64 = 1e-3;

/// Name and one-line description of every preset.
pub const PRESETS: &[(&str, &str)] = &[
    ("fig2b", "Gaussian input, beta L dt = 2 pi sqrt(2 ln2)"),
    ("fig2c", "Gaussian input, beta L dt = 4 pi sqrt(2 ln2)"),
    ("fig2d", "Gaussian input, beta L dt = 8 pi sqrt(2 ln2)"),
    (
        "fig2f",
        "double-Gaussian input, beta L dt = 4 pi sqrt(2 ln2)",
    ),
];

/// Preset signal FWHM as a fraction of the stage duration.
pub fn preset_fwhm_fraction() -> f64 {
    (2.0 * LN_2).sqrt() / 15.0
}

fn preset_multiple(name: &str) -> Option<f64> {
    match name {
        "fig2b" => Some(2.0),
        "fig2c" | "fig2f" => Some(4.0),
        "fig2d" => Some(8.0),
        _ => None,
    }
}

/// Physical parameters and pulse of a named preset.
pub fn preset(name: &str) -> Option<(PhysicalParams, PulseSpec)> {
    let m = preset_multiple(name)?;
    let dt = preset_fwhm_fraction() * PRESET_WINDOW;
    let ldt = PRESET_LENGTH * dt;
    let physical = PhysicalParams {
        coupling_density: PRESET_COUPLING / ldt,
        medium_length: PRESET_LENGTH,
        storage_window: PRESET_WINDOW,
        signal_fwhm: dt,
        chirp_gradient: m * PI * (2.0 * LN_2).sqrt() / ldt,
        spin_decay: 0.0,
        two_photon_detuning: 0.0,
        beam_angle: FRAC_PI_2,
        transverse_radius: 0.2 * PRESET_LENGTH,
    };
    let fwhm = preset_fwhm_fraction();
    let pulse = if name == "fig2f" {
        PulseSpec::double_gaussian(-0.5, fwhm)
    } else {
        PulseSpec::gaussian(-0.5, fwhm)
    };
    Some((physical, pulse))
}

/// Partial grid choice; unset counts fall back to the automatic rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridChoice {
    pub n_z: Option<usize>,
    pub n_tau: Option<usize>,
    pub n_x: Option<usize>,
}

impl GridChoice {
    pub fn policy(&self, auto: &SimParams) -> ResolutionPolicy {
        if *self == GridChoice::default() {
            return ResolutionPolicy::Auto;
        }
        ResolutionPolicy::Explicit {
            n_z: self.n_z.unwrap_or(auto.n_z),
            n_tau: self.n_tau.unwrap_or(auto.n_tau),
            n_x: self.n_x.unwrap_or(auto.n_x),
        }
    }
}

/// Dimensionless values forced after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOverrides {
    pub kappa: Option<f64>,
    pub chirp: Option<f64>,
    pub gamma_n: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outputs {
    pub fields: bool,
    pub spin: bool,
    pub summary: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            fields: true,
            spin: true,
            summary: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Preset the physical parameters came from, if any.
    pub preset: Option<String>,
    pub physical: PhysicalParams,
    pub pulse: PulseSpec,
    pub readout: ReadoutOptions,
    pub grid: GridChoice,
    pub overrides: SimOverrides,
    pub angle_guard: AngleGuard,
    pub outputs: Outputs,
}

impl RunConfig {
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let (physical, pulse) = preset(name).ok_or_else(|| unknown_preset(name))?;
        Ok(RunConfig {
            preset: Some(name.to_string()),
            physical,
            pulse,
            readout: ReadoutOptions::default(),
            grid: GridChoice::default(),
            overrides: SimOverrides::default(),
            angle_guard: AngleGuard::default(),
            outputs: Outputs::default(),
        })
    }

    /// Builds a configuration from a key-value document. Every key must be
    /// recognised.
    pub fn from_doc(mut doc: KvDoc) -> Result<Self, CliError> {
        let preset_name = doc.str("preset");
        let physical = match &preset_name {
            Some(name) => {
                if doc.has_section("physical") {
                    return Err(CliError::Config {
                        file: doc.source().to_string(),
                        line: doc.line_of("preset"),
                        message: "a preset cannot be combined with physical.* keys".into(),
                    });
                }
                preset(name).ok_or_else(|| unknown_preset(name))?.0
            }
            None => read_physical(&mut doc)?,
        };
        let default_pulse = match &preset_name {
            Some(name) => preset(name).expect("checked above").1,
            None => PulseSpec::gaussian(-0.5, physical.signal_fwhm / physical.storage_window),
        };
        let pulse = read_pulse(&mut doc, default_pulse)?;

        let mode = match doc.str("readout.mode").as_deref() {
            None | Some("forward") => ReadoutMode::Forward,
            Some("backward") => ReadoutMode::Backward,
            Some(other) => {
                return Err(bad_value(
                    &doc,
                    "readout.mode",
                    other,
                    "forward or backward",
                ))
            }
        };
        let readout = ReadoutOptions {
            mode,
            time_shift: doc.get("readout.time_shift")?.unwrap_or(0.0),
        };

        let grid = GridChoice {
            n_z: doc.get("resolution.n_z")?,
            n_tau: doc.get("resolution.n_tau")?,
            n_x: doc.get("resolution.n_x")?,
        };
        let overrides = SimOverrides {
            kappa: doc.get("override.kappa")?,
            chirp: doc.get("override.chirp")?,
            gamma_n: doc.get("override.gamma_n")?,
        };
        let angle_guard = match doc.str("solver.angle_guard").as_deref() {
            None | Some("reject") => AngleGuard::Reject,
            Some("force") => AngleGuard::Force,
            Some(other) => {
                return Err(bad_value(
                    &doc,
                    "solver.angle_guard",
                    other,
                    "reject or force",
                ))
            }
        };
        let outputs = Outputs {
            fields: doc.flag("outputs.fields", true)?,
            spin: doc.flag("outputs.spin", true)?,
            summary: doc.flag("outputs.summary", true)?,
        };
        doc.finish()?;
        Ok(RunConfig {
            preset: preset_name,
            physical,
            pulse,
            readout,
            grid,
            overrides,
            angle_guard,
            outputs,
        })
    }

    /// Dimensionless parameters after grid choice and overrides.
    pub fn sim_params(&self) -> Result<SimParams, CliError> {
        let auto = normalize(&self.physical, ResolutionPolicy::Auto)?;
        let mut sim = normalize(&self.physical, self.grid.policy(&auto))?;
        if let Some(k) = self.overrides.kappa {
            sim.kappa = k;
        }
        if let Some(b) = self.overrides.chirp {
            sim.chirp = b;
        }
        if let Some(g) = self.overrides.gamma_n {
            sim.gamma_n = g;
        }
        sim.validate()?;
        self.readout
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(sim)
    }
}

fn unknown_preset(name: &str) -> CliError {
    let names: Vec<&str> = PRESETS.iter().map(|p| p.0).collect();
    CliError::Usage(format!(
        "unknown preset `{name}` (known: {})",
        names.join(", ")
    ))
}

fn bad_value(doc: &KvDoc, key: &str, got: &str, expected: &str) -> CliError {
    CliError::Config {
        file: doc.source().to_string(),
        line: doc.line_of(key),
        message: format!("`{key}`: expected {expected}, got `{got}`"),
    }
}

fn read_physical(doc: &mut KvDoc) -> Result<PhysicalParams, CliError> {
    let beam_angle = doc.get("physical.beam_angle")?.unwrap_or(FRAC_PI_2);
    let medium_length: f64 = doc.require("physical.medium_length")?;
    Ok(PhysicalParams {
        coupling_density: doc.require("physical.coupling_density")?,
        medium_length,
        storage_window: doc.require("physical.storage_window")?,
        signal_fwhm: doc.require("physical.signal_fwhm")?,
        chirp_gradient: doc.require("physical.chirp_gradient")?,
        spin_decay: doc.get("physical.spin_decay")?.unwrap_or(0.0),
        two_photon_detuning: doc.get("physical.two_photon_detuning")?.unwrap_or(0.0),
        beam_angle,
        transverse_radius: doc
            .get("physical.transverse_radius")?
            .unwrap_or(0.2 * medium_length),
    })
}

fn read_pulse(doc: &mut KvDoc, default: PulseSpec) -> Result<PulseSpec, CliError> {
    let center = doc.get("pulse.center")?.unwrap_or(default.center);
    let fwhm = doc.get("pulse.fwhm")?.unwrap_or(default.fwhm);
    let default_pair = match &default.shape {
        PulseShape::DoubleGaussian {
            peak_separation,
            relative_amplitudes,
        } => (*peak_separation, *relative_amplitudes),
        _ => (3.0, (1.0, 1.0)),
    };
    let shape_name = doc.str("pulse.shape");
    let shape = match shape_name.as_deref() {
        None => default.shape.clone(),
        Some("gaussian") => PulseShape::Gaussian,
        Some("double_gaussian") => PulseShape::DoubleGaussian {
            peak_separation: default_pair.0,
            relative_amplitudes: default_pair.1,
        },
        Some("tabulated") => PulseShape::Tabulated(Vec::new()),
        Some(other) => {
            return Err(bad_value(
                doc,
                "pulse.shape",
                other,
                "gaussian, double_gaussian or tabulated",
            ))
        }
    };
    let shape = match shape {
        PulseShape::DoubleGaussian {
            peak_separation,
            relative_amplitudes,
        } => {
            let sep = doc.get("pulse.peak_separation")?.unwrap_or(peak_separation);
            let amps = match doc.list("pulse.relative_amplitudes")? {
                None => relative_amplitudes,
                Some(v) if v.len() == 2 => (v[0], v[1]),
                Some(_) => {
                    return Err(bad_value(
                        doc,
                        "pulse.relative_amplitudes",
                        "list",
                        "two numbers",
                    ))
                }
            };
            PulseShape::DoubleGaussian {
                peak_separation: sep,
                relative_amplitudes: amps,
            }
        }
        PulseShape::Tabulated(_) => {
            let raw = doc.list("pulse.samples")?.unwrap_or_default();
            if raw.len() % 2 != 0 {
                return Err(bad_value(doc, "pulse.samples", "odd count", "re, im pairs"));
            }
            PulseShape::Tabulated(raw.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
        }
        s => s,
    };
    let spec = PulseSpec {
        shape,
        center,
        fwhm,
    };
    spec.validate()?;
    Ok(spec)
}
