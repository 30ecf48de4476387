//! Design documents: a key-value file in, a flat report out.

use super::kv::KvDoc;
use super::{CliError, Summary};
use crate::designer::{
    design, Bandwidth, BeamSource, DesignInputs, DesignReport, NoiseInputs, RamanInputs,
};

pub fn design_inputs(mut doc: KvDoc) -> Result<DesignInputs, CliError> {
    let source = doc.str("beam.source").ok_or_else(|| CliError::Config {
        file: doc.source().to_string(),
        line: 0,
        message: "missing required key `beam.source`".into(),
    })?;
    let beam = match source.as_str() {
        "grating" => BeamSource::Grating {
            center_wavelength: doc.require("grating.center_wavelength")?,
            focal_length: doc.require("grating.focal_length")?,
            angular_dispersion: doc.require("grating.angular_dispersion")?,
        },
        "dispersion" => BeamSource::Dispersion {
            zeta: doc.require("dispersion.zeta")?,
        },
        "reticle" => BeamSource::Reticle {
            pattern_wavenumber: doc.require("reticle.pattern_wavenumber")?,
            spin_rate: doc.require("reticle.spin_rate")?,
        },
        other => {
            return Err(CliError::Config {
                file: doc.source().to_string(),
                line: doc.line_of("beam.source"),
                message: format!(
                    "`beam.source`: expected grating, dispersion or reticle, got `{other}`"
                ),
            })
        }
    };
    let halfwidth: Option<f64> = doc.get("beam.spectral_halfwidth")?;
    let stretch: Option<f64> = doc.get("beam.stretch_factor")?;
    let bandwidth = match (halfwidth, stretch) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config {
                file: doc.source().to_string(),
                line: doc.line_of("beam.stretch_factor"),
                message: "give either beam.spectral_halfwidth or beam.stretch_factor, not both"
                    .into(),
            })
        }
        (Some(w), None) => Some(Bandwidth::HalfWidth(w)),
        (None, Some(k)) => Some(Bandwidth::StretchFactor(k)),
        (None, None) => None,
    };
    let component_spot = doc.get("beam.component_spot")?;
    let medium_length = doc.require("medium.length")?;
    let signal_fwhm = doc.require("medium.signal_fwhm")?;
    let coupling_density = doc.get("medium.coupling_density")?;
    let raman = if doc.has_section("raman") {
        Some(RamanInputs {
            rabi: doc.require("raman.rabi")?,
            detuning: doc.require("raman.detuning")?,
            z: doc.get("raman.z")?,
        })
    } else {
        None
    };
    let noise = if doc.has_section("noise") {
        Some(NoiseInputs {
            coupling_depth: doc.require("noise.coupling_depth")?,
            stage_duration: doc.require("noise.stage_duration")?,
            detuning: doc.require("noise.detuning")?,
            noise_detuning_offset: doc.require("noise.noise_detuning_offset")?,
            dipole_ratio_21: doc.get("noise.dipole_ratio_21")?.unwrap_or(1.0),
            dipole_ratio_32: doc.get("noise.dipole_ratio_32")?.unwrap_or(1.0),
        })
    } else {
        None
    };
    doc.finish()?;
    Ok(DesignInputs {
        beam,
        bandwidth,
        component_spot,
        medium_length,
        signal_fwhm,
        coupling_density,
        raman,
        noise,
    })
}

/// Evaluates a design document and renders the report.
pub fn run_design(doc: KvDoc) -> Result<(DesignReport, Summary), CliError> {
    let inputs = design_inputs(doc)?;
    let report = design(&inputs).map_err(|e| CliError::Design(e.to_string()))?;
    Ok((report.clone(), design_summary(&inputs, &report)))
}

pub fn design_summary(inputs: &DesignInputs, r: &DesignReport) -> Summary {
    let mut s = Summary::default();
    s.opt_num("spatial_dispersion", r.spatial_dispersion);
    s.opt_num("spectral_halfwidth", r.spectral_halfwidth);
    s.opt_num("seed_duration", r.seed_duration);
    s.opt_num("stretch_factor", r.stretch_factor);
    s.num("frequency_gradient", r.frequency_gradient);
    s.opt_bool("coverage.spatial_ok", r.spatial_ok);
    s.opt_bool("coverage.temporal_ok", r.temporal_ok);
    s.opt_bool("coverage.spectral_ok", Some(r.spectral_ok));
    s.opt_bool(
        "coverage.spectral_bandwidth_ok",
        Some(r.spectral_bandwidth_ok),
    );
    s.opt_num("raman_ratio", r.raman_ratio);
    s.opt_bool("raman_ok", r.raman_ok);
    s.opt_num("noise_photons", r.noise_photons);
    s.opt_num("max_detuning", r.max_detuning);
    s.opt_num("gem_depth", r.gem_depth);
    s.opt_bool("gem_window_ok", r.gem_window_ok);
    s.opt_num("theta_min", r.theta_min);

    match inputs.beam {
        BeamSource::Grating {
            center_wavelength,
            focal_length,
            angular_dispersion,
        } => {
            s.text("beam.source", "grating");
            s.num("grating.center_wavelength", center_wavelength);
            s.num("grating.focal_length", focal_length);
            s.num("grating.angular_dispersion", angular_dispersion);
        }
        BeamSource::Dispersion { zeta } => {
            s.text("beam.source", "dispersion");
            s.num("dispersion.zeta", zeta);
        }
        BeamSource::Reticle {
            pattern_wavenumber,
            spin_rate,
        } => {
            s.text("beam.source", "reticle");
            s.num("reticle.pattern_wavenumber", pattern_wavenumber);
            s.num("reticle.spin_rate", spin_rate);
        }
    }
    match inputs.bandwidth {
        Some(Bandwidth::HalfWidth(w)) => s.num("beam.spectral_halfwidth", w),
        Some(Bandwidth::StretchFactor(k)) => s.num("beam.stretch_factor", k),
        None => {}
    }
    s.opt_num("beam.component_spot", inputs.component_spot);
    s.num("medium.length", inputs.medium_length);
    s.num("medium.signal_fwhm", inputs.signal_fwhm);
    s.opt_num("medium.coupling_density", inputs.coupling_density);
    if let Some(r) = inputs.raman {
        s.num("raman.rabi", r.rabi);
        s.num("raman.detuning", r.detuning);
        s.num("raman.z", r.z.unwrap_or(0.5 * inputs.medium_length));
    }
    if let Some(n) = inputs.noise {
        s.num("noise.coupling_depth", n.coupling_depth);
        s.num("noise.stage_duration", n.stage_duration);
        s.num("noise.detuning", n.detuning);
        s.num("noise.noise_detuning_offset", n.noise_detuning_offset);
        s.num("noise.dipole_ratio_21", n.dipole_ratio_21);
        s.num("noise.dipole_ratio_32", n.dipole_ratio_32);
    }
    s
}
