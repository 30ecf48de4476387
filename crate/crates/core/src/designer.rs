//! Closed-form feasibility calculators for a spatially chirped control beam.
//!
//! Everything here is in SI units (seconds, meters, rad/s). The functions
//! are independent of the solver and cheap enough to call in loops.

use std::f64::consts::{LN_2, PI};

use thiserror::Error;

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Raman-shift ratios below this count as negligible.
pub const RAMAN_RATIO_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid input `{name}`: {reason}")]
    InvalidInput { name: &'static str, reason: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
}

fn require(ok: bool, name: &'static str, reason: &str) -> Result<(), DesignError> {
    if ok {
        Ok(())
    } else {
        Err(DesignError::InvalidInput {
            name,
            reason: reason.to_string(),
        })
    }
}

/// Spatial dispersion ζ (s·m) of a grating-lens pair with the grating in the
/// back focal plane: ζ = −λ²/(2πc)·f·dθ/dλ.
pub fn grating_dispersion(
    center_wavelength: f64,
    focal_length: f64,
    angular_dispersion: f64,
) -> f64 {
    -center_wavelength * center_wavelength / (2.0 * PI * SPEED_OF_LIGHT)
        * focal_length
        * angular_dispersion
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpBeam {
    /// Stretch factor κ = √(Δw² + ζ²Δω²)/Δw.
    pub stretch_factor: f64,
    /// Frequency gradient β = Δω²ζ/(κ²Δw²), rad/s per meter.
    pub frequency_gradient: f64,
}

/// Time-domain stretch and phase-front rotation rate of a dispersed Gaussian
/// control beam with spectral half-width `spectral_halfwidth` (rad/s) and
/// per-frequency spot `component_spot` (m).
pub fn chirp_beam(
    zeta: f64,
    spectral_halfwidth: f64,
    component_spot: f64,
) -> Result<ChirpBeam, DesignError> {
    require(zeta.is_finite(), "spatial_dispersion", "must be finite")?;
    require(
        spectral_halfwidth > 0.0 && spectral_halfwidth.is_finite(),
        "spectral_halfwidth",
        "must be > 0",
    )?;
    require(
        component_spot > 0.0 && component_spot.is_finite(),
        "component_spot",
        "must be > 0",
    )?;
    let dw2 = component_spot * component_spot;
    let disp = zeta * spectral_halfwidth;
    let kappa2 = (dw2 + disp * disp) / dw2;
    Ok(ChirpBeam {
        stretch_factor: kappa2.sqrt(),
        frequency_gradient: spectral_halfwidth * spectral_halfwidth * zeta / (kappa2 * dw2),
    })
}

/// Spectral half-width that produces the stretch factor `kappa`:
/// Δω = √(κ² − 1)·Δw/|ζ|.
pub fn spectral_halfwidth_for_stretch(
    kappa: f64,
    component_spot: f64,
    zeta: f64,
) -> Result<f64, DesignError> {
    require(
        kappa >= 1.0 && kappa.is_finite(),
        "stretch_factor",
        "must be >= 1",
    )?;
    require(component_spot > 0.0, "component_spot", "must be > 0")?;
    if zeta == 0.0 {
        return Err(DesignError::Infeasible(
            "no spectral width stretches a beam without dispersion".into(),
        ));
    }
    Ok((kappa * kappa - 1.0).sqrt() * component_spot / zeta.abs())
}

/// Reported seed-pulse duration 8ln2/Δω.
pub fn seed_duration(spectral_halfwidth: f64) -> f64 {
    8.0 * LN_2 / spectral_halfwidth
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    /// 2√ln2·κΔw > L.
    pub spatial_ok: bool,
    /// 4√ln2·κ/Δω > Δt.
    pub temporal_ok: bool,
    /// |β|L > 2π/Δt.
    pub spectral_ok: bool,
    /// |β|L > 8ln2/Δt, the signal bandwidth bound.
    pub spectral_bandwidth_ok: bool,
}

pub fn coverage_conditions(
    kappa: f64,
    component_spot: f64,
    spectral_halfwidth: f64,
    beta: f64,
    medium_length: f64,
    signal_fwhm: f64,
) -> Coverage {
    let s = LN_2.sqrt();
    let span = beta.abs() * medium_length;
    Coverage {
        spatial_ok: 2.0 * s * kappa * component_spot > medium_length,
        temporal_ok: 4.0 * s * kappa / spectral_halfwidth > signal_fwhm,
        spectral_ok: span > 2.0 * PI / signal_fwhm,
        spectral_bandwidth_ok: span > 8.0 * LN_2 / signal_fwhm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanCheck {
    pub ratio: f64,
    pub ok: bool,
}

/// Ratio of the control-induced Raman shift to the chirp |βz| at position
/// `z`: |Ω₀|²/|βΔ|·2|z|/(κ²Δw²).
pub fn raman_ratio(
    rabi: f64,
    detuning: f64,
    beta: f64,
    kappa: f64,
    component_spot: f64,
    z: f64,
) -> Result<RamanCheck, DesignError> {
    require(beta != 0.0, "frequency_gradient", "must be nonzero")?;
    require(detuning != 0.0, "detuning", "must be nonzero")?;
    require(
        kappa * component_spot > 0.0,
        "component_spot",
        "must be > 0",
    )?;
    let w = kappa * component_spot;
    let ratio = rabi * rabi / (beta * detuning).abs() * 2.0 * z.abs() / (w * w);
    Ok(RamanCheck {
        ratio,
        ok: ratio < RAMAN_RATIO_LIMIT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseInputs {
    /// |g|²NL, 1/s.
    pub coupling_depth: f64,
    /// Duration T of each stage, s.
    pub stage_duration: f64,
    /// One-photon detuning Δ of the working Λ scheme, rad/s.
    pub detuning: f64,
    /// Extra detuning of the noise channel, Δ′ = Δ + offset, rad/s.
    pub noise_detuning_offset: f64,
    pub dipole_ratio_21: f64,
    pub dipole_ratio_32: f64,
}

impl NoiseInputs {
    pub fn validate(&self) -> Result<(), DesignError> {
        let fields = [
            ("coupling_depth", self.coupling_depth),
            ("stage_duration", self.stage_duration),
            ("detuning", self.detuning),
            ("noise_detuning_offset", self.noise_detuning_offset),
            ("dipole_ratio_21", self.dipole_ratio_21),
            ("dipole_ratio_32", self.dipole_ratio_32),
        ];
        for (name, v) in fields {
            require(v.is_finite() && v > 0.0, name, "must be finite and > 0")?;
        }
        Ok(())
    }

    fn photons_at(&self, detuning: f64) -> f64 {
        let ratio = detuning / (detuning + self.noise_detuning_offset);
        2.0 * self.coupling_depth
            * self.stage_duration
            * ratio
            * ratio
            * self.dipole_ratio_21.powi(2)
            * self.dipole_ratio_32.powi(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBudget {
    /// Spontaneous Raman photons scattered into the signal mode over storage
    /// and retrieval.
    pub noise_photons: f64,
    /// Largest Δ keeping the count below one; infinite when no detuning
    /// reaches one photon.
    pub max_detuning: f64,
}

pub fn noise_budget(n: &NoiseInputs) -> Result<NoiseBudget, DesignError> {
    n.validate()?;
    let noise_photons = n.photons_at(n.detuning);
    // limit of the count as Δ grows without bound
    let ceiling = 2.0
        * n.coupling_depth
        * n.stage_duration
        * n.dipole_ratio_21.powi(2)
        * n.dipole_ratio_32.powi(2);
    if ceiling <= 1.0 {
        return Ok(NoiseBudget {
            noise_photons,
            max_detuning: f64::INFINITY,
        });
    }
    let mut lo = 0.0;
    let mut hi = n.noise_detuning_offset;
    while n.photons_at(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
    }
    // photons_at is increasing in Δ
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if n.photons_at(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(NoiseBudget {
        noise_photons,
        max_detuning: 0.5 * (lo + hi),
    })
}

/// Gradient β = 2π·f_spin·Δk of a spinning frequency-modulated reticle.
pub fn reticle_chirp(pattern_wavenumber: f64, spin_rate: f64) -> f64 {
    2.0 * PI * spin_rate * pattern_wavenumber
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GemWindow {
    /// d_eff = 2π|g|²NL/(|β|L).
    pub d_eff: f64,
    /// |β|LΔt/2π.
    pub coverage: f64,
    /// 1 ≤ |β|LΔt/2π < |g|²NLΔt.
    pub window_ok: bool,
}

pub fn gem_window(
    beta: f64,
    medium_length: f64,
    signal_fwhm: f64,
    coupling_depth: f64,
) -> GemWindow {
    let span = beta.abs() * medium_length;
    let coverage = span * signal_fwhm / (2.0 * PI);
    let d_eff = if span == 0.0 {
        f64::INFINITY
    } else {
        2.0 * PI * coupling_depth / span
    };
    // the lower edge is inclusive; allow for rounding when it is met exactly
    let window_ok = coverage >= 1.0 - 1e-9 && coverage < coupling_depth * signal_fwhm;
    GemWindow {
        d_eff,
        coverage,
        window_ok,
    }
}

/// Smallest control angle keeping the full signal spectrum inside the
/// longitudinal absorption window: arcsin(2π/(|β|LΔt)).
pub fn critical_angle(beta: f64, medium_length: f64, signal_fwhm: f64) -> Result<f64, DesignError> {
    let product = beta.abs() * medium_length * signal_fwhm;
    if product.is_nan() || product < 2.0 * PI {
        return Err(DesignError::Infeasible(format!(
            "|beta| L dt = {product:.4} < 2 pi, no angle covers the signal bandwidth"
        )));
    }
    Ok((2.0 * PI / product).min(1.0).asin())
}

/// How the control-beam chirp is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BeamSource {
    /// Grating-lens pair.
    Grating {
        center_wavelength: f64,
        focal_length: f64,
        angular_dispersion: f64,
    },
    /// Known spatial dispersion ζ.
    Dispersion { zeta: f64 },
    /// Spinning reticle; fixes β directly.
    Reticle {
        pattern_wavenumber: f64,
        spin_rate: f64,
    },
}

/// Spectral width of a dispersed beam, given directly or through the stretch
/// factor it should reach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    HalfWidth(f64),
    StretchFactor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanInputs {
    /// Peak Rabi frequency Ω₀, rad/s.
    pub rabi: f64,
    /// One-photon detuning Δ, rad/s.
    pub detuning: f64,
    /// Position where the ratio is evaluated; defaults to L/2.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignInputs {
    pub beam: BeamSource,
    /// Required for grating and dispersion beams.
    pub bandwidth: Option<Bandwidth>,
    pub component_spot: Option<f64>,
    pub medium_length: f64,
    pub signal_fwhm: f64,
    /// |g|²N, 1/(s·m).
    pub coupling_density: Option<f64>,
    pub raman: Option<RamanInputs>,
    pub noise: Option<NoiseInputs>,
}

/// Every derived quantity; fields are `None` when their inputs are absent or
/// do not apply to the beam source.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub spatial_dispersion: Option<f64>,
    pub spectral_halfwidth: Option<f64>,
    pub seed_duration: Option<f64>,
    pub stretch_factor: Option<f64>,
    pub frequency_gradient: f64,
    pub spatial_ok: Option<bool>,
    pub temporal_ok: Option<bool>,
    pub spectral_ok: bool,
    pub spectral_bandwidth_ok: bool,
    pub raman_ratio: Option<f64>,
    pub raman_ok: Option<bool>,
    pub noise_photons: Option<f64>,
    pub max_detuning: Option<f64>,
    pub gem_depth: Option<f64>,
    pub gem_window_ok: Option<bool>,
    /// `None` when no angle suffices.
    pub theta_min: Option<f64>,
}

pub fn design(inputs: &DesignInputs) -> Result<DesignReport, DesignError> {
    let l = inputs.medium_length;
    let dt = inputs.signal_fwhm;
    require(l > 0.0 && l.is_finite(), "medium_length", "must be > 0")?;
    require(dt > 0.0 && dt.is_finite(), "signal_fwhm", "must be > 0")?;

    let (zeta, beam) = match inputs.beam {
        BeamSource::Reticle {
            pattern_wavenumber,
            spin_rate,
        } => {
            require(
                pattern_wavenumber >= 0.0,
                "pattern_wavenumber",
                "must be >= 0",
            )?;
            require(spin_rate >= 0.0, "spin_rate", "must be >= 0")?;
            (None, None)
        }
        source => {
            let zeta = match source {
                BeamSource::Grating {
                    center_wavelength,
                    focal_length,
                    angular_dispersion,
                } => {
                    require(center_wavelength > 0.0, "center_wavelength", "must be > 0")?;
                    require(focal_length >= 0.0, "focal_length", "must be >= 0")?;
                    grating_dispersion(center_wavelength, focal_length, angular_dispersion)
                }
                BeamSource::Dispersion { zeta } => zeta,
                BeamSource::Reticle { .. } => unreachable!(),
            };
            let spot = inputs.component_spot.ok_or(DesignError::InvalidInput {
                name: "component_spot",
                reason: "required for a dispersed beam".into(),
            })?;
            let halfwidth = match inputs.bandwidth {
                Some(Bandwidth::HalfWidth(w)) => w,
                Some(Bandwidth::StretchFactor(k)) => spectral_halfwidth_for_stretch(k, spot, zeta)?,
                None => {
                    return Err(DesignError::InvalidInput {
                        name: "spectral_halfwidth",
                        reason: "give a spectral half-width or a target stretch factor".into(),
                    })
                }
            };
            let cb = chirp_beam(zeta, halfwidth, spot)?;
            (Some(zeta), Some((cb, halfwidth, spot)))
        }
    };
    let beta = match (inputs.beam, beam) {
        (
            BeamSource::Reticle {
                pattern_wavenumber,
                spin_rate,
            },
            _,
        ) => reticle_chirp(pattern_wavenumber, spin_rate),
        (_, Some((cb, _, _))) => cb.frequency_gradient,
        _ => unreachable!(),
    };

    let coverage =
        beam.map(|(cb, w, spot)| coverage_conditions(cb.stretch_factor, spot, w, beta, l, dt));
    let span = beta.abs() * l;
    let raman = match (inputs.raman, beam) {
        (Some(r), Some((cb, _, spot))) => Some(raman_ratio(
            r.rabi,
            r.detuning,
            beta,
            cb.stretch_factor,
            spot,
            r.z.unwrap_or(0.5 * l),
        )?),
        _ => None,
    };
    let noise = inputs.noise.as_ref().map(noise_budget).transpose()?;
    let window = inputs
        .coupling_density
        .map(|g| gem_window(beta, l, dt, g * l));

    Ok(DesignReport {
        spatial_dispersion: zeta,
        spectral_halfwidth: beam.map(|b| b.1),
        seed_duration: beam.map(|b| seed_duration(b.1)),
        stretch_factor: beam.map(|b| b.0.stretch_factor),
        frequency_gradient: beta,
        spatial_ok: coverage.map(|c| c.spatial_ok),
        temporal_ok: coverage.map(|c| c.temporal_ok),
        spectral_ok: span > 2.0 * PI / dt,
        spectral_bandwidth_ok: span > 8.0 * LN_2 / dt,
        raman_ratio: raman.map(|r| r.ratio),
        raman_ok: raman.map(|r| r.ok),
        noise_photons: noise.map(|n| n.noise_photons),
        max_detuning: noise.map(|n| n.max_detuning),
        gem_depth: window.map(|w| w.d_eff),
        gem_window_ok: window.map(|w| w.window_ok),
        theta_min: critical_angle(beta, l, dt).ok(),
    })
}
