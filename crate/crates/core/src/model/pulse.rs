use std::fmt;

use crate::C64;

use super::{invalid, trapezoid, FieldRecord, ModelError};

/// Minimum distance, in amplitude FWHMs (√2·fwhm for a Gaussian), between a
/// peak and either edge of the synthesis window.
const SUPPORT_MARGIN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    Gaussian,
    /// Two Gaussians of equal width; `peak_separation` is in units of the
    /// FWHM, the pair is centred on [`PulseSpec::center`].
    DoubleGaussian {
        peak_separation: f64,
        relative_amplitudes: (f64, f64),
    },
    /// Samples spread uniformly over the synthesis window, linearly
    /// resampled when their count differs from the grid.
    Tabulated(Vec<C64>),
}

/// Analytic description of an input envelope, times in units of T.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub center: f64,
    /// FWHM of the intensity |a|², i.e. a Gaussian exp(−2ln2·(τ−τc)²/fwhm²).
    pub fwhm: f64,
}

impl PulseSpec {
    pub fn gaussian(center: f64, fwhm: f64) -> Self {
        PulseSpec {
            shape: PulseShape::Gaussian,
            center,
            fwhm,
        }
    }

    /// Double-peak default: equal amplitudes, three FWHMs apart.
    pub fn double_gaussian(center: f64, fwhm: f64) -> Self {
        PulseSpec {
            shape: PulseShape::DoubleGaussian {
                peak_separation: 3.0,
                relative_amplitudes: (1.0, 1.0),
            },
            center,
            fwhm,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.fwhm.is_finite() && self.fwhm > 0.0) {
            return Err(invalid("pulse.fwhm", "must be finite and > 0"));
        }
        if !self.center.is_finite() {
            return Err(invalid("pulse.center", "must be finite"));
        }
        match &self.shape {
            PulseShape::Gaussian => {}
            PulseShape::DoubleGaussian {
                peak_separation,
                relative_amplitudes: (a1, a2),
            } => {
                if !(peak_separation.is_finite() && *peak_separation >= 0.0) {
                    return Err(invalid("pulse.peak_separation", "must be finite and >= 0"));
                }
                if !(a1.is_finite() && a2.is_finite()) || (*a1 == 0.0 && *a2 == 0.0) {
                    return Err(invalid(
                        "pulse.relative_amplitudes",
                        "must be finite, not both zero",
                    ));
                }
            }
            PulseShape::Tabulated(samples) => {
                if samples.len() < 2 {
                    return Err(invalid("pulse.samples", "need at least two samples"));
                }
            }
        }
        Ok(())
    }

    /// Peak positions of the analytic shapes; empty for tabulated input.
    pub fn peak_centers(&self) -> Vec<f64> {
        match &self.shape {
            PulseShape::Gaussian => vec![self.center],
            PulseShape::DoubleGaussian {
                peak_separation, ..
            } => {
                let half = 0.5 * peak_separation * self.fwhm;
                vec![self.center - half, self.center + half]
            }
            PulseShape::Tabulated(_) => Vec::new(),
        }
    }
}

/// Unit-peak Gaussian whose intensity FWHM is `fwhm`.
fn gaussian_amplitude(t: f64, center: f64, fwhm: f64) -> f64 {
    let u = (t - center) / fwhm;
    (-2.0 * std::f64::consts::LN_2 * u * u).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseWarning {
    /// A peak sits closer than three FWHMs to a window edge.
    SupportViolation { peak: f64, margin_fwhm: f64 },
}

impl fmt::Display for PulseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseWarning::SupportViolation { peak, margin_fwhm } => write!(
                f,
                "pulse peak at {peak} lies {margin_fwhm:.2} FWHM from the window edge (< {SUPPORT_MARGIN}); \
                 the envelope is truncated"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub record: FieldRecord,
    pub warnings: Vec<PulseWarning>,
}

/// Samples `spec` on `n_tau` points spanning `window` (endpoints included),
/// normalized so the trapezoid of |a|² is 1.
pub fn synthesize_pulse(
    spec: &PulseSpec,
    n_tau: usize,
    window: (f64, f64),
) -> Result<Pulse, ModelError> {
    spec.validate()?;
    let (start, end) = window;
    if n_tau < 2 {
        return Err(invalid("n_tau", "must be >= 2"));
    }
    if !(start.is_finite() && end.is_finite() && end > start) {
        return Err(invalid("window", "must be a finite, non-empty interval"));
    }
    let step = (end - start) / (n_tau - 1) as f64;
    let times = (0..n_tau).map(|k| start + k as f64 * step);

    let mut values: Vec<C64> = match &spec.shape {
        PulseShape::Gaussian => times
            .map(|t| C64::new(gaussian_amplitude(t, spec.center, spec.fwhm), 0.0))
            .collect(),
        PulseShape::DoubleGaussian {
            relative_amplitudes: (a1, a2),
            ..
        } => {
            let peaks = spec.peak_centers();
            times
                .map(|t| {
                    let v = a1 * gaussian_amplitude(t, peaks[0], spec.fwhm)
                        + a2 * gaussian_amplitude(t, peaks[1], spec.fwhm);
                    C64::new(v, 0.0)
                })
                .collect()
        }
        PulseShape::Tabulated(samples) => resample(samples, n_tau),
    };

    let norm = trapezoid(
        &values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(),
        step,
    );
    if !(norm.is_finite() && norm > 0.0) {
        return Err(invalid("pulse", "envelope has zero norm on the grid"));
    }
    let scale = norm.sqrt().recip();
    values.iter_mut().for_each(|v| *v *= scale);

    let mut warnings = Vec::new();
    for peak in spec.peak_centers() {
        let margin = (peak - start).min(end - peak) / (std::f64::consts::SQRT_2 * spec.fwhm);
        if margin < SUPPORT_MARGIN {
            let w = PulseWarning::SupportViolation {
                peak,
                margin_fwhm: margin,
            };
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    Ok(Pulse {
        record: FieldRecord::new(start, step, values)?,
        warnings,
    })
}

fn resample(samples: &[C64], n: usize) -> Vec<C64> {
    if samples.len() == n {
        return samples.to_vec();
    }
    let last = (samples.len() - 1) as f64;
    (0..n)
        .map(|k| {
            let pos = k as f64 * last / (n - 1) as f64;
            let i = (pos.floor() as usize).min(samples.len() - 2);
            let frac = pos - i as f64;
            samples[i] * (1.0 - frac) + samples[i + 1] * frac
        })
        .collect()
}
