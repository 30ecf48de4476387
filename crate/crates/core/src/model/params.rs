use std::f64::consts::{FRAC_PI_2, PI};

use super::{invalid, ModelError};

/// Parameters of the memory in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// |g|²N, per second per meter.
    pub coupling_density: f64,
    /// Medium length L, meters.
    pub medium_length: f64,
    /// Duration T of each of the storage and retrieval stages, seconds.
    pub storage_window: f64,
    /// Amplitude FWHM Δt of the input envelope, seconds.
    pub signal_fwhm: f64,
    /// Frequency gradient β of the control beam, rad/(s·m), signed.
    pub chirp_gradient: f64,
    /// Spin dephasing rate γ, 1/s.
    pub spin_decay: f64,
    /// Two-photon detuning δ₀, rad/s.
    pub two_photon_detuning: f64,
    /// Angle θ between signal and control propagation, radians.
    pub beam_angle: f64,
    /// Transverse radius R of the excitation volume, meters.
    pub transverse_radius: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = [
            ("coupling_density", self.coupling_density),
            ("medium_length", self.medium_length),
            ("storage_window", self.storage_window),
            ("signal_fwhm", self.signal_fwhm),
            ("chirp_gradient", self.chirp_gradient),
            ("spin_decay", self.spin_decay),
            ("two_photon_detuning", self.two_photon_detuning),
            ("beam_angle", self.beam_angle),
            ("transverse_radius", self.transverse_radius),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.medium_length <= 0.0 {
            return Err(invalid("medium_length", "must be > 0"));
        }
        if self.storage_window <= 0.0 {
            return Err(invalid("storage_window", "must be > 0"));
        }
        if self.signal_fwhm <= 0.0 {
            return Err(invalid("signal_fwhm", "must be > 0"));
        }
        if self.spin_decay < 0.0 {
            return Err(invalid("spin_decay", "must be >= 0"));
        }
        if self.coupling_density < 0.0 {
            return Err(invalid("coupling_density", "must be >= 0"));
        }
        if !(self.beam_angle > 0.0 && self.beam_angle <= FRAC_PI_2 + 1e-12) {
            return Err(invalid("beam_angle", "must lie in (0, pi/2]"));
        }
        if !self.is_transverse() && self.transverse_radius <= 0.0 {
            return Err(invalid(
                "transverse_radius",
                "must be > 0 outside the transverse geometry",
            ));
        }
        Ok(())
    }

    pub fn is_transverse(&self) -> bool {
        is_transverse_angle(self.beam_angle)
    }
}

/// True when `theta` is π/2 up to rounding.
pub fn is_transverse_angle(theta: f64) -> bool {
    (theta - FRAC_PI_2).abs() < 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ResolutionPolicy {
    #[default]
    Auto,
    Explicit {
        n_z: usize,
        n_tau: usize,
        n_x: usize,
    },
}

/// Length and time units used to build a [`SimParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub length: f64,
    pub time: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            length: 1.0,
            time: 1.0,
        }
    }
}

/// Dimensionless parameters and grid sizes.
///
/// Positions are measured in units of L (z ∈ [-1/2, 1/2]), times in units of
/// T (storage on τ ∈ [-1, 0], retrieval on τ ∈ [0, 1]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// κ = √(|g|²N·L·T).
    pub kappa: f64,
    /// b = β·L·T.
    pub chirp: f64,
    pub gamma_n: f64,
    pub delta0_n: f64,
    pub theta: f64,
    /// R / L.
    pub aspect: f64,
    pub n_z: usize,
    pub n_tau: usize,
    pub n_x: usize,
    pub scales: Scales,
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(invalid("kappa", "must be finite and >= 0"));
        }
        if !self.chirp.is_finite() {
            return Err(invalid("chirp", "must be finite"));
        }
        if !(self.gamma_n.is_finite() && self.gamma_n >= 0.0) {
            return Err(invalid("gamma_n", "must be finite and >= 0"));
        }
        if !self.delta0_n.is_finite() {
            return Err(invalid("delta0_n", "must be finite"));
        }
        if !(self.theta > 0.0 && self.theta <= FRAC_PI_2 + 1e-12) {
            return Err(invalid("theta", "must lie in (0, pi/2]"));
        }
        if !(self.aspect.is_finite() && self.aspect >= 0.0) {
            return Err(invalid("aspect", "must be finite and >= 0"));
        }
        if self.n_z < 2 {
            return Err(invalid("n_z", "must be >= 2"));
        }
        if self.n_tau < 2 {
            return Err(invalid("n_tau", "must be >= 2"));
        }
        if self.n_x < 1 {
            return Err(invalid("n_x", "must be >= 1"));
        }
        let zr = self.chirp.abs() / self.n_z as f64;
        if zr >= 0.5 {
            return Err(ModelError::UnresolvedChirp {
                axis: "n_z",
                ratio: zr,
            });
        }
        let tr = self.chirp.abs() / self.n_tau as f64;
        if tr >= 0.5 {
            return Err(ModelError::UnresolvedChirp {
                axis: "n_tau",
                ratio: tr,
            });
        }
        Ok(())
    }

    pub fn is_transverse(&self) -> bool {
        is_transverse_angle(self.theta)
    }

    pub fn tau_step(&self) -> f64 {
        1.0 / (self.n_tau - 1) as f64
    }

    pub fn z_step(&self) -> f64 {
        1.0 / (self.n_z - 1) as f64
    }

    /// Longitudinal nodes, endpoints included.
    pub fn z_grid(&self) -> Vec<f64> {
        let dz = self.z_step();
        (0..self.n_z).map(|j| -0.5 + j as f64 * dz).collect()
    }

    /// Transverse slice centres: equal-width cells over [-R/L, R/L], a single
    /// slice at x = 0 when `n_x == 1`.
    pub fn x_grid(&self) -> Vec<f64> {
        if self.n_x == 1 {
            return vec![0.0];
        }
        let width = 2.0 * self.aspect / self.n_x as f64;
        (0..self.n_x)
            .map(|j| -self.aspect + (j as f64 + 0.5) * width)
            .collect()
    }

    /// Effective optical depth 2πκ²/|b| of the chirp-broadened transition.
    pub fn effective_depth(&self) -> f64 {
        if self.chirp == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI * self.kappa * self.kappa / self.chirp.abs()
        }
    }

    pub fn with_resolution(
        mut self,
        n_z: usize,
        n_tau: usize,
        n_x: usize,
    ) -> Result<Self, ModelError> {
        self.n_z = n_z;
        self.n_tau = n_tau;
        self.n_x = n_x;
        self.validate()?;
        Ok(self)
    }
}

/// Automatic grid count along z and τ for a dimensionless chirp `b`.
pub(crate) fn auto_points(chirp: f64) -> usize {
    256usize.max((10.0 * chirp.abs()).ceil() as usize)
}

/// Converts SI parameters into the dimensionless form integrated by the solver.
pub fn normalize(p: &PhysicalParams, policy: ResolutionPolicy) -> Result<SimParams, ModelError> {
    p.validate()?;
    let l = p.medium_length;
    let t = p.storage_window;
    let chirp = p.chirp_gradient * l * t;
    let theta = if p.is_transverse() {
        FRAC_PI_2
    } else {
        p.beam_angle
    };
    let (n_z, n_tau, n_x) = match policy {
        ResolutionPolicy::Auto => {
            let n = auto_points(chirp);
            (n, n, if p.is_transverse() { 1 } else { 64 })
        }
        ResolutionPolicy::Explicit { n_z, n_tau, n_x } => (n_z, n_tau, n_x),
    };
    let sim = SimParams {
        kappa: (p.coupling_density * l * t).sqrt(),
        chirp,
        gamma_n: p.spin_decay * t,
        delta0_n: p.two_photon_detuning * t,
        theta,
        aspect: if p.transverse_radius > 0.0 {
            p.transverse_radius / l
        } else {
            0.0
        },
        n_z,
        n_tau,
        n_x,
        scales: Scales { length: l, time: t },
    };
    sim.validate()?;
    Ok(sim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2c() -> PhysicalParams {
        let l = 1e-3;
        let t = 1e-6;
        let s = (2.0 * 2f64.ln()).sqrt();
        let dt = s / 15.0 * t;
        PhysicalParams {
            coupling_density: 13.78 / (l * dt),
            medium_length: l,
            storage_window: t,
            signal_fwhm: dt,
            chirp_gradient: 4.0 * PI * s / (l * dt),
            spin_decay: 0.0,
            two_photon_detuning: 0.0,
            beam_angle: FRAC_PI_2,
            transverse_radius: 0.5 * l,
        }
    }

    #[test]
    fn fig2c_normalization() {
        let sim = normalize(&fig2c(), ResolutionPolicy::Auto).unwrap();
        let s = (2.0 * 2f64.ln()).sqrt();
        // kappa^2 = 13.78 * T/dt = 13.78 * 15 / sqrt(2 ln 2)
        assert!((sim.kappa - (13.78 * 15.0 / s).sqrt()).abs() < 1e-9);
        assert!((sim.kappa - 13.25).abs() < 0.01);
        // b = 4 pi sqrt(2 ln 2) * T/dt = 60 pi
        assert!((sim.chirp - 60.0 * PI).abs() < 1e-9);
        assert!((sim.chirp - 188.4).abs() < 0.2);
        assert_eq!(sim.n_z, (600.0 * PI).ceil() as usize);
        assert_eq!(sim.n_tau, sim.n_z);
        assert_eq!(sim.n_x, 1);
        assert!((sim.effective_depth() - 5.852).abs() < 1e-3);
    }

    #[test]
    fn zero_coupling_and_zero_chirp() {
        let mut p = fig2c();
        p.coupling_density = 0.0;
        p.chirp_gradient = 0.0;
        let sim = normalize(&p, ResolutionPolicy::Auto).unwrap();
        assert_eq!(sim.kappa, 0.0);
        assert_eq!(sim.chirp, 0.0);
        assert_eq!(sim.n_z, 256);
        assert!(normalize(
            &p,
            ResolutionPolicy::Explicit {
                n_z: 300,
                n_tau: 300,
                n_x: 1
            }
        )
        .is_ok());
    }

    #[test]
    fn kappa_squared_is_coupling_product() {
        let p = fig2c();
        let sim = normalize(&p, ResolutionPolicy::Auto).unwrap();
        let prod = p.coupling_density * p.medium_length * p.storage_window;
        assert!((sim.kappa * sim.kappa - prod).abs() <= 1e-12 * prod);
        // rescaling |g|²N -> c|g|²N and T -> T/c keeps kappa
        let mut q = p;
        q.coupling_density *= 4.0;
        q.storage_window /= 4.0;
        let sim_q = normalize(&q, ResolutionPolicy::Auto).unwrap();
        assert!((sim_q.kappa - sim.kappa).abs() < 1e-12 * sim.kappa);
    }

    #[test]
    fn rejects_unresolved_explicit_grid() {
        let err = normalize(
            &fig2c(),
            ResolutionPolicy::Explicit {
                n_z: 300,
                n_tau: 2000,
                n_x: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ModelError::UnresolvedChirp { axis: "n_z", .. }
        ));
        let err = normalize(
            &fig2c(),
            ResolutionPolicy::Explicit {
                n_z: 2000,
                n_tau: 300,
                n_x: 1,
            },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ModelError::UnresolvedChirp { axis: "n_tau", .. }
        ));
    }

    #[test]
    fn rejects_invalid_physics() {
        let mut p = fig2c();
        p.medium_length = 0.0;
        assert!(p.validate().is_err());
        let mut p = fig2c();
        p.beam_angle = 0.0;
        assert!(p.validate().is_err());
        let mut p = fig2c();
        p.beam_angle = 1.0;
        p.transverse_radius = 0.0;
        assert!(p.validate().is_err());
        let mut p = fig2c();
        p.spin_decay = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn non_transverse_auto_uses_64_slices() {
        let mut p = fig2c();
        p.beam_angle = PI / 3.0;
        let sim = normalize(&p, ResolutionPolicy::Auto).unwrap();
        assert_eq!(sim.n_x, 64);
        let xs = sim.x_grid();
        assert_eq!(xs.len(), 64);
        assert!((xs[0] + xs[63]).abs() < 1e-15);
        assert!(xs[63] < sim.aspect);
    }
}
