//! Storage and retrieval integrators.
//!
//! In normalized units the transverse geometry obeys
//!
//! ```text
//! ∂a/∂z = −κ σ exp(−i b z (τ − τ_ref))
//! ∂σ/∂τ = (−γ + iδ₀) σ + κ a exp(+i b z (τ − τ_ref))
//! ```
//!
//! with b → −b for forward retrieval. The non-transverse geometry replaces
//! b·z by b(z sinθ − x cosθ) on every transverse slice x. Both are
//! integrated in the rotating frame S = σ exp(−iΔ(τ − τ_ref)) by the
//! marching kernel; [`reference`] integrates the σ form directly with an
//! independent lattice scheme.
//!
//! Backward retrieval is solved in the mirrored frame u = −z, where the
//! field again enters at u = −1/2. The physical chirp is unchanged, so the
//! detuning in that frame is Δ(−u), and the initial spin handed to the
//! kernel is the conjugated stored spin read in mirrored order.

mod kernel;
pub mod reference;

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{trapezoid, FieldRecord, ModelError, SimParams, SpinMap};
use crate::C64;

pub use reference::run_reference;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite field at z slice {slice} (z = {z:.6}) of transverse slice {x_slice}")]
    NonFinite {
        slice: usize,
        z: f64,
        x_slice: usize,
    },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error(
        "beam angle {theta:.4} rad is below the critical angle {critical:.4} rad \
         (b·sinθ·Δt/2π = {coverage:.3} < 1); pass AngleGuard::Force to run anyway"
    )]
    BelowCriticalAngle {
        theta: f64,
        critical: f64,
        coverage: f64,
    },
    #[error("invalid readout options: {0}")]
    Readout(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadoutMode {
    #[default]
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReadoutOptions {
    pub mode: ReadoutMode,
    /// Delay t′ of the retrieved pulse in units of T, imposed by the phase
    /// modulation exp(+i b z t′) of the read-out coupling.
    pub time_shift: f64,
}

impl ReadoutOptions {
    pub fn forward() -> Self {
        ReadoutOptions::default()
    }

    pub fn backward() -> Self {
        ReadoutOptions {
            mode: ReadoutMode::Backward,
            time_shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.time_shift.is_finite() && self.time_shift.abs() < 1.0) {
            return Err(SolverError::Readout(format!(
                "|time_shift| must be < 1, got {}",
                self.time_shift
            )));
        }
        Ok(())
    }
}

/// What to do when a non-transverse run is set below the critical angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AngleGuard {
    #[default]
    Reject,
    Force,
}

/// Photon bookkeeping for one transverse slice of a stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceBalance {
    pub x: f64,
    /// ∫|a|²dτ entering the medium.
    pub input_norm: f64,
    /// ∫|σ|²dz at the start of the stage.
    pub initial_spin_norm: f64,
    /// ∫|a|²dτ leaving the medium.
    pub transmitted_norm: f64,
    /// ∫|σ|²dz at the end of the stage.
    pub final_spin_norm: f64,
    /// ∫|a(z, τ)|²dτ at every z node, in propagation order.
    pub field_norm_by_z: Vec<f64>,
}

impl SliceBalance {
    pub fn residual(&self) -> f64 {
        relative_residual(
            self.input_norm + self.initial_spin_norm,
            self.transmitted_norm + self.final_spin_norm,
        )
    }
}

fn relative_residual(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        if after == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (before - after).abs() / before
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub slices: Vec<SliceBalance>,
}

impl Diagnostics {
    fn mean(&self, f: impl Fn(&SliceBalance) -> f64) -> f64 {
        // fixed summation order
        self.slices.iter().map(f).sum::<f64>() / self.slices.len() as f64
    }

    pub fn input_norm(&self) -> f64 {
        self.mean(|s| s.input_norm)
    }

    pub fn initial_spin_norm(&self) -> f64 {
        self.mean(|s| s.initial_spin_norm)
    }

    pub fn transmitted_norm(&self) -> f64 {
        self.mean(|s| s.transmitted_norm)
    }

    pub fn final_spin_norm(&self) -> f64 {
        self.mean(|s| s.final_spin_norm)
    }

    /// |N_before − N_after| / N_before for the slice-averaged photon numbers.
    pub fn residual(&self) -> f64 {
        relative_residual(
            self.input_norm() + self.initial_spin_norm(),
            self.transmitted_norm() + self.final_spin_norm(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    /// Field leaving the medium: at z = +1/2 for storage and forward
    /// retrieval, at z = −1/2 for backward retrieval. With several
    /// transverse slices this is their uniform average (the projection onto
    /// the flat transverse mode).
    pub boundary_out: FieldRecord,
    /// Per-slice output fields, in x order.
    pub slice_outputs: Vec<FieldRecord>,
    /// σ at the end of the stage, physical z order.
    pub spin_final: SpinMap,
    pub diagnostics: Diagnostics,
}

impl StageResult {
    /// Slice-averaged output photon number.
    pub fn output_photons(&self) -> f64 {
        self.diagnostics.transmitted_norm()
    }
}

/// A storage stage followed by a retrieval stage.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRun {
    pub storage: StageResult,
    pub retrieval: StageResult,
}

impl MemoryRun {
    pub fn output(&self) -> &FieldRecord {
        &self.retrieval.boundary_out
    }

    /// N_out / N_in with slice-averaged photon numbers.
    pub fn efficiency(&self) -> f64 {
        let n_in = self.storage.diagnostics.input_norm();
        if n_in == 0.0 {
            0.0
        } else {
            self.retrieval.output_photons() / n_in
        }
    }

    /// 1 − N_leak / N_in.
    pub fn stored_fraction(&self) -> f64 {
        let d = &self.storage.diagnostics;
        if d.input_norm() == 0.0 {
            0.0
        } else {
            1.0 - d.transmitted_norm() / d.input_norm()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Stage {
    Storage,
    Retrieval(ReadoutMode),
}

/// Rotating-frame detuning of node `coord` on slice `x`, in the frame the
/// kernel integrates (mirrored for backward retrieval).
pub(crate) fn stage_detuning(params: &SimParams, stage: Stage, coord: f64, x: f64) -> f64 {
    let b = params.chirp;
    let physical = |z: f64| {
        if params.is_transverse() {
            b * z
        } else {
            b * (z * params.theta.sin() - x * params.theta.cos())
        }
    };
    match stage {
        Stage::Storage => physical(coord),
        Stage::Retrieval(ReadoutMode::Forward) => -physical(coord),
        Stage::Retrieval(ReadoutMode::Backward) => physical(-coord),
    }
}

/// Stage start time, reference time of the coupling phase, and the output
/// boundary orientation.
pub(crate) fn stage_times(stage: Stage, opts: &ReadoutOptions) -> (f64, f64) {
    match stage {
        Stage::Storage => (-1.0, 0.0),
        Stage::Retrieval(_) => (0.0, opts.time_shift),
    }
}

/// Initial σ per slice in the kernel frame.
pub(crate) fn kernel_initial_spin(spin: &SpinMap, stage: Stage) -> Vec<Vec<C64>> {
    spin.slices()
        .map(|s| match stage {
            Stage::Retrieval(ReadoutMode::Backward) => s.iter().rev().map(|v| v.conj()).collect(),
            _ => s.to_vec(),
        })
        .collect()
}

/// Maps a kernel-frame σ slice back to physical z order.
pub(crate) fn physical_order(mut sigma: Vec<C64>, stage: Stage) -> Vec<C64> {
    if stage == Stage::Retrieval(ReadoutMode::Backward) {
        sigma.reverse();
    }
    sigma
}

pub(crate) fn average_fields(records: &[FieldRecord]) -> FieldRecord {
    let first = &records[0];
    if records.len() == 1 {
        return first.clone();
    }
    let inv = 1.0 / records.len() as f64;
    let values = (0..first.len())
        .map(|k| records.iter().map(|r| r.values[k]).sum::<C64>() * inv)
        .collect();
    FieldRecord {
        grid_start: first.grid_start,
        grid_step: first.grid_step,
        values,
    }
}

fn run_stage(
    params: &SimParams,
    stage: Stage,
    opts: &ReadoutOptions,
    input: &[C64],
    initial: &SpinMap,
) -> Result<StageResult, SolverError> {
    let z_grid = params.z_grid();
    let x_grid = params.x_grid();
    let h = params.tau_step();
    let dz = params.z_step();
    let (tau0, tau_ref) = stage_times(stage, opts);
    let tau_end = tau0 + 1.0;
    let lambda = C64::new(-params.gamma_n, params.delta0_n);
    let sigma_init = kernel_initial_spin(initial, stage);
    let input_norm = trapezoid(&input.iter().map(|a| a.norm_sqr()).collect::<Vec<_>>(), h);

    let per_slice: Vec<Result<(FieldRecord, Vec<C64>, SliceBalance), SolverError>> = x_grid
        .par_iter()
        .enumerate()
        .map(|(ix, &x)| {
            let detuning: Vec<f64> = z_grid
                .iter()
                .map(|&z| stage_detuning(params, stage, z, x))
                .collect();
            let s_init: Vec<C64> = sigma_init[ix]
                .iter()
                .zip(&detuning)
                .map(|(s, &d)| s * C64::from_polar(1.0, -d * (tau0 - tau_ref)))
                .collect();
            let setup = kernel::MarchSetup {
                kappa: params.kappa,
                lambda,
                tau_step: h,
                z_step: dz,
                detuning: &detuning,
                spin_init: &s_init,
            };
            let out = kernel::march(&setup, input).map_err(|slice| SolverError::NonFinite {
                slice,
                z: z_grid[slice],
                x_slice: ix,
            })?;
            let sigma_end: Vec<C64> = out
                .spin_end
                .iter()
                .zip(&detuning)
                .map(|(s, &d)| s * C64::from_polar(1.0, d * (tau_end - tau_ref)))
                .collect();
            let initial_spin_norm = spin_norm_z(&sigma_init[ix], dz);
            let final_spin_norm = spin_norm_z(&sigma_end, dz);
            let transmitted_norm = *out.field_norm_by_z.last().unwrap();
            let balance = SliceBalance {
                x,
                input_norm,
                initial_spin_norm,
                transmitted_norm,
                final_spin_norm,
                field_norm_by_z: out.field_norm_by_z,
            };
            let record = FieldRecord {
                grid_start: tau0,
                grid_step: h,
                values: out.field_out,
            };
            Ok((record, physical_order(sigma_end, stage), balance))
        })
        .collect();

    let mut slice_outputs = Vec::with_capacity(x_grid.len());
    let mut spin_values = Vec::with_capacity(x_grid.len() * z_grid.len());
    let mut balances = Vec::with_capacity(x_grid.len());
    for r in per_slice {
        let (record, sigma, balance) = r?;
        slice_outputs.push(record);
        spin_values.extend(sigma);
        balances.push(balance);
    }
    Ok(StageResult {
        boundary_out: average_fields(&slice_outputs),
        slice_outputs,
        spin_final: SpinMap::new(z_grid, x_grid, spin_values)?,
        diagnostics: Diagnostics { slices: balances },
    })
}

pub(crate) fn spin_norm_z(sigma: &[C64], dz: f64) -> f64 {
    trapezoid(&sigma.iter().map(|s| s.norm_sqr()).collect::<Vec<_>>(), dz)
}

fn check_storage_input(input: &FieldRecord, params: &SimParams) -> Result<(), SolverError> {
    let expected = FieldRecord::zeros(-1.0, params.tau_step(), params.n_tau);
    if !input.same_grid(&expected) {
        return Err(SolverError::GridMismatch(format!(
            "storage input must have {} samples from -1 with step {}, got {} from {} with step {}",
            params.n_tau,
            params.tau_step(),
            input.len(),
            input.grid_start,
            input.grid_step
        )));
    }
    Ok(())
}

fn check_spin(spin: &SpinMap, params: &SimParams) -> Result<(), SolverError> {
    let z = params.z_grid();
    let x = params.x_grid();
    let matches = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() < 1e-12)
    };
    if !matches(&spin.z_grid, &z) || !matches(&spin.x_grid, &x) {
        return Err(SolverError::GridMismatch(format!(
            "spin map is {}x{}, parameters expect {}x{}",
            spin.n_x(),
            spin.n_z(),
            x.len(),
            z.len()
        )));
    }
    Ok(())
}

fn require_transverse(params: &SimParams) -> Result<(), SolverError> {
    if !params.is_transverse() || params.n_x != 1 {
        return Err(SolverError::Geometry(format!(
            "transverse solver needs theta = pi/2 and n_x = 1 (theta = {}, n_x = {}); use run_non_transverse",
            params.theta, params.n_x
        )));
    }
    Ok(())
}

pub(crate) fn store(input: &FieldRecord, params: &SimParams) -> Result<StageResult, SolverError> {
    params.validate()?;
    check_storage_input(input, params)?;
    let empty = SpinMap::zeros(params.z_grid(), params.x_grid());
    run_stage(
        params,
        Stage::Storage,
        &ReadoutOptions::default(),
        &input.values,
        &empty,
    )
}

pub(crate) fn retrieve(
    spin: &SpinMap,
    params: &SimParams,
    opts: &ReadoutOptions,
) -> Result<StageResult, SolverError> {
    params.validate()?;
    opts.validate()?;
    check_spin(spin, params)?;
    let dark = vec![C64::new(0.0, 0.0); params.n_tau];
    run_stage(params, Stage::Retrieval(opts.mode), opts, &dark, spin)
}

/// Writes `input` (on the storage grid τ ∈ [−1, 0]) into the spin wave.
pub fn run_storage(input: &FieldRecord, params: &SimParams) -> Result<StageResult, SolverError> {
    require_transverse(params)?;
    store(input, params)
}

/// Reads a stored spin wave out over τ ∈ [0, 1] with a dark input port.
pub fn run_retrieval(
    spin: &SpinMap,
    params: &SimParams,
    opts: &ReadoutOptions,
) -> Result<StageResult, SolverError> {
    require_transverse(params)?;
    retrieve(spin, params, opts)
}

/// Storage immediately followed by retrieval, transverse geometry.
pub fn run_memory(
    input: &FieldRecord,
    params: &SimParams,
    opts: &ReadoutOptions,
) -> Result<MemoryRun, SolverError> {
    let storage = run_storage(input, params)?;
    let retrieval = run_retrieval(&storage.spin_final, params, opts)?;
    Ok(MemoryRun { storage, retrieval })
}

/// b·sinθ·Δt/2π with Δt the intensity FWHM measured on the input record.
pub fn longitudinal_coverage(input: &FieldRecord, params: &SimParams) -> Option<f64> {
    let fwhm = input.intensity_half_max_interval()?.width();
    Some(params.chirp.abs() * params.theta.sin() * fwhm / (2.0 * PI))
}

/// Storage and retrieval for an arbitrary angle between signal and control.
///
/// Every transverse slice is an independent one-dimensional problem; stage
/// photon numbers are uniform averages over the slices.
pub fn run_non_transverse(
    input: &FieldRecord,
    params: &SimParams,
    opts: &ReadoutOptions,
    guard: AngleGuard,
) -> Result<MemoryRun, SolverError> {
    params.validate()?;
    if let Some(coverage) = longitudinal_coverage(input, params) {
        if coverage < 1.0 {
            let fwhm = input
                .intensity_half_max_interval()
                .map(|h| h.width())
                .unwrap_or(0.0);
            let ratio = 2.0 * PI / (params.chirp.abs() * fwhm);
            let critical = if ratio >= 1.0 { PI / 2.0 } else { ratio.asin() };
            let err = SolverError::BelowCriticalAngle {
                theta: params.theta,
                critical,
                coverage,
            };
            match guard {
                AngleGuard::Reject => return Err(err),
                AngleGuard::Force => log::warn!("{err}; running anyway"),
            }
        }
    }
    let storage = store(input, params)?;
    let retrieval = retrieve(&storage.spin_final, params, opts)?;
    Ok(MemoryRun { storage, retrieval })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{synthesize_pulse, PulseSpec, Scales};
    use std::f64::consts::FRAC_PI_2;

    fn small(kappa: f64, chirp: f64) -> SimParams {
        SimParams {
            kappa,
            chirp,
            gamma_n: 0.0,
            delta0_n: 0.0,
            theta: FRAC_PI_2,
            aspect: 0.5,
            n_z: 301,
            n_tau: 401,
            n_x: 1,
            scales: Scales::default(),
        }
    }

    fn pulse(p: &SimParams) -> FieldRecord {
        synthesize_pulse(&PulseSpec::gaussian(-0.5, 0.15), p.n_tau, (-1.0, 0.0))
            .unwrap()
            .record
    }

    #[test]
    fn zero_coupling_passes_input_through() {
        let p = small(0.0, 40.0);
        let input = pulse(&p);
        let st = run_storage(&input, &p).unwrap();
        assert_eq!(st.boundary_out.values, input.values);
        assert!(st.spin_final.values.iter().all(|s| s.norm() == 0.0));
        assert_eq!(st.diagnostics.residual(), 0.0);
    }

    #[test]
    fn zero_input_gives_zero_everything() {
        let p = small(5.0, 40.0);
        let input = FieldRecord::zeros(-1.0, p.tau_step(), p.n_tau);
        let run = run_memory(&input, &p, &ReadoutOptions::forward()).unwrap();
        assert!(run
            .storage
            .boundary_out
            .values
            .iter()
            .all(|a| a.norm() == 0.0));
        assert!(run
            .storage
            .spin_final
            .values
            .iter()
            .all(|a| a.norm() == 0.0));
        assert!(run.output().values.iter().all(|a| a.norm() == 0.0));
        assert_eq!(run.efficiency(), 0.0);
    }

    #[test]
    fn zero_spin_retrieves_nothing() {
        let p = small(5.0, 40.0);
        let spin = SpinMap::zeros(p.z_grid(), p.x_grid());
        for opts in [ReadoutOptions::forward(), ReadoutOptions::backward()] {
            let r = run_retrieval(&spin, &p, &opts).unwrap();
            assert!(r.boundary_out.values.iter().all(|a| a.norm() == 0.0));
        }
    }

    #[test]
    fn rejects_mismatched_grid_and_geometry() {
        let p = small(5.0, 40.0);
        let input = FieldRecord::zeros(-1.0, 0.01, 101);
        assert!(matches!(
            run_storage(&input, &p),
            Err(SolverError::GridMismatch(_))
        ));
        let mut q = p;
        q.theta = 1.0;
        q.n_x = 4;
        assert!(matches!(
            run_storage(&pulse(&q), &q),
            Err(SolverError::Geometry(_))
        ));
        let mut r = p;
        r.n_z = 50;
        assert!(matches!(
            run_storage(&pulse(&r), &r),
            Err(SolverError::Model(_))
        ));
        let spin = SpinMap::zeros(vec![0.0, 1.0], vec![0.0]);
        assert!(matches!(
            run_retrieval(&spin, &p, &ReadoutOptions::forward()),
            Err(SolverError::GridMismatch(_))
        ));
        let bad = ReadoutOptions {
            time_shift: 1.0,
            ..Default::default()
        };
        let spin = SpinMap::zeros(p.z_grid(), p.x_grid());
        assert!(matches!(
            run_retrieval(&spin, &p, &bad),
            Err(SolverError::Readout(_))
        ));
    }

    #[test]
    fn non_finite_reports_slice() {
        let p = small(1e200, 40.0);
        let err = run_storage(&pulse(&p), &p).unwrap_err();
        match err {
            SolverError::NonFinite { slice, x_slice, .. } => {
                assert!(slice < p.n_z);
                assert_eq!(x_slice, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conservation_converges_at_second_order() {
        let coarse = small(6.0, 40.0);
        let fine = coarse
            .with_resolution(2 * coarse.n_z - 1, coarse.n_tau, 1)
            .unwrap();
        let res = |p: &SimParams| {
            let run = run_memory(&pulse(p), p, &ReadoutOptions::forward()).unwrap();
            (
                run.storage.diagnostics.residual(),
                run.retrieval.diagnostics.residual(),
            )
        };
        let (s1, r1) = res(&coarse);
        let (s2, r2) = res(&fine);
        assert!(s1 < 1e-3 && r1 < 1e-3, "{s1} {r1}");
        assert!(s2 < s1 / 3.0 && r2 < r1 / 3.0, "{s1} {s2} {r1} {r2}");
        let run = run_memory(&pulse(&fine), &fine, &ReadoutOptions::forward()).unwrap();
        let d = &run.storage.diagnostics.slices[0];
        assert_eq!(d.field_norm_by_z.len(), fine.n_z);
        assert!((d.field_norm_by_z[0] - d.input_norm).abs() < 1e-15);
        // the field norm only decreases while the spin fills up
        assert!(d.field_norm_by_z.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn decay_removes_photons() {
        let mut p = small(6.0, 40.0);
        let lossless = run_memory(&pulse(&p), &p, &ReadoutOptions::forward())
            .unwrap()
            .efficiency();
        p.gamma_n = 1.0;
        let lossy = run_memory(&pulse(&p), &p, &ReadoutOptions::forward()).unwrap();
        assert!(lossy.efficiency() < lossless);
        let d = &lossy.storage.diagnostics;
        assert!(d.transmitted_norm() + d.final_spin_norm() < d.input_norm());
    }
}
