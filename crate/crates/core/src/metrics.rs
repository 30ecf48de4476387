//! Photon numbers, efficiency, fidelity and envelope-quality measures.
//!
//! The fidelity functional is the mode overlap
//!
//! ```text
//! F′(t̄) = |∫ a_in*(t̄ − t) a_out(t) dt|² / (N_in N_out)
//! ```
//!
//! evaluated as a discrete correlation over the shared grid step. The
//! overlap and both norms use the same uniform weights, so F′ ≤ 1 holds for
//! the discrete sums themselves.

use std::f64::consts::PI;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{trapezoid, FieldRecord, SpinMap};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{0} field has zero norm")]
    ZeroNorm(&'static str),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("nominal shift {0} does not fall on the correlation grid")]
    OffGridShift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ShiftSearch {
    /// Evaluate at the given t̄ only.
    Nominal(f64),
    /// Maximize over every t̄ on the correlation grid.
    #[default]
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityReport {
    pub f_prime: f64,
    pub best_shift: f64,
    pub eta: f64,
    pub f: f64,
}

/// ∫|a|²dτ by the trapezoid rule.
pub fn photon_number(field: &FieldRecord) -> f64 {
    trapezoid(&field.intensities(), field.grid_step)
}

/// N_out / N_in.
pub fn efficiency(input: &FieldRecord, output: &FieldRecord) -> Result<f64, MetricsError> {
    let n_in = photon_number(input);
    if n_in == 0.0 {
        return Err(MetricsError::ZeroNorm("input"));
    }
    Ok(photon_number(output) / n_in)
}

/// ∫|σ|²dz, averaged over transverse slices.
pub fn spin_norm(spin: &SpinMap) -> f64 {
    let dz = spin.z_step();
    let total: f64 = spin
        .slices()
        .map(|s| trapezoid(&s.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>(), dz))
        .sum();
    total / spin.n_x() as f64
}

fn check_steps(a: &FieldRecord, b: &FieldRecord) -> Result<(), MetricsError> {
    if (a.grid_step - b.grid_step).abs() > 1e-9 * a.grid_step {
        return Err(MetricsError::GridMismatch(format!(
            "grid steps differ: {} vs {}",
            a.grid_step, b.grid_step
        )));
    }
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::GridMismatch("empty record".into()));
    }
    Ok(())
}

fn sum_sq(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

/// Σ_k conj(p[s − k])·q[k] for s in 0..p.len() + q.len() − 1.
fn reversed_overlap(p: &[C64], q: &[C64], s: usize) -> C64 {
    let lo = s.saturating_sub(p.len() - 1);
    let hi = s.min(q.len() - 1);
    if lo > hi {
        return C64::new(0.0, 0.0);
    }
    (lo..=hi).map(|k| p[s - k].conj() * q[k]).sum()
}

/// Best |C(s)|² over all lags (first maximum on ties), returned normalized.
fn best_lag(n_lags: usize, norm: f64, overlap: impl Fn(usize) -> C64 + Sync) -> (f64, usize) {
    let values: Vec<f64> = (0..n_lags)
        .into_par_iter()
        .map(|s| overlap(s).norm_sqr())
        .collect();
    let mut best = (0.0, 0);
    for (s, &v) in values.iter().enumerate() {
        if v > best.0 {
            best = (v, s);
        }
    }
    ((best.0 / norm).min(1.0), best.1)
}

/// Mode-overlap fidelity F′ against the time-reversed input.
pub fn fidelity(
    input: &FieldRecord,
    output: &FieldRecord,
    search: ShiftSearch,
) -> Result<FidelityReport, MetricsError> {
    check_steps(input, output)?;
    let eta = efficiency(input, output)?;
    let (p, q) = (&input.values, &output.values);
    let norm = sum_sq(p) * sum_sq(q);
    if norm == 0.0 {
        return Err(MetricsError::ZeroNorm("output"));
    }
    let h = input.grid_step;
    let origin = input.grid_start + output.grid_start;
    let n_lags = p.len() + q.len() - 1;
    let (f_prime, s) = match search {
        ShiftSearch::Grid => best_lag(n_lags, norm, |s| reversed_overlap(p, q, s)),
        ShiftSearch::Nominal(t) => {
            let x = (t - origin) / h;
            let s = x.round();
            if (x - s).abs() > 1e-6 {
                return Err(MetricsError::OffGridShift(t));
            }
            let v = if s < 0.0 || s as usize >= n_lags {
                0.0
            } else {
                reversed_overlap(p, q, s as usize).norm_sqr() / norm
            };
            (v.min(1.0), s.max(0.0) as usize)
        }
    };
    let best_shift = match search {
        ShiftSearch::Nominal(t) => t,
        ShiftSearch::Grid => origin + s as f64 * h,
    };
    Ok(FidelityReport {
        f_prime,
        best_shift,
        eta,
        f: eta * f_prime,
    })
}

fn modulus(v: &[C64]) -> Vec<C64> {
    v.iter().map(|x| C64::new(x.norm(), 0.0)).collect()
}

/// The F′ functional on phase-stripped envelopes |a|, maximized over shifts.
pub fn amplitude_correlation(
    input: &FieldRecord,
    output: &FieldRecord,
) -> Result<f64, MetricsError> {
    let strip = |r: &FieldRecord| FieldRecord {
        values: modulus(&r.values),
        ..r.clone()
    };
    Ok(fidelity(&strip(input), &strip(output), ShiftSearch::Grid)?.f_prime)
}

/// Normalized squared overlap of |reference(t)| with |other(t + lag)|,
/// maximized over the lag. Returns the value and the lag in time units.
pub fn envelope_correlation(
    reference: &FieldRecord,
    other: &FieldRecord,
) -> Result<(f64, f64), MetricsError> {
    check_steps(reference, other)?;
    let p = modulus(&reference.values);
    let mut q = modulus(&other.values);
    let norm = sum_sq(&p) * sum_sq(&q);
    if sum_sq(&p) == 0.0 {
        return Err(MetricsError::ZeroNorm("reference"));
    }
    if norm == 0.0 {
        return Err(MetricsError::ZeroNorm("other"));
    }
    // Correlating p against reversed q turns the plain lag into a reversed one.
    q.reverse();
    let (value, s) = best_lag(p.len() + q.len() - 1, norm, |s| reversed_overlap(&p, &q, s));
    // index of other matched to reference[0] is (q.len() - 1) - s
    let shift = q.len() as f64 - 1.0 - s as f64;
    let lag = other.grid_start + shift * reference.grid_step - reference.grid_start;
    Ok((value, lag))
}

/// Largest deviation of the unwrapped phase from the chord through its
/// values at the two half-maximum crossings, over the amplitude FWHM.
///
/// For a Gaussian carrying a quadratic phase q·t² this equals q·(Δt/2)².
pub fn phase_flatness(field: &FieldRecord) -> Result<f64, MetricsError> {
    let hm = field
        .half_max_interval()
        .ok_or(MetricsError::ZeroNorm("field"))?;
    let v = &field.values;
    let lo = hm.first.saturating_sub(1);
    let hi = (hm.last + 1).min(v.len() - 1);
    let mut phase = vec![0.0; hi - lo + 1];
    let wrap = |d: f64| d - 2.0 * PI * ((d + PI) / (2.0 * PI)).floor();
    let base = hm.peak - lo;
    phase[base] = v[hm.peak].arg();
    for i in base + 1..phase.len() {
        phase[i] = phase[i - 1] + wrap(v[lo + i].arg() - v[lo + i - 1].arg());
    }
    for i in (0..base).rev() {
        phase[i] = phase[i + 1] + wrap(v[lo + i].arg() - v[lo + i + 1].arg());
    }
    let phase_at = |t: f64| {
        let x = ((t - field.time(lo)) / field.grid_step).clamp(0.0, (phase.len() - 1) as f64);
        let i = (x.floor() as usize).min(phase.len().saturating_sub(2));
        let f = x - i as f64;
        if phase.len() == 1 {
            phase[0]
        } else {
            phase[i] * (1.0 - f) + phase[i + 1] * f
        }
    };
    let (pl, pr) = (phase_at(hm.left), phase_at(hm.right));
    let width = hm.width();
    let trend = |t: f64| {
        if width > 0.0 {
            pl + (pr - pl) * (t - hm.left) / width
        } else {
            pl
        }
    };
    let dev = (hm.first..=hm.last)
        .map(|k| (phase[k - lo] - trend(field.time(k))).abs())
        .fold(0.0, f64::max);
    Ok(dev)
}

/// `record` mirrored in time about zero: samples reversed over [−end, −start].
pub fn time_reversed(record: &FieldRecord) -> FieldRecord {
    let mut values = record.values.clone();
    values.reverse();
    FieldRecord {
        grid_start: -record.grid_end(),
        grid_step: record.grid_step,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{synthesize_pulse, PulseSpec};
    use proptest::prelude::*;

    fn pulse(center: f64, fwhm: f64) -> FieldRecord {
        synthesize_pulse(&PulseSpec::gaussian(center, fwhm), 401, (-1.0, 0.0))
            .unwrap()
            .record
    }

    #[test]
    fn photon_number_basics() {
        let p = pulse(-0.5, 0.1);
        assert!((photon_number(&p) - 1.0).abs() < 1e-9);
        assert!((photon_number(&p.scaled(C64::new(0.5, 0.0))) - 0.25).abs() < 1e-9);
        assert_eq!(photon_number(&FieldRecord::zeros(0.0, 0.1, 10)), 0.0);
    }

    #[test]
    fn efficiency_examples() {
        let p = pulse(-0.5, 0.1);
        let rev = time_reversed(&p);
        assert!((efficiency(&p, &rev).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(
            efficiency(&p, &FieldRecord::zeros(0.0, p.grid_step, 401)).unwrap(),
            0.0
        );
        assert!(efficiency(&FieldRecord::zeros(-1.0, 0.1, 11), &p).is_err());
    }

    #[test]
    fn reversed_copy_is_perfect() {
        let p = pulse(-0.3, 0.1);
        let rev = time_reversed(&p);
        let r = fidelity(&p, &rev, ShiftSearch::Grid).unwrap();
        assert!((r.f_prime - 1.0).abs() < 1e-12);
        assert!(r.best_shift.abs() < 1e-9, "{}", r.best_shift);
        let half = fidelity(
            &p,
            &rev.scaled(C64::new(0.5, 0.0)),
            ShiftSearch::Nominal(0.0),
        )
        .unwrap();
        assert!((half.f_prime - 1.0).abs() < 1e-12);
        assert!((half.eta - 0.25).abs() < 1e-12);
        assert!((half.f - 0.25).abs() < 1e-12);
    }

    #[test]
    fn shifted_output_found_by_grid_search() {
        let p = pulse(-0.5, 0.1);
        // output at +0.6 instead of the mirror point +0.5
        let out = synthesize_pulse(&PulseSpec::gaussian(0.6, 0.1), 401, (0.0, 1.0))
            .unwrap()
            .record;
        let nominal = fidelity(&p, &out, ShiftSearch::Nominal(0.0)).unwrap();
        let grid = fidelity(&p, &out, ShiftSearch::Grid).unwrap();
        assert!(nominal.f_prime < 0.5);
        assert!((grid.f_prime - 1.0).abs() < 1e-9);
        assert!((grid.best_shift - 0.1).abs() < 1e-9);
        assert!(fidelity(&p, &out, ShiftSearch::Nominal(0.0001)).is_err());
    }

    #[test]
    fn disjoint_support_gives_zero() {
        let mut a = FieldRecord::zeros(0.0, 0.1, 10);
        a.values[0] = C64::new(1.0, 0.0);
        let mut b = FieldRecord::zeros(0.0, 0.1, 10);
        b.values[5] = C64::new(1.0, 0.0);
        assert_eq!(
            fidelity(&a, &b, ShiftSearch::Nominal(0.0)).unwrap().f_prime,
            0.0
        );
        let mut c = FieldRecord::zeros(0.0, 0.1, 10);
        c.values[3] = C64::new(0.0, 1.0);
        let mut d = FieldRecord::zeros(0.0, 0.1, 10);
        d.values[3] = C64::new(1.0, 0.0);
        d.values[4] = C64::new(1.0, 0.0);
        // a two-sample output never overlaps fully with a single-sample input
        assert!((amplitude_correlation(&c, &d).unwrap() - 0.5).abs() < 1e-12);
        assert!(fidelity(&a, &FieldRecord::zeros(0.0, 0.1, 10), ShiftSearch::Grid).is_err());
        assert!(fidelity(&a, &FieldRecord::zeros(0.0, 0.2, 10), ShiftSearch::Grid).is_err());
    }

    #[test]
    fn amplitude_correlation_ignores_phase() {
        let p = pulse(-0.5, 0.1);
        let rev = time_reversed(&p);
        let chirped = FieldRecord {
            values: rev
                .times()
                .zip(&rev.values)
                .map(|(t, v)| v * C64::from_polar(1.0, 40.0 * t * t))
                .collect(),
            ..rev.clone()
        };
        assert!((amplitude_correlation(&p, &chirped).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&p, &chirped, ShiftSearch::Grid).unwrap().f_prime < 0.99);
    }

    #[test]
    fn envelope_correlation_recovers_lag() {
        let a = synthesize_pulse(&PulseSpec::gaussian(0.5, 0.1), 401, (0.0, 1.0))
            .unwrap()
            .record;
        let b = synthesize_pulse(&PulseSpec::gaussian(0.6, 0.1), 401, (0.0, 1.0))
            .unwrap()
            .record;
        let (v, lag) = envelope_correlation(&a, &b).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!((lag - 0.1).abs() < 1e-9, "{lag}");
        let (_, back) = envelope_correlation(&b, &a).unwrap();
        assert!((back + 0.1).abs() < 1e-9);
    }

    #[test]
    fn phase_flatness_examples() {
        let p = synthesize_pulse(&PulseSpec::gaussian(0.0, 0.2), 2001, (-1.0, 1.0))
            .unwrap()
            .record;
        assert!(phase_flatness(&p).unwrap() < 1e-9);
        let tilted = FieldRecord {
            values: p
                .times()
                .zip(&p.values)
                .map(|(t, v)| v * C64::from_polar(1.0, 3.0 + 25.0 * t))
                .collect(),
            ..p.clone()
        };
        assert!(phase_flatness(&tilted).unwrap() < 1e-9);
        let q = 30.0;
        let chirped = FieldRecord {
            values: p
                .times()
                .zip(&p.values)
                .map(|(t, v)| v * C64::from_polar(1.0, q * t * t))
                .collect(),
            ..p.clone()
        };
        // amplitude FWHM of an intensity-FWHM 0.2 Gaussian
        let half = 0.1 * std::f64::consts::SQRT_2;
        let expected = q * half * half;
        assert!((phase_flatness(&chirped).unwrap() - expected).abs() < 0.01 * expected);
        assert!(phase_flatness(&FieldRecord::zeros(0.0, 0.1, 5)).is_err());
    }

    #[test]
    fn spin_norm_examples() {
        let z: Vec<f64> = (0..11).map(|j| -0.5 + j as f64 * 0.1).collect();
        let zero = SpinMap::zeros(z.clone(), vec![0.0]);
        assert_eq!(spin_norm(&zero), 0.0);
        let ones = SpinMap::new(z, vec![-0.5, 0.5], vec![C64::new(1.0, 0.0); 22]).unwrap();
        assert!((spin_norm(&ones) - 1.0).abs() < 1e-12);
        assert!((spin_norm(&ones.scaled(C64::new(2.0, 0.0))) - 4.0).abs() < 1e-12);
    }

    fn arb_record(len: usize) -> impl Strategy<Value = FieldRecord> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
            .prop_filter("nonzero", |v| {
                v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
            })
            .prop_map(|v| FieldRecord {
                grid_start: 0.0,
                grid_step: 0.05,
                values: v.into_iter().map(|(a, b)| C64::new(a, b)).collect(),
            })
    }

    proptest! {
        #[test]
        fn f_prime_bounded_and_invariant(
            a in arb_record(24),
            b in arb_record(17),
            phase in 0.0f64..6.3,
            scale in 0.1f64..10.0,
        ) {
            let base = fidelity(&a, &b, ShiftSearch::Grid).unwrap();
            prop_assert!((0.0..=1.0).contains(&base.f_prime));
            let c = C64::from_polar(scale, phase);
            let moved = fidelity(&a.scaled(c), &b.scaled(c.conj() * 3.0), ShiftSearch::Grid).unwrap();
            prop_assert!((moved.f_prime - base.f_prime).abs() < 1e-9);
            let both = fidelity(&a.scaled(c), &b.scaled(c), ShiftSearch::Grid).unwrap();
            prop_assert!((both.eta - base.eta).abs() < 1e-9 * base.eta.max(1.0));
            // power-of-two scaling is exact in floating point
            let k = C64::new(2f64.powi(scale as i32), 0.0);
            let same = fidelity(&a.scaled(k), &b.scaled(k), ShiftSearch::Grid).unwrap();
            prop_assert_eq!(same.best_shift, base.best_shift);
            prop_assert!((efficiency(&a.scaled(c), &b.scaled(c)).unwrap() - efficiency(&a, &b).unwrap()).abs()
                < 1e-12 * efficiency(&a, &b).unwrap().max(1.0));
        }
    }
}
