//! Second-order predictor-corrector marching along z.
//!
//! Each z node carries a spin equation in its rotating frame,
//! dS/dτ = (λ − iΔ)S + κ a, integrated over the whole τ grid with the exact
//! exponential of the linear part. The source is interpolated by the cubic
//! through four neighbouring samples (one-sided at the two ends), which keeps
//! the photon balance tight on moderate τ grids. The field obeys
//! ∂a/∂z = −κ S and is advanced by Heun's method, recomputing the spin at the
//! new node from the predicted field.

use crate::model::trapezoid;
use crate::C64;

/// Stencil offsets relative to the left node of an interval.
const STENCILS: [[i32; 4]; 3] = [[0, 1, 2, 3], [-1, 0, 1, 2], [-2, -1, 0, 1]];

/// Per-node constants of the spin recursion S' = E·S + κ Σ w_i a_{k+o_i}.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SpinStepper {
    propagator: C64,
    /// Weights for the left-end, interior and right-end stencils.
    weights: [[C64; 4]; 3],
    /// Two-point rule for grids too short for a cubic.
    linear: (C64, C64),
}

impl SpinStepper {
    pub(crate) fn new(rate: C64, h: f64) -> Self {
        let x = rate * h;
        let phi = phi_functions(x);
        // ∫_0^h e^{μ(h−s)} (s/h)^m ds = h·m!·φ_{m+1}
        let moments = [
            phi[0] * h,
            phi[1] * h,
            phi[2] * (2.0 * h),
            phi[3] * (6.0 * h),
        ];
        let mut weights = [[C64::new(0.0, 0.0); 4]; 3];
        for (w, offsets) in weights.iter_mut().zip(STENCILS.iter()) {
            for i in 0..4 {
                let coeffs = lagrange_monomials(offsets, i);
                w[i] = (0..4).map(|m| moments[m] * coeffs[m]).sum();
            }
        }
        let linear = (moments[0] - moments[1], moments[1]);
        SpinStepper {
            propagator: x.exp(),
            weights,
            linear,
        }
    }

    /// Fills `out` with S(τ_k), starting from `s0`.
    #[inline]
    pub(crate) fn sweep(&self, kappa: f64, field: &[C64], s0: C64, out: &mut [C64]) {
        let n = field.len();
        out[0] = s0;
        if n < 4 {
            // too short for a cubic: fall back to the linear rule
            let (w0, w1) = self.linear;
            let mut s = s0;
            for k in 0..n - 1 {
                s = self.propagator * s + (w0 * field[k] + w1 * field[k + 1]) * kappa;
                out[k + 1] = s;
            }
            return;
        }
        let scaled = |w: &[C64; 4]| [w[0] * kappa, w[1] * kappa, w[2] * kappa, w[3] * kappa];
        let [left, mid, right] = [
            scaled(&self.weights[0]),
            scaled(&self.weights[1]),
            scaled(&self.weights[2]),
        ];
        let e = self.propagator;
        let mut s = e * s0
            + left[0] * field[0]
            + left[1] * field[1]
            + left[2] * field[2]
            + left[3] * field[3];
        out[1] = s;
        for k in 1..n - 2 {
            s = e * s
                + mid[0] * field[k - 1]
                + mid[1] * field[k]
                + mid[2] * field[k + 1]
                + mid[3] * field[k + 2];
            out[k + 1] = s;
        }
        let k = n - 2;
        s = e * s
            + right[0] * field[k - 2]
            + right[1] * field[k - 1]
            + right[2] * field[k]
            + right[3] * field[k + 1];
        out[n - 1] = s;
    }
}

/// Monomial coefficients (in θ) of the `i`-th Lagrange basis polynomial on
/// the nodes `offsets`.
fn lagrange_monomials(offsets: &[i32; 4], i: usize) -> [f64; 4] {
    let mut poly = [1.0, 0.0, 0.0, 0.0];
    let mut denom = 1.0;
    let mut degree = 0;
    for (j, &o) in offsets.iter().enumerate() {
        if j == i {
            continue;
        }
        // poly *= (θ − o)
        let o = o as f64;
        for m in (0..=degree + 1).rev() {
            let lower = if m > 0 { poly[m - 1] } else { 0.0 };
            poly[m] = lower - o * poly[m];
        }
        degree += 1;
        denom *= (offsets[i] - offsets[j]) as f64;
    }
    poly.map(|c| c / denom)
}

/// φ1..φ4 with φ_k(x) = Σ_n xⁿ/(n+k)!, series near zero and the upward
/// recurrence φ_{k+1} = (φ_k − 1/k!)/x elsewhere.
fn phi_functions(x: C64) -> [C64; 4] {
    if x.norm() < 1.0 {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (k, phi) in out.iter_mut().enumerate() {
            // term_n = x^n/(n+k+1)!
            let mut term = C64::new(1.0 / factorial(k + 1), 0.0);
            for n in 0..30 {
                *phi += term;
                term = term * x / (n + k + 2) as f64;
            }
        }
        out
    } else {
        let mut out = [C64::new(0.0, 0.0); 4];
        out[0] = (x.exp() - 1.0) / x;
        for k in 1..4 {
            out[k] = (out[k - 1] - 1.0 / factorial(k)) / x;
        }
        out
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub(crate) struct MarchSetup<'a> {
    pub kappa: f64,
    /// −γ + iδ₀.
    pub lambda: C64,
    pub tau_step: f64,
    pub z_step: f64,
    /// Rotating-frame detuning Δ at each z node.
    pub detuning: &'a [f64],
    /// S(z_j, τ_0).
    pub spin_init: &'a [C64],
}

pub(crate) struct MarchOutcome {
    /// Field at the last z node.
    pub field_out: Vec<C64>,
    /// S(z_j, τ_end).
    pub spin_end: Vec<C64>,
    /// ∫|a(z_j, τ)|² dτ per node.
    pub field_norm_by_z: Vec<f64>,
}

/// Returns the index of the first z node with a non-finite field on failure.
pub(crate) fn march(setup: &MarchSetup<'_>, input: &[C64]) -> Result<MarchOutcome, usize> {
    let n_tau = input.len();
    let n_z = setup.detuning.len();
    debug_assert_eq!(setup.spin_init.len(), n_z);
    let kappa = setup.kappa;
    let dz = setup.z_step;
    let h = setup.tau_step;
    let stepper = |j: usize| SpinStepper::new(setup.lambda - C64::new(0.0, setup.detuning[j]), h);

    let mut field = input.to_vec();
    let mut spin = vec![C64::new(0.0, 0.0); n_tau];
    let mut field_next = vec![C64::new(0.0, 0.0); n_tau];
    let mut spin_next = vec![C64::new(0.0, 0.0); n_tau];
    let mut spin_end = Vec::with_capacity(n_z);
    let mut norms = Vec::with_capacity(n_z);
    let mut intensity = vec![0.0; n_tau];

    let mut record =
        |field: &[C64], spin: &[C64], spin_end: &mut Vec<C64>, norms: &mut Vec<f64>| {
            for (i, a) in intensity.iter_mut().zip(field) {
                *i = a.norm_sqr();
            }
            let n = trapezoid(&intensity, h);
            spin_end.push(spin[n_tau - 1]);
            norms.push(n);
            n.is_finite() && spin[n_tau - 1].norm_sqr().is_finite()
        };

    stepper(0).sweep(kappa, &field, setup.spin_init[0], &mut spin);
    if !record(&field, &spin, &mut spin_end, &mut norms) {
        return Err(0);
    }

    for j in 0..n_z - 1 {
        let next = stepper(j + 1);
        let s0 = setup.spin_init[j + 1];
        // predictor
        for ((p, a), s) in field_next.iter_mut().zip(&field).zip(&spin) {
            *p = a - s * (kappa * dz);
        }
        next.sweep(kappa, &field_next, s0, &mut spin_next);
        // corrector with the averaged right-hand side
        for (((p, a), s), sp) in field_next.iter_mut().zip(&field).zip(&spin).zip(&spin_next) {
            *p = a - (s + sp) * (0.5 * kappa * dz);
        }
        next.sweep(kappa, &field_next, s0, &mut spin_next);
        std::mem::swap(&mut field, &mut field_next);
        std::mem::swap(&mut spin, &mut spin_next);
        if !record(&field, &spin, &mut spin_end, &mut norms) {
            return Err(j + 1);
        }
    }

    Ok(MarchOutcome {
        field_out: field,
        spin_end,
        field_norm_by_z: norms,
    })
}
