use crate::C64;

use super::ModelError;

/// Trapezoid rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            step * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Complex signal envelope a(τ) sampled on a uniform time grid at a fixed
/// longitudinal boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub grid_start: f64,
    pub grid_step: f64,
    pub values: Vec<C64>,
}

impl FieldRecord {
    pub fn new(grid_start: f64, grid_step: f64, values: Vec<C64>) -> Result<Self, ModelError> {
        if !(grid_step.is_finite() && grid_step > 0.0) || !grid_start.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "grid_step",
                reason: format!("grid must be finite with positive step, got step {grid_step}"),
            });
        }
        if let Some(index) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(ModelError::NonFinite { index });
        }
        Ok(FieldRecord {
            grid_start,
            grid_step,
            values,
        })
    }

    pub fn zeros(grid_start: f64, grid_step: f64, len: usize) -> Self {
        FieldRecord {
            grid_start,
            grid_step,
            values: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.grid_start + k as f64 * self.grid_step
    }

    pub fn grid_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        FieldRecord {
            grid_start: self.grid_start,
            grid_step: self.grid_step,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.map(|v| v * c)
    }

    /// Same start, step and length, up to a relative tolerance on the step.
    pub fn same_grid(&self, other: &FieldRecord) -> bool {
        self.len() == other.len()
            && (self.grid_step - other.grid_step).abs() <= 1e-9 * self.grid_step
            && (self.grid_start - other.grid_start).abs() <= 1e-9 * self.grid_step
    }

    /// Index of the largest |a|; first one on ties.
    pub fn peak_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in self.values.iter().enumerate() {
            let m = v.norm_sqr();
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((k, m));
            }
        }
        best.map(|(k, _)| k)
    }

    pub fn peak_time(&self) -> Option<f64> {
        self.peak_index().map(|k| self.time(k))
    }

    /// Amplitude half-maximum interval around the peak. Crossing times are
    /// linearly interpolated; an envelope still above half at a record edge
    /// uses the edge time.
    pub fn half_max_interval(&self) -> Option<HalfMax> {
        self.level_interval(0.5)
    }

    /// Interval where |a|² stays above half its peak.
    pub fn intensity_half_max_interval(&self) -> Option<HalfMax> {
        self.level_interval(std::f64::consts::FRAC_1_SQRT_2)
    }

    fn level_interval(&self, level: f64) -> Option<HalfMax> {
        let peak = self.peak_index()?;
        let top = self.values[peak].norm();
        if top == 0.0 {
            return None;
        }
        let half = level * top;
        let mag = |k: usize| self.values[k].norm();
        let mut first = peak;
        while first > 0 && mag(first - 1) >= half {
            first -= 1;
        }
        let mut last = peak;
        while last + 1 < self.len() && mag(last + 1) >= half {
            last += 1;
        }
        let left = if first == 0 {
            self.time(0)
        } else {
            let (a, b) = (mag(first), mag(first - 1));
            self.time(first) - self.grid_step * (a - half) / (a - b)
        };
        let right = if last + 1 == self.len() {
            self.time(last)
        } else {
            let (a, b) = (mag(last), mag(last + 1));
            self.time(last) + self.grid_step * (a - half) / (a - b)
        };
        Some(HalfMax {
            peak,
            first,
            last,
            left,
            right,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMax {
    pub peak: usize,
    /// First and last sample index at or above the level.
    pub first: usize,
    pub last: usize,
    pub left: f64,
    pub right: f64,
}

impl HalfMax {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }
}

/// Rescaled spin-wave amplitude σ(z; x) at a fixed instant.
///
/// Values are stored slice-major: slice `ix` occupies
/// `values[ix * n_z .. (ix + 1) * n_z]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMap {
    pub z_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub values: Vec<C64>,
}

impl SpinMap {
    pub fn new(z_grid: Vec<f64>, x_grid: Vec<f64>, values: Vec<C64>) -> Result<Self, ModelError> {
        if z_grid.len() < 2 || x_grid.is_empty() {
            return Err(ModelError::Shape(
                "spin map needs >= 2 z nodes and >= 1 x slice".into(),
            ));
        }
        if values.len() != z_grid.len() * x_grid.len() {
            return Err(ModelError::Shape(format!(
                "{} values for a {}x{} grid",
                values.len(),
                x_grid.len(),
                z_grid.len()
            )));
        }
        if let Some(index) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(ModelError::NonFinite { index });
        }
        Ok(SpinMap {
            z_grid,
            x_grid,
            values,
        })
    }

    pub fn zeros(z_grid: Vec<f64>, x_grid: Vec<f64>) -> Self {
        let n = z_grid.len() * x_grid.len();
        SpinMap {
            z_grid,
            x_grid,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn n_z(&self) -> usize {
        self.z_grid.len()
    }

    pub fn n_x(&self) -> usize {
        self.x_grid.len()
    }

    pub fn slice(&self, ix: usize) -> &[C64] {
        let n = self.n_z();
        &self.values[ix * n..(ix + 1) * n]
    }

    pub fn slices(&self) -> impl Iterator<Item = &[C64]> {
        self.values.chunks(self.n_z())
    }

    /// Spacing of the z grid, assumed uniform.
    pub fn z_step(&self) -> f64 {
        self.z_grid[1] - self.z_grid[0]
    }

    pub fn scaled(&self, c: C64) -> Self {
        SpinMap {
            z_grid: self.z_grid.clone(),
            x_grid: self.x_grid.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let xs: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        assert!((trapezoid(&xs, 0.1) - 0.5).abs() < 1e-15);
        assert_eq!(trapezoid(&[3.0], 0.1), 0.0);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let v = vec![C64::new(1.0, 0.0), C64::new(f64::NAN, 0.0)];
        assert_eq!(
            FieldRecord::new(0.0, 0.1, v).unwrap_err(),
            ModelError::NonFinite { index: 1 }
        );
        assert!(FieldRecord::new(0.0, 0.0, vec![]).is_err());
    }

    #[test]
    fn spin_map_shape_checked() {
        assert!(SpinMap::new(vec![0.0, 1.0], vec![0.0], vec![C64::new(0.0, 0.0)]).is_err());
        let m = SpinMap::zeros(vec![0.0, 0.5, 1.0], vec![-1.0, 1.0]);
        assert_eq!(m.slice(1).len(), 3);
        assert_eq!(m.slices().count(), 2);
    }
}
