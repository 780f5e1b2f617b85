use crate::error::{invalid, Result};

/// Piecewise-constant controls: `values[c][k]` is channel `c` on
/// `[t_k, t_{k+1})` with `t_k = k T / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    horizon: f64,
    values: Vec<Vec<f64>>,
}

impl ControlSchedule {
    pub fn new(horizon: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if horizon <= 0.0 || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive and finite, got {horizon}")));
        }
        let slices = values.first().map(Vec::len).unwrap_or(0);
        if values.is_empty() || slices == 0 {
            return Err(invalid("schedule needs at least one channel and one slice"));
        }
        if values.iter().any(|ch| ch.len() != slices) {
            return Err(invalid("all channels must have the same number of slices"));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("control values must be finite"));
        }
        Ok(ControlSchedule { horizon, values })
    }

    pub fn zeros(channels: usize, slices: usize, horizon: f64) -> Result<Self> {
        Self::new(horizon, vec![vec![0.0; slices]; channels])
    }

    /// The same control vector on every slice.
    pub fn constant(horizon: f64, slices: usize, u: &[f64]) -> Result<Self> {
        Self::new(horizon, u.iter().map(|&v| vec![v; slices]).collect())
    }

    /// Builds a schedule slice by slice from control vectors.
    pub fn from_slices(horizon: f64, slices: &[Vec<f64>]) -> Result<Self> {
        let m = slices.first().map(Vec::len).unwrap_or(0);
        if slices.iter().any(|u| u.len() != m) {
            return Err(invalid("all slices must have the same number of channels"));
        }
        Self::new(horizon, (0..m).map(|c| slices.iter().map(|u| u[c]).collect()).collect())
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn slices(&self) -> usize {
        self.values[0].len()
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn slice_duration(&self) -> f64 {
        self.horizon / self.slices() as f64
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Control vector on slice `k`.
    pub fn control_at(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|ch| ch[k]).collect()
    }

    /// Slice-boundary times `t_0 .. t_N`.
    pub fn boundary_times(&self) -> Vec<f64> {
        let dt = self.slice_duration();
        (0..=self.slices()).map(|k| k as f64 * dt).collect()
    }

    /// Splits into slices `[0, k)` and `[k, N)`, each keeping the slice
    /// duration.
    pub fn split_at(&self, k: usize) -> Result<(ControlSchedule, ControlSchedule)> {
        let n = self.slices();
        if k == 0 || k >= n {
            return Err(invalid(format!("split index {k} must lie in 1..{n}")));
        }
        let dt = self.slice_duration();
        let head = self.values.iter().map(|ch| ch[..k].to_vec()).collect();
        let tail = self.values.iter().map(|ch| ch[k..].to_vec()).collect();
        Ok((
            ControlSchedule::new(dt * k as f64, head)?,
            ControlSchedule::new(dt * (n - k) as f64, tail)?,
        ))
    }

    /// Applies `f` to every value, keeping the shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ControlSchedule> {
        ControlSchedule::new(
            self.horizon,
            self.values
                .iter()
                .map(|ch| ch.iter().map(|v| f(*v)).collect())
                .collect(),
        )
    }

    pub fn same_shape(&self, other: &ControlSchedule) -> bool {
        self.channels() == other.channels() && self.slices() == other.slices()
    }
}
