use serde::{Deserialize, Serialize};

use crate::error::{EahmError, Result};

/// Strictly increasing, nonnegative evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(EahmError::GridSize {
                required: 1,
                actual: 0,
            });
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(EahmError::InvalidGrid(format!(
                "points must be finite and nonnegative, found {bad}"
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[1] <= w[0]) {
            return Err(EahmError::InvalidGrid(format!(
                "points must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Grid(points))
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(EahmError::GridSize {
                required: 2,
                actual: n,
            });
        }
        let step = (stop - start) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        pts[n - 1] = stop;
        Grid::new(pts)
    }

    /// `n` geometrically spaced points; `start` must be positive.
    pub fn logspace(start: f64, stop: f64, n: usize) -> Result<Self> {
        if !(start > 0.0) {
            return Err(EahmError::InvalidGrid(format!(
                "log spacing needs a positive start, got {start}"
            )));
        }
        if n < 2 {
            return Err(EahmError::GridSize {
                required: 2,
                actual: n,
            });
        }
        let (l0, l1) = (start.ln(), stop.ln());
        let step = (l1 - l0) / (n - 1) as f64;
        let mut pts: Vec<f64> = (0..n).map(|i| (l0 + step * i as f64).exp()).collect();
        pts[0] = start;
        pts[n - 1] = stop;
        Grid::new(pts)
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn require_len(&self, required: usize) -> Result<()> {
        if self.0.len() < required {
            Err(EahmError::GridSize {
                required,
                actual: self.0.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Inserts the midpoint of every cell (`n` points become `2n - 1`).
    pub fn refined(&self) -> Grid {
        let mut pts = Vec::with_capacity(2 * self.0.len());
        for w in self.0.windows(2) {
            pts.push(w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            if mid > w[0] && mid < w[1] {
                pts.push(mid);
            }
        }
        pts.extend(self.0.last());
        Grid(pts)
    }

    /// Points whose value under `keep` is true, as a new grid.
    pub fn filtered(&self, keep: impl Fn(f64) -> bool) -> Option<Grid> {
        let pts: Vec<f64> = self.0.iter().copied().filter(|&p| keep(p)).collect();
        if pts.is_empty() {
            None
        } else {
            Some(Grid(pts))
        }
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = EahmError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Grid::new(v)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.0
    }
}

impl AsRef<[f64]> for Grid {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
