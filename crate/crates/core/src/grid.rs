//! Time discretization and driving-noise lattices.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Uniform discretization of [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::NonPositiveTime(t_end));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".to_string()));
        }
        Ok(TimeGrid { t_end, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.steps as f64
    }
}

/// Independent driving-noise increments for n Brownian motions on a grid.
/// Row i holds the Normal(0, dt) increments of the i-th motion.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianLattice {
    grid: TimeGrid,
    increments: Vec<Vec<f64>>,
}

impl BrownianLattice {
    /// Wrap externally produced increments; rows must share the grid length.
    pub fn from_increments(grid: TimeGrid, increments: Vec<Vec<f64>>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidParameter("need at least one row".to_string()));
        }
        for row in &increments {
            if row.len() != grid.steps() {
                return Err(Error::ShapeMismatch {
                    expected: grid.steps(),
                    got: row.len(),
                });
            }
        }
        Ok(BrownianLattice { grid, increments })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn rows(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self, row: usize) -> &[f64] {
        &self.increments[row]
    }

    /// Cumulative path of one motion: steps + 1 values starting at zero.
    pub fn cumulative(&self, row: usize) -> Vec<f64> {
        let mut path = Vec::with_capacity(self.grid.steps() + 1);
        let mut acc = 0.0;
        path.push(acc);
        for &dw in &self.increments[row] {
            acc += dw;
            path.push(acc);
        }
        path
    }

    /// The lattice driving the time-reversed, order-reversed system:
    /// row i, step k maps to row n-1-i, step steps-1-k.
    ///
    /// This is the grid restriction of B~_i(s) = B_{n-i+1}(t) - B_{n-i+1}(t-s)
    /// and is an involution.
    pub fn reversed(&self) -> Self {
        let n = self.rows();
        let steps = self.grid.steps();
        let increments = (0..n)
            .map(|i| {
                (0..steps)
                    .map(|k| self.increments[n - 1 - i][steps - 1 - k])
                    .collect()
            })
            .collect();
        BrownianLattice {
            grid: self.grid,
            increments,
        }
    }
}

/// Draw an n-row lattice of i.i.d. Normal(0, dt) increments.
pub fn sample_lattice<R: Rng + ?Sized>(grid: TimeGrid, n: usize, rng: &mut R) -> BrownianLattice {
    let sd = grid.dt().sqrt();
    let increments = (0..n)
        .map(|_| {
            (0..grid.steps())
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    sd * z
                })
                .collect()
        })
        .collect();
    BrownianLattice { grid, increments }
}
