//! Discrete Skorokhod constructions of the reflected stacks, their running
//! maxima, and the independent ordered-time-tuple oracles.
//!
//! The free stack starts from a plain random walk and pushes each higher
//! path up from the one below; the wall stack additionally reflects its
//! lowest path at the origin. Both are exact restrictions of the continuous
//! constructions to the grid; no bias correction is applied here.

use crate::error::{Error, Result};
use crate::grid::BrownianLattice;

/// Which stack a path ensemble came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackKind {
    /// Ordered stack, lowest path free.
    Free,
    /// Ordered stack, lowest path reflected at the origin.
    Wall,
}

/// Positions of an n-path stack on the grid: n rows of steps + 1 values.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    kind: StackKind,
    paths: Vec<Vec<f64>>,
}

impl PathEnsemble {
    pub fn kind(&self) -> StackKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.paths.len()
    }

    pub fn path(&self, row: usize) -> &[f64] {
        &self.paths[row]
    }

    /// Terminal value of the top path.
    pub fn top_terminal(&self) -> f64 {
        *self.paths.last().and_then(|p| p.last()).expect("nonempty")
    }

    /// Ordering holds at every grid time; for wall stacks the lowest path is
    /// also nonnegative.
    pub fn respects_order(&self) -> bool {
        let len = self.paths[0].len();
        if self.kind == StackKind::Wall && self.paths[0].iter().any(|&v| v < 0.0) {
            return false;
        }
        for j in 1..self.paths.len() {
            for k in 0..len {
                if self.paths[j][k] < self.paths[j - 1][k] {
                    return false;
                }
            }
        }
        true
    }
}

fn stack_from(lat: &BrownianLattice, kind: StackKind) -> PathEnsemble {
    let steps = lat.grid().steps();
    let n = lat.rows();
    let mut paths: Vec<Vec<f64>> = Vec::with_capacity(n);

    let base = lat.cumulative(0);
    let first = match kind {
        StackKind::Free => base,
        StackKind::Wall => {
            // Reflection at the origin: B(t_k) - min_{l<=k} B(t_l).
            let mut min_so_far = 0.0_f64;
            base.iter()
                .map(|&s| {
                    min_so_far = min_so_far.min(s);
                    s - min_so_far
                })
                .collect()
        }
    };
    paths.push(first);

    for j in 1..n {
        let s = lat.cumulative(j);
        let below = &paths[j - 1];
        // Skorokhod push-up: X_j(t_k) = max_{l<=k} (X_{j-1}(t_l) + S(t_k) - S(t_l)),
        // via the running maximum of X_{j-1}(t_l) - S(t_l). The l = k term is
        // re-applied directly so the ordering holds exactly in floating point.
        let mut run = f64::NEG_INFINITY;
        let mut row = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            run = run.max(below[k] - s[k]);
            row.push((run + s[k]).max(below[k]));
        }
        paths.push(row);
    }
    PathEnsemble { kind, paths }
}

/// Ordered stack driven by the lattice, lowest path a free random walk.
pub fn z_process(lat: &BrownianLattice) -> PathEnsemble {
    stack_from(lat, StackKind::Free)
}

/// Ordered stack driven by the lattice, lowest path reflected at the origin.
pub fn y_process(lat: &BrownianLattice) -> PathEnsemble {
    stack_from(lat, StackKind::Wall)
}

/// Maximum of one row over all grid times.
pub fn running_max(ens: &PathEnsemble, row: usize) -> Result<f64> {
    if row >= ens.rows() {
        return Err(Error::BadRow(row, ens.rows()));
    }
    Ok(ens
        .path(row)
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

const EXHAUSTIVE_TUPLE_CAP: u128 = 40_000_000;

fn binomial(n: u128, k: u128) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn check_exhaustive_capacity(n: usize, steps: usize, free: usize) -> Result<()> {
    // Weakly increasing tuples of length `free` over {0..steps}.
    let tuples = binomial((steps + free) as u128, free as u128);
    if n > 4 || steps > 30 || tuples > EXHAUSTIVE_TUPLE_CAP {
        return Err(Error::CapacityExceeded { n, steps });
    }
    Ok(())
}

/// Exhaustive wall-stack oracle: maximum over all weakly increasing index
/// tuples 0 <= l_1 <= ... <= l_n <= steps of
/// sum_i (S_i(l_{i+1}) - S_i(l_i)) with l_{n+1} = steps.
pub fn lpp_exhaustive_wall(lat: &BrownianLattice) -> Result<f64> {
    let n = lat.rows();
    let steps = lat.grid().steps();
    check_exhaustive_capacity(n, steps, n)?;
    let sums: Vec<Vec<f64>> = (0..n).map(|i| lat.cumulative(i)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut tuple = vec![0usize; n];
    loop {
        let mut value = 0.0;
        for i in 0..n {
            let upper = if i + 1 < n { tuple[i + 1] } else { steps };
            value += sums[i][upper] - sums[i][tuple[i]];
        }
        best = best.max(value);
        // Next weakly increasing tuple: advance the fastest digit that has
        // room, and drop every faster digit down to the new value.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            if tuple[pos] < steps {
                tuple[pos] += 1;
                let v = tuple[pos];
                for q in pos + 1..n {
                    tuple[q] = v;
                }
                break;
            }
        }
    }
}

/// Exhaustive free-stack oracle: maximum over weakly increasing tuples
/// 0 = l_0 <= l_1 <= ... <= l_{n-1} <= l_n = steps of
/// sum_i (S_i(l_i) - S_i(l_{i-1})).
pub fn lpp_exhaustive_free(lat: &BrownianLattice) -> Result<f64> {
    let n = lat.rows();
    let steps = lat.grid().steps();
    check_exhaustive_capacity(n, steps, n.saturating_sub(1))?;
    let sums: Vec<Vec<f64>> = (0..n).map(|i| lat.cumulative(i)).collect();
    if n == 1 {
        return Ok(sums[0][steps]);
    }
    let free = n - 1;
    let mut best = f64::NEG_INFINITY;
    let mut tuple = vec![0usize; free];
    loop {
        let mut value = sums[0][tuple[0]];
        for i in 1..n {
            let hi = if i < n - 1 { tuple[i] } else { steps };
            value += sums[i][hi] - sums[i][tuple[i - 1]];
        }
        best = best.max(value);
        let mut pos = free;
        loop {
            if pos == 0 {
                return Ok(best);
            }
            pos -= 1;
            if tuple[pos] < steps {
                tuple[pos] += 1;
                let v = tuple[pos];
                for q in pos + 1..free {
                    tuple[q] = v;
                }
                break;
            }
        }
    }
}

/// Max-plus last-passage table for the wall stack, with an explicit O(steps^2)
/// inner maximization (independent of the running-max recursion).
pub fn lpp_dp_wall(lat: &BrownianLattice) -> f64 {
    let n = lat.rows();
    let steps = lat.grid().steps();
    let mut prev = vec![0.0_f64; steps + 1];
    let mut cur = vec![0.0_f64; steps + 1];
    for i in 0..n {
        let s = lat.cumulative(i);
        for k in 0..=steps {
            let mut best = f64::NEG_INFINITY;
            for l in 0..=k {
                best = best.max(prev[l] - s[l]);
            }
            cur[k] = best + s[k];
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[steps]
}

/// Max-plus last-passage table for the free stack.
pub fn lpp_dp_free(lat: &BrownianLattice) -> f64 {
    let n = lat.rows();
    let steps = lat.grid().steps();
    let mut prev = lat.cumulative(0);
    let mut cur = vec![0.0_f64; steps + 1];
    for i in 1..n {
        let s = lat.cumulative(i);
        for k in 0..=steps {
            let mut best = f64::NEG_INFINITY;
            for l in 0..=k {
                best = best.max(prev[l] - s[l]);
            }
            cur[k] = best + s[k];
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[steps]
}

const DP_STEP_CAP: usize = 100_000;

/// Ordered-tuple oracle for the terminal top value of the wall stack:
/// exhaustive enumeration on small grids, max-plus table beyond.
pub fn lpp_oracle_wall(lat: &BrownianLattice) -> Result<f64> {
    if lat.grid().steps() <= 12 && lat.rows() <= 4 {
        lpp_exhaustive_wall(lat)
    } else if lat.grid().steps() <= DP_STEP_CAP {
        Ok(lpp_dp_wall(lat))
    } else {
        Err(Error::CapacityExceeded {
            n: lat.rows(),
            steps: lat.grid().steps(),
        })
    }
}

/// Ordered-tuple oracle for the terminal top value of the free stack.
pub fn lpp_oracle_free(lat: &BrownianLattice) -> Result<f64> {
    if lat.grid().steps() <= 12 && lat.rows() <= 4 {
        lpp_exhaustive_free(lat)
    } else if lat.grid().steps() <= DP_STEP_CAP {
        Ok(lpp_dp_free(lat))
    } else {
        Err(Error::CapacityExceeded {
            n: lat.rows(),
            steps: lat.grid().steps(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::trajectory_rng;
    use crate::grid::{sample_lattice, BrownianLattice, TimeGrid};
    use approx::assert_abs_diff_eq;

    fn random_lattice(seed: u64, n: usize, steps: usize) -> BrownianLattice {
        let grid = TimeGrid::new(1.0, steps).unwrap();
        sample_lattice(grid, n, &mut trajectory_rng(seed, 0))
    }

    #[test]
    fn single_free_path_is_the_random_walk() {
        let lat = random_lattice(1, 1, 16);
        let z = z_process(&lat);
        assert_eq!(z.path(0), lat.cumulative(0).as_slice());
    }

    #[test]
    fn single_wall_path_matches_both_skorokhod_forms() {
        let lat = random_lattice(2, 1, 64);
        let y = y_process(&lat);
        let s = lat.cumulative(0);
        for k in 0..=64 {
            // sup_{l<=k} (S(k) - S(l)) computed directly.
            let sup = (0..=k).map(|l| s[k] - s[l]).fold(f64::NEG_INFINITY, f64::max);
            assert_abs_diff_eq!(y.path(0)[k], sup, epsilon = 1e-12);
            assert!(y.path(0)[k] >= 0.0);
        }
    }

    #[test]
    fn all_negative_noise_pins_wall_path_at_zero() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let lat = BrownianLattice::from_increments(grid, vec![vec![-0.3; 10]]).unwrap();
        let y = y_process(&lat);
        assert!(y.path(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ordering_invariants_hold() {
        for seed in 0..40 {
            let lat = random_lattice(seed, 5, 50);
            assert!(z_process(&lat).respects_order());
            assert!(y_process(&lat).respects_order());
        }
    }

    #[test]
    fn running_max_dominates_terminal_and_handles_constants() {
        let lat = random_lattice(9, 3, 40);
        let z = z_process(&lat);
        for row in 0..3 {
            let m = running_max(&z, row).unwrap();
            assert!(m >= *z.path(row).last().unwrap());
        }
        assert!(matches!(running_max(&z, 3), Err(Error::BadRow(3, 3))));

        let grid = TimeGrid::new(1.0, 5).unwrap();
        let flat = BrownianLattice::from_increments(grid, vec![vec![0.0; 5]]).unwrap();
        assert_eq!(running_max(&z_process(&flat), 0).unwrap(), 0.0);
    }

    #[test]
    fn recursion_equals_exhaustive_and_dp_oracles() {
        for seed in 0..60 {
            let n = 1 + (seed as usize % 4);
            let steps = 3 + (seed as usize % 9);
            let lat = random_lattice(seed + 100, n, steps);

            let z_term = z_process(&lat).top_terminal();
            assert_abs_diff_eq!(z_term, lpp_exhaustive_free(&lat).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(z_term, lpp_dp_free(&lat), epsilon = 1e-12);

            let y_term = y_process(&lat).top_terminal();
            assert_abs_diff_eq!(y_term, lpp_exhaustive_wall(&lat).unwrap(), epsilon = 1e-12);
            assert_abs_diff_eq!(y_term, lpp_dp_wall(&lat), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_row_wall_oracle_is_direct_max() {
        let lat = random_lattice(7, 1, 12);
        let s = lat.cumulative(0);
        let direct = (0..=12)
            .map(|k| s[12] - s[k])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(lpp_oracle_wall(&lat).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn oracle_capacity_limits() {
        let lat = random_lattice(3, 5, 40);
        assert!(matches!(
            lpp_exhaustive_wall(&lat),
            Err(Error::CapacityExceeded { .. })
        ));
        assert!(lpp_oracle_wall(&lat).is_ok());
    }

    #[test]
    fn reversal_sends_wall_terminal_to_free_running_max() {
        // Pathwise grid-level identity: the wall-stack terminal value on a
        // lattice equals the running max of the free stack on the reversed
        // lattice.
        for seed in 0..50 {
            let n = 1 + (seed as usize % 4);
            let lat = random_lattice(seed + 500, n, 30);
            let y_term = y_process(&lat).top_terminal();
            let z_rev = z_process(&lat.reversed());
            let sup = running_max(&z_rev, n - 1).unwrap();
            assert_abs_diff_eq!(y_term, sup, epsilon = 1e-12);
        }
    }

    #[test]
    fn raising_top_noise_raises_top_terminal() {
        let lat = random_lattice(13, 3, 25);
        let z_before = z_process(&lat).top_terminal();
        let grid = lat.grid();
        let mut rows: Vec<Vec<f64>> = (0..3).map(|i| lat.increments(i).to_vec()).collect();
        for v in &mut rows[2] {
            *v += 0.05;
        }
        let bumped = BrownianLattice::from_increments(grid, rows).unwrap();
        assert!(z_process(&bumped).top_terminal() >= z_before);
    }
}
