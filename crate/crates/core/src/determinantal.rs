//! Exact transition and entrance densities for the wall systems: absorbed /
//! reflected non-colliding densities, their h-transform semigroups, and the
//! determinantal density of the reflected stack with a wall.

use std::collections::HashMap;
use std::sync::{LazyLock, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chamber::ProcessKind;
use crate::error::{Error, Result};
use crate::heat_kernel::{a_kernel_unchecked, phi_unchecked};
use crate::quadrature;

/// Largest matrix order accepted by the determinant evaluator.
pub const DET_MAX: usize = 16;

/// Largest stack size accepted by the reflected-stack density.
pub const Q_MAX: usize = 8;

/// Determinant by Gaussian elimination with partial pivoting and exact sign
/// tracking. Singular matrices evaluate to zero within rounding.
pub fn det_eval(matrix: &[Vec<f64>]) -> Result<f64> {
    let n = matrix.len();
    if n > DET_MAX {
        return Err(Error::MatrixTooLarge(n, DET_MAX));
    }
    for row in matrix {
        if row.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    let mut flat = Vec::with_capacity(n * n);
    for row in matrix {
        flat.extend_from_slice(row);
    }
    Ok(det_in_place(&mut flat, n))
}

fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    let mut sign = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            sign = -sign;
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
            }
        }
    }
    let mut det = sign;
    for i in 0..n {
        det *= a[i * n + i];
    }
    det
}

fn det_from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> f64 {
    let mut flat = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            flat[i * n + j] = f(i, j);
        }
    }
    det_in_place(&mut flat, n)
}

/// Chamber weight for any kind, including the plain Vandermonde for type A.
pub(crate) fn h_general(kind: ProcessKind, x: &[f64]) -> f64 {
    match kind {
        ProcessKind::TypeA { .. } => {
            let mut prod = 1.0;
            for j in 1..x.len() {
                for i in 0..j {
                    prod *= x[j] - x[i];
                }
            }
            prod
        }
        ProcessKind::TypeC { .. } => {
            let mut prod: f64 = x.iter().product();
            for j in 1..x.len() {
                for i in 0..j {
                    prod *= x[j] * x[j] - x[i] * x[i];
                }
            }
            prod
        }
        ProcessKind::TypeD { .. } => {
            let mut prod = 1.0;
            for j in 1..x.len() {
                for i in 0..j {
                    prod *= x[j] * x[j] - x[i] * x[i];
                }
            }
            prod
        }
    }
}

/// Harmonic chamber weight: prod x_i * prod (x_j^2 - x_i^2) for type C,
/// prod (x_j^2 - x_i^2) for type D. Vanishes exactly on the chamber boundary.
pub fn h_value(kind: ProcessKind, x: &[f64]) -> Result<f64> {
    if matches!(kind, ProcessKind::TypeA { .. }) {
        return Err(Error::UnsupportedKind("A"));
    }
    check_len(kind, x)?;
    Ok(h_general(kind, x))
}

fn check_len(kind: ProcessKind, x: &[f64]) -> Result<()> {
    if x.len() != kind.particle_count() {
        return Err(Error::ShapeMismatch {
            expected: kind.particle_count(),
            got: x.len(),
        });
    }
    Ok(())
}

fn check_chamber_closed(kind: ProcessKind, x: &[f64]) -> Result<()> {
    check_len(kind, x)?;
    if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnorderedInput);
    }
    match kind {
        ProcessKind::TypeA { .. } => {}
        ProcessKind::TypeC { .. } | ProcessKind::TypeD { .. } => {
            if x[0] < 0.0 {
                return Err(Error::UnorderedInput);
            }
        }
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    Ok(())
}

pub(crate) fn km_density_raw(kind: ProcessKind, t: f64, x: &[f64], x_to: &[f64]) -> f64 {
    let n = x.len();
    match kind {
        ProcessKind::TypeA { .. } => {
            det_from_fn(n, |i, j| phi_unchecked(t, x[i] - x_to[j]))
        }
        ProcessKind::TypeC { .. } => det_from_fn(n, |i, j| {
            phi_unchecked(t, x[i] - x_to[j]) - phi_unchecked(t, x[i] + x_to[j])
        }),
        ProcessKind::TypeD { .. } => det_from_fn(n, |i, j| {
            phi_unchecked(t, x[i] - x_to[j]) + phi_unchecked(t, x[i] + x_to[j])
        }),
    }
}

/// Karlin-McGregor density of m independent Brownian motions killed (type C)
/// or reflected (type D) at the wall and killed on collision.
pub fn km_density(kind: ProcessKind, t: f64, x: &[f64], x_to: &[f64]) -> Result<f64> {
    if matches!(kind, ProcessKind::TypeA { .. }) {
        return Err(Error::UnsupportedKind("A"));
    }
    check_time(t)?;
    check_chamber_closed(kind, x)?;
    check_chamber_closed(kind, x_to)?;
    Ok(km_density_raw(kind, t, x, x_to))
}

pub(crate) fn ht_density_raw(kind: ProcessKind, t: f64, x: &[f64], x_to: &[f64]) -> f64 {
    h_general(kind, x_to) * km_density_raw(kind, t, x, x_to) / h_general(kind, x)
}

/// h-transform transition density h(x') km_t(x, x') / h(x) of the
/// non-colliding wall system; integrates to one over the chamber.
pub fn ht_density(kind: ProcessKind, t: f64, x: &[f64], x_to: &[f64]) -> Result<f64> {
    if matches!(kind, ProcessKind::TypeA { .. }) {
        return Err(Error::UnsupportedKind("A"));
    }
    check_time(t)?;
    check_chamber_closed(kind, x)?;
    check_chamber_closed(kind, x_to)?;
    if h_general(kind, x) == 0.0 {
        return Err(Error::BoundaryStart);
    }
    Ok(ht_density_raw(kind, t, x, x_to))
}

pub(crate) fn q_density_raw(t: f64, y: &[f64], y_to: &[f64]) -> f64 {
    let n = y.len();
    det_from_fn(n, |i, j| a_kernel_unchecked(t, i + 1, j + 1, y[i], y_to[j]))
}

fn check_ordered_nonneg(y: &[f64]) -> Result<()> {
    if y.iter().any(|v| !v.is_finite())
        || y.first().is_some_and(|&v| v < 0.0)
        || y.windows(2).any(|w| w[0] > w[1])
    {
        return Err(Error::UnorderedInput);
    }
    Ok(())
}

/// Transition density of the reflected stack with a wall, as the n x n
/// determinant of the signed two-point kernel. Rows follow the start point,
/// columns the end point.
pub fn q_density(t: f64, y: &[f64], y_to: &[f64]) -> Result<f64> {
    check_time(t)?;
    if y.len() != y_to.len() {
        return Err(Error::ShapeMismatch {
            expected: y.len(),
            got: y_to.len(),
        });
    }
    if y.len() > Q_MAX {
        return Err(Error::MatrixTooLarge(y.len(), Q_MAX));
    }
    if y.is_empty() {
        return Err(Error::InvalidParameter("empty state".to_string()));
    }
    check_ordered_nonneg(y)?;
    check_ordered_nonneg(y_to)?;
    Ok(q_density_raw(t, y, y_to))
}

fn richardson(f_coarse: f64, f_fine: f64, order: f64) -> f64 {
    let w = 2.0f64.powf(order);
    (w * f_fine - f_coarse) / (w - 1.0)
}

/// Unnormalized origin-entrance value for the chamber processes, from
/// Richardson extrapolation of the interior transition density along
/// x = eps * (1, 2, ..., m).
pub(crate) fn entrance_unnormalized(kind: ProcessKind, t: f64, x_to: &[f64]) -> Result<f64> {
    check_time(t)?;
    check_chamber_closed(kind, x_to)?;
    let m = kind.particle_count();
    let base: Vec<f64> = (1..=m).map(|i| i as f64).collect();
    let eps0 = 0.1 * t.sqrt() / m as f64;
    let eval = |eps: f64| -> f64 {
        let x: Vec<f64> = base.iter().map(|b| b * eps).collect();
        ht_density_raw(kind, t, &x, x_to)
    };
    let f0 = eval(eps0);
    let f1 = eval(0.5 * eps0);
    let f2 = eval(0.25 * eps0);
    // Leading correction is O(eps) for type A (no parity symmetry) and
    // O(eps^2) for the wall types, which are even in each coordinate.
    let p = if matches!(kind, ProcessKind::TypeA { .. }) {
        1.0
    } else {
        2.0
    };
    let r1 = richardson(f0, f1, p);
    let r2 = richardson(f1, f2, p);
    let floor = 1e-12 * t.powf(-(m as f64) / 2.0);
    let scale = r1.abs().max(r2.abs()).max(floor);
    let rel_diff = (r1 - r2).abs() / scale;
    if rel_diff > 0.01 {
        return Err(Error::ExtrapolationDiverged { rel_diff });
    }
    Ok(richardson(r1, r2, p + 1.0))
}

/// Unnormalized origin-entrance value of the reflected stack: the transition
/// determinant evaluated at the all-zero start, which stays nondegenerate.
pub(crate) fn y_entrance_unnormalized(n: usize, t: f64, y_to: &[f64]) -> Result<f64> {
    check_time(t)?;
    if n == 0 || n > Q_MAX {
        return Err(Error::MatrixTooLarge(n, Q_MAX));
    }
    if y_to.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: y_to.len(),
        });
    }
    check_ordered_nonneg(y_to)?;
    Ok(q_density_raw(t, &vec![0.0; n], y_to))
}

#[derive(PartialEq, Eq, Hash)]
struct NormKey {
    label: &'static str,
    count: usize,
    t_bits: u64,
}

static NORM_CACHE: LazyLock<Mutex<HashMap<NormKey, f64>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn cached_norm(
    label: &'static str,
    count: usize,
    t: f64,
    compute: impl FnOnce() -> Result<f64>,
) -> Result<f64> {
    let key = NormKey {
        label,
        count,
        t_bits: t.to_bits(),
    };
    if let Some(&v) = NORM_CACHE.lock().unwrap().get(&key) {
        return Ok(v);
    }
    // Computed outside the lock; a racing fill writes the same value.
    let v = compute()?;
    NORM_CACHE.lock().unwrap().insert(key, v);
    Ok(v)
}

/// Importance-sampled mass of an ordered-cone density, used where nested
/// quadrature would be too deep. Deterministic for a given key.
fn mc_mass(
    dim: usize,
    t: f64,
    wall: bool,
    seed: u64,
    density: impl Fn(&[f64]) -> Result<f64>,
) -> Result<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sigma = 2.0 * (t * dim as f64).sqrt();
    let log_fact: f64 = (1..=dim).map(|i| (i as f64).ln()).sum();
    let trials = 2_000_000usize;
    let mut acc = 0.0;
    for _ in 0..trials {
        let mut x: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if wall {
                    sigma * z.abs()
                } else {
                    sigma * z
                }
            })
            .collect();
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut log_q = log_fact;
        for &v in &x {
            let mut p = phi_unchecked(sigma * sigma, v);
            if wall {
                p *= 2.0;
            }
            log_q += p.ln();
        }
        // Extrapolation can only fail deep in the tail where the density is
        // at roundoff level; count those points as zero mass.
        let target = density(&x).unwrap_or(0.0);
        acc += target / log_q.exp();
    }
    Ok(acc / trials as f64)
}

fn entrance_mass(kind: ProcessKind, t: f64) -> Result<f64> {
    let m = kind.particle_count();
    let scale = 2.0 * t.sqrt() * (m as f64).sqrt();
    let tol = 1e-8;
    match (kind, m) {
        (ProcessKind::TypeA { .. }, 1) => Ok(quadrature::integrate_line(
            |x| entrance_unnormalized(kind, t, &[x]).unwrap_or(0.0),
            0.0,
            scale,
            tol,
        )),
        (ProcessKind::TypeA { .. }, 2) => Ok(quadrature::integrate_ordered_pair_line(
            |a, b| {
                if a < b {
                    entrance_unnormalized(kind, t, &[a, b]).unwrap_or(0.0)
                } else {
                    0.0
                }
            },
            0.0,
            scale,
            tol,
        )),
        (_, 1) => Ok(quadrature::integrate_semi_inf(
            |x| entrance_unnormalized(kind, t, &[x]).unwrap_or(0.0),
            0.0,
            scale,
            tol,
        )),
        (_, 2) => Ok(quadrature::integrate_ordered_pair(
            |a, b| entrance_unnormalized(kind, t, &[a, b]).unwrap_or(0.0),
            scale,
            tol,
        )),
        _ => mc_mass(
            m,
            t,
            !matches!(kind, ProcessKind::TypeA { .. }),
            0x9e37_79b9 ^ (m as u64) ^ t.to_bits(),
            |x| entrance_unnormalized(kind, t, x),
        ),
    }
}

/// Normalized entrance density at time t for a chamber process started at the
/// origin. The normalization constant is computed once per (kind, t) and
/// cached.
pub fn entrance_density(kind: ProcessKind, t: f64, x_to: &[f64]) -> Result<f64> {
    let raw = entrance_unnormalized(kind, t, x_to)?;
    let mass = cached_norm(kind.label(), kind.particle_count(), t, || {
        entrance_mass(kind, t)
    })?;
    Ok(raw / mass)
}

fn y_entrance_mass(n: usize, t: f64) -> Result<f64> {
    let scale = 2.0 * t.sqrt() * (n as f64).sqrt();
    let tol = 1e-8;
    match n {
        1 => Ok(quadrature::integrate_semi_inf(
            |y| y_entrance_unnormalized(1, t, &[y]).unwrap_or(0.0),
            0.0,
            scale,
            tol,
        )),
        2 => Ok(quadrature::integrate_ordered_pair(
            |a, b| y_entrance_unnormalized(2, t, &[a, b]).unwrap_or(0.0),
            scale,
            tol,
        )),
        _ => mc_mass(n, t, true, 0x51ab_7e1d ^ (n as u64) ^ t.to_bits(), |y| {
            y_entrance_unnormalized(n, t, y)
        }),
    }
}

/// Normalized entrance density of the reflected stack started at the origin.
pub fn entrance_density_y(n: usize, t: f64, y_to: &[f64]) -> Result<f64> {
    let raw = y_entrance_unnormalized(n, t, y_to)?;
    let mass = cached_norm("Y", n, t, || y_entrance_mass(n, t))?;
    Ok(raw / mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    const C2: ProcessKind = ProcessKind::TypeC { m: 2 };
    const C1: ProcessKind = ProcessKind::TypeC { m: 1 };
    const D1: ProcessKind = ProcessKind::TypeD { m: 1 };
    const D2: ProcessKind = ProcessKind::TypeD { m: 2 };

    fn cofactor_det(m: &[Vec<f64>]) -> f64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        let mut acc = 0.0;
        for j in 0..n {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter_map(|(c, &v)| (c != j).then_some(v))
                        .collect()
                })
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[0][j] * cofactor_det(&minor);
        }
        acc
    }

    #[test]
    fn det_identity_is_one() {
        let id = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert_eq!(det_eval(&id).unwrap(), 1.0);
    }

    #[test]
    fn det_scales_with_a_row() {
        let m = vec![vec![2.0, 1.0], vec![0.5, 3.0]];
        let mut scaled = m.clone();
        for v in &mut scaled[1] {
            *v *= -4.0;
        }
        assert_relative_eq!(
            det_eval(&scaled).unwrap(),
            -4.0 * det_eval(&m).unwrap(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn det_matches_cofactor_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let m: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let lu = det_eval(&m).unwrap();
            let co = cofactor_det(&m);
            assert_relative_eq!(lu, co, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn det_singular_is_zero() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_abs_diff_eq!(det_eval(&m).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn det_rejects_oversized() {
        let m = vec![vec![0.0; 17]; 17];
        assert!(matches!(det_eval(&m), Err(Error::MatrixTooLarge(17, 16))));
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_value(D1, &[3.7]).unwrap(), 1.0);
        assert_eq!(h_value(C2, &[1.0, 2.0]).unwrap(), 6.0);
        assert_eq!(h_general(C2, &[1.0, 1.0]), 0.0);
        assert!(matches!(
            h_value(ProcessKind::TypeA { n: 2 }, &[0.0, 1.0]),
            Err(Error::UnsupportedKind("A"))
        ));
    }

    #[test]
    fn km_one_particle_values() {
        let refl = km_density(D1, 1.0, &[0.5], &[0.8]).unwrap();
        let expect = phi_unchecked(1.0, 0.3) + phi_unchecked(1.0, 1.3);
        assert_relative_eq!(refl, expect, epsilon = 1e-14);
        assert_relative_eq!(refl, 0.552_756_407_5, epsilon = 1e-9);

        let abs = km_density(C1, 1.0, &[0.5], &[0.5]).unwrap();
        let expect = phi_unchecked(1.0, 0.0) - phi_unchecked(1.0, 1.0);
        assert_relative_eq!(abs, expect, epsilon = 1e-14);
        assert_relative_eq!(abs, 0.156_971_555_9, epsilon = 1e-9);
    }

    #[test]
    fn km_dimension_mismatch() {
        assert!(matches!(
            km_density(C2, 1.0, &[0.5, 1.0], &[0.5]),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn km_chapman_kolmogorov_two_particles() {
        let (t, s) = (0.35, 0.25);
        let x = [0.6, 1.4];
        let x_to = [0.9, 1.8];
        let direct = km_density(C2, t + s, &x, &x_to).unwrap();
        let composed = quadrature::integrate_ordered_pair(
            |u1, u2| {
                km_density_raw(C2, t, &x, &[u1, u2]) * km_density_raw(C2, s, &[u1, u2], &x_to)
            },
            1.2,
            1e-9,
        );
        assert_abs_diff_eq!(composed, direct, epsilon = 1e-6);
    }

    #[test]
    fn h_is_invariant_under_killed_semigroup() {
        // int km_t(x, x') h(x') dx' = h(x), checked for m = 1 and m = 2.
        let t = 0.5;
        let x1 = [0.9];
        let lhs = quadrature::integrate_semi_inf(
            |u| km_density_raw(C1, t, &x1, &[u]) * u,
            0.0,
            1.5,
            1e-9,
        );
        assert_abs_diff_eq!(lhs, 0.9, epsilon = 1e-5);

        let x2 = [0.7, 1.5];
        for kind in [C2, D2] {
            let lhs = quadrature::integrate_ordered_pair(
                |u1, u2| km_density_raw(kind, t, &x2, &[u1, u2]) * h_general(kind, &[u1, u2]),
                1.2,
                1e-8,
            );
            assert_abs_diff_eq!(lhs, h_general(kind, &x2), epsilon = 1e-5);
        }
    }

    #[test]
    fn ht_reduces_to_km_for_single_reflected_particle() {
        let ht = ht_density(D1, 1.0, &[0.4], &[1.1]).unwrap();
        let km = km_density(D1, 1.0, &[0.4], &[1.1]).unwrap();
        assert_eq!(ht, km);
    }

    #[test]
    fn ht_integrates_to_one() {
        let total = quadrature::integrate_semi_inf(
            |u| ht_density_raw(C1, 1.0, &[0.5], &[u]),
            0.0,
            2.0,
            1e-10,
        );
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn ht_boundary_start_is_an_error() {
        assert!(matches!(
            ht_density(C2, 1.0, &[0.0, 1.0], &[0.5, 1.5]),
            Err(Error::BoundaryStart)
        ));
    }

    #[test]
    fn q_single_particle_is_reflected_kernel() {
        let q = q_density(1.0, &[0.4], &[0.9]).unwrap();
        let expect = phi_unchecked(1.0, 0.5) + phi_unchecked(1.0, 1.3);
        assert_relative_eq!(q, expect, epsilon = 1e-14);
    }

    #[test]
    fn q_rejects_unordered_and_oversized() {
        assert!(matches!(
            q_density(1.0, &[0.9, 0.2], &[0.4, 1.1]),
            Err(Error::UnorderedInput)
        ));
        assert!(matches!(
            q_density(1.0, &[-0.1, 0.2], &[0.4, 1.1]),
            Err(Error::UnorderedInput)
        ));
        let y = vec![0.5; 9];
        assert!(matches!(
            q_density(1.0, &y, &y),
            Err(Error::MatrixTooLarge(9, 8))
        ));
    }

    #[test]
    fn q_nonnegative_on_ordered_cone() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.5)).collect();
            let mut y2: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.5)).collect();
            y.sort_by(|a, b| a.partial_cmp(b).unwrap());
            y2.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q = q_density(0.7, &y, &y2).unwrap();
            assert!(q >= -1e-12, "q = {q} at {y:?} -> {y2:?}");
        }
    }

    #[test]
    fn q_normalization_two_particles() {
        let total = quadrature::integrate_ordered_pair(
            |a, b| q_density_raw(1.0, &[0.2, 0.9], &[a, b]),
            1.4,
            1e-8,
        );
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn q_semigroup_two_particles() {
        let (t, s) = (0.4, 0.3);
        let y = [0.3, 1.0];
        let y_to = [0.6, 1.6];
        let direct = q_density_raw(t + s, &y, &y_to);
        let composed = quadrature::integrate_ordered_pair(
            |a, b| q_density_raw(t, &y, &[a, b]) * q_density_raw(s, &[a, b], &y_to),
            1.2,
            1e-9,
        );
        assert_abs_diff_eq!(composed, direct, epsilon = 1e-6);
    }

    #[test]
    fn entrance_single_wall_particle_laws() {
        // Type D from the origin is half-normal; type C is the Maxwell
        // (chi-3) law. Both in closed form for m = 1.
        for &x in &[0.3, 0.9, 1.7, 2.6] {
            let d = entrance_density(D1, 1.0, &[x]).unwrap();
            assert_relative_eq!(d, 2.0 * phi_unchecked(1.0, x), epsilon = 1e-6);
            let c = entrance_density(C1, 1.0, &[x]).unwrap();
            let maxwell = (2.0 / std::f64::consts::PI).sqrt() * x * x * (-0.5 * x * x).exp();
            assert_relative_eq!(c, maxwell, epsilon = 1e-5);
        }
    }

    #[test]
    fn entrance_respects_time_scaling() {
        let t = 0.5;
        let x = 0.8;
        let c = entrance_density(C1, t, &[x]).unwrap();
        let u = x / t.sqrt();
        let maxwell =
            (2.0 / std::f64::consts::PI).sqrt() * u * u * (-0.5 * u * u).exp() / t.sqrt();
        assert_relative_eq!(c, maxwell, epsilon = 1e-5);
    }

    #[test]
    fn y_entrance_small_stacks() {
        for &y in &[0.4, 1.2, 2.1] {
            let v = entrance_density_y(1, 1.0, &[y]).unwrap();
            assert_relative_eq!(v, 2.0 * phi_unchecked(1.0, y), epsilon = 1e-7);
        }
        // n = 2: the determinant at an all-zero start collapses to
        // -2 phi'(y2) = 2 (y2 / t) phi(y2), independent of y1.
        let t = 1.3;
        let (y1, y2) = (0.4, 1.1);
        let v = y_entrance_unnormalized(2, t, &[y1, y2]).unwrap();
        assert_relative_eq!(
            v,
            2.0 * (y2 / t) * phi_unchecked(t, y2),
            epsilon = 1e-12
        );
        // And that collapsed form integrates to one over the ordered cone,
        // so the cached normalization is close to unity.
        let d = entrance_density_y(2, t, &[y1, y2]).unwrap();
        assert_relative_eq!(d, v, epsilon = 1e-5);
    }

    #[test]
    fn entrance_norm_cache_is_thread_safe() {
        let t = 0.77;
        let vals: Vec<f64> = std::thread::scope(|s| {
            (0..4)
                .map(|_| s.spawn(move || entrance_density(C1, t, &[0.9]).unwrap()))
                .collect::<Vec<_>>()
                .into_iter()
                .map(|h| h.join().unwrap())
                .collect()
        });
        for v in &vals {
            assert_eq!(*v, vals[0]);
        }
    }
}
