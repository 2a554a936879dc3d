//! Euler-Maruyama simulation of the non-colliding particle systems,
//! including entrance from the origin.
//!
//! Singular drifts are handled by substep halving with retry: a step that
//! leaves the chamber is replayed as two half steps with the noise split
//! evenly, recursively, down to dt * 2^-20. The reflected system realizes
//! its boundary local time by taking the absolute value of the lowest
//! coordinate after each update.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::chamber::{OrderedConfig, ProcessKind};
use crate::determinantal::entrance_unnormalized;
use crate::ensemble::trajectory_rng;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Instantaneous state of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeState {
    pub config: OrderedConfig,
    pub time: f64,
}

const MAX_HALVINGS: u32 = 20;

fn drift_into(kind: ProcessKind, x: &[f64], out: &mut [f64]) {
    let m = x.len();
    for i in 0..m {
        let mut d = 0.0;
        match kind {
            ProcessKind::TypeA { .. } => {
                for j in 0..m {
                    if j != i {
                        d += 1.0 / (x[i] - x[j]);
                    }
                }
            }
            ProcessKind::TypeC { .. } => {
                d += 1.0 / x[i];
                for j in 0..m {
                    if j != i {
                        d += 1.0 / (x[i] - x[j]) + 1.0 / (x[i] + x[j]);
                    }
                }
            }
            ProcessKind::TypeD { .. } => {
                for j in 0..m {
                    if j != i {
                        d += 1.0 / (x[i] - x[j]) + 1.0 / (x[i] + x[j]);
                    }
                }
            }
        }
        out[i] = d;
    }
}

fn chamber_ok(kind: ProcessKind, x: &[f64]) -> bool {
    if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[0] >= w[1]) {
        return false;
    }
    match kind {
        ProcessKind::TypeA { .. } => true,
        ProcessKind::TypeC { .. } => x[0] > 0.0,
        ProcessKind::TypeD { .. } => x[0] >= 0.0,
    }
}

fn euler_sub(
    kind: ProcessKind,
    x: &mut Vec<f64>,
    dt: f64,
    noise: &[f64],
    dt_min: f64,
    t: f64,
) -> Result<()> {
    let m = x.len();
    let mut drift = vec![0.0; m];
    drift_into(kind, x, &mut drift);
    let mut proposal: Vec<f64> = (0..m).map(|i| x[i] + drift[i] * dt + noise[i]).collect();
    if matches!(kind, ProcessKind::TypeD { .. }) {
        proposal[0] = proposal[0].abs();
    }
    if chamber_ok(kind, &proposal) {
        *x = proposal;
        return Ok(());
    }
    if dt <= dt_min {
        return Err(Error::StiffStep { dt_min, t });
    }
    let half: Vec<f64> = noise.iter().map(|w| 0.5 * w).collect();
    euler_sub(kind, x, 0.5 * dt, &half, dt_min, t)?;
    euler_sub(kind, x, 0.5 * dt, &half, dt_min, t + 0.5 * dt)
}

/// One explicit Euler update with the kind's singular drift; the substep is
/// halved and retried whenever the proposal leaves the chamber.
pub fn step_dyson(state: &SdeState, dt: f64, noise: &[f64]) -> Result<SdeState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveTime(dt));
    }
    let kind = state.config.kind();
    let m = kind.particle_count();
    if noise.len() != m {
        return Err(Error::ShapeMismatch {
            expected: m,
            got: noise.len(),
        });
    }
    let mut x = state.config.positions().to_vec();
    let dt_min = dt * 2.0_f64.powi(-(MAX_HALVINGS as i32));
    euler_sub(kind, &mut x, dt, noise, dt_min, state.time)?;
    Ok(SdeState {
        config: OrderedConfig::new(kind, x)?,
        time: state.time + dt,
    })
}

#[derive(Clone, Copy)]
struct EnvelopeSpec {
    sigma: f64,
    bound: f64,
}

static ENVELOPE_CACHE: std::sync::LazyLock<
    std::sync::Mutex<std::collections::HashMap<(&'static str, usize, u64), EnvelopeSpec>>,
> = std::sync::LazyLock::new(|| std::sync::Mutex::new(std::collections::HashMap::new()));

fn envelope_spec_cached(kind: ProcessKind, t0: f64) -> Result<EnvelopeSpec> {
    let key = (kind.label(), kind.particle_count(), t0.to_bits());
    if let Some(spec) = ENVELOPE_CACHE.lock().unwrap().get(&key) {
        return Ok(*spec);
    }
    let spec = envelope_spec(kind, t0)?;
    ENVELOPE_CACHE.lock().unwrap().insert(key, spec);
    Ok(spec)
}

/// Product (half-)normal proposal wide enough to dominate the entrance law;
/// the envelope constant is estimated from deterministic probes and inflated.
fn envelope_spec(kind: ProcessKind, t0: f64) -> Result<EnvelopeSpec> {
    let m = kind.particle_count();
    let sigma = (3.0 * t0 * m as f64).sqrt();
    let mut probe_rng = trajectory_rng(0x4a5f_113d ^ t0.to_bits(), m as u64);
    let mut bound = 0.0_f64;
    let mut found = false;
    for _ in 0..2000 {
        if let Some(x) = propose(kind, sigma, &mut probe_rng) {
            let target = entrance_unnormalized(kind, t0, &x).unwrap_or(0.0);
            if target > 0.0 {
                found = true;
                bound = bound.max(target / proposal_density(kind, sigma, &x));
            }
        }
    }
    if !found {
        return Err(Error::EnvelopeFailure {
            min_rate: 1e-4,
            attempts: 2000,
        });
    }
    Ok(EnvelopeSpec {
        sigma,
        bound: 1.5 * bound,
    })
}

fn propose<R: Rng + ?Sized>(kind: ProcessKind, sigma: f64, rng: &mut R) -> Option<Vec<f64>> {
    let m = kind.particle_count();
    let wall = !matches!(kind, ProcessKind::TypeA { .. });
    let mut x: Vec<f64> = (0..m)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if wall {
                sigma * z.abs()
            } else {
                sigma * z
            }
        })
        .collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if x.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(x)
}

fn proposal_density(kind: ProcessKind, sigma: f64, x: &[f64]) -> f64 {
    let wall = !matches!(kind, ProcessKind::TypeA { .. });
    let mut dens = (1..=x.len()).map(|i| i as f64).product::<f64>();
    for &v in x {
        let p = crate::heat_kernel::phi_unchecked(sigma * sigma, v);
        dens *= if wall { 2.0 * p } else { p };
    }
    dens
}

const ENVELOPE_MIN_RATE: f64 = 1e-4;
const ENVELOPE_MAX_ATTEMPTS: u64 = 200_000;

/// Draw one configuration from the origin-entrance law at time t0 by
/// rejection against the product envelope.
pub fn sample_entrance<R: Rng + ?Sized>(
    kind: ProcessKind,
    t0: f64,
    rng: &mut R,
) -> Result<OrderedConfig> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::NonPositiveTime(t0));
    }
    let spec = envelope_spec_cached(kind, t0)?;
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if attempts > ENVELOPE_MAX_ATTEMPTS {
            return Err(Error::EnvelopeFailure {
                min_rate: ENVELOPE_MIN_RATE,
                attempts,
            });
        }
        let Some(x) = propose(kind, spec.sigma, rng) else {
            continue;
        };
        let target = entrance_unnormalized(kind, t0, &x).unwrap_or(0.0);
        if target <= 0.0 {
            continue;
        }
        let cap = spec.bound * proposal_density(kind, spec.sigma, &x);
        if rng.random::<f64>() * cap <= target {
            return OrderedConfig::new(kind, x);
        }
    }
}

/// One trajectory run from the origin: terminal state plus the number of
/// stiffness discards it took to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginRun {
    pub terminal: OrderedConfig,
    pub discards: u32,
}

/// Warm-start fraction of the horizon at which the entrance sample replaces
/// the origin.
pub const WARM_START_FRACTION: f64 = 1e-3;

/// Simulate one trajectory of the chosen system from the origin up to t_end.
///
/// The paper-level statement only asserts that an origin start exists; this
/// is a numerical surrogate: the state is drawn from the entrance law at
/// t0 = WARM_START_FRACTION * t_end (rounded up to a grid point) and then
/// integrated with the grid's step. A trajectory hitting the stiffness limit
/// is discarded and redrawn with a fresh derived stream, and the discard
/// count is reported.
pub fn simulate_from_origin(
    kind: ProcessKind,
    t_end: f64,
    grid: &TimeGrid,
    rng: &mut ChaCha12Rng,
) -> Result<OriginRun> {
    simulate_from_origin_at(kind, t_end, grid, WARM_START_FRACTION, rng)
}

/// Same as [`simulate_from_origin`] with an explicit warm-start fraction,
/// used by the sensitivity checks.
pub fn simulate_from_origin_at(
    kind: ProcessKind,
    t_end: f64,
    grid: &TimeGrid,
    kappa: f64,
    rng: &mut ChaCha12Rng,
) -> Result<OriginRun> {
    if (grid.t_end() - t_end).abs() > 1e-12 * t_end.max(1.0) {
        return Err(Error::InvalidParameter(
            "grid horizon does not match t_end".to_string(),
        ));
    }
    if !(0.0 < kappa && kappa < 1.0) {
        return Err(Error::InvalidParameter(
            "warm-start fraction must lie in (0, 1)".to_string(),
        ));
    }
    let steps = grid.steps();
    let dt = grid.dt();
    let k0 = ((kappa * steps as f64).ceil() as usize).clamp(1, steps);
    let m = kind.particle_count();

    let mut discards = 0u32;
    'redraw: loop {
        if discards > 100 {
            return Err(Error::StiffStep {
                dt_min: dt * 2.0_f64.powi(-(MAX_HALVINGS as i32)),
                t: t_end,
            });
        }
        let config = sample_entrance(kind, k0 as f64 * dt, rng)?;
        let mut state = SdeState {
            config,
            time: k0 as f64 * dt,
        };
        let mut noise = vec![0.0; m];
        for _ in k0..steps {
            for w in noise.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *w = dt.sqrt() * z;
            }
            match step_dyson(&state, dt, &noise) {
                Ok(next) => state = next,
                Err(Error::StiffStep { .. }) => {
                    discards += 1;
                    continue 'redraw;
                }
                Err(e) => return Err(e),
            }
        }
        return Ok(OriginRun {
            terminal: state.config,
            discards,
        });
    }
}
