//! The layered interlacing cone, uniform sampling on its bottom-anchored
//! slices, Monte Carlo volume, and numerical verification of the semigroup
//! intertwining between the wall diffusion and the reflected stack.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chamber::ProcessKind;
use crate::determinantal::{ht_density_raw, q_density_raw};
use crate::ensemble::{run, trajectory_rng};
use crate::error::{Error, Result};
use crate::heat_kernel::phi_unchecked;
use crate::quadrature;

/// Entry count of layer r (1-based): layers 2k-1 and 2k both carry k entries.
pub fn layer_size(r: usize) -> usize {
    r.div_ceil(2)
}

/// Entry counts of an n-layer array.
pub fn layer_sizes(n: usize) -> Vec<usize> {
    (1..=n).map(layer_size).collect()
}

/// Number of free coordinates of a bottom-anchored slice.
pub fn free_coordinates(n: usize) -> usize {
    (1..n).map(layer_size).sum()
}

/// A point of the layered cone: nonnegative layers z^1 .. z^n with adjacent
/// layers interlacing and the odd layers pinned to the wall from below.
#[derive(Debug, Clone, PartialEq)]
pub struct InterlacedArray {
    layers: Vec<Vec<f64>>,
}

/// Interlacing between layer r (upper) and layer r+1 (lower).
///
/// Equal-sized pairs (r odd) satisfy upper_i <= lower_i <= upper_{i+1};
/// growing pairs (r even) satisfy lower_i <= upper_i <= lower_{i+1}.
fn pair_ok(r: usize, upper: &[f64], lower: &[f64]) -> bool {
    if r % 2 == 1 {
        let k = upper.len();
        for i in 0..k {
            if upper[i] > lower[i] {
                return false;
            }
            if i + 1 < k && lower[i] > upper[i + 1] {
                return false;
            }
        }
    } else {
        let k = upper.len();
        for i in 0..k {
            if lower[i] > upper[i] || upper[i] > lower[i + 1] {
                return false;
            }
        }
    }
    true
}

fn layers_valid(layers: &[Vec<f64>]) -> bool {
    for (idx, layer) in layers.iter().enumerate() {
        if layer.len() != layer_size(idx + 1) {
            return false;
        }
        if layer.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return false;
        }
    }
    for r in 1..layers.len() {
        if !pair_ok(r, &layers[r - 1], &layers[r]) {
            return false;
        }
    }
    true
}

impl InterlacedArray {
    pub fn new(layers: Vec<Vec<f64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter("need at least one layer".to_string()));
        }
        if !layers_valid(&layers) {
            return Err(Error::UnorderedInput);
        }
        Ok(InterlacedArray { layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, r: usize) -> &[f64] {
        &self.layers[r - 1]
    }

    /// Bottom layer b(z), the anchor of the wall diffusion.
    pub fn bottom(&self) -> &[f64] {
        self.layers.last().expect("nonempty")
    }

    /// Right edge e(z): the last entry of each layer, top to bottom.
    pub fn edge(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|l| *l.last().expect("layers nonempty"))
            .collect()
    }
}

/// A slice of the cone with either the bottom layer or the right edge pinned.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeSlice {
    BottomFixed { anchor: Vec<f64>, depth: usize },
    EdgeFixed { edge: Vec<f64> },
}

fn check_anchor(anchor: &[f64]) -> Result<()> {
    if anchor.is_empty()
        || anchor.iter().any(|v| !(*v >= 0.0) || !v.is_finite())
        || anchor.windows(2).any(|w| w[0] > w[1])
    {
        return Err(Error::UnorderedInput);
    }
    if anchor.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateAnchor);
    }
    Ok(())
}

impl ConeSlice {
    pub fn bottom_fixed(anchor: Vec<f64>, depth: usize) -> Result<Self> {
        check_anchor(&anchor)?;
        if anchor.len() != layer_size(depth) {
            return Err(Error::ShapeMismatch {
                expected: layer_size(depth),
                got: anchor.len(),
            });
        }
        Ok(ConeSlice::BottomFixed { anchor, depth })
    }

    pub fn edge_fixed(edge: Vec<f64>) -> Result<Self> {
        check_anchor(&edge)?;
        Ok(ConeSlice::EdgeFixed { edge })
    }

    pub fn contains(&self, z: &InterlacedArray) -> bool {
        match self {
            ConeSlice::BottomFixed { anchor, depth } => {
                z.depth() == *depth && z.bottom() == anchor.as_slice()
            }
            ConeSlice::EdgeFixed { edge } => z.depth() == edge.len() && &z.edge() == edge,
        }
    }
}

/// Uniform sampler on a bottom-anchored slice by rejection from a product of
/// per-entry intervals. Tracks proposals and accepts.
///
/// The intervals follow the interlacing chains down to the anchor: walking
/// from entry (r, i) toward the bottom, the upper bound index advances by one
/// per even layer and the lower bound index drops by one per odd layer, so
/// entry i of layer r lies in [x_{i-dec}, x_{i+inc}] (with x_0 = 0). The box
/// therefore contains the slice while staying close to it.
pub struct ConeSampler {
    anchor: Vec<f64>,
    depth: usize,
    bounds: Vec<Vec<(f64, f64)>>,
    box_vol: f64,
    proposals: u64,
    accepts: u64,
}

const SAMPLER_MAX_CONSECUTIVE: u64 = 20_000_000;

impl ConeSampler {
    pub fn new(anchor: &[f64], depth: usize) -> Result<Self> {
        let slice = ConeSlice::bottom_fixed(anchor.to_vec(), depth)?;
        let ConeSlice::BottomFixed { anchor, depth } = slice else {
            unreachable!()
        };
        let m = anchor.len();
        if anchor[m - 1] <= 0.0 && depth > 1 {
            return Err(Error::DegenerateAnchor);
        }
        let mut bounds = Vec::with_capacity(depth.saturating_sub(1));
        let mut box_vol = 1.0;
        for r in 1..depth {
            let inc = (r..depth).filter(|q| q % 2 == 0).count();
            let dec = (r..depth).filter(|q| q % 2 == 1).count();
            let layer: Vec<(f64, f64)> = (1..=layer_size(r))
                .map(|i| {
                    let hi = anchor[(i + inc).min(m) - 1];
                    let lo = if i > dec { anchor[i - dec - 1] } else { 0.0 };
                    (lo, hi)
                })
                .collect();
            for &(lo, hi) in &layer {
                box_vol *= hi - lo;
            }
            bounds.push(layer);
        }
        Ok(ConeSampler {
            anchor,
            depth,
            bounds,
            box_vol,
            proposals: 0,
            accepts: 0,
        })
    }

    pub fn acceptance(&self) -> f64 {
        if self.proposals == 0 {
            1.0
        } else {
            self.accepts as f64 / self.proposals as f64
        }
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.accepts, self.proposals)
    }

    /// Volume of the proposal box.
    pub fn box_volume(&self) -> f64 {
        self.box_vol
    }

    fn propose<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<InterlacedArray> {
        self.proposals += 1;
        let layers: Vec<Vec<f64>> = (1..=self.depth)
            .map(|r| {
                if r == self.depth {
                    self.anchor.clone()
                } else {
                    self.bounds[r - 1]
                        .iter()
                        .map(|&(lo, hi)| lo + rng.random::<f64>() * (hi - lo))
                        .collect()
                }
            })
            .collect();
        if layers_valid(&layers) {
            self.accepts += 1;
            Some(InterlacedArray { layers })
        } else {
            None
        }
    }

    /// Draw one sample, giving up after `budget` misses (None on exhaustion).
    pub fn sample_with_budget<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        budget: u64,
    ) -> Option<InterlacedArray> {
        for _ in 0..budget {
            if let Some(z) = self.propose(rng) {
                return Some(z);
            }
        }
        None
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<InterlacedArray> {
        let mut misses = 0u64;
        loop {
            if let Some(z) = self.propose(rng) {
                return Ok(z);
            }
            misses += 1;
            if misses > SAMPLER_MAX_CONSECUTIVE {
                return Err(Error::EnvelopeFailure {
                    min_rate: 1.0 / SAMPLER_MAX_CONSECUTIVE as f64,
                    attempts: misses,
                });
            }
        }
    }
}

/// One uniform sample of the bottom-anchored slice.
pub fn sample_cone<R: Rng + ?Sized>(
    anchor: &[f64],
    depth: usize,
    rng: &mut R,
) -> Result<InterlacedArray> {
    ConeSampler::new(anchor, depth)?.sample(rng)
}

/// Monte Carlo Euclidean volume of the bottom-anchored slice, with its
/// binomial standard error.
pub fn cone_volume<R: Rng + ?Sized>(
    anchor: &[f64],
    depth: usize,
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let mut sampler = ConeSampler::new(anchor, depth)?;
    for _ in 0..samples {
        let _ = sampler.propose(rng);
    }
    let (accepts, proposals) = sampler.counts();
    let p = accepts as f64 / proposals as f64;
    let box_vol = sampler.box_volume();
    let se = box_vol * (p * (1.0 - p) / proposals as f64).sqrt();
    Ok((box_vol * p, se))
}

/// Outcome of one intertwining comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckVerdict {
    Pass,
    Fail,
    /// Budget exhausted before the confidence interval resolved the claim.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct IntertwineCase {
    pub test_fn: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub threshold: f64,
    pub verdict: CheckVerdict,
}

impl IntertwineCase {
    pub fn diff(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

#[derive(Debug, Clone)]
pub struct IntertwineReport {
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub cases: Vec<IntertwineCase>,
}

impl IntertwineReport {
    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.verdict == CheckVerdict::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.cases.iter().any(|c| c.verdict == CheckVerdict::Fail)
    }
}

pub struct IntertwineOptions {
    /// Accepted Monte Carlo samples per side (m >= 2 path).
    pub budget: u64,
    /// Absolute residual threshold for the quadrature (m = 1) path.
    pub quad_threshold: f64,
    /// Largest acceptable 3-sigma half-width relative to the value scale;
    /// beyond it an in-interval comparison is inconclusive rather than a pass.
    pub resolution: f64,
}

impl Default for IntertwineOptions {
    fn default() -> Self {
        IntertwineOptions {
            budget: 1_000_000,
            quad_threshold: 1e-5,
            resolution: 0.15,
        }
    }
}

/// Smooth decaying test functions used by the verification suites.
pub fn standard_test_functions() -> Vec<Box<dyn Fn(&[f64]) -> f64 + Sync + Send>> {
    vec![
        Box::new(|y: &[f64]| (-y.iter().sum::<f64>()).exp()),
        Box::new(|y: &[f64]| {
            let s: f64 = y
                .iter()
                .enumerate()
                .map(|(i, v)| (0.5 + 0.3 * i as f64) * v)
                .sum();
            (-s).exp()
        }),
        Box::new(|y: &[f64]| (-0.5 * y.iter().map(|v| v * v).sum::<f64>()).exp()),
        Box::new(|y: &[f64]| y.last().copied().unwrap_or(0.0) * (-y.iter().sum::<f64>()).exp()),
        Box::new(|y: &[f64]| (-2.0 * y.last().copied().unwrap_or(0.0)).exp()),
    ]
}

fn wall_kind(n: usize) -> ProcessKind {
    ProcessKind::wall_partner_of(n)
}

/// Both sides of the intertwining relation for one test function by nested
/// quadrature (m = 1 only).
fn intertwine_quadrature(
    n: usize,
    t: f64,
    x: f64,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> (f64, f64) {
    let scale = x + 2.0 * t.sqrt();
    match n {
        1 => {
            let lhs = quadrature::integrate_semi_inf(
                |y| q_density_raw(t, &[x], &[y]) * g(&[y]),
                0.0,
                scale,
                1e-9,
            );
            let rhs = quadrature::integrate_semi_inf(
                |xp| ht_density_raw(wall_kind(1), t, &[x], &[xp]) * g(&[xp]),
                0.0,
                scale,
                1e-9,
            );
            (lhs, rhs)
        }
        2 => {
            // Outer tolerances stay two orders above the inner-integral noise
            // floor so the adaptive splitting terminates; the combined
            // quadrature error is still far below the 1e-5 residual threshold.
            let lhs = quadrature::integrate(
                |u| {
                    quadrature::integrate_ordered_pair(
                        |y1, y2| q_density_raw(t, &[u, x], &[y1, y2]) * g(&[y1, y2]),
                        scale,
                        3e-9,
                    )
                },
                0.0,
                x,
                1e-7,
            ) / x;
            let rhs = quadrature::integrate_semi_inf(
                |xp| {
                    let inner =
                        quadrature::integrate(|u| g(&[u, xp]), 0.0, xp, 1e-9) / xp;
                    ht_density_raw(wall_kind(2), t, &[x], &[xp]) * inner
                },
                0.0,
                scale,
                1e-7,
            );
            (lhs, rhs)
        }
        _ => unreachable!("quadrature path is m = 1 only"),
    }
}

/// Sorted product half-normal proposal over an ordered nonnegative tuple.
fn sorted_half_normal<R: Rng + ?Sized>(dim: usize, sigma: f64, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z.abs()
        })
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn sorted_half_normal_density(sigma: f64, v: &[f64]) -> f64 {
    let mut dens = (1..=v.len()).map(|i| i as f64).product::<f64>();
    for &x in v {
        dens *= 2.0 * phi_unchecked(sigma * sigma, x);
    }
    dens
}

struct McMoments {
    sum: f64,
    sumsq: f64,
    count: u64,
}

fn mc_estimate(chunks: Vec<McMoments>) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    let mut count = 0u64;
    for c in chunks {
        sum += c.sum;
        sumsq += c.sumsq;
        count += c.count;
    }
    let nf = count as f64;
    let mean = sum / nf;
    let var = (sumsq / nf - mean * mean).max(0.0);
    (mean, (var / nf).sqrt())
}

const MC_CHUNKS: u64 = 64;

/// Importance-sampled Monte Carlo for both sides (exact in law: the only
/// error is statistical, no time discretization enters).
fn intertwine_mc(
    n: usize,
    t: f64,
    x: &[f64],
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    budget: u64,
    seed: u64,
) -> Result<(f64, f64, f64, f64)> {
    let kind = wall_kind(n);
    let sigma = x.last().unwrap() + 3.0 * t.sqrt();
    let per_chunk = budget.div_ceil(MC_CHUNKS);

    // LHS: z uniform on the bottom slice, y' from the proposal, weighted by
    // the stack transition density.
    let lhs_chunks: Vec<Result<McMoments>> = run(MC_CHUNKS, |chunk| {
        let mut rng = trajectory_rng(seed ^ 0x11, chunk);
        let mut sampler = ConeSampler::new(x, n)?;
        let mut acc = McMoments {
            sum: 0.0,
            sumsq: 0.0,
            count: 0,
        };
        for _ in 0..per_chunk {
            let z = sampler.sample(&mut rng)?;
            let e = z.edge();
            let y = sorted_half_normal(n, sigma, &mut rng);
            let w = q_density_raw(t, &e, &y) * g(&y) / sorted_half_normal_density(sigma, &y);
            acc.sum += w;
            acc.sumsq += w * w;
            acc.count += 1;
        }
        Ok(acc)
    });
    let lhs_chunks: Vec<McMoments> = lhs_chunks.into_iter().collect::<Result<_>>()?;
    let (lhs, lhs_se) = mc_estimate(lhs_chunks);

    // RHS: x' from the proposal weighted by the wall transition density,
    // then z' uniform on the slice anchored at x'.
    let m = x.len();
    let x_owned = x.to_vec();
    let rhs_chunks: Vec<Result<McMoments>> = run(MC_CHUNKS, |chunk| {
        let mut rng = trajectory_rng(seed ^ 0x22, chunk);
        let mut acc = McMoments {
            sum: 0.0,
            sumsq: 0.0,
            count: 0,
        };
        while acc.count < per_chunk {
            let xp = sorted_half_normal(m, sigma, &mut rng);
            if xp.windows(2).any(|w| w[0] == w[1]) || xp[0] == 0.0 {
                continue;
            }
            let mut sampler = ConeSampler::new(&xp, n)?;
            // Near-degenerate proposals (tiny gaps) have vanishing transition
            // weight but can starve the rejection sampler; redraw them. The
            // dropped region's contribution is suppressed by the same factor
            // h(x') that makes it degenerate, far below the Monte Carlo error.
            let Some(zp) = sampler.sample_with_budget(&mut rng, 20_000) else {
                continue;
            };
            let w = ht_density_raw(kind, t, &x_owned, &xp) * g(&zp.edge())
                / sorted_half_normal_density(sigma, &xp);
            acc.sum += w;
            acc.sumsq += w * w;
            acc.count += 1;
        }
        Ok(acc)
    });
    let rhs_chunks: Vec<McMoments> = rhs_chunks.into_iter().collect::<Result<_>>()?;
    let (rhs, rhs_se) = mc_estimate(rhs_chunks);

    Ok((lhs, lhs_se, rhs, rhs_se))
}

/// Compare both sides of the kernel intertwining for each test function.
///
/// m = 1 runs nested quadrature against an absolute threshold; m >= 2 runs
/// importance-sampled Monte Carlo on both sides and compares within three
/// combined standard errors, flagging the case inconclusive when the interval
/// is wider than the requested resolution.
pub fn check_intertwining(
    n: usize,
    t: f64,
    x: &[f64],
    gs: &[Box<dyn Fn(&[f64]) -> f64 + Sync + Send>],
    opts: &IntertwineOptions,
    seed: u64,
) -> Result<IntertwineReport> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::NonPositiveTime(t));
    }
    let m = layer_size(n);
    if x.len() != m {
        return Err(Error::ShapeMismatch {
            expected: m,
            got: x.len(),
        });
    }
    check_anchor(x)?;
    if x[0] <= 0.0 {
        return Err(Error::DegenerateAnchor);
    }

    let mut cases = Vec::with_capacity(gs.len());
    for (idx, g) in gs.iter().enumerate() {
        let case = if m == 1 {
            let (lhs, rhs) = intertwine_quadrature(n, t, x[0], g.as_ref());
            let threshold = opts.quad_threshold;
            IntertwineCase {
                test_fn: idx,
                lhs,
                rhs,
                lhs_se: 0.0,
                rhs_se: 0.0,
                threshold,
                verdict: if (lhs - rhs).abs() < threshold {
                    CheckVerdict::Pass
                } else {
                    CheckVerdict::Fail
                },
            }
        } else {
            let (lhs, lhs_se, rhs, rhs_se) =
                intertwine_mc(n, t, x, g.as_ref(), opts.budget, seed ^ (idx as u64) << 8)?;
            let sigma = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
            let threshold = 3.0 * sigma;
            let scale = lhs.abs().max(rhs.abs()).max(1e-12);
            let verdict = if (lhs - rhs).abs() > threshold {
                CheckVerdict::Fail
            } else if threshold > opts.resolution * scale {
                CheckVerdict::Inconclusive
            } else {
                CheckVerdict::Pass
            };
            IntertwineCase {
                test_fn: idx,
                lhs,
                rhs,
                lhs_se,
                rhs_se,
                threshold,
                verdict,
            }
        };
        cases.push(case);
    }
    Ok(IntertwineReport { n, m, t, cases })
}
