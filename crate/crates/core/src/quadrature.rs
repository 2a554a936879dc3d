//! Adaptive Gauss-Kronrod quadrature used by the exact-density checks.
//!
//! All integrators take absolute tolerances. Semi-infinite ranges are mapped
//! to [0, 1) with the exponential substitution x = a - scale*ln(1-u), so
//! Gaussian tails are resolved without truncation.

/// 15-point Kronrod abscissae on [-1, 1] (nonnegative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

/// Kronrod weights paired with `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_82,
];

/// 7-point Gauss weights for the embedded rule (odd Kronrod abscissae).
const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_6,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_35,
];

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let fc = f(center);
    let mut result_gauss = WG[3] * fc;
    let mut result_kronrod = WGK[7] * fc;
    for (idx, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let fsum = f(center - dx) + f(center + dx);
        result_kronrod += WGK[idx] * fsum;
        if idx % 2 == 1 {
            result_gauss += WG[idx / 2] * fsum;
        }
    }
    let value = result_kronrod * half;
    let err = ((result_kronrod - result_gauss) * half).abs();
    (value, err)
}

const MAX_DEPTH: u32 = 24;
const MAX_PANELS: u32 = 40_000;

struct AdaptiveState {
    /// Error allowance per unit length; a panel accepts when its estimate is
    /// below rate * width, so the budget cannot be eaten by deep recursion.
    rate: f64,
    panels: u32,
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, state: &mut AdaptiveState, depth: u32) -> f64 {
    let (value, err) = kronrod_panel(f, a, b);
    state.panels += 1;
    if err <= state.rate * (b - a) || depth >= MAX_DEPTH || state.panels >= MAX_PANELS {
        return value;
    }
    let mid = 0.5 * (a + b);
    adaptive(f, a, mid, state, depth + 1) + adaptive(f, mid, b, state, depth + 1)
}

fn adaptive_top<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let mut state = AdaptiveState {
        rate: tol.max(1e-300) / (b - a).abs().max(1e-300),
        panels: 0,
    };
    adaptive(f, a, b, &mut state, 0)
}

/// Integrate `f` over the finite interval [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adaptive_top(&f, a, b, tol)
}

/// Integrate `f` over [a, inf) via x = a - scale*ln(1-u).
///
/// `scale` should match the decay length of the integrand (about sqrt(t)
/// for heat-kernel tails).
pub fn integrate_semi_inf<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: f64) -> f64 {
    let scale = scale.max(1e-12);
    let g = |u: f64| {
        let w = 1.0 - u;
        if w <= 0.0 {
            return 0.0;
        }
        let x = a - scale * w.ln();
        let jac = scale / w;
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive_top(&g, 0.0, 1.0, tol)
}

/// Integrate `f` over (-inf, a].
pub fn integrate_semi_inf_neg<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: f64) -> f64 {
    integrate_semi_inf(|x| f(2.0 * a - x), a, scale, tol)
}

/// Integrate `f` over the whole real line, splitting at `center`.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, center: f64, scale: f64, tol: f64) -> f64 {
    integrate_semi_inf(&f, center, scale, 0.5 * tol)
        + integrate_semi_inf_neg(&f, center, scale, 0.5 * tol)
}

/// Integrate `f(y1, y2)` over the ordered wedge 0 <= y1 <= y2 < inf.
pub fn integrate_ordered_pair<F: Fn(f64, f64) -> f64>(f: F, scale: f64, tol: f64) -> f64 {
    let inner_tol = 0.01 * tol;
    integrate_semi_inf(
        |y2| integrate(|y1| f(y1, y2), 0.0, y2, inner_tol),
        0.0,
        scale,
        tol,
    )
}

/// Integrate `f(x1, x2)` over the ordered wedge -inf < x1 <= x2 < inf.
pub fn integrate_ordered_pair_line<F: Fn(f64, f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    tol: f64,
) -> f64 {
    let inner_tol = 0.01 * tol;
    integrate_line(
        |x2| integrate_semi_inf_neg(|x1| f(x1, x2), x2, scale, inner_tol),
        center,
        scale,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_tail_on_half_line() {
        let v = integrate_semi_inf(
            |x| INV_SQRT_2PI * (-0.5 * x * x).exp(),
            0.0,
            1.0,
            1e-12,
        );
        assert_relative_eq!(v, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn full_line_gaussian_mass() {
        let v = integrate_line(|x| INV_SQRT_2PI * (-0.5 * x * x).exp(), 0.3, 1.0, 1e-12);
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn ordered_wedge_halves_product_mass() {
        // Symmetric product density: the ordered wedge carries half the mass
        // of the first quadrant.
        let g = |x: f64| 2.0 * INV_SQRT_2PI * (-0.5 * x * x).exp();
        let v = integrate_ordered_pair(|a, b| g(a) * g(b), 1.0, 1e-10);
        assert_relative_eq!(v, 0.5, epsilon = 1e-8);
    }
}
