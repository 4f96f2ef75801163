//! Derivative-free optimizers: golden-section line search, a coarse-grid
//! maximizer with golden refinement, and a Nelder-Mead simplex with
//! adaptive coefficients.

use rayon::prelude::*;

/// Result of a 1-D maximization.
#[derive(Debug, Clone, Copy)]
pub struct LineMax {
    pub x: f64,
    pub f: f64,
}

/// Result of a grid-plus-refinement maximization.
#[derive(Debug, Clone, Copy)]
pub struct GridMax {
    pub x: f64,
    pub f: f64,
    /// maximizer landed within one grid step of a window boundary
    pub at_edge: bool,
}

/// Maximize `f` on `[window.0, window.1]`: evaluate a coarse grid in
/// parallel, pick the best `k_candidates` local maxima and refine each by
/// golden section. Deterministic: grid order and tie-breaks are fixed
/// (larger value, then smaller x).
pub fn grid_refine_max<F>(
    f: &F,
    window: (f64, f64),
    grid_step: f64,
    refine_tol: f64,
    k_candidates: usize,
) -> Option<GridMax>
where
    F: Fn(f64) -> f64 + Sync,
{
    let (start, end) = window;
    if start >= end || !start.is_finite() || !end.is_finite() {
        return None;
    }
    let steps = ((end - start) / grid_step).ceil() as usize;
    let ts: Vec<f64> = (0..=steps).map(|i| (start + i as f64 * grid_step).min(end)).collect();
    let ws: Vec<f64> = ts.par_iter().map(|&t| f(t)).collect();

    // local maxima of the coarse profile, endpoints included
    let mut candidates: Vec<usize> = (0..ts.len())
        .filter(|&i| {
            let left_ok = i == 0 || ws[i] >= ws[i - 1];
            let right_ok = i + 1 == ts.len() || ws[i] >= ws[i + 1];
            left_ok && right_ok
        })
        .collect();
    candidates.sort_by(|&a, &b| ws[b].total_cmp(&ws[a]).then(a.cmp(&b)));
    candidates.truncate(k_candidates.max(1));

    let refined: Vec<LineMax> = candidates
        .par_iter()
        .map(|&i| {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(ts.len() - 1)];
            golden_max(f, lo, hi, refine_tol)
        })
        .collect();
    let best = refined
        .into_iter()
        .reduce(|a, b| if b.f > a.f || (b.f == a.f && b.x < a.x) { b } else { a })?;
    Some(GridMax {
        x: best.x,
        f: best.f,
        at_edge: best.x - start < grid_step || end - best.x < grid_step,
    })
}

/// Golden-section search for a maximum of `f` on [a, b], refined until the
/// bracket width drops below `xtol`. Deterministic for fixed inputs.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64) -> LineMax {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    if f1 >= f2 && f1 >= fm {
        LineMax { x: x1, f: f1 }
    } else if f2 >= fm {
        LineMax { x: x2, f: f2 }
    } else {
        LineMax { x: xm, f: fm }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// stop when the function spread over the simplex falls below this
    pub f_tol: f64,
    /// stop when the simplex diameter falls below this
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_evals: 40_000, f_tol: 1.0e-30, x_tol: 1.0e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder-Mead minimization started from `x0` with an axis-aligned initial
/// simplex of edge `step`. Uses the dimension-adaptive reflection /
/// expansion / contraction / shrink coefficients.
pub fn nelder_mead_min<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    opts: &SimplexOptions,
) -> SimplexResult {
    let dim = x0.len();
    assert!(dim >= 1, "need at least one parameter");
    let nd = dim as f64;
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nd;
    let gamma = 0.75 - 1.0 / (2.0 * nd);
    let delta = 1.0 - 1.0 / nd;

    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        f(x)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1.0 { v[i].abs() * step } else { step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut order: Vec<usize> = (0..=dim).collect();
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let f_spread = values[worst] - values[best];
        let x_spread = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if f_spread <= opts.f_tol || x_spread <= opts.x_tol {
            return SimplexResult { x: simplex[best].clone(), f: values[best], evals: evals.get(), converged: true };
        }
        if evals.get() >= opts.max_evals {
            return SimplexResult { x: simplex[best].clone(), f: values[best], evals: evals.get(), converged: false };
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / nd;
            }
        }
        let lerp = |from: &[f64], coeff: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(from)
                .map(|(c, x)| c + coeff * (c - x))
                .collect()
        };

        let reflected = lerp(&simplex[worst], alpha);
        let f_reflected = eval(&reflected);
        if f_reflected < values[best] {
            let expanded = lerp(&simplex[worst], beta);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }
        let contracted = if f_reflected < values[worst] {
            lerp(&simplex[worst], gamma) // outside
        } else {
            lerp(&simplex[worst], -gamma) // inside
        };
        let f_contracted = eval(&contracted);
        if f_contracted < values[worst].min(f_reflected) {
            simplex[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[best].clone();
        for &i in order.iter().skip(1) {
            for (x, a) in simplex[i].iter_mut().zip(&anchor) {
                *x = a + delta * (*x - a);
            }
            values[i] = eval(&simplex[i]);
        }
    }
}

/// SplitMix64 hash step, used to derive independent RNG streams from a base
/// seed and task indices.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_sine_peak() {
        let r = golden_max(|x| x.sin(), 0.0, 3.0, 1e-8);
        assert!((r.x - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        assert!((r.f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nelder_mead_minimizes_quadratic_bowl() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v).sum();
        let r = nelder_mead_min(f, &[1.0, -2.0, 0.5, 3.0], 0.5, &SimplexOptions::default());
        assert!(r.f < 1e-20, "f = {:.3e}", r.f);
        assert!(r.converged);
    }

    #[test]
    fn nelder_mead_handles_rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = nelder_mead_min(f, &[-1.2, 1.0], 0.5, &SimplexOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "x = {:?}", r.x);
    }

    #[test]
    fn splitmix_streams_differ() {
        assert_ne!(splitmix64(1), splitmix64(2));
        assert_eq!(splitmix64(42), splitmix64(42));
    }
}
