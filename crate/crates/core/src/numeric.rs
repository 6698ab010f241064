//! Small numerical kernels: bracketed bisection, golden-section search,
//! Nelder-Mead, weighted isotonic regression and trapezoid quadrature.

/// Result of a bracketed bisection.
#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]` for a function whose values at the endpoints have
/// opposite signs (or vanish). Returns `None` when the bracket is invalid.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> Option<Root> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo.is_nan() || fhi.is_nan() {
        return None;
    }
    if flo == 0.0 {
        return Some(Root { x: lo, residual: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Some(Root { x: hi, residual: 0.0, iterations: 0 });
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let mut best = if flo.abs() < fhi.abs() { (lo, flo) } else { (hi, fhi) };
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.abs() <= best.1.abs() {
            best = (mid, fm);
        }
        if fm == 0.0 {
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(Root { x: best.0, residual: best.1, iterations })
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
/// Returns the best point seen, including the endpoints.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    for x in [a, b] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Outcome of a Nelder-Mead minimization.
#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder-Mead minimization with standard coefficients.
///
/// Stops when both the spread of simplex values is below `ftol` and the
/// simplex diameter is below `xtol`, or after `max_evals` evaluations.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    xtol: f64,
    ftol: f64,
    max_evals: usize,
) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] + step <= 1.0 { step } else { -step };
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evaluations = n + 1;
    while evaluations < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= ftol && diameter <= xtol {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            evaluations += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            evaluations += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = item.0.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect();
                    let v = eval(&x);
                    *item = (x, v);
                }
                evaluations += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations }
}

/// Nelder-Mead restarted from its own optimum with a shrinking step until the
/// value stops improving.
pub fn nelder_mead_restarted<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: f64,
    xtol: f64,
    max_evals: usize,
) -> Minimum {
    let mut best = nelder_mead(&f, x0, step, xtol, 0.0, max_evals);
    let mut evaluations = best.evaluations;
    let mut s = step;
    for _ in 0..6 {
        s = (s * 0.1).max(xtol * 10.0);
        let next = nelder_mead(&f, &best.x, s, xtol, 0.0, max_evals);
        evaluations += next.evaluations;
        let improved = next.value < best.value - 1e-15;
        if next.value <= best.value {
            best = next;
        }
        if !improved && s <= xtol * 10.0 {
            break;
        }
    }
    best.evaluations = evaluations;
    best
}

/// Weighted isotonic (nondecreasing) regression by pool-adjacent-violators.
pub fn isotonic_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() >= 2 {
            let (v2, w2, n2) = blocks[blocks.len() - 1];
            let (v1, w1, n1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            let w = w1 + w2;
            let v = if w > 0.0 { (v1 * w1 + v2 * w2) / w } else { 0.5 * (v1 + v2) };
            blocks.truncate(blocks.len() - 2);
            blocks.push((v, w, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, n)| std::iter::repeat_n(v, n)).collect()
}

/// Composite trapezoid rule for samples on a uniform grid with spacing `h`.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => h * (samples[1..n - 1].iter().sum::<f64>() + 0.5 * (samples[0] + samples[n - 1])),
    }
}

/// Composite Simpson rule on `[a, b]` with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}
