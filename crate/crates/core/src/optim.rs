//! Small derivative-free optimizers used by the variational solvers.

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Returns the best point seen, including the endpoints.
pub fn golden_section_max(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    for x in [a, b] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Central-difference gradient with step `h`.
pub fn numeric_gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let fp = f(&p);
            p[i] = x[i] - h;
            let fm = f(&p);
            p[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 200,
            grad_tol: 1e-9,
            step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// BFGS on a smooth `f` with numeric gradients and Armijo backtracking.
pub fn bfgs_minimize(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: &BfgsOptions) -> Minimum {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = numeric_gradient(&f, &x, opts.step);
    let mut hinv = identity(n);
    for it in 0..opts.max_iter {
        if norm(&g) < opts.grad_tol {
            return Minimum {
                x,
                value: fx,
                iterations: it,
                converged: true,
            };
        }
        let mut dir: Vec<f64> = mat_vec(&hinv, &g).iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if slope >= 0.0 {
            hinv = identity(n);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else {
            return Minimum {
                x,
                value: fx,
                iterations: it,
                converged: norm(&g) < opts.grad_tol.sqrt(),
            };
        };
        let gn = numeric_gradient(&f, &xn, opts.step);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-16 {
            let hy = mat_vec(&hinv, &yv);
            let yhy = dot(&yv, &hy);
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] +=
                        (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let small_step = norm(&s) < 1e-14 * (1.0 + norm(&x));
        x = xn;
        fx = fnew;
        g = gn;
        if small_step {
            return Minimum {
                x,
                value: fx,
                iterations: it + 1,
                converged: true,
            };
        }
    }
    let converged = norm(&g) < opts.grad_tol.sqrt();
    Minimum {
        x,
        value: fx,
        iterations: opts.max_iter,
        converged,
    }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
