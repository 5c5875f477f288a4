//! Closed-form and one-dimensional reference values.
//!
//! Everything here is self-contained: no function in this module calls the
//! pressure, Legendre or variational code it is used to check.

/// `ln 2cosh r` without overflow.
fn ln_2cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// One-site pressure `ln 2cosh √(h² + t²)` of `−hσˣ` tilted by `tσᶻ`, and its slope.
fn onsite_pressure(h: f64, t: f64) -> (f64, f64) {
    let r = h.hypot(t);
    let slope = if r == 0.0 { 0.0 } else { t * r.tanh() / r };
    (ln_2cosh(r), slope)
}

/// Conjugate `I_h(m) = sup_t (t m − ln 2cosh √(h² + t²))` for `|m| ≤ 1`.
fn onsite_rate(h: f64, m: f64) -> f64 {
    if m.abs() >= 1.0 {
        // The supremum is approached as t → ±∞ and equals 0.
        return 0.0;
    }
    // The slope is odd and increasing in t with range (−1, 1): bracket, then bisect.
    let target = m.abs();
    let mut hi = 1.0;
    while onsite_pressure(h, hi).1 < target && hi < 1e8 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if onsite_pressure(h, mid).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    t * target - onsite_pressure(h, t).0
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.max(fd);
    while hi - lo > 1e-13 {
        if fc >= fd {
            hi = d;
            (d, fd) = (c, fc);
            c = hi - r * (hi - lo);
            fc = f(c);
            best = best.max(fc);
        } else {
            lo = c;
            (c, fc) = (d, fd);
            d = lo + r * (hi - lo);
            fd = f(d);
            best = best.max(fd);
        }
    }
    best
}

/// `sup_{|m| ≤ 1} {λm² − I_h(m)}`: the mean-field value of `−hσˣ` with
/// `g = λx²` on `X = σᶻ`, by a dense scan refined with golden sections.
pub fn oracle_scalar_curie_weiss(lambda: f64, h: f64) -> f64 {
    let f = |m: f64| lambda * m * m - onsite_rate(h, m);
    let n = 4000;
    let ms: Vec<f64> = (0..=n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect();
    let vals: Vec<f64> = ms.iter().map(|&m| f(m)).collect();
    let mut best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for k in 0..=n {
        let left = if k > 0 {
            vals[k - 1]
        } else {
            f64::NEG_INFINITY
        };
        let right = if k < n {
            vals[k + 1]
        } else {
            f64::NEG_INFINITY
        };
        if vals[k] >= left && vals[k] >= right {
            let lo = ms[k.saturating_sub(1)];
            let hi = ms[(k + 1).min(n)];
            best = best.max(golden_max(&f, lo, hi));
        }
    }
    best
}

/// `N⁻¹ ln Σ_k C(N,k) e^{N[field·m_k + g(m_k)]}`, `m_k = (2k − N)/N`:
/// the exact mean-field value of `N` classical spins.
pub fn oracle_classical_sector_sum(field: f64, g: &dyn Fn(f64) -> f64, n: usize) -> f64 {
    assert!(n > 0, "need at least one site");
    let mut ln_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let nf = n as f64;
    let exps: Vec<f64> = (0..=n)
        .map(|k| {
            let m = (2.0 * k as f64 - nf) / nf;
            ln_fact[n] - ln_fact[k] - ln_fact[n - k] + nf * (field * m + g(m))
        })
        .collect();
    let top = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = exps.iter().map(|e| (e - top).exp()).sum();
    (top + sum.ln()) / nf
}

/// Infinite-chain pressure of `−J Σ σᶻσᶻ` tilted by `u Σ σᶻ`: the log of
/// the leading eigenvalue of `T(s, s′) = e^{J s s′ + u (s + s′)/2}`.
pub fn oracle_transfer_matrix_1d(j: f64, u: f64) -> f64 {
    // λ₊ = e^J cosh u + √(e^{2J} sinh²u + e^{−2J}), factored by e^J for range.
    let disc = (u.sinh().powi(2) + (-4.0 * j).exp()).sqrt();
    j + (u.cosh() + disc).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curie_weiss_closed_cases() {
        let ln2 = 2f64.ln();
        assert!((oracle_scalar_curie_weiss(0.0, 0.0) - ln2).abs() < 1e-12);
        assert!((oracle_scalar_curie_weiss(0.25, 0.0) - ln2).abs() < 1e-12);
        // λ = 1: m* solves 2λm = atanh m; value λm² − I(m) with I the binary entropy deficit.
        let lambda = 1.0;
        let (mut lo, mut hi) = (0.1f64, 0.999_999f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * lambda * mid > mid.atanh() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let m = 0.5 * (lo + hi);
        let rate = 0.5 * ((1.0 + m) * (1.0 + m).ln() + (1.0 - m) * (1.0 - m).ln()) - ln2;
        let expected = lambda * m * m - rate;
        assert!((oracle_scalar_curie_weiss(lambda, 0.0) - expected).abs() < 1e-10);
    }

    #[test]
    fn transverse_field_without_coupling_is_onsite() {
        let h = 0.7;
        let expected = ln_2cosh(h);
        assert!((oracle_scalar_curie_weiss(0.0, h) - expected).abs() < 1e-10);
    }

    #[test]
    fn onsite_rate_inverts_slope() {
        for &(h, t) in &[(0.0, 0.4), (0.5, -1.3), (1.2, 2.0)] {
            let (p, m) = onsite_pressure(h, t);
            assert!((onsite_rate(h, m) - (t * m - p)).abs() < 1e-10);
        }
    }

    #[test]
    fn sector_sum_free_spins() {
        for n in [1, 7, 100] {
            assert!((oracle_classical_sector_sum(0.0, &|_| 0.0, n) - 2f64.ln()).abs() < 1e-14);
        }
        let u = 0.3;
        let v = oracle_classical_sector_sum(u, &|_| 0.0, 50);
        assert!((v - ln_2cosh(u)).abs() < 1e-13);
    }

    #[test]
    fn sector_sum_large_n_is_fast() {
        let start = std::time::Instant::now();
        let v = oracle_classical_sector_sum(0.1, &|m| 0.5 * m * m, 10_000);
        assert!(v.is_finite());
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }

    #[test]
    fn transfer_matrix_limits() {
        assert!((oracle_transfer_matrix_1d(0.0, 0.8) - ln_2cosh(0.8)).abs() < 1e-14);
        assert!((oracle_transfer_matrix_1d(0.6, 0.0) - ln_2cosh(0.6)).abs() < 1e-14);
        // Direct 2×2 eigenvalue.
        let (j, u) = (0.5f64, 0.3f64);
        let (a, b, d) = ((j + u).exp(), (-j).exp(), (j - u).exp());
        let lead = 0.5 * (a + d) + (0.25 * (a - d).powi(2) + b * b).sqrt();
        assert!((oracle_transfer_matrix_1d(j, u) - lead.ln()).abs() < 1e-14);
    }

    #[test]
    fn module_is_independent_of_the_pipeline() {
        let src = include_str!("oracles.rs");
        let body = src.split("#[cfg(test)]").next().unwrap();
        for needle in ["crate::", "super::", "meanfield::"] {
            assert!(!body.contains(needle), "oracle code references `{needle}`");
        }
    }
}
