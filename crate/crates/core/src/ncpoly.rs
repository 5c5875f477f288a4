//! Noncommutative polynomials in two letters and their quantizations.
//!
//! A polynomial is a map from words over `{x, y}` to complex coefficients.
//! Its *classical* value at real `(x, y)` collapses every word to
//! `x^{#x} y^{#y}`; its *quantization* substitutes two operators in word
//! order. A polynomial is *symmetric* when `conj c(α) = c(reverse α)`, which
//! is exactly what makes the quantization self-adjoint.
//!
//! Non-polynomial mean-field functions are out of scope; anything that is a
//! norm limit of polynomials reduces to this case through the log-trace
//! inequality.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{operator_norm, DenseHermitian, C64};
use crate::lattice::{empirical_average, LocalObservable, Volume};

/// Maximum word length accepted by the parsers.
pub const DEFAULT_DEGREE_CAP: usize = 8;
const SYMMETRY_TOL: f64 = 1e-12;
const CLASSICAL_IMAG_TOL: f64 = 1e-10;
/// Points per axis for the classical-equality check.
pub const EQUALITY_GRID: usize = 17;
const EQUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    X,
    Y,
}

impl Letter {
    fn parse(c: char) -> Option<Letter> {
        match c {
            'x' | 'X' | '1' => Some(Letter::X),
            'y' | 'Y' | '2' => Some(Letter::Y),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Letter::X => 'x',
            Letter::Y => 'y',
        }
    }
}

pub type Word = Vec<Letter>;

pub fn parse_word(s: &str) -> Result<Word> {
    s.chars()
        .map(|c| {
            Letter::parse(c).ok_or_else(|| {
                Error::InvalidPolynomial(format!("letter {c:?} in word {s:?} is not x/y/1/2"))
            })
        })
        .collect()
}

pub fn word_string(w: &[Letter]) -> String {
    w.iter().map(|l| l.as_char()).collect()
}

/// Number of (y before x) pairs, i.e. adjacent swaps to reach `x^k y^l`.
pub fn inversions(w: &[Letter]) -> usize {
    let mut ys = 0;
    let mut inv = 0;
    for l in w {
        match l {
            Letter::Y => ys += 1,
            Letter::X => inv += ys,
        }
    }
    inv
}

fn letter_counts(w: &[Letter]) -> (usize, usize) {
    let k = w.iter().filter(|&&l| l == Letter::X).count();
    (k, w.len() - k)
}

/// Coefficient map from words to complex scalars, kept in sorted word order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NcPolynomial {
    coeffs: BTreeMap<Word, C64>,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Vec::new(), C64::new(c, 0.0));
        p
    }

    /// Builds from `(word, coefficient)` pairs; repeated words accumulate.
    pub fn from_terms<'a, I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, C64)>,
    {
        let mut p = Self::zero();
        for (w, c) in terms {
            let word = parse_word(w)?;
            if word.len() > DEFAULT_DEGREE_CAP {
                return Err(Error::InvalidPolynomial(format!(
                    "word {w:?} exceeds the degree cap {DEFAULT_DEGREE_CAP}"
                )));
            }
            p.add_term(word, c);
        }
        Ok(p)
    }

    /// Real-coefficient convenience wrapper around [`NcPolynomial::from_terms`].
    pub fn from_real_terms(terms: &[(&str, f64)]) -> Result<Self> {
        Self::from_terms(terms.iter().map(|&(w, c)| (w, C64::new(c, 0.0))))
    }

    pub fn add_term(&mut self, word: Word, c: C64) {
        let entry = self.coeffs.entry(word).or_insert(C64::new(0.0, 0.0));
        *entry += c;
        if entry.norm() == 0.0 {
            self.coeffs.retain(|_, v| v.norm() != 0.0);
        }
    }

    pub fn coefficient(&self, word: &[Letter]) -> C64 {
        self.coeffs.get(word).copied().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C64)> {
        self.coeffs.iter()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut p = Self::zero();
        for (w, v) in &self.coeffs {
            p.add_term(w.clone(), v * c);
        }
        p
    }

    pub fn sub(&self, other: &NcPolynomial) -> Self {
        let mut p = self.clone();
        for (w, v) in &other.coeffs {
            p.add_term(w.clone(), -v);
        }
        p
    }

    fn max_coeff(&self) -> f64 {
        self.coeffs.values().fold(0.0_f64, |a, c| a.max(c.norm()))
    }

    fn has_prefix(&self, prefix: &[Letter]) -> bool {
        self.coeffs
            .range(prefix.to_vec()..)
            .next()
            .is_some_and(|(w, _)| w.starts_with(prefix))
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(w, c)| {
                let w = if w.is_empty() {
                    "1".to_string()
                } else {
                    word_string(w)
                };
                if c.im == 0.0 {
                    format!("{}·{w}", c.re)
                } else {
                    format!("({}{:+}i)·{w}", c.re, c.im)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `Ran(X, Y) = [-‖X‖, ‖X‖] × [-‖Y‖, ‖Y‖]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rectangle {
    pub x_radius: f64,
    pub y_radius: f64,
}

impl Rectangle {
    pub fn new(x_radius: f64, y_radius: f64) -> Self {
        Rectangle { x_radius, y_radius }
    }

    pub fn from_observables(x: &LocalObservable, y: &LocalObservable) -> Self {
        Rectangle::new(x.norm(), y.norm())
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let slack = 1e-12;
        x.abs() <= self.x_radius * (1.0 + slack) + slack
            && y.abs() <= self.y_radius * (1.0 + slack) + slack
    }

    /// `k` evenly spaced points per non-degenerate axis (one point at 0 otherwise).
    pub fn grid(&self, k: usize) -> Vec<(f64, f64)> {
        let xs = axis(self.x_radius, k);
        let ys = axis(self.y_radius, k);
        xs.iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .collect()
    }
}

/// `k` points spanning `[-r, r]`, or `[0]` when `r == 0` or `k < 2`.
pub fn axis(r: f64, k: usize) -> Vec<f64> {
    if r == 0.0 || k < 2 {
        return vec![0.0];
    }
    (0..k)
        .map(|i| -r + 2.0 * r * i as f64 / (k - 1) as f64)
        .collect()
}

pub fn evaluate_classical_complex(p: &NcPolynomial, x: f64, y: f64) -> C64 {
    p.coeffs
        .iter()
        .map(|(w, c)| {
            let (k, l) = letter_counts(w);
            c * x.powi(k as i32) * y.powi(l as i32)
        })
        .sum()
}

/// Classical value `Σ_α c(α) x^{#x(α)} y^{#y(α)}`, required to be real.
pub fn evaluate_classical(p: &NcPolynomial, x: f64, y: f64) -> Result<f64> {
    let v = evaluate_classical_complex(p, x, y);
    if v.im.abs() > CLASSICAL_IMAG_TOL {
        return Err(Error::NonSymmetricPolynomial(format!(
            "classical value at ({x}, {y}) has imaginary part {:e}",
            v.im
        )));
    }
    Ok(v.re)
}

/// Classical gradient `(∂g/∂x, ∂g/∂y)` (real part).
pub fn classical_gradient(p: &NcPolynomial, x: f64, y: f64) -> (f64, f64) {
    let mut gx = 0.0;
    let mut gy = 0.0;
    for (w, c) in &p.coeffs {
        let (k, l) = letter_counts(w);
        if k > 0 {
            gx += c.re * k as f64 * x.powi(k as i32 - 1) * y.powi(l as i32);
        }
        if l > 0 {
            gy += c.re * l as f64 * x.powi(k as i32) * y.powi(l as i32 - 1);
        }
    }
    (gx, gy)
}

/// A Lipschitz constant of `g` on `rect` in the sense
/// `|g(a) - g(b)| ≤ L (|a_x - b_x| + |a_y - b_y|)`, from coefficient sums:
/// `L = max(Σ|c| k R_x^{k-1} R_y^l, Σ|c| l R_x^k R_y^{l-1})`.
pub fn lipschitz_constant(p: &NcPolynomial, rect: &Rectangle) -> f64 {
    let mut lx = 0.0;
    let mut ly = 0.0;
    for (w, c) in &p.coeffs {
        let (k, l) = letter_counts(w);
        let a = c.norm();
        if k > 0 {
            lx += a * k as f64 * rect.x_radius.powi(k as i32 - 1) * rect.y_radius.powi(l as i32);
        }
        if l > 0 {
            ly += a * l as f64 * rect.x_radius.powi(k as i32) * rect.y_radius.powi(l as i32 - 1);
        }
    }
    f64::max(lx, ly)
}

pub fn is_symmetric(p: &NcPolynomial) -> bool {
    let tol = SYMMETRY_TOL * p.max_coeff().max(1.0);
    p.coeffs.iter().all(|(w, c)| {
        let rev: Word = w.iter().rev().copied().collect();
        (c.conj() - p.coefficient(&rev)).norm() <= tol
    })
}

/// `(c(α) + conj c(reverse α)) / 2` for every word.
pub fn symmetrize(p: &NcPolynomial) -> NcPolynomial {
    let mut out = NcPolynomial::zero();
    for (w, c) in &p.coeffs {
        let rev: Word = w.iter().rev().copied().collect();
        out.add_term(w.clone(), c * 0.5);
        out.add_term(rev, c.conj() * 0.5);
    }
    out
}

/// `Σ_α c(α) A_{α(1)} ⋯ A_{α(n)}` for arbitrary coefficients.
pub fn quantize_general(
    p: &NcPolynomial,
    a: ArrayView2<C64>,
    b: ArrayView2<C64>,
) -> Result<Array2<C64>> {
    let n = a.nrows();
    if a.dim() != (n, n) || b.dim() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if a.ncols() != n { a.ncols() } else { b.nrows() },
        });
    }
    if crate::hermitian::is_diagonal(a) && crate::hermitian::is_diagonal(b) {
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            let (x, y) = (a[[i, i]], b[[i, i]]);
            out[[i, i]] = p
                .coeffs
                .iter()
                .map(|(w, c)| {
                    let (k, l) = letter_counts(w);
                    c * x.powu(k as u32) * y.powu(l as u32)
                })
                .sum();
        }
        return Ok(out);
    }
    let mut acc = Array2::zeros((n, n));
    let mut prefix = Vec::new();
    let identity = Array2::eye(n);
    accumulate_words(p, &mut prefix, &identity, a, b, &mut acc);
    Ok(acc)
}

fn accumulate_words(
    p: &NcPolynomial,
    prefix: &mut Word,
    current: &Array2<C64>,
    a: ArrayView2<C64>,
    b: ArrayView2<C64>,
    acc: &mut Array2<C64>,
) {
    if let Some(c) = p.coeffs.get(prefix.as_slice()) {
        acc.scaled_add(*c, current);
    }
    for letter in [Letter::X, Letter::Y] {
        prefix.push(letter);
        if p.has_prefix(prefix) {
            let m = match letter {
                Letter::X => a,
                Letter::Y => b,
            };
            let next = current.dot(&m);
            accumulate_words(p, prefix, &next, a, b, acc);
        }
        prefix.pop();
    }
}

/// The self-adjoint operator `G(A, B)` of a symmetric quantization.
pub fn quantize(
    p: &NcPolynomial,
    a: &DenseHermitian,
    b: &DenseHermitian,
) -> Result<DenseHermitian> {
    a.check_dim(b.dim())?;
    if !is_symmetric(p) {
        return Err(Error::NonSymmetricPolynomial(format!("{p}")));
    }
    DenseHermitian::new(quantize_general(p, a.entries().view(), b.entries().view())?)
}

/// `(bound, actual)` for `‖[X̄_Λ, Ȳ_Λ]‖`, with
/// `bound = 2 ‖X‖ |supp X| ‖Y‖ |supp Y| / |Λ|`.
pub fn commutator_bound(
    x: &LocalObservable,
    y: &LocalObservable,
    vol: &Volume,
) -> Result<(f64, f64)> {
    let xa = empirical_average(x, vol)?;
    let ya = empirical_average(y, vol)?;
    let actual = commutator_norm(&xa, &ya)?;
    let bound = commutator_constant(x, y) / vol.site_count() as f64;
    Ok((bound, actual))
}

fn commutator_constant(x: &LocalObservable, y: &LocalObservable) -> f64 {
    2.0 * x.norm() * x.support_size() as f64 * y.norm() * y.support_size() as f64
}

pub(crate) fn commutator_norm(a: &DenseHermitian, b: &DenseHermitian) -> Result<f64> {
    let ab = a.entries().dot(b.entries());
    let ba = b.entries().dot(a.entries());
    // i[A, B] is Hermitian
    let herm = (ab - ba) * C64::new(0.0, 1.0);
    DenseHermitian::new(herm)?.spectral_norm()
}

/// Fails with `DifferentClassicalPolynomial` unless `p1` and `p2` agree on
/// the 17×17 grid over `rect`.
pub fn check_same_classical(p1: &NcPolynomial, p2: &NcPolynomial, rect: &Rectangle) -> Result<()> {
    for (x, y) in rect.grid(EQUALITY_GRID) {
        let d =
            (evaluate_classical_complex(p1, x, y) - evaluate_classical_complex(p2, x, y)).norm();
        let scale = evaluate_classical_complex(p1, x, y).norm().max(1.0);
        if d > EQUALITY_TOL * scale {
            return Err(Error::DifferentClassicalPolynomial { x, y, deviation: d });
        }
    }
    Ok(())
}

/// Constant `C(X, Y)` with `‖G₁(X̄,Ȳ) - G₂(X̄,Ȳ)‖ ≤ C / |Λ|`.
///
/// Every word is sorted to `x^k y^l` by `inv(α)` adjacent swaps, each costing
/// at most `‖X‖^{k-1} ‖Y‖^{l-1} ‖[X̄,Ȳ]‖`; the sorted words cancel between two
/// quantizations of the same `g`. Hence
/// `C = 2 |supp X| |supp Y| Σ_α |c₁(α) - c₂(α)| inv(α) ‖X‖^k ‖Y‖^l`.
pub fn quantization_constant(
    p1: &NcPolynomial,
    p2: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
) -> f64 {
    let diff = p1.sub(p2);
    let per_swap = 2.0 * x.support_size() as f64 * y.support_size() as f64;
    diff.coeffs
        .iter()
        .map(|(w, c)| {
            let (k, l) = letter_counts(w);
            c.norm() * inversions(w) as f64 * x.norm().powi(k as i32) * y.norm().powi(l as i32)
        })
        .sum::<f64>()
        * per_swap
}

/// `(gap, bound)` with `gap = ‖G₁(X̄_Λ,Ȳ_Λ) - G₂(X̄_Λ,Ȳ_Λ)‖` and
/// `bound = C(X,Y) / |Λ|` from [`quantization_constant`].
pub fn quantization_gap(
    p1: &NcPolynomial,
    p2: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    vol: &Volume,
) -> Result<(f64, f64)> {
    check_same_classical(p1, p2, &Rectangle::from_observables(x, y))?;
    let xa = empirical_average(x, vol)?;
    let ya = empirical_average(y, vol)?;
    let diff = quantize_general(&p1.sub(p2), xa.entries().view(), ya.entries().view())?;
    let gap = operator_norm(diff.view())?;
    let bound = quantization_constant(p1, p2, x, y) / vol.site_count() as f64;
    Ok((gap, bound))
}

/// Grid extrema `(min g, max g)` over `rect`.
pub fn classical_extrema(p: &NcPolynomial, rect: &Rectangle, k: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (x, y) in rect.grid(k) {
        let v = evaluate_classical(p, x, y)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::pauli;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn classical_examples() {
        let p = NcPolynomial::from_real_terms(&[("12", 1.0), ("21", 1.0)]).unwrap();
        assert_eq!(evaluate_classical(&p, 2.0, 3.0).unwrap(), 12.0);
        let k = NcPolynomial::constant(-0.7);
        assert_eq!(evaluate_classical(&k, 5.0, -1.0).unwrap(), -0.7);
        let p = NcPolynomial::from_real_terms(&[("112", 1.0), ("211", 1.0)]).unwrap();
        assert_eq!(evaluate_classical(&p, 1.0, 1.0).unwrap(), 2.0);
        let bad = NcPolynomial::from_terms([("x", c(0.0, 1.0))]).unwrap();
        assert!(matches!(
            evaluate_classical(&bad, 1.0, 0.0),
            Err(Error::NonSymmetricPolynomial(_))
        ));
    }

    #[test]
    fn symmetry_examples() {
        let p = NcPolynomial::from_terms([("12", c(0.0, 1.0)), ("21", c(0.0, -1.0))]).unwrap();
        assert!(is_symmetric(&p));
        assert!(!is_symmetric(
            &NcPolynomial::from_real_terms(&[("12", 1.0)]).unwrap()
        ));
        assert!(is_symmetric(
            &NcPolynomial::from_real_terms(&[("11", 1.0)]).unwrap()
        ));
    }

    #[test]
    fn symmetrize_examples() {
        let p = symmetrize(&NcPolynomial::from_real_terms(&[("12", 2.0)]).unwrap());
        assert_eq!(
            p,
            NcPolynomial::from_real_terms(&[("12", 1.0), ("21", 1.0)]).unwrap()
        );
        let q = NcPolynomial::from_terms([
            ("xy", c(0.5, 0.5)),
            ("yx", c(0.5, -0.5)),
            ("xx", c(1.0, 0.0)),
        ])
        .unwrap();
        assert!(is_symmetric(&q));
        assert_eq!(symmetrize(&q), q);
    }

    #[test]
    fn degree_cap_and_parse_errors() {
        assert!(NcPolynomial::from_real_terms(&[("xxxxxxxxx", 1.0)]).is_err());
        assert!(NcPolynomial::from_real_terms(&[("xz", 1.0)]).is_err());
        let p = NcPolynomial::from_real_terms(&[("xy", 1.0), ("xy", -1.0)]).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn quantize_examples() {
        let z = DenseHermitian::new(pauli::z()).unwrap();
        let x = DenseHermitian::new(pauli::x()).unwrap();
        let p = NcPolynomial::from_real_terms(&[("1", 1.0)]).unwrap();
        assert_eq!(quantize(&p, &z, &x).unwrap().entries(), z.entries());
        let p = NcPolynomial::from_real_terms(&[("12", 1.0), ("21", 1.0)]).unwrap();
        let q = quantize(&p, &x, &x).unwrap();
        assert_eq!(q.entries(), &(Array2::<C64>::eye(2) * c(2.0, 0.0)));
        let bad = NcPolynomial::from_real_terms(&[("12", 1.0)]).unwrap();
        assert!(matches!(
            quantize(&bad, &x, &z),
            Err(Error::NonSymmetricPolynomial(_))
        ));
        let big = DenseHermitian::identity(4);
        assert!(matches!(
            quantize(&p, &x, &big),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quantize_diagonal_matches_classical() {
        // oracle: evaluate g entrywise on the diagonals
        let p = symmetrize(
            &NcPolynomial::from_real_terms(&[("xxy", 0.7), ("y", -1.2), ("xy", 0.3), ("", 0.25)])
                .unwrap(),
        );
        let da = [0.3, -1.0, 0.5];
        let db = [2.0, 0.1, -0.4];
        let a = DenseHermitian::from_real_diagonal(&da);
        let b = DenseHermitian::from_real_diagonal(&db);
        let q = quantize(&p, &a, &b).unwrap();
        for i in 0..3 {
            let expect = 0.7 * da[i] * da[i] * db[i] - 1.2 * db[i] + 0.3 * da[i] * db[i] + 0.25;
            assert!((q.entries()[[i, i]].re - expect).abs() < 1e-14);
        }
        // also through the general product path
        let gen_a = pauli::z() * c(0.5, 0.0);
        let gen_b = pauli::identity() * c(-1.0, 0.0);
        let mut p2 = NcPolynomial::zero();
        p2.add_term(parse_word("xyx").unwrap(), c(1.0, 0.0));
        let direct = quantize_general(&p2, gen_a.view(), gen_b.view()).unwrap();
        let by_hand = gen_a.dot(&gen_b).dot(&gen_a);
        assert_eq!(direct, by_hand);
    }

    #[test]
    fn inversion_count() {
        assert_eq!(inversions(&parse_word("xy").unwrap()), 0);
        assert_eq!(inversions(&parse_word("yx").unwrap()), 1);
        assert_eq!(inversions(&parse_word("yyxx").unwrap()), 4);
        assert_eq!(inversions(&parse_word("yxyx").unwrap()), 3);
    }

    #[test]
    fn commutator_examples() {
        let x = LocalObservable::pauli("x", 1.0, 1).unwrap();
        let z = LocalObservable::pauli("z", 1.0, 1).unwrap();
        for n in [2, 3, 5] {
            let vol = Volume::chain(n).unwrap();
            let (bound, actual) = commutator_bound(&x, &z, &vol).unwrap();
            // [σx, σz] = -2iσy on each site, and different sites commute
            assert!((actual - 2.0 / n as f64).abs() < 1e-12);
            assert!((bound - 2.0 / n as f64).abs() < 1e-12);
            let (_, same) = commutator_bound(&x, &x, &vol).unwrap();
            assert_eq!(same, 0.0);
        }
        let zz = LocalObservable::pauli("zz", 1.0, 1).unwrap();
        let (_, diag) = commutator_bound(&z, &zz, &Volume::chain(3).unwrap()).unwrap();
        assert_eq!(diag, 0.0);
    }

    #[test]
    fn quantization_gap_examples() {
        let x = LocalObservable::pauli("x", 1.0, 1).unwrap();
        let z = LocalObservable::pauli("z", 1.0, 1).unwrap();
        let p1 = NcPolynomial::from_real_terms(&[("12", 1.0)]).unwrap();
        let p2 = NcPolynomial::from_real_terms(&[("21", 1.0)]).unwrap();
        let vol = Volume::chain(3).unwrap();
        let (gap, bound) = quantization_gap(&p1, &p2, &x, &z, &vol).unwrap();
        let (_, comm) = commutator_bound(&x, &z, &vol).unwrap();
        assert!((gap - comm).abs() < 1e-12);
        assert!(gap <= bound + 1e-12);
        let (same, _) = quantization_gap(&p1, &p1, &x, &z, &vol).unwrap();
        assert_eq!(same, 0.0);

        let g4 = quantization_gap(&p1, &p2, &x, &z, &Volume::chain(4).unwrap())
            .unwrap()
            .0;
        let g8 = quantization_gap(&p1, &p2, &x, &z, &Volume::chain(8).unwrap())
            .unwrap()
            .0;
        assert!((g4 / g8 - 2.0).abs() < 0.2);

        let other = NcPolynomial::from_real_terms(&[("xx", 1.0)]).unwrap();
        assert!(matches!(
            quantization_gap(&p1, &other, &x, &z, &vol),
            Err(Error::DifferentClassicalPolynomial { .. })
        ));
    }

    #[test]
    fn lipschitz_and_gradient() {
        let p = NcPolynomial::from_real_terms(&[("xx", 0.5), ("xy", 1.0), ("yx", 1.0)]).unwrap();
        let rect = Rectangle::new(1.0, 2.0);
        // ∂x = x + 2y ≤ 1 + 4, ∂y = 2x ≤ 2; coefficient sums give max(1 + 2·2, 2·1) = 5
        assert_eq!(lipschitz_constant(&p, &rect), 5.0);
        assert_eq!(classical_gradient(&p, 0.5, -1.0), (0.5 - 2.0, 1.0));
        assert_eq!(axis(0.0, 5), vec![0.0]);
        assert_eq!(rect.grid(3).len(), 9);
    }
}
