//! Dense complex Hermitian matrices and the handful of linear-algebra
//! helpers shared by the rest of the crate.

use faer::{Mat, Side};
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative Hermiticity tolerance applied on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A dense Hermitian matrix. The Hermiticity check runs on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    entries: Array2<C64>,
}

impl DenseHermitian {
    /// Validates `entries` (square, Hermitian to [`HERMITIAN_TOL`] relative to
    /// `max(1, max|a_ij|)`) and stores them exactly Hermitized.
    pub fn new(entries: Array2<C64>) -> Result<Self> {
        let (r, c) = entries.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: c,
            });
        }
        let deviation = hermiticity_deviation(entries.view());
        let scale = max_abs(entries.view()).max(1.0);
        if deviation > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitize(entries))
    }

    /// Builds from a real diagonal.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Array2::zeros((n, n));
        for (i, &d) in diag.iter().enumerate() {
            m[[i, i]] = C64::new(d, 0.0);
        }
        DenseHermitian { entries: m }
    }

    pub fn zeros(dim: usize) -> Self {
        DenseHermitian {
            entries: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        DenseHermitian {
            entries: Array2::eye(dim),
        }
    }

    fn hermitize(mut m: Array2<C64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            m[[i, i]].im = 0.0;
            for j in (i + 1)..n {
                let avg = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
                m[[i, j]] = avg;
                m[[j, i]] = avg.conj();
            }
        }
        DenseHermitian { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    /// True when every off-diagonal entry vanishes exactly.
    pub fn is_diagonal(&self) -> bool {
        is_diagonal(self.entries.view())
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        DenseHermitian {
            entries: &self.entries * C64::new(c, 0.0),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &DenseHermitian, c: f64) -> Result<Self> {
        self.check_dim(other.dim())?;
        let mut m = self.entries.clone();
        m.scaled_add(C64::new(c, 0.0), &other.entries);
        Ok(DenseHermitian { entries: m })
    }

    /// `self + c * identity`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.entries.clone();
        for i in 0..m.nrows() {
            m[[i, i]] += c;
        }
        DenseHermitian { entries: m }
    }

    pub fn trace(&self) -> f64 {
        self.entries.diag().iter().map(|z| z.re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(self.entries.view())
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        if self.is_diagonal() {
            return Ok(self
                .entries
                .diag()
                .iter()
                .fold(0.0_f64, |acc, z| acc.max(z.re.abs())));
        }
        let values = eigenvalues(self.entries.view())?;
        Ok(values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseHermitian) -> Self {
        DenseHermitian {
            entries: kron(self.entries.view(), other.entries.view()),
        }
    }

    pub(crate) fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim() != other {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other,
            });
        }
        Ok(())
    }

    pub(crate) fn from_trusted(entries: Array2<C64>) -> Self {
        DenseHermitian { entries }
    }
}

pub fn hermiticity_deviation(m: ArrayView2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: ArrayView2<C64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_diagonal(m: ArrayView2<C64>) -> bool {
    m.indexed_iter()
        .all(|((i, j), z)| i == j || (z.re == 0.0 && z.im == 0.0))
}

pub fn kron(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * br + k, j * bc + l]] = x * y;
        }
    }
    out
}

pub(crate) fn to_faer(m: ArrayView2<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Ascending eigenvalues of a Hermitian matrix.
pub(crate) fn eigenvalues(m: ArrayView2<C64>) -> Result<Vec<f64>> {
    if is_diagonal(m) {
        let mut d: Vec<f64> = m.diag().iter().map(|z| z.re).collect();
        d.sort_by(f64::total_cmp);
        return Ok(d);
    }
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::ConvergenceFailure)
}

/// Operator 2-norm of an arbitrary square matrix (largest singular value).
pub fn operator_norm(m: ArrayView2<C64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let sv = to_faer(m)
        .singular_values()
        .map_err(|_| Error::ConvergenceFailure)?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

/// Pauli matrices and single-site helpers for spin-1/2.
pub mod pauli {
    use super::*;

    pub fn identity() -> Array2<C64> {
        Array2::eye(2)
    }

    pub fn x() -> Array2<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        ndarray::array![[o, l], [l, o]]
    }

    pub fn y() -> Array2<C64> {
        let o = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        ndarray::array![[o, -i], [i, o]]
    }

    pub fn z() -> Array2<C64> {
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        ndarray::array![[l, o], [o, -l]]
    }

    /// Single-site matrix for a Pauli letter (`i`, `x`, `y`, `z`, case-insensitive).
    pub fn letter(c: char) -> Option<Array2<C64>> {
        match c.to_ascii_lowercase() {
            'i' => Some(identity()),
            'x' => Some(x()),
            'y' => Some(y()),
            'z' => Some(z()),
            _ => None,
        }
    }

    /// Tensor product of the letters of `word`, leftmost letter = leftmost factor.
    pub fn string(word: &str) -> Option<Array2<C64>> {
        let mut out = Array2::eye(1);
        for c in word.chars() {
            out = kron(out.view(), letter(c)?.view());
        }
        Some(out)
    }

    /// Components `(c0, cx, cy, cz)` with `m = c0·1 + cx·σx + cy·σy + cz·σz`.
    pub fn decompose(m: ArrayView2<C64>) -> [f64; 4] {
        let tr = |p: Array2<C64>| -> f64 { (p.dot(&m)).diag().sum().re * 0.5 };
        [tr(identity()), tr(x()), tr(y()), tr(z())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_hermitian() {
        let mut m = pauli::x();
        m[[0, 1]] = C64::new(2.0, 0.0);
        assert!(matches!(
            DenseHermitian::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_square() {
        let m = Array2::<C64>::zeros((2, 3));
        assert!(DenseHermitian::new(m).is_err());
    }

    #[test]
    fn pauli_strings_and_norms() {
        let zz = DenseHermitian::new(pauli::string("zz").unwrap()).unwrap();
        assert_eq!(zz.dim(), 4);
        assert!(zz.is_diagonal());
        assert_eq!(zz.real_diagonal(), vec![1.0, -1.0, -1.0, 1.0]);
        let y = DenseHermitian::new(pauli::y()).unwrap();
        assert!((y.spectral_norm().unwrap() - 1.0).abs() < 1e-14);
        assert!(pauli::string("q").is_none());
    }

    #[test]
    fn pauli_decomposition() {
        let m = pauli::x() * C64::new(0.3, 0.0)
            + pauli::y() * C64::new(-0.2, 0.0)
            + pauli::identity() * C64::new(1.5, 0.0);
        let c = pauli::decompose(m.view());
        assert!((c[0] - 1.5).abs() < 1e-15);
        assert!((c[1] - 0.3).abs() < 1e-15);
        assert!((c[2] + 0.2).abs() < 1e-15);
        assert!(c[3].abs() < 1e-15);
    }

    #[test]
    fn operator_norm_of_commutator() {
        let x = pauli::x();
        let z = pauli::z();
        let comm = x.dot(&z) - z.dot(&x);
        assert!((operator_norm(comm.view()).unwrap() - 2.0).abs() < 1e-12);
    }
}
