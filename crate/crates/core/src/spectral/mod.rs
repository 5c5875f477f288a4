//! Hermitian functional calculus: eigendecomposition, stable
//! `log Tr e^A`, Gibbs states, entropy and expectations.
//!
//! Every matrix function goes through a full eigendecomposition.

pub mod sector;

use faer::Side;
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::hermitian::{is_diagonal, to_faer, DenseHermitian, C64};

pub use sector::{sector_decompose, sector_log_trace_exp, Sector, SectorModel};

/// Eigenvalues below `-NEGATIVITY_TOL` make a matrix an invalid state.
pub const NEGATIVITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-10;

/// Ascending eigenvalues with matching unitary eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: Vec<f64>,
    vectors: Array2<C64>,
}

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Array2<C64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U f(Λ) U*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Array2<C64> {
        let weights: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        self.compose(&weights)
    }

    fn compose(&self, weights: &[f64]) -> Array2<C64> {
        let mut scaled = self.vectors.clone();
        for (mut col, &w) in scaled.columns_mut().into_iter().zip(weights) {
            col.mapv_inplace(|z| z * w);
        }
        let adjoint = self.vectors.t().mapv(|z| z.conj());
        scaled.dot(&adjoint)
    }

    pub fn reconstruct(&self) -> Array2<C64> {
        self.apply(|v| v)
    }

    pub fn log_trace_exp(&self) -> f64 {
        log_sum_exp(&self.values)
    }

    /// Normalized Gibbs weights `e^{λ_i} / Σ_j e^{λ_j}`.
    pub fn gibbs_weights(&self) -> Vec<f64> {
        softmax(&self.values)
    }

    /// `(u_i* A u_i)` for every eigenvector `u_i` (real parts).
    pub fn diagonal_of(&self, a: ArrayView2<C64>) -> Vec<f64> {
        diagonal_in_basis(&self.vectors, a)
    }
}

fn diagonal_in_basis(u: &Array2<C64>, a: ArrayView2<C64>) -> Vec<f64> {
    let au = a.dot(u);
    (0..u.ncols())
        .map(|i| {
            u.column(i)
                .iter()
                .zip(au.column(i))
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
                .re
        })
        .collect()
}

/// Full eigendecomposition; diagonal inputs skip the solver.
pub fn eigh(a: &DenseHermitian) -> Result<Spectrum> {
    eigh_view(a.entries().view())
}

pub(crate) fn eigh_view(m: ArrayView2<C64>) -> Result<Spectrum> {
    let n = m.nrows();
    if is_diagonal(m) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[[i, i]].re.total_cmp(&m[[j, j]].re));
        let mut vectors = Array2::zeros((n, n));
        for (col, &row) in order.iter().enumerate() {
            vectors[[row, col]] = C64::new(1.0, 0.0);
        }
        let values = order.iter().map(|&i| m[[i, i]].re).collect();
        return Ok(Spectrum { values, vectors });
    }
    let evd = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::ConvergenceFailure)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|i| s[i].re).collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| u[(i, j)]);
    Ok(Spectrum { values, vectors })
}

/// `max + log Σ e^{v - max}`; `-∞` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Shift-stabilized `log Tr e^A`.
pub fn log_trace_exp(a: &DenseHermitian) -> Result<f64> {
    Ok(log_sum_exp(&crate::hermitian::eigenvalues(
        a.entries().view(),
    )?))
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DenseHermitian,
}

impl DensityMatrix {
    /// Validates trace and positivity to the crate tolerances.
    pub fn new(matrix: DenseHermitian) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min = crate::hermitian::eigenvalues(matrix.entries().view())?
            .first()
            .copied()
            .unwrap_or(0.0);
        if min < -NEGATIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    /// Divides a positive semidefinite matrix by its trace.
    pub fn normalized(matrix: DenseHermitian) -> Result<Self> {
        let tr = matrix.trace();
        if tr.is_nan() || tr <= 0.0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {tr} is not positive"
            )));
        }
        Self::new(matrix.scaled(1.0 / tr))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            matrix: DenseHermitian::identity(dim).scaled(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &DenseHermitian {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            matrix: self.matrix.kron(&other.matrix),
        }
    }

    pub(crate) fn from_trusted(matrix: DenseHermitian) -> Self {
        DensityMatrix { matrix }
    }
}

/// `e^A / Tr e^A`.
pub fn gibbs_state(a: &DenseHermitian) -> Result<DensityMatrix> {
    if a.is_diagonal() {
        let w = softmax(&a.real_diagonal());
        return Ok(DensityMatrix::from_trusted(
            DenseHermitian::from_real_diagonal(&w),
        ));
    }
    let spec = eigh(a)?;
    let w = spec.gibbs_weights();
    Ok(DensityMatrix::from_trusted(DenseHermitian::from_trusted(
        hermitized(spec.compose(&w)),
    )))
}

fn hermitized(m: Array2<C64>) -> Array2<C64> {
    let adj = m.t().mapv(|z| z.conj());
    (m + adj) * C64::new(0.5, 0.0)
}

/// `-Σ p log p` over the eigenvalues, clipping tiny negatives to 0.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let p = crate::hermitian::eigenvalues(rho.matrix.entries().view())?;
    Ok(entropy_of_weights(&p))
}

pub(crate) fn entropy_of_weights(p: &[f64]) -> f64 {
    p.iter()
        .map(|&x| if x > 0.0 { -x * x.ln() } else { 0.0 })
        .sum::<f64>()
        .max(0.0)
}

/// `Re Tr(ρA)`.
pub fn expectation(rho: &DensityMatrix, a: &DenseHermitian) -> Result<f64> {
    let z = trace_product(rho.matrix.entries().view(), a.entries().view())?;
    debug_assert!(
        z.im.abs() < IMAG_TOL * a.max_abs().max(1.0),
        "Tr(ρA) has imaginary part {}",
        z.im
    );
    Ok(z.re)
}

/// `Tr(AB)` for arbitrary square matrices of equal size.
pub fn trace_product(a: ArrayView2<C64>, b: ArrayView2<C64>) -> Result<C64> {
    if a.dim() != b.dim() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a.indexed_iter().map(|((i, j), &x)| x * b[[j, i]]).sum())
}

/// `(1/|Λ|) [log Tr (e^{-H/K} e^{Gop/K})^K - log Tr e^{-H}]`.
///
/// Evaluated through the positive form `P = e^{-H/2K} e^{Gop/K} e^{-H/2K}`,
/// which has the same trace powers; both exponentials are shifted so that
/// no entry exceeds 1. The subtraction fixes the normalization of the
/// reference state, so the value does not depend on `K` when `Gop = 0`.
pub fn k_family_value(
    h: &DenseHermitian,
    gop: &DenseHermitian,
    k: u32,
    volume_size: usize,
) -> Result<f64> {
    h.check_dim(gop.dim())?;
    if k == 0 {
        return Err(Error::validation("k", "must be a positive integer"));
    }
    let kf = f64::from(k);
    let hs = eigh(h)?;
    let gs = eigh(gop)?;
    let h_min = hs.values()[0];
    let g_max = *gs.values().last().unwrap_or(&0.0);
    let half = hs.apply(|l| (-(l - h_min) / (2.0 * kf)).exp());
    let mid = gs.apply(|m| ((m - g_max) / kf).exp());
    let p = half.dot(&mid).dot(&half);
    let p = DenseHermitian::new(p)?;
    let mu = crate::hermitian::eigenvalues(p.entries().view())?;
    let logs: Vec<f64> = mu
        .iter()
        .filter(|&&m| m > 0.0)
        .map(|m| kf * m.ln())
        .collect();
    let log_tr = -h_min + g_max + log_sum_exp(&logs);
    let log_z = log_sum_exp(&hs.values().iter().map(|l| -l).collect::<Vec<_>>());
    Ok((log_tr - log_z) / volume_size as f64)
}

/// The `K → ∞` value `(1/|Λ|) [log Tr e^{-H + Gop} - log Tr e^{-H}]`.
pub fn k_family_limit(h: &DenseHermitian, gop: &DenseHermitian, volume_size: usize) -> Result<f64> {
    h.check_dim(gop.dim())?;
    let joint = log_trace_exp(&gop.add_scaled(h, -1.0)?)?;
    let reference = log_trace_exp(&h.scaled(-1.0))?;
    Ok((joint - reference) / volume_size as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DenseHermitian {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        DenseHermitian::new(m).unwrap()
    }

    #[test]
    fn eigh_examples() {
        let z = DenseHermitian::new(pauli::z()).unwrap();
        assert_eq!(eigh(&z).unwrap().values(), &[-1.0, 1.0]);
        assert_eq!(
            eigh(&DenseHermitian::identity(3)).unwrap().values(),
            &[1.0; 3]
        );
        let x = DenseHermitian::new(pauli::x()).unwrap();
        let s = eigh(&x).unwrap();
        assert!((s.values()[0] + 1.0).abs() < 1e-14 && (s.values()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigh_reconstructs_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(&mut rng, 50);
        let s = eigh(&a).unwrap();
        let err = (s.reconstruct() - a.entries())
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(err <= 1e-10 * a.spectral_norm().unwrap());
        let u = s.vectors();
        let gram = u.t().mapv(|z| z.conj()).dot(u) - Array2::<C64>::eye(50);
        assert!(gram.iter().all(|z| z.norm() < 1e-10));
        assert!(s.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn log_trace_exp_examples() {
        assert!((log_trace_exp(&DenseHermitian::zeros(2)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let lam = 0.7;
        let a = DenseHermitian::new(pauli::z()).unwrap().scaled(lam);
        assert!((log_trace_exp(&a).unwrap() - (2.0 * lam.cosh()).ln()).abs() < 1e-14);
        let big = DenseHermitian::new(pauli::x()).unwrap().scaled(800.0);
        assert!((log_trace_exp(&big).unwrap() - 800.0).abs() < 1e-12);
        let shifted = a.shifted(3.25);
        assert!(
            (log_trace_exp(&shifted).unwrap() - log_trace_exp(&a).unwrap() - 3.25).abs() < 1e-13
        );
    }

    #[test]
    fn gibbs_and_entropy_examples() {
        let rho = gibbs_state(&DenseHermitian::zeros(4)).unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed(4));
        assert!((von_neumann_entropy(&rho).unwrap() - 4f64.ln()).abs() < 1e-14);

        let lam = 1.0_f64;
        let rho = gibbs_state(&DenseHermitian::new(pauli::z()).unwrap().scaled(lam)).unwrap();
        let p = lam.exp() / (2.0 * lam.cosh());
        assert!((rho.matrix().entries()[[0, 0]].re - p).abs() < 1e-15);
        assert!((rho.matrix().trace() - 1.0).abs() < 1e-15);
        let binary = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((von_neumann_entropy(&rho).unwrap() - binary).abs() < 1e-14);

        let pure = DenseHermitian::from_real_diagonal(&[0.0, 1.0]);
        assert_eq!(
            von_neumann_entropy(&DensityMatrix::new(pure).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(DenseHermitian::identity(2)).is_err());
        let neg = DenseHermitian::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::InvalidDensityMatrix(_))
        ));
        let tiny = DenseHermitian::from_real_diagonal(&[1.0 + 1e-13, -1e-13]);
        let rho = DensityMatrix::new(tiny).unwrap();
        assert!(von_neumann_entropy(&rho).unwrap().is_finite());
    }

    #[test]
    fn expectation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 5);
        let mixed = DensityMatrix::maximally_mixed(5);
        assert!((expectation(&mixed, &a).unwrap() - a.trace() / 5.0).abs() < 1e-14);
        let rho = gibbs_state(&a).unwrap();
        assert!((expectation(&rho, &DenseHermitian::identity(5)).unwrap() - 1.0).abs() < 1e-13);
        // single-site tilted magnetization
        let u = 0.4;
        let z = DenseHermitian::new(pauli::z()).unwrap();
        let rho = gibbs_state(&z.scaled(u)).unwrap();
        assert!((expectation(&rho, &z).unwrap() - u.tanh()).abs() < 1e-15);
        assert!(expectation(&rho, &a).is_err());
    }

    #[test]
    fn k_family_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_hermitian(&mut rng, 8);
        let zero = DenseHermitian::zeros(8);
        for k in [1, 5, 64] {
            assert!(k_family_value(&h, &zero, k, 3).unwrap().abs() < 1e-12);
        }
        // commuting pair: any function of h commutes with h
        let g = DenseHermitian::new(eigh(&h).unwrap().apply(|l| l * l - 0.3)).unwrap();
        let lim = k_family_limit(&h, &g, 3).unwrap();
        for k in [1, 2, 7, 64] {
            assert!((k_family_value(&h, &g, k, 3).unwrap() - lim).abs() < 1e-10);
        }
        assert!(k_family_value(&h, &DenseHermitian::zeros(4), 1, 3).is_err());
    }
}
