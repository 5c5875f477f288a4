//! Finite-volume operators for a fixed `(Φ, X, Y, Λ)`, prepared once and
//! evaluated at many tilts or mean-field polynomials.
//!
//! Three representations share one interface:
//! - dense: full `n^|Λ|` matrices;
//! - diagonal: only diagonals, when `Φ`, `X`, `Y` are all diagonal;
//! - sector: total-spin blocks, when the model is one-site spin-1/2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::DenseHermitian;
use crate::lattice::{
    build_hamiltonian, empirical_average, empirical_average_diagonal, hamiltonian_diagonal,
    Interaction, LocalObservable, Volume,
};
use crate::ncpoly::{evaluate_classical_complex, is_symmetric, quantize, NcPolynomial};
use crate::spectral::sector::check_admissible;
use crate::spectral::{eigh, log_sum_exp, sector_decompose, SectorModel};

/// Evaluation strategy. `Auto` picks sector for one-site spin-1/2 models,
/// then diagonal when everything is diagonal, then dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    #[default]
    Auto,
    Dense,
    Diagonal,
    Sector,
}

impl std::str::FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Path::Auto),
            "dense" => Ok(Path::Dense),
            "diagonal" => Ok(Path::Diagonal),
            "sector" => Ok(Path::Sector),
            other => Err(Error::Parse(format!("unknown path {other:?}"))),
        }
    }
}

/// Picks a concrete path, validating an explicit request.
pub fn resolve_path(
    path: Path,
    phi: &Interaction,
    x: &LocalObservable,
    y: &LocalObservable,
) -> Result<Path> {
    let diagonal = phi.is_diagonal() && x.is_diagonal() && y.is_diagonal();
    match path {
        Path::Auto => {
            if check_admissible(phi, &[x, y]).is_ok() {
                Ok(Path::Sector)
            } else if diagonal {
                Ok(Path::Diagonal)
            } else {
                Ok(Path::Dense)
            }
        }
        Path::Sector => check_admissible(phi, &[x, y]).map(|_| Path::Sector),
        Path::Diagonal if !diagonal => Err(Error::InvalidObservable(
            "diagonal path needs diagonal interaction and observables".into(),
        )),
        p => Ok(p),
    }
}

/// Gibbs-state summary of `A = -H + |Λ|(u X̄ + v Ȳ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedState {
    /// `log Tr e^A`.
    pub log_z: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// `⟨H_Λ⟩`.
    pub energy: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense {
        h: DenseHermitian,
        x: DenseHermitian,
        y: DenseHermitian,
    },
    Diagonal {
        h: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
    },
    Sector {
        model: SectorModel,
        blocks: Vec<[DenseHermitian; 3]>,
    },
}

#[derive(Debug, Clone)]
pub struct TiltedModel {
    repr: Repr,
    sites: usize,
    path: Path,
}

impl TiltedModel {
    pub fn build(
        phi: &Interaction,
        x: &LocalObservable,
        y: &LocalObservable,
        vol: &Volume,
        path: Path,
    ) -> Result<Self> {
        for (name, o) in [("x", x), ("y", y)] {
            if o.site_dim() != phi.site_dim() {
                return Err(Error::validation(
                    name,
                    format!(
                        "site dimension {} differs from the interaction's {}",
                        o.site_dim(),
                        phi.site_dim()
                    ),
                ));
            }
        }
        let path = resolve_path(path, phi, x, y)?;
        let sites = vol.site_count();
        let repr = match path {
            Path::Dense => Repr::Dense {
                h: build_hamiltonian(phi, vol)?,
                x: empirical_average(x, vol)?,
                y: empirical_average(y, vol)?,
            },
            Path::Diagonal => Repr::Diagonal {
                h: hamiltonian_diagonal(phi, vol)?,
                x: empirical_average_diagonal(x, vol)?,
                y: empirical_average_diagonal(y, vol)?,
            },
            Path::Sector => {
                let model = sector_decompose(sites)?;
                let field = phi.onsite_matrix();
                let blocks = model
                    .sectors()
                    .iter()
                    .map(|s| {
                        Ok([
                            s.collective(sites, &field)?,
                            s.average(sites, x.matrix())?,
                            s.average(sites, y.matrix())?,
                        ])
                    })
                    .collect::<Result<_>>()?;
                Repr::Sector { model, blocks }
            }
            Path::Auto => unreachable!("resolved above"),
        };
        Ok(TiltedModel { repr, sites, path })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn path(&self) -> Path {
        self.path
    }

    fn exponent(
        h: &DenseHermitian,
        x: &DenseHermitian,
        y: &DenseHermitian,
        n: f64,
        u: f64,
        v: f64,
    ) -> Result<DenseHermitian> {
        x.scaled(n * u).add_scaled(y, n * v)?.add_scaled(h, -1.0)
    }

    /// `log Tr e^{-H + |Λ|(u X̄ + v Ȳ)}`.
    pub fn log_partition(&self, u: f64, v: f64) -> Result<f64> {
        let n = self.sites as f64;
        match &self.repr {
            Repr::Dense { h, x, y } => {
                crate::spectral::log_trace_exp(&Self::exponent(h, x, y, n, u, v)?)
            }
            Repr::Diagonal { h, x, y } => {
                let a: Vec<f64> = (0..h.len())
                    .map(|i| -h[i] + n * (u * x[i] + v * y[i]))
                    .collect();
                Ok(log_sum_exp(&a))
            }
            Repr::Sector { model, blocks } => {
                let mut terms = Vec::new();
                for (sec, [h, x, y]) in model.sectors().iter().zip(blocks) {
                    let a = Self::exponent(h, x, y, n, u, v)?;
                    let vals = crate::hermitian::eigenvalues(a.entries().view())?;
                    terms.extend(vals.into_iter().map(|l| l + sec.ln_multiplicity()));
                }
                Ok(log_sum_exp(&terms))
            }
        }
    }

    /// `p_Λ(u, v) = |Λ|⁻¹ log Tr e^{-H + |Λ|(u X̄ + v Ȳ)}`.
    pub fn pressure(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.log_partition(u, v)? / self.sites as f64)
    }

    /// Log-partition function together with Gibbs expectations of `X̄`, `Ȳ`, `H`.
    pub fn state(&self, u: f64, v: f64) -> Result<TiltedState> {
        let n = self.sites as f64;
        // (log weight, x, y, h) per eigenstate
        let mut rows: Vec<(f64, f64, f64, f64)> = Vec::new();
        match &self.repr {
            Repr::Dense { h, x, y } => {
                let spec = eigh(&Self::exponent(h, x, y, n, u, v)?)?;
                let dx = spec.diagonal_of(x.entries().view());
                let dy = spec.diagonal_of(y.entries().view());
                let dh = spec.diagonal_of(h.entries().view());
                for i in 0..spec.dim() {
                    rows.push((spec.values()[i], dx[i], dy[i], dh[i]));
                }
            }
            Repr::Diagonal { h, x, y } => {
                for i in 0..h.len() {
                    rows.push((-h[i] + n * (u * x[i] + v * y[i]), x[i], y[i], h[i]));
                }
            }
            Repr::Sector { model, blocks } => {
                for (sec, [h, x, y]) in model.sectors().iter().zip(blocks) {
                    let spec = eigh(&Self::exponent(h, x, y, n, u, v)?)?;
                    let dx = spec.diagonal_of(x.entries().view());
                    let dy = spec.diagonal_of(y.entries().view());
                    let dh = spec.diagonal_of(h.entries().view());
                    for i in 0..spec.dim() {
                        rows.push((
                            spec.values()[i] + sec.ln_multiplicity(),
                            dx[i],
                            dy[i],
                            dh[i],
                        ));
                    }
                }
            }
        }
        let max = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut mx, mut my, mut mh) = (0.0, 0.0, 0.0, 0.0);
        for &(w, a, b, c) in &rows {
            let e = (w - max).exp();
            z += e;
            mx += e * a;
            my += e * b;
            mh += e * c;
        }
        let log_z = max + z.ln();
        let (mean_x, mean_y, energy) = (mx / z, my / z, mh / z);
        let entropy = (log_z + energy - n * (u * mean_x + v * mean_y)).max(0.0);
        Ok(TiltedState {
            log_z,
            mean_x,
            mean_y,
            energy,
            entropy,
        })
    }

    /// `(∂p/∂u, ∂p/∂v) = (⟨X̄⟩, ⟨Ȳ⟩)` under the tilted Gibbs state.
    pub fn gradient(&self, u: f64, v: f64) -> Result<(f64, f64)> {
        let s = self.state(u, v)?;
        Ok((s.mean_x, s.mean_y))
    }

    /// `|Λ|⁻¹ log Tr e^{-H + |Λ| G(X̄, Ȳ)}` for a symmetric quantization `g`.
    pub fn mean_field(&self, g: &NcPolynomial) -> Result<f64> {
        if !is_symmetric(g) {
            return Err(Error::NonSymmetricPolynomial(format!("{g}")));
        }
        let n = self.sites as f64;
        let total = match &self.repr {
            Repr::Dense { h, x, y } => {
                crate::spectral::log_trace_exp(&quantize(g, x, y)?.scaled(n).add_scaled(h, -1.0)?)?
            }
            Repr::Diagonal { h, x, y } => {
                let a: Vec<f64> = (0..h.len())
                    .map(|i| -h[i] + n * evaluate_classical_complex(g, x[i], y[i]).re)
                    .collect();
                log_sum_exp(&a)
            }
            Repr::Sector { model, blocks } => {
                let mut terms = Vec::new();
                for (sec, [h, x, y]) in model.sectors().iter().zip(blocks) {
                    let a = quantize(g, x, y)?.scaled(n).add_scaled(h, -1.0)?;
                    let vals = crate::hermitian::eigenvalues(a.entries().view())?;
                    terms.extend(vals.into_iter().map(|l| l + sec.ln_multiplicity()));
                }
                log_sum_exp(&terms)
            }
        };
        Ok(total / n)
    }

    /// Dense `(H_Λ, X̄_Λ, Ȳ_Λ)`; only available on the dense path.
    pub fn dense_operators(&self) -> Option<(&DenseHermitian, &DenseHermitian, &DenseHermitian)> {
        match &self.repr {
            Repr::Dense { h, x, y } => Some((h, x, y)),
            _ => None,
        }
    }
}
