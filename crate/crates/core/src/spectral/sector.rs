//! Total-spin sector decomposition for permutation-invariant spin-1/2 models.
//!
//! When the interaction is one-site and `X`, `Y` are one-site, every operator
//! in play is a function of the collective spin `S = ½ Σ_i σ_i`. The
//! `2^N`-dimensional space splits into spin-`s` irreps of dimension `2s + 1`,
//! each occurring `m_{N,s} = C(N, N/2 - s) - C(N, N/2 - s - 1)` times, and a
//! one-site operator `c₀ + c·σ` summed over sites acts as `N c₀ + 2 c·S`.

use ndarray::Array2;

use super::{diagonal_in_basis, eigh_view, log_sum_exp};
use crate::error::{Error, Result};
use crate::hermitian::{pauli, DenseHermitian, C64};
use crate::lattice::{Interaction, LocalObservable};
use crate::ncpoly::{quantize, NcPolynomial};

/// Largest `N` for which multiplicities are also kept as exact integers.
pub const EXACT_MULTIPLICITY_SITES: usize = 120;

/// One spin-`s` irrep together with its multiplicity.
#[derive(Debug, Clone)]
pub struct Sector {
    twice_spin: usize,
    ln_multiplicity: f64,
    multiplicity: Option<u128>,
    spin_ops: [Array2<C64>; 3],
}

impl Sector {
    pub fn twice_spin(&self) -> usize {
        self.twice_spin
    }

    pub fn spin(&self) -> f64 {
        self.twice_spin as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_spin + 1
    }

    pub fn ln_multiplicity(&self) -> f64 {
        self.ln_multiplicity
    }

    /// Exact multiplicity when the site count is at most [`EXACT_MULTIPLICITY_SITES`].
    pub fn multiplicity(&self) -> Option<u128> {
        self.multiplicity
    }

    /// `(S_x, S_y, S_z)` in the basis `m = s, s-1, …, -s`.
    pub fn spin_operators(&self) -> &[Array2<C64>; 3] {
        &self.spin_ops
    }

    /// `Σ_i O_i` restricted to this sector, for a 2×2 Hermitian `O`.
    pub fn collective(&self, sites: usize, onsite: &Array2<C64>) -> Result<DenseHermitian> {
        if onsite.dim() != (2, 2) {
            return Err(Error::GeneratorSetUnsupported(onsite.nrows()));
        }
        let [c0, cx, cy, cz] = pauli::decompose(onsite.view());
        let mut m = Array2::eye(self.dim()) * C64::new(sites as f64 * c0, 0.0);
        for (c, s) in [cx, cy, cz].iter().zip(&self.spin_ops) {
            m.scaled_add(C64::new(2.0 * c, 0.0), s);
        }
        DenseHermitian::new(m)
    }

    /// The empirical average `(1/N) Σ_i O_i` restricted to this sector.
    pub fn average(&self, sites: usize, onsite: &Array2<C64>) -> Result<DenseHermitian> {
        Ok(self.collective(sites, onsite)?.scaled(1.0 / sites as f64))
    }
}

fn spin_matrices(twice_spin: usize) -> [Array2<C64>; 3] {
    let d = twice_spin + 1;
    let s = twice_spin as f64 / 2.0;
    let m = |k: usize| s - k as f64;
    let mut sz = Array2::zeros((d, d));
    let mut raise = Array2::<C64>::zeros((d, d));
    for k in 0..d {
        sz[[k, k]] = C64::new(m(k), 0.0);
        if k > 0 {
            let mk = m(k);
            raise[[k - 1, k]] = C64::new((s * (s + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
        }
    }
    let lower = raise.t().to_owned();
    let sx = (&raise + &lower) * C64::new(0.5, 0.0);
    let sy = (&raise - &lower) * C64::new(0.0, -0.5);
    [sx, sy, sz]
}

/// All sectors of `N` spin-1/2 sites, highest spin first.
#[derive(Debug, Clone)]
pub struct SectorModel {
    sites: usize,
    sectors: Vec<Sector>,
}

impl SectorModel {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// `log Σ_s m_s Tr e^{A_s}` for a sector-wise exponent.
    pub fn log_trace_exp_with<F>(&self, exponent: F) -> Result<f64>
    where
        F: Fn(&Sector) -> Result<DenseHermitian>,
    {
        let mut terms = Vec::new();
        for sec in &self.sectors {
            let a = exponent(sec)?;
            let values = crate::hermitian::eigenvalues(a.entries().view())?;
            terms.extend(values.into_iter().map(|l| l + sec.ln_multiplicity));
        }
        Ok(log_sum_exp(&terms))
    }

    /// `Tr(e^A O) / Tr e^A` with both given sector by sector. `O` need not be
    /// Hermitian, so the result is complex.
    pub fn expectation_with<F, G>(&self, exponent: F, observable: G) -> Result<C64>
    where
        F: Fn(&Sector) -> Result<DenseHermitian>,
        G: Fn(&Sector) -> Result<Array2<C64>>,
    {
        let mut parts = Vec::new();
        let mut max = f64::NEG_INFINITY;
        for sec in &self.sectors {
            let spec = eigh_view(exponent(sec)?.entries().view())?;
            let obs = observable(sec)?;
            let u = spec.vectors();
            let ou = obs.dot(u);
            let diag: Vec<C64> = (0..u.ncols())
                .map(|i| {
                    u.column(i)
                        .iter()
                        .zip(ou.column(i))
                        .map(|(a, b)| a.conj() * b)
                        .sum()
                })
                .collect();
            for (l, d) in spec.values().iter().zip(diag) {
                let w = l + sec.ln_multiplicity;
                max = max.max(w);
                parts.push((w, d));
            }
        }
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for (w, d) in parts {
            let e = (w - max).exp();
            num += d * e;
            den += e;
        }
        Ok(num / den)
    }

    /// Real expectation of a Hermitian sector observable.
    pub fn expectation_hermitian_with<F, G>(&self, exponent: F, observable: G) -> Result<f64>
    where
        F: Fn(&Sector) -> Result<DenseHermitian>,
        G: Fn(&Sector) -> Result<DenseHermitian>,
    {
        let mut parts = Vec::new();
        for sec in &self.sectors {
            let spec = eigh_view(exponent(sec)?.entries().view())?;
            let obs = observable(sec)?;
            let diag = diagonal_in_basis(spec.vectors(), obs.entries().view());
            parts.extend(
                spec.values()
                    .iter()
                    .zip(diag)
                    .map(|(l, d)| (l + sec.ln_multiplicity, d)),
            );
        }
        let max = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = parts.iter().fold((0.0, 0.0), |(n, d), &(w, o)| {
            let e = (w - max).exp();
            (n + e * o, d + e)
        });
        Ok(num / den)
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

/// Builds every total-spin sector for `n` sites.
pub fn sector_decompose(n: usize) -> Result<SectorModel> {
    if n == 0 {
        return Err(Error::validation(
            "sites",
            "sector decomposition needs at least one site",
        ));
    }
    let lf = ln_factorials(n);
    let sectors = (0..=n / 2)
        .map(|k| {
            let twice_spin = n - 2 * k;
            let ln_binom = lf[n] - lf[k] - lf[n - k];
            // m = C(n,k) - C(n,k-1) = C(n,k) (1 - k/(n-k+1))
            let ln_multiplicity = ln_binom + (1.0 - k as f64 / (n - k + 1) as f64).ln();
            let multiplicity = (n <= EXACT_MULTIPLICITY_SITES).then(|| {
                let lower = if k == 0 { 0 } else { binomial_u128(n, k - 1) };
                binomial_u128(n, k) - lower
            });
            Sector {
                twice_spin,
                ln_multiplicity,
                multiplicity,
                spin_ops: spin_matrices(twice_spin),
            }
        })
        .collect();
    Ok(SectorModel { sites: n, sectors })
}

/// Fails unless the model is admissible for the sector path.
pub(crate) fn check_admissible(phi: &Interaction, observables: &[&LocalObservable]) -> Result<()> {
    if phi.site_dim() != 2 {
        return Err(Error::GeneratorSetUnsupported(phi.site_dim()));
    }
    if !phi.is_one_site() {
        return Err(Error::NotPermutationInvariant(
            "interaction has multi-site terms".into(),
        ));
    }
    for obs in observables {
        if obs.site_dim() != 2 {
            return Err(Error::GeneratorSetUnsupported(obs.site_dim()));
        }
        if !obs.is_one_site() {
            return Err(Error::NotPermutationInvariant(
                "observable is not supported on a single site".into(),
            ));
        }
    }
    Ok(())
}

/// `(1/N) log Σ_s m_s Tr_s e^{-H_s + N G(X̄_s, Ȳ_s)}`.
pub fn sector_log_trace_exp(
    model: &SectorModel,
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
) -> Result<f64> {
    check_admissible(phi, &[x, y])?;
    let n = model.sites;
    let field = phi.onsite_matrix();
    let total = model.log_trace_exp_with(|sec| {
        let h = sec.collective(n, &field)?;
        let xa = sec.average(n, x.matrix())?;
        let ya = sec.average(n, y.matrix())?;
        let gop = quantize(g, &xa, &ya)?;
        gop.scaled(n as f64).add_scaled(&h, -1.0)
    })?;
    Ok(total / n as f64)
}
