//! Finite boxes of ℤ^d, local observables, translation-invariant
//! interactions, and their dense (or diagonal) finite-volume operators.
//!
//! Sites are ordered lexicographically (first axis slowest) and site `k` in
//! that order is tensor factor `k`, counted from the left. Only open
//! boundaries are built: a translate `j + supp X` contributes to `X_Λ` iff it
//! lies entirely inside `Λ`. For multi-site `X` this differs from a periodic
//! convention by a surface term, which the `1/|Λ|` extrapolation absorbs.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::hermitian::{pauli, DenseHermitian, C64};

/// Default cap on the dense Hilbert-space dimension `n^|Λ|`.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;
/// Cap for the diagonal path, which stores only `n^|Λ|` reals.
pub const DIAGONAL_DIM_CAP: usize = 1 << 24;

/// A lattice vector.
pub type Site = Vec<i64>;

fn origin(dim: usize) -> Site {
    vec![0; dim]
}

fn add(a: &[i64], b: &[i64]) -> Site {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[i64], b: &[i64]) -> Site {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A box `[0, e_1) × … × [0, e_d)` of lattice sites.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Volume {
    extents: Vec<usize>,
    dim_cap: usize,
}

impl Volume {
    pub fn new(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.contains(&0) {
            return Err(Error::validation(
                "volume",
                format!("extents must be positive and non-empty, got {extents:?}"),
            ));
        }
        Ok(Volume {
            extents,
            dim_cap: DEFAULT_DIM_CAP,
        })
    }

    /// A one-dimensional chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// `|Λ|`.
    pub fn site_count(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.extents.len()
            && site
                .iter()
                .zip(&self.extents)
                .all(|(&c, &e)| c >= 0 && (c as usize) < e)
    }

    /// Lexicographic index of `site`, if inside.
    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        Some(
            site.iter()
                .zip(&self.extents)
                .fold(0usize, |acc, (&c, &e)| acc * e + c as usize),
        )
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.site_count());
        let mut cur = vec![0i64; self.extents.len()];
        for _ in 0..self.site_count() {
            out.push(cur.clone());
            for axis in (0..cur.len()).rev() {
                cur[axis] += 1;
                if (cur[axis] as usize) < self.extents[axis] {
                    break;
                }
                cur[axis] = 0;
            }
        }
        out
    }

    /// `|∂V|`: sites with a nearest neighbour outside the box.
    pub fn boundary_size(&self) -> usize {
        self.sites()
            .iter()
            .filter(|s| {
                s.iter()
                    .zip(&self.extents)
                    .any(|(&c, &e)| c == 0 || c as usize == e - 1)
            })
            .count()
    }

    /// `n^|Λ|` if it does not overflow.
    pub fn hilbert_dim(&self, n: usize) -> Option<usize> {
        n.checked_pow(u32::try_from(self.site_count()).ok()?)
    }

    /// `n^|Λ|`, or `DimensionCapExceeded` against `cap`.
    pub(crate) fn checked_dim(&self, n: usize, cap: usize) -> Result<usize> {
        match self.hilbert_dim(n) {
            Some(d) if d <= cap => Ok(d),
            _ => Err(Error::DimensionCapExceeded {
                n,
                sites: self.site_count(),
                cap,
            }),
        }
    }

    /// Dense-path dimension check against the configured cap.
    pub fn dense_dim(&self, n: usize) -> Result<usize> {
        self.checked_dim(n, self.dim_cap)
    }

    /// Offsets `j` with `j + support ⊂ Λ`, in lexicographic order.
    pub fn admissible_offsets(&self, support: &[Site]) -> Vec<Site> {
        let d = self.dimension();
        let mut lo = vec![i64::MIN; d];
        let mut hi = vec![i64::MAX; d];
        for s in support {
            for a in 0..d {
                lo[a] = lo[a].max(-s[a]);
                hi[a] = hi[a].min(self.extents[a] as i64 - 1 - s[a]);
            }
        }
        if support.is_empty() || (0..d).any(|a| lo[a] > hi[a]) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            out.push(cur.clone());
            let mut axis = d;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                cur[axis] += 1;
                if cur[axis] <= hi[axis] {
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }
}

/// A Hermitian operator on a finite set of sites around the origin.
///
/// The order of `support` fixes the tensor-factor order of `matrix`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalObservable {
    support: Vec<Site>,
    matrix: Array2<C64>,
    site_dim: usize,
    norm: f64,
}

impl LocalObservable {
    pub fn new(support: Vec<Site>, matrix: Array2<C64>, site_dim: usize) -> Result<Self> {
        let invalid = |m: String| Err(Error::InvalidObservable(m));
        if support.is_empty() {
            return invalid("empty support".into());
        }
        let d = support[0].len();
        if d == 0 || support.iter().any(|s| s.len() != d) {
            return invalid("support sites must share a positive lattice dimension".into());
        }
        if !support.iter().any(|s| s.iter().all(|&c| c == 0)) {
            return invalid(format!("support {support:?} does not contain the origin"));
        }
        let mut seen = support.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != support.len() {
            return invalid(format!("support {support:?} has repeated sites"));
        }
        if site_dim < 1 {
            return invalid("site dimension must be positive".into());
        }
        let expected = u32::try_from(support.len())
            .ok()
            .and_then(|k| site_dim.checked_pow(k))
            .ok_or_else(|| Error::InvalidObservable("support too large".into()))?;
        if matrix.dim() != (expected, expected) {
            return invalid(format!(
                "matrix shape {:?} does not match {site_dim}^{}",
                matrix.dim(),
                support.len()
            ));
        }
        let h = DenseHermitian::new(matrix)?;
        let norm = h.spectral_norm()?;
        Ok(LocalObservable {
            support,
            matrix: h.into_entries(),
            site_dim,
            norm,
        })
    }

    /// A single-site observable at the origin of ℤ^`lattice_dim`.
    pub fn onsite(matrix: Array2<C64>, lattice_dim: usize) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(vec![origin(lattice_dim)], matrix, n)
    }

    /// `coeff · σ^{w_0} ⊗ σ^{w_1} ⊗ …` on consecutive sites along the first axis.
    pub fn pauli(word: &str, coeff: f64, lattice_dim: usize) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::InvalidObservable("empty Pauli string".into()));
        }
        let m = pauli::string(word)
            .ok_or_else(|| Error::InvalidObservable(format!("bad Pauli string {word:?}")))?;
        let support = (0..word.len())
            .map(|k| {
                let mut s = origin(lattice_dim);
                s[0] = k as i64;
                s
            })
            .collect();
        Self::new(support, m * C64::new(coeff, 0.0), 2)
    }

    /// The zero observable on the origin.
    pub fn zero(site_dim: usize, lattice_dim: usize) -> Self {
        LocalObservable {
            support: vec![origin(lattice_dim)],
            matrix: Array2::zeros((site_dim, site_dim)),
            site_dim,
            norm: 0.0,
        }
    }

    /// Sum of observables, each embedded on the sorted union of supports.
    pub fn sum(parts: &[LocalObservable]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidObservable("empty sum".into()))?;
        let n = first.site_dim;
        let d = first.lattice_dim();
        if parts
            .iter()
            .any(|p| p.site_dim != n || p.lattice_dim() != d)
        {
            return Err(Error::InvalidObservable(
                "summands disagree on site or lattice dimension".into(),
            ));
        }
        let mut union: Vec<Site> = parts.iter().flat_map(|p| p.support.clone()).collect();
        union.sort();
        union.dedup();
        let dim = n.pow(union.len() as u32);
        let mut m = Array2::zeros((dim, dim));
        for p in parts {
            let pos: Vec<usize> = p
                .support
                .iter()
                .map(|s| union.binary_search(s).unwrap_or_default())
                .collect();
            accumulate_dense(
                &mut m,
                n,
                union.len(),
                &pos,
                p.matrix.view(),
                C64::new(1.0, 0.0),
            );
        }
        Self::new(union, m, n)
    }

    pub fn support(&self) -> &[Site] {
        &self.support
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn lattice_dim(&self) -> usize {
        self.support[0].len()
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Spectral norm `‖X‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_diagonal(&self) -> bool {
        crate::hermitian::is_diagonal(self.matrix.view())
    }

    pub fn is_one_site(&self) -> bool {
        self.support.len() == 1
    }

    pub fn scaled(&self, c: f64) -> Self {
        LocalObservable {
            support: self.support.clone(),
            matrix: &self.matrix * C64::new(c, 0.0),
            site_dim: self.site_dim,
            norm: self.norm * c.abs(),
        }
    }

    /// Euclidean diameter of the support.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for a in &self.support {
            for b in &self.support {
                let d2: i64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                best = best.max((d2 as f64).sqrt());
            }
        }
        best
    }

    /// Same operator with the support sorted and shifted so its
    /// lexicographically smallest site is the origin.
    fn canonical(&self) -> Self {
        let k = self.support.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| self.support[a].cmp(&self.support[b]));
        let base = self.support[order[0]].clone();
        let support = order
            .iter()
            .map(|&a| sub(&self.support[a], &base))
            .collect();
        let matrix = permute_factors(self.matrix.view(), self.site_dim, &order);
        LocalObservable {
            support,
            matrix,
            site_dim: self.site_dim,
            norm: self.norm,
        }
    }

    fn positions_in(&self, vol: &Volume, offset: &[i64]) -> Result<Vec<usize>> {
        self.support
            .iter()
            .map(|s| {
                let site = add(s, offset);
                vol.index_of(&site).ok_or(Error::SupportOutOfVolume {
                    site,
                    offset: offset.to_vec(),
                })
            })
            .collect()
    }

    fn check_lattice(&self, vol: &Volume) -> Result<()> {
        if self.lattice_dim() != vol.dimension() {
            return Err(Error::DimensionMismatch {
                expected: vol.dimension(),
                found: self.lattice_dim(),
            });
        }
        Ok(())
    }
}

/// Reorders tensor factors: new factor `a` is old factor `order[a]`.
fn permute_factors(m: ArrayView2<C64>, n: usize, order: &[usize]) -> Array2<C64> {
    let k = order.len();
    let dim = m.nrows();
    let map: Vec<usize> = (0..dim)
        .map(|new| {
            let mut old = 0usize;
            for (a, &src) in order.iter().enumerate() {
                let digit = (new / n.pow((k - 1 - a) as u32)) % n;
                old += digit * n.pow((k - 1 - src) as u32);
            }
            old
        })
        .collect();
    Array2::from_shape_fn((dim, dim), |(r, c)| m[[map[r], map[c]]])
}

/// Adds `coeff · local` acting on tensor factors `positions` of an
/// `n^total`-dimensional space into `target`.
pub(crate) fn accumulate_dense(
    target: &mut Array2<C64>,
    n: usize,
    total: usize,
    positions: &[usize],
    local: ArrayView2<C64>,
    coeff: C64,
) {
    let k = positions.len();
    let strides: Vec<usize> = positions
        .iter()
        .map(|&p| n.pow((total - 1 - p) as u32))
        .collect();
    let ldim = local.nrows();
    let local_offset: Vec<usize> = (0..ldim)
        .map(|l| {
            (0..k)
                .map(|a| ((l / n.pow((k - 1 - a) as u32)) % n) * strides[a])
                .sum()
        })
        .collect();
    let nonzero: Vec<Vec<(usize, C64)>> = (0..ldim)
        .map(|lr| {
            (0..ldim)
                .filter_map(|lc| {
                    let v = local[[lr, lc]];
                    (v != C64::new(0.0, 0.0)).then_some((lc, v * coeff))
                })
                .collect()
        })
        .collect();
    let dim = target.nrows();
    for r in 0..dim {
        let lr: usize = (0..k)
            .map(|a| ((r / strides[a]) % n) * n.pow((k - 1 - a) as u32))
            .sum();
        let base = r - local_offset[lr];
        for &(lc, v) in &nonzero[lr] {
            target[[r, base + local_offset[lc]]] += v;
        }
    }
}

/// Diagonal counterpart of [`accumulate_dense`] for diagonal `local`.
pub(crate) fn accumulate_diagonal(
    target: &mut [f64],
    n: usize,
    total: usize,
    positions: &[usize],
    local: ArrayView2<C64>,
    coeff: f64,
) {
    let k = positions.len();
    let strides: Vec<usize> = positions
        .iter()
        .map(|&p| n.pow((total - 1 - p) as u32))
        .collect();
    let diag: Vec<f64> = local.diag().iter().map(|z| z.re * coeff).collect();
    for (r, t) in target.iter_mut().enumerate() {
        let lr: usize = (0..k)
            .map(|a| ((r / strides[a]) % n) * n.pow((k - 1 - a) as u32))
            .sum();
        *t += diag[lr];
    }
}

/// `obs` translated by `offset`, tensored with the identity elsewhere in `vol`.
pub fn embed(obs: &LocalObservable, offset: &[i64], vol: &Volume) -> Result<DenseHermitian> {
    obs.check_lattice(vol)?;
    let pos = obs.positions_in(vol, offset)?;
    let dim = vol.dense_dim(obs.site_dim)?;
    let mut m = Array2::zeros((dim, dim));
    accumulate_dense(
        &mut m,
        obs.site_dim,
        vol.site_count(),
        &pos,
        obs.matrix.view(),
        C64::new(1.0, 0.0),
    );
    Ok(DenseHermitian::from_trusted(m))
}

fn translate_sum(
    obs: &LocalObservable,
    vol: &Volume,
    scale: f64,
    target: &mut Array2<C64>,
) -> Result<usize> {
    let offsets = vol.admissible_offsets(&obs.support);
    for j in &offsets {
        let pos = obs.positions_in(vol, j)?;
        accumulate_dense(
            target,
            obs.site_dim,
            vol.site_count(),
            &pos,
            obs.matrix.view(),
            C64::new(scale, 0.0),
        );
    }
    Ok(offsets.len())
}

fn translate_sum_diagonal(
    obs: &LocalObservable,
    vol: &Volume,
    scale: f64,
    target: &mut [f64],
) -> Result<usize> {
    let offsets = vol.admissible_offsets(&obs.support);
    for j in &offsets {
        let pos = obs.positions_in(vol, j)?;
        accumulate_diagonal(
            target,
            obs.site_dim,
            vol.site_count(),
            &pos,
            obs.matrix.view(),
            scale,
        );
    }
    Ok(offsets.len())
}

/// Empirical average `X̄_Λ = |Λ|⁻¹ Σ_{j: j+supp X ⊂ Λ} τ_j X`.
pub fn empirical_average(obs: &LocalObservable, vol: &Volume) -> Result<DenseHermitian> {
    obs.check_lattice(vol)?;
    let dim = vol.dense_dim(obs.site_dim)?;
    let mut m = Array2::zeros((dim, dim));
    let count = translate_sum(obs, vol, 1.0 / vol.site_count() as f64, &mut m)?;
    if count == 0 {
        return Err(Error::NoAdmissibleTranslate {
            extents: vol.extents.clone(),
        });
    }
    Ok(DenseHermitian::from_trusted(m))
}

/// Diagonal of `X̄_Λ` for diagonal `X`.
pub fn empirical_average_diagonal(obs: &LocalObservable, vol: &Volume) -> Result<Vec<f64>> {
    obs.check_lattice(vol)?;
    if !obs.is_diagonal() {
        return Err(Error::InvalidObservable(
            "diagonal path needs a diagonal observable".into(),
        ));
    }
    let dim = vol.checked_dim(obs.site_dim, DIAGONAL_DIM_CAP)?;
    let mut d = vec![0.0; dim];
    let count = translate_sum_diagonal(obs, vol, 1.0 / vol.site_count() as f64, &mut d)?;
    if count == 0 {
        return Err(Error::NoAdmissibleTranslate {
            extents: vol.extents.clone(),
        });
    }
    Ok(d)
}

/// A translation-invariant finite-range interaction, stored as one
/// representative `Φ_A` per translation class of supports.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    terms: Vec<LocalObservable>,
    site_dim: usize,
    lattice_dim: usize,
}

impl Interaction {
    /// Terms whose supports are translates of each other are merged.
    pub fn new(site_dim: usize, lattice_dim: usize, terms: Vec<LocalObservable>) -> Result<Self> {
        let mut classes: BTreeMap<Vec<Site>, LocalObservable> = BTreeMap::new();
        for t in terms {
            if t.site_dim != site_dim || t.lattice_dim() != lattice_dim {
                return Err(Error::InvalidObservable(format!(
                    "interaction term with site/lattice dimension ({}, {}) in a ({site_dim}, {lattice_dim}) model",
                    t.site_dim,
                    t.lattice_dim()
                )));
            }
            let c = t.canonical();
            match classes.get_mut(&c.support) {
                Some(acc) => {
                    let merged = &acc.matrix + &c.matrix;
                    *acc = LocalObservable::new(c.support.clone(), merged, site_dim)?;
                }
                None => {
                    classes.insert(c.support.clone(), c);
                }
            }
        }
        let terms = classes
            .into_values()
            .filter(|t| crate::hermitian::max_abs(t.matrix.view()) > 0.0)
            .collect();
        Ok(Interaction {
            terms,
            site_dim,
            lattice_dim,
        })
    }

    pub fn empty(site_dim: usize, lattice_dim: usize) -> Self {
        Interaction {
            terms: Vec::new(),
            site_dim,
            lattice_dim,
        }
    }

    pub fn terms(&self) -> &[LocalObservable] {
        &self.terms
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn lattice_dim(&self) -> usize {
        self.lattice_dim
    }

    /// `d_max`, the largest support diameter.
    pub fn range(&self) -> f64 {
        self.terms.iter().map(|t| t.diameter()).fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.is_diagonal())
    }

    pub fn is_one_site(&self) -> bool {
        self.terms.iter().all(|t| t.is_one_site())
    }

    /// Sum of the one-site terms as an `n×n` matrix.
    pub fn onsite_matrix(&self) -> Array2<C64> {
        let mut m = Array2::zeros((self.site_dim, self.site_dim));
        for t in self.terms.iter().filter(|t| t.is_one_site()) {
            m += &t.matrix;
        }
        m
    }
}

/// `H_Λ = Σ_{A ⊂ Λ} Φ_A` with open boundaries.
pub fn build_hamiltonian(phi: &Interaction, vol: &Volume) -> Result<DenseHermitian> {
    let dim = vol.dense_dim(phi.site_dim)?;
    let mut m = Array2::zeros((dim, dim));
    for t in &phi.terms {
        t.check_lattice(vol)?;
        translate_sum(t, vol, 1.0, &mut m)?;
    }
    Ok(DenseHermitian::from_trusted(m))
}

/// Diagonal of `H_Λ` for a diagonal interaction.
pub fn hamiltonian_diagonal(phi: &Interaction, vol: &Volume) -> Result<Vec<f64>> {
    if !phi.is_diagonal() {
        return Err(Error::InvalidObservable(
            "diagonal path needs a diagonal interaction".into(),
        ));
    }
    let dim = vol.checked_dim(phi.site_dim, DIAGONAL_DIM_CAP)?;
    let mut d = vec![0.0; dim];
    for t in &phi.terms {
        t.check_lattice(vol)?;
        translate_sum_diagonal(t, vol, 1.0, &mut d)?;
    }
    Ok(d)
}

/// `E_Φ = Σ_{A ∋ 0} Φ_A / |A|` on the union of the origin-containing supports.
pub fn local_energy_operator(phi: &Interaction) -> Result<LocalObservable> {
    let mut parts = Vec::new();
    for t in &phi.terms {
        let w = 1.0 / t.support_size() as f64;
        for s in &t.support {
            let shifted: Vec<Site> = t.support.iter().map(|a| sub(a, s)).collect();
            parts.push(LocalObservable::new(
                shifted,
                &t.matrix * C64::new(w, 0.0),
                t.site_dim,
            )?);
        }
    }
    if parts.is_empty() {
        return Ok(LocalObservable::zero(phi.site_dim, phi.lattice_dim));
    }
    LocalObservable::sum(&parts)
}

/// `r(Φ) = Σ_{A ∋ 0} ‖Φ_A‖`: each class with support size `k` has `k`
/// translates through the origin.
pub fn interaction_norm(phi: &Interaction) -> f64 {
    phi.terms
        .iter()
        .map(|t| t.support_size() as f64 * t.norm)
        .sum()
}

/// Fraction of translates `j ∈ V` whose support `j + S` leaves `V`.
///
/// These are exactly the translates that straddle two blocks when the
/// lattice is tiled by copies of `V`.
pub fn straddle_fraction(obs: &LocalObservable, block: &Volume) -> f64 {
    let sites = block.sites();
    let out = sites
        .iter()
        .filter(|j| obs.support.iter().any(|s| !block.contains(&add(j, s))))
        .count();
    out as f64 / sites.len() as f64
}

/// `|V|⁻¹ Σ_A ‖Φ_A‖ |A ∩ V| / |A|` over supports `A` that meet `V` without
/// lying inside it; bounds the energy-density gap between a block state and
/// its tiled translation average.
pub fn straddle_energy(phi: &Interaction, block: &Volume) -> f64 {
    let sites = block.sites();
    let mut total = 0.0;
    for t in &phi.terms {
        let mut offsets: Vec<Site> = sites
            .iter()
            .flat_map(|v| t.support.iter().map(move |s| sub(v, s)))
            .collect();
        offsets.sort();
        offsets.dedup();
        for j in offsets {
            let inside = t
                .support
                .iter()
                .filter(|s| block.contains(&add(&j, s)))
                .count();
            if inside > 0 && inside < t.support_size() {
                total += t.norm * inside as f64 / t.support_size() as f64;
            }
        }
    }
    total / sites.len() as f64
}
