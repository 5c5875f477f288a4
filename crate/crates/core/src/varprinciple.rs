//! Both sides of the mean-field variational formula.
//!
//! - [`mean_field_log_partition`]: the direct finite-volume value
//!   `|Λ|⁻¹ log Tr e^{-H_Λ + |Λ| G(X̄_Λ, Ȳ_Λ)}`.
//! - [`solve_rate_form`]: `sup_{x,y} (g(x, y) - I(x, y))`, exact in the
//!   infinite-volume limit for any interaction.
//! - [`product_state_solve`]: the supremum restricted to product states,
//!   exact when the interaction is one-site.
//! - [`block_lower_bound`]: a certified lower bound from a block trial state
//!   tiled over the lattice; valid for any interaction, tight only as the
//!   block grows.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hermitian::{DenseHermitian, C64};
use crate::lattice::{
    build_hamiltonian, empirical_average, straddle_energy, straddle_fraction, Interaction,
    LocalObservable, Volume,
};
use crate::ncpoly::{evaluate_classical, lipschitz_constant, symmetrize, NcPolynomial, Rectangle};
use crate::optim::{bfgs_minimize, golden_section_max, BfgsOptions};
use crate::spectral::{
    eigh, entropy_of_weights, expectation, gibbs_state, log_trace_exp, DensityMatrix,
};
use crate::thermo::RateFunction;
use crate::tilted::{Path, TiltedModel};

/// Bloch radii used for the product-state starts.
pub const START_RADII: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RateForm,
    ProductState,
    Block,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Grid points scanned (rate form) or starts tried (product state).
    pub grid_points: usize,
    pub refinement_steps: usize,
    /// Grid points skipped because their conjugate hit the tilt-box edge.
    pub boundary_flags: usize,
    pub converged_starts: usize,
    /// Another maximizer at a distinct point has the same value.
    pub degenerate: bool,
    /// Refined local maxima `(x, y, value)`, best first.
    pub local_maxima: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    pub maximizer: (f64, f64),
    pub value: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl VariationalResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `|Λ|⁻¹ log Tr e^{-H_Λ + |Λ| G(X̄_Λ, Ȳ_Λ)}` on the automatically chosen path.
pub fn mean_field_log_partition(
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    vol: &Volume,
) -> Result<f64> {
    mean_field_log_partition_with(phi, g, x, y, vol, Path::Auto)
}

pub fn mean_field_log_partition_with(
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    vol: &Volume,
    path: Path,
) -> Result<f64> {
    TiltedModel::build(phi, x, y, vol, path)?.mean_field(g)
}

/// `sup (g - I)` over `rect`: grid scan of the unflagged points of `rf`,
/// then coordinate-wise golden-section refinement of every grid-local
/// maximum using off-grid evaluations of `I`.
///
/// When maximizers related by symmetry tie, the representative with
/// `x ≥ 0` (then smallest norm) is reported and `degenerate` is set.
pub fn solve_rate_form(
    rf: &RateFunction,
    g: &NcPolynomial,
    rect: &Rectangle,
) -> Result<VariationalResult> {
    let (xs, ys) = (rf.xs(), rf.ys());
    let (nx, ny) = (xs.len(), ys.len());
    let mut diag = Diagnostics::default();
    let mut values = vec![f64::NEG_INFINITY; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let p = rf.at(i, j);
            if !rect.contains(p.x, p.y) {
                continue;
            }
            if p.at_boundary {
                diag.boundary_flags += 1;
                continue;
            }
            diag.grid_points += 1;
            values[i * ny + j] = evaluate_classical(g, p.x, p.y)? - p.value;
        }
    }
    let at = |i: usize, j: usize| values[i * ny + j];
    let mut seeds = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let v = at(i, j);
            if !v.is_finite() {
                continue;
            }
            let neighbours = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
            let is_max = neighbours.iter().all(|&(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a < 0
                    || b < 0
                    || a >= nx as i64
                    || b >= ny as i64
                    || at(a as usize, b as usize) <= v
            });
            if is_max {
                seeds.push((i, j));
            }
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidGrid(
            "no unflagged rate-function point inside the box".into(),
        ));
    }
    let hx = if nx > 1 { xs[1] - xs[0] } else { 0.0 };
    let hy = if ny > 1 { ys[1] - ys[0] } else { 0.0 };
    let objective = |x: f64, y: f64| -> f64 {
        if !rect.contains(x, y) {
            return f64::NEG_INFINITY;
        }
        let r = rf.eval(x, y);
        if r.at_boundary {
            return f64::NEG_INFINITY;
        }
        evaluate_classical(g, x, y).map_or(f64::NEG_INFINITY, |gv| gv - r.value)
    };
    let mut maxima = Vec::new();
    for (i, j) in seeds {
        let (mut x, mut y) = (xs[i], ys[j]);
        let mut best = at(i, j);
        for _ in 0..30 {
            diag.refinement_steps += 1;
            let before = best;
            if hx > 0.0 {
                let (lo, hi) = ((x - hx).max(xs[0]), (x + hx).min(xs[nx - 1]));
                let (cx, cv) = golden_section_max(|t| objective(t, y), lo, hi, 1e-10);
                if cv > best {
                    best = cv;
                    x = cx;
                }
            }
            if hy > 0.0 {
                let (lo, hi) = ((y - hy).max(ys[0]), (y + hy).min(ys[ny - 1]));
                let (cy, cv) = golden_section_max(|t| objective(x, t), lo, hi, 1e-10);
                if cv > best {
                    best = cv;
                    y = cy;
                }
            }
            if best - before <= 1e-14 * (1.0 + best.abs()) {
                break;
            }
        }
        maxima.push((x, y, best));
    }
    Ok(pick_representative(
        maxima,
        hx.max(hy),
        Method::RateForm,
        diag,
    ))
}

fn pick_representative(
    mut maxima: Vec<(f64, f64, f64)>,
    separation: f64,
    method: Method,
    mut diag: Diagnostics,
) -> VariationalResult {
    maxima.sort_by(|a, b| b.2.total_cmp(&a.2));
    let top = maxima[0].2;
    let tol = DEGENERACY_TOL * (1.0 + top.abs());
    let mut tied: Vec<(f64, f64, f64)> = maxima
        .iter()
        .copied()
        .filter(|m| top - m.2 <= tol)
        .collect();
    let min_sep = 2.0 * separation.max(1e-6);
    diag.degenerate = tied
        .iter()
        .any(|a| tied.iter().any(|b| (a.0 - b.0).hypot(a.1 - b.1) > min_sep));
    tied.sort_by(|a, b| {
        (b.0 >= -1e-12)
            .cmp(&(a.0 >= -1e-12))
            .then(a.0.hypot(a.1).total_cmp(&b.0.hypot(b.1)))
    });
    let chosen = tied[0];
    diag.local_maxima = maxima;
    VariationalResult {
        maximizer: (chosen.0, chosen.1),
        value: top,
        method,
        diagnostics: diag,
    }
}

/// Orthogonal basis of traceless Hermitian `n×n` matrices (generalized
/// Gell-Mann; `σx, σy, σz` for `n = 2`).
pub fn traceless_basis(n: usize) -> Vec<Array2<C64>> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            let mut s = Array2::zeros((n, n));
            s[[j, k]] = C64::new(1.0, 0.0);
            s[[k, j]] = C64::new(1.0, 0.0);
            out.push(s);
            let mut a = Array2::zeros((n, n));
            a[[j, k]] = C64::new(0.0, -1.0);
            a[[k, j]] = C64::new(0.0, 1.0);
            out.push(a);
        }
    }
    for l in 1..n {
        let c = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut d = Array2::zeros((n, n));
        for j in 0..l {
            d[[j, j]] = C64::new(c, 0.0);
        }
        d[[l, l]] = C64::new(-c * l as f64, 0.0);
        out.push(d);
    }
    out
}

fn product_starts(n: usize) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![0.0; n * n - 1]];
    if n == 2 {
        for a in -1..=1_i32 {
            for b in -1..=1_i32 {
                for c in -1..=1_i32 {
                    if (a, b, c) == (0, 0, 0) {
                        continue;
                    }
                    let dir = [a as f64, b as f64, c as f64];
                    let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                    for r in START_RADII {
                        starts.push(dir.iter().map(|d| r.atanh() * d / len).collect());
                    }
                }
            }
        }
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..26 {
            let dir: Vec<f64> = (0..n * n - 1)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let len = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
            for r in START_RADII {
                starts.push(dir.iter().map(|d| 2.0 * r.atanh() * d / len).collect());
            }
        }
    }
    starts
}

/// `sup_ρ [g(tr ρA, tr ρB) + S(ρ) - tr ρD]` over one-site density matrices.
///
/// States are parametrized as `ρ = e^K / tr e^K` with `K` traceless
/// Hermitian; each start is refined by BFGS and the best value wins (ties go
/// to the earlier start).
pub fn product_state_solve(
    d: &LocalObservable,
    a: &LocalObservable,
    b: &LocalObservable,
    g: &NcPolynomial,
    exec: Execution,
) -> Result<VariationalResult> {
    for (name, o) in [("D", d), ("A", a), ("B", b)] {
        if !o.is_one_site() {
            return Err(Error::NonOneSiteObservable(name));
        }
    }
    let n = d.site_dim();
    if a.site_dim() != n || b.site_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if a.site_dim() != n {
                a.site_dim()
            } else {
                b.site_dim()
            },
        });
    }
    let g = symmetrize(g);
    let basis = traceless_basis(n);
    let (dm, am, bm) = (
        DenseHermitian::new(d.matrix().clone())?,
        DenseHermitian::new(a.matrix().clone())?,
        DenseHermitian::new(b.matrix().clone())?,
    );
    // returns (value, ⟨A⟩, ⟨B⟩)
    let evaluate = |k: &[f64]| -> Result<(f64, f64, f64)> {
        let mut m = Array2::<C64>::zeros((n, n));
        for (c, t) in k.iter().zip(&basis) {
            m.scaled_add(C64::new(*c, 0.0), t);
        }
        let spec = eigh(&DenseHermitian::new(m)?)?;
        let w = spec.gibbs_weights();
        let ea = weighted(&w, &spec.diagonal_of(am.entries().view()));
        let eb = weighted(&w, &spec.diagonal_of(bm.entries().view()));
        let ed = weighted(&w, &spec.diagonal_of(dm.entries().view()));
        Ok((
            evaluate_classical(&g, ea, eb)? + entropy_of_weights(&w) - ed,
            ea,
            eb,
        ))
    };
    evaluate(&vec![0.0; basis.len()])?;
    let starts = product_starts(n);
    let runs = exec.map(starts.len(), |s| {
        let f = |k: &[f64]| evaluate(k).map_or(f64::INFINITY, |r| -r.0);
        bfgs_minimize(f, &starts[s], &BfgsOptions::default())
    });
    let converged = runs.iter().filter(|r| r.converged).count();
    let maxima = runs
        .iter()
        .map(|r| evaluate(&r.x).map(|(v, ea, eb)| (ea, eb, v)))
        .collect::<Result<Vec<_>>>()?;
    let diag = Diagnostics {
        grid_points: starts.len(),
        refinement_steps: runs.iter().map(|r| r.iterations).sum(),
        converged_starts: converged,
        ..Default::default()
    };
    let mut result = pick_representative(maxima, 1e-4, Method::ProductState, diag);
    // keep the list short: one entry per distinct maximizer
    result
        .diagnostics
        .local_maxima
        .dedup_by(|a, b| (a.0 - b.0).hypot(a.1 - b.1) < 1e-5);
    Ok(result)
}

fn weighted(w: &[f64], vals: &[f64]) -> f64 {
    w.iter().zip(vals).map(|(a, b)| a * b).sum()
}

/// A block density matrix with its derived per-site quantities.
#[derive(Debug, Clone)]
pub struct TrialState {
    block: Volume,
    density: DensityMatrix,
    entropy_density: f64,
    /// `μ(X̄_V)` and `μ(Ȳ_V)`, with translates leaving `V` omitted.
    mean_x: f64,
    mean_y: f64,
    /// `μ(H_V) / |V|`.
    energy_density: f64,
}

impl TrialState {
    pub fn new(
        phi: &Interaction,
        x: &LocalObservable,
        y: &LocalObservable,
        block: &Volume,
        density: DensityMatrix,
    ) -> Result<Self> {
        let sites = block.site_count() as f64;
        let h = build_hamiltonian(phi, block)?;
        if h.dim() != density.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: density.dim(),
            });
        }
        let mean = |o: &LocalObservable| -> Result<f64> {
            match empirical_average(o, block) {
                Ok(avg) => expectation(&density, &avg),
                Err(Error::NoAdmissibleTranslate { .. }) => Ok(0.0),
                Err(e) => Err(e),
            }
        };
        Ok(TrialState {
            entropy_density: crate::spectral::von_neumann_entropy(&density)? / sites,
            mean_x: mean(x)?,
            mean_y: mean(y)?,
            energy_density: expectation(&density, &h)? / sites,
            block: block.clone(),
            density,
        })
    }

    pub fn block(&self) -> &Volume {
        &self.block
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn entropy_density(&self) -> f64 {
        self.entropy_density
    }

    pub fn observable_means(&self) -> (f64, f64) {
        (self.mean_x, self.mean_y)
    }

    pub fn energy_density(&self) -> f64 {
        self.energy_density
    }
}

/// `(bound, correction)` for a block trial state; `bound - correction` is a
/// certified lower bound on the infinite-volume mean-field value.
///
/// `bound = g(μ(X̄_V), μ(Ȳ_V)) + S(μ)/|V| - μ(H_V)/|V|`. Tiling the lattice
/// with copies of `μ` and averaging over translations of `V` gives a state
/// with the same mean entropy whose observable and energy densities differ
/// from the block values only through translates straddling two blocks, so
/// `correction = L_g (‖X‖ f_X + ‖Y‖ f_Y) + e_∂`, where `f_X` is the fraction
/// of translates of `supp X` anchored in `V` that leave `V`, `e_∂` is the
/// norm density of interaction terms cut by the block boundary and `L_g` is
/// [`lipschitz_constant`] on `Ran(X, Y)`.
pub fn block_lower_bound(
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    block: &Volume,
    trial: &TrialState,
) -> Result<(f64, f64)> {
    if trial.block != *block {
        return Err(Error::validation(
            "trial",
            "trial state lives on a different block",
        ));
    }
    let bound = evaluate_classical(g, trial.mean_x, trial.mean_y)? + trial.entropy_density
        - trial.energy_density;
    Ok((bound, block_correction(phi, g, x, y, block)))
}

fn block_correction(
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    block: &Volume,
) -> f64 {
    let lg = lipschitz_constant(g, &Rectangle::from_observables(x, y));
    let cut = x.norm() * straddle_fraction(x, block) + y.norm() * straddle_fraction(y, block);
    let obs_term = if cut > 0.0 { lg * cut } else { 0.0 };
    obs_term + straddle_energy(phi, block)
}

/// Best block state in the tilted Gibbs family
/// `μ_t ∝ e^{-H_V + |V|(t_x X̄_V + t_y Ȳ_V)}`, maximizing the bound of
/// [`block_lower_bound`] from a 5×5 grid of starting tilts (scaled by
/// `1/‖X‖`, `1/‖Y‖`).
pub fn optimize_block_state(
    phi: &Interaction,
    g: &NcPolynomial,
    x: &LocalObservable,
    y: &LocalObservable,
    block: &Volume,
    exec: Execution,
) -> Result<TrialState> {
    let model = TiltedModel::build(phi, x, y, block, Path::Dense)?;
    let bound_at = |t: &[f64]| -> Result<f64> {
        let s = model.state(t[0], t[1])?;
        let n = model.sites() as f64;
        Ok(evaluate_classical(g, s.mean_x, s.mean_y)? + (s.entropy - s.energy) / n)
    };
    let scale = |norm: f64| if norm > 0.0 { 1.0 / norm } else { 0.0 };
    let (sx, sy) = (scale(x.norm()), scale(y.norm()));
    let levels = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut starts: Vec<[f64; 2]> = Vec::new();
    for a in levels {
        for b in levels {
            let s = [a * sx, b * sy];
            if !starts.contains(&s) {
                starts.push(s);
            }
        }
    }
    let free = [sx > 0.0, sy > 0.0];
    let runs = exec.map(starts.len(), |k| {
        let f = |t: &[f64]| {
            let t = [
                if free[0] { t[0] } else { 0.0 },
                if free[1] { t[1] } else { 0.0 },
            ];
            bound_at(&t).map_or(f64::INFINITY, |v| -v)
        };
        bfgs_minimize(f, &starts[k], &BfgsOptions::default())
    });
    let best = runs
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |acc, (k, r)| match acc {
            Some((_, v)) if v <= r.value => acc,
            _ => Some((k, r.value)),
        })
        .map(|(k, _)| k)
        .unwrap_or(0);
    let t = &runs[best].x;
    let (h, xa, ya) = model.dense_operators().expect("dense path requested");
    let n = model.sites() as f64;
    let a = xa
        .scaled(n * t[0])
        .add_scaled(ya, n * t[1])?
        .add_scaled(h, -1.0)?;
    TrialState::new(phi, x, y, block, gibbs_state(&a)?)
}

/// `(|log Tr e^{-H+W+G} - log Tr e^{-H+G}|, ‖W‖, lhs ≤ rhs + 1e-10)`.
pub fn boundary_perturbation_check(
    h: &DenseHermitian,
    w: &DenseHermitian,
    gop: &DenseHermitian,
) -> Result<(f64, f64, bool)> {
    h.check_dim(w.dim())?;
    h.check_dim(gop.dim())?;
    let base = gop.add_scaled(h, -1.0)?;
    let lhs = (log_trace_exp(&base.add_scaled(w, 1.0)?)? - log_trace_exp(&base)?).abs();
    let rhs = w.spectral_norm()?;
    Ok((lhs, rhs, lhs <= rhs + 1e-10))
}
