//! Random instances and property checks shared by the property suites and
//! the acceptance run. Each check returns `Err(description)` on violation.
#![allow(dead_code)]

use meanfield::hermitian::{pauli, DenseHermitian, C64};
use meanfield::lattice::{
    build_hamiltonian, empirical_average, Interaction, LocalObservable, Volume,
};
use meanfield::ncpoly::{quantize, NcPolynomial};
use meanfield::spectral::{
    expectation, gibbs_state, log_trace_exp, sector_decompose, von_neumann_entropy, DensityMatrix,
};
use meanfield::thermo::{involution_check, legendre_transform, pressure_surface, TiltGrid, XyGrid};
use meanfield::tilted::{Path, TiltedModel};
use meanfield::varprinciple::{boundary_perturbation_check, mean_field_log_partition_with};
use meanfield::Execution;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `a₀ + a·σ` with coefficients uniform in `[-scale, scale]`.
pub fn random_qubit_matrix(rng: &mut impl Rng, scale: f64) -> Array2<C64> {
    let coeffs: [f64; 4] = std::array::from_fn(|_| rng.random_range(-scale..=scale));
    let mut m = pauli::identity() * c(coeffs[0]);
    for (k, s) in [pauli::x(), pauli::y(), pauli::z()].into_iter().enumerate() {
        m = m + s * c(coeffs[k + 1]);
    }
    m
}

/// Random Hermitian `n×n` with entries of size about `scale`.
pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> DenseHermitian {
    let mut m = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        m[(i, i)] = c(rng.random_range(-scale..=scale));
        for j in 0..i {
            let z = C64::new(
                rng.random_range(-scale..=scale),
                rng.random_range(-scale..=scale),
            );
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    DenseHermitian::new(m).expect("Hermitian by construction")
}

/// `A A† / Tr(A A†)` for a random complex `A`.
pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
    let a = Array2::from_shape_fn((n, n), |_| {
        C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
    });
    let aa = a.dot(&a.t().mapv(|z| z.conj()));
    let aa = (&aa + &aa.t().mapv(|z| z.conj())) * c(0.5);
    DensityMatrix::normalized(DenseHermitian::new(aa).unwrap()).unwrap()
}

/// Random symmetric polynomial of degree ≤ 2 in two letters.
pub fn random_quadratic(rng: &mut impl Rng) -> NcPolynomial {
    let mut terms: Vec<(&str, C64)> = vec![
        ("", c(rng.random_range(-0.5..=0.5))),
        ("x", c(rng.random_range(-0.5..=0.5))),
        ("y", c(rng.random_range(-0.5..=0.5))),
        ("xx", c(rng.random_range(-0.5..=0.5))),
        ("yy", c(rng.random_range(-0.5..=0.5))),
    ];
    // c·xy + c̄·yx with arbitrary complex c is symmetric.
    let z = C64::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5));
    terms.push(("xy", z));
    terms.push(("yx", z.conj()));
    NcPolynomial::from_terms(terms).unwrap()
}

/// Two-level one-site model: random field, random `X`, `Y`.
pub struct OnsiteModel {
    pub phi: Interaction,
    pub x: LocalObservable,
    pub y: LocalObservable,
}

pub fn random_onsite_model(rng: &mut impl Rng) -> OnsiteModel {
    let phi = Interaction::new(
        2,
        1,
        vec![LocalObservable::onsite(random_qubit_matrix(rng, 0.8), 1).unwrap()],
    )
    .unwrap();
    let x = LocalObservable::onsite(random_qubit_matrix(rng, 1.0), 1).unwrap();
    let y = LocalObservable::onsite(random_qubit_matrix(rng, 1.0), 1).unwrap();
    OnsiteModel { phi, x, y }
}

/// Chain with a random nearest-neighbour coupling and one-site field.
pub fn random_chain_model(rng: &mut impl Rng) -> OnsiteModel {
    let mut coupling = Array2::<C64>::zeros((4, 4));
    for a in [pauli::x(), pauli::y(), pauli::z()] {
        let w = rng.random_range(-0.6..=0.6);
        coupling = coupling + meanfield::hermitian::kron(a.view(), a.view()) * c(w);
    }
    let phi = Interaction::new(
        2,
        1,
        vec![
            LocalObservable::new(vec![vec![0], vec![1]], coupling, 2).unwrap(),
            LocalObservable::onsite(random_qubit_matrix(rng, 0.5), 1).unwrap(),
        ],
    )
    .unwrap();
    let x = LocalObservable::onsite(random_qubit_matrix(rng, 1.0), 1).unwrap();
    let y = LocalObservable::onsite(random_qubit_matrix(rng, 1.0), 1).unwrap();
    OnsiteModel { phi, x, y }
}

/// `|log Tr e^{-H+W+G} − log Tr e^{-H+G}| ≤ ‖W‖` with `G = |Λ| G(X̄, Ȳ)`.
pub fn check_log_trace(rng: &mut impl Rng) -> Check {
    let m = random_chain_model(rng);
    let sites = rng.random_range(2..=4);
    let vol = Volume::chain(sites).unwrap();
    let h = build_hamiltonian(&m.phi, &vol).map_err(|e| e.to_string())?;
    let xa = empirical_average(&m.x, &vol).map_err(|e| e.to_string())?;
    let ya = empirical_average(&m.y, &vol).map_err(|e| e.to_string())?;
    let g = random_quadratic(rng);
    let gop = quantize(&g, &xa, &ya)
        .map_err(|e| e.to_string())?
        .scaled(sites as f64);
    let scale = rng.random_range(0.01..=2.0);
    let w = random_hermitian(rng, h.dim(), scale);
    let (lhs, rhs, ok) = boundary_perturbation_check(&h, &w, &gop).map_err(|e| e.to_string())?;
    if ok && lhs <= rhs + 1e-10 {
        Ok(())
    } else {
        Err(format!("log-trace: {lhs} > ‖W‖ = {rhs}"))
    }
}

/// `Tr ρA + S(ρ) ≤ log Tr e^A`, with equality at the Gibbs state.
pub fn check_gibbs_variational(rng: &mut impl Rng) -> Check {
    let n = rng.random_range(2..=8);
    let a = random_hermitian(rng, n, 2.0);
    let rho = random_density(rng, n);
    let free = |r: &DensityMatrix| -> Result<f64, String> {
        Ok(expectation(r, &a).map_err(|e| e.to_string())?
            + von_neumann_entropy(r).map_err(|e| e.to_string())?)
    };
    let bound = log_trace_exp(&a).map_err(|e| e.to_string())?;
    let trial = free(&rho)?;
    if trial > bound + 1e-12 {
        return Err(format!("Gibbs inequality: {trial} > {bound}"));
    }
    let at_gibbs = free(&gibbs_state(&a).map_err(|e| e.to_string())?)?;
    if (at_gibbs - bound).abs() > 1e-9 {
        return Err(format!("Gibbs equality: {at_gibbs} vs {bound}"));
    }
    Ok(())
}

fn random_tilt(rng: &mut impl Rng) -> (f64, f64) {
    (rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0))
}

/// `p_Λ((a+b)/2) ≤ (p_Λ(a) + p_Λ(b))/2` at a fixed volume.
pub fn check_pressure_midpoint(rng: &mut impl Rng) -> Check {
    let m = random_chain_model(rng);
    let vol = Volume::chain(rng.random_range(2..=5)).unwrap();
    let tm = TiltedModel::build(&m.phi, &m.x, &m.y, &vol, Path::Auto).map_err(|e| e.to_string())?;
    let p = |u: f64, v: f64| tm.pressure(u, v).map_err(|e| e.to_string());
    let (a, b) = (random_tilt(rng), random_tilt(rng));
    let mid = p(0.5 * (a.0 + b.0), 0.5 * (a.1 + b.1))?;
    let chord = 0.5 * (p(a.0, a.1)? + p(b.0, b.1)?);
    if mid <= chord + 1e-12 {
        Ok(())
    } else {
        Err(format!("midpoint convexity: {mid} > {chord}"))
    }
}

/// Gradient against central differences, relative `1e-6`.
pub fn check_gradient(rng: &mut impl Rng) -> Check {
    let m = random_chain_model(rng);
    let vol = Volume::chain(rng.random_range(1..=5)).unwrap();
    let tm = TiltedModel::build(&m.phi, &m.x, &m.y, &vol, Path::Auto).map_err(|e| e.to_string())?;
    let (u, v) = random_tilt(rng);
    let (gu, gv) = tm.gradient(u, v).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let p = |u: f64, v: f64| tm.pressure(u, v).map_err(|e| e.to_string());
    let fu = (p(u + h, v)? - p(u - h, v)?) / (2.0 * h);
    let fv = (p(u, v + h)? - p(u, v - h)?) / (2.0 * h);
    for (g, f) in [(gu, fu), (gv, fv)] {
        if (g - f).abs() > 1e-6 * g.abs().max(1.0) {
            return Err(format!("gradient {g} vs finite difference {f}"));
        }
    }
    Ok(())
}

/// `sup_{x,y}(ux + vy − I) = p` on the tilt grid for a one-site two-level model.
pub fn check_legendre_involution(rng: &mut impl Rng) -> Check {
    let m = random_onsite_model(rng);
    let vols = [Volume::chain(1).unwrap()];
    let ps = pressure_surface(
        &m.phi,
        &m.x,
        &m.y,
        &TiltGrid::square(65),
        &vols,
        Path::Auto,
        Execution::Parallel,
    )
    .map_err(|e| e.to_string())?;
    let rf = legendre_transform(&ps, &XyGrid::square(65), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let dev = involution_check(&ps, &rf);
    if dev <= 1e-4 {
        Ok(())
    } else {
        Err(format!("involution deviation {dev:e}"))
    }
}

/// Sector and dense paths agree on the mean-field value for `N ≤ 10`.
pub fn check_sector_vs_dense(rng: &mut impl Rng) -> Check {
    let m = random_onsite_model(rng);
    let g = random_quadratic(rng);
    let vol = Volume::chain(rng.random_range(1..=10)).unwrap();
    let run = |path| {
        mean_field_log_partition_with(&m.phi, &g, &m.x, &m.y, &vol, path).map_err(|e| e.to_string())
    };
    let (s, d) = (run(Path::Sector)?, run(Path::Dense)?);
    if (s - d).abs() <= 1e-9 {
        Ok(())
    } else {
        Err(format!(
            "sector {s} vs dense {d} at N = {}",
            vol.site_count()
        ))
    }
}

/// `ρ^{⊗N}(X̄ Ȳ) − ρ(X)ρ(Y)` for `ρ ∝ e^K`, evaluated in the spin sectors.
pub fn product_state_error(
    k: &Array2<C64>,
    x: &Array2<C64>,
    y: &Array2<C64>,
    n: usize,
) -> Result<C64, String> {
    let model = sector_decompose(n).map_err(|e| e.to_string())?;
    let joint = model
        .expectation_with(
            |s| s.collective(n, k),
            |s| Ok(s.average(n, x)?.entries().dot(s.average(n, y)?.entries())),
        )
        .map_err(|e| e.to_string())?;
    let rho = gibbs_state(&DenseHermitian::new(k.clone()).unwrap()).map_err(|e| e.to_string())?;
    let mean = |o: &Array2<C64>| {
        expectation(&rho, &DenseHermitian::new(o.clone()).unwrap()).map_err(|e| e.to_string())
    };
    Ok(joint - c(mean(x)? * mean(y)?))
}

/// The concentration error halves from `N = 8` to `N = 16`.
pub fn check_concentration_halving(rng: &mut impl Rng) -> Check {
    let k = random_qubit_matrix(rng, 1.0);
    let x = random_qubit_matrix(rng, 1.0);
    let y = random_qubit_matrix(rng, 1.0);
    let e8 = product_state_error(&k, &x, &y, 8)?.norm();
    let e16 = product_state_error(&k, &x, &y, 16)?.norm();
    if e8 < 1e-9 {
        return if e16 < 1e-9 {
            Ok(())
        } else {
            Err(format!("error grew from {e8:e} to {e16:e}"))
        };
    }
    let ratio = e8 / e16;
    if (ratio - 2.0).abs() <= 0.05 {
        Ok(())
    } else {
        Err(format!(
            "concentration ratio {ratio} (errors {e8:e}, {e16:e})"
        ))
    }
}
