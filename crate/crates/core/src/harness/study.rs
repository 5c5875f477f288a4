//! The end-to-end convergence study.

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Model, SCHEMA_VERSION};
use super::oracles::{
    oracle_classical_sector_sum, oracle_scalar_curie_weiss, oracle_transfer_matrix_1d,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::{LocalObservable, Volume};
use crate::ncpoly::{evaluate_classical_complex, Rectangle};
use crate::thermo::{
    extrapolate_pressure, involution_check_with, legendre_transform, pressure_surface,
    PressureSurface, RateFunction,
};
use crate::tilted::TiltedModel;
use crate::varprinciple::{
    block_lower_bound, optimize_block_state, product_state_solve, solve_rate_form,
    VariationalResult,
};

/// One volume of the direct sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub sites: usize,
    /// `|Λ|⁻¹ log Tr e^{-H_Λ + |Λ| G(X̄_Λ, Ȳ_Λ)}`.
    pub direct: f64,
    /// `p_Λ(0, 0)`.
    pub pressure_origin: f64,
    pub variational: f64,
    /// `|direct − variational|`.
    pub gap: f64,
    /// Classical sector-sum reference, when selected.
    pub oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRow {
    pub sites: usize,
    pub bound: f64,
    pub correction: f64,
    /// `bound − correction`.
    pub certified: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub name: String,
    pub reference: f64,
    pub computed: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// Quality figures of the pressure surface and its conjugate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub volumes: Vec<usize>,
    pub max_error: f64,
    pub interpolation_error: f64,
    pub convexity_violation: f64,
    pub rate_error_bound: f64,
    pub involution_deviation: f64,
    pub boundary_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub schema_version: u32,
    pub name: String,
    /// Sorted by site count.
    pub rows: Vec<ReportRow>,
    pub variational: VariationalResult,
    pub product_state: Option<VariationalResult>,
    pub blocks: Vec<BlockRow>,
    pub surface: SurfaceSummary,
    pub oracles: Vec<OracleRow>,
    pub checks: Vec<Check>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn best_certified_bound(&self) -> Option<f64> {
        self.blocks.iter().map(|b| b.certified).reduce(f64::max)
    }
}

/// `(sites, direct, p_Λ(0,0))` for every configured volume.
pub fn direct_sequence(
    cfg: &ExperimentConfig,
    model: &Model,
    exec: Execution,
) -> Result<Vec<(usize, f64, f64)>> {
    let vols = cfg.volumes()?;
    exec.try_map(vols.len(), |k| {
        let vol = &vols[k];
        let tm = TiltedModel::build(&model.phi, &model.x, &model.y, vol, cfg.study.path)
            .map_err(|e| e.in_stage(format!("direct value at |Λ| = {}", vol.site_count())))?;
        let direct = tm.mean_field(&model.g)?;
        let p0 = tm.pressure(0.0, 0.0)?;
        Ok::<_, Error>((vol.site_count(), direct, p0))
    })
}

pub fn pressure_stage(
    cfg: &ExperimentConfig,
    model: &Model,
    exec: Execution,
) -> Result<PressureSurface> {
    pressure_surface(
        &model.phi,
        &model.x,
        &model.y,
        &cfg.grid.tilt(),
        &cfg.pressure_volumes()?,
        cfg.study.path,
        exec,
    )
    .map_err(|e| e.in_stage("pressure surface"))
}

pub fn legendre_stage(
    cfg: &ExperimentConfig,
    ps: &PressureSurface,
    exec: Execution,
) -> Result<RateFunction> {
    legendre_transform(ps, &cfg.grid.xy(), exec).map_err(|e| e.in_stage("Legendre transform"))
}

/// Product-state value, when every operator lives on one site.
fn product_state_stage(model: &Model, exec: Execution) -> Result<Option<VariationalResult>> {
    if !(model.phi.is_one_site() && model.x.is_one_site() && model.y.is_one_site()) {
        return Ok(None);
    }
    let d = LocalObservable::onsite(model.phi.onsite_matrix(), model.phi.lattice_dim())?;
    product_state_solve(&d, &model.x, &model.y, &model.g, exec)
        .map(Some)
        .map_err(|e| e.in_stage("product-state solve"))
}

fn block_stage(cfg: &ExperimentConfig, model: &Model, exec: Execution) -> Result<Vec<BlockRow>> {
    let Model { phi, x, y, g } = model;
    cfg.block_volumes()?
        .iter()
        .map(|block| {
            let ctx = || format!("block bound at |V| = {}", block.site_count());
            let trial =
                optimize_block_state(phi, g, x, y, block, exec).map_err(|e| e.in_stage(ctx()))?;
            let (bound, correction) =
                block_lower_bound(phi, g, x, y, block, &trial).map_err(|e| e.in_stage(ctx()))?;
            Ok(BlockRow {
                sites: block.site_count(),
                bound,
                correction,
                certified: bound - correction,
            })
        })
        .collect()
}

/// `(c₀, c₁)` with `m = c₀ + c₁σᶻ` for a diagonal 2×2 one-site operator.
fn diagonal_split(m: &ndarray::Array2<crate::hermitian::C64>) -> (f64, f64) {
    let (a, b) = (m[(0, 0)].re, m[(1, 1)].re);
    (0.5 * (a + b), 0.5 * (a - b))
}

/// Exact classical sector sums for every volume; `None` entries never occur.
fn classical_sector_values(model: &Model, vols: &[Volume]) -> Result<Vec<f64>> {
    let Model { phi, x, y, g } = model;
    let eligible = phi.site_dim() == 2
        && phi.is_one_site()
        && phi.is_diagonal()
        && [x, y].iter().all(|o| o.is_one_site() && o.is_diagonal());
    if !eligible {
        return Err(Error::validation(
            "oracles.classical_sector",
            "needs spin-1/2 sites, a diagonal one-site interaction and diagonal one-site observables",
        ));
    }
    let (d0, d1) = diagonal_split(&phi.onsite_matrix());
    let (x0, x1) = diagonal_split(x.matrix());
    let (y0, y1) = diagonal_split(y.matrix());
    let gm = |m: f64| evaluate_classical_complex(g, x0 + x1 * m, y0 + y1 * m).re;
    Ok(vols
        .iter()
        .map(|v| -d0 + oracle_classical_sector_sum(-d1, &gm, v.site_count()))
        .collect())
}

/// Extrapolated `p(u, 0)` over the pressure volumes.
fn extrapolated_pressure_at(
    cfg: &ExperimentConfig,
    model: &Model,
    u: f64,
    exec: Execution,
) -> Result<f64> {
    let vols = cfg.pressure_volumes()?;
    let samples = exec.try_map(vols.len(), |k| {
        let tm = TiltedModel::build(&model.phi, &model.x, &model.y, &vols[k], cfg.study.path)?;
        Ok::<_, Error>((vols[k].site_count(), tm.pressure(u, 0.0)?))
    })?;
    if samples.len() == 1 {
        return Ok(samples[0].1);
    }
    Ok(extrapolate_pressure(&samples)?.0)
}

/// Reference values of the selected oracles, labelled as in the report.
pub fn reference_values(cfg: &ExperimentConfig, model: &Model) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    if let Some(cw) = cfg.oracles.curie_weiss {
        out.push((
            "curie_weiss".to_string(),
            oracle_scalar_curie_weiss(cw.lambda, cw.h),
        ));
    }
    if let Some(tm) = cfg.oracles.transfer_matrix {
        out.push((
            "transfer_matrix".to_string(),
            oracle_transfer_matrix_1d(tm.j, tm.u),
        ));
    }
    if cfg.oracles.classical_sector {
        let vols = cfg.volumes()?;
        for (v, val) in vols.iter().zip(classical_sector_values(model, &vols)?) {
            out.push((format!("classical_sector:{}", v.site_count()), val));
        }
    }
    Ok(out)
}

/// Direct sequence, pressure surface, conjugate, variational value,
/// product-state and block bounds, oracles and tolerance checks.
///
/// Identical configs give bit-identical reports regardless of execution
/// mode or thread count.
pub fn run_convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let exec = cfg.run.execution;
    exec.with_threads(cfg.run.threads, || study(cfg, exec))
}

fn study(cfg: &ExperimentConfig, exec: Execution) -> Result<ConvergenceReport> {
    let model = cfg.model.build()?;
    let direct = direct_sequence(cfg, &model, exec)?;

    let ps = pressure_stage(cfg, &model, exec)?;
    let rf = legendre_stage(cfg, &ps, exec)?;
    let involution = involution_check_with(&ps, &rf, exec);
    let rect = Rectangle::from_observables(&model.x, &model.y);
    let variational =
        solve_rate_form(&rf, &model.g, &rect).map_err(|e| e.in_stage("rate-form solve"))?;
    let product_state = product_state_stage(&model, exec)?;
    let blocks = block_stage(cfg, &model, exec)?;

    let sector = if cfg.oracles.classical_sector {
        Some(classical_sector_values(&model, &cfg.volumes()?).map_err(|e| e.in_stage("oracles"))?)
    } else {
        None
    };
    let rows: Vec<ReportRow> = direct
        .iter()
        .enumerate()
        .map(|(k, &(sites, direct, pressure_origin))| ReportRow {
            sites,
            direct,
            pressure_origin,
            variational: variational.value,
            gap: (direct - variational.value).abs(),
            oracle: sector.as_ref().map(|s| s[k]),
        })
        .collect();

    let mut oracles = Vec::new();
    if let Some(cw) = cfg.oracles.curie_weiss {
        let reference = oracle_scalar_curie_weiss(cw.lambda, cw.h);
        oracles.push(OracleRow {
            name: "curie_weiss".into(),
            reference,
            computed: variational.value,
            deviation: (reference - variational.value).abs(),
        });
    }
    if let Some(tm) = cfg.oracles.transfer_matrix {
        let reference = oracle_transfer_matrix_1d(tm.j, tm.u);
        let computed =
            extrapolated_pressure_at(cfg, &model, tm.u, exec).map_err(|e| e.in_stage("oracles"))?;
        oracles.push(OracleRow {
            name: "transfer_matrix".into(),
            reference,
            computed,
            deviation: (reference - computed).abs(),
        });
    }
    for row in &rows {
        if let Some(reference) = row.oracle {
            oracles.push(OracleRow {
                name: format!("classical_sector:{}", row.sites),
                reference,
                computed: row.direct,
                deviation: (reference - row.direct).abs(),
            });
        }
    }

    let tol = &cfg.tolerances;
    let mut checks = Vec::new();
    if let (Some(t), Some(last)) = (tol.gap, rows.last()) {
        checks.push(Check::at_most(
            format!("gap at |Λ| = {}", last.sites),
            last.gap,
            t,
        ));
    }
    if let Some(t) = tol.oracle {
        for o in &oracles {
            checks.push(Check::at_most(format!("oracle {}", o.name), o.deviation, t));
        }
    }
    if let (Some(t), Some(ps)) = (tol.product_state, &product_state) {
        checks.push(Check::at_most(
            "product state vs rate form",
            (ps.value - variational.value).abs(),
            t,
        ));
    }
    if let Some(last) = rows.last() {
        for b in &blocks {
            checks.push(Check::at_most(
                format!(
                    "block bound |V| = {} below direct at |Λ| = {}",
                    b.sites, last.sites
                ),
                b.certified - last.direct,
                tol.lower_bound_slack,
            ));
        }
    }

    let surface = SurfaceSummary {
        volumes: ps.volumes().to_vec(),
        max_error: ps.max_error(),
        interpolation_error: ps.interpolation_error(),
        convexity_violation: ps.convexity_violation(),
        rate_error_bound: rf.error_bound(),
        involution_deviation: involution,
        boundary_points: rf.points().iter().filter(|p| p.at_boundary).count(),
    };
    Ok(ConvergenceReport {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        rows,
        variational,
        product_state,
        blocks,
        surface,
        oracles,
        checks,
    })
}
