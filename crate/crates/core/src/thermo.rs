//! Tilted pressure `p(u, v)`, its extrapolation to infinite volume and its
//! Legendre–Fenchel conjugate `I(x, y) = sup_{u,v} (ux + vy - p(u, v))`.
//!
//! A [`PressureSurface`] stores `p`, `∇p` and an error estimate on a tilt
//! grid and interpolates with a C¹ bicubic Hermite patch (cross derivative
//! from finite differences of the gradients). The conjugate is computed by a
//! node scan followed by projected Newton ascent on the interpolant, so it is
//! available at arbitrary `(x, y)`, not only on the grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::{Interaction, LocalObservable, Volume};
use crate::ncpoly::{axis, Rectangle};
use crate::tilted::{Path, TiltedModel};

/// Number of volumes required by [`extrapolate_pressure`].
pub const MIN_EXTRAPOLATION_SAMPLES: usize = 3;
const EDGE_TOL: f64 = 1e-9;
const OUTWARD_TOL: f64 = 1e-8;

/// `|Λ|⁻¹ log Tr e^{-H_Λ + u X_Λ + v Y_Λ}`.
pub fn finite_volume_pressure(
    phi: &Interaction,
    x: &LocalObservable,
    y: &LocalObservable,
    u: f64,
    v: f64,
    vol: &Volume,
) -> Result<f64> {
    TiltedModel::build(phi, x, y, vol, Path::Auto)?.pressure(u, v)
}

/// `(⟨X̄_Λ⟩, ⟨Ȳ_Λ⟩)` under the tilted Gibbs state.
pub fn pressure_gradient(
    phi: &Interaction,
    x: &LocalObservable,
    y: &LocalObservable,
    u: f64,
    v: f64,
    vol: &Volume,
) -> Result<(f64, f64)> {
    TiltedModel::build(phi, x, y, vol, Path::Auto)?.gradient(u, v)
}

/// Least-squares fit of `p_Λ = p_∞ + b/|Λ|` on the largest half of the
/// samples (at least two). Returns `(p_∞, err)` with
/// `err = max residual + |b| / |Λ_max|`.
pub fn extrapolate_pressure(samples: &[(usize, f64)]) -> Result<(f64, f64)> {
    let fit = fit_inverse_volume(samples)?;
    Ok((fit.0, fit.1))
}

fn fit_inverse_volume(samples: &[(usize, f64)]) -> Result<(f64, f64, f64)> {
    if samples.len() < MIN_EXTRAPOLATION_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_EXTRAPOLATION_SAMPLES,
            got: samples.len(),
        });
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) || samples[0].0 == 0 {
        return Err(Error::validation(
            "volumes",
            "sample volumes must be positive and strictly increasing",
        ));
    }
    let keep = samples.len().div_ceil(2).max(2);
    let top = &samples[samples.len() - keep..];
    let xs: Vec<f64> = top.iter().map(|s| 1.0 / s.0 as f64).collect();
    let ys: Vec<f64> = top.iter().map(|s| s.1).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let resid = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - a - b * x).abs())
        .fold(0.0, f64::max);
    let n_max = top.last().map(|s| s.0).unwrap_or(1) as f64;
    Ok((a, resid + b.abs() / n_max, b))
}

/// Tilt grid: `u_points × v_points` nodes over `[-scale/‖X‖, scale/‖X‖] ×
/// [-scale/‖Y‖, scale/‖Y‖]`. An observable of norm 0 collapses its axis to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltGrid {
    pub u_points: usize,
    pub v_points: usize,
    pub scale: f64,
}

impl Default for TiltGrid {
    fn default() -> Self {
        TiltGrid {
            u_points: 33,
            v_points: 33,
            scale: 4.0,
        }
    }
}

impl TiltGrid {
    pub fn square(points: usize) -> Self {
        TiltGrid {
            u_points: points,
            v_points: points,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.u_points < 2 || self.v_points < 2 {
            return Err(Error::InvalidGrid(
                "tilt grids need at least 2 points per axis".into(),
            ));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "tilt scale {} must be positive",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn axes(&self, range: &Rectangle) -> Result<(Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let radius = |norm: f64| if norm > 0.0 { self.scale / norm } else { 0.0 };
        Ok((
            axis(radius(range.x_radius), self.u_points),
            axis(radius(range.y_radius), self.v_points),
        ))
    }
}

/// Grid over `Ran(X, Y)` for the conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XyGrid {
    pub x_points: usize,
    pub y_points: usize,
}

impl Default for XyGrid {
    fn default() -> Self {
        XyGrid {
            x_points: 65,
            y_points: 65,
        }
    }
}

impl XyGrid {
    pub fn square(points: usize) -> Self {
        XyGrid {
            x_points: points,
            y_points: points,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressurePoint {
    pub u: f64,
    pub v: f64,
    pub p: f64,
    pub gx: f64,
    pub gy: f64,
    pub err: f64,
}

/// Value and derivatives of the interpolant at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalJet {
    pub p: f64,
    pub pu: f64,
    pub pv: f64,
    pub puu: f64,
    pub puv: f64,
    pub pvv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureSurface {
    us: Vec<f64>,
    vs: Vec<f64>,
    /// Row-major with `u` as the slow index.
    points: Vec<PressurePoint>,
    cross: Vec<f64>,
    volumes: Vec<usize>,
    range: Rectangle,
}

impl PressureSurface {
    /// Builds a surface from exact values and gradients, e.g. for a closed-form pressure.
    pub fn from_fn(
        us: Vec<f64>,
        vs: Vec<f64>,
        range: Rectangle,
        f: impl Fn(f64, f64) -> (f64, f64, f64),
    ) -> Result<Self> {
        let points = us
            .iter()
            .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
            .map(|(u, v)| {
                let (p, gx, gy) = f(u, v);
                PressurePoint {
                    u,
                    v,
                    p,
                    gx,
                    gy,
                    err: 0.0,
                }
            })
            .collect();
        Self::assemble(us, vs, points, Vec::new(), range)
    }

    fn assemble(
        us: Vec<f64>,
        vs: Vec<f64>,
        points: Vec<PressurePoint>,
        volumes: Vec<usize>,
        range: Rectangle,
    ) -> Result<Self> {
        for ax in [&us, &vs] {
            if ax.is_empty() || ax.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidGrid(
                    "tilt axes must be non-empty and increasing".into(),
                ));
            }
        }
        if points.len() != us.len() * vs.len() {
            return Err(Error::InvalidGrid(
                "point count does not match the axes".into(),
            ));
        }
        let mut s = PressureSurface {
            us,
            vs,
            points,
            cross: Vec::new(),
            volumes,
            range,
        };
        s.cross = s.cross_derivatives();
        Ok(s)
    }

    fn cross_derivatives(&self) -> Vec<f64> {
        let (nu, nv) = (self.us.len(), self.vs.len());
        let mut out = vec![0.0; nu * nv];
        if nu < 2 || nv < 2 {
            return out;
        }
        for i in 0..nu {
            for j in 0..nv {
                let (j0, j1) = (j.saturating_sub(1), (j + 1).min(nv - 1));
                let (i0, i1) = (i.saturating_sub(1), (i + 1).min(nu - 1));
                let dgx_dv = (self.at(i, j1).gx - self.at(i, j0).gx) / (self.vs[j1] - self.vs[j0]);
                let dgy_du = (self.at(i1, j).gy - self.at(i0, j).gy) / (self.us[i1] - self.us[i0]);
                out[i * nv + j] = 0.5 * (dgx_dv + dgy_du);
            }
        }
        out
    }

    pub fn us(&self) -> &[f64] {
        &self.us
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    pub fn points(&self) -> &[PressurePoint] {
        &self.points
    }

    pub fn volumes(&self) -> &[usize] {
        &self.volumes
    }

    pub fn range(&self) -> Rectangle {
        self.range
    }

    pub fn at(&self, i: usize, j: usize) -> &PressurePoint {
        &self.points[i * self.vs.len() + j]
    }

    pub fn max_error(&self) -> f64 {
        self.points.iter().map(|p| p.err).fold(0.0, f64::max)
    }

    /// Tilt box `[u_min, u_max] × [v_min, v_max]`.
    pub fn tilt_box(&self) -> ([f64; 2], [f64; 2]) {
        (
            [self.us[0], *self.us.last().unwrap()],
            [self.vs[0], *self.vs.last().unwrap()],
        )
    }

    fn clamp(&self, u: f64, v: f64) -> (f64, f64) {
        let (bu, bv) = self.tilt_box();
        (u.clamp(bu[0], bu[1]), v.clamp(bv[0], bv[1]))
    }

    /// Interpolated value and derivatives; arguments are clamped to the box.
    pub fn jet(&self, u: f64, v: f64) -> LocalJet {
        let (u, v) = self.clamp(u, v);
        let a = AxisWeights::new(&self.us, u);
        let b = AxisWeights::new(&self.vs, v);
        let nv = self.vs.len();
        let mut out = [0.0; 6];
        for ca in 0..2 {
            for cb in 0..2 {
                let k = a.idx[ca] * nv + b.idx[cb];
                let pt = &self.points[k];
                let data = [pt.p, pt.gx, pt.gy, self.cross[k]];
                // (u-basis, v-basis) for each nodal datum
                let pairs = [
                    (&a.val[ca], &b.val[cb]),
                    (&a.slope[ca], &b.val[cb]),
                    (&a.val[ca], &b.slope[cb]),
                    (&a.slope[ca], &b.slope[cb]),
                ];
                for (d, (fu, fv)) in data.iter().zip(pairs) {
                    out[0] += d * fu[0] * fv[0];
                    out[1] += d * fu[1] * fv[0];
                    out[2] += d * fu[0] * fv[1];
                    out[3] += d * fu[2] * fv[0];
                    out[4] += d * fu[1] * fv[1];
                    out[5] += d * fu[0] * fv[2];
                }
            }
        }
        LocalJet {
            p: out[0],
            pu: out[1],
            pv: out[2],
            puu: out[3],
            puv: out[4],
            pvv: out[5],
        }
    }

    /// Interpolated `p(u, v)`.
    pub fn value(&self, u: f64, v: f64) -> f64 {
        self.jet(u, v).p
    }

    /// Largest `p(mid) - (p(a) + p(b))/2` over consecutive node triples
    /// along grid lines; non-positive for a convex surface.
    pub fn convexity_violation(&self) -> f64 {
        let (nu, nv) = (self.us.len(), self.vs.len());
        let mut worst = f64::NEG_INFINITY;
        for i in 0..nu {
            for j in 0..nv {
                if i > 0 && i + 1 < nu {
                    let avg = 0.5 * (self.at(i - 1, j).p + self.at(i + 1, j).p);
                    worst = worst.max(self.at(i, j).p - avg);
                }
                if j > 0 && j + 1 < nv {
                    let avg = 0.5 * (self.at(i, j - 1).p + self.at(i, j + 1).p);
                    worst = worst.max(self.at(i, j).p - avg);
                }
            }
        }
        worst
    }

    /// Cubic-Hermite interpolation error estimate `max |Δ⁴p| / 384` along
    /// grid lines (zero on axes with fewer than five nodes).
    pub fn interpolation_error(&self) -> f64 {
        let (nu, nv) = (self.us.len(), self.vs.len());
        let fourth = |f: &dyn Fn(usize) -> f64, k: usize| {
            (f(k) - 4.0 * f(k + 1) + 6.0 * f(k + 2) - 4.0 * f(k + 3) + f(k + 4)).abs()
        };
        let mut worst = 0.0_f64;
        for j in 0..nv {
            for k in 0..nu.saturating_sub(4) {
                worst = worst.max(fourth(&|i| self.at(i, j).p, k));
            }
        }
        for i in 0..nu {
            for k in 0..nv.saturating_sub(4) {
                worst = worst.max(fourth(&|j| self.at(i, j).p, k));
            }
        }
        worst / 384.0
    }

    /// CSV with columns `u,v,p,gx,gy,err`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.points {
            out.serialize(p)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Hermite basis weights on one axis: nodal indices, value basis and
/// slope basis (each with first and second physical derivatives).
struct AxisWeights {
    idx: [usize; 2],
    val: [[f64; 3]; 2],
    slope: [[f64; 3]; 2],
}

impl AxisWeights {
    fn new(nodes: &[f64], t: f64) -> Self {
        if nodes.len() == 1 {
            return AxisWeights {
                idx: [0, 0],
                val: [[1.0, 0.0, 0.0], [0.0; 3]],
                slope: [[0.0; 3]; 2],
            };
        }
        let i = match nodes.partition_point(|&n| n <= t) {
            0 => 0,
            k => (k - 1).min(nodes.len() - 2),
        };
        let h = nodes[i + 1] - nodes[i];
        let s = (t - nodes[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = [
            2.0 * s3 - 3.0 * s2 + 1.0,
            (6.0 * s2 - 6.0 * s) / h,
            (12.0 * s - 6.0) / (h * h),
        ];
        let h01 = [
            -2.0 * s3 + 3.0 * s2,
            (-6.0 * s2 + 6.0 * s) / h,
            (-12.0 * s + 6.0) / (h * h),
        ];
        let h10 = [
            (s3 - 2.0 * s2 + s) * h,
            3.0 * s2 - 4.0 * s + 1.0,
            (6.0 * s - 4.0) / h,
        ];
        let h11 = [(s3 - s2) * h, 3.0 * s2 - 2.0 * s, (6.0 * s - 2.0) / h];
        AxisWeights {
            idx: [i, i + 1],
            val: [h00, h01],
            slope: [h10, h11],
        }
    }
}

/// Extrapolated pressure, gradient and error on a tilt grid.
///
/// `volumes` must have strictly increasing site counts; with a single
/// volume its values are used as they are, otherwise at least three are
/// needed. Gradients are extrapolated the same way and clamped into
/// `Ran(X, Y)`.
pub fn pressure_surface(
    phi: &Interaction,
    x: &LocalObservable,
    y: &LocalObservable,
    grid: &TiltGrid,
    volumes: &[Volume],
    path: Path,
    exec: Execution,
) -> Result<PressureSurface> {
    let counts: Vec<usize> = volumes.iter().map(Volume::site_count).collect();
    if counts.len() == 2 || counts.is_empty() {
        return Err(Error::InsufficientSamples {
            needed: MIN_EXTRAPOLATION_SAMPLES,
            got: counts.len(),
        });
    }
    if counts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation(
            "volumes",
            "site counts must be strictly increasing",
        ));
    }
    let range = Rectangle::from_observables(x, y);
    let (us, vs) = grid.axes(&range)?;
    let models = exec.try_map(volumes.len(), |k| {
        TiltedModel::build(phi, x, y, &volumes[k], path)
    })?;
    let nv = vs.len();
    let points = exec.try_map(us.len() * nv, |k| {
        let (u, v) = (us[k / nv], vs[k % nv]);
        let states = models
            .iter()
            .map(|m| m.state(u, v))
            .collect::<Result<Vec<_>>>()?;
        let n = |i: usize| models[i].sites() as f64;
        let series = |f: &dyn Fn(usize) -> f64| -> Result<(f64, f64)> {
            if states.len() == 1 {
                return Ok((f(0), 0.0));
            }
            let samples: Vec<(usize, f64)> = (0..states.len()).map(|i| (counts[i], f(i))).collect();
            extrapolate_pressure(&samples)
        };
        let (p, err) = series(&|i| states[i].log_z / n(i))?;
        let (gx, _) = series(&|i| states[i].mean_x)?;
        let (gy, _) = series(&|i| states[i].mean_y)?;
        Ok::<_, Error>(PressurePoint {
            u,
            v,
            p,
            gx: gx.clamp(-range.x_radius, range.x_radius),
            gy: gy.clamp(-range.y_radius, range.y_radius),
            err,
        })
    })?;
    PressureSurface::assemble(us, vs, points, counts, range)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub x: f64,
    pub y: f64,
    /// `I(x, y)`.
    pub value: f64,
    /// Maximizing tilt.
    pub u: f64,
    pub v: f64,
    /// `max(|x - ∂p/∂u|, |y - ∂p/∂v|)` at the maximizer.
    pub residual: f64,
    /// The maximizer sits on the tilt-box edge with the slope pointing
    /// outward, so the true supremum lies beyond the box (possibly `+∞`).
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major with `x` as the slow index.
    points: Vec<RatePoint>,
    error_bound: f64,
    surface: PressureSurface,
}

impl RateFunction {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn points(&self) -> &[RatePoint] {
        &self.points
    }

    pub fn at(&self, i: usize, j: usize) -> &RatePoint {
        &self.points[i * self.ys.len() + j]
    }

    pub fn surface(&self) -> &PressureSurface {
        &self.surface
    }

    pub fn range(&self) -> Rectangle {
        self.surface.range
    }

    /// Grid-induced error: extrapolation error of the surface plus the
    /// interpolation estimate, floored at `1e-12`.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    /// `I(x, y)` at an arbitrary point.
    pub fn eval(&self, x: f64, y: f64) -> RatePoint {
        conjugate_at(&self.surface, x, y)
    }

    /// Largest midpoint-convexity violation along grid lines, ignoring
    /// flagged points.
    pub fn convexity_violation(&self) -> f64 {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let mut worst = f64::NEG_INFINITY;
        let mut check = |a: &RatePoint, m: &RatePoint, b: &RatePoint| {
            if !(a.at_boundary || m.at_boundary || b.at_boundary) {
                worst = worst.max(m.value - 0.5 * (a.value + b.value));
            }
        };
        for i in 0..nx {
            for j in 0..ny {
                if i > 0 && i + 1 < nx {
                    check(self.at(i - 1, j), self.at(i, j), self.at(i + 1, j));
                }
                if j > 0 && j + 1 < ny {
                    check(self.at(i, j - 1), self.at(i, j), self.at(i, j + 1));
                }
            }
        }
        worst
    }

    /// CSV with columns `x,y,value,u,v,residual,at_boundary`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for p in &self.points {
            out.serialize(p)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn objective(ps: &PressureSurface, x: f64, y: f64, u: f64, v: f64) -> f64 {
    u * x + v * y - ps.value(u, v)
}

/// `sup_{(u,v) ∈ box} (ux + vy - p̃(u, v))`: node scan, then projected Newton.
fn conjugate_at(ps: &PressureSurface, x: f64, y: f64) -> RatePoint {
    let mut best: (f64, f64, f64) = (f64::NEG_INFINITY, 0.0, 0.0);
    for pt in &ps.points {
        let val = pt.u * x + pt.v * y - pt.p;
        let tie = (val - best.0).abs() <= 1e-13 * (1.0 + val.abs());
        if (tie && pt.u.hypot(pt.v) < best.1.hypot(best.2)) || (!tie && val > best.0) {
            best = (val, pt.u, pt.v);
        }
    }
    let (bu, bv) = ps.tilt_box();
    let free_u = bu[1] > bu[0];
    let free_v = bv[1] > bv[0];
    let (mut u, mut v) = (best.1, best.2);
    let mut f = objective(ps, x, y, u, v);
    for _ in 0..100 {
        let j = ps.jet(u, v);
        let ru = if free_u { x - j.pu } else { 0.0 };
        let rv = if free_v { y - j.pv } else { 0.0 };
        let (du, dv) = newton_direction(&j, ru, rv, free_u, free_v);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..50 {
            let (nu, nv) = ps.clamp(u + t * du, v + t * dv);
            let fnew = objective(ps, x, y, nu, nv);
            if fnew > f {
                let step = (nu - u).abs().max((nv - v).abs());
                u = nu;
                v = nv;
                f = fnew;
                moved = step > 1e-14 * (1.0 + u.abs().max(v.abs()));
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let j = ps.jet(u, v);
    let ru = x - j.pu;
    let rv = y - j.pv;
    let outward = |pos: f64, lo: f64, hi: f64, r: f64, free: bool| {
        free && ((pos >= hi - EDGE_TOL * (1.0 + hi.abs()) && r > OUTWARD_TOL)
            || (pos <= lo + EDGE_TOL * (1.0 + lo.abs()) && r < -OUTWARD_TOL))
    };
    RatePoint {
        x,
        y,
        value: f,
        u,
        v,
        residual: ru.abs().max(rv.abs()),
        at_boundary: outward(u, bu[0], bu[1], ru, free_u) || outward(v, bv[0], bv[1], rv, free_v),
    }
}

/// Regularized Newton step `H⁻¹ r` restricted to the free axes.
fn newton_direction(j: &LocalJet, ru: f64, rv: f64, free_u: bool, free_v: bool) -> (f64, f64) {
    let floor = 1e-12;
    match (free_u, free_v) {
        (true, true) => {
            let (a, b, d) = (j.puu, j.puv, j.pvv);
            // shift so the smaller eigenvalue is at least `floor`
            let lmin = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
            let mu = (floor - lmin).max(0.0);
            let (a, d) = (a + mu, d + mu);
            let det = a * d - b * b;
            ((d * ru - b * rv) / det, (a * rv - b * ru) / det)
        }
        (true, false) => (ru / j.puu.max(floor), 0.0),
        (false, true) => (0.0, rv / j.pvv.max(floor)),
        (false, false) => (0.0, 0.0),
    }
}

/// `I(x, y)` on an `XyGrid` over `Ran(X, Y)`.
pub fn legendre_transform(
    ps: &PressureSurface,
    grid: &XyGrid,
    exec: Execution,
) -> Result<RateFunction> {
    if grid.x_points < 2 || grid.y_points < 2 {
        return Err(Error::InvalidGrid(
            "x-y grids need at least 2 points per axis".into(),
        ));
    }
    let xs = axis(ps.range.x_radius, grid.x_points);
    let ys = axis(ps.range.y_radius, grid.y_points);
    let ny = ys.len();
    let points = exec.map(xs.len() * ny, |k| conjugate_at(ps, xs[k / ny], ys[k % ny]));
    let error_bound = (ps.max_error() + ps.interpolation_error()).max(1e-12);
    Ok(RateFunction {
        xs,
        ys,
        points,
        error_bound,
        surface: ps.clone(),
    })
}

/// `max |p(u,v) - sup_{x,y}(ux + vy - I(x,y))|` over the tilt nodes.
///
/// The inner supremum starts from the best unflagged `(x, y)` node and is
/// refined off-grid: with `(u*, v*)` the maximizing tilt of `I` at the
/// current point, `(x, y) ← (x, y) + Hess p̃(u*, v*) · ((u, v) - (u*, v*))`.
pub fn involution_check(ps: &PressureSurface, rf: &RateFunction) -> f64 {
    involution_check_with(ps, rf, Execution::default())
}

pub fn involution_check_with(ps: &PressureSurface, rf: &RateFunction, exec: Execution) -> f64 {
    let range = rf.range();
    let devs = exec.map(ps.points.len(), |k| {
        let pt = &ps.points[k];
        let (mut val, mut x, mut y) = discrete_sup(rf, pt.u, pt.v);
        if !val.is_finite() {
            return f64::INFINITY;
        }
        // The conjugate point ∇p(u, v) is the natural candidate; near the edge
        // of Ran(X, Y) it is far better conditioned than any grid node.
        let (gx, gy) = (
            pt.gx.clamp(-range.x_radius, range.x_radius),
            pt.gy.clamp(-range.y_radius, range.y_radius),
        );
        let at_grad = rf.eval(gx, gy);
        let grad_val = pt.u * gx + pt.v * gy - at_grad.value;
        if !at_grad.at_boundary && grad_val > val {
            (val, x, y) = (grad_val, gx, gy);
        }
        for _ in 0..40 {
            let r = rf.eval(x, y);
            let j = ps.jet(r.u, r.v);
            let (du, dv) = (pt.u - r.u, pt.v - r.v);
            let (sx, sy) = (j.puu * du + j.puv * dv, j.puv * du + j.pvv * dv);
            // Damped step: halve until the candidate stays resolved and improves.
            let mut accepted = None;
            let mut t = 1.0;
            for _ in 0..30 {
                let nx = (x + t * sx).clamp(-range.x_radius, range.x_radius);
                let ny = (y + t * sy).clamp(-range.y_radius, range.y_radius);
                let cand = rf.eval(nx, ny);
                let cval = pt.u * nx + pt.v * ny - cand.value;
                if !cand.at_boundary && cval > val {
                    accepted = Some((nx, ny, cval));
                    break;
                }
                t *= 0.5;
            }
            let Some((nx, ny, cval)) = accepted else {
                break;
            };
            let step = (nx - x).abs().max((ny - y).abs());
            val = cval;
            x = nx;
            y = ny;
            if step < 1e-14 {
                break;
            }
        }
        (pt.p - val).abs()
    });
    devs.into_iter().fold(0.0, f64::max)
}

/// Same as [`involution_check`] with the inner supremum restricted to the
/// unflagged grid nodes of `rf`.
pub fn involution_check_discrete(ps: &PressureSurface, rf: &RateFunction) -> f64 {
    ps.points
        .iter()
        .map(|pt| (pt.p - discrete_sup(rf, pt.u, pt.v).0).abs())
        .fold(0.0, f64::max)
}

fn discrete_sup(rf: &RateFunction, u: f64, v: f64) -> (f64, f64, f64) {
    rf.points
        .iter()
        .filter(|r| !r.at_boundary)
        .map(|r| (u * r.x + v * r.y - r.value, r.x, r.y))
        .fold(
            (f64::NEG_INFINITY, 0.0, 0.0),
            |a, b| if b.0 > a.0 { b } else { a },
        )
}
