//! TOML experiment configuration.
//!
//! ```toml
//! schema_version = 1
//! name = "curie-weiss"
//!
//! [model]
//! interaction = [{ pauli = "x", coeff = -0.5 }]
//! x = [{ pauli = "z" }]
//! g = [["xx", 0.25]]
//!
//! [study]
//! volumes = [10, 50, 200]
//! pressure_volumes = [1]
//! block_volumes = [2, 4]
//! ```
//!
//! Observables are sums of terms, each either a Pauli string on consecutive
//! sites along the first axis (`pauli`, optional real `coeff`) or a raw
//! matrix on explicit sites (`sites`, `matrix`, entries real or `[re, im]`).
//! Polynomial coefficients are likewise real or `[re, im]`. Volumes are a
//! chain length or an extent list such as `[3, 3]`.

use std::path::{Path as FsPath, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::hermitian::C64;
use crate::lattice::{Interaction, LocalObservable, Volume, DEFAULT_DIM_CAP};
use crate::ncpoly::{is_symmetric, symmetrize, NcPolynomial};
use crate::thermo::{TiltGrid, XyGrid};
use crate::tilted::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    pub fn to_c64(self) -> C64 {
        match self {
            Scalar::Real(r) => C64::new(r, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<Scalar>>>,
}

impl TermSpec {
    pub fn pauli(word: &str, coeff: f64) -> Self {
        TermSpec {
            pauli: Some(word.into()),
            coeff: Some(coeff),
            ..Default::default()
        }
    }

    fn build(&self, site_dim: usize, lattice_dim: usize, field: &str) -> Result<LocalObservable> {
        let coeff = self.coeff.unwrap_or(1.0);
        let obs = match (&self.pauli, &self.sites, &self.matrix) {
            (Some(word), None, None) => {
                if site_dim != 2 {
                    return Err(Error::validation(field, "Pauli strings need site_dim = 2"));
                }
                LocalObservable::pauli(word, coeff, lattice_dim)
            }
            (None, Some(sites), Some(rows)) => {
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::validation(field, "matrix must be square"));
                }
                let m = Array2::from_shape_fn((n, n), |(i, j)| rows[i][j].to_c64() * coeff);
                LocalObservable::new(sites.clone(), m, site_dim)
            }
            _ => {
                return Err(Error::validation(
                    field,
                    "give either `pauli` or both `sites` and `matrix`",
                ))
            }
        };
        let obs = obs.map_err(|e| Error::validation(field, e.to_string()))?;
        if obs.lattice_dim() != lattice_dim {
            return Err(Error::validation(
                field,
                format!(
                    "sites have dimension {}, model.lattice_dim = {lattice_dim}",
                    obs.lattice_dim()
                ),
            ));
        }
        Ok(obs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VolumeSpec {
    Chain(usize),
    Box(Vec<usize>),
}

impl VolumeSpec {
    fn extents(&self) -> Vec<usize> {
        match self {
            VolumeSpec::Chain(n) => vec![*n],
            VolumeSpec::Box(e) => e.clone(),
        }
    }

    fn site_count(&self) -> usize {
        self.extents().iter().product()
    }
}

fn default_site_dim() -> usize {
    2
}

fn default_lattice_dim() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_site_dim")]
    pub site_dim: usize,
    #[serde(default = "default_lattice_dim")]
    pub lattice_dim: usize,
    #[serde(default)]
    pub interaction: Vec<TermSpec>,
    pub x: Vec<TermSpec>,
    #[serde(default)]
    pub y: Vec<TermSpec>,
    #[serde(default)]
    pub g: Vec<(String, Scalar)>,
    /// Replace `g` by its symmetrization instead of rejecting it.
    #[serde(default)]
    pub symmetrize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    /// Volumes of the direct sequence.
    pub volumes: Vec<VolumeSpec>,
    /// Volumes extrapolated for the pressure surface (defaults to `volumes`).
    #[serde(default)]
    pub pressure_volumes: Vec<VolumeSpec>,
    #[serde(default)]
    pub block_volumes: Vec<VolumeSpec>,
    #[serde(default)]
    pub path: Path,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
}

fn default_tilt_points() -> usize {
    TiltGrid::default().u_points
}

fn default_tilt_scale() -> f64 {
    TiltGrid::default().scale
}

fn default_xy_points() -> usize {
    XyGrid::default().x_points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_tilt_points")]
    pub tilt_points: usize,
    #[serde(default = "default_tilt_scale")]
    pub tilt_scale: f64,
    #[serde(default = "default_xy_points")]
    pub xy_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            tilt_points: default_tilt_points(),
            tilt_scale: default_tilt_scale(),
            xy_points: default_xy_points(),
        }
    }
}

impl GridSpec {
    pub fn tilt(&self) -> TiltGrid {
        TiltGrid {
            u_points: self.tilt_points,
            v_points: self.tilt_points,
            scale: self.tilt_scale,
        }
    }

    pub fn xy(&self) -> XyGrid {
        XyGrid::square(self.xy_points)
    }
}

fn default_bound_slack() -> f64 {
    1e-9
}

/// Pass/fail thresholds; unset ones are reported but not checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest allowed `|direct - variational|` at the largest volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// Largest allowed oracle deviation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<f64>,
    /// Largest allowed `|product state - rate form|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product_state: Option<f64>,
    /// Slack in `certified lower bound ≤ direct value`.
    #[serde(default = "default_bound_slack")]
    pub lower_bound_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gap: None,
            oracle: None,
            product_state: None,
            lower_bound_slack: default_bound_slack(),
        }
    }
}

impl Tolerances {
    /// Sets one tolerance by name (`gap`, `oracle`, `product_state`, `lower_bound_slack`).
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let field = format!("tolerances.{key}");
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::validation(field, "tolerances must be positive"));
        }
        match key {
            "gap" => self.gap = Some(value),
            "oracle" => self.oracle = Some(value),
            "product_state" => self.product_state = Some(value),
            "lower_bound_slack" => self.lower_bound_slack = value,
            _ => return Err(Error::validation(field, "unknown tolerance")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("gap", self.gap),
            ("oracle", self.oracle),
            ("product_state", self.product_state),
            ("lower_bound_slack", Some(self.lower_bound_slack)),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::validation(
                        format!("tolerances.{k}"),
                        "tolerances must be positive",
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurieWeissOracle {
    pub lambda: f64,
    #[serde(default)]
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferMatrixOracle {
    pub j: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Compared with the variational value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curie_weiss: Option<CurieWeissOracle>,
    /// Compared with every direct value; needs a classical one-site model.
    #[serde(default)]
    pub classical_sector: bool,
    /// Compared with the extrapolated pressure at tilt `(u, 0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_matrix: Option<TransferMatrixOracle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plotdata: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Worker threads; 0 uses the library default.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    pub model: ModelSpec,
    pub study: StudySpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub oracles: OracleSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub run: RunSpec,
}

/// Validated model objects built from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub struct Model {
    pub phi: Interaction,
    pub x: LocalObservable,
    pub y: LocalObservable,
    pub g: NcPolynomial,
}

impl ModelSpec {
    pub fn build(&self) -> Result<Model> {
        let (n, d) = (self.site_dim, self.lattice_dim);
        if n < 2 {
            return Err(Error::validation("model.site_dim", "must be at least 2"));
        }
        if d < 1 {
            return Err(Error::validation("model.lattice_dim", "must be at least 1"));
        }
        let terms = |specs: &[TermSpec], name: &str| -> Result<Vec<LocalObservable>> {
            specs
                .iter()
                .enumerate()
                .map(|(k, t)| t.build(n, d, &format!("model.{name}[{k}]")))
                .collect()
        };
        let phi = Interaction::new(n, d, terms(&self.interaction, "interaction")?)
            .map_err(|e| Error::validation("model.interaction", e.to_string()))?;
        let observable = |specs: &[TermSpec], name: &str| -> Result<LocalObservable> {
            let parts = terms(specs, name)?;
            if parts.is_empty() {
                return Ok(LocalObservable::zero(n, d));
            }
            LocalObservable::sum(&parts)
                .map_err(|e| Error::validation(format!("model.{name}"), e.to_string()))
        };
        if self.x.is_empty() {
            return Err(Error::validation(
                "model.x",
                "at least one term is required",
            ));
        }
        let x = observable(&self.x, "x")?;
        let y = observable(&self.y, "y")?;
        let g = NcPolynomial::from_terms(self.g.iter().map(|(w, c)| (w.as_str(), c.to_c64())))
            .map_err(|e| Error::validation("model.g", e.to_string()))?;
        let g = if self.symmetrize {
            symmetrize(&g)
        } else if is_symmetric(&g) {
            g
        } else {
            return Err(Error::validation(
                "model.g",
                "coefficients are not a symmetric quantization (set `symmetrize = true`)",
            ));
        };
        Ok(Model { phi, x, y, g })
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        self.model.build()?;
        self.tolerances.validate()?;
        let check_seq = |vols: &[VolumeSpec], field: &str, allow_empty: bool| -> Result<()> {
            if vols.is_empty() && !allow_empty {
                return Err(Error::validation(field, "at least one volume is required"));
            }
            for (k, v) in vols.iter().enumerate() {
                let e = v.extents();
                if e.len() != self.model.lattice_dim || e.contains(&0) {
                    return Err(Error::validation(
                        format!("{field}[{k}]"),
                        format!(
                            "extents {e:?} do not describe a {}-dimensional box",
                            self.model.lattice_dim
                        ),
                    ));
                }
            }
            if vols
                .windows(2)
                .any(|w| w[0].site_count() >= w[1].site_count())
            {
                return Err(Error::validation(
                    field,
                    "site counts must be strictly increasing",
                ));
            }
            Ok(())
        };
        check_seq(&self.study.volumes, "study.volumes", false)?;
        check_seq(&self.study.pressure_volumes, "study.pressure_volumes", true)?;
        check_seq(&self.study.block_volumes, "study.block_volumes", true)?;
        if self.pressure_volume_specs().len() == 2 {
            return Err(Error::validation(
                "study.pressure_volumes",
                "give one volume (no extrapolation) or at least three",
            ));
        }
        if self.study.dim_cap == Some(0) {
            return Err(Error::validation("study.dim_cap", "must be positive"));
        }
        if self.grid.tilt_points < 2 || self.grid.xy_points < 2 {
            return Err(Error::validation(
                "grid",
                "grids need at least 2 points per axis",
            ));
        }
        if self.grid.tilt_scale.is_nan() || self.grid.tilt_scale <= 0.0 {
            return Err(Error::validation("grid.tilt_scale", "must be positive"));
        }
        Ok(())
    }

    fn pressure_volume_specs(&self) -> &[VolumeSpec] {
        if self.study.pressure_volumes.is_empty() {
            &self.study.volumes
        } else {
            &self.study.pressure_volumes
        }
    }

    fn to_volumes(&self, specs: &[VolumeSpec]) -> Result<Vec<Volume>> {
        let cap = self.study.dim_cap.unwrap_or(DEFAULT_DIM_CAP);
        specs
            .iter()
            .map(|v| Ok(Volume::new(v.extents())?.with_dim_cap(cap)))
            .collect()
    }

    pub fn volumes(&self) -> Result<Vec<Volume>> {
        self.to_volumes(&self.study.volumes)
    }

    pub fn pressure_volumes(&self) -> Result<Vec<Volume>> {
        self.to_volumes(self.pressure_volume_specs())
    }

    pub fn block_volumes(&self) -> Result<Vec<Volume>> {
        self.to_volumes(&self.study.block_volumes)
    }
}

/// Reads, parses and validates a config file.
pub fn parse_config(path: impl AsRef<FsPath>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
schema_version = 1
name = "tfim"

[model]
interaction = [{ pauli = "x", coeff = -0.5 }, { pauli = "zz", coeff = -1.0 }]
x = [{ pauli = "z" }]
y = [{ sites = [[0]], matrix = [[0, [0, -1]], [[0, 1], 0]] }]
g = [["xy", [0.5, 0.5]], ["yx", [0.5, -0.5]]]

[study]
volumes = [2, 4, 6]
block_volumes = [2]
path = "dense"

[tolerances]
gap = 0.1
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.grid, GridSpec::default());
        assert_eq!(cfg.study.path, Path::Dense);
        let m = cfg.model.build().unwrap();
        assert_eq!(m.phi.terms().len(), 2);
        assert!((m.y.norm() - 1.0).abs() < 1e-14);
        assert_eq!(cfg.volumes().unwrap().len(), 3);
        assert_eq!(cfg.pressure_volumes().unwrap().len(), 3);
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = BASIC.replace("gap = 0.1", "gap = 0.1\nfoo = 2");
        let err = ExperimentConfig::from_toml_str(&bad)
            .unwrap_err()
            .to_string();
        assert!(err.contains("foo"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn validation_names_the_field() {
        let bad = BASIC.replace(
            r#"x = [{ pauli = "z" }]"#,
            r#"x = [{ sites = [[0]], matrix = [[1, 0, 0], [0, 1, 0], [0, 0, 1]] }]"#,
        );
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "model.x[0]"),
            other => panic!("{other:?}"),
        }
        let bad = BASIC.replace("volumes = [2, 4, 6]", "volumes = [4, 2]");
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "study.volumes"),
            other => panic!("{other:?}"),
        }
        let bad = BASIC.replace("gap = 0.1", "gap = -0.1");
        assert!(matches!(
            ExperimentConfig::from_toml_str(&bad),
            Err(Error::Validation { .. })
        ));
        let bad = BASIC.replace(r#"["yx", [0.5, -0.5]]"#, r#"["yx", [0.5, 0.5]]"#);
        match ExperimentConfig::from_toml_str(&bad) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "model.g"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("oracle", 1e-4).unwrap();
        assert_eq!(t.oracle, Some(1e-4));
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("gap", 0.0).is_err());
    }
}
