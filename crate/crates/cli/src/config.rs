//! Space configuration documents and σ-table files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use sigma_geometry::nalgebra::DMatrix;
use sigma_geometry::{
    make_space, ConstantMetric, ConstantMetricSpace, FiniteSigmaSpace, MetricField, PointSampler,
    PuncturedPlaneMetric, RiemannianSpace, SigmaSpace, SolverOptions, SpaceSpec, SphereMetric,
};

use crate::format;
use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawSpace {
    Euclidean {
        dim: usize,
    },
    PseudoEuclidean {
        dim: usize,
    },
    ConstantMetric {
        g: Vec<Vec<f64>>,
    },
    Sphere {
        #[serde(default = "unit")]
        radius: f64,
    },
    PuncturedPlane {
        #[serde(default = "unit")]
        hole_radius: f64,
    },
    Finite {
        file: PathBuf,
    },
    RiemannianExpr {
        dim: usize,
        g: Vec<Vec<String>>,
        #[serde(default)]
        solver: RawSolver,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    nodes: Option<usize>,
    gtol: Option<f64>,
    max_iter: Option<usize>,
    extrapolate: Option<bool>,
}

impl RawSolver {
    fn options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            nodes: self.nodes.unwrap_or(d.nodes),
            gtol: self.gtol.unwrap_or(d.gtol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            extrapolate: self.extrapolate.unwrap_or(d.extrapolate),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampleBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
    #[serde(default)]
    hole_radius: Option<f64>,
}

/// A parsed configuration: the declarative spec, its σ evaluator, the metric
/// field when the space has one, and the sampling region for `dim`/`euclid`.
pub struct SpaceConfig {
    pub spec: SpaceSpec,
    pub space: Arc<dyn SigmaSpace>,
    pub metric: Option<Arc<dyn MetricField>>,
    pub sampler: PointSampler,
    pub solver: SolverOptions,
}

impl SpaceConfig {
    /// Reads a JSON document; relative table paths resolve against the
    /// document's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let sample_box = match doc.as_object_mut().and_then(|o| o.remove("sample")) {
            Some(v) => Some(
                serde_json::from_value::<RawSampleBox>(v)
                    .map_err(|e| CliError::Config(format!("invalid sample box: {e}")))?,
            ),
            None => None,
        };
        let raw: RawSpace =
            serde_json::from_value(doc).map_err(|e| CliError::Config(format!("invalid space config: {e}")))?;

        let mut solver = SolverOptions::default();
        let (spec, metric): (SpaceSpec, Option<Arc<dyn MetricField>>) = match raw {
            RawSpace::Euclidean { dim } => {
                (SpaceSpec::Euclidean { dim }, Some(Arc::new(ConstantMetric::euclidean(dim))))
            }
            RawSpace::PseudoEuclidean { dim } => {
                let g = ConstantMetricSpace::pseudo_euclidean(dim).matrix().clone();
                (SpaceSpec::PseudoEuclidean { dim }, Some(Arc::new(ConstantMetric::new(g))))
            }
            RawSpace::ConstantMetric { g } => {
                let n = g.len();
                if g.iter().any(|row| row.len() != n) {
                    return Err(CliError::Config("metric rows must all have length dim".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, k| g[i][k]);
                (SpaceSpec::ConstantMetric { metric: g }, Some(Arc::new(ConstantMetric::new(m))))
            }
            RawSpace::Sphere { radius } => (SpaceSpec::Sphere { radius }, Some(Arc::new(SphereMetric::new(radius)))),
            RawSpace::PuncturedPlane { hole_radius } => (
                SpaceSpec::PuncturedPlane { hole_radius },
                Some(Arc::new(PuncturedPlaneMetric::new(hole_radius))),
            ),
            RawSpace::Finite { file } => {
                let path = if file.is_absolute() { file } else { base_dir.join(file) };
                (SpaceSpec::Finite(load_table(&path)?), None)
            }
            RawSpace::RiemannianExpr { dim, g, solver: raw_solver } => {
                solver = raw_solver.options();
                let rs = RiemannianSpace::from_expressions(dim, &g, solver.clone())?;
                (SpaceSpec::RiemannianExpr { dim, components: g, solver: solver.clone() }, Some(rs.metric_arc()))
            }
        };
        let space = make_space(&spec)?;
        let sampler = match sample_box {
            Some(b) => {
                let dim = spec.domain().dim();
                if dim.is_none() || Some(b.lo.len()) != dim || b.hi.len() != b.lo.len() {
                    return Err(CliError::Config("sample box does not match the space dimension".into()));
                }
                if b.lo.iter().zip(&b.hi).any(|(l, h)| !(l < h)) {
                    return Err(CliError::Config("sample box needs lo < hi on every axis".into()));
                }
                PointSampler::Uniform { lo: b.lo, hi: b.hi, hole_radius: b.hole_radius }
            }
            None => PointSampler::for_spec(&spec),
        };
        Ok(Self { spec, space, metric, sampler, solver })
    }

    pub fn metric(&self) -> Result<&dyn MetricField, CliError> {
        self.metric
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("a {} space has no metric field", self.spec.kind())))
    }
}

/// Parses the `n=<count>` header followed by `count` rows of σ values.
pub fn parse_table(text: &str) -> Result<FiniteSigmaSpace, CliError> {
    let bad = |msg: String| CliError::Config(format!("invalid sigma table: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("file is empty".into()))?;
    let count: usize = header
        .trim()
        .strip_prefix("n=")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| bad(format!("expected 'n=<count>' header, got '{header}'")))?;
    let rows: Vec<Vec<f64>> = lines.map(|l| format::parse_reals(l).map_err(bad)).collect::<Result<_, _>>()?;
    if rows.len() != count {
        return Err(bad(format!("header announces {count} rows, found {}", rows.len())));
    }
    Ok(FiniteSigmaSpace::from_rows(&rows)?)
}

pub fn render_table(table: &FiniteSigmaSpace) -> String {
    let m = table.table();
    let mut out = format!("n={}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        let _ = writeln!(out, "{}", format::join_reals(&row));
    }
    out
}

pub fn load_table(path: &Path) -> Result<FiniteSigmaSpace, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text)
}

pub fn save_table(path: &Path, table: &FiniteSigmaSpace) -> std::io::Result<()> {
    std::fs::write(path, render_table(table))
}
