use std::fmt::Write as _;

use serde::Serialize;
use sigma_geometry::{
    broken_tube, check_worldfunction_identities, classify_interval, collinearity_cone, euclid_report,
    geodesic_with_length, rho_from_sigma, sample_tube, scan_dimension, sigma, ConeOptions, DimensionOptions, Domain,
    EuclidOptions, FdSteps, Point, SolverOptions, TubeSample, Window,
};

use crate::config::SpaceConfig;
use crate::format::{self, real};
use crate::{Cli, CliError, Command, EXIT_DIMENSION_CAP, EXIT_OK};

/// Rendered data plus the exit status it should be reported with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub exit_code: i32,
}

impl CommandOutput {
    fn ok(text: String) -> Self {
        Self { text, exit_code: EXIT_OK }
    }
}

pub fn execute(cli: &Cli) -> Result<CommandOutput, CliError> {
    let path = cli.space.as_ref().ok_or_else(|| CliError::Config("--space <JSON> is required".into()))?;
    let cfg = SpaceConfig::load(path)?;
    match &cli.command {
        Command::Eval { p, q } => eval(&cfg, p, q, cli.tol),
        Command::Tube(a) => tube(&cfg, a, cli.tol),
        Command::Dim(a) => dim(&cfg, a, cli.tol, cli.seed),
        Command::Euclid(a) => euclid(&cfg, a, cli.tol, cli.seed),
        Command::Geodesic(a) => geodesic(&cfg, a),
        Command::Cone(a) => cone(&cfg, a, cli.seed),
        Command::Identities(a) => identities(&cfg, a),
    }
}

fn parse_point(cfg: &SpaceConfig, text: &str) -> Result<Point, CliError> {
    let p = match cfg.space.domain() {
        Domain::Finite { .. } => Point::Label(
            text.trim().parse().map_err(|_| CliError::Config(format!("'{text}' is not a point label")))?,
        ),
        Domain::Coords { .. } => Point::Coords(format::parse_reals(text).map_err(CliError::Config)?),
    };
    cfg.space.domain().check(&p)?;
    Ok(p)
}

fn parse_coords(cfg: &SpaceConfig, text: &str) -> Result<Vec<f64>, CliError> {
    match parse_point(cfg, text)? {
        Point::Coords(x) => Ok(x),
        Point::Label(_) => Err(CliError::Domain("this command needs a coordinate space".into())),
    }
}

fn point_json(p: &Point) -> serde_json::Value {
    match p {
        Point::Coords(x) => serde_json::json!(json_reals(x)),
        Point::Label(i) => serde_json::json!(i),
    }
}

/// JSON number for finite values (negative zero folded to zero) and the
/// strings "inf", "-inf" or "nan" otherwise.
fn json_real(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(if v == 0.0 { 0.0 } else { v })
    } else {
        serde_json::json!(real(v))
    }
}

fn json_reals(v: &[f64]) -> Vec<serde_json::Value> {
    v.iter().map(|x| json_real(*x)).collect()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("report serialization");
    s.push('\n');
    s
}

fn eval(cfg: &SpaceConfig, p: &str, q: &str, tol: f64) -> Result<CommandOutput, CliError> {
    let (p, q) = (parse_point(cfg, p)?, parse_point(cfg, q)?);
    let s = sigma(cfg.space.as_ref(), &p, &q)?;
    let rho = rho_from_sigma(s).map(real).unwrap_or_else(|_| "imaginary".into());
    let mut kind = classify_interval(cfg.space.as_ref(), &p, &q, tol)?.as_str().to_string();
    if !cfg.spec.is_indefinite() {
        // the light-cone vocabulary has no meaning for a definite σ
        kind.push_str("-na");
    }
    Ok(CommandOutput::ok(format!("{},{rho},{kind}\n", real(s))))
}

fn tube_csv(sample: &TubeSample, dim: usize) -> String {
    let mut out: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    out.push("residual".into());
    let mut text = out.join(",");
    text.push('\n');
    for (x, r) in sample.points.iter().zip(&sample.residuals) {
        let _ = writeln!(text, "{},{}", format::join_reals(x), real(*r));
    }
    text
}

fn tube(cfg: &SpaceConfig, a: &crate::TubeArgs, tol: f64) -> Result<CommandOutput, CliError> {
    let Domain::Coords { dim } = cfg.space.domain() else {
        return Err(CliError::Domain("tube sampling needs a coordinate space".into()));
    };
    let basis: Vec<Point> = format::parse_point_list(&a.basis)
        .map_err(CliError::Config)?
        .into_iter()
        .map(Point::Coords)
        .collect();
    for p in &basis {
        cfg.space.domain().check(p)?;
    }
    let res: Vec<usize> = a
        .resolution
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::Config(format!("bad resolution '{t}'"))))
        .collect::<Result<_, _>>()?;
    let sample = if a.broken {
        if a.allow_null {
            return Err(CliError::Config("--allow-null does not apply to --broken".into()));
        }
        let [per_segment] = res[..] else {
            return Err(CliError::Config("--broken takes a single resolution".into()));
        };
        broken_tube(cfg.space.as_ref(), &basis, per_segment, tol)?
    } else {
        let corner = |v: &Option<String>| format::parse_reals(v.as_deref().unwrap_or_default()).map_err(CliError::Config);
        let window = Window::new(corner(&a.lo)?, corner(&a.hi)?)?;
        if window.dim() != dim {
            return Err(CliError::Config(format!("window has {} axes, space has {dim}", window.dim())));
        }
        let res = if res.len() == 1 { vec![res[0]; dim] } else { res };
        sample_tube(cfg.space.as_ref(), &basis, &window, &res, tol, a.allow_null)?
    };
    Ok(CommandOutput::ok(tube_csv(&sample, dim)))
}

#[derive(Serialize)]
struct DimReport {
    dimension_found: Option<usize>,
    max_dim: usize,
    max_residual: serde_json::Value,
    samples: usize,
    seed: u64,
    tol: serde_json::Value,
    witness: Vec<serde_json::Value>,
}

fn dimension_options(cfg: &SpaceConfig, samples: usize, max_dim: usize, tol: f64, seed: u64) -> DimensionOptions {
    let samples = match cfg.space.domain() {
        Domain::Finite { count } => count,
        Domain::Coords { .. } => samples,
    };
    DimensionOptions { samples, max_dim, tol, seed, ..DimensionOptions::default() }
}

fn dim(cfg: &SpaceConfig, a: &crate::DimArgs, tol: f64, seed: u64) -> Result<CommandOutput, CliError> {
    let opts = dimension_options(cfg, a.samples, a.max_dim, tol, seed);
    let scan = scan_dimension(cfg.space.as_ref(), &cfg.sampler, &opts)?;
    let report = DimReport {
        dimension_found: scan.dimension,
        max_dim: a.max_dim,
        max_residual: json_real(scan.max_residual),
        samples: opts.samples,
        seed,
        tol: json_real(tol),
        witness: scan.basis.iter().map(point_json).collect(),
    };
    let exit_code = if scan.dimension.is_some() { EXIT_OK } else { EXIT_DIMENSION_CAP };
    Ok(CommandOutput { text: to_json(&report), exit_code })
}

#[derive(Serialize)]
struct EuclidJson {
    dimension_found: Option<usize>,
    cond1: &'static str,
    cond2: &'static str,
    cond3: &'static str,
    cond1_max_residual: serde_json::Value,
    cond2_max_residual: serde_json::Value,
    cond3_max_residual: serde_json::Value,
    cond1_failures: usize,
    cond2_failures: usize,
    cond3_failures: usize,
    injective: bool,
    surjectivity: &'static str,
    signature: [usize; 2],
    tol: serde_json::Value,
    witness: Vec<serde_json::Value>,
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn euclid(cfg: &SpaceConfig, a: &crate::EuclidArgs, tol: f64, seed: u64) -> Result<CommandOutput, CliError> {
    let max_dim = a.max_dim.unwrap_or(match cfg.space.domain() {
        Domain::Coords { dim } => dim,
        Domain::Finite { count } => count.saturating_sub(1).clamp(1, DimensionOptions::default().max_dim),
    });
    let opts = EuclidOptions {
        dimension: dimension_options(cfg, a.samples, max_dim, tol, seed),
        pairs: a.pairs,
        grid_per_axis: a.grid,
        ..EuclidOptions::default()
    };
    let r = euclid_report(cfg.space.as_ref(), &cfg.sampler, &opts)?;
    let json = EuclidJson {
        dimension_found: r.dimension_found,
        cond1: verdict(r.cond1.pass),
        cond2: verdict(r.cond2.pass),
        cond3: verdict(r.cond3.pass),
        cond1_max_residual: json_real(r.cond1.max_residual),
        cond2_max_residual: json_real(r.cond2.max_residual),
        cond3_max_residual: json_real(r.cond3.max_residual),
        cond1_failures: r.cond1.failures,
        cond2_failures: r.cond2.failures,
        cond3_failures: r.cond3.failures,
        injective: r.injective,
        surjectivity: r.surjectivity.as_str(),
        signature: [r.signature.0, r.signature.1],
        tol: json_real(r.tol),
        witness: r.witness.iter().map(point_json).collect(),
    };
    let exit_code = if r.dimension_found.is_some() { EXIT_OK } else { EXIT_DIMENSION_CAP };
    Ok(CommandOutput { text: to_json(&json), exit_code })
}

fn solver_options(cfg: &SpaceConfig, a: &crate::SolverArgs) -> SolverOptions {
    let base = cfg.solver.clone();
    SolverOptions {
        nodes: a.nodes.unwrap_or(base.nodes),
        gtol: a.gtol.unwrap_or(base.gtol),
        max_iter: a.max_iter.unwrap_or(base.max_iter),
        extrapolate: base.extrapolate && !a.no_extrapolate,
    }
}

fn geodesic(cfg: &SpaceConfig, a: &crate::GeodesicArgs) -> Result<CommandOutput, CliError> {
    let metric = cfg.metric()?;
    let x = parse_coords(cfg, &a.from)?;
    let x2 = parse_coords(cfg, &a.to)?;
    let opts = solver_options(cfg, &a.solver);
    let (path, length) = geodesic_with_length(metric, &x, &x2, &opts)?;
    let mut head: Vec<String> = vec!["tau".into()];
    head.extend((1..=x.len()).map(|i| format!("x{i}")));
    let mut text = head.join(",");
    text.push('\n');
    for (t, node) in path.params.iter().zip(&path.nodes) {
        let _ = writeln!(text, "{},{}", real(*t), format::join_reals(node));
    }
    let _ = writeln!(text, "# discrete_length={}", real(path.length));
    let _ = writeln!(text, "# iterations={}", path.iterations);
    let _ = writeln!(text, "# length={}", real(length));
    Ok(CommandOutput::ok(text))
}

#[derive(Serialize)]
struct ConeJson {
    x: Vec<serde_json::Value>,
    x2: Vec<serde_json::Value>,
    u: Vec<serde_json::Value>,
    u_at_x: Vec<serde_json::Value>,
    degenerate: bool,
    directions: Vec<Vec<serde_json::Value>>,
    residuals: Vec<serde_json::Value>,
}

fn steps(fd_step: Option<f64>) -> Result<FdSteps, CliError> {
    match fd_step {
        Some(h) if !(h > 0.0 && h.is_finite()) => Err(CliError::Config(format!("--fd-step must be positive, got {h}"))),
        Some(h) => Ok(FdSteps::uniform(h)),
        None => Ok(FdSteps::default()),
    }
}

fn cone(cfg: &SpaceConfig, a: &crate::ConeArgs, seed: u64) -> Result<CommandOutput, CliError> {
    let metric = cfg.metric()?;
    let x = parse_coords(cfg, &a.x)?;
    let x2 = parse_coords(cfg, &a.x2)?;
    let u = format::parse_reals(&a.u).map_err(CliError::Config)?;
    if u.len() != x.len() {
        return Err(CliError::Config(format!("direction has {} components, space has {}", u.len(), x.len())));
    }
    let opts = ConeOptions {
        resolution: a.resolution,
        tol: a.cone_tol,
        cluster_radius: a.cluster_radius,
        seed,
        steps: steps(a.fd_step)?,
    };
    let r = collinearity_cone(cfg.space.as_ref(), metric, &x, &x2, &u, &opts)?;
    let json = ConeJson {
        x: json_reals(&r.x),
        x2: json_reals(&r.x2),
        u: json_reals(&r.u),
        u_at_x: json_reals(&r.u_at_x),
        degenerate: r.degenerate,
        directions: r.solutions.iter().map(|s| json_reals(&s.direction)).collect(),
        residuals: r.solutions.iter().map(|s| json_real(s.residual)).collect(),
    };
    Ok(CommandOutput::ok(to_json(&json)))
}

#[derive(Serialize)]
struct IdentityJson {
    sigma: serde_json::Value,
    gradient_norm_residual: serde_json::Value,
    geodesic_direction_residual: serde_json::Value,
    metric_transfer_residual: serde_json::Value,
    mixed_det: serde_json::Value,
    fd_steps: Vec<serde_json::Value>,
}

fn identities(cfg: &SpaceConfig, a: &crate::IdentityArgs) -> Result<CommandOutput, CliError> {
    let metric = cfg.metric()?;
    let x = parse_coords(cfg, &a.x)?;
    let x2 = parse_coords(cfg, &a.x2)?;
    let d = check_worldfunction_identities(cfg.space.as_ref(), metric, &x, &x2, steps(a.fd_step)?)?;
    let json = IdentityJson {
        sigma: json_real(d.sigma),
        gradient_norm_residual: json_real(d.gradient_norm_residual),
        geodesic_direction_residual: json_real(d.geodesic_direction_residual),
        metric_transfer_residual: json_real(d.metric_transfer_residual),
        mixed_det: json_real(d.mixed_det),
        fd_steps: json_reals(&[d.steps.first, d.steps.mixed, d.steps.third]),
    };
    Ok(CommandOutput::ok(to_json(&json)))
}
