//! End-to-end acceptance suite. Runs without the libtest harness so that each
//! criterion prints exactly one PASS/FAIL line; the process exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigma_geometry::nalgebra::DMatrix;
use sigma_geometry::{
    build_chart, check_worldfunction_identities, collinearity_cone, covariant_coordinates, cylinder_contains,
    detect_dimension, ellipsoid_contains, euclid_report, gram, hero_area, reconstruct_sigma, sample_tube,
    segment_contains, sigma, sigma_riemannian, tube_contains, ConeOptions, ConstantMetric, ConstantMetricSpace,
    DimensionOptions, EuclidOptions, EuclideanSpace, FdSteps, Point, PointSampler, PuncturedPlane,
    PuncturedPlaneMetric, SolverOptions, SphereMetric, SphereSpace, Window,
};

type Outcome = Result<String, String>;

fn pt(x: &[f64]) -> Point {
    Point::coords(x.to_vec())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform(r: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-half..half)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- 1 --------------------------------------------------------------------

fn gram_hero() -> Outcome {
    let e2 = EuclideanSpace::new(2);
    let mut r = rng(1);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let v: Vec<Vec<f64>> = (0..3).map(|_| uniform(&mut r, 2, 5.0)).collect();
        let f2 = gram(&e2, &[pt(&v[0]), pt(&v[1]), pt(&v[2])]).map_err(|e| e.to_string())?.determinant;
        let (a, b, c) = (dist(&v[0], &v[1]), dist(&v[1], &v[2]), dist(&v[0], &v[2]));
        let s = 0.5 * (a + b + c);
        let area = (s * (s - a) * (s - b) * (s - c)).max(0.0).sqrt();
        let lib_area = hero_area(a, b, c).map_err(|e| e.to_string())?;
        ensure((lib_area - area).abs() <= 1e-9 * area.max(1.0), || format!("hero_area {lib_area} vs {area}"))?;
        worst = worst.max((f2 - (2.0 * area).powi(2)).abs() / f2.max(1.0));
    }
    ensure(worst <= 1e-9, || format!("max relative gap {worst:e}"))?;
    Ok(format!("1000 triangles, max |F2-(2A)^2|/max(F2,1) = {worst:.2e}"))
}

// ---- 2 --------------------------------------------------------------------

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn permutation_symmetry() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    for n in 1..=4 {
        let spaces: Vec<Box<dyn sigma_geometry::SigmaSpace>> =
            vec![Box::new(EuclideanSpace::new(4)), Box::new(ConstantMetricSpace::pseudo_euclidean(4))];
        for space in &spaces {
            for _ in 0..20 {
                let pts: Vec<Point> = (0..=n).map(|_| pt(&uniform(&mut r, 4, 1.0))).collect();
                let base = gram(space.as_ref(), &pts).map_err(|e| e.to_string())?.determinant;
                if base.abs() < 1e-6 {
                    continue;
                }
                for perm in permutations(n + 1) {
                    let permuted: Vec<Point> = perm.iter().map(|&i| pts[i].clone()).collect();
                    let f = gram(space.as_ref(), &permuted).map_err(|e| e.to_string())?.determinant;
                    worst = worst.max((f - base).abs() / base.abs());
                    checked += 1;
                }
            }
        }
    }
    ensure(worst <= 1e-9, || format!("max relative change {worst:e}"))?;
    Ok(format!("{checked} permuted bases, n <= 4, max relative change {worst:.2e}"))
}

// ---- 3 --------------------------------------------------------------------

fn euclideanness() -> Outcome {
    let mut worst = [0.0_f64; 3];
    let mut worst_rec = 0.0_f64;
    for dim in 1..=4 {
        let space = EuclideanSpace::new(dim);
        let sampler = PointSampler::cube(dim, 1.0);
        for seed in 0..10 {
            let opts = DimensionOptions { seed, ..DimensionOptions::default() };
            let (found, basis) = detect_dimension(&space, &sampler, &opts).map_err(|e| e.to_string())?;
            ensure(found == dim, || format!("dim {dim} seed {seed}: detected {found}"))?;
            let report = euclid_report(
                &space,
                &sampler,
                &EuclidOptions { dimension: opts.clone(), ..EuclidOptions::default() },
            )
            .map_err(|e| e.to_string())?;
            for (i, c) in [&report.cond1, &report.cond2, &report.cond3].iter().enumerate() {
                ensure(c.pass && c.max_residual <= 1e-8, || format!("dim {dim} seed {seed}: condition {} {c:?}", i + 1))?;
                worst[i] = worst[i].max(c.max_residual);
            }

            let chart = build_chart(&space, &basis).map_err(|e| e.to_string())?;
            let mut r = rng(1000 + seed);
            for _ in 0..500 {
                let (x, y) = (uniform(&mut r, dim, 1.0), uniform(&mut r, dim, 1.0));
                let direct = 0.5 * dist(&x, &y).powi(2);
                let cx = covariant_coordinates(&space, &chart, &pt(&x)).map_err(|e| e.to_string())?;
                let cy = covariant_coordinates(&space, &chart, &pt(&y)).map_err(|e| e.to_string())?;
                let rec = reconstruct_sigma(&chart, &cx, &cy);
                worst_rec = worst_rec.max((rec - direct).abs() / direct.max(1.0));
            }
        }
    }
    ensure(worst_rec <= 1e-9, || format!("reconstruction gap {worst_rec:e}"))?;
    Ok(format!(
        "dims 1-4 x 10 seeds; residuals I {:.1e}, II {:.1e}, III {:.1e}; reconstruction {worst_rec:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

// ---- 4 --------------------------------------------------------------------

fn affine_rank(points: &[Vec<f64>]) -> usize {
    let n = points.len();
    let mean: Vec<f64> = (0..3).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let m = DMatrix::from_fn(n, 3, |i, k| points[i][k] - mean[k]);
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

fn minkowski_dichotomy() -> Outcome {
    let m3 = ConstantMetricSpace::pseudo_euclidean(3);
    let window = Window::cube(3, 2.0);
    let res = [41, 41, 41];
    let cell = 4.0 / 40.0;
    let sample = |basis: &[[f64; 3]], allow_null: bool| {
        let b: Vec<Point> = basis.iter().map(|p| pt(p)).collect();
        sample_tube(&m3, &b, &window, &res, 1e-6, allow_null).map(|s| s.points).map_err(|e| e.to_string())
    };

    let timelike = sample(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], false)?;
    ensure(timelike.len() >= 2 && affine_rank(&timelike) == 1, || {
        format!("timelike: {} points, rank {}", timelike.len(), affine_rank(&timelike))
    })?;

    // σ-tube of a spacelike basis along r³ is the pair of planes r¹ = ±r²
    let spacelike = sample(&[[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]], false)?;
    let dev = spacelike.iter().fold(0.0_f64, |m, p| m.max((p[0] - p[1]).abs().min((p[0] + p[1]).abs()) / 2f64.sqrt()));
    // grid index 20 is the origin, so |r¹| = |r²| exactly when |i - 20| = |j - 20|
    let expected = (0..41i32).flat_map(|i| (0..41i32).map(move |j| (i, j))).filter(|(i, j)| (i - 20).abs() == (j - 20).abs()).count() * 41;
    let both = spacelike.iter().any(|p| p[0] * p[1] > 0.0) && spacelike.iter().any(|p| p[0] * p[1] < 0.0);
    ensure(dev <= cell && both && spacelike.len() == expected, || {
        format!("spacelike: {} points (expected {expected}), deviation {dev}, both planes {both}", spacelike.len())
    })?;

    let null = sample(&[[0.0, 0.0, 0.0], [1.0, 1.0, 0.0]], true)?;
    let null_dev = null.iter().fold(0.0_f64, |m, p| m.max((p[0] - p[1]).abs()));
    ensure(null.len() == 41 * 41 && null_dev <= cell, || format!("null: {} points, deviation {null_dev}", null.len()))?;

    Ok(format!(
        "timelike rank 1 ({} pts); spacelike {} pts on r1=+-r2 (dev {dev:.1e}); null {} pts on r0=r1",
        timelike.len(),
        spacelike.len(),
        null.len()
    ))
}

// ---- 5 --------------------------------------------------------------------

/// Shortest path length around the disk |x| < a: the straight segment when
/// it clears the disk, otherwise two tangents joined by the shorter arc.
fn detour_length(a: f64, x: &[f64], y: &[f64]) -> f64 {
    let d = [y[0] - x[0], y[1] - x[1]];
    let dd = d[0] * d[0] + d[1] * d[1];
    let t = (-(x[0] * d[0] + x[1] * d[1]) / dd).clamp(0.0, 1.0);
    let closest = [x[0] + t * d[0], x[1] + t * d[1]];
    if closest[0].hypot(closest[1]) >= a {
        return dd.sqrt();
    }
    let (rx, ry) = (x[0].hypot(x[1]), y[0].hypot(y[1]));
    let cos = ((x[0] * y[0] + x[1] * y[1]) / (rx * ry)).clamp(-1.0, 1.0);
    let wrap = cos.acos() - (a / rx).acos() - (a / ry).acos();
    (rx * rx - a * a).sqrt() + (ry * ry - a * a).sqrt() + a * wrap
}

fn run_cli(args: &[&str], config: &Path, out: Option<&Path>, threads: Option<&str>) -> (Option<i32>, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sigma-geometry"));
    cmd.args(args).arg("--space").arg(config);
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    match threads {
        Some(t) => cmd.env("SIGMA_GEOMETRY_THREADS", t),
        None => cmd.env_remove("SIGMA_GEOMETRY_THREADS"),
    };
    let o = cmd.output().expect("run sigma-geometry");
    let data = match out {
        Some(path) => std::fs::read(path).unwrap_or_default(),
        None => o.stdout,
    };
    (o.status.code(), data)
}

fn convexity_problem(dir: &Path) -> Outcome {
    let a = 1.0;
    let metric = PuncturedPlaneMetric::new(a);
    let analytic = PuncturedPlane::new(a).map_err(|e| e.to_string())?;
    let opts = SolverOptions { nodes: 128, ..SolverOptions::default() };

    let exact = 0.5 * (2.0 * 3f64.sqrt() + PI / 3.0).powi(2);
    let solved = sigma_riemannian(&metric, &[-2.0, 0.0], &[2.0, 0.0], &opts).map_err(|e| e.to_string())?;
    let rel = (solved - exact).abs() / exact;
    ensure(rel <= 1e-5, || format!("opposite pair: solver {solved} vs {exact}"))?;
    ensure(solved > 8.0, || "shadowed pair is not longer than the chord".into())?;

    let mut r = rng(5);
    let (mut clear, mut shadowed, mut worst_clear, mut worst_shadow) = (0, 0, 0.0_f64, 0.0_f64);
    while clear < 200 || shadowed < 6 {
        let (x, y) = (uniform(&mut r, 2, 3.0), uniform(&mut r, 2, 3.0));
        if x[0].hypot(x[1]) < a || y[0].hypot(y[1]) < a {
            continue;
        }
        let euclid = 0.5 * dist(&x, &y).powi(2);
        let oracle = 0.5 * detour_length(a, &x, &y).powi(2);
        let lib = sigma(&analytic, &pt(&x), &pt(&y)).map_err(|e| e.to_string())?;
        if oracle == euclid {
            if clear >= 200 {
                continue;
            }
            worst_clear = worst_clear.max((lib - euclid).abs() / euclid.max(1.0));
            if clear < 5 {
                let s = sigma_riemannian(&metric, &x, &y, &opts).map_err(|e| e.to_string())?;
                worst_clear = worst_clear.max((s - euclid).abs() / euclid.max(1.0));
            }
            clear += 1;
        } else if shadowed < 6 {
            let s = sigma_riemannian(&metric, &x, &y, &opts).map_err(|e| e.to_string())?;
            ensure(s > euclid, || format!("shadowed {x:?} {y:?}: {s} <= {euclid}"))?;
            worst_shadow = worst_shadow.max(((s - oracle) / oracle).abs()).max(((lib - oracle) / oracle).abs());
            shadowed += 1;
        }
    }
    ensure(worst_clear <= 1e-9, || format!("unobstructed pairs differ from Euclidean by {worst_clear:e}"))?;
    ensure(worst_shadow <= 1e-5, || format!("shadowed pairs differ from the tangent-arc oracle by {worst_shadow:e}"))?;

    let config = dir.join("punctured.json");
    std::fs::write(&config, r#"{"kind":"punctured_plane","hole_radius":1}"#).map_err(|e| e.to_string())?;
    let (_, data) = run_cli(&["euclid"], &config, None, None);
    let report: serde_json::Value = serde_json::from_slice(&data).map_err(|e| e.to_string())?;
    ensure(report["cond2"] == "fail", || format!("euclid report: {report}"))?;

    Ok(format!(
        "opposite pair rel err {rel:.1e}; 200 clear pairs {worst_clear:.1e}; 6 shadowed pairs {worst_shadow:.1e}; euclid cond2 fail (max {})",
        report["cond2_max_residual"]
    ))
}

// ---- 6 --------------------------------------------------------------------

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn great_circle_sigma(x: &[f64], y: &[f64]) -> f64 {
    let (p, q) = (unit(x[0], x[1]), unit(y[0], y[1]));
    let cross = [p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0]];
    let dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let angle = (cross[0].hypot(cross[1]).hypot(cross[2])).atan2(dot);
    0.5 * angle * angle
}

fn sphere_pair(r: &mut ChaCha8Rng, max_dphi: f64) -> (Vec<f64>, Vec<f64>) {
    let x = vec![r.random_range(0.6..PI - 0.6), r.random_range(-PI..PI)];
    let y = vec![r.random_range(0.6..PI - 0.6), x[1] + r.random_range(-max_dphi..max_dphi)];
    (x, y)
}

fn sphere_oracle() -> Outcome {
    let metric = SphereMetric::new(1.0);
    let closed = SphereSpace::new(1.0).map_err(|e| e.to_string())?;
    let opts = SolverOptions::default();
    let mut r = rng(6);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let (x, y) = sphere_pair(&mut r, 2.0);
        let s = sigma_riemannian(&metric, &x, &y, &opts).map_err(|e| e.to_string())?;
        let oracle = great_circle_sigma(&x, &y);
        worst = worst.max((s - oracle).abs());
    }
    ensure(worst <= 1e-6, || format!("solver vs great circle {worst:e}"))?;

    let mut worst_id = [0.0_f64; 3];
    for _ in 0..20 {
        let (x, y) = sphere_pair(&mut r, 2.0);
        let d = check_worldfunction_identities(&closed, &metric, &x, &y, FdSteps::default())
            .map_err(|e| e.to_string())?;
        for (w, v) in worst_id
            .iter_mut()
            .zip([d.gradient_norm_residual, d.geodesic_direction_residual, d.metric_transfer_residual])
        {
            *w = w.max(v);
        }
    }
    ensure(worst_id.iter().all(|&w| w <= 1e-4), || format!("identity residuals {worst_id:?}"))?;
    Ok(format!(
        "100 pairs max |dsigma| {worst:.1e}; identities on 20 pairs: {:.1e} / {:.1e} / {:.1e}",
        worst_id[0], worst_id[1], worst_id[2]
    ))
}

// ---- 7 --------------------------------------------------------------------

fn angle_to_line(d: &[f64], u: &[f64]) -> f64 {
    let dot: f64 = d.iter().zip(u).map(|(a, b)| a * b).sum();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (dot.abs() / (norm(d) * norm(u))).clamp(-1.0, 1.0).acos()
}

/// Tangent at `y` of the great circle from `x`, in (θ, φ) components.
fn geodesic_tangent(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (p, q) = (unit(x[0], x[1]), unit(y[0], y[1]));
    let pq = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
    let t: Vec<f64> = (0..3).map(|i| q[i] * pq - p[i]).collect();
    let (th, ph) = (y[0], y[1]);
    let e_theta = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
    let e_phi = [-ph.sin(), ph.cos(), 0.0];
    let dth: f64 = (0..3).map(|i| t[i] * e_theta[i]).sum();
    let dph: f64 = (0..3).map(|i| t[i] * e_phi[i]).sum::<f64>() / th.sin();
    vec![dth, dph]
}

fn cone_dichotomy() -> Outcome {
    let opts = ConeOptions::default();
    let mut r = rng(7);
    let mut worst = 0.0_f64;
    for q in 0..50 {
        let dim = 2 + q % 2;
        let space = EuclideanSpace::new(dim);
        let metric = ConstantMetric::euclidean(dim);
        let x = uniform(&mut r, dim, 2.0);
        let x2 = uniform(&mut r, dim, 2.0);
        let u = uniform(&mut r, dim, 1.0);
        let c = collinearity_cone(&space, &metric, &x, &x2, &u, &opts).map_err(|e| e.to_string())?;
        ensure(!c.solutions.is_empty() && c.degenerate, || format!("euclidean query {q}: {} solutions", c.solutions.len()))?;
        for s in &c.solutions {
            worst = worst.max(angle_to_line(&s.direction, &u));
        }
    }
    ensure(worst <= opts.cluster_radius, || format!("euclidean solution {worst} rad from the u line"))?;

    let m3 = ConstantMetricSpace::pseudo_euclidean(3);
    let g = ConstantMetric::new(m3.matrix().clone());
    let eta = |a: &[f64], b: &[f64]| a[0] * b[0] - a[1] * b[1] - a[2] * b[2];
    let mut opened = Vec::new();
    for (name, u) in [("spacelike", [0.0, 0.0, 1.0]), ("null", [1.0, 1.0, 0.0])] {
        let c = collinearity_cone(&m3, &g, &[0.0, 0.0, 0.0], &[0.3, 1.0, 0.2], &u, &opts).map_err(|e| e.to_string())?;
        let off: Vec<&Vec<f64>> = c
            .solutions
            .iter()
            .map(|s| &s.direction)
            .filter(|d| angle_to_line(d, &u) > opts.cluster_radius)
            .collect();
        ensure(!c.degenerate && !off.is_empty(), || format!("minkowski {name}: no off-line solution"))?;
        // flat-space collinearity: (u·d)² = (u·u)(d·d)
        for d in &off {
            let gap = eta(&u, d).powi(2) - eta(&u, &u) * eta(d, d);
            ensure(gap.abs() <= 1e-5, || format!("minkowski {name}: direction {d:?} misses the cone by {gap:e}"))?;
        }
        opened.push(format!("{name} {}", off.len()));
    }

    let sphere = SphereSpace::new(1.0).map_err(|e| e.to_string())?;
    let metric = SphereMetric::new(1.0);
    let mut sphere_queries = 0;
    while sphere_queries < 10 {
        let (x, y) = sphere_pair(&mut r, 0.5);
        if great_circle_sigma(&x, &y) > 0.125 || great_circle_sigma(&x, &y) < 1e-4 {
            continue;
        }
        let u = geodesic_tangent(&x, &y);
        let c = collinearity_cone(&sphere, &metric, &x, &y, &u, &opts).map_err(|e| e.to_string())?;
        ensure(c.degenerate && !c.solutions.is_empty(), || format!("sphere {x:?}->{y:?}: cone opened"))?;
        sphere_queries += 1;
    }
    Ok(format!(
        "50 euclidean queries degenerate (max {worst:.1e} rad); minkowski off-line solutions: {}; 10 sphere queries degenerate",
        opened.join(", ")
    ))
}

// ---- 8 --------------------------------------------------------------------

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn object_identities() -> Outcome {
    let tol = 1e-9;
    let e3 = EuclideanSpace::new(3);
    let mut r = rng(8);
    let err = |e: sigma_geometry::Error| e.to_string();

    // ellipsoid with the second focus as surface point is the segment
    let (p0, p1) = (uniform(&mut r, 3, 2.0), uniform(&mut r, 3, 2.0));
    let (a, b) = (pt(&p0), pt(&p1));
    let mut on_segment = 0;
    for i in 0..600 {
        let x = if i % 2 == 0 { lerp(&p0, &p1, r.random_range(0.0..1.0)) } else { uniform(&mut r, 3, 2.0) };
        let e = ellipsoid_contains(&e3, &a, &b, &b, &pt(&x), tol).map_err(err)?;
        let s = segment_contains(&e3, &a, &b, &pt(&x), tol).map_err(err)?;
        ensure(e == s, || format!("ellipsoid and segment disagree at {x:?}"))?;
        ensure(s.member == (i % 2 == 0), || format!("segment membership wrong at {x:?}"))?;
        if s.member {
            on_segment += 1;
            ensure(tube_contains(&e3, &[a.clone(), b.clone()], &pt(&x), tol).map_err(err)?.member, || {
                format!("segment point {x:?} outside the tube")
            })?;
        }
    }

    // cylinder about the line: moving P1 along the segment changes nothing
    let through = uniform(&mut r, 3, 2.0);
    let p1_inner = lerp(&p0, &p1, 0.37);
    let axis: Vec<f64> = p1.iter().zip(&p0).map(|(x, y)| x - y).collect();
    let axis_len = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let axis_unit: Vec<f64> = axis.iter().map(|v| v / axis_len).collect();
    let radius_of = |x: &[f64]| {
        let w: Vec<f64> = x.iter().zip(&p0).map(|(a, b)| a - b).collect();
        let along: f64 = w.iter().zip(&axis_unit).map(|(a, b)| a * b).sum();
        (w.iter().map(|v| v * v).sum::<f64>() - along * along).max(0.0).sqrt()
    };
    let radius = radius_of(&through);
    let mut cyl_members = 0;
    for i in 0..600 {
        let x = if i % 2 == 0 {
            // a point at the same distance from the axis
            let mut w = uniform(&mut r, 3, 1.0);
            let along: f64 = w.iter().zip(&axis_unit).map(|(a, b)| a * b).sum();
            w.iter_mut().zip(&axis_unit).for_each(|(v, u)| *v -= along * u);
            let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let t = r.random_range(-1.0..2.0);
            (0..3).map(|k| p0[k] + t * axis[k] + radius * w[k] / wn).collect()
        } else {
            uniform(&mut r, 3, 2.0)
        };
        let c1 = cylinder_contains(&e3, &a, &b, &pt(&through), &pt(&x), tol).map_err(err)?;
        let c2 = cylinder_contains(&e3, &a, &pt(&p1_inner), &pt(&through), &pt(&x), tol).map_err(err)?;
        ensure(c1.member == c2.member, || format!("euclidean cylinders differ at {x:?}"))?;
        ensure(c1.member == ((radius_of(&x) - radius).abs() < 1e-6), || format!("cylinder oracle disagrees at {x:?}"))?;
        cyl_members += c1.member as usize;
    }

    let m3 = ConstantMetricSpace::pseudo_euclidean(3);
    let (m0, m1, m1_inner, mp) = (pt(&[0.0, 0.0, 0.0]), pt(&[0.0, 0.0, 2.0]), pt(&[1.0, 1.0, 1.0]), pt(&[0.0, 1.0, 0.0]));
    // P1' sits on the σ-segment: with all three intervals spacelike the
    // imaginary lengths add up, |ρ(P0,P1')| + |ρ(P1',P1)| = |ρ(P0,P1)|
    let imag_len = |p: &Point, q: &Point| sigma(&m3, p, q).map(|s| (-2.0 * s).sqrt());
    let inner_on_segment = (imag_len(&m0, &m1_inner).map_err(err)? + imag_len(&m1_inner, &m1).map_err(err)?
        - imag_len(&m0, &m1).map_err(err)?)
        .abs()
        < 1e-12;
    let witness = pt(&[0.0, 1.0, -1.0]);
    let witness_splits = cylinder_contains(&m3, &m0, &m1, &mp, &witness, tol).map_err(err)?.member
        && !cylinder_contains(&m3, &m0, &m1_inner, &mp, &witness, tol).map(|m| m.member).unwrap_or(false);
    let mut counterexamples = 0;
    for x in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        for y in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            for z in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let rp = pt(&[x, y, z]);
                let c1 = cylinder_contains(&m3, &m0, &m1, &mp, &rp, tol).map(|m| m.member).unwrap_or(false);
                let c2 = cylinder_contains(&m3, &m0, &m1_inner, &mp, &rp, tol).map(|m| m.member).unwrap_or(false);
                counterexamples += (c1 != c2) as usize;
            }
        }
    }
    ensure(inner_on_segment && witness_splits && counterexamples > 0, || "no minkowski cylinder counterexample".into())?;

    // straight line inside every plane through it
    let line = [pt(&[0.0, 0.0, 0.0]), pt(&[1.0, 0.0, 0.0])];
    let plane = [line[0].clone(), line[1].clone(), pt(&[0.3, -0.7, 0.2])];
    let tube_pts = sample_tube(&e3, &line, &Window::cube(3, 1.0), &[1001, 3, 3], tol, false)
        .map_err(err)?
        .points;
    ensure(tube_pts.len() >= 500, || format!("line tube has only {} grid points", tube_pts.len()))?;
    for x in &tube_pts {
        ensure(tube_contains(&e3, &plane, &pt(x), tol).map_err(err)?.member, || format!("{x:?} not in the plane tube"))?;
    }
    Ok(format!(
        "segment/ellipsoid 600 pts ({on_segment} members); cylinders 600 pts ({cyl_members} members); minkowski counterexamples {counterexamples}/125; line-in-plane {} pts",
        tube_pts.len()
    ))
}

// ---- 9 --------------------------------------------------------------------

fn determinism(dir: &Path) -> Outcome {
    let configs = [
        ("e3.json", r#"{"kind":"euclidean","dim":3}"#),
        ("m3.json", r#"{"kind":"pseudo_euclidean","dim":3}"#),
        ("s2.json", r#"{"kind":"sphere","radius":1}"#),
        ("pp.json", r#"{"kind":"punctured_plane","hole_radius":1}"#),
    ];
    for (name, doc) in configs {
        std::fs::write(dir.join(name), doc).map_err(|e| e.to_string())?;
    }
    let cases: [(&str, &[&str]); 7] = [
        ("m3.json", &["eval", "--p", "0,0,0", "--q", "1,0.5,0.2"]),
        ("m3.json", &["tube", "--basis", "0,0,0;0,0,1", "--lo", "-2,-2,-2", "--hi", "2,2,2", "--tol", "1e-6"]),
        ("s2.json", &["dim", "--max-dim", "5", "--seed", "3"]),
        ("e3.json", &["euclid", "--seed", "11"]),
        ("pp.json", &["geodesic", "--from", "-2,0.3", "--to", "1.5,-1"]),
        ("s2.json", &["cone", "--x", "1.1,0.2", "--x2", "1.4,0.5", "--u", "1,0.4", "--seed", "5"]),
        ("s2.json", &["identities", "--x", "1,0", "--x2", "1.3,0.6"]),
    ];
    for (i, (config, args)) in cases.iter().enumerate() {
        let config = dir.join(config);
        let mut outputs = Vec::new();
        for (run, threads) in [(0, Some("1")), (1, None), (2, Some("3"))] {
            let out = dir.join(format!("det-{i}-{run}"));
            let (code, data) = run_cli(args, &config, Some(&out), threads);
            ensure(matches!(code, Some(0) | Some(5)) && !data.is_empty(), || format!("{} failed: {code:?}", args[0]))?;
            let (_, stdout) = run_cli(args, &config, None, threads);
            ensure(stdout == data, || format!("{}: stdout differs from --out file", args[0]))?;
            outputs.push(data);
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{} is not byte-identical across runs", args[0]))?;
    }
    Ok("eval, tube, dim, euclid, geodesic, cone, identities: 3 runs each byte-identical (1, default, 3 threads)".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Outcome>)> = vec![
        ("gram-hero equivalence", Duration::from_secs(1), Box::new(gram_hero)),
        ("simplex permutation symmetry", Duration::from_secs(1), Box::new(permutation_symmetry)),
        ("euclideanness suite", Duration::from_secs(10), Box::new(euclideanness)),
        ("minkowski tube dichotomy", Duration::from_secs(30), Box::new(minkowski_dichotomy)),
        ("punctured-plane convexity problem", Duration::from_secs(30), Box::new(|| convexity_problem(dir.path()))),
        ("sphere oracle and identities", Duration::from_secs(60), Box::new(sphere_oracle)),
        ("collinearity-cone dichotomy", Duration::from_secs(60), Box::new(cone_dichotomy)),
        ("object identities", Duration::from_secs(10), Box::new(object_identities)),
        ("cli determinism", Duration::from_secs(120), Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    println!("acceptance: {} criteria", criteria.len());
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *budget => Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{elapsed:.2?}] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} [{elapsed:.2?}] {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
