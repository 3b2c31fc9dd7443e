//! Distance geometry from the world function σ = ½ρ² alone.
//!
//! Every construction here (scalar products, Gram determinants, tubes,
//! coordinate charts) is expressed through σ evaluated on finite point sets,
//! so the same code runs on proper Euclidean, pseudo-Euclidean, curved and
//! purely tabulated spaces.

pub mod error;
pub mod euclid;
pub mod expr;
pub mod linalg;
pub mod riemann;
pub mod sigma;
pub mod spaces;
pub mod tubes;

pub use nalgebra;

pub use error::{Error, Result};
pub use euclid::{
    build_chart, check_conditions, coordinate_grid, covariant_coordinates, detect_dimension, reconstruct_sigma,
    euclid_report, scan_dimension, Chart, ConditionReport, DimensionOptions, DimensionScan, EuclidOptions,
    EuclidReport, PointSampler,
    Surjectivity,
};
pub use riemann::{
    check_worldfunction_identities, christoffel, collinearity_cone, geodesic_between, geodesic_with_length, sigma_derivatives,
    sigma_riemannian, tangent_metric, CoincidenceMetric, ConeOptions, ConeResult, ConeSolution, ConformalMetric,
    ConstantMetric, ExprMetric, FdSteps, GeodesicPath, IdentityDiagnostics, MetricField, PuncturedPlaneMetric,
    RiemannianSpace, SolverOptions, SphereMetric, TangentData,
};
pub use sigma::{
    gamma, gram, hero_area, is_collinear, metric, rho_from_sigma, scalar_product, sigma, Domain,
    FiniteSigmaSpace, GramResult, Point, SigmaSpace,
};
pub use spaces::{
    classify_interval, make_space, ConstantMetricSpace, EuclideanSpace, IntervalKind, PuncturedPlane, SpaceSpec,
    SphereSpace,
};
pub use tubes::{
    broken_tube, cylinder_contains, ellipsoid_contains, sample_tube, segment_contains, sphere_contains,
    tube_contains, tube_through_point_contains, GridSpec, MembershipResult, TubeBasis, TubeSample, Window,
};
