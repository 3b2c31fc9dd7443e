//! World functions of curved metrics and the tangent-space machinery built
//! from σ derivatives.

mod cone;
mod geodesic;
mod metric;
mod tangent;

pub use cone::{collinearity_cone, ConeOptions, ConeResult, ConeSolution};
pub use geodesic::{geodesic_between, geodesic_with_length, sigma_riemannian, GeodesicPath, RiemannianSpace, SolverOptions};
pub use metric::{
    christoffel, CoincidenceMetric, ConformalMetric, ConstantMetric, ExprMetric, MetricField, PuncturedPlaneMetric,
    SphereMetric,
};
pub use tangent::{
    check_worldfunction_identities, sigma_derivatives, tangent_metric, FdSteps, IdentityDiagnostics, TangentData,
};
