//! Numerics for the space of oriented geodesics of hyperbolic 3-space and
//! sampled classification of geodesic foliations.
//!
//! The ambient model is the hyperboloid in Minkowski space `R^{3,1}` with
//! base point `o = (1, 0, 0, 0)`. Tangent vectors to the space of geodesics
//! are Jacobi data `(J(0), J'(0))` at a reference point of the geodesic.

pub mod cli;
pub mod error;
pub mod families;
pub mod foliation;
pub mod geodesic;
pub mod lorentz;

pub use error::{GeoError, Result};
pub use families::{
    f_lambda_chart, h_lambda, plane_normal_family, prop_frame, prop_point, quad_form, scan_lambda, v_lambda,
    vertical_family, FrameAtPoint, LambdaScan, PropParams,
};
pub use foliation::{
    chart_tangent, chart_variation, check_geodesic_field, classify_chart, classify_point, critical_point_scan,
    geodesics_intersect, nabla_v, nondegeneracy_eigencheck, psi_rank, Axis, ClassificationReport, Eigencheck,
    FoliationChart, GridSpec, Intersection, ParamRect, UnitField, Verdict,
};
pub use geodesic::{
    asymptote_vector, chart_h, chart_h_inv, g_cross, g_k, gauss, gauss_differential, jacobi_eval, make_geodesic,
    parallel_transport, stability_classify, GaussSign, HChartPoint, JacobiData, OrientedGeodesic, Stability,
};
pub use lorentz::{
    convert_from_model, convert_model, cross, dist, exp_map, log_map, mink_inner, BoundaryPoint, HPoint, HTangent,
    MinkVec, Model,
};
