//! Closed-form example families: the vertical (horosphere-orthogonal)
//! foliation, the foliation by normals to a totally geodesic plane, and the
//! two-parameter family `F_λ` built on polar coordinates around `o`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::foliation::{FoliationChart, GridSpec, ParamRect, UnitField};
use crate::geodesic::{asymptote_vector, OrientedGeodesic};
use crate::lorentz::{
    convert_from_model, exp_map, transport_between, BoundaryPoint, HPoint, HTangent, MinkVec, Model,
};

/// Radius of the ball on which the vertical and plane-normal fields are
/// sampled.
pub const FIELD_RADIUS: f64 = 2.0;

fn unit_square() -> ParamRect {
    ParamRect::new(-1.0, 1.0, -1.0, 1.0).expect("non-empty")
}

fn half_space_point(x: f64, y: f64, z: f64) -> HPoint {
    convert_from_model(Model::HalfSpace, [x, y, z]).expect("z > 0")
}

/// The field of unit vectors pointing at the ideal point `∞` of the
/// half-space model, with its chart `(a, b) -> leaf through (a, b, 1)`.
pub fn vertical_family() -> (UnitField, FoliationChart) {
    let field = UnitField::new("vertical", HPoint::ORIGIN, FIELD_RADIUS, |p| {
        asymptote_vector(p, &BoundaryPoint::INFINITY)
    });
    let chart = FoliationChart::new("vertical", unit_square(), |a, b| {
        let p = half_space_point(a, b, 1.0);
        OrientedGeodesic::from_foot(p, asymptote_vector(&p, &BoundaryPoint::INFINITY))
            .expect("asymptote vectors are unit")
    });
    (field, chart)
}

/// Unit normals to the totally geodesic plane `x3 = 0`, extended along the
/// normal geodesics.
pub fn plane_normal_field(p: &HPoint) -> HTangent {
    let [x0, x1, x2, x3] = p.coords();
    let k = 1.0 / (1.0 + x3 * x3).sqrt();
    HTangent::project(*p, MinkVec::new(x3 * x0, x3 * x1, x3 * x2, 1.0 + x3 * x3) * k)
}

/// The plane-normal field with its chart `(a, b) -> normal through exp_o(a e1 + b e2)`.
pub fn plane_normal_family() -> (UnitField, FoliationChart) {
    let field = UnitField::new("plane-normal", HPoint::ORIGIN, FIELD_RADIUS, plane_normal_field);
    let chart = FoliationChart::new("plane-normal", unit_square(), |a, b| {
        let p = exp_map(&HTangent::unchecked(HPoint::ORIGIN, MinkVec::spatial(a, b, 0.0)));
        let n = transport_between(&HTangent::unchecked(HPoint::ORIGIN, MinkVec::basis(3)), &p);
        OrientedGeodesic::from_foot(p, n).expect("transport preserves unit length")
    });
    (field, chart)
}

/// Parameters of `F_λ`: `α = α0 + λ t - λ r` on `R = [1,3] x [-δ, 2π+δ]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropParams {
    pub alpha0: f64,
    pub lambda: f64,
    pub delta: f64,
}

impl PropParams {
    pub const DEFAULT_ALPHA0: f64 = PI / 4.0;
    pub const DEFAULT_DELTA: f64 = 0.1;

    pub fn new(alpha0: f64, lambda: f64, delta: f64) -> Result<Self> {
        check_shape(alpha0, delta)?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(GeoError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        Ok(PropParams { alpha0, lambda, delta })
    }

    pub fn rect(&self) -> ParamRect {
        prop_rect(self.delta)
    }

    pub fn alpha(&self, r: f64, t: f64) -> f64 {
        self.alpha0 + self.lambda * (t - r)
    }
}

fn check_shape(alpha0: f64, delta: f64) -> Result<()> {
    if !(alpha0 > 0.0 && alpha0 < PI / 2.0) {
        return Err(GeoError::InvalidParameter(format!("alpha0 must lie in (0, pi/2), got {alpha0}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(GeoError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

pub fn prop_rect(delta: f64) -> ParamRect {
    ParamRect::new(1.0, 3.0, -delta, 2.0 * PI + delta).expect("delta > 0")
}

/// `f(r, t) = exp_o(r cos t e1 + r sin t e2)`.
pub fn prop_point(r: f64, t: f64) -> HPoint {
    HPoint::from_spatial([r.sinh() * t.cos(), r.sinh() * t.sin(), 0.0])
}

/// Orthonormal frame at `f(r, t)`: radial `u`, angular `v`, and `w = u x v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameAtPoint {
    pub f: HPoint,
    pub u: HTangent,
    pub v: HTangent,
    pub w: HTangent,
}

pub fn prop_frame(r: f64, t: f64) -> FrameAtPoint {
    let f = prop_point(r, t);
    let (c, s) = (t.cos(), t.sin());
    let u = HTangent::unchecked(f, MinkVec::new(r.sinh(), r.cosh() * c, r.cosh() * s, 0.0));
    let v = HTangent::unchecked(f, MinkVec::new(0.0, -s, c, 0.0));
    let w = HTangent::unchecked(f, MinkVec::basis(3));
    FrameAtPoint { f, u, v, w }
}

/// `V_λ(r, t) = cos α v + sin α w`.
pub fn v_lambda(r: f64, t: f64, p: &PropParams) -> HTangent {
    let fr = prop_frame(r, t);
    let a = p.alpha(r, t);
    fr.v.scaled(a.cos()).plus(&fr.w.scaled(a.sin()))
}

/// `F_λ(r, t)`: the geodesic through `f(r, t)` with velocity `V_λ(r, t)`,
/// parametrised from `f(r, t)`.
pub fn f_lambda_chart(p: &PropParams) -> FoliationChart {
    let p = *p;
    FoliationChart::new(format!("prop(lambda={})", p.lambda), p.rect(), move |r, t| {
        OrientedGeodesic::from_foot(prop_point(r, t), v_lambda(r, t, &p)).expect("frame vectors are unit")
    })
}

/// `h_λ = sinh(2r) sin(2α) - λ`.
pub fn h_lambda(r: f64, t: f64, p: &PropParams) -> f64 {
    (2.0 * r).sinh() * (2.0 * p.alpha(r, t)).sin() - p.lambda
}

/// Matrix of `λ x^2 - λ x y + ¼ sinh(2r) sin(2α) y^2`.
pub fn quad_form(r: f64, t: f64, p: &PropParams) -> Matrix2<f64> {
    let l = p.lambda;
    let c = 0.25 * (2.0 * r).sinh() * (2.0 * p.alpha(r, t)).sin();
    Matrix2::new(l, -0.5 * l, -0.5 * l, c)
}

/// Minimum of `h_λ` over the grid nodes of `R` (boundary included).
pub fn min_h_on_grid(p: &PropParams, grid: &GridSpec) -> f64 {
    h_on_grid(p, grid).into_iter().map(|(_, _, h)| h).fold(f64::INFINITY, f64::min)
}

/// `(r, t, h_λ(r, t))` over the grid nodes of `R`, row-major.
pub fn h_on_grid(p: &PropParams, grid: &GridSpec) -> Vec<(f64, f64, f64)> {
    grid.nodes(&p.rect())
        .par_iter()
        .map(|&(r, t)| (r, t, h_lambda(r, t, p)))
        .collect()
}

pub const SCAN_STEPS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanStep {
    pub lambda: f64,
    pub min_h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaScan {
    pub alpha0: f64,
    pub delta: f64,
    pub grid: GridSpec,
    pub lambda_max: f64,
    pub min_h_at_max: f64,
    /// Probes in evaluation order, starting with the upper bracket `sinh 6`.
    pub schedule: Vec<ScanStep>,
}

impl LambdaScan {
    pub fn params_at(&self, lambda: f64) -> Result<PropParams> {
        PropParams::new(self.alpha0, lambda, self.delta)
    }
}

/// Bisection on `(0, sinh 6]` for the largest `λ` whose grid minimum of
/// `h_λ` is positive.
pub fn scan_lambda(alpha0: f64, delta: f64, grid: &GridSpec) -> Result<LambdaScan> {
    check_shape(alpha0, delta)?;
    let eval = |l: f64| min_h_on_grid(&PropParams { alpha0, lambda: l, delta }, grid);
    let mut schedule = Vec::with_capacity(SCAN_STEPS + 1);
    let (mut lo, mut hi) = (0.0f64, 6.0f64.sinh());
    let top = eval(hi);
    schedule.push(ScanStep { lambda: hi, min_h: top });
    let mut min_lo = f64::NAN;
    if top > 0.0 {
        lo = hi;
        min_lo = top;
    } else {
        for _ in 0..SCAN_STEPS {
            let mid = 0.5 * (lo + hi);
            let m = eval(mid);
            schedule.push(ScanStep { lambda: mid, min_h: m });
            if m > 0.0 {
                lo = mid;
                min_lo = m;
            } else {
                hi = mid;
            }
        }
    }
    if !(lo > 0.0) {
        return Err(GeoError::InvalidParameter(
            "no positive lambda keeps h positive on the grid".into(),
        ));
    }
    Ok(LambdaScan {
        alpha0,
        delta,
        grid: *grid,
        lambda_max: lo,
        min_h_at_max: min_lo,
        schedule,
    })
}
