//! The space of oriented geodesics of H^3.
//!
//! A tangent vector to the space of oriented geodesics at `[γ]` is modelled by
//! a Jacobi field along `γ` orthogonal to `γ'`, stored as its initial data
//! `(J(0), J'(0))` at the reference point of the geodesic. In curvature -1
//! such fields solve `J'' = J`, so everything below is closed form.
//!
//! The two neutral metrics have square norms
//!
//! ```text
//! |X|_cross = <γ' x J, J'>        |X|_K = |J|^2 - |J'|^2
//! ```
//!
//! both independent of the parameter at which they are evaluated.

use nalgebra::{Matrix2, Matrix3x2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::foliation::{FoliationChart, FD_STEP, MIN_FD_STEP};
use crate::lorentz::{
    boundary_chart, det_dual, dist, exp_map, frame_coords, log_map, same_point, standard_frame,
    transport_along, transport_between, BoundaryPoint, HPoint, HTangent, MinkVec, TAU_MODEL,
};

/// Tolerance for derived numerical invariants (orthogonality of Jacobi data,
/// canonical footpoints).
pub const TAU_NUM: f64 = 1e-9;

/// Relative tolerance for deciding stable/unstable Jacobi data.
pub const TAU_CLASS: f64 = 1e-8;

/// Singular values at or below this are treated as zero when computing ranks
/// of finite-difference Jacobians.
pub const RANK_TOL: f64 = 1e-6;

/// A unit-speed geodesic `s -> cosh(s) foot + sinh(s) dir`, standing for its
/// oriented equivalence class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedGeodesic {
    foot: HPoint,
    dir: MinkVec,
    canonical: bool,
}

fn check_unit_at(p: &HPoint, w: &HTangent) -> Result<()> {
    if !same_point(p, &w.base()) {
        return Err(GeoError::BaseMismatch);
    }
    let n = w.norm();
    if (n - 1.0).abs() > TAU_MODEL {
        return Err(GeoError::NotUnit(n));
    }
    Ok(())
}

impl OrientedGeodesic {
    /// The geodesic through `p` with velocity `w`, canonicalised so that the
    /// reference point is the closest point to the origin.
    pub fn new(p: HPoint, w: HTangent) -> Result<Self> {
        Self::locate(p, w).map(|(g, _)| g)
    }

    /// Like [`OrientedGeodesic::new`], also returning the parameter `s` with
    /// `eval(s) == (p, w)`.
    pub fn locate(p: HPoint, w: HTangent) -> Result<(Self, f64)> {
        check_unit_at(&p, &w)?;
        let raw = OrientedGeodesic {
            foot: p,
            dir: w.vec(),
            canonical: false,
        };
        let s = raw.closest_param_to(&HPoint::ORIGIN);
        Ok((raw.reparametrized(s, true), -s))
    }

    /// The geodesic with reference point `p` and velocity `w` there, kept as given.
    pub fn from_foot(p: HPoint, w: HTangent) -> Result<Self> {
        check_unit_at(&p, &w)?;
        let dir = w.vec();
        Ok(OrientedGeodesic {
            foot: p,
            dir,
            canonical: dir.x0().abs() <= TAU_NUM * p.vec().x0(),
        })
    }

    fn reparametrized(&self, s: f64, canonical: bool) -> Self {
        let foot = HPoint::renormalized(self.foot.vec() * s.cosh() + self.dir * s.sinh());
        let d = HTangent::project(foot, self.foot.vec() * s.sinh() + self.dir * s.cosh());
        let d = d.normalized().map(|t| t.vec()).unwrap_or(self.dir);
        OrientedGeodesic {
            foot,
            dir: d,
            canonical,
        }
    }

    /// The representative whose reference point is closest to the origin.
    pub fn canonicalize(&self) -> Self {
        if self.canonical {
            return *self;
        }
        self.reparametrized(self.closest_param_to(&HPoint::ORIGIN), true)
    }

    pub fn foot(&self) -> HPoint {
        self.foot
    }

    pub fn dir(&self) -> HTangent {
        HTangent::unchecked(self.foot, self.dir)
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    pub fn point_at(&self, s: f64) -> HPoint {
        HPoint::renormalized(self.foot.vec() * s.cosh() + self.dir * s.sinh())
    }

    pub fn velocity_at(&self, s: f64) -> HTangent {
        let p = self.point_at(s);
        HTangent::project(p, self.foot.vec() * s.sinh() + self.dir * s.cosh())
    }

    /// Point and unit velocity at parameter `s`.
    pub fn eval(&self, s: f64) -> (HPoint, HTangent) {
        (self.point_at(s), self.velocity_at(s))
    }

    /// Same trajectory, opposite orientation, same reference point.
    pub fn reverse(&self) -> Self {
        OrientedGeodesic {
            foot: self.foot,
            dir: -self.dir,
            canonical: self.canonical,
        }
    }

    /// Parameter of the closest point to `o`: minimises
    /// `-<o, γ(s)> = a cosh s + b sinh s`.
    pub fn closest_param_to(&self, o: &HPoint) -> f64 {
        let a = -o.vec().inner(&self.foot.vec());
        let b = -o.vec().inner(&self.dir);
        (-b / a).atanh()
    }

    /// Squared distance from `o` to the trajectory.
    pub fn distance_sq_to(&self, o: &HPoint) -> f64 {
        let q = self.point_at(self.closest_param_to(o));
        dist(o, &q).powi(2)
    }

    /// Parallel transport of `t` (based at the reference point) to `γ(s)`.
    pub fn transport(&self, s: f64, t: &HTangent) -> Result<HTangent> {
        if !same_point(&self.foot, &t.base()) {
            return Err(GeoError::BaseMismatch);
        }
        Ok(transport_along(&self.foot, &self.dir, s, t))
    }

    /// True if both represent the same point of the space of oriented
    /// geodesics, within `tol` on canonical representatives.
    pub fn same_class(&self, other: &OrientedGeodesic, tol: f64) -> bool {
        let (a, b) = (self.canonicalize(), other.canonicalize());
        (a.foot.vec() - b.foot.vec()).euclid_norm() <= tol
            && (a.dir - b.dir).euclid_norm() <= tol
    }

    fn same_parametrization(&self, other: &OrientedGeodesic) -> bool {
        same_point(&self.foot, &other.foot)
            && (self.dir - other.dir).euclid_norm() <= TAU_MODEL * self.foot.vec().euclid_norm()
    }
}

/// Builds a canonical geodesic through `p` with unit velocity `w`.
pub fn make_geodesic(p: HPoint, w: HTangent) -> Result<OrientedGeodesic> {
    OrientedGeodesic::new(p, w)
}

/// Parallel transport along `g` from its reference point to `g(s)`.
pub fn parallel_transport(g: &OrientedGeodesic, s: f64, t: &HTangent) -> Result<HTangent> {
    g.transport(s, t)
}

/// Initial data `(J(0), J'(0))` of a Jacobi field along `geo`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobiData {
    geo: OrientedGeodesic,
    j0: HTangent,
    j0p: HTangent,
}

impl JacobiData {
    /// Jacobi data in the orthogonal complement of the velocity.
    pub fn new(geo: OrientedGeodesic, j0: HTangent, j0p: HTangent) -> Result<Self> {
        let jd = Self::unconstrained(geo, j0, j0p)?;
        jd.check_orthogonal()?;
        Ok(jd)
    }

    /// Jacobi data allowed to carry a tangential part `(a + b s) γ'`.
    pub fn unconstrained(geo: OrientedGeodesic, j0: HTangent, j0p: HTangent) -> Result<Self> {
        if !same_point(&geo.foot, &j0.base()) || !same_point(&geo.foot, &j0p.base()) {
            return Err(GeoError::BaseMismatch);
        }
        Ok(JacobiData { geo, j0, j0p })
    }

    pub fn geodesic(&self) -> &OrientedGeodesic {
        &self.geo
    }

    pub fn j0(&self) -> HTangent {
        self.j0
    }

    pub fn j0p(&self) -> HTangent {
        self.j0p
    }

    fn tangential(&self) -> (f64, f64) {
        (self.j0.vec().inner(&self.geo.dir), self.j0p.vec().inner(&self.geo.dir))
    }

    fn check_orthogonal(&self) -> Result<()> {
        let (a, b) = self.tangential();
        let scale = self.j0.norm().max(self.j0p.norm()).max(1.0);
        for c in [a, b] {
            if c.abs() > TAU_NUM * scale {
                return Err(GeoError::NonOrthogonal(c));
            }
        }
        Ok(())
    }

    pub fn is_orthogonal(&self) -> bool {
        self.check_orthogonal().is_ok()
    }

    /// Removes the tangential part, leaving the component in the orthogonal
    /// Jacobi fields.
    pub fn orthogonal_part(&self) -> JacobiData {
        let (a, b) = self.tangential();
        let d = self.geo.dir;
        JacobiData {
            geo: self.geo,
            j0: HTangent::unchecked(self.geo.foot, self.j0.vec() - d * a),
            j0p: HTangent::unchecked(self.geo.foot, self.j0p.vec() - d * b),
        }
    }

    /// Linear combination `x*self + y*other` on the same geodesic.
    pub fn combine(&self, x: f64, other: &JacobiData, y: f64) -> Result<JacobiData> {
        if !self.geo.same_parametrization(&other.geo) {
            return Err(GeoError::GeodesicMismatch);
        }
        Ok(JacobiData {
            geo: self.geo,
            j0: HTangent::unchecked(self.geo.foot, self.j0.vec() * x + other.j0.vec() * y),
            j0p: HTangent::unchecked(self.geo.foot, self.j0p.vec() * x + other.j0p.vec() * y),
        })
    }

    /// `(J(s), J'(s))`. Orthogonal parts evolve as `cosh s J0 + sinh s J0'`
    /// (parallel transport is the identity on them in ambient coordinates);
    /// the tangential part is `(a + b s) γ'(s)`.
    pub fn eval(&self, s: f64) -> (HTangent, HTangent) {
        let (a, b) = self.tangential();
        let d = self.geo.dir;
        let perp0 = self.j0.vec() - d * a;
        let perp1 = self.j0p.vec() - d * b;
        let (p, vel) = self.geo.eval(s);
        let (ch, sh) = (s.cosh(), s.sinh());
        let j = vel.vec() * (a + b * s) + perp0 * ch + perp1 * sh;
        let jp = vel.vec() * b + perp0 * sh + perp1 * ch;
        (HTangent::project(p, j), HTangent::project(p, jp))
    }

    /// Sum of squared Riemannian lengths `|J0|^2 + |J0'|^2`.
    pub fn sasaki_norm_sq(&self) -> f64 {
        self.j0.inner(&self.j0) + self.j0p.inner(&self.j0p)
    }
}

/// Evaluates the Jacobi field at `s`.
pub fn jacobi_eval(jd: &JacobiData, s: f64) -> (HTangent, HTangent) {
    jd.eval(s)
}

fn same_geo(x: &JacobiData, y: &JacobiData) -> Result<()> {
    if x.geo.same_parametrization(&y.geo) {
        Ok(())
    } else {
        Err(GeoError::GeodesicMismatch)
    }
}

/// Orthonormal frame `(n1, n2)` of the normal plane of `g`, oriented so that
/// `g' x n1 = n2`. Both vectors are constant in ambient coordinates and
/// parallel along the whole geodesic.
fn normal_frame(g: &OrientedGeodesic) -> (MinkVec, MinkVec) {
    let (f, d) = (g.foot, g.dir);
    let n1 = standard_frame(&f)
        .iter()
        .map(|e| e.vec() - d * e.vec().inner(&d))
        .max_by(|a, b| a.inner(a).total_cmp(&b.inner(b)))
        .expect("three frame vectors");
    let n1 = n1 * (1.0 / n1.inner(&n1).sqrt());
    (n1, det_dual(f.vec(), d, n1))
}

/// Normal-frame coordinates of `(J(s), J'(s))` with the tangential part
/// dropped. The frame is parallel, so these are `cosh s c0 + sinh s c1` and
/// `sinh s c0 + cosh s c1`; working in them keeps the e^s growth of the
/// ambient coordinates out of the inner products.
fn normal_coords(jd: &JacobiData, frame: &(MinkVec, MinkVec), s: f64) -> (Vector2<f64>, Vector2<f64>) {
    let c = |v: MinkVec| Vector2::new(v.inner(&frame.0), v.inner(&frame.1));
    let (c0, c1) = (c(jd.j0.vec()), c(jd.j0p.vec()));
    let (ch, sh) = (s.cosh(), s.sinh());
    (c0 * ch + c1 * sh, c0 * sh + c1 * ch)
}

fn wedge(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// The cross-product metric, polarised, evaluated at parameter `s`.
/// Tangential parts drop out: `g' x g' = 0` and `g' x J` is normal.
pub fn g_cross_at(x: &JacobiData, y: &JacobiData, s: f64) -> Result<f64> {
    same_geo(x, y)?;
    let frame = normal_frame(&x.geo);
    let (jx, jxp) = normal_coords(x, &frame, s);
    let (jy, jyp) = normal_coords(y, &frame, s);
    Ok(0.5 * (wedge(&jx, &jyp) + wedge(&jy, &jxp)))
}

/// The cross-product metric `g_cross(X, Y)`; accepts non-orthogonal data.
pub fn g_cross(x: &JacobiData, y: &JacobiData) -> Result<f64> {
    g_cross_at(x, y, 0.0)
}

/// The Killing-form metric evaluated at parameter `s`.
pub fn g_k_at(x: &JacobiData, y: &JacobiData, s: f64) -> Result<f64> {
    same_geo(x, y)?;
    x.check_orthogonal()?;
    y.check_orthogonal()?;
    let frame = normal_frame(&x.geo);
    let (jx, jxp) = normal_coords(x, &frame, s);
    let (jy, jyp) = normal_coords(y, &frame, s);
    Ok(jx.dot(&jy) - jxp.dot(&jyp))
}

/// The Killing-form metric `g_K(X, Y)`; requires orthogonal data.
pub fn g_k(x: &JacobiData, y: &JacobiData) -> Result<f64> {
    g_k_at(x, y, 0.0)
}

/// Unit direction `u` and offset `v` at the origin, `<u,v> = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HChartPoint {
    u: HTangent,
    v: HTangent,
}

impl HChartPoint {
    pub fn new(u: HTangent, v: HTangent) -> Result<Self> {
        let o = HPoint::ORIGIN;
        if !same_point(&o, &u.base()) || !same_point(&o, &v.base()) {
            return Err(GeoError::BaseMismatch);
        }
        if (u.norm() - 1.0).abs() > TAU_MODEL || u.inner(&v).abs() > TAU_MODEL * v.norm().max(1.0) {
            return Err(GeoError::InvalidChartPoint);
        }
        Ok(HChartPoint { u, v })
    }

    pub fn u(&self) -> HTangent {
        self.u
    }

    pub fn v(&self) -> HTangent {
        self.v
    }

    /// Squared distance from the origin to the geodesic `chart_h(self)`.
    pub fn d_value(&self) -> f64 {
        self.v.inner(&self.v)
    }
}

/// The geodesic starting at `Exp_o(v)` with velocity the transport of `u`
/// along `t -> Exp_o(t v)`.
pub fn chart_h(c: &HChartPoint) -> OrientedGeodesic {
    let foot = exp_map(&c.v);
    let dir = transport_between(&c.u, &foot);
    let dir = dir.normalized().unwrap_or(dir);
    OrientedGeodesic {
        foot,
        dir: dir.vec(),
        canonical: true,
    }
}

/// Inverse of [`chart_h`] via the closest point to the origin.
pub fn chart_h_inv(g: &OrientedGeodesic) -> HChartPoint {
    let g = g.canonicalize();
    let o = HPoint::ORIGIN;
    let v = log_map(&o, &g.foot);
    let u = transport_between(&g.dir(), &o);
    let u = HTangent::project(o, u.vec());
    // Clean the first-order rounding in <u,v>.
    let vn = v.norm();
    let u = if vn > 0.0 {
        u.minus(&v.scaled(u.inner(&v) / (vn * vn)))
    } else {
        u
    };
    HChartPoint {
        u: u.normalized().unwrap_or(u),
        v,
    }
}

/// Squared distance from the origin to `g`, `D = |v|^2` in the chart.
pub fn d_function(g: &OrientedGeodesic) -> f64 {
    chart_h_inv(g).d_value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// Decaying forward: `J0' = -J0`. Zero data is reported as stable.
    Stable,
    /// Decaying backward: `J0' = J0`.
    Unstable,
    Neither,
}

pub fn stability_classify(jd: &JacobiData) -> Stability {
    let (j0, j1) = (jd.j0, jd.j0p);
    let scale = j0.norm().max(j1.norm());
    if scale == 0.0 {
        return Stability::Stable;
    }
    if j1.plus(&j0).norm() <= TAU_CLASS * scale {
        Stability::Stable
    } else if j1.minus(&j0).norm() <= TAU_CLASS * scale {
        Stability::Unstable
    } else {
        Stability::Neither
    }
}

/// Forward (`+`) or backward (`-`) end of an oriented geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussSign {
    Forward,
    Backward,
}

impl GaussSign {
    pub fn factor(self) -> f64 {
        match self {
            GaussSign::Forward => 1.0,
            GaussSign::Backward => -1.0,
        }
    }
}

/// `γ(±∞)` as the null ray `[foot ± dir]`.
pub fn gauss(g: &OrientedGeodesic, sign: GaussSign) -> BoundaryPoint {
    let n = g.foot.vec() + g.dir * sign.factor();
    BoundaryPoint::from_null(n).expect("foot ± dir is future null")
}

/// The unit vector at `p` whose geodesic ends at `b`: `m - p` with `m` the
/// representative of `b` normalised by `<m, p> = -1`.
pub fn asymptote_vector(p: &HPoint, b: &BoundaryPoint) -> HTangent {
    let n = b.vec();
    let m = n * (-1.0 / n.inner(&p.vec()));
    let v = HTangent::project(*p, m - p.vec());
    v.normalized().unwrap_or(v)
}

/// Orthonormal basis of the tangent plane of the unit sphere at `n`.
fn sphere_tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let k = (0..3)
        .min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs()))
        .unwrap_or(0);
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let t1 = (e - n * n.dot(&e)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

fn sphere_image(chart: &FoliationChart, a: f64, b: f64, sign: GaussSign) -> Vector3<f64> {
    Vector3::from(boundary_chart(&gauss(&chart.eval(a, b), sign)))
}

/// Finite-difference differential of `boundary_chart ∘ gauss ∘ chart` at
/// `params`, in an orthonormal frame of the sphere's tangent plane.
///
/// The frame at the image point is not canonical, so only rank and kernel of
/// the result are meaningful.
pub fn gauss_differential(
    chart: &FoliationChart,
    params: (f64, f64),
    sign: GaussSign,
) -> Result<Matrix2<f64>> {
    gauss_differential_with_step(chart, params, sign, FD_STEP)
}

pub fn gauss_differential_with_step(
    chart: &FoliationChart,
    params: (f64, f64),
    sign: GaussSign,
    h: f64,
) -> Result<Matrix2<f64>> {
    if !(h >= MIN_FD_STEP) {
        return Err(GeoError::StepUnderflow(h));
    }
    chart.check_params(params)?;
    let (a, b) = params;
    let n0 = sphere_image(chart, a, b, sign);
    let da = (sphere_image(chart, a + h, b, sign) - sphere_image(chart, a - h, b, sign)) / (2.0 * h);
    let db = (sphere_image(chart, a, b + h, sign) - sphere_image(chart, a, b - h, sign)) / (2.0 * h);
    let (t1, t2) = sphere_tangent_basis(&n0);
    Ok(Matrix2::new(t1.dot(&da), t1.dot(&db), t2.dot(&da), t2.dot(&db)))
}

/// Number of singular values above [`RANK_TOL`].
pub fn matrix_rank2(m: &Matrix2<f64>) -> usize {
    m.singular_values().iter().filter(|&&s| s > RANK_TOL).count()
}

/// `J(0) + J'(0)` (forward) or `J(0) - J'(0)` (backward).
///
/// Along the variation `jd`, let `v_t` be the unit vectors at the reference
/// point asymptotic to the varied geodesics. The Jacobi field of `v_t`
/// vanishes at `s = 0` and its initial derivative is this vector, so it
/// carries the derivative of the Gauss image. The backward case is the
/// forward case applied to the reversed geodesic.
pub fn boundary_velocity(jd: &JacobiData, sign: GaussSign) -> HTangent {
    jd.j0.plus(&jd.j0p.scaled(sign.factor()))
}

/// Rank of `X -> J(0) ± J'(0)` on a pair of chart tangents.
pub fn velocity_rank(x: &JacobiData, y: &JacobiData, sign: GaussSign) -> usize {
    let frame = standard_frame(&x.geo.foot);
    let cx = frame_coords(&frame, &boundary_velocity(x, sign));
    let cy = frame_coords(&frame, &boundary_velocity(y, sign));
    let m = Matrix3x2::new(cx[0], cy[0], cx[1], cy[1], cx[2], cy[2]);
    m.singular_values().iter().filter(|&&s| s > RANK_TOL).count()
}
