//! Minkowski space R^{3,1} and the hyperboloid model of hyperbolic 3-space.
//!
//! The bilinear form is `<x,y> = -x0*y0 + x1*y1 + x2*y2 + x3*y3`. Points of H^3
//! are future unit timelike vectors, tangent vectors at `p` are the vectors
//! Minkowski-orthogonal to `p`, and ideal points are future null rays
//! normalised to `x0 = 1`.
//!
//! Geodesics, parallel transport and the exponential map all have closed
//! forms in this model, so nothing here integrates an ODE.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

/// Tolerance for constructor invariants (hyperboloid, tangency, null rays).
pub const TAU_MODEL: f64 = 1e-9;

/// A vector of R^{3,1} in coordinates `(x0, x1, x2, x3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MinkVec([f64; 4]);

impl MinkVec {
    pub const ZERO: MinkVec = MinkVec([0.0; 4]);

    /// Unchecked constructor for literals and internal arithmetic.
    pub const fn new(x0: f64, x1: f64, x2: f64, x3: f64) -> Self {
        MinkVec([x0, x1, x2, x3])
    }

    /// Checked constructor: rejects NaN and infinite components.
    pub fn try_new(x0: f64, x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let v = MinkVec([x0, x1, x2, x3]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeoError::NonFinite("MinkVec"))
        }
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::try_new(a[0], a[1], a[2], a[3])
    }

    /// The standard basis vector `e_i`, `i` in `0..4`.
    pub fn basis(i: usize) -> Self {
        let mut a = [0.0; 4];
        a[i] = 1.0;
        MinkVec(a)
    }

    /// Spatial vector `(0, x, y, z)`.
    pub const fn spatial(x: f64, y: f64, z: f64) -> Self {
        MinkVec([0.0, x, y, z])
    }

    pub fn coords(&self) -> [f64; 4] {
        self.0
    }

    pub fn x0(&self) -> f64 {
        self.0[0]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// The Minkowski form.
    pub fn inner(&self, other: &MinkVec) -> f64 {
        let (a, b) = (&self.0, &other.0);
        -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
    }

    pub fn square(&self) -> f64 {
        self.inner(self)
    }

    /// Euclidean norm of the coordinate vector, used only for scaling tolerances.
    pub fn euclid_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// The Minkowski bilinear form of signature (3,1).
pub fn mink_inner(a: &MinkVec, b: &MinkVec) -> f64 {
    a.inner(b)
}

impl Add for MinkVec {
    type Output = MinkVec;
    fn add(self, o: MinkVec) -> MinkVec {
        MinkVec(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl AddAssign for MinkVec {
    fn add_assign(&mut self, o: MinkVec) {
        for i in 0..4 {
            self.0[i] += o.0[i];
        }
    }
}

impl Sub for MinkVec {
    type Output = MinkVec;
    fn sub(self, o: MinkVec) -> MinkVec {
        MinkVec(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl Neg for MinkVec {
    type Output = MinkVec;
    fn neg(self) -> MinkVec {
        MinkVec(self.0.map(|c| -c))
    }
}

impl Mul<f64> for MinkVec {
    type Output = MinkVec;
    fn mul(self, k: f64) -> MinkVec {
        MinkVec(self.0.map(|c| c * k))
    }
}

impl Mul<MinkVec> for f64 {
    type Output = MinkVec;
    fn mul(self, v: MinkVec) -> MinkVec {
        v * self
    }
}

fn scale_of(v: &MinkVec) -> f64 {
    v.euclid_norm().max(1.0)
}

/// A point of H^3: `<v,v> = -1`, `x0 > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    v: MinkVec,
}

impl HPoint {
    /// The base point `o = (1,0,0,0)`.
    pub const ORIGIN: HPoint = HPoint {
        v: MinkVec::new(1.0, 0.0, 0.0, 0.0),
    };

    pub fn new(v: MinkVec) -> Result<Self> {
        if !v.is_finite() {
            return Err(GeoError::NonFinite("HPoint"));
        }
        let q = v.square();
        // Relative check: far-out points carry rounding proportional to |v|^2.
        if (q + 1.0).abs() > TAU_MODEL * scale_of(&v).powi(2) || v.x0() <= 0.0 {
            return Err(GeoError::NotOnHyperboloid(q));
        }
        Ok(HPoint { v })
    }

    /// The point with the given spatial coordinates; exact up to rounding.
    pub fn from_spatial(x: [f64; 3]) -> Self {
        let x0 = (1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        HPoint {
            v: MinkVec::new(x0, x[0], x[1], x[2]),
        }
    }

    /// Radially rescales a future timelike vector onto the hyperboloid.
    pub fn project(v: MinkVec) -> Result<Self> {
        let q = v.square();
        if !v.is_finite() || q >= 0.0 || v.x0() <= 0.0 {
            return Err(GeoError::NotOnHyperboloid(q));
        }
        Ok(HPoint {
            v: v * (1.0 / (-q).sqrt()),
        })
    }

    /// Re-normalisation after long chains of arithmetic: keeps the spatial
    /// part and recomputes `x0`. Radial rescaling would cost `eps |v|^2`
    /// relative accuracy far from `o`. Callers guarantee the input is close
    /// to the hyperboloid.
    pub(crate) fn renormalized(v: MinkVec) -> Self {
        let [_, x1, x2, x3] = v.coords();
        HPoint::from_spatial([x1, x2, x3])
    }

    pub fn vec(&self) -> MinkVec {
        self.v
    }

    pub fn coords(&self) -> [f64; 4] {
        self.v.coords()
    }
}

/// A tangent vector `w` at `base`, `<base, w> = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HTangent {
    base: HPoint,
    w: MinkVec,
}

impl HTangent {
    pub fn new(base: HPoint, w: MinkVec) -> Result<Self> {
        if !w.is_finite() {
            return Err(GeoError::NonFinite("HTangent"));
        }
        let ip = base.v.inner(&w);
        if ip.abs() > TAU_MODEL * scale_of(&base.v) * scale_of(&w) {
            return Err(GeoError::NotTangent(ip));
        }
        Ok(HTangent { base, w })
    }

    /// Orthogonal projection of an ambient vector onto `T_base H^3`.
    pub fn project(base: HPoint, w: MinkVec) -> Self {
        let w = w + base.v * base.v.inner(&w);
        HTangent { base, w }
    }

    pub fn zero(base: HPoint) -> Self {
        HTangent {
            base,
            w: MinkVec::ZERO,
        }
    }

    pub(crate) fn unchecked(base: HPoint, w: MinkVec) -> Self {
        HTangent { base, w }
    }

    pub fn base(&self) -> HPoint {
        self.base
    }

    pub fn vec(&self) -> MinkVec {
        self.w
    }

    pub fn inner(&self, other: &HTangent) -> f64 {
        self.w.inner(&other.w)
    }

    /// Riemannian length (tangent spaces of H^3 are spacelike).
    pub fn norm(&self) -> f64 {
        self.w.square().max(0.0).sqrt()
    }

    pub fn scaled(&self, k: f64) -> Self {
        HTangent {
            base: self.base,
            w: self.w * k,
        }
    }

    /// Sum of two tangent vectors at the same base point.
    pub fn plus(&self, other: &HTangent) -> Self {
        debug_assert!(same_point(&self.base, &other.base));
        HTangent {
            base: self.base,
            w: self.w + other.w,
        }
    }

    pub fn minus(&self, other: &HTangent) -> Self {
        self.plus(&other.scaled(-1.0))
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(GeoError::NotUnit(0.0));
        }
        Ok(self.scaled(1.0 / n))
    }
}

pub(crate) fn same_point(p: &HPoint, q: &HPoint) -> bool {
    (p.v - q.v).euclid_norm() <= TAU_MODEL * scale_of(&p.v)
}

/// `cosh|w| base + sinh|w| w/|w|`.
pub fn exp_map(t: &HTangent) -> HPoint {
    let n = t.norm();
    if n == 0.0 {
        return t.base;
    }
    let p = t.base.v * n.cosh() + t.w * (n.sinh() / n);
    HPoint::renormalized(p)
}

/// Inverse of [`exp_map`]; H^3 has no cut locus so this is global.
pub fn log_map(p: &HPoint, q: &HPoint) -> HTangent {
    let d = dist(p, q);
    // q - cosh(d) p is tangent at p with length sinh(d).
    let raw = q.v + p.v * p.v.inner(&q.v);
    let raw = HTangent::project(*p, raw);
    let n = raw.norm();
    if d == 0.0 || n == 0.0 {
        return HTangent::zero(*p);
    }
    raw.scaled(d / n)
}

/// Hyperbolic distance, via `<p-q,p-q> = 4 sinh^2(d/2)` to avoid the
/// cancellation of `acosh` near 1.
pub fn dist(p: &HPoint, q: &HPoint) -> f64 {
    let diff = p.v - q.v;
    2.0 * (diff.square().max(0.0).sqrt() / 2.0).asinh()
}

/// Parallel transport of `x` from `x.base()` to `q` along the connecting geodesic.
pub fn transport_between(x: &HTangent, q: &HPoint) -> HTangent {
    let p = x.base.v;
    let denom = 1.0 - p.inner(&q.v);
    let w = x.w + (p + q.v) * (q.v.inner(&x.w) / denom);
    HTangent::project(*q, w)
}

/// Parallel transport along the geodesic `s -> cosh(s) foot + sinh(s) dir`
/// from `s = 0` to `s`.
pub(crate) fn transport_along(foot: &HPoint, dir: &MinkVec, s: f64, x: &HTangent) -> HTangent {
    let vel = foot.v * s.sinh() + *dir * s.cosh();
    let pt = HPoint::renormalized(foot.v * s.cosh() + *dir * s.sinh());
    let w = x.w + (vel - *dir) * x.w.inner(dir);
    HTangent::project(pt, w)
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cross product on `T_p H^3`, oriented so that `e1 x e2 = e3` at the origin.
///
/// Computed as the Minkowski dual of `x -> det[x, p, a, b]`; the form is
/// invariant under orientation-preserving isometries, so the orientation
/// agrees with parallel transport of the frame at the origin.
pub fn cross(p: &HPoint, a: &HTangent, b: &HTangent) -> Result<HTangent> {
    if !same_point(p, &a.base) || !same_point(p, &b.base) {
        return Err(GeoError::BaseMismatch);
    }
    Ok(HTangent::project(*p, det_dual(p.v, a.w, b.w)))
}

/// The vector `c` with `<c, x> = det[x, p, a, b]` for all `x`.
pub(crate) fn det_dual(p: MinkVec, a: MinkVec, b: MinkVec) -> MinkVec {
    let cols = [p.coords(), a.coords(), b.coords()];
    let mut c = [0.0; 4];
    for (i, ci) in c.iter_mut().enumerate() {
        let mut m = [[0.0; 3]; 3];
        let mut r = 0;
        for row in 0..4 {
            if row == i {
                continue;
            }
            for k in 0..3 {
                m[r][k] = cols[k][row];
            }
            r += 1;
        }
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *ci = sign * det3(m);
    }
    MinkVec::new(c[0], -c[1], -c[2], -c[3])
}

/// Orthonormal frame at `p`: the transport of `(e1, e2, e3)` from the origin.
/// Positively oriented by construction.
pub fn standard_frame(p: &HPoint) -> [HTangent; 3] {
    std::array::from_fn(|i| {
        let e = HTangent::unchecked(HPoint::ORIGIN, MinkVec::basis(i + 1));
        transport_between(&e, p)
    })
}

/// Coordinates of `x` in an orthonormal frame.
pub fn frame_coords(frame: &[HTangent; 3], x: &HTangent) -> [f64; 3] {
    std::array::from_fn(|i| frame[i].inner(x))
}

/// The tangent vector with the given frame coordinates.
pub fn from_frame_coords(frame: &[HTangent; 3], c: [f64; 3]) -> HTangent {
    let w = frame[0].vec() * c[0] + frame[1].vec() * c[1] + frame[2].vec() * c[2];
    HTangent::unchecked(frame[0].base(), w)
}

/// Coordinate models of H^3 other than the hyperboloid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    /// Upper half-space `{z > 0}` with `ds^2 = (dx^2+dy^2+dz^2)/z^2`. The
    /// origin maps to `(0,0,1)` and the geodesic through the origin with
    /// velocity `e3` maps to `t -> (0,0,e^t)`.
    HalfSpace,
    /// Poincare ball, `b = (x1,x2,x3)/(1+x0)`.
    Ball,
}

pub fn convert_model(p: &HPoint, target: Model) -> [f64; 3] {
    let [x0, x1, x2, x3] = p.coords();
    match target {
        Model::HalfSpace => {
            // x0 - x3 = 1/z; written as 1/(x0+x3) to dodge cancellation when x3 ~ x0.
            let m = x0 - x3;
            let inv = if x3 > 0.0 { (x0 + x3) / (1.0 + x1 * x1 + x2 * x2) } else { 1.0 / m };
            [x1 * inv, x2 * inv, inv]
        }
        Model::Ball => {
            let k = 1.0 / (1.0 + x0);
            [x1 * k, x2 * k, x3 * k]
        }
    }
}

pub fn convert_from_model(source: Model, c: [f64; 3]) -> Result<HPoint> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(GeoError::NonFinite("model coordinates"));
    }
    match source {
        Model::HalfSpace => {
            let [x, y, z] = c;
            if z <= 0.0 {
                return Err(GeoError::InvalidHalfSpace(z));
            }
            let r2 = x * x + y * y + z * z;
            Ok(HPoint::from_spatial([x / z, y / z, (r2 - 1.0) / (2.0 * z)]))
        }
        Model::Ball => {
            let n2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
            if n2 >= 1.0 {
                return Err(GeoError::InvalidBall(n2.sqrt()));
            }
            let k = 2.0 / (1.0 - n2);
            Ok(HPoint::from_spatial([c[0] * k, c[1] * k, c[2] * k]))
        }
    }
}

/// A point of the ideal boundary: a future null ray with representative `x0 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    n: MinkVec,
}

impl BoundaryPoint {
    /// The ideal point `infinity` of the half-space model, `[o + e3]`.
    pub const INFINITY: BoundaryPoint = BoundaryPoint {
        n: MinkVec::new(1.0, 0.0, 0.0, 1.0),
    };

    /// Normalises a future null vector to `x0 = 1`.
    pub fn from_null(v: MinkVec) -> Result<Self> {
        if !v.is_finite() {
            return Err(GeoError::NonFinite("BoundaryPoint"));
        }
        let q = v.square();
        if v.x0() <= 0.0 || q.abs() > TAU_MODEL * v.x0() * v.x0() {
            return Err(GeoError::NotNull(q));
        }
        let [_, x1, x2, x3] = v.coords();
        // Re-impose exact nullity on the spatial part.
        let s = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
        if s == 0.0 {
            return Err(GeoError::NotNull(q));
        }
        Ok(BoundaryPoint {
            n: MinkVec::new(1.0, x1 / s, x2 / s, x3 / s),
        })
    }

    /// Inverse of [`boundary_chart`]: `[o + u]` for a unit `u`.
    pub fn from_sphere(u: [f64; 3]) -> Result<Self> {
        let s = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if (s - 1.0).abs() > TAU_MODEL {
            return Err(GeoError::NotUnit(s));
        }
        Ok(BoundaryPoint {
            n: MinkVec::new(1.0, u[0] / s, u[1] / s, u[2] / s),
        })
    }

    pub fn vec(&self) -> MinkVec {
        self.n
    }

    /// Coordinates in the half-space model boundary `R^2 u {infinity}`;
    /// `None` for infinity.
    pub fn half_space(&self) -> Option<[f64; 2]> {
        let [_, n1, n2, n3] = self.n.coords();
        let d = 1.0 - n3;
        if d <= TAU_MODEL {
            None
        } else {
            Some([n1 / d, n2 / d])
        }
    }

    pub fn from_half_space(x: f64, y: f64) -> Self {
        let r2 = x * x + y * y;
        let k = 2.0 / (r2 + 1.0);
        BoundaryPoint {
            n: MinkVec::new(1.0, x * k, y * k, (r2 - 1.0) / (r2 + 1.0)),
        }
    }
}

/// Identifies the boundary sphere with the unit sphere of `T_o H^3`:
/// `[o + u] -> u`.
pub fn boundary_chart(b: &BoundaryPoint) -> [f64; 3] {
    let [_, x1, x2, x3] = b.n.coords();
    [x1, x2, x3]
}
