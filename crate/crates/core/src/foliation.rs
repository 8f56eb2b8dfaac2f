//! Sampled classification of surfaces in the space of oriented geodesics and
//! of unit vector fields on H^3.
//!
//! A [`FoliationChart`] is a parametrised surface `(a, b) -> [γ(a,b)]`. Its
//! tangent vectors are computed as Jacobi data by central differences, and
//! each sample is classified by the 2x2 Gram matrix of the cross-product
//! metric and the sign of the Killing-form metric on its null directions.
//! Every verdict here is sampled evidence on a compact grid, not a proof.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Matrix3x2, SymmetricEigen, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geodesic::{g_cross, g_k, gauss, GaussSign, JacobiData, OrientedGeodesic, RANK_TOL};
use crate::lorentz::{
    boundary_chart, exp_map, frame_coords, from_frame_coords, log_map, standard_frame,
    transport_between, HPoint, HTangent,
};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Steps below this lose more to cancellation than they gain in truncation.
pub const MIN_FD_STEP: f64 = 1e-7;
/// Default verdict tolerance on normalised quadratic-form values.
pub const VERDICT_TOL: f64 = 1e-7;
/// Imaginary parts and singular values below this (relative to the operator
/// norm) count as zero in the eigenvector analysis of `∇V`.
pub const EIG_TOL: f64 = 1e-6;
/// Directions sampled when the cross-product Gram vanishes identically.
pub const NULL_CONE_SAMPLES: usize = 8;

/// Closed parameter rectangle `[a_min, a_max] x [b_min, b_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRect {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl ParamRect {
    pub fn new(a_min: f64, a_max: f64, b_min: f64, b_max: f64) -> Result<Self> {
        if !(a_min < a_max && b_min < b_max) {
            return Err(GeoError::InvalidParameter(format!(
                "empty rectangle [{a_min}, {a_max}] x [{b_min}, {b_max}]"
            )));
        }
        Ok(ParamRect { a_min, a_max, b_min, b_max })
    }

    pub fn contains(&self, a: f64, b: f64) -> bool {
        (self.a_min..=self.a_max).contains(&a) && (self.b_min..=self.b_max).contains(&b)
    }

    pub fn clamp(&self, a: f64, b: f64) -> (f64, f64) {
        (a.clamp(self.a_min, self.a_max), b.clamp(self.b_min, self.b_max))
    }
}

/// Grid dimensions; `rows` subdivide the first parameter, `cols` the second.
/// Samples are always listed in row-major order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(GeoError::InvalidParameter(format!(
                "grid dimensions must be at least 2, got {rows}x{cols}"
            )));
        }
        Ok(GridSpec { rows, cols })
    }

    /// Parses `NxM`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || GeoError::InvalidParameter(format!("grid must look like NxM, got {s:?}"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows = r.trim().parse().map_err(|_| bad())?;
        let cols = c.trim().parse().map_err(|_| bad())?;
        GridSpec::new(rows, cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell centres: strictly interior samples of `rect`.
    pub fn cell_centers(&self, rect: &ParamRect) -> Vec<(f64, f64)> {
        let da = (rect.a_max - rect.a_min) / self.rows as f64;
        let db = (rect.b_max - rect.b_min) / self.cols as f64;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push((
                    rect.a_min + (i as f64 + 0.5) * da,
                    rect.b_min + (j as f64 + 0.5) * db,
                ));
            }
        }
        out
    }

    /// Grid nodes including the boundary of `rect`.
    pub fn nodes(&self, rect: &ParamRect) -> Vec<(f64, f64)> {
        let da = (rect.a_max - rect.a_min) / (self.rows - 1) as f64;
        let db = (rect.b_max - rect.b_min) / (self.cols - 1) as f64;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push((rect.a_min + i as f64 * da, rect.b_min + j as f64 * db));
            }
        }
        out
    }

    pub fn cell_size(&self, rect: &ParamRect) -> (f64, f64) {
        (
            (rect.a_max - rect.a_min) / self.rows as f64,
            (rect.b_max - rect.b_min) / self.cols as f64,
        )
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

type ChartMap = dyn Fn(f64, f64) -> OrientedGeodesic + Send + Sync;
type FieldMap = dyn Fn(&HPoint) -> HTangent + Send + Sync;

/// A smooth surface in the space of oriented geodesics, given by an evaluable
/// map on (a neighbourhood of) a parameter rectangle.
#[derive(Clone)]
pub struct FoliationChart {
    name: String,
    domain: ParamRect,
    map: Arc<ChartMap>,
}

impl fmt::Debug for FoliationChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FoliationChart")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl FoliationChart {
    /// `map` must be evaluable slightly beyond `domain` for finite differences.
    pub fn new<F>(name: impl Into<String>, domain: ParamRect, map: F) -> Self
    where
        F: Fn(f64, f64) -> OrientedGeodesic + Send + Sync + 'static,
    {
        FoliationChart {
            name: name.into(),
            domain,
            map: Arc::new(map),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &ParamRect {
        &self.domain
    }

    pub fn eval(&self, a: f64, b: f64) -> OrientedGeodesic {
        (self.map)(a, b)
    }

    pub fn check_params(&self, (a, b): (f64, f64)) -> Result<()> {
        if self.domain.contains(a, b) {
            Ok(())
        } else {
            Err(GeoError::OutsideDomain(a, b))
        }
    }

    /// The same surface with parameters `(a, b) = base + m (x, y)`.
    pub fn reparametrized(&self, name: impl Into<String>, domain: ParamRect, base: (f64, f64), m: Matrix2<f64>) -> Self {
        let inner = self.map.clone();
        FoliationChart::new(name, domain, move |x, y| {
            let v = m * Vector2::new(x, y);
            inner(base.0 + v[0], base.1 + v[1])
        })
    }
}

/// A unit vector field on a geodesic ball of H^3.
#[derive(Clone)]
pub struct UnitField {
    name: String,
    field: Arc<FieldMap>,
    center: HPoint,
    radius: f64,
}

impl fmt::Debug for UnitField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitField")
            .field("name", &self.name)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .finish()
    }
}

impl UnitField {
    pub fn new<F>(name: impl Into<String>, center: HPoint, radius: f64, field: F) -> Self
    where
        F: Fn(&HPoint) -> HTangent + Send + Sync + 'static,
    {
        UnitField {
            name: name.into(),
            field: Arc::new(field),
            center,
            radius,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn center(&self) -> HPoint {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, p: &HPoint) -> HTangent {
        (self.field)(p)
    }

    /// Deterministic pseudo-random points in the ball shrunk by `margin`.
    pub fn sample_points(&self, n: usize, seed: u64, margin: f64) -> Vec<HPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = standard_frame(&self.center);
        let r_max = (self.radius - margin).max(0.0);
        (0..n)
            .map(|_| {
                let mut d = [0.0f64; 3];
                loop {
                    for c in d.iter_mut() {
                        *c = rng.gen_range(-1.0..1.0);
                    }
                    let n2: f64 = d.iter().map(|c| c * c).sum();
                    if n2 > 1e-6 && n2 <= 1.0 {
                        break;
                    }
                }
                let r = r_max * rng.gen::<f64>();
                let n = d.iter().map(|c| c * c).sum::<f64>().sqrt();
                let v = from_frame_coords(&frame, d.map(|c| c * r / n));
                exp_map(&v)
            })
            .collect()
    }
}

/// Coordinate direction in the parameter plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    A,
    B,
}

impl Axis {
    pub fn vector(self) -> (f64, f64) {
        match self {
            Axis::A => (1.0, 0.0),
            Axis::B => (0.0, 1.0),
        }
    }
}

/// Raw variation field of the chart along `dir`: `J(0)` is the derivative
/// of the reference points and `J'(0)` the covariant derivative of the
/// velocities. May carry a tangential component.
///
/// Richardson extrapolation of central differences at `h` and `2h`, so the
/// truncation error is `O(h^4)`; the chart is evaluated out to `2h`.
pub fn chart_variation(
    chart: &FoliationChart,
    params: (f64, f64),
    dir: (f64, f64),
    h: f64,
) -> Result<JacobiData> {
    let fine = chart_variation_central(chart, params, dir, h)?;
    let coarse = chart_variation_central(chart, params, dir, 2.0 * h)?;
    fine.combine(4.0 / 3.0, &coarse, -1.0 / 3.0)
}

/// Plain central difference with step `h`, `O(h^2)` accurate.
pub fn chart_variation_central(
    chart: &FoliationChart,
    params: (f64, f64),
    dir: (f64, f64),
    h: f64,
) -> Result<JacobiData> {
    if !(h >= MIN_FD_STEP) {
        return Err(GeoError::StepUnderflow(h));
    }
    chart.check_params(params)?;
    let (a, b) = params;
    let g0 = chart.eval(a, b);
    let gp = chart.eval(a + h * dir.0, b + h * dir.1);
    let gm = chart.eval(a - h * dir.0, b - h * dir.1);
    let foot = g0.foot();
    let k = 1.0 / (2.0 * h);
    let j0 = log_map(&foot, &gp.foot()).minus(&log_map(&foot, &gm.foot())).scaled(k);
    let vp = transport_between(&gp.dir(), &foot);
    let vm = transport_between(&gm.dir(), &foot);
    let j0p = vp.minus(&vm).scaled(k);
    JacobiData::unconstrained(g0, j0, j0p)
}

/// Chart tangent as orthogonal Jacobi data: [`chart_variation`] minus its
/// `(a + b s) γ'` part.
pub fn chart_tangent(
    chart: &FoliationChart,
    params: (f64, f64),
    dir: (f64, f64),
    h: f64,
) -> Result<JacobiData> {
    chart_variation(chart, params, dir, h).map(|jd| jd.orthogonal_part())
}

/// Both coordinate tangents at `params` with the default step.
pub fn chart_tangents(chart: &FoliationChart, params: (f64, f64)) -> Result<(JacobiData, JacobiData)> {
    Ok((
        chart_tangent(chart, params, Axis::A.vector(), FD_STEP)?,
        chart_tangent(chart, params, Axis::B.vector(), FD_STEP)?,
    ))
}

/// Verdicts ordered from weakest to strongest; the aggregate over a chart is
/// the minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Indefinite,
    AlmostSemidefinite,
    Semidefinite,
    Definite,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Indefinite => "indefinite",
            Verdict::AlmostSemidefinite => "almost_semidefinite",
            Verdict::Semidefinite => "semidefinite",
            Verdict::Definite => "definite",
        }
    }

    pub fn is_almost_semidefinite(self) -> bool {
        self >= Verdict::AlmostSemidefinite
    }

    pub fn is_semidefinite(self) -> bool {
        self >= Verdict::Semidefinite
    }

    pub fn is_definite(self) -> bool {
        self == Verdict::Definite
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A null direction of the normalised cross-product Gram, with the
/// normalised Killing-form value on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullDirection {
    pub coeffs: [f64; 2],
    pub g_k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub params: [f64; 2],
    /// Cross-product Gram on the tangents rescaled to unit `|J0|^2 + |J0'|^2`.
    pub gram_cross: [[f64; 2]; 2],
    pub gram_eigenvalues: [f64; 2],
    pub null_directions: Vec<NullDirection>,
    pub verdict: Verdict,
}

/// Classifies the tangent plane of `chart` at `params`.
///
/// Definite if the cross-product Gram has both eigenvalues of one sign and
/// beyond `tol`. Otherwise the Killing form is evaluated on the Gram's null
/// directions (all of `NULL_CONE_SAMPLES` sampled directions when the Gram
/// vanishes): semidefinite if every value exceeds `tol`, almost semidefinite
/// if none is below `-tol`, indefinite otherwise.
pub fn classify_point(chart: &FoliationChart, params: (f64, f64), tol: f64) -> Result<PointClassification> {
    let (x1, x2) = chart_tangents(chart, params)?;
    classify_tangents(&x1, &x2, params, tol)
}

pub fn classify_tangents(
    x1: &JacobiData,
    x2: &JacobiData,
    params: (f64, f64),
    tol: f64,
) -> Result<PointClassification> {
    let deficient = || GeoError::RankDeficient(params.0, params.1);
    let (n1, n2) = (x1.sasaki_norm_sq().sqrt(), x2.sasaki_norm_sq().sqrt());
    if n1 == 0.0 || n2 == 0.0 {
        return Err(deficient());
    }
    let y1 = x1.combine(1.0 / n1, x2, 0.0)?;
    let y2 = x1.combine(0.0, x2, 1.0 / n2)?;
    let overlap = y1.j0().inner(&y2.j0()) + y1.j0p().inner(&y2.j0p());
    if 1.0 - overlap * overlap < 1e-8 {
        return Err(deficient());
    }
    let g11 = g_cross(&y1, &y1)?;
    let g12 = g_cross(&y1, &y2)?;
    let g22 = g_cross(&y2, &y2)?;
    let gram = Matrix2::new(g11, g12, g12, g22);
    let eig = SymmetricEigen::new(gram);
    let (i_lo, i_hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let (l1, l2) = (eig.eigenvalues[i_lo], eig.eigenvalues[i_hi]);
    let e1: Vector2<f64> = eig.eigenvectors.column(i_lo).into();
    let e2: Vector2<f64> = eig.eigenvectors.column(i_hi).into();

    let mut dirs: Vec<Vector2<f64>> = Vec::new();
    let definite = (l1 > tol) || (l2 < -tol);
    if !definite {
        if l1.abs() <= tol && l2.abs() <= tol {
            dirs.extend((0..NULL_CONE_SAMPLES).map(|k| {
                let th = k as f64 * std::f64::consts::PI / NULL_CONE_SAMPLES as f64;
                Vector2::new(th.cos(), th.sin())
            }));
        } else if l1.abs() <= tol {
            dirs.push(e1);
        } else if l2.abs() <= tol {
            dirs.push(e2);
        } else {
            // l1 < 0 < l2: cos^2 l1 + sin^2 l2 = 0.
            let phi = (-l1 / l2).sqrt().atan();
            dirs.push(e1 * phi.cos() + e2 * phi.sin());
            dirs.push(e1 * phi.cos() - e2 * phi.sin());
        }
    }
    let mut null_directions = Vec::with_capacity(dirs.len());
    for c in &dirs {
        let z = y1.combine(c[0], &y2, c[1])?;
        let norm = z.sasaki_norm_sq();
        let val = if norm > 0.0 { g_k(&z, &z)? / norm } else { 0.0 };
        null_directions.push(NullDirection {
            coeffs: [c[0], c[1]],
            g_k: val,
        });
    }
    let verdict = if definite {
        Verdict::Definite
    } else if null_directions.iter().all(|d| d.g_k > tol) {
        Verdict::Semidefinite
    } else if null_directions.iter().all(|d| d.g_k >= -tol) {
        Verdict::AlmostSemidefinite
    } else {
        Verdict::Indefinite
    };
    Ok(PointClassification {
        params: [params.0, params.1],
        gram_cross: [[g11, g12], [g12, g22]],
        gram_eigenvalues: [l1, l2],
        null_directions,
        verdict,
    })
}

/// One grid sample: a classification or the reason it could not be made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub params: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<PointClassification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub chart: String,
    pub domain: ParamRect,
    pub grid: GridSpec,
    pub tol: f64,
    pub fd_step: f64,
    pub samples: Vec<SampleOutcome>,
    /// Worst verdict over the classified samples; `None` if none succeeded.
    pub aggregate: Option<Verdict>,
    pub failures: usize,
}

impl ClassificationReport {
    pub fn verdicts(&self) -> impl Iterator<Item = Verdict> + '_ {
        self.samples
            .iter()
            .filter_map(|s| s.classification.as_ref().map(|c| c.verdict))
    }
}

/// Classifies `chart` at the cell centres of `grid` (strictly inside the domain).
pub fn classify_chart(chart: &FoliationChart, grid: &GridSpec, tol: f64) -> ClassificationReport {
    let samples: Vec<SampleOutcome> = grid
        .cell_centers(chart.domain())
        .par_iter()
        .map(|&p| match classify_point(chart, p, tol) {
            Ok(c) => SampleOutcome {
                params: [p.0, p.1],
                classification: Some(c),
                error: None,
            },
            Err(e) => SampleOutcome {
                params: [p.0, p.1],
                classification: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let aggregate = samples
        .iter()
        .filter_map(|s| s.classification.as_ref().map(|c| c.verdict))
        .min();
    let failures = samples.iter().filter(|s| s.error.is_some()).count();
    ClassificationReport {
        chart: chart.name().to_string(),
        domain: *chart.domain(),
        grid: *grid,
        tol,
        fd_step: FD_STEP,
        samples,
        aggregate,
        failures,
    }
}

/// Central-difference covariant derivative `∇_X V` at `x.base()`.
pub fn covariant_derivative(field: &UnitField, x: &HTangent, h: f64) -> HTangent {
    let p = x.base();
    let qp = exp_map(&x.scaled(h));
    let qm = exp_map(&x.scaled(-h));
    let vp = transport_between(&field.eval(&qp), &p);
    let vm = transport_between(&field.eval(&qm), &p);
    vp.minus(&vm).scaled(1.0 / (2.0 * h))
}

/// Largest `|∇_V V|` over `samples`; small values certify (on the samples)
/// that the integral curves are geodesics.
pub fn check_geodesic_field(field: &UnitField, samples: &[HPoint]) -> f64 {
    samples
        .par_iter()
        .map(|p| covariant_derivative(field, &field.eval(p), FD_STEP).norm())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// `∇V` at a point as a matrix in the standard orthonormal frame there:
/// column `j` holds the frame coordinates of `∇_{E_j} V`.
#[derive(Clone, Debug, PartialEq)]
pub struct NablaOperator {
    pub frame: [HTangent; 3],
    pub matrix: Matrix3<f64>,
}

impl NablaOperator {
    pub fn apply(&self, x: &HTangent) -> HTangent {
        let c = Vector3::from(frame_coords(&self.frame, x));
        let y = self.matrix * c;
        from_frame_coords(&self.frame, [y[0], y[1], y[2]])
    }

    pub fn coords(&self, x: &HTangent) -> Vector3<f64> {
        Vector3::from(frame_coords(&self.frame, x))
    }
}

pub fn nabla_v(field: &UnitField, p: &HPoint, h: f64) -> Result<NablaOperator> {
    if !(h >= MIN_FD_STEP) {
        return Err(GeoError::StepUnderflow(h));
    }
    let frame = standard_frame(p);
    let mut m = Matrix3::zeros();
    for (j, e) in frame.iter().enumerate() {
        let col = frame_coords(&frame, &covariant_derivative(field, e, h));
        for i in 0..3 {
            m[(i, j)] = col[i];
        }
    }
    Ok(NablaOperator { frame, matrix: m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Eigencheck {
    Nondegenerate,
    /// A real eigenvector at more than the angle tolerance from `±V`.
    Degenerate { witness: [f64; 3], eigenvalue: f64 },
}

/// Looks for real eigenvectors of `m` away from the line of `v`, with
/// `angle_tol` in radians.
pub fn eigencheck_operator(m: &Matrix3<f64>, v: &Vector3<f64>, angle_tol: f64) -> Eigencheck {
    let scale = m.norm().max(1.0);
    let vhat = v.normalize();
    let mut reals: Vec<f64> = m
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= EIG_TOL * scale)
        .map(|z| z.re)
        .collect();
    reals.sort_by(f64::total_cmp);
    reals.dedup_by(|a, b| (*a - *b).abs() <= EIG_TOL * scale);
    for mu in reals {
        let shifted = m - Matrix3::identity() * mu;
        let svd = shifted.svd(false, true);
        let vt = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let mut basis: Vec<Vector3<f64>> = order
            .iter()
            .filter(|&&i| svd.singular_values[i] <= EIG_TOL * scale)
            .map(|&i| vt.row(i).transpose())
            .collect();
        if basis.is_empty() {
            basis.push(vt.row(order[0]).transpose());
        }
        if basis.len() >= 2 {
            let (b1, b2) = (basis[0], basis[1]);
            let w = b1 * b2.dot(&vhat) - b2 * b1.dot(&vhat);
            let w = if w.norm() > 1e-12 { w.normalize() } else { b1 };
            return Eigencheck::Degenerate {
                witness: [w[0], w[1], w[2]],
                eigenvalue: mu,
            };
        }
        let e = basis[0];
        let angle = e.dot(&vhat).abs().min(1.0).acos();
        if angle > angle_tol {
            return Eigencheck::Degenerate {
                witness: [e[0], e[1], e[2]],
                eigenvalue: mu,
            };
        }
    }
    Eigencheck::Nondegenerate
}

/// Checks whether the only real eigenvectors of `∇V` at `p` lie along `V(p)`.
pub fn nondegeneracy_eigencheck(field: &UnitField, p: &HPoint, angle_tol: f64) -> Result<Eigencheck> {
    let op = nabla_v(field, p, FD_STEP)?;
    let v = op.coords(&field.eval(p));
    Ok(eigencheck_operator(&op.matrix, &v, angle_tol))
}

/// How two geodesic trajectories meet inside H^3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intersection {
    Disjoint,
    Point { point: [f64; 4] },
    Identical { same_orientation: bool },
}

/// Shared ideal points closer than this count as exactly shared.
const SHARED_END_TOL: f64 = 1e-12;
const PLANE_RANK_TOL: f64 = 1e-10;

/// Intersects the timelike planes `span(foot, dir)` of the two geodesics.
///
/// A timelike intersection line is a common point, a spacelike one (or no
/// line at all) means disjoint. A near-null line within `tol` is reported as
/// [`GeoError::AmbiguousIntersection`] unless the geodesics share an ideal
/// point exactly, in which case they are asymptotic and disjoint in H^3.
pub fn geodesics_intersect(g1: &OrientedGeodesic, g2: &OrientedGeodesic, tol: f64) -> Result<Intersection> {
    let cols = [g1.foot().vec(), g1.dir().vec(), g2.foot().vec(), g2.dir().vec()];
    let scaled: Vec<_> = cols.iter().map(|c| *c * (1.0 / c.euclid_norm())).collect();
    let m = nalgebra::Matrix4::from_fn(|i, j| scaled[j].coords()[i]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s_max = svd.singular_values[order[0]];
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > PLANE_RANK_TOL * s_max)
        .count();
    let ends = |g: &OrientedGeodesic, s| boundary_chart(&gauss(g, s));
    let dist3 = |a: [f64; 3], b: [f64; 3]| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    };
    match rank {
        0..=2 => {
            let f1 = ends(g1, GaussSign::Forward);
            let f2 = ends(g2, GaussSign::Forward);
            Ok(Intersection::Identical {
                same_orientation: dist3(f1, f2) < 1.0,
            })
        }
        3 => {
            let k = vt.row(order[3]);
            let line = scaled[0] * k[0] + scaled[1] * k[1];
            let kappa = line.square() / line.euclid_norm().powi(2);
            if kappa < -tol {
                let line = if line.x0() < 0.0 { -line } else { line };
                let p = HPoint::project(line)?;
                Ok(Intersection::Point { point: p.coords() })
            } else if kappa > tol {
                Ok(Intersection::Disjoint)
            } else {
                let shared = [GaussSign::Forward, GaussSign::Backward].iter().any(|&s1| {
                    [GaussSign::Forward, GaussSign::Backward]
                        .iter()
                        .any(|&s2| dist3(ends(g1, s1), ends(g2, s2)) <= SHARED_END_TOL)
                });
                if shared {
                    Ok(Intersection::Disjoint)
                } else {
                    Err(GeoError::AmbiguousIntersection(kappa))
                }
            }
        }
        _ => Ok(Intersection::Disjoint),
    }
}

/// A local minimum of `D = dist(o, ·)^2` restricted to a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub params: [f64; 2],
    pub value: f64,
}

fn d_on_chart(chart: &FoliationChart, o: &HPoint, a: f64, b: f64) -> f64 {
    chart.eval(a, b).distance_sq_to(o)
}

/// Compass search from `start`, confined to the domain.
fn refine_minimum(chart: &FoliationChart, o: &HPoint, start: (f64, f64), step: (f64, f64)) -> ((f64, f64), f64) {
    let dom = *chart.domain();
    let (mut a, mut b) = start;
    let mut best = d_on_chart(chart, o, a, b);
    let (mut sa, mut sb) = step;
    let stop = 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mut iters = 0;
    while (sa > stop || sb > stop) && iters < 20_000 {
        iters += 1;
        let mut improved = false;
        for (da, db) in [(sa, 0.0), (-sa, 0.0), (0.0, sb), (0.0, -sb)] {
            let (na, nb) = dom.clamp(a + da, b + db);
            let v = d_on_chart(chart, o, na, nb);
            if v < best {
                best = v;
                a = na;
                b = nb;
                improved = true;
                break;
            }
        }
        if !improved {
            sa *= 0.5;
            sb *= 0.5;
        }
    }
    ((a, b), best)
}

/// Grid-local minima of `D` on the cell centres of `grid`, each refined by
/// compass search. Minima that converge onto the domain boundary are dropped
/// (they are not critical points of the restriction), and minima converging
/// to the same parameters are merged.
pub fn critical_point_scan(chart: &FoliationChart, o: &HPoint, grid: &GridSpec) -> Vec<CriticalPoint> {
    let pts = grid.cell_centers(chart.domain());
    let vals: Vec<f64> = pts.par_iter().map(|&(a, b)| d_on_chart(chart, o, a, b)).collect();
    let (rows, cols) = (grid.rows as isize, grid.cols as isize);
    let idx = |i: isize, j: isize| (i * cols + j) as usize;
    let mut candidates = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let v = vals[idx(i, j)];
            let is_min = (-1..=1).all(|di| {
                (-1..=1).all(|dj| {
                    let (ni, nj) = (i + di, j + dj);
                    (di == 0 && dj == 0) || ni < 0 || nj < 0 || ni >= rows || nj >= cols || v <= vals[idx(ni, nj)]
                })
            });
            if is_min {
                candidates.push(pts[idx(i, j)]);
            }
        }
    }
    let step = grid.cell_size(chart.domain());
    let refined: Vec<((f64, f64), f64)> = candidates
        .par_iter()
        .map(|&c| refine_minimum(chart, o, c, step))
        .collect();
    let dom = chart.domain();
    let edge = 1e-9 * (1.0 + (dom.a_max - dom.a_min).max(dom.b_max - dom.b_min));
    let mut out: Vec<CriticalPoint> = Vec::new();
    for ((a, b), v) in refined {
        let on_edge = (a - dom.a_min).abs() <= edge
            || (a - dom.a_max).abs() <= edge
            || (b - dom.b_min).abs() <= edge
            || (b - dom.b_max).abs() <= edge;
        if on_edge {
            continue;
        }
        let tol_p = 1e-5 * (1.0 + step.0.max(step.1));
        match out
            .iter_mut()
            .find(|c| (c.params[0] - a).abs() <= tol_p && (c.params[1] - b).abs() <= tol_p)
        {
            Some(c) if v < c.value => {
                c.params = [a, b];
                c.value = v;
            }
            Some(_) => {}
            None => out.push(CriticalPoint { params: [a, b], value: v }),
        }
    }
    out
}

/// Minimum of `D` on square rings of growing grid radius around the grid
/// minimiser: evidence (not proof) that `D` grows away from its minimum.
pub fn ring_minima(chart: &FoliationChart, o: &HPoint, grid: &GridSpec) -> Vec<f64> {
    let pts = grid.cell_centers(chart.domain());
    let vals: Vec<f64> = pts.par_iter().map(|&(a, b)| d_on_chart(chart, o, a, b)).collect();
    let k0 = vals
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let (ci, cj) = ((k0 / grid.cols) as isize, (k0 % grid.cols) as isize);
    let max_r = grid.rows.max(grid.cols) as isize;
    let mut out = Vec::new();
    for r in 0..max_r {
        let mut m = f64::INFINITY;
        for (k, v) in vals.iter().enumerate() {
            let (i, j) = ((k / grid.cols) as isize, (k % grid.cols) as isize);
            if (i - ci).abs().max((j - cj).abs()) == r {
                m = m.min(*v);
            }
        }
        if m.is_finite() {
            out.push(m);
        }
    }
    out
}

fn rank_3x2(c1: [f64; 3], c2: [f64; 3]) -> usize {
    let m = Matrix3x2::new(c1[0], c2[0], c1[1], c2[1], c1[2], c2[2]);
    m.singular_values().iter().filter(|&&s| s > RANK_TOL).count()
}

/// Rank of `J -> J(0)` on the chart's tangent plane at `params`.
pub fn psi_rank(chart: &FoliationChart, params: (f64, f64)) -> Result<usize> {
    let (x1, x2) = chart_tangents(chart, params)?;
    let frame = standard_frame(&x1.geodesic().foot());
    Ok(rank_3x2(frame_coords(&frame, &x1.j0()), frame_coords(&frame, &x2.j0())))
}
