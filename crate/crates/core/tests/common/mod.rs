#![allow(dead_code)]

use geofoliate::{make_geodesic, HPoint, HTangent, JacobiData, MinkVec, OrientedGeodesic};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point(rng: &mut ChaCha8Rng, spread: f64) -> HPoint {
    HPoint::from_spatial([
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
        rng.gen_range(-spread..spread),
    ])
}

pub fn tangent(rng: &mut ChaCha8Rng, p: HPoint, scale: f64) -> HTangent {
    let w = MinkVec::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    );
    HTangent::project(p, w)
}

pub fn unit_tangent(rng: &mut ChaCha8Rng, p: HPoint) -> HTangent {
    loop {
        let t = tangent(rng, p, 1.0);
        if t.norm() > 0.1 {
            return t.normalized().unwrap();
        }
    }
}

pub fn geodesic(rng: &mut ChaCha8Rng) -> OrientedGeodesic {
    let p = point(rng, 2.0);
    let w = unit_tangent(rng, p);
    make_geodesic(p, w).unwrap()
}

/// Random vector at the foot orthogonal to the direction.
pub fn normal(rng: &mut ChaCha8Rng, g: &OrientedGeodesic, scale: f64) -> HTangent {
    let t = tangent(rng, g.foot(), scale);
    let d = g.dir();
    t.minus(&d.scaled(t.inner(&d)))
}

pub fn jacobi(rng: &mut ChaCha8Rng, g: &OrientedGeodesic) -> JacobiData {
    let a = normal(rng, g, 1.0);
    let b = normal(rng, g, 1.0);
    JacobiData::new(*g, a, b).unwrap()
}

pub fn close(a: &MinkVec, b: &MinkVec) -> f64 {
    (*a - *b).euclid_norm()
}

/// Fourth-order Runge-Kutta for the ambient Jacobi equation
/// `J'' = J + 2 <J', γ'> γ` along `s -> cosh s f + sinh s d`.
/// Returns ambient `(J(s), J'(s))` at every multiple of `every` steps.
pub fn rk4_jacobi(
    f: MinkVec,
    d: MinkVec,
    j0: MinkVec,
    j1: MinkVec,
    s_end: f64,
    steps: usize,
    every: usize,
) -> Vec<(f64, MinkVec, MinkVec)> {
    let gamma = |s: f64| f * s.cosh() + d * s.sinh();
    let vel = |s: f64| f * s.sinh() + d * s.cosh();
    let rhs = |s: f64, j: MinkVec, jp: MinkVec| (jp, j + gamma(s) * (2.0 * jp.inner(&vel(s))));
    let h = s_end / steps as f64;
    let (mut j, mut jp) = (j0, j1);
    let mut out = vec![(0.0, j, jp)];
    for k in 0..steps {
        let s = k as f64 * h;
        let (a1, b1) = rhs(s, j, jp);
        let (a2, b2) = rhs(s + h / 2.0, j + a1 * (h / 2.0), jp + b1 * (h / 2.0));
        let (a3, b3) = rhs(s + h / 2.0, j + a2 * (h / 2.0), jp + b2 * (h / 2.0));
        let (a4, b4) = rhs(s + h, j + a3 * h, jp + b3 * h);
        j = j + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        jp = jp + (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
        if (k + 1) % every == 0 {
            out.push(((k + 1) as f64 * h, j, jp));
        }
    }
    out
}

use geofoliate::foliation::{FoliationChart, ParamRect};
use geofoliate::lorentz::{convert_from_model, Model};
use geofoliate::{asymptote_vector, chart_h, BoundaryPoint, HChartPoint};

/// A smooth random chart through `chart_h`, with `u` and `v` polynomial in
/// the parameters.
pub fn random_chart(rng: &mut ChaCha8Rng) -> FoliationChart {
    let c: Vec<[f64; 4]> = (0..6)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        .collect();
    FoliationChart::new("random", ParamRect::new(-1.0, 1.0, -1.0, 1.0).unwrap(), move |a, b| {
        let o = HPoint::ORIGIN;
        let lin = |k: usize| {
            let m = |i: usize| c[k][i] + c[k + 1][i] * a + c[k + 2][i] * b;
            MinkVec::new(0.0, m(0) + if k == 0 { 2.0 } else { 0.0 }, m(1), m(2) + 0.3 * a * b)
        };
        let u = HTangent::project(o, lin(0)).normalized().unwrap();
        let v = HTangent::project(o, lin(3) * 0.8);
        let v = v.minus(&u.scaled(v.inner(&u)));
        chart_h(&HChartPoint::new(u, v).unwrap())
    })
}

/// Geodesics through `(a, y0, z0)` in the half-space model that end at the
/// ideal point with polar angle `b` and azimuth `phi`. The first axis moves
/// along geodesics sharing their forward end, so it is a stable direction.
pub fn fan_chart(y0: f64, z0: f64, phi: f64) -> FoliationChart {
    FoliationChart::new("fan", ParamRect::new(-1.0, 1.0, 0.3, 2.5).unwrap(), move |a, b| {
        let p = convert_from_model(Model::HalfSpace, [a, y0, z0]).unwrap();
        let end = BoundaryPoint::from_sphere([b.sin() * phi.cos(), b.sin() * phi.sin(), b.cos()]).unwrap();
        OrientedGeodesic::from_foot(p, asymptote_vector(&p, &end)).unwrap()
    })
}
