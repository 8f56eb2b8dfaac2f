//! Closed forms checked against independent numerical oracles.

mod common;

use geofoliate::foliation::{chart_variation, chart_variation_central, FD_STEP};
use geofoliate::lorentz::{boundary_chart, transport_between};
use geofoliate::{
    chart_h_inv, chart_tangent, dist, gauss, jacobi_eval, log_map, make_geodesic, GaussSign, HPoint, JacobiData,
    OrientedGeodesic,
};
use rand::Rng;

#[test]
fn jacobi_matches_rk4_including_tangential_part() {
    let mut rng = common::rng(11);
    for _ in 0..20 {
        let g = common::geodesic(&mut rng);
        let (f, d) = (g.foot(), g.dir());
        let j0 = common::tangent(&mut rng, f, 1.0);
        let j1 = common::tangent(&mut rng, f, 1.0);
        let jd = JacobiData::unconstrained(g, j0, j1).unwrap();
        // Ambient J'(0) = ∇J(0) + <J(0), γ'> γ.
        let amb1 = j1.vec() + f.vec() * j0.inner(&d);
        for (s, j, jp) in common::rk4_jacobi(f.vec(), d.vec(), j0.vec(), amb1, 3.0, 3000, 100) {
            let (cj, cjp) = jacobi_eval(&jd, s);
            let p = g.point_at(s);
            let vel = g.velocity_at(s);
            let amb = cjp.vec() + p.vec() * cj.inner(&vel);
            let scale = cj.vec().euclid_norm().max(1.0);
            assert!(common::close(&cj.vec(), &j) / scale < 1e-8, "J at s = {s}");
            assert!(common::close(&amb, &jp) / scale < 1e-8, "J' at s = {s}");
        }
    }
}

#[test]
fn stable_data_decays_exponentially() {
    let mut rng = common::rng(12);
    for _ in 0..20 {
        let g = common::geodesic(&mut rng);
        let n = common::normal(&mut rng, &g, 1.0);
        let jd = JacobiData::new(g, n, n.scaled(-1.0)).unwrap();
        for s in [0.5, 1.0, 2.0, 4.0] {
            let (j, _) = jacobi_eval(&jd, s);
            assert!((j.norm() - (-s).exp() * n.norm()).abs() < 1e-10);
        }
    }
}

/// Dense-grid minimum of `dist(o, γ(s))^2` refined by a local parabola.
fn scanned_d(g: &OrientedGeodesic, o: &HPoint) -> f64 {
    let n = 200_000;
    let (lo, hi) = (-12.0, 12.0);
    let step = (hi - lo) / n as f64;
    let f = |s: f64| dist(o, &g.point_at(s)).powi(2);
    let (k, _) = (0..=n)
        .map(|k| (k, f(lo + k as f64 * step)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let s = lo + k as f64 * step;
    let (fm, f0, fp) = (f(s - step), f(s), f(s + step));
    let denom = fm - 2.0 * f0 + fp;
    let shift = if denom > 0.0 { 0.5 * step * (fm - fp) / denom } else { 0.0 };
    f(s + shift).min(f0)
}

#[test]
fn d_matches_brute_force_scan() {
    let mut rng = common::rng(13);
    let o = HPoint::ORIGIN;
    for _ in 0..30 {
        let p = common::point(&mut rng, 1.5);
        let w = common::unit_tangent(&mut rng, p);
        // Keep the given reference point so the scan has to find the minimum.
        let g = OrientedGeodesic::from_foot(p, w).unwrap();
        let want = scanned_d(&g, &o);
        assert!((chart_h_inv(&g).d_value() - want).abs() < 1e-8, "{} vs {want}", chart_h_inv(&g).d_value());
        assert!((g.distance_sq_to(&o) - want).abs() < 1e-8);
    }
}

#[test]
fn canonical_foot_is_critical_for_distance() {
    let mut rng = common::rng(14);
    let o = HPoint::ORIGIN;
    for _ in 0..50 {
        let g = common::geodesic(&mut rng);
        assert!(g.is_canonical());
        let p = g.foot();
        if dist(&o, &p) < 0.05 {
            continue;
        }
        let r = |s: f64| dist(&o, &g.point_at(s));
        // Richardson-extrapolated central difference.
        let c = |h: f64| (r(h) - r(-h)) / (2.0 * h);
        let deriv = (4.0 * c(1e-3) - c(2e-3)) / 3.0;
        assert!(deriv.abs() < 1e-10, "residual {deriv}");
    }
}

#[test]
fn make_geodesic_recovers_input() {
    let mut rng = common::rng(15);
    for _ in 0..50 {
        let p = common::point(&mut rng, 2.0);
        let w = common::unit_tangent(&mut rng, p);
        let (g, s) = OrientedGeodesic::locate(p, w).unwrap();
        let (q, v) = g.eval(s);
        assert!(common::close(&q.vec(), &p.vec()) < 1e-9 * p.vec().euclid_norm());
        assert!(common::close(&v.vec(), &w.vec()) < 1e-9 * p.vec().euclid_norm());
        assert!(g.same_class(&make_geodesic(p, w).unwrap(), 1e-9));
    }
}

#[test]
fn gauss_is_large_parameter_limit() {
    let mut rng = common::rng(16);
    for _ in 0..50 {
        let g = common::geodesic(&mut rng);
        for (sign, s) in [(GaussSign::Forward, 20.0), (GaussSign::Backward, -20.0)] {
            let q = g.point_at(s).coords();
            let dir = [q[1] / q[0], q[2] / q[0], q[3] / q[0]];
            let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            let b = boundary_chart(&gauss(&g, sign));
            let err = (0..3).map(|i| (b[i] - dir[i] / n).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-7, "err {err}");
        }
    }
}

/// One-sided version of the chart variation, built directly from the chart.
fn one_sided(chart: &geofoliate::FoliationChart, (a, b): (f64, f64), dir: (f64, f64), h: f64) -> [f64; 8] {
    let g0 = chart.eval(a, b);
    let g1 = chart.eval(a + h * dir.0, b + h * dir.1);
    let f = g0.foot();
    let j0 = log_map(&f, &g1.foot()).scaled(1.0 / h);
    let j1 = transport_between(&g1.dir(), &f).minus(&g0.dir()).scaled(1.0 / h);
    let (x, y) = (j0.vec().coords(), j1.vec().coords());
    [x[0], x[1], x[2], x[3], y[0], y[1], y[2], y[3]]
}

fn flat(jd: &JacobiData) -> [f64; 8] {
    let (x, y) = (jd.j0().vec().coords(), jd.j0p().vec().coords());
    [x[0], x[1], x[2], x[3], y[0], y[1], y[2], y[3]]
}

fn central(chart: &geofoliate::FoliationChart, p: (f64, f64), dir: (f64, f64), h: f64) -> [f64; 8] {
    let jd = chart_variation_central(chart, p, dir, h).unwrap();
    let (x, y) = (jd.j0().vec().coords(), jd.j0p().vec().coords());
    [x[0], x[1], x[2], x[3], y[0], y[1], y[2], y[3]]
}

fn gap(a: &[f64; 8], b: &[f64; 8]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn central_differences_are_second_order() {
    let mut rng = common::rng(17);
    for _ in 0..10 {
        let chart = common::random_chart(&mut rng);
        let p = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let dir = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (c1, c2, c4) = (central(&chart, p, dir, 1e-2), central(&chart, p, dir, 2e-2), central(&chart, p, dir, 4e-2));
        // Halving h divides the error by about four.
        let ratio = gap(&c4, &c2) / gap(&c2, &c1);
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
        let fine = central(&chart, p, dir, FD_STEP);
        let os = one_sided(&chart, p, dir, 1e-7);
        assert!(gap(&fine, &os) < 1e-5 * (1.0 + gap(&fine, &[0.0; 8])));
        // The extrapolated step beats both central steps it is built from.
        let best = flat(&chart_variation(&chart, p, dir, 1e-2).unwrap());
        let reference = flat(&chart_variation(&chart, p, dir, 1e-3).unwrap());
        assert!(gap(&best, &reference) < 0.1 * gap(&c1, &reference));
    }
}

#[test]
fn chart_tangent_is_orthogonal() {
    let mut rng = common::rng(18);
    for _ in 0..10 {
        let chart = common::random_chart(&mut rng);
        let p = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let jd = chart_tangent(&chart, p, (1.0, 0.0), FD_STEP).unwrap();
        assert!(jd.is_orthogonal());
    }
}
