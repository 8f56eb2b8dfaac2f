//! Acceptance gate: runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line each, and exits non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geofoliate::foliation::{chart_tangents, FD_STEP, VERDICT_TOL};
use geofoliate::geodesic::{boundary_velocity, g_cross_at, g_k_at, matrix_rank2};
use geofoliate::lorentz::{frame_coords, standard_frame, transport_between};
use geofoliate::*;
use nalgebra::{Matrix2, Matrix3x2, Matrix4, SymmetricEigen, Vector2};
use rand::Rng;

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.2}s exceeds {limit}s", elapsed.as_secs_f64())
    })
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}

fn metric_constancy() -> Outcome {
    let t0 = Instant::now();
    let mut rng = common::rng(101);
    let (mut wx, mut wk) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let g = common::geodesic(&mut rng);
        let jd = common::jacobi(&mut rng, &g);
        let samples: Vec<f64> = (0..11).map(|i| -5.0 + i as f64).collect();
        let gx: Vec<f64> = samples.iter().map(|&s| g_cross_at(&jd, &jd, s).unwrap()).collect();
        let gk: Vec<f64> = samples.iter().map(|&s| g_k_at(&jd, &jd, s).unwrap()).collect();
        wx = wx.max(spread(&gx));
        wk = wk.max(spread(&gk));
    }
    let el = t0.elapsed();
    ensure(wx < 1e-9 && wk < 1e-9, || format!("spread g_x {wx:.2e}, g_K {wk:.2e}"))?;
    within(el, 1.0)?;
    Ok(format!("max spread g_x {wx:.2e}, g_K {wk:.2e}"))
}

fn signature(m: &Matrix4<f64>) -> Option<(usize, usize)> {
    let e = SymmetricEigen::new(*m).eigenvalues;
    if e.iter().any(|l| l.abs() < 1e-6) {
        return None;
    }
    Some((e.iter().filter(|&&l| l > 0.0).count(), e.iter().filter(|&&l| l < 0.0).count()))
}

fn signature_2_2() -> Outcome {
    let t0 = Instant::now();
    let mut rng = common::rng(102);
    let mut resampled = 0;
    for _ in 0..100 {
        let g = common::geodesic(&mut rng);
        loop {
            let basis: Vec<JacobiData> = (0..4).map(|_| common::jacobi(&mut rng, &g)).collect();
            let gx = Matrix4::from_fn(|i, j| g_cross(&basis[i], &basis[j]).unwrap());
            let gk = Matrix4::from_fn(|i, j| g_k(&basis[i], &basis[j]).unwrap());
            match (signature(&gx), signature(&gk)) {
                (Some(sx), Some(sk)) => {
                    ensure(sx == (2, 2) && sk == (2, 2), || format!("signatures {sx:?}, {sk:?}"))?;
                    break;
                }
                _ => resampled += 1,
            }
        }
    }
    within(t0.elapsed(), 1.0)?;
    Ok(format!("100 geodesics, (2,2) for both metrics, {resampled} resampled bases"))
}

fn jacobi_oracle() -> Outcome {
    let mut rng = common::rng(103);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let g = common::geodesic(&mut rng);
        let jd = common::jacobi(&mut rng, &g);
        let traj = common::rk4_jacobi(g.foot().vec(), g.dir().vec(), jd.j0().vec(), jd.j0p().vec(), 3.0, 3000, 30);
        for (s, j, jp) in traj {
            let (cj, cjp) = jacobi_eval(&jd, s);
            let scale = cj.vec().euclid_norm().max(cjp.vec().euclid_norm());
            worst = worst.max(common::close(&cj.vec(), &j) / scale);
            worst = worst.max(common::close(&cjp.vec(), &jp) / scale);
        }
    }
    ensure(worst < 1e-8, || format!("relative error {worst:.2e}"))?;
    Ok(format!("50 cases on [0, 3], max relative error {worst:.2e}"))
}

fn vertical_family_check() -> Outcome {
    let (field, chart) = vertical_family();
    let grid = GridSpec::new(20, 20).unwrap();
    let rep = classify_chart(&chart, &grid, VERDICT_TOL);
    ensure(rep.aggregate == Some(Verdict::AlmostSemidefinite) && rep.failures == 0, || {
        format!("aggregate {:?}, {} failures", rep.aggregate, rep.failures)
    })?;
    let mut worst = 0.0f64;
    let mut rank0 = 0;
    let mut shape = 0.0f64;
    for p in grid.cell_centers(chart.domain()) {
        let (x, y) = chart_tangents(&chart, p).unwrap();
        for (a, b) in [(&x, &x), (&x, &y), (&y, &y)] {
            worst = worst.max(g_cross(a, b).unwrap().abs()).max(g_k(a, b).unwrap().abs());
        }
        rank0 += usize::from(matrix_rank2(&gauss_differential(&chart, p, GaussSign::Forward).unwrap()) == 0);
        let q = chart.eval(p.0, p.1).foot();
        let op = nabla_v(&field, &q, FD_STEP).unwrap();
        let v = field.eval(&q);
        for e in standard_frame(&q) {
            let xp = e.minus(&v.scaled(e.inner(&v)));
            shape = shape.max((op.apply(&xp).vec() + xp.vec()).euclid_norm());
        }
    }
    ensure(worst < 1e-9, || format!("largest |norm| {worst:.2e}"))?;
    ensure(rank0 == 400, || format!("rank 0 at {rank0}/400 samples"))?;
    ensure(shape < 1e-5, || format!("|∇_X V + X| up to {shape:.2e}"))?;
    Ok(format!(
        "almost_semidefinite, |norms| <= {worst:.2e}, rank 0 at 400/400, |∇_X V + X| <= {shape:.2e}"
    ))
}

fn plane_normal_check() -> Outcome {
    let (_, chart) = plane_normal_family();
    let grid = GridSpec::new(20, 20).unwrap();
    let rep = classify_chart(&chart, &grid, VERDICT_TOL);
    ensure(rep.aggregate == Some(Verdict::Semidefinite) && rep.failures == 0, || {
        format!("aggregate {:?}, {} failures", rep.aggregate, rep.failures)
    })?;
    ensure(rep.verdicts().all(|v| v != Verdict::Definite), || "definite sample".into())?;
    let pts = grid.cell_centers(chart.domain());
    for &p in &pts {
        for s in [GaussSign::Forward, GaussSign::Backward] {
            let r = matrix_rank2(&gauss_differential(&chart, p, s).unwrap());
            ensure(r == 2, || format!("Gauss rank {r} at {p:?}"))?;
        }
        let r = psi_rank(&chart, p).unwrap();
        ensure(r == 2, || format!("psi rank {r} at {p:?}"))?;
    }
    let mins = critical_point_scan(&chart, &HPoint::ORIGIN, &grid);
    ensure(mins.len() == 1 && mins[0].value < 1e-12, || format!("minima {mins:?}"))?;
    Ok(format!(
        "semidefinite, Gauss and psi rank 2 at {} samples, one minimum D = {:.1e}",
        pts.len(),
        mins[0].value
    ))
}

fn f_lambda_family() -> Outcome {
    let t0 = Instant::now();
    let scan = scan_lambda(PI / 4.0, 0.1, &GridSpec::new(200, 200).unwrap()).unwrap();
    let lm = scan.lambda_max;
    ensure(lm > 0.0, || format!("lambda_max = {lm}"))?;
    let half = scan.params_at(lm / 2.0).unwrap();
    let chart = f_lambda_chart(&half);
    let rep = classify_chart(&chart, &GridSpec::new(40, 40).unwrap(), VERDICT_TOL);
    ensure(rep.aggregate == Some(Verdict::Definite) && rep.failures == 0, || {
        format!("aggregate at lambda_max/2: {:?}", rep.aggregate)
    })?;
    let mut rng = common::rng(106);
    let mut worst = 0.0f64;
    let dom = *chart.domain();
    for _ in 0..50 {
        let (r, t) = (rng.gen_range(dom.a_min + 1e-3..dom.a_max - 1e-3), rng.gen_range(dom.b_min + 1e-3..dom.b_max - 1e-3));
        let (x1, x2) = chart_tangents(&chart, (r, t)).unwrap();
        let gram = Matrix2::new(
            g_cross(&x1, &x1).unwrap(),
            g_cross(&x1, &x2).unwrap(),
            g_cross(&x2, &x1).unwrap(),
            g_cross(&x2, &x2).unwrap(),
        );
        let xy = Vector2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let q = quad_form(r, t, &half);
        let (got, want) = ((xy.transpose() * gram * xy)[0], (xy.transpose() * q * xy)[0]);
        worst = worst.max((got - want).abs() / want.abs());
        worst = worst.max((gram - q).norm() / q.norm());
    }
    ensure(worst < 1e-5, || format!("Gram relative error {worst:.2e}"))?;
    let twice = scan.params_at(2.0 * lm).unwrap();
    let rep2 = classify_chart(&f_lambda_chart(&twice), &GridSpec::new(40, 40).unwrap(), VERDICT_TOL);
    let mut negative = 0;
    for s in &rep2.samples {
        let h = h_lambda(s.params[0], s.params[1], &twice);
        if h < -VERDICT_TOL {
            negative += 1;
            let v = s.classification.as_ref().map(|c| c.verdict);
            ensure(v != Some(Verdict::Definite), || format!("definite where h = {h:.3e}"))?;
        }
    }
    ensure(negative > 0, || "no samples with h < 0 at twice lambda_max".into())?;
    within(t0.elapsed(), 30.0)?;
    Ok(format!(
        "lambda_max = {lm:.6}, definite at lambda_max/2, Gram rel. error {worst:.1e}, {negative} non-definite samples with h < 0 at 2 lambda_max"
    ))
}

fn counterexample() -> Outcome {
    let scan = scan_lambda(PI / 4.0, 0.1, &GridSpec::new(200, 200).unwrap()).unwrap();
    let p = scan.params_at(scan.lambda_max / 2.0).unwrap();
    let chart = f_lambda_chart(&p);
    let f = prop_point(2.0, 0.0);
    let d = match geodesics_intersect(&chart.eval(2.0, 0.0), &chart.eval(2.0, 2.0 * PI), 1e-9) {
        Ok(Intersection::Point { point }) => dist(&HPoint::new(MinkVec::from_array(point).unwrap()).unwrap(), &f),
        other => return Err(format!("intersection {other:?}")),
    };
    ensure(d < 1e-8, || format!("intersection at distance {d:.2e} from f(2,0)"))?;
    let mins = critical_point_scan(&chart, &f, &GridSpec::new(40, 40).unwrap());
    let zeros = mins.iter().filter(|m| m.value < 1e-10).count();
    ensure(zeros >= 2, || format!("{zeros} minima with D < 1e-10: {mins:?}"))?;
    Ok(format!("meet at distance {d:.1e} from f(2,0), {zeros} minima with D < 1e-10"))
}

fn gauss_kernel() -> Outcome {
    let mut rng = common::rng(108);
    let (mut worst_kernel, mut worst_stable) = (0.0f64, 0.0f64);
    let mut with_kernel = 0;
    for i in 0..50 {
        let fan = i % 2 == 0;
        let (chart, base) = if fan {
            let c = common::fan_chart(rng.gen_range(-0.5..0.5), rng.gen_range(0.5..2.0), rng.gen_range(0.0..2.0 * PI));
            // Rotate and shear the parameters so the stable direction is generic.
            let th: f64 = rng.gen_range(0.0..PI);
            let m = nalgebra::Matrix2::new(th.cos(), -th.sin() + 0.3, th.sin(), th.cos());
            let base = (rng.gen_range(-0.5..0.5), rng.gen_range(0.8..2.0));
            (c.reparametrized("fan'", ParamRect::new(-0.1, 0.1, -0.1, 0.1).unwrap(), base, m), (0.0, 0.0))
        } else {
            (common::random_chart(&mut rng), (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        };
        let jac = gauss_differential(&chart, base, GaussSign::Forward).unwrap();
        let (x1, x2) = chart_tangents(&chart, base).unwrap();
        let frame = standard_frame(&x1.geodesic().foot());
        let c1 = frame_coords(&frame, &boundary_velocity(&x1, GaussSign::Forward));
        let c2 = frame_coords(&frame, &boundary_velocity(&x2, GaussSign::Forward));
        let l = Matrix3x2::new(c1[0], c2[0], c1[1], c2[1], c1[2], c2[2]);
        let svd = l.svd(false, true);
        let vt = svd.v_t.unwrap();
        let k_idx = if svd.singular_values[0] < svd.singular_values[1] { 0 } else { 1 };
        let sigma_min = svd.singular_values[k_idx];
        let k = Vector2::new(vt[(k_idx, 0)], vt[(k_idx, 1)]);
        let rank_jac = matrix_rank2(&jac);
        if fan {
            // The stable direction of the data must be the Jacobian's kernel.
            let z = x1.combine(k[0], &x2, k[1]).unwrap();
            let stable = (z.j0p().vec() + z.j0().vec()).euclid_norm() / z.j0().norm();
            worst_stable = worst_stable.max(stable);
            worst_kernel = worst_kernel.max((jac * k).norm());
            ensure(stable < 1e-6, || format!("sample {i}: |J0' + J0| / |J0| = {stable:.2e}"))?;
            ensure((jac * k).norm() < 1e-6, || format!("sample {i}: kernel residual {:.2e}", (jac * k).norm()))?;
            ensure(rank_jac == 1, || format!("sample {i}: Jacobian rank {rank_jac}, expected 1"))?;
            with_kernel += 1;
        } else {
            ensure(sigma_min > 1e-3 && rank_jac == 2, || {
                format!("sample {i}: no stable direction but Jacobian rank {rank_jac}")
            })?;
        }
    }
    Ok(format!(
        "{with_kernel} samples with a stable direction: kernel residual <= {worst_kernel:.1e}, |J0' + J0| <= {worst_stable:.1e}; 25 without: rank 2"
    ))
}

fn asymptote_ode() -> Outcome {
    let mut rng = common::rng(109);
    let mut worst = 0.0f64;
    let h = 1e-4;
    for _ in 0..20 {
        let p = common::point(&mut rng, 1.0);
        let w1 = common::tangent(&mut rng, p, 1.0);
        let w2 = common::tangent(&mut rng, p, 1.0);
        let u: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b = BoundaryPoint::from_sphere(u.map(|x| x / n)).unwrap();
        let curve = |t: f64| exp_map(&w1.scaled(t).plus(&w2.scaled(0.5 * t * t)));
        for k in 0..5 {
            let t = -0.8 + 0.4 * k as f64;
            let c = curve(t);
            let (cp, cm) = (curve(t + h), curve(t - h));
            let cdot = log_map(&c, &cp).minus(&log_map(&c, &cm)).scaled(1.0 / (2.0 * h));
            let wt = asymptote_vector(&c, &b);
            let dw = transport_between(&asymptote_vector(&cp, &b), &c)
                .minus(&transport_between(&asymptote_vector(&cm, &b), &c))
                .scaled(1.0 / (2.0 * h));
            let rhs = wt.scaled(cdot.inner(&wt)).minus(&cdot);
            worst = worst.max((dw.vec() - rhs.vec()).euclid_norm());
        }
    }
    ensure(worst < 1e-6, || format!("residual {worst:.2e}"))?;
    Ok(format!("20 curves, max residual {worst:.2e}"))
}

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_geofoliate"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.code() == Some(0), || {
        format!("{args:?} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })
}

fn cli_determinism() -> Outcome {
    let runs: Vec<Vec<&str>> = vec![
        vec!["classify", "--family", "vertical", "--seed", "7"],
        vec!["classify", "--family", "plane-normal", "--seed", "7"],
        vec!["classify", "--family", "prop", "--grid", "40x40", "--seed", "7"],
        vec!["scan-lambda", "--seed", "7"],
        vec!["gauss", "--family", "vertical"],
        vec!["gauss", "--family", "plane-normal"],
        vec!["gauss", "--family", "prop"],
        vec!["critical", "--family", "vertical"],
        vec!["critical", "--family", "plane-normal"],
        vec!["critical", "--family", "prop"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let out = format!("run{i}.json");
        let mut full = args.clone();
        full.extend(["--out", out.as_str()]);
        for d in &dirs {
            run_cli(d.path(), &full)?;
        }
        for name in [out.clone(), out.replace(".json", ".csv")] {
            let a = std::fs::read(dirs[0].path().join(&name));
            let b = std::fs::read(dirs[1].path().join(&name));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    ensure(a == b, || format!("{args:?}: {name} differs"))?;
                    files += 1;
                }
                (Err(_), Err(_)) => {}
                _ => return Err(format!("{args:?}: {name} written only once")),
            }
        }
    }
    Ok(format!("{} invocations, {files} output files byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("metric constancy", metric_constancy),
        ("signature (2,2)", signature_2_2),
        ("Jacobi oracle", jacobi_oracle),
        ("vertical family", vertical_family_check),
        ("plane-normal family", plane_normal_check),
        ("F_lambda family", f_lambda_family),
        ("counterexample intersection", counterexample),
        ("Gauss differential kernel", gauss_kernel),
        ("asymptotic-field ODE", asymptote_ode),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
