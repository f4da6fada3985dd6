//! Acceptance gate: every criterion at its stated tolerance, one line each.
//!
//! Runs without the libtest harness so the per-criterion lines always print.
//! Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cuspext::exponent::{int, rat};
use cuspext::extension::{
    continuity_check, exponent_consistency, extend, extension_exponents, holder_chain_check, norm_ratio,
    ExtensionDirection, Reflection, Side,
};
use cuspext::geometry::model_cusp_half_angle;
use cuspext::integrability::{
    closed_form_threshold, integrate_distortion, radial_profile_closed_form, radial_profile_quadrature, ThresholdFamily,
};
use cuspext::maps::AngularStretch;
use cuspext::sharpness::{
    corner_identity_residual, fiber_exponent, fiber_lower_bound, l1_quasidisk_demo, threshold_scan, FiberProfile,
};
use cuspext::sobolev::{poincare_check, symbolic_membership, TestFunction, POINCARE_SLACK};
use cuspext::{Domain, Exponent, PlanarMap, Point, QuadratureSpec, Verdict};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Grid cells of the distortion threshold check: `(s, p)` with margin ≥ 0.2.
fn threshold_grid() -> Vec<(f64, BigRational)> {
    let mut cells = Vec::new();
    for s in [rat(3, 2), int(2), int(3)] {
        for p in [rat(3, 2), int(2), int(4)] {
            let t = closed_form_threshold(ThresholdFamily::AngularStretch, &Exponent::Finite(p.clone()));
            let t = t.finite().expect("p > 1").clone();
            let margin = if s > t { &s - &t } else { &t - &s };
            if margin >= rat(1, 5) {
                cells.push((Exponent::Finite(s.clone()).to_f64(), p));
            }
        }
    }
    cells
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let spec = QuadratureSpec::new(128, 16);
    let mut fails = Vec::new();
    let mut checked = 0;
    let mut worst_oracle: f64 = 0.0;
    for (s, p) in threshold_grid() {
        let pe = Exponent::Finite(p.clone());
        let phi = AngularStretch::new(s).unwrap();
        let cusp = Domain::polar_cusp_complement(s).unwrap();
        let series = integrate_distortion(&phi, &cusp, &pe, &spec).unwrap();
        let threshold = closed_form_threshold(ThresholdFamily::AngularStretch, &pe).to_f64();
        let expect = if s < threshold { Verdict::Finite } else { Verdict::Divergent };
        if series.verdict != expect {
            fails.push(format!("s={s} p={pe}: {} (expected {expect})", series.verdict));
        }
        if expect == Verdict::Finite {
            let pf = pe.to_f64();
            let quad = radial_profile_quadrature(&phi, pf, &spec).unwrap();
            let exact = radial_profile_closed_form(s, pf);
            let rel = (quad - exact).abs() / exact;
            worst_oracle = worst_oracle.max(rel);
            if rel > 0.01 {
                fails.push(format!("s={s} p={pe}: profile {quad} vs {exact}"));
            }
        }
        checked += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        fails.push(format!("runtime {secs:.1}s"));
    }
    outcome(
        fails.is_empty(),
        format!("{checked} cells, worst oracle error {:.2e}, {secs:.1}s {}", worst_oracle, fails.join("; ")),
    )
}

fn graded_samples(n: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point::from_polar(10f64.powf(rng.random_range(-3.0..0.0)), rng.random_range(-PI..PI)))
        .collect()
}

fn criterion_2() -> Outcome {
    let mut worst_inv: f64 = 0.0;
    let mut worst_fix: f64 = 0.0;
    let mut swap_fail = 0;
    for s in [1.5, 2.0, 3.0] {
        let refl = Reflection::new(s).unwrap();
        let (omega, cusp) = (refl.domain(), refl.cusp());
        for z in graded_samples(10_000, 2) {
            let w = refl.eval(z).unwrap();
            worst_inv = worst_inv.max(refl.eval(w).unwrap().distance(z));
            if omega.contains(z) != cusp.contains(w) || cusp.contains(z) != omega.contains(w) {
                swap_fail += 1;
            }
            let r = z.norm();
            let a = model_cusp_half_angle(s, r);
            for e in [Point::from_polar(r, a), Point::from_polar(r, -a)] {
                worst_fix = worst_fix.max(refl.eval(e).unwrap().distance(e));
            }
        }
    }
    outcome(
        worst_inv <= 1e-9 && worst_fix <= 1e-9 && swap_fail == 0,
        format!("involution {worst_inv:.1e}, boundary fix {worst_fix:.1e}, swap failures {swap_fail}"),
    )
}

fn criterion_3() -> Outcome {
    let s = 1.5;
    let q = Exponent::integer(4);
    let (big_p, big_q) = extension_exponents(&Exponent::Infinite, &q, ExtensionDirection::In).unwrap();
    let u = TestFunction::AngularJump { gamma: 0.2 };
    let e = extend(u, s, ExtensionDirection::In).unwrap();
    let mut restriction_ok = true;
    for z in graded_samples(10_000, 3) {
        if e.side(z).unwrap() == Side::Source && e.eval(z).unwrap() != u.eval(z).unwrap() {
            restriction_ok = false;
        }
    }
    let cont = continuity_check(&e, 1000, 1e-4, 4).unwrap();
    let report = norm_ratio(&u, s, &big_p, &big_q, 0.5, ExtensionDirection::In, &QuadratureSpec::new(64, 16)).unwrap();
    let (a, b) = report.last_two().unwrap();
    let rel = (b - a).abs() / a;
    outcome(
        restriction_ok && cont.holds && rel < 0.25,
        format!(
            "(P,Q)=({big_p},{big_q}), restriction {restriction_ok}, continuity worst {:.1e}, last ratios {a:.4} {b:.4} ({:.2}%)",
            cont.worst_ratio,
            100.0 * rel
        ),
    )
}

fn criterion_4() -> Outcome {
    let (gamma, big_q, s) = (0.1, 2.0, 4.0);
    let e = fiber_exponent(gamma, s, big_q);
    let spec = QuadratureSpec::new(64, 16);
    let fiber = fiber_lower_bound(gamma, &FiberProfile::ModelCusp { s }, big_q, &spec).unwrap();
    let report = norm_ratio(
        &TestFunction::AngularJump { gamma },
        s,
        &Exponent::integer(2),
        &Exponent::integer(2),
        0.5,
        ExtensionDirection::In,
        &spec,
    )
    .unwrap();
    let (a, b) = report.last_two().unwrap();
    outcome(
        e < -1.0 && fiber.verdict == Verdict::Divergent && b >= 2.0 * a,
        format!("γQ+s(1−Q) = {e}, fiber {}, ratio growth {:.3}", fiber.verdict, b / a),
    )
}

fn random_rational_above_one(rng: &mut ChaCha8Rng, max: i64) -> BigRational {
    loop {
        let d = rng.random_range(1..1000i64);
        let n = rng.random_range(d + 1..=max * d);
        let r = rat(n, d);
        if r > BigRational::one() {
            return r;
        }
    }
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = 0;
    for _ in 0..100 {
        let q = random_rational_above_one(&mut rng, 100);
        if !exponent_consistency(&q).unwrap().is_zero() {
            bad += 1;
        }
        let s = random_rational_above_one(&mut rng, 50);
        if !corner_identity_residual(&s).unwrap().is_zero() {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("200 exact identities, {bad} non-zero residuals"))
}

fn criterion_6() -> Outcome {
    let r = l1_quasidisk_demo(&QuadratureSpec::new(128, 16)).unwrap();
    let fibers_div = r.fibers.iter().all(|f| f.series.verdict == Verdict::Divergent);
    let q_one = r.q_one.verdict == Verdict::Finite;
    let integral_ok = r.relative_error <= 0.01 && r.distortion_integral.verdict == Verdict::Finite;
    outcome(
        integral_ok && fibers_div && q_one,
        format!(
            "∫K dA = {:.4} ({}; oracle {} ± 1%: {}), fibers Q∈{{1.01,1.5,2}} divergent: {fibers_div}, Q=1 finite: {q_one}",
            r.distortion_integral.last(),
            r.distortion_integral.verdict,
            r.oracle,
            if integral_ok { "ok" } else { "MISS" }
        ),
    )
}

fn criterion_7() -> Outcome {
    let spec = QuadratureSpec::new(128, 16);
    let functions = [
        TestFunction::RadialPower { gamma: 0.5 },
        TestFunction::RadialPower { gamma: 1.0 },
        TestFunction::Linear { a: 1.0, b: 0.5 },
        TestFunction::SmoothBump,
    ];
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut fails = Vec::new();
    for (s, p) in threshold_grid() {
        let pe = Exponent::Finite(p);
        if s >= closed_form_threshold(ThresholdFamily::AngularStretch, &pe).to_f64() {
            continue;
        }
        let dual = cuspext::exponent::two_x_over_x_minus_one(&pe);
        let cusp = Domain::polar_cusp_complement(s).unwrap();
        for u in &functions {
            if !symbolic_membership(u, &cusp, &dual).is_some_and(|r| r.member) {
                continue;
            }
            let h = holder_chain_check(u, s, &pe, &spec).unwrap();
            worst = worst.max(h.lhs / h.rhs);
            if !h.holds {
                fails.push(format!("s={s} p={pe} {}: {} > {}", u.name(), h.lhs, h.rhs));
            }
            checked += 1;
        }
    }
    outcome(fails.is_empty(), format!("{checked} cases, worst lhs/rhs {worst:.4} {}", fails.join("; ")))
}

fn criterion_8() -> Outcome {
    let spec = QuadratureSpec::new(128, 16);
    let disk = Domain::UnitDisk;
    let cases = [
        ("constant", TestFunction::Constant { value: 1.0 }, Domain::UnitDisk),
        ("x on disk", TestFunction::Linear { a: 1.0, b: 0.0 }, Domain::UnitDisk),
        ("r^0.5, right half", TestFunction::RadialPower { gamma: 0.5 }, Domain::right_half_disk(1.0)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, u, sub) in cases {
        let r = poincare_check(&u, &disk, &sub, 2.0, &spec).unwrap();
        pass &= r.holds;
        parts.push(format!("{name}: {:.4} ≤ {:.4}", r.ratio, r.bound));
    }
    outcome(pass, format!("q=2, slack {POINCARE_SLACK}: {}", parts.join(", ")))
}

fn criterion_9() -> Outcome {
    let run = || {
        let spec = QuadratureSpec::new(64, 12);
        let phi = AngularStretch::new(2.0).unwrap();
        let cusp = Domain::polar_cusp_complement(2.0).unwrap();
        let a = integrate_distortion(&phi, &cusp, &Exponent::ratio(3, 2), &spec).unwrap();
        let b = norm_ratio(
            &TestFunction::AngularJump { gamma: 0.2 },
            1.5,
            &Exponent::integer(2),
            &Exponent::ratio(8, 5),
            0.5,
            ExtensionDirection::In,
            &spec,
        )
        .unwrap();
        let c = threshold_scan(&[int(2), int(4)], &[rat(3, 2), int(2)], &[rat(3, 2), int(2), int(3)]).unwrap();
        let d = l1_quasidisk_demo(&spec).unwrap();
        (a, b, c, d)
    };
    let first = run();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let second = run();
    let close = |x: &[f64], y: &[f64]| {
        x.len() == y.len() && x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    };
    let mut pass = true;
    for other in [&serial, &second] {
        pass &= close(&first.0.values, &other.0.values) && first.0.verdict == other.0.verdict;
        pass &= close(&first.1.source_seminorm.values, &other.1.source_seminorm.values);
        pass &= close(&first.1.extension_seminorm.values, &other.1.extension_seminorm.values);
        pass &= first.2 == other.2;
        pass &= close(&first.3.distortion_integral.values, &other.3.distortion_integral.values);
    }
    outcome(pass, "distortion series, extension ratios, region table and demo reproduced (serial and parallel)")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("distortion thresholds", criterion_1),
        ("reflection identities", criterion_2),
        ("extension correctness and boundedness", criterion_3),
        ("sharpness divergence", criterion_4),
        ("exponent identity suite", criterion_5),
        ("exponential cusp demo", criterion_6),
        ("Hölder chain inequality", criterion_7),
        ("Poincaré step", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail.trim());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
