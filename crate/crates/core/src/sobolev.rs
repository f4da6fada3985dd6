//! Analytic test functions, gradient seminorms, symbolic membership rules and
//! the Poincaré comparison.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::geometry::{Domain, OriginWeight, Point, QuadratureSpec};
use crate::integrability::{cutoff_sums, IntegralSeries, Verdict};
use crate::numeric::CompensatedSum;

/// Families of test functions with closed-form gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `u = r^γ`.
    RadialPower { gamma: f64 },
    /// `u = r^γ·(θ − π)/π` with `θ ∈ [0, 2π)`: jumps across the positive
    /// axis, so across the cusp of the model domain its traces are
    /// `±r^γ·(π − α(r))/π`.
    AngularJump { gamma: f64 },
    /// `u = exp(−|z|²)`.
    SmoothBump,
    Constant { value: f64 },
    /// `u = a·x + b·y`.
    Linear { a: f64, b: f64 },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::RadialPower { gamma } => format!("radial-power(γ={gamma})"),
            TestFunction::AngularJump { gamma } => format!("angular-jump(γ={gamma})"),
            TestFunction::SmoothBump => "smooth-bump".into(),
            TestFunction::Constant { value } => format!("constant({value})"),
            TestFunction::Linear { a, b } => format!("linear({a}, {b})"),
        }
    }

    pub fn eval(&self, z: Point) -> Result<f64> {
        let r = z.norm();
        let v = match self {
            TestFunction::RadialPower { gamma } => radial(r, *gamma, z)?,
            TestFunction::AngularJump { gamma } => radial(r, *gamma, z)? * (z.angle_positive() - PI) / PI,
            TestFunction::SmoothBump => (-z.norm_sqr()).exp(),
            TestFunction::Constant { value } => *value,
            TestFunction::Linear { a, b } => a * z.x + b * z.y,
        };
        Ok(v)
    }

    pub fn gradient(&self, z: Point) -> Result<[f64; 2]> {
        let r2 = z.norm_sqr();
        let singular = || Error::Evaluation { at: z, reason: format!("gradient of {} is undefined at the origin", self.name()) };
        match self {
            TestFunction::RadialPower { gamma } => {
                if r2 == 0.0 {
                    return Err(singular());
                }
                let c = gamma * r2.powf(0.5 * gamma - 1.0);
                Ok([c * z.x, c * z.y])
            }
            TestFunction::AngularJump { gamma } => {
                if r2 == 0.0 {
                    return Err(singular());
                }
                let phase = (z.angle_positive() - PI) / PI;
                let c = gamma * r2.powf(0.5 * gamma - 1.0) * phase;
                let t = r2.powf(0.5 * gamma - 1.0) / PI;
                Ok([c * z.x - t * z.y, c * z.y + t * z.x])
            }
            TestFunction::SmoothBump => {
                let e = -2.0 * (-r2).exp();
                Ok([e * z.x, e * z.y])
            }
            TestFunction::Constant { .. } => Ok([0.0, 0.0]),
            TestFunction::Linear { a, b } => Ok([*a, *b]),
        }
    }

    pub fn gradient_norm(&self, z: Point) -> Result<f64> {
        let [gx, gy] = self.gradient(z)?;
        Ok(gx.hypot(gy))
    }

    /// Growth of `|∇u|` at the origin as a power `r^g`, for families that
    /// are singular there.
    fn gradient_power(&self) -> Option<f64> {
        match self {
            TestFunction::RadialPower { gamma } if *gamma != 0.0 && *gamma < 1.0 => Some(gamma - 1.0),
            TestFunction::AngularJump { gamma } if *gamma < 1.0 => Some(gamma - 1.0),
            _ => None,
        }
    }
}

fn radial(r: f64, gamma: f64, z: Point) -> Result<f64> {
    if r == 0.0 {
        if gamma > 0.0 {
            return Ok(0.0);
        }
        if gamma == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Evaluation { at: z, reason: format!("r^{gamma} is unbounded at the origin") });
    }
    Ok(r.powf(gamma))
}

/// Result of the symbolic rule for `∫_D |∇u|^P < ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicRule {
    pub member: bool,
    pub rule: String,
}

/// `|∇u| ≍ r^(γ−1)` on a region with area weight `r^w dr` near the origin is
/// `P`-integrable iff `P(γ−1) + w > −1`; with the model cusp domain (`w = 1`)
/// this reads `γ > 1 − 2/P`.
pub fn symbolic_membership(u: &TestFunction, domain: &Domain, p: &Exponent) -> Option<SymbolicRule> {
    let bounded = |why: &str| SymbolicRule { member: true, rule: format!("{} has {why}", u.name()) };
    let Some(g) = u.gradient_power() else {
        return Some(bounded("a bounded gradient on bounded domains"));
    };
    if p.is_infinite() {
        return Some(SymbolicRule { member: false, rule: format!("|∇u| ≍ r^{g} is unbounded at the origin") });
    }
    let pf = p.to_f64();
    match domain.origin_weight()? {
        OriginWeight::Absent => Some(bounded("no singular point in the closure of the domain")),
        OriginWeight::Flat => Some(bounded("a power singularity on a region that is flat at the origin")),
        OriginWeight::Power(w) => {
            let e = pf * g + w;
            let member = e > -1.0;
            let rule = if w == 1.0 {
                {
                    let gamma = match u {
                        TestFunction::RadialPower { gamma } | TestFunction::AngularJump { gamma } => *gamma,
                        _ => g + 1.0,
                    };
                    format!("member iff γ > 1 − 2/P: γ = {gamma}, 1 − 2/P = {}", 1.0 - 2.0 / pf)
                }
            } else {
                format!("member iff P(γ−1) + {w} > −1: P(γ−1) + {w} = {e}")
            };
            Some(SymbolicRule { member, rule })
        }
    }
}

/// `(∫_D |∇u|^P)^(1/P)` as a cutoff series; the verdict is that of `∫|∇u|^P`.
pub fn seminorm(u: &TestFunction, domain: &Domain, p: &Exponent, spec: &QuadratureSpec) -> Result<IntegralSeries> {
    let pf = seminorm_exponent(p)?;
    let values = cutoff_sums(domain, spec, |c| Ok(u.gradient_norm(c.center)?.powf(pf) * c.area))?;
    Ok(IntegralSeries::new(format!("|∇{}|^{p}", u.name()), Some(p.clone()), domain.describe(), values)?.root(pf))
}

/// `(∫_D |u|^P + |∇u|^P)^(1/P)` as a cutoff series.
pub fn full_norm(u: &TestFunction, domain: &Domain, p: &Exponent, spec: &QuadratureSpec) -> Result<IntegralSeries> {
    let pf = seminorm_exponent(p)?;
    let values = cutoff_sums(domain, spec, |c| {
        Ok((u.eval(c.center)?.abs().powf(pf) + u.gradient_norm(c.center)?.powf(pf)) * c.area)
    })?;
    Ok(IntegralSeries::new(format!("|{0}|^{p} + |∇{0}|^{p}", u.name()), Some(p.clone()), domain.describe(), values)?.root(pf))
}

fn seminorm_exponent(p: &Exponent) -> Result<f64> {
    let pf = p.to_f64();
    if p.is_infinite() || !(pf >= 1.0) {
        return Err(Error::Domain(format!("seminorm exponent must be finite and ≥ 1, got {p}")));
    }
    Ok(pf)
}

/// Sampled `max |∇u|` over the mesh, the P = ∞ seminorm estimate.
pub fn sup_gradient(u: &TestFunction, domain: &Domain, spec: &QuadratureSpec) -> Result<f64> {
    let cells = crate::geometry::graded_mesh(domain, spec)?;
    cells.iter().try_fold(0.0f64, |m, c| Ok(m.max(u.gradient_norm(c.center)?)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub function: String,
    pub exponent: Exponent,
    pub seminorm: IntegralSeries,
    pub full_norm: IntegralSeries,
    pub symbolic: Option<SymbolicRule>,
    /// Quadrature verdict agrees with the symbolic rule; `None` without a rule.
    pub agrees: Option<bool>,
    pub member: bool,
}

/// Symbolic membership cross-checked against the quadrature verdict.
/// Without a symbolic rule the quadrature verdict alone decides.
pub fn membership(u: &TestFunction, domain: &Domain, p: &Exponent, spec: &QuadratureSpec) -> Result<NormReport> {
    let semi = seminorm(u, domain, p, spec)?;
    let full = full_norm(u, domain, p, spec)?;
    let symbolic = symbolic_membership(u, domain, p);
    let agrees = symbolic.as_ref().map(|r| match semi.verdict {
        Verdict::Finite => r.member,
        Verdict::Divergent => !r.member,
        Verdict::Inconclusive => false,
    });
    let member = match &symbolic {
        Some(r) => r.member,
        None => semi.verdict == Verdict::Finite,
    };
    Ok(NormReport {
        function: u.name(),
        exponent: p.clone(),
        seminorm: semi,
        full_norm: full,
        symbolic,
        agrees,
        member,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Slack on the Poincaré bound for discretization error.
pub const POINCARE_SLACK: f64 = 1.05;

/// `‖u − u_Ω‖_{L^q(B)} / ‖∇u‖_{L^q(B)}` with `u_Ω` the mean over the
/// subdomain, compared with `4·diam(B)·(|B|/|Ω|)^(1/q)`.
pub fn poincare_check(u: &TestFunction, ball: &Domain, subdomain: &Domain, q: f64, spec: &QuadratureSpec) -> Result<PoincareReport> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::Domain(format!("Poincaré exponent must be finite and ≥ 1, got {q}")));
    }
    let diam = ball
        .diameter()
        .ok_or_else(|| Error::Precondition(format!("{} is not a ball", ball.describe())))?;
    let sub_cells = crate::geometry::graded_mesh(subdomain, spec)?;
    let mut sub_area = CompensatedSum::new();
    let mut sub_int = CompensatedSum::new();
    for c in &sub_cells {
        if !ball.contains(c.center) && ball.location(c.center) != crate::geometry::Location::Boundary {
            return Err(Error::Precondition(format!(
                "{} is not contained in {}",
                subdomain.describe(),
                ball.describe()
            )));
        }
        sub_area.add(c.area);
        sub_int.add(u.eval(c.center)? * c.area);
    }
    let sub_area = sub_area.value();
    if !(sub_area > 0.0) {
        return Err(Error::Precondition(format!("{} has no area", subdomain.describe())));
    }
    let mean = sub_int.value() / sub_area;
    let ball_area = *cutoff_sums(ball, spec, |c| Ok(c.area))?.last().expect("at least one level");
    let num = cutoff_sums(ball, spec, |c| Ok((u.eval(c.center)? - mean).abs().powf(q) * c.area))?;
    let den = cutoff_sums(ball, spec, |c| Ok(u.gradient_norm(c.center)?.powf(q) * c.area))?;
    let num = num.last().expect("at least one level").powf(1.0 / q);
    let den = den.last().expect("at least one level").powf(1.0 / q);
    let ratio = if num < 1e-12 { 0.0 } else { num / den };
    let bound = 4.0 * diam * (ball_area / sub_area).powf(1.0 / q) * POINCARE_SLACK;
    Ok(PoincareReport { ratio, bound, holds: ratio <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat;
    use proptest::prelude::*;

    fn fd_gradient(u: &TestFunction, z: Point, h: f64) -> [f64; 2] {
        let f = |p: Point| u.eval(p).unwrap();
        [
            (f(Point::new(z.x + h, z.y)) - f(Point::new(z.x - h, z.y))) / (2.0 * h),
            (f(Point::new(z.x, z.y + h)) - f(Point::new(z.x, z.y - h))) / (2.0 * h),
        ]
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences(
            r in 1e-3f64..1.0,
            // keep away from the jump on the positive axis
            theta in 0.05f64..(2.0 * PI - 0.05),
            gamma in -0.5f64..2.0,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let z = Point::from_polar(r, theta);
            for u in [
                TestFunction::RadialPower { gamma },
                TestFunction::AngularJump { gamma },
                TestFunction::SmoothBump,
                TestFunction::Linear { a, b },
            ] {
                let g = u.gradient(z).unwrap();
                // singular families need a step below r, smooth ones a step above rounding noise
                let h = if u.gradient_power().is_some() { 1e-7 * r } else { 1e-5 };
                let fd = fd_gradient(&u, z, h);
                let scale = g[0].hypot(g[1]).max(1e-12);
                prop_assert!((g[0] - fd[0]).hypot(g[1] - fd[1]) <= 1e-4 * scale, "{} at {z}", u.name());
            }
        }
    }

    #[test]
    fn angular_jump_traces() {
        let s = 2.0;
        let gamma = 0.3;
        let u = TestFunction::AngularJump { gamma };
        for r in [0.01, 0.1, 0.5] {
            let a = crate::geometry::model_cusp_half_angle(s, r);
            let upper = u.eval(Point::from_polar(r, a)).unwrap();
            let lower = u.eval(Point::from_polar(r, -a)).unwrap();
            let expect = r.powf(gamma) * (PI - a) / PI;
            assert!((upper + expect).abs() < 1e-12);
            assert!((lower - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn seminorm_examples() {
        let spec = QuadratureSpec::new(64, 8);
        let r = TestFunction::RadialPower { gamma: 1.0 };
        let s = seminorm(&r, &Domain::UnitDisk, &Exponent::integer(2), &spec).unwrap();
        assert!((s.last() - PI.sqrt()).abs() < 0.005 * PI.sqrt());
        let c = TestFunction::Constant { value: 3.0 };
        let s = seminorm(&c, &Domain::polar_cusp(2.0).unwrap(), &Exponent::ratio(3, 2), &spec).unwrap();
        assert_eq!(s.last(), 0.0);
        let j = TestFunction::AngularJump { gamma: 0.1 };
        let s = seminorm(&j, &Domain::polar_cusp(2.0).unwrap(), &Exponent::integer(2), &QuadratureSpec::new(16, 120)).unwrap();
        assert_eq!(s.verdict, Verdict::Finite);
    }

    #[test]
    fn symbolic_examples() {
        let d = Domain::polar_cusp(2.0).unwrap();
        let two = Exponent::integer(2);
        let m = |g: f64| symbolic_membership(&TestFunction::RadialPower { gamma: g }, &d, &two).unwrap().member;
        assert!(m(0.5));
        assert!(m(1.0));
        assert!(symbolic_membership(&TestFunction::AngularJump { gamma: 1.0 }, &d, &Exponent::ratio(7, 3)).unwrap().member);
        let jump = |g: f64| symbolic_membership(&TestFunction::AngularJump { gamma: g }, &d, &two).unwrap().member;
        assert!(!jump(0.0));
        assert!(jump(0.1));
        assert!(!jump(-0.3));
    }

    #[test]
    fn seminorm_below_full_norm() {
        let spec = QuadratureSpec::new(32, 10);
        let d = Domain::polar_cusp(1.5).unwrap();
        for u in [TestFunction::AngularJump { gamma: 0.6 }, TestFunction::SmoothBump, TestFunction::Linear { a: 1.0, b: -2.0 }] {
            let r = membership(&u, &d, &Exponent::integer(2), &spec).unwrap();
            for (s, f) in r.seminorm.values.iter().zip(&r.full_norm.values) {
                assert!(s <= f);
            }
        }
    }

    #[test]
    fn holder_between_exponents() {
        let spec = QuadratureSpec::new(32, 40);
        let d = Domain::polar_cusp(2.0).unwrap();
        let area = d.area().unwrap();
        let u = TestFunction::AngularJump { gamma: 0.7 };
        for (p1, p2) in [(rat(3, 2), rat(2, 1)), (rat(2, 1), rat(3, 1))] {
            let a = seminorm(&u, &d, &Exponent::Finite(p1.clone()), &spec).unwrap().last();
            let b = seminorm(&u, &d, &Exponent::Finite(p2.clone()), &spec).unwrap().last();
            let (p1, p2) = (Exponent::Finite(p1).to_f64(), Exponent::Finite(p2).to_f64());
            assert!(a <= area.powf(1.0 / p1 - 1.0 / p2) * b * (1.0 + 1e-9));
        }
    }

    #[test]
    fn poincare_examples() {
        let spec = QuadratureSpec::new(64, 20);
        let disk = Domain::UnitDisk;
        let c = poincare_check(&TestFunction::Constant { value: 2.0 }, &disk, &disk, 2.0, &spec).unwrap();
        assert_eq!(c.ratio, 0.0);
        let x = poincare_check(&TestFunction::Linear { a: 1.0, b: 0.0 }, &disk, &disk, 2.0, &spec).unwrap();
        assert!(x.holds && x.ratio > 0.0);
        let half = Domain::right_half_disk(1.0);
        let h = poincare_check(&TestFunction::RadialPower { gamma: 0.5 }, &disk, &half, 2.0, &spec).unwrap();
        assert!(h.holds, "{h:?}");
    }
}
