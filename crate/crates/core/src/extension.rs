//! The reflection across the model cusp, the extension operator it induces,
//! the exponent calculus and measured extension norm ratios.
//!
//! The reflection is `R̃ = Φ_s⁻¹ ∘ ρ_v ∘ Φ_s`, with `ρ_v(x, y) = (−x, y)`.
//! `Φ_s` sends `Ω_s` and `C_s` onto the left and right half-disks, so `ρ_v`
//! swaps them while fixing the interface, and `R̃` swaps `Ω_s` and `C_s`
//! while fixing the cusp boundary pointwise.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{two_x_over_x_minus_one, two_x_over_x_plus_one, Exponent};
use crate::geometry::{Domain, Location, Point, QuadratureSpec};
use crate::integrability::{cutoff_sums, integrate_distortion, IntegralSeries};
use crate::maps::{distortion_at, AngularStretch, Mat2, Orientation, PlanarMap};
use crate::sharpness::inward_rule;
use crate::sobolev::{seminorm, symbolic_membership, TestFunction};

/// `R̃ = Φ_s⁻¹ ∘ ρ_v ∘ Φ_s` on the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reflection {
    phi: AngularStretch,
}

impl Reflection {
    pub fn new(s: f64) -> Result<Self> {
        Ok(Reflection { phi: AngularStretch::new(s)? })
    }

    pub fn degree(&self) -> f64 {
        self.phi.degree()
    }

    pub fn stretch(&self) -> &AngularStretch {
        &self.phi
    }

    /// The model cusp domain `Ω_s`.
    pub fn domain(&self) -> Domain {
        Domain::PolarModelCusp { s: self.degree() }
    }

    /// The in-disk cusp `C_s`.
    pub fn cusp(&self) -> Domain {
        Domain::ComplementInBall { inner: Box::new(self.domain()), radius: 1.0 }
    }
}

/// Reflects `z` across the model cusp boundary of degree `s`.
pub fn reflect(s: f64, z: Point) -> Result<Point> {
    Reflection::new(s)?.eval(z)
}

impl PlanarMap for Reflection {
    fn name(&self) -> String {
        format!("cusp-reflection(s={})", self.degree())
    }
    fn accepts(&self, z: Point) -> bool {
        self.phi.accepts(z)
    }
    fn eval(&self, z: Point) -> Result<Point> {
        let (r, big) = self.phi.forward_polar(z.norm(), z.angle())?;
        let (r, t) = self.phi.inverse_polar(r, PI - big)?;
        Ok(Point::from_polar(r, t))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        self.eval(w)
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        let image = self.eval(z)?;
        let outer = self.phi.jacobian(image)?.inverse().ok_or_else(|| Error::Evaluation {
            at: z,
            reason: "singular angular stretch Jacobian".into(),
        })?;
        Ok(outer.mul(&Mat2::diag(-1.0, 1.0)).mul(&self.phi.jacobian(z)?))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Reversing
    }
    fn singular_points(&self) -> Vec<Point> {
        vec![Point::ORIGIN]
    }
}

/// Which side the function to extend lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtensionDirection {
    /// From the model cusp domain `Ω_s` into the cusp `C_s`.
    In,
    /// From the cusp `C_s` into `Ω_s`.
    Out,
}

impl fmt::Display for ExtensionDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtensionDirection::In => "in",
            ExtensionDirection::Out => "out",
        })
    }
}

impl FromStr for ExtensionDirection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in" | "interior" => Ok(ExtensionDirection::In),
            "out" | "exterior" => Ok(ExtensionDirection::Out),
            other => Err(Error::Parse(format!("direction must be `in` or `out`, got `{other}`"))),
        }
    }
}

/// `E(u)`: `u` on the source side, `u ∘ R̃` on the target side, 0 on the
/// cusp boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedFunction {
    pub u: TestFunction,
    pub reflection: Reflection,
    pub direction: ExtensionDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
    Interface,
}

/// Builds `E(u)` for the cusp of degree `s`.
pub fn extend(u: TestFunction, s: f64, direction: ExtensionDirection) -> Result<ExtendedFunction> {
    Ok(ExtendedFunction { u, reflection: Reflection::new(s)?, direction })
}

impl ExtendedFunction {
    pub fn source(&self) -> Domain {
        match self.direction {
            ExtensionDirection::In => self.reflection.domain(),
            ExtensionDirection::Out => self.reflection.cusp(),
        }
    }

    pub fn target(&self) -> Domain {
        match self.direction {
            ExtensionDirection::In => self.reflection.cusp(),
            ExtensionDirection::Out => self.reflection.domain(),
        }
    }

    pub fn side(&self, z: Point) -> Result<Side> {
        if !self.reflection.accepts(z) {
            return Err(Error::Domain(format!("{z} is outside the closed unit disk")));
        }
        let omega = self.reflection.domain();
        let side = match omega.location(z) {
            Location::Boundary => Side::Interface,
            Location::Inside => Side::Source,
            // the unit circle minus the cusp tip borders Ω_s only from outside
            Location::Outside if z.norm() >= 1.0 => Side::Interface,
            Location::Outside => Side::Target,
        };
        Ok(match (self.direction, side) {
            (ExtensionDirection::Out, Side::Source) => Side::Target,
            (ExtensionDirection::Out, Side::Target) => Side::Source,
            (_, s) => s,
        })
    }

    pub fn eval(&self, z: Point) -> Result<f64> {
        match self.side(z)? {
            Side::Source => self.u.eval(z),
            Side::Target => self.u.eval(self.reflection.eval(z)?),
            Side::Interface => Ok(0.0),
        }
    }

    /// Analytic gradient; on the target side by the chain rule through `DR̃`.
    pub fn gradient(&self, z: Point) -> Result<[f64; 2]> {
        match self.side(z)? {
            Side::Source => self.u.gradient(z),
            Side::Target => {
                let w = self.reflection.eval(z)?;
                let g = self.u.gradient(w)?;
                Ok(self.reflection.jacobian(z)?.transpose().apply(g))
            }
            Side::Interface => Err(Error::Evaluation { at: z, reason: "E(u) is not differentiable on the cusp boundary".into() }),
        }
    }

    pub fn gradient_norm(&self, z: Point) -> Result<f64> {
        let [gx, gy] = self.gradient(z)?;
        Ok(gx.hypot(gy))
    }
}

fn exceeds_one_or_err(name: &str, x: &Exponent) -> Result<()> {
    if x.exceeds_one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must exceed 1, got {x}")))
    }
}

/// Sobolev exponents `(P, Q)` of the extension: `(2p/(p−1), 2q/(q+1))` from
/// the domain into the plane, `(2q/(q−1), 2p/(p+1))` from the complement.
pub fn extension_exponents(p: &Exponent, q: &Exponent, direction: ExtensionDirection) -> Result<(Exponent, Exponent)> {
    exceeds_one_or_err("p", p)?;
    exceeds_one_or_err("q", q)?;
    Ok(match direction {
        ExtensionDirection::In => (two_x_over_x_minus_one(p), two_x_over_x_plus_one(q)),
        ExtensionDirection::Out => (two_x_over_x_minus_one(q), two_x_over_x_plus_one(p)),
    })
}

/// `inward_rule(2, 2q/(q+1)) − (q+1)/(q−1)`, which vanishes identically.
pub fn exponent_consistency(q: &BigRational) -> Result<BigRational> {
    let one: BigRational = One::one();
    if *q <= one {
        return Err(Error::Domain(format!("q must exceed 1, got {q}")));
    }
    let (big_p, big_q) = match extension_exponents(&Exponent::Infinite, &Exponent::Finite(q.clone()), ExtensionDirection::In)? {
        (Exponent::Finite(a), Exponent::Finite(b)) => (a, b),
        _ => unreachable!("finite q gives finite exponents"),
    };
    let inward = inward_rule(&big_p, &big_q)?;
    Ok(inward - (q + &one) / (q - &one))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioVerdict {
    /// `R_K / R_{K−1} < 1.1`.
    Bounded,
    /// `R_K / R_{K−1} ≥ 2`.
    Unbounded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub direction: ExtensionDirection,
    pub s: f64,
    pub function: String,
    pub big_p: Exponent,
    pub big_q: Exponent,
    pub r_u: f64,
    pub membership_rule: String,
    pub source_seminorm: IntegralSeries,
    pub extension_seminorm: IntegralSeries,
    /// `‖∇E(u)‖_{L^Q(U∖source)} / ‖∇u‖_{L^P(U∩source)}` per level; `None`
    /// where the truncated source is empty.
    pub ratios: Vec<Option<f64>>,
    pub verdict: RatioVerdict,
}

impl ExtensionReport {
    /// The last two defined ratios.
    pub fn last_two(&self) -> Option<(f64, f64)> {
        let defined: Vec<f64> = self.ratios.iter().flatten().copied().collect();
        match defined.as_slice() {
            [.., a, b] => Some((*a, *b)),
            _ => None,
        }
    }
}

pub const DEFAULT_NEIGHBOURHOOD: f64 = 0.5;

fn ratio_verdict(last_two: Option<(f64, f64)>) -> RatioVerdict {
    match last_two {
        Some((_, b)) if b == 0.0 => RatioVerdict::Bounded,
        Some((a, b)) if a > 0.0 => {
            let growth = b / a;
            if growth < 1.1 {
                RatioVerdict::Bounded
            } else if growth >= 2.0 {
                RatioVerdict::Unbounded
            } else {
                RatioVerdict::Inconclusive
            }
        }
        _ => RatioVerdict::Inconclusive,
    }
}

/// Measures the extension norm ratio over `U = B(0, r_U)` as a refinement
/// series. `u` must lie in `W^{1,P}` of the source side by the symbolic rule.
pub fn norm_ratio(
    u: &TestFunction,
    s: f64,
    big_p: &Exponent,
    big_q: &Exponent,
    r_u: f64,
    direction: ExtensionDirection,
    spec: &QuadratureSpec,
) -> Result<ExtensionReport> {
    if !(r_u > 0.0 && r_u < 1.0) {
        return Err(Error::Domain(format!("neighbourhood radius must lie in (0, 1), got {r_u}")));
    }
    let ext = extend(*u, s, direction)?;
    let source = ext.source().within_ball(r_u);
    let target = ext.target().within_ball(r_u);
    let rule = symbolic_membership(u, &ext.source(), big_p).ok_or_else(|| {
        Error::Precondition(format!("no symbolic membership rule for {} on {}", u.name(), ext.source().describe()))
    })?;
    if !rule.member {
        return Err(Error::Precondition(format!(
            "{} is not in W^(1,{big_p}) of {}: {}",
            u.name(),
            ext.source().describe(),
            rule.rule
        )));
    }
    let src = seminorm(u, &source, big_p, spec)?;
    let qf = big_q.to_f64();
    if big_q.is_infinite() || !(qf >= 1.0) {
        return Err(Error::Domain(format!("target exponent must be finite and ≥ 1, got {big_q}")));
    }
    let sums = cutoff_sums(&target, spec, |c| Ok(ext.gradient_norm(c.center)?.powf(qf) * c.area))?;
    let tgt = IntegralSeries::new(format!("|∇E({})|^{big_q}", u.name()), Some(big_q.clone()), target.describe(), sums)?.root(qf);
    let ratios: Vec<Option<f64>> = src
        .values
        .iter()
        .zip(&tgt.values)
        .map(|(d, n)| {
            if *d > 0.0 {
                Some(n / d)
            } else if *n == 0.0 && src.last() == 0.0 {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    let mut report = ExtensionReport {
        direction,
        s,
        function: u.name(),
        big_p: big_p.clone(),
        big_q: big_q.clone(),
        r_u,
        membership_rule: rule.rule,
        source_seminorm: src,
        extension_seminorm: tgt,
        ratios,
        verdict: RatioVerdict::Inconclusive,
    };
    report.verdict = ratio_verdict(report.last_two());
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub pairs: usize,
    pub max_jump: f64,
    pub worst_ratio: f64,
    pub holds: bool,
}

/// Samples pairs `z± = (r, ±(α(r) ± δ))` straddling the cusp boundary at
/// distance at most `max_gap`, and checks `|E(z⁺) − E(z⁻)| ≤ 10⁻²·|∇E|`,
/// with `|∇E|` the larger of the two one-sided gradient norms.
pub fn continuity_check(ext: &ExtendedFunction, pairs: usize, max_gap: f64, seed: u64) -> Result<ContinuityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_jump: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let r = 10f64.powf(rng.random_range(-3.0..-1e-3));
        let a = ext.reflection.stretch().half_angle(r);
        let delta = rng.random_range(0.05..0.5) * max_gap / r;
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let outer = Point::from_polar(r, sign * (a + delta));
        let inner = Point::from_polar(r, sign * (a - delta));
        let jump = (ext.eval(outer)? - ext.eval(inner)?).abs();
        let scale = ext.gradient_norm(outer)?.max(ext.gradient_norm(inner)?);
        max_jump = max_jump.max(jump);
        let ratio = if jump == 0.0 { 0.0 } else { jump / scale };
        worst = worst.max(ratio);
    }
    Ok(ContinuityReport { pairs, max_jump, worst_ratio: worst, holds: worst <= 1e-2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub s: f64,
    pub p: Exponent,
    pub function: String,
    /// `‖∇(u ∘ Φ_s⁻¹)‖²_{L²}` over the right half-disk.
    pub lhs: f64,
    /// `(∫|∇u|^(2p/(p−1)))^((p−1)/p) · (∫K^p)^(1/p)` over `C_s`.
    pub rhs: f64,
    pub holds: bool,
}

pub const HOLDER_SLACK: f64 = 1.05;

/// Numerical form of the chain `∫|∇v|² ≤ ∫|∇u|²K ≤ ‖∇u‖²_{2p/(p−1)}·‖K‖_p`
/// for `v = u ∘ Φ_s⁻¹`, with `u` on the cusp `C_s`.
pub fn holder_chain_check(u: &TestFunction, s: f64, p: &Exponent, spec: &QuadratureSpec) -> Result<HolderReport> {
    let phi = AngularStretch::new(s)?;
    let cusp = Domain::polar_cusp_complement(s)?;
    let half = Domain::right_half_disk(1.0);
    let lhs_sums = cutoff_sums(&half, spec, |c| {
        let z = phi.inverse(c.center)?;
        let dinv = phi.jacobian(z)?.inverse().ok_or_else(|| Error::Evaluation { at: z, reason: "singular Jacobian".into() })?;
        let [gx, gy] = dinv.transpose().apply(u.gradient(z)?);
        Ok((gx * gx + gy * gy) * c.area)
    })?;
    let lhs = *lhs_sums.last().expect("at least one level");
    let pf = p.to_f64();
    let dual = two_x_over_x_minus_one(p);
    let grad_sums = cutoff_sums(&cusp, spec, |c| Ok(u.gradient_norm(c.center)?.powf(dual.to_f64()) * c.area))?;
    let grad = grad_sums.last().expect("at least one level").powf(2.0 / dual.to_f64());
    let k = if p.is_infinite() {
        crate::integrability::distortion_sup(&phi, &cusp, spec)?
    } else {
        let series = integrate_distortion(&phi, &cusp, p, spec)?;
        series.last().powf(1.0 / pf)
    };
    let rhs = grad * k;
    Ok(HolderReport { s, p: p.clone(), function: u.name(), lhs, rhs, holds: lhs <= rhs * HOLDER_SLACK })
}

/// Pointwise form of the middle step: `|Dh⁻ᵀ∇u|²·J = |∇u|²·K` at most.
pub fn pointwise_chain_gap(phi: &AngularStretch, u: &TestFunction, z: Point) -> Result<f64> {
    let d = phi.jacobian(z)?;
    let dinv = d.inverse().ok_or_else(|| Error::Evaluation { at: z, reason: "singular Jacobian".into() })?;
    let g = u.gradient(z)?;
    let [a, b] = dinv.transpose().apply(g);
    let lhs = (a * a + b * b) * d.det().abs();
    let rhs = (g[0] * g[0] + g[1] * g[1]) * distortion_at(phi, z)?;
    Ok(rhs - lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat;
    use crate::geometry::model_cusp_half_angle;
    use proptest::prelude::*;
    use num_traits::Zero;

    #[test]
    fn reflect_examples() {
        let w = reflect(2.0, Point::new(0.25, 0.0)).unwrap();
        assert!(w.distance(Point::new(-0.25, 0.0)) < 1e-15);
        for s in [1.5, 2.0, 3.0] {
            for r in [0.001, 0.2, 0.9] {
                let z = Point::from_polar(r, model_cusp_half_angle(s, r));
                assert!(reflect(s, z).unwrap().distance(z) < 1e-9);
            }
        }
        assert!(reflect(2.0, Point::new(1.5, 0.0)).is_err());
    }

    #[test]
    fn extend_examples() {
        let u = TestFunction::AngularJump { gamma: 0.1 };
        let e = extend(u, 2.0, ExtensionDirection::In).unwrap();
        assert!(e.eval(Point::new(0.25, 0.0)).unwrap().abs() < 1e-15);
        let z = Point::from_polar(0.3, 2.0);
        assert_eq!(e.eval(z).unwrap(), u.eval(z).unwrap());
        let c = extend(TestFunction::Constant { value: 2.5 }, 1.5, ExtensionDirection::In).unwrap();
        assert_eq!(c.eval(Point::new(0.1, 0.0)).unwrap(), 2.5);
        let edge = Point::from_polar(0.5, model_cusp_half_angle(1.5, 0.5));
        assert_eq!(c.side(edge).unwrap(), Side::Interface);
    }

    #[test]
    fn exponent_examples() {
        let inf = Exponent::Infinite;
        let ext = ExtensionDirection::In;
        assert_eq!(extension_exponents(&inf, &inf, ext).unwrap(), (Exponent::integer(2), Exponent::integer(2)));
        let three = Exponent::integer(3);
        assert_eq!(extension_exponents(&three, &three, ext).unwrap(), (three.clone(), Exponent::ratio(3, 2)));
        let two = Exponent::integer(2);
        assert_eq!(
            extension_exponents(&two, &two, ExtensionDirection::Out).unwrap(),
            (Exponent::integer(4), Exponent::ratio(4, 3))
        );
        assert!(extension_exponents(&Exponent::integer(1), &two, ext).is_err());
    }

    #[test]
    fn consistency_examples() {
        assert!(exponent_consistency(&rat(3, 1)).unwrap().is_zero());
        assert!(exponent_consistency(&rat(2, 1)).unwrap().is_zero());
        assert!(exponent_consistency(&rat(1, 1)).is_err());
    }

    #[test]
    fn analytic_reflection_jacobian_matches_differences() {
        let refl = Reflection::new(2.0).unwrap();
        for (r, t) in [(0.3, 0.05), (0.5, 2.0), (0.2, -1.0), (0.7, 0.4)] {
            let z = Point::from_polar(r, t);
            let j = refl.jacobian(z).unwrap();
            let h = 1e-7;
            let f = |p: Point| refl.eval(p).unwrap();
            let dx = (f(Point::new(z.x + h, z.y)).x - f(Point::new(z.x - h, z.y)).x) / (2.0 * h);
            let dy = (f(Point::new(z.x, z.y + h)).y - f(Point::new(z.x, z.y - h)).y) / (2.0 * h);
            assert!((dx - j.a).abs() < 1e-5 * j.a.abs().max(1.0));
            assert!((dy - j.d).abs() < 1e-5 * j.d.abs().max(1.0));
        }
    }

    #[test]
    fn constant_ratio_is_zero() {
        let r = norm_ratio(
            &TestFunction::Constant { value: 1.0 },
            1.5,
            &Exponent::integer(2),
            &Exponent::ratio(8, 5),
            0.5,
            ExtensionDirection::In,
            &QuadratureSpec::new(16, 6),
        )
        .unwrap();
        assert!(r.ratios.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(r.verdict, RatioVerdict::Bounded);
    }

    #[test]
    fn non_member_is_rejected() {
        let err = norm_ratio(
            &TestFunction::AngularJump { gamma: -0.9 },
            2.0,
            &Exponent::integer(2),
            &Exponent::ratio(8, 5),
            0.5,
            ExtensionDirection::In,
            &QuadratureSpec::new(16, 6),
        )
        .unwrap_err();
        match err {
            Error::Precondition(msg) => assert!(msg.contains("γ > 1 − 2/P"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn reflection_is_an_involution_swapping_sides(s in 1.1f64..4.0, lr in -3.0f64..-1e-6, t in -PI..PI) {
            let refl = Reflection::new(s).unwrap();
            let z = Point::from_polar(10f64.powf(lr), t);
            let w = refl.eval(z).unwrap();
            prop_assert!(refl.eval(w).unwrap().distance(z) < 1e-9);
            if refl.domain().contains(z) {
                prop_assert!(refl.cusp().contains(w));
            }
            if refl.cusp().contains(z) {
                prop_assert!(refl.domain().contains(w));
            }
        }

        #[test]
        fn restriction_identity(s in 1.1f64..4.0, r in 1e-3f64..0.999, t in -PI..PI, gamma in -0.5f64..2.0) {
            let u = TestFunction::RadialPower { gamma };
            let z = Point::from_polar(r, t);
            for dir in [ExtensionDirection::In, ExtensionDirection::Out] {
                let e = extend(u, s, dir).unwrap();
                if e.side(z).unwrap() == Side::Source {
                    prop_assert_eq!(e.eval(z).unwrap(), u.eval(z).unwrap());
                }
            }
        }

        #[test]
        fn chain_rule_step_is_pointwise(s in 1.2f64..3.0, r in 1e-3f64..0.999, t in -PI..PI, gamma in 0.1f64..2.0) {
            let phi = AngularStretch::new(s).unwrap();
            let u = TestFunction::RadialPower { gamma };
            let z = Point::from_polar(r, t);
            let gap = pointwise_chain_gap(&phi, &u, z).unwrap();
            let scale = u.gradient_norm(z).unwrap().powi(2) * distortion_at(&phi, z).unwrap();
            prop_assert!(gap >= -1e-9 * scale);
        }
    }
}
