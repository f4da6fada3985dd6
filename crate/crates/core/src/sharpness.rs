//! Necessity oracles: fiber lower bounds across the cusp, exact threshold
//! rules on `(p, q, s)` grids, and the exponential cusp demonstration.
//!
//! Fiber bound: if `E` extends a function whose traces on the two edges of a
//! channel differ by `osc(r)`, then along each crossing fiber of length
//! `width(r)` Hölder gives `osc^Q ≤ width^(Q−1)·∫_fiber |∇E|^Q`. Integrating
//! over `r`, `∫ osc^Q·width^(1−Q) dr` bounds `∫|∇E|^Q` from below for every
//! extension.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{format_rational, Exponent};
use crate::geometry::{model_cusp_half_angle, CuspProfile, Domain, QuadratureSpec};
use crate::integrability::{integrate_distortion, IntegralSeries, Verdict};
use crate::maps::VerticalStretch;
use crate::numeric::{gauss5_nodes, gauss5_weights, CompensatedSum};

fn one() -> BigRational {
    One::one()
}

fn two() -> BigRational {
    one() + one()
}

fn require_above_one(name: &str, x: &BigRational) -> Result<()> {
    if *x > one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must exceed 1, got {}", format_rational(x))))
    }
}

/// Outward cusp rule: `s < 2p/q − 1`.
pub fn outward_rule(p: &BigRational, q: &BigRational) -> Result<BigRational> {
    require_above_one("p", p)?;
    require_above_one("q", q)?;
    Ok(two() * p / q - one())
}

/// Inward cusp rule: `s < (pq + p − 2q)/(pq − p)`.
pub fn inward_rule(p: &BigRational, q: &BigRational) -> Result<BigRational> {
    require_above_one("p", p)?;
    require_above_one("q", q)?;
    let pq = p * q;
    Ok((&pq + p - two() * q) / (&pq - p))
}

/// Distortion rule: `s < (pq + p + 2q)/(pq − p)`, with the limits
/// `(q+1)/(q−1)` at `p = ∞`, `(p+2)/p` at `q = ∞` and 1 when both are infinite.
pub fn distortion_rule(p: &Exponent, q: &Exponent) -> Result<Exponent> {
    for (name, x) in [("p", p), ("q", q)] {
        if !x.exceeds_one() {
            return Err(Error::Domain(format!("{name} must exceed 1, got {x}")));
        }
    }
    Ok(Exponent::Finite(match (p, q) {
        (Exponent::Infinite, Exponent::Infinite) => one(),
        (Exponent::Infinite, Exponent::Finite(q)) => (q + one()) / (q - one()),
        (Exponent::Finite(p), Exponent::Infinite) => (p + two()) / p,
        (Exponent::Finite(p), Exponent::Finite(q)) => {
            let pq = p * q;
            (&pq + p + two() * q) / (&pq - p)
        }
    }))
}

/// Fiber rule: with the least regular admissible trace growth
/// `γ_c = 1 − 2/p`, the fiber bound stays finite iff
/// `γ_c·q + s(1 − q) > −1`, i.e. `s < (1 + γ_c·q)/(q − 1)`.
pub fn fiber_rule(p: &BigRational, q: &BigRational) -> Result<BigRational> {
    require_above_one("p", p)?;
    require_above_one("q", q)?;
    let gamma_c = one() - two() / p;
    Ok((one() + gamma_c * q) / (q - one()))
}

/// Fiber-oracle critical exponent `Q*(s) = (s+1)/s`.
pub fn fiber_critical_exponent(s: &BigRational) -> Result<BigRational> {
    require_above_one("s", s)?;
    Ok((s + one()) / s)
}

/// Distortion threshold of the built-in map inverted in `q`: `q*(s) = (s+1)/(s−1)`.
pub fn map_critical_q(s: &BigRational) -> Result<BigRational> {
    require_above_one("s", s)?;
    Ok((s + one()) / (s - one()))
}

/// `Q*(s) − 2q*/(q*+1)` with `q* = q*(s)`; vanishes identically.
pub fn corner_identity_residual(s: &BigRational) -> Result<BigRational> {
    let qs = map_critical_q(s)?;
    Ok(fiber_critical_exponent(s)? - two() * &qs / (&qs + one()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleVerdict {
    /// `s` strictly below the threshold.
    Below,
    /// Equality: a borderline point.
    Critical,
    Above,
}

impl fmt::Display for RuleVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleVerdict::Below => "below",
            RuleVerdict::Critical => "critical",
            RuleVerdict::Above => "above",
        })
    }
}

fn compare(s: &BigRational, threshold: &BigRational) -> RuleVerdict {
    match s.cmp(threshold) {
        Ordering::Less => RuleVerdict::Below,
        Ordering::Equal => RuleVerdict::Critical,
        Ordering::Greater => RuleVerdict::Above,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCell {
    pub threshold: Exponent,
    pub verdict: RuleVerdict,
}

impl RuleCell {
    fn new(s: &BigRational, threshold: BigRational) -> Self {
        RuleCell { verdict: compare(s, &threshold), threshold: Exponent::Finite(threshold) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub p: Exponent,
    pub q: Exponent,
    pub s: Exponent,
    pub outward: RuleCell,
    pub inward: RuleCell,
    pub distortion: RuleCell,
    pub fiber: RuleCell,
    /// `Q*(s) = (s+1)/s`.
    pub fiber_q_star: Exponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionTable {
    pub cells: Vec<RegionCell>,
}

/// Exact verdicts of every rule at every grid point.
pub fn threshold_scan(ps: &[BigRational], qs: &[BigRational], ss: &[BigRational]) -> Result<RegionTable> {
    let mut cells = Vec::with_capacity(ps.len() * qs.len() * ss.len());
    for p in ps {
        for q in qs {
            let outward = outward_rule(p, q)?;
            let inward = inward_rule(p, q)?;
            let distortion = match distortion_rule(&Exponent::Finite(p.clone()), &Exponent::Finite(q.clone()))? {
                Exponent::Finite(t) => t,
                Exponent::Infinite => unreachable!("finite exponents give a finite threshold"),
            };
            let fiber = fiber_rule(p, q)?;
            for s in ss {
                cells.push(RegionCell {
                    p: Exponent::Finite(p.clone()),
                    q: Exponent::Finite(q.clone()),
                    s: Exponent::Finite(s.clone()),
                    outward: RuleCell::new(s, outward.clone()),
                    inward: RuleCell::new(s, inward.clone()),
                    distortion: RuleCell::new(s, distortion.clone()),
                    fiber: RuleCell::new(s, fiber.clone()),
                    fiber_q_star: Exponent::Finite(fiber_critical_exponent(s)?),
                });
            }
        }
    }
    Ok(RegionTable { cells })
}

impl RegionTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "p,q,s,outward_threshold,outward,inward_threshold,inward,distortion_threshold,distortion,fiber_threshold,fiber,fiber_q_star\n",
        );
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                c.p,
                c.q,
                c.s,
                c.outward.threshold,
                c.outward.verdict,
                c.inward.threshold,
                c.inward.verdict,
                c.distortion.threshold,
                c.distortion.verdict,
                c.fiber.threshold,
                c.fiber.verdict,
                c.fiber_q_star
            );
        }
        out
    }
}

/// Channel whose crossing fibers the lower bound integrates over.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberProfile {
    /// Model polar cusp of degree `s`: arcs of length `2α(r)·r`.
    ModelCusp { s: f64 },
    /// Cartesian channel `|y| < ρ(x)`: vertical segments of length `2ρ(x)`.
    Cartesian(CuspProfile),
}

impl FiberProfile {
    fn ln_width(&self, r: f64) -> f64 {
        match self {
            FiberProfile::ModelCusp { s } => (2.0 * model_cusp_half_angle(*s, r) * r).ln(),
            FiberProfile::Cartesian(p) => 2f64.ln() + p.ln_value(r),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FiberProfile::ModelCusp { s } => format!("model-cusp(s={s})"),
            FiberProfile::Cartesian(p) => format!("channel({})", p.name()),
        }
    }
}

/// Trace oscillation across the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oscillation {
    /// `2r^γ`.
    Model,
    /// `2r^γ(π − α(r))/π`: the exact edge traces of the angular jump family
    /// on the model cusp.
    AngularJumpTrace,
}

/// `∫_{2^(−k)}^{r_max} osc(r)^Q · width(r)^(1−Q) dr` for `k = 0..=level`,
/// accumulated in log space on dyadic shells.
pub fn fiber_lower_bound_on(
    gamma: f64,
    profile: &FiberProfile,
    big_q: f64,
    r_max: f64,
    osc: Oscillation,
    spec: &QuadratureSpec,
) -> Result<IntegralSeries> {
    spec.validate()?;
    if !(big_q > 0.0 && big_q.is_finite()) {
        return Err(Error::Domain(format!("fiber exponent must be positive and finite, got {big_q}")));
    }
    if !(r_max > 0.0 && r_max <= 1.0) {
        return Err(Error::Domain(format!("fiber range must end in (0, 1], got {r_max}")));
    }
    let ln_osc = |r: f64| -> f64 {
        let base = 2f64.ln() + gamma * r.ln();
        match (osc, profile) {
            (Oscillation::AngularJumpTrace, FiberProfile::ModelCusp { s }) => {
                base + ((PI - model_cusp_half_angle(*s, r)) / PI).ln()
            }
            _ => base,
        }
    };
    let panels = spec.n.max(4);
    let mut values = Vec::with_capacity(spec.level as usize + 1);
    let mut acc = CompensatedSum::new();
    // shell 0 is r ≥ 1, outside the channel
    values.push(0.0);
    for j in 1..=spec.level {
        let hi = 0.5f64.powi(j as i32 - 1).min(r_max);
        let lo = 0.5f64.powi(j as i32);
        let mut shell = CompensatedSum::new();
        if hi > lo {
            let h = (hi - lo) / panels as f64;
            for k in 0..panels {
                let a = lo + k as f64 * h;
                let b = a + h;
                for (r, w) in gauss5_nodes(a, b).into_iter().zip(gauss5_weights(a, b)) {
                    shell.add(w * (big_q * ln_osc(r) + (1.0 - big_q) * profile.ln_width(r)).exp());
                }
            }
        }
        acc.add(shell.value());
        values.push(acc.value());
    }
    let mut series = IntegralSeries::new(
        format!("osc^{big_q}·width^(1−{big_q})"),
        Exponent::from_f64(big_q).ok(),
        profile.name(),
        values,
    )?;
    if big_q <= 1.0 {
        series.verdict = Verdict::Finite;
        series.note = Some("Q ≤ 1: width exponent is non-negative, the bound is finite".into());
    }
    Ok(series)
}

/// Fiber lower bound over the whole channel with the model oscillation `2r^γ`.
pub fn fiber_lower_bound(gamma: f64, profile: &FiberProfile, big_q: f64, spec: &QuadratureSpec) -> Result<IntegralSeries> {
    fiber_lower_bound_on(gamma, profile, big_q, 1.0, Oscillation::Model, spec)
}

/// `γQ + s(1 − Q)`: the fiber integrand on the model cusp is `≍ r^e`, finite
/// iff `e > −1`.
pub fn fiber_exponent(gamma: f64, s: f64, big_q: f64) -> f64 {
    gamma * big_q + s * (1.0 - big_q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberEntry {
    pub big_q: f64,
    pub series: IntegralSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1DemoReport {
    /// `∫ K dA` of the vertical stretch over the exponential channel.
    pub distortion_integral: IntegralSeries,
    /// Asymptotic oracle `∫₀¹ (x/ρ)·2ρ dx = 1`.
    pub oracle: f64,
    pub relative_error: f64,
    pub gamma: f64,
    pub fibers: Vec<FiberEntry>,
    pub q_one: IntegralSeries,
}

pub const L1_DEMO_QS: [f64; 3] = [1.01, 1.5, 2.0];
pub const L1_DEMO_GAMMA: f64 = 0.1;

/// The exponential cusp `ρ(x) = e·exp(−1/x)`: integrable distortion for the
/// vertical stretch, divergent fiber bounds for every `Q > 1`, finite at `Q = 1`.
pub fn l1_quasidisk_demo(spec: &QuadratureSpec) -> Result<L1DemoReport> {
    let profile = CuspProfile::exponential();
    let map = VerticalStretch::new(profile.clone());
    let channel = Domain::CuspChannel(profile.clone());
    let integral = integrate_distortion(&map, &channel, &Exponent::integer(1), spec)?;
    let fiber_profile = FiberProfile::Cartesian(profile);
    let fibers = L1_DEMO_QS
        .iter()
        .map(|&q| Ok(FiberEntry { big_q: q, series: fiber_lower_bound(L1_DEMO_GAMMA, &fiber_profile, q, spec)? }))
        .collect::<Result<Vec<_>>>()?;
    let q_one = fiber_lower_bound(L1_DEMO_GAMMA, &fiber_profile, 1.0, spec)?;
    let oracle = 1.0;
    Ok(L1DemoReport {
        relative_error: (integral.last() - oracle).abs() / oracle,
        distortion_integral: integral,
        oracle,
        gamma: L1_DEMO_GAMMA,
        fibers,
        q_one,
    })
}

/// SVG phase diagram in the `(q, s)` plane at fixed `p`: threshold curves of
/// every rule plus the built-in map's `(q+1)/(q−1)`.
pub fn phase_diagram_svg(p: &BigRational, q_max: f64, s_max: f64) -> Result<String> {
    require_above_one("p", p)?;
    let (w, h, m) = (640.0, 480.0, 50.0);
    let q_min = 1.0;
    let s_min = 1.0;
    let sx = |q: f64| m + (q - q_min) / (q_max - q_min) * (w - 2.0 * m);
    let sy = |s: f64| h - m - (s - s_min) / (s_max - s_min) * (h - 2.0 * m);
    type Curve = fn(&BigRational, &BigRational) -> Result<BigRational>;
    let map_curve: Curve = |_, q| Ok((q + one()) / (q - one()));
    let dist_curve: Curve = |p, q| match distortion_rule(&Exponent::Finite(p.clone()), &Exponent::Finite(q.clone()))? {
        Exponent::Finite(t) => Ok(t),
        Exponent::Infinite => Err(Error::Domain("unbounded threshold".into())),
    };
    let curves: [(&str, &str, Curve); 5] = [
        ("outward 2p/q−1", "#1f77b4", outward_rule),
        ("inward (pq+p−2q)/(pq−p)", "#d62728", inward_rule),
        ("distortion (pq+p+2q)/(pq−p)", "#2ca02c", dist_curve),
        ("fiber (1+γc·q)/(q−1)", "#9467bd", fiber_rule),
        ("built-in map (q+1)/(q−1)", "#7f7f7f", map_curve),
    ];
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/><line x1="{m}" y1="{y0}" x2="{m}" y2="{m}" stroke="black"/>"#,
        y0 = h - m,
        x1 = w - m
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="14">q</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(svg, r#"<text x="12" y="{}" font-size="14">s</text>"#, h / 2.0);
    let _ = writeln!(svg, r#"<text x="{m}" y="24" font-size="14">thresholds at p = {}</text>"#, format_rational(p));
    for (k, (label, color, f)) in curves.iter().enumerate() {
        let mut pts = Vec::new();
        for i in 1..=400 {
            let qf = q_min + (q_max - q_min) * i as f64 / 400.0;
            let q = BigRational::from_float(qf).expect("finite grid value");
            if q <= one() {
                continue;
            }
            if let Ok(t) = f(p, &q) {
                let s = Exponent::Finite(t).to_f64();
                if s.is_finite() && s >= s_min && s <= s_max {
                    pts.push(format!("{:.2},{:.2}", sx(qf), sy(s)));
                }
            }
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
        let ly = m + 18.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{ly}" x2="{x1}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{xt}" y="{yt}" font-size="12">{label}</text>"#,
            x0 = w - m - 230.0,
            x1 = w - m - 205.0,
            xt = w - m - 200.0,
            yt = ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Whether `s` is at equality in any rule of a region cell.
pub fn is_borderline(cell: &RegionCell) -> bool {
    [&cell.outward, &cell.inward, &cell.distortion, &cell.fiber]
        .iter()
        .any(|r| r.verdict == RuleVerdict::Critical)
}

/// Margin `|s − threshold|` of a rational degree from a rational threshold.
pub fn margin(s: &BigRational, threshold: &BigRational) -> BigRational {
    (s - threshold).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{int, rat};
    use proptest::prelude::*;
    use num_traits::Zero;

    #[test]
    fn rule_examples() {
        let (p, q) = (int(4), int(2));
        assert_eq!(outward_rule(&p, &q).unwrap(), int(3));
        assert_eq!(inward_rule(&p, &q).unwrap(), int(2));
        assert_eq!(distortion_rule(&Exponent::Finite(p), &Exponent::Finite(q)).unwrap(), Exponent::integer(4));
        assert_eq!(distortion_rule(&Exponent::Infinite, &Exponent::integer(3)).unwrap(), Exponent::integer(2));
        assert_eq!(distortion_rule(&Exponent::Infinite, &Exponent::Infinite).unwrap(), Exponent::integer(1));
        assert!(outward_rule(&int(1), &int(2)).is_err());
    }

    #[test]
    fn scan_is_exact_and_flags_borderlines() {
        let t = threshold_scan(&[int(4)], &[int(2)], &[int(2), rat(5, 2)]).unwrap();
        assert_eq!(t.cells.len(), 2);
        assert_eq!(t.cells[0].inward.verdict, RuleVerdict::Critical);
        assert!(is_borderline(&t.cells[0]));
        assert_eq!(t.cells[1].inward.verdict, RuleVerdict::Above);
        assert_eq!(t.cells[1].outward.verdict, RuleVerdict::Below);
        assert_eq!(t.cells[1].fiber_q_star, Exponent::ratio(7, 5));
        let again = threshold_scan(&[int(4)], &[int(2)], &[int(2), rat(5, 2)]).unwrap();
        assert_eq!(t.to_csv(), again.to_csv());
    }

    #[test]
    fn fiber_examples() {
        let spec = QuadratureSpec::new(32, 40);
        let model = FiberProfile::ModelCusp { s: 2.0 };
        let fin = fiber_lower_bound(0.1, &model, 1.4, &spec).unwrap();
        assert_eq!(fin.verdict, Verdict::Finite);
        // closed form: ∫₀¹ 2^Q r^(γQ) (π r^s)^(1−Q) dr = 2^Q π^(1−Q)/(e+1)
        let e = fiber_exponent(0.1, 2.0, 1.4);
        let exact = 2f64.powf(1.4) * PI.powf(-0.4) / (e + 1.0);
        assert!((fin.last() - exact).abs() < 0.01 * exact, "{} vs {exact}", fin.last());
        let div = fiber_lower_bound(0.1, &model, 1.6, &QuadratureSpec::new(32, 16)).unwrap();
        assert_eq!(div.verdict, Verdict::Divergent);
        let flat = fiber_lower_bound(0.1, &FiberProfile::Cartesian(CuspProfile::exponential()), 1.0, &spec).unwrap();
        assert_eq!(flat.verdict, Verdict::Finite);
    }

    #[test]
    fn demo_fibers() {
        let r = l1_quasidisk_demo(&QuadratureSpec::new(32, 16)).unwrap();
        for f in &r.fibers {
            assert_eq!(f.series.verdict, Verdict::Divergent, "Q = {}", f.big_q);
        }
        assert_eq!(r.q_one.verdict, Verdict::Finite);
        assert_eq!(r.distortion_integral.verdict, Verdict::Finite);
    }

    #[test]
    fn svg_has_all_curves() {
        let svg = phase_diagram_svg(&int(4), 6.0, 6.0).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 5);
    }

    proptest! {
        #[test]
        fn fiber_rule_equals_inward_rule(pn in 2i64..400, pd in 1i64..100, qn in 2i64..400, qd in 1i64..100) {
            let p = rat(pn + pd, pd);
            let q = rat(qn + qd, qd);
            prop_assume!(p > int(1) && q > int(1));
            prop_assert_eq!(fiber_rule(&p, &q).unwrap(), inward_rule(&p, &q).unwrap());
        }

        #[test]
        fn corner_identity(n in 1i64..10_000, d in 1i64..1000) {
            let s = rat(n + d, d);
            prop_assert!(corner_identity_residual(&s).unwrap().is_zero());
        }
    }
}
