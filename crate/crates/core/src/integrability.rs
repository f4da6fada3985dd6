//! Cutoff series of distortion integrals and their convergence verdicts.
//!
//! Every series is read off a single tip-graded mesh: cells carry their dyadic
//! shell index, so the level-`k` value is the compensated prefix sum of the
//! per-shell sums up to `k`.

use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::geometry::{graded_mesh, Cell, Domain, Point, QuadratureSpec};
use crate::maps::{distortion_at, ln_distortion_at, AngularStretch, PlanarMap};
use crate::numeric::{gauss5_nodes, gauss5_weights, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Finite,
    Divergent,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Finite => "finite",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Values `I_k` of an integral over a region minus the `2^(−k)`-neighbourhood
/// of its tip, for `k = 0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSeries {
    pub integrand: String,
    pub exponent: Option<Exponent>,
    pub region: String,
    pub levels: Vec<u32>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
    /// Set when the integrand overflowed; the verdict is then divergent.
    pub overflow: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl IntegralSeries {
    /// Builds a series and classifies it.
    pub fn new(integrand: impl Into<String>, exponent: Option<Exponent>, region: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let verdict = classify_integrability(&values)?;
        let overflow = values.iter().any(|v| !v.is_finite());
        Ok(IntegralSeries {
            integrand: integrand.into(),
            exponent,
            region: region.into(),
            levels: (0..values.len() as u32).collect(),
            values,
            verdict,
            overflow,
            note: None,
        })
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("series has at least four levels")
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same series with every value raised to `1/P`, keeping the verdict of
    /// the underlying integral.
    pub fn root(mut self, p: f64) -> Self {
        for v in &mut self.values {
            *v = v.powf(1.0 / p);
        }
        self
    }
}

const MIN_LEVELS: usize = 4;

/// Increment-trend classifier.
///
/// Finite: the last three increments shrink with ratio below 0.9 (zero
/// increments count as converged) and the final increment is below
/// `10⁻⁴·I_K`. Divergent: the last three increments are non-decreasing,
/// positive at the end, and `I_K > 10·I_0`; any non-finite value is divergent.
pub fn classify_integrability(values: &[f64]) -> Result<Verdict> {
    if values.len() < MIN_LEVELS {
        return Err(Error::InsufficientData(format!(
            "classification needs at least {MIN_LEVELS} cutoff levels, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Ok(Verdict::Divergent);
    }
    let n = values.len();
    let last = values[n - 1];
    let d: Vec<f64> = values[n - 4..].windows(2).map(|w| w[1] - w[0]).collect();
    let shrinking = d.windows(2).all(|w| w[1] == 0.0 || (w[0] > 0.0 && w[1] < 0.9 * w[0]));
    if shrinking && d[2] <= 1e-4 * last.abs() {
        return Ok(Verdict::Finite);
    }
    let growing = d.windows(2).all(|w| w[1] >= w[0]);
    if growing && d[2] > 0.0 && last > 10.0 * values[0] {
        return Ok(Verdict::Divergent);
    }
    Ok(Verdict::Inconclusive)
}

fn located(err: Error, at: Point) -> Error {
    match err {
        Error::Evaluation { .. } | Error::Composition { .. } => err,
        other => Error::Evaluation { at, reason: other.to_string() },
    }
}

/// Cumulative level sums `I_0..=I_level` of `Σ f(cell)` over a graded mesh.
///
/// Cells are evaluated in parallel; summation is sequential and compensated,
/// so the result does not depend on the schedule.
pub fn cutoff_sums<F>(domain: &Domain, spec: &QuadratureSpec, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Cell) -> Result<f64> + Sync,
{
    let cells = graded_mesh(domain, spec)?;
    let terms: Vec<(u32, f64)> = cells
        .par_iter()
        .map(|c| {
            if c.area == 0.0 {
                return Ok((c.shell, 0.0));
            }
            f(c).map(|v| (c.shell, v)).map_err(|e| located(e, c.center))
        })
        .collect::<Result<_>>()?;
    let levels = spec.level as usize + 1;
    let mut shells = vec![CompensatedSum::new(); levels];
    for (shell, v) in terms {
        shells[(shell as usize).min(levels - 1)].add(v);
    }
    let mut acc = CompensatedSum::new();
    Ok(shells
        .iter()
        .map(|s| {
            acc.add(s.value());
            acc.value()
        })
        .collect())
}

fn finite_exponent(p: &Exponent) -> Result<f64> {
    match p {
        Exponent::Infinite => Err(Error::Domain(
            "p = ∞ has no integral; use the sampled essential sup estimate".into(),
        )),
        Exponent::Finite(r) if *r < One::one() => Err(Error::Domain(format!("integrability exponent must be ≥ 1, got {p}"))),
        _ => Ok(p.to_f64()),
    }
}

/// Cutoff series of `∫_region K^p`.
pub fn integrate_distortion(map: &dyn PlanarMap, region: &Domain, p: &Exponent, spec: &QuadratureSpec) -> Result<IntegralSeries> {
    let pf = finite_exponent(p)?;
    let values = cutoff_sums(region, spec, |c| Ok((pf * ln_distortion_at(map, c.center)? + c.area.ln()).exp()))?;
    IntegralSeries::new(format!("K^{p}"), Some(p.clone()), region.describe(), values)
}

/// Cutoff series of `∫_region exp(λK)`. Overflow near the tip is reported as
/// divergent with the overflow flag set.
pub fn exp_integrability(map: &dyn PlanarMap, region: &Domain, lambda: f64, spec: &QuadratureSpec) -> Result<IntegralSeries> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    let values = cutoff_sums(region, spec, |c| Ok((lambda * ln_distortion_at(map, c.center)?.exp()).exp() * c.area))?;
    IntegralSeries::new(format!("exp({lambda}·K)"), None, region.describe(), values)
}

/// Largest sampled `K` over the mesh: an estimate of the essential supremum.
pub fn distortion_sup(map: &dyn PlanarMap, region: &Domain, spec: &QuadratureSpec) -> Result<f64> {
    let cells = graded_mesh(region, spec)?;
    cells
        .par_iter()
        .map(|c| ln_distortion_at(map, c.center).map(f64::exp).map_err(|e| located(e, c.center)))
        .try_reduce(|| 1.0, |a, b| Ok(a.max(b)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdFamily {
    /// `Φ_s` on the cusp side `C_s`.
    AngularStretch,
    /// The vertical stretch of a power channel `|y| < x^s`.
    VerticalStretchPower,
}

/// Critical degree `s*(p) = (p+1)/(p−1)`: `∫ K^p < ∞` iff `s < s*`.
///
/// Both families have `K ≍ r^(1−s)` on a region of width `≍ r^s`, so the
/// integral behaves like `∫₀¹ r^(p(1−s)+s) dr`. For `p ≤ 1` every degree is
/// integrable and the threshold is `∞`.
pub fn closed_form_threshold(_family: ThresholdFamily, p: &Exponent) -> Exponent {
    match p {
        Exponent::Infinite => Exponent::integer(1),
        Exponent::Finite(r) => {
            if *r <= One::one() {
                return Exponent::Infinite;
            }
            let one: num_rational::BigRational = One::one();
            Exponent::Finite((r + &one) / (r - &one))
        }
    }
}

/// `∫₀¹ r^(p(1−s)+s) dr = 1/((1−s)p+s+1)`, or `∞` when the exponent is ≤ −1.
pub fn radial_profile_closed_form(s: f64, p: f64) -> f64 {
    let e = (1.0 - s) * p + s;
    if e <= -1.0 {
        f64::INFINITY
    } else {
        1.0 / (e + 1.0)
    }
}

/// `∫₀¹ K(r, 0)^p · r^s dr` along the symmetry axis of `C_s`, with `K` taken
/// from the map and Gauss-Legendre panels on dyadic shells down to the cutoff.
pub fn radial_profile_quadrature(phi: &AngularStretch, p: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let s = phi.degree();
    let panels = spec.n.max(4);
    let mut acc = CompensatedSum::new();
    for j in 0..spec.level {
        let hi = 0.5f64.powi(j as i32);
        let lo = hi * 0.5;
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            let b = a + h;
            for (x, w) in gauss5_nodes(a, b).into_iter().zip(gauss5_weights(a, b)) {
                let kx = distortion_at(phi, Point::new(x, 0.0))?;
                acc.add(w * kx.powf(p) * x.powf(s));
            }
        }
    }
    Ok(acc.value())
}

/// Whether an exponent pair is a borderline point of the distortion rule.
pub fn is_critical(s: &Exponent, p: &Exponent, family: ThresholdFamily) -> bool {
    let t = closed_form_threshold(family, p);
    match (s, &t) {
        (Exponent::Finite(a), Exponent::Finite(b)) => (a - b).is_zero(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::rat;
    use crate::maps::{CircleInversion, Identity};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn series_from_increments(start: f64, inc: &[f64]) -> Vec<f64> {
        let mut v = vec![start];
        for d in inc {
            v.push(v.last().unwrap() + d);
        }
        v
    }

    #[test]
    fn classifier_examples() {
        let geo = series_from_increments(1e4, &[1.0, 0.5, 0.25, 0.125]);
        assert_eq!(classify_integrability(&geo).unwrap(), Verdict::Finite);
        let lin = series_from_increments(0.01, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(classify_integrability(&lin).unwrap(), Verdict::Divergent);
        let slow = series_from_increments(1.0, &[1.0, 0.95, 0.93, 0.92]);
        assert_eq!(classify_integrability(&slow).unwrap(), Verdict::Inconclusive);
        assert!(matches!(classify_integrability(&[1.0, 2.0, 3.0]), Err(Error::InsufficientData(_))));
        assert_eq!(classify_integrability(&[1.0, 2.0, f64::INFINITY, f64::INFINITY]).unwrap(), Verdict::Divergent);
        assert_eq!(classify_integrability(&[3.0; 5]).unwrap(), Verdict::Finite);
    }

    #[test]
    fn identity_on_the_disk() {
        let s = integrate_distortion(&Identity, &Domain::UnitDisk, &Exponent::integer(5), &QuadratureSpec::new(64, 6)).unwrap();
        assert_eq!(s.verdict, Verdict::Finite);
        assert!((s.last() - PI).abs() < 1e-9);
        let e = exp_integrability(&Identity, &Domain::UnitDisk, 1.0, &QuadratureSpec::new(64, 6)).unwrap();
        assert_eq!(e.verdict, Verdict::Finite);
        assert!((e.last() - PI * 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn angular_stretch_on_its_cusp() {
        let phi = AngularStretch::new(2.0).unwrap();
        let cusp = Domain::polar_cusp_complement(2.0).unwrap();
        let spec = QuadratureSpec::new(64, 16);
        let fin = integrate_distortion(&phi, &cusp, &Exponent::integer(2), &spec).unwrap();
        assert_eq!(fin.verdict, Verdict::Finite);
        let div = integrate_distortion(&phi, &cusp, &Exponent::integer(4), &spec).unwrap();
        assert_eq!(div.verdict, Verdict::Divergent);
        let ex = exp_integrability(&phi, &cusp, 0.1, &spec).unwrap();
        assert_eq!(ex.verdict, Verdict::Divergent);
        assert!(distortion_sup(&phi, &cusp, &QuadratureSpec::new(32, 8)).unwrap() > 100.0);
    }

    #[test]
    fn inversion_on_annulus_is_exp_integrable() {
        let ann = Domain::annulus(0.5, 2.0);
        let e = exp_integrability(&CircleInversion, &ann, 3.0, &QuadratureSpec::new(64, 4)).unwrap();
        assert_eq!(e.verdict, Verdict::Finite);
        assert!((e.last() - 3f64.exp() * PI * 3.75).abs() < 1e-6 * e.last());
    }

    #[test]
    fn thresholds() {
        let f = ThresholdFamily::AngularStretch;
        assert_eq!(closed_form_threshold(f, &Exponent::integer(3)), Exponent::integer(2));
        assert_eq!(closed_form_threshold(f, &Exponent::integer(2)), Exponent::integer(3));
        assert_eq!(closed_form_threshold(f, &Exponent::Infinite), Exponent::integer(1));
        assert_eq!(closed_form_threshold(f, &Exponent::integer(1)), Exponent::Infinite);
        assert_eq!(closed_form_threshold(f, &Exponent::Finite(rat(3, 2))), Exponent::integer(5));
        assert!(is_critical(&Exponent::integer(3), &Exponent::integer(2), f));
    }

    #[test]
    fn radial_oracle() {
        assert!((radial_profile_closed_form(1.5, 2.0) - 2.0 / 3.0).abs() < 1e-15);
        let phi = AngularStretch::new(1.5).unwrap();
        let q = radial_profile_quadrature(&phi, 2.0, &QuadratureSpec::new(16, 40)).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 1e-3, "{q}");
    }

    #[test]
    fn series_is_deterministic() {
        let phi = AngularStretch::new(1.5).unwrap();
        let cusp = Domain::polar_cusp_complement(1.5).unwrap();
        let spec = QuadratureSpec::new(32, 10);
        let a = integrate_distortion(&phi, &cusp, &Exponent::integer(2), &spec).unwrap();
        let b = integrate_distortion(&phi, &cusp, &Exponent::integer(2), &spec).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn series_nondecreasing_and_monotone_in_p(s in 1.2f64..3.0, p1 in 1.0f64..3.0, dp in 0.0f64..2.0) {
            let phi = AngularStretch::new(s).unwrap();
            let cusp = Domain::polar_cusp_complement(s).unwrap();
            let spec = QuadratureSpec::new(16, 8);
            let e1 = Exponent::from_f64(p1).unwrap();
            let e2 = Exponent::from_f64(p1 + dp).unwrap();
            let a = integrate_distortion(&phi, &cusp, &e1, &spec).unwrap();
            let b = integrate_distortion(&phi, &cusp, &e2, &spec).unwrap();
            for w in a.values.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!(x <= y);
            }
        }
    }
}
