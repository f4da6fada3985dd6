//! Cusp profiles, planar domains and tip-graded quadrature meshes.
//!
//! Two families of cusps live here. The Cartesian ones follow the classical
//! inward/outward construction around a channel `{0 < x ≤ 1, |y| < ρ(x)}`.
//! The polar model cusp `Ω_s` removes the wedge `|θ| ≤ α(r)` with
//! `α(r) = (π/2)·r^(s−1)` from the unit disk; its in-disk complement `C_s` is
//! a cusp of degree `s` whose arc width at radius `r` is `π·r^s`.
//!
//! Every domain exposes a *chart*: an outer coordinate (radius for polar
//! charts, abscissa for Cartesian ones) and, for each value of it, the list of
//! inner intervals covered by the region. Meshes are built from that chart, so
//! membership and quadrature share one description of each region.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, gauss5_nodes, gauss5_weights};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point { x: r * c, y: r * s }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Polar angle in `(−π, π]`.
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Polar angle in `[0, 2π)`.
    pub fn angle_positive(self) -> f64 {
        let a = self.angle();
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Half-opening `α(r) = (π/2)·r^(s−1)` of the wedge removed by the model cusp.
pub fn model_cusp_half_angle(s: f64, r: f64) -> f64 {
    FRAC_PI_2 * r.powf(s - 1.0)
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied cusp width with its derivative.
#[derive(Clone)]
pub struct CustomProfile {
    pub name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
}

impl fmt::Debug for CustomProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomProfile").field("name", &self.name).finish()
    }
}

impl PartialEq for CustomProfile {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

/// Cuspidal width function `ρ` with `ρ(0) = 0`, `ρ(1) = 1` and `ρ'(0⁺) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum CuspProfile {
    /// `ρ(x) = x^s`, `s > 1`.
    Power { degree: f64 },
    /// `ρ(x) = e·exp(−1/x)`.
    Exponential,
    Custom(CustomProfile),
}

impl CuspProfile {
    pub fn power(degree: f64) -> Result<Self> {
        if !(degree > 1.0 && degree.is_finite()) {
            return Err(Error::Domain(format!("power profile needs degree s > 1, got {degree}")));
        }
        Ok(CuspProfile::Power { degree })
    }

    pub fn exponential() -> Self {
        CuspProfile::Exponential
    }

    /// Wraps a user profile after checking the cuspidal invariants on a sample grid.
    pub fn custom<F, G>(name: impl Into<String>, eval: F, deriv: G) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let name = name.into();
        if (eval(1.0) - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("profile {name}: ρ(1) must equal 1")));
        }
        let mut prev = 0.0;
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            let v = eval(x);
            if !(v > prev) || !(deriv(x) >= 0.0) {
                return Err(Error::Domain(format!(
                    "profile {name}: not strictly increasing near x = {x}"
                )));
            }
            prev = v;
        }
        Ok(CuspProfile::Custom(CustomProfile { name, eval: Arc::new(eval), deriv: Arc::new(deriv) }))
    }

    pub fn name(&self) -> String {
        match self {
            CuspProfile::Power { degree } => format!("power({degree})"),
            CuspProfile::Exponential => "exp".to_string(),
            CuspProfile::Custom(c) => c.name.clone(),
        }
    }

    /// Checked evaluation: `x ≤ 0` is rejected.
    pub fn width(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("profile width needs x > 0, got {x}")));
        }
        Ok(self.value(x))
    }

    /// `ρ(x)`, extended by `ρ(x) = 0` for `x ≤ 0`.
    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            CuspProfile::Power { degree } => x.powf(*degree),
            CuspProfile::Exponential => (1.0 - 1.0 / x).exp(),
            CuspProfile::Custom(c) => (c.eval)(x),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            CuspProfile::Power { degree } => degree * x.powf(degree - 1.0),
            CuspProfile::Exponential => (1.0 - 1.0 / x).exp() / (x * x),
            CuspProfile::Custom(c) => (c.deriv)(x),
        }
    }

    /// `ln ρ(x)`, finite even where `ρ(x)` underflows.
    pub fn ln_value(&self, x: f64) -> f64 {
        match self {
            CuspProfile::Power { degree } => degree * x.ln(),
            CuspProfile::Exponential => 1.0 - 1.0 / x,
            CuspProfile::Custom(c) => (c.eval)(x).ln(),
        }
    }

    /// `ρ(x)/x` evaluated without forming `ρ(x)` first where possible.
    pub fn slope_ratio(&self, x: f64) -> f64 {
        match self {
            CuspProfile::Power { degree } => x.powf(degree - 1.0),
            _ => (self.ln_value(x) - x.ln()).exp(),
        }
    }

    /// Exponent `w` with channel width `≍ x^w` at the tip, if polynomial.
    pub fn tip_power(&self) -> Option<f64> {
        match self {
            CuspProfile::Power { degree } => Some(*degree),
            _ => None,
        }
    }
}

/// Where a point sits relative to a region. Boundary points count as outside
/// for [`Domain::contains`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Behaviour of a region's area near the origin, used by symbolic
/// integrability rules for radial singularities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginWeight {
    /// The origin is not in the closure.
    Absent,
    /// `|D ∩ {t < |z| < t + dt}| ≍ t^w dt` as `t → 0`.
    Power(f64),
    /// Area near the origin vanishes faster than any power.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    UnitDisk,
    Ball { radius: f64 },
    /// `{|z| < radius, start < θ < end}` with `end − start ≤ 2π`.
    Sector { radius: f64, start: f64, end: f64 },
    /// `B(0,1) ∖ {(x, y) ∈ [0,1]×ℝ : |y| < ρ(x)}`.
    CartesianInwardCusp(CuspProfile),
    /// `B((2,0), √2) ∪ {(x, y) ∈ (0,1]×ℝ : |y| < ρ(x)}`.
    CartesianOutwardCusp(CuspProfile),
    /// The bare channel `{0 < x ≤ 1, |y| < ρ(x)}`.
    CuspChannel(CuspProfile),
    /// `{0 < r < 1, α(r) < θ < 2π − α(r)}`.
    PolarModelCusp { s: f64 },
    /// `B(0, radius) ∖ closure(inner)`.
    ComplementInBall { inner: Box<Domain>, radius: f64 },
    /// `B(0, radius) ∩ inner`.
    IntersectBall { inner: Box<Domain>, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Polar,
    Cartesian,
}

impl Domain {
    pub fn polar_cusp(s: f64) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::Domain(format!("model cusp degree must exceed 1, got {s}")));
        }
        Ok(Domain::PolarModelCusp { s })
    }

    /// The in-disk complement `C_s = {|θ| ≤ α(r)}` of the model cusp domain.
    pub fn polar_cusp_complement(s: f64) -> Result<Self> {
        Ok(Domain::ComplementInBall { inner: Box::new(Domain::polar_cusp(s)?), radius: 1.0 })
    }

    pub fn ball(radius: f64) -> Self {
        Domain::Ball { radius }
    }

    pub fn annulus(inner_radius: f64, outer_radius: f64) -> Self {
        Domain::ComplementInBall { inner: Box::new(Domain::Ball { radius: inner_radius }), radius: outer_radius }
    }

    /// Half-disk `{|z| < radius, |θ| < π/2}`.
    pub fn right_half_disk(radius: f64) -> Self {
        Domain::Sector { radius, start: -FRAC_PI_2, end: FRAC_PI_2 }
    }

    pub fn left_half_disk(radius: f64) -> Self {
        Domain::Sector { radius, start: FRAC_PI_2, end: 3.0 * FRAC_PI_2 }
    }

    pub fn within_ball(self, radius: f64) -> Self {
        Domain::IntersectBall { inner: Box::new(self), radius }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::UnitDisk => "unit-disk".into(),
            Domain::Ball { radius } => format!("ball(R={radius})"),
            Domain::Sector { radius, start, end } => format!("sector(R={radius}, {start}..{end})"),
            Domain::CartesianInwardCusp(p) => format!("inward-cusp({})", p.name()),
            Domain::CartesianOutwardCusp(p) => format!("outward-cusp({})", p.name()),
            Domain::CuspChannel(p) => format!("cusp-channel({})", p.name()),
            Domain::PolarModelCusp { s } => format!("polar-cusp(s={s})"),
            Domain::ComplementInBall { inner, radius } => {
                format!("ball(R={radius}) minus {}", inner.describe())
            }
            Domain::IntersectBall { inner, radius } => {
                format!("{} within ball(R={radius})", inner.describe())
            }
        }
    }

    pub fn location(&self, z: Point) -> Location {
        match self {
            Domain::UnitDisk => radial_location(z.norm(), 1.0),
            Domain::Ball { radius } => radial_location(z.norm(), *radius),
            Domain::Sector { radius, start, end } => {
                let r = z.norm();
                let radial = radial_location(r, *radius);
                if radial == Location::Outside {
                    return Location::Outside;
                }
                if r == 0.0 {
                    return Location::Boundary;
                }
                let width = end - start;
                if width >= TAU {
                    return radial;
                }
                let rel = (z.angle() - start).rem_euclid(TAU);
                if rel > 0.0 && rel < width {
                    radial
                } else if rel == 0.0 || rel == width {
                    Location::Boundary
                } else {
                    Location::Outside
                }
            }
            Domain::CartesianInwardCusp(rho) => {
                let disk = radial_location(z.norm(), 1.0);
                if disk == Location::Outside {
                    return Location::Outside;
                }
                match channel_location(rho, z, 0.0, 1.0) {
                    Location::Inside => Location::Outside,
                    Location::Boundary => Location::Boundary,
                    Location::Outside => disk,
                }
            }
            Domain::CartesianOutwardCusp(rho) => {
                let ball = radial_location(z.distance(Point::new(2.0, 0.0)), SQRT_2);
                let channel = channel_location(rho, z, 0.0, 1.0);
                union_location(ball, channel)
            }
            Domain::CuspChannel(rho) => channel_location(rho, z, 0.0, 1.0),
            Domain::PolarModelCusp { s } => {
                let r = z.norm();
                let disk = radial_location(r, 1.0);
                if disk == Location::Outside {
                    return Location::Outside;
                }
                if r == 0.0 {
                    return Location::Boundary;
                }
                let a = model_cusp_half_angle(*s, r);
                let t = z.angle().abs();
                if t > a {
                    disk
                } else if t == a {
                    Location::Boundary
                } else {
                    Location::Outside
                }
            }
            Domain::ComplementInBall { inner, radius } => {
                let ball = radial_location(z.norm(), *radius);
                if ball == Location::Outside {
                    return Location::Outside;
                }
                match inner.location(z) {
                    Location::Inside => Location::Outside,
                    Location::Boundary => Location::Boundary,
                    Location::Outside => ball,
                }
            }
            Domain::IntersectBall { inner, radius } => {
                let ball = radial_location(z.norm(), *radius);
                intersect_location(ball, inner.location(z))
            }
        }
    }

    /// Open-set membership; boundary points are outside.
    pub fn contains(&self, z: Point) -> bool {
        z.is_finite() && self.location(z) == Location::Inside
    }

    /// Cusp tip, i.e. the point the graded meshes refine toward.
    pub fn tip(&self) -> Option<Point> {
        match self {
            Domain::UnitDisk | Domain::Ball { .. } => None,
            Domain::Sector { .. }
            | Domain::CartesianInwardCusp(_)
            | Domain::CartesianOutwardCusp(_)
            | Domain::CuspChannel(_)
            | Domain::PolarModelCusp { .. } => Some(Point::ORIGIN),
            Domain::ComplementInBall { inner, radius } => {
                inner.tip().filter(|t| t.norm() < *radius)
            }
            Domain::IntersectBall { inner, radius } => inner.tip().filter(|t| t.norm() < *radius),
        }
    }

    /// Closed-form area when one is available.
    pub fn area(&self) -> Option<f64> {
        match self {
            Domain::UnitDisk => Some(PI),
            Domain::Ball { radius } => Some(PI * radius * radius),
            Domain::Sector { radius, start, end } => Some(0.5 * radius * radius * (end - start)),
            Domain::PolarModelCusp { s } => Some(PI - PI / (s + 1.0)),
            Domain::CuspChannel(CuspProfile::Power { degree }) => Some(2.0 / (degree + 1.0)),
            Domain::CuspChannel(CuspProfile::Exponential) => None,
            Domain::ComplementInBall { inner, radius } => {
                let ball = PI * radius * radius;
                match inner.as_ref() {
                    Domain::PolarModelCusp { s } if *radius <= 1.0 => {
                        Some(PI * radius.powf(s + 1.0) / (s + 1.0))
                    }
                    Domain::PolarModelCusp { .. } | Domain::UnitDisk | Domain::Ball { .. } => {
                        let inner_r = match inner.as_ref() {
                            Domain::UnitDisk | Domain::PolarModelCusp { .. } => 1.0,
                            Domain::Ball { radius } => *radius,
                            _ => unreachable!(),
                        };
                        if inner_r >= *radius {
                            Some(0.0)
                        } else {
                            Some(ball - inner.area()?)
                        }
                    }
                    _ => None,
                }
            }
            Domain::IntersectBall { inner, radius } => match inner.as_ref() {
                Domain::PolarModelCusp { s } if *radius <= 1.0 => {
                    let r2 = radius * radius;
                    Some(PI * r2 - PI * radius.powf(s + 1.0) / (s + 1.0))
                }
                Domain::ComplementInBall { inner: core, radius: outer } if *radius <= *outer && *outer <= 1.0 => {
                    match core.as_ref() {
                        Domain::PolarModelCusp { s } => Some(PI * radius.powf(s + 1.0) / (s + 1.0)),
                        _ => None,
                    }
                }
                _ => None,
            },
            _ => None,
        }
    }

    /// Diameter of a ball-like domain.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            Domain::UnitDisk => Some(2.0),
            Domain::Ball { radius } => Some(2.0 * radius),
            _ => None,
        }
    }

    /// Area weight of the region at the origin.
    pub fn origin_weight(&self) -> Option<OriginWeight> {
        match self {
            Domain::UnitDisk
            | Domain::Ball { .. }
            | Domain::Sector { .. }
            | Domain::PolarModelCusp { .. }
            | Domain::CartesianInwardCusp(_) => Some(OriginWeight::Power(1.0)),
            Domain::CuspChannel(p) | Domain::CartesianOutwardCusp(p) => Some(channel_weight(p)),
            Domain::ComplementInBall { inner, .. } => match inner.as_ref() {
                Domain::PolarModelCusp { s } => Some(OriginWeight::Power(*s)),
                Domain::CartesianInwardCusp(p) => Some(channel_weight(p)),
                Domain::UnitDisk | Domain::Ball { .. } => Some(OriginWeight::Absent),
                _ => None,
            },
            Domain::IntersectBall { inner, .. } => inner.origin_weight(),
        }
    }

    /// Chart used for meshing.
    pub fn chart(&self) -> Chart {
        match self {
            Domain::CuspChannel(_) | Domain::CartesianOutwardCusp(_) => Chart::Cartesian,
            Domain::ComplementInBall { inner, .. } | Domain::IntersectBall { inner, .. } => inner.chart(),
            _ => Chart::Polar,
        }
    }

    /// Range of the outer chart coordinate.
    fn outer_range(&self) -> (f64, f64) {
        match self {
            Domain::UnitDisk | Domain::PolarModelCusp { .. } | Domain::CartesianInwardCusp(_) => (0.0, 1.0),
            Domain::Ball { radius } | Domain::Sector { radius, .. } => (0.0, *radius),
            Domain::CuspChannel(_) => (0.0, 1.0),
            Domain::CartesianOutwardCusp(_) => (0.0, 2.0 + SQRT_2),
            Domain::ComplementInBall { inner, radius } => match inner.chart() {
                Chart::Polar => (0.0, *radius),
                Chart::Cartesian => (-radius, *radius),
            },
            Domain::IntersectBall { inner, radius } => {
                let (lo, hi) = inner.outer_range();
                match inner.chart() {
                    Chart::Polar => (lo, hi.min(*radius)),
                    Chart::Cartesian => (lo.max(-radius), hi.min(*radius)),
                }
            }
        }
    }

    /// Outer-coordinate values where the interval structure changes.
    fn breaks(&self) -> Vec<f64> {
        match self {
            Domain::CartesianOutwardCusp(_) => vec![2.0 - SQRT_2, 1.0],
            Domain::ComplementInBall { inner, .. } | Domain::IntersectBall { inner, .. } => {
                let (lo, hi) = inner.outer_range();
                let mut b = inner.breaks();
                b.push(lo);
                b.push(hi);
                b
            }
            _ => Vec::new(),
        }
    }

    /// Inner intervals at outer coordinate `t` (angles for polar charts,
    /// ordinates for Cartesian ones).
    fn intervals(&self, t: f64) -> Vec<(f64, f64)> {
        match self {
            Domain::UnitDisk => full_circle_below(t, 1.0),
            Domain::Ball { radius } => full_circle_below(t, *radius),
            Domain::Sector { radius, start, end } => {
                if t < *radius {
                    vec![(*start, *end)]
                } else {
                    Vec::new()
                }
            }
            Domain::PolarModelCusp { s } => {
                if t <= 0.0 || t >= 1.0 {
                    return Vec::new();
                }
                let a = model_cusp_half_angle(*s, t);
                vec![(a, TAU - a)]
            }
            Domain::CartesianInwardCusp(rho) => {
                if t <= 0.0 || t >= 1.0 {
                    return Vec::new();
                }
                let b = channel_edge_angle(rho, t);
                vec![(b, TAU - b)]
            }
            Domain::CuspChannel(rho) => {
                if t <= 0.0 || t > 1.0 {
                    return Vec::new();
                }
                let h = rho.value(t);
                if h > 0.0 {
                    vec![(-h, h)]
                } else {
                    Vec::new()
                }
            }
            Domain::CartesianOutwardCusp(rho) => {
                let mut h: f64 = 0.0;
                if t > 0.0 && t <= 1.0 {
                    h = rho.value(t);
                }
                let dx = t - 2.0;
                let ball2 = 2.0 - dx * dx;
                if ball2 > 0.0 {
                    h = h.max(ball2.sqrt());
                }
                if h > 0.0 {
                    vec![(-h, h)]
                } else {
                    Vec::new()
                }
            }
            Domain::ComplementInBall { inner, radius } => match inner.chart() {
                Chart::Polar => {
                    if t >= *radius {
                        return Vec::new();
                    }
                    circle_complement(&inner.intervals(t))
                }
                Chart::Cartesian => {
                    let h2 = radius * radius - t * t;
                    if h2 <= 0.0 {
                        return Vec::new();
                    }
                    let h = h2.sqrt();
                    line_complement(&inner.intervals(t), -h, h)
                }
            },
            Domain::IntersectBall { inner, radius } => match inner.chart() {
                Chart::Polar => {
                    if t >= *radius {
                        Vec::new()
                    } else {
                        inner.intervals(t)
                    }
                }
                Chart::Cartesian => {
                    let h2 = radius * radius - t * t;
                    if h2 <= 0.0 {
                        return Vec::new();
                    }
                    let h = h2.sqrt();
                    inner
                        .intervals(t)
                        .into_iter()
                        .filter_map(|(a, b)| {
                            let (a, b) = (a.max(-h), b.min(h));
                            (b > a).then_some((a, b))
                        })
                        .collect()
                }
            },
        }
    }
}

fn channel_weight(p: &CuspProfile) -> OriginWeight {
    match p.tip_power() {
        Some(s) => OriginWeight::Power(s),
        None => OriginWeight::Flat,
    }
}

fn radial_location(r: f64, radius: f64) -> Location {
    if r < radius {
        Location::Inside
    } else if r == radius {
        Location::Boundary
    } else {
        Location::Outside
    }
}

fn channel_location(rho: &CuspProfile, z: Point, x_lo: f64, x_hi: f64) -> Location {
    if z.x < x_lo || z.x > x_hi {
        return Location::Outside;
    }
    let h = rho.value(z.x);
    let ay = z.y.abs();
    if z.x == x_lo || z.x == x_hi {
        return if ay <= h { Location::Boundary } else { Location::Outside };
    }
    if ay < h {
        Location::Inside
    } else if ay == h {
        Location::Boundary
    } else {
        Location::Outside
    }
}

fn union_location(a: Location, b: Location) -> Location {
    match (a, b) {
        (Location::Inside, _) | (_, Location::Inside) => Location::Inside,
        (Location::Boundary, _) | (_, Location::Boundary) => Location::Boundary,
        _ => Location::Outside,
    }
}

fn intersect_location(a: Location, b: Location) -> Location {
    match (a, b) {
        (Location::Outside, _) | (_, Location::Outside) => Location::Outside,
        (Location::Boundary, _) | (_, Location::Boundary) => Location::Boundary,
        _ => Location::Inside,
    }
}

fn full_circle_below(t: f64, radius: f64) -> Vec<(f64, f64)> {
    if t < radius {
        vec![(0.0, TAU)]
    } else {
        Vec::new()
    }
}

/// Angle `β(r) ∈ (0, π/2)` where the circle of radius `r` meets `|y| = ρ(x)`.
fn channel_edge_angle(rho: &CuspProfile, r: f64) -> f64 {
    bisect(|t| r * t.sin() - rho.value(r * t.cos()), 0.0, FRAC_PI_2)
}

/// Gaps of a set of angular intervals on the circle, as a list of intervals.
fn circle_complement(covered: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if covered.is_empty() {
        return vec![(0.0, TAU)];
    }
    let mut iv: Vec<(f64, f64)> = covered.to_vec();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let origin = iv[0].0;
    let mut gaps = Vec::new();
    let mut cursor = iv[0].1;
    for &(a, b) in &iv[1..] {
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = cursor.max(b);
    }
    if origin + TAU > cursor {
        gaps.push((cursor, origin + TAU));
    }
    gaps
}

fn line_complement(covered: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut iv: Vec<(f64, f64)> = covered.to_vec();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut cursor = lo;
    for (a, b) in iv {
        let a = a.clamp(lo, hi);
        if a > cursor {
            gaps.push((cursor, a));
        }
        cursor = cursor.max(b.min(hi));
    }
    if hi > cursor {
        gaps.push((cursor, hi));
    }
    gaps
}

/// Resolution of a tip-graded midpoint mesh.
///
/// Level `k` keeps everything at distance `≥ ε_k = 2^(−k)` from the tip,
/// organised in dyadic shells: shell 0 is the part at distance `≥ 1`,
/// shell `j ≥ 1` the part at distance in `[2^(−j), 2^(1−j))`. Domains without
/// a tip ignore the level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Base resolution per axis.
    pub n: usize,
    /// Upper bound on cell diameter relative to the distance to the tip.
    pub grading: f64,
    pub level: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { n: 64, grading: 0.25, level: 16 }
    }
}

impl QuadratureSpec {
    pub fn new(n: usize, level: u32) -> Self {
        QuadratureSpec { n, level, ..Default::default() }
    }

    pub fn with_level(self, level: u32) -> Self {
        QuadratureSpec { level, ..self }
    }

    pub fn cutoff(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("mesh resolution n must be at least 2, got {}", self.n)));
        }
        if !(self.grading > 0.0 && self.grading <= 2.0) {
            return Err(Error::Config(format!("grading must lie in (0, 2], got {}", self.grading)));
        }
        if self.level > 200 {
            return Err(Error::Config(format!("refinement level {} is too deep", self.level)));
        }
        Ok(())
    }

    fn shell_rows(&self) -> usize {
        self.n.div_ceil(4).max((SQRT_2 / self.grading).ceil() as usize).max(2)
    }
}

/// A midpoint-rule cell: sample point, exact area, size and shell index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub center: Point,
    pub area: f64,
    pub diameter: f64,
    pub shell: u32,
}

struct Segment {
    lo: f64,
    hi: f64,
    shell: u32,
    rows: usize,
    dist_lo: f64,
}

/// Tip-graded midpoint mesh of `domain` at `spec.level`.
pub fn graded_mesh(domain: &Domain, spec: &QuadratureSpec) -> Result<Vec<Cell>> {
    spec.validate()?;
    let chart = domain.chart();
    let (lo, hi) = domain.outer_range();
    if !(hi > lo) {
        return Ok(Vec::new());
    }
    let tip = domain.tip().map(|p| match chart {
        Chart::Polar => 0.0,
        Chart::Cartesian => p.x,
    });
    let segments = outer_segments(domain, spec, lo, hi, tip);
    let mut cells = Vec::new();
    for seg in segments {
        let dt = (seg.hi - seg.lo) / seg.rows as f64;
        for row in 0..seg.rows {
            let t0 = seg.lo + row as f64 * dt;
            let t1 = if row + 1 == seg.rows { seg.hi } else { t0 + dt };
            push_row(domain, chart, spec, &seg, t0, t1, tip.is_some(), &mut cells);
        }
    }
    Ok(cells)
}

fn outer_segments(domain: &Domain, spec: &QuadratureSpec, lo: f64, hi: f64, tip: Option<f64>) -> Vec<Segment> {
    let mut cuts: Vec<f64> = vec![lo, hi];
    cuts.extend(domain.breaks().into_iter().filter(|b| *b > lo && *b < hi));
    if let Some(t0) = tip {
        for j in 0..=spec.level {
            let d = 0.5f64.powi(j as i32);
            for c in [t0 - d, t0 + d] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let total = hi - lo;
    let shell_rows = spec.shell_rows();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        match tip {
            None => {
                let rows = ((spec.n as f64) * (b - a) / total).ceil().max(1.0) as usize;
                out.push(Segment { lo: a, hi: b, shell: 0, rows, dist_lo: f64::INFINITY });
            }
            Some(t0) => {
                let mid = 0.5 * (a + b);
                let d = (mid - t0).abs();
                let dist_lo = (a - t0).abs().min((b - t0).abs());
                let (shell, scale) = if d >= 1.0 {
                    (0u32, 1.0)
                } else {
                    let j = (-d.log2()).floor() as u32 + 1;
                    (j, 0.5f64.powi(j as i32))
                };
                if shell > spec.level {
                    continue;
                }
                let rows = ((shell_rows as f64) * (b - a) / scale).ceil().max(1.0) as usize;
                out.push(Segment { lo: a, hi: b, shell, rows, dist_lo });
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn push_row(
    domain: &Domain,
    chart: Chart,
    spec: &QuadratureSpec,
    seg: &Segment,
    t0: f64,
    t1: f64,
    graded: bool,
    cells: &mut Vec<Cell>,
) {
    let tm = 0.5 * (t0 + t1);
    let mid_iv = domain.intervals(tm);
    if mid_iv.is_empty() {
        return;
    }
    let nodes = gauss5_nodes(t0, t1);
    let weights = gauss5_weights(t0, t1);
    let node_iv: Vec<Vec<(f64, f64)>> = nodes.iter().map(|&t| domain.intervals(t)).collect();
    let consistent = node_iv.iter().all(|v| v.len() == mid_iv.len());
    let jac = |t: f64| match chart {
        Chart::Polar => t,
        Chart::Cartesian => 1.0,
    };
    let dist_lo = if graded { seg.dist_lo.max(t0.abs().min(t1.abs())) } else { f64::INFINITY };

    for (idx, &(a, b)) in mid_iv.iter().enumerate() {
        let len = b - a;
        if !(len > 0.0) {
            continue;
        }
        let phys_len = jac(t1) * len;
        let mut m = spec.n;
        if graded && dist_lo.is_finite() && dist_lo > 0.0 {
            let need = (SQRT_2 * phys_len / (spec.grading * dist_lo)).ceil();
            if need.is_finite() {
                m = m.max(need as usize);
            }
        }
        let strip_area = if consistent {
            nodes
                .iter()
                .zip(weights)
                .zip(&node_iv)
                .map(|((&t, w), iv)| w * jac(t) * (iv[idx].1 - iv[idx].0))
                .sum::<f64>()
        } else {
            jac(tm) * len * (t1 - t0)
        };
        let area = strip_area / m as f64;
        let dinner = len / m as f64;
        let diameter = (t1 - t0).hypot(jac(t1) * dinner);
        for k in 0..m {
            let u = a + (k as f64 + 0.5) * dinner;
            let center = match chart {
                Chart::Polar => Point::from_polar(tm, u),
                Chart::Cartesian => Point::new(tm, u),
            };
            cells.push(Cell { center, area, diameter, shell: seg.shell });
        }
    }
}
