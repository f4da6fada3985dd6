//! Planar maps with analytic Jacobians and the optimal distortion quotient.
//!
//! Built-ins: identity, rotations, circle inversion, the reflection in the
//! vertical diameter, the angular cusp stretch `Φ_s` and the vertical cusp
//! stretch. Maps compose with chain-rule Jacobians; user maps get a damped
//! Newton inverse.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{model_cusp_half_angle, CuspProfile, Point};

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn rotation(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn diag(x: f64, y: f64) -> Self {
        Mat2::new(x, 0.0, 0.0, y)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Singular values `(σ1, σ2)` with `σ1 ≥ σ2`, via the conformal and
    /// anticonformal parts so that near-conformal matrices do not cancel.
    pub fn singular_values(&self) -> (f64, f64) {
        let p = (self.a + self.d).hypot(self.c - self.b);
        let q = (self.a - self.d).hypot(self.c + self.b);
        (0.5 * (p + q), 0.5 * (p - q).abs())
    }

    /// Squared operator norm `|A|²`.
    pub fn operator_norm_sqr(&self) -> f64 {
        let (s1, _) = self.singular_values();
        s1 * s1
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

/// Optimal distortion `|A|²/|det A|`, and 1 where the determinant vanishes.
///
/// The absolute value makes the quotient meaningful for sense-reversing maps:
/// an anticonformal Jacobian has distortion exactly 1.
pub fn distortion_quotient(m: &Mat2) -> f64 {
    let (s1, s2) = m.singular_values();
    if s2 == 0.0 || m.det() == 0.0 {
        return 1.0;
    }
    (s1 / s2).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Preserving,
    Reversing,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Preserving => 1.0,
            Orientation::Reversing => -1.0,
        }
    }

    pub fn compose(self, other: Orientation) -> Orientation {
        if self == other {
            Orientation::Preserving
        } else {
            Orientation::Reversing
        }
    }
}

pub trait PlanarMap: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    /// Whether `z` lies in the closed validity region.
    fn accepts(&self, z: Point) -> bool;

    fn eval(&self, z: Point) -> Result<Point>;

    fn inverse(&self, w: Point) -> Result<Point>;

    fn jacobian(&self, z: Point) -> Result<Mat2>;

    fn orientation(&self) -> Orientation;

    /// Points where the map or its Jacobian is undefined.
    fn singular_points(&self) -> Vec<Point> {
        Vec::new()
    }

    fn det(&self, z: Point) -> Result<f64> {
        Ok(self.jacobian(z)?.det())
    }

    /// `ln K(z)`. Maps whose distortion can leave the `f64` range override this.
    fn ln_distortion(&self, z: Point) -> Result<f64> {
        let j = self.jacobian(z)?;
        if !j.is_finite() {
            return Err(Error::Evaluation { at: z, reason: format!("non-finite Jacobian of {}", self.name()) });
        }
        Ok(distortion_quotient(&j).ln())
    }
}

/// Pointwise optimal distortion `K(z)` of `map`.
pub fn distortion_at(map: &dyn PlanarMap, z: Point) -> Result<f64> {
    if !map.accepts(z) {
        return Err(Error::Domain(format!("{} is outside the validity region of {}", z, map.name())));
    }
    let j = map.jacobian(z)?;
    if !j.is_finite() {
        return Err(Error::Evaluation { at: z, reason: format!("non-finite Jacobian of {}", map.name()) });
    }
    Ok(distortion_quotient(&j))
}

/// `ln K(z)`, finite wherever the distortion is, even beyond `f64::MAX`.
pub fn ln_distortion_at(map: &dyn PlanarMap, z: Point) -> Result<f64> {
    if !map.accepts(z) {
        return Err(Error::Domain(format!("{} is outside the validity region of {}", z, map.name())));
    }
    map.ln_distortion(z)
}

fn outside(map: &str, z: Point) -> Error {
    Error::Domain(format!("{z} is outside the validity region of {map}"))
}

/// A point of the extended plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtPoint {
    Finite(Point),
    Infinity,
}

/// `z ↦ z/|z|²` on the extended plane, exchanging `0` and `∞`.
pub fn circle_inversion(z: ExtPoint) -> ExtPoint {
    match z {
        ExtPoint::Infinity => ExtPoint::Finite(Point::ORIGIN),
        ExtPoint::Finite(p) => {
            let n2 = p.norm_sqr();
            if n2 == 0.0 {
                ExtPoint::Infinity
            } else {
                ExtPoint::Finite(Point::new(p.x / n2, p.y / n2))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl PlanarMap for Identity {
    fn name(&self) -> String {
        "identity".into()
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite()
    }
    fn eval(&self, z: Point) -> Result<Point> {
        Ok(z)
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        Ok(w)
    }
    fn jacobian(&self, _z: Point) -> Result<Mat2> {
        Ok(Mat2::IDENTITY)
    }
    fn orientation(&self) -> Orientation {
        Orientation::Preserving
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub angle: f64,
}

impl PlanarMap for Rotation {
    fn name(&self) -> String {
        format!("rotation({})", self.angle)
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite()
    }
    fn eval(&self, z: Point) -> Result<Point> {
        let [x, y] = Mat2::rotation(self.angle).apply([z.x, z.y]);
        Ok(Point::new(x, y))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        let [x, y] = Mat2::rotation(-self.angle).apply([w.x, w.y]);
        Ok(Point::new(x, y))
    }
    fn jacobian(&self, _z: Point) -> Result<Mat2> {
        Ok(Mat2::rotation(self.angle))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Preserving
    }
}

/// `z ↦ z/|z|²` on the punctured plane.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleInversion;

impl PlanarMap for CircleInversion {
    fn name(&self) -> String {
        "inversion".into()
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite() && z.norm_sqr() > 0.0
    }
    fn eval(&self, z: Point) -> Result<Point> {
        match circle_inversion(ExtPoint::Finite(z)) {
            ExtPoint::Finite(p) if p.is_finite() => Ok(p),
            _ => Err(outside("inversion", z)),
        }
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        self.eval(w)
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        let n2 = z.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::Evaluation { at: z, reason: "inversion is singular at the origin".into() });
        }
        let n4 = n2 * n2;
        Ok(Mat2::new(
            (z.y * z.y - z.x * z.x) / n4,
            -2.0 * z.x * z.y / n4,
            -2.0 * z.x * z.y / n4,
            (z.x * z.x - z.y * z.y) / n4,
        ))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Reversing
    }
    fn singular_points(&self) -> Vec<Point> {
        vec![Point::ORIGIN]
    }
}

/// Reflection in the vertical diameter, `(x, y) ↦ (−x, y)`, i.e. `θ ↦ π − θ`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiameterReflection;

impl PlanarMap for DiameterReflection {
    fn name(&self) -> String {
        "diameter-reflection".into()
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite()
    }
    fn eval(&self, z: Point) -> Result<Point> {
        Ok(Point::new(-z.x, z.y))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        self.eval(w)
    }
    fn jacobian(&self, _z: Point) -> Result<Mat2> {
        Ok(Mat2::diag(-1.0, 1.0))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Reversing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

const DISK_SLACK: f64 = 1e-12;

/// The angular cusp stretch `Φ_s` of the closed unit disk.
///
/// Radii are preserved. The cusp wedge `|θ| ≤ α(r)` is opened linearly onto
/// the right half-disk, `Θ = θ·(π/2)/α(r)`, and the model cusp domain onto the
/// left half-disk, `Θ = π + (θ − π)·(π/2)/(π − α(r))`. On the unit circle
/// `α = π/2` and both branches are the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularStretch {
    s: f64,
}

/// Which side of the model cusp interface a polar angle sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CuspSide {
    /// `|θ| ≤ α(r)`: the cusp `C_s`.
    Cusp,
    /// `α(r) < θ < 2π − α(r)`: the domain `Ω_s`.
    Domain,
}

impl AngularStretch {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 1.0 && s.is_finite()) {
            return Err(Error::Domain(format!("angular stretch needs s > 1, got {s}")));
        }
        Ok(AngularStretch { s })
    }

    pub fn degree(&self) -> f64 {
        self.s
    }

    pub fn half_angle(&self, r: f64) -> f64 {
        model_cusp_half_angle(self.s, r)
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        if !(r >= 0.0) || r > 1.0 + DISK_SLACK || !r.is_finite() {
            return Err(Error::Domain(format!("angular stretch is defined on the closed unit disk, got r = {r}")));
        }
        Ok(())
    }

    /// Side of the interface for a source-plane polar angle.
    pub fn side(&self, r: f64, theta: f64) -> CuspSide {
        let t = wrap_pi(theta);
        if t.abs() <= self.half_angle(r) {
            CuspSide::Cusp
        } else {
            CuspSide::Domain
        }
    }

    /// Forward map on polar coordinates `(r, θ) ↦ (r, Θ)`.
    pub fn forward_polar(&self, r: f64, theta: f64) -> Result<(f64, f64)> {
        self.check_radius(r)?;
        if r == 0.0 {
            return Ok((0.0, 0.0));
        }
        let a = self.half_angle(r);
        let t = wrap_pi(theta);
        if t.abs() <= a {
            Ok((r, t * FRAC_PI_2 / a))
        } else {
            let tp = t.rem_euclid(TAU);
            Ok((r, PI + (tp - PI) * FRAC_PI_2 / (PI - a)))
        }
    }

    /// Exact inverse on polar coordinates.
    pub fn inverse_polar(&self, r: f64, big_theta: f64) -> Result<(f64, f64)> {
        self.check_radius(r)?;
        if r == 0.0 {
            return Ok((0.0, 0.0));
        }
        let a = self.half_angle(r);
        let t = wrap_pi(big_theta);
        if t.abs() <= FRAC_PI_2 {
            Ok((r, t * a / FRAC_PI_2))
        } else {
            let tp = t.rem_euclid(TAU);
            Ok((r, PI + (tp - PI) * (PI - a) / FRAC_PI_2))
        }
    }

    pub fn apply_polar(&self, r: f64, theta: f64, direction: Direction) -> Result<(f64, f64)> {
        match direction {
            Direction::Forward => self.forward_polar(r, theta),
            Direction::Inverse => self.inverse_polar(r, theta),
        }
    }

    /// Jacobian in the orthonormal polar frames, `(dr, r dθ) ↦ (dR, R dΘ)`.
    pub fn frame_matrix(&self, r: f64, theta: f64) -> Mat2 {
        let a = self.half_angle(r);
        let t = wrap_pi(theta);
        if t.abs() <= a {
            // Θ = θ r^(1−s)
            let scale = r.powf(1.0 - self.s);
            Mat2::new(1.0, 0.0, t * (1.0 - self.s) * scale, scale)
        } else {
            let tp = t.rem_euclid(TAU);
            let c = FRAC_PI_2 / (PI - a);
            let r_dtheta_dr = (tp - PI) * FRAC_PI_2 * (self.s - 1.0) * a / ((PI - a) * (PI - a));
            Mat2::new(1.0, 0.0, r_dtheta_dr, c)
        }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_pi(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let t = (theta + PI).rem_euclid(TAU) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

impl PlanarMap for AngularStretch {
    fn name(&self) -> String {
        format!("angular-stretch(s={})", self.s)
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite() && z.norm() <= 1.0 + DISK_SLACK
    }
    fn eval(&self, z: Point) -> Result<Point> {
        let (r, t) = self.forward_polar(z.norm(), z.angle())?;
        Ok(Point::from_polar(r, t))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        let (r, t) = self.inverse_polar(w.norm(), w.angle())?;
        Ok(Point::from_polar(r, t))
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        let r = z.norm();
        self.check_radius(r)?;
        if r == 0.0 {
            return Err(Error::Evaluation { at: z, reason: "angular stretch is singular at the tip".into() });
        }
        let theta = z.angle();
        let (_, big) = self.forward_polar(r, theta)?;
        let m = self.frame_matrix(r, theta);
        Ok(Mat2::rotation(big).mul(&m).mul(&Mat2::rotation(theta).transpose()))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Preserving
    }
    fn singular_points(&self) -> Vec<Point> {
        vec![Point::ORIGIN]
    }
}

/// `(x, y) ↦ (x, y·x/ρ(x))`: straightens the channel `|y| < ρ(x)` onto the
/// triangle `|y| < x`, `0 < x ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalStretch {
    profile: CuspProfile,
}

const CHANNEL_SLACK: f64 = 1e-12;

impl VerticalStretch {
    pub fn new(profile: CuspProfile) -> Self {
        VerticalStretch { profile }
    }

    pub fn profile(&self) -> &CuspProfile {
        &self.profile
    }

    fn in_channel(&self, z: Point) -> bool {
        z.is_finite() && z.x > 0.0 && z.x <= 1.0 + CHANNEL_SLACK && z.y.abs() <= self.profile.value(z.x) * (1.0 + CHANNEL_SLACK)
    }

    fn in_triangle(&self, w: Point) -> bool {
        w.is_finite() && w.x > 0.0 && w.x <= 1.0 + CHANNEL_SLACK && w.y.abs() <= w.x * (1.0 + CHANNEL_SLACK)
    }

    /// `y/ρ(x)`, kept finite where `ρ` underflows.
    fn relative_height(&self, z: Point) -> f64 {
        if z.y == 0.0 {
            return 0.0;
        }
        let rho = self.profile.value(z.x);
        if rho > 0.0 {
            z.y / rho
        } else {
            z.y.signum()
        }
    }

    /// `ln(x/ρ(x))`, the log of the vertical stretch factor.
    fn ln_stretch(&self, x: f64) -> f64 {
        match &self.profile {
            CuspProfile::Power { degree } => (1.0 - degree) * x.ln(),
            _ => x.ln() - self.profile.ln_value(x),
        }
    }

    fn log_derivative(&self, x: f64) -> f64 {
        match &self.profile {
            CuspProfile::Power { degree } => degree / x,
            CuspProfile::Exponential => 1.0 / (x * x),
            CuspProfile::Custom(_) => self.profile.derivative(x) / self.profile.value(x),
        }
    }

    pub fn apply(&self, z: Point, direction: Direction) -> Result<Point> {
        match direction {
            Direction::Forward => self.eval(z),
            Direction::Inverse => self.inverse(z),
        }
    }
}

impl PlanarMap for VerticalStretch {
    fn name(&self) -> String {
        format!("vertical-stretch({})", self.profile.name())
    }
    fn accepts(&self, z: Point) -> bool {
        self.in_channel(z)
    }
    fn eval(&self, z: Point) -> Result<Point> {
        if !self.in_channel(z) {
            return Err(Error::Domain(format!("{z} is outside the cusp channel of {}", self.profile.name())));
        }
        Ok(Point::new(z.x, self.relative_height(z) * z.x))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        if !self.in_triangle(w) {
            return Err(Error::Domain(format!("{w} is outside the triangle channel")));
        }
        Ok(Point::new(w.x, w.y * self.profile.slope_ratio(w.x)))
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        if !self.in_channel(z) {
            return Err(Error::Domain(format!("{z} is outside the cusp channel of {}", self.profile.name())));
        }
        let x = z.x;
        let stretch = 1.0 / self.profile.slope_ratio(x);
        let shear = self.relative_height(z) * (1.0 - x * self.log_derivative(x));
        Ok(Mat2::new(1.0, 0.0, shear, stretch))
    }
    fn orientation(&self) -> Orientation {
        Orientation::Preserving
    }
    fn singular_points(&self) -> Vec<Point> {
        vec![Point::ORIGIN]
    }
    // Dh = [[1, 0], [c, d]] gives K = e^m (1 + √(1 − 4e^(−2m)))/2 with
    // e^m = d + (1 + c²)/d, evaluated in logs since d = x/ρ(x) overflows.
    fn ln_distortion(&self, z: Point) -> Result<f64> {
        if !self.in_channel(z) {
            return Err(Error::Domain(format!("{z} is outside the cusp channel of {}", self.profile.name())));
        }
        let x = z.x;
        let c = self.relative_height(z) * (1.0 - x * self.log_derivative(x));
        let l = self.ln_stretch(x);
        let (a, b) = (l, (c * c).ln_1p() - l);
        let m = a.max(b) + (-(a - b).abs()).exp().ln_1p();
        let k = m + ((1.0 + (1.0 - 4.0 * (-2.0 * m).exp()).max(0.0).sqrt()) / 2.0).ln();
        if !k.is_finite() {
            return Err(Error::Evaluation { at: z, reason: format!("non-finite distortion of {}", self.name()) });
        }
        Ok(k)
    }
}

/// The inverse of a map, as a map.
#[derive(Debug, Clone)]
pub struct Inverted(pub Arc<dyn PlanarMap>);

impl PlanarMap for Inverted {
    fn name(&self) -> String {
        format!("inverse({})", self.0.name())
    }
    fn accepts(&self, w: Point) -> bool {
        self.0.inverse(w).is_ok()
    }
    fn eval(&self, w: Point) -> Result<Point> {
        self.0.inverse(w)
    }
    fn inverse(&self, z: Point) -> Result<Point> {
        self.0.eval(z)
    }
    fn jacobian(&self, w: Point) -> Result<Mat2> {
        let z = self.0.inverse(w)?;
        self.0
            .jacobian(z)?
            .inverse()
            .ok_or_else(|| Error::Evaluation { at: w, reason: format!("singular Jacobian of {}", self.0.name()) })
    }
    fn orientation(&self) -> Orientation {
        self.0.orientation()
    }
    fn singular_points(&self) -> Vec<Point> {
        self.0.singular_points().into_iter().filter_map(|p| self.0.eval(p).ok()).collect()
    }
}

/// `stages[0] ∘ stages[1] ∘ … ∘ stages[n−1]`; the last stage is applied first.
#[derive(Debug, Clone)]
pub struct Composite {
    stages: Vec<Arc<dyn PlanarMap>>,
}

/// Composes maps in mathematical order.
pub fn compose(maps: Vec<Arc<dyn PlanarMap>>) -> Result<Composite> {
    if maps.is_empty() {
        return Err(Error::Config("cannot compose an empty list of maps".into()));
    }
    Ok(Composite { stages: maps })
}

impl Composite {
    pub fn stages(&self) -> &[Arc<dyn PlanarMap>] {
        &self.stages
    }

    /// Evaluates every stage, returning the intermediate points in application order.
    fn trace(&self, z: Point) -> Result<Vec<Point>> {
        let mut pts = Vec::with_capacity(self.stages.len() + 1);
        let mut cur = z;
        pts.push(cur);
        for (i, stage) in self.stages.iter().enumerate().rev() {
            if !stage.accepts(cur) {
                return Err(Error::Composition { stage: i, at: cur });
            }
            cur = stage.eval(cur)?;
            pts.push(cur);
        }
        Ok(pts)
    }
}

impl PlanarMap for Composite {
    fn name(&self) -> String {
        let names: Vec<String> = self.stages.iter().map(|m| m.name()).collect();
        names.join(" ∘ ")
    }
    fn accepts(&self, z: Point) -> bool {
        self.trace(z).is_ok()
    }
    fn eval(&self, z: Point) -> Result<Point> {
        Ok(*self.trace(z)?.last().expect("trace has the input point"))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        let mut cur = w;
        for stage in &self.stages {
            cur = stage.inverse(cur)?;
        }
        Ok(cur)
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        let pts = self.trace(z)?;
        let mut j = Mat2::IDENTITY;
        for (k, stage) in self.stages.iter().rev().enumerate() {
            j = stage.jacobian(pts[k])?.mul(&j);
        }
        Ok(j)
    }
    fn orientation(&self) -> Orientation {
        self.stages.iter().fold(Orientation::Preserving, |o, m| o.compose(m.orientation()))
    }
}

type PointFn = Arc<dyn Fn(Point) -> Point + Send + Sync>;
type JacobianFn = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;
type RegionFn = Arc<dyn Fn(Point) -> bool + Send + Sync>;

/// A user-supplied map. Its inverse is computed by damped Newton iteration
/// started from the nearest seed image.
#[derive(Clone)]
pub struct UserMap {
    name: String,
    eval: PointFn,
    jacobian: JacobianFn,
    region: RegionFn,
    orientation: Orientation,
    seeds: Vec<(Point, Point)>,
}

impl fmt::Debug for UserMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserMap").field("name", &self.name).field("seeds", &self.seeds.len()).finish()
    }
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

impl UserMap {
    /// `seed_points` should cover the validity region; their images drive the
    /// initial guesses of the numeric inverse.
    pub fn new<E, J, R>(
        name: impl Into<String>,
        eval: E,
        jacobian: J,
        region: R,
        orientation: Orientation,
        seed_points: &[Point],
    ) -> Self
    where
        E: Fn(Point) -> Point + Send + Sync + 'static,
        J: Fn(Point) -> Mat2 + Send + Sync + 'static,
        R: Fn(Point) -> bool + Send + Sync + 'static,
    {
        let seeds = seed_points.iter().filter(|p| region(**p)).map(|&p| (p, eval(p))).collect();
        UserMap {
            name: name.into(),
            eval: Arc::new(eval),
            jacobian: Arc::new(jacobian),
            region: Arc::new(region),
            orientation,
            seeds,
        }
    }
}

impl PlanarMap for UserMap {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn accepts(&self, z: Point) -> bool {
        z.is_finite() && (self.region)(z)
    }
    fn eval(&self, z: Point) -> Result<Point> {
        if !self.accepts(z) {
            return Err(outside(&self.name, z));
        }
        Ok((self.eval)(z))
    }
    fn inverse(&self, w: Point) -> Result<Point> {
        let start = self
            .seeds
            .iter()
            .min_by(|a, b| a.1.distance(w).total_cmp(&b.1.distance(w)))
            .map(|s| s.0)
            .ok_or_else(|| Error::Evaluation { at: w, reason: "no seed points for numeric inverse".into() })?;
        newton_inverse(self, w, start)
    }
    fn jacobian(&self, z: Point) -> Result<Mat2> {
        Ok((self.jacobian)(z))
    }
    fn orientation(&self) -> Orientation {
        self.orientation
    }
}

/// Damped Newton solve of `map(z) = w` from `start`.
pub fn newton_inverse(map: &dyn PlanarMap, w: Point, start: Point) -> Result<Point> {
    let residual = |z: Point| -> Result<(f64, f64)> {
        let h = map.eval(z)?;
        Ok((h.x - w.x, h.y - w.y))
    };
    let mut z = start;
    let (mut fx, mut fy) = residual(z)?;
    for _ in 0..NEWTON_MAX_ITER {
        let norm = fx.hypot(fy);
        if norm < NEWTON_TOL {
            return Ok(z);
        }
        let jinv = map
            .jacobian(z)?
            .inverse()
            .ok_or_else(|| Error::Evaluation { at: z, reason: "singular Jacobian in Newton inverse".into() })?;
        let [dx, dy] = jinv.apply([fx, fy]);
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = Point::new(z.x - step * dx, z.y - step * dy);
            if map.accepts(cand) {
                if let Ok((cx, cy)) = residual(cand) {
                    if cx.hypot(cy) < norm {
                        z = cand;
                        fx = cx;
                        fy = cy;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if fx.hypot(fy) < NEWTON_TOL {
        Ok(z)
    } else {
        Err(Error::Evaluation { at: w, reason: format!("Newton inverse of {} did not converge", map.name()) })
    }
}
