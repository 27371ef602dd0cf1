//! Labeled 2-D datasets and the three synthetic settings (four Gaussians,
//! sinusoidal boundary, two-armed spiral) together with their labelers.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

/// Binary class label, serialized as `-1` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        l.sign()
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        Label::from_sign(i64::from(v))
    }
}

impl Label {
    pub fn sign(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn as_scalar<T: Scalar>(self) -> T {
        match self {
            Label::Negative => -T::one(),
            Label::Positive => T::one(),
        }
    }

    /// Sign of a score; zero maps to `Positive`.
    pub fn from_score<T: Scalar>(score: T) -> Self {
        if score >= T::zero() {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(invalid(format!("label must be -1 or 1, got {other}"))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

pub type Point<T> = [T; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint<T> {
    pub x: Point<T>,
    pub y: Label,
}

impl<T: Scalar> LabeledPoint<T> {
    pub fn new(x: Point<T>, y: Label) -> Result<Self> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(LabeledPoint { x, y })
    }
}

/// Axis-aligned rectangle `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<T> {
    pub lower: Point<T>,
    pub upper: Point<T>,
}

impl<T: Scalar> DomainBox<T> {
    pub fn new(lower: Point<T>, upper: Point<T>) -> Result<Self> {
        if !(lower[0] < upper[0] && lower[1] < upper[1]) {
            return Err(invalid("domain box requires lower < upper componentwise"));
        }
        Ok(DomainBox { lower, upper })
    }

    /// Smallest box containing every point, padded where it would be flat.
    pub fn bounding(points: impl IntoIterator<Item = Point<T>>) -> Result<Self> {
        let mut lower = [T::infinity(); 2];
        let mut upper = [T::neg_infinity(); 2];
        let mut any = false;
        for p in points {
            any = true;
            for d in 0..2 {
                lower[d] = lower[d].min(p[d]);
                upper[d] = upper[d].max(p[d]);
            }
        }
        if !any {
            return Err(invalid("bounding box of an empty point set"));
        }
        let half = T::lit(0.5);
        for d in 0..2 {
            if !(lower[d] < upper[d]) {
                lower[d] = lower[d] - half;
                upper[d] = upper[d] + half;
            }
        }
        DomainBox::new(lower, upper)
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        (0..2).all(|d| p[d] >= self.lower[d] && p[d] <= self.upper[d])
    }

    pub fn width(&self) -> T {
        self.upper[0] - self.lower[0]
    }

    pub fn height(&self) -> T {
        self.upper[1] - self.lower[1]
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> T {
        self.width().hypot(self.height())
    }

    pub fn sample_uniform(&self, rng: &mut Rng) -> Point<T> {
        let mut p = [T::zero(); 2];
        for d in 0..2 {
            let (lo, hi) = (self.lower[d].to_f64_lossy(), self.upper[d].to_f64_lossy());
            p[d] = T::lit(lo + (hi - lo) * rng.random::<f64>()).min(self.upper[d]);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub points: Vec<LabeledPoint<T>>,
    pub domain: DomainBox<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(points: Vec<LabeledPoint<T>>, domain: DomainBox<T>) -> Self {
        Dataset { points, domain }
    }

    /// Dataset whose domain is the empirical bounding box of its points.
    pub fn with_bounding_box(points: Vec<LabeledPoint<T>>) -> Result<Self> {
        let domain = DomainBox::bounding(points.iter().map(|p| p.x))?;
        Ok(Dataset { points, domain })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.points.iter().filter(|p| p.y == label).count()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            domain: self.domain,
        }
    }

    pub fn extend(&mut self, more: impl IntoIterator<Item = LabeledPoint<T>>) {
        self.points.extend(more);
    }

    pub fn locations(&self) -> Vec<Point<T>> {
        self.points.iter().map(|p| p.x).collect()
    }
}

/// The synthetic experiment settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Gaussians,
    Sin,
    Spiral,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::Gaussians => "gaussians",
            Setting::Sin => "sin",
            Setting::Spiral => "spiral",
        }
    }

    /// Fixed domain for the settings with a spatial boundary.
    pub fn domain<T: Scalar>(self) -> Option<DomainBox<T>> {
        match self {
            Setting::Gaussians => None,
            Setting::Sin => Some(DomainBox {
                lower: [T::lit(-10.0), T::lit(-5.0)],
                upper: [T::lit(10.0), T::lit(5.0)],
            }),
            Setting::Spiral => Some(DomainBox {
                lower: [T::lit(-5.0), T::lit(-5.0)],
                upper: [T::lit(5.0), T::lit(5.0)],
            }),
        }
    }

    pub fn oracle(self) -> Result<OracleLabeler> {
        match self {
            Setting::Gaussians => Err(Error::UnsupportedOracle(self.name().into())),
            Setting::Sin | Setting::Spiral => Ok(OracleLabeler { setting: self }),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussians" => Ok(Setting::Gaussians),
            "sin" => Ok(Setting::Sin),
            "spiral" => Ok(Setting::Spiral),
            other => Err(invalid(format!("unknown setting `{other}`"))),
        }
    }
}

/// Component centers of the four-Gaussian setting; the first two are class −1.
pub const GAUSSIAN_CENTERS: [[f64; 2]; 4] = [[-1.0, 0.5], [0.0, -0.5], [0.0, 0.5], [1.0, -0.5]];
/// Per-coordinate variance of every Gaussian component.
pub const GAUSSIAN_VARIANCE: f64 = 0.4;
/// Angular pitch of the spiral, in radians per unit radius.
pub const SPIRAL_PITCH: f64 = 2.0;

/// Boundary of the sin setting: `2 sin(3t)` for `t <= 0`, flat zero after.
pub fn sin_boundary<T: Scalar>(t: T) -> T {
    if t <= T::zero() {
        T::lit(2.0) * (T::lit(3.0) * t).sin()
    } else {
        T::zero()
    }
}

/// Spiral level function `sin(θ − c·r)`; its sign is the class.
///
/// `θ = atan2(x₂, x₁)`. Because `sin` is 2π-periodic the branch cut of
/// `atan2` leaves the function continuous, so the zero set is the pair of
/// Archimedean arms `r = (θ − kπ)/c`.
pub fn spiral_level<T: Scalar>(x: &Point<T>) -> T {
    let r = x[0].hypot(x[1]);
    let theta = x[1].atan2(x[0]);
    (theta - T::lit(SPIRAL_PITCH) * r).sin()
}

/// Ground-truth labeler for a setting with a spatial boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLabeler {
    setting: Setting,
}

impl OracleLabeler {
    pub fn setting(&self) -> Setting {
        self.setting
    }

    /// Points on the boundary are labeled `Positive`.
    pub fn label<T: Scalar>(&self, x: &Point<T>) -> Label {
        let above = match self.setting {
            Setting::Sin => x[1] >= sin_boundary(x[0]),
            Setting::Spiral => spiral_level(x) >= T::zero(),
            Setting::Gaussians => unreachable!("gaussians labeler is never constructed"),
        };
        if above {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn labeled<T: Scalar>(&self, x: Point<T>) -> LabeledPoint<T> {
        LabeledPoint { x, y: self.label(&x) }
    }

    pub fn domain<T: Scalar>(&self) -> DomainBox<T> {
        self.setting.domain().expect("oracle settings have a domain")
    }

    /// `n` uniform points in the domain, labeled.
    pub fn sample<T: Scalar>(&self, n: usize, rng: &mut Rng) -> Vec<LabeledPoint<T>> {
        let domain = self.domain::<T>();
        (0..n)
            .map(|_| self.labeled(domain.sample_uniform(rng)))
            .collect()
    }
}

/// `oracle_label(setting, x)`.
pub fn oracle_label<T: Scalar>(setting: Setting, x: &Point<T>) -> Result<Label> {
    Ok(setting.oracle()?.label(x))
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("point count must be at least 1"));
    }
    Ok(())
}

/// Four isotropic Gaussians, `n_per_component` draws each, in component order.
pub fn generate_gaussians<T: Scalar>(n_per_component: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    check_count(n_per_component)?;
    let normal = Normal::new(0.0, GAUSSIAN_VARIANCE.sqrt()).expect("valid normal");
    let mut points = Vec::with_capacity(4 * n_per_component);
    for (k, center) in GAUSSIAN_CENTERS.iter().enumerate() {
        let y = if k < 2 { Label::Negative } else { Label::Positive };
        for _ in 0..n_per_component {
            let x0 = center[0] + normal.sample(rng);
            let x1 = center[1] + normal.sample(rng);
            points.push(LabeledPoint {
                x: [T::lit(x0), T::lit(x1)],
                y,
            });
        }
    }
    Dataset::with_bounding_box(points)
}

fn generate_oracle<T: Scalar>(setting: Setting, n: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    check_count(n)?;
    let oracle = setting.oracle()?;
    Ok(Dataset::new(oracle.sample(n, rng), oracle.domain()))
}

/// `n` uniform points on `[−10,10]×[−5,5]` labeled by the sin boundary.
pub fn generate_sin<T: Scalar>(n: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    generate_oracle(Setting::Sin, n, rng)
}

/// `n` uniform points on `[−5,5]²` labeled by the spiral.
pub fn generate_spiral<T: Scalar>(n: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    generate_oracle(Setting::Spiral, n, rng)
}

/// Generate a setting. For gaussians `n` is the per-component count.
pub fn generate<T: Scalar>(setting: Setting, n: usize, rng: &mut Rng) -> Result<Dataset<T>> {
    match setting {
        Setting::Gaussians => generate_gaussians(n, rng),
        Setting::Sin => generate_sin(n, rng),
        Setting::Spiral => generate_spiral(n, rng),
    }
}
