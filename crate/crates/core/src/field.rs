//! Kernel-smoothed entropy surface over the feature plane.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{DomainBox, Point, Setting};
use crate::error::{invalid, Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

pub const DEFAULT_QUANTILE: f64 = 0.8;
/// Step used when the requested superlevel set turns out to be empty.
pub const QUANTILE_STEP: f64 = 0.05;
pub const MAX_PROPOSALS: usize = 1_000_000;
/// Proposals without a single acceptance before a level counts as empty.
pub const LEVEL_PATIENCE: usize = 100_000;

/// Kernel bandwidth used when none is given.
pub fn default_bandwidth(setting: Setting) -> f64 {
    match setting {
        Setting::Spiral => 0.25,
        Setting::Sin | Setting::Gaussians => 0.5,
    }
}

/// Raster resolution `(nx, ny)` used when none is given.
pub fn default_grid(setting: Setting) -> (usize, usize) {
    match setting {
        Setting::Sin => (200, 100),
        Setting::Spiral | Setting::Gaussians => (200, 200),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue<T> {
    pub value: T,
    /// The kernel sum underflowed and the nearest center's value was used.
    pub extrapolated: bool,
}

/// Nadaraya–Watson regression of per-point values with an isotropic
/// Gaussian kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyField<T> {
    centers: Vec<Point<T>>,
    values: Vec<T>,
    bandwidth: T,
    min: T,
    max: T,
}

impl<T: Scalar> EntropyField<T> {
    pub fn new(centers: Vec<Point<T>>, values: Vec<T>, bandwidth: T) -> Result<Self> {
        if centers.is_empty() {
            return Err(invalid("field needs at least one center"));
        }
        if centers.len() != values.len() {
            return Err(invalid(format!(
                "{} centers but {} values",
                centers.len(),
                values.len()
            )));
        }
        if !(bandwidth > T::zero() && bandwidth.is_finite()) {
            return Err(invalid("bandwidth must be positive and finite"));
        }
        if centers.iter().any(|c| !(c[0].is_finite() && c[1].is_finite()))
            || values.iter().any(|v| !v.is_finite())
        {
            return Err(invalid("field centers and values must be finite"));
        }
        let min = values.iter().copied().fold(T::infinity(), T::min);
        let max = values.iter().copied().fold(T::neg_infinity(), T::max);
        Ok(EntropyField {
            centers,
            values,
            bandwidth,
            min,
            max,
        })
    }

    pub fn centers(&self) -> &[Point<T>] {
        &self.centers
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn bandwidth(&self) -> T {
        self.bandwidth
    }

    pub fn value_range(&self) -> (T, T) {
        (self.min, self.max)
    }

    pub fn eval(&self, x: &Point<T>) -> FieldValue<T> {
        let scale = -T::one() / (T::lit(2.0) * self.bandwidth * self.bandwidth);
        let mut num = T::zero();
        let mut den = T::zero();
        for (c, &h) in self.centers.iter().zip(&self.values) {
            let k = (scale * dist2(x, c)).exp();
            num = num + k * h;
            den = den + k;
        }
        if den < T::min_positive_value() {
            return FieldValue {
                value: self.nearest_value(x),
                extrapolated: true,
            };
        }
        FieldValue {
            value: (num / den).max(self.min).min(self.max),
            extrapolated: false,
        }
    }

    /// Shorthand for `eval(x).value`.
    pub fn value_at(&self, x: &Point<T>) -> T {
        self.eval(x).value
    }

    fn nearest_value(&self, x: &Point<T>) -> T {
        let mut best = (T::infinity(), self.values[0]);
        for (c, &h) in self.centers.iter().zip(&self.values) {
            let d = dist2(x, c);
            if d < best.0 {
                best = (d, h);
            }
        }
        best.1
    }
}

fn dist2<T: Scalar>(a: &Point<T>, b: &Point<T>) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Field values at the cell centers of a uniform grid, stored row by row
/// with `x1` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRaster<T> {
    pub domain: DomainBox<T>,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<T>,
    /// Cells where the nearest-center fallback was used.
    pub extrapolated_cells: usize,
}

impl<T: Scalar> FieldRaster<T> {
    pub fn cell_center(&self, i: usize, j: usize) -> Point<T> {
        cell_center(&self.domain, self.nx, self.ny, i, j)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Cell indices `(i, j)` of the first maximal value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = k;
            }
        }
        (best % self.nx, best / self.nx)
    }

    /// Nearest-rank `q`-quantile of the cell values.
    pub fn quantile(&self, q: f64) -> T {
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite raster"));
        let n = sorted.len();
        let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
        sorted[rank - 1]
    }

    /// Mean of cell values whose centers satisfy `select`.
    pub fn region_mean(&self, select: impl Fn(&Point<T>) -> bool) -> Option<T> {
        let mut sum = T::zero();
        let mut n = 0usize;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if select(&self.cell_center(i, j)) {
                    sum = sum + self.get(i, j);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / T::from_count(n))
    }
}

fn cell_center<T: Scalar>(domain: &DomainBox<T>, nx: usize, ny: usize, i: usize, j: usize) -> Point<T> {
    let half = T::lit(0.5);
    [
        domain.lower[0] + domain.width() * (T::from_count(i) + half) / T::from_count(nx),
        domain.lower[1] + domain.height() * (T::from_count(j) + half) / T::from_count(ny),
    ]
}

pub fn rasterize<T: Scalar>(field: &EntropyField<T>, domain: &DomainBox<T>, nx: usize, ny: usize) -> Result<FieldRaster<T>> {
    if nx < 2 || ny < 2 {
        return Err(invalid("raster needs at least 2 cells per axis"));
    }
    let rows: Vec<Vec<FieldValue<T>>> = (0..ny)
        .into_par_iter()
        .map(|j| {
            (0..nx)
                .map(|i| field.eval(&cell_center(domain, nx, ny, i, j)))
                .collect()
        })
        .collect();
    let extrapolated_cells = rows.iter().flatten().filter(|v| v.extrapolated).count();
    Ok(FieldRaster {
        domain: *domain,
        nx,
        ny,
        values: rows.into_iter().flatten().map(|v| v.value).collect(),
        extrapolated_cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HighEntropySample<T> {
    pub points: Vec<Point<T>>,
    /// Field level every returned point reaches.
    pub threshold: T,
    pub requested_quantile: f64,
    pub quantile: f64,
    /// The quantile had to be lowered to find a nonempty superlevel set.
    pub adjusted: bool,
    pub proposals: usize,
}

/// Draws `k` points uniformly from `{x : H(x) ≥ t}`, where `t` is the
/// `q`-quantile of the raster values, by rejection from the raster box.
pub fn sample_high_entropy<T: Scalar>(
    field: &EntropyField<T>,
    raster: &FieldRaster<T>,
    k: usize,
    q: f64,
    rng: &mut Rng,
) -> Result<HighEntropySample<T>> {
    if k == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(invalid(format!("quantile {q} outside (0, 1)")));
    }
    let domain = raster.domain;
    let mut quantile = q;
    let mut threshold = raster.quantile(quantile);
    let mut adjusted = false;
    let mut points = Vec::with_capacity(k);
    let mut proposals = 0usize;
    let mut since_accept = 0usize;
    while points.len() < k {
        if proposals >= MAX_PROPOSALS {
            return Err(Error::SamplerExhausted {
                proposals,
                accepted: points.len(),
                requested: k,
            });
        }
        // an empty level can only be detected before anything was accepted
        if points.is_empty() && since_accept >= LEVEL_PATIENCE && quantile - QUANTILE_STEP > 0.0 {
            quantile -= QUANTILE_STEP;
            threshold = raster.quantile(quantile);
            adjusted = true;
            since_accept = 0;
        }
        let x = domain.sample_uniform(rng);
        proposals += 1;
        if field.value_at(&x) >= threshold {
            points.push(x);
            since_accept = 0;
        } else {
            since_accept += 1;
        }
    }
    Ok(HighEntropySample {
        points,
        threshold,
        requested_quantile: q,
        quantile,
        adjusted,
        proposals,
    })
}

/// `k` independent uniform draws from the box.
pub fn sample_box<T: Scalar>(domain: &DomainBox<T>, k: usize, rng: &mut Rng) -> Vec<Point<T>> {
    (0..k).map(|_| domain.sample_uniform(rng)).collect()
}
