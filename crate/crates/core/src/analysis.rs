//! Per-point statistics of weight traces: mean, histogram entropy and a
//! Kolmogorov–Smirnov stationarity check, plus the easy/hard partition and
//! the Fisher LDA separation score built on top of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::TraceMatrix;
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Number of histogram bins on `[0, 1]` used for trace entropy.
pub const DEFAULT_ENTROPY_BINS: usize = 1000;
/// Bins of the histogram of entropies searched for the easy/hard gap.
pub const PARTITION_BINS: usize = 50;
/// Threshold (bits) used when the entropy histogram has no interior gap.
pub const FALLBACK_THRESHOLD: f64 = 0.5;
/// KS p-value below which a trace is considered non-stationary.
pub const KS_REJECT_LEVEL: f64 = 0.05;

/// Bin occupancy of `trace` over `bins` equal subintervals of `[0, 1]`.
pub fn unit_histogram<T: Scalar>(trace: &[T], bins: usize) -> Result<Vec<usize>> {
    if trace.is_empty() {
        return Err(invalid("histogram of an empty trace"));
    }
    if bins == 0 {
        return Err(invalid("bin count must be at least 1"));
    }
    let l = T::from_count(bins);
    let mut counts = vec![0usize; bins];
    for &v in trace {
        if !(v >= T::zero() && v <= T::one()) {
            return Err(invalid(format!("trace value {v} outside [0, 1]")));
        }
        let idx = (v * l).floor().to_usize().unwrap_or(0).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Shannon entropy in bits of a histogram given as counts.
pub fn count_entropy<T: Scalar>(counts: &[usize]) -> T {
    // H = log2 n − (1/n) Σ c·log2 c, exact for single-bin and uniform cases
    let n: usize = counts.iter().sum();
    if n == 0 {
        return T::zero();
    }
    let nt = T::from_count(n);
    let s: T = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let ct = T::from_count(c);
            ct * ct.log2()
        })
        .sum();
    (nt.log2() - s / nt).max(T::zero())
}

/// Entropy (bits) of the `bins`-bin histogram of a weight trace on `[0, 1]`.
pub fn histogram_entropy<T: Scalar>(trace: &[T], bins: usize) -> Result<T> {
    Ok(count_entropy(&unit_histogram(trace, bins)?))
}

pub fn trace_mean<T: Scalar>(trace: &[T]) -> Result<T> {
    if trace.is_empty() {
        return Err(invalid("mean of an empty trace"));
    }
    Ok(trace.iter().copied().sum::<T>() / T::from_count(trace.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult<T> {
    /// Supremum distance between the two empirical CDFs.
    pub statistic: T,
    /// Asymptotic significance level.
    pub p_value: T,
}

fn sorted<T: Scalar>(xs: &[T]) -> Result<Vec<T>> {
    if xs.iter().any(|v| v.is_nan()) {
        return Err(invalid("NaN in KS sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    Ok(v)
}

/// Two-sample KS statistic on presorted samples, ties handled jointly.
pub fn ks_statistic_sorted<T: Scalar>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (T::from_count(a.len()), T::from_count(b.len()));
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = T::zero();
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        let gap = (T::from_count(i) / na - T::from_count(j) / nb).abs();
        d = d.max(gap);
    }
    d
}

/// Kolmogorov distribution tail `Q_KS(λ) = 2 Σ_{j≥1} (−1)^{j−1} exp(−2j²λ²)`.
///
/// Returns 1 when the alternating series fails to converge, which happens
/// only for small λ where the tail is 1 to working precision.
pub fn ks_tail_probability<T: Scalar>(lambda: T) -> T {
    let a2 = T::lit(-2.0) * lambda * lambda;
    let mut fac = T::lit(2.0);
    let mut sum = T::zero();
    let mut term_prev = T::zero();
    for j in 1..=100 {
        let jt = T::from_count(j);
        let term = fac * (a2 * jt * jt).exp();
        sum = sum + term;
        if term.abs() <= T::lit(0.001) * term_prev || term.abs() <= T::lit(1e-8) * sum {
            return sum.max(T::zero()).min(T::one());
        }
        fac = -fac;
        term_prev = term.abs();
    }
    T::one()
}

/// Two-sample KS test with the asymptotic p-value
/// `Q_KS((√nₑ + 0.12 + 0.11/√nₑ)·D)`, `nₑ = n_a·n_b/(n_a + n_b)`.
pub fn ks_two_sample<T: Scalar>(a: &[T], b: &[T]) -> Result<KsResult<T>> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KS test needs two nonempty samples"));
    }
    let (sa, sb) = (sorted(a)?, sorted(b)?);
    let d = ks_statistic_sorted(&sa, &sb);
    Ok(KsResult {
        statistic: d,
        p_value: ks_p_value(d, a.len(), b.len()),
    })
}

pub fn ks_p_value<T: Scalar>(d: T, na: usize, nb: usize) -> T {
    let (na, nb) = (T::from_count(na), T::from_count(nb));
    let en = (na * nb / (na + nb)).sqrt();
    ks_tail_probability((en + T::lit(0.12) + T::lit(0.11) / en) * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats<T> {
    pub mean: T,
    pub entropy: T,
    pub ks_d: T,
    pub ks_p: T,
}

impl<T: Scalar> TraceStats<T> {
    pub fn rejected(&self) -> bool {
        self.ks_p < T::lit(KS_REJECT_LEVEL)
    }
}

/// Statistics of a single trace; KS compares the first `split` values
/// against the whole trace (the second sample contains the first), so
/// `split == trace.len()` gives `D = 0`.
pub fn trace_stats<T: Scalar>(trace: &[T], split: usize, bins: usize) -> Result<TraceStats<T>> {
    if split == 0 || split > trace.len() {
        return Err(invalid(format!(
            "split {split} outside [1, {}]",
            trace.len()
        )));
    }
    let ks = ks_two_sample(&trace[..split], trace)?;
    Ok(TraceStats {
        mean: trace_mean(trace)?,
        entropy: histogram_entropy(trace, bins)?,
        ks_d: ks.statistic,
        ks_p: ks.p_value,
    })
}

/// Default KS split: 3/5 of the run (3000 of 5000 rounds).
pub fn default_split(iterations: usize) -> usize {
    (iterations * 3 / 5).max(1)
}

/// Per-point statistics over every column of `traces`.
pub fn stationarity_stats<T: Scalar>(
    traces: &TraceMatrix<T>,
    split: usize,
    bins: usize,
) -> Result<Vec<TraceStats<T>>> {
    let t = traces.n_iterations();
    if split == 0 || split > t {
        return Err(invalid(format!("split {split} outside [1, {t}]")));
    }
    (0..traces.n_points())
        .into_par_iter()
        .map(|i| trace_stats(&traces.column(i), split, bins))
        .collect()
}

/// Entropy (bits) of every column, without the KS step.
pub fn trace_entropies<T: Scalar>(traces: &TraceMatrix<T>, bins: usize) -> Result<Vec<T>> {
    (0..traces.n_points())
        .into_par_iter()
        .map(|i| histogram_entropy(&traces.column(i), bins))
        .collect()
}

/// Fisher linear discriminant; predicts the positive class when
/// `weights · x > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel<T> {
    pub weights: Vec<T>,
    pub threshold: T,
}

impl<T: Scalar> LdaModel<T> {
    pub fn project(&self, x: &[T]) -> T {
        self.weights
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (w, v)| acc + *w * *v)
    }

    pub fn predict(&self, x: &[T]) -> bool {
        self.project(x) > self.threshold
    }

    /// Fits Fisher's direction `w = S⁻¹(μ₊ − μ₋)` with pooled within-class
    /// covariance `S`, cutting at the midpoint `w·(μ₊ + μ₋)/2` of the
    /// projected class means.
    pub fn fit(samples: &[Vec<T>], positive: &[bool]) -> Result<Self> {
        if samples.len() != positive.len() || samples.is_empty() {
            return Err(invalid("LDA needs one label per nonempty sample"));
        }
        let d = samples[0].len();
        if d == 0 || samples.iter().any(|s| s.len() != d) {
            return Err(invalid("LDA samples must share a nonzero dimension"));
        }
        let n_pos = positive.iter().filter(|&&p| p).count();
        let n_neg = positive.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::Degenerate("LDA labels contain a single class".into()));
        }
        let mean_of = |want: bool, count: usize| {
            let mut m = vec![T::zero(); d];
            for (s, _) in samples.iter().zip(positive).filter(|(_, &p)| p == want) {
                for k in 0..d {
                    m[k] = m[k] + s[k];
                }
            }
            m.iter().map(|v| *v / T::from_count(count)).collect::<Vec<T>>()
        };
        let mu_pos = mean_of(true, n_pos);
        let mu_neg = mean_of(false, n_neg);

        let mut cov = vec![vec![T::zero(); d]; d];
        for (s, &p) in samples.iter().zip(positive) {
            let mu = if p { &mu_pos } else { &mu_neg };
            for r in 0..d {
                for c in 0..d {
                    cov[r][c] = cov[r][c] + (s[r] - mu[r]) * (s[c] - mu[c]);
                }
            }
        }
        let dof = T::from_count(samples.len().saturating_sub(2).max(1));
        for row in cov.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / dof;
            }
        }
        let diff: Vec<T> = mu_pos.iter().zip(&mu_neg).map(|(a, b)| *a - *b).collect();
        let weights = solve(cov, diff)?;
        let mid: Vec<T> = mu_pos
            .iter()
            .zip(&mu_neg)
            .map(|(a, b)| (*a + *b) / T::lit(2.0))
            .collect();
        let model = LdaModel {
            threshold: T::zero(),
            weights,
        };
        let threshold = model.project(&mid);
        Ok(LdaModel { threshold, ..model })
    }
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    let tiny = scale * T::epsilon() * T::from_count(n * 16);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))
            .expect("nonempty range");
        if !(a[pivot][col].abs() > tiny) {
            return Err(Error::Degenerate(
                "pooled within-class covariance is singular".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s = s - a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Ok(x)
}

/// Confusion counts for a binary prediction against ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl Confusion {
    pub fn tally(predicted: &[bool], actual: &[bool]) -> Self {
        let mut c = Confusion {
            true_pos: 0,
            false_pos: 0,
            true_neg: 0,
            false_neg: 0,
        };
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, false) => c.true_neg += 1,
                (false, true) => c.false_neg += 1,
            }
        }
        c
    }

    fn ratio(num: usize, den: usize) -> f64 {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    }

    /// One minus the false-negative rate `FN / (TP + FN)`.
    pub fn complement_false_negative(&self) -> f64 {
        1.0 - Self::ratio(self.false_neg, self.true_pos + self.false_neg)
    }

    /// One minus the false-positive rate `FP / (FP + TN)`.
    pub fn complement_false_positive(&self) -> f64 {
        1.0 - Self::ratio(self.false_pos, self.false_pos + self.true_neg)
    }

    /// `TP / (TP + FP)`.
    pub fn precision(&self) -> f64 {
        Self::ratio(self.true_pos, self.true_pos + self.false_pos)
    }

    /// `TP / (TP + FN)`.
    pub fn recall(&self) -> f64 {
        Self::ratio(self.true_pos, self.true_pos + self.false_neg)
    }

    /// Same counts with the roles of the two classes exchanged.
    pub fn swapped(&self) -> Self {
        Confusion {
            true_pos: self.true_neg,
            false_pos: self.false_neg,
            true_neg: self.true_pos,
            false_neg: self.false_pos,
        }
    }
}

/// Separation quality of an easy/hard classifier in two conventions.
///
/// `precision` and `recall` are the complement-of-error-rate scores with the
/// hard class as positive: `precision = 1 − (hard points called easy)/hard`
/// and `recall = 1 − (easy points called hard)/easy`. A high `precision`
/// therefore means the easy label is trustworthy. The `easy_*` fields are
/// standard precision and recall of the easy class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationScores {
    pub precision: f64,
    pub recall: f64,
    pub easy_precision: f64,
    pub easy_recall: f64,
    /// Counts with the easy (KS-rejected) class as positive.
    pub confusion: Confusion,
}

impl SeparationScores {
    /// `easy` holds counts with the easy (rejected) class as positive.
    pub fn from_confusion(easy: Confusion) -> Self {
        let hard = easy.swapped();
        SeparationScores {
            precision: hard.complement_false_negative(),
            recall: hard.complement_false_positive(),
            easy_precision: easy.precision(),
            easy_recall: easy.recall(),
            confusion: easy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separation<T> {
    pub model: LdaModel<T>,
    pub scores: SeparationScores,
}

/// LDA of a multi-feature description of each point against its KS-rejection label.
pub fn lda_separate_multi<T: Scalar>(features: &[Vec<T>], rejected: &[bool]) -> Result<Separation<T>> {
    let model = LdaModel::fit(features, rejected)?;
    let predicted: Vec<bool> = features.iter().map(|f| model.predict(f)).collect();
    Ok(Separation {
        model,
        scores: SeparationScores::from_confusion(Confusion::tally(&predicted, rejected)),
    })
}

/// LDA of a scalar feature (mean or entropy) against KS rejection.
pub fn lda_separate<T: Scalar>(feature: &[T], rejected: &[bool]) -> Result<Separation<T>> {
    let rows: Vec<Vec<T>> = feature.iter().map(|v| vec![*v]).collect();
    lda_separate_multi(&rows, rejected)
}

/// Easy/hard split of the training points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition<T> {
    pub easy: Vec<usize>,
    pub hard: Vec<usize>,
    pub threshold: T,
    /// No interior gap was found and the fallback threshold was used.
    pub low_confidence: bool,
}

impl<T> Partition<T> {
    pub fn is_easy(&self, i: usize) -> bool {
        self.easy.binary_search(&i).is_ok()
    }
}

/// Equal-width histogram of `values` over `[min, max]`.
pub fn range_histogram<T: Scalar>(values: &[T], bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    let (lo, hi) = min_max(values);
    let range = hi - lo;
    for &v in values {
        let idx = if range > T::zero() {
            ((v - lo) / range * T::from_count(bins))
                .floor()
                .to_usize()
                .unwrap_or(0)
                .min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    counts
}

fn min_max<T: Scalar>(values: &[T]) -> (T, T) {
    values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Longest run of empty bins with occupied bins on both sides, as
/// `(first_bin, length)`. Ties go to the lowest run.
pub fn longest_interior_gap(counts: &[usize]) -> Option<(usize, usize)> {
    let first = counts.iter().position(|&c| c > 0)?;
    let last = counts.iter().rposition(|&c| c > 0)?;
    let mut best: Option<(usize, usize)> = None;
    let mut k = first;
    while k < last {
        if counts[k] == 0 {
            let start = k;
            while counts[k] == 0 {
                k += 1;
            }
            let len = k - start;
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((start, len));
            }
        } else {
            k += 1;
        }
    }
    best
}

/// Splits points at the center of the widest empty gap of the 50-bin
/// histogram of their entropies; points strictly below are easy.
pub fn partition_by_entropy<T: Scalar>(entropies: &[T]) -> Result<Partition<T>> {
    if entropies.len() < 2 {
        return Err(invalid("partition needs at least two points"));
    }
    if entropies.iter().any(|e| !e.is_finite()) {
        return Err(invalid("entropies must be finite"));
    }
    let (lo, hi) = min_max(entropies);
    let counts = range_histogram(entropies, PARTITION_BINS);
    let gap = if hi > lo { longest_interior_gap(&counts) } else { None };
    let (threshold, low_confidence) = match gap {
        Some((start, len)) => {
            let center = T::from_count(2 * start + len) / T::from_count(2 * PARTITION_BINS);
            (lo + center * (hi - lo), false)
        }
        None => (T::lit(FALLBACK_THRESHOLD), true),
    };
    let (easy, hard): (Vec<usize>, Vec<usize>) =
        (0..entropies.len()).partition(|&i| entropies[i] < threshold);
    Ok(Partition {
        easy,
        hard,
        threshold,
        low_confidence,
    })
}
