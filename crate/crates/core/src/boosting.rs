//! AdaBoost over axis-aligned decision stumps, recording the full weight
//! vector after every round.
//!
//! Two variants are supported. `Reweight` fits each stump on the weighted
//! training set. `Resample` fits each stump on an N-point bootstrap drawn
//! from the current weight distribution; the weighted error ε and the update
//! are still computed on all original points, so there is exactly one weight
//! per training point at every round.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Point};
use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, Rng};
use crate::scalar::Scalar;
use crate::tree::{fit_tree, Tree};

/// Probability vector over training points.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T>(Vec<T>);

impl<T: Scalar> WeightVector<T> {
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("weight vector needs at least one entry"));
        }
        Ok(WeightVector(vec![T::one() / T::from_count(n); n]))
    }

    /// Normalizes `raw` to sum one. Entries must be finite and nonnegative.
    pub fn normalized(raw: Vec<T>) -> Result<Self> {
        if raw.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: T = raw.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::Degenerate("weight vector sums to zero".into()));
        }
        Ok(WeightVector(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        let total: T = self.0.iter().copied().sum();
        self.0.iter().all(|w| *w >= T::zero()) && (total - T::one()).abs() <= tol
    }
}

/// `polarity` where `x[feature] > threshold`, the opposite label elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump<T> {
    pub feature: usize,
    pub threshold: T,
    pub polarity: Label,
}

impl<T: Scalar> Stump<T> {
    pub fn predict(&self, x: &Point<T>) -> Label {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            self.polarity.flipped()
        }
    }

    /// ±1 as a scalar.
    pub fn vote(&self, x: &Point<T>) -> T {
        self.predict(x).as_scalar()
    }
}

/// Result of fitting one stump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit<T> {
    pub stump: Stump<T>,
    /// Weighted 0/1 error as a fraction of the total weight.
    pub error: T,
}

/// Per-feature presorted view of a dataset, reused across rounds.
#[derive(Debug, Clone)]
pub struct StumpFitter<T> {
    order: [Vec<usize>; 2],
    values: [Vec<T>; 2],
    positive: Vec<bool>,
}

impl<T: Scalar> StumpFitter<T> {
    pub fn new(data: &Dataset<T>) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("cannot fit a stump on an empty dataset"));
        }
        let order = [0, 1].map(|f| {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.sort_by(|&a, &b| {
                data.points[a].x[f]
                    .partial_cmp(&data.points[b].x[f])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            idx
        });
        let values = [0, 1].map(|f| order[f].iter().map(|&i| data.points[i].x[f]).collect());
        let positive = data.points.iter().map(|p| p.y == Label::Positive).collect();
        Ok(StumpFitter {
            order,
            values,
            positive,
        })
    }

    /// Minimum weighted-error stump over every (feature, threshold, polarity)
    /// candidate. Thresholds are midpoints between consecutive distinct
    /// values plus one below the minimum (the constant classifiers). Ties go
    /// to the first candidate in feature / ascending-threshold / `+1`-first
    /// order.
    pub fn fit(&self, weights: &[T]) -> Result<StumpFit<T>> {
        let n = self.positive.len();
        if weights.len() != n {
            return Err(invalid(format!(
                "{} weights for {} points",
                weights.len(),
                n
            )));
        }
        let mut w_pos = T::zero();
        let mut w_neg = T::zero();
        for (w, &pos) in weights.iter().zip(&self.positive) {
            if pos {
                w_pos = w_pos + *w;
            } else {
                w_neg = w_neg + *w;
            }
        }
        let total = w_pos + w_neg;
        if !(total > T::zero()) {
            return Err(Error::Degenerate("stump weights sum to zero".into()));
        }

        let mut best: Option<StumpFit<T>> = None;
        let mut consider = |feature: usize, threshold: T, err_pos: T| {
            // err for polarity +1 (right side positive); the flip is 1 − err.
            let e_pos = err_pos / total;
            let e_neg = (total - err_pos) / total;
            for (polarity, e) in [(Label::Positive, e_pos), (Label::Negative, e_neg)] {
                if best.is_none_or(|b| e < b.error) {
                    best = Some(StumpFit {
                        stump: Stump {
                            feature,
                            threshold,
                            polarity,
                        },
                        error: e,
                    });
                }
            }
        };

        for f in 0..2 {
            let order = &self.order[f];
            let values = &self.values[f];
            // Everything to the right: +1 polarity misclassifies the negatives.
            consider(f, values[0] - T::one(), w_neg);
            let mut left_pos = T::zero();
            let mut left_neg = T::zero();
            for k in 0..n - 1 {
                let i = order[k];
                if self.positive[i] {
                    left_pos = left_pos + weights[i];
                } else {
                    left_neg = left_neg + weights[i];
                }
                let (a, b) = (values[k], values[k + 1]);
                if a < b {
                    let mut mid = (a + b) / T::lit(2.0);
                    if mid >= b {
                        mid = a;
                    }
                    consider(f, mid, left_pos + (w_neg - left_neg));
                }
            }
        }
        // `best` is always set: the below-minimum candidate exists.
        Ok(best.expect("at least one candidate"))
    }
}

/// `fit_stump(data, weights)`.
pub fn fit_stump<T: Scalar>(data: &Dataset<T>, weights: &WeightVector<T>) -> Result<StumpFit<T>> {
    if data.len() != weights.len() {
        return Err(invalid("data and weights differ in length"));
    }
    StumpFitter::new(data)?.fit(weights.as_slice())
}

/// Weighted 0/1 error of `stump` on `data`, as a fraction of total weight.
pub fn weighted_error<T: Scalar>(stump: &Stump<T>, data: &Dataset<T>, weights: &[T]) -> T {
    let mut wrong = T::zero();
    let mut total = T::zero();
    for (p, w) in data.points.iter().zip(weights) {
        total = total + *w;
        if stump.predict(&p.x) != p.y {
            wrong = wrong + *w;
        }
    }
    wrong / total
}

fn predicted_error<T: Scalar>(predictions: &[Label], labels: &[Label], weights: &[T]) -> T {
    let mut wrong = T::zero();
    let mut total = T::zero();
    for ((h, y), w) in predictions.iter().zip(labels).zip(weights) {
        total = total + *w;
        if h != y {
            wrong = wrong + *w;
        }
    }
    wrong / total
}

/// Multiplicative AdaBoost update `w_i ← w_i·exp(−α·y_i·h(x_i))`, renormalized.
pub fn weight_update<T: Scalar>(
    weights: &WeightVector<T>,
    predictions: &[Label],
    labels: &[Label],
    alpha: T,
) -> Result<WeightVector<T>> {
    if predictions.len() != weights.len() || labels.len() != weights.len() {
        return Err(invalid("weights, predictions and labels differ in length"));
    }
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(invalid(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let shrink = (-alpha).exp();
    let grow = alpha.exp();
    let raw: Vec<T> = weights
        .as_slice()
        .iter()
        .zip(predictions.iter().zip(labels))
        .map(|(w, (h, y))| if h == y { *w * shrink } else { *w * grow })
        .collect();
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::Degenerate("all weights vanished after update".into()));
    }
    Ok(WeightVector(raw.into_iter().map(|w| w / total).collect()))
}

/// `α = ½·ln((1 − ε)/ε)` with ε clamped to `[floor, 1 − floor]`.
pub fn stump_alpha<T: Scalar>(epsilon: T, floor: T) -> T {
    let e = epsilon.max(floor).min(T::one() - floor);
    T::lit(0.5) * ((T::one() - e) / e).ln()
}

/// Which weak learner a boosting run trains each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLearner {
    Stump,
    /// Gini tree; `None` grows until leaves are pure.
    Tree { max_depth: Option<usize> },
}

impl BaseLearner {
    pub const FULL_TREE: BaseLearner = BaseLearner::Tree { max_depth: None };
}

impl std::str::FromStr for BaseLearner {
    type Err = Error;

    /// `stump`, `tree` (unlimited depth) or `tree:<depth>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stump" => Ok(BaseLearner::Stump),
            "tree" => Ok(BaseLearner::FULL_TREE),
            other => match other.strip_prefix("tree:").map(str::parse::<usize>) {
                Some(Ok(d)) => Ok(BaseLearner::Tree { max_depth: Some(d) }),
                _ => Err(invalid(format!("unknown base learner `{other}`"))),
            },
        }
    }
}

impl std::fmt::Display for BaseLearner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BaseLearner::Stump => f.write_str("stump"),
            BaseLearner::Tree { max_depth: None } => f.write_str("tree"),
            BaseLearner::Tree { max_depth: Some(d) } => write!(f, "tree:{d}"),
        }
    }
}

/// A trained weak model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseModel<T> {
    Stump(Stump<T>),
    Tree(Tree<T>),
}

impl<T: Scalar> BaseModel<T> {
    pub fn predict(&self, x: &Point<T>) -> Label {
        match self {
            BaseModel::Stump(s) => s.predict(x),
            BaseModel::Tree(t) => t.predict(x),
        }
    }

    pub fn vote(&self, x: &Point<T>) -> T {
        self.predict(x).as_scalar()
    }

    pub fn as_stump(&self) -> Option<&Stump<T>> {
        match self {
            BaseModel::Stump(s) => Some(s),
            BaseModel::Tree(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member<T> {
    #[serde(flatten)]
    pub model: BaseModel<T>,
    pub alpha: T,
}

impl<T: Scalar> Member<T> {
    pub fn stump(stump: Stump<T>, alpha: T) -> Self {
        Member {
            model: BaseModel::Stump(stump),
            alpha,
        }
    }
}

/// Weighted vote of stumps; label is the sign of the score.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ensemble<T> {
    pub members: Vec<Member<T>>,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(members: Vec<Member<T>>) -> Result<Self> {
        if members.iter().any(|m| !m.alpha.is_finite()) {
            return Err(Error::Model("ensemble weights must be finite".into()));
        }
        Ok(Ensemble { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn ensure_nonempty(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::Model("empty ensemble".into()));
        }
        Ok(())
    }

    pub fn score(&self, x: &Point<T>) -> Result<T> {
        self.ensure_nonempty()?;
        Ok(self.raw_score(x))
    }

    fn raw_score(&self, x: &Point<T>) -> T {
        self.members
            .iter()
            .fold(T::zero(), |acc, m| acc + m.alpha * m.model.vote(x))
    }

    pub fn label(&self, x: &Point<T>) -> Result<Label> {
        Ok(Label::from_score(self.score(x)?))
    }

    /// `|score| / Σ|α|`; zero when every α is zero.
    pub fn margin(&self, x: &Point<T>) -> Result<T> {
        self.ensure_nonempty()?;
        let norm = self.alpha_norm();
        if norm == T::zero() {
            return Ok(T::zero());
        }
        Ok((self.raw_score(x).abs() / norm).min(T::one()))
    }

    pub fn alpha_norm(&self) -> T {
        self.members.iter().map(|m| m.alpha.abs()).sum()
    }

    /// Same stumps with every α negated.
    pub fn negated(&self) -> Self {
        Ensemble {
            members: self
                .members
                .iter()
                .map(|m| Member {
                    model: m.model.clone(),
                    alpha: -m.alpha,
                })
                .collect(),
        }
    }

    /// Labels for many points; stump-only ensembles go through the
    /// additive form.
    pub fn labels(&self, points: &[Point<T>]) -> Result<Vec<Label>> {
        self.ensure_nonempty()?;
        if self.members.iter().all(|m| m.model.as_stump().is_some()) {
            let scorer = AdditiveScorer::compile(self)?;
            Ok(points.iter().map(|x| scorer.label(x)).collect())
        } else {
            Ok(points
                .iter()
                .map(|x| Label::from_score(self.raw_score(x)))
                .collect())
        }
    }

    /// Fraction of `data` misclassified.
    pub fn error_rate(&self, data: &Dataset<T>) -> Result<T> {
        if data.is_empty() {
            return Err(invalid("error rate of an empty dataset"));
        }
        let locations = data.locations();
        let wrong = self
            .labels(&locations)?
            .iter()
            .zip(&data.points)
            .filter(|(h, p)| **h != p.y)
            .count();
        Ok(T::from_count(wrong) / T::from_count(data.len()))
    }
}

/// Stump ensembles are additive in the two coordinates; this stores the
/// score as two step functions so evaluation is `O(log members)`.
#[derive(Debug, Clone)]
pub struct AdditiveScorer<T> {
    base: T,
    thresholds: [Vec<T>; 2],
    // prefix[f][j] = Σ 2·α·pol over the j smallest thresholds of feature f
    prefix: [Vec<T>; 2],
}

impl<T: Scalar> AdditiveScorer<T> {
    pub fn compile(ensemble: &Ensemble<T>) -> Result<Self> {
        ensemble.ensure_nonempty()?;
        let mut base = T::zero();
        let mut steps: [Vec<(T, T)>; 2] = [Vec::new(), Vec::new()];
        for m in &ensemble.members {
            let stump = m
                .model
                .as_stump()
                .ok_or_else(|| Error::Model("additive form needs a stump-only ensemble".into()))?;
            let signed = m.alpha * stump.polarity.as_scalar::<T>();
            base = base - signed;
            steps[stump.feature].push((stump.threshold, signed + signed));
        }
        let mut thresholds = [Vec::new(), Vec::new()];
        let mut prefix = [Vec::new(), Vec::new()];
        for f in 0..2 {
            steps[f].sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite thresholds"));
            let mut acc = T::zero();
            prefix[f].push(acc);
            for &(t, jump) in &steps[f] {
                acc = acc + jump;
                thresholds[f].push(t);
                prefix[f].push(acc);
            }
        }
        Ok(AdditiveScorer {
            base,
            thresholds,
            prefix,
        })
    }

    pub fn score(&self, x: &Point<T>) -> T {
        let mut s = self.base;
        for f in 0..2 {
            let passed = self.thresholds[f].partition_point(|t| *t < x[f]);
            s = s + self.prefix[f][passed];
        }
        s
    }

    pub fn label(&self, x: &Point<T>) -> Label {
        Label::from_score(self.score(x))
    }
}

/// Fraction of `points` on which the two models' labels differ.
pub fn disagreement<T: Scalar>(a: &Ensemble<T>, b: &Ensemble<T>, points: &[Point<T>]) -> Result<T> {
    a.ensure_nonempty()?;
    b.ensure_nonempty()?;
    if points.is_empty() {
        return Err(invalid("disagreement over an empty point set"));
    }
    let mut differ = 0usize;
    for x in points {
        if a.label(x)? != b.label(x)? {
            differ += 1;
        }
    }
    Ok(T::from_count(differ) / T::from_count(points.len()))
}

/// Weight vectors after each round, stored row-major (`iterations × points`).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix<T> {
    n_points: usize,
    values: Vec<T>,
}

impl<T: Scalar> TraceMatrix<T> {
    pub fn new(n_points: usize) -> Self {
        TraceMatrix {
            n_points,
            values: Vec::new(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_points = rows.first().map_or(0, Vec::len);
        if n_points == 0 {
            return Err(invalid("trace matrix needs at least one nonempty row"));
        }
        let mut m = TraceMatrix::new(n_points);
        for row in rows {
            if row.len() != n_points {
                return Err(invalid("ragged trace matrix"));
            }
            m.values.extend(row);
        }
        Ok(m)
    }

    pub fn push_row(&mut self, row: &[T]) {
        assert_eq!(row.len(), self.n_points, "row length mismatch");
        self.values.extend_from_slice(row);
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_iterations(&self) -> usize {
        self.values.len().checked_div(self.n_points).unwrap_or(0)
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.n_points..(t + 1) * self.n_points]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks(self.n_points.max(1))
    }

    /// The weight trace of point `i` across all rounds.
    pub fn column(&self, i: usize) -> Vec<T> {
        self.rows().map(|r| r[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Reweight,
    Resample,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reweight" => Ok(Variant::Reweight),
            "resample" => Ok(Variant::Resample),
            other => Err(invalid(format!("unknown boosting variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Reweight => "reweight",
            Variant::Resample => "resample",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostConfig<T> {
    pub iterations: usize,
    pub variant: Variant,
    pub learner: BaseLearner,
    pub epsilon_floor: T,
    /// Consecutive rejected rounds (ε ≥ ½) before the run stops early.
    pub max_failures: usize,
    pub seed: u64,
}

impl<T: Scalar> BoostConfig<T> {
    pub fn new(iterations: usize, variant: Variant, seed: u64) -> Self {
        BoostConfig {
            iterations,
            variant,
            learner: BaseLearner::Stump,
            epsilon_floor: T::lit(1e-6),
            max_failures: 10,
            seed,
        }
    }

    pub fn with_learner(self, learner: BaseLearner) -> Self {
        BoostConfig { learner, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(invalid("iterations must be at least 1"));
        }
        if !(self.epsilon_floor > T::zero() && self.epsilon_floor < T::lit(0.5)) {
            return Err(invalid("epsilon floor must lie in (0, 0.5)"));
        }
        if self.max_failures == 0 {
            return Err(invalid("max_failures must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BoostRun<T> {
    pub ensemble: Ensemble<T>,
    pub trace: TraceMatrix<T>,
    /// Set when `max_failures` consecutive rounds were rejected; the trace
    /// then holds fewer than `iterations` rows.
    pub stopped_early: bool,
    pub rejected_rounds: usize,
}

/// Draws `n` indices from the categorical distribution `weights` and
/// returns the per-index multiplicities.
fn bootstrap_counts<T: Scalar>(weights: &[T], rng: &mut Rng) -> Vec<T> {
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0f64;
    for w in weights {
        acc += w.to_f64_lossy();
        cumulative.push(acc);
    }
    let mut counts = vec![T::zero(); weights.len()];
    for _ in 0..weights.len() {
        let u = rng.random::<f64>() * acc;
        let mut i = cumulative.partition_point(|c| *c <= u);
        if i >= weights.len() {
            i = weights.len() - 1;
        }
        // skip zero-weight entries that share a cumulative value
        while weights[i] == T::zero() && i + 1 < weights.len() {
            i += 1;
        }
        counts[i] = counts[i] + T::one();
    }
    counts
}

/// Runs AdaBoost and records the weight vector after every accepted round.
pub fn boost<T: Scalar>(data: &Dataset<T>, config: &BoostConfig<T>) -> Result<BoostRun<T>> {
    config.validate()?;
    if data.is_empty() {
        return Err(invalid("cannot boost on an empty dataset"));
    }
    if data
        .points
        .iter()
        .any(|p| !(p.x[0].is_finite() && p.x[1].is_finite()))
    {
        return Err(invalid("features must be finite"));
    }
    if data.count(Label::Positive) == 0 || data.count(Label::Negative) == 0 {
        return Err(Error::Training("both classes must be present".into()));
    }

    let fitter = match config.learner {
        BaseLearner::Stump => Some(StumpFitter::new(data)?),
        BaseLearner::Tree { .. } => None,
    };
    let labels: Vec<Label> = data.points.iter().map(|p| p.y).collect();
    let mut rng = rng_from_seed(config.seed);
    let mut weights = WeightVector::uniform(data.len())?;
    let mut trace = TraceMatrix::new(data.len());
    let mut members = Vec::with_capacity(config.iterations);
    let mut failures = 0usize;
    let mut rejected = 0usize;
    let mut stopped_early = false;

    while members.len() < config.iterations {
        let counts;
        let train_weights = match config.variant {
            Variant::Reweight => weights.as_slice(),
            Variant::Resample => {
                counts = bootstrap_counts(weights.as_slice(), &mut rng);
                counts.as_slice()
            }
        };
        let model = match (&fitter, config.learner) {
            (Some(f), _) => BaseModel::Stump(f.fit(train_weights)?.stump),
            (None, BaseLearner::Tree { max_depth }) => BaseModel::Tree(fit_tree(data, train_weights, max_depth)?),
            (None, BaseLearner::Stump) => unreachable!("stump runs own a fitter"),
        };
        let predictions: Vec<Label> = data.points.iter().map(|p| model.predict(&p.x)).collect();
        let epsilon = predicted_error(&predictions, &labels, weights.as_slice());
        if epsilon >= T::lit(0.5) {
            failures += 1;
            rejected += 1;
            if failures >= config.max_failures {
                stopped_early = true;
                break;
            }
            continue;
        }
        failures = 0;
        let alpha = stump_alpha(epsilon, config.epsilon_floor);
        weights = weight_update(&weights, &predictions, &labels, alpha)?;
        trace.push_row(weights.as_slice());
        members.push(Member { model, alpha });
    }

    Ok(BoostRun {
        ensemble: Ensemble { members },
        trace,
        stopped_early,
        rejected_rounds: rejected,
    })
}
