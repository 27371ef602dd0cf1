//! Incremental training-set growth driven by a query strategy.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{trace_entropies, DEFAULT_ENTROPY_BINS};
use crate::boosting::{boost, BaseLearner, BoostConfig, BoostRun, Ensemble, Variant};
use crate::data::{Dataset, DomainBox, LabeledPoint, OracleLabeler, Point, Setting};
use crate::error::{invalid, Error, Result};
use crate::field::{
    default_bandwidth, default_grid, rasterize, sample_box, sample_high_entropy, EntropyField, FieldRaster,
    DEFAULT_QUANTILE,
};
use crate::rng::{Rng, SeedStream};
use crate::scalar::Scalar;

pub const DEFAULT_POOL: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Random,
    /// Uniform draws from the top `1 − quantile` of the entropy field.
    Entropy { quantile: f64 },
    /// The `k` lowest-margin points out of `pool` uniform candidates.
    Margin { pool: usize },
}

impl Strategy {
    pub const ENTROPY: Strategy = Strategy::Entropy {
        quantile: DEFAULT_QUANTILE,
    };
    pub const MARGIN: Strategy = Strategy::Margin { pool: DEFAULT_POOL };

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Entropy { .. } => "entropy",
            Strategy::Margin { .. } => "margin",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::Random => Ok(()),
            Strategy::Entropy { quantile } if quantile > 0.0 && quantile < 1.0 => Ok(()),
            Strategy::Entropy { quantile } => Err(invalid(format!("entropy quantile {quantile} outside (0, 1)"))),
            Strategy::Margin { pool } if pool >= 1 => Ok(()),
            Strategy::Margin { .. } => Err(invalid("margin pool must hold at least one candidate")),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// `random`, `entropy[:q]` or `margin[:pool]`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let bad = || invalid(format!("bad strategy `{s}`"));
        let strategy = match (kind, arg) {
            ("random", None) => Strategy::Random,
            ("entropy", None) => Strategy::ENTROPY,
            ("entropy", Some(q)) => Strategy::Entropy {
                quantile: q.parse().map_err(|_| bad())?,
            },
            ("margin", None) => Strategy::MARGIN,
            ("margin", Some(m)) => Strategy::Margin {
                pool: m.parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Random => f.write_str("random"),
            Strategy::Entropy { quantile } => write!(f, "entropy:{quantile}"),
            Strategy::Margin { pool } => write!(f, "margin:{pool}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub setting: Setting,
    pub initial: usize,
    pub batch: usize,
    pub cap: usize,
    pub repetitions: usize,
    pub test_size: usize,
    /// Boosting rounds per retraining.
    pub iterations: usize,
    pub variant: Variant,
    pub learner: BaseLearner,
    pub entropy_bins: usize,
    pub bandwidth: f64,
    pub grid: (usize, usize),
    pub strategy: Strategy,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(setting: Setting, strategy: Strategy, seed: u64) -> Self {
        RunConfig {
            setting,
            initial: 40,
            batch: 10,
            cap: 1000,
            repetitions: 10,
            test_size: 10_000,
            iterations: 1000,
            variant: Variant::Resample,
            learner: BaseLearner::FULL_TREE,
            entropy_bins: DEFAULT_ENTROPY_BINS,
            bandwidth: default_bandwidth(setting),
            grid: default_grid(setting),
            strategy,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setting.oracle()?;
        if self.initial == 0 || self.batch == 0 || self.repetitions == 0 || self.test_size == 0 {
            return Err(invalid("initial, batch, repetitions and test size must be positive"));
        }
        if self.cap < self.initial {
            return Err(invalid(format!("cap {} below initial size {}", self.cap, self.initial)));
        }
        if self.iterations == 0 || self.entropy_bins == 0 {
            return Err(invalid("iterations and entropy bins must be positive"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(invalid("bandwidth must be positive"));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(invalid("grid needs at least 2 cells per axis"));
        }
        self.strategy.validate()
    }

    /// Training-set sizes at which the test error is recorded.
    pub fn budgets(&self) -> Vec<usize> {
        let mut out = vec![self.initial];
        let mut n = self.initial;
        while n < self.cap {
            n = (n + self.batch).min(self.cap);
            out.push(n);
        }
        out
    }

    fn boost_config<T: Scalar>(&self, seed: u64) -> BoostConfig<T> {
        BoostConfig::new(self.iterations, self.variant, seed).with_learner(self.learner)
    }
}

/// One repetition's error per budget; shorter than the budget list when the
/// repetition failed part way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionCurve {
    pub repetition: usize,
    pub errors: Vec<f64>,
    pub failure: Option<String>,
    /// Rounds where the entropy sampler had to lower its quantile.
    pub quantile_adjustments: usize,
}

impl RepetitionCurve {
    pub fn flagged(&self) -> bool {
        self.failure.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub strategy: Strategy,
    pub budgets: Vec<usize>,
    pub repetitions: Vec<RepetitionCurve>,
}

impl LearningCurve {
    fn complete(&self) -> impl Iterator<Item = &RepetitionCurve> {
        self.repetitions.iter().filter(|r| !r.flagged())
    }

    /// Mean error per budget over unflagged repetitions.
    pub fn mean_errors(&self) -> Vec<f64> {
        let n = self.complete().count();
        (0..self.budgets.len())
            .map(|b| self.complete().map(|r| r.errors[b]).sum::<f64>() / n as f64)
            .collect()
    }

    /// Standard error of the mean per budget; zero with one repetition.
    pub fn standard_errors(&self) -> Vec<f64> {
        let n = self.complete().count();
        let means = self.mean_errors();
        means
            .iter()
            .enumerate()
            .map(|(b, m)| {
                if n < 2 {
                    return 0.0;
                }
                let ss: f64 = self.complete().map(|r| (r.errors[b] - m).powi(2)).sum();
                (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
            })
            .collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.repetitions.len() - self.complete().count()
    }
}

/// What a strategy may look at when choosing new points.
pub struct SelectionContext<'a, T> {
    pub domain: DomainBox<T>,
    pub ensemble: &'a Ensemble<T>,
    pub field: Option<(&'a EntropyField<T>, &'a FieldRaster<T>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub points: Vec<Point<T>>,
    pub quantile_adjusted: bool,
}

pub fn select_batch<T: Scalar>(
    strategy: &Strategy,
    ctx: &SelectionContext<'_, T>,
    k: usize,
    rng: &mut Rng,
) -> Result<Selection<T>> {
    if k == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    strategy.validate()?;
    match *strategy {
        Strategy::Random => Ok(Selection {
            points: sample_box(&ctx.domain, k, rng),
            quantile_adjusted: false,
        }),
        Strategy::Entropy { quantile } => {
            let (field, raster) = ctx
                .field
                .ok_or_else(|| invalid("entropy strategy needs an entropy field"))?;
            let s = sample_high_entropy(field, raster, k, quantile, rng)?;
            Ok(Selection {
                points: s.points,
                quantile_adjusted: s.adjusted,
            })
        }
        Strategy::Margin { pool } => {
            let candidates = sample_box(&ctx.domain, pool.max(k), rng);
            let mut scored = candidates
                .into_iter()
                .map(|x| ctx.ensemble.margin(&x).map(|m| (m, x)))
                .collect::<Result<Vec<_>>>()?;
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite margins"));
            Ok(Selection {
                points: scored.into_iter().take(k).map(|(_, x)| x).collect(),
                quantile_adjusted: false,
            })
        }
    }
}

/// Entropy field over the training locations from a boosting run's traces.
pub fn entropy_field_from_run<T: Scalar>(
    train: &Dataset<T>,
    run: &BoostRun<T>,
    bins: usize,
    bandwidth: T,
) -> Result<EntropyField<T>> {
    let entropies = trace_entropies(&run.trace, bins)?;
    EntropyField::new(train.locations(), entropies, bandwidth)
}

fn test_error<T: Scalar>(ensemble: &Ensemble<T>, test: &[LabeledPoint<T>]) -> Result<f64> {
    let locations: Vec<Point<T>> = test.iter().map(|p| p.x).collect();
    let labels = ensemble.labels(&locations)?;
    let wrong = labels.iter().zip(test).filter(|(l, p)| **l != p.y).count();
    Ok(wrong as f64 / test.len() as f64)
}

/// Seeds depend on the repetition and round only, so every strategy starts
/// from the same data and sees the same random streams.
fn repetition_stream(seed: u64, rep: usize) -> SeedStream {
    SeedStream::new(seed).child("repetition").index(rep as u64)
}

fn run_repetition<T: Scalar>(
    config: &RunConfig,
    strategy: &Strategy,
    oracle: OracleLabeler,
    rep: usize,
) -> RepetitionCurve {
    let stream = repetition_stream(config.seed, rep);
    let domain: DomainBox<T> = oracle.domain();
    let test = oracle.sample::<T>(config.test_size, &mut stream.child("test").rng());
    let mut train = Dataset::new(
        oracle.sample::<T>(config.initial, &mut stream.child("initial").rng()),
        domain,
    );
    let mut curve = RepetitionCurve {
        repetition: rep,
        errors: Vec::new(),
        failure: None,
        quantile_adjustments: 0,
    };
    let budgets = config.budgets();
    for (round, &budget) in budgets.iter().enumerate() {
        debug_assert_eq!(train.len(), budget);
        let round_stream = stream.child("round").index(round as u64);
        let step = (|| -> Result<Option<Dataset<T>>> {
            let run = boost(&train, &config.boost_config(round_stream.child("boost").seed()))?;
            if run.stopped_early {
                return Err(Error::Training(format!(
                    "boosting stopped after {} of {} rounds",
                    run.ensemble.len(),
                    config.iterations
                )));
            }
            curve.errors.push(test_error(&run.ensemble, &test)?);
            let Some(&next) = budgets.get(round + 1) else {
                return Ok(None);
            };
            let field;
            let raster;
            let field_pair = match strategy {
                Strategy::Entropy { .. } => {
                    field = entropy_field_from_run(&train, &run, config.entropy_bins, T::lit(config.bandwidth))?;
                    raster = rasterize(&field, &domain, config.grid.0, config.grid.1)?;
                    Some((&field, &raster))
                }
                _ => None,
            };
            let ctx = SelectionContext {
                domain,
                ensemble: &run.ensemble,
                field: field_pair,
            };
            let selection = select_batch(strategy, &ctx, next - budget, &mut round_stream.child("select").rng())?;
            if selection.quantile_adjusted {
                curve.quantile_adjustments += 1;
            }
            let mut grown = train.clone();
            grown.extend(selection.points.into_iter().map(|x| oracle.labeled(x)));
            Ok(Some(grown))
        })();
        match step {
            Ok(Some(next)) => train = next,
            Ok(None) => break,
            Err(e) => {
                curve.failure = Some(format!("budget {budget}: {e}"));
                break;
            }
        }
    }
    curve
}

/// Runs every repetition of one strategy.
pub fn run_active_learning<T: Scalar>(config: &RunConfig) -> Result<LearningCurve> {
    let mut curves = compare_strategies_unchecked::<T>(config, &[config.strategy])?;
    Ok(curves.remove(0))
}

/// Paired runs of several strategies sharing initial sets, test sets and
/// seed streams.
pub fn compare_strategies<T: Scalar>(config: &RunConfig, strategies: &[Strategy]) -> Result<Vec<LearningCurve>> {
    if strategies.len() < 2 {
        return Err(invalid("comparison needs at least two strategies"));
    }
    compare_strategies_unchecked::<T>(config, strategies)
}

fn compare_strategies_unchecked<T: Scalar>(config: &RunConfig, strategies: &[Strategy]) -> Result<Vec<LearningCurve>> {
    config.validate()?;
    for s in strategies {
        s.validate()?;
    }
    let oracle = config.setting.oracle()?;
    let jobs: Vec<(usize, usize)> = (0..strategies.len())
        .flat_map(|s| (0..config.repetitions).map(move |r| (s, r)))
        .collect();
    let rows: Vec<RepetitionCurve> = jobs
        .par_iter()
        .map(|&(s, r)| run_repetition::<T>(config, &strategies[s], oracle, r))
        .collect();
    let budgets = config.budgets();
    Ok(strategies
        .iter()
        .enumerate()
        .map(|(s, strategy)| LearningCurve {
            strategy: *strategy,
            budgets: budgets.clone(),
            repetitions: rows[s * config.repetitions..(s + 1) * config.repetitions].to_vec(),
        })
        .collect())
}
