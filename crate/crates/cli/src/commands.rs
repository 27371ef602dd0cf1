use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use boostdyn::analysis::{
    default_split, lda_separate, partition_by_entropy, stationarity_stats, Partition, SeparationScores, TraceStats,
};
use boostdyn::boosting::{boost, disagreement, BaseLearner, BoostConfig, Variant};
use boostdyn::data::{generate, generate_gaussians, Dataset, Label, Setting};
use boostdyn::field::{default_bandwidth, default_grid, rasterize, sample_box, EntropyField};
use boostdyn::io::{self, DatasetSidecar};
use boostdyn::rng::SeedStream;
use boostdyn::sampling::{compare_strategies, run_active_learning, LearningCurve, RunConfig, Strategy};
use serde::Serialize;

use crate::manifest::OutputDir;
use crate::{CompareArgs, FieldArgs, GenArgs, SampleArgs, TraceArgs};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn load_data(path: &Path) -> Result<(Dataset<f64>, Option<DatasetSidecar>)> {
    io::load_dataset(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_grid(raw: &str) -> Result<(usize, usize)> {
    let (a, b) = raw
        .split_once(['x', 'X'])
        .ok_or_else(|| anyhow!("grid `{raw}` is not of the form NXxNY"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn boost_config(iterations: usize, variant: Variant, learner: BaseLearner, seed: u64) -> BoostConfig<f64> {
    BoostConfig::new(iterations, variant, seed).with_learner(learner)
}

#[derive(Serialize)]
struct GenConfig {
    setting: Setting,
    n: usize,
    n_per_component: Option<usize>,
}

pub fn gen(a: GenArgs) -> Result<()> {
    let files = ["dataset.csv".to_string(), "dataset.json".to_string()];
    let out = OutputDir::prepare(&a.out.out, &files, a.out.force)?;
    let rng = || SeedStream::new(a.seed).child("gen").rng();
    let (data, n_per) = match a.setting {
        Setting::Gaussians => {
            let per = match (a.n_per, a.n) {
                (Some(p), _) => p,
                (None, Some(n)) if n % 4 == 0 => n / 4,
                (None, Some(n)) => bail!("--n {n} is not a multiple of the 4 Gaussian components"),
                (None, None) => 100,
            };
            (generate_gaussians::<f64>(per, &mut rng())?, Some(per))
        }
        setting => {
            if a.n_per.is_some() {
                bail!("--n-per only applies to the gaussians setting");
            }
            (generate::<f64>(setting, a.n.unwrap_or(400), &mut rng())?, None)
        }
    };
    let sidecar = DatasetSidecar {
        setting: a.setting,
        n: data.len(),
        seed: a.seed,
    };
    io::save_dataset(&data, &sidecar, &out.path("dataset.csv"))?;
    println!("wrote {} {} points to {}", data.len(), a.setting, a.out.out.display());
    out.finish(
        "gen",
        a.seed,
        GenConfig {
            setting: a.setting,
            n: data.len(),
            n_per_component: n_per,
        },
        &[],
    )
}

#[derive(Serialize)]
struct TraceConfig {
    data: PathBuf,
    setting: Option<Setting>,
    n_points: usize,
    iterations: usize,
    variant: Variant,
    learner: BaseLearner,
    epsilon_floor: f64,
    split: usize,
    bins: usize,
}

#[derive(Serialize)]
struct LdaReport {
    threshold: Option<f64>,
    scores: Option<SeparationScores>,
    error: Option<String>,
}

#[derive(Serialize)]
struct TraceReport {
    iterations_run: usize,
    ensemble_size: usize,
    stopped_early: bool,
    rejected_rounds: usize,
    training_error: f64,
    ks_rejected: usize,
    partition_threshold: f64,
    easy: usize,
    hard: usize,
    low_confidence: bool,
    lda_mean: LdaReport,
    lda_entropy: LdaReport,
}

fn lda_report(feature: &[f64], rejected: &[bool]) -> LdaReport {
    match lda_separate(feature, rejected) {
        Ok(sep) => LdaReport {
            threshold: Some(sep.model.threshold / sep.model.weights[0]),
            scores: Some(sep.scores),
            error: None,
        },
        Err(e) => LdaReport {
            threshold: None,
            scores: None,
            error: Some(e.to_string()),
        },
    }
}

fn print_lda(name: &str, r: &LdaReport) {
    match &r.scores {
        Some(s) => println!(
            "  lda {name:<8} precision {:.3} recall {:.3} | easy-class precision {:.3} recall {:.3}",
            s.precision, s.recall, s.easy_precision, s.easy_recall
        ),
        None => println!(
            "  lda {name:<8} unavailable: {}",
            r.error.as_deref().unwrap_or("")
        ),
    }
}

pub fn trace(a: TraceArgs) -> Result<()> {
    let files = [
        "trace.csv".to_string(),
        "ensemble.json".to_string(),
        "stats.csv".to_string(),
        "report.json".to_string(),
    ];
    let out = OutputDir::prepare(&a.out.out, &files, a.out.force)?;
    let (data, sidecar) = load_data(&a.data)?;
    let stream = SeedStream::new(a.seed).child("trace");
    let config = boost_config(a.iterations, a.boost.variant, a.boost.learner, stream.seed());
    let run = boost(&data, &config)?;
    let t = run.trace.n_iterations();
    if t == 0 {
        bail!("boosting rejected every round; no trace to analyse");
    }
    let split = a.split.unwrap_or_else(|| default_split(t));
    let stats: Vec<TraceStats<f64>> = stationarity_stats(&run.trace, split, a.bins)?;
    let entropies: Vec<f64> = stats.iter().map(|s| s.entropy).collect();
    let means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    let rejected: Vec<bool> = stats.iter().map(TraceStats::rejected).collect();
    let partition: Partition<f64> = partition_by_entropy(&entropies)?;

    io::write_trace(&run.trace, create(&out.path("trace.csv"))?)?;
    io::write_ensemble(&run.ensemble, create(&out.path("ensemble.json"))?)?;
    io::write_stats(&stats, &partition, create(&out.path("stats.csv"))?)?;
    let report = TraceReport {
        iterations_run: t,
        ensemble_size: run.ensemble.len(),
        stopped_early: run.stopped_early,
        rejected_rounds: run.rejected_rounds,
        training_error: run.ensemble.error_rate(&data)?,
        ks_rejected: rejected.iter().filter(|r| **r).count(),
        partition_threshold: partition.threshold,
        easy: partition.easy.len(),
        hard: partition.hard.len(),
        low_confidence: partition.low_confidence,
        lda_mean: lda_report(&means, &rejected),
        lda_entropy: lda_report(&entropies, &rejected),
    };
    io::save_json(&report, &out.path("report.json"))?;

    println!(
        "{t} rounds on {} points ({} rejected{})",
        data.len(),
        run.rejected_rounds,
        if run.stopped_early { ", stopped early" } else { "" }
    );
    println!(
        "  partition at {:.3} bits: {} easy, {} hard{}",
        partition.threshold,
        partition.easy.len(),
        partition.hard.len(),
        if partition.low_confidence { " (fallback threshold)" } else { "" }
    );
    println!("  ks rejected at 0.05: {}", report.ks_rejected);
    print_lda("mean", &report.lda_mean);
    print_lda("entropy", &report.lda_entropy);

    out.finish(
        "trace",
        a.seed,
        TraceConfig {
            data: a.data.clone(),
            setting: sidecar.map(|s| s.setting),
            n_points: data.len(),
            iterations: a.iterations,
            variant: a.boost.variant,
            learner: a.boost.learner,
            epsilon_floor: config.epsilon_floor,
            split,
            bins: a.bins,
        },
        &[a.data],
    )
}

#[derive(Serialize)]
struct FieldConfig {
    stats: PathBuf,
    data: PathBuf,
    setting: Option<Setting>,
    bandwidth: f64,
    grid: (usize, usize),
    domain_lower: [f64; 2],
    domain_upper: [f64; 2],
    extrapolated_cells: usize,
}

pub fn field(a: FieldArgs) -> Result<()> {
    let files = ["raster.csv".to_string(), "raster.pgm".to_string()];
    let out = OutputDir::prepare(&a.out.out, &files, a.out.force)?;
    let (data, sidecar) = load_data(&a.data)?;
    let rows = io::read_stats::<f64>(File::open(&a.stats).with_context(|| format!("opening {}", a.stats.display()))?)
        .with_context(|| format!("reading {}", a.stats.display()))?;
    if rows.len() != data.len() {
        bail!("{} stats rows for {} data points", rows.len(), data.len());
    }
    let mut entropies = vec![f64::NAN; data.len()];
    for r in &rows {
        let slot = entropies
            .get_mut(r.point_id)
            .ok_or_else(|| anyhow!("point_id {} out of range", r.point_id))?;
        *slot = r.stats.entropy;
    }
    if entropies.iter().any(|e| e.is_nan()) {
        bail!("stats file does not cover every point");
    }
    let setting = a.setting.or(sidecar.map(|s| s.setting));
    let bandwidth = match (a.bandwidth, setting) {
        (Some(b), _) => b,
        (None, Some(s)) => default_bandwidth(s),
        (None, None) => bail!("no setting known for this dataset; pass --bandwidth"),
    };
    let grid = match (&a.grid, setting) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(s)) => default_grid(s),
        (None, None) => (200, 200),
    };
    let field = EntropyField::new(data.locations(), entropies, bandwidth)?;
    let raster = rasterize(&field, &data.domain, grid.0, grid.1)?;

    io::write_raster_csv(&raster, create(&out.path("raster.csv"))?)?;
    io::write_raster_pgm(&raster, create(&out.path("raster.pgm"))?)?;
    println!(
        "raster {}x{} bandwidth {bandwidth}: H in [{:.3}, {:.3}]",
        grid.0,
        grid.1,
        raster.min(),
        raster.max()
    );
    out.finish(
        "field",
        0,
        FieldConfig {
            stats: a.stats.clone(),
            data: a.data.clone(),
            setting,
            bandwidth,
            grid,
            domain_lower: data.domain.lower,
            domain_upper: data.domain.upper,
            extrapolated_cells: raster.extrapolated_cells,
        },
        &[a.data, a.stats],
    )
}

fn parse_strategies(raw: &str, quantile: Option<f64>, pool: Option<usize>) -> Result<Vec<Strategy>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            Ok(match (s, quantile, pool) {
                ("entropy", Some(q), _) => Strategy::Entropy { quantile: q },
                ("margin", _, Some(m)) => Strategy::Margin { pool: m },
                _ => s.parse::<Strategy>()?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                bail!("no strategies given");
            }
            for s in &v {
                s.validate()?;
            }
            Ok(v)
        })
}

/// `curve_<name>.csv`, numbered when a name repeats.
fn curve_file_names(strategies: &[Strategy]) -> Vec<String> {
    strategies
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let repeats = strategies.iter().filter(|o| o.name() == s.name()).count() > 1;
            if repeats {
                format!("curve_{}_{i}.csv", s.name())
            } else {
                format!("curve_{}.csv", s.name())
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SampleConfig {
    run: RunConfig,
    strategies: Vec<String>,
    flagged_repetitions: Vec<(String, usize)>,
    quantile_adjustments: Vec<(String, usize)>,
}

pub fn sample(a: SampleArgs) -> Result<()> {
    let strategies = parse_strategies(&a.strategies, a.quantile, a.pool)?;
    let mut run = RunConfig::new(a.setting, strategies[0], a.seed);
    run.initial = a.initial;
    run.batch = a.batch;
    run.cap = a.cap;
    run.repetitions = a.reps;
    run.test_size = a.test_size;
    run.iterations = a.iterations;
    run.variant = a.boost.variant;
    run.learner = a.boost.learner;
    if let Some(b) = a.bandwidth {
        run.bandwidth = b;
    }
    if let Some(g) = &a.grid {
        run.grid = parse_grid(g)?;
    }
    run.validate()?;

    let mut files = curve_file_names(&strategies);
    files.push("summary.csv".into());
    let out = OutputDir::prepare(&a.out.out, &files, a.out.force)?;
    let curves: Vec<LearningCurve> = if strategies.len() == 1 {
        vec![run_active_learning::<f64>(&run)?]
    } else {
        compare_strategies::<f64>(&run, &strategies)?
    };
    for (curve, name) in curves.iter().zip(&files) {
        io::write_curve(curve, create(&out.path(name))?)?;
    }
    io::write_summary(&curves, create(&out.path("summary.csv"))?)?;

    for curve in &curves {
        let means = curve.mean_errors();
        let last = curve.budgets.len() - 1;
        println!(
            "{:<14} error {:.4} at {} -> {:.4} at {}{}",
            curve.strategy.to_string(),
            means[0],
            curve.budgets[0],
            means[last],
            curve.budgets[last],
            match curve.flagged_count() {
                0 => String::new(),
                k => format!(" ({k} repetitions flagged)"),
            }
        );
        for rep in curve.repetitions.iter().filter(|r| r.flagged()) {
            eprintln!("  repetition {}: {}", rep.repetition, rep.failure.as_deref().unwrap_or(""));
        }
    }
    let config = SampleConfig {
        run,
        strategies: strategies.iter().map(Strategy::to_string).collect(),
        flagged_repetitions: curves
            .iter()
            .map(|c| (c.strategy.to_string(), c.flagged_count()))
            .collect(),
        quantile_adjustments: curves
            .iter()
            .map(|c| {
                (
                    c.strategy.to_string(),
                    c.repetitions.iter().map(|r| r.quantile_adjustments).sum(),
                )
            })
            .collect(),
    };
    out.finish("sample", a.seed, config, &[])
}

#[derive(Serialize)]
struct CompareConfig {
    data: PathBuf,
    stats: PathBuf,
    iterations: usize,
    variant: Variant,
    learner: BaseLearner,
    test_size: usize,
}

#[derive(Serialize)]
struct Comparison {
    n_full: usize,
    n_hard: usize,
    disagreement: f64,
    test_error_full: Option<f64>,
    test_error_hard: Option<f64>,
}

pub fn compare_models(a: CompareArgs) -> Result<()> {
    let files = ["comparison.json".to_string()];
    let out = OutputDir::prepare(&a.out.out, &files, a.out.force)?;
    let (data, sidecar) = load_data(&a.data)?;
    let rows = io::read_stats::<f64>(File::open(&a.stats).with_context(|| format!("opening {}", a.stats.display()))?)
        .with_context(|| format!("reading {}", a.stats.display()))?;
    let hard: Vec<usize> = rows.iter().filter(|r| !r.easy).map(|r| r.point_id).collect();
    if let Some(bad) = hard.iter().find(|i| **i >= data.len()) {
        bail!("point_id {bad} out of range for {} points", data.len());
    }
    let hard_data = data.subset(&hard);
    let stream = SeedStream::new(a.seed).child("compare");
    let config = boost_config(a.iterations, a.boost.variant, a.boost.learner, stream.child("boost").seed());
    let full = boost(&data, &config)?;
    let reduced = boost(&hard_data, &config).context("training on hard points only")?;

    let mut rng = stream.child("test").rng();
    let oracle = sidecar.and_then(|s| s.setting.oracle().ok());
    let test = sample_box(&data.domain, a.test_size, &mut rng);
    let dis = disagreement(&full.ensemble, &reduced.ensemble, &test)?;
    let (err_full, err_hard) = match oracle {
        Some(o) => {
            let truth: Vec<_> = test.iter().map(|x| o.label(x)).collect();
            let rate = |labels: Vec<Label>| -> f64 {
                labels.iter().zip(&truth).filter(|(a, b)| a != b).count() as f64 / truth.len() as f64
            };
            (
                Some(rate(full.ensemble.labels(&test)?)),
                Some(rate(reduced.ensemble.labels(&test)?)),
            )
        }
        None => (None, None),
    };
    let result = Comparison {
        n_full: data.len(),
        n_hard: hard_data.len(),
        disagreement: dis,
        test_error_full: err_full,
        test_error_hard: err_hard,
    };
    io::save_json(&result, &out.path("comparison.json"))?;
    println!(
        "{} hard of {} points; models disagree on {:.4} of {} test points",
        result.n_hard, result.n_full, dis, a.test_size
    );
    if let (Some(f), Some(h)) = (err_full, err_hard) {
        println!("  test error full {f:.4} hard-only {h:.4}");
    }
    out.finish(
        "compare-models",
        a.seed,
        CompareConfig {
            data: a.data.clone(),
            stats: a.stats.clone(),
            iterations: a.iterations,
            variant: a.boost.variant,
            learner: a.boost.learner,
            test_size: a.test_size,
        },
        &[a.data, a.stats],
    )
}
