use std::collections::BTreeMap;

use ggsp_core::graph::{correlation_graph, generate_graph, knn_graph, GraphSpec};
use ggsp_core::{GeneralizedSignal, Graph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, GraphSource};
use crate::error::{Context, ExperimentError, Result};
use crate::ingest::{read_coordinates_file, read_edge_list_file};
use crate::report::{aggregate, CurveRow, EmRecord, HiddenFraction, Outcome, Report};
use crate::synthetic::random_points;

/// Stream 0 drives everything fixed across repetitions (graph, model);
/// repetition `r` uses stream `r + 1`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn model_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0)
}

pub(crate) fn rep_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    stream_rng(seed, rep as u64 + 1)
}

/// Runs `f` for every repetition in parallel; results keep repetition order.
pub(crate) fn per_rep<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..reps).into_par_iter().map(f).collect()
}

/// Builds the graph for `n` vertices. `series` (`n x L`) is only needed for
/// correlation graphs.
pub(crate) fn build_graph<R: Rng + ?Sized>(
    source: &GraphSource,
    n: usize,
    series: Option<&DMatrix<f64>>,
    rng: &mut R,
) -> Result<Graph<f64>> {
    let graph = match source {
        GraphSource::Knn { k, coords } => {
            let points = match coords {
                Some(path) => read_coordinates_file(path)?,
                None => random_points(n, rng),
            };
            check_vertices("coordinate file", points.len(), n)?;
            knn_graph(&points, *k).context("k-NN graph")?
        }
        GraphSource::ErdosRenyi { p, connected } => generate_graph(&GraphSpec::ErdosRenyi {
            n,
            p: *p,
            seed: rng.random(),
            connected: *connected,
        })
        .context("Erdős–Rényi graph")?,
        GraphSource::EdgeList { path } => read_edge_list_file(path)?,
        GraphSource::Correlation { threshold } => {
            let series =
                series.ok_or_else(|| ExperimentError::Config("correlation graphs need CSV data".into()))?;
            correlation_graph(series, *threshold).context("correlation graph")?
        }
    };
    check_vertices("graph", graph.vertex_count(), n)?;
    Ok(graph)
}

pub(crate) fn check_vertices(what: &str, found: usize, n: usize) -> Result<()> {
    if found != n {
        return Err(ExperimentError::InconsistentDimensions(format!(
            "{what} has {found} vertices, data has {n}"
        )));
    }
    Ok(())
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, sigma: f64, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let g: f64 = StandardNormal.sample(rng);
        sigma * g
    })
}

pub(crate) fn mean_power<'a>(xs: impl IntoIterator<Item = &'a DMatrix<f64>>) -> f64 {
    let (mut sq, mut count) = (0.0, 0usize);
    for x in xs {
        sq += x.norm_squared();
        count += x.len();
    }
    if count == 0 {
        0.0
    } else {
        sq / count as f64
    }
}

/// Noise variance for a target SNR against signals of mean power `power`.
pub(crate) fn noise_variance(power: f64, snr_db: f64) -> f64 {
    power * 10f64.powf(-snr_db / 10.0)
}

pub(crate) fn mean_signal(samples: &[GeneralizedSignal<f64>]) -> Result<DMatrix<f64>> {
    let first = samples
        .first()
        .ok_or_else(|| ExperimentError::InconsistentDimensions("no training samples".into()))?;
    let mut acc = DMatrix::zeros(first.n(), first.d());
    for s in samples {
        acc += s.values();
    }
    Ok(acc / samples.len() as f64)
}

pub(crate) fn centered(samples: &[GeneralizedSignal<f64>], mean: &DMatrix<f64>) -> Vec<GeneralizedSignal<f64>> {
    samples
        .iter()
        .map(|s| GeneralizedSignal::new(s.values() - mean).expect("finite"))
        .collect()
}

/// Shuffled sample indices split into a training half and a test half.
pub(crate) fn split_half<R: Rng + ?Sized>(count: usize, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..count).collect();
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), rng);
    let test = idx.split_off(count / 2);
    (idx, test)
}

#[derive(Debug, Default)]
pub(crate) struct RepResult {
    pub curves: Vec<CurveRow>,
    pub em: Vec<EmRecord>,
    /// Realized hidden fractions per sweep label.
    pub hidden: Vec<(String, Vec<f64>)>,
}

impl RepResult {
    pub fn push(&mut self, sweep: &str, framework: &str, rep: usize, metric: &str, value: f64) {
        self.curves.push(CurveRow {
            sweep: sweep.to_string(),
            framework: framework.to_string(),
            rep,
            metric: metric.to_string(),
            value,
        });
    }
}

pub(crate) fn assemble(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    seed: u64,
    frameworks: Vec<String>,
    reps: Vec<RepResult>,
    notes: BTreeMap<String, serde_json::Value>,
) -> Outcome {
    let repetitions = reps.len();
    let mut curves = Vec::new();
    let mut em = Vec::new();
    let mut hidden: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reps {
        curves.extend(r.curves);
        em.extend(r.em);
        for (sweep, fractions) in r.hidden {
            hidden.entry(sweep).or_default().extend(fractions);
        }
    }
    let hidden_fraction = hidden
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(sweep, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (sweep, HiddenFraction { mean, min, max })
        })
        .collect();
    Outcome {
        report: Report {
            kind: kind.name().to_string(),
            seed,
            repetitions,
            frameworks,
            aggregates: aggregate(&curves),
            hidden_fraction,
            notes,
            runtime_seconds: 0.0,
            config: cfg.clone(),
        },
        curves,
        em,
    }
}
