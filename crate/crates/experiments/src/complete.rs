//! Completion of missing cells in daily (vertex, feature, hour) grids.
//!
//! Every framework cuts a day into smaller signals ([`View`]s), fits one
//! Wiener completer per group of views from training days, and fills the
//! hidden cells of each test day view by view. Observed cells keep their
//! measured values.

use std::collections::BTreeMap;

use ggsp_core::estimation::{jpsd_periodogram, learn_hilbert_basis};
use ggsp_core::graph::{cartesian_product, generate_graph, GraphSpec};
use ggsp_core::model::sample_grp_with;
use ggsp_core::spectral::fourier_basis_cycle;
use ggsp_core::wiener::CoordinateCompleter;
use ggsp_core::{GeneralizedSignal, Graph, JointBasis, Jpsd, ObservationMask, PartialSignal, SpectralBasis};
use nalgebra::DMatrix;

use crate::config::{DataSource, ErrorScope, ExperimentConfig, ExperimentKind, FillMethod, Framework};
use crate::error::{Context, ExperimentError, Result};
use crate::ingest::ingest_csv;
use crate::metrics::ErrorAccumulator;
use crate::missing::{lanes_for_fraction, make_missing_mask, LaneShape, MissingModel, MissingSpec};
use crate::report::Outcome;
use crate::setup::{
    assemble, build_graph, check_vertices, gaussian, mean_power, model_rng, noise_variance, per_rep, rep_rng,
    split_half, RepResult,
};
use crate::synthetic::{day_covariance, laplacian_basis, separable_model, uniform_in};

/// A sub-signal of a day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum View {
    /// `n x F`: every feature at one hour.
    Hour(usize),
    /// `n x T`: one feature over the day.
    Feature(usize),
    /// `n x 1`: one feature at one hour.
    Cell { feature: usize, time: usize },
    /// `(n·T) x F` on the product of the graph with the hour cycle; row
    /// `v·T + t`.
    Product,
}

impl View {
    pub fn dims(self, shape: LaneShape) -> (usize, usize) {
        match self {
            View::Hour(_) => (shape.vertices, shape.features),
            View::Feature(_) => (shape.vertices, shape.times),
            View::Cell { .. } => (shape.vertices, 1),
            View::Product => (shape.vertices * shape.times, shape.features),
        }
    }

    /// Day coordinates `(vertex, column)` of view entry `(i, j)`.
    pub fn cell(self, shape: LaneShape, i: usize, j: usize) -> (usize, usize) {
        match self {
            View::Hour(t) => (i, shape.column(j, t)),
            View::Feature(f) => (i, shape.column(f, j)),
            View::Cell { feature, time } => (i, shape.column(feature, time)),
            View::Product => (i / shape.times, shape.column(j, i % shape.times)),
        }
    }

    pub fn extract(self, day: &DMatrix<f64>, shape: LaneShape) -> DMatrix<f64> {
        let (r, c) = self.dims(shape);
        DMatrix::from_fn(r, c, |i, j| day[self.cell(shape, i, j)])
    }

    pub fn extract_mask(self, mask: &ObservationMask, shape: LaneShape) -> ObservationMask {
        let (r, c) = self.dims(shape);
        ObservationMask::from_fn(r, c, |i, j| {
            let (v, col) = self.cell(shape, i, j);
            mask.is_observed(v, col)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HilbertChoice {
    Learned,
    Cycle,
    Identity,
}

/// How incomplete training views are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingFill {
    Drop,
    Fill(FillMethod),
}

/// Views sharing one completer.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceSpec {
    pub views: Vec<View>,
    pub hilbert: HilbertChoice,
}

/// Pieces of each framework. Under uniform missingness GRP and TV work on
/// the product graph; otherwise GRP works hour by hour and TV feature by
/// feature. GSP always completes each (feature, hour) vector on its own.
pub fn framework_pieces(framework: Framework, model: MissingModel, shape: LaneShape) -> Result<Vec<PieceSpec>> {
    let hours = || 0..shape.times;
    Ok(match (framework, model) {
        (Framework::Grp, MissingModel::Uniform) => vec![PieceSpec {
            views: vec![View::Product],
            hilbert: HilbertChoice::Learned,
        }],
        (Framework::Tv, MissingModel::Uniform) => vec![PieceSpec {
            views: vec![View::Product],
            hilbert: HilbertChoice::Identity,
        }],
        (Framework::Grp, _) => vec![PieceSpec {
            views: hours().map(View::Hour).collect(),
            hilbert: HilbertChoice::Learned,
        }],
        (Framework::Tv, _) => (0..shape.features)
            .map(|f| PieceSpec {
                views: vec![View::Feature(f)],
                hilbert: HilbertChoice::Cycle,
            })
            .collect(),
        (Framework::Gsp, _) => (0..shape.features)
            .map(|f| PieceSpec {
                views: hours().map(|t| View::Cell { feature: f, time: t }).collect(),
                hilbert: HilbertChoice::Identity,
            })
            .collect(),
        (Framework::Ts, _) => return Err(ExperimentError::Config("TS does not apply to completion".into())),
    })
}

/// Linear interpolation along each row between observed entries, constant
/// beyond the first and last observed entry. Rows with nothing observed
/// become zero.
pub fn interpolate_rows(values: &DMatrix<f64>, mask: &ObservationMask) -> DMatrix<f64> {
    let mut out = values.clone();
    for v in 0..values.nrows() {
        let seen: Vec<usize> = (0..values.ncols()).filter(|&t| mask.is_observed(v, t)).collect();
        let (Some(&first), Some(&last)) = (seen.first(), seen.last()) else {
            out.row_mut(v).fill(0.0);
            continue;
        };
        for t in 0..first {
            out[(v, t)] = values[(v, first)];
        }
        for t in last + 1..values.ncols() {
            out[(v, t)] = values[(v, last)];
        }
        for w in seen.windows(2) {
            let (a, b) = (w[0], w[1]);
            for t in a + 1..b {
                let s = (t - a) as f64 / (b - a) as f64;
                out[(v, t)] = (1.0 - s) * values[(v, a)] + s * values[(v, b)];
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Piece {
    views: Vec<View>,
    mean: DMatrix<f64>,
    completer: CoordinateCompleter<f64>,
}

/// Completers fitted for one framework.
#[derive(Debug, Clone)]
pub struct TrainedFramework {
    shape: LaneShape,
    pieces: Vec<Piece>,
}

/// Graph bases available to the pieces.
#[derive(Debug, Clone)]
pub struct GraphBases {
    pub graph: SpectralBasis<f64>,
    /// Laplacian basis of the graph times the hour cycle; needed for
    /// [`View::Product`] only.
    pub product: Option<SpectralBasis<f64>>,
}

impl GraphBases {
    pub fn new(graph: &Graph<f64>, times: usize, with_product: bool) -> Result<Self> {
        let product = if with_product {
            let cycle = generate_graph(&GraphSpec::Cycle { len: times }).context("hour cycle")?;
            Some(laplacian_basis(&cartesian_product(graph, &cycle))?)
        } else {
            None
        };
        Ok(Self {
            graph: laplacian_basis(graph)?,
            product,
        })
    }
}

/// Fits one completer per piece from the observed training days. `sigma2` is
/// the per-cell noise variance.
pub fn train_framework(
    specs: &[PieceSpec],
    fill: TrainingFill,
    train: &[PartialSignal<f64>],
    shape: LaneShape,
    bases: &GraphBases,
    sigma2: f64,
) -> Result<TrainedFramework> {
    let pieces = specs
        .iter()
        .map(|spec| {
            let mut samples = Vec::new();
            for day in train {
                for &view in &spec.views {
                    let values = view.extract(day.values(), shape);
                    let mask = view.extract_mask(day.mask(), shape);
                    let filled = if mask.hidden_count() == 0 {
                        values
                    } else {
                        match fill {
                            TrainingFill::Drop => continue,
                            // hidden entries of a PartialSignal already hold zero
                            TrainingFill::Fill(FillMethod::ZeroPad) => values,
                            TrainingFill::Fill(FillMethod::Interpolate) => interpolate_rows(&values, &mask),
                        }
                    };
                    samples.push(GeneralizedSignal::new(filled).context("training view")?);
                }
            }
            fit_piece(spec, samples, bases, sigma2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedFramework { shape, pieces })
}

fn fit_piece(spec: &PieceSpec, samples: Vec<GeneralizedSignal<f64>>, bases: &GraphBases, sigma2: f64) -> Result<Piece> {
    if samples.len() < 2 {
        return Err(ExperimentError::InconsistentDimensions(format!(
            "only {} complete training views for {:?}",
            samples.len(),
            spec.views.first()
        )));
    }
    let (n, d) = (samples[0].n(), samples[0].d());
    let mut mean = DMatrix::zeros(n, d);
    for s in &samples {
        mean += s.values();
    }
    mean /= samples.len() as f64;
    let centered: Vec<_> = samples
        .iter()
        .map(|s| GeneralizedSignal::new(s.values() - &mean).expect("finite"))
        .collect();
    let graph = if spec.views.first() == Some(&View::Product) {
        bases
            .product
            .clone()
            .ok_or_else(|| ExperimentError::Config("product view without a product basis".into()))?
    } else {
        bases.graph.clone()
    };
    let hilbert = match spec.hilbert {
        HilbertChoice::Learned => learn_hilbert_basis(&centered).context("learned Hilbert basis")?,
        HilbertChoice::Cycle => fourier_basis_cycle(d).context("cycle basis")?,
        HilbertChoice::Identity => SpectralBasis::identity(d),
    };
    let basis = JointBasis::new(graph, hilbert);
    let py = jpsd_periodogram(&centered, &basis).context("periodogram")?;
    let pe = Jpsd::constant(n, d, sigma2).context("noise JPSD")?;
    let px = py.saturating_sub(&pe).context("signal JPSD")?;
    let completer = CoordinateCompleter::new(&px, &pe, &basis).context("completer")?;
    Ok(Piece {
        views: spec.views.clone(),
        mean,
        completer,
    })
}

impl TrainedFramework {
    /// The day with hidden cells replaced by estimates.
    pub fn complete_day(&self, day: &PartialSignal<f64>) -> Result<DMatrix<f64>> {
        let shape = self.shape;
        let mut out = day.values().clone();
        for piece in &self.pieces {
            for &view in &piece.views {
                let mask = view.extract_mask(day.mask(), shape);
                if mask.hidden_count() == 0 {
                    continue;
                }
                let y = GeneralizedSignal::new(view.extract(day.values(), shape) - &piece.mean).expect("finite");
                let est = piece.completer.complete(&y, &mask).context("completion")?;
                let (r, c) = view.dims(shape);
                for i in 0..r {
                    for j in 0..c {
                        if !mask.is_observed(i, j) {
                            out[view.cell(shape, i, j)] = est.values()[(i, j)] + piece.mean[(i, j)];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Frameworks to evaluate as (label, pieces, training fill).
fn variants(
    cfg: &ExperimentConfig,
    shape: LaneShape,
) -> Result<Vec<(String, Vec<PieceSpec>, TrainingFill)>> {
    let p = &cfg.complete;
    let mut out = Vec::new();
    for fw in cfg.frameworks_for(ExperimentKind::Complete) {
        let specs = framework_pieces(fw, p.missing, shape)?;
        match (fw, p.missing) {
            (Framework::Tv, MissingModel::Consecutive { .. }) => {
                for &fill in &p.tv_fill {
                    out.push((fill.label().to_string(), specs.clone(), TrainingFill::Fill(fill)));
                }
            }
            _ => out.push((fw.label().to_string(), specs, TrainingFill::Drop)),
        }
    }
    Ok(out)
}

pub(crate) fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let kind = ExperimentKind::Complete;
    let p = &cfg.complete;
    let mut rng = model_rng(seed);
    let mut notes = BTreeMap::new();

    let (days, shape, synthetic) = match &cfg.data {
        DataSource::Synthetic => (
            None,
            LaneShape {
                vertices: p.vertices,
                features: p.features,
                times: p.hours,
            },
            true,
        ),
        DataSource::Csv { path, schema } => {
            let days = ingest_csv(path, *schema)?
                .iter()
                .map(|s| s.to_complete().map(GeneralizedSignal::into_values))
                .collect::<ggsp_core::Result<Vec<_>>>()
                .context("completion needs fully observed reference days")?;
            let (n, cols) = days[0].shape();
            if cols != p.features * p.hours {
                return Err(ExperimentError::InconsistentDimensions(format!(
                    "days have {cols} columns, expected features x hours = {}",
                    p.features * p.hours
                )));
            }
            if days.len() < 4 {
                return Err(ExperimentError::InconsistentDimensions(format!("need at least 4 days, got {}", days.len())));
            }
            let shape = LaneShape {
                vertices: n,
                features: p.features,
                times: p.hours,
            };
            (Some(days), shape, false)
        }
    };

    let graph = build_graph(&cfg.graph_for(kind), shape.vertices, None, &mut rng)?;
    check_vertices("graph", graph.vertex_count(), shape.vertices)?;
    let with_product = matches!(p.missing, MissingModel::Uniform);
    let bases = GraphBases::new(&graph, shape.times, with_product)?;
    let model = if synthetic {
        let rho = uniform_in(p.feature_correlation, &mut rng);
        notes.insert("feature_correlation".into(), rho.into());
        Some(separable_model(
            bases.graph.clone(),
            &day_covariance(shape.features, shape.times, rho, p.time_scale)?,
        )?)
    } else {
        None
    };
    let variants = variants(cfg, shape)?;

    let sweep_specs: Vec<(String, MissingSpec)> = p
        .hidden_fractions
        .iter()
        .map(|&f| {
            let spec = match p.missing {
                MissingModel::Consecutive { q } => MissingSpec::Consecutive {
                    q,
                    lanes: p.lanes_per_day.unwrap_or_else(|| lanes_for_fraction(f, q, shape)),
                },
                MissingModel::Uniform => MissingSpec::Uniform { rate: f },
            };
            (format!("hidden_fraction={f}"), spec)
        })
        .collect();
    for (label, spec) in &sweep_specs {
        spec.validate()?;
        if let MissingSpec::Consecutive { lanes, .. } = spec {
            notes.insert(format!("lanes_per_day[{label}]"), (*lanes).into());
        }
    }
    let train_spec = match p.missing {
        MissingModel::Consecutive { q } => Some(MissingSpec::Consecutive {
            q,
            lanes: p.train_lanes_per_day,
        }),
        MissingModel::Uniform => None,
    };
    if let Some(spec) = &train_spec {
        spec.validate()?;
    }

    let reps = per_rep(cfg.repetitions_for(kind), |rep| {
        let mut rng = rep_rng(seed, rep);
        let clean: Vec<DMatrix<f64>> = match (&model, &days) {
            (Some(model), _) => sample_grp_with(model, p.days, &mut rng)
                .into_iter()
                .map(GeneralizedSignal::into_values)
                .collect(),
            (None, Some(days)) => days.clone(),
            (None, None) => unreachable!(),
        };
        let sigma2 = noise_variance(mean_power(&clean), p.noise_snr_db);
        let observed: Vec<DMatrix<f64>> = if synthetic {
            clean
                .iter()
                .map(|x| x + gaussian(x.nrows(), x.ncols(), sigma2.sqrt(), &mut rng))
                .collect()
        } else {
            clean.clone()
        };
        let (train_idx, test_idx) = split_half(clean.len(), &mut rng);
        let train = train_idx
            .iter()
            .map(|&i| {
                let mask = match &train_spec {
                    Some(spec) => make_missing_mask(spec, shape, &mut rng)?,
                    None => ObservationMask::all_observed(shape.vertices, shape.columns()),
                };
                PartialSignal::new(observed[i].clone(), mask).context("training day")
            })
            .collect::<Result<Vec<_>>>()?;
        let trained = variants
            .iter()
            .map(|(_, specs, fill)| train_framework(specs, *fill, &train, shape, &bases, sigma2))
            .collect::<Result<Vec<_>>>()?;

        let mut out = RepResult::default();
        for (sweep, spec) in &sweep_specs {
            let tests = test_idx
                .iter()
                .map(|&i| {
                    let mask = make_missing_mask(spec, shape, &mut rng)?;
                    Ok((i, PartialSignal::new(observed[i].clone(), mask).context("test day")?))
                })
                .collect::<Result<Vec<_>>>()?;
            out.hidden
                .push((sweep.clone(), tests.iter().map(|(_, d)| d.mask().hidden_fraction()).collect()));
            for ((label, _, _), fw) in variants.iter().zip(&trained) {
                let (mut hidden, mut all) = (ErrorAccumulator::default(), ErrorAccumulator::default());
                for (i, day) in &tests {
                    let est = fw.complete_day(day)?;
                    let truth = &clean[*i];
                    let cells = day.mask().hidden_indices();
                    if !cells.is_empty() {
                        // hidden_indices are row-major over (vertex, column)
                        let at = |m: &DMatrix<f64>| -> Vec<f64> {
                            cells.iter().map(|&c| m[(c / shape.columns(), c % shape.columns())]).collect()
                        };
                        hidden.add(&at(&est), &at(truth))?;
                    }
                    all.add(est.as_slice(), truth.as_slice())?;
                }
                let hidden_err = if hidden.count() > 0 { hidden.normalized_error() } else { 0.0 };
                let headline = match p.headline {
                    ErrorScope::Hidden => hidden_err,
                    ErrorScope::All => all.normalized_error(),
                };
                out.push(sweep, label, rep, "normalized_error", headline);
                out.push(sweep, label, rep, "normalized_error_hidden", hidden_err);
                out.push(sweep, label, rep, "normalized_error_all", all.normalized_error());
            }
        }
        Ok(out)
    })?;

    let labels = variants.iter().map(|(l, _, _)| l.clone()).collect();
    Ok(assemble(kind, cfg, seed, labels, reps, notes))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHAPE: LaneShape = LaneShape {
        vertices: 3,
        features: 2,
        times: 4,
    };

    fn day() -> DMatrix<f64> {
        DMatrix::from_fn(3, 8, |v, c| (100 * v + c) as f64)
    }

    #[test]
    fn views_address_the_day_layout() {
        let d = day();
        let hour = View::Hour(2).extract(&d, SHAPE);
        assert_eq!(hour.shape(), (3, 2));
        assert_eq!(hour[(1, 1)], d[(1, SHAPE.column(1, 2))]);
        let lane = View::Feature(1).extract(&d, SHAPE);
        assert_eq!(lane.row(2).iter().copied().collect::<Vec<_>>(), vec![204.0, 205.0, 206.0, 207.0]);
        let prod = View::Product.extract(&d, SHAPE);
        assert_eq!(prod.shape(), (12, 2));
        // row v·T + t, column f
        assert_eq!(prod[(2 * 4 + 3, 1)], d[(2, SHAPE.column(1, 3))]);
        let cell = View::Cell { feature: 0, time: 3 }.extract(&d, SHAPE);
        assert_eq!(cell.as_slice(), &[3.0, 103.0, 203.0]);
    }

    #[test]
    fn interpolation_rules() {
        let values = DMatrix::from_row_slice(2, 5, &[0.0, 2.0, 0.0, 0.0, 8.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mask = ObservationMask::from_fn(2, 5, |v, t| v == 0 && (t == 1 || t == 4));
        let out = interpolate_rows(&values, &mask);
        assert_eq!(out.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(out.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0; 5]);
    }

    #[test]
    fn every_framework_covers_each_cell_once() {
        for model in [MissingModel::Uniform, MissingModel::default()] {
            for fw in [Framework::Grp, Framework::Tv, Framework::Gsp] {
                let mut hits = DMatrix::<usize>::zeros(3, 8);
                for piece in framework_pieces(fw, model, SHAPE).unwrap() {
                    for view in piece.views {
                        let (r, c) = view.dims(SHAPE);
                        for i in 0..r {
                            for j in 0..c {
                                hits[view.cell(SHAPE, i, j)] += 1;
                            }
                        }
                    }
                }
                assert!(hits.iter().all(|&h| h == 1), "{fw:?} {model:?}");
            }
        }
    }

    #[test]
    fn observed_cells_are_kept() {
        let g = Graph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let bases = GraphBases::new(&g, 4, false).unwrap();
        let mut rng = rep_rng(4, 0);
        let train: Vec<_> = (0..10)
            .map(|_| PartialSignal::complete(GeneralizedSignal::new(gaussian(3, 8, 1.0, &mut rng)).unwrap()))
            .collect();
        let specs = framework_pieces(Framework::Grp, MissingModel::default(), SHAPE).unwrap();
        let fw = train_framework(&specs, TrainingFill::Drop, &train, SHAPE, &bases, 0.1).unwrap();
        let mask = ObservationMask::from_fn(3, 8, |v, c| !(v == 1 && c < 3));
        let test = PartialSignal::new(day(), mask.clone()).unwrap();
        let est = fw.complete_day(&test).unwrap();
        for v in 0..3 {
            for c in 0..8 {
                if mask.is_observed(v, c) {
                    assert_eq!(est[(v, c)], day()[(v, c)]);
                }
            }
        }
    }
}
