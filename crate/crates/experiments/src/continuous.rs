//! Recovery of continuous-time graph signals from irregular samples via
//! Bayesian regression on trigonometric dictionaries.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use ggsp_core::estimation::{
    design_matrix, equispaced_grid, posterior, recover_continuous, variational_em, vertex_trig_design, EmOptions,
    EmResult, RegressionProblem, SamplePlan, TrigVariant,
};
use ggsp_core::spectral::fourier_basis_cycle;
use ggsp_core::SpectralBasis;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;

use crate::config::{ExperimentConfig, ExperimentKind, Framework, SamplingScheme};
use crate::error::{Context, Result};
use crate::metrics::ErrorAccumulator;
use crate::report::{EmRecord, Outcome};
use crate::setup::{assemble, build_graph, gaussian, mean_power, model_rng, noise_variance, per_rep, rep_rng, RepResult};
use crate::synthetic::{draw_betas, laplacian_basis, ContinuousModel};

/// Sample times per vertex; for equispaced plans also the grid positions.
#[derive(Debug, Clone)]
pub struct Sampling {
    pub plan: SamplePlan<f64>,
    /// Present when the samples sit on `equispaced_grid(m)`.
    pub grid: Option<(Vec<f64>, Vec<Vec<usize>>)>,
}

/// `m` sorted samples per vertex: a random subset of the `2m` equispaced
/// grid, or independent uniform draws on `[-π, π]`.
pub fn draw_sampling<R: Rng + ?Sized>(scheme: SamplingScheme, n: usize, m: usize, rng: &mut R) -> Result<Sampling> {
    match scheme {
        SamplingScheme::Equispaced => {
            let grid: Vec<f64> = equispaced_grid(m);
            let idx: Vec<Vec<usize>> = (0..n)
                .map(|_| {
                    let mut v = sample(rng, grid.len(), m).into_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            let times = idx.iter().map(|v| v.iter().map(|&i| grid[i]).collect()).collect();
            Ok(Sampling {
                plan: SamplePlan::new(times).context("sample plan")?,
                grid: Some((grid, idx)),
            })
        }
        SamplingScheme::Uniform => {
            let times = (0..n)
                .map(|_| {
                    let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..=PI)).collect();
                    v.sort_by(f64::total_cmp);
                    v
                })
                .collect();
            Ok(Sampling {
                plan: SamplePlan::new(times).context("sample plan")?,
                grid: None,
            })
        }
    }
}

/// `count` evenly spaced instants covering `[-π, π]`.
pub fn evaluation_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -PI + 2.0 * PI * i as f64 / (count as f64 - 1.0))
        .collect()
}

/// Piecewise-linear interpolation of `values` (given at increasing `grid`
/// points) at `t`, constant outside the grid.
pub fn interpolate(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let last = grid.len() - 1;
    if t <= grid[0] {
        return values[0];
    }
    if t >= grid[last] {
        return values[last];
    }
    let hi = grid.partition_point(|&g| g < t).max(1);
    let (a, b) = (grid[hi - 1], grid[hi]);
    let s = (t - a) / (b - a);
    (1.0 - s) * values[hi - 1] + s * values[hi]
}

/// Time-vertex dictionary on the sampling grid: row `(v, i)` holds
/// `φ_k(v) ψ_τ(i)` in column `k·width + τ`, with `ψ_τ` the `width`
/// lowest-frequency cycle harmonics.
#[derive(Debug, Clone)]
pub struct TimeVertexDictionary {
    graph: SpectralBasis<f64>,
    harmonics: DMatrix<f64>,
    grid: Vec<f64>,
}

impl TimeVertexDictionary {
    pub fn new(graph: SpectralBasis<f64>, grid: Vec<f64>, width: usize) -> Result<Self> {
        let cycle = fourier_basis_cycle::<f64>(grid.len()).context("cycle basis")?;
        let width = width.min(grid.len());
        Ok(Self {
            graph,
            harmonics: cycle.eigenvectors().columns(0, width).into_owned(),
            grid,
        })
    }

    pub fn width(&self) -> usize {
        self.harmonics.ncols()
    }

    pub fn design(&self, idx: &[Vec<usize>]) -> DMatrix<f64> {
        let (n, w) = (self.graph.dim(), self.width());
        let phi = self.graph.eigenvectors();
        let rows: Vec<(usize, usize)> = idx.iter().enumerate().flat_map(|(v, is)| is.iter().map(move |&i| (v, i))).collect();
        DMatrix::from_fn(rows.len(), n * w, |r, c| {
            let (v, i) = rows[r];
            phi[(v, c / w)] * self.harmonics[(i, c % w)]
        })
    }

    /// Values on every vertex at `query`, interpolated from the grid.
    pub fn reconstruct(&self, coef: &DVector<f64>, query: &[f64]) -> DMatrix<f64> {
        let (n, w) = (self.graph.dim(), self.width());
        let c = DMatrix::from_fn(n, w, |k, tau| coef[k * w + tau]);
        let on_grid = self.graph.eigenvectors() * c * self.harmonics.transpose();
        DMatrix::from_fn(n, query.len(), |v, q| {
            let row: Vec<f64> = on_grid.row(v).iter().copied().collect();
            interpolate(&self.grid, &row, query[q])
        })
    }
}

fn em_record(sweep: &str, rep: usize, framework: &str, vertex: Option<usize>, em: &EmResult<f64>) -> EmRecord {
    EmRecord {
        sweep: sweep.to_string(),
        rep,
        framework: framework.to_string(),
        vertex,
        p: em.p.iter().copied().collect(),
        sigma2: em.sigma2,
        converged: em.converged,
        iterations: em.iterations,
    }
}

/// Noisy training and test observations at the plan's points.
struct Observations {
    train: DMatrix<f64>,
    test: DMatrix<f64>,
    /// Clean test signals on the evaluation grid.
    truth: Vec<DMatrix<f64>>,
}

/// Fits hyperparameters on the training responses and returns the posterior
/// mean coefficients of the test responses.
fn fit_and_predict(
    design: DMatrix<f64>,
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
    opts: &EmOptions,
) -> Result<(EmResult<f64>, DMatrix<f64>)> {
    let post_design = design.clone();
    let em = variational_em(&RegressionProblem::with_responses(design, train.clone()).context("regression")?, opts)
        .context("EM")?;
    let post = posterior(&post_design, test, &em.p, em.sigma2).context("posterior")?;
    Ok((em, post.mean))
}

fn rows_of(m: &DMatrix<f64>, start: usize, len: usize) -> DMatrix<f64> {
    m.rows(start, len).into_owned()
}

pub(crate) fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let kind = ExperimentKind::Continuous;
    let p = &cfg.continuous;
    let frameworks = cfg.frameworks_for(kind);
    let mut rng = model_rng(seed);
    let graph = build_graph(&cfg.graph_for(kind), p.vertices, None, &mut rng)?;
    let graph_basis = laplacian_basis(&graph)?;
    let n = graph_basis.dim();
    let eval = evaluation_grid(p.eval_points);
    let opts = EmOptions {
        max_iter: p.em_max_iter,
        tol: p.em_tol,
        ..EmOptions::default()
    };

    let reps = per_rep(cfg.repetitions_for(kind), |rep| {
        let mut rng = rep_rng(seed, rep);
        let model = ContinuousModel::new(graph_basis.clone(), draw_betas(p.betas, p.beta_range, &mut rng));
        let mut out = RepResult::default();
        for &scheme in &p.schemes {
            for &m in &p.samples_per_vertex {
                for &snr in &p.snr_db {
                    let sweep = format!("{}:m={m}:snr_db={snr}", scheme.name());
                    let sampling = draw_sampling(scheme, n, m, &mut rng)?;
                    let plan = &sampling.plan;
                    let draw_set = |count: usize, rng: &mut rand_chacha::ChaCha8Rng| {
                        let coefs: Vec<DMatrix<f64>> = (0..count).map(|_| model.draw(rng)).collect();
                        let at_plan =
                            DMatrix::from_columns(&coefs.iter().map(|c| model.evaluate_plan(c, plan)).collect::<Vec<_>>());
                        (coefs, at_plan)
                    };
                    let (_, train_clean) = draw_set(p.train, &mut rng);
                    let (test_coefs, test_clean) = draw_set(p.test, &mut rng);
                    let sigma2 = noise_variance(mean_power([&train_clean]), snr);
                    let sd = sigma2.sqrt();
                    let obs = Observations {
                        train: &train_clean + gaussian(train_clean.nrows(), train_clean.ncols(), sd, &mut rng),
                        test: &test_clean + gaussian(test_clean.nrows(), test_clean.ncols(), sd, &mut rng),
                        truth: test_coefs.iter().map(|c| model.evaluate_grid(c, &eval)).collect(),
                    };

                    for &fw in &frameworks {
                        let estimates: Vec<DMatrix<f64>> = match fw {
                            Framework::Grp => {
                                let design = design_matrix(plan, &graph_basis, p.m0, TrigVariant::Grp).context("design")?;
                                let (em, mean) = fit_and_predict(design, &obs.train, &obs.test, &opts)?;
                                if p.write_em {
                                    out.em.push(em_record(&sweep, rep, fw.label(), None, &em));
                                }
                                mean.column_iter()
                                    .map(|c| {
                                        recover_continuous(&c.into_owned(), &graph_basis, p.m0, TrigVariant::Grp, &eval)
                                            .context("recovery")
                                    })
                                    .collect::<Result<_>>()?
                            }
                            Framework::Ts => {
                                let mut est = vec![DMatrix::zeros(n, eval.len()); p.test];
                                let eval_design = vertex_trig_design(&eval, p.m0);
                                let mut start = 0;
                                for v in 0..n {
                                    let times = plan.points(v);
                                    let len = times.len();
                                    let design = vertex_trig_design(times, p.m0);
                                    let (em, mean) = fit_and_predict(
                                        design,
                                        &rows_of(&obs.train, start, len),
                                        &rows_of(&obs.test, start, len),
                                        &opts,
                                    )?;
                                    if p.write_em {
                                        out.em.push(em_record(&sweep, rep, fw.label(), Some(v), &em));
                                    }
                                    let values = &eval_design * mean;
                                    for (j, e) in est.iter_mut().enumerate() {
                                        e.row_mut(v).copy_from(&values.column(j).transpose());
                                    }
                                    start += len;
                                }
                                est
                            }
                            Framework::Tv => {
                                let Some((grid, idx)) = &sampling.grid else {
                                    continue;
                                };
                                let dict = TimeVertexDictionary::new(graph_basis.clone(), grid.clone(), p.m0)?;
                                let (em, mean) = fit_and_predict(dict.design(idx), &obs.train, &obs.test, &opts)?;
                                if p.write_em {
                                    out.em.push(em_record(&sweep, rep, fw.label(), None, &em));
                                }
                                mean.column_iter().map(|c| dict.reconstruct(&c.into_owned(), &eval)).collect()
                            }
                            Framework::Gsp => continue,
                        };
                        let mut acc = ErrorAccumulator::default();
                        for (e, x) in estimates.iter().zip(&obs.truth) {
                            acc.add(e.as_slice(), x.as_slice())?;
                        }
                        out.push(&sweep, fw.label(), rep, "relative_error", acc.relative_error());
                        out.push(&sweep, fw.label(), rep, "normalized_error", acc.normalized_error());
                    }
                }
            }
        }
        Ok(out)
    })?;

    let labels = frameworks.iter().map(|f| f.label().to_string()).collect();
    Ok(assemble(kind, cfg, seed, labels, reps, BTreeMap::new()))
}
