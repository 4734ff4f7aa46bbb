use ggsp_core::model::sample_grp_with;
use ggsp_core::spectral::fourier_basis_cycle;
use ggsp_core::{GeneralizedSignal, JointBasis, ObservationMask, PartialSignal, SpectralBasis};
use ggsp_experiments::complete::{framework_pieces, train_framework, GraphBases, TrainingFill};
use ggsp_experiments::config::Framework;
use ggsp_experiments::denoise::{denoise_framework, joint_wiener, per_feature_wiener};
use ggsp_experiments::missing::{make_missing_mask, LaneShape, MissingModel, MissingSpec};
use ggsp_experiments::synthetic::{euclidean_vertex, EuclideanVertexSpec};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

type Signal = GeneralizedSignal<f64>;

struct Instance {
    graph: SpectralBasis<f64>,
    train: Vec<Signal>,
    test: Vec<Signal>,
    sigma2: f64,
}

fn instance() -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = EuclideanVertexSpec {
        vertices: 15,
        features: 4,
        k: 4,
        correlation: [0.7, 0.7],
    };
    let data = euclidean_vertex(&spec, &mut rng).unwrap();
    let sigma2: f64 = 0.05;
    let mut noisy = |m: usize| -> Vec<Signal> {
        sample_grp_with(&data.model, m, &mut rng)
            .into_iter()
            .map(|x| {
                let e = DMatrix::from_fn(15, 4, |_, _| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    sigma2.sqrt() * g
                });
                Signal::new(x.into_values() + e).unwrap()
            })
            .collect()
    };
    let train = noisy(50);
    let test = noisy(10);
    Instance {
        graph: data.model.basis().graph().clone(),
        train,
        test,
        sigma2,
    }
}

fn max_diff(a: &[Signal], b: &[Signal]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.values() - y.values()).amax())
        .fold(0.0, f64::max)
}

#[test]
fn tv_is_grp_with_cycle_harmonics() {
    let s = instance();
    let tv = denoise_framework(Framework::Tv, &s.train, &s.test, &s.graph, s.sigma2).unwrap();
    let basis = JointBasis::new(s.graph.clone(), fourier_basis_cycle(4).unwrap());
    let grp = joint_wiener(&s.train, &s.test, &basis, s.sigma2).unwrap();
    assert_eq!(max_diff(&tv, &grp), 0.0);
}

#[test]
fn gsp_is_grp_with_identity_hilbert_basis() {
    let s = instance();
    let gsp = per_feature_wiener(&s.train, &s.test, &s.graph, s.sigma2).unwrap();
    let basis = JointBasis::new(s.graph.clone(), SpectralBasis::identity(4));
    let grp = joint_wiener(&s.train, &s.test, &basis, s.sigma2).unwrap();
    let diff = max_diff(&gsp, &grp);
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn learned_basis_differs_from_both_baselines() {
    let s = instance();
    let grp = denoise_framework(Framework::Grp, &s.train, &s.test, &s.graph, s.sigma2).unwrap();
    let tv = denoise_framework(Framework::Tv, &s.train, &s.test, &s.graph, s.sigma2).unwrap();
    let gsp = denoise_framework(Framework::Gsp, &s.train, &s.test, &s.graph, s.sigma2).unwrap();
    assert!(max_diff(&grp, &tv) > 1e-6);
    assert!(max_diff(&grp, &gsp) > 1e-6);
}

#[test]
fn completion_keeps_observed_cells_for_every_framework() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shape = LaneShape {
        vertices: 10,
        features: 3,
        times: 6,
    };
    let graph = ggsp_core::graph::generate_graph(&ggsp_core::graph::GraphSpec::ErdosRenyi {
        n: 10,
        p: 0.5,
        seed: 1,
        connected: true,
    })
    .unwrap();
    let day = |rng: &mut ChaCha8Rng| {
        DMatrix::from_fn(10, 18, |_, _| {
            let g: f64 = StandardNormal.sample(rng);
            g
        })
    };
    for model in [MissingModel::default(), MissingModel::Uniform] {
        let bases = GraphBases::new(&graph, shape.times, model == MissingModel::Uniform).unwrap();
        let spec = match model {
            MissingModel::Uniform => MissingSpec::Uniform { rate: 0.2 },
            MissingModel::Consecutive { q } => MissingSpec::Consecutive { q, lanes: 6 },
        };
        let train: Vec<_> = (0..12)
            .map(|_| {
                let mask = match model {
                    MissingModel::Uniform => ObservationMask::all_observed(10, 18),
                    _ => make_missing_mask(&spec, shape, &mut rng).unwrap(),
                };
                PartialSignal::new(day(&mut rng), mask).unwrap()
            })
            .collect();
        let values = day(&mut rng);
        let mask = make_missing_mask(&spec, shape, &mut rng).unwrap();
        let test = PartialSignal::new(values.clone(), mask.clone()).unwrap();
        for fw in [Framework::Grp, Framework::Tv, Framework::Gsp] {
            let pieces = framework_pieces(fw, model, shape).unwrap();
            let fill = if fw == Framework::Tv && model != MissingModel::Uniform {
                TrainingFill::Fill(ggsp_experiments::config::FillMethod::Interpolate)
            } else {
                TrainingFill::Drop
            };
            let trained = train_framework(&pieces, fill, &train, shape, &bases, 0.1).unwrap();
            let est = trained.complete_day(&test).unwrap();
            for v in 0..10 {
                for c in 0..18 {
                    if mask.is_observed(v, c) {
                        assert_eq!(est[(v, c)], values[(v, c)], "{fw:?} {model:?}");
                    } else {
                        assert!(est[(v, c)].is_finite());
                    }
                }
            }
        }
    }
}
