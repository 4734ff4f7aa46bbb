//! Wiener denoising of noisy signals with spectra estimated from noisy
//! training data.

use std::collections::BTreeMap;

use ggsp_core::estimation::{gsp_periodogram_per_feature, jpsd_periodogram, learn_hilbert_basis};
use ggsp_core::model::sample_grp_with;
use ggsp_core::spectral::fourier_basis_cycle;
use ggsp_core::wiener::{denoise, denoise_filter};
use ggsp_core::{GeneralizedSignal, JointBasis, Jpsd, SpectralBasis};
use nalgebra::DMatrix;

use crate::config::{DataSource, ExperimentConfig, ExperimentKind, Framework};
use crate::error::{Context, ExperimentError, Result};
use crate::ingest::ingest_csv;
use crate::metrics::ErrorAccumulator;
use crate::report::Outcome;
use crate::setup::{
    assemble, build_graph, centered, gaussian, mean_power, mean_signal, model_rng, noise_variance, per_rep, rep_rng,
    split_half, RepResult,
};
use crate::synthetic::{correlated_features, laplacian_basis};

type Signal = GeneralizedSignal<f64>;

/// Hilbert basis used by `framework`: learned from the (centered) training
/// signals for GRP, cycle harmonics for TV, the identity for GSP.
pub fn hilbert_basis(framework: Framework, centered_train: &[Signal], features: usize) -> Result<SpectralBasis<f64>> {
    match framework {
        Framework::Grp => learn_hilbert_basis(centered_train).context("learned Hilbert basis"),
        Framework::Tv => fourier_basis_cycle(features).context("cycle basis"),
        Framework::Gsp => Ok(SpectralBasis::identity(features)),
        Framework::Ts => Err(ExperimentError::Config("TS does not apply to denoising".into())),
    }
}

fn noise_jpsd(n: usize, d: usize, sigma2: f64) -> Result<Jpsd<f64>> {
    Jpsd::constant(n, d, sigma2).context("noise JPSD")
}

/// Joint Wiener filter on `basis`. The signal JPSD is the periodogram of the
/// centered noisy training signals minus the noise level, clipped at zero.
pub fn joint_wiener(train: &[Signal], test: &[Signal], basis: &JointBasis<f64>, sigma2: f64) -> Result<Vec<Signal>> {
    let mean = mean_signal(train)?;
    let py = jpsd_periodogram(&centered(train, &mean), basis).context("periodogram")?;
    let pe = noise_jpsd(basis.n(), basis.d(), sigma2)?;
    let px = py.saturating_sub(&pe).context("signal JPSD")?;
    let filter = denoise_filter(&px, &pe, basis).context("Wiener filter")?;
    test.iter()
        .map(|y| {
            let x = denoise(&Signal::new(y.values() - &mean).context("test signal")?, &filter).context("denoise")?;
            Ok(Signal::new(x.into_values() + &mean).expect("finite"))
        })
        .collect()
}

/// Independent graph Wiener filter for every feature column.
pub fn per_feature_wiener(
    train: &[Signal],
    test: &[Signal],
    graph_basis: &SpectralBasis<f64>,
    sigma2: f64,
) -> Result<Vec<Signal>> {
    let mean = mean_signal(train)?;
    let py = gsp_periodogram_per_feature(&centered(train, &mean), graph_basis).context("periodogram")?;
    let (n, d) = (py.n(), py.d());
    let gains = py.values().map(|p| {
        let px = (p - sigma2).max(0.0);
        if px + sigma2 > 0.0 {
            px / (px + sigma2)
        } else {
            0.0
        }
    });
    debug_assert_eq!(gains.shape(), (n, d));
    let phi = graph_basis.eigenvectors();
    test.iter()
        .map(|y| {
            let coef = (phi.transpose() * (y.values() - &mean)).component_mul(&gains);
            Ok(Signal::new(phi * coef + &mean).expect("finite"))
        })
        .collect()
}

/// Estimates of `test` for one framework from noisy `train` signals.
pub fn denoise_framework(
    framework: Framework,
    train: &[Signal],
    test: &[Signal],
    graph_basis: &SpectralBasis<f64>,
    sigma2: f64,
) -> Result<Vec<Signal>> {
    if framework == Framework::Gsp {
        return per_feature_wiener(train, test, graph_basis, sigma2);
    }
    let d = train.first().map_or(0, |s| s.d());
    let mean = mean_signal(train)?;
    let hilbert = hilbert_basis(framework, &centered(train, &mean), d)?;
    joint_wiener(train, test, &JointBasis::new(graph_basis.clone(), hilbert), sigma2)
}

enum Source {
    Model(Box<ggsp_core::GrpModel<f64>>),
    Samples(Vec<Signal>),
}

pub(crate) fn run(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let kind = ExperimentKind::Denoise;
    let p = &cfg.denoise;
    let frameworks = cfg.frameworks_for(kind);
    let graph_source = cfg.graph_for(kind);
    let mut rng = model_rng(seed);
    let mut notes = BTreeMap::new();

    let (source, graph_basis) = match &cfg.data {
        DataSource::Synthetic => {
            let graph = build_graph(&graph_source, p.vertices, None, &mut rng)?;
            let (rho, model) = correlated_features(laplacian_basis(&graph)?, p.features, p.feature_correlation, &mut rng)?;
            notes.insert("feature_correlation".into(), rho.into());
            let basis = model.basis().graph().clone();
            (Source::Model(Box::new(model)), basis)
        }
        DataSource::Csv { path, schema } => {
            let samples = ingest_csv(path, *schema)?
                .iter()
                .map(|s| s.to_complete())
                .collect::<ggsp_core::Result<Vec<_>>>()
                .context("denoising needs complete samples")?;
            if samples.len() < 4 {
                return Err(ExperimentError::InconsistentDimensions(format!(
                    "need at least 4 samples, got {}",
                    samples.len()
                )));
            }
            let n = samples[0].n();
            let series = DMatrix::from_columns(
                &samples.iter().flat_map(|s| s.values().column_iter().map(|c| c.into_owned())).collect::<Vec<_>>(),
            );
            let graph = build_graph(&graph_source, n, Some(&series), &mut rng)?;
            if frameworks.contains(&Framework::Tv) && samples[0].d() < 3 {
                return Err(ExperimentError::Config("TV needs at least 3 features".into()));
            }
            (Source::Samples(samples), laplacian_basis(&graph)?)
        }
    };

    let reps = per_rep(cfg.repetitions_for(kind), |rep| {
        let mut rng = rep_rng(seed, rep);
        let (train, test) = match &source {
            Source::Model(model) => (
                sample_grp_with(model, p.train, &mut rng),
                sample_grp_with(model, p.test, &mut rng),
            ),
            Source::Samples(all) => {
                let (a, b) = split_half(all.len(), &mut rng);
                (
                    a.iter().map(|&i| all[i].clone()).collect::<Vec<_>>(),
                    b.iter().map(|&i| all[i].clone()).collect::<Vec<_>>(),
                )
            }
        };
        let power = mean_power(train.iter().chain(&test).map(|s| s.values()));
        let mut out = RepResult::default();
        for &snr in &p.input_snr_db {
            let sigma2 = noise_variance(power, snr);
            let noisy = |xs: &[Signal], rng: &mut _| -> Vec<Signal> {
                xs.iter()
                    .map(|x| Signal::new(x.values() + gaussian(x.n(), x.d(), sigma2.sqrt(), rng)).expect("finite"))
                    .collect()
            };
            let train_y = noisy(&train, &mut rng);
            let test_y = noisy(&test, &mut rng);
            let sweep = format!("input_snr_db={snr}");
            for &fw in &frameworks {
                let est = denoise_framework(fw, &train_y, &test_y, &graph_basis, sigma2)?;
                let mut acc = ErrorAccumulator::default();
                for (e, x) in est.iter().zip(&test) {
                    acc.add(e.values().as_slice(), x.values().as_slice())?;
                }
                out.push(&sweep, fw.label(), rep, "output_snr_db", acc.snr_db());
                out.push(&sweep, fw.label(), rep, "normalized_error", acc.normalized_error());
            }
        }
        Ok(out)
    })?;

    let labels = frameworks.iter().map(|f| f.label().to_string()).collect();
    Ok(assemble(kind, cfg, seed, labels, reps, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ggsp_core::Graph;

    fn small_basis() -> SpectralBasis<f64> {
        let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 2.0), (3, 0, 0.5)]).unwrap();
        laplacian_basis(&g).unwrap()
    }

    #[test]
    fn zero_noise_keeps_every_mode_with_power() {
        let basis = small_basis();
        let mut rng = rep_rng(2, 0);
        let train: Vec<Signal> = (0..30).map(|_| Signal::new(gaussian(4, 3, 1.0, &mut rng)).unwrap()).collect();
        let test = vec![Signal::new(gaussian(4, 3, 1.0, &mut rng)).unwrap()];
        for fw in [Framework::Grp, Framework::Tv, Framework::Gsp] {
            let est = denoise_framework(fw, &train, &test, &basis, 0.0).unwrap();
            assert!((est[0].values() - test[0].values()).amax() < 1e-9, "{fw:?}");
        }
    }

    #[test]
    fn overwhelming_noise_returns_the_training_mean() {
        let basis = small_basis();
        let mut rng = rep_rng(3, 0);
        let train: Vec<Signal> = (0..10).map(|_| Signal::new(gaussian(4, 3, 1.0, &mut rng)).unwrap()).collect();
        let test = vec![Signal::new(gaussian(4, 3, 1.0, &mut rng)).unwrap()];
        let mean = mean_signal(&train).unwrap();
        let est = denoise_framework(Framework::Grp, &train, &test, &basis, 1e6).unwrap();
        assert!((est[0].values() - mean).amax() < 1e-12);
    }
}
