use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use esc_core::classify::{esc_score, ExactXClassifier};
use esc_core::diffusion::{
    analytic_gmm_denoiser, ddim_sample, AnalyticDdimSampler, DenoiserModel, ExactPosteriorSampler, MlpDenoiser,
    NoiseSchedule, PosteriorSampler,
};
use esc_core::metrics::{auroc, fit_gaussian, frechet_distance};
use esc_core::sigproc::{butterworth_bandpass_zerophase, resample, synth_quasiperiodic, SynthConfig, WaveKind};
use esc_core::toyworld::presets;
use esc_core::RngStream;
use std::hint::black_box;

fn sampling(c: &mut Criterion) {
    let world = presets::xor_2d();
    let y = world.sample_joint(RngStream::new(1, 0), 1)[0].y.clone();
    let schedule = NoiseSchedule::default();
    let exact = ExactPosteriorSampler { world: world.clone() };
    let ddim = AnalyticDdimSampler {
        world: world.clone(),
        schedule: schedule.clone(),
    };
    let fx = ExactXClassifier { world: world.clone() };

    c.bench_function("exact posterior K=100", |b| {
        b.iter(|| exact.sample(black_box(&y), RngStream::new(2, 0), 100).unwrap())
    });
    c.bench_function("analytic DDIM K=100 T=100", |b| {
        b.iter(|| ddim.sample(black_box(&y), RngStream::new(2, 0), 100).unwrap())
    });
    let ens = exact.sample(&y, RngStream::new(3, 0), 100).unwrap();
    c.bench_function("esc score K=100", |b| {
        b.iter(|| esc_score(black_box(&ens), &fx).unwrap())
    });

    let den = analytic_gmm_denoiser(&world, &y, &schedule).unwrap();
    let model = MlpDenoiser::random(8, 8, &[128, 128], 16, RngStream::new(4, 0)).unwrap();
    let x8 = vec![0.1; 8];
    c.bench_function("analytic denoiser predict", |b| {
        b.iter(|| den.predict(black_box(&[0.3, -0.2]), &y, 500))
    });
    c.bench_function("mlp denoiser predict d=8", |b| {
        b.iter(|| model.predict(black_box(&x8), &x8, 500))
    });
    c.bench_function("mlp DDIM K=10 d=8", |b| {
        b.iter(|| ddim_sample(&model, black_box(&x8), RngStream::new(5, 0), &schedule, 10).unwrap())
    });
}

fn metrics(c: &mut Criterion) {
    let mut rng = RngStream::new(6, 0).rng();
    let a: Vec<Vec<f64>> = (0..1000).map(|_| rng.gaussian_vec(8)).collect();
    let b: Vec<Vec<f64>> = (0..1000).map(|_| rng.gaussian_vec(8)).collect();
    c.bench_function("frechet distance d=8 n=1000", |bn| {
        bn.iter(|| frechet_distance(&fit_gaussian(black_box(&a)).unwrap(), &fit_gaussian(&b).unwrap()).unwrap())
    });
    let scores: Vec<f64> = (0..10_000).map(|_| rng.uniform()).collect();
    let labels: Vec<u8> = (0..10_000).map(|_| u8::from(rng.bernoulli(0.5))).collect();
    c.bench_function("auroc n=10000", |bn| {
        bn.iter(|| auroc(black_box(&scores), &labels).unwrap())
    });
}

fn signals(c: &mut Criterion) {
    let cfg = SynthConfig {
        kind: WaveKind::Spiky,
        rate_hz: 250.0,
        duration_s: 10.0,
        beat_hz: 1.2,
        jitter: 0.05,
        noise_std: 0.05,
    };
    let raw = synth_quasiperiodic(&cfg, RngStream::new(7, 0)).unwrap();
    c.bench_function("resample 250->125 Hz, 10 s", |b| {
        b.iter(|| resample(black_box(&raw), 125.0).unwrap())
    });
    let at125 = resample(&raw, 125.0).unwrap();
    c.bench_function("zero-phase bandpass 1-47 Hz, 10 s", |b| {
        b.iter_batched(
            || at125.clone(),
            |s| butterworth_bandpass_zerophase(&s, 1.0, 47.0, 3).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, sampling, metrics, signals);
criterion_main!(benches);
