use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctxed_core::corpus::{synth_corpus, synth_embed, SynthCorpusConfig};
use ctxed_core::exec::ExecMode;
use ctxed_core::fusion::FusionVariant;
use ctxed_core::trainer::{evaluate_model, init_model, train, TrainConfig};

fn modes() -> [(&'static str, ExecMode); 2] {
    [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)]
}

fn bench_exec_modes(c: &mut Criterion) {
    let train_corpus = synth_corpus(&SynthCorpusConfig {
        sentences: 256,
        ..Default::default()
    })
    .unwrap();
    let dev = synth_corpus(&SynthCorpusConfig {
        split_name: "dev".into(),
        id_prefix: "dev".into(),
        sentences: 400,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let emb = synth_embed(&[&train_corpus, &dev], 32, 0.1, 2).unwrap();

    let mut group = c.benchmark_group("evaluate");
    for variant in [FusionVariant::Film, FusionVariant::BiLstm] {
        let cfg = TrainConfig {
            variant,
            ..Default::default()
        };
        let model = init_model(&cfg, 32, dev.vocab()).unwrap();
        for (name, mode) in modes() {
            group.bench_with_input(BenchmarkId::new(variant.key(), name), &mode, |b, &mode| {
                b.iter(|| black_box(evaluate_model(&model, &dev, &emb, mode).unwrap()))
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(10);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 64,
        ..Default::default()
    };
    for (name, mode) in modes() {
        group.bench_with_input(BenchmarkId::new("film", name), &mode, |b, &mode| {
            b.iter(|| black_box(train(&cfg, &train_corpus, &dev, &emb, mode).unwrap().history))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_exec_modes);
criterion_main!(benches);
