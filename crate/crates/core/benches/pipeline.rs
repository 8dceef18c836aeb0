use std::hint::black_box;

use cotrace_core::analytics::RuleBackend;
use cotrace_core::synth::{generate_corpus, SynthConfig};
use cotrace_core::{run_pipeline, Exec, PipelineConfig, UserInput};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn inputs(n_users: u32) -> Vec<UserInput> {
    let cfg = SynthConfig {
        seed: 42,
        n_users,
        sessions_per_user: 6,
        prompts_per_session: 12,
        max_edit_groups: 3,
        ..SynthConfig::default()
    };
    let corpus = generate_corpus(&cfg).expect("valid synth config");
    corpus
        .users
        .iter()
        .map(|u| UserInput {
            user: u.user.clone(),
            commits: u.shadow_commits(),
            sessions: u.sessions.clone(),
        })
        .collect()
}

fn bench_pipeline(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let backend = RuleBackend::new();
    let mut group = c.benchmark_group("pipeline");
    for n_users in [8, 32] {
        let data = inputs(n_users);
        for (name, exec) in [
            ("sequential", Exec::Sequential),
            ("parallel", Exec::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, n_users), &data, |b, data| {
                b.iter(|| {
                    run_pipeline(black_box(data), &cfg, &backend, exec, Vec::new())
                        .expect("pipeline runs")
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_pipeline);
criterion_main!(benches);
