use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mpmsa::exec::ExecMode;
use mpmsa::geometry::CubeSpec;
use mpmsa::model::{DisorderSpec, InteractionSpec, ModelSpec};
use mpmsa::msa::{estimate_singularity_probability, McSettings, MsaParams};

fn singularity_trials(c: &mut Criterion) {
    let model = ModelSpec::new(DisorderSpec::Uniform { low: 0.0, high: 20.0 }, InteractionSpec::bump(1, 0.1).unwrap());
    let mut group = c.benchmark_group("singularity_trials");
    group.sample_size(10);
    for (centers, l) in [(&[0i64][..], 32), (&[0, 2][..], 8)] {
        let cube = CubeSpec::line(centers, l).unwrap();
        let params = MsaParams::new(0.2, 8, centers.len(), centers.len(), 3.0);
        for mode in [ExecMode::Sequential, ExecMode::Parallel] {
            let mc = McSettings::new(64, 7).with_mode(mode);
            let id = BenchmarkId::new(format!("{mode:?}"), format!("n{}_L{l}", centers.len()));
            group.bench_function(id, |b| {
                b.iter(|| estimate_singularity_probability(&model, &params, &cube, 3.0, &mc).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, singularity_trials);
criterion_main!(benches);
