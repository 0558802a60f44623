use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use splab_core::model::{assemble, build_eigensystem, eigendecompose, EigenConfig, Grid, PotentialSpec};
use splab_core::sensors::{DecayAxes, Placement, SensorMask, SensorSpec};
use splab_core::specineq::{gram, ratio_scan, GridPolicy};

fn sensor() -> SensorSpec {
    SensorSpec::EquidistributedDecay {
        delta: 0.2,
        alpha: 0.0,
        placement: Placement::Center,
        decay_axes: DecayAxes::All,
    }
}

fn eigensolvers(c: &mut Criterion) {
    let p = PotentialSpec::power_law(2.0).unwrap();
    let cfg = EigenConfig::default();
    let mut group = c.benchmark_group("eigensolve");
    for n in [1000, 4000] {
        let g = Grid::new(1, 12.0, n).unwrap();
        let h = assemble(&g, &p).unwrap();
        group.bench_with_input(BenchmarkId::new("tridiag", n), &n, |b, _| {
            b.iter(|| eigendecompose(&h, &g, "harmonic", 40.0, &cfg).unwrap())
        });
    }
    let g = Grid::new(2, 5.0, 31).unwrap();
    let h = assemble(&g, &p).unwrap();
    group.sample_size(10);
    group.bench_function("lanczos_2d_31", |b| {
        b.iter(|| eigendecompose(&h, &g, "harmonic", 8.0, &cfg).unwrap())
    });
    let aniso = PotentialSpec::anisotropic(2.0, 1).unwrap();
    let g = Grid::new(2, 9.0, 399).unwrap();
    group.bench_function("tensor_2d_399", |b| {
        b.iter(|| build_eigensystem(&aniso, &g, 30.0, &cfg).unwrap())
    });
    group.finish();
}

fn gram_matrix(c: &mut Criterion) {
    let p = PotentialSpec::power_law(2.0).unwrap();
    let g = Grid::new(1, 14.0, 3000).unwrap();
    let sys = build_eigensystem(&p, &g, 80.0, &EigenConfig::default()).unwrap();
    let mask = SensorMask::realize(&sensor(), &g).unwrap();
    let mut group = c.benchmark_group("gram");
    for lambda in [20.0, 80.0] {
        let sub = sys.subspace(lambda).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(sub.dim()), &sub, |b, sub| {
            b.iter(|| gram(sub, &mask).unwrap())
        });
    }
    group.finish();
}

fn scan(c: &mut Criterion) {
    let p = PotentialSpec::power_law(2.0).unwrap();
    let lambdas: Vec<f64> = (0..10).map(|i| 9.0 + 8.0 * i as f64).collect();
    let policy = GridPolicy::default();
    let mut group = c.benchmark_group("ratio_scan");
    group.sample_size(10);
    group.bench_function("harmonic_1d", |b| {
        b.iter(|| ratio_scan(&p, &sensor(), &lambdas, &policy).unwrap())
    });
    group.finish();
}

criterion_group!(benches, eigensolvers, gram_matrix, scan);
criterion_main!(benches);
