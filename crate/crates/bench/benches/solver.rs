use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use hdpg_core::system::lstsq;
use hdpg_core::{
    assemble_darcy, assemble_hdpg_stokes, example1, example3, solve_least_squares, DarcySchemeConfig, DarcyVariant,
    Domain, Mesh, StokesSchemeConfig,
};

fn darcy(c: &mut Criterion) {
    let problem = example1();
    let mesh = Mesh::uniform(Domain::unit_square(), 3, 3, None).unwrap();
    let mut group = c.benchmark_group("darcy_example1");
    group.sample_size(10);
    for variant in [DarcyVariant::Hdpg, DarcyVariant::HdpgReduced] {
        let cfg = DarcySchemeConfig { half_width: 0.6, ..DarcySchemeConfig::from_degree(4, variant) };
        group.bench_with_input(BenchmarkId::new("assemble", variant.name()), &cfg, |b, cfg| {
            b.iter(|| assemble_darcy(&mesh, &problem, black_box(cfg)).unwrap())
        });
        let d = assemble_darcy(&mesh, &problem, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", variant.name()), &d.system, |b, s| {
            b.iter(|| solve_least_squares(black_box(s), None).unwrap())
        });
    }
    group.finish();
}

fn stokes(c: &mut Criterion) {
    let problem = example3(0.1).unwrap();
    let mesh = Mesh::uniform(Domain::unit_square(), 2, 2, None).unwrap();
    let cfg = StokesSchemeConfig { half_width: 1.5, ..StokesSchemeConfig::from_degree(4) };
    let mut group = c.benchmark_group("stokes_example3");
    group.sample_size(10);
    group.bench_function("assemble", |b| b.iter(|| assemble_hdpg_stokes(&mesh, &problem, black_box(&cfg)).unwrap()));
    group.finish();
}

fn dense_lstsq(c: &mut Criterion) {
    let mut group = c.benchmark_group("cpqr_lstsq");
    group.sample_size(10);
    for n in [100usize, 300, 600] {
        let a = faer::Mat::from_fn(n + n / 2, n, |i, j| ((i * 31 + j * 17) % 97) as f64 / 97.0 + if i == j { 1.0 } else { 0.0 });
        let b = faer::Mat::from_fn(n + n / 2, 1, |i, _| (i % 7) as f64);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bch, _| {
            bch.iter(|| lstsq(a.clone(), b.clone(), None))
        });
    }
    group.finish();
}

criterion_group!(benches, darcy, stokes, dense_lstsq);
criterion_main!(benches);
