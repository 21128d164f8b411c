use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use randprod::ensembles::presets;
use randprod::montecarlo::simulate_with;
use randprod::spectral::{chebyshev_nodes, AngleGrid, SolverOptions, SpectralSolver};
use randprod::{Direction, Execution};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn sampling(c: &mut Criterion) {
    let ens = presets::positive_pair();
    let x0 = Direction::project(&[1.0, 1.0], ens.space(), ens.norm()).unwrap();
    let mut group = c.benchmark_group("simulate n=64 R=65536");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_with(exec, &ens, &x0, 64, 65_536, 1).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let ens = presets::positive_pair();
    let grid = AngleGrid::for_space(ens.space(), 256, ens.norm()).unwrap();
    let solver = SpectralSolver::new(&ens, grid, SolverOptions::default()).unwrap();
    let nodes = chebyshev_nodes(17, 0.2);
    let mut group = c.benchmark_group("solve 17 nodes M=256");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solver.solve_many(exec, &nodes).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, sampling, spectrum);
criterion_main!(benches);
