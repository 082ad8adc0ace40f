use criterion::{black_box, criterion_group, criterion_main, Criterion};
use kinanneal::annealer::{IntegratorConfig, KineticStepper, PhaseState};
use kinanneal::diagnostics::{gamma_check, random_test_function, GammaFunctional};
use kinanneal::fokker_planck::{gibbs_density, DiscreteGenerator, Stencil};
use kinanneal::potentials::{critical_depth, LandscapeGrid};
use kinanneal::rng::NoiseStream;
use kinanneal_bench::{double_well, phase_grid};

fn kinetic_steps(c: &mut Criterion) {
    let (model, sched, var) = double_well();
    let cfg = IntegratorConfig::default_for(&model, &sched, &var);
    c.bench_function("kinetic splitting, 1000 steps", |b| {
        let mut stepper = KineticStepper::new(&model, &sched, &var, &cfg);
        let mut noise = NoiseStream::new(1, 0);
        let mut s = PhaseState::new(vec![0.96], vec![0.0], 100.0);
        let mut k = 0u64;
        b.iter(|| {
            for _ in 0..1000 {
                stepper.step(&mut s, cfg.dt, &mut noise, k);
                k += 1;
            }
            black_box(&s);
        })
    });
    c.bench_function("philox normals, 1000", |b| {
        let mut noise = NoiseStream::new(1, 0);
        b.iter(|| (0..1000u64).map(|i| noise.normal(0, i)).sum::<f64>())
    });
}

fn fokker_planck_step(c: &mut Criterion) {
    let (model, sched, var) = double_well();
    let eps = sched.eps0();
    let grid = phase_grid(&model, &var, eps);
    let gen = DiscreteGenerator::new(&model, &var, eps, &grid, Stencil::Upwind).unwrap();
    let dt = 0.9 / gen.max_x_rate();
    let factors = gen.column_factors(dt).unwrap();
    let m = gibbs_density(&model, &var, eps, &grid).unwrap();
    let mut out = vec![0.0; grid.len()];
    c.bench_function("fokker-planck imex step, 128x128", |b| {
        b.iter(|| gen.advance_density_imex(black_box(&m.values), &mut out, &factors).unwrap())
    });
    c.bench_function("fokker-planck operator build, 128x128", |b| {
        b.iter(|| DiscreteGenerator::new(&model, &var, black_box(eps), &grid, Stencil::Upwind).unwrap())
    });
}

fn diagnostics(c: &mut Criterion) {
    let (model, _, var) = double_well();
    let grid = phase_grid(&model, &var, 1.0);
    let gen = DiscreteGenerator::new(&model, &var, 1.0, &grid, Stencil::Centered).unwrap();
    let h = random_test_function(&grid, 3, 0, 1.5);
    c.bench_function("gamma check psi, 128x128", |b| {
        b.iter(|| gamma_check(black_box(&h), &gen, GammaFunctional::Psi).unwrap())
    });
    c.bench_function("critical depth, double well", |b| {
        b.iter(|| critical_depth(black_box(&model), &LandscapeGrid::default_for(&model)).unwrap())
    });
}

criterion_group!(benches, kinetic_steps, fokker_planck_step, diagnostics);
criterion_main!(benches);
