use rand::{Rng, SeedableRng};
use steklov_patterns::assembly::assemble;
use steklov_patterns::certificate::build_w0;
use steklov_patterns::dynamics::{classify, default_dt, evolve_adaptive, settle, stability_spectrum, EquilibriumClass, EvolveOptions};
use steklov_patterns::meshing::mesh_domain;
use steklov_patterns::DomainSpec;

fn random_field(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[test]
fn energy_never_rises_along_accepted_steps() {
    for spec in [DomainSpec::disk(1.0), DomainSpec::ellipse(2.0, 1.0), DomainSpec::stadium(1.0, 5.0)] {
        let ops = assemble(&mesh_domain(&spec, 0.25).unwrap().1).unwrap();
        for seed in 0..10 {
            let lambda = 2.0;
            let u0 = random_field(ops.n(), seed);
            let opts = EvolveOptions { dt: default_dt(lambda), tol: 1e-6, max_steps: 300 };
            let run = evolve_adaptive(&u0, lambda, opts, &ops).unwrap();
            for w in run.energy_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10 * w[0].abs(), "{spec:?} seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn negated_start_gives_negated_flow() {
    let ops = assemble(&mesh_domain(&DomainSpec::ellipse(1.5, 1.0), 0.25).unwrap().1).unwrap();
    let u0 = random_field(ops.n(), 3);
    let neg: Vec<f64> = u0.iter().map(|v| -v).collect();
    let opts = EvolveOptions { dt: 0.1, tol: 1e-8, max_steps: 50 };
    let a = evolve_adaptive(&u0, 1.0, opts, &ops).unwrap();
    let b = evolve_adaptive(&neg, 1.0, opts, &ops).unwrap();
    assert!(a.u.iter().zip(&b.u).all(|(x, y)| (x + y).abs() < 1e-10));
}

fn settled_class(spec: &DomainSpec, h: f64, lambda: f64, delta: f64) -> EquilibriumClass {
    let (_, mesh) = mesh_domain(spec, h).unwrap();
    let ops = assemble(&mesh).unwrap();
    let u0 = build_w0(&mesh, delta);
    let opts = EvolveOptions { dt: default_dt(lambda), tol: 1e-6, max_steps: 4000 };
    let eq = settle(&u0, lambda, opts, 1e-10, &ops).unwrap();
    classify(&stability_spectrum(&eq.u, lambda, &ops).unwrap())
}

#[test]
fn elongated_stadium_pattern_survives_refinement() {
    let spec = DomainSpec::stadium(1.0, 10.0);
    for lambda in [1.0, 2.0] {
        let coarse = settled_class(&spec, 0.2, lambda, 2.5);
        let fine = settled_class(&spec, 0.1, lambda, 2.5);
        assert_eq!(coarse, EquilibriumClass::Pattern);
        assert_eq!(coarse, fine);
    }
}

#[test]
fn random_starts_on_the_disk_settle_to_constants() {
    for h in [0.2, 0.1] {
        let ops = assemble(&mesh_domain(&DomainSpec::disk(1.0), h).unwrap().1).unwrap();
        for seed in 0..4 {
            let opts = EvolveOptions { dt: 0.1, tol: 1e-6, max_steps: 4000 };
            let eq = settle(&random_field(ops.n(), seed), 1.0, opts, 1e-10, &ops).unwrap();
            let class = classify(&stability_spectrum(&eq.u, 1.0, &ops).unwrap());
            assert_eq!(class, EquilibriumClass::ConstantStable);
        }
    }
}
