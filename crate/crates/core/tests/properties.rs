use proptest::prelude::*;
use steklov_patterns::assembly::{assemble, boundary_potential, dirichlet_energy, energy, Bistable};
use steklov_patterns::certificate::recipe_bound_mode;
use steklov_patterns::geometry::measure;
use steklov_patterns::meshing::mesh_domain;
use steklov_patterns::steklov::{rayleigh_upper_bound, steklov_spectrum};
use steklov_patterns::{DiscreteOperators, DomainSpec};

fn ops_for(spec: DomainSpec, h: f64) -> DiscreteOperators {
    assemble(&mesh_domain(&spec, h).unwrap().1).unwrap()
}

/// Antiderivative of `G(u) = u²/2 − u⁴/4`.
fn big_h(u: f64) -> f64 {
    u.powi(3) / 6.0 - u.powi(5) / 20.0
}

/// `∫₀^L G(a + (b − a)t/L) dt` in closed form.
fn edge_integral(a: f64, b: f64, len: f64) -> f64 {
    if (b - a).abs() < 1e-6 {
        // Taylor about the midpoint; the omitted term is O((b − a)⁴)
        let m = 0.5 * (a + b);
        let g2 = 1.0 - 3.0 * m * m;
        len * (Bistable::big_g(m) + g2 * (b - a).powi(2) / 24.0)
    } else {
        len * (big_h(b) - big_h(a)) / (b - a)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_quadrature_is_exact(values in prop::collection::vec(-1.5f64..1.5, 64)) {
        let ops = ops_for(DomainSpec::disk(1.0), 0.3);
        let u: Vec<f64> = (0..ops.n()).map(|i| values[i % values.len()]).collect();
        let exact: f64 = ops.edges.iter().map(|e| edge_integral(u[e.start], u[e.end], e.length)).sum();
        let got = boundary_potential(&u, &ops);
        prop_assert!((got - exact).abs() <= 1e-13 * (1.0 + exact.abs()), "{got} vs {exact}");
    }

    #[test]
    fn window_roots_satisfy_vieta(c in 0.05f64..50.0, r in 0.1f64..10.0, ratio in 4.05f64..2000.0) {
        let d = ratio * r;
        let cert = recipe_bound_mode(r, d, c).unwrap();
        prop_assume!(cert.discriminant > 0.0);
        let (lo, hi) = cert.window.unwrap();
        let sum = (c * d + 2.0 * c * r) / (4.0 * c);
        let product = 4.0 * r * d / c;
        prop_assert!(((lo + hi) - sum).abs() <= 1e-12 * sum);
        prop_assert!((lo * hi - product).abs() <= 1e-12 * product);
        prop_assert!(lo < cert.delta_star && cert.delta_star < hi);
    }

    #[test]
    fn midpoint_meets_sufficient_inequality_for_small_c(c in 0.05f64..8.0, r in 0.1f64..10.0, ratio in 4.05f64..2000.0) {
        let cert = recipe_bound_mode(r, ratio * r, c).unwrap();
        if cert.discriminant > 0.0 {
            prop_assert!(cert.margin_sufficient >= -1e-12 * c, "margin {}", cert.margin_sufficient);
        }
    }

    #[test]
    fn long_domains_meet_sufficient_inequality(c in 0.05f64..300.0, r in 0.1f64..10.0, ratio in 8.7f64..2000.0) {
        let cert = recipe_bound_mode(r, ratio * r, c).unwrap();
        if cert.discriminant > 0.0 {
            prop_assert!(cert.delta_star_is_sufficient());
        }
    }

    #[test]
    fn energy_splits_into_its_parts(lambda in 0.0f64..20.0, values in prop::collection::vec(-1.0f64..1.0, 32)) {
        let ops = ops_for(DomainSpec::stadium(1.0, 4.0), 0.3);
        let u: Vec<f64> = (0..ops.n()).map(|i| values[(i * 7) % values.len()]).collect();
        let e = energy(&u, lambda, &ops).unwrap();
        let parts = dirichlet_energy(&u, &ops) - lambda * boundary_potential(&u, &ops);
        prop_assert!((e - parts).abs() <= 1e-12 * (1.0 + e.abs()));
    }

    #[test]
    fn mesh_partition_is_additive(delta_frac in 0.01f64..0.49, diameter in 3.0f64..12.0) {
        let spec = DomainSpec::stadium(1.0, diameter);
        let (polygon, mesh) = mesh_domain(&spec, 0.3).unwrap();
        let delta = delta_frac * measure(&polygon).unwrap().diameter;
        let labels = mesh.partition(delta).unwrap();
        prop_assert_eq!(labels.labels.len(), mesh.boundary_edges().len());
        prop_assert!((labels.total() - mesh.perimeter()).abs() <= 1e-12 * mesh.perimeter());
    }
}

#[test]
fn rayleigh_quotients_dominate_mu1() {
    use rand::{Rng, SeedableRng};
    let domains = [
        DomainSpec::disk(1.0),
        DomainSpec::stadium(1.0, 6.0),
        DomainSpec::ellipse(2.0, 1.0),
        DomainSpec::rounded_rectangle(3.0, 2.0, 0.5),
    ];
    for (k, spec) in domains.into_iter().enumerate() {
        let ops = ops_for(spec, 0.2);
        let mu1 = steklov_spectrum(&ops, 2).unwrap().mu1();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(k as u64);
        for _ in 0..100 {
            let v: Vec<f64> = (0..ops.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = rayleigh_upper_bound(&ops, &v).unwrap();
            assert!(q >= mu1 - 1e-10, "{q} < {mu1}");
        }
    }
}
