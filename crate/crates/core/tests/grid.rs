use std::f64::consts::PI;

use choquard_core::{Grading, RadialField, RadialGrid};
use proptest::prelude::*;

fn ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0 + 1.0)
}

#[test]
fn unit_ball_volume() {
    let g = RadialGrid::new(3, 1.0, 2048, Grading::Uniform).unwrap();
    let v = g.integrate(&vec![1.0; g.len()]);
    assert!((v / (4.0 * PI / 3.0) - 1.0).abs() < 1e-6, "{v}");
    let g6 = RadialGrid::new(
        6,
        1.0,
        2048,
        Grading::Geometric {
            first_spacing: 1e-4,
        },
    )
    .unwrap();
    let v6 = g6.integrate(&vec![1.0; g6.len()]);
    assert!((v6 / ball_volume(6) - 1.0).abs() < 1e-5, "{v6}");
}

#[test]
fn gaussian_integral() {
    let g = RadialGrid::new(3, 12.0, 4096, Grading::Uniform).unwrap();
    let v = g.integrate_fn(|r| (-r * r).exp());
    assert!((v - PI.powf(1.5)).abs() < 1e-8, "{}", v - PI.powf(1.5));
    assert_eq!(g.integrate(&vec![0.0; g.len()]), 0.0);
}

#[test]
fn quadrature_is_second_order() {
    let errs: Vec<f64> = [256usize, 512, 1024]
        .iter()
        .map(|&n| {
            let g = RadialGrid::new(3, 1.0, n, Grading::Uniform).unwrap();
            (g.integrate(&vec![1.0; n]) - 4.0 * PI / 3.0).abs()
        })
        .collect();
    assert!(
        errs[0] / errs[1] >= 3.5 && errs[1] / errs[2] >= 3.5,
        "{errs:?}"
    );
}

#[test]
fn gaussian_gradient_norm() {
    let g = RadialGrid::new(3, 12.0, 2048, Grading::Uniform).unwrap();
    let u = g.sample(|r| (-r * r / 2.0).exp());
    let norms = g.norms(&u, 2.0);
    // ∫|∇u|² = 4π∫r⁴e^{−r²}dr = 3π^{3/2}/2, ∫u² = π^{3/2}
    let grad_sq = 1.5 * PI.powf(1.5);
    assert!((norms.grad_l2.powi(2) / grad_sq - 1.0).abs() < 1e-5);
    assert!((norms.l2.powi(2) / PI.powf(1.5) - 1.0).abs() < 1e-6);
    assert!((norms.h1.powi(2) - norms.l2.powi(2) - norms.grad_l2.powi(2)).abs() < 1e-12);
    let z = g.norms(&g.zeros(), 3.0);
    assert_eq!((z.l2, z.lq, z.grad_l2, z.h1), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn laplacian_of_polynomials_and_exponential() {
    for n in [3usize, 6] {
        let g = RadialGrid::new(
            n,
            10.0,
            2048,
            Grading::Geometric {
                first_spacing: 1e-3,
            },
        )
        .unwrap();
        let lap = g.laplacian(&g.sample(|r| r * r));
        for v in &lap.values()[1..g.len() - 1] {
            assert!((v - 2.0 * n as f64).abs() < 1e-6, "N = {n}: {v}");
        }
        assert!(g
            .laplacian(&g.sample(|_| 3.0))
            .values()
            .iter()
            .all(|v| v.abs() < 1e-6));
        let lap = g.laplacian(&g.sample(|r| (-r).exp()));
        for (r, v) in g.nodes().iter().zip(lap.values()) {
            if *r > 1.0 && *r < 10.0 {
                let exact = (1.0 - (n as f64 - 1.0) / r) * (-r).exp();
                assert!((v - exact).abs() < 1e-5, "N = {n}, r = {r}");
            }
        }
    }
}

#[test]
fn integration_by_parts() {
    let g = RadialGrid::new(
        6,
        10.0,
        2048,
        Grading::Geometric {
            first_spacing: 1e-3,
        },
    )
    .unwrap();
    let bump = |c: f64, w: f64| {
        move |r: f64| {
            if (r - c).abs() < w {
                (1.0 - ((r - c) / w).powi(2)).powi(4)
            } else {
                0.0
            }
        }
    };
    let u = g.sample(bump(2.0, 1.5));
    let v = g.sample(bump(3.0, 2.0));
    let lap = g.laplacian(&u);
    let pairing = g.integrate(
        &lap.values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a * b)
            .collect::<Vec<_>>(),
    );
    let k = g.apply_stiffness(u.values());
    let dirichlet = g.sphere_area() * k.iter().zip(v.values()).map(|(a, b)| a * b).sum::<f64>();
    let scale = g.h1_norm(u.values()) * g.h1_norm(v.values());
    assert!(
        (pairing + dirichlet).abs() <= 1e-4 * scale,
        "{} vs {}",
        pairing,
        dirichlet
    );
    // The variational Laplacian satisfies the identity to rounding.
    let lap_v = g.variational_laplacian(&u);
    let pairing_v = g.integrate(
        &lap_v
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a * b)
            .collect::<Vec<_>>(),
    );
    assert!((pairing_v + dirichlet).abs() <= 1e-12 * scale);
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(RadialGrid::new(2, 1.0, 64, Grading::Uniform).is_err());
    assert!(RadialGrid::new(3, 0.0, 64, Grading::Uniform).is_err());
    assert!(RadialGrid::new(3, 1.0, 8, Grading::Uniform).is_err());
    assert!(RadialGrid::new(3, 1.0, 64, Grading::Geometric { first_spacing: 0.5 }).is_err());
    let g = RadialGrid::new(3, 1.0, 64, Grading::Uniform).unwrap();
    assert!(RadialField::new(&g, vec![f64::NAN; 64]).is_err());
    assert!(RadialField::new(&g, vec![0.0; 63]).is_err());
}

#[test]
fn grid_invariants() {
    let g = RadialGrid::new(
        6,
        30.0,
        512,
        Grading::Geometric {
            first_spacing: 1e-4,
        },
    )
    .unwrap();
    assert!(g.weights().iter().all(|&w| w > 0.0));
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*g.nodes().last().unwrap(), g.r_max());
    assert!((g.nodes()[0] - 1e-4).abs() < 1e-6);
}

#[test]
fn csv_round_trip() {
    let g = RadialGrid::new(4, 5.0, 128, Grading::Uniform).unwrap();
    let u = g.sample(|r| (-r).exp() * (1.0 + r.sin()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.csv");
    u.write_csv(&g, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("radius,value\n"));
    assert_eq!(RadialField::read_csv(&g, &path).unwrap(), u);
}

proptest! {
    #[test]
    fn norms_are_homogeneous(lambda in -5.0f64..5.0) {
        let g = RadialGrid::new(3, 8.0, 256, Grading::Uniform).unwrap();
        let u = g.sample(|r| (-r * r).exp() * (1.0 + 0.3 * r));
        let a = g.norms(&u, 3.0);
        let b = g.norms(&u.scaled(lambda), 3.0);
        let l = lambda.abs();
        for (x, y) in [(a.l2, b.l2), (a.lq, b.lq), (a.grad_l2, b.grad_l2), (a.h1, b.h1)] {
            prop_assert!((y - l * x).abs() <= 1e-12 * (l * x).max(1e-300));
        }
    }
}
