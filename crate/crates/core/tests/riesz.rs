use std::f64::consts::PI;

use choquard_core::bubbles::hls_constant;
use choquard_core::{
    double_integral, kernel_weight, pair_integral, random_bumps, riesz_convolve, Grading,
    KernelTable, Profile, RadialGrid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// ∬ e^{−a|x|²} e^{−a|y|²} |x−y|^{−1} dx dy in three dimensions.
fn gaussian_closed_form(a: f64) -> f64 {
    (PI / a).powi(3) * (2.0 / PI).sqrt() * a.sqrt()
}

/// Monte-Carlo estimate of the same integral: X, Y are independent
/// N(0, I/(2a)) samples and each pair contributes (π/a)³/|X − Y|.
fn gaussian_monte_carlo(a: f64, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, (0.5 / a).sqrt()).unwrap();
    let scale = (PI / a).powi(3);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let d2: f64 = (0..3)
            .map(|_| (normal.sample(&mut rng) - normal.sample(&mut rng)).powi(2))
            .sum();
        let v = scale / d2.sqrt();
        sum += v;
        sum_sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    (mean, ((sum_sq / n - mean * mean) / n).sqrt())
}

fn gaussian_setup() -> (RadialGrid, KernelTable, Vec<f64>) {
    let grid = RadialGrid::new(3, 8.0, 2048, Grading::Uniform).unwrap();
    let table = KernelTable::build(&grid, 1.0).unwrap();
    let u = grid.sample(|r| (-r * r).exp()).into_values();
    (grid, table, u)
}

#[test]
fn kernel_is_symmetric_and_positive() {
    for &(n, mu) in &[(3usize, 1.0), (4, 1.5), (6, 2.0), (5, 3.5)] {
        for &(r, s) in &[(0.2, 1.7), (1.0, 1.001), (3.0, 0.5)] {
            let a = kernel_weight(n, mu, r, s);
            let b = kernel_weight(n, mu, s, r);
            assert!(a > 0.0 && (a - b).abs() <= 1e-10 * a, "N = {n}, mu = {mu}");
        }
    }
    let g = RadialGrid::new(6, 5.0, 48, Grading::Uniform).unwrap();
    let t = KernelTable::build(&g, 2.0).unwrap();
    for i in 0..g.len() {
        for j in 0..g.len() {
            assert_eq!(t.get(i, j), t.get(j, i));
        }
    }
}

#[test]
fn kernel_at_origin_is_a_pure_power() {
    // Small-r limit of the angular integral: |S^{N−2}|·B((N−1)/2, 1/2)·s^{−μ} = |S^{N−1}|·s^{−μ}.
    for &(n, mu) in &[(3usize, 1.0), (6, 2.0), (5, 2.7)] {
        let area = 2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0);
        for s in [0.3, 1.0, 4.0] {
            let at_zero = kernel_weight(n, mu, 0.0, s) * s.powf(mu);
            assert!((at_zero / area - 1.0).abs() < 1e-12);
            let near_zero = kernel_weight(n, mu, 1e-7, s) * s.powf(mu);
            assert!(
                (near_zero / area - 1.0).abs() < 1e-6,
                "N = {n}, mu = {mu}, s = {s}"
            );
        }
    }
}

#[test]
fn far_field_matches_point_source() {
    for &(n, mu) in &[(3usize, 1.0), (6, 2.0), (4, 3.0)] {
        let area = 2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0);
        let w = kernel_weight(n, mu, 10.0, 0.1);
        let point = area * 10f64.powf(-mu);
        assert!((w / point - 1.0).abs() < 0.01, "N = {n}: {w} vs {point}");
    }
}

#[test]
fn kernel_decreases_with_separation() {
    for &(n, mu) in &[(3usize, 1.0), (6, 2.0), (6, 3.5)] {
        let vals: Vec<f64> = [0.0, 0.2, 0.5, 1.0, 1.5]
            .iter()
            .map(|d| kernel_weight(n, mu, 2.0 + d, 2.0 - d))
            .collect();
        assert!(
            vals.windows(2).all(|w| w[1] < w[0]),
            "N = {n}, mu = {mu}: {vals:?}"
        );
    }
}

#[test]
fn potential_and_double_integral_homogeneity() {
    let grid = RadialGrid::new(
        6,
        10.0,
        256,
        Grading::Geometric {
            first_spacing: 1e-3,
        },
    )
    .unwrap();
    let table = KernelTable::build(&grid, 2.0).unwrap();
    let u = grid.sample(|r| (-r).exp() * (1.0 + r)).into_values();
    let p = 2.5;
    assert!(
        riesz_convolve(&table, &grid, &grid.zeros().into_values(), p)
            .iter()
            .all(|&v| v == 0.0)
    );
    assert_eq!(
        double_integral(&table, &grid, &grid.zeros().into_values(), p),
        0.0
    );
    let phi = riesz_convolve(&table, &grid, &u, p);
    assert!(phi.iter().all(|&v| v > 0.0));
    for lambda in [0.3, 2.0, -1.7] {
        let lu: Vec<f64> = u.iter().map(|v| lambda * v).collect();
        let phi_l = riesz_convolve(&table, &grid, &lu, p);
        let scale = f64::abs(lambda).powf(p);
        for (a, b) in phi.iter().zip(&phi_l) {
            assert!((b - scale * a).abs() <= 1e-12 * (scale * a));
        }
        let d = double_integral(&table, &grid, &u, p);
        let dl = double_integral(&table, &grid, &lu, p);
        assert!((dl - scale * scale * d).abs() <= 1e-12 * dl);
    }
}

#[test]
fn gaussian_double_integral_closed_form() {
    let (grid, table, u) = gaussian_setup();
    let d = double_integral(&table, &grid, &u, 2.0);
    let exact = gaussian_closed_form(2.0);
    assert!((d / exact - 1.0).abs() < 1e-4, "{d} vs {exact}");
}

#[test]
fn gaussian_double_integral_monte_carlo() {
    let (grid, table, u) = gaussian_setup();
    let d = double_integral(&table, &grid, &u, 2.0);
    let (mc, se) = gaussian_monte_carlo(2.0, 1_000_000, 7);
    assert!((mc / gaussian_closed_form(2.0) - 1.0).abs() < 5e-3);
    assert!((d - mc).abs() <= 3.0 * se, "grid {d}, oracle {mc} ± {se}");
    assert!((d / mc - 1.0).abs() < 5e-3);
}

#[test]
fn coarse_grid_stays_close_to_the_oracle() {
    let grid = RadialGrid::new(3, 6.0, 32, Grading::Uniform).unwrap();
    let table = KernelTable::build(&grid, 1.0).unwrap();
    let u = grid.sample(|r| (-r * r).exp()).into_values();
    let d = double_integral(&table, &grid, &u, 2.0);
    assert!((d / gaussian_closed_form(2.0) - 1.0).abs() < 0.05, "{d}");
}

#[test]
fn hls_inequality_on_random_fields() {
    let grid = RadialGrid::new(
        6,
        12.0,
        384,
        Grading::Geometric {
            first_spacing: 1e-3,
        },
    )
    .unwrap();
    let mu = 2.0;
    let table = KernelTable::build(&grid, mu).unwrap();
    let c = hls_constant(6, mu);
    let two_star = 3.0;
    let power = 2.5;
    for u in random_bumps(&grid, 10, 11) {
        let u = u.into_values();
        let d = double_integral(&table, &grid, &u, power);
        let lq = grid.integrate(&u.iter().map(|v| v.abs().powf(two_star)).collect::<Vec<_>>());
        let bound = c * lq.powf(2.0 * power / two_star);
        assert!(d > 0.0 && d <= bound * (1.0 + 1e-6), "{d} > {bound}");
    }
}

#[test]
fn pair_integral_at_zero_offset_is_the_grid_rule() {
    let grid = RadialGrid::new(
        6,
        10.0,
        512,
        Grading::Geometric {
            first_spacing: 1e-3,
        },
    )
    .unwrap();
    let g = grid.sample(|r| (-r * r / 2.0).exp()).into_values();
    let direct = grid.integrate(&g.iter().map(|v| v * v).collect::<Vec<_>>());
    let p = pair_integral(&grid, Profile::Unit, &g, |t| t * t, 0.0).unwrap();
    assert!((p - direct).abs() <= 1e-8 * direct);
    assert!(pair_integral(&grid, Profile::Unit, &g, |t| t, -1.0).is_err());
}

#[test]
fn pair_integral_is_translation_invariant_for_unit_profile() {
    let grid = RadialGrid::new(
        6,
        6.0,
        512,
        Grading::Geometric {
            first_spacing: 1e-3,
        },
    )
    .unwrap();
    let g = grid
        .sample(|r| {
            if r < 2.0 {
                (1.0 - (r / 2.0).powi(2)).powi(4)
            } else {
                0.0
            }
        })
        .into_values();
    let psi = |t: f64| t * t;
    let centred = pair_integral(&grid, Profile::Unit, &g, psi, 0.0).unwrap();
    for offset in [0.5, 1.0, 3.0, 7.5] {
        let shifted = pair_integral(&grid, Profile::Unit, &g, psi, offset).unwrap();
        assert!(
            (shifted / centred - 1.0).abs() < 1e-8,
            "R = {offset}: {shifted} vs {centred}"
        );
    }
}

#[test]
fn spherical_means_match_closed_forms() {
    use choquard_core::spherical_mean;
    // N = 3: the mean of e^{−|x|} over |x − R·e| = d is
    // (e^{−|R−d|}(1 + |R−d|) − e^{−(R+d)}(1 + R + d)) / (2Rd).
    for &(big_r, d) in &[(2.0f64, 0.5f64), (5.0, 5.0), (0.3, 4.0), (8.0, 1e-3)] {
        let (a, b) = ((big_r - d).abs(), big_r + d);
        let exact = ((-a).exp() * (1.0 + a) - (-b).exp() * (1.0 + b)) / (2.0 * big_r * d);
        let m = spherical_mean(3, Profile::Exponential { rate: 1.0 }, big_r, d);
        assert!(
            (m / exact - 1.0).abs() < 1e-8,
            "R = {big_r}, d = {d}: {m} vs {exact}"
        );
    }
    // N = 3: the fraction of the sphere |x − R·e| = d inside the unit ball is
    // (1 − (R − d)²)/(4Rd) when |R − d| < 1 < R + d.
    let m = spherical_mean(3, Profile::Ball { radius: 1.0 }, 1.5, 1.0);
    assert!((m - (1.0 - 0.25) / 6.0).abs() < 1e-9, "{m}");
    assert_eq!(
        spherical_mean(3, Profile::Ball { radius: 1.0 }, 5.0, 1.0),
        0.0
    );
    assert_eq!(spherical_mean(6, Profile::Unit, 5.0, 1.0), 1.0);
}

#[test]
fn pair_integral_far_offset_with_ball_profile_vanishes() {
    let grid = RadialGrid::new(3, 2.0, 128, Grading::Uniform).unwrap();
    let g = grid.sample(|r| 1.0 - r / 2.0).into_values();
    let v = pair_integral(&grid, Profile::Ball { radius: 1.0 }, &g, |t| t, 5.0).unwrap();
    assert_eq!(v, 0.0);
    let near = pair_integral(&grid, Profile::Ball { radius: 1.0 }, &g, |t| t, 1.5).unwrap();
    assert!(near > 0.0);
}
