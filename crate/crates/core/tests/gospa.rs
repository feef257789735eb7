use aesa_core::config::GospaConfig;
use aesa_core::geometry::CartesianPosition;
use aesa_core::metrics::gospa;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pos(x: f64, y: f64, z: f64) -> CartesianPosition {
    CartesianPosition::new(x, y, z)
}

fn cfg(c: f64, p: f64) -> GospaConfig {
    GospaConfig {
        c,
        p,
        ..GospaConfig::default()
    }
}

/// GOSPA^p from its definition: minimum over every partial assignment.
fn brute_force(x: &[CartesianPosition], y: &[CartesianPosition], c: f64, p: f64) -> f64 {
    fn rec(x: &[CartesianPosition], y: &[CartesianPosition], c: f64, p: f64, i: usize, used: &mut Vec<bool>, acc: f64, paired: usize) -> f64 {
        if i == x.len() {
            let unpaired = (x.len() + y.len() - 2 * paired) as f64;
            return acc + c.powf(p) / 2.0 * unpaired;
        }
        let mut best = rec(x, y, c, p, i + 1, used, acc, paired);
        for j in 0..y.len() {
            if !used[j] {
                used[j] = true;
                let d = x[i].distance(&y[j]).min(c).powf(p);
                best = best.min(rec(x, y, c, p, i + 1, used, acc + d, paired + 1));
                used[j] = false;
            }
        }
        best
    }
    rec(x, y, c, p, 0, &mut vec![false; y.len()], 0.0, 0)
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<CartesianPosition> {
    (0..n)
        .map(|_| pos(rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(-spread..spread)))
        .collect()
}

#[test]
fn hand_cases() {
    let c = GospaConfig::default();
    assert_eq!(gospa(&[], &[], &c).unwrap().distance, 0.0);

    let r = gospa(&[pos(0.0, 0.0, 0.0)], &[pos(3.0, 4.0, 0.0)], &c).unwrap();
    assert_eq!((r.distance, r.localisation), (5.0, 5.0));

    // Two truths, one estimate near the second.
    let r = gospa(&[pos(0.0, 0.0, 0.0), pos(1000.0, 0.0, 0.0)], &[pos(1010.0, 0.0, 0.0)], &c).unwrap();
    assert_eq!((r.n_missed, r.n_false), (1, 0));
    assert_eq!(r.localisation, 10.0);
    assert_eq!(r.distance, 260.0);

    let r = gospa(&[], &[pos(1.0, 1.0, 1.0), pos(2.0, 2.0, 2.0)], &c).unwrap();
    assert_eq!((r.false_comp, r.distance), (500.0, 500.0));

    let r = gospa(&[pos(0.0, 0.0, 0.0)], &[pos(0.0, 0.0, 0.0)], &cfg(500.0, 2.0)).unwrap();
    assert_eq!(r.distance, 0.0);
    let r = gospa(&[pos(0.0, 0.0, 0.0)], &[pos(3.0, 4.0, 0.0)], &cfg(500.0, 2.0)).unwrap();
    assert!((r.distance - 5.0).abs() < 1e-12);
    assert_eq!(r.localisation, 25.0);
}

#[test]
fn matches_definition_on_small_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let (n, m) = (rng.random_range(0..=6), rng.random_range(0..=6));
        let x = random_set(&mut rng, n, 600.0);
        let y = random_set(&mut rng, m, 600.0);
        for p in [1.0, 2.0] {
            let r = gospa(&x, &y, &cfg(500.0, p)).unwrap();
            let oracle = brute_force(&x, &y, 500.0, p);
            assert!((r.distance.powf(p) - oracle).abs() <= 1e-9 * oracle.max(1.0), "{} vs {oracle}", r.distance.powf(p));
            let parts = r.localisation + r.missed + r.false_comp;
            assert!((parts - r.distance.powf(p)).abs() <= 1e-9 * parts.max(1.0));
        }
    }
}

#[test]
fn rejects_non_finite_input() {
    let c = GospaConfig::default();
    assert!(gospa(&[pos(f64::NAN, 0.0, 0.0)], &[pos(0.0, 0.0, 0.0)], &c).is_err());
}

proptest! {
    #[test]
    fn identical_sets_have_zero_distance(seed in any::<u64>(), n in 0usize..8) {
        let x = random_set(&mut ChaCha8Rng::seed_from_u64(seed), n, 1e4);
        prop_assert_eq!(gospa(&x, &x, &GospaConfig::default()).unwrap().distance, 0.0);
    }

    #[test]
    fn symmetric(seed in any::<u64>(), n in 0usize..7, m in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_set(&mut rng, n, 800.0);
        let y = random_set(&mut rng, m, 800.0);
        let c = GospaConfig::default();
        let (a, b) = (gospa(&x, &y, &c).unwrap(), gospa(&y, &x, &c).unwrap());
        prop_assert!((a.distance - b.distance).abs() <= 1e-9 * a.distance.max(1.0));
        prop_assert_eq!((a.n_missed, a.n_false), (b.n_false, b.n_missed));
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), n in 0usize..6, m in 0usize..6, k in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_set(&mut rng, n, 800.0);
        let y = random_set(&mut rng, m, 800.0);
        let z = random_set(&mut rng, k, 800.0);
        let c = GospaConfig::default();
        let d = |a: &[CartesianPosition], b: &[CartesianPosition]| gospa(a, b, &c).unwrap().distance;
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
    }

    #[test]
    fn bounded_by_cardinality(seed in any::<u64>(), n in 0usize..7, m in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_set(&mut rng, n, 5e3);
        let y = random_set(&mut rng, m, 5e3);
        let r = gospa(&x, &y, &GospaConfig::default()).unwrap();
        // every truth and estimate costs at most c/2 under p = 1
        prop_assert!(r.distance <= 250.0 * (n + m) as f64 + 1e-9);
        prop_assert!(r.distance >= 250.0 * n.abs_diff(m) as f64 - 1e-9);
    }
}
