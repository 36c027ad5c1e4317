mod common;

use num_complex::Complex64;
use ocsnspd::optics::{stack_response, ComplexIndex, Layer, Stack};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{airy_single_film_reflectance, lossless};

fn random_stack(rng: &mut StdRng) -> Stack {
    let layers = (0..rng.random_range(1..=8))
        .map(|i| {
            let n = rng.random_range(0.2..6.0);
            let k = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..8.0) };
            Layer::new(format!("L{i}"), rng.random_range(0.1..500.0), ComplexIndex::new(n, k).unwrap()).unwrap()
        })
        .collect();
    Stack::new(lossless(rng.random_range(1.0..2.5)), layers, lossless(rng.random_range(1.0..3.5)))
}

#[test]
fn energy_is_conserved_layer_by_layer() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    for case in 0..1000 {
        let stack = random_stack(&mut rng);
        let wl = rng.random_range(400.0..2000.0);
        let r = stack_response(&stack, wl).unwrap();
        let layer_sum: f64 = r.layer_absorptance.iter().sum();
        let defect = 1.0 - r.reflectance - r.transmittance - layer_sum;
        assert!(defect.abs() < 1e-10, "case {case}: defect {defect:e}");
        assert!((r.absorptance - layer_sum).abs() < 1e-10, "case {case}");
        assert!((0.0..=1.0).contains(&r.reflectance) && (0.0..=1.0 + 1e-12).contains(&r.transmittance));
    }
}

#[test]
fn transmittance_is_reciprocal() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0002);
    for case in 0..1000 {
        let stack = random_stack(&mut rng);
        let wl = rng.random_range(400.0..2000.0);
        let forward = stack_response(&stack, wl).unwrap().transmittance;
        let backward = stack_response(&stack.reversed(), wl).unwrap().transmittance;
        assert!((forward - backward).abs() < 1e-10, "case {case}: {forward} vs {backward}");
    }
}

#[test]
fn lossless_stacks_absorb_nothing() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0003);
    for _ in 0..500 {
        let mut stack = random_stack(&mut rng);
        for layer in &mut stack.layers {
            layer.index.k = 0.0;
        }
        let r = stack_response(&stack, rng.random_range(400.0..2000.0)).unwrap();
        assert!(r.layer_absorptance.iter().all(|&a| a == 0.0));
        assert_eq!(r.absorptance, 0.0);
        assert!((r.reflectance + r.transmittance - 1.0).abs() < 1e-10);
    }
}

#[test]
fn single_film_matches_airy_summation() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0004);
    for _ in 0..500 {
        let (n0, n2) = (rng.random_range(1.0..2.0), rng.random_range(1.0..4.0));
        let n1 = Complex64::new(rng.random_range(0.3..5.0), rng.random_range(0.0..3.0));
        let d = rng.random_range(0.1..800.0);
        let wl = rng.random_range(400.0..2000.0);
        let stack = Stack::new(lossless(n0), vec![Layer::new("f", d, ComplexIndex::new(n1.re, n1.im).unwrap()).unwrap()], lossless(n2));
        let expected = airy_single_film_reflectance(n0, n1, n2, d, wl);
        let got = stack_response(&stack, wl).unwrap().reflectance;
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn half_wave_layers_are_absentees(n in 1.1f64..4.0, m in 1u32..4, wl in 800.0f64..1800.0, film_n in 1.2f64..3.0, film_d in 10.0f64..400.0) {
        let film = Layer::new("film", film_d, lossless(film_n)).unwrap();
        let base = Stack::new(lossless(1.0), vec![film.clone()], lossless(1.5));
        let absentee = Layer::new("half", m as f64 * wl / (2.0 * n), lossless(n)).unwrap();
        let padded = Stack::new(lossless(1.0), vec![film, absentee], lossless(1.5));
        let a = stack_response(&base, wl).unwrap();
        let b = stack_response(&padded, wl).unwrap();
        prop_assert!((a.reflectance - b.reflectance).abs() < 1e-10);
    }

    #[test]
    fn vanishing_layers_change_nothing(n in 0.2f64..6.0, k in 0.0f64..8.0, wl in 400.0f64..2000.0, d in 1.0f64..300.0) {
        let film = Layer::new("film", d, ComplexIndex::new(2.0, 0.5).unwrap()).unwrap();
        let ghost = Layer::new("ghost", 1e-9, ComplexIndex::new(n, k).unwrap()).unwrap();
        let a = stack_response(&Stack::new(lossless(1.3), vec![film.clone()], lossless(1.7)), wl).unwrap();
        let b = stack_response(&Stack::new(lossless(1.3), vec![ghost, film], lossless(1.7)), wl).unwrap();
        prop_assert!((a.reflectance - b.reflectance).abs() < 1e-9);
        prop_assert!((a.transmittance - b.transmittance).abs() < 1e-9);
        prop_assert!(b.layer_absorptance[0].abs() < 1e-9);
    }
}
