use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::optics::gaussian_pump;

fn random_field(n: usize, rng: &mut ChaCha8Rng, plane: Plane) -> ComplexField {
    let data = Array2::from_shape_simple_fn((n, n), || Complex64::new(rng.random_range(0.2..1.0), rng.random_range(-0.5..0.5)));
    ComplexField::new(data, 1.0, plane).unwrap()
}

fn random_instance(n: usize, seed: u64) -> (ComplexField, TargetSpec, PhasePattern) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e0 = random_field(n, &mut rng, Plane::CellCenter);
    let t = random_field(n, &mut rng, Plane::FarField);
    let signal = Array2::from_shape_simple_fn((n, n), || rng.random_bool(0.5));
    let noise = signal.mapv(|s| !s);
    let target = TargetSpec::new(t, signal, noise).unwrap();
    let phi = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..2.0 * PI));
    let disk = ConstantDisk { center: (n / 2, n / 2), radius: 1.0, value: 0.3 };
    (e0, target, apply_constant_phase_disk(&phi, disk).unwrap())
}

fn no_disk() -> ConstantDisk {
    ConstantDisk { center: (0, 0), radius: 0.0, value: 0.0 }
}

#[test]
fn flat_phase_gaussian_far_field() {
    let (n, w) = (64, 1.0e-3);
    let pitch = 10.0 * w / n as f64;
    let e0 = gaussian_pump(n, pitch, w).unwrap();
    let flat = apply_constant_phase_disk(&Array2::zeros((n, n)), ConstantDisk::default_for(n)).unwrap();
    let out = forward_model(&e0, &flat).unwrap();
    assert!((out.energy() - 1.0).abs() < 1e-12);
    let dk = out.pitch();
    let peak = out.data()[[32, 32]].re;
    for ((i, j), z) in out.data().indexed_iter() {
        let q2 = ((i as f64 - 32.0).powi(2) + (j as f64 - 32.0).powi(2)) * dk * dk;
        assert!((z - peak * (-q2 * w * w / 8.0).exp()).norm() < 1e-9);
    }
}

#[test]
fn global_phase_and_ramp() {
    let (n, w) = (64, 1.0e-3);
    let pitch = 6.0 * w / n as f64;
    let e0 = gaussian_pump(n, pitch, w).unwrap();
    let disk = ConstantDisk { radius: 0.0, ..ConstantDisk::default_for(n) };
    let base = apply_constant_phase_disk(&Array2::zeros((n, n)), disk).unwrap();
    let theta = 0.7;
    let shifted = apply_constant_phase_disk(&Array2::from_elem((n, n), theta), ConstantDisk { value: theta, ..disk }).unwrap();
    let a = forward_model(&e0, &base).unwrap();
    let b = forward_model(&e0, &shifted).unwrap();
    let rot = Complex64::from_polar(1.0, 2.0 * theta);
    for (x, y) in a.data().iter().zip(b.data()) {
        assert!((x * rot - y).norm() < 1e-12);
    }
    // Ramp of 3 k-samples moves the squared field's spectrum by 6.
    let ramp = Array2::from_shape_fn((n, n), |(_, j)| 2.0 * PI * 3.0 * (j as f64 - 32.0) / n as f64);
    let ramp = apply_constant_phase_disk(&ramp, disk).unwrap();
    let r = forward_model(&e0, &ramp).unwrap();
    let at = r.data().indexed_iter().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).unwrap().0;
    assert_eq!(at, (32, 38));
}

#[test]
fn cost_extremes() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = random_field(n, &mut rng, Plane::FarField);
    let all = Array2::from_elem((n, n), true);
    let none = Array2::from_elem((n, n), false);
    let target = TargetSpec::new(t, all.clone(), none.clone()).unwrap();
    assert_eq!(cost(target.target(), &target, 10.0).unwrap(), 0.0);
    let mut orth = Array2::zeros((n, n));
    orth[[0, 0]] = Complex64::new(1.0, 0.0);
    let mut tt = Array2::zeros((n, n));
    tt[[1, 1]] = Complex64::new(1.0, 0.0);
    let target = TargetSpec::new(ComplexField::new(tt, 1.0, Plane::FarField).unwrap(), all, none).unwrap();
    let e_out = ComplexField::new(orth, 1.0, Plane::FarField).unwrap();
    assert_eq!(cost(&e_out, &target, 10.0).unwrap(), 1e10);
}

#[test]
fn empty_signal_mask_rejected() {
    let t = ComplexField::zeros(8, 1.0, Plane::FarField).unwrap();
    let none = Array2::from_elem((8, 8), false);
    assert!(matches!(TargetSpec::new(t, none.clone(), none), Err(Error::EmptySignalMask)));
}

#[test]
fn overlapping_masks_rejected() {
    let t = ComplexField::from_fn(8, 1.0, Plane::FarField, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    let all = Array2::from_elem((8, 8), true);
    assert!(matches!(TargetSpec::new(t, all.clone(), all), Err(Error::Contract(_))));
}

#[test]
fn cost_matches_direct_expression() {
    let n = 8;
    let (e0, target, phase) = random_instance(n, 11);
    let c = cost(&forward_model(&e0, &phase).unwrap(), &target, 10.0).unwrap();
    // Direct O(N⁴) transform of the squared field and the formula term by term.
    let u2: Vec<Complex64> = e0.data().iter().zip(phase.phi()).map(|(z, p)| (z * Complex64::from_polar(1.0, *p)).powu(2)).collect();
    let norm = u2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut o = 0.0;
    for ki in 0..n {
        for kj in 0..n {
            if !target.signal()[[ki, kj]] {
                continue;
            }
            let mut f = Complex64::new(0.0, 0.0);
            for xi in 0..n {
                for xj in 0..n {
                    let arg = -2.0 * PI * ((ki as f64 - 4.0) * (xi as f64 - 4.0) + (kj as f64 - 4.0) * (xj as f64 - 4.0)) / n as f64;
                    f += u2[xi * n + xj] * Complex64::from_polar(1.0, arg);
                }
            }
            f /= n as f64 * norm;
            o += (target.target().data()[[ki, kj]].conj() * f).re;
        }
    }
    let direct = 1e10 * (1.0 - o) * (1.0 - o);
    assert!((c - direct).abs() <= 1e-12 * direct);
}

fn finite_difference(e0: &ComplexField, target: &TargetSpec, phase: &PhasePattern, i: usize, j: usize, h: f64) -> f64 {
    let eval = |delta: f64| {
        let mut phi = phase.phi().clone();
        phi[[i, j]] += delta;
        let p = PhasePattern { phi, disk: *phase.disk() };
        cost(&forward_model(e0, &p).unwrap(), target, 10.0).unwrap()
    };
    (eval(h) - eval(-h)) / (2.0 * h)
}

#[test]
fn gradient_matches_central_differences() {
    for seed in 0..3 {
        let n = 8;
        let (e0, target, phase) = random_instance(n, 100 + seed);
        let g = cost_gradient(&phase, &e0, &target, 10.0).unwrap();
        for ((i, j), &a) in g.indexed_iter() {
            if phase.disk().contains(i, j) {
                assert_eq!(a, 0.0);
                continue;
            }
            let fd = finite_difference(&e0, &target, &phase, i, j, 1e-6);
            assert!((a - fd).abs() <= 1e-5 * fd.abs(), "({i},{j}) {a} vs {fd}");
        }
    }
}

#[test]
fn noise_region_is_free() {
    let n = 8;
    let (e0, target, phase) = random_instance(n, 5);
    let out = forward_model(&e0, &phase).unwrap();
    let perturbed = ComplexField::new(
        ndarray::Zip::from(out.data()).and(target.noise()).map_collect(|&z, &nz| if nz { z * 3.0 + 1.0 } else { z }),
        out.pitch(),
        Plane::FarField,
    )
    .unwrap();
    assert_eq!(cost(&out, &target, 10.0).unwrap(), cost(&perturbed, &target, 10.0).unwrap());
}

fn planted(n: usize) -> (ComplexField, TargetSpec, PhasePattern) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let pitch = 1e-4;
    let e0 = gaussian_pump(n, pitch, n as f64 * pitch / 5.0).unwrap();
    let disk = ConstantDisk::default_for(n);
    let star = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..2.0 * PI));
    let star = apply_constant_phase_disk(&star, disk).unwrap();
    let t = forward_model(&e0, &star).unwrap();
    let target = TargetSpec::new(t, Array2::from_elem((n, n), true), Array2::from_elem((n, n), false)).unwrap();
    let near = star.phi() + &Array2::from_shape_simple_fn((n, n), || rng.random_range(-0.3..0.3));
    (e0, target, apply_constant_phase_disk(&near, disk).unwrap())
}

#[test]
fn planted_solution_is_recovered() {
    let (e0, target, init) = planted(32);
    let opt = OptimizerConfig::default();
    let res = conjugate_gradient_minimize(&e0, &target, &init, &opt).unwrap();
    assert!(res.final_cost() < 1e-6 * 1e10, "{}", res.final_cost());
    for w in res.cost_history.windows(2) {
        assert!(w[1].1 <= w[0].1);
    }
    let g = cost_gradient(&res.phase, &e0, &target, 10.0).unwrap();
    let g0 = cost_gradient(&init, &e0, &target, 10.0).unwrap();
    let norm = |a: &Array2<f64>| a.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm(&g) < 1e-3 * norm(&g0));
}

#[test]
fn stationary_at_exact_match() {
    let (e0, target, _) = planted(16);
    let star = {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Array2::from_shape_simple_fn((16, 16), || rng.random_range(0.0..2.0 * PI));
        apply_constant_phase_disk(&s, ConstantDisk::default_for(16)).unwrap()
    };
    let g = cost_gradient(&star, &e0, &target, 10.0).unwrap();
    let (_, _, other) = random_instance(16, 1);
    let typical = cost_gradient(&other, &e0, &target, 10.0).unwrap();
    let max = |a: &Array2<f64>| a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(max(&g) <= 1e-8 * max(&typical));
}

#[test]
fn cost_prefactor_does_not_change_iterates() {
    // A target that cannot be met exactly keeps C far from the rounding floor.
    let n = 32;
    let e0 = gaussian_pump(n, 1e-4, n as f64 * 1e-4 / 5.0).unwrap();
    let target = patterns::ou_glyph(n, 1.0).unwrap();
    let init = apply_constant_phase_disk(&InitialGuess::Random { seed: 2 }.build(n), ConstantDisk::default_for(n)).unwrap();
    let run = |d: f64| {
        let opt = OptimizerConfig { d, max_iters: 40, ..OptimizerConfig::default() };
        conjugate_gradient_minimize(&e0, &target, &init, &opt).unwrap()
    };
    let (a, b) = (run(10.0), run(0.0));
    assert_eq!(a.cost_history.len(), b.cost_history.len());
    let c0 = b.cost_history[0].1;
    for ((ia, ca), (ib, cb)) in a.cost_history.iter().zip(&b.cost_history) {
        assert_eq!(ia, ib);
        assert!((ca / 1e10 - cb).abs() <= 1e-9 * c0);
    }
    let worst = a.phase.phi().iter().zip(b.phase.phi()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    // Same steps up to floating-point rounding of the 10^d products.
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn iterates_keep_the_disk() {
    let (e0, target, init) = planted(16);
    let disk = ConstantDisk { value: 1.1, ..*init.disk() };
    let init = apply_constant_phase_disk(init.phi(), disk).unwrap();
    let res = conjugate_gradient_minimize(&e0, &target, &init, &OptimizerConfig { max_iters: 10, ..OptimizerConfig::default() }).unwrap();
    for ((i, j), &v) in res.phase.phi().indexed_iter() {
        if disk.contains(i, j) {
            assert_eq!(v, 1.1);
        }
    }
}

#[test]
fn disk_rules() {
    let n = 16;
    let zero = Array2::zeros((n, n));
    let disk = ConstantDisk::default_for(n);
    assert_eq!(apply_constant_phase_disk(&zero, disk).unwrap().phi(), &zero);
    let big = ConstantDisk { radius: 8.0, ..disk };
    assert!(matches!(apply_constant_phase_disk(&zero, big), Err(Error::Contract(_))));
    let q = ConstantDisk { value: PI / 2.0, radius: 3.0, ..disk };
    let once = apply_constant_phase_disk(&Array2::from_elem((n, n), 0.2), q).unwrap();
    let twice = apply_constant_phase_disk(once.phi(), q).unwrap();
    assert_eq!(once, twice);
    assert_eq!(once.phi()[[8, 8]], PI / 2.0);
    assert_eq!(once.phi()[[8, 11]], PI / 2.0);
    assert_eq!(once.phi()[[8, 12]], 0.2);
}

#[test]
fn flat_phase_has_no_structure_to_compress() {
    let n = 16;
    let e0 = gaussian_pump(n, 1e-4, 3e-4).unwrap();
    let flat = apply_constant_phase_disk(&Array2::zeros((n, n)), ConstantDisk::default_for(n)).unwrap();
    let c = phase_compress(&flat, &e0, (0.85, 1.0)).unwrap();
    assert_eq!(c.factor, 1.0);
    assert!((c.dc_fraction - 1.0).abs() < 1e-12);
    assert!(c.note.is_some());
}

#[test]
fn random_phase_dc_is_one_over_samples() {
    let n = 128;
    let e0 = ComplexField::from_fn(n, 1.0, Plane::CellCenter, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut before = 0.0;
    let mut after = 0.0;
    let trials = 20;
    for _ in 0..trials {
        let phi = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..2.0 * PI));
        let p = apply_constant_phase_disk(&phi, no_disk()).unwrap();
        let c = phase_compress(&p, &e0, (0.85, 1.0)).unwrap();
        before += c.dc_fraction_before / trials as f64;
        after += c.dc_fraction / trials as f64;
    }
    let expect = 1.0 / (n * n) as f64;
    assert!((before / expect - 1.0).abs() < 0.5, "{before} vs {expect}");
    assert!(after <= before && after > 0.1 * expect);
}

#[test]
fn planted_compression_factor_is_found() {
    let n = 32;
    let e0 = ComplexField::from_fn(n, 1.0, Plane::CellCenter, |_, _| Complex64::new(1.0, 0.0)).unwrap();
    // A 0/π checkerboard has no zero order; stretching it by 1/0.9 makes s = 0.9 optimal.
    let psi = Array2::from_shape_fn((n, n), |(i, j)| if (i + j) % 2 == 0 { 0.0 } else { PI / 0.9 });
    let disk = ConstantDisk { center: (0, 0), radius: 0.0, value: 0.0 };
    let c = phase_compress(&apply_constant_phase_disk(&psi, disk).unwrap(), &e0, (0.85, 1.0)).unwrap();
    let step = 0.15 / (COMPRESSION_SAMPLES - 1) as f64;
    assert!((c.factor - 0.9).abs() <= step, "{}", c.factor);
    assert!(c.dc_fraction < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn disk_value_rotates_prediction(seed in 0u64..500) {
        use crate::optics::{predict_cross_correlation, structured_pump, OpticalConfig, PixelRoi};
        let n = 32;
        let cfg = OpticalConfig::desk(n);
        let e0 = gaussian_pump(n, cfg.slm_pixel, cfg.pump_waist_radius).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Array2::from_shape_simple_fn((n, n), || rng.random_range(0.0..2.0 * PI));
        let base = apply_constant_phase_disk(&phi, ConstantDisk::default_for(n)).unwrap();
        let roi = PixelRoi::square(6);
        let phi_at = |p: &PhasePattern| crate::optics::phi_at_pixels(&structured_pump(&e0, p.phi()).unwrap(), &cfg, roi).unwrap();
        let m0 = phi_at(&base);
        for dphi in [0.0, PI / 4.0, PI / 2.0] {
            let moved = base.with_disk_value(dphi).unwrap();
            let pump = structured_pump(&e0, moved.phi()).unwrap();
            let m = predict_cross_correlation(&pump, dphi, &cfg, roi).unwrap();
            let phi_moved = phi_at(&moved);
            let scale = phi_moved.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for (v, z) in m.values().iter().zip(&phi_moved) {
                let expect = (2.0 * dphi).cos() * z.re + (2.0 * dphi).sin() * z.im;
                prop_assert!((v - expect).abs() <= 1e-12 * scale);
            }
            // Only the disk samples changed, which bounds the change of Φ pointwise.
            let bound: f64 = e0.data().indexed_iter().filter(|((i, j), _)| base.disk().contains(*i, *j)).map(|(_, z)| 2.0 * z.norm_sqr()).sum();
            for (a, b) in m0.iter().zip(&phi_moved) {
                prop_assert!((a - b).norm() <= bound * (1.0 + 1e-12));
            }
        }
    }
}
