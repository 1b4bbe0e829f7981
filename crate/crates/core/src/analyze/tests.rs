use super::*;
use crate::cgh::TargetSpec;
use crate::field::{ComplexField, Plane};
use crate::synth::{BeamLayout, DetectorModel, Fluctuations, Frame, LocalOscillator, QuadratureSource, SchmidtModel};
use nalgebra::DMatrix;
use ndarray::s;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn cfg(patch: usize, shift: usize) -> AnalysisConfig {
    AnalysisConfig { patch: [patch, patch], max_shift: [shift, shift], exclusion_radius: 1, ..Default::default() }
}

fn noise(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

fn blank_pair(rows: usize, cols: usize) -> FramePair {
    let det = DetectorModel::ideal(rows, cols);
    let lo = LocalOscillator::centered(&det);
    let layout = BeamLayout::around(&lo, 8, 8).unwrap();
    let f = Frame { counts: Array2::from_elem((rows, cols), 1000u16) };
    FramePair { index: 0, seed: 0, timestamps_s: [0.0, 6e-5], layout, frames: [f.clone(), f], clamped: 0 }
}

#[test]
fn identical_frames_difference_to_zero() {
    let (p, c) = frame_difference(&blank_pair(20, 40)).unwrap();
    assert!(p.data.iter().chain(c.data.iter()).all(|&v| v == 0.0));
}

#[test]
fn one_count_shows_up_at_its_pixel() {
    let mut pair = blank_pair(20, 40);
    let w = pair.layout.probe;
    pair.frames[0].counts[[w.row0 + 3, w.col0 + 5]] += 1;
    let (p, c) = frame_difference(&pair).unwrap();
    assert_eq!(p.data[[3, 5]], 1.0);
    assert_eq!(p.data.iter().filter(|&&v| v != 0.0).count(), 1);
    assert!(c.data.iter().all(|&v| v == 0.0));
}

#[test]
fn common_mode_drift_cancels() {
    let det = DetectorModel::ideal(40, 80);
    let lo = LocalOscillator { waist_px: 1e3, peak_counts: 2000.0, ..LocalOscillator::centered(&det) };
    let layout = BeamLayout::around(&lo, 16, 16).unwrap();
    let pair = crate::synth::render_frame_pair(&lo, Fluctuations::Coherent, layout, &det, 7).unwrap();
    let mut drifted = pair.clone();
    drifted.frames.iter_mut().for_each(|f| f.counts.mapv_inplace(|v| v + 100));
    assert_eq!(frame_difference(&pair).unwrap(), frame_difference(&drifted).unwrap());
}

#[test]
fn transform_correlation_matches_the_sliding_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = AnalysisConfig { patch: [8, 10], max_shift: [5, 6], exclusion_radius: 1, ..Default::default() };
    let e = CorrelationEngine::new((20, 24), &c).unwrap();
    let (a, b) = (noise(&mut rng, 20, 24), noise(&mut rng, 20, 24));
    let fast = e.correlate(a.view(), b.view()).unwrap();
    let slow = e.correlate_direct(a.view(), b.view()).unwrap();
    let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(fast.iter().zip(&slow).all(|(x, y)| (x - y).abs() < 1e-10 * scale));
}

#[test]
fn displacement_beyond_the_overlap_is_refused() {
    assert!(matches!(CorrelationEngine::new((64, 64), &cfg(40, 13)), Err(Error::Bounds(_))));
    assert!(CorrelationEngine::new((64, 64), &cfg(40, 12)).is_ok());
}

#[test]
fn matched_filter_peaks_at_the_planted_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = 48;
    let big = noise(&mut rng, 3 * w, 3 * w);
    let p = big.slice(s![w..2 * w, w..2 * w]).to_owned();
    let (dr, dc) = (3isize, -5isize);
    // c(i) = rotate180(p)(i − Δ), reading p beyond the window where needed.
    let c = Array2::from_shape_fn((w, w), |(i, j)| {
        let (r, q) = (w as isize - 1 - (i as isize - dr), w as isize - 1 - (j as isize - dc));
        big[[(r + w as isize) as usize, (q + w as isize) as usize]]
    });
    let e = CorrelationEngine::new((w, w), &cfg(24, 10)).unwrap();
    let m = cross_correlation_map(&e, p.view(), c.view()).unwrap();
    let (arg, _) = m.values().indexed_iter().fold(((0, 0), f64::MIN), |b, (ix, &v)| if v > b.1 { (ix, v) } else { b });
    assert_eq!((arg.0 as isize - 10, arg.1 as isize - 10), (dr, dc));
}

#[test]
fn independent_noise_stays_within_four_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let e = CorrelationEngine::new((64, 64), &cfg(32, 16)).unwrap();
    let (a, b) = (noise(&mut rng, 64, 64), noise(&mut rng, 64, 64));
    let m = cross_correlation_map(&e, a.view(), b.view()).unwrap();
    let sigma = (32.0 * 32.0f64).sqrt();
    assert!(m.values().iter().all(|v| v.abs() < 4.0 * sigma));
}

#[test]
fn auto_correlation_of_white_noise_loses_its_center_peak() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let e = CorrelationEngine::new((64, 64), &cfg(32, 16)).unwrap();
    let a = noise(&mut rng, 64, 64);
    let raw = e.correlate(a.view(), a.view()).unwrap();
    assert!(raw[[16, 16]] > 900.0);
    let m = auto_correlation_map(&e, a.view(), 2).unwrap();
    let sigma = 32.0;
    assert!(m.values().iter().all(|v| v.abs() < 4.0 * sigma));
}

#[test]
fn center_fill_reproduces_a_plane() {
    let mut m = Array2::from_shape_fn((11, 11), |(i, j)| 2.0 + 0.5 * i as f64 - 0.25 * j as f64);
    let want = m.clone();
    m[[5, 5]] = 1e6;
    m[[4, 5]] = -3.0;
    fill_center(&mut m, 2).unwrap();
    assert!(m.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(matches!(fill_center(&mut m, 5), Err(Error::Bounds(_))));
}

#[test]
fn oversized_exclusion_is_a_config_error() {
    let c = AnalysisConfig { exclusion_radius: 32, ..Default::default() };
    assert!(matches!(c.validate(), Err(Error::Config(_))));
}

#[test]
fn averaging_is_exact_for_repeats() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = CorrelationMap::new(noise(&mut rng, 5, 7)).unwrap();
    let (one, n) = average_maps([&m]).unwrap();
    assert_eq!((one.values(), n), (m.values(), 1));
    let (many, n) = average_maps(std::iter::repeat_n(&m, 6)).unwrap();
    assert_eq!(n, 6);
    assert!(many.values().iter().zip(m.values()).all(|(a, b)| (a - b).abs() < 1e-14));
}

#[test]
fn background_rms_falls_as_inverse_root_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let e = CorrelationEngine::new((32, 32), &cfg(16, 8)).unwrap();
    let mut avg = MapAverage::new(e.map_dim());
    let mut rms = Vec::new();
    for target in [100, 400, 1600] {
        while avg.count() < target {
            let (a, b) = (noise(&mut rng, 32, 32), noise(&mut rng, 32, 32));
            avg.push(&e.correlate(a.view(), b.view()).unwrap()).unwrap();
        }
        rms.push(avg.mean().unwrap().energy().sqrt());
    }
    for w in rms.windows(2) {
        let r = w[0] / w[1];
        assert!((r - 2.0).abs() < 0.4, "{rms:?}");
    }
}

#[test]
fn normalization_is_scale_free_and_idempotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = CorrelationMap::new(noise(&mut rng, 9, 9)).unwrap();
    let n1 = normalize_map(&m).unwrap();
    let n10 = normalize_map(&CorrelationMap::new(m.values() * 10.0).unwrap()).unwrap();
    assert!(n1.values().iter().zip(n10.values()).all(|(a, b)| (a - b).abs() < 1e-14));
    let again = normalize_map(&n1).unwrap();
    assert!(n1.values().iter().zip(again.values()).all(|(a, b)| (a - b).abs() < 1e-14));
    assert!(matches!(normalize_map(&CorrelationMap::new(Array2::zeros((3, 3))).unwrap()), Err(Error::Degenerate(_))));
    assert_eq!(apply_normalization(&m, Normalization::Absolute).unwrap(), m);
}

fn small_target() -> TargetSpec {
    let n = 32;
    let field = ComplexField::from_fn(n, 1.0, Plane::FarField, |x, y| Complex64::new((x - 2.0).sin() + 0.3 * y, 0.0)).unwrap();
    let signal = Array2::from_shape_fn((n, n), |(i, j)| (i as isize - 16).abs() < 6 && (j as isize - 16).abs() < 6);
    let noise = signal.mapv(|s| !s);
    TargetSpec::new(field, signal, noise).unwrap()
}

#[test]
fn fidelity_of_the_target_itself_is_one() {
    let t = small_target();
    let (re, _) = render_target(&t, (21, 21));
    let r = fidelity(&CorrelationMap::new(re.clone()).unwrap(), &t).unwrap();
    assert!((r.coefficient - 1.0).abs() < 1e-12);
    assert!(r.peak_to_background.is_infinite());
    let neg = fidelity(&CorrelationMap::new(-re).unwrap(), &t).unwrap();
    assert!((neg.coefficient + 1.0).abs() < 1e-12);
    let flat = CorrelationMap::new(Array2::from_elem((21, 21), 1.0)).unwrap();
    assert!(matches!(fidelity(&flat, &t), Err(Error::Degenerate(_))));
    let mut text = Vec::new();
    r.write(&mut text).unwrap();
    assert!(String::from_utf8(text).unwrap().starts_with("coefficient = 1.0"));
}

#[test]
fn smoothing_a_delta_gives_the_requested_width() {
    let mut m = Array2::zeros((41, 41));
    m[[20, 20]] = 1.0;
    let sm = smooth_gaussian(&m, 6.0);
    let row: Vec<f64> = sm.row(20).to_vec();
    let half = row[20] / 2.0;
    // Linear interpolation of the half-maximum crossing.
    let k = (20..40).find(|&k| row[k + 1] < half).unwrap();
    let x = k as f64 + (row[k] - half) / (row[k] - row[k + 1]);
    assert!((2.0 * (x - 20.0) - 6.0).abs() < 0.1, "{}", 2.0 * (x - 20.0));
    let flat = smooth_gaussian(&Array2::from_elem((9, 9), 3.0), 3.0);
    assert!(flat.iter().all(|v| (v - 3.0).abs() < 1e-12));
}

#[test]
fn parallel_and_sequential_decoding_agree() {
    let det = DetectorModel::default();
    let lo = LocalOscillator::centered(&det);
    let layout = BeamLayout::around(&lo, 32, 32).unwrap();
    let src = crate::synth::Vacuum { rows: 32, cols: 32 };
    let acq = Acquisition::new(&lo, Fluctuations::Quadrature(&src), layout, &det, 10, 9).unwrap();
    let dec = Decoder::new((32, 32), &cfg(16, 8)).unwrap();
    let a = dec.decode_acquisition(&acq).unwrap();
    let b = dec.decode_stream(acq.iter().map(Ok)).unwrap();
    assert_eq!(a.pairs, 9);
    assert_eq!(a.cross.values(), b.cross.values());
    assert_eq!(a.auto_probe.values(), b.auto_probe.values());
    let limited = Decoder::new((32, 32), &AnalysisConfig { n_pairs: Some(4), ..cfg(16, 8) }).unwrap();
    assert_eq!(limited.decode_acquisition(&acq).unwrap().pairs, 4);
}

#[test]
fn single_mode_auto_correlation_follows_the_mode_overlap() {
    let w = 32;
    let u: Vec<f64> = (0..w * w)
        .map(|k| {
            let (r, c) = ((k / w) as f64 - 15.5, (k % w) as f64 - 15.5);
            (-(r * r) / 40.0 - (c - 3.0).powi(2) / 15.0).exp()
        })
        .collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let um = DMatrix::from_iterator(w * w, 1, u.iter().map(|v| Complex64::new(v / norm, 0.0)));
    let model = SchmidtModel::new(w, w, um.clone(), um, vec![1.0], vec![1.5]).unwrap();
    let e = CorrelationEngine::new((w, w), &cfg(16, 8)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut avg = MapAverage::new(e.map_dim());
    for _ in 0..1500 {
        let (x, _) = model.sample(&mut rng, 0.0);
        avg.push(&auto_correlation_map(&e, x.view(), 1).unwrap().into_values()).unwrap();
    }
    let ua = Array2::from_shape_vec((w, w), u).unwrap();
    let mut oracle = e.correlate_direct(ua.view(), ua.view()).unwrap();
    fill_center(&mut oracle, 1).unwrap();
    let r = map_correlation(avg.mean().unwrap().values(), &oracle).unwrap();
    assert!(r > 0.95, "{r}");
}
