mod common;

use common::{blurred, noisy_params, psf_mean_quadrature, rng, support_width, uniform};
use proptest::prelude::*;
use tafall::frame::ThermalImage;
use tafall::geometry::Vec3;
use tafall::scenario::scenario_by_name;
use tafall::thermal::{psf_kernel, render_sequence, simulate_sequence, BodyThermalProfile, CameraModel};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernels_are_normalized(v in 0.0..6.0f64, r in 1.0..80.0f64, tau in 0.01..0.5f64, trunc in 1.0..10.0f64) {
        let k = psf_kernel(v, r, tau, trunc).unwrap();
        prop_assert!((k.taps().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(k.taps().iter().all(|w| *w >= 0.0));
        if v > 0.0 {
            prop_assert!((k.mean() - psf_mean_quadrature(v * r * tau, trunc)).abs() < 0.1);
        }
    }
}

#[test]
fn zero_speed_is_the_identity_kernel() {
    assert!(psf_kernel(0.0, 20.0, 0.1, 6.0).unwrap().is_identity());
}

#[test]
fn blur_keeps_body_heat() {
    for shift in [0.02, 0.05, 0.1, 0.2] {
        let (out, sharp, ambient) = blurred(shift);
        let excess = |img: &ThermalImage| img.data().iter().map(|t| t - ambient).sum::<f64>();
        let (a, b) = (excess(&sharp), excess(&out));
        assert!((a - b).abs() <= 0.01 * a, "shift {shift}: {a} vs {b}");
    }
}

#[test]
fn blur_support_grows_with_speed() {
    let widths: Vec<usize> = (0..10).map(|k| support_width(&blurred(0.015 * k as f64).0, 22.0)).collect();
    assert!(widths.windows(2).all(|w| w[0] <= w[1]), "{widths:?}");
    assert!(widths[9] > widths[0], "{widths:?}");
}

#[test]
fn image_poses_are_the_projected_script() {
    let s = scenario_by_name("lateral").unwrap();
    let sim = simulate_sequence(&s.poses, &s.camera, &BodyThermalProfile::default_profile(), &noisy_params(0.0, 1)).unwrap();
    for (p, q) in s.poses.frames().iter().zip(sim.truth.poses_25d.frames()) {
        assert_eq!(&s.camera.project_pose(p), q);
    }
    assert_eq!(sim.frames.len(), s.poses.len());
}

#[test]
fn rendering_is_deterministic_per_seed() {
    let s = scenario_by_name("slip").unwrap();
    let profile = BodyThermalProfile::default_profile();
    let serial = render_sequence(s.poses.frames(), &s.camera, &profile, &tafall::thermal::SimParams { threads: Some(1), ..noisy_params(0.3, 5) }).unwrap();
    let parallel = render_sequence(s.poses.frames(), &s.camera, &profile, &tafall::thermal::SimParams { threads: Some(7), ..noisy_params(0.3, 5) }).unwrap();
    assert_eq!(serial, parallel);
    let other = render_sequence(s.poses.frames(), &s.camera, &profile, &noisy_params(0.3, 6)).unwrap();
    assert_ne!(serial, other);
    assert!(serial.iter().enumerate().all(|(i, f)| f.seq_no == i as u32));
}

#[test]
fn noise_has_the_configured_spread() {
    let s = scenario_by_name("crouch").unwrap();
    let profile = BodyThermalProfile::default_profile();
    let poses = &s.poses.frames()[..1];
    let clean = render_sequence(poses, &s.camera, &profile, &noisy_params(0.0, 0)).unwrap();
    let noisy = render_sequence(poses, &s.camera, &profile, &noisy_params(0.3, 0)).unwrap();
    let d: Vec<f64> = clean[0].grid.data().iter().zip(noisy[0].grid.data()).map(|(a, b)| (b - a) as f64 / 100.0).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    assert!(mean.abs() < 0.03 && (sd - 0.3).abs() < 0.03, "mean {mean} sd {sd}");
}

#[test]
fn random_cameras_project_in_front() {
    let mut r = rng(4);
    for _ in 0..50 {
        let cam = CameraModel::reference_sensor(
            Vec3::new(uniform(&mut r, -4.0, 4.0), uniform(&mut r, -4.0, -2.0), uniform(&mut r, 1.0, 2.5)),
            Vec3::new(0.0, 0.0, 0.8),
        )
        .unwrap();
        let ip = cam.project(Vec3::new(0.0, 0.0, 0.8)).unwrap();
        assert!((ip.u - 0.5).abs() < 1e-9 && (ip.v - 0.5).abs() < 1e-9);
    }
}
