mod common;

use common::{body_pose, com_oracle, hull_oracle, point_in_polygon, rng, sampled_boundary_distance, scattered_pose, uniform};
use proptest::prelude::*;
use tafall::balance::{compute_bos, compute_com, signed_margin, AnthropometricTable, SmobSample};
use tafall::geometry::{Mat3, Vec2, Vec3};
use tafall::pose::{SkeletonTopology, WorldPose};

fn all_joints() -> Vec<usize> {
    (0..17).collect()
}

fn smob(pose: &WorldPose, eps: f64) -> Option<f64> {
    let table = AnthropometricTable::default_table();
    SmobSample::from_pose(pose, &table, &SkeletonTopology::default_17().contact_joints(), eps).unwrap().smob
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn horizontal_translation_shifts_com_and_keeps_smob(seed in any::<u64>(), dx in -20.0..20.0f64, dy in -20.0..20.0f64) {
        let pose = body_pose(&mut rng(seed));
        let moved = pose.map_joints(|p| p + Vec3::new(dx, dy, 0.0));
        let table = AnthropometricTable::default_table();
        let (c0, c1) = (compute_com(&pose, &table).unwrap(), compute_com(&moved, &table).unwrap());
        prop_assert!((c1.x - c0.x - dx).abs() < 1e-9 && (c1.y - c0.y - dy).abs() < 1e-9 && (c1.z - c0.z).abs() < 1e-12);
        let (a, b) = (smob(&pose, 0.05).unwrap(), smob(&moved, 0.05).unwrap());
        prop_assert!(close(a, b), "{a} vs {b}");
    }

    #[test]
    fn yaw_rotation_keeps_smob(seed in any::<u64>(), yaw in -10.0..10.0f64) {
        let pose = body_pose(&mut rng(seed));
        let r = Mat3::yaw(yaw);
        let turned = pose.map_joints(|p| r.apply(p));
        let (a, b) = (smob(&pose, 0.05).unwrap(), smob(&turned, 0.05).unwrap());
        prop_assert!(close(a, b), "{a} vs {b}");
    }

    #[test]
    fn uniform_scaling_scales_smob(seed in any::<u64>(), s in 0.1..10.0f64) {
        let pose = body_pose(&mut rng(seed));
        let scaled = pose.map_joints(|p| p * s);
        // the contact threshold is a length too
        let (a, b) = (smob(&pose, 0.05).unwrap(), smob(&scaled, 0.05 * s).unwrap());
        prop_assert!(close(a * s, b), "{} vs {b}", a * s);
    }

    #[test]
    fn hull_holds_every_contact_and_is_convex(seed in any::<u64>()) {
        let pose = scattered_pose(&mut rng(seed));
        let contacts: Vec<Vec2> = pose.joints.iter().filter(|p| p.z <= 0.05).map(|p| p.horizontal()).collect();
        let Some(bos) = compute_bos(&pose, &all_joints(), 0.05) else {
            prop_assert!(contacts.is_empty());
            return Ok(());
        };
        for c in &contacts {
            prop_assert!(bos.contains(*c) || bos.boundary_distance(*c) < 1e-12);
        }
        let v = bos.vertices();
        if v.len() >= 3 {
            for i in 0..v.len() {
                let (a, b, c) = (v[i], v[(i + 1) % v.len()], v[(i + 2) % v.len()]);
                prop_assert!((b - a).cross(c - b) > 0.0);
            }
        }
    }

    #[test]
    fn margin_is_positive_exactly_inside(seed in any::<u64>(), px in -1.2..1.2f64, py in -1.2..1.2f64) {
        let pose = scattered_pose(&mut rng(seed));
        let Some(bos) = compute_bos(&pose, &all_joints(), 0.05) else { return Ok(()) };
        let p = Vec2::new(px, py);
        let m = signed_margin(p, &bos);
        if bos.vertices().len() >= 3 && bos.boundary_distance(p) > 1e-9 {
            prop_assert_eq!(m > 0.0, point_in_polygon(bos.vertices(), p));
        } else if bos.vertices().len() < 3 {
            prop_assert!(m <= 0.0);
        }
    }
}

#[test]
fn com_bos_and_margin_agree_with_brute_force() {
    let table = AnthropometricTable::default_table();
    let mut r = rng(17);
    let mut checked = 0;
    for _ in 0..300 {
        let pose = scattered_pose(&mut r);
        let (c, o) = (compute_com(&pose, &table).unwrap(), com_oracle(&pose, &table));
        assert!((c.x - o.x).abs() < 1e-9 && (c.y - o.y).abs() < 1e-9 && (c.z - o.z).abs() < 1e-9);
        let contacts: Vec<Vec2> = pose.joints.iter().filter(|p| p.z <= 0.05).map(|p| p.horizontal()).collect();
        let Some(bos) = compute_bos(&pose, &all_joints(), 0.05) else { continue };
        let mut got = bos.vertices().to_vec();
        got.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        assert_eq!(got, hull_oracle(&contacts));
        if got.len() >= 3 {
            let p = Vec2::new(uniform(&mut r, -1.2, 1.2), uniform(&mut r, -1.2, 1.2));
            let d = sampled_boundary_distance(bos.vertices(), p, 100_000);
            let expected = if point_in_polygon(bos.vertices(), p) { d } else { -d };
            assert!((signed_margin(p, &bos) - expected).abs() < 1e-4);
            checked += 1;
        }
    }
    assert!(checked > 50);
}
