//! Reference implementations and fixtures shared by the integration tests.
//! The oracles are written the slow, obvious way on purpose and share no
//! code with the library beyond plain data types.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tafall::balance::AnthropometricTable;
use tafall::frame::{TemperatureFrame, ThermalImage};
use tafall::geometry::{Vec2, Vec3};
use tafall::grid::Grid;
use tafall::motion::MhiParams;
use tafall::pose::{joint, WorldPose};
use tafall::scenario::{
    bend_posture, crouch_posture, sit_posture, stand_posture, standing_pose, BodyShape, Placement, Scenario,
};
use tafall::thermal::{
    apply_motion_blur, part_motions, render_frame, render_sequence, BlurParams, BodyThermalProfile, CameraModel, SimParams,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Joints scattered in a 2 m box, about a third of them near the floor.
pub fn scattered_pose(rng: &mut ChaCha8Rng) -> WorldPose {
    let joints = (0..17)
        .map(|_| {
            let z = if rng.random::<f64>() < 0.35 { uniform(rng, 0.0, 0.08) } else { uniform(rng, 0.0, 1.8) };
            Vec3::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0), z)
        })
        .collect();
    WorldPose::new(joints, 0.0)
}

/// A plausible standing, crouching, bending or sitting body with jittered
/// upper joints, anywhere in a 10 m room at any heading.
pub fn body_pose(rng: &mut ChaCha8Rng) -> WorldPose {
    let shape = BodyShape { scale: uniform(rng, 0.85, 1.15) };
    let posture = match rng.random_range(0..4u32) {
        0 => stand_posture(&shape),
        1 => crouch_posture(&shape),
        2 => bend_posture(&shape),
        _ => sit_posture(&shape),
    };
    let place = Placement::new(
        Vec2::new(uniform(rng, -5.0, 5.0), uniform(rng, -5.0, 5.0)),
        uniform(rng, 0.0, std::f64::consts::TAU),
    );
    let mut pose = place.pose(&posture, 0.0);
    for (i, j) in pose.joints.iter_mut().enumerate() {
        if !matches!(i, joint::L_ANKLE | joint::R_ANKLE | joint::L_FOOT | joint::R_FOOT) {
            *j += Vec3::new(uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05));
        }
    }
    pose
}

/// Center of mass from per-joint effective weights `Σ_s m_s α_{s,j}`.
pub fn com_oracle(pose: &WorldPose, table: &AnthropometricTable) -> Vec3 {
    let mut w = vec![0.0; pose.joints.len()];
    for s in table.segments() {
        for (&j, &a) in s.joint_indices.iter().zip(&s.alphas) {
            w[j] += s.mass_fraction * a;
        }
    }
    let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
    for (p, wj) in pose.joints.iter().zip(&w) {
        x += wj * p.x;
        y += wj * p.y;
        z += wj * p.z;
    }
    Vec3::new(x, y, z)
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Hull vertices by brute force: a point is a vertex when some pair with
/// it forms an edge with every other point strictly on one side, and it is
/// not inside the span of another edge. Returned sorted by (x, y).
pub fn hull_oracle(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = Vec::new();
    for p in points {
        if !pts.iter().any(|q| q.x == p.x && q.y == p.y) {
            pts.push(*p);
        }
    }
    let mut out: Vec<Vec2> = Vec::new();
    if pts.len() <= 2 {
        out = pts.clone();
    } else {
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (pts[i], pts[j]);
                let mut left = 0;
                let mut right = 0;
                let mut beyond = false;
                for (k, &c) in pts.iter().enumerate() {
                    if k == i || k == j {
                        continue;
                    }
                    let s = cross(a, b, c);
                    if s > 0.0 {
                        left += 1;
                    } else if s < 0.0 {
                        right += 1;
                    } else {
                        // collinear: a and b must be the extreme points of the line
                        let t = (c.x - a.x) * (b.x - a.x) + (c.y - a.y) * (b.y - a.y);
                        let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
                        if t < 0.0 || t > len2 {
                            beyond = true;
                        }
                    }
                }
                if !beyond && (left == 0 || right == 0) {
                    for v in [a, b] {
                        if !out.iter().any(|q| q.x == v.x && q.y == v.y) {
                            out.push(v);
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            out = pts.clone();
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    out
}

/// Even-odd ray casting; points on the boundary may go either way.
pub fn point_in_polygon(poly: &[Vec2], p: Vec2) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance to the closest of `samples` points spread evenly along the
/// polygon boundary by arc length.
pub fn sampled_boundary_distance(poly: &[Vec2], p: Vec2, samples: usize) -> f64 {
    let n = poly.len();
    let edges: Vec<(Vec2, Vec2, f64)> = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            (a, b, ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt())
        })
        .collect();
    let perimeter: f64 = edges.iter().map(|e| e.2).sum();
    let step = perimeter / samples as f64;
    let mut best = f64::INFINITY;
    let mut offset = 0.0;
    for (a, b, len) in edges {
        let mut s = offset;
        while s < len {
            let t = s / len;
            let q = Vec2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            best = best.min(((q.x - p.x).powi(2) + (q.y - p.y).powi(2)).sqrt());
            s += step;
        }
        offset = s - len;
    }
    best
}

/// Motion history by per-pixel scalar recursion: `M_0 = 0`, `M_1 = γ M_0`,
/// `M_t = max(γ M_{t-1}, m_{t-1})` with `m_t` the soft mask of frames
/// `t` and `t - 1`.
pub fn mhi_oracle(frames: &[TemperatureFrame], p: &MhiParams) -> Vec<Vec<f64>> {
    let n = frames[0].grid.data().len();
    let norm = |v: i16| (v as f64 / 100.0 + 40.0) / 160.0;
    let mut out = Vec::with_capacity(frames.len());
    let mut hist = vec![0.0; n];
    let mut mask: Option<Vec<f64>> = None;
    for (t, f) in frames.iter().enumerate() {
        if t > 0 {
            for px in 0..n {
                let decayed = p.gamma * hist[px];
                hist[px] = match &mask {
                    Some(m) if m[px] > decayed => m[px],
                    _ => decayed,
                };
            }
        }
        out.push(hist.clone());
        mask = (t > 0).then(|| {
            (0..n)
                .map(|px| {
                    let d = (norm(f.grid.data()[px]) - norm(frames[t - 1].grid.data()[px])).abs();
                    1.0 / (1.0 + (-(p.k * (d - p.theta))).exp())
                })
                .collect()
        });
    }
    out
}

/// Plain softmax of `scores + bias` per row, no max subtraction.
pub fn naive_attention(scores: &[Vec<f64>], bias: &[Vec<f64>]) -> Vec<Vec<f64>> {
    scores
        .iter()
        .zip(bias)
        .map(|(s, b)| {
            let e: Vec<f64> = s.iter().zip(b).map(|(s, b)| (s + b).exp()).collect();
            let z: f64 = e.iter().sum();
            e.iter().map(|v| v / z).collect()
        })
        .collect()
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// InfoNCE straight from its definition.
pub fn naive_infonce(z1: &[f64], z2: &[f64], negs: &[Vec<f64>], tau: f64) -> f64 {
    let pos = (cos(z1, z2) / tau).exp();
    let all = pos + negs.iter().map(|n| (cos(z1, n) / tau).exp()).sum::<f64>();
    -(pos / all).ln()
}

/// Mean of `h(x) = exp(-x/a)/a` restricted to `[0, truncation a]`, by
/// composite Simpson quadrature of `x h(x)` and `h(x)`.
pub fn psf_mean_quadrature(a: f64, truncation: f64) -> f64 {
    let c = truncation * a;
    let n = 20_000;
    let h = c / n as f64;
    let f = |x: f64| (-x / a).exp() / a;
    let (mut m0, mut m1) = (0.0, 0.0);
    for i in 0..=n {
        let x = i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        m0 += w * f(x);
        m1 += w * x * f(x);
    }
    m1 / m0
}

pub fn noisy_params(sigma: f64, seed: u64) -> SimParams {
    SimParams { seed, blur: BlurParams { sigma_noise: sigma, ..BlurParams::default() }, ..SimParams::default() }
}

pub fn render(s: &Scenario, sigma: f64, seed: u64) -> Vec<TemperatureFrame> {
    render_sequence(s.poses.frames(), &s.camera, &BodyThermalProfile::default_profile(), &noisy_params(sigma, seed))
        .expect("scenario renders")
}

/// A short random script of everyday movements, ending in a fall about
/// half the time. Returns the poses and the truth labels.
pub fn random_script(seed: u64) -> (tafall::pose::PoseSequence<WorldPose>, tafall::detector::LabeledScenario) {
    use tafall::scenario::{FallKind, ScriptBuilder};
    let mut r = rng(seed);
    let shape = BodyShape { scale: uniform(&mut r, 0.9, 1.1) };
    let start = Placement::new(Vec2::new(uniform(&mut r, -1.0, 1.0), uniform(&mut r, -1.0, 1.0)), uniform(&mut r, 0.0, std::f64::consts::TAU));
    let mut b = ScriptBuilder::new(shape, 20.0, start);
    b.hold(uniform(&mut r, 0.5, 2.5));
    for _ in 0..r.random_range(1..5u32) {
        match r.random_range(0..5u32) {
            0 => {
                b.hold(uniform(&mut r, 0.5, 3.0));
            }
            1 => {
                b.walk_to(Vec2::new(uniform(&mut r, -1.5, 1.5), uniform(&mut r, -1.5, 1.5)));
            }
            2 => {
                b.move_to("sit_down", sit_posture(&shape), uniform(&mut r, 0.6, 1.2));
                b.hold(uniform(&mut r, 0.5, 2.0));
                b.move_to("stand_up", stand_posture(&shape), uniform(&mut r, 0.8, 1.2));
            }
            3 => {
                b.move_to("bend", bend_posture(&shape), uniform(&mut r, 0.6, 1.0));
                b.move_to("straighten", stand_posture(&shape), uniform(&mut r, 0.6, 1.0));
            }
            _ => {
                b.move_to("crouch", crouch_posture(&shape), uniform(&mut r, 0.6, 1.0));
                b.move_to("rise", stand_posture(&shape), uniform(&mut r, 0.6, 1.0));
            }
        }
    }
    if r.random::<bool>() {
        b.fall(FallKind::ALL[r.random_range(0..FallKind::ALL.len())]);
        b.hold(uniform(&mut r, 2.5, 4.0));
    }
    let (poses, truth, _, _) = b.finish();
    (poses, truth)
}

/// Presence confidence in runs of 5 to 60 frames, confident in about two
/// runs out of three.
pub fn random_presence(seed: u64, n: usize) -> Vec<Option<tafall::motion::PresenceDetection>> {
    use tafall::motion::{BoundingBox, PresenceDetection};
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = r.random_range(5..60usize);
        let present = r.random::<f64>() < 0.65;
        for _ in 0..len {
            let confidence = if present { uniform(&mut r, 0.5, 1.0) } else { uniform(&mut r, 0.0, 0.5) };
            out.push((confidence > 0.05).then_some(PresenceDetection {
                bbox: BoundingBox { x0: 0, y0: 0, x1: 1, y1: 1 },
                confidence,
                center: (0.5, 0.5),
                area: 1,
            }));
        }
    }
    out.truncate(n);
    out
}

/// Frames of random temperatures where about 30% of pixels jump each step.
pub fn random_stream(seed: u64, len: usize, w: usize, h: usize) -> Vec<TemperatureFrame> {
    let mut r = rng(seed);
    let mut cur: Vec<i16> = (0..w * h).map(|_| r.random_range(1500..3700)).collect();
    (0..len)
        .map(|t| {
            for v in cur.iter_mut() {
                if r.random::<f64>() < 0.3 {
                    *v = (*v + r.random_range(-900..900)).clamp(-4000, 12000);
                }
            }
            TemperatureFrame { grid: Grid::from_vec(w, h, cur.clone()).unwrap(), timestamp_us: t as u64 * 50_000, seq_no: t as u32 }
        })
        .collect()
}

pub fn matrix(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..n).map(|_| uniform(r, -scale, scale)).collect()).collect()
}

pub fn camera() -> CameraModel {
    CameraModel::reference_sensor(Vec3::new(0.0, -3.0, 1.2), Vec3::new(0.0, 0.0, 0.9)).unwrap()
}

/// The standing body at `t = 0.05` and the same body `shift` meters to its
/// left one frame earlier.
pub fn pose_pair(shift: f64) -> (WorldPose, WorldPose) {
    let cur = standing_pose(&BodyShape::default(), 0.05);
    let prev = WorldPose::new(cur.map_joints(|p| p - Vec3::new(shift, 0.0, 0.0)).joints, 0.0);
    (prev, cur)
}

pub fn blurred(shift: f64) -> (ThermalImage, ThermalImage, f64) {
    let (cam, profile) = (camera(), BodyThermalProfile::default_profile());
    let (prev, cur) = pose_pair(shift);
    let scene = render_frame(&cur, &profile, &cam, &[]);
    let motions = part_motions(&prev, &cur, &cam, &profile, &BlurParams::default()).unwrap();
    (apply_motion_blur(&scene, &motions), scene.image, profile.ambient)
}

/// Horizontal extent in pixels of everything warmer than ambient.
pub fn support_width(img: &ThermalImage, ambient: f64) -> usize {
    let (w, h) = img.dims();
    let cols: Vec<usize> = (0..w).filter(|&x| (0..h).any(|y| img.get(x, y) - ambient > 1e-9)).collect();
    cols.last().map_or(0, |l| l - cols[0] + 1)
}
