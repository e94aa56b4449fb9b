//! Body template: four scatter regions (legs, abdomen, chest, head) posed by
//! keyframes for standing, chair sitting and lying.
//!
//! Region geometry is expressed in an actor frame `(forward, lateral, up)`
//! anchored at the actor's ground position, for a 1.7 m reference height, and
//! scaled by the actor's height. Fall poses interpolate standing -> sitting ->
//! lying so the centroid passes through a seated height.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::model::RadarPoint;
use crate::posture::PostureClass;

const REFERENCE_HEIGHT: f64 = 1.7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyTemplate {
    /// Meters.
    pub height: f64,
    /// Meters.
    pub shoulder_width: f64,
}

impl Default for BodyTemplate {
    fn default() -> Self {
        Self {
            height: 1.7,
            shoulder_width: 0.45,
        }
    }
}

impl BodyTemplate {
    /// Pose scale relative to the reference skeleton.
    pub fn scale(&self) -> f64 {
        self.height / REFERENCE_HEIGHT
    }
}

/// Scatter and energy model of one body region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionProfile {
    /// Fraction of the actor's points drawn from this region.
    pub share: f64,
    pub energy_mean: f64,
    pub energy_sd: f64,
    /// Gaussian spread around the region's skeleton, meters.
    pub spread: f64,
}

/// Region profiles in order legs, abdomen, chest, head.
pub fn default_regions() -> [RegionProfile; 4] {
    [
        RegionProfile {
            share: 0.30,
            energy_mean: 150.0,
            energy_sd: 40.0,
            spread: 0.07,
        },
        RegionProfile {
            share: 0.25,
            energy_mean: 240.0,
            energy_sd: 30.0,
            spread: 0.09,
        },
        RegionProfile {
            share: 0.30,
            energy_mean: 340.0,
            energy_sd: 30.0,
            spread: 0.10,
        },
        RegionProfile {
            share: 0.15,
            energy_mean: 260.0,
            energy_sd: 30.0,
            spread: 0.06,
        },
    ]
}

/// Polyline skeleton per region, actor frame, reference height.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub regions: [Vec<[f64; 3]>; 4],
}

impl Pose {
    pub fn standing() -> Self {
        Pose {
            regions: [
                vec![[0.0, 0.0, 0.05], [0.0, 0.0, 0.85]],
                vec![[0.0, 0.0, 0.85], [0.0, 0.0, 1.10]],
                vec![[0.0, 0.0, 1.10], [0.0, 0.0, 1.45]],
                vec![[0.0, 0.0, 1.50], [0.0, 0.0, 1.70]],
            ],
        }
    }

    /// Seated on a chair: shins vertical, thighs horizontal at hip height.
    pub fn sitting() -> Self {
        Pose {
            regions: [
                vec![[0.45, 0.0, 0.05], [0.45, 0.0, 0.45], [0.0, 0.0, 0.45]],
                vec![[0.0, 0.0, 0.45], [0.0, 0.0, 0.65]],
                vec![[0.0, 0.0, 0.65], [0.0, 0.0, 0.95]],
                vec![[0.0, 0.0, 1.00], [0.0, 0.0, 1.20]],
            ],
        }
    }

    /// Lying along the forward axis, hips over the origin.
    pub fn lying() -> Self {
        Pose {
            regions: [
                vec![[-0.80, 0.0, 0.12], [0.0, 0.0, 0.12]],
                vec![[0.0, 0.0, 0.17], [0.25, 0.0, 0.17]],
                vec![[0.25, 0.0, 0.20], [0.60, 0.0, 0.20]],
                vec![[0.65, 0.0, 0.15], [0.85, 0.0, 0.15]],
            ],
        }
    }

    /// Pointwise blend `self*(1-w) + other*w`; polylines are resampled to the
    /// longer vertex count first.
    pub fn blend(&self, other: &Pose, w: f64) -> Pose {
        let mut regions: [Vec<[f64; 3]>; 4] = Default::default();
        for (r, out) in regions.iter_mut().enumerate() {
            let n = self.regions[r].len().max(other.regions[r].len());
            let a = resample(&self.regions[r], n);
            let b = resample(&other.regions[r], n);
            *out = a
                .iter()
                .zip(&b)
                .map(|(p, q)| [0, 1, 2].map(|k| p[k] * (1.0 - w) + q[k] * w))
                .collect();
        }
        Pose { regions }
    }

    /// Fall pose at progress `p` in [0, 1].
    pub fn falling(p: f64) -> Pose {
        let p = p.clamp(0.0, 1.0);
        if p <= 0.5 {
            Pose::standing().blend(&Pose::sitting(), p / 0.5)
        } else {
            Pose::sitting().blend(&Pose::lying(), (p - 0.5) / 0.5)
        }
    }

    /// Expected centroid in the actor frame for the given region shares.
    pub fn centroid(&self, regions: &[RegionProfile; 4]) -> [f64; 3] {
        let mut c = [0.0; 3];
        let total: f64 = regions.iter().map(|r| r.share).sum();
        for (poly, prof) in self.regions.iter().zip(regions) {
            let m = polyline_mean(poly);
            for k in 0..3 {
                c[k] += m[k] * prof.share / total;
            }
        }
        c
    }
}

/// Resample a polyline to `n` vertices by arc length.
fn resample(poly: &[[f64; 3]], n: usize) -> Vec<[f64; 3]> {
    if poly.len() == n {
        return poly.to_vec();
    }
    (0..n)
        .map(|i| point_at(poly, i as f64 / (n - 1).max(1) as f64))
        .collect()
}

fn seg_len(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Point at arc-length fraction `u` along a polyline.
fn point_at(poly: &[[f64; 3]], u: f64) -> [f64; 3] {
    if poly.len() == 1 {
        return poly[0];
    }
    let total: f64 = poly.windows(2).map(|w| seg_len(w[0], w[1])).sum();
    if total <= 0.0 {
        return poly[0];
    }
    let mut remaining = u.clamp(0.0, 1.0) * total;
    for w in poly.windows(2) {
        let l = seg_len(w[0], w[1]);
        if remaining <= l || l == 0.0 && remaining == 0.0 {
            let f = if l > 0.0 { remaining / l } else { 0.0 };
            return [0, 1, 2].map(|k| w[0][k] + (w[1][k] - w[0][k]) * f);
        }
        remaining -= l;
    }
    *poly.last().expect("nonempty")
}

fn polyline_mean(poly: &[[f64; 3]]) -> [f64; 3] {
    let total: f64 = poly.windows(2).map(|w| seg_len(w[0], w[1])).sum();
    if total <= 0.0 {
        return poly[0];
    }
    let mut m = [0.0; 3];
    for w in poly.windows(2) {
        let l = seg_len(w[0], w[1]);
        for k in 0..3 {
            m[k] += (w[0][k] + w[1][k]) / 2.0 * l / total;
        }
    }
    m
}

/// Actor placement in the room.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Placement {
    /// Ground position (x, y) of the actor frame origin.
    pub origin: [f64; 2],
    /// Heading of the forward axis, radians from +x.
    pub heading: f64,
    pub scale: f64,
}

impl Placement {
    pub fn to_global(&self, local: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.heading.sin_cos();
        let f = local[0] * self.scale;
        let l = local[1] * self.scale;
        [
            self.origin[0] + f * c - l * s,
            self.origin[1] + f * s + l * c,
            local[2] * self.scale,
        ]
    }
}

/// Draw `n` body points in global coordinates; speeds are filled later.
pub fn sample_points<R: Rng>(
    rng: &mut R,
    pose: &Pose,
    placement: &Placement,
    body: &BodyTemplate,
    regions: &[RegionProfile; 4],
    energy_scale: f64,
    n: usize,
) -> Vec<RadarPoint> {
    let total: f64 = regions.iter().map(|r| r.share).sum();
    let width_scale = body.shoulder_width / 0.45;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random::<f64>() * total;
        let mut r = 3;
        for (i, reg) in regions.iter().enumerate() {
            if pick < reg.share {
                r = i;
                break;
            }
            pick -= reg.share;
        }
        let prof = &regions[r];
        let base = point_at(&pose.regions[r], rng.random::<f64>());
        let spread = Normal::new(0.0, prof.spread).expect("positive spread");
        let lateral = Normal::new(0.0, prof.spread * width_scale).expect("positive spread");
        let local = [
            base[0] + spread.sample(rng),
            base[1] + lateral.sample(rng),
            base[2] + spread.sample(rng),
        ];
        let mut g = placement.to_global(local);
        g[2] = g[2].max(0.0);
        let energy = Normal::new(prof.energy_mean, prof.energy_sd)
            .expect("positive sd")
            .sample(rng)
            .max(0.0);
        out.push(RadarPoint::new(
            g[0],
            g[1],
            g[2],
            energy * energy_scale,
            0.0,
        ));
    }
    out
}

/// Accumulated ground-posture scatter for `class`, in global coordinates,
/// around a random ground position and heading.
pub fn posture_scatter<R: Rng>(rng: &mut R, class: PostureClass, n: usize) -> Vec<[f64; 3]> {
    let placement = Placement {
        origin: [rng.random_range(-1.0..1.0), rng.random_range(1.5..3.0)],
        heading: rng.random_range(0.0..std::f64::consts::TAU),
        scale: rng.random_range(0.9..1.1),
    };
    // (share, forward range, lateral sd, height mean, height sd)
    let parts: &[(f64, [f64; 2], f64, f64, f64)] = match class {
        PostureClass::LyingFaceUp => &[
            (0.35, [-0.85, 0.0], 0.10, 0.12, 0.04),
            (0.45, [0.0, 0.6], 0.17, 0.18, 0.05),
            (0.20, [0.6, 0.85], 0.08, 0.14, 0.04),
        ],
        PostureClass::LyingSideways => &[
            (0.30, [-0.80, 0.0], 0.06, 0.30, 0.06),
            (0.50, [0.0, 0.6], 0.08, 0.52, 0.07),
            (0.20, [0.6, 0.8], 0.06, 0.45, 0.05),
        ],
        PostureClass::SittingOnGround => &[
            (0.20, [0.1, 0.85], 0.10, 0.12, 0.04),
            (0.25, [-0.1, 0.1], 0.14, 0.55, 0.10),
            (0.40, [-0.1, 0.1], 0.16, 0.88, 0.06),
            (0.15, [-0.05, 0.05], 0.07, 1.05, 0.05),
        ],
    };
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.random::<f64>() * total;
        let part = parts.iter().find(|p| {
            let hit = pick < p.0;
            pick -= p.0;
            hit
        });
        let &(_, fwd, lat_sd, z_mean, z_sd) = part.unwrap_or(&parts[parts.len() - 1]);
        let f = rng.random_range(fwd[0]..=fwd[1]);
        let l = Normal::new(0.0, lat_sd).expect("positive sd").sample(rng);
        let z = Normal::new(z_mean, z_sd)
            .expect("positive sd")
            .sample(rng)
            .max(0.0);
        out.push(placement.to_global([f, l, z / placement.scale]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyframe_centroid_heights() {
        let regions = default_regions();
        assert!((Pose::standing().centroid(&regions)[2] - 1.0).abs() < 0.01);
        let sit = Pose::sitting().centroid(&regions)[2];
        assert!((0.6..0.7).contains(&sit), "{sit}");
        let lie = Pose::lying().centroid(&regions)[2];
        assert!((0.12..0.22).contains(&lie), "{lie}");
    }

    #[test]
    fn fall_passes_through_sitting_height() {
        let regions = default_regions();
        let mid = Pose::falling(0.5).centroid(&regions)[2];
        assert_eq!(
            Pose::falling(0.5),
            Pose::sitting().blend(&Pose::sitting(), 0.0)
        );
        assert!((0.6..0.7).contains(&mid));
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let z = Pose::falling(i as f64 / 20.0).centroid(&regions)[2];
            assert!(z <= prev + 1e-12);
            prev = z;
        }
    }

    #[test]
    fn placement_rotates_forward_axis() {
        let p = Placement {
            origin: [1.0, 2.0],
            heading: std::f64::consts::FRAC_PI_2,
            scale: 1.0,
        };
        let g = p.to_global([1.0, 0.0, 0.5]);
        assert!((g[0] - 1.0).abs() < 1e-12 && (g[1] - 3.0).abs() < 1e-12 && g[2] == 0.5);
    }

    #[test]
    fn posture_templates_are_classified() {
        use crate::posture::{estimate_posture, PostureParams};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let params = PostureParams::default();
        let classes = [
            PostureClass::LyingFaceUp,
            PostureClass::LyingSideways,
            PostureClass::SittingOnGround,
        ];
        let mut agree = 0;
        for i in 0..60 {
            let class = classes[i % 3];
            let pts = posture_scatter(&mut rng, class, 400);
            let report = estimate_posture(&pts, 30.0, &params).unwrap();
            agree += usize::from(report.class == class);
        }
        assert!(agree >= 57, "{agree}/60");
    }

    #[test]
    fn sampled_points_follow_shares() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let pts = sample_points(
            &mut rng,
            &Pose::standing(),
            &Placement {
                origin: [0.0, 2.0],
                heading: 0.0,
                scale: 1.0,
            },
            &BodyTemplate::default(),
            &default_regions(),
            1.0,
            20_000,
        );
        let mean_z = pts.iter().map(|p| p.z).sum::<f64>() / pts.len() as f64;
        assert!((mean_z - 1.0).abs() < 0.02, "{mean_z}");
        let high = pts.iter().filter(|p| p.energy >= 300.0).count() as f64 / pts.len() as f64;
        assert!(high > 0.2 && high < 0.35, "{high}");
    }
}
