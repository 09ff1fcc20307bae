use partseg::geometry::normalize_unit_sphere;
use partseg::render::{
    project, render_all, splat_radius_px, viewpoint_set, Camera, DepthPolarity, RenderMode, ViewLayout,
};
use partseg::PointCloud;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

fn cameras(layout: ViewLayout, canvas: usize) -> Vec<Camera> {
    viewpoint_set(layout, 2.2)
        .unwrap()
        .into_iter()
        .map(|c| c.with_canvas(canvas, canvas))
        .collect()
}

/// Per-pixel scan over all points: nearest covering splat wins.
fn reference_owners(cloud: &PointCloud, cam: &Camera, radius: f64) -> Vec<i32> {
    let proj = project(cam, cloud.positions());
    let r = splat_radius_px(cam, radius);
    let mut owners = Vec::with_capacity(cam.height * cam.width);
    for row in 0..cam.height {
        for col in 0..cam.width {
            let mut best = (f64::INFINITY, -1);
            for (i, p) in proj.iter().enumerate().filter(|(_, p)| p.valid) {
                let hit = (col as f64 - p.u).powi(2) + (row as f64 - p.v).powi(2) <= r * r
                    || (p.u.round() == col as f64 && p.v.round() == row as f64);
                if hit && p.depth < best.0 {
                    best = (p.depth, i as i32);
                }
            }
            owners.push(best.1);
        }
    }
    owners
}

/// Visible means owning the pixel under one's own projected center.
fn reference_visibility(cloud: &PointCloud, cams: &[Camera], radius: f64) -> Vec<bool> {
    let mut visible = vec![false; cloud.len()];
    for cam in cams {
        let owners = reference_owners(cloud, cam, radius);
        for (i, p) in project(cam, cloud.positions()).iter().enumerate() {
            let (row, col) = (p.v.round(), p.u.round());
            if p.valid && row >= 0.0 && col >= 0.0 && row < cam.height as f64 && col < cam.width as f64 {
                visible[i] |= owners[row as usize * cam.width + col as usize] == i as i32;
            }
        }
    }
    visible
}

#[test]
fn cube_corner_cloud_is_fully_visible_from_ortho6() {
    let mut pts = Vec::new();
    for x in [-1.0, 1.0] {
        for y in [-1.0, 1.0] {
            for z in [-1.0, 1.0] {
                pts.push([x, y, z]);
            }
        }
    }
    // the three faces meeting at the (+,+,+) corner, on a coarse grid
    for a in 0..5 {
        for b in 0..5 {
            let (s, t) = (a as f64 / 4.0 * 2.0 - 1.0, b as f64 / 4.0 * 2.0 - 1.0);
            for q in [[1.0, s, t], [s, 1.0, t], [s, t, 1.0]] {
                // shared edges and corners would otherwise appear twice
                if !pts.contains(&q) {
                    pts.push(q);
                }
            }
        }
    }
    let cloud = normalize_unit_sphere(&PointCloud::from_points(&pts).unwrap()).unwrap();
    let cams = cameras(ViewLayout::Ortho6, 128);
    let (_, corr) = render_all(&cloud, &cams, 0.01, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
    let reference = reference_visibility(&cloud, &cams, 0.01);
    assert_eq!(corr.visibility(), reference);
    assert!(reference.iter().all(|&v| v));
}

#[test]
fn random_points_match_reference_rasterizer() {
    let mut rng = SplitMix64::seed_from_u64(9);
    for _ in 0..5 {
        let pts: Vec<[f64; 3]> = (0..10)
            .map(|_| {
                [
                    rng.gen_range(-0.7..0.7),
                    rng.gen_range(-0.7..0.7),
                    rng.gen_range(-0.7..0.7),
                ]
            })
            .collect();
        let cloud = PointCloud::from_points(&pts).unwrap();
        let cams = cameras(ViewLayout::Pc2_10, 96);
        let (views, corr) = render_all(&cloud, &cams, 0.02, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
        for (view, cam) in views.iter().zip(&cams) {
            assert_eq!(view.owner, reference_owners(&cloud, cam, 0.02));
        }
        assert_eq!(corr.visibility(), reference_visibility(&cloud, &cams, 0.02));
    }
}
