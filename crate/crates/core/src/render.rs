//! Deterministic software point rasterizer.
//!
//! Points are splatted as screen-space disks into a z-buffer. Every pixel
//! remembers the point that won it, and every point remembers the pixel under
//! its projected center if (and only if) it won that pixel. The latter is the
//! pixel-to-point correspondence consumed by back-projection.
//!
//! Pixel `(row, col)` has its center at continuous coordinates
//! `(u, v) = (col, row)`; rows grow downwards.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::matrix::Matrix;

pub const DEFAULT_CAMERA_RADIUS: f64 = 2.2;
pub const DEFAULT_FOV_DEG: f64 = 60.0;
pub const DEFAULT_CANVAS: usize = 224;
/// Elevation of the four oblique cameras of the ten-view layout.
pub const OBLIQUE_ELEVATION_DEG: f64 = 35.0;

/// Points closer to the camera plane than this are treated as behind it.
const NEAR_PLANE: f64 = 1e-9;

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize(a: Vec3) -> Vec3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Camera layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewLayout {
    /// Six axis-aligned cameras: +z, -z, +x, -x, +y, -y.
    Ortho6,
    /// The six axis-aligned cameras followed by four oblique ones at 35°
    /// elevation and azimuths 45°, 135°, 225°, 315° (measured from +z towards +x).
    Pc2_10,
    /// 48 cameras on a Fibonacci spiral, from the top (+y) down.
    Sphere48,
}

impl ViewLayout {
    pub fn view_count(self) -> usize {
        match self {
            ViewLayout::Ortho6 => 6,
            ViewLayout::Pc2_10 => 10,
            ViewLayout::Sphere48 => 48,
        }
    }
}

impl FromStr for ViewLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ortho6" => Ok(ViewLayout::Ortho6),
            "pc2_10" => Ok(ViewLayout::Pc2_10),
            "sphere48" => Ok(ViewLayout::Sphere48),
            other => Err(Error::argument(format!(
                "unknown view layout `{other}` (expected ortho6, pc2_10 or sphere48)"
            ))),
        }
    }
}

impl fmt::Display for ViewLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViewLayout::Ortho6 => "ortho6",
            ViewLayout::Pc2_10 => "pc2_10",
            ViewLayout::Sphere48 => "sphere48",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    #[default]
    Depth,
    Rgb,
}

impl FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth" => Ok(RenderMode::Depth),
            "rgb" => Ok(RenderMode::Rgb),
            other => Err(Error::argument(format!("unknown render mode `{other}`"))),
        }
    }
}

/// Which end of the depth range is bright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthPolarity {
    /// Close points are light; background is 0.
    #[default]
    NearLight,
    /// Close points are dark; background is 1.
    NearDark,
}

impl DepthPolarity {
    pub fn background(self) -> f32 {
        match self {
            DepthPolarity::NearLight => 0.0,
            DepthPolarity::NearDark => 1.0,
        }
    }
}

impl FromStr for DepthPolarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "near_light" => Ok(DepthPolarity::NearLight),
            "near_dark" => Ok(DepthPolarity::NearDark),
            other => Err(Error::argument(format!("unknown depth polarity `{other}`"))),
        }
    }
}

/// Perspective pinhole camera looking at `look_at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_deg: f64,
    pub height: usize,
    pub width: usize,
}

impl Camera {
    pub fn new(position: Vec3, up: Vec3) -> Result<Self> {
        let cam = Camera {
            position,
            look_at: [0.0; 3],
            up,
            fov_deg: DEFAULT_FOV_DEG,
            height: DEFAULT_CANVAS,
            width: DEFAULT_CANVAS,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn with_canvas(mut self, height: usize, width: usize) -> Self {
        self.height = height;
        self.width = width;
        self
    }

    pub fn with_fov(mut self, fov_deg: f64) -> Self {
        self.fov_deg = fov_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let view = sub(self.look_at, self.position);
        let len = dot(view, view).sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::argument("camera position coincides with its target"));
        }
        let up_len = dot(self.up, self.up).sqrt();
        let c = cross(view, self.up);
        if !(up_len > 0.0) || dot(c, c).sqrt() <= 1e-9 * len * up_len {
            return Err(Error::argument("camera up vector is parallel to the view direction"));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::argument("canvas must be at least 1x1"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::argument(format!("field of view {} out of range", self.fov_deg)));
        }
        Ok(())
    }

    /// Orthonormal camera frame `(right, up, forward)`.
    pub fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = normalize(sub(self.look_at, self.position));
        let right = normalize(cross(forward, self.up));
        let up = cross(right, forward);
        (right, up, forward)
    }

    /// Focal length in pixels; the field of view spans the canvas height.
    pub fn focal_px(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }

    /// Unit vector from the target towards the camera.
    pub fn direction(&self) -> Vec3 {
        normalize(sub(self.position, self.look_at))
    }
}

fn camera_at(direction: Vec3, radius: f64) -> Result<Camera> {
    let d = normalize(direction);
    // cameras looking along ±y use +z as up
    let up = if d[1].abs() > 0.99 {
        [0.0, 0.0, 1.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    Camera::new([d[0] * radius, d[1] * radius, d[2] * radius], up)
}

fn ortho_directions() -> [Vec3; 6] {
    [
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
    ]
}

/// Unit directions on a Fibonacci spiral, from `y ≈ +1` to `y ≈ -1`.
pub fn fibonacci_directions(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - (i as f64 + 0.5) * 2.0 / n as f64;
            let r = (1.0 - y * y).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), y, r * phi.sin()]
        })
        .collect()
}

/// Fixed camera layouts around the unit-normalized object, all looking at
/// the origin with the default 224×224 canvas and 60° field of view.
pub fn viewpoint_set(kind: ViewLayout, radius: f64) -> Result<Vec<Camera>> {
    if !(radius > 1.0) || !radius.is_finite() {
        return Err(Error::argument(format!(
            "camera radius {radius} must exceed 1 (the object's bounding sphere)"
        )));
    }
    let mut dirs: Vec<Vec3> = Vec::new();
    match kind {
        ViewLayout::Ortho6 => dirs.extend(ortho_directions()),
        ViewLayout::Pc2_10 => {
            dirs.extend(ortho_directions());
            let el = OBLIQUE_ELEVATION_DEG.to_radians();
            for az in [45.0f64, 135.0, 225.0, 315.0] {
                let az = az.to_radians();
                dirs.push([el.cos() * az.sin(), el.sin(), el.cos() * az.cos()]);
            }
        }
        ViewLayout::Sphere48 => dirs.extend(fibonacci_directions(48)),
    }
    dirs.into_iter().map(|d| camera_at(d, radius)).collect()
}

/// A point projected onto the canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    /// Distance along the view axis.
    pub depth: f64,
    /// False for points on or behind the camera plane.
    pub valid: bool,
}

pub fn project_point(camera: &Camera, basis: &(Vec3, Vec3, Vec3), p: Vec3) -> Projection {
    let (right, up, forward) = *basis;
    let rel = sub(p, camera.position);
    let x = dot(rel, right);
    let y = dot(rel, up);
    let z = dot(rel, forward);
    if z <= NEAR_PLANE {
        return Projection {
            u: f64::NAN,
            v: f64::NAN,
            depth: z,
            valid: false,
        };
    }
    let f = camera.focal_px();
    let cx = (camera.width as f64 - 1.0) / 2.0;
    let cy = (camera.height as f64 - 1.0) / 2.0;
    Projection {
        u: cx + f * x / z,
        v: cy - f * y / z,
        depth: z,
        valid: true,
    }
}

pub fn project(camera: &Camera, positions: &Matrix) -> Vec<Projection> {
    let basis = camera.basis();
    positions
        .iter_rows()
        .map(|r| project_point(camera, &basis, [r[0], r[1], r[2]]))
        .collect()
}

/// Splat radius in pixels for a radius given in normalized device units
/// (the canvas spans [-1, 1] along its shorter side).
pub fn splat_radius_px(camera: &Camera, point_radius: f64) -> f64 {
    point_radius * camera.height.min(camera.width) as f64 / 2.0
}

/// Pixel whose center is nearest to a projected point, if on the canvas.
pub fn center_pixel(camera: &Camera, proj: &Projection) -> Option<(usize, usize)> {
    if !proj.valid {
        return None;
    }
    let col = proj.u.round();
    let row = proj.v.round();
    if col < 0.0 || row < 0.0 || col >= camera.width as f64 || row >= camera.height as f64 {
        return None;
    }
    Some((row as usize, col as usize))
}

/// One rendered view.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub camera: Camera,
    /// Row-major `height × width × channels` values in [0, 1].
    pub image: Vec<f32>,
    pub channels: usize,
    /// Index of the point owning each pixel, or -1 for background.
    pub owner: Vec<i32>,
}

impl RenderedView {
    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn foreground_pixels(&self) -> usize {
        self.owner.iter().filter(|&&o| o >= 0).count()
    }
}

/// A rendered view plus, per point, the flat index of the pixel under its
/// projected center when the point owns it.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub view: RenderedView,
    pub pixel_of_point: Vec<Option<usize>>,
}

pub fn rasterize(
    pc: &PointCloud,
    camera: &Camera,
    point_radius: f64,
    mode: RenderMode,
    polarity: DepthPolarity,
) -> Result<Raster> {
    camera.validate()?;
    if !(point_radius >= 0.0) || !point_radius.is_finite() {
        return Err(Error::argument(format!("point radius {point_radius} must be >= 0")));
    }
    let colors = match mode {
        RenderMode::Rgb => Some(
            pc.colors()
                .ok_or_else(|| Error::input("rgb rendering requires point colors"))?,
        ),
        RenderMode::Depth => None,
    };

    let (h, w) = (camera.height, camera.width);
    let proj = project(camera, pc.positions());
    let r_px = splat_radius_px(camera, point_radius);
    let r2 = r_px * r_px;

    let mut zbuf = vec![f64::INFINITY; h * w];
    let mut owner = vec![-1i32; h * w];
    for (i, p) in proj.iter().enumerate() {
        if !p.valid {
            continue;
        }
        let center = center_pixel(camera, p);
        let mut visit = |row: usize, col: usize| {
            let k = row * w + col;
            if p.depth < zbuf[k] {
                zbuf[k] = p.depth;
                owner[k] = i as i32;
            }
        };
        let c0 = (p.u - r_px).ceil().max(0.0);
        let c1 = (p.u + r_px).floor().min(w as f64 - 1.0);
        let r0 = (p.v - r_px).ceil().max(0.0);
        let r1 = (p.v + r_px).floor().min(h as f64 - 1.0);
        let mut center_done = false;
        if c0 <= c1 && r0 <= r1 {
            for row in r0 as usize..=r1 as usize {
                let dv = row as f64 - p.v;
                for col in c0 as usize..=c1 as usize {
                    let du = col as f64 - p.u;
                    let is_center = center == Some((row, col));
                    if du * du + dv * dv <= r2 || is_center {
                        center_done |= is_center;
                        visit(row, col);
                    }
                }
            }
        }
        if let (Some((row, col)), false) = (center, center_done) {
            visit(row, col);
        }
    }

    let pixel_of_point = proj
        .iter()
        .enumerate()
        .map(|(i, p)| {
            center_pixel(camera, p)
                .map(|(row, col)| row * w + col)
                .filter(|&k| owner[k] == i as i32)
        })
        .collect();

    let image = match colors {
        Some(colors) => {
            let mut img = vec![0.0f32; h * w * 3];
            for (k, &o) in owner.iter().enumerate() {
                if o >= 0 {
                    let c = colors.row(o as usize);
                    for ch in 0..3 {
                        img[k * 3 + ch] = c[ch] as f32;
                    }
                }
            }
            img
        }
        None => depth_image(&zbuf, &owner, polarity),
    };

    Ok(Raster {
        view: RenderedView {
            camera: camera.clone(),
            image,
            channels: if colors.is_some() { 3 } else { 1 },
            owner,
        },
        pixel_of_point,
    })
}

fn depth_image(zbuf: &[f64], owner: &[i32], polarity: DepthPolarity) -> Vec<f32> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (z, &o) in zbuf.iter().zip(owner) {
        if o >= 0 {
            lo = lo.min(*z);
            hi = hi.max(*z);
        }
    }
    let span = hi - lo;
    zbuf.iter()
        .zip(owner)
        .map(|(&z, &o)| {
            if o < 0 {
                return polarity.background();
            }
            // fraction of the way from the nearest to the farthest point
            let t = if span > 0.0 { (z - lo) / span } else { 0.0 };
            match polarity {
                DepthPolarity::NearLight => (1.0 - t) as f32,
                DepthPolarity::NearDark => t as f32,
            }
        })
        .collect()
}

/// Pixel-to-point correspondences for a whole render pass.
///
/// `pixel(r, i)` is the flat pixel index of point `i` in view `r`, present
/// only when the point owns the pixel under its projected center.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceMap {
    n_points: usize,
    shapes: Vec<(usize, usize)>,
    pixels: Vec<Vec<i64>>,
}

impl CorrespondenceMap {
    pub fn new(n_points: usize, shapes: Vec<(usize, usize)>, pixels: Vec<Vec<i64>>) -> Result<Self> {
        if shapes.len() != pixels.len() {
            return Err(Error::input("one canvas shape is needed per view"));
        }
        for (r, (px, &(h, w))) in pixels.iter().zip(&shapes).enumerate() {
            if px.len() != n_points {
                return Err(Error::input(format!(
                    "view {r} has {} entries, expected {n_points}",
                    px.len()
                )));
            }
            if px.iter().any(|&k| k < -1 || k >= (h * w) as i64) {
                return Err(Error::input(format!("view {r} has an out-of-range pixel index")));
            }
        }
        Ok(Self {
            n_points,
            shapes,
            pixels,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn n_views(&self) -> usize {
        self.pixels.len()
    }

    pub fn shape(&self, view: usize) -> (usize, usize) {
        self.shapes[view]
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn pixel(&self, view: usize, point: usize) -> Option<usize> {
        let k = self.pixels[view][point];
        (k >= 0).then_some(k as usize)
    }

    pub fn view_pixels(&self, view: usize) -> &[i64] {
        &self.pixels[view]
    }

    /// `(view, flat pixel)` pairs where point `i` was observed.
    pub fn observations(&self, point: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_views()).filter_map(move |r| self.pixel(r, point).map(|k| (r, k)))
    }

    pub fn visibility(&self) -> Vec<bool> {
        (0..self.n_points)
            .map(|i| self.observations(i).next().is_some())
            .collect()
    }

    /// Correspondences restricted to a subset of points, renumbered in the
    /// order given.
    pub fn select_points(&self, indices: &[usize]) -> CorrespondenceMap {
        CorrespondenceMap {
            n_points: indices.len(),
            shapes: self.shapes.clone(),
            pixels: self
                .pixels
                .iter()
                .map(|px| indices.iter().map(|&i| px[i]).collect())
                .collect(),
        }
    }
}

/// Render every camera and assemble the correspondence map.
pub fn render_all(
    pc: &PointCloud,
    cameras: &[Camera],
    point_radius: f64,
    mode: RenderMode,
    polarity: DepthPolarity,
) -> Result<(Vec<RenderedView>, CorrespondenceMap)> {
    let rasters: Vec<Raster> = cameras
        .par_iter()
        .map(|cam| rasterize(pc, cam, point_radius, mode, polarity))
        .collect::<Result<_>>()?;
    let shapes = cameras.iter().map(|c| (c.height, c.width)).collect();
    let mut views = Vec::with_capacity(rasters.len());
    let mut pixels = Vec::with_capacity(rasters.len());
    for r in rasters {
        pixels.push(r.pixel_of_point.iter().map(|p| p.map_or(-1, |k| k as i64)).collect());
        views.push(r.view);
    }
    let corr = CorrespondenceMap::new(pc.len(), shapes, pixels)?;
    Ok((views, corr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::SplitMix64;

    fn small_cam(h: usize, w: usize) -> Camera {
        Camera::new([0.0, 0.0, 2.0], [0.0, 1.0, 0.0]).unwrap().with_canvas(h, w)
    }

    #[test]
    fn ortho6_first_camera_on_plus_z() {
        let cams = viewpoint_set(ViewLayout::Ortho6, 2.0).unwrap();
        assert_eq!(cams.len(), 6);
        assert_eq!(cams[0].position, [0.0, 0.0, 2.0]);
        assert_eq!(cams[0].look_at, [0.0; 3]);
        for c in &cams {
            c.validate().unwrap();
        }
    }

    #[test]
    fn pc2_10_contains_ortho6() {
        let ortho = viewpoint_set(ViewLayout::Ortho6, DEFAULT_CAMERA_RADIUS).unwrap();
        let ten = viewpoint_set(ViewLayout::Pc2_10, DEFAULT_CAMERA_RADIUS).unwrap();
        assert_eq!(ten.len(), 10);
        assert_eq!(&ten[..6], &ortho[..]);
        for c in &ten[6..] {
            let d = c.direction();
            assert!((d[1] - OBLIQUE_ELEVATION_DEG.to_radians().sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere48_is_well_spread() {
        let cams = viewpoint_set(ViewLayout::Sphere48, DEFAULT_CAMERA_RADIUS).unwrap();
        assert_eq!(cams.len(), 48);
        let dirs: Vec<Vec3> = cams.iter().map(|c| c.direction()).collect();
        let mut min_angle = f64::INFINITY;
        for i in 0..48 {
            assert!((dot(dirs[i], dirs[i]) - 1.0).abs() < 1e-12);
            for j in i + 1..48 {
                min_angle = min_angle.min(dot(dirs[i], dirs[j]).clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        assert!(min_angle > 15.0, "min pairwise angle {min_angle}");
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!("sphere12".parse::<ViewLayout>().is_err());
        assert!(viewpoint_set(ViewLayout::Ortho6, 0.5).is_err());
        assert!(Camera::new([0.0, 2.0, 0.0], [0.0, 1.0, 0.0]).is_err());
        assert!(Camera::new([0.0; 3], [0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn origin_projects_to_canvas_center() {
        let cam = Camera::new([0.0, 0.0, 2.0], [0.0, 1.0, 0.0]).unwrap();
        let p = project(&cam, &Matrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap())[0];
        assert_eq!((p.u, p.v, p.depth), (111.5, 111.5, 2.0));
        assert!(p.valid);
    }

    #[test]
    fn axial_depth_ignores_fov() {
        for fov in [30.0, 60.0, 90.0] {
            let cam = Camera::new([0.0, 0.0, 3.0], [0.0, 1.0, 0.0]).unwrap().with_fov(fov);
            let p = project(&cam, &Matrix::from_rows(&[[0.0, 0.0, 0.5]]).unwrap())[0];
            assert!((p.depth - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn off_axis_matches_projection_matrix() {
        // Independent route: OpenGL-style view and projection matrices, then
        // NDC to pixel coordinates.
        let cam = Camera::new([0.0, 0.0, 2.0], [0.0, 1.0, 0.0]).unwrap();
        let pt = [0.3, -0.2, 0.1];
        let view_space = [pt[0], pt[1], pt[2] - 2.0];
        let f = 1.0 / (30.0f64.to_radians()).tan();
        let clip = [f * view_space[0], f * view_space[1], -view_space[2]];
        let ndc = [clip[0] / clip[2], clip[1] / clip[2]];
        let u = (ndc[0] + 1.0) / 2.0 * 224.0 - 0.5;
        let v = (1.0 - ndc[1]) / 2.0 * 224.0 - 0.5;
        let p = project(&cam, &Matrix::from_rows(&[pt]).unwrap())[0];
        assert!((p.u - u).abs() < 1e-9, "{} vs {u}", p.u);
        assert!((p.v - v).abs() < 1e-9, "{} vs {v}", p.v);
        assert!((p.depth - 1.9).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_invalid() {
        let cam = Camera::new([0.0, 0.0, 2.0], [0.0, 1.0, 0.0]).unwrap();
        let p = project(&cam, &Matrix::from_rows(&[[0.0, 0.0, 3.0]]).unwrap())[0];
        assert!(!p.valid);
    }

    #[test]
    fn nearer_point_wins_center_pixel() {
        let pc = PointCloud::from_points(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.5]]).unwrap();
        let cam = small_cam(32, 32);
        let r = rasterize(&pc, &cam, 0.0, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
        let center = r.pixel_of_point[1].unwrap();
        assert_eq!(r.view.owner[center], 1);
        assert_eq!(r.pixel_of_point[0], None);
    }

    #[test]
    fn single_point_single_pixel() {
        let pc = PointCloud::from_points(&[[0.1, 0.2, 0.0]]).unwrap();
        let cam = small_cam(64, 64);
        let r = rasterize(&pc, &cam, 0.0, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
        assert_eq!(r.view.foreground_pixels(), 1);
        let k = r.pixel_of_point[0].unwrap();
        assert_eq!(r.view.owner[k], 0);
        assert_eq!(r.view.image[k], 1.0);
        assert!(r.view.image.iter().enumerate().all(|(j, &v)| j == k || v == 0.0));
    }

    #[test]
    fn depth_polarity_and_range() {
        let pc = PointCloud::from_points(&[[-0.5, 0.0, 0.5], [0.5, 0.0, -0.5], [0.0, 0.5, 0.0]]).unwrap();
        let cam = small_cam(64, 64);
        for pol in [DepthPolarity::NearLight, DepthPolarity::NearDark] {
            let r = rasterize(&pc, &cam, 0.0, RenderMode::Depth, pol).unwrap();
            let near = r.view.image[r.pixel_of_point[0].unwrap()];
            let far = r.view.image[r.pixel_of_point[1].unwrap()];
            match pol {
                DepthPolarity::NearLight => assert_eq!((near, far), (1.0, 0.0)),
                DepthPolarity::NearDark => assert_eq!((near, far), (0.0, 1.0)),
            }
            let bg = r.view.owner.iter().position(|&o| o < 0).unwrap();
            assert_eq!(r.view.image[bg], pol.background());
        }
    }

    #[test]
    fn rgb_requires_colors() {
        let pc = PointCloud::from_points(&[[0.0; 3]]).unwrap();
        let cam = small_cam(8, 8);
        assert!(matches!(
            rasterize(&pc, &cam, 0.0, RenderMode::Rgb, DepthPolarity::NearLight),
            Err(Error::InvalidInput(_))
        ));
        let pc = pc.with_colors(Matrix::from_rows(&[[0.25, 0.5, 1.0]]).unwrap()).unwrap();
        let r = rasterize(&pc, &cam, 0.0, RenderMode::Rgb, DepthPolarity::NearLight).unwrap();
        let k = r.pixel_of_point[0].unwrap();
        assert_eq!(&r.view.image[k * 3..k * 3 + 3], &[0.25, 0.5, 1.0]);
    }

    #[test]
    fn larger_splats_cover_more_pixels() {
        let mut rng = SplitMix64::seed_from_u64(1);
        let pts: Vec<[f64; 3]> = (0..500)
            .map(|_| {
                [
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.6..0.6),
                ]
            })
            .collect();
        let pc = PointCloud::from_points(&pts).unwrap();
        let cams = viewpoint_set(ViewLayout::Ortho6, DEFAULT_CAMERA_RADIUS).unwrap();
        let count = |radius| -> usize {
            let (views, _) = render_all(&pc, &cams, radius, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
            views.iter().map(|v| v.foreground_pixels()).sum()
        };
        assert!(count(0.04) > count(0.01));
    }

    #[test]
    fn empty_camera_list_hides_everything() {
        let pc = PointCloud::from_points(&[[0.0; 3], [0.1, 0.0, 0.0]]).unwrap();
        let (views, corr) = render_all(&pc, &[], 0.01, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
        assert!(views.is_empty());
        assert_eq!(corr.visibility(), vec![false, false]);
    }

    #[test]
    fn correspondences_agree_with_owner_maps() {
        let mut rng = SplitMix64::seed_from_u64(9);
        let pts: Vec<[f64; 3]> = (0..300)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let pc = PointCloud::from_points(&pts).unwrap();
        let cams: Vec<Camera> = viewpoint_set(ViewLayout::Pc2_10, DEFAULT_CAMERA_RADIUS)
            .unwrap()
            .into_iter()
            .map(|c| c.with_canvas(48, 64))
            .collect();
        let (views, corr) = render_all(&pc, &cams, 0.03, RenderMode::Depth, DepthPolarity::NearLight).unwrap();
        for (r, v) in views.iter().enumerate() {
            for i in 0..pc.len() {
                if let Some(k) = corr.pixel(r, i) {
                    assert_eq!(v.owner[k], i as i32);
                }
            }
        }
    }
}
