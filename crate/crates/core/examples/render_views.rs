//! Render a synthetic lamp from the six axis cameras, dump PGM images and
//! report how many points each view sees.
//!
//! cargo run --example render_views -- [out_dir]

use std::path::PathBuf;

use partseg::geometry::normalize_unit_sphere;
use partseg::io::write_view_image;
use partseg::render::{render_all, viewpoint_set, DepthPolarity, RenderMode, ViewLayout};
use partseg::synth::{synth_cloud, SynthShape, SynthSpec};

fn main() -> partseg::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("partseg-render-views"));
    std::fs::create_dir_all(&out).map_err(|e| partseg::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let cloud = synth_cloud(&SynthSpec {
        shape: SynthShape::LampLike,
        n_points: 4000,
        p_parts: 4,
        noise_sigma: 0.0,
        seed: 0,
    })?;
    let cloud = normalize_unit_sphere(&cloud)?;
    let cameras: Vec<_> = viewpoint_set(ViewLayout::Ortho6, 2.2)?
        .into_iter()
        .map(|c| c.with_canvas(128, 128))
        .collect();
    let (views, corr) = render_all(&cloud, &cameras, 0.02, RenderMode::Depth, DepthPolarity::NearLight)?;

    for (r, view) in views.iter().enumerate() {
        let seen = (0..cloud.len()).filter(|&i| corr.pixel(r, i).is_some()).count();
        println!(
            "view {r}: camera at {:?}, {} foreground pixels, {seen} points mapped",
            view.camera.position,
            view.foreground_pixels()
        );
        write_view_image(out.join(format!("view_{r}.pgm")), view)?;
    }
    let visible = corr.visibility().iter().filter(|&&v| v).count();
    println!(
        "{visible} of {} points visible; images in {}",
        cloud.len(),
        out.display()
    );
    Ok(())
}
