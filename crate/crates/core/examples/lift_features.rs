//! Lift coarse per-view feature grids onto a point cloud.
//!
//! Each view gets a 16x16 patch grid (the resolution a ViT with 14 px
//! patches gives on a 224 canvas). Grids are bicubically upsampled to the
//! canvas, averaged over every view that sees a point, and points seen by no
//! view borrow the mean of their nearest visible neighbours.

use partseg::featmap::{bicubic_upsample, fill_hidden, Backprojector, FeatureGrid, DEFAULT_FILL_NEIGHBORS};
use partseg::geometry::normalize_unit_sphere;
use partseg::render::{render_all, viewpoint_set, DepthPolarity, RenderMode, ViewLayout};
use partseg::synth::{synth_cloud, SynthShape, SynthSpec};

fn main() -> partseg::Result<()> {
    let cloud = normalize_unit_sphere(&synth_cloud(&SynthSpec {
        shape: SynthShape::SegmentedBar,
        n_points: 3000,
        p_parts: 3,
        noise_sigma: 0.0,
        seed: 0,
    })?)?;
    let cameras = viewpoint_set(ViewLayout::Pc2_10, 2.2)?;
    let (views, corr) = render_all(&cloud, &cameras, 0.01, RenderMode::Depth, DepthPolarity::NearLight)?;

    // a smooth two-channel field per view: normalized patch row and column
    let patches = |view: usize| {
        let mut data = Vec::with_capacity(16 * 16 * 2);
        for r in 0..16 {
            for c in 0..16 {
                data.extend([r as f32 / 15.0, c as f32 / 15.0 + view as f32]);
            }
        }
        FeatureGrid::new(16, 16, 2, data).map(|g| g.with_view(view))
    };

    let full = bicubic_upsample(&patches(0)?, 224, 224)?;
    println!(
        "upsampled 16x16 -> {}x{}, corner value {:?}",
        full.height(),
        full.width(),
        full.at(0, 0)
    );

    // the accumulator upsamples coarse grids itself, one view at a time
    let mut acc = Backprojector::new(&corr);
    for r in 0..views.len() {
        acc.add_view(r, &patches(r)?)?;
    }
    let (lifted, hidden) = acc.finish()?;
    let n_hidden = hidden.iter().filter(|&&h| h).count();
    println!("{} points lifted, {n_hidden} hidden", lifted.len());

    let filled = fill_hidden(cloud.positions(), &lifted, &hidden, DEFAULT_FILL_NEIGHBORS)?;
    if let Some(i) = hidden.iter().position(|&h| h) {
        println!("hidden point {i} filled with {:?}", filled.data.row(i));
    }
    println!("point 0: {:?}", filled.data.row(0));
    Ok(())
}
