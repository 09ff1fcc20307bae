//! Cluster point features into parts and name the clusters from
//! back-projected similarity scores.

use partseg::eval::object_miou;
use partseg::geometry::normalize_unit_sphere;
use partseg::render::{render_all, viewpoint_set, DepthPolarity, RenderMode, ViewLayout};
use partseg::segment::{anchor_masks, segment_with_anchors, SegmentConfig};
use partseg::synth::{synth_cloud, synth_features, synth_sim_maps, SynthShape, SynthSpec};

fn main() -> partseg::Result<()> {
    let p = 3;
    let cloud = normalize_unit_sphere(&synth_cloud(&SynthSpec {
        shape: SynthShape::LampLike,
        n_points: 4000,
        p_parts: p,
        noise_sigma: 0.0,
        seed: 2,
    })?)?;
    let gt = cloud.gt_labels().expect("labelled").to_vec();
    let cameras = viewpoint_set(ViewLayout::Sphere48, 2.2)?;
    let (views, corr) = render_all(&cloud, &cameras, 0.01, RenderMode::Depth, DepthPolarity::NearLight)?;

    // per-pixel label scores, as an image-text model would produce them
    let sim = synth_sim_maps(&views, &gt, p, 0.3)?;
    let anchors = anchor_masks(&sim, &corr, cloud.positions(), p, Some(1024), 0)?;
    println!(
        "{} anchors over {} labels {:?}",
        anchors.points.len(),
        p,
        sim.label_names
    );

    let feats = synth_features(&gt, 8, 0.2, 2)?;
    let seg = segment_with_anchors(&feats.data, Some(&anchors), p, &SegmentConfig::default())?;
    let names = seg.label_of_cluster.as_ref().expect("anchors name the clusters");
    for (c, &l) in names.iter().enumerate() {
        let size = seg.cluster_of.iter().filter(|&&k| k == c).count();
        println!("cluster {c}: {size} points -> {}", sim.label_names[l as usize - 1]);
    }
    let pred = seg.final_labels().expect("named");
    println!("mIoU {:.3}", object_miou(&pred, &gt, p, "lamp")?.object_miou);
    Ok(())
}
