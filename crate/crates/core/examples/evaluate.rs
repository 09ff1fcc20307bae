//! Score predictions for a few objects in two categories and print the
//! tab-separated report.

use partseg::eval::{object_miou, Report};

fn main() -> partseg::Result<()> {
    let objects: [(&str, &[u32], &[u32], usize); 3] = [
        ("mug", &[1, 1, 2, 2, 2], &[1, 1, 1, 2, 2], 2),
        ("mug", &[1, 2, 2, 1], &[1, 2, 2, 1], 2),
        ("lamp", &[1, 2, 3, 3, 3, 2], &[1, 2, 2, 3, 3, 3], 3),
    ];
    let records = objects
        .iter()
        .map(|(cat, pred, gt, p)| object_miou(pred, gt, *p, cat))
        .collect::<partseg::Result<Vec<_>>>()?;
    for r in &records {
        println!(
            "{}: per-part {:?}, mIoU {:.3}",
            r.category, r.per_part_iou, r.object_miou
        );
    }
    print!("{}", Report::from_records(&records)?.to_tsv());
    Ok(())
}
