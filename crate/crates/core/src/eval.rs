//! Part-segmentation metrics.
//!
//! A part that is absent from both prediction and ground truth scores IoU 1.
//! aIoU pools intersections and unions over all instances before dividing.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Per-object evaluation. `intersections[j]` and `unions[j]` refer to label
/// `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub category: String,
    pub per_part_iou: Vec<f64>,
    pub object_miou: f64,
    pub intersections: Vec<u64>,
    pub unions: Vec<u64>,
}

fn ratio(i: u64, u: u64) -> f64 {
    if u == 0 {
        1.0
    } else {
        i as f64 / u as f64
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

pub fn object_miou(pred: &[u32], gt: &[u32], p: usize, category: &str) -> Result<EvalRecord> {
    if pred.len() != gt.len() {
        return Err(Error::input(format!(
            "{} predictions for {} ground-truth labels",
            pred.len(),
            gt.len()
        )));
    }
    if p == 0 {
        return Err(Error::argument("part count must be at least 1"));
    }
    if let Some(l) = pred.iter().chain(gt).find(|&&l| l == 0 || l as usize > p) {
        return Err(Error::input(format!("label {l} outside 1..={p}")));
    }
    let mut inter = vec![0u64; p];
    let mut pred_n = vec![0u64; p];
    let mut gt_n = vec![0u64; p];
    for (&a, &b) in pred.iter().zip(gt) {
        let (a, b) = (a as usize - 1, b as usize - 1);
        pred_n[a] += 1;
        gt_n[b] += 1;
        if a == b {
            inter[a] += 1;
        }
    }
    let unions: Vec<u64> = (0..p).map(|j| pred_n[j] + gt_n[j] - inter[j]).collect();
    let per_part_iou: Vec<f64> = (0..p).map(|j| ratio(inter[j], unions[j])).collect();
    Ok(EvalRecord {
        category: category.to_string(),
        object_miou: mean(per_part_iou.iter().copied()),
        per_part_iou,
        intersections: inter,
        unions,
    })
}

fn by_category(records: &[EvalRecord]) -> BTreeMap<&str, Vec<&EvalRecord>> {
    let mut groups: BTreeMap<&str, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.category.as_str()).or_default().push(r);
    }
    groups
}

/// `(instance-average mIoU, class-average mIoU)`.
pub fn dataset_metrics(records: &[EvalRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::input("no evaluation records"));
    }
    let instance = mean(records.iter().map(|r| r.object_miou));
    let class = mean(
        by_category(records)
            .values()
            .map(|rs| mean(rs.iter().map(|r| r.object_miou))),
    );
    Ok((instance, class))
}

fn pooled_iou<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> f64 {
    let mut inter: Vec<u64> = Vec::new();
    let mut union: Vec<u64> = Vec::new();
    for r in records {
        if inter.len() < r.intersections.len() {
            inter.resize(r.intersections.len(), 0);
            union.resize(r.unions.len(), 0);
        }
        for (j, (&i, &u)) in r.intersections.iter().zip(&r.unions).enumerate() {
            inter[j] += i;
            union[j] += u;
        }
    }
    mean(inter.iter().zip(&union).map(|(&i, &u)| ratio(i, u)))
}

/// Per-category pooled IoU.
pub fn category_aiou(records: &[EvalRecord]) -> BTreeMap<String, f64> {
    by_category(records)
        .into_iter()
        .map(|(c, rs)| (c.to_string(), pooled_iou(rs)))
        .collect()
}

/// `(instance aIoU, class aIoU)`: intersections and unions are summed per
/// part label, within a category for the class variant and across all
/// objects for the instance variant.
pub fn a_iou(records: &[EvalRecord]) -> Result<(f64, f64)> {
    if records.is_empty() {
        return Err(Error::input("no evaluation records"));
    }
    let instance = pooled_iou(records);
    let class = mean(category_aiou(records).into_values());
    Ok((instance, class))
}

/// Per-category line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryRow {
    pub category: String,
    pub objects: usize,
    pub miou: f64,
    pub aiou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub categories: Vec<CategoryRow>,
    pub miou_instance: f64,
    pub miou_class: f64,
    pub aiou_instance: f64,
    pub aiou_class: f64,
}

impl Report {
    pub fn from_records(records: &[EvalRecord]) -> Result<Self> {
        let (miou_instance, miou_class) = dataset_metrics(records)?;
        let (aiou_instance, aiou_class) = a_iou(records)?;
        let aiou = category_aiou(records);
        let categories = by_category(records)
            .into_iter()
            .map(|(c, rs)| CategoryRow {
                category: c.to_string(),
                objects: rs.len(),
                miou: mean(rs.iter().map(|r| r.object_miou)),
                aiou: aiou[c],
            })
            .collect();
        Ok(Report {
            categories,
            miou_instance,
            miou_class,
            aiou_instance,
            aiou_class,
        })
    }

    /// Tab-separated table, scores in percent.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("category\tobjects\tmIoU\taIoU\n");
        for c in &self.categories {
            out.push_str(&format!(
                "{}\t{}\t{:.1}\t{:.1}\n",
                c.category,
                c.objects,
                100.0 * c.miou,
                100.0 * c.aiou
            ));
        }
        let total: usize = self.categories.iter().map(|c| c.objects).sum();
        out.push_str(&format!(
            "overall_instance\t{total}\t{:.1}\t{:.1}\n",
            100.0 * self.miou_instance,
            100.0 * self.aiou_instance
        ));
        out.push_str(&format!(
            "overall_class\t{total}\t{:.1}\t{:.1}\n",
            100.0 * self.miou_class,
            100.0 * self.aiou_class
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(category: &str, miou: f64) -> EvalRecord {
        EvalRecord {
            category: category.into(),
            per_part_iou: vec![miou],
            object_miou: miou,
            intersections: vec![],
            unions: vec![],
        }
    }

    #[test]
    fn identity_scores_one() {
        let r = object_miou(&[1, 2, 3, 1], &[1, 2, 3, 1], 3, "x").unwrap();
        assert_eq!(r.object_miou, 1.0);
    }

    #[test]
    fn hand_computed_case() {
        let r = object_miou(&[1, 2, 2, 2], &[1, 1, 2, 2], 2, "x").unwrap();
        assert_eq!(r.per_part_iou, vec![0.5, 2.0 / 3.0]);
        assert!((r.object_miou - 7.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn absent_part_counts_as_perfect() {
        let r = object_miou(&[1, 1], &[1, 1], 2, "x").unwrap();
        assert_eq!(r.per_part_iou, vec![1.0, 1.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            object_miou(&[1], &[1, 1], 1, "x"),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn class_vs_instance_average() {
        let rs = vec![record("A", 1.0), record("B", 0.0), record("B", 0.5)];
        let (i, c) = dataset_metrics(&rs).unwrap();
        assert_eq!(i, 0.5);
        assert_eq!(c, 0.625);
        let one = vec![record("A", 0.3), record("A", 0.9)];
        let (i, c) = dataset_metrics(&one).unwrap();
        assert_eq!(i, c);
        assert!(dataset_metrics(&[]).is_err());
    }

    #[test]
    fn pooled_iou_hand_case() {
        let a = EvalRecord {
            category: "A".into(),
            per_part_iou: vec![0.5],
            object_miou: 0.5,
            intersections: vec![1],
            unions: vec![2],
        };
        let b = EvalRecord {
            intersections: vec![3],
            unions: vec![4],
            ..a.clone()
        };
        let (inst, class) = a_iou(&[a, b]).unwrap();
        assert_eq!(inst, 4.0 / 6.0);
        assert_eq!(class, 4.0 / 6.0);
    }

    #[test]
    fn single_object_aiou_equals_miou() {
        let r = object_miou(&[1, 2, 2, 3, 3, 3], &[1, 1, 2, 3, 3, 2], 4, "x").unwrap();
        let (inst, class) = a_iou(std::slice::from_ref(&r)).unwrap();
        assert!((inst - r.object_miou).abs() < 1e-15);
        assert!((class - r.object_miou).abs() < 1e-15);
    }

    #[test]
    fn report_tsv() {
        let r = object_miou(&[1, 2], &[1, 2], 2, "mug").unwrap();
        let tsv = Report::from_records(&[r]).unwrap().to_tsv();
        assert_eq!(
            tsv,
            "category\tobjects\tmIoU\taIoU\nmug\t1\t100.0\t100.0\n\
             overall_instance\t1\t100.0\t100.0\noverall_class\t1\t100.0\t100.0\n"
        );
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_relabel_invariant(
            pairs in prop::collection::vec((1u32..=4, 1u32..=4), 1..40),
            perm_seed in 0usize..24,
        ) {
            let pred: Vec<u32> = pairs.iter().map(|p| p.0).collect();
            let gt: Vec<u32> = pairs.iter().map(|p| p.1).collect();
            let a = object_miou(&pred, &gt, 4, "c").unwrap();
            let b = object_miou(&gt, &pred, 4, "c").unwrap();
            prop_assert_eq!(a.object_miou, b.object_miou);
            prop_assert!((0.0..=1.0).contains(&a.object_miou));

            let mut perm = [1u32, 2, 3, 4];
            let mut s = perm_seed;
            for i in (1..4).rev() {
                perm.swap(i, s % (i + 1));
                s /= i + 1;
            }
            let relabel = |v: &[u32]| v.iter().map(|&l| perm[l as usize - 1]).collect::<Vec<_>>();
            let c = object_miou(&relabel(&pred), &relabel(&gt), 4, "c").unwrap();
            prop_assert!((a.object_miou - c.object_miou).abs() < 1e-12);
        }
    }
}
