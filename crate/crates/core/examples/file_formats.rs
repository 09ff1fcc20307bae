//! Write and read back the two interchange formats: FTNS tensors (what an
//! external feature exporter produces) and whitespace-separated point files.

use partseg::io::{read_ftns, read_points, write_ftns, write_points, Tensor};
use partseg::PointCloud;

fn main() -> partseg::Result<()> {
    let dir = std::env::temp_dir().join(format!("partseg-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| partseg::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    // a 16x16 grid of 4-dim patch features for one view
    let grid = Tensor::new(vec![16, 16, 4], (0..16 * 16 * 4).map(|i| i as f32 * 0.25).collect())?;
    let path = dir.join("view_000.ftns");
    write_ftns(&path, &grid)?;
    let bytes = std::fs::read(&path).map_err(|e| partseg::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    println!("{} bytes, header {:?}", bytes.len(), &bytes[..8]);
    assert_eq!(read_ftns(&path)?, grid);

    let cloud = PointCloud::from_points(&[[0.0, 0.0, 0.0], [1.0, 0.5, -0.25], [0.1, 0.2, 0.3]])?
        .with_labels(vec![1, 2, 2])?
        .with_category("toy");
    let points = dir.join("toy.txt");
    write_points(&points, &cloud)?;
    print!("{}", std::fs::read_to_string(&points).unwrap_or_default());
    assert_eq!(read_points(&points)?, cloud);

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
