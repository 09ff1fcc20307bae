use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::render::RenderedView;

/// Binary PGM (depth views) or PPM (RGB views), maxval 255.
pub fn write_view_image(path: impl AsRef<Path>, view: &RenderedView) -> Result<()> {
    let path = path.as_ref();
    let magic = if view.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", view.width(), view.height()).into_bytes();
    out.extend(view.image.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
