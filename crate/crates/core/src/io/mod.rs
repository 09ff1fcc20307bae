//! On-disk formats: FTNS tensors, text point files, label lists and
//! PGM/PPM debug images.

mod ftns;
mod image;
mod points;

pub use ftns::{read_ftns, write_ftns, Tensor, FTNS_MAGIC, FTNS_VERSION, MAX_RANK};
pub use image::write_view_image;
pub use points::{read_labels, read_points, write_labels, write_points};
