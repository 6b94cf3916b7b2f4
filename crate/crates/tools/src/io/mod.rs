//! Tensor, observation and image files.

mod observations;
mod pnm;
mod t3b;

use std::path::Path;

use hqtc_core::Tensor3;

pub use observations::{
    format_observations, parse_observations, read_observations, write_observations, Observations,
};
pub use pnm::{decode_pnm, encode_pnm, read_pnm, write_pnm, Encoding, Image};
pub use t3b::{decode_t3b, encode_t3b, read_t3b, write_t3b, MAGIC};

use crate::error::Result;

/// A dense tensor read from disk and the peak value to use for PSNR.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTensor {
    pub tensor: Tensor3,
    /// `maxval` for images, `None` for raw tensors.
    pub i_max: Option<f64>,
}

pub fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

/// Read a `.pgm`/`.ppm`/`.pnm` image or a T3B tensor, chosen by extension.
pub fn read_tensor(path: &Path) -> Result<LoadedTensor> {
    if is_image(path) {
        let img = read_pnm(path)?;
        Ok(LoadedTensor { tensor: img.tensor, i_max: Some(img.i_max) })
    } else {
        Ok(LoadedTensor { tensor: read_t3b(path)?, i_max: None })
    }
}
