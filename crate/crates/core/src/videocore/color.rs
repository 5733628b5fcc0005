use crate::error::{Error, Result};
use crate::image::Image;

/// BT.601 luma on the 8-bit convention (`16 + 65.481 R + 128.553 G + 24.966 B`),
/// rescaled back to `[0, 1]` by dividing by 255.
pub fn rgb_to_y(frame: &Image) -> Result<Image> {
    if frame.channels() != 3 {
        return Err(Error::shape(format!(
            "rgb_to_y expects 3 channels, got {}",
            frame.channels()
        )));
    }
    let (h, w, _) = frame.shape();
    let data = frame
        .data()
        .chunks_exact(3)
        .map(|p| (16.0 + 65.481 * p[0] + 128.553 * p[1] + 24.966 * p[2]) / 255.0)
        .collect();
    Image::from_vec(h, w, 1, data)
}
