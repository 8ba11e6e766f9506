use super::{PointCloud, Pose, Vec3};
use crate::{Error, Result};

/// Binary segmentation mask of one frame; any value above zero is foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    /// Row-major, `width * height` bytes.
    pub data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "mask data has {} bytes, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> u8 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: u8) {
        self.data[row * self.width + col] = value;
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0).count()
    }

    /// Foreground pixels as `(col, row)` in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, _)| (i % self.width, i / self.width))
    }
}

/// Lifts a mask pixel `(x, y, 0)` into world space through
/// `tracking · calibration`.
pub fn pixel_to_world(pixel: &Vec3, calibration: &Pose, tracking: &Pose) -> Result<Vec3> {
    if pixel.z != 0.0 {
        return Err(Error::invalid(format!(
            "mask pixels must have z = 0, got {}",
            pixel.z
        )));
    }
    let h = tracking.matrix() * (calibration.matrix() * pixel.push(1.0));
    // Affine poses keep w = 1.
    Ok(Vec3::new(h.x / h.w, h.y / h.w, h.z / h.w))
}

/// World-space images of every foreground pixel, frame-major then row-major.
pub fn build_cloud_from_sweep(
    masks: &[Mask],
    calibration: &Pose,
    trackings: &[Pose],
) -> Result<PointCloud> {
    if masks.len() != trackings.len() {
        return Err(Error::invalid(format!(
            "{} masks but {} tracking poses",
            masks.len(),
            trackings.len()
        )));
    }
    if let Some(first) = masks.first() {
        if let Some(bad) = masks
            .iter()
            .position(|m| m.width != first.width || m.height != first.height)
        {
            return Err(Error::invalid(format!(
                "mask {bad} is {}x{}, expected {}x{}",
                masks[bad].width, masks[bad].height, first.width, first.height
            )));
        }
    }
    let mut points = Vec::new();
    for (mask, tracking) in masks.iter().zip(trackings) {
        for (col, row) in mask.foreground() {
            let px = Vec3::new(col as f64, row as f64, 0.0);
            points.push(pixel_to_world(&px, calibration, tracking)?);
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::world(points)
}
