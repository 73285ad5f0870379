use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// 8-bit image with 1 or 3 interleaved channels, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        Image::from_samples(height, width, channels, vec![0; height * width * channels])
    }

    pub fn from_samples(
        height: usize,
        width: usize,
        channels: usize,
        samples: Vec<u8>,
    ) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::ConfigInvalid(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if samples.len() != height * width * channels {
            return Err(Error::ConfigInvalid(format!(
                "{} samples for a {height}x{width}x{channels} image",
                samples.len()
            )));
        }
        Ok(Image {
            height,
            width,
            channels,
            samples,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn pixel(&self, i: usize) -> &[u8] {
        &self.samples[i * self.channels..(i + 1) * self.channels]
    }

    pub fn pixel_mut(&mut self, i: usize) -> &mut [u8] {
        &mut self.samples[i * self.channels..(i + 1) * self.channels]
    }

    /// Copies the rectangle `[y0, y1) x [x0, x1)` into a new image.
    pub fn crop(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> Image {
        let (h, w, c) = (y1 - y0, x1 - x0, self.channels);
        let mut samples = Vec::with_capacity(h * w * c);
        for y in y0..y1 {
            let start = (y * self.width + x0) * c;
            samples.extend_from_slice(&self.samples[start..start + w * c]);
        }
        Image {
            height: h,
            width: w,
            channels: c,
            samples,
        }
    }

    /// Sets every channel of the masked pixels to zero.
    pub fn zero_masked(&mut self, mask: &BinaryMask) -> Result<()> {
        if mask.dims() != self.dims() {
            return Err(Error::dims(self.dims(), mask.dims()));
        }
        for i in mask.ones() {
            self.pixel_mut(i).fill(0);
        }
        Ok(())
    }
}
