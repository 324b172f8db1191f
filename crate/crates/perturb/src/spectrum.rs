use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PerturbError, Result};
use crate::fft;
use crate::image::{ImageBuffer, CHANNELS};

/// `log(1 + |F|)` of the centred DFT, averaged over channels. DC lands at
/// `(height / 2, width / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

pub fn spectrum(img: &ImageBuffer) -> Spectrum {
    let (w, h) = (img.width(), img.height());
    let mut mag = vec![0.0; w * h];
    for c in 0..CHANNELS {
        for (m, bin) in mag.iter_mut().zip(fft::forward(img.plane(c), h, w)) {
            *m += bin.norm() / CHANNELS as f64;
        }
    }
    let values = fft::shift_to_center(&mag, h, w)
        .into_iter()
        .map(f64::ln_1p)
        .collect();
    Spectrum {
        width: w,
        height: h,
        values,
    }
}

impl Spectrum {
    pub fn center(&self) -> (usize, usize) {
        (self.height / 2, self.width / 2)
    }

    /// Value at signed frequency offset (fy, fx) from DC.
    pub fn at(&self, fy: isize, fx: isize) -> f64 {
        let (cy, cx) = self.center();
        let y = (cy as isize + fy).rem_euclid(self.height as isize) as usize;
        let x = (cx as isize + fx).rem_euclid(self.width as isize) as usize;
        self.values[y * self.width + x]
    }

    /// Mean over integer-radius rings 1..=min(h, w)/2 (DC excluded).
    pub fn radial_profile(&self) -> Vec<f64> {
        let (cy, cx) = self.center();
        let rings = self.height.min(self.width) / 2;
        let mut sum = vec![0.0; rings + 1];
        let mut count = vec![0usize; rings + 1];
        for y in 0..self.height {
            for x in 0..self.width {
                let d = (y as f64 - cy as f64).hypot(x as f64 - cx as f64).round() as usize;
                if d <= rings {
                    sum[d] += self.values[y * self.width + x];
                    count[d] += 1;
                }
            }
        }
        (1..=rings).map(|r| sum[r] / count[r] as f64).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.width) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Min-max normalized 8-bit grayscale; a flat spectrum maps to zeros.
    pub fn to_gray8(&self) -> image::GrayImage {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        image::GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let v = self.values[y as usize * self.width + x as usize];
            let t = if span > 0.0 { (v - lo) / span } else { 0.0 };
            image::Luma([(t * 255.0).round() as u8])
        })
    }

    /// Writes CSV or PNG depending on the extension.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => std::fs::write(path, self.to_csv()).map_err(|source| PerturbError::Io {
                path: path.to_path_buf(),
                source,
            }),
            Some("png") => self
                .to_gray8()
                .save_with_format(path, image::ImageFormat::Png)
                .map_err(|e| PerturbError::Codec(format!("{}: {e}", path.display()))),
            _ => Err(PerturbError::InvalidParam(format!(
                "spectrum output must end in .csv or .png: {}",
                path.display()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shape() {
        let img = ImageBuffer::filled(6, 4, [0.2, 0.4, 0.6]).unwrap();
        let csv = spectrum(&img).to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.split(',').count() == 6));
    }

    #[test]
    fn gray_image_spans_full_range() {
        let img = ImageBuffer::from_fn(8, 8, |x, y, _| ((x ^ y) & 1) as f64).unwrap();
        let g = spectrum(&img).to_gray8();
        let px: Vec<u8> = g.pixels().map(|p| p[0]).collect();
        assert_eq!(px.iter().copied().max(), Some(255));
        assert_eq!(px.iter().copied().min(), Some(0));
    }
}
