//! 2-D DFT helpers over row-major complex buffers.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

fn fft_2d(buf: &mut Vec<Complex64>, height: usize, width: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    row_fft.process(buf);
    let mut t = transpose(buf, height, width);
    col_fft.process(&mut t);
    *buf = transpose(&t, width, height);
}

/// Unnormalized forward DFT of a real `height x width` plane.
pub fn forward(plane: &[f64], height: usize, width: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_2d(&mut buf, height, width, false);
    buf
}

/// Inverse DFT scaled by `1/(h*w)`, real part only.
pub fn inverse_real(mut spectrum: Vec<Complex64>, height: usize, width: usize) -> Vec<f64> {
    fft_2d(&mut spectrum, height, width, true);
    let scale = 1.0 / (height * width) as f64;
    spectrum.iter().map(|c| c.re * scale).collect()
}

/// Signed frequency of DFT bin `k` of an `n`-point transform; equals the
/// offset from the centre after an fftshift.
pub fn signed_frequency(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Distance of bin (ky, kx) from the DC bin in the centred spectrum.
pub fn radial_distance(ky: usize, kx: usize, height: usize, width: usize) -> f64 {
    signed_frequency(ky, height).hypot(signed_frequency(kx, width))
}

/// Largest radial distance any bin of a `height x width` spectrum can have:
/// the centred-spectrum corner.
pub fn max_radius(height: usize, width: usize) -> f64 {
    let fy = (height / 2) as f64;
    let fx = (width / 2) as f64;
    fy.hypot(fx)
}

/// fftshift: moves DC to (h/2, w/2).
pub fn shift_to_center<T: Copy>(src: &[T], height: usize, width: usize) -> Vec<T> {
    let mut out = src.to_vec();
    for y in 0..height {
        for x in 0..width {
            let sy = (y + height / 2) % height;
            let sx = (x + width / 2) % width;
            out[sy * width + sx] = src[y * width + x];
        }
    }
    out
}
