//! Image perturbations for probing what frozen-feature detectors rely on:
//! ideal frequency filters, patch masking and shuffling, joint
//! frequency/spatial conditions, common corruptions, and spectrum export.
//!
//! Images are [`ImageBuffer`]s with `f64` samples in [0, 1]. Public ops
//! clamp once at the end; `_raw` variants return unclamped results.

pub mod conditions;
pub mod corrupt;
pub mod error;
pub mod fft;
pub mod filter;
pub mod image;
pub mod spatial;
pub mod spec;
pub mod spectrum;

pub use conditions::{condition_a, condition_b, condition_c, DEFAULT_BLOCK};
pub use corrupt::{gaussian_noise, jpeg_compress, resize_cycle};
pub use error::{PerturbError, Result};
pub use filter::{highpass, lowpass};
pub use image::{ImageBuffer, STANDARD_SIZE};
pub use spatial::{local_shuffle, random_mask, PATCH};
pub use spec::{derive_seed, OutputFormat, PerturbSpec};
pub use spectrum::{spectrum, Spectrum};
