//! Gradient-minimisation smoothing stencils and a small multispectral
//! raster toolkit built around them: exact integer convolution, band
//! statistics, optimum-index-factor band selection, parallelepiped
//! classification and accuracy reporting, plus a seeded scene generator.

pub mod analysis;
pub mod cli;
pub mod convolve;
pub mod error;
pub mod fsio;
pub mod kernels;
pub mod raster;
pub mod synth;

pub use convolve::{convolve, convolve_image, BoundaryMode, ConvolveOptions};
pub use error::{Error, ErrorKind, Result};
pub use kernels::{derive_quadrant_template, laplacian_template, smoothing_template, symmetrize, Kernel};
pub use raster::{Band, Dtype, MultibandImage, ResponseField};
