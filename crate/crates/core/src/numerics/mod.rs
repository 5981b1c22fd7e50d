//! Numerical kernels shared by the physics modules.

pub mod dft;
pub mod faddeeva;
pub mod fit;
pub mod quadrature;
pub mod random;

pub use dft::{dft, dft_real, fft_frequencies, Direction};
pub use faddeeva::{faddeeva, voigt_overlap, ComplexValue};
pub use fit::{
    fit_least_squares, fit_least_squares_with, finite_difference_gradient, DataPoint, FitOptions,
    FitResult, FnModel, Model,
};
pub use quadrature::quadrature;
pub use random::{open_unit, RandomStream};
