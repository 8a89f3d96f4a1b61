//! Limiting spectral moments of symmetric random matrices whose
//! skew-diagonals are independent but internally correlated.
//!
//! - [`partitions`] enumerates pair partitions and their heights.
//! - [`hankel_volume`] computes the polytope volume attached to each one.
//! - [`limit_moments`] assembles them into `M_k(c)` and checks the
//!   free-cumulant decomposition of the limit.
//! - [`ensembles`] samples matrices for each correlation regime.
//! - [`spectra`] turns matrices into eigenvalues, moments, histograms and
//!   summary statistics.
//!
//! The guide in `book/` walks through each piece with runnable examples.

pub mod ensembles;
pub mod error;
pub mod hankel_volume;
pub mod limit_moments;
pub mod partitions;
pub mod rational;
pub mod seed;
pub mod spectra;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/partitions.md")]
    mod partitions {}
    #[doc = include_str!("../../../book/src/volumes.md")]
    mod volumes {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/free_cumulants.md")]
    mod free_cumulants {}
    #[doc = include_str!("../../../book/src/ensembles.md")]
    mod ensembles {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
}
