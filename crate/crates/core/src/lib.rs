//! Certified tensor spectral and nuclear norms, subspace projections,
//! decomposability and subdifferential checks, and dual certificates for
//! tensor robust PCA.

pub mod decomp;
pub mod error;
pub mod io;
pub mod norms;
pub mod numeric;
pub mod reproduce;
pub mod rng;
pub mod rpca;
pub mod subdiff;
pub mod subspace;
pub mod tensor;
pub mod verdict;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, Holder, NuclearDecomposition, RankOneAtom, Slot};
pub use verdict::{Interval, Verdict};
