//! Spectral and nuclear norms with certified bounds.

pub mod certify;
pub mod checks;
pub mod hopm;
pub mod net;
pub mod nuclear;
pub mod symmetric;

pub use certify::{certifiable, spectral_bounds, spectral_certify, CertifyOptions, SpectralBounds};
pub use hopm::{hopm_trace, spectral_hopm, HopmOptions, SpectralResult};
pub use net::{spectral_net_bounds, sphere_grid, NetBounds, NetSpec, MAX_NET_DIM};
pub use nuclear::{nuclear_sandwich, NuclearOptions, NuclearSandwich, SandwichMethod};
pub use checks::{duality_gap_check, restricted_norm_check, DualityReport, RestrictedOptions, RestrictedReport};
pub use symmetric::{spectral_symmetric_banach, SymmetricOptions};
