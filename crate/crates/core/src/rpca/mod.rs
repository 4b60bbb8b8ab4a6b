//! Robust recovery of a low-rank tensor from sparse gross corruption:
//! instance generation, dual-certificate construction and checks, Monte-Carlo
//! concentration samples, and an exact solver for the matrix case.

pub mod admm;
pub mod certificate;
pub mod concentration;
pub mod instance;

pub use admm::{
    matrix_optimality, matrix_trial, solve_matrix_rpca, AdmmOptions, MatrixOptimality, MatrixRpcaSolution, MatrixTrial,
};
pub use certificate::{
    build_certificate, certify, golfing_certificate, golfing_identities, incoherence_profile, incoherence_with,
    low_rank_witness, neumann_certificate, support_free, AssumptionSlack, CertificateReport, CertifyConfig, Condition,
    DualCertificate, GolfingIdentities, GolfingState, IncoherenceOptions, IncoherenceProfile, LowRankSpace,
    NeumannCertificate, NeumannOptions, COND_COUPLING, COND_DISTANCE, COND_OFF_SUPPORT, COND_SPECTRAL, COND_SUPPORT,
};
pub use concentration::{concentration_trial, ConcentrationOptions, ConcentrationRecord, ConcentrationReport, Quantiles};
pub use instance::{
    batch_probability, default_batches, default_lambda, generate_instance, low_rank_tensor, FactorStyle, InstanceArchive,
    InstanceSpec, RpcaInstance,
};
