pub mod cli;
pub mod compat;
pub mod error;
pub mod linalg;
pub mod perturb;
pub mod qdeform;
pub mod random;
pub mod spectral;
