pub mod certify;
pub mod distributions;
pub mod error;
pub mod example1;
pub mod exponents;
pub mod hypothesis;
pub mod rational;
pub mod simulator;

pub use distributions::{
    j_alpha, kl_divergence, marginals, mutual_information, product_pmf, renyi_divergence, Backing,
    EmpiricalType, FinitePmf, RenyiOrder, Shape,
};
pub use error::{Error, Result};
