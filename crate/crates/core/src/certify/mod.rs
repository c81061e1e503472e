//! Certified lower and upper bounds on `E_P(·)`.

pub mod bounds;
pub mod certificate;
pub mod interval;
pub mod mp;
pub mod params;
pub mod product_box;
pub mod search;
pub mod upper;

pub use bounds::{d_lower, holder_bound, holder_bound_at, BoundParams, BoundValue, Prepared};
pub use certificate::{
    check_certificate, check_lower, read_certificate_file, write_certificate_file, Certificate,
    CheckReport, LowerCertificate, NonconvexityCertificate, UpperCertificate,
};
pub use interval::{Interval, IntervalScalar};
pub use mp::{Enclosure, MpInterval};
pub use params::choose_parameters;
pub use product_box::{box_extreme_points, ProductBox};
pub use search::{branch_and_bound, resume, SearchConfig, SearchOutcome, SearchStats};
pub use upper::{
    certify_upper, check_upper, nonconvexity_certificate, upper_witness, verify_upper_bound,
};
