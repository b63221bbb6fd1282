//! Elliptic curves over Q: integral models, local reduction data and traces
//! of Frobenius.

mod curve;
mod frobenius;
mod global;
mod tate;

pub use curve::WeierstrassCurve;
pub use frobenius::{count_points, trace_of_frobenius, TraceCache, DEFAULT_POINT_COUNT_CAP};
pub use global::{conductor_and_global_data, global_minimal_model, GlobalData};
pub use tate::{
    local_minimal_model, tate_algorithm, KodairaType, LocalReductionData, ReductionClass,
};
