//! Grid-based classifiers for aging classes, stochastic orders and total positivity.
//!
//! Every verdict is a statement about the evaluated grid only. Differences
//! within `ToleranceProfile::sign_slack` of zero count as zero, and weak
//! monotonicity (constant allowed) satisfies both "increasing" and
//! "decreasing" readings.

mod kernel;
mod monotone;
mod order;

pub use kernel::{
    check_effect_monotonicity, check_log_convex_slice, check_tp2_rr2, check_tp2_rr2_values, minor_determinant,
    EffectMonotonicity, Tp2Class, Tp2Verdict,
};
pub use monotone::{
    check_ifr_dfr, check_ilr_dlr, check_log_shape, check_monotone_1d, check_monotone_on, Direction,
    MonotonicityVerdict, ToleranceProfile, Witness,
};
pub(crate) use kernel::aggregate_slices;
pub use order::{check_lr_order, check_st_order, OrderHolds, OrderVerdict};
