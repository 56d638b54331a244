//! Smoothing kernels: constructions, transport to local families, certification.

mod certify;
mod cutoff;
mod kernel;
mod two_slot;

pub use certify::{
    check_growth, check_order_m, check_support, default_test_functions, reproduction_samples, GrowthReport,
    OrderReport, ReproductionRow, SupportReport, SupportViolation, CERT_TOL, MAX_GROWTH_DEPTH, SUPPORT_SAMPLES,
};
pub use cutoff::{lambda, smoothstep, CutoffSpec, Plateau};
pub use kernel::{from_local, to_local, KernelKind, KernelLocalFamily, SmoothingKernel};
pub use two_slot::{lie_two_slot, Slot, TwoSlot};
