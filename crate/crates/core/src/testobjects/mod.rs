//! Test n-forms, local test functions and families, moments and classification.

mod family;
mod form;
mod function;

pub use family::{
    check_domain, classify_family, family_at, moment_samples, spot_check_bounded, ConstantFamily, DilatedFamily,
    LocalTestFamily, MomentClass, MomentReport, MomentRow, PerturbedFamily, SharedFamily, CLASS_TOL,
};
pub use form::{FormDensity, FormTerm, LocalFrame, TestForm};
pub use function::{
    build_mollifier, bump, integrate_function, moment, multi_indices, scale_translate, LocalDensity, LocalTestFunction,
    MAX_MOLLIFIER_ORDER, UNIT_TOL,
};
