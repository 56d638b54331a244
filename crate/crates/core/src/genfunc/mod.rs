//! The representative algebra `Ê(X)` and its quotient classes.

mod class;
mod local;
mod parse;
mod repr;

pub use crate::asymptotics::equal_in_g;
pub use class::GeneralizedFunction;
pub use local::LocalRepresentative;
pub use parse::{builtin_fields, parse_distribution, parse_representative, Scope};
pub use repr::{Node, Representative};
