use thiserror::Error;

/// Errors raised by the calculus engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point, parameter or support lies outside the region where an object is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Transition requested for a coordinate outside the chart overlap.
    #[error("overlap error: coordinate {coords:?} is not in the overlap of charts `{from}` and `{to}`")]
    Overlap { from: String, to: String, coords: Vec<f64> },

    /// Integral curve left the manifold before the requested time.
    #[error("flow escaped the manifold at t = {exit_time}")]
    FlowEscape { exit_time: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A kernel, mollifier or cut-off could not be built from its inputs.
    #[error("construction error: {0}")]
    Construction(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unresolved name `{name}`{}", suggestion_text(.suggestions))]
    Unresolved { name: String, suggestions: Vec<String> },

    /// Pairing supplied by a custom distribution failed.
    #[error("distribution `{id}` failed: {message}")]
    Pairing { id: String, message: String },

    #[error("numerical failure in experiment `{experiment}`: {message}")]
    Numerical { experiment: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

fn suggestion_text(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (did you mean: {}?)", suggestions.join(", "))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Candidate names close to `name`, ordered by similarity.
pub fn suggest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut scored: Vec<(f64, &str)> = candidates
        .into_iter()
        .map(|c| (strsim::jaro_winkler(name, c), c))
        .filter(|(s, _)| *s > 0.6)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    scored.into_iter().take(3).map(|(_, c)| c.to_string()).collect()
}
