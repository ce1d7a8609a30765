use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{HighsBackend, LpError, LpSolver};

pub const LP_BACKEND_ENV: &str = "DYNFLOW_LP_BACKEND";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BackendKind {
    #[default]
    Highs,
}

impl BackendKind {
    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Highs => "highs",
        }
    }

    pub fn solver(self) -> Arc<dyn LpSolver> {
        match self {
            BackendKind::Highs => Arc::new(HighsBackend::new()),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BackendKind {
    type Err = LpError;

    fn from_str(s: &str) -> Result<Self, LpError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highs" => Ok(BackendKind::Highs),
            other => Err(LpError::Config(format!("unknown LP backend `{other}` (available: highs)"))),
        }
    }
}

/// Picks the backend from, in order: an explicit choice, the
/// `DYNFLOW_LP_BACKEND` environment variable, a configuration file value, the
/// default.
pub fn resolve_backend(explicit: Option<&str>, configured: Option<&str>) -> Result<BackendKind, LpError> {
    let env = std::env::var(LP_BACKEND_ENV).ok().filter(|s| !s.trim().is_empty());
    match explicit.or(env.as_deref()).or(configured) {
        Some(name) => name.parse(),
        None => Ok(BackendKind::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        assert_eq!("HiGHS".parse::<BackendKind>().unwrap(), BackendKind::Highs);
        assert!(matches!("gurobi".parse::<BackendKind>(), Err(LpError::Config(_))));
        assert_eq!(resolve_backend(Some("highs"), Some("nope")).unwrap(), BackendKind::Highs);
        assert!(resolve_backend(Some("cplex"), None).is_err());
    }
}
