use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SolverError;
use crate::formulations::FLOW_PENALTY;
use crate::pricing::PricingScheme;

/// Time-limit factor of the short branch-and-bound variant.
pub const BETA_SHORT: f64 = 1.0 / 50.0;
/// Time-limit factor of the long branch-and-bound variant.
pub const BETA_LONG: f64 = 1.0 / 2.0;

/// The end-to-end solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    SrrArcNode,
    SrrArcPath,
    SrrRestricted,
    BnbRestrictedShort,
    BnbRestrictedLong,
    SrrPathSequence,
    SrrPathSequenceRestricted,
    Exact,
}

impl SolverKind {
    pub const ALL: [SolverKind; 8] = [
        SolverKind::SrrArcNode,
        SolverKind::SrrArcPath,
        SolverKind::SrrRestricted,
        SolverKind::BnbRestrictedShort,
        SolverKind::BnbRestrictedLong,
        SolverKind::SrrPathSequence,
        SolverKind::SrrPathSequenceRestricted,
        SolverKind::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::SrrArcNode => "srr_arc_node",
            SolverKind::SrrArcPath => "srr_arc_path",
            SolverKind::SrrRestricted => "srr_restricted",
            SolverKind::BnbRestrictedShort => "bnb_restricted_short",
            SolverKind::BnbRestrictedLong => "bnb_restricted_long",
            SolverKind::SrrPathSequence => "srr_path_sequence",
            SolverKind::SrrPathSequenceRestricted => "srr_path_sequence_restricted",
            SolverKind::Exact => "exact",
        }
    }

    /// Solvers that decide one step at a time.
    pub fn is_rolling(self) -> bool {
        !matches!(self, SolverKind::SrrPathSequence | SolverKind::SrrPathSequenceRestricted | SolverKind::Exact)
    }

    /// Solvers whose paths come from the restricted sets.
    pub fn is_restricted(self) -> bool {
        matches!(
            self,
            SolverKind::SrrRestricted
                | SolverKind::BnbRestrictedShort
                | SolverKind::BnbRestrictedLong
                | SolverKind::SrrPathSequenceRestricted
        )
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, SolverError> {
        let s = s.trim().to_ascii_lowercase().replace('-', "_");
        SolverKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SolverKind::ALL.iter().map(|k| k.name()).collect();
            SolverError::Config(format!("unknown solver `{s}` (available: {})", names.join(", ")))
        })
    }
}

/// Pricing method of the path-sequence column generation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PricingChoice {
    #[default]
    AllInOne,
    ShortestPaths,
    KShortest,
}

/// Settings of every solver; all keys are optional in a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    /// Wall-clock limit of one solver run, in seconds.
    pub time_limit: Option<f64>,
    pub lp_backend: Option<String>,
    pub epsilon: f64,
    /// Commodities fixed per rounding; by default `|V|` for path-sequence
    /// solvers and `ceil(|V| / 10)` for the others.
    pub theta: Option<usize>,
    pub initial_cg_iterations: usize,
    pub cg_iterations_between_roundings: usize,
    pub deletion_probability: f64,
    pub kappa: usize,
    pub pricing: PricingChoice,
    /// Path cap per step of k-shortest pricing.
    pub k_shortest_cap: usize,
    pub beta_short: f64,
    pub beta_long: f64,
    /// Time limit of the exact solver in seconds; unlimited when absent
    /// unless `time_limit` is set.
    pub exact_time_limit: Option<f64>,
    /// Largest `|V| * |K| * H` the exact solver accepts.
    pub exact_size_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            time_limit: None,
            lp_backend: None,
            epsilon: FLOW_PENALTY,
            theta: None,
            initial_cg_iterations: 20,
            cg_iterations_between_roundings: 3,
            deletion_probability: 0.3,
            kappa: super::DEFAULT_KAPPA,
            pricing: PricingChoice::AllInOne,
            k_shortest_cap: 200,
            beta_short: BETA_SHORT,
            beta_long: BETA_LONG,
            exact_time_limit: None,
            exact_size_cap: 50_000,
        }
    }
}

impl SolverConfig {
    pub fn from_toml(text: &str) -> Result<Self, SolverError> {
        let c: SolverConfig = toml::from_str(text).map_err(|e| SolverError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(0.0..=1.0).contains(&self.deletion_probability) {
            return bad(format!("deletion_probability must lie in [0, 1], got {}", self.deletion_probability));
        }
        if self.theta == Some(0) {
            return bad("theta must be at least 1".into());
        }
        if self.kappa == 0 || self.k_shortest_cap == 0 {
            return bad("kappa and k_shortest_cap must be at least 1".into());
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be non-negative, got {}", self.epsilon));
        }
        if !(self.beta_short > 0.0 && self.beta_long > 0.0) {
            return bad("beta values must be positive".into());
        }
        for t in [self.time_limit, self.exact_time_limit].into_iter().flatten() {
            if !(t > 0.0) {
                return bad(format!("time limits must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn srr(&self, node_count: usize, path_sequence: bool) -> SrrConfig {
        let theta = self.theta.unwrap_or(if path_sequence { node_count } else { node_count.div_ceil(10) }).max(1);
        SrrConfig {
            theta,
            initial_iterations: self.initial_cg_iterations,
            iterations_between_roundings: self.cg_iterations_between_roundings,
            deletion_probability: self.deletion_probability,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    pub fn pricing_scheme(&self) -> PricingScheme {
        match self.pricing {
            PricingChoice::AllInOne => PricingScheme::AllInOne,
            PricingChoice::ShortestPaths => PricingScheme::ShortestPaths,
            PricingChoice::KShortest => PricingScheme::KShortest { k_cap: self.k_shortest_cap },
        }
    }
}

/// Parameters of one rounding loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SrrConfig {
    pub theta: usize,
    pub initial_iterations: usize,
    pub iterations_between_roundings: usize,
    pub deletion_probability: f64,
    pub epsilon: f64,
    pub seed: u64,
}

/// Branch-and-bound limits for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BnbConfig {
    pub beta: f64,
}

impl BnbConfig {
    /// `beta * 1.7^sqrt(|V|)` seconds.
    pub fn time_limit(self, node_count: usize) -> f64 {
        self.beta * 1.7f64.powf((node_count as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("simplex".parse::<SolverKind>().is_err());
    }

    #[test]
    fn theta_rules() {
        let c = SolverConfig::default();
        assert_eq!(c.srr(36, true).theta, 36);
        assert_eq!(c.srr(36, false).theta, 4);
        assert_eq!(c.srr(5, false).theta, 1);
    }

    #[test]
    fn bnb_limit() {
        let b = BnbConfig { beta: 0.5 };
        assert!((b.time_limit(100) - 0.5 * 1.7f64.powi(10)).abs() < 1e-9);
    }

    #[test]
    fn toml_keys() {
        let c = SolverConfig::from_toml("lp_backend = \"highs\"\nseed = 3\ntheta = 2\npricing = \"k_shortest\"").unwrap();
        assert_eq!(c.lp_backend.as_deref(), Some("highs"));
        assert_eq!((c.seed, c.theta), (3, Some(2)));
        assert_eq!(c.pricing_scheme(), PricingScheme::KShortest { k_cap: 200 });
        assert!(SolverConfig::from_toml("colour = 1").is_err());
        assert!(SolverConfig::from_toml("deletion_probability = 2.0").is_err());
    }
}
