use serde::{Deserialize, Serialize};

/// Mean realized cost over `paths` realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√paths`; undefined (`null`) below two paths.
    pub stderr: Option<f64>,
    pub paths: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEstimate {
    pub policy: String,
    pub estimate: CostEstimate,
}

/// `J_policy − J_reference` on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStat {
    pub policy: String,
    pub reference: String,
    pub mean: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtLeast,
    AtMost,
}

/// `value <relation> bound`; a verdict with an undefined value fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub value: Option<f64>,
    pub relation: Relation,
    pub bound: Option<f64>,
    pub pass: bool,
}

impl Verdict {
    pub fn new(
        check: impl Into<String>,
        value: Option<f64>,
        relation: Relation,
        bound: Option<f64>,
    ) -> Self {
        let pass = match (value, bound) {
            (Some(v), Some(b)) if v.is_finite() && !b.is_nan() => match relation {
                Relation::AtLeast => v >= b,
                Relation::AtMost => v <= b,
            },
            _ => false,
        };
        Self {
            check: check.into(),
            value,
            relation,
            bound,
            pass,
        }
    }

    pub fn at_least(check: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(check, Some(value), Relation::AtLeast, Some(bound))
    }

    pub fn at_most(check: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::new(check, Some(value), Relation::AtMost, Some(bound))
    }

    /// `|value| ≤ k·stderr`, failing when the stderr is undefined.
    pub fn within(check: impl Into<String>, value: f64, stderr: Option<f64>, k: f64) -> Self {
        Self::new(
            check,
            Some(value.abs()),
            Relation::AtMost,
            stderr.map(|s| k * s),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub scenario: String,
    pub seed: u64,
    pub paths: usize,
    pub steps: usize,
    pub lag_steps: usize,
    pub estimates: Vec<PolicyEstimate>,
    pub paired: Vec<PairedStat>,
    pub verdicts: Vec<Verdict>,
    /// SHA-256 over the per-path noise digests, in path order.
    pub noise_digest: Option<String>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl ExperimentReport {
    pub fn new(
        experiment: &str,
        scenario: &str,
        seed: u64,
        paths: usize,
        steps: usize,
        lag_steps: usize,
    ) -> Self {
        Self {
            experiment: experiment.to_string(),
            scenario: scenario.to_string(),
            seed,
            paths,
            steps,
            lag_steps,
            estimates: Vec::new(),
            paired: Vec::new(),
            verdicts: Vec::new(),
            noise_digest: None,
            notes: Vec::new(),
            passed: false,
        }
    }

    /// Recompute `passed` from the verdicts.
    pub fn finish(mut self) -> Self {
        self.passed = !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass);
        self
    }

    /// Plain-text table for terminals.
    pub fn render(&self) -> String {
        let mut s = format!(
            "experiment {} on {} (paths = {}, seed = {}, N = {}, L = {})\n",
            self.experiment, self.scenario, self.paths, self.seed, self.steps, self.lag_steps
        );
        let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6e}"));
        for e in &self.estimates {
            s += &format!(
                "  J[{:<16}] = {:.6} ± {}\n",
                e.policy,
                e.estimate.mean,
                fmt(e.estimate.stderr)
            );
        }
        for p in &self.paired {
            s += &format!(
                "  J[{}] − J[{}] = {:.6e} ± {}\n",
                p.policy,
                p.reference,
                p.mean,
                fmt(p.stderr)
            );
        }
        for v in &self.verdicts {
            let rel = match v.relation {
                Relation::AtLeast => ">=",
                Relation::AtMost => "<=",
            };
            s += &format!(
                "  [{}] {}: {} {} {}\n",
                if v.pass { "PASS" } else { "FAIL" },
                v.check,
                fmt(v.value),
                rel,
                fmt(v.bound)
            );
        }
        for n in &self.notes {
            s += &format!("  note: {n}\n");
        }
        s += &format!("  => {}\n", if self.passed { "PASS" } else { "FAIL" });
        s
    }
}
