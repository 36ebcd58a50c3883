//! Data generators and runners for the concept-drift, transfer, and
//! classification-drift experiments.

mod generate;
mod report;
mod run;

pub use generate::{gen_abrupt, gen_classification_drift, gen_gradual, gen_transfer, word_topic};
pub use report::{pooled_stderr, ExperimentReport, ReportRow};
pub use run::{run_classification_drift, run_concept_drift, run_transfer, RunSpec, TransferReport};

use serde::{Deserialize, Serialize};

use crate::data::{Coefficients, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Abrupt,
    Gradual,
    Transfer,
    ClassificationDrift,
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "abrupt" => Ok(ScenarioKind::Abrupt),
            "gradual" => Ok(ScenarioKind::Gradual),
            "transfer" => Ok(ScenarioKind::Transfer),
            "classification" | "classification_drift" => Ok(ScenarioKind::ClassificationDrift),
            other => Err(Error::InvalidSpec(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Shape of the synthetic bag-of-words stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub topics: usize,
    pub words_per_topic: usize,
    /// Probability a document contains a word of its own topic.
    pub p_own: f64,
    /// Probability a document contains any other word.
    pub p_other: f64,
    /// Magnitude of every coefficient; interesting words get `+signal`.
    pub signal: f64,
}

impl Default for TopicModel {
    fn default() -> Self {
        TopicModel {
            topics: 20,
            words_per_topic: 5,
            p_own: 0.6,
            p_other: 0.2,
            signal: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftScenario {
    pub kind: ScenarioKind,
    /// Rows per step (the target size for `Transfer`).
    pub n_per_step: usize,
    /// Source rows, used by `Transfer` only.
    pub n_source: usize,
    pub p: usize,
    pub n_steps: usize,
    /// Active features (interesting topics for classification).
    pub s_active: usize,
    pub coef_range: (f64, f64),
    /// Support indices replaced at the drift (abrupt) or per step (gradual).
    pub switch_count: usize,
    /// Step at which the abrupt switch happens, 1-based.
    pub switch_step: usize,
    pub transfer_rate: f64,
    pub noise_sd: f64,
    pub topic_model: TopicModel,
    pub seed: u64,
}

impl DriftScenario {
    fn base(kind: ScenarioKind, seed: u64) -> Self {
        DriftScenario {
            kind,
            n_per_step: 50,
            n_source: 500,
            p: 100,
            n_steps: 10,
            s_active: 10,
            coef_range: (-1.0, 1.0),
            switch_count: 5,
            switch_step: 6,
            transfer_rate: 0.0,
            noise_sd: 1.0,
            topic_model: TopicModel::default(),
            seed,
        }
    }

    /// Ten active features, five of which switch at step 6.
    pub fn abrupt(seed: u64) -> Self {
        DriftScenario::base(ScenarioKind::Abrupt, seed)
    }

    /// One active feature switches at every step.
    pub fn gradual(seed: u64) -> Self {
        DriftScenario {
            switch_count: 1,
            ..DriftScenario::base(ScenarioKind::Gradual, seed)
        }
    }

    /// 500 source rows, 50 target rows.
    pub fn transfer(rate: f64, seed: u64) -> Self {
        DriftScenario {
            n_steps: 1,
            transfer_rate: rate,
            ..DriftScenario::base(ScenarioKind::Transfer, seed)
        }
    }

    /// Twenty batches of 100 documents over 20 topics of 5 words; the user
    /// is interested in topics `k..k+9` during batches `2k−1` and `2k`.
    pub fn classification(seed: u64) -> Self {
        DriftScenario {
            n_per_step: 100,
            n_steps: 20,
            switch_count: 1,
            ..DriftScenario::base(ScenarioKind::ClassificationDrift, seed)
        }
    }

    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        match kind {
            ScenarioKind::Abrupt => DriftScenario::abrupt(seed),
            ScenarioKind::Gradual => DriftScenario::gradual(seed),
            ScenarioKind::Transfer => DriftScenario::transfer(0.0, seed),
            ScenarioKind::ClassificationDrift => DriftScenario::classification(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_per_step < 2 || self.n_steps == 0 || self.p == 0 {
            return bad("n_per_step >= 2, n_steps >= 1 and p >= 1 are required".into());
        }
        if self.s_active > self.p {
            return bad(format!("s_active = {} exceeds p = {}", self.s_active, self.p));
        }
        if self.switch_count > self.s_active {
            return bad(format!("switch_count = {} exceeds s_active = {}", self.switch_count, self.s_active));
        }
        let (lo, hi) = self.coef_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("coef_range ({lo}, {hi}) is not an interval"));
        }
        if !(0.0..=1.0).contains(&self.transfer_rate) {
            return bad(format!("transfer_rate must lie in [0, 1], got {}", self.transfer_rate));
        }
        if !(self.noise_sd >= 0.0) {
            return bad(format!("noise_sd must be >= 0, got {}", self.noise_sd));
        }
        match self.kind {
            ScenarioKind::Abrupt => {
                if self.s_active + self.switch_count > self.p {
                    return bad("not enough inactive features to switch into".into());
                }
                if !(1..=self.n_steps).contains(&self.switch_step) {
                    return bad(format!("switch_step must lie in 1..={}", self.n_steps));
                }
            }
            ScenarioKind::Gradual => {
                if self.s_active == self.p && self.n_steps > 1 {
                    return bad("gradual drift needs at least one inactive feature".into());
                }
            }
            ScenarioKind::Transfer => {
                if self.n_source < 2 {
                    return bad("n_source must be >= 2".into());
                }
                if 2 * self.s_active > self.p {
                    return bad("transfer needs p >= 2 s_active so every feature can switch".into());
                }
            }
            ScenarioKind::ClassificationDrift => {
                let t = &self.topic_model;
                if t.topics * t.words_per_topic != self.p {
                    return bad(format!(
                        "p = {} must equal topics * words_per_topic = {}",
                        self.p,
                        t.topics * t.words_per_topic
                    ));
                }
                // interest window k..k+s−1 slides one topic per pair of batches
                if self.s_active + self.n_steps.div_ceil(2) - 1 > t.topics {
                    return bad("the interest window runs past the last topic".into());
                }
                for q in [t.p_own, t.p_other] {
                    if !(q > 0.0 && q < 1.0) {
                        return bad(format!("word probabilities must lie in (0, 1), got {q}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One step of a simulated stream, with `y = Xβ + ε` (or Bernoulli labels).
#[derive(Debug, Clone, PartialEq)]
pub struct StepData {
    pub dataset: Dataset,
    pub beta_true: Coefficients,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LassoAll,
    LassoSingle,
    TransferLasso,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::LassoAll, Method::LassoSingle, Method::TransferLasso];

    pub fn name(self) -> &'static str {
        match self {
            Method::LassoAll => "lasso_all",
            Method::LassoSingle => "lasso_single",
            Method::TransferLasso => "transfer_lasso",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method `{s}`")))
    }
}
