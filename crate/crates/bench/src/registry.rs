//! Scenario construction and static dispatch.
//!
//! [`lceopt_core::Scenario`] has generic methods, so harness code is written
//! generically and [`with_scenario!`](crate::with_scenario) expands one match
//! arm per concrete scenario.

use lceopt_core::scenarios::{ContTag, OneStepToy, Pushbox, SyntheticHighDim, TwoStateToy};

use crate::config::ScenarioConfig;
use crate::BenchError;

#[derive(Debug, Clone)]
pub enum BuiltScenario {
    ContTag(ContTag),
    Pushbox(Pushbox),
    Toy(OneStepToy),
    TwoState(TwoStateToy),
    Synthetic(SyntheticHighDim),
}

pub fn build(config: &ScenarioConfig) -> Result<BuiltScenario, BenchError> {
    let wrap = |e: String| BenchError::Config(format!("scenario `{}`: {e}", config.id()));
    Ok(match config {
        ScenarioConfig::Conttag(c) => BuiltScenario::ContTag(ContTag::new(c.clone()).map_err(wrap)?),
        ScenarioConfig::Pushbox(c) => BuiltScenario::Pushbox(Pushbox::new(c.clone()).map_err(wrap)?),
        ScenarioConfig::Toy(c) => BuiltScenario::Toy(OneStepToy::new(c.clone()).map_err(wrap)?),
        ScenarioConfig::TwoState(c) => BuiltScenario::TwoState(TwoStateToy::new(c.clone()).map_err(wrap)?),
        ScenarioConfig::Synthetic(c) => BuiltScenario::Synthetic(SyntheticHighDim::new(c.clone()).map_err(wrap)?),
    })
}

/// Evaluates `$body` with `$s` bound to the concrete scenario inside `$built`.
#[macro_export]
macro_rules! with_scenario {
    ($built:expr, |$s:ident| $body:expr) => {
        match $built {
            $crate::registry::BuiltScenario::ContTag($s) => $body,
            $crate::registry::BuiltScenario::Pushbox($s) => $body,
            $crate::registry::BuiltScenario::Toy($s) => $body,
            $crate::registry::BuiltScenario::TwoState($s) => $body,
            $crate::registry::BuiltScenario::Synthetic($s) => $body,
        }
    };
}
