use super::format::{parse_scenario, ScenarioFile};
use super::ScenarioError;

const BUILTINS: [(&str, &str); 7] = [
    ("twopath", include_str!("../../scenarios/twopath.json")),
    ("twopath_soft", include_str!("../../scenarios/twopath_soft.json")),
    ("twopath_missing", include_str!("../../scenarios/twopath_missing.json")),
    ("format_tiebreak", include_str!("../../scenarios/format_tiebreak.json")),
    ("lcpo_chain", include_str!("../../scenarios/lcpo_chain.json")),
    ("grader", include_str!("../../scenarios/grader.json")),
    ("mixture2", include_str!("../../scenarios/mixture2.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(name, _)| *name).collect()
}

/// The JSON text of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn builtin(name: &str) -> Result<ScenarioFile, ScenarioError> {
    let text = builtin_source(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.to_string()))?;
    parse_scenario(text, &format!("builtin:{name}"))
}
