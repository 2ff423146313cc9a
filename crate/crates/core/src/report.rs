use serde::Serialize;

/// Outcome of one named property check.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    /// Indices (cubes, nodes or cells) that violate the property.
    pub offenders: Vec<usize>,
    pub detail: String,
}

impl PropertyCheck {
    pub fn new(name: impl Into<String>, offenders: Vec<usize>, detail: impl Into<String>) -> Self {
        PropertyCheck {
            name: name.into(),
            pass: offenders.is_empty(),
            offenders,
            detail: detail.into(),
        }
    }

    pub fn from_bool(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        PropertyCheck {
            name: name.into(),
            pass,
            offenders: Vec::new(),
            detail: detail.into(),
        }
    }
}

pub(crate) fn all_pass(checks: &[&PropertyCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}
