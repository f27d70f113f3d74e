use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{CatError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptGroup {
    pub name: String,
    pub features: Vec<String>,
}

/// Which raw columns form each concept, plus the prediction target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptSpec {
    pub task: Task,
    pub target: String,
    pub concepts: Vec<ConceptGroup>,
}

#[derive(Deserialize)]
struct RawSpec {
    #[serde(default)]
    format_version: Option<u32>,
    task: String,
    target: String,
    concepts: Vec<ConceptGroup>,
}

fn spec_err(location: impl Into<String>, detail: impl Into<String>) -> CatError {
    CatError::Spec {
        location: location.into(),
        detail: detail.into(),
    }
}

impl ConceptSpec {
    pub fn parse(document: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(document).map_err(|e| {
            spec_err(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        if let Some(v) = raw.format_version {
            if v != 1 {
                return Err(spec_err("format_version", format!("unsupported version {v}")));
            }
        }
        let task = match raw.task.as_str() {
            "regression" => Task::Regression,
            "classification" => Task::Classification,
            other => return Err(spec_err("task", format!("unknown task {other:?}"))),
        };
        let spec = ConceptSpec {
            task,
            target: raw.target,
            concepts: raw.concepts,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.is_empty() {
            return Err(spec_err("target", "empty target name"));
        }
        if self.concepts.is_empty() {
            return Err(spec_err("concepts", "no concept groups"));
        }
        let mut names = HashSet::new();
        let mut features = HashSet::new();
        for (i, group) in self.concepts.iter().enumerate() {
            if group.name.is_empty() {
                return Err(spec_err(format!("concepts[{i}].name"), "empty concept name"));
            }
            if !names.insert(group.name.as_str()) {
                return Err(spec_err(format!("concepts[{i}].name"), format!("duplicate concept {:?}", group.name)));
            }
            if group.features.is_empty() {
                return Err(spec_err(format!("concepts[{i}].features"), format!("concept {:?} has no features", group.name)));
            }
            for (j, f) in group.features.iter().enumerate() {
                let loc = format!("concepts[{i}].features[{j}]");
                if f == &self.target {
                    return Err(spec_err(loc, format!("target {f:?} listed as a feature")));
                }
                if !features.insert(f.as_str()) {
                    return Err(spec_err(loc, format!("feature {f:?} listed twice")));
                }
            }
        }
        Ok(())
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    /// Raw feature names in concept order.
    pub fn feature_names(&self) -> impl Iterator<Item = (usize, &str)> {
        self.concepts
            .iter()
            .enumerate()
            .flat_map(|(i, g)| g.features.iter().map(move |f| (i, f.as_str())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const COMPAS: &str = r#"{
        "task": "classification",
        "target": "two_year_recid",
        "concepts": [
            {"name": "demographic", "features": ["age", "sex", "race"]},
            {"name": "criminal_history", "features": ["priors_count", "charge_degree", "custody_length"]}
        ]
    }"#;

    #[test]
    fn parses_two_group_spec() {
        let spec = ConceptSpec::parse(COMPAS).unwrap();
        assert_eq!(spec.concept_count(), 2);
        assert_eq!(spec.task, Task::Classification);
        assert_eq!(spec.feature_names().count(), 6);
    }

    #[test]
    fn single_group_is_valid() {
        let spec = ConceptSpec::parse(
            r#"{"task":"regression","target":"y","concepts":[{"name":"all","features":["a","b","c"]}]}"#,
        )
        .unwrap();
        assert_eq!(spec.concept_count(), 1);
    }

    #[test]
    fn duplicate_feature_is_named() {
        let err = ConceptSpec::parse(
            r#"{"task":"regression","target":"y","concepts":[
                {"name":"g1","features":["a","b"]},{"name":"g2","features":["c","a"]}]}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"a\"") && msg.contains("concepts[1].features[1]"), "{msg}");
        assert_eq!(err.class(), "SPEC_INVALID");
    }

    #[test]
    fn rejects_empty_group_unknown_task_and_target_feature() {
        let empty = r#"{"task":"regression","target":"y","concepts":[{"name":"g","features":[]}]}"#;
        assert!(ConceptSpec::parse(empty).unwrap_err().to_string().contains("concepts[0].features"));
        let task = r#"{"task":"ranking","target":"y","concepts":[{"name":"g","features":["a"]}]}"#;
        assert!(ConceptSpec::parse(task).unwrap_err().to_string().contains("task"));
        let tgt = r#"{"task":"regression","target":"y","concepts":[{"name":"g","features":["y"]}]}"#;
        assert!(ConceptSpec::parse(tgt).is_err());
        assert!(ConceptSpec::parse("{not json").is_err());
    }
}
