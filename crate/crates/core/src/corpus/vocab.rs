use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-word class for "not part of any trigger".
pub const NA: &str = "NA";
pub const NA_INDEX: usize = 0;
/// Prediction-only placeholder for out-of-ontology event types.
pub const NONE: &str = "NONE";

/// Ordered event types. Label index 0 is `NA`; event type `k` has label `k + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct EventTypeVocabulary {
    types: Vec<String>,
}

impl EventTypeVocabulary {
    pub fn new(types: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for t in &types {
            if t == NA || t == NONE {
                return Err(Error::InvalidVocabulary(format!("{t} is reserved")));
            }
            if t.is_empty() {
                return Err(Error::InvalidVocabulary("empty type name".into()));
            }
            if !seen.insert(t.as_str()) {
                return Err(Error::InvalidVocabulary(format!("duplicate type {t}")));
            }
        }
        Ok(EventTypeVocabulary { types })
    }

    /// Sorted union of two vocabularies.
    pub fn union(&self, other: &EventTypeVocabulary) -> EventTypeVocabulary {
        let mut all: Vec<String> = self.types.iter().chain(&other.types).cloned().collect();
        all.sort();
        all.dedup();
        EventTypeVocabulary { types: all }
    }

    pub fn event_types(&self) -> &[String] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    /// Number of classifier outputs: event types plus `NA`.
    pub fn num_labels(&self) -> usize {
        self.types.len() + 1
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.iter().any(|t| t == name)
    }

    pub fn label_of(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name).map(|p| p + 1)
    }

    pub fn name_of(&self, label: usize) -> Option<&str> {
        if label == NA_INDEX {
            Some(NA)
        } else {
            self.types.get(label - 1).map(String::as_str)
        }
    }
}

impl TryFrom<Vec<String>> for EventTypeVocabulary {
    type Error = Error;

    fn try_from(types: Vec<String>) -> Result<Self> {
        EventTypeVocabulary::new(types)
    }
}

impl From<EventTypeVocabulary> for Vec<String> {
    fn from(v: EventTypeVocabulary) -> Self {
        v.types
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_and_duplicate_names_rejected() {
        assert!(EventTypeVocabulary::new(vec!["NA".into()]).is_err());
        assert!(EventTypeVocabulary::new(vec!["NONE".into()]).is_err());
        assert!(EventTypeVocabulary::new(vec!["A".into(), "A".into()]).is_err());
    }

    #[test]
    fn label_indices_start_after_na() {
        let v = EventTypeVocabulary::new(vec!["Death".into(), "Attack".into()]).unwrap();
        assert_eq!(v.num_labels(), 3);
        assert_eq!(v.label_of("Death"), Some(1));
        assert_eq!(v.name_of(0), Some(NA));
        assert_eq!(v.name_of(2), Some("Attack"));
        assert_eq!(v.name_of(3), None);
        assert_eq!(v.label_of("NONE"), None);
    }
}
