use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Taxonomy shipped with the crate; corpora carry their own copy in `taxonomy.json`.
pub const DEFAULT_TAXONOMY_JSON: &str = include_str!("../../data/taxonomy.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaxonomyFile {
    version: String,
    categories: Vec<CategoryEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryEntry {
    main: String,
    sub: Vec<String>,
}

/// Closed set of (main, sub) bug categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    pub version: String,
    categories: BTreeMap<String, BTreeSet<String>>,
}

impl Taxonomy {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: TaxonomyFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut categories: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for entry in file.categories {
            if entry.main.is_empty() {
                return Err("empty main category name".into());
            }
            if entry.sub.is_empty() {
                return Err(format!("main category {:?} has no subcategories", entry.main));
            }
            let subs = categories.entry(entry.main.clone()).or_default();
            if !subs.is_empty() {
                return Err(format!("main category {:?} listed twice", entry.main));
            }
            for sub in entry.sub {
                if !subs.insert(sub.clone()) {
                    return Err(format!("subcategory {:?} repeated under {:?}", sub, entry.main));
                }
            }
        }
        if categories.is_empty() {
            return Err("taxonomy lists no categories".into());
        }
        Ok(Self { version: file.version, categories })
    }

    pub fn contains(&self, main: &str, sub: &str) -> bool {
        self.categories.get(main).is_some_and(|s| s.contains(sub))
    }

    pub fn main_categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn main_count(&self) -> usize {
        self.categories.len()
    }

    pub fn sub_count(&self) -> usize {
        self.categories.values().map(BTreeSet::len).sum()
    }
}

impl Default for Taxonomy {
    fn default() -> Self {
        Self::from_json(DEFAULT_TAXONOMY_JSON).expect("bundled taxonomy is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_taxonomy_has_7_main_30_sub() {
        let t = Taxonomy::default();
        assert_eq!(t.main_count(), 7);
        assert_eq!(t.sub_count(), 30);
        assert!(t.contains("Output", "Format"));
        assert!(!t.contains("Output", "Nonsense"));
    }

    #[test]
    fn rejects_duplicates_and_empties() {
        assert!(Taxonomy::from_json(r#"{"version":"x","categories":[]}"#).is_err());
        assert!(Taxonomy::from_json(
            r#"{"version":"x","categories":[{"main":"A","sub":["a"]},{"main":"A","sub":["b"]}]}"#
        )
        .is_err());
        assert!(Taxonomy::from_json(r#"{"version":"x","categories":[{"main":"A","sub":["a","a"]}]}"#).is_err());
    }
}
