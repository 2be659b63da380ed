//! Structural differences between two schema models.

use std::fmt::Write;

use serde::Serialize;

use crate::state::{CollectionSchema, SchemaModel, TypeSet};
use crate::types::{AttrPath, TypeDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeEntry {
    pub path: AttrPath,
    pub types: Vec<TypeDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "change", rename_all = "kebab-case")]
pub enum Change {
    CollectionAdded { collection: String, attributes: Vec<AttributeEntry> },
    CollectionRemoved { collection: String, attributes: Vec<AttributeEntry> },
    AttributeAdded { collection: String, path: AttrPath, types: Vec<TypeDescriptor> },
    AttributeRemoved { collection: String, path: AttrPath, types: Vec<TypeDescriptor> },
    TypesChanged { collection: String, path: AttrPath, added: Vec<TypeDescriptor>, removed: Vec<TypeDescriptor> },
}

/// Ordered list of changes turning one model into another.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ModelDiff {
    pub changes: Vec<Change>,
}

fn entries(schema: &CollectionSchema) -> Vec<AttributeEntry> {
    schema
        .attributes
        .iter()
        .map(|(path, types)| AttributeEntry { path: path.clone(), types: types.iter().cloned().collect() })
        .collect()
}

fn type_list(types: &[TypeDescriptor]) -> String {
    types.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Changes from `a` to `b`, grouped by collection in name order.
pub fn diff_models(a: &SchemaModel, b: &SchemaModel) -> ModelDiff {
    let mut changes = Vec::new();
    let names: std::collections::BTreeSet<&String> = a.collections.keys().chain(b.collections.keys()).collect();
    for name in names {
        match (a.collections.get(name), b.collections.get(name)) {
            (None, Some(added)) => {
                changes.push(Change::CollectionAdded { collection: name.clone(), attributes: entries(added) })
            }
            (Some(removed), None) => {
                changes.push(Change::CollectionRemoved { collection: name.clone(), attributes: entries(removed) })
            }
            (Some(old), Some(new)) => {
                let paths: std::collections::BTreeSet<&AttrPath> =
                    old.attributes.keys().chain(new.attributes.keys()).collect();
                for path in paths {
                    let change = match (old.attributes.get(path), new.attributes.get(path)) {
                        (None, Some(t)) => Change::AttributeAdded {
                            collection: name.clone(),
                            path: path.clone(),
                            types: t.iter().cloned().collect(),
                        },
                        (Some(t), None) => Change::AttributeRemoved {
                            collection: name.clone(),
                            path: path.clone(),
                            types: t.iter().cloned().collect(),
                        },
                        (Some(x), Some(y)) if x != y => Change::TypesChanged {
                            collection: name.clone(),
                            path: path.clone(),
                            added: y.difference(x).cloned().collect(),
                            removed: x.difference(y).cloned().collect(),
                        },
                        _ => continue,
                    };
                    changes.push(change);
                }
            }
            (None, None) => unreachable!(),
        }
    }
    ModelDiff { changes }
}

impl ModelDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// Applies the changes to `model`. `diff_models(a, b).apply_to(a) == b`
    /// up to the model id.
    pub fn apply_to(&self, model: &SchemaModel) -> SchemaModel {
        let mut out = model.clone();
        for change in &self.changes {
            match change {
                Change::CollectionAdded { collection, attributes } => {
                    let schema = CollectionSchema {
                        attributes: attributes
                            .iter()
                            .map(|e| (e.path.clone(), e.types.iter().cloned().collect::<TypeSet>()))
                            .collect(),
                    };
                    out.collections.insert(collection.clone(), schema);
                }
                Change::CollectionRemoved { collection, .. } => {
                    out.collections.remove(collection);
                }
                Change::AttributeAdded { collection, path, types } => {
                    out.collections
                        .entry(collection.clone())
                        .or_default()
                        .attributes
                        .insert(path.clone(), types.iter().cloned().collect());
                }
                Change::AttributeRemoved { collection, path, .. } => {
                    if let Some(schema) = out.collections.get_mut(collection) {
                        schema.attributes.remove(path);
                    }
                }
                Change::TypesChanged { collection, path, added, removed } => {
                    let types = out.collections.entry(collection.clone()).or_default().attributes.entry(path.clone()).or_default();
                    for t in removed {
                        types.remove(t);
                    }
                    types.extend(added.iter().cloned());
                }
            }
        }
        out
    }

    /// One line per change: `+` added, `-` removed, `~` type set changed.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for change in &self.changes {
            match change {
                Change::CollectionAdded { collection, attributes } => {
                    writeln!(out, "+ collection {collection}").unwrap();
                    for e in attributes {
                        writeln!(out, "+ {collection}.{}: {}", e.path, type_list(&e.types)).unwrap();
                    }
                }
                Change::CollectionRemoved { collection, attributes } => {
                    writeln!(out, "- collection {collection}").unwrap();
                    for e in attributes {
                        writeln!(out, "- {collection}.{}: {}", e.path, type_list(&e.types)).unwrap();
                    }
                }
                Change::AttributeAdded { collection, path, types } => {
                    writeln!(out, "+ {collection}.{path}: {}", type_list(types)).unwrap();
                }
                Change::AttributeRemoved { collection, path, types } => {
                    writeln!(out, "- {collection}.{path}: {}", type_list(types)).unwrap();
                }
                Change::TypesChanged { collection, path, added, removed } => {
                    let mut parts: Vec<String> = added.iter().map(|t| format!("+{t}")).collect();
                    parts.extend(removed.iter().map(|t| format!("-{t}")));
                    writeln!(out, "~ {collection}.{path}: {}", parts.join(" ")).unwrap();
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(entries: &[(&str, &str, &[&str])]) -> SchemaModel {
        let mut m = SchemaModel::default();
        for (coll, path, types) in entries {
            m.collections
                .entry(coll.to_string())
                .or_default()
                .attributes
                .insert(path.parse().unwrap(), types.iter().map(|t| t.parse().unwrap()).collect());
        }
        m
    }

    #[test]
    fn identical_models_have_empty_diff() {
        let a = model(&[("Patients", "age", &["Integer"])]);
        assert!(diff_models(&a, &a).is_empty());
        assert_eq!(diff_models(&a, &a).to_text(), "");
    }

    #[test]
    fn type_added_delta() {
        let a = model(&[("Patients", "age", &["Integer"])]);
        let b = model(&[("Patients", "age", &["Integer", "String"])]);
        let d = diff_models(&a, &b);
        assert_eq!(
            d.changes,
            [Change::TypesChanged {
                collection: "Patients".into(),
                path: "age".parse().unwrap(),
                added: vec![TypeDescriptor::String],
                removed: vec![],
            }]
        );
        assert_eq!(d.to_text(), "~ Patients.age: +String\n");
        assert_eq!(d.apply_to(&a), b);
    }

    #[test]
    fn collection_only_in_b() {
        let a = model(&[("Patients", "age", &["Integer"])]);
        let b = model(&[("Patients", "age", &["Integer"]), ("Doctors", "name", &["String"])]);
        let d = diff_models(&a, &b);
        assert_eq!(d.changes.len(), 1);
        assert!(matches!(&d.changes[0], Change::CollectionAdded { collection, .. } if collection == "Doctors"));
        assert_eq!(d.apply_to(&a), b);
        assert_eq!(diff_models(&b, &a).apply_to(&b), a);
    }

    #[test]
    fn json_form() {
        let a = model(&[("P", "age", &["Integer"]), ("P", "w", &["Double"])]);
        let b = model(&[("P", "age", &["Integer"]), ("P", "x", &["Ref(Doctors)"])]);
        let json = serde_json::to_string(&diff_models(&a, &b)).unwrap();
        assert_eq!(
            json,
            r#"{"changes":[{"change":"attribute-removed","collection":"P","path":"w","types":["Double"]},{"change":"attribute-added","collection":"P","path":"x","types":[{"ref":"Doctors","multi":false}]}]}"#
        );
    }
}
