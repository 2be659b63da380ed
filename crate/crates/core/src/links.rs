//! Reference-link detection between collections.
//!
//! Detection is a refinement applied when a model is presented: counters and
//! signatures always hold structural types, so switching modes never changes
//! a count. Known collections are those present in the model being refined.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::state::SchemaModel;
use crate::types::{AttrPath, TypeDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkMode {
    /// `<x>_id`, `<x>Id`, `<x>_ids`, `<x>Ids` naming a known collection.
    #[default]
    Naming,
    /// Naming, plus ObjectId fields named after a known collection.
    Oid,
    Off,
}

impl FromStr for LinkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naming" => Ok(LinkMode::Naming),
            "oid" => Ok(LinkMode::Oid),
            "off" => Ok(LinkMode::Off),
            other => Err(format!("unknown link mode `{other}` (expected naming, oid or off)")),
        }
    }
}

impl fmt::Display for LinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkMode::Naming => "naming",
            LinkMode::Oid => "oid",
            LinkMode::Off => "off",
        })
    }
}

fn is_id_scalar(ty: &TypeDescriptor) -> bool {
    matches!(ty, TypeDescriptor::String | TypeDescriptor::Integer | TypeDescriptor::ObjectId)
}

/// Singular and plural spellings of a lowercase stem.
fn spellings(stem: &str) -> Vec<String> {
    let mut out = vec![stem.to_string(), format!("{stem}s"), format!("{stem}es")];
    if let Some(base) = stem.strip_suffix("ies") {
        out.push(format!("{base}y"));
    }
    if let Some(base) = stem.strip_suffix("es") {
        out.push(base.to_string());
    }
    if let Some(base) = stem.strip_suffix('s') {
        out.push(base.to_string());
    }
    if let Some(base) = stem.strip_suffix('y') {
        out.push(format!("{base}ies"));
    }
    out
}

fn match_collection<'a>(stem: &str, known: &'a BTreeSet<String>) -> Option<&'a String> {
    if stem.is_empty() {
        return None;
    }
    let forms = spellings(stem);
    known.iter().find(|name| {
        let lower = name.to_lowercase();
        forms.contains(&lower)
    })
}

fn id_stem(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let ends_with = |suffix: &[u8]| bytes.len() >= suffix.len() && bytes[bytes.len() - suffix.len()..].eq_ignore_ascii_case(suffix);
    if !ends_with(b"id") && !ends_with(b"ids") {
        return None;
    }
    let lower = name.to_lowercase();
    ["_ids", "_id", "ids", "id"]
        .iter()
        .find_map(|suffix| lower.strip_suffix(suffix))
        .map(str::to_string)
}

/// Returns the reference type that should replace `ty` at `path`, if any.
///
/// The reference is multivalued when the field holds an array.
pub fn detect_reference(
    path: &AttrPath,
    ty: &TypeDescriptor,
    known: &BTreeSet<String>,
    mode: LinkMode,
) -> Option<TypeDescriptor> {
    if mode == LinkMode::Off {
        return None;
    }
    let name = path.last_field()?;
    let multivalued = match ty {
        t if is_id_scalar(t) => false,
        TypeDescriptor::Array(elements) if elements.iter().all(is_id_scalar) => true,
        _ => return None,
    };
    let by_name = id_stem(name).and_then(|stem| match_collection(&stem, known));
    let target = match (by_name, mode) {
        (Some(target), _) => target,
        (None, LinkMode::Oid) => {
            let holds_oids = match ty {
                TypeDescriptor::ObjectId => true,
                TypeDescriptor::Array(elements) => elements.contains(&TypeDescriptor::ObjectId) && elements.len() == 1,
                _ => false,
            };
            if !holds_oids {
                return None;
            }
            match_collection(&name.to_lowercase(), known)?
        }
        (None, _) => return None,
    };
    Some(TypeDescriptor::Reference { target: target.clone(), multivalued })
}

/// Applies [`detect_reference`] to every type of every entry.
pub fn refine_model(mut refined: SchemaModel, mode: LinkMode) -> SchemaModel {
    if mode == LinkMode::Off {
        return refined;
    }
    let known: BTreeSet<String> = refined.collections.keys().cloned().collect();
    for schema in refined.collections.values_mut() {
        for (path, types) in schema.attributes.iter_mut() {
            if types.iter().any(|t| detect_reference(path, t, &known, mode).is_some()) {
                *types = types
                    .iter()
                    .map(|t| detect_reference(path, t, &known, mode).unwrap_or_else(|| t.clone()))
                    .collect();
            }
        }
    }
    refined
}

#[cfg(test)]
mod tests {
    use super::*;

    fn known(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn p(s: &str) -> AttrPath {
        s.parse().unwrap()
    }

    #[test]
    fn monovalued_by_suffix() {
        let r = detect_reference(&p("doctor_id"), &TypeDescriptor::String, &known(&["Doctors"]), LinkMode::Naming);
        assert_eq!(r, Some(TypeDescriptor::Reference { target: "Doctors".into(), multivalued: false }));
        let r = detect_reference(&p("doctorId"), &TypeDescriptor::Integer, &known(&["Doctors"]), LinkMode::Naming);
        assert_eq!(r.unwrap().to_string(), "Ref(Doctors)");
    }

    #[test]
    fn multivalued_from_array() {
        let ty = TypeDescriptor::Array([TypeDescriptor::String].into());
        let r = detect_reference(&p("antecedent_ids"), &ty, &known(&["Antecedents", "Patients"]), LinkMode::Naming);
        assert_eq!(r.unwrap().to_string(), "Ref[](Antecedents)");
        let empty = TypeDescriptor::Array(BTreeSet::new());
        let r = detect_reference(&p("antecedent_ids"), &empty, &known(&["Antecedents"]), LinkMode::Naming);
        assert_eq!(r.unwrap().to_string(), "Ref[](Antecedents)");
    }

    #[test]
    fn off_mode_and_non_matches() {
        let k = known(&["Doctors", "Categories"]);
        assert_eq!(detect_reference(&p("doctor_id"), &TypeDescriptor::String, &k, LinkMode::Off), None);
        assert_eq!(detect_reference(&p("nurse_id"), &TypeDescriptor::String, &k, LinkMode::Naming), None);
        assert_eq!(detect_reference(&p("_id"), &TypeDescriptor::String, &k, LinkMode::Naming), None);
        assert_eq!(detect_reference(&p("doctor_id"), &TypeDescriptor::Document, &k, LinkMode::Naming), None);
        assert_eq!(detect_reference(&p("doctor_id"), &TypeDescriptor::Null, &k, LinkMode::Naming), None);
        let r = detect_reference(&p("category_id"), &TypeDescriptor::String, &k, LinkMode::Naming);
        assert_eq!(r.unwrap().to_string(), "Ref(Categories)");
    }

    #[test]
    fn oid_mode_uses_field_name() {
        let k = known(&["Doctors"]);
        assert_eq!(detect_reference(&p("doctor"), &TypeDescriptor::ObjectId, &k, LinkMode::Naming), None);
        let r = detect_reference(&p("doctor"), &TypeDescriptor::ObjectId, &k, LinkMode::Oid);
        assert_eq!(r.unwrap().to_string(), "Ref(Doctors)");
        let ty = TypeDescriptor::Array([TypeDescriptor::ObjectId].into());
        let r = detect_reference(&p("team.doctors"), &ty, &k, LinkMode::Oid);
        assert_eq!(r.unwrap().to_string(), "Ref[](Doctors)");
        assert_eq!(detect_reference(&p("doctor"), &TypeDescriptor::String, &k, LinkMode::Oid), None);
    }

    #[test]
    fn nested_paths_use_last_segment() {
        let k = known(&["Doctors"]);
        let r = detect_reference(&p("treatments[].doctor_id"), &TypeDescriptor::String, &k, LinkMode::Naming);
        assert_eq!(r.unwrap().to_string(), "Ref(Doctors)");
    }
}
