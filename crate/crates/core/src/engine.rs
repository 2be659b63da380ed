//! Applies mutation queries to an [`EngineState`].
//!
//! Inserts add one occurrence per flattened `(path, type)` pair (R1/R2),
//! deletes remove the pairs recorded in the document's signature (R3/R4),
//! and each update operator is classified against the signature:
//!
//! | operator                  | rule | effect                                   |
//! |---------------------------|------|------------------------------------------|
//! | `$set` on an absent path  | R5   | add pairs, creating intermediate levels  |
//! | `$unset` on a present path| R6   | remove the path and its descendants      |
//! | `$rename`                 | R7   | move the subtree's counts to the new name|
//! | `$set` on a present path  | R8   | swap the pairs whose type changed        |
//!
//! A counter reaching zero removes its model pair; a new counter creates one.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::parser::{MutationQuery, QueryKind, UpdateOp};
use crate::state::EngineState;
use crate::types::{flatten_value_into, AttrPath, Signature, TypeDescriptor, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("document `{id}` already exists in `{collection}`")]
    DuplicateDocumentId { collection: String, id: String },
}

/// Transformation rule responsible for an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    InsertR1R2,
    DeleteR3R4,
    AddFieldR5,
    RemoveFieldR6,
    RenameR7,
    ChangeTypeR8,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::InsertR1R2 => "R1/R2",
            Rule::DeleteR3R4 => "R3/R4",
            Rule::AddFieldR5 => "R5",
            Rule::RemoveFieldR6 => "R6",
            Rule::RenameR7 => "R7",
            Rule::ChangeTypeR8 => "R8",
        })
    }
}

impl Serialize for Rule {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Action {
    DocumentAdded,
    DocumentRemoved,
    Increment {
        rule: Rule,
        path: AttrPath,
        #[serde(rename = "type")]
        ty: TypeDescriptor,
        count: u64,
    },
    Decrement {
        rule: Rule,
        path: AttrPath,
        #[serde(rename = "type")]
        ty: TypeDescriptor,
        count: u64,
    },
    PairCreated {
        path: AttrPath,
        #[serde(rename = "type")]
        ty: TypeDescriptor,
    },
    PairRemoved {
        path: AttrPath,
        #[serde(rename = "type")]
        ty: TypeDescriptor,
    },
    CollectionCreated,
    CollectionRemoved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "warning", rename_all = "kebab-case")]
pub enum Warning {
    SynthesizedId { id: String },
    UnknownCollection,
    UnknownDocument,
    FieldAbsent { op: &'static str, path: AttrPath },
    /// A `$set` path runs through a field that is not a document.
    PathBlocked { path: AttrPath, at: AttrPath },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::SynthesizedId { id } => write!(f, "no _id given, using `{id}`"),
            Warning::UnknownCollection => f.write_str("unknown collection"),
            Warning::UnknownDocument => f.write_str("unknown document"),
            Warning::FieldAbsent { op, path } => write!(f, "{op} of absent field `{path}` skipped"),
            Warning::PathBlocked { path, at } => write!(f, "$set of `{path}` skipped: `{at}` is not a document"),
        }
    }
}

/// What one query did to the state. Replaying the actions on the prior
/// state reproduces the posterior state (see [`EngineState::replay`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApplyReport {
    #[serde(serialize_with = "serialize_kind")]
    pub kind: QueryKind,
    pub collection: String,
    pub id: String,
    pub actions: Vec<Action>,
    pub warnings: Vec<Warning>,
}

fn serialize_kind<S: Serializer>(kind: &QueryKind, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.collect_str(kind)
}

impl ApplyReport {
    fn new(kind: QueryKind, collection: &str, id: &str) -> Self {
        ApplyReport { kind, collection: collection.to_string(), id: id.to_string(), actions: vec![], warnings: vec![] }
    }

    /// True when the query left model, metadata and signatures untouched.
    pub fn is_noop(&self) -> bool {
        self.actions.is_empty()
    }
}

fn type_at<'a>(signature: &'a Signature, path: &AttrPath) -> Option<&'a TypeDescriptor> {
    signature.iter().find(|(p, _)| p == path).map(|(_, t)| t)
}

fn subtree(signature: &Signature, root: &AttrPath) -> Vec<(AttrPath, TypeDescriptor)> {
    signature.iter().filter(|(p, _)| p.is_within(root)).cloned().collect()
}

/// Working context for one query: the document's signature plus the report.
struct DocumentEdit<'a> {
    state: &'a mut EngineState,
    signature: Signature,
    report: ApplyReport,
}

impl DocumentEdit<'_> {
    fn add(&mut self, rule: Rule, path: AttrPath, ty: TypeDescriptor) {
        let effect = self.state.increment(&self.report.collection, &path, &ty);
        if effect.collection_changed {
            self.report.actions.push(Action::CollectionCreated);
        }
        if effect.pair_changed {
            self.report.actions.push(Action::PairCreated { path: path.clone(), ty: ty.clone() });
        }
        self.report.actions.push(Action::Increment { rule, path: path.clone(), ty: ty.clone(), count: effect.count });
        self.signature.insert((path, ty));
    }

    fn remove(&mut self, rule: Rule, path: AttrPath, ty: TypeDescriptor) {
        let effect = self.state.decrement(&self.report.collection, &path, &ty);
        self.report.actions.push(Action::Decrement { rule, path: path.clone(), ty: ty.clone(), count: effect.count });
        if effect.pair_changed {
            self.report.actions.push(Action::PairRemoved { path: path.clone(), ty: ty.clone() });
        }
        if effect.collection_changed {
            self.report.actions.push(Action::CollectionRemoved);
        }
        self.signature.remove(&(path, ty));
    }

    fn set(&mut self, path: &AttrPath, value: &Value) {
        let mut new_pairs = Signature::new();
        for prefix in path.proper_prefixes() {
            match type_at(&self.signature, &prefix) {
                None => {
                    new_pairs.insert((prefix, TypeDescriptor::Document));
                }
                Some(TypeDescriptor::Document) => {}
                Some(_) => {
                    self.report.warnings.push(Warning::PathBlocked { path: path.clone(), at: prefix });
                    return;
                }
            }
        }
        flatten_value_into(path.clone(), value, &mut new_pairs);
        let old_pairs = subtree(&self.signature, path);
        let rule = if old_pairs.is_empty() { Rule::AddFieldR5 } else { Rule::ChangeTypeR8 };
        for pair in old_pairs.iter().filter(|pair| !new_pairs.contains(*pair)) {
            self.remove(rule, pair.0.clone(), pair.1.clone());
        }
        for (p, t) in new_pairs {
            if !self.signature.contains(&(p.clone(), t.clone())) {
                self.add(rule, p, t);
            }
        }
    }

    fn unset(&mut self, path: &AttrPath) {
        let old_pairs = subtree(&self.signature, path);
        if old_pairs.is_empty() {
            self.report.warnings.push(Warning::FieldAbsent { op: "$unset", path: path.clone() });
        }
        for (p, t) in old_pairs {
            self.remove(Rule::RemoveFieldR6, p, t);
        }
    }

    fn rename(&mut self, path: &AttrPath, new_name: &str) {
        let moved = subtree(&self.signature, path);
        if moved.is_empty() {
            self.report.warnings.push(Warning::FieldAbsent { op: "$rename", path: path.clone() });
            return;
        }
        let dest = path.with_last(new_name);
        for (p, t) in subtree(&self.signature, &dest) {
            self.remove(Rule::RenameR7, p, t);
        }
        for (p, t) in &moved {
            self.remove(Rule::RenameR7, p.clone(), t.clone());
        }
        for (p, t) in moved {
            self.add(Rule::RenameR7, p.reroot(path, &dest), t);
        }
    }
}

impl EngineState {
    /// Applies one query. On error the state is unchanged.
    pub fn apply(&mut self, query: &MutationQuery) -> Result<ApplyReport, ApplyError> {
        let report = match query {
            MutationQuery::Insert { collection, id, fields } => self.apply_insert(collection, id.as_deref(), fields)?,
            MutationQuery::Delete { collection, id } => self.apply_delete(collection, id),
            MutationQuery::Update { collection, id, ops } => self.apply_update(collection, id, ops),
        };
        self.applied_count += 1;
        #[cfg(feature = "fault-injection")]
        fault::inject(self, &report.collection);
        Ok(report)
    }

    fn apply_insert(
        &mut self,
        collection: &str,
        id: Option<&str>,
        fields: &[(String, Value)],
    ) -> Result<ApplyReport, ApplyError> {
        let mut warnings = Vec::new();
        let id = match id {
            Some(id) => id.to_string(),
            None => {
                let id = format!("_gen{}", self.applied_count);
                warnings.push(Warning::SynthesizedId { id: id.clone() });
                id
            }
        };
        if self.signatures.contains(collection, &id) {
            return Err(ApplyError::DuplicateDocumentId { collection: collection.to_string(), id });
        }
        let mut pairs = Signature::new();
        for (name, value) in fields {
            flatten_value_into(AttrPath::field(name.as_str()), value, &mut pairs);
        }
        let mut report = ApplyReport::new(QueryKind::Insert, collection, &id);
        report.warnings = warnings;
        report.actions.push(Action::DocumentAdded);
        let mut edit = DocumentEdit { state: self, signature: Signature::new(), report };
        for (path, ty) in pairs {
            edit.add(Rule::InsertR1R2, path, ty);
        }
        let DocumentEdit { signature, report, .. } = edit;
        self.signatures.insert(collection, id, signature);
        Ok(report)
    }

    fn apply_delete(&mut self, collection: &str, id: &str) -> ApplyReport {
        let mut report = ApplyReport::new(QueryKind::Delete, collection, id);
        let Some(signature) = self.signatures.remove(collection, id) else {
            report.warnings.push(self.missing_document_warning(collection));
            return report;
        };
        let mut edit = DocumentEdit { state: self, signature: signature.clone(), report };
        for (path, ty) in signature {
            edit.remove(Rule::DeleteR3R4, path, ty);
        }
        let mut report = edit.report;
        report.actions.push(Action::DocumentRemoved);
        report
    }

    fn apply_update(&mut self, collection: &str, id: &str, ops: &[UpdateOp]) -> ApplyReport {
        let mut report = ApplyReport::new(QueryKind::Update, collection, id);
        let Some(signature) = self.signatures.get(collection, id).cloned() else {
            report.warnings.push(self.missing_document_warning(collection));
            return report;
        };
        let mut edit = DocumentEdit { state: self, signature, report };
        for op in ops {
            match op {
                UpdateOp::Set { path, value } => edit.set(path, value),
                UpdateOp::Unset { path } => edit.unset(path),
                UpdateOp::Rename { path, new_name } => edit.rename(path, new_name),
            }
        }
        let DocumentEdit { signature, report, .. } = edit;
        *self.signatures.get_mut(collection, id).expect("document still present") = signature;
        report
    }

    fn missing_document_warning(&self, collection: &str) -> Warning {
        if self.signatures.documents(collection).next().is_none() {
            Warning::UnknownCollection
        } else {
            Warning::UnknownDocument
        }
    }

    /// Re-executes the counter and document actions of a report. Model
    /// changes follow from the counters.
    pub fn replay(&mut self, report: &ApplyReport) {
        let collection = report.collection.as_str();
        for action in &report.actions {
            match action {
                Action::DocumentAdded => {
                    self.signatures.insert(collection, report.id.clone(), Signature::new());
                }
                Action::DocumentRemoved => {
                    self.signatures.remove(collection, &report.id);
                }
                Action::Increment { path, ty, .. } => {
                    self.increment(collection, path, ty);
                    if let Some(sig) = self.signatures.get_mut(collection, &report.id) {
                        sig.insert((path.clone(), ty.clone()));
                    }
                }
                Action::Decrement { path, ty, .. } => {
                    self.decrement(collection, path, ty);
                    if let Some(sig) = self.signatures.get_mut(collection, &report.id) {
                        sig.remove(&(path.clone(), ty.clone()));
                    }
                }
                Action::PairCreated { .. }
                | Action::PairRemoved { .. }
                | Action::CollectionCreated
                | Action::CollectionRemoved => {}
            }
        }
        self.applied_count += 1;
    }
}

#[cfg(feature = "fault-injection")]
mod fault {
    use std::sync::OnceLock;

    use crate::state::EngineState;

    /// `Q2M_INJECT_FAULT_AT=<n>`: after the n-th applied query, one counter
    /// of the touched collection is bumped without a matching document.
    fn fault_at() -> Option<u64> {
        static AT: OnceLock<Option<u64>> = OnceLock::new();
        *AT.get_or_init(|| std::env::var("Q2M_INJECT_FAULT_AT").ok()?.parse().ok())
    }

    pub(super) fn inject(state: &mut EngineState, collection: &str) {
        if fault_at() != Some(state.applied_count) {
            return;
        }
        let counters = match state.metadata.collections.get_mut(collection) {
            Some(c) => c,
            None => match state.metadata.collections.values_mut().next() {
                Some(c) => c,
                None => return,
            },
        };
        if let Some(count) = counters.values_mut().next() {
            *count += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::links::LinkMode;
    use crate::parser::parse_statement;

    fn run(state: &mut EngineState, text: &str) -> ApplyReport {
        state.apply(&parse_statement(text).unwrap()).unwrap()
    }

    fn count(state: &EngineState, coll: &str, path: &str, ty: TypeDescriptor) -> u64 {
        state.metadata().count(coll, &path.parse().unwrap(), &ty)
    }

    fn types(state: &EngineState, coll: &str, path: &str) -> Vec<String> {
        state
            .model()
            .types(coll, &path.parse().unwrap())
            .map(|t| t.iter().map(ToString::to_string).collect())
            .unwrap_or_default()
    }

    #[test]
    fn insert_creates_collection_and_pairs() {
        let mut s = EngineState::new();
        let r = run(&mut s, r#"db.Patients.insertOne({_id: "p1", name: "DUPONT David", age: 42})"#);
        assert!(r.actions.contains(&Action::CollectionCreated));
        assert_eq!(types(&s, "Patients", "name"), ["String"]);
        assert_eq!(types(&s, "Patients", "age"), ["Integer"]);
        assert_eq!(count(&s, "Patients", "name", TypeDescriptor::String), 1);
        assert_eq!(s.applied_count(), 1);

        run(&mut s, r#"db.Patients.insertOne({_id: "p2", name: "X", weight: 70.5})"#);
        assert_eq!(types(&s, "Patients", "weight"), ["Double"]);
        assert_eq!(count(&s, "Patients", "name", TypeDescriptor::String), 2);
        assert_eq!(count(&s, "Patients", "age", TypeDescriptor::Integer), 1);
        assert_eq!(count(&s, "Patients", "weight", TypeDescriptor::Double), 1);

        run(&mut s, r#"db.Patients.deleteOne({_id: "p2"})"#);
        assert!(types(&s, "Patients", "weight").is_empty());
        assert_eq!(count(&s, "Patients", "name", TypeDescriptor::String), 1);
        assert_eq!(s.check_invariants(), Ok(()));
    }

    #[test]
    fn nested_insert_counts_both_levels() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.Patients.insertOne({_id: "p1", address: {city: "Toulouse"}})"#);
        assert_eq!(count(&s, "Patients", "address", TypeDescriptor::Document), 1);
        assert_eq!(count(&s, "Patients", "address.city", TypeDescriptor::String), 1);
    }

    #[test]
    fn duplicate_id_is_rejected_atomically() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", a: 1})"#);
        let before = s.clone();
        let err = s.apply(&parse_statement(r#"db.P.insertOne({_id: "p1", b: 1})"#).unwrap()).unwrap_err();
        assert_eq!(err, ApplyError::DuplicateDocumentId { collection: "P".into(), id: "p1".into() });
        assert_eq!(s, before);
    }

    #[test]
    fn missing_id_is_synthesized() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "x", a: 1})"#);
        let r = run(&mut s, "db.P.insertOne({a: 2})");
        assert_eq!(r.id, "_gen1");
        assert_eq!(r.warnings, [Warning::SynthesizedId { id: "_gen1".into() }]);
        assert!(s.signatures().contains("P", "_gen1"));
    }

    #[test]
    fn unknown_targets_are_warnings() {
        let mut s = EngineState::new();
        let r = run(&mut s, r#"db.P.deleteOne({_id: "nope"})"#);
        assert_eq!(r.warnings, [Warning::UnknownCollection]);
        run(&mut s, r#"db.P.insertOne({_id: "p1", a: 1})"#);
        let before = s.export_model(LinkMode::Naming);
        let r = run(&mut s, r#"db.P.updateOne({_id: "nope"}, {$set: {b: 1}})"#);
        assert_eq!(r.warnings, [Warning::UnknownDocument]);
        assert!(r.is_noop());
        let r = run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$unset: {zz: 1}, $rename: {yy: "y"}})"#);
        assert_eq!(r.warnings.len(), 2);
        assert!(r.is_noop());
        assert_eq!(s.export_model(LinkMode::Naming), before);
    }

    #[test]
    fn rename_with_single_occurrence_moves_pair() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", age: 42})"#);
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$rename: {age: "birthYear"}})"#);
        assert!(types(&s, "P", "age").is_empty());
        assert_eq!(types(&s, "P", "birthYear"), ["Integer"]);
    }

    #[test]
    fn rename_with_shared_pair_keeps_old() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", age: 42})"#);
        run(&mut s, r#"db.P.insertOne({_id: "p2", age: 43})"#);
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$rename: {age: "birthYear"}})"#);
        assert_eq!(types(&s, "P", "age"), ["Integer"]);
        assert_eq!(types(&s, "P", "birthYear"), ["Integer"]);
        assert_eq!(count(&s, "P", "age", TypeDescriptor::Integer), 1);
        assert_eq!(count(&s, "P", "birthYear", TypeDescriptor::Integer), 1);
        // the decrement on rename keeps a later delete consistent
        run(&mut s, r#"db.P.deleteOne({_id: "p2"})"#);
        assert!(types(&s, "P", "age").is_empty());
        assert_eq!(s.check_invariants(), Ok(()));
    }

    #[test]
    fn type_change_with_shared_pair_creates_union() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", age: 42})"#);
        run(&mut s, r#"db.P.insertOne({_id: "p2", age: 43})"#);
        let r = run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {age: "forty"}})"#);
        assert!(r.actions.iter().all(|a| !matches!(a, Action::Increment { rule, .. } | Action::Decrement { rule, .. } if *rule != Rule::ChangeTypeR8)));
        assert_eq!(types(&s, "P", "age"), ["Integer", "String"]);
        assert_eq!(count(&s, "P", "age", TypeDescriptor::Integer), 1);
        assert_eq!(count(&s, "P", "age", TypeDescriptor::String), 1);
    }

    #[test]
    fn same_type_set_is_silent() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", age: 42})"#);
        let r = run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {age: 43}})"#);
        assert!(r.is_noop());
    }

    #[test]
    fn set_creates_intermediate_documents() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", a: 1})"#);
        let r = run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {"address.geo.lat": 43.6}})"#);
        assert!(r.actions.iter().any(|a| matches!(a, Action::Increment { rule: Rule::AddFieldR5, .. })));
        assert_eq!(types(&s, "P", "address"), ["Document"]);
        assert_eq!(types(&s, "P", "address.geo"), ["Document"]);
        assert_eq!(types(&s, "P", "address.geo.lat"), ["Double"]);
        assert_eq!(s.check_invariants(), Ok(()));
    }

    #[test]
    fn set_through_scalar_is_blocked() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", address: "12 rue X"})"#);
        let r = run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {"address.city": "Albi"}})"#);
        assert!(matches!(r.warnings[..], [Warning::PathBlocked { .. }]));
        assert!(r.is_noop());
    }

    #[test]
    fn unset_and_replace_retire_descendants() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", address: {city: "A", zip: 1}})"#);
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {address: {city: "B"}}})"#);
        assert!(types(&s, "P", "address.zip").is_empty());
        assert_eq!(types(&s, "P", "address.city"), ["String"]);
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$set: {address: "flat"}})"#);
        assert_eq!(types(&s, "P", "address"), ["String"]);
        assert!(types(&s, "P", "address.city").is_empty());
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$unset: {address: ""}})"#);
        assert!(s.model().collections.is_empty());
        assert!(s.signatures().contains("P", "p1"));
        assert_eq!(s.check_invariants(), Ok(()));
    }

    #[test]
    fn rename_reroots_subtree_and_overwrites_destination() {
        let mut s = EngineState::new();
        run(&mut s, r#"db.P.insertOne({_id: "p1", address: {city: "A"}, home: 3})"#);
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$rename: {address: "home"}})"#);
        assert_eq!(types(&s, "P", "home"), ["Document"]);
        assert_eq!(types(&s, "P", "home.city"), ["String"]);
        assert!(types(&s, "P", "address").is_empty());
        run(&mut s, r#"db.P.updateOne({_id: "p1"}, {$rename: {"home.city": "town"}})"#);
        assert_eq!(types(&s, "P", "home.town"), ["String"]);
        assert_eq!(s.check_invariants(), Ok(()));
    }

    #[test]
    fn replaying_reports_reproduces_state() {
        let log = [
            r#"db.P.insertOne({_id: "p1", age: 42, address: {city: "A"}, tags: [{k: 1}]})"#,
            r#"db.P.insertOne({_id: "p2", age: 43})"#,
            r#"db.P.updateOne({_id: "p1"}, {$set: {age: "x", "address.zip": 3}, $rename: {tags: "labels"}})"#,
            r#"db.P.updateOne({_id: "p2"}, {$unset: {age: ""}})"#,
            r#"db.P.deleteOne({_id: "p1"})"#,
            r#"db.P.deleteOne({_id: "p2"})"#,
        ];
        let mut live = EngineState::new();
        let mut replayed = EngineState::new();
        for line in log {
            let report = run(&mut live, line);
            replayed.replay(&report);
            assert_eq!(replayed, live, "after {line}");
        }
    }

    #[test]
    fn report_serializes() {
        let mut s = EngineState::new();
        let r = run(&mut s, r#"db.P.insertOne({_id: "p1", age: 42})"#);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"insert","collection":"P","id":"p1","actions":[{"action":"document-added"},{"action":"collection-created"},{"action":"pair-created","path":"age","type":"Integer"},{"action":"increment","rule":"R1/R2","path":"age","type":"Integer","count":1}],"warnings":[]}"#
        );
    }
}
