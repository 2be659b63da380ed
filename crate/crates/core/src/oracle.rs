//! Ground truth for the incremental engine: replays a log against full
//! document trees, then extracts the schema in one pass by mapping every
//! field to its type and unioning per collection and path.
//!
//! Nothing here touches counters or signatures.

use std::collections::{BTreeMap, HashMap};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::links::{refine_model, LinkMode};
use crate::parser::{MutationQuery, UpdateOp};
use crate::state::{CollectionSchema, SchemaModel, STATE_ID};
use crate::types::{flatten_fields, AttrPath, TypeDescriptor, Value};

type Fields = Vec<(String, Value)>;

/// Simulated document store.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterializedStore {
    collections: BTreeMap<String, HashMap<String, Fields>>,
    applied: u64,
}

/// How the store handled one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplayOutcome {
    /// Applied; carries the target document id (synthesized for inserts
    /// without one).
    Applied { id: String },
    /// Accepted, but the target document was unknown, so nothing changed.
    Skipped,
    /// Insert with an id that is already live; not counted as applied.
    Rejected,
}

fn field_names(path: &AttrPath) -> Vec<&str> {
    path.field_names().collect()
}

fn set_in(doc: &mut Fields, names: &[&str], value: Value) -> bool {
    let (first, rest) = names.split_first().expect("non-empty path");
    let at = doc.iter().position(|(k, _)| k == first);
    if rest.is_empty() {
        match at {
            Some(i) => doc[i].1 = value,
            None => doc.push((first.to_string(), value)),
        }
        return true;
    }
    let i = match at {
        Some(i) => i,
        None => {
            doc.push((first.to_string(), Value::Document(Vec::new())));
            doc.len() - 1
        }
    };
    match &mut doc[i].1 {
        Value::Document(inner) => set_in(inner, rest, value),
        _ => false,
    }
}

fn parent_of<'a>(doc: &'a mut Fields, names: &[&str]) -> Option<&'a mut Fields> {
    let mut current = doc;
    for name in names {
        let (_, value) = current.iter_mut().find(|(k, _)| k == name)?;
        match value {
            Value::Document(inner) => current = inner,
            _ => return None,
        }
    }
    Some(current)
}

fn remove_in(doc: &mut Fields, names: &[&str]) -> Option<Value> {
    let (last, parents) = names.split_last()?;
    let parent = parent_of(doc, parents)?;
    let at = parent.iter().position(|(k, _)| k == last)?;
    Some(parent.remove(at).1)
}

fn apply_op(doc: &mut Fields, op: &UpdateOp) {
    match op {
        UpdateOp::Set { path, value } => {
            set_in(doc, &field_names(path), value.clone());
        }
        UpdateOp::Unset { path } => {
            remove_in(doc, &field_names(path));
        }
        UpdateOp::Rename { path, new_name } => {
            let names = field_names(path);
            if let Some(value) = remove_in(doc, &names) {
                let parent = parent_of(doc, &names[..names.len() - 1]).expect("parent of a removed field");
                parent.retain(|(k, _)| k != new_name);
                parent.push((new_name.clone(), value));
            }
        }
    }
}

impl MaterializedStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, query: &MutationQuery) -> ReplayOutcome {
        let outcome = match query {
            MutationQuery::Insert { collection, id, fields } => {
                let id = id.clone().unwrap_or_else(|| format!("_gen{}", self.applied));
                let docs = self.collections.entry(collection.clone()).or_default();
                if docs.contains_key(&id) {
                    return ReplayOutcome::Rejected;
                }
                docs.insert(id.clone(), fields.clone());
                ReplayOutcome::Applied { id }
            }
            MutationQuery::Delete { collection, id } => {
                match self.collections.get_mut(collection).and_then(|docs| docs.remove(id)) {
                    Some(_) => ReplayOutcome::Applied { id: id.clone() },
                    None => ReplayOutcome::Skipped,
                }
            }
            MutationQuery::Update { collection, id, ops } => {
                match self.collections.get_mut(collection).and_then(|docs| docs.get_mut(id)) {
                    Some(doc) => {
                        for op in ops {
                            apply_op(doc, op);
                        }
                        ReplayOutcome::Applied { id: id.clone() }
                    }
                    None => ReplayOutcome::Skipped,
                }
            }
        };
        self.collections.retain(|_, docs| !docs.is_empty());
        self.applied += 1;
        outcome
    }

    pub fn get(&self, collection: &str, id: &str) -> Option<&[(String, Value)]> {
        self.collections.get(collection)?.get(id).map(Vec::as_slice)
    }

    pub fn document_count(&self) -> usize {
        self.collections.values().map(HashMap::len).sum()
    }

    pub fn documents(&self, collection: &str) -> impl Iterator<Item = (&str, &[(String, Value)])> {
        self.collections
            .get(collection)
            .into_iter()
            .flat_map(|docs| docs.iter().map(|(id, fields)| (id.as_str(), fields.as_slice())))
    }
}

/// Replays queries in order into a fresh store.
pub fn replay_documents<'a>(queries: impl IntoIterator<Item = &'a MutationQuery>) -> MaterializedStore {
    let mut store = MaterializedStore::new();
    for q in queries {
        store.apply(q);
    }
    store
}

/// Schema of the store: union of every document's flattened pairs.
pub fn extract_schema_batch(store: &MaterializedStore, mode: LinkMode) -> SchemaModel {
    let mut collections = BTreeMap::new();
    for (name, docs) in &store.collections {
        let mut schema = CollectionSchema::default();
        for fields in docs.values() {
            for (path, ty) in flatten_fields(fields) {
                schema.attributes.entry(path).or_default().insert(ty);
            }
        }
        if !schema.attributes.is_empty() {
            collections.insert(name.clone(), schema);
        }
    }
    refine_model(SchemaModel { id: STATE_ID.to_string(), collections }, mode)
}

/// [`extract_schema_batch`] with memoized work, for callers that extract
/// after every query: each document's flattened fields, and each
/// collection's union until one of its documents changes. Callers must
/// invalidate the documents a query touched.
#[derive(Debug, Default)]
pub struct CachedExtractor {
    flattened: FxHashMap<String, FxHashMap<String, Vec<(AttrPath, TypeDescriptor)>>>,
    unions: FxHashMap<String, CollectionSchema>,
}

impl CachedExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn invalidate(&mut self, collection: &str, id: &str) {
        if let Some(docs) = self.flattened.get_mut(collection) {
            docs.remove(id);
        }
        self.unions.remove(collection);
    }

    fn union(&mut self, name: &str, docs: &HashMap<String, Fields>) -> &CollectionSchema {
        if !self.unions.contains_key(name) {
            let cache = self.flattened.entry(name.to_string()).or_default();
            for (id, fields) in docs {
                if !cache.contains_key(id) {
                    cache.insert(id.clone(), flatten_fields(fields));
                }
            }
            let mut union: FxHashMap<&AttrPath, FxHashSet<&TypeDescriptor>> = FxHashMap::default();
            for id in docs.keys() {
                for (path, ty) in &cache[id] {
                    union.entry(path).or_default().insert(ty);
                }
            }
            let attributes = union
                .into_iter()
                .map(|(path, types)| (path.clone(), types.into_iter().cloned().collect()))
                .collect();
            self.unions.insert(name.to_string(), CollectionSchema { attributes });
        }
        &self.unions[name]
    }

    pub fn extract(&mut self, store: &MaterializedStore, mode: LinkMode) -> SchemaModel {
        let mut collections = BTreeMap::new();
        for (name, docs) in &store.collections {
            let schema = self.union(name, docs);
            if !schema.attributes.is_empty() {
                collections.insert(name.clone(), schema.clone());
            }
        }
        refine_model(SchemaModel { id: STATE_ID.to_string(), collections }, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_statement;

    fn q(text: &str) -> MutationQuery {
        parse_statement(text).unwrap()
    }

    #[test]
    fn insert_then_delete_empties_store() {
        let log = [q(r#"db.P.insertOne({_id: "p1", age: 1})"#), q(r#"db.P.deleteOne({_id: "p1"})"#)];
        let store = replay_documents(&log);
        assert_eq!(store.document_count(), 0);
        assert!(extract_schema_batch(&store, LinkMode::Naming).collections.is_empty());
    }

    #[test]
    fn set_replaces_value() {
        let log = [q(r#"db.P.insertOne({_id: "p1", age: 42})"#), q(r#"db.P.updateOne({_id: "p1"}, {$set: {age: "x"}})"#)];
        let store = replay_documents(&log);
        assert_eq!(store.get("P", "p1").unwrap(), [("age".to_string(), Value::Text("x".into()))]);
    }

    #[test]
    fn rename_moves_nested_subtree() {
        let log = [
            q(r#"db.P.insertOne({_id: "p1", address: {city: "A", geo: {lat: 1.5}}})"#),
            q(r#"db.P.updateOne({_id: "p1"}, {$rename: {"address.geo": "position"}})"#),
            q(r#"db.P.updateOne({_id: "p1"}, {$rename: {address: "home"}})"#),
        ];
        let store = replay_documents(&log);
        let expected = q(r#"db.P.insertOne({_id: "p1", home: {city: "A", position: {lat: 1.5}}})"#);
        let MutationQuery::Insert { fields, .. } = expected else { unreachable!() };
        assert_eq!(store.get("P", "p1").unwrap(), fields.as_slice());
    }

    #[test]
    fn blocked_set_and_absent_unset_change_nothing() {
        let log = [
            q(r#"db.P.insertOne({_id: "p1", address: "x"})"#),
            q(r#"db.P.updateOne({_id: "p1"}, {$set: {"address.city": "A"}, $unset: {"zip.code": 1}})"#),
        ];
        let store = replay_documents(&log);
        assert_eq!(store.get("P", "p1").unwrap(), [("address".to_string(), Value::Text("x".into()))]);
    }

    #[test]
    fn conflicting_types_union() {
        let log = [q(r#"db.P.insertOne({_id: "p1", age: 42})"#), q(r#"db.P.insertOne({_id: "p2", age: "old"})"#)];
        let model = extract_schema_batch(&replay_documents(&log), LinkMode::Naming);
        let types: Vec<String> =
            model.types("P", &AttrPath::field("age")).unwrap().iter().map(ToString::to_string).collect();
        assert_eq!(types, ["Integer", "String"]);
    }

    #[test]
    fn duplicate_insert_is_rejected() {
        let mut store = MaterializedStore::new();
        assert_eq!(store.apply(&q(r#"db.P.insertOne({_id: "p1"})"#)), ReplayOutcome::Applied { id: "p1".into() });
        assert_eq!(store.apply(&q(r#"db.P.insertOne({_id: "p1", a: 1})"#)), ReplayOutcome::Rejected);
        assert_eq!(store.apply(&q("db.P.insertOne({a: 1})")), ReplayOutcome::Applied { id: "_gen1".into() });
        assert_eq!(store.apply(&q(r#"db.Q.deleteOne({_id: "x"})"#)), ReplayOutcome::Skipped);
    }

    #[test]
    fn empty_store_gives_empty_model() {
        let model = extract_schema_batch(&MaterializedStore::new(), LinkMode::Naming);
        assert_eq!(model, SchemaModel::default());
    }
}
