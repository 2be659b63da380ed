//! The three persistent artifacts kept by the engine: the schema model,
//! the occurrence counters, and the per-document signatures that let a
//! delete or update know which pairs a document carries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::links::{refine_model, LinkMode};
use crate::types::{AttrPath, Signature, TypeDescriptor};

/// Identifier emitted for both the model and the metadata objects.
pub const STATE_ID: &str = "q2m";
pub const STATE_VERSION: u32 = 1;

pub type TypeSet = BTreeSet<TypeDescriptor>;

/// Extracted physical model: collections, attribute paths and their type unions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaModel {
    pub id: String,
    pub collections: BTreeMap<String, CollectionSchema>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CollectionSchema {
    pub attributes: BTreeMap<AttrPath, TypeSet>,
}

impl Default for SchemaModel {
    fn default() -> Self {
        SchemaModel { id: STATE_ID.to_string(), collections: BTreeMap::new() }
    }
}

impl SchemaModel {
    pub fn types(&self, collection: &str, path: &AttrPath) -> Option<&TypeSet> {
        self.collections.get(collection)?.attributes.get(path)
    }

    /// Number of `(collection, path)` entries.
    pub fn entry_count(&self) -> usize {
        self.collections.values().map(|c| c.attributes.len()).sum()
    }

    /// Canonical JSON snapshot: collections by name, attributes by printed
    /// path, types by printed name, two-space indentation, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&ModelRepr::from(self)).expect("model serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<SchemaModel, StateError> {
        let repr: ModelRepr = serde_json::from_str(text).map_err(|e| StateError::Corrupt(e.to_string()))?;
        repr.try_into()
    }
}

/// Occurrence counters keyed by `(path, type)` per collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceMetadata {
    pub id: String,
    pub collections: BTreeMap<String, BTreeMap<(AttrPath, TypeDescriptor), u64>>,
}

impl Default for OccurrenceMetadata {
    fn default() -> Self {
        OccurrenceMetadata { id: STATE_ID.to_string(), collections: BTreeMap::new() }
    }
}

impl OccurrenceMetadata {
    pub fn count(&self, collection: &str, path: &AttrPath, ty: &TypeDescriptor) -> u64 {
        self.collections
            .get(collection)
            .and_then(|c| c.get(&(path.clone(), ty.clone())))
            .copied()
            .unwrap_or(0)
    }

    pub fn counter_count(&self) -> usize {
        self.collections.values().map(BTreeMap::len).sum()
    }

    /// Canonical JSON listing of every counter.
    pub fn to_canonical_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&MetadataRepr::from(self)).expect("metadata serializes");
        out.push('\n');
        out
    }
}

/// Current signature of every live document, per collection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DocumentSignatureStore {
    collections: BTreeMap<String, HashMap<String, Signature>>,
}

impl DocumentSignatureStore {
    pub fn get(&self, collection: &str, id: &str) -> Option<&Signature> {
        self.collections.get(collection)?.get(id)
    }

    pub fn contains(&self, collection: &str, id: &str) -> bool {
        self.get(collection, id).is_some()
    }

    pub fn insert(&mut self, collection: &str, id: String, signature: Signature) -> Option<Signature> {
        self.collections.entry(collection.to_string()).or_default().insert(id, signature)
    }

    pub fn remove(&mut self, collection: &str, id: &str) -> Option<Signature> {
        let docs = self.collections.get_mut(collection)?;
        let removed = docs.remove(id);
        if docs.is_empty() {
            self.collections.remove(collection);
        }
        removed
    }

    pub fn get_mut(&mut self, collection: &str, id: &str) -> Option<&mut Signature> {
        self.collections.get_mut(collection)?.get_mut(id)
    }

    pub fn document_count(&self) -> usize {
        self.collections.values().map(HashMap::len).sum()
    }

    pub fn collection_sizes(&self) -> impl Iterator<Item = (&str, usize)> {
        self.collections.iter().map(|(name, docs)| (name.as_str(), docs.len()))
    }

    pub fn pair_count(&self) -> usize {
        self.collections.values().flat_map(HashMap::values).map(BTreeSet::len).sum()
    }

    pub fn documents(&self, collection: &str) -> impl Iterator<Item = (&str, &Signature)> {
        self.collections
            .get(collection)
            .into_iter()
            .flat_map(|docs| docs.iter().map(|(id, sig)| (id.as_str(), sig)))
    }
}

/// Model, metadata and signatures evolved together by the engine.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EngineState {
    pub(crate) model: SchemaModel,
    pub(crate) metadata: OccurrenceMetadata,
    pub(crate) signatures: DocumentSignatureStore,
    pub(crate) applied_count: u64,
}

/// Side effects of moving one counter, used for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct CounterEffect {
    pub count: u64,
    pub pair_changed: bool,
    pub collection_changed: bool,
}

#[derive(Debug, Error)]
pub enum StateError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt state: {0}")]
    Corrupt(String),
}

/// A broken cross-invariant between model, metadata and signatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InvariantViolation {
    CounterMismatch { collection: String, path: AttrPath, ty: TypeDescriptor, stored: u64, recounted: u64 },
    TypeWithoutCounter { collection: String, path: AttrPath, ty: TypeDescriptor },
    CounterWithoutType { collection: String, path: AttrPath, ty: TypeDescriptor },
    EmptyTypeSet { collection: String, path: AttrPath },
    MissingContainer { collection: String, path: AttrPath },
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantViolation::CounterMismatch { collection, path, ty, stored, recounted } => write!(
                f,
                "counter {collection}.{path}:{ty} is {stored} but {recounted} live documents carry it"
            ),
            InvariantViolation::TypeWithoutCounter { collection, path, ty } => {
                write!(f, "model lists {collection}.{path}:{ty} without a counter")
            }
            InvariantViolation::CounterWithoutType { collection, path, ty } => {
                write!(f, "counter {collection}.{path}:{ty} has no model pair")
            }
            InvariantViolation::EmptyTypeSet { collection, path } => {
                write!(f, "model entry {collection}.{path} has no types")
            }
            InvariantViolation::MissingContainer { collection, path } => {
                write!(f, "model entry {collection}.{path} lacks a container parent")
            }
        }
    }
}

impl EngineState {
    /// Empty model, no counters, no documents.
    pub fn new() -> Self {
        Self::default()
    }

    /// The model as maintained by the rules, with structural types only.
    pub fn model(&self) -> &SchemaModel {
        &self.model
    }

    pub fn metadata(&self) -> &OccurrenceMetadata {
        &self.metadata
    }

    pub fn signatures(&self) -> &DocumentSignatureStore {
        &self.signatures
    }

    pub fn applied_count(&self) -> u64 {
        self.applied_count
    }

    /// The model with reference detection applied.
    pub fn schema(&self, mode: LinkMode) -> SchemaModel {
        refine_model(self.model.clone(), mode)
    }

    /// Canonical snapshot text of [`EngineState::schema`].
    pub fn export_model(&self, mode: LinkMode) -> String {
        self.schema(mode).to_canonical_json()
    }

    /// Adds one occurrence of `(path, ty)`, creating the model pair (and
    /// collection) when the counter is new.
    pub(crate) fn increment(&mut self, collection: &str, path: &AttrPath, ty: &TypeDescriptor) -> CounterEffect {
        let counters = match self.metadata.collections.get_mut(collection) {
            Some(c) => c,
            None => self.metadata.collections.entry(collection.to_string()).or_default(),
        };
        let count = counters.entry((path.clone(), ty.clone())).or_insert(0);
        *count += 1;
        let mut effect = CounterEffect { count: *count, ..Default::default() };
        if *count == 1 {
            let schema = match self.model.collections.get_mut(collection) {
                Some(c) => c,
                None => {
                    effect.collection_changed = true;
                    self.model.collections.entry(collection.to_string()).or_default()
                }
            };
            effect.pair_changed = schema.attributes.entry(path.clone()).or_default().insert(ty.clone());
        }
        effect
    }

    /// Removes one occurrence of `(path, ty)`; at zero the counter and the
    /// model pair go away, then the entry and collection once empty.
    pub(crate) fn decrement(&mut self, collection: &str, path: &AttrPath, ty: &TypeDescriptor) -> CounterEffect {
        let key = (path.clone(), ty.clone());
        let counters = self
            .metadata
            .collections
            .get_mut(collection)
            .expect("decrement of a counter in an unknown collection");
        let count = counters.get_mut(&key).expect("decrement of an unknown counter");
        *count -= 1;
        let mut effect = CounterEffect { count: *count, ..Default::default() };
        if *count > 0 {
            return effect;
        }
        counters.remove(&key);
        if counters.is_empty() {
            self.metadata.collections.remove(collection);
        }
        let schema = self.model.collections.get_mut(collection).expect("model collection for counter");
        let types = schema.attributes.get_mut(path).expect("model entry for counter");
        effect.pair_changed = types.remove(ty);
        if types.is_empty() {
            schema.attributes.remove(path);
            if schema.attributes.is_empty() {
                self.model.collections.remove(collection);
                effect.collection_changed = true;
            }
        }
        effect
    }

    /// Recounts every counter from the signatures and checks the model
    /// against the metadata in both directions.
    pub fn check_invariants(&self) -> Result<(), InvariantViolation> {
        let empty = BTreeMap::new();
        let names: BTreeSet<&String> = self
            .metadata
            .collections
            .keys()
            .chain(self.signatures.collections.keys())
            .chain(self.model.collections.keys())
            .collect();
        for collection in names {
            let mut recount: FxHashMap<(&AttrPath, &TypeDescriptor), u64> = FxHashMap::default();
            if let Some(docs) = self.signatures.collections.get(collection) {
                for signature in docs.values() {
                    for (path, ty) in signature {
                        *recount.entry((path, ty)).or_insert(0) += 1;
                    }
                }
            }
            let counters = self.metadata.collections.get(collection).unwrap_or(&empty);
            for ((path, ty), &stored) in counters {
                let recounted = recount.remove(&(path, ty)).unwrap_or(0);
                if stored != recounted {
                    return Err(InvariantViolation::CounterMismatch {
                        collection: collection.clone(),
                        path: path.clone(),
                        ty: ty.clone(),
                        stored,
                        recounted,
                    });
                }
            }
            if let Some(((path, ty), recounted)) = recount.into_iter().min() {
                return Err(InvariantViolation::CounterMismatch {
                    collection: collection.clone(),
                    path: path.clone(),
                    ty: ty.clone(),
                    stored: 0,
                    recounted,
                });
            }

            // Model pairs and counter keys are both ordered by (path, type),
            // so bi-consistency is a merge of the two sequences.
            let schema = self.model.collections.get(collection);
            let mut model_pairs =
                schema.into_iter().flat_map(|s| s.attributes.iter().flat_map(|(p, ts)| ts.iter().map(move |t| (p, t)))).peekable();
            let mut counter_pairs = counters.keys().map(|(p, t)| (p, t)).peekable();
            loop {
                let (m, c) = (model_pairs.peek().copied(), counter_pairs.peek().copied());
                let (path, ty, counted) = match (m, c) {
                    (None, None) => break,
                    (Some(m), Some(c)) if m == c => {
                        model_pairs.next();
                        counter_pairs.next();
                        continue;
                    }
                    (Some(m), Some(c)) if m < c => (m.0, m.1, false),
                    (Some(m), None) => (m.0, m.1, false),
                    (_, Some(c)) => (c.0, c.1, true),
                };
                let (collection, path, ty) = (collection.clone(), path.clone(), ty.clone());
                return Err(if counted {
                    InvariantViolation::CounterWithoutType { collection, path, ty }
                } else {
                    InvariantViolation::TypeWithoutCounter { collection, path, ty }
                });
            }
            let Some(schema) = schema else { continue };
            for (path, types) in &schema.attributes {
                if types.is_empty() {
                    return Err(InvariantViolation::EmptyTypeSet { collection: collection.clone(), path: path.clone() });
                }
                if let Some(parent) = path.container() {
                    let ok = schema.attributes.get(&parent).is_some_and(|t| t.iter().any(TypeDescriptor::is_container));
                    if !ok {
                        return Err(InvariantViolation::MissingContainer {
                            collection: collection.clone(),
                            path: path.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn payload(&self) -> PayloadRepr {
        let signatures = self
            .signatures
            .collections
            .iter()
            .map(|(name, docs)| {
                let mut documents: Vec<DocumentRepr> = docs
                    .iter()
                    .map(|(id, sig)| DocumentRepr { id: id.clone(), pairs: sig.iter().cloned().collect() })
                    .collect();
                documents.sort_by(|a, b| a.id.cmp(&b.id));
                SignatureCollectionRepr { collection: name.clone(), documents }
            })
            .collect();
        PayloadRepr {
            version: STATE_VERSION,
            applied: self.applied_count,
            model: ModelRepr::from(&self.model),
            metadata: MetadataRepr::from(&self.metadata),
            signatures,
        }
    }

    /// Serializes the whole state, with a version field and a checksum.
    pub fn to_state_json(&self) -> String {
        let payload = self.payload();
        let checksum = payload.checksum();
        serde_json::to_string(&StateFileRepr { payload, checksum }).expect("state serializes")
    }

    pub fn from_state_json(text: &str) -> Result<EngineState, StateError> {
        let header: VersionProbe =
            serde_json::from_str(text).map_err(|e| StateError::Corrupt(format!("unreadable state file: {e}")))?;
        if header.version != STATE_VERSION {
            return Err(StateError::Corrupt(format!(
                "unsupported state version {} (expected {STATE_VERSION})",
                header.version
            )));
        }
        let file: StateFileRepr =
            serde_json::from_str(text).map_err(|e| StateError::Corrupt(format!("unreadable state file: {e}")))?;
        if file.payload.checksum() != file.checksum {
            return Err(StateError::Corrupt("checksum mismatch".into()));
        }
        let PayloadRepr { applied, model, metadata, signatures, .. } = file.payload;
        let mut store = DocumentSignatureStore::default();
        for SignatureCollectionRepr { collection, documents } in signatures {
            for DocumentRepr { id, pairs } in documents {
                if store.insert(&collection, id.clone(), pairs.into_iter().collect()).is_some() {
                    return Err(StateError::Corrupt(format!("document {collection}/{id} listed twice")));
                }
            }
        }
        let state = EngineState {
            model: model.try_into()?,
            metadata: metadata.try_into()?,
            signatures: store,
            applied_count: applied,
        };
        state.check_invariants().map_err(|v| StateError::Corrupt(v.to_string()))?;
        Ok(state)
    }

    /// Writes the state atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<(), StateError> {
        let tmp = path.with_extension("tmp");
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(self.to_state_json().as_bytes())?;
            file.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<EngineState, StateError> {
        Self::from_state_json(&fs::read_to_string(path)?)
    }
}

// Serialized forms.

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    id: String,
    collections: Vec<CollectionRepr>,
}

#[derive(Serialize, Deserialize)]
struct CollectionRepr {
    name: String,
    attributes: Vec<AttributeRepr>,
}

#[derive(Serialize, Deserialize)]
struct AttributeRepr {
    path: AttrPath,
    types: Vec<TypeDescriptor>,
}

impl From<&SchemaModel> for ModelRepr {
    fn from(model: &SchemaModel) -> Self {
        ModelRepr {
            id: model.id.clone(),
            collections: model
                .collections
                .iter()
                .map(|(name, schema)| CollectionRepr {
                    name: name.clone(),
                    attributes: schema
                        .attributes
                        .iter()
                        .map(|(path, types)| AttributeRepr { path: path.clone(), types: types.iter().cloned().collect() })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelRepr> for SchemaModel {
    type Error = StateError;

    fn try_from(repr: ModelRepr) -> Result<Self, StateError> {
        let mut collections = BTreeMap::new();
        for CollectionRepr { name, attributes } in repr.collections {
            let mut schema = CollectionSchema::default();
            for AttributeRepr { path, types } in attributes {
                let set: TypeSet = types.into_iter().collect();
                if set.is_empty() {
                    return Err(StateError::Corrupt(format!("{name}.{path} has no types")));
                }
                if schema.attributes.insert(path.clone(), set).is_some() {
                    return Err(StateError::Corrupt(format!("{name}.{path} listed twice")));
                }
            }
            if collections.insert(name.clone(), schema).is_some() {
                return Err(StateError::Corrupt(format!("collection {name} listed twice")));
            }
        }
        Ok(SchemaModel { id: repr.id, collections })
    }
}

#[derive(Serialize, Deserialize)]
struct MetadataRepr {
    id: String,
    collections: Vec<CounterCollectionRepr>,
}

#[derive(Serialize, Deserialize)]
struct CounterCollectionRepr {
    name: String,
    counters: Vec<CounterRepr>,
}

#[derive(Serialize, Deserialize)]
struct CounterRepr {
    path: AttrPath,
    #[serde(rename = "type")]
    ty: TypeDescriptor,
    count: u64,
}

impl From<&OccurrenceMetadata> for MetadataRepr {
    fn from(metadata: &OccurrenceMetadata) -> Self {
        MetadataRepr {
            id: metadata.id.clone(),
            collections: metadata
                .collections
                .iter()
                .map(|(name, counters)| CounterCollectionRepr {
                    name: name.clone(),
                    counters: counters
                        .iter()
                        .map(|((path, ty), &count)| CounterRepr { path: path.clone(), ty: ty.clone(), count })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<MetadataRepr> for OccurrenceMetadata {
    type Error = StateError;

    fn try_from(repr: MetadataRepr) -> Result<Self, StateError> {
        let mut collections = BTreeMap::new();
        for CounterCollectionRepr { name, counters } in repr.collections {
            let mut map = BTreeMap::new();
            for CounterRepr { path, ty, count } in counters {
                if count == 0 {
                    return Err(StateError::Corrupt(format!("zero counter for {name}.{path}:{ty}")));
                }
                if map.insert((path.clone(), ty.clone()), count).is_some() {
                    return Err(StateError::Corrupt(format!("counter {name}.{path}:{ty} listed twice")));
                }
            }
            collections.insert(name, map);
        }
        Ok(OccurrenceMetadata { id: repr.id, collections })
    }
}

#[derive(Serialize, Deserialize)]
struct SignatureCollectionRepr {
    collection: String,
    documents: Vec<DocumentRepr>,
}

#[derive(Serialize, Deserialize)]
struct DocumentRepr {
    id: String,
    pairs: Vec<(AttrPath, TypeDescriptor)>,
}

#[derive(Serialize, Deserialize)]
struct PayloadRepr {
    version: u32,
    applied: u64,
    model: ModelRepr,
    metadata: MetadataRepr,
    signatures: Vec<SignatureCollectionRepr>,
}

impl PayloadRepr {
    fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("payload serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Serialize, Deserialize)]
struct StateFileRepr {
    #[serde(flatten)]
    payload: PayloadRepr,
    checksum: String,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> AttrPath {
        s.parse().unwrap()
    }

    fn patients_state() -> EngineState {
        let mut state = EngineState::new();
        let mut sig = Signature::new();
        for (path, ty) in [("name", TypeDescriptor::String), ("age", TypeDescriptor::Integer)] {
            state.increment("Patients", &p(path), &ty);
            sig.insert((p(path), ty));
        }
        state.signatures.insert("Patients", "p1".into(), sig);
        state.applied_count = 1;
        state
    }

    #[test]
    fn empty_state_has_nothing() {
        let state = EngineState::new();
        assert!(state.model().collections.is_empty());
        assert_eq!(state.metadata().counter_count(), 0);
        assert_eq!(state.signatures().document_count(), 0);
        assert_eq!(state.applied_count(), 0);
        assert_eq!(state.export_model(LinkMode::Naming), "{\n  \"id\": \"q2m\",\n  \"collections\": []\n}\n");
    }

    #[test]
    fn export_sorts_attributes() {
        let expected = r#"{
  "id": "q2m",
  "collections": [
    {
      "name": "Patients",
      "attributes": [
        {
          "path": "age",
          "types": [
            "Integer"
          ]
        },
        {
          "path": "name",
          "types": [
            "String"
          ]
        }
      ]
    }
  ]
}
"#;
        assert_eq!(patients_state().export_model(LinkMode::Off), expected);
    }

    #[test]
    fn snapshot_parses_back() {
        let model = patients_state().schema(LinkMode::Off);
        assert_eq!(SchemaModel::from_json(&model.to_canonical_json()).unwrap(), model);
    }

    #[test]
    fn state_round_trips() {
        for state in [EngineState::new(), patients_state()] {
            let back = EngineState::from_state_json(&state.to_state_json()).unwrap();
            assert_eq!(back, state);
        }
    }

    #[test]
    fn wrong_version_is_corrupt() {
        let text = patients_state().to_state_json().replacen("\"version\":1", "\"version\":2", 1);
        assert!(matches!(EngineState::from_state_json(&text), Err(StateError::Corrupt(m)) if m.contains("version")));
    }

    #[test]
    fn tampered_payload_fails_checksum() {
        let text = patients_state().to_state_json().replacen("\"applied\":1", "\"applied\":7", 1);
        assert!(matches!(EngineState::from_state_json(&text), Err(StateError::Corrupt(m)) if m.contains("checksum")));
    }

    #[test]
    fn decrement_removes_pair_then_collection() {
        let mut state = patients_state();
        let e = state.decrement("Patients", &p("age"), &TypeDescriptor::Integer);
        assert!(e.pair_changed && !e.collection_changed);
        let e = state.decrement("Patients", &p("name"), &TypeDescriptor::String);
        assert!(e.pair_changed && e.collection_changed);
        assert!(state.model().collections.is_empty());
        assert!(state.metadata().collections.is_empty());
    }

    #[test]
    fn invariant_check_catches_drift() {
        let mut state = patients_state();
        assert_eq!(state.check_invariants(), Ok(()));
        *state.metadata.collections.get_mut("Patients").unwrap().get_mut(&(p("age"), TypeDescriptor::Integer)).unwrap() += 1;
        assert!(matches!(
            state.check_invariants(),
            Err(InvariantViolation::CounterMismatch { stored: 2, recounted: 1, .. })
        ));

        let mut state = patients_state();
        state.model.collections.get_mut("Patients").unwrap().attributes.insert(p("x.y"), [TypeDescriptor::Null].into());
        assert!(matches!(state.check_invariants(), Err(InvariantViolation::TypeWithoutCounter { .. })));
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.json");
        let state = patients_state();
        state.save(&path).unwrap();
        assert_eq!(EngineState::load(&path).unwrap(), state);
        assert!(matches!(EngineState::load(&dir.path().join("missing.json")), Err(StateError::Io(_))));
    }
}
