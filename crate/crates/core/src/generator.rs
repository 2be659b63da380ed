//! Seeded synthetic query logs over a small medical database: patients,
//! doctors, consultations and antecedents, with nested documents, id
//! references, type conflicts and renames.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{MaterializedStore, ReplayOutcome};
use crate::parser::{MutationQuery, UpdateOp};
use crate::types::{AttrPath, Value};

pub const DEFAULT_SEED: u64 = 20_151_027;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    #[default]
    Medical,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "medical" => Ok(Profile::Medical),
            other => Err(format!("unknown profile `{other}` (expected medical)")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("medical")
    }
}

/// Relative weights of inserts, updates and deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratios {
    pub insert: u32,
    pub update: u32,
    pub delete: u32,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios { insert: 60, update: 25, delete: 15 }
    }
}

impl FromStr for Ratios {
    type Err = String;

    /// `I/U/D`, e.g. `60/25/15`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<u32> = s
            .split('/')
            .map(|p| p.trim().parse::<u32>().map_err(|e| format!("bad ratio `{p}`: {e}")))
            .collect::<Result<_, _>>()?;
        match parts[..] {
            [insert, update, delete] if insert + update + delete > 0 => Ok(Ratios { insert, update, delete }),
            [_, _, _] => Err("ratios must not all be zero".to_string()),
            _ => Err(format!("expected three ratios like 60/25/15, got `{s}`")),
        }
    }
}

impl fmt::Display for Ratios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.insert, self.update, self.delete)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub count: usize,
    pub profile: Profile,
    pub ratios: Ratios,
    /// Probability that a generated value takes an unexpected type.
    pub conflict_rate: f64,
    /// Fraction of all queries that are renames.
    pub rename_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: DEFAULT_SEED,
            count: 1000,
            profile: Profile::Medical,
            ratios: Ratios::default(),
            conflict_rate: 0.05,
            rename_rate: 0.03,
        }
    }
}

const PATIENTS: &str = "Patients";
const DOCTORS: &str = "Doctors";
const CONSULTATIONS: &str = "Consultations";
const ANTECEDENTS: &str = "Antecedents";
const COLLECTIONS: [(&str, &str, u32); 4] =
    [(PATIENTS, "p", 40), (CONSULTATIONS, "c", 30), (DOCTORS, "d", 15), (ANTECEDENTS, "a", 15)];

const FIRST_NAMES: [&str; 8] = ["Alice", "Bruno", "Chloé", "David", "Emma", "Farid", "Gaëlle", "Hugo"];
const LAST_NAMES: [&str; 6] = ["Martin", "Bernard", "Dubois", "Thomas", "Robert", "Petit"];
const CITIES: [&str; 5] = ["Toulouse", "Paris", "Lyon", "Bordeaux", "Nantes"];
const STREETS: [&str; 4] = ["rue des Lilas", "avenue Jean Jaurès", "place du Capitole", "allée des Pins"];
const SPECIALTIES: [&str; 5] = ["cardiology", "oncology", "pediatrics", "neurology", "general"];
const CONDITIONS: [(&str, &str); 6] = [
    ("I10", "hypertension"),
    ("E11", "type 2 diabetes"),
    ("J45", "asthma"),
    ("C50", "breast cancer"),
    ("M54", "back pain"),
    ("F32", "depression"),
];
const ALLERGIES: [&str; 4] = ["penicillin", "pollen", "latex", "peanuts"];

/// Alternative names used by renames; anything else gets an `_old` suffix.
const SYNONYMS: [(&str, &str); 10] = [
    ("name", "fullName"),
    ("fullName", "name"),
    ("age", "years"),
    ("phone", "telephone"),
    ("address", "residence"),
    ("notes", "comments"),
    ("label", "title"),
    ("city", "town"),
    ("specialty", "field"),
    ("weight", "mass"),
];

/// Live ids of one collection with O(1) random pick and removal.
#[derive(Debug, Default)]
struct IdPool {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdPool {
    fn add(&mut self, id: String) {
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
    }

    fn remove(&mut self, id: &str) {
        if let Some(i) = self.index.remove(id) {
            self.ids.swap_remove(i);
            if let Some(moved) = self.ids.get(i) {
                self.index.insert(moved.clone(), i);
            }
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> Option<&String> {
        self.ids.choose(rng)
    }

    fn len(&self) -> usize {
        self.ids.len()
    }
}

/// Produces queries one at a time; the same config always yields the same
/// sequence.
pub struct Generator {
    config: GenConfig,
    rng: ChaCha8Rng,
    store: MaterializedStore,
    live: HashMap<&'static str, IdPool>,
    next_id: HashMap<&'static str, u64>,
    emitted: usize,
}

fn text(s: impl Into<String>) -> Value {
    Value::Text(s.into())
}

fn doc(fields: Vec<(&str, Value)>) -> Value {
    Value::Document(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn into_fields(value: Value) -> Vec<(String, Value)> {
    match value {
        Value::Document(fields) => fields,
        _ => unreachable!("generated records are documents"),
    }
}

/// Every field path reachable through nested documents (not arrays).
fn field_paths(fields: &[(String, Value)], prefix: Option<&AttrPath>, out: &mut Vec<AttrPath>) {
    for (name, value) in fields {
        let path = match prefix {
            Some(p) => p.child(name),
            None => AttrPath::field(name.as_str()),
        };
        if let Value::Document(inner) = value {
            field_paths(inner, Some(&path), out);
        }
        out.push(path);
    }
}

impl Generator {
    pub fn new(config: GenConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Generator {
            config,
            rng,
            store: MaterializedStore::new(),
            live: HashMap::new(),
            next_id: HashMap::new(),
            emitted: 0,
        }
    }

    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && self.rng.gen_bool(p.min(1.0))
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(&mut self.rng).expect("non-empty choices")
    }

    fn live_id(&mut self, collection: &'static str) -> Option<String> {
        let pool = self.live.get(collection)?;
        pool.pick(&mut self.rng).cloned()
    }

    fn fresh_id(&mut self, collection: &'static str, prefix: &str) -> String {
        let n = self.next_id.entry(collection).or_insert(0);
        *n += 1;
        format!("{prefix}{n}")
    }

    /// Replaces a value by one of another type.
    fn conflicting(&mut self, value: Value) -> Value {
        match value {
            Value::Integer(i) => text(i.to_string()),
            Value::Double(d) => text(format!("{d:.1}")),
            Value::Text(s) => match s.len() % 3 {
                0 => Value::Integer(s.len() as i64),
                1 => Value::Null,
                _ => Value::Array(vec![Value::Text(s)]),
            },
            Value::Boolean(b) => Value::Integer(b as i64),
            Value::Document(fields) => text(format!("{} fields", fields.len())),
            Value::Array(items) => text(format!("{} items", items.len())),
            other => other,
        }
    }

    fn maybe_conflict(&mut self, value: Value) -> Value {
        let rate = self.config.conflict_rate;
        let value = match value {
            Value::Document(fields) => {
                Value::Document(fields.into_iter().map(|(k, v)| (k, self.maybe_conflict(v))).collect())
            }
            other => other,
        };
        if self.chance(rate) {
            self.conflicting(value)
        } else {
            value
        }
    }

    fn person_name(&mut self) -> Value {
        let first = self.pick(&FIRST_NAMES);
        let last = self.pick(&LAST_NAMES);
        text(format!("{first} {last}"))
    }

    fn reference(&mut self, collection: &'static str, prefix: &str) -> Value {
        match self.live_id(collection) {
            Some(id) => text(id),
            None => {
                let n = self.rng.gen_range(1..50);
                text(format!("{prefix}{n}"))
            }
        }
    }

    fn address(&mut self) -> Value {
        let number = self.rng.gen_range(1..200);
        let street = self.pick(&STREETS);
        let city = self.pick(&CITIES);
        let zip = self.rng.gen_range(10_000..99_999);
        doc(vec![("street", text(format!("{number} {street}"))), ("city", text(city)), ("zip", text(zip.to_string()))])
    }

    fn phone(&mut self) -> Value {
        text(format!("+33 6 {:02} {:02} {:02} {:02}", self.rng.gen_range(0..100), self.rng.gen_range(0..100), self.rng.gen_range(0..100), self.rng.gen_range(0..100)))
    }

    fn patient(&mut self) -> Value {
        let mut fields = vec![("name", self.person_name()), ("age", Value::Integer(self.rng.gen_range(0..100)))];
        if self.chance(0.9) {
            fields.push(("address", self.address()));
        }
        let n = self.rng.gen_range(0..4);
        let antecedents = (0..n).map(|_| self.reference(ANTECEDENTS, "a")).collect();
        fields.push(("antecedent_ids", Value::Array(antecedents)));
        if self.chance(0.5) {
            fields.push(("weight", Value::Double(self.rng.gen_range(300..1200) as f64 / 10.0)));
        }
        if self.chance(0.6) {
            fields.push(("phone", self.phone()));
        }
        if self.chance(0.4) {
            let n = self.rng.gen_range(1..3);
            let treatments = (0..n)
                .map(|_| {
                    let doctor = self.reference(DOCTORS, "d");
                    let drug = self.pick(&["paracetamol", "insulin", "salbutamol", "tamoxifen"]);
                    doc(vec![("drug", text(drug)), ("doctor_id", doctor), ("days", Value::Integer(self.rng.gen_range(1..90)))])
                })
                .collect();
            fields.push(("treatments", Value::Array(treatments)));
        }
        if self.chance(0.3) {
            let n = self.rng.gen_range(0..3);
            let allergies = (0..n).map(|_| text(self.pick(&ALLERGIES))).collect();
            fields.push(("allergies", Value::Array(allergies)));
        }
        doc(fields)
    }

    fn doctor(&mut self) -> Value {
        let mut fields = vec![("name", self.person_name()), ("specialty", text(self.pick(&SPECIALTIES)))];
        if self.chance(0.5) {
            fields.push(("phone", self.phone()));
        }
        if self.chance(0.3) {
            fields.push(("office", doc(vec![("building", text(self.pick(&["A", "B", "C"]))), ("floor", Value::Integer(self.rng.gen_range(0..6)))])));
        }
        doc(fields)
    }

    fn consultation(&mut self) -> Value {
        let day = self.rng.gen_range(1..29);
        let month = self.rng.gen_range(1..13);
        let mut fields = vec![
            ("date", text(format!("2015-{month:02}-{day:02}"))),
            ("doctor_id", self.reference(DOCTORS, "d")),
            ("patient_id", self.reference(PATIENTS, "p")),
        ];
        if self.chance(0.7) {
            let temperature = Value::Double(self.rng.gen_range(355..405) as f64 / 10.0);
            fields.push(("vitals", doc(vec![("temperature", temperature), ("pulse", Value::Integer(self.rng.gen_range(50..120)))])));
        }
        if self.chance(0.5) {
            fields.push(("notes", text(self.pick(&["routine check", "follow-up", "emergency", "referral"]))));
        }
        if self.chance(0.2) {
            fields.push(("paid", Value::Boolean(self.rng.gen_bool(0.5))));
        }
        doc(fields)
    }

    fn antecedent(&mut self) -> Value {
        let (code, label) = self.pick(&CONDITIONS);
        let mut fields = vec![("code", text(code)), ("label", text(label)), ("chronic", Value::Boolean(self.rng.gen_bool(0.5)))];
        if self.chance(0.5) {
            fields.push(("severity", Value::Integer(self.rng.gen_range(1..6))));
        }
        doc(fields)
    }

    fn record(&mut self, collection: &'static str) -> Value {
        match collection {
            PATIENTS => self.patient(),
            DOCTORS => self.doctor(),
            CONSULTATIONS => self.consultation(),
            _ => self.antecedent(),
        }
    }

    /// Paths an update may add, with a value for each.
    fn new_field(&mut self, collection: &'static str) -> (AttrPath, Value) {
        let (path, value) = match collection {
            PATIENTS => match self.rng.gen_range(0..6) {
                0 => ("weight", Value::Double(self.rng.gen_range(300..1200) as f64 / 10.0)),
                1 => ("phone", self.phone()),
                2 => ("emergency.contact.name", self.person_name()),
                3 => ("emergency.contact.phone", self.phone()),
                4 => ("address.country", text("France")),
                _ => ("blood_type", text(self.pick(&["A+", "O-", "B+", "AB+"]))),
            },
            DOCTORS => match self.rng.gen_range(0..3) {
                0 => ("phone", self.phone()),
                1 => ("office.room", Value::Integer(self.rng.gen_range(1..300))),
                _ => ("on_call", Value::Boolean(self.rng.gen_bool(0.5))),
            },
            CONSULTATIONS => match self.rng.gen_range(0..3) {
                0 => ("diagnosis", text(self.pick(&CONDITIONS).1)),
                1 => ("vitals.spo2", Value::Integer(self.rng.gen_range(85..101))),
                _ => ("follow_up", Value::Boolean(self.rng.gen_bool(0.5))),
            },
            _ => match self.rng.gen_range(0..2) {
                0 => ("notes", text("reported by patient")),
                _ => ("severity", Value::Integer(self.rng.gen_range(1..6))),
            },
        };
        (AttrPath::parse_dotted(path).expect("valid generator path"), value)
    }

    /// A value shaped like the existing one at `path`.
    fn replacement(&mut self, current: Option<&Value>) -> Value {
        match current {
            Some(Value::Integer(i)) => Value::Integer(i + self.rng.gen_range(1..5)),
            Some(Value::Double(d)) => Value::Double(((d * 10.0).round() + 1.0) / 10.0),
            Some(Value::Boolean(b)) => Value::Boolean(!b),
            Some(Value::Text(s)) => text(format!("{s}*")),
            Some(Value::Array(items)) => Value::Array(items.iter().take(1).cloned().collect()),
            Some(Value::Document(_)) => self.address(),
            _ => text("updated"),
        }
    }

    fn value_at<'a>(fields: &'a [(String, Value)], path: &AttrPath) -> Option<&'a Value> {
        let mut current = fields;
        let mut found = None;
        for name in path.field_names() {
            let (_, v) = current.iter().find(|(k, _)| k == name)?;
            found = Some(v);
            current = match v {
                Value::Document(inner) => inner,
                _ => &[],
            };
        }
        found
    }

    fn pick_collection(&mut self, need_live: bool) -> Option<(&'static str, &'static str)> {
        let candidates: Vec<_> = COLLECTIONS
            .iter()
            .filter(|(name, _, _)| !need_live || self.live.get(name).is_some_and(|p| p.len() > 0))
            .copied()
            .collect();
        let (name, prefix, _) = *candidates.choose_weighted(&mut self.rng, |c| c.2).ok()?;
        Some((name, prefix))
    }

    fn insert(&mut self) -> MutationQuery {
        let (collection, prefix) = self.pick_collection(false).expect("collections are configured");
        let fields = into_fields(self.record(collection))
            .into_iter()
            .map(|(k, v)| (k, self.maybe_conflict(v)))
            .collect();
        let id = if self.chance(0.01) {
            None
        } else if self.chance(0.005) && self.live.get(collection).is_some_and(|p| p.len() > 0) {
            self.live_id(collection)
        } else {
            Some(self.fresh_id(collection, prefix))
        };
        MutationQuery::Insert { collection: collection.to_string(), id, fields }
    }

    fn delete(&mut self) -> MutationQuery {
        let target = if self.chance(0.02) { None } else { self.pick_collection(true) };
        match target {
            Some((collection, _)) => {
                let id = self.live_id(collection).expect("collection has live documents");
                MutationQuery::Delete { collection: collection.to_string(), id }
            }
            None => {
                let (collection, prefix) = self.pick_collection(false).expect("collections are configured");
                MutationQuery::Delete { collection: collection.to_string(), id: format!("{prefix}-missing") }
            }
        }
    }

    fn update(&mut self, rename: bool) -> MutationQuery {
        let Some((collection, _)) = self.pick_collection(true) else {
            return self.insert();
        };
        let id = self.live_id(collection).expect("collection has live documents");
        let fields = self.store.get(collection, &id).unwrap_or_default().to_vec();
        let mut paths = Vec::new();
        field_paths(&fields, None, &mut paths);
        let mut ops = Vec::new();
        if rename {
            if let Some(path) = paths.choose(&mut self.rng).cloned() {
                let last = path.last_field().expect("field path").to_string();
                let new_name = SYNONYMS
                    .iter()
                    .find(|(from, _)| *from == last)
                    .map(|(_, to)| to.to_string())
                    .unwrap_or_else(|| format!("{last}_old"));
                ops.push(UpdateOp::Rename { path, new_name });
            }
        } else {
            let n = self.rng.gen_range(1..3);
            let mut targets: Vec<AttrPath> = Vec::new();
            for _ in 0..n {
                let op = match self.rng.gen_range(0..10) {
                    0..=4 if !paths.is_empty() => {
                        let path = paths.choose(&mut self.rng).cloned().expect("non-empty");
                        let value = self.replacement(Self::value_at(&fields, &path));
                        let value = self.maybe_conflict(value);
                        UpdateOp::Set { path, value }
                    }
                    5..=7 => {
                        let (path, value) = self.new_field(collection);
                        let value = self.maybe_conflict(value);
                        UpdateOp::Set { path, value }
                    }
                    _ => match paths.choose(&mut self.rng).cloned() {
                        Some(path) => UpdateOp::Unset { path },
                        None => continue,
                    },
                };
                if targets.iter().any(|t| t.overlaps(op.path())) {
                    continue;
                }
                targets.push(op.path().clone());
                ops.push(op);
            }
        }
        if ops.is_empty() {
            let (path, value) = self.new_field(collection);
            ops.push(UpdateOp::Set { path, value });
        }
        MutationQuery::Update { collection: collection.to_string(), id, ops }
    }

    fn next_query(&mut self) -> MutationQuery {
        let Ratios { insert, update, delete } = self.config.ratios;
        let total = (insert + update + delete).max(1);
        let roll = self.rng.gen_range(0..total);
        if roll < insert {
            self.insert()
        } else if roll < insert + update {
            let share = update as f64 / total as f64;
            let rename = self.chance(self.config.rename_rate / share);
            self.update(rename)
        } else {
            self.delete()
        }
    }

    fn track(&mut self, query: &MutationQuery) {
        let outcome = self.store.apply(query);
        let ReplayOutcome::Applied { id } = outcome else { return };
        let Some(&(name, _, _)) = COLLECTIONS.iter().find(|(name, _, _)| *name == query.collection()) else {
            return;
        };
        let pool = self.live.entry(name).or_default();
        match query {
            MutationQuery::Insert { .. } => pool.add(id),
            MutationQuery::Delete { .. } => pool.remove(&id),
            MutationQuery::Update { .. } => {}
        }
    }
}

impl Iterator for Generator {
    type Item = MutationQuery;

    fn next(&mut self) -> Option<MutationQuery> {
        if self.emitted >= self.config.count {
            return None;
        }
        let query = self.next_query();
        self.track(&query);
        self.emitted += 1;
        Some(query)
    }
}

/// Convenience: the whole log as a vector.
pub fn generate(config: &GenConfig) -> Vec<MutationQuery> {
    Generator::new(config.clone()).collect()
}
