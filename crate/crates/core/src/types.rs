//! Value model, inferred types, attribute paths and flattening of nested
//! fields into `(path, type)` pairs.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A document-store value as it appears in a mutation statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Boolean(bool),
    Integer(i64),
    Double(f64),
    Text(String),
    ObjectId(String),
    Array(Vec<Value>),
    /// Ordered fields; names are unique within one document.
    Document(Vec<(String, Value)>),
}

impl Value {
    pub fn as_document(&self) -> Option<&[(String, Value)]> {
        match self {
            Value::Document(fields) => Some(fields),
            _ => None,
        }
    }
}

/// The set of `(path, type)` pairs carried by one document.
pub type Signature = BTreeSet<(AttrPath, TypeDescriptor)>;

/// Inferred type of a value.
///
/// Ordering follows the printed name, which is the order used by every
/// export format.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeDescriptor {
    Null,
    Boolean,
    Integer,
    Double,
    String,
    ObjectId,
    /// Element types; the empty set stands for an empty array and prints
    /// as `Array(Unknown)`.
    Array(BTreeSet<TypeDescriptor>),
    Document,
    Reference { target: String, multivalued: bool },
}

impl TypeDescriptor {
    fn simple_name(&self) -> Option<&'static str> {
        Some(match self {
            TypeDescriptor::Null => "Null",
            TypeDescriptor::Boolean => "Boolean",
            TypeDescriptor::Integer => "Integer",
            TypeDescriptor::Double => "Double",
            TypeDescriptor::String => "String",
            TypeDescriptor::ObjectId => "ObjectId",
            TypeDescriptor::Document => "Document",
            TypeDescriptor::Array(_) | TypeDescriptor::Reference { .. } => return None,
        })
    }

    pub fn is_container(&self) -> bool {
        matches!(self, TypeDescriptor::Document | TypeDescriptor::Array(_))
    }
}

impl TypeDescriptor {
    /// Leading part of the printed name that is fixed by the variant.
    fn printed_head(&self) -> &'static str {
        match self {
            TypeDescriptor::Array(_) => "Array(",
            TypeDescriptor::Reference { multivalued: false, .. } => "Ref(",
            TypeDescriptor::Reference { multivalued: true, .. } => "Ref[](",
            simple => simple.simple_name().expect("simple type"),
        }
    }
}

impl Ord for TypeDescriptor {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.printed_head(), other.printed_head());
        if a != b && !a.starts_with(b) && !b.starts_with(a) {
            return a.cmp(b);
        }
        match (self, other) {
            (TypeDescriptor::Array(x), TypeDescriptor::Array(y)) if !x.is_empty() && !y.is_empty() => {
                // No printed type is a proper prefix of another, so the
                // element sequences order the same way as the printed names.
                x.iter().cmp(y.iter())
            }
            _ if self.simple_name().is_some() && other.simple_name().is_some() => a.cmp(b),
            _ => self.to_string().cmp(&other.to_string()),
        }
    }
}

impl PartialOrd for TypeDescriptor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TypeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = self.simple_name() {
            return f.write_str(name);
        }
        match self {
            TypeDescriptor::Array(elements) if elements.is_empty() => f.write_str("Array(Unknown)"),
            TypeDescriptor::Array(elements) => {
                f.write_str("Array(")?;
                for (i, t) in elements.iter().enumerate() {
                    if i > 0 {
                        f.write_str("|")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            TypeDescriptor::Reference { target, multivalued: false } => write!(f, "Ref({target})"),
            TypeDescriptor::Reference { target, multivalued: true } => write!(f, "Ref[]({target})"),
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid type name `{0}`")]
pub struct InvalidTypeName(pub String);

impl FromStr for TypeDescriptor {
    type Err = InvalidTypeName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut rest = s;
        let t = parse_type(&mut rest).ok_or_else(|| InvalidTypeName(s.to_string()))?;
        if rest.is_empty() {
            Ok(t)
        } else {
            Err(InvalidTypeName(s.to_string()))
        }
    }
}

fn parse_type(input: &mut &str) -> Option<TypeDescriptor> {
    const SIMPLE: [(&str, TypeDescriptor); 7] = [
        ("Null", TypeDescriptor::Null),
        ("Boolean", TypeDescriptor::Boolean),
        ("Integer", TypeDescriptor::Integer),
        ("Double", TypeDescriptor::Double),
        ("String", TypeDescriptor::String),
        ("ObjectId", TypeDescriptor::ObjectId),
        ("Document", TypeDescriptor::Document),
    ];
    if let Some(rest) = input.strip_prefix("Array(") {
        *input = rest;
        let mut elements = BTreeSet::new();
        if let Some(rest) = input.strip_prefix("Unknown)") {
            *input = rest;
            return Some(TypeDescriptor::Array(elements));
        }
        loop {
            elements.insert(parse_type(input)?);
            if let Some(rest) = input.strip_prefix('|') {
                *input = rest;
                continue;
            }
            *input = input.strip_prefix(')')?;
            return Some(TypeDescriptor::Array(elements));
        }
    }
    for (prefix, multivalued) in [("Ref[](", true), ("Ref(", false)] {
        if let Some(rest) = input.strip_prefix(prefix) {
            let end = rest.find(')')?;
            let target = &rest[..end];
            if target.is_empty() {
                return None;
            }
            *input = &rest[end + 1..];
            return Some(TypeDescriptor::Reference { target: target.to_string(), multivalued });
        }
    }
    for (name, t) in SIMPLE {
        if let Some(rest) = input.strip_prefix(name) {
            *input = rest;
            return Some(t);
        }
    }
    None
}

/// One step of an attribute path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Field(String),
    /// The `[]` marker: descends into the documents held by an array.
    Element,
}

/// Address of an attribute inside a collection, e.g. `address.city` or
/// `antecedents[].code`.
///
/// Ordering is the byte order of the printed form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttrPath(Vec<Segment>);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("empty path")]
    Empty,
    #[error("invalid field name `{0}`: {1}")]
    InvalidName(String, &'static str),
    #[error("path `{0}` must start with a field name")]
    LeadingElement(String),
}

/// Checks a field name against the rules shared by every input format.
pub fn validate_field_name(name: &str) -> Result<(), PathError> {
    let reason = if name.is_empty() {
        "empty name"
    } else if name.contains('.') {
        "contains `.`"
    } else if name.starts_with('$') {
        "starts with `$`"
    } else if name.contains("[]") {
        "contains `[]`"
    } else {
        return Ok(());
    };
    Err(PathError::InvalidName(name.to_string(), reason))
}

impl AttrPath {
    pub fn field(name: impl Into<String>) -> Self {
        AttrPath(vec![Segment::Field(name.into())])
    }

    /// Parses a dotted operator path such as `address.city` (no `[]`).
    pub fn parse_dotted(s: &str) -> Result<Self, PathError> {
        if s.is_empty() {
            return Err(PathError::Empty);
        }
        let mut segments = Vec::new();
        for part in s.split('.') {
            validate_field_name(part)?;
            segments.push(Segment::Field(part.to_string()));
        }
        Ok(AttrPath(segments))
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, name: &str) -> Self {
        let mut segments = Vec::with_capacity(self.0.len() + 1);
        segments.extend_from_slice(&self.0);
        segments.push(Segment::Field(name.to_string()));
        AttrPath(segments)
    }

    pub fn element(&self) -> Self {
        let mut segments = Vec::with_capacity(self.0.len() + 1);
        segments.extend_from_slice(&self.0);
        segments.push(Segment::Element);
        AttrPath(segments)
    }

    /// Name of the last segment, if it is a field.
    pub fn last_field(&self) -> Option<&str> {
        match self.0.last() {
            Some(Segment::Field(name)) => Some(name),
            _ => None,
        }
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|s| match s {
            Segment::Field(name) => Some(name.as_str()),
            Segment::Element => None,
        })
    }

    pub fn has_element(&self) -> bool {
        self.0.contains(&Segment::Element)
    }

    /// Every strict prefix, shortest first.
    pub fn proper_prefixes(&self) -> impl Iterator<Item = AttrPath> + '_ {
        (1..self.0.len()).map(|n| AttrPath(self.0[..n].to_vec()))
    }

    /// Parent path, skipping a trailing `[]` marker.
    pub fn container(&self) -> Option<AttrPath> {
        let mut end = self.0.len().checked_sub(1)?;
        while end > 0 && self.0[end - 1] == Segment::Element {
            end -= 1;
        }
        if end == 0 {
            None
        } else {
            Some(AttrPath(self.0[..end].to_vec()))
        }
    }

    /// True when `self` equals `root` or lies below it.
    pub fn is_within(&self, root: &AttrPath) -> bool {
        self.0.starts_with(&root.0)
    }

    /// True when one of the two paths lies within the other.
    pub fn overlaps(&self, other: &AttrPath) -> bool {
        self.is_within(other) || other.is_within(self)
    }

    /// Same path with its last segment replaced by `name`.
    pub fn with_last(&self, name: &str) -> AttrPath {
        let mut segments = self.0.clone();
        if let Some(last) = segments.last_mut() {
            *last = Segment::Field(name.to_string());
        }
        AttrPath(segments)
    }

    /// Moves `self` from under `from` to under `to`. `self` must lie within `from`.
    pub fn reroot(&self, from: &AttrPath, to: &AttrPath) -> AttrPath {
        debug_assert!(self.is_within(from));
        let mut segments = to.0.clone();
        segments.extend_from_slice(&self.0[from.0.len()..]);
        AttrPath(segments)
    }

    fn printed_bytes(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().enumerate().flat_map(|(i, seg)| match seg {
            Segment::Field(name) => {
                let sep = (i > 0).then_some(b'.');
                sep.into_iter().chain(name.as_bytes().iter().copied())
            }
            Segment::Element => None.into_iter().chain(b"[]".iter().copied()),
        })
    }
}

impl Ord for AttrPath {
    fn cmp(&self, other: &Self) -> Ordering {
        let first_difference = self.0.iter().zip(&other.0).find(|(a, b)| a != b);
        match first_difference {
            None => self.0.len().cmp(&other.0.len()),
            Some((Segment::Field(a), Segment::Field(b))) => {
                // Equal prefixes print identically, so a byte difference
                // inside the shorter name decides.
                match a.bytes().zip(b.bytes()).find(|(x, y)| x != y) {
                    Some((x, y)) => x.cmp(&y),
                    None => self.printed_bytes().cmp(other.printed_bytes()),
                }
            }
            Some(_) => self.printed_bytes().cmp(other.printed_bytes()),
        }
    }
}

impl PartialOrd for AttrPath {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AttrPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Segment::Field(name) if i == 0 => f.write_str(name)?,
                Segment::Field(name) => write!(f, ".{name}")?,
                Segment::Element => f.write_str("[]")?,
            }
        }
        Ok(())
    }
}

impl FromStr for AttrPath {
    type Err = PathError;

    /// Parses the printed form, including `[]` markers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(PathError::Empty);
        }
        let mut segments = Vec::new();
        for part in s.split('.') {
            let mut name = part;
            let mut elements = 0;
            while let Some(rest) = name.strip_suffix("[]") {
                name = rest;
                elements += 1;
            }
            validate_field_name(name)?;
            segments.push(Segment::Field(name.to_string()));
            segments.extend(std::iter::repeat_n(Segment::Element, elements));
        }
        Ok(AttrPath(segments))
    }
}

/// Maps a value to its type. Array element types are merged into a set.
pub fn infer_type(value: &Value) -> TypeDescriptor {
    match value {
        Value::Null => TypeDescriptor::Null,
        Value::Boolean(_) => TypeDescriptor::Boolean,
        Value::Integer(_) => TypeDescriptor::Integer,
        Value::Double(_) => TypeDescriptor::Double,
        Value::Text(_) => TypeDescriptor::String,
        Value::ObjectId(_) => TypeDescriptor::ObjectId,
        Value::Array(items) => TypeDescriptor::Array(items.iter().map(infer_type).collect()),
        Value::Document(_) => TypeDescriptor::Document,
    }
}

/// Flattens a field list into `(path, type)` pairs sorted by printed path.
///
/// Emits one pair per field at every nesting level, descending into
/// documents (`a.b`) and into documents held by arrays (`a[].b`). Pairs are
/// deduplicated, so an array whose documents disagree on a field's type
/// yields one pair per distinct type.
pub fn flatten_fields(fields: &[(String, Value)]) -> Vec<(AttrPath, TypeDescriptor)> {
    let mut out = Signature::new();
    for (name, value) in fields {
        flatten_value_into(AttrPath::field(name.as_str()), value, &mut out);
    }
    out.into_iter().collect()
}

/// Adds the pairs contributed by `value` stored at `path`.
pub fn flatten_value_into(path: AttrPath, value: &Value, out: &mut Signature) {
    match value {
        Value::Document(fields) => {
            for (name, child) in fields {
                flatten_value_into(path.child(name), child, out);
            }
        }
        Value::Array(items) => {
            let mut element_path = None;
            for item in items {
                if let Value::Document(fields) = item {
                    let base = element_path.get_or_insert_with(|| path.element());
                    for (name, child) in fields {
                        flatten_value_into(base.child(name), child, out);
                    }
                }
            }
        }
        _ => {}
    }
    out.insert((path, infer_type(value)));
}

// Serde: JSON encoding shared by the JSON-lines format and reports.

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => serializer.serialize_unit(),
            Value::Boolean(b) => serializer.serialize_bool(*b),
            Value::Integer(i) => serializer.serialize_i64(*i),
            Value::Double(d) => serializer.serialize_f64(*d),
            Value::Text(s) => serializer.serialize_str(s),
            Value::ObjectId(oid) => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("$oid", oid)?;
                map.end()
            }
            Value::Array(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            Value::Document(fields) => {
                let mut map = serializer.serialize_map(Some(fields.len()))?;
                for (k, v) in fields {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_unit<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_none<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_bool<E>(self, v: bool) -> Result<Value, E> {
        Ok(Value::Boolean(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<Value, E> {
        Ok(Value::Integer(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Value, E> {
        i64::try_from(v)
            .map(Value::Integer)
            .map_err(|_| E::custom(format!("integer {v} out of range")))
    }

    fn visit_f64<E>(self, v: f64) -> Result<Value, E> {
        Ok(Value::Double(v))
    }

    fn visit_str<E>(self, v: &str) -> Result<Value, E> {
        Ok(Value::Text(v.to_string()))
    }

    fn visit_string<E>(self, v: String) -> Result<Value, E> {
        Ok(Value::Text(v))
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut items = Vec::new();
        while let Some(item) = seq.next_element()? {
            items.push(item);
        }
        Ok(Value::Array(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Value, A::Error> {
        let mut fields: Vec<(String, Value)> = Vec::new();
        while let Some((key, value)) = map.next_entry::<String, Value>()? {
            if fields.iter().any(|(k, _)| *k == key) {
                return Err(de::Error::custom(format!("duplicate field `{key}`")));
            }
            fields.push((key, value));
        }
        if let [(key, Value::Text(oid))] = fields.as_slice() {
            if key == "$oid" {
                return Ok(Value::ObjectId(oid.clone()));
            }
        }
        Ok(Value::Document(fields))
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        deserializer.deserialize_any(ValueVisitor)
    }
}

impl Serialize for TypeDescriptor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            TypeDescriptor::Reference { target, multivalued } => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry("ref", target)?;
                map.serialize_entry("multi", multivalued)?;
                map.end()
            }
            other => serializer.collect_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for TypeDescriptor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TypeVisitor;

        impl<'de> Visitor<'de> for TypeVisitor {
            type Value = TypeDescriptor;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a type name or a {\"ref\", \"multi\"} object")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<TypeDescriptor, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<TypeDescriptor, A::Error> {
                let mut target = None;
                let mut multivalued = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "ref" => target = Some(map.next_value::<String>()?),
                        "multi" => multivalued = Some(map.next_value::<bool>()?),
                        other => return Err(de::Error::unknown_field(other, &["ref", "multi"])),
                    }
                }
                Ok(TypeDescriptor::Reference {
                    target: target.ok_or_else(|| de::Error::missing_field("ref"))?,
                    multivalued: multivalued.ok_or_else(|| de::Error::missing_field("multi"))?,
                })
            }
        }

        deserializer.deserialize_any(TypeVisitor)
    }
}

impl Serialize for AttrPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttrPath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> AttrPath {
        s.parse().unwrap()
    }

    fn text(s: &str) -> Value {
        Value::Text(s.to_string())
    }

    #[test]
    fn infers_scalar_types() {
        assert_eq!(infer_type(&text("DUPONT David")), TypeDescriptor::String);
        assert_eq!(infer_type(&Value::Integer(41)), TypeDescriptor::Integer);
        assert_eq!(infer_type(&Value::Double(37.2)), TypeDescriptor::Double);
        assert_eq!(infer_type(&Value::Null), TypeDescriptor::Null);
    }

    #[test]
    fn infers_heterogeneous_array() {
        let v = Value::Array(vec![Value::Integer(1), text("a"), Value::Integer(7)]);
        let t = infer_type(&v);
        assert_eq!(
            t,
            TypeDescriptor::Array([TypeDescriptor::Integer, TypeDescriptor::String].into())
        );
        assert_eq!(t.to_string(), "Array(Integer|String)");
        assert_eq!(infer_type(&Value::Array(vec![])).to_string(), "Array(Unknown)");
    }

    #[test]
    fn flattens_single_atomic_field() {
        let out = flatten_fields(&[("age".into(), Value::Integer(42))]);
        assert_eq!(out, vec![(p("age"), TypeDescriptor::Integer)]);
    }

    #[test]
    fn flattens_nested_document() {
        let out = flatten_fields(&[(
            "address".into(),
            Value::Document(vec![("city".into(), text("Toulouse"))]),
        )]);
        assert_eq!(
            out,
            vec![
                (p("address"), TypeDescriptor::Document),
                (p("address.city"), TypeDescriptor::String),
            ]
        );
    }

    #[test]
    fn flattens_scalar_array_without_descending() {
        let out = flatten_fields(&[(
            "scores".into(),
            Value::Array(vec![Value::Integer(1), Value::Integer(2)]),
        )]);
        assert_eq!(
            out,
            vec![(p("scores"), TypeDescriptor::Array([TypeDescriptor::Integer].into()))]
        );
    }

    #[test]
    fn flattens_documents_inside_arrays() {
        let out = flatten_fields(&[(
            "antecedents".into(),
            Value::Array(vec![
                Value::Document(vec![("code".into(), text("A1"))]),
                Value::Document(vec![("code".into(), Value::Integer(3))]),
            ]),
        )]);
        let printed: Vec<String> = out.iter().map(|(p, t)| format!("{p}:{t}")).collect();
        assert_eq!(
            printed,
            ["antecedents:Array(Document)", "antecedents[].code:Integer", "antecedents[].code:String"]
        );
    }

    #[test]
    fn output_is_sorted_by_printed_path() {
        let out = flatten_fields(&[
            ("address_x".into(), Value::Integer(1)),
            ("address".into(), Value::Document(vec![("city".into(), text("x"))])),
            ("address-x".into(), Value::Integer(1)),
        ]);
        let printed: Vec<String> = out.iter().map(|(p, _)| p.to_string()).collect();
        assert_eq!(printed, ["address", "address-x", "address.city", "address_x"]);
    }

    #[test]
    fn type_names_round_trip() {
        for name in [
            "Null",
            "Boolean",
            "Integer",
            "Double",
            "String",
            "ObjectId",
            "Document",
            "Array(Unknown)",
            "Array(Array(Integer|String)|Document)",
            "Ref(Doctors)",
            "Ref[](Antecedents)",
        ] {
            let t: TypeDescriptor = name.parse().unwrap();
            assert_eq!(t.to_string(), name);
        }
        assert!("Array(Integer".parse::<TypeDescriptor>().is_err());
        assert!("Strings".parse::<TypeDescriptor>().is_err());
        assert!("Ref()".parse::<TypeDescriptor>().is_err());
    }

    #[test]
    fn paths_print_and_parse() {
        let path = AttrPath::field("antecedents").element().child("code");
        assert_eq!(path.to_string(), "antecedents[].code");
        assert_eq!(p("antecedents[].code"), path);
        assert_eq!(path.container(), Some(p("antecedents")));
        assert_eq!(p("address.city").container(), Some(p("address")));
        assert_eq!(p("age").container(), None);
        assert!("a..b".parse::<AttrPath>().is_err());
        assert!("$set".parse::<AttrPath>().is_err());
        assert!(AttrPath::parse_dotted("a[]").is_err());
    }

    #[test]
    fn reroot_and_within() {
        let from = p("address");
        let to = p("home");
        assert_eq!(p("address.city").reroot(&from, &to), p("home.city"));
        assert!(p("address.city").is_within(&from));
        assert!(!p("addressee").is_within(&from));
        assert!(p("address").overlaps(&p("address.city")));
    }

    #[test]
    fn object_id_and_duplicates_in_json() {
        let v: Value = serde_json::from_str(r#"{"a":{"$oid":"abc"},"b":2.0,"c":2}"#).unwrap();
        assert_eq!(
            v,
            Value::Document(vec![
                ("a".into(), Value::ObjectId("abc".into())),
                ("b".into(), Value::Double(2.0)),
                ("c".into(), Value::Integer(2)),
            ])
        );
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":{"$oid":"abc"},"b":2.0,"c":2}"#);
        assert!(serde_json::from_str::<Value>(r#"{"a":1,"a":2}"#).is_err());
    }

    #[test]
    fn reference_types_serialize_as_objects() {
        let t = TypeDescriptor::Reference { target: "Doctors".into(), multivalued: false };
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"ref":"Doctors","multi":false}"#);
        assert_eq!(serde_json::from_str::<TypeDescriptor>(&json).unwrap(), t);
        assert_eq!(serde_json::to_string(&TypeDescriptor::Integer).unwrap(), r#""Integer""#);
    }
}
