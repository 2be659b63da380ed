use std::fmt::Write;

use super::shell::is_identifier;
use super::{MutationQuery, UpdateOp};
use crate::types::Value;

/// Prints a query as a shell statement that parses back to
/// [`MutationQuery::canonical`] of the input.
///
/// Non-finite doubles have no literal form and print as `null`.
pub fn print_statement(query: &MutationQuery) -> String {
    let mut out = String::from("db.");
    let collection = query.collection();
    if is_identifier(collection) && collection != "getCollection" {
        out.push_str(collection);
    } else {
        write!(out, "getCollection({})", quote(collection)).unwrap();
    }
    match query {
        MutationQuery::Insert { id, fields, .. } => {
            out.push_str(".insertOne({");
            let mut first = true;
            if let Some(id) = id {
                write!(out, "_id: {}", quote(id)).unwrap();
                first = false;
            }
            for (name, value) in fields {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                write_member(&mut out, name, value);
            }
            out.push_str("})");
        }
        MutationQuery::Delete { id, .. } => {
            write!(out, ".deleteOne({{_id: {}}})", quote(id)).unwrap();
        }
        MutationQuery::Update { id, ops, .. } => {
            write!(out, ".updateOne({{_id: {}}}, {{", quote(id)).unwrap();
            let sets: Vec<_> = ops.iter().filter(|op| matches!(op, UpdateOp::Set { .. })).collect();
            let unsets: Vec<_> = ops.iter().filter(|op| matches!(op, UpdateOp::Unset { .. })).collect();
            let renames: Vec<_> = ops.iter().filter(|op| matches!(op, UpdateOp::Rename { .. })).collect();
            let mut groups = Vec::new();
            if !sets.is_empty() || ops.is_empty() {
                groups.push(("$set", sets));
            }
            if !unsets.is_empty() {
                groups.push(("$unset", unsets));
            }
            if !renames.is_empty() {
                groups.push(("$rename", renames));
            }
            for (g, (operator, group)) in groups.iter().enumerate() {
                if g > 0 {
                    out.push_str(", ");
                }
                write!(out, "{operator}: {{").unwrap();
                for (i, op) in group.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let key = op.path().to_string();
                    match op {
                        UpdateOp::Set { value, .. } => write_member(&mut out, &key, value),
                        UpdateOp::Unset { .. } => write!(out, "{}: \"\"", key_text(&key)).unwrap(),
                        UpdateOp::Rename { new_name, .. } => {
                            write!(out, "{}: {}", key_text(&key), quote(new_name)).unwrap()
                        }
                    }
                }
                out.push('}');
            }
            out.push_str("})");
        }
    }
    out
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn key_text(key: &str) -> String {
    if is_identifier(key) {
        key.to_string()
    } else {
        quote(key)
    }
}

fn write_member(out: &mut String, name: &str, value: &Value) {
    out.push_str(&key_text(name));
    out.push_str(": ");
    write_value(out, value);
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Boolean(b) => write!(out, "{b}").unwrap(),
        Value::Integer(i) => write!(out, "{i}").unwrap(),
        // `{:?}` always keeps a `.` or an exponent, so the literal stays a double.
        Value::Double(d) if d.is_finite() => write!(out, "{d:?}").unwrap(),
        Value::Double(_) => out.push_str("null"),
        Value::Text(s) => out.push_str(&quote(s)),
        Value::ObjectId(hex) => write!(out, "ObjectId({})", quote(hex)).unwrap(),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Document(fields) => {
            out.push('{');
            for (i, (name, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_member(out, name, v);
            }
            out.push('}');
        }
    }
}
