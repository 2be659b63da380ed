//! JSON-lines interchange records:
//!
//! ```text
//! {"op":"insert","coll":"Patients","id":"p1","fields":{"name":"DUPONT David","age":42}}
//! {"op":"delete","coll":"Patients","id":"p1"}
//! {"op":"update","coll":"Patients","id":"p1","ops":[{"set":{"path":"age","value":43}},{"unset":{"path":"weight"}},{"rename":{"path":"age","new":"birthYear"}}]}
//! ```

use serde::{Deserialize, Serialize};

use super::shell::id_literal;
use super::{MutationQuery, ParseError, UpdateOp};
use crate::types::{AttrPath, Value};

#[derive(Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Insert {
        coll: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<Value>,
        fields: Value,
    },
    Delete {
        coll: String,
        id: Value,
    },
    Update {
        coll: String,
        id: Value,
        ops: Vec<OpRecord>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum OpRecord {
    Set { path: String, value: Value },
    Unset { path: String },
    Rename { path: String, new: String },
}

fn op_path(path: &str) -> Result<AttrPath, ParseError> {
    AttrPath::parse_dotted(path).map_err(|e| ParseError::Invalid(e.to_string()))
}

/// Parses one JSON-lines record.
pub fn parse_jsonl(line: &str) -> Result<MutationQuery, ParseError> {
    let record: Record = serde_json::from_str(line).map_err(|e| ParseError::Syntax {
        column: e.column(),
        message: e.to_string(),
    })?;
    let query = match record {
        Record::Insert { coll, id, fields } => {
            let Value::Document(mut fields) = fields else {
                return Err(ParseError::Invalid("`fields` must be an object".into()));
            };
            let embedded = fields.iter().position(|(k, _)| k == "_id").map(|at| fields.remove(at).1);
            let id = match (id, embedded) {
                (Some(_), Some(_)) => {
                    return Err(ParseError::Invalid("`_id` given both as `id` and inside `fields`".into()))
                }
                (Some(id), None) | (None, Some(id)) => Some(id_literal(id)?),
                (None, None) => None,
            };
            MutationQuery::Insert { collection: coll, id, fields }
        }
        Record::Delete { coll, id } => MutationQuery::Delete { collection: coll, id: id_literal(id)? },
        Record::Update { coll, id, ops } => {
            let ops = ops
                .into_iter()
                .map(|op| {
                    Ok(match op {
                        OpRecord::Set { path, value } => UpdateOp::Set { path: op_path(&path)?, value },
                        OpRecord::Unset { path } => UpdateOp::Unset { path: op_path(&path)? },
                        OpRecord::Rename { path, new } => UpdateOp::Rename { path: op_path(&path)?, new_name: new },
                    })
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            MutationQuery::Update { collection: coll, id: id_literal(id)?, ops }
        }
    };
    query.validate()?;
    Ok(query)
}

/// Prints a query as one JSON-lines record (no trailing newline).
pub fn print_jsonl(query: &MutationQuery) -> String {
    let record = match query.clone() {
        MutationQuery::Insert { collection, id, fields } => Record::Insert {
            coll: collection,
            id: id.map(Value::Text),
            fields: Value::Document(fields),
        },
        MutationQuery::Delete { collection, id } => Record::Delete { coll: collection, id: Value::Text(id) },
        MutationQuery::Update { collection, id, ops } => Record::Update {
            coll: collection,
            id: Value::Text(id),
            ops: ops
                .into_iter()
                .map(|op| match op {
                    UpdateOp::Set { path, value } => OpRecord::Set { path: path.to_string(), value },
                    UpdateOp::Unset { path } => OpRecord::Unset { path: path.to_string() },
                    UpdateOp::Rename { path, new_name } => OpRecord::Rename { path: path.to_string(), new: new_name },
                })
                .collect(),
        },
    };
    serde_json::to_string(&record).expect("records always serialize")
}
