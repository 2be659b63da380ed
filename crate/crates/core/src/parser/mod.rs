//! Mutation statements: the query AST, the two textual input formats
//! (shell statements and JSON-lines records), and printing back to text.

mod jsonl;
mod print;
mod shell;

use std::fmt;

use thiserror::Error;

use crate::types::{validate_field_name, AttrPath, Segment, Value};

pub use jsonl::{parse_jsonl, print_jsonl};
pub use print::print_statement;
pub use shell::parse_statement;

/// One parsed insert, delete or update statement.
#[derive(Debug, Clone, PartialEq)]
pub enum MutationQuery {
    Insert {
        collection: String,
        /// `None` when the statement carries no `_id`; the engine then
        /// synthesizes one.
        id: Option<String>,
        fields: Vec<(String, Value)>,
    },
    Delete {
        collection: String,
        id: String,
    },
    Update {
        collection: String,
        id: String,
        ops: Vec<UpdateOp>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum UpdateOp {
    Set { path: AttrPath, value: Value },
    Unset { path: AttrPath },
    /// Renames the last segment of `path`, staying at the same level.
    Rename { path: AttrPath, new_name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Insert,
    Delete,
    Update,
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryKind::Insert => "insert",
            QueryKind::Delete => "delete",
            QueryKind::Update => "update",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unsupported statement: {0}")]
    Unsupported(String),
    #[error("duplicate or conflicting path `{0}`")]
    DuplicatePath(String),
    #[error("invalid statement: {0}")]
    Invalid(String),
}

impl MutationQuery {
    pub fn collection(&self) -> &str {
        match self {
            MutationQuery::Insert { collection, .. }
            | MutationQuery::Delete { collection, .. }
            | MutationQuery::Update { collection, .. } => collection,
        }
    }

    pub fn kind(&self) -> QueryKind {
        match self {
            MutationQuery::Insert { .. } => QueryKind::Insert,
            MutationQuery::Delete { .. } => QueryKind::Delete,
            MutationQuery::Update { .. } => QueryKind::Update,
        }
    }

    /// Groups update operators as `$set`, `$unset`, `$rename`, keeping their
    /// relative order. Shell text cannot interleave operators, so this is
    /// the form a shell round trip reproduces.
    pub fn canonical(&self) -> MutationQuery {
        match self {
            MutationQuery::Update { collection, id, ops } => {
                let mut ops = ops.clone();
                ops.sort_by_key(|op| match op {
                    UpdateOp::Set { .. } => 0,
                    UpdateOp::Unset { .. } => 1,
                    UpdateOp::Rename { .. } => 2,
                });
                MutationQuery::Update { collection: collection.clone(), id: id.clone(), ops }
            }
            other => other.clone(),
        }
    }

    /// Checks the invariants every input format must establish.
    pub fn validate(&self) -> Result<(), ParseError> {
        validate_collection(self.collection())?;
        match self {
            MutationQuery::Insert { fields, .. } => {
                if fields.iter().any(|(name, _)| name == "_id") {
                    return Err(ParseError::Invalid("`_id` must not appear among the fields".into()));
                }
                validate_fields(fields)
            }
            MutationQuery::Delete { .. } => Ok(()),
            MutationQuery::Update { ops, .. } => validate_ops(ops),
        }
    }
}

impl UpdateOp {
    pub fn path(&self) -> &AttrPath {
        match self {
            UpdateOp::Set { path, .. } | UpdateOp::Unset { path } | UpdateOp::Rename { path, .. } => path,
        }
    }
}

fn validate_collection(name: &str) -> Result<(), ParseError> {
    if name.is_empty() || name.contains('.') || name.chars().any(char::is_whitespace) || name.starts_with('$') {
        return Err(ParseError::Invalid(format!("invalid collection name `{name}`")));
    }
    Ok(())
}

fn validate_fields(fields: &[(String, Value)]) -> Result<(), ParseError> {
    for (i, (name, value)) in fields.iter().enumerate() {
        validate_field_name(name).map_err(|e| ParseError::Invalid(e.to_string()))?;
        if fields[..i].iter().any(|(other, _)| other == name) {
            return Err(ParseError::DuplicatePath(name.clone()));
        }
        validate_value(value)?;
    }
    Ok(())
}

fn validate_value(value: &Value) -> Result<(), ParseError> {
    match value {
        Value::Document(fields) => validate_fields(fields),
        Value::Array(items) => items.iter().try_for_each(validate_value),
        _ => Ok(()),
    }
}

fn validate_op_path(path: &AttrPath) -> Result<(), ParseError> {
    for seg in path.segments() {
        match seg {
            Segment::Element => {
                return Err(ParseError::Invalid(format!("`[]` is not allowed in operator path `{path}`")))
            }
            Segment::Field(name) => {
                validate_field_name(name).map_err(|e| ParseError::Invalid(e.to_string()))?;
                if name.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(ParseError::Unsupported(format!("positional path `{path}`")));
                }
            }
        }
    }
    if path.field_names().next() == Some("_id") {
        return Err(ParseError::Unsupported("`_id` cannot be modified".into()));
    }
    Ok(())
}

fn validate_ops(ops: &[UpdateOp]) -> Result<(), ParseError> {
    let mut targets: Vec<AttrPath> = Vec::with_capacity(ops.len());
    for op in ops {
        validate_op_path(op.path())?;
        let mut claimed = vec![op.path().clone()];
        if let UpdateOp::Set { value, .. } = op {
            validate_value(value)?;
        }
        if let UpdateOp::Rename { path, new_name } = op {
            validate_field_name(new_name).map_err(|e| ParseError::Invalid(e.to_string()))?;
            let dest = path.with_last(new_name);
            validate_op_path(&dest)?;
            if &dest == path {
                return Err(ParseError::DuplicatePath(path.to_string()));
            }
            claimed.push(dest);
        }
        for path in claimed {
            if let Some(other) = targets.iter().find(|t| t.overlaps(&path)) {
                let shorter = if other.len() <= path.len() { other } else { &path };
                return Err(ParseError::DuplicatePath(shorter.to_string()));
            }
            targets.push(path);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Shell,
    Jsonl,
}

/// Outcome for one line of a query log.
#[derive(Debug, Clone, PartialEq)]
pub enum LogLine {
    Query(MutationQuery),
    /// Blank line or `//` / `#` comment.
    Blank,
    Error(ParseError),
}

/// Parses one line in the given format.
pub fn parse_line(line: &str, format: LogFormat) -> LogLine {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with("//") || trimmed.starts_with('#') {
        return LogLine::Blank;
    }
    let parsed = match format {
        LogFormat::Shell => parse_statement(trimmed),
        LogFormat::Jsonl => parse_jsonl(trimmed),
    };
    match parsed {
        Ok(q) => LogLine::Query(q),
        Err(e) => LogLine::Error(e),
    }
}

/// Lazily parses a sequence of lines, yielding exactly one numbered item
/// (1-based) per input line. Bad lines never stop the stream.
pub fn parse_log<I>(lines: I, format: LogFormat) -> impl Iterator<Item = (usize, LogLine)>
where
    I: IntoIterator,
    I::Item: AsRef<str>,
{
    lines
        .into_iter()
        .enumerate()
        .map(move |(i, line)| (i + 1, parse_line(line.as_ref(), format)))
}
