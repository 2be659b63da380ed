//! Shell-style statements:
//!
//! ```text
//! db.<coll>.insertOne({ ... })
//! db.<coll>.deleteOne({_id: <id>})
//! db.<coll>.updateOne({_id: <id>}, {$set: {...}, $unset: {...}, $rename: {...}})
//! ```
//!
//! Document literals are JSON with unquoted keys, single-quoted strings,
//! trailing commas and `ObjectId("...")` allowed. `db.getCollection("name")`
//! may stand in for `db.<coll>`.

use super::{MutationQuery, ParseError, UpdateOp};
use crate::types::{AttrPath, Value};

const OTHER_METHODS: &[&str] = &[
    "insertMany",
    "updateMany",
    "deleteMany",
    "replaceOne",
    "find",
    "findOne",
    "aggregate",
    "count",
    "countDocuments",
    "estimatedDocumentCount",
    "distinct",
    "bulkWrite",
    "findOneAndUpdate",
    "findOneAndDelete",
    "findOneAndReplace",
    "insert",
    "update",
    "remove",
    "drop",
    "createIndex",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    Semi,
    Ident(String),
    Str(String),
    Number(String),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn syntax(column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { column, message: message.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// True when `s` can be written as a bare shell key or collection name.
pub(super) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char)
}

/// Tokens paired with their 1-based starting column.
fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            ';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            toks.push((tok, column));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '"' || c == '\'' {
            let (s, next) = lex_string(&chars, i)?;
            toks.push((Tok::Str(s), column));
            i = next;
        } else if c == '-' || c.is_ascii_digit() {
            let (n, next) = lex_number(&chars, i)?;
            toks.push((Tok::Number(n), column));
            i = next;
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), column));
        } else {
            return Err(syntax(column, format!("unexpected character `{c}`")));
        }
    }
    toks.push((Tok::Eof, chars.len() + 1));
    Ok(toks)
}

fn lex_string(chars: &[char], start: usize) -> Result<(String, usize), ParseError> {
    let quote = chars[start];
    let mut out = String::new();
    let mut i = start + 1;
    loop {
        let Some(&c) = chars.get(i) else {
            return Err(syntax(start + 1, "unterminated string"));
        };
        i += 1;
        if c == quote {
            return Ok((out, i));
        }
        if c != '\\' {
            out.push(c);
            continue;
        }
        let Some(&esc) = chars.get(i) else {
            return Err(syntax(i, "unterminated escape"));
        };
        i += 1;
        match esc {
            '"' | '\'' | '\\' | '/' => out.push(esc),
            'b' => out.push('\u{8}'),
            'f' => out.push('\u{c}'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'u' => {
                let (unit, next) = hex4(chars, i)?;
                i = next;
                let code = if (0xD800..0xDC00).contains(&unit) {
                    if chars.get(i) != Some(&'\\') || chars.get(i + 1) != Some(&'u') {
                        return Err(syntax(i + 1, "expected low surrogate escape"));
                    }
                    let (low, next) = hex4(chars, i + 2)?;
                    if !(0xDC00..0xE000).contains(&low) {
                        return Err(syntax(i + 1, "invalid low surrogate"));
                    }
                    i = next;
                    0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00)
                } else {
                    unit
                };
                out.push(char::from_u32(code).ok_or_else(|| syntax(i, "invalid unicode escape"))?);
            }
            other => return Err(syntax(i, format!("invalid escape `\\{other}`"))),
        }
    }
}

fn hex4(chars: &[char], start: usize) -> Result<(u32, usize), ParseError> {
    let digits: String = chars.get(start..start + 4).unwrap_or_default().iter().collect();
    if digits.len() != 4 {
        return Err(syntax(start + 1, "expected four hex digits"));
    }
    u32::from_str_radix(&digits, 16)
        .map(|v| (v, start + 4))
        .map_err(|_| syntax(start + 1, "expected four hex digits"))
}

fn lex_number(chars: &[char], start: usize) -> Result<(String, usize), ParseError> {
    let mut i = start;
    let digits = |i: &mut usize| {
        let from = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        *i > from
    };
    if chars[i] == '-' {
        i += 1;
    }
    if !digits(&mut i) {
        return Err(syntax(i + 1, "expected digit"));
    }
    if chars.get(i) == Some(&'.') {
        i += 1;
        if !digits(&mut i) {
            return Err(syntax(i + 1, "expected digit after `.`"));
        }
    }
    if matches!(chars.get(i), Some('e' | 'E')) {
        i += 1;
        if matches!(chars.get(i), Some('+' | '-')) {
            i += 1;
        }
        if !digits(&mut i) {
            return Err(syntax(i + 1, "expected exponent digits"));
        }
    }
    Ok((chars[start..i].iter().collect(), i))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if tok != Tok::Eof {
            self.pos += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        syntax(self.column(), format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn string(&mut self, expected: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Str(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let column = self.column();
        match self.bump() {
            Tok::LBrace => self.document_rest().map(Value::Document),
            Tok::LBracket => {
                let mut items = Vec::new();
                while !self.eat(&Tok::RBracket) {
                    items.push(self.value()?);
                    if !self.eat(&Tok::Comma) {
                        self.expect(Tok::RBracket)?;
                        break;
                    }
                }
                Ok(Value::Array(items))
            }
            Tok::Str(s) => Ok(Value::Text(s)),
            Tok::Number(n) => number(&n, column),
            Tok::Ident(word) => match word.as_str() {
                "true" => Ok(Value::Boolean(true)),
                "false" => Ok(Value::Boolean(false)),
                "null" => Ok(Value::Null),
                "new" => {
                    if self.ident("`ObjectId`")? != "ObjectId" {
                        return Err(syntax(column, "expected `ObjectId` after `new`"));
                    }
                    self.object_id_rest()
                }
                "ObjectId" => self.object_id_rest(),
                _ => Err(syntax(column, format!("expected a value, found identifier `{word}`"))),
            },
            other => Err(syntax(column, format!("expected a value, found {}", other.describe()))),
        }
    }

    fn object_id_rest(&mut self) -> Result<Value, ParseError> {
        self.expect(Tok::LParen)?;
        let hex = self.string("ObjectId string")?;
        self.expect(Tok::RParen)?;
        Ok(Value::ObjectId(hex))
    }

    /// Parses the members of a document after its opening brace.
    fn document_rest(&mut self) -> Result<Vec<(String, Value)>, ParseError> {
        let mut fields: Vec<(String, Value)> = Vec::new();
        while !self.eat(&Tok::RBrace) {
            let key = match self.peek() {
                Tok::Ident(s) | Tok::Str(s) | Tok::Number(s) => s.clone(),
                _ => return Err(self.unexpected("a field name or `}`")),
            };
            self.bump();
            self.expect(Tok::Colon)?;
            let value = self.value()?;
            if fields.iter().any(|(k, _)| *k == key) {
                return Err(ParseError::DuplicatePath(key));
            }
            fields.push((key, value));
            if !self.eat(&Tok::Comma) {
                self.expect(Tok::RBrace)?;
                break;
            }
        }
        Ok(fields)
    }
}

fn number(literal: &str, column: usize) -> Result<Value, ParseError> {
    if literal.contains(['.', 'e', 'E']) {
        literal
            .parse::<f64>()
            .ok()
            .filter(|d| d.is_finite())
            .map(Value::Double)
            .ok_or_else(|| syntax(column, format!("number `{literal}` out of range")))
    } else {
        literal
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| syntax(column, format!("integer `{literal}` out of range")))
    }
}

/// Parses one shell statement.
pub fn parse_statement(text: &str) -> Result<MutationQuery, ParseError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let head = p.ident("`db`")?;
    if head != "db" {
        return Err(match head.as_str() {
            "use" | "show" | "it" | "exit" => ParseError::Unsupported(format!("shell command `{head}`")),
            _ => syntax(1, format!("expected `db`, found identifier `{head}`")),
        });
    }
    p.expect(Tok::Dot)?;
    let mut collection = p.ident("a collection name")?;
    if collection == "getCollection" && *p.peek() == Tok::LParen {
        p.bump();
        collection = p.string("a collection name string")?;
        p.expect(Tok::RParen)?;
    }
    p.expect(Tok::Dot)?;
    let method_column = p.column();
    let method = p.ident("a method name")?;
    if !matches!(method.as_str(), "insertOne" | "deleteOne" | "updateOne") {
        return Err(if OTHER_METHODS.contains(&method.as_str()) {
            ParseError::Unsupported(format!("`{method}` is not a single-document mutation"))
        } else {
            ParseError::Unsupported(format!("unknown method `{method}` (column {method_column})"))
        });
    }
    p.expect(Tok::LParen)?;
    let mut args = Vec::new();
    while !p.eat(&Tok::RParen) {
        args.push((p.value()?, p.column()));
        if !p.eat(&Tok::Comma) {
            p.expect(Tok::RParen)?;
            break;
        }
    }
    p.eat(&Tok::Semi);
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of statement"));
    }

    let query = match method.as_str() {
        "insertOne" => insert(collection, args)?,
        "deleteOne" => {
            let [(filter, _)] = expect_args::<1>(args, "deleteOne")?;
            MutationQuery::Delete { collection, id: id_filter(filter)? }
        }
        _ => {
            let [(filter, _), (update, _)] = expect_args::<2>(args, "updateOne")?;
            MutationQuery::Update { collection, id: id_filter(filter)?, ops: update_ops(update)? }
        }
    };
    query.validate()?;
    Ok(query)
}

fn expect_args<const N: usize>(
    args: Vec<(Value, usize)>,
    method: &str,
) -> Result<[(Value, usize); N], ParseError> {
    let found = args.len();
    args.try_into().map_err(|_| {
        if found > N {
            ParseError::Unsupported(format!("`{method}` options are not supported"))
        } else {
            ParseError::Invalid(format!("`{method}` expects {N} argument(s), found {found}"))
        }
    })
}

fn insert(collection: String, args: Vec<(Value, usize)>) -> Result<MutationQuery, ParseError> {
    let [(doc, _)] = expect_args::<1>(args, "insertOne")?;
    let Value::Document(mut fields) = doc else {
        return Err(ParseError::Invalid("insertOne expects a document".into()));
    };
    let id = match fields.iter().position(|(k, _)| k == "_id") {
        Some(at) => Some(id_literal(fields.remove(at).1)?),
        None => None,
    };
    Ok(MutationQuery::Insert { collection, id, fields })
}

/// Normalizes an `_id` literal (string, integer or ObjectId) to its text.
pub(super) fn id_literal(value: Value) -> Result<String, ParseError> {
    match value {
        Value::Text(s) | Value::ObjectId(s) => Ok(s),
        Value::Integer(i) => Ok(i.to_string()),
        other => Err(ParseError::Invalid(format!("unsupported `_id` value {other:?}"))),
    }
}

fn id_filter(filter: Value) -> Result<String, ParseError> {
    match filter {
        Value::Document(mut fields) if fields.len() == 1 && fields[0].0 == "_id" => {
            id_literal(fields.pop().expect("one field").1)
        }
        _ => Err(ParseError::Unsupported("only `{_id: ...}` filters are supported".into())),
    }
}

fn op_path(key: &str) -> Result<AttrPath, ParseError> {
    AttrPath::parse_dotted(key).map_err(|e| ParseError::Invalid(e.to_string()))
}

fn update_ops(update: Value) -> Result<Vec<UpdateOp>, ParseError> {
    let Value::Document(operators) = update else {
        return Err(ParseError::Unsupported("pipeline updates are not supported".into()));
    };
    if operators.is_empty() {
        return Err(ParseError::Invalid("empty update document".into()));
    }
    let mut ops = Vec::new();
    for (operator, body) in operators {
        if !operator.starts_with('$') {
            return Err(ParseError::Unsupported("replacement-style updates are not supported".into()));
        }
        if !matches!(operator.as_str(), "$set" | "$unset" | "$rename") {
            return Err(ParseError::Unsupported(format!("update operator `{operator}`")));
        }
        let Value::Document(entries) = body else {
            return Err(ParseError::Invalid(format!("`{operator}` expects a document")));
        };
        for (key, value) in entries {
            let path = op_path(&key)?;
            ops.push(match operator.as_str() {
                "$set" => UpdateOp::Set { path, value },
                "$unset" => UpdateOp::Unset { path },
                _ => match value {
                    Value::Text(new_name) => UpdateOp::Rename { path, new_name },
                    _ => return Err(ParseError::Invalid(format!("`$rename` target for `{key}` must be a string"))),
                },
            });
        }
    }
    Ok(ops)
}
