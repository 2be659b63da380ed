//! Lockstep replay of a log through the incremental engine and the batch
//! oracle, comparing exports after each checked prefix.

use std::fmt;

use serde::Serialize;

use crate::links::LinkMode;
use crate::oracle::{CachedExtractor, MaterializedStore, ReplayOutcome};
use crate::parser::LogLine;
use crate::state::EngineState;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DivergenceKind {
    /// Exports differ; both texts are kept for the report.
    ModelMismatch { incremental: String, batch: String },
    Invariant { message: String },
    /// The engine and the store disagree on accepting the query.
    Outcome { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    /// 1-based log line of the last query in the failing prefix; 0 for the
    /// empty prefix.
    pub line: usize,
    #[serde(flatten)]
    pub kind: DivergenceKind,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DivergenceKind::ModelMismatch { .. } => {
                write!(f, "line {}: incremental model differs from batch extraction", self.line)
            }
            DivergenceKind::Invariant { message } => write!(f, "line {}: invariant violated: {message}", self.line),
            DivergenceKind::Outcome { message } => write!(f, "line {}: {message}", self.line),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub lines: usize,
    pub queries: usize,
    pub checks: usize,
    /// Line numbers and messages of unparsable lines, which are skipped.
    pub parse_errors: Vec<(usize, String)>,
    pub divergence: Option<Divergence>,
}

impl VerifyReport {
    pub fn is_equivalent(&self) -> bool {
        self.divergence.is_none()
    }
}

struct Lockstep {
    engine: EngineState,
    store: MaterializedStore,
    extractor: CachedExtractor,
    mode: LinkMode,
}

impl Lockstep {
    /// Export is a pure function of the model, so equal models export equal
    /// bytes; the texts are rendered and compared when the models differ and
    /// always on the final prefix.
    fn check(&mut self, line: usize, last: bool) -> Option<Divergence> {
        if let Err(v) = self.engine.check_invariants() {
            return Some(Divergence { line, kind: DivergenceKind::Invariant { message: v.to_string() } });
        }
        let incremental = self.engine.schema(self.mode);
        let batch = self.extractor.extract(&self.store, self.mode);
        if incremental == batch && !last {
            return None;
        }
        let (incremental, batch) = (incremental.to_canonical_json(), batch.to_canonical_json());
        (incremental != batch).then_some(Divergence { line, kind: DivergenceKind::ModelMismatch { incremental, batch } })
    }
}

/// Replays numbered log lines, checking the empty prefix, every `stride`-th
/// query and the final prefix. Stops at the first divergence.
pub fn verify_log<I>(items: I, mode: LinkMode, stride: usize) -> VerifyReport
where
    I: IntoIterator<Item = (usize, LogLine)>,
{
    let stride = stride.max(1);
    let mut run = Lockstep {
        engine: EngineState::new(),
        store: MaterializedStore::new(),
        extractor: CachedExtractor::new(),
        mode,
    };
    let mut report = VerifyReport::default();
    report.checks += 1;
    if let Some(d) = run.check(0, false) {
        report.divergence = Some(d);
        return report;
    }
    let mut last_checked = 0;
    let mut last_query_line = 0;
    for (line, item) in items {
        report.lines = line;
        let query = match item {
            LogLine::Query(q) => q,
            LogLine::Blank => continue,
            LogLine::Error(e) => {
                report.parse_errors.push((line, e.to_string()));
                continue;
            }
        };
        report.queries += 1;
        last_query_line = line;
        let engine_result = run.engine.apply(&query);
        let outcome = run.store.apply(&query);
        match (&engine_result, &outcome) {
            (Ok(_), ReplayOutcome::Applied { id }) => run.extractor.invalidate(query.collection(), id),
            (Ok(_), ReplayOutcome::Skipped) | (Err(_), ReplayOutcome::Rejected) => {}
            _ => {
                let message = format!("engine returned {engine_result:?}, store returned {outcome:?}");
                report.divergence = Some(Divergence { line, kind: DivergenceKind::Outcome { message } });
                return report;
            }
        }
        if report.queries % stride == 0 {
            report.checks += 1;
            last_checked = line;
            if let Some(d) = run.check(line, false) {
                report.divergence = Some(d);
                return report;
            }
        }
    }
    if last_query_line != last_checked {
        report.checks += 1;
    }
    report.divergence = run.check(last_query_line, true);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_log, LogFormat};

    #[test]
    fn empty_log_is_equivalent() {
        let report = verify_log(Vec::new(), LinkMode::Naming, 1);
        assert!(report.is_equivalent());
        assert_eq!(report.checks, 1);
    }

    #[test]
    fn small_log_with_every_rule() {
        let log = [
            r#"db.Doctors.insertOne({_id: "d1", name: "House"})"#,
            r#"db.Patients.insertOne({_id: "p1", age: 42, doctor_id: "d1", address: {city: "Toulouse"}})"#,
            r#"db.Patients.insertOne({_id: "p2", age: "old"})"#,
            "not a query",
            r#"db.Patients.updateOne({_id: "p1"}, {$set: {age: "x", weight: 70.5}, $rename: {address: "home"}})"#,
            r#"db.Patients.updateOne({_id: "p2"}, {$unset: {age: 1}})"#,
            r#"db.Patients.insertOne({_id: "p1"})"#,
            r#"db.Patients.deleteOne({_id: "p1"})"#,
            r#"db.Patients.deleteOne({_id: "zz"})"#,
        ];
        let report = verify_log(parse_log(log, LogFormat::Shell), LinkMode::Naming, 1);
        assert_eq!(report.divergence, None);
        assert_eq!(report.queries, 8);
        assert_eq!(report.checks, 9);
        assert_eq!(report.parse_errors.len(), 1);
        assert_eq!(report.parse_errors[0].0, 4);
    }

    #[test]
    fn stride_still_checks_final_prefix() {
        let log = [
            r#"db.P.insertOne({_id: "a", x: 1})"#,
            r#"db.P.insertOne({_id: "b", x: 1})"#,
            r#"db.P.insertOne({_id: "c", x: 1})"#,
        ];
        let report = verify_log(parse_log(log, LogFormat::Shell), LinkMode::Naming, 2);
        assert!(report.is_equivalent());
        assert_eq!(report.checks, 3);
    }
}
