use std::fs;

use q2m_core::state::StateError;
use q2m_core::{generate, EngineState, GenConfig, LinkMode};

#[test]
fn save_load_continue_matches_single_run() {
    let log = generate(&GenConfig { seed: 11, count: 1000, ..GenConfig::default() });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");

    let mut whole = EngineState::new();
    for q in &log {
        let _ = whole.apply(q);
    }

    for split in [0, 1, 499, 1000] {
        let mut first = EngineState::new();
        for q in &log[..split] {
            let _ = first.apply(q);
        }
        first.save(&path).unwrap();
        let mut second = EngineState::load(&path).unwrap();
        for q in &log[split..] {
            let _ = second.apply(q);
        }
        assert_eq!(second.export_model(LinkMode::Naming), whole.export_model(LinkMode::Naming), "split {split}");
        assert_eq!(second.to_state_json(), whole.to_state_json(), "split {split}");
    }
}

#[test]
fn tampered_state_is_rejected() {
    let log = generate(&GenConfig { seed: 12, count: 50, ..GenConfig::default() });
    let mut state = EngineState::new();
    for q in &log {
        let _ = state.apply(q);
    }
    let text = state.to_state_json();
    let tampered = text.replacen("\"count\": 1", "\"count\": 2", 1).replacen("\"count\":1", "\"count\":2", 1);
    assert_ne!(tampered, text);
    assert!(matches!(EngineState::from_state_json(&tampered), Err(StateError::Corrupt(_))));
    assert!(matches!(EngineState::from_state_json("{\"version\": 99}"), Err(StateError::Corrupt(_))));
    assert!(matches!(EngineState::from_state_json("not json"), Err(StateError::Corrupt(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(EngineState::load(&dir.path().join("absent.json")), Err(StateError::Io(_))));
    fs::write(dir.path().join("empty.json"), "").unwrap();
    assert!(matches!(EngineState::load(&dir.path().join("empty.json")), Err(StateError::Corrupt(_))));
}
