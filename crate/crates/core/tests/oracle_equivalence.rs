use q2m_core::parser::{print_jsonl, LogLine};
use q2m_core::{generate, verify_log, GenConfig, LinkMode};

fn numbered(config: &GenConfig) -> Vec<(usize, LogLine)> {
    generate(config).into_iter().enumerate().map(|(i, q)| (i + 1, LogLine::Query(q))).collect()
}

#[test]
fn generated_logs_match_batch_extraction_after_every_query() {
    for seed in 0..10 {
        let config = GenConfig { seed, count: 1000, ..GenConfig::default() };
        let report = verify_log(numbered(&config), LinkMode::Naming, 1);
        assert_eq!(report.divergence, None, "seed {seed}");
        assert_eq!(report.checks, 1001);
    }
}

#[test]
fn heavy_conflicts_and_renames_stay_equivalent() {
    for seed in 100..105 {
        let config = GenConfig { seed, count: 800, conflict_rate: 0.3, rename_rate: 0.15, ..GenConfig::default() };
        for mode in [LinkMode::Naming, LinkMode::Oid, LinkMode::Off] {
            let report = verify_log(numbered(&config), mode, 1);
            assert_eq!(report.divergence, None, "seed {seed} mode {mode}");
        }
    }
}

#[test]
fn jsonl_text_of_generated_log_verifies() {
    let config = GenConfig { seed: 3, count: 500, ..GenConfig::default() };
    let text: Vec<String> = generate(&config).iter().map(print_jsonl).collect();
    let report = verify_log(q2m_core::parse_log(&text, q2m_core::LogFormat::Jsonl), LinkMode::Naming, 7);
    assert!(report.parse_errors.is_empty());
    assert_eq!(report.divergence, None);
}
