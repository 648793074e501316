use isomeric_core::runner::{run, RunConfig, RunError, Suite};

fn quick(suite: Suite, p: u64) -> RunConfig {
    let mut cfg = RunConfig::new(suite, p).with_order(4);
    cfg.orders.braid = 3;
    cfg.orders.sergeev = 3;
    cfg.samples.kernel = 20;
    cfg.samples.field = 50;
    cfg.samples.associativity = 10;
    cfg.samples.characters = 20;
    cfg
}

#[test]
fn every_suite_passes_at_p3() {
    for suite in Suite::EACH {
        let report = run(&quick(suite, 3), false).unwrap();
        let bad: Vec<_> = report.cases.iter().filter(|c| !c.passed()).collect();
        assert!(bad.is_empty(), "{suite:?}: {bad:#?}");
        assert!(report.summary.pass > 0);
    }
}

#[test]
fn char0_kkt_builds_the_expected_tower() {
    let mut cfg = RunConfig::new(Suite::Kkt, 0).with_order(6);
    cfg.window = Some(vec!["0".into(), "1".into(), "2".into()]);
    let report = run(&cfg, false).unwrap();
    assert!(report.all_passed());
    assert_eq!(report.environment["field"], "Q(sqrt(2), sqrt(6))");
}

#[test]
fn reports_are_deterministic_and_timing_free() {
    let cfg = quick(Suite::All, 3);
    let a = run(&cfg, false).unwrap().to_json();
    let b = run(&cfg, false).unwrap().to_json();
    assert_eq!(a, b);
    assert!(!a.contains("\"ms\""));
    let mut other = cfg.clone();
    other.seed = 99;
    assert_ne!(run(&other, false).unwrap().to_json(), a);
}

#[test]
fn suites_prefix_ids_only_when_combined() {
    let single = run(&quick(Suite::Cartan, 5), false).unwrap();
    assert!(single.cases.iter().all(|c| !c.id.starts_with("cartan/")));
    let all = run(&quick(Suite::All, 3), false).unwrap();
    assert!(all.cases.iter().any(|c| c.id.starts_with("bubbles/")));
}

#[test]
fn invalid_configs_are_config_errors() {
    let cases = [
        r#"{"suite":"qhc","p":9}"#,
        r#"{"suite":"qhc","p":2}"#,
        r#"{"suite":"qhc","p":5,"window":[]}"#,
        r#"{"suite":"qhc","p":5,"window":["0","0"]}"#,
        r#"{"suite":"qhc","p":0,"window":["-1"]}"#,
        r#"{"suite":"qhc","p":5,"orders":{"qhc":1}}"#,
        r#"{"suite":"nope","p":5}"#,
        r#"{"p":5}"#,
    ];
    for text in cases {
        let res = RunConfig::from_json(text).and_then(|c| run(&c, false));
        assert!(matches!(res, Err(RunError::Config(_))), "{text}: {res:?}");
    }
}
