mod common;

use common::{generate, program, program_fixtures, spec, GenOptions, SPEC_FIXTURES};
use idcc::config::CheckConfig;
use idcc::engine::{check_revision, check_revision_instrumented};
use idcc::explore::replay;

#[test]
fn direct_and_instrumented_verdicts_agree_on_fixtures() {
    let config = CheckConfig::default();
    let fixtures = program_fixtures();
    assert!(fixtures.len() >= 10);
    let mut compared = 0;
    for name in &fixtures {
        let p = program(&format!("programs/{name}"));
        for s in SPEC_FIXTURES {
            let s = spec(s);
            let direct = check_revision(&p, &s, None, &config).unwrap();
            let inst = check_revision_instrumented(&p, &s, None, &config).unwrap();
            for (d, i) in direct.deps.iter().zip(&inst.deps) {
                assert_eq!(d.dep, i.dep);
                assert_eq!(d.verdict.class(), i.verdict.class(), "{name} {}", d.dep);
                compared += 1;
                if let Some(t) = i.verdict.trace() {
                    replay(&inst.cfg.main, t).unwrap_or_else(|e| panic!("{name} {}: {e}", d.dep));
                }
            }
        }
    }
    assert!(compared >= 30);
}

#[test]
fn direct_and_instrumented_verdicts_agree_on_generated_programs() {
    let config = CheckConfig::default();
    for seed in 0..150 {
        let g = generate(seed, &GenOptions { int_nondet: seed % 3 == 0, ..GenOptions::default() });
        let direct = check_revision(&g.program, &g.spec, None, &config).unwrap();
        let inst = check_revision_instrumented(&g.program, &g.spec, None, &config).unwrap();
        for (d, i) in direct.deps.iter().zip(&inst.deps) {
            assert_eq!(d.verdict.class(), i.verdict.class(), "seed {seed} {}\n{}", d.dep, g.source);
        }
    }
}

#[test]
fn history_revisions_agree_under_both_encodings() {
    let config = CheckConfig::default();
    let s = spec("psoc_spi");
    for dir in ["history", "history_bug"] {
        let h = idcc::workflow::load_history(&common::fixture(dir)).unwrap();
        for r in &h.revisions {
            let direct = check_revision(&r.program, &s, None, &config).unwrap();
            let inst = check_revision_instrumented(&r.program, &s, None, &config).unwrap();
            for (d, i) in direct.deps.iter().zip(&inst.deps) {
                assert_eq!(d.verdict.class(), i.verdict.class(), "{dir}/{} {}", r.name, d.dep);
            }
        }
    }
}
