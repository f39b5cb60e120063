mod common;

use common::{generate, oracle, GenOptions};
use idcc::analysis::{check_must, MustResult, WorklistOrder};
use idcc::cfg::build_cfg;
use idcc::config::CheckConfig;
use idcc::engine::{analyze, check_revision, Verdict};
use idcc::explore::replay;

const CORPUS: u64 = 500;

#[test]
fn engine_agrees_with_brute_force_oracle() {
    let config = CheckConfig::default();
    let mut disagreements = Vec::new();
    let (mut correct, mut incorrect, mut multi_path) = (0, 0, 0);
    for seed in 0..CORPUS {
        let g = generate(seed, &GenOptions::default());
        let expected = oracle(&g.program, &g.spec.deps);
        let report = check_revision(&g.program, &g.spec, None, &config).unwrap();
        multi_path += usize::from(expected.paths > 1);
        for (i, d) in report.deps.iter().enumerate() {
            match d.verdict {
                Verdict::Correct { vacuous: false } => correct += 1,
                Verdict::Incorrect(_) => incorrect += 1,
                _ => {}
            }
            let ok = match &d.verdict {
                Verdict::Correct { .. } => !expected.violated[i],
                Verdict::Incorrect(_) => expected.violated[i],
                Verdict::Unknown(_) => false,
            };
            if !ok {
                disagreements.push(format!("seed {seed} {}: {:?} vs oracle {}\n{}", d.dep, d.verdict.class(), expected.violated[i], g.source));
            }
        }
    }
    assert!(disagreements.is_empty(), "{} disagreement(s); first:\n{}", disagreements.len(), disagreements[0]);
    eprintln!("{correct} non-vacuous correct, {incorrect} incorrect, {multi_path} multi-path programs");
    assert!(correct >= 100 && incorrect >= 100 && multi_path >= 250);
}

#[test]
fn must_analysis_never_contradicts_the_explorer() {
    let config = CheckConfig::default();
    let int_opts = GenOptions { int_nondet: true, max_loop_bound: 5, ..GenOptions::default() };
    for seed in 0..CORPUS {
        for opts in [GenOptions::default(), int_opts] {
            let g = generate(seed, &opts);
            // analyze() returns the raw must results and exploration, without the
            // contradiction check of the verdict tiers
            let a = analyze(&g.program, &g.spec, None, &config).unwrap();
            for (i, m) in a.must.iter().enumerate() {
                if let MustResult::Proved { .. } = m {
                    assert!(
                        a.exploration.violations[i].is_none(),
                        "seed {seed}: {} proved but violated\n{}",
                        g.spec.deps[i],
                        g.source
                    );
                }
            }
        }
    }
}

#[test]
fn must_analysis_is_sound_against_the_oracle() {
    for seed in 0..CORPUS {
        let g = generate(seed, &GenOptions::default());
        let expected = oracle(&g.program, &g.spec.deps);
        let cfg = build_cfg(&g.program, &CheckConfig::default().cfg_config()).unwrap();
        for (i, d) in g.spec.deps.iter().enumerate() {
            if let MustResult::Proved { .. } = check_must(&cfg.main, d, WorklistOrder::Fifo) {
                assert!(!expected.violated[i], "seed {seed}: {d}\n{}", g.source);
            }
        }
    }
}

#[test]
fn worklist_order_does_not_change_the_fixpoint() {
    for seed in 0..CORPUS {
        let g = generate(seed, &GenOptions { int_nondet: true, ..GenOptions::default() });
        let cfg = build_cfg(&g.program, &CheckConfig::default().cfg_config()).unwrap();
        assert_eq!(
            idcc::analysis::must_called_before(&cfg.main, WorklistOrder::Fifo),
            idcc::analysis::must_called_before(&cfg.main, WorklistOrder::Lifo),
            "seed {seed}"
        );
        for d in &g.spec.deps {
            assert_eq!(
                check_must(&cfg.main, d, WorklistOrder::Fifo),
                check_must(&cfg.main, d, WorklistOrder::Lifo),
                "seed {seed}"
            );
        }
    }
}

#[test]
fn generated_violations_replay() {
    let config = CheckConfig::default();
    for seed in 0..CORPUS {
        let g = generate(seed, &GenOptions { int_nondet: seed % 2 == 1, ..GenOptions::default() });
        let report = check_revision(&g.program, &g.spec, None, &config).unwrap();
        let cfg = build_cfg(&g.program, &config.cfg_config()).unwrap();
        for d in &report.deps {
            if let Some(t) = d.verdict.trace() {
                let replayed = replay(&cfg.main, t).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", g.source));
                assert_eq!(&replayed, t);
            }
        }
    }
}

#[test]
fn oracle_counts_paths() {
    let p = idcc::lang::parse_program(
        "void main() { int c0 = 0; if (*) { a(); } c0 = 0; while (c0 < 2) { if (*) { b(); } c0 = c0 + 1; } }",
        "t.ecs",
    )
    .unwrap();
    assert_eq!(oracle(&p, &[]).paths, 8);
}
