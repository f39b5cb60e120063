mod common;

use common::{fixture, program, spec};
use idcc::config::CheckConfig;
use idcc::engine::{check_revision, Status, Verdict};
use idcc::lang::parse_program;
use idcc::spec::DependencySpec;
use idcc::workflow::{
    check_history, diff_summary, load_history, load_history_list, metrics, Phase, WorkflowError,
};

fn src(text: &str) -> idcc::lang::Program {
    parse_program(text, "t.ecs").unwrap()
}

#[test]
fn fixture_metrics() {
    let m = metrics(&program("programs/skeleton.ecs"), &spec("full_hal"));
    assert_eq!((m.loc, m.hal_calls, m.nondet_count), (6, 3, 2));
    assert_eq!((m.var_count, m.branch_count, m.loop_count), (0, 0, 0));

    let m = metrics(&program("programs/dispatch.ecs"), &spec("full_hal"));
    assert!(m.var_count >= 3);
    assert_eq!((m.branch_count, m.loop_count, m.array_count), (2, 1, 1));

    let m = metrics(&src("void main() { }"), &DependencySpec::default());
    assert_eq!(m.loc, 3);
    assert_eq!((m.hal_calls, m.call_count, m.nondet_count, m.var_count), (0, 0, 0, 0));
}

#[test]
fn diff_classification() {
    let l1 = program("programs/skeleton.ecs");
    let l2 = program("programs/dispatch.ecs");
    let d = diff_summary(&l1, &l2);
    assert_eq!(d.phase, Phase::Mixed);
    assert!(d.note.is_some());
    assert!(d.added + d.modified > 10);

    let same = diff_summary(&l1, &l1);
    assert_eq!((same.added, same.removed, same.modified, same.new_vars), (0, 0, 0, 0));
    assert_eq!(same.note, None);

    let with_var = src("void main()\n{\n  int x = 0;\n  HAL_Init();\n  HAL_UART_Receive(*);\n  HAL_SPI_Transmit(*);\n}\n");
    let d = diff_summary(&l1, &with_var);
    assert_eq!((d.phase, d.new_vars, d.added), (Phase::DataFlow, 1, 1));

    let with_branch = src("void main() { HAL_Init(); if (*) { HAL_UART_Receive(*); } HAL_SPI_Transmit(*); }");
    assert_eq!(diff_summary(&l1, &with_branch).phase, Phase::ControlFlow);
}

#[test]
fn loc_difference_matches_diff_counts() {
    let revisions = load_history(&fixture("history")).unwrap().revisions;
    let s = spec("psoc_spi");
    for w in revisions.windows(2) {
        let (a, b) = (metrics(&w[0].program, &s), metrics(&w[1].program, &s));
        let d = diff_summary(&w[0].program, &w[1].program);
        assert_eq!(b.loc as i64 - a.loc as i64, d.added as i64 - d.removed as i64, "{}", w[1].name);
    }
}

#[test]
fn history_checks_correct_with_expected_phases() {
    let h = load_history(&fixture("history")).unwrap();
    assert_eq!(h.revisions.len(), 7);
    let report = check_history(&h, &spec("psoc_spi"), None, &CheckConfig::default());
    let phases: Vec<Phase> = report.revisions.iter().map(|r| r.summary.phase).collect();
    use Phase::*;
    assert_eq!(phases, [Skeleton, ControlFlow, ControlFlow, DataFlow, DataFlow, DataFlow, DataFlow]);
    for r in &report.revisions {
        let rep = r.report.as_ref().unwrap();
        assert_eq!(rep.status, Status::Correct, "{}", r.name);
        assert!(rep.deps.iter().any(|d| d.verdict == Verdict::Correct { vacuous: false }));
    }
    assert_eq!(report.status(), Status::Correct);
    let table = report.render_table();
    assert!(table.contains("006_arrays_harness.ecs"));
}

#[test]
fn injected_bug_is_reported_at_its_revision_only() {
    let h = load_history(&fixture("history_bug")).unwrap();
    let report = check_history(&h, &spec("psoc_spi"), None, &CheckConfig::default());
    for (i, r) in report.revisions.iter().enumerate() {
        let status = r.report.as_ref().unwrap().status;
        let expected = if i == 3 { Status::Incorrect } else { Status::Correct };
        assert_eq!(status, expected, "{}", r.name);
    }
    let bug = report.revisions[3].report.as_ref().unwrap();
    assert!(bug.verdict("d13").unwrap().trace().is_some());
}

#[test]
fn revisions_are_checked_independently() {
    let h = load_history(&fixture("history_bug")).unwrap();
    let s = spec("psoc_spi");
    let config = CheckConfig::default();
    let report = check_history(&h, &s, None, &config);
    for (rev, res) in h.revisions.iter().zip(&report.revisions) {
        let alone = check_revision(&rev.program, &s, None, &config).unwrap();
        assert_eq!(alone.without_timing(), res.report.as_ref().unwrap().without_timing());
        let a = serde_json::to_string(&idcc::engine::report_to_json(&alone.without_timing())).unwrap();
        let b = serde_json::to_string(&idcc::engine::report_to_json(&res.report.as_ref().unwrap().without_timing()))
            .unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn load_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_history(dir.path()), Err(WorkflowError::EmptyHistory(_))));

    std::fs::write(dir.path().join("001_controlflow.ecs"), "void main() { a(); }").unwrap();
    std::fs::write(dir.path().join("000_skeleton.ecs"), "void main() { }").unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let h = load_history(dir.path()).unwrap();
    let names: Vec<&str> = h.revisions.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["000_skeleton.ecs", "001_controlflow.ecs"]);

    std::fs::write(dir.path().join("002_broken.ecs"), "void main( {").unwrap();
    match load_history(dir.path()) {
        Err(WorkflowError::Parse { revision, .. }) => assert_eq!(revision, "002_broken.ecs"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn manifest_order_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.ecs"), "void main() { }").unwrap();
    std::fs::write(dir.path().join("a.ecs"), "void main() { a(); }").unwrap();
    std::fs::write(dir.path().join("list.txt"), "# order\nb.ecs\n\na.ecs\n").unwrap();
    let h = load_history_list(&dir.path().join("list.txt")).unwrap();
    let names: Vec<&str> = h.revisions.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["b.ecs", "a.ecs"]);
}

#[test]
fn failing_revision_does_not_stop_later_ones() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("000.ecs"), "void main() { HAL_Init(); HAL_SPI_Transmit(1); }").unwrap();
    std::fs::write(dir.path().join("001.ecs"), "void helper() { }").unwrap();
    std::fs::write(dir.path().join("002.ecs"), "void main() { HAL_SPI_Transmit(1); }").unwrap();
    let h = load_history(dir.path()).unwrap();
    let report = check_history(&h, &spec("spi"), None, &CheckConfig::default());
    assert_eq!(report.revisions[0].report.as_ref().unwrap().status, Status::Correct);
    assert!(report.revisions[1].report.is_err());
    assert_eq!(report.revisions[2].report.as_ref().unwrap().status, Status::Incorrect);
    assert!(report.render_table().contains("error"));
    assert_eq!(report.to_json().as_array().unwrap().len(), 3);
}

#[test]
fn single_revision_history_equals_plain_check() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("programs/skeleton.ecs"), dir.path().join("000.ecs")).unwrap();
    let h = load_history(dir.path()).unwrap();
    let report = check_history(&h, &spec("spi"), None, &CheckConfig::default());
    let alone = check_revision(&h.revisions[0].program, &spec("spi"), None, &CheckConfig::default()).unwrap();
    assert_eq!(report.revisions[0].report.as_ref().unwrap().without_timing(), alone.without_timing());
}

mod phase_properties {
    use super::*;
    use proptest::prelude::*;

    fn base() -> String {
        "void main()\n{\n  HAL_Init();\n  HAL_SPI_Transmit(*);\n}\n".to_string()
    }

    proptest! {
        #[test]
        fn adding_only_variables_is_data_flow(n in 1usize..5) {
            let decls: String = (0..n).map(|i| format!("  int v{i} = {i};\n")).collect();
            let next = base().replacen("{\n", &format!("{{\n{decls}"), 1);
            let d = diff_summary(&src(&base()), &src(&next));
            prop_assert_eq!(d.phase, Phase::DataFlow);
            prop_assert_eq!(d.new_vars, n);
            prop_assert_eq!(d.added, n);
        }

        #[test]
        fn adding_only_calls_or_branches_is_control_flow(calls in 0usize..4, branches in 0usize..4) {
            prop_assume!(calls + branches > 0);
            let mut extra = String::new();
            for i in 0..calls {
                extra.push_str(&format!("  app_step{i}();\n"));
            }
            for _ in 0..branches {
                extra.push_str("  if (*) {\n    HAL_SPI_Transmit(1);\n  }\n");
            }
            let next = base().replacen("}\n", &format!("{extra}}}\n"), 1);
            let d = diff_summary(&src(&base()), &src(&next));
            prop_assert_eq!(d.phase, Phase::ControlFlow);
            prop_assert_eq!(d.new_vars, 0);
        }

        #[test]
        fn classification_is_a_function_of_the_pair(seed in 0u64..50) {
            let a = common::generate(seed, &common::GenOptions::default()).program;
            let b = common::generate(seed + 1, &common::GenOptions::default()).program;
            prop_assert_eq!(diff_summary(&a, &b), diff_summary(&a, &b));
        }
    }
}
