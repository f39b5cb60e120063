use super::*;
use crate::cfg::{build_cfg, CfgConfig};
use crate::lang::parse_program;

fn graph(src: &str) -> Graph {
    build_cfg(&parse_program(src, "t.ecs").unwrap(), &CfgConfig::default()).unwrap().main
}

fn dep(id: &str, before: &str, after: &str) -> TemporalDependency {
    TemporalDependency { id: id.into(), before: before.into(), after: after.into() }
}

#[test]
fn swapped_calls_give_two_step_trace() {
    let g = graph("void main() { HAL_SPI_Transmit(*); HAL_UART_Receive(*); HAL_Init(); }");
    let d = [dep("d1", "HAL_Init", "HAL_SPI_Transmit")];
    let ex = explore(&g, &d, &Bounds::default());
    assert!(ex.exhaustive);
    assert_eq!(ex.paths, 1);
    let t = ex.violations[0].as_ref().unwrap();
    let kinds: Vec<StepKind> = t.steps.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, [StepKind::Call, StepKind::Violation]);
    assert_eq!(t.steps[0].detail, "HAL_SPI_Transmit");
    assert_eq!(replay(&g, t).unwrap(), *t);
    let json = t.to_json();
    assert_eq!(json["dep"], "d1");
    assert_eq!(json["replayable"], true);
    assert_eq!(json["steps"][0]["line"], 1);
    assert_eq!(json["steps"][0]["choice"], serde_json::Value::Null);
}

#[test]
fn branches_fork_false_first() {
    let g = graph("void main() { if (*) { HAL_Init(); } HAL_SPI_Transmit(1); }");
    let d = [dep("d1", "HAL_Init", "HAL_SPI_Transmit")];
    let ex = explore(&g, &d, &Bounds::default());
    assert_eq!(ex.paths, 2);
    assert!(ex.exhaustive);
    let t = ex.violations[0].as_ref().unwrap();
    assert_eq!(t.choices(), [Choice::Bool(false)]);
    assert_eq!(t.steps[0].detail, "* -> false");
    replay(&g, t).unwrap();
}

#[test]
fn int_nondet_is_sampled_and_guides_branches() {
    let src = "void main() { int x = *; if (x == 7) { HAL_SPI_Transmit(1); } HAL_Init(); }";
    let g = graph(src);
    assert_eq!(nondet_domain(&g), [0, 1, 6, 7, 8]);
    let d = [dep("d1", "HAL_Init", "HAL_SPI_Transmit")];
    let ex = explore(&g, &d, &Bounds::default());
    assert!(!ex.exhaustive);
    assert_eq!(ex.unknown_reason(), Some(UnknownReason::Imprecision));
    let t = ex.violations[0].as_ref().unwrap();
    assert_eq!(t.choices(), [Choice::Int(7)]);
    assert_eq!(t.steps[0].kind, StepKind::NondetChoice);
    replay(&g, t).unwrap();
}

#[test]
fn loop_bound_truncates() {
    let g = graph("void main() { while (*) { f(); } }");
    let ex = explore(&g, &[], &Bounds::default());
    assert_eq!(ex.paths, 5);
    assert_eq!(ex.truncations.loop_bound, 1);
    assert_eq!(ex.unknown_reason(), Some(UnknownReason::LoopBound));

    let g = graph("void main() { int i = 0; while (i < 2) { i = i + 1; } }");
    let ex = explore(&g, &[], &Bounds::default());
    assert!(ex.exhaustive);
}

#[test]
fn nested_loops_reset_inner_counter() {
    let g = graph("void main() { int i = 0; while (i < 3) { int j = 0; while (j < 3) { j = j + 1; } i = i + 1; } }");
    let ex = explore(&g, &[], &Bounds::default());
    assert!(ex.exhaustive, "{:?}", ex.truncations);
}

#[test]
fn step_and_path_bounds() {
    let g = graph("void main() { if (*) { f(); } if (*) { f(); } if (*) { f(); } }");
    let ex = explore(&g, &[], &Bounds { max_paths: 3, ..Bounds::default() });
    assert!(ex.truncations.path_bound);
    assert_eq!(ex.unknown_reason(), Some(UnknownReason::PathBound));
    let ex = explore(&g, &[], &Bounds { max_steps: 2, ..Bounds::default() });
    assert_eq!(ex.unknown_reason(), Some(UnknownReason::StepBound));
}

#[test]
fn faults_are_imprecision() {
    let g = graph("void main() { int a[2]; int i = 0; while (i < 3) { a[i] = 1; i = i + 1; } }");
    let ex = explore(&g, &[], &Bounds::default());
    assert_eq!(ex.faults, 1);
    assert_eq!(ex.unknown_reason(), Some(UnknownReason::Imprecision));
}

#[test]
fn dead_store_nondet_keeps_exhaustiveness() {
    let g = graph("void main() { int x = 1; x = *; HAL_Init(); HAL_SPI_Transmit(*); }");
    let ex = explore(&g, &[dep("d1", "HAL_Init", "HAL_SPI_Transmit")], &Bounds::default());
    assert!(ex.exhaustive);
    assert!(ex.violations[0].is_none());
}

#[test]
fn assertion_failures_and_replay() {
    let src = "int s = 0;\nvoid main() { if (*) { s = 1; } assert(s == 1); }";
    let g = graph(src);
    let ex = explore(&g, &[], &Bounds::default());
    assert_eq!(ex.assert_failures.len(), 1);
    let t = &ex.assert_failures[0];
    assert_eq!(t.steps.last().unwrap().kind, StepKind::Violation);
    assert_eq!(replay(&g, t).unwrap(), *t);
}

#[test]
fn tampered_trace_diverges() {
    let g = graph("void main() { if (*) { HAL_Init(); } HAL_SPI_Transmit(1); }");
    let ex = explore(&g, &[dep("d1", "HAL_Init", "HAL_SPI_Transmit")], &Bounds::default());
    let mut t = ex.violations[0].clone().unwrap();
    t.steps[0].choice = Some(Choice::Bool(true));
    assert!(matches!(replay(&g, &t), Err(ReplayError::Divergence { .. })));
}

#[test]
fn inlined_out_parameters_write_through() {
    let src = "struct m { int type; };\nvoid deser(struct m msg) { msg.type = 1; }\n\
               void main() { struct m msg; deser(&msg); if (msg.type == 1) { HAL_Init(); } HAL_SPI_Transmit(1); }";
    let g = graph(src);
    let ex = explore(&g, &[dep("d1", "HAL_Init", "HAL_SPI_Transmit")], &Bounds::default());
    assert!(ex.exhaustive);
    assert!(ex.violations[0].is_none());
}

#[test]
fn inlined_return_values() {
    let src = "int ok() { return 3; }\nvoid main() { if (ok() == 3) { HAL_Init(); } HAL_SPI_Transmit(1); }";
    let g = graph(src);
    let ex = explore(&g, &[dep("d1", "HAL_Init", "HAL_SPI_Transmit")], &Bounds::default());
    assert!(ex.exhaustive);
    assert!(ex.violations[0].is_none());
}
