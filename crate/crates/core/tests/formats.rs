use std::path::PathBuf;

use molmip::milp::{emit_lp, emit_mps, parse_lp, parse_mps, MilpModel, Sense, VarKind};

fn golden(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn single_constraint() -> MilpModel {
    let mut m = MilpModel::new("single");
    let x0 = m.continuous("x0", 0.0, f64::INFINITY).unwrap();
    let x1 = m.continuous("x1", 0.0, f64::INFINITY).unwrap();
    m.add_constraint("c0", vec![(x0, 1.0), (x1, 2.0)], Sense::Le, 3.0).unwrap();
    m
}

fn mixed() -> MilpModel {
    let mut m = MilpModel::new("mixed");
    let b = m.binary("b").unwrap();
    let f = m.continuous("f", f64::NEG_INFINITY, f64::INFINITY).unwrap();
    let u = m.continuous("u", f64::NEG_INFINITY, 4.5).unwrap();
    let w = m.continuous("w", -2.0, 3.0).unwrap();
    let k = m.add_var("k", VarKind::Continuous, 1.25, 1.25).unwrap();
    let e = m.binary("e").unwrap();
    m.set_objective(vec![(f, 1.0), (w, -0.5)]);
    m.add_constraint("link", vec![(f, 1.0), (b, -3.0), (u, 1.0)], Sense::Ge, -1.0).unwrap();
    m.add_constraint("fix", vec![(w, 2.0), (k, 1.0), (e, 1.0)], Sense::Eq, 0.5).unwrap();
    m.add_constraint("cap", vec![(b, 1.0), (e, 1.0)], Sense::Le, 1.0).unwrap();
    m
}

#[test]
fn single_constraint_lp_matches_golden() {
    let m = single_constraint();
    let lp = emit_lp(&m);
    assert_eq!(lp, golden("single_constraint.lp"));
    assert_eq!(parse_lp(&lp).unwrap(), m);
}

#[test]
fn single_constraint_mps_matches_golden() {
    let m = single_constraint();
    let mps = emit_mps(&m).unwrap();
    assert_eq!(mps, golden("single_constraint.mps"));
    assert_eq!(parse_mps(&mps).unwrap(), m);
}

#[test]
fn mixed_model_matches_golden() {
    let m = mixed();
    assert_eq!(emit_lp(&m), golden("mixed.lp"));
    assert_eq!(emit_mps(&m).unwrap(), golden("mixed.mps"));
    assert_eq!(parse_lp(&emit_lp(&m)).unwrap(), m);
    assert_eq!(parse_mps(&emit_mps(&m).unwrap()).unwrap(), m);
}

#[test]
fn empty_model_lp() {
    assert_eq!(emit_lp(&MilpModel::new("empty")), "\\ Problem name: empty\nMinimize\n obj:\nSubject To\nEnd\n");
}

#[test]
fn meta_json_round_trip_keeps_infinite_bounds() {
    let m = mixed();
    let back = MilpModel::from_meta_json(&m.to_meta_json()).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.var("f").unwrap().lo, f64::NEG_INFINITY);
}
