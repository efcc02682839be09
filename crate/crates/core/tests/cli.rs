mod common;

use std::process::Command;

use frobtower::cli::{format_input, parse_input, Input};
use frobtower::series::Side;
use frobtower::tower::{AnyTower, AnyWitness};
use frobtower::unipotent::UnipClass;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const AS: &str = r#"{"p":3,"twist":{"num":0,"den":1},"prefix":[],"tail":{"kind":"self_similar","from":0,"terms":[[1,-1]]}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_frobtower"))
}

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn scratch(tag: &str) -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("frobtower-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str], stdin: Option<&str>) -> (i32, serde_json::Value) {
    use std::io::Write;
    let mut child = bin()
        .args(args)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    {
        let mut si = child.stdin.take().unwrap();
        if let Some(s) = stdin {
            si.write_all(s.as_bytes()).unwrap();
        }
    }
    let out = child.wait_with_output().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    (out.status.code().unwrap(), v)
}

#[test]
fn decide_reads_stdin() {
    let (code, v) = run(&["decide", "--ring", "discinf"], Some(AS));
    assert_eq!(code, 0);
    assert_eq!(v["trivial"], true);
    assert!(v["witness"]["levels"].is_array());
    let (code, v) = run(&["decide", "--ring", "disc0"], Some(AS));
    assert_eq!(code, 0);
    assert_eq!(v["trivial"], false);
}

#[test]
fn exit_codes() {
    let d = scratch("codes");
    let empty = write(&d, "empty.json", "");
    assert_eq!(run(&["classify", empty.to_str().unwrap()], None).0, 2);
    assert_eq!(run(&["classify"], Some("{not json")).0, 2);
    let bad = r#"{"p":2,"ring":"gm","group":"D","rank":2,"depth":1,"twist":[{"num":0,"den":1},{"num":0,"den":1}],
                 "matrices":[[[[[0,1]],[[1,1]]],[[],[[0,1]]]]]}"#;
    let (code, v) = run(&["classify"], Some(bad));
    assert_eq!(code, 4);
    assert_eq!(v["violation"]["level"], 0);
    assert_eq!(v["violation"]["entry"], serde_json::json!([0, 1]));
    let t3 = r#"{"p":3,"twist":{"num":0,"den":1},"prefix":[[[3,1]]],"tail":{"kind":"zero"}}"#;
    assert_eq!(run(&["--max-depth", "1", "normalize"], Some(t3)).0, 3);
    assert_eq!(run(&["--max-depth", "2", "normalize"], Some(t3)).0, 0);
    assert_eq!(run(&["--p", "4", "classify"], Some(AS)).0, 4);
}

#[test]
fn classify_oalpha() {
    let t: frobtower::tower::Tower<frobtower::series::LaurentPoly> = frobtower::rank1::make_oalpha(
        3,
        frobtower::arith::PExponent::ratio(1, 2),
        frobtower::series::Ring::Gm,
        4,
    )
    .unwrap();
    let (code, v) = run(&["classify"], Some(&serde_json::to_string(&t).unwrap()));
    assert_eq!(code, 0);
    assert_eq!(v, serde_json::json!({"alpha": {"num": 1, "den": 2}}));
}

#[test]
fn restrict_lift_and_verify_pipeline() {
    let d = scratch("pipe");
    let mut rng = StdRng::seed_from_u64(5);
    let l = common::random_local_b(&mut rng, 3, Side::At0, 2, 3, 24);
    let lp = write(&d, "l.json", &serde_json::to_string(&l).unwrap());
    let (code, v) = run(&["lift", lp.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["ok"], true);
    let mut tower = v["tower"].clone();
    tower.as_object_mut().unwrap().remove("verdicts");
    let gp = write(&d, "g.json", &tower.to_string());
    let (code, r) = run(&["restrict", "--side", "zero", gp.to_str().unwrap()], None);
    assert_eq!(code, 0);
    let rp = write(&d, "r.json", &r.to_string());
    let wp = write(&d, "w.json", &v["witness"].to_string());
    let (code, rep) = run(&["verify", lp.to_str().unwrap(), rp.to_str().unwrap(), wp.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert_eq!(rep["ok"], true);
    let (code, s) = run(&["is-special", "--side", "rsi", gp.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert_eq!(s["special"], true);
    assert!(s["witness"].is_object());
}

#[test]
fn oracle_finds_planted_gauge() {
    let d = scratch("oracle");
    let mut rng = StdRng::seed_from_u64(9);
    let t = common::random_gm_b(&mut rng, 2, 2, 2);
    let psi = common::random_gm_gauge(&mut rng, 2, 2, 1);
    let t2 = frobtower::tower::gauge_apply(&t, &psi).unwrap();
    let a = write(&d, "a.json", &serde_json::to_string(&t).unwrap());
    let b = write(&d, "b.json", &serde_json::to_string(&t2).unwrap());
    let (code, v) = run(&["oracle", a.to_str().unwrap(), b.to_str().unwrap()], None);
    assert_eq!(code, 0);
    if v["equivalent"] == true {
        let w = write(&d, "w.json", &v["witness"].to_string());
        let (code, rep) = run(&["verify", a.to_str().unwrap(), b.to_str().unwrap(), w.to_str().unwrap()], None);
        assert_eq!(code, 0);
        assert_eq!(rep["ok"], true);
    } else {
        assert!(v["searched"].is_string());
    }
}

fn random_class(rng: &mut StdRng, p: u64) -> UnipClass {
    let twist = common::twist_for(rng, p);
    let k = rng.gen_range(0..3);
    let prefix = (0..k).map(|n| common::gm_elem(rng, p, n, -3, 4, 2)).collect();
    let rule = common::gm_elem(rng, p, 0, -2, 3, 2);
    UnipClass::self_similar(p, twist, prefix, rule)
}

fn round_trip(x: &Input) {
    let s = format_input(x).unwrap();
    let y = parse_input(&s).unwrap();
    assert_eq!(&y, x);
    assert_eq!(format_input(&y).unwrap(), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_format_round_trip(seed in any::<u64>(), p in prop::sample::select(vec![2u64, 3, 5])) {
        let mut rng = StdRng::seed_from_u64(seed);
        round_trip(&Input::Class(random_class(&mut rng, p)));
        round_trip(&Input::Tower(AnyTower::Gm(common::random_gm_b(&mut rng, p, 2, 3))));
        let side = if rng.gen_bool(0.5) { Side::At0 } else { Side::AtInf };
        round_trip(&Input::Tower(AnyTower::Local(common::random_local_b(&mut rng, p, side, 2, 2, 12))));
        round_trip(&Input::Witness(AnyWitness::Gm(common::random_gm_gauge(&mut rng, p, 2, 2))));
        round_trip(&Input::Witness(AnyWitness::Local(common::random_local_gauge(&mut rng, p, side, 2, 2, 12))));
    }
}
