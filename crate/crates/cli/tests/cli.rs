use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = r#"{"signature":{"R":2},"facts":[
    {"rel":"R","args":["a","a"],"id":"F1"},
    {"rel":"R","args":["b","c"],"id":"F2"},
    {"rel":"R","args":["c","b"],"id":"F3"}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeprov")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim_end().to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn example_provenance() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", EXAMPLE);
    let q = write(&dir, "q.ucq", "R(x,y), R(y,x)\n");
    let base = ["provenance", "-q", s(&q), "-i", s(&i), "--mode", "nx"];
    assert_eq!(stdout(&[&base[..], &["--expand"]].concat()), "F1^2 + 2*F2*F3");
    assert_eq!(stdout(&[&base[..], &["--semiring", "N"]].concat()), "3");
    assert_eq!(stdout(&[&base[..], &["--semiring", "posbool"]].concat()), "F1 | F2 & F3");
    let costs = write(&dir, "c.json", r#"{"F1": 5, "F2": 1, "F3": "2"}"#);
    assert_eq!(stdout(&[&base[..], &["--semiring", "tropical", "--assign", s(&costs)]].concat()), "3");

    // Truth table of the Boolean circuit against F1 | (F2 & F3).
    for mask in 0..8 {
        let v = |b: usize| mask >> b & 1 == 1;
        let assign = write(&dir, "a.json", &format!(r#"{{"F1":{},"F2":{},"F3":{}}}"#, v(0), v(1), v(2)));
        let got = stdout(&["provenance", "-q", s(&q), "-i", s(&i), "--assign", s(&assign)]);
        assert_eq!(got, (v(0) || v(1) && v(2)).to_string());
    }
}

#[test]
fn encode_decode_round_trip() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", EXAMPLE);
    let enc = dir.path().join("enc.json");
    stdout(&["encode", "-i", s(&i), "-k", "1", "-o", s(&enc)]);
    let back = write(&dir, "back.json", &stdout(&["decode", "-e", s(&enc)]));
    let a = treeprov::relational::Instance::from_json(&serde_json::from_str(EXAMPLE).unwrap()).unwrap();
    let b = treeprov::relational::Instance::from_json(&serde_json::from_str(&fs::read_to_string(back).unwrap()).unwrap()).unwrap();
    assert!(treeprov::relational::isomorphic(&a, &b));
}

#[test]
fn width_exceeded_exits_with_2() {
    let dir = TempDir::new().unwrap();
    let tri = write(
        &dir,
        "t.json",
        r#"{"signature":{"E":2},"facts":[{"rel":"E","args":["a","b"]},{"rel":"E","args":["b","c"]},{"rel":"E","args":["c","a"]}]}"#,
    );
    let out = run(&["decompose", "-i", s(&tri), "-k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("width at most 1"));
    assert!(run(&["decompose", "-i", s(&tri), "-k", "2"]).status.success());
}

#[test]
fn counting() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", EXAMPLE);
    assert_eq!(stdout(&["count", "-q", "q(x) :- R(x,y)", "-i", s(&i)]), "3");
    assert_eq!(stdout(&["count", "-q", "R(x,x)", "-i", s(&i)]), "1");
    let empty = write(&dir, "e.json", r#"{"signature":{"R":2},"facts":[]}"#);
    assert_eq!(stdout(&["count", "-q", "R(x,x)", "-i", s(&empty)]), "0");
    assert_eq!(stdout(&["count", "-q", "q(x) :- R(x,y)", "-i", s(&empty)]), "0");
}

#[test]
fn probabilities() {
    let dir = TempDir::new().unwrap();
    let bid = write(
        &dir,
        "b.json",
        r#"{"signature":{"R":2},"key_positions":{"R":[0]},"facts":[
            {"rel":"R","args":["a","b"],"prob":"3/10"},
            {"rel":"R","args":["a","c"],"prob":"1/2"},
            {"rel":"R","args":["b","c"],"prob":"1/4"}]}"#,
    );
    assert_eq!(stdout(&["prob", "--bid", s(&bid), "-q", "R(x,y)"]), "17/20");
    // Only R(a,b) followed by R(b,c) forms a path of length 2.
    assert_eq!(stdout(&["prob", "--bid", s(&bid), "-q", "R(x,y), R(y,z)"]), "3/40");

    let certain = write(&dir, "c.json", r#"{"signature":{"R":2},"facts":[{"rel":"R","args":["a","b"]}]}"#);
    assert_eq!(stdout(&["prob", "--bid", s(&certain), "-q", "R(x,y)"]), "1/1");

    let pc = write(
        &dir,
        "pc.json",
        r#"{"signature":{"S":1},"events":{"x":"1/2","y":"1/3"},"facts":[{"rel":"S","args":["a"],"cond":"x & !y"}]}"#,
    );
    assert_eq!(stdout(&["prob", "--pc", s(&pc), "-q", "S(z)"]), "1/3");

    let doc = write(
        &dir,
        "d.json",
        r#"{"label":"a","children":[{"kind":"ind","children":[{"prob":"2/5","node":{"label":"b"}}]}]}"#,
    );
    assert_eq!(stdout(&["prob", "--prxml", s(&doc), "-q", "P_b(x)"]), "2/5");
    let pcc = write(&dir, "pcc.json", &stdout(&["prxml-convert", "-i", s(&doc), "--to", "pcc"]));
    assert_eq!(stdout(&["prob", "--pcc", s(&pcc), "-q", "P_b(x)", "-k", "3"]), "2/5");
    let pc2 = write(&dir, "pc2.json", &stdout(&["prxml-convert", "-i", s(&doc), "--to", "pc"]));
    assert_eq!(stdout(&["prob", "--pc", s(&pc2), "-q", "P_b(x)"]), "2/5");
}

#[test]
fn compiled_automaton_is_usable() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", EXAMPLE);
    let a = dir.path().join("a.json");
    stdout(&["compile", "-q", "R(x,x)", "-k", "1", "-o", s(&a)]);
    let f1_only = write(&dir, "v.json", r#"{"F1": false}"#);
    assert!(!stdout(&["provenance", "-a", s(&a), "-i", s(&i), "-k", "1"]).is_empty());
    assert_eq!(stdout(&["provenance", "-a", s(&a), "-i", s(&i), "-k", "1", "--assign", s(&f1_only)]), "false");
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let i = write(&dir, "i.json", EXAMPLE);
    for args in [
        vec!["encode", "-i", s(&i)],
        vec!["decompose", "-i", s(&i), "--normalize"],
        vec!["provenance", "-q", "R(x,y), R(y,x)", "-i", s(&i), "--mode", "nx"],
        vec!["provenance", "-q", "R(x,y), R(y,x)", "-i", s(&i)],
    ] {
        assert_eq!(stdout(&args), stdout(&args), "{args:?}");
    }
}

#[test]
fn state_cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_treeprov"))
        .args(["compile", "-q", "R(x,y), R(y,x)", "-k", "1"])
        .env("TREEPROV_STATE_CAP", "2")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("state cap of 2"));
}
