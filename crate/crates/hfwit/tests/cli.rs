use std::path::PathBuf;

use hfwit::cli::main_with;
use hfwit::corpus;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hfwit-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut all = vec!["hfwit"];
    all.extend_from_slice(args);
    let code = main_with(all, &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn write_entry(name: &str) -> PathBuf {
    let reg = corpus::registry();
    let e = corpus::golden(&reg)
        .into_iter()
        .find(|e| e.name == name)
        .unwrap();
    let p = scratch(&format!("{}.deriv", name.replace(' ', "_")));
    std::fs::write(&p, e.derivation.to_string()).unwrap();
    p
}

#[test]
fn pair_round_trip() {
    let d = write_entry("pair");
    let d = d.to_str().unwrap();
    let (code, out) = run(&["check", d]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.starts_with("OK"));

    let defs = scratch("pair.defs");
    let obl = scratch("pair.obl");
    let (code, out) = run(&[
        "extract",
        d,
        "--out",
        defs.to_str().unwrap(),
        "--obligations",
        obl.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("class RUD"), "{}", out);
    let text = std::fs::read_to_string(&defs).unwrap();
    assert!(text.contains("(def w0"), "{}", text);

    let (code, out) = run(&[
        "--universe-cap",
        "300",
        "verify",
        obl.to_str().unwrap(),
        "--defs",
        defs.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("grid 100% pass"), "{}", out);

    // same config, same bytes
    let again = run(&["--universe-cap", "300", "verify", obl.to_str().unwrap()]);
    let once = run(&["--universe-cap", "300", "verify", obl.to_str().unwrap()]);
    assert_eq!(again, once);
}

#[test]
fn mutant_exits_one_and_names_the_node() {
    let reg = corpus::registry();
    let m = corpus::mutants(&reg)
        .into_iter()
        .find(|m| m.expected == hfwit::calculus::ViolationKind::Eigenvariable)
        .unwrap();
    let p = scratch("mutant.deriv");
    std::fs::write(&p, m.derivation.to_string()).unwrap();
    let (code, out) = run(&["check", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("node /") && out.contains("Eigenvariable"), "{}", out);
}

#[test]
fn cut_is_refused_by_extract() {
    let d = write_entry("cut");
    assert_eq!(run(&["extract", d.to_str().unwrap()]).0, 12);
}

#[test]
fn unknown_rule_is_a_parse_error() {
    let p = scratch("bad.deriv");
    std::fs::write(&p, "(deriv T0 (phi) (node (seq (in a a)) (rule frobnicate)))").unwrap();
    assert_eq!(run(&["check", p.to_str().unwrap()]).0, 3);
}

#[test]
fn library_commands() {
    let p = scratch("lib.defs");
    std::fs::write(&p, corpus::LIBRARY).unwrap();
    let lib = p.to_str().unwrap();
    let (code, out) = run(&["classify", lib]);
    assert_eq!(code, 0, "{}", out);
    let (code, out) = run(&["sigma1", lib, "pr"]);
    assert_eq!(code, 0, "{}", out);
    assert!(out.contains("(ball "), "{}", out);
    let (code, out) = run(&["eval", "--defs", lib, "succ", "{{}}"]);
    assert_eq!((code, out.as_str()), (0, "{{} {{}}}\n"));
}

#[test]
fn sizecheck_pair() {
    let (code, out) = run(&["sizecheck", "pair", "--poly", "x1+x2+3", "--samples", "1000"]);
    assert_eq!(code, 0, "{}", out);
    let (code, out) = run(&["sizecheck", "pair", "--poly", "1", "--samples", "50"]);
    assert_eq!(code, 1, "{}", out);
    assert!(out.starts_with("counterexample"));
}
