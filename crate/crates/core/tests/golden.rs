use std::path::PathBuf;
use std::process::Command;

fn golden(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "golden", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn gen(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_kantgap")).arg("gen").args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn diagonal_generator_is_pinned() {
    assert_eq!(gen(&["--scenario", "diagonal", "--n", "3"]), golden("diagonal_3.json"));
}

#[test]
fn band_generator_is_pinned() {
    assert_eq!(gen(&["--scenario", "band", "--n", "4", "--bandwidth", "1"]), golden("band_4_1.json"));
}

#[test]
fn seeded_random_generator_is_pinned() {
    let args = [
        "--scenario", "random", "--n", "3", "--ny", "4", "--inf-density", "0.3", "--marginals", "random", "--seed", "7",
    ];
    assert_eq!(gen(&args), golden("random_3x4_seed7.json"));
}

#[test]
fn library_and_cli_generators_agree() {
    let p = kantgap::scenarios::example_diagonal(3).unwrap();
    let text = kantgap::io::to_pretty(&kantgap::io::problem_json(&p));
    assert_eq!(text, golden("diagonal_3.json"));
}
