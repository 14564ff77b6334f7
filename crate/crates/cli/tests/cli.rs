use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use v3db::dataset::save_fvecs;
use v3db::format::decode_snapshot;

const TINY: &str = "dim = 4\nn_list = 8\ncapacity = 16\nn_probe = 2\nsub_quantizers = 2\ncodebook_size = 4\ntop_k = 3\nseed = 3\nsigned = true\n";

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.cfg"), config).unwrap();
        Env { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_v3db"))
            .current_dir(self.dir.path())
            .args(["--config", "run.cfg", "--store", "store"])
            .args(args)
            .output()
            .unwrap()
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn ok(out: Output) -> String {
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    stdout(&out)
}

fn flip_byte(path: &Path, at: usize) {
    let mut bytes = fs::read(path).unwrap();
    let at = at.min(bytes.len() - 1);
    bytes[at] ^= 1;
    fs::write(path, bytes).unwrap();
}

#[test]
fn shape_is_deterministic_and_conserves_vectors() {
    let env = Env::new(TINY);
    let report = ok(env.run(&["shape", "synthetic:64", "--out", "a.snp"]));
    assert!(report.contains("rebalance moved="));
    assert!(report.contains("valid=64"));
    ok(env.run(&["shape", "synthetic:64", "--out", "b.snp"]));
    let (a, b) = (fs::read(env.path("a.snp")).unwrap(), fs::read(env.path("b.snp")).unwrap());
    assert_eq!(a, b);
    assert_eq!(decode_snapshot(&a).unwrap().valid_count(), 64);
}

#[test]
fn malformed_inputs_are_data_errors() {
    let env = Env::new(TINY);
    save_fvecs(env.path("wide.fvecs"), &vec![vec![0.5; 6]; 8]).unwrap();
    assert_eq!(code(&env.run(&["shape", "wide.fvecs"])), 3);
    fs::write(env.path("junk.fvecs"), b"\x04\x00\x00").unwrap();
    assert_eq!(code(&env.run(&["shape", "junk.fvecs"])), 3);
    assert_eq!(code(&env.run(&["commit", "missing.snp"])), 3);
    assert_eq!(code(&env.run(&["query", "junk.fvecs"])), 3, "empty store");
}

#[test]
fn usage_errors_exit_2() {
    let env = Env::new("dim = 4\ncolour = red\n");
    assert_eq!(code(&env.run(&["gates"])), 2);
    let env = Env::new(TINY);
    assert_eq!(code(&env.run(&["frobnicate"])), 2);
    assert_eq!(code(&env.run(&["gates", "--variant", "fast"])), 2);
    let env = Env::new("capacity = 6\n");
    assert_eq!(code(&env.run(&["gates"])), 2);
}

#[test]
fn commits_append_epochs() {
    let env = Env::new(TINY);
    ok(env.run(&["shape", "synthetic:64", "--out", "s.snp"]));
    let first = ok(env.run(&["commit", "s.snp"]));
    let second = ok(env.run(&["commit", "s.snp"]));
    assert!(first.starts_with("epoch=0 com="));
    assert!(second.starts_with("epoch=1 com="));
    assert_eq!(first[8..], second[8..]);
    assert_eq!(code(&env.run(&["commit", "s.snp", "--epoch", "1"])), 3);
    // The low byte of the last codeword word.
    let len = fs::metadata(env.path("s.snp")).unwrap().len() as usize;
    flip_byte(&env.path("s.snp"), len - 8);
    let third = ok(env.run(&["commit", "s.snp"]));
    assert!(third.starts_with("epoch=2 com="));
    assert_ne!(third[8..], first[8..]);
}

#[test]
fn query_prove_verify_round_trip() {
    let env = Env::new(TINY);
    ok(env.run(&["shape", "synthetic:64", "--out", "s.snp"]));
    ok(env.run(&["commit", "s.snp"]));
    ok(env.run(&["shape", "synthetic:64", "--seed", "4", "--out", "t.snp"]));
    ok(env.run(&["commit", "t.snp"]));
    save_fvecs(env.path("q.fvecs"), &[vec![0.1, 0.2, 0.3, 0.4], vec![2.0, -1.0, 0.5, 0.5]]).unwrap();

    let answers = ok(env.run(&["query", "q.fvecs", "--epoch", "0"]));
    assert_eq!(answers.lines().count(), 2);
    assert!(answers.lines().all(|l| l.split("items=").nth(1).unwrap().split(',').count() == 3));
    let debug = ok(env.run(&["query", "q.fvecs", "--epoch", "0", "--debug"]));
    assert!(debug.contains("distances="));

    let proved = ok(env.run(&["prove", "q.fvecs", "--epoch", "0", "--out", "p.prf"]));
    let items = proved.split("items=").nth(1).unwrap().split_whitespace().next().unwrap();
    assert!(answers.lines().next().unwrap().ends_with(&format!("items={items}")));
    let accepted = ok(env.run(&["verify", "p.prf", "--epoch", "0"]));
    assert!(accepted.starts_with("accept epoch=0"));

    // Another epoch's commitment, another variant, a flipped byte.
    assert_eq!(code(&env.run(&["verify", "p.prf", "--epoch", "1"])), 1);
    assert_eq!(code(&env.run(&["verify", "p.prf", "--epoch", "0", "--variant", "baseline"])), 1);
    fs::copy(env.path("p.prf"), env.path("bad.prf")).unwrap();
    let len = fs::metadata(env.path("bad.prf")).unwrap().len() as usize;
    flip_byte(&env.path("bad.prf"), len / 2);
    assert_eq!(code(&env.run(&["verify", "bad.prf", "--epoch", "0"])), 1);
    fs::write(env.path("empty.prf"), b"").unwrap();
    assert_eq!(code(&env.run(&["verify", "empty.prf", "--epoch", "0"])), 1);
}

#[test]
fn gates_and_tune_report_estimates() {
    let env = Env::new(TINY);
    let gates = ok(env.run(&["gates", "--measure", "--debug"]));
    assert!(gates.contains("term name=merkle_paths"));
    assert!(gates.contains("total G="));
    assert!(gates.contains("measured G="));
    assert!(gates.contains("stage name=binding"));
    let tune = ok(env.run(&["tune", "--csv", "grid.csv"]));
    assert!(tune.contains("budgets N=128 B=4 N_sel=32"));
    assert!(tune.lines().last().unwrap().starts_with("best n_list="));
    let csv = fs::read_to_string(env.path("grid.csv")).unwrap();
    assert!(csv.starts_with("n_list,K,n_probe,n,M,G,G_B,"));
    assert_eq!(csv.lines().count(), tune.lines().count() - 2);
}

#[test]
fn bench_prints_one_six_column_row() {
    let env = Env::new("n0 = 12\n");
    let out = ok(env.run(&["bench", "--reps", "2"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1].split(" | ").count(), 6);
    assert_eq!(lines[2].split(" | ").count(), 6);
    assert!(lines[2].split(" | ").all(|c| c.contains(" ± ")));

    let env = Env::new("dim = 8\nn_list = 8\ncapacity = 64\nn_probe = 4\nsub_quantizers = 4\ncodebook_size = 16\ntop_k = 10\nscale_bits = 12\n");
    let out = ok(env.run(&["bench", "--utility", "--count", "300"]));
    assert!(out.contains("float") && out.contains("zk"));
}
