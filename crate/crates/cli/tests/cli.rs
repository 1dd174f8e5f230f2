//! The `chr` binary: outputs and exit codes.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn chr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chr")).args(args).env_remove("CHR_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn temp_file(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chr-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

#[test]
fn partial_order_goal_from_a_file() {
    let prog = temp_file("leq.chr", include_str!("../../core/corpus/leq.chr"));
    let o = chr(&["run", prog.to_str().unwrap(), "leq(A,B), leq(B,C), leq(C,A)"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "A = B\nB = C\n");
    assert!(stderr(&o).contains("status: normal form"));
}

#[test]
fn goal_read_from_a_file() {
    let goal = temp_file("goal.txt", "min(4), min(2)\n");
    let o = chr(&["run", "corpus:min", &format!("@{}", goal.display())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "min(2)\n");
}

#[test]
fn literal_gcd_is_a_runtime_error() {
    let o = chr(&["run", "corpus:gcd_paper", "gcd(8), gcd(8)"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("division by zero"), "{}", stderr(&o));
}

#[test]
fn failed_and_limited_runs() {
    let failed = chr(&["run", "corpus:bool_and", "and(X,Y,Z), Z = 1, X = 0"]);
    assert_eq!(failed.status.code(), Some(1));
    assert_eq!(stdout(&failed), "false\n");
    let limited = chr(&["run", "corpus:fib_bottomup"]);
    assert_eq!(limited.status.code(), Some(2));
    assert!(stdout(&limited).contains("fib(10,89)"));
}

#[test]
fn bad_input_exits_4() {
    assert_eq!(chr(&["run", "/nonexistent/program.chr", "p"]).status.code(), Some(4));
    assert_eq!(chr(&["run", "corpus:min", "min(1"]).status.code(), Some(4));
    assert_eq!(chr(&["run", "corpus:nothing", "p"]).status.code(), Some(4));
    assert_eq!(chr(&["run", "corpus:min", "3"]).status.code(), Some(4));
    assert_eq!(chr(&["run", "corpus:min", "--strategy", "bogus"]).status.code(), Some(4));
    let bad = temp_file("bad.chr", "p <=> .\n");
    assert_eq!(chr(&["run", bad.to_str().unwrap(), "p"]).status.code(), Some(4));
}

#[test]
fn strategies_agree_on_a_confluent_goal() {
    for mode in [&["--refined"][..], &["--abstract", "--seed", "5"], &["--parallel", "3"], &["--strategy", "abstract"]] {
        let mut args = vec!["run", "corpus:gcd_repaired"];
        args.extend_from_slice(mode);
        let o = chr(&args);
        assert_eq!(o.status.code(), Some(0), "{mode:?}");
        assert!(stdout(&o).starts_with("gcd(3)\n"), "{mode:?}: {}", stdout(&o));
    }
}

#[test]
fn exhaustive_lists_every_normal_form() {
    let prog = temp_file("pq.chr", "p <=> q.\np <=> r.\n");
    let o = chr(&["run", prog.to_str().unwrap(), "p", "--exhaustive"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("NORMAL FORM 1:\nq\n") || out.contains("NORMAL FORM 1:\nr\n"), "{out}");
    assert!(out.contains("NORMAL FORM 2:"), "{out}");
}

#[test]
fn trace_lists_rule_applications() {
    let o = chr(&["run", "corpus:min", "min(2), min(1)", "--trace"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("STEP 1: "), "{out}");
    assert!(out.ends_with("min(1)\n"), "{out}");
}

#[test]
fn confluence_exit_codes() {
    let yes = chr(&["analyze", "confluence", "corpus:leq"]);
    assert_eq!(yes.status.code(), Some(0));
    assert!(stdout(&yes).contains("CONFLUENT: yes"));
    let no = chr(&["analyze", "confluence", "corpus:pq"]);
    assert_eq!(no.status.code(), Some(1));
    assert!(stdout(&no).contains("WITNESS r1~r2: p => q | r"), "{}", stdout(&no));
    let unknown = chr(&["analyze", "confluence", "corpus:gcd_paper"]);
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn completion_adds_the_oriented_rule() {
    let o = chr(&["analyze", "complete", "corpus:pq", "--ranking", "corpus:pq"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ADDED: q <=> r."), "{}", stdout(&o));
    let flat = temp_file("flat.rank", "rank q/0 = 1\nrank r/0 = 1\n");
    let o = chr(&["analyze", "complete", "corpus:pq", "--ranking", flat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn equivalence_and_redundancy() {
    let same = chr(&["analyze", "equiv", "corpus:min_ge", "corpus:min_ge"]);
    assert_eq!(same.status.code(), Some(0));
    let differ = chr(&["analyze", "equiv", "corpus:min_gt", "corpus:min_ge"]);
    assert_eq!(differ.status.code(), Some(1));
    assert!(stdout(&differ).contains("EQUIVALENT: no"));
    let identical = chr(&["analyze", "equiv", "corpus:pq", "corpus:pq"]);
    assert_eq!(identical.status.code(), Some(0), "identical programs need no confluence check");
    let leq = chr(&["analyze", "redundant", "corpus:leq"]);
    assert_eq!(leq.status.code(), Some(0));
    assert!(stdout(&leq).contains("REDUNDANT: none"));
    let dup = temp_file("dup.chr", "min(I) \\ min(J) <=> J >= I | true.\nmin(I) \\ min(J) <=> J >= I | true.\n");
    let o = chr(&["analyze", "redundant", dup.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("REDUNDANT: r"), "{}", stdout(&o));
}

#[test]
fn ranking_and_complexity() {
    let proved = chr(&["analyze", "ranking", "corpus:gcd_repaired", "--ranking", "corpus:gcd_repaired"]);
    assert_eq!(proved.status.code(), Some(0));
    assert!(stdout(&proved).contains("RANKING: proved"));
    let refuted = chr(&["analyze", "ranking", "corpus:fib_topdown", "--ranking", "corpus:fib_topdown"]);
    assert_eq!(refuted.status.code(), Some(1));
    let o = chr(&["analyze", "complexity", "corpus:cyk"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "h=3\nBOUND: O(D^3)\n");
}

#[test]
fn corpus_runs_under_every_strategy_but_exhaustive() {
    let list = chr(&["corpus", "list"]);
    assert_eq!(list.status.code(), Some(0));
    assert!(stdout(&list).contains("gcd_repaired"));
    for mode in [&["--refined"][..], &["--abstract", "--seed", "1"], &["--parallel", "4"]] {
        let mut args = vec!["corpus", "run-all"];
        args.extend_from_slice(mode);
        let o = chr(&args);
        assert_eq!(o.status.code(), Some(0), "{mode:?}: {}", stdout(&o));
        assert!(stdout(&o).contains("PASSED 15/15"));
    }
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>, seed: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_chr"));
        c.args(["run", "corpus:merge_sort", "--abstract", "--trace", "--seed", seed]);
        match env {
            Some(v) => c.env("CHR_SEED", v),
            None => c.env_remove("CHR_SEED"),
        };
        c.output().unwrap()
    };
    let flag = run(None, "17");
    let env = run(Some("17"), "0");
    assert_eq!(flag.stdout, env.stdout);
    assert!(stderr(&env).contains("seed: 17"));
    assert_eq!(run(Some("x"), "0").status.code(), Some(4));
}

#[test]
fn repeated_invocations_are_identical() {
    for args in [
        &["run", "corpus:array_sort", "--abstract", "--trace", "--seed", "9"][..],
        &["run", "corpus:primes", "--parallel", "8", "--seed", "2"],
        &["analyze", "confluence", "corpus:shortest_paths", "--seed", "6"],
    ] {
        assert_eq!(chr(args).stdout, chr(args).stdout, "{args:?}");
    }
}
