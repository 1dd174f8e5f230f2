//! Corpus programs checked against independent reference computations.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use chr_core::corpus::{fixture, Expected, FIXTURES};
use chr_core::engine::{run_refined, Status};
use chr_core::{parse_goal, Config, StrategyRegistry};
use num_rational::BigRational;

fn answer(name: &str, goal: &str) -> String {
    let f = fixture(name).unwrap();
    let start = Instant::now();
    let r = run_refined(&f.program(), &parse_goal(goal).unwrap(), &f.config(&Config::default())).unwrap();
    assert!(start.elapsed() < Duration::from_secs(1), "{name} took {:?}", start.elapsed());
    r.state.answer()
}

fn lines(s: &str) -> BTreeSet<String> {
    s.lines().map(str::to_string).collect()
}

fn fixture_answer(name: &str) -> String {
    answer(name, fixture(name).unwrap().goal)
}

#[test]
fn min_is_the_smallest() {
    let xs = [5, 3, 9, 7, 1];
    assert_eq!(fixture_answer("min"), format!("min({})\n", xs.iter().min().unwrap()));
}

fn euclid(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        euclid(b, a % b)
    }
}

#[test]
fn gcd_matches_euclid() {
    let g = [12, 27, 30].into_iter().fold(0, euclid);
    assert_eq!(fixture_answer("gcd_repaired"), format!("gcd({g})\n"));
    for xs in [[4, 6, 8], [35, 14, 21], [17, 5, 9], [60, 48, 36]] {
        let goal: Vec<String> = xs.iter().map(|x| format!("gcd({x})")).collect();
        let g = xs.into_iter().fold(0, euclid);
        assert_eq!(answer("gcd_repaired", &goal.join(", ")), format!("gcd({g})\n"));
    }
}

#[test]
fn literal_gcd_divides_by_zero_on_equal_inputs() {
    let f = fixture("gcd_paper").unwrap();
    let err = run_refined(&f.program(), &f.goal_terms(), &Config::default()).unwrap_err();
    assert!(err.to_string().contains("division by zero"), "{err}");
    assert!(matches!(f.expected, Expected::Error(_)));
}

#[test]
fn primes_match_trial_division() {
    let primes: Vec<u32> = (2..=30).filter(|n| (2..*n).all(|d| n % d != 0)).collect();
    assert_eq!(primes.len(), 10);
    let expected: String = primes.iter().map(|p| format!("prime({p})\n")).collect();
    assert_eq!(fixture_answer("primes"), expected);
}

#[test]
fn array_sort_matches_comparison_sort() {
    let values = [5, 3, 4, 1, 2];
    let mut sorted = values;
    sorted.sort();
    let expected: String = sorted.iter().enumerate().map(|(i, v)| format!("a({i},{v})\n")).collect();
    assert_eq!(fixture_answer("array_sort"), expected);
}

#[test]
fn merge_sort_builds_the_sorted_chain() {
    let mut values = vec![5, 3, 9, 1, 7];
    values.sort();
    let mut prev = 0;
    let mut expected = String::new();
    for v in values {
        expected.push_str(&format!("next({prev},{v})\n"));
        prev = v;
    }
    assert_eq!(fixture_answer("merge_sort"), expected);
}

#[test]
fn sqrt_matches_newton_iteration() {
    let two = BigRational::from_integer(2.into());
    let eps = BigRational::new(1.into(), 1_000_000.into());
    let one = BigRational::from_integer(1.into());
    let mut r = two.clone();
    while &r * &r / &two - &one > eps {
        r = (&r + &two / &r) / &two;
    }
    assert!(&r * &r / &two - &one <= eps);
    assert_eq!(fixture_answer("sqrt"), format!("eps(1/1000000)\nsqrt(2,{r})\n"));
}

fn fib(n: usize) -> u64 {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

#[test]
fn fibonacci_variants_match_the_recurrence() {
    assert_eq!(fib(10), 89);
    assert_eq!(fixture_answer("fib_topdown"), format!("M = {}\n", fib(10)));
    for n in 0..=12 {
        assert_eq!(answer("fib_topdown", &format!("fib({n},M)")), format!("M = {}\n", fib(n)));
    }
    let memo = lines(&fixture_answer("fib_memo"));
    assert!(memo.contains(&format!("M = {}", fib(10))));
    for n in 0..=10 {
        assert!(memo.contains(&format!("fib({n},{})", fib(n))), "{memo:?}");
    }
    let f = fixture("fib_bottomup").unwrap();
    let r = run_refined(&f.program(), &f.goal_terms(), &f.config(&Config::default())).unwrap();
    assert_eq!(r.status, Status::StepLimit);
    assert!(lines(&r.state.answer()).contains(&format!("fib(10,{})", fib(10))));
    let max = lines(&fixture_answer("fib_bottomup_max"));
    let expected: BTreeSet<String> =
        (0..=10).map(|n| format!("fib({n},{})", fib(n))).chain(["fib(10)".to_string()]).collect();
    assert_eq!(max, expected);
}

#[test]
fn shortest_paths_match_floyd_warshall() {
    let arcs = [("a", "b", 4), ("a", "c", 1), ("c", "b", 2), ("b", "d", 1), ("c", "d", 5), ("d", "e", 3), ("e", "a", 2)];
    let nodes = ["a", "b", "c", "d", "e"];
    // Paths have at least one arc, so d[i][i] is the shortest cycle.
    let mut d: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for (x, y, w) in arcs {
        let e = d.entry((x, y)).or_insert(w);
        *e = (*e).min(w);
    }
    for k in nodes {
        for i in nodes {
            for j in nodes {
                if let (Some(&a), Some(&b)) = (d.get(&(i, k)), d.get(&(k, j))) {
                    let e = d.entry((i, j)).or_insert(a + b);
                    *e = (*e).min(a + b);
                }
            }
        }
    }
    let expected: BTreeSet<String> = d.iter().map(|((x, y), w)| format!("path({x},{y},{w})")).collect();
    let actual: BTreeSet<String> =
        lines(&fixture_answer("shortest_paths")).into_iter().filter(|l| l.starts_with("path(")).collect();
    assert_eq!(actual, expected);
}

/// Every (i, j, A) such that A derives tokens[i..j].
fn cyk_oracle(tokens: &[&str]) -> BTreeSet<String> {
    fn derives(a: &str, t: &[&str]) -> bool {
        match a {
            "p" => t == ["a"],
            "s" => t == ["b"] || (1..t.len()).any(|k| derives("p", &t[..k]) && derives("s", &t[k..])),
            _ => false,
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..tokens.len() {
        for j in i + 1..=tokens.len() {
            for a in ["p", "s"] {
                if derives(a, &tokens[i..j]) {
                    out.insert(format!("parse({i},{j},{a})"));
                }
            }
        }
    }
    out
}

#[test]
fn cyk_matches_derivation_enumeration() {
    let tokens = ["a", "a", "b", "a", "b"];
    let actual: BTreeSet<String> =
        lines(&fixture_answer("cyk")).into_iter().filter(|l| l.starts_with("parse(")).collect();
    assert_eq!(actual, cyk_oracle(&tokens));
    for input in [&["b"][..], &["a", "b"], &["a", "a", "a", "b"], &["b", "b", "a"]] {
        let arcs: Vec<String> = input.iter().enumerate().map(|(i, t)| format!("arc({i},{},{t})", i + 1)).collect();
        let goal = format!("s->p*s, s->b, p->a, {}", arcs.join(", "));
        let actual: BTreeSet<String> =
            lines(&answer("cyk", &goal)).into_iter().filter(|l| l.starts_with("parse(")).collect();
        assert_eq!(actual, cyk_oracle(input), "{input:?}");
    }
}

#[test]
fn bool_and_matches_the_truth_table() {
    assert_eq!(fixture_answer("bool_and"), "X = 1\nY = 1\nZ = 1\n");
    for x in 0..2 {
        for y in 0..2 {
            let a = answer("bool_and", &format!("and(X,Y,Z), X = {x}, Y = {y}"));
            assert!(lines(&a).contains(&format!("Z = {}", x & y)), "{x} {y}: {a}");
            assert!(!a.contains("and("));
        }
    }
}

#[test]
fn partial_order_cycle_collapses() {
    assert_eq!(fixture_answer("leq"), "A = B\nB = C\n");
}

#[test]
fn confluent_fixtures_agree_across_strategies() {
    let registry = StrategyRegistry::default();
    for f in FIXTURES.iter().filter(|f| f.confluent) {
        for name in ["abstract", "parallel"] {
            for seed in 0..5 {
                let cfg = Config::default().with_seed(seed).with_width(1 + seed as usize);
                let out = f.check(registry.get(name).unwrap(), &cfg);
                assert!(out.passed, "{} under {name} seed {seed}: {}", f.name, out.actual);
            }
        }
    }
}
