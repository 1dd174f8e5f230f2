//! Example programs with goals, expected answers and random goal
//! generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::engine::{EngineError, Status};
use crate::strategy::Strategy;
use crate::syntax::{parse_goal, parse_program, Program};
use crate::terms::Term;

/// How a fixture is meant to be run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    ToNormalForm,
    /// Stop after this many rule applications (for non-terminating programs).
    Steps(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    /// The exact printed answer.
    Answer(&'static str),
    /// Lines that must occur in the printed answer.
    Contains(&'static [&'static str]),
    /// A runtime error whose message contains this text.
    Error(&'static str),
}

pub type GoalGenerator = fn(&mut ChaCha8Rng, usize) -> String;

#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
    pub goal: &'static str,
    pub mode: RunMode,
    /// Confluent and terminating on the generator's goals.
    pub confluent: bool,
    pub expected: Expected,
    pub ranking: Option<&'static str>,
    /// Random goals of at most the given number of constraints.
    pub generator: GoalGenerator,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureOutcome {
    pub passed: bool,
    /// The answer, or the error message.
    pub actual: String,
    pub status: Option<Status>,
}

impl Fixture {
    pub fn program(&self) -> Program {
        parse_program(self.source).expect("corpus programs parse")
    }

    pub fn goal_terms(&self) -> Vec<Term> {
        parse_goal(self.goal).expect("corpus goals parse")
    }

    pub fn config(&self, base: &Config) -> Config {
        match self.mode {
            RunMode::ToNormalForm => base.clone(),
            RunMode::Steps(n) => base.clone().with_step_limit(n),
        }
    }

    /// Run the fixture's goal with a strategy and compare with the
    /// expectation.
    pub fn check(&self, strategy: &dyn Strategy, base: &Config) -> FixtureOutcome {
        let result = strategy.run(&self.program(), &self.goal_terms(), &self.config(base));
        match result {
            Ok(ex) => {
                let Some(out) = ex.outcomes.first() else {
                    return FixtureOutcome { passed: false, actual: "no outcome".into(), status: None };
                };
                let actual = out.state.answer();
                let expected_status = match self.mode {
                    RunMode::ToNormalForm => Status::NormalForm,
                    RunMode::Steps(_) => Status::StepLimit,
                };
                let passed = out.status == expected_status
                    && ex.outcomes.len() == 1
                    && match self.expected {
                        Expected::Answer(a) => actual == a,
                        Expected::Contains(lines) => lines.iter().all(|l| actual.lines().any(|x| x == *l)),
                        Expected::Error(_) => false,
                    };
                FixtureOutcome { passed, actual, status: Some(out.status) }
            }
            Err(e) => {
                let passed = matches!(self.expected, Expected::Error(m) if e.to_string().contains(m));
                FixtureOutcome { passed, actual: e.to_string(), status: None }
            }
        }
    }
}

/// Whether an engine error is the expected runtime error of a fixture.
pub fn is_expected_error(f: &Fixture, e: &EngineError) -> bool {
    matches!(f.expected, Expected::Error(m) if e.to_string().contains(m))
}

fn distinct(rng: &mut ChaCha8Rng, n: usize, lo: i64, hi: i64) -> Vec<i64> {
    let mut pool: Vec<i64> = (lo..=hi).collect();
    pool.shuffle(rng);
    pool.truncate(n);
    pool
}

fn join(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "true".into()
    } else {
        parts.join(", ")
    }
}

fn gen_min(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join((0..n).map(|_| format!("min({})", rng.gen_range(0..20))).collect())
}

fn gen_gcd(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join((0..n).map(|_| format!("gcd({})", rng.gen_range(1..60))).collect())
}

fn gen_gcd_with_zero(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join((0..n).map(|_| format!("gcd({})", rng.gen_range(0..20))).collect())
}

fn gen_primes(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join(distinct(rng, n, 2, 40).into_iter().map(|v| format!("prime({v})")).collect())
}

fn gen_array(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    let values = distinct(rng, n, 0, 30);
    join(values.into_iter().enumerate().map(|(i, v)| format!("a({i},{v})")).collect())
}

fn gen_next(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join(distinct(rng, n, 1, 50).into_iter().map(|v| format!("next(0,{v})")).collect())
}

fn gen_sqrt(rng: &mut ChaCha8Rng, _: usize) -> String {
    let n = rng.gen_range(2..20);
    let e = [10, 100, 1000][rng.gen_range(0..3)];
    if rng.gen_bool(0.5) {
        format!("eps(1/{e}), sqrt({n},{n})")
    } else {
        format!("sqrt({n},{n}), eps(1/{e})")
    }
}

fn gen_fib(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.clamp(1, 3));
    join((0..n).map(|i| format!("fib({},F{i})", rng.gen_range(0..=10))).collect())
}

fn gen_fib_bottomup(rng: &mut ChaCha8Rng, size: usize) -> String {
    let mut parts = vec!["fibstart".to_string()];
    for _ in 1..rng.gen_range(1..=size.max(1)) {
        let k = rng.gen_range(0..6);
        parts.push(format!("fib({k},{})", rng.gen_range(1..10)));
    }
    parts.shuffle(rng);
    join(parts)
}

fn gen_fib_max(rng: &mut ChaCha8Rng, _: usize) -> String {
    format!("fib({})", rng.gen_range(1..=12))
}

const NODES: [&str; 4] = ["a", "b", "c", "d"];

fn gen_graph(rng: &mut ChaCha8Rng, size: usize) -> String {
    let n = rng.gen_range(1..=size.max(1));
    join(
        (0..n)
            .map(|_| {
                let x = NODES.choose(rng).unwrap();
                let y = NODES.choose(rng).unwrap();
                format!("arc({x},{y},{})", rng.gen_range(1..10))
            })
            .collect(),
    )
}

fn gen_cyk(rng: &mut ChaCha8Rng, size: usize) -> String {
    let mut parts: Vec<String> = ["s->p*s", "s->b", "p->a"].iter().map(|s| s.to_string()).collect();
    let n = rng.gen_range(1..=size.saturating_sub(3).max(1));
    for i in 0..n {
        let t = if rng.gen_bool(0.5) { "a" } else { "b" };
        parts.push(format!("arc({i},{},{t})", i + 1));
    }
    parts.shuffle(rng);
    join(parts)
}

fn gen_and(rng: &mut ChaCha8Rng, size: usize) -> String {
    let pool = ["X", "Y", "Z", "W", "0", "1"];
    let n = rng.gen_range(1..=size.max(1));
    let mut parts = Vec::new();
    for _ in 0..n {
        if rng.gen_bool(0.7) {
            let [a, b, c] = [0; 3].map(|_| *pool[..4].choose(rng).unwrap());
            let a = if rng.gen_bool(0.2) { pool[4 + rng.gen_range(0..2)] } else { a };
            parts.push(format!("and({a},{b},{c})"));
        } else {
            parts.push(format!("{} = {}", pool[..4].choose(rng).unwrap(), rng.gen_range(0..2)));
        }
    }
    join(parts)
}

fn gen_leq(rng: &mut ChaCha8Rng, size: usize) -> String {
    let vars = ["A", "B", "C", "D"];
    let n = rng.gen_range(1..=size.max(1));
    join((0..n).map(|_| format!("leq({},{})", vars.choose(rng).unwrap(), vars.choose(rng).unwrap())).collect())
}

pub static FIXTURES: &[Fixture] = &[
    Fixture {
        name: "min",
        description: "minimum of a set of numbers",
        source: include_str!("../corpus/min.chr"),
        goal: "min(5), min(3), min(9), min(7), min(1)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("min(1)\n"),
        ranking: Some(include_str!("../corpus/min.rank")),
        generator: gen_min,
    },
    Fixture {
        name: "gcd_paper",
        description: "greatest common divisor as listed; fails on equal inputs",
        source: include_str!("../corpus/gcd_paper.chr"),
        goal: "gcd(8), gcd(8)",
        mode: RunMode::ToNormalForm,
        confluent: false,
        expected: Expected::Error("division by zero"),
        ranking: None,
        generator: gen_gcd_with_zero,
    },
    Fixture {
        name: "gcd_repaired",
        description: "greatest common divisor with a positive divisor guard",
        source: include_str!("../corpus/gcd_repaired.chr"),
        goal: "gcd(12), gcd(27), gcd(30)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("gcd(3)\n"),
        ranking: Some(include_str!("../corpus/gcd_repaired.rank")),
        generator: gen_gcd,
    },
    Fixture {
        name: "primes",
        description: "prime sieve over 2..30",
        source: include_str!("../corpus/primes.chr"),
        goal: "prime(2), prime(3), prime(4), prime(5), prime(6), prime(7), prime(8), prime(9), prime(10), \
               prime(11), prime(12), prime(13), prime(14), prime(15), prime(16), prime(17), prime(18), prime(19), \
               prime(20), prime(21), prime(22), prime(23), prime(24), prime(25), prime(26), prime(27), prime(28), \
               prime(29), prime(30)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer(
            "prime(2)\nprime(3)\nprime(5)\nprime(7)\nprime(11)\nprime(13)\nprime(17)\nprime(19)\nprime(23)\nprime(29)\n",
        ),
        ranking: None,
        generator: gen_primes,
    },
    Fixture {
        name: "array_sort",
        description: "sort a(Index,Value) by swapping",
        source: include_str!("../corpus/array_sort.chr"),
        goal: "a(0,5), a(1,3), a(2,4), a(3,1), a(4,2)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("a(0,1)\na(1,2)\na(2,3)\na(3,4)\na(4,5)\n"),
        ranking: None,
        generator: gen_array,
    },
    Fixture {
        name: "merge_sort",
        description: "chain next(start,Value) into sorted order",
        source: include_str!("../corpus/merge_sort.chr"),
        goal: "next(0,5), next(0,3), next(0,9), next(0,1), next(0,7)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("next(0,1)\nnext(1,3)\nnext(3,5)\nnext(5,7)\nnext(7,9)\n"),
        ranking: None,
        generator: gen_next,
    },
    Fixture {
        name: "sqrt",
        description: "Newton iteration for the square root of 2",
        source: include_str!("../corpus/sqrt.chr"),
        goal: "eps(1/1000000), sqrt(2,2)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("eps(1/1000000)\nsqrt(2,665857/470832)\n"),
        ranking: None,
        generator: gen_sqrt,
    },
    Fixture {
        name: "fib_topdown",
        description: "top-down Fibonacci",
        source: include_str!("../corpus/fib_topdown.chr"),
        goal: "fib(10,M)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("M = 89\n"),
        ranking: Some(include_str!("../corpus/fib_topdown.rank")),
        generator: gen_fib,
    },
    Fixture {
        name: "fib_memo",
        description: "top-down Fibonacci with memoization",
        source: include_str!("../corpus/fib_memo.chr"),
        goal: "fib(10,M)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Contains(&["M = 89", "fib(10,89)"]),
        ranking: None,
        generator: gen_fib,
    },
    Fixture {
        name: "fib_bottomup",
        description: "bottom-up Fibonacci without termination, cut off by a step limit",
        source: include_str!("../corpus/fib_bottomup.chr"),
        goal: "fibstart",
        mode: RunMode::Steps(20),
        confluent: false,
        expected: Expected::Contains(&["fib(10,89)"]),
        ranking: None,
        generator: gen_fib_bottomup,
    },
    Fixture {
        name: "fib_bottomup_max",
        description: "bottom-up Fibonacci up to a maximum",
        source: include_str!("../corpus/fib_bottomup_max.chr"),
        goal: "fib(10)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Contains(&["fib(10,89)"]),
        ranking: None,
        generator: gen_fib_max,
    },
    Fixture {
        name: "shortest_paths",
        description: "all-pair shortest paths on a 5-node graph",
        source: include_str!("../corpus/shortest_paths.chr"),
        goal: "arc(a,b,4), arc(a,c,1), arc(c,b,2), arc(b,d,1), arc(c,d,5), arc(d,e,3), arc(e,a,2)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Contains(&["path(a,b,3)", "path(a,d,4)", "path(a,e,7)", "path(e,d,6)"]),
        ranking: None,
        generator: gen_graph,
    },
    Fixture {
        name: "cyk",
        description: "CYK parsing of a a b a b",
        source: include_str!("../corpus/cyk.chr"),
        goal: "s->p*s, s->b, p->a, arc(0,1,a), arc(1,2,a), arc(2,3,b), arc(3,4,a), arc(4,5,b)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Contains(&["parse(0,3,s)", "parse(3,5,s)"]),
        ranking: None,
        generator: gen_cyk,
    },
    Fixture {
        name: "bool_and",
        description: "Boolean conjunction computed backwards",
        source: include_str!("../corpus/bool_and.chr"),
        goal: "and(X,Y,Z), Z = 1",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("X = 1\nY = 1\nZ = 1\n"),
        ranking: None,
        generator: gen_and,
    },
    Fixture {
        name: "leq",
        description: "partial order on a cycle",
        source: include_str!("../corpus/leq.chr"),
        goal: "leq(A,B), leq(B,C), leq(C,A)",
        mode: RunMode::ToNormalForm,
        confluent: true,
        expected: Expected::Answer("A = B\nB = C\n"),
        ranking: None,
        generator: gen_leq,
    },
];

/// Programs used only by analyses.
pub static ANALYSIS_PROGRAMS: &[(&str, &str)] = &[
    ("min_gt", include_str!("../corpus/min_gt.chr")),
    ("min_ge", include_str!("../corpus/min_ge.chr")),
    ("min_hybrid", include_str!("../corpus/min_hybrid.chr")),
    ("pq", include_str!("../corpus/pq.chr")),
];

pub static ANALYSIS_RANKINGS: &[(&str, &str)] = &[("pq", include_str!("../corpus/pq.rank"))];

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// Source of a fixture or analysis program by name.
pub fn program_source(name: &str) -> Option<&'static str> {
    fixture(name)
        .map(|f| f.source)
        .or_else(|| ANALYSIS_PROGRAMS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s))
}
