//! Invariants of terms, states, built-ins and the executors.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use chr_core::analysis::{check_confluence, Confluence};
use chr_core::corpus::{Fixture, RunMode, FIXTURES};
use chr_core::engine::{
    applicable_instances, apply_instance, resume_refined, run_exhaustive, run_refined, Scheduling, Status,
};
use chr_core::parallel::run_parallel;
use chr_core::terms::{match_terms, rename_apart, unify, Substitution};
use chr_core::{parse_goal, parse_program, state_equiv, BuiltinStore, Config, State, Term};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["X", "Y", "Z", "W"]).prop_map(Term::var),
        prop::sample::select(vec!["a", "b"]).prop_map(Term::atom),
        (0i64..4).prop_map(Term::int),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Term::compound("f", vec![x, y])),
            inner.prop_map(|x| Term::compound("g", vec![x])),
        ]
    })
}

fn arb_ground() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![prop::sample::select(vec!["a", "b"]).prop_map(Term::atom), (0i64..4).prop_map(Term::int)];
    leaf.prop_recursive(2, 8, 2, |inner| (inner.clone(), inner).prop_map(|(x, y)| Term::compound("f", vec![x, y])))
}

fn ground_subst(t: &Term, values: &[Term]) -> Substitution {
    let mut s = Substitution::new();
    for (i, v) in t.vars().into_iter().enumerate() {
        s.bind(v, values[i % values.len()].clone());
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matching_recovers_the_instance(p in arb_term(), values in prop::collection::vec(arb_ground(), 1..4)) {
        let s = ground_subst(&p, &values).apply(&p);
        let theta = match_terms(std::slice::from_ref(&p), std::slice::from_ref(&s)).expect("instance must match");
        prop_assert_eq!(theta.apply(&p), s);
    }

    #[test]
    fn unifiers_unify_symmetrically_and_idempotently(a in arb_term(), b in arb_term()) {
        let ab = unify(&a, &b);
        prop_assert_eq!(ab.is_some(), unify(&b, &a).is_some());
        if let Some(theta) = ab {
            prop_assert_eq!(theta.apply(&a), theta.apply(&b));
            for t in [&a, &b] {
                let once = theta.apply(t);
                prop_assert_eq!(theta.apply(&once), once);
            }
        }
    }

    #[test]
    fn renaming_apart_gives_a_disjoint_variant(t in arb_term(), u in arb_term()) {
        let taboo = u.vars();
        let (renamed, _) = rename_apart(std::slice::from_ref(&t), &taboo);
        let r = &renamed[0];
        prop_assert!(r.vars().is_disjoint(&taboo));
        prop_assert!(match_terms(std::slice::from_ref(&t), std::slice::from_ref(r)).is_some());
        prop_assert!(match_terms(std::slice::from_ref(r), std::slice::from_ref(&t)).is_some());
    }

    #[test]
    fn ask_is_monotone(
        bound in prop::collection::btree_map(0usize..3, -5i64..5, 0..3),
        extra in (0usize..3, -5i64..5),
        k in -5i64..5,
        which in 0usize..3,
    ) {
        let names = ["X", "Y", "Z"];
        let mut store = BuiltinStore::new();
        for (i, v) in &bound {
            store = store.tell(&Term::compound("=", vec![Term::var(names[*i]), Term::int(*v)])).unwrap();
        }
        let query = Term::compound(">=", vec![Term::var(names[which]), Term::int(k)]);
        let Ok(entailed) = store.ask(&query) else { return Ok(()) };
        let bigger = store.tell(&Term::compound("=", vec![Term::var(names[extra.0]), Term::int(extra.1)])).unwrap();
        if entailed && bigger.consistent() {
            prop_assert_eq!(bigger.ask(&query), Ok(true));
        }
    }
}

fn min_state(xs: &[i64], names: &[&str]) -> State {
    let mut goal: Vec<String> = xs.iter().map(|x| format!("min({x})")).collect();
    goal.extend(names.iter().map(|n| format!("min({n})")));
    State::initial(&parse_goal(&goal.join(", ")).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn state_equivalence_is_an_equivalence(xs in prop::collection::vec(0i64..5, 0..4), ys in prop::collection::vec(0i64..5, 0..4), zs in prop::collection::vec(0i64..5, 0..4)) {
        let (a, b, c) = (min_state(&xs, &["_A"]), min_state(&ys, &["_B"]), min_state(&zs, &["_C"]));
        prop_assert!(state_equiv(&a, &a));
        prop_assert_eq!(state_equiv(&a, &b), state_equiv(&b, &a));
        if state_equiv(&a, &b) && state_equiv(&b, &c) {
            prop_assert!(state_equiv(&a, &c));
        }
        // Local variable names do not matter; multiplicities do.
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert!(state_equiv(&a, &min_state(&rev, &["_Q"])));
        let mut more = xs.clone();
        more.push(0);
        prop_assert!(!state_equiv(&a, &min_state(&more, &["_A"])));
    }
}

fn program_of(name: &str) -> chr_core::Program {
    FIXTURES.iter().find(|f| f.name == name).unwrap().program()
}

fn generated_goal(f: &Fixture, seed: u64, size: usize) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    parse_goal(&(f.generator)(&mut rng, size)).unwrap()
}

fn terminating_confluent() -> impl Iterator<Item = &'static Fixture> {
    FIXTURES.iter().filter(|f| f.confluent && f.mode == RunMode::ToNormalForm)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A transition stays possible, with the same result, when constraints
    /// are added to the state.
    #[test]
    fn transitions_are_monotone(seed in any::<u64>(), pick in any::<prop::sample::Index>(), which in 0usize..4) {
        let name = ["min", "leq", "gcd_repaired", "primes"][which];
        let f = FIXTURES.iter().find(|f| f.name == name).unwrap();
        let program = program_of(name);
        let start = State::initial(&generated_goal(f, seed, 4)).unwrap();
        let extension = generated_goal(f, seed.wrapping_add(1), 3);
        let insts = applicable_instances(&start, &program).unwrap();
        if insts.is_empty() {
            return Ok(());
        }
        let inst = &insts[pick.index(insts.len())];
        let after = apply_instance(&start, &program, inst).unwrap();
        let bigger = start.add_constraints(&extension).unwrap();
        let bigger_after = apply_instance(&bigger, &program, inst).unwrap();
        prop_assert!(state_equiv(&bigger_after, &after.add_constraints(&extension).unwrap()));
    }

    /// Interrupting a refined run and resuming it reaches the same answer.
    #[test]
    fn interrupted_runs_resume_to_the_same_answer(seed in any::<u64>(), which in any::<prop::sample::Index>(), cut in 1usize..20) {
        let fs: Vec<_> = terminating_confluent().collect();
        let f = fs[which.index(fs.len())];
        let program = f.program();
        let goal = generated_goal(f, seed, 5);
        let full = run_refined(&program, &goal, &Config::default()).unwrap();
        let partial = run_refined(&program, &goal, &Config::default().with_step_limit(cut)).unwrap();
        if partial.status != Status::StepLimit {
            prop_assert!(state_equiv(&partial.state, &full.state));
            return Ok(());
        }
        let resumed = resume_refined(&program, partial.state, &Config::default()).unwrap();
        prop_assert_eq!(resumed.status, full.status);
        prop_assert!(state_equiv(&resumed.state, &full.state), "{}: {} vs {}", f.name, resumed.state.answer(), full.state.answer());
    }

    /// Adding the second half of a goal to the answer of the first half
    /// reaches the answer of the whole goal.
    #[test]
    fn goals_can_arrive_online(seed in any::<u64>(), which in any::<prop::sample::Index>(), split in any::<prop::sample::Index>()) {
        let fs: Vec<_> = terminating_confluent().collect();
        let f = fs[which.index(fs.len())];
        let program = f.program();
        let goal = generated_goal(f, seed, 5);
        let k = split.index(goal.len() + 1);
        let full = run_refined(&program, &goal, &Config::default()).unwrap();
        let first = run_refined(&program, &goal[..k], &Config::default()).unwrap();
        let Ok(extended) = first.state.add_constraints(&goal[k..]) else {
            prop_assert_eq!(full.status, Status::Failed);
            return Ok(());
        };
        let second = resume_refined(&program, extended, &Config::default()).unwrap();
        prop_assert!(state_equiv(&second.state, &full.state), "{}: {} vs {}", f.name, second.state.answer(), full.state.answer());
    }

    /// Parallel rounds serialize and end where the sequential run ends.
    #[test]
    fn parallel_runs_agree_with_sequential_runs(seed in any::<u64>(), which in any::<prop::sample::Index>(), width in 1usize..9) {
        let fs: Vec<_> = terminating_confluent().collect();
        let f = fs[which.index(fs.len())];
        let program = f.program();
        let goal = generated_goal(f, seed, 6);
        let cfg = Config::default().with_seed(seed).with_width(width);
        let par = run_parallel(&program, State::initial(&goal).unwrap(), &cfg, true).unwrap();
        let seq = run_refined(&program, &goal, &Config::default()).unwrap();
        prop_assert!(par.serializable);
        prop_assert_eq!(par.status, seq.status);
        prop_assert!(state_equiv(&par.state, &seq.state), "{}: {} vs {}", f.name, par.state.answer(), seq.state.answer());
    }
}

fn verdicts() -> &'static BTreeMap<&'static str, Confluence> {
    static V: OnceLock<BTreeMap<&'static str, Confluence>> = OnceLock::new();
    V.get_or_init(|| {
        ["min", "gcd_repaired", "leq", "bool_and", "array_sort", "merge_sort"]
            .into_iter()
            .map(|n| (n, check_confluence(&program_of(n), &Config::default()).verdict))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Programs the analysis calls confluent have one normal form per goal.
    #[test]
    fn confluent_verdicts_agree_with_exhaustive_search(seed in any::<u64>(), which in 0usize..6) {
        let name = *verdicts().keys().nth(which).unwrap();
        prop_assert_eq!(verdicts()[name], Confluence::Confluent, "{}", name);
        let f = FIXTURES.iter().find(|f| f.name == name).unwrap();
        let goal = generated_goal(f, seed, 4);
        let r = run_exhaustive(&f.program(), State::initial(&goal).unwrap(), 2000, Scheduling::RemovalFirst);
        prop_assert!(r.errors.is_empty());
        prop_assert!(r.complete, "{}: bound hit", name);
        prop_assert_eq!(r.normal_forms.len(), 1, "{}: {:?}", name, goal);
    }
}

#[test]
fn a_non_confluent_program_has_several_normal_forms() {
    let p = parse_program("r1 @ p <=> q.\nr2 @ p <=> r.").unwrap();
    let r = run_exhaustive(&p, State::initial(&parse_goal("p").unwrap()).unwrap(), 100, Scheduling::All);
    assert!(r.complete);
    assert_eq!(r.normal_forms.len(), 2);
    assert_eq!(check_confluence(&p, &Config::default()).verdict, Confluence::NotConfluent);
}
