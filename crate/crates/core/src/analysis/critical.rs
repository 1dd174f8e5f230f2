//! Minimal states, critical pairs and the confluence check.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::engine::{apply_instance, instance_for, run_exhaustive, Scheduling};
use crate::state::{state_equiv, ConstraintId, State};
use crate::syntax::{Program, Rule};
use crate::terms::{eval_arith, is_arith_functor, rename_apart, unify_all, Substitution, Term, Var};

/// Symbolic conjunction of user constraints with guard residue. Plain
/// equalities are already applied; the remaining guard conjuncts are side
/// conditions discharged by instantiation.
#[derive(Clone, Debug)]
pub struct SymbolicState {
    pub user: Vec<Term>,
    pub side_conditions: Vec<Term>,
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.user.iter().map(Term::to_string).collect();
        parts.extend(self.side_conditions.iter().map(Term::to_string));
        if parts.is_empty() {
            parts.push("true".into());
        }
        write!(f, "{}", parts.join(", "))
    }
}

/// A rule's heads and guard, with head `i` carrying id `i + 1`.
#[derive(Clone, Debug)]
pub struct MinimalState {
    pub rule: usize,
    pub symbolic: SymbolicState,
}

/// A concrete state obtained by instantiating the side conditions.
#[derive(Clone, Debug)]
pub struct Instantiation {
    pub assignment: Vec<(Var, Term)>,
    pub state: State,
}

pub fn format_assignment(a: &[(Var, Term)]) -> String {
    let parts: Vec<String> = a.iter().map(|(v, t)| format!("{v}={t}")).collect();
    parts.join(", ")
}

fn has_arith(t: &Term) -> bool {
    match t {
        Term::Compound(f, args) => is_arith_functor(f, args.len()) || args.iter().any(has_arith),
        _ => false,
    }
}

/// Apply plain (non-arithmetic) guard equalities by unification. `None` if
/// they are unsatisfiable.
fn symbolic(user: Vec<Term>, guards: Vec<Term>) -> Option<SymbolicState> {
    let mut eqs = Vec::new();
    let mut rest = Vec::new();
    for g in guards {
        match g.functor() {
            Some(("true", 0)) => {}
            Some(("=", 2)) if !has_arith(&g) => eqs.push((g.args()[0].clone(), g.args()[1].clone())),
            _ => rest.push(g),
        }
    }
    let sigma = unify_all(&eqs)?;
    Some(SymbolicState { user: sigma.apply_all(&user), side_conditions: sigma.apply_all(&rest) })
}

pub fn minimal_state(program: &Program, r: usize) -> MinimalState {
    let rule = &program.rules[r];
    let user: Vec<Term> = rule.heads().cloned().collect();
    let symbolic = symbolic(user.clone(), rule.guard.clone())
        .unwrap_or(SymbolicState { user, side_conditions: rule.guard.clone() });
    MinimalState { rule: r, symbolic }
}

/// Candidate values for the side-condition variables: a small grid first,
/// then seeded draws from `-grid..=grid`. Variables defined by an equation
/// `V = e` are computed rather than guessed.
pub(crate) fn instantiate(
    program: &Program,
    sym: &SymbolicState,
    required: &[(usize, Vec<ConstraintId>)],
    grid: i64,
    rng: &mut impl Rng,
) -> Vec<Instantiation> {
    const SMALL: [i64; 3] = [0, 1, 2];
    const MAX_SMALL: usize = 27;
    const RANDOM: usize = 8;
    const MAX_ACCEPTED: usize = 12;

    let mut free: BTreeSet<Var> = BTreeSet::new();
    sym.side_conditions.iter().for_each(|g| g.collect_vars(&mut free));
    let mut defined: Vec<(Var, Term)> = Vec::new();
    for g in &sym.side_conditions {
        if g.functor() != Some(("=", 2)) {
            continue;
        }
        let (a, b) = (&g.args()[0], &g.args()[1]);
        for (v, e) in [(a, b), (b, a)] {
            if let Term::Var(v) = v {
                if !e.occurs(v) && !defined.iter().any(|(d, _)| d == v) {
                    defined.push((v.clone(), e.clone()));
                    break;
                }
            }
        }
    }
    let guessed: Vec<Var> = free.iter().filter(|v| !defined.iter().any(|(d, _)| d == *v)).cloned().collect();

    let mut candidates: Vec<Vec<i64>> = Vec::new();
    let k = guessed.len();
    let small_total = SMALL.len().checked_pow(k as u32).unwrap_or(usize::MAX);
    for n in 0..small_total.min(MAX_SMALL) {
        let mut n = n;
        candidates.push(
            (0..k)
                .map(|_| {
                    let v = SMALL[n % SMALL.len()];
                    n /= SMALL.len();
                    v
                })
                .collect(),
        );
    }
    if k > 0 {
        for _ in 0..RANDOM {
            candidates.push((0..k).map(|_| rng.gen_range(-grid..=grid)).collect());
        }
    }
    let mut seen = BTreeSet::new();
    candidates.retain(|c| seen.insert(c.clone()));

    let mut out = Vec::new();
    for values in candidates {
        let mut sigma: Substitution = guessed.iter().cloned().zip(values.into_iter().map(Term::int)).collect();
        for _ in 0..defined.len() {
            for (v, e) in &defined {
                if sigma.get(v).is_none() {
                    let e = sigma.apply(e);
                    if e.is_ground() {
                        if let Ok(n) = eval_arith(&e) {
                            sigma.bind(v.clone(), Term::Num(n));
                        }
                    }
                }
            }
        }
        if free.iter().any(|v| sigma.get(v).is_none()) {
            continue;
        }
        let Ok(mut state) = State::initial(&sigma.apply_all(&sym.user)) else { continue };
        let mut globals = BTreeSet::new();
        state.terms().for_each(|t| t.collect_vars(&mut globals));
        state.set_globals(globals);
        let applies = required
            .iter()
            .all(|(r, ids)| matches!(instance_for(&state, program, *r, ids), Ok(Some(_))));
        if applies {
            let assignment = free.iter().map(|v| (v.clone(), sigma.apply(&Term::Var(v.clone())))).collect();
            out.push(Instantiation { assignment, state });
            if out.len() == MAX_ACCEPTED {
                break;
            }
        }
    }
    out
}

/// Concrete minimal states of a rule in which it is applicable.
pub fn minimal_instances(program: &Program, r: usize, config: &Config) -> Vec<Instantiation> {
    let ms = minimal_state(program, r);
    let ids: Vec<ConstraintId> = (1..=ms.symbolic.user.len() as ConstraintId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (r as u64).wrapping_mul(0x9e37_79b9));
    instantiate(program, &ms.symbolic, &[(r, ids)], config.sample_grid, &mut rng)
}

/// Head positions equated by an overlap: `(head of first rule, head of
/// second rule)`, positions counted kept-then-removed.
pub type Pairing = Vec<(usize, usize)>;

/// One overlap of two rules, before instantiation.
#[derive(Clone, Debug)]
pub struct Overlap {
    pub rules: (usize, usize),
    pub pairing: Pairing,
    pub symbolic: SymbolicState,
    /// Head ids of each rule in the overlap state.
    pub ids: (Vec<ConstraintId>, Vec<ConstraintId>),
}

#[derive(Clone, Debug)]
pub struct CriticalPair {
    pub rules: (usize, usize),
    pub overlap: usize,
    pub assignment: Vec<(Var, Term)>,
    pub critical_state: State,
    /// Successor under the first rule, or the runtime error it raised.
    pub left: Result<State, String>,
    pub right: Result<State, String>,
}

fn pairings(a: &Rule, b: &[Term], b_kept: usize, same_rule: bool) -> Vec<Pairing> {
    let ha: Vec<&Term> = a.heads().collect();
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; b.len()];
    fn go(
        i: usize,
        ha: &[&Term],
        hb: &[Term],
        used: &mut [bool],
        current: &mut Pairing,
        out: &mut Vec<Pairing>,
    ) {
        if i == ha.len() {
            if !current.is_empty() {
                out.push(current.clone());
            }
            return;
        }
        go(i + 1, ha, hb, used, current, out);
        for j in 0..hb.len() {
            if !used[j] && ha[i].functor() == hb[j].functor() {
                used[j] = true;
                current.push((i, j));
                go(i + 1, ha, hb, used, current, out);
                current.pop();
                used[j] = false;
            }
        }
    }
    go(0, &ha, b, &mut used, &mut current, &mut out);
    let a_kept = a.kept.len();
    out.retain(|p| {
        let conflict = p.iter().any(|&(i, j)| i >= a_kept || j >= b_kept);
        let identity = same_rule && p.len() == ha.len() && p.iter().all(|&(i, j)| i == j);
        conflict && !identity
    });
    out
}

/// All overlaps of rule pairs `(a, b)` with `a <= b`.
pub fn overlaps(program: &Program) -> Vec<Overlap> {
    let mut out = Vec::new();
    for (ia, a) in program.rules.iter().enumerate() {
        for (ib, b) in program.rules.iter().enumerate().skip(ia) {
            let mut parts: Vec<Term> = b.heads().cloned().collect();
            let nb = parts.len();
            parts.extend(b.guard.iter().cloned());
            let (renamed, _) = rename_apart(&parts, &a.vars());
            let (hb, gb) = renamed.split_at(nb);
            let ha: Vec<Term> = a.heads().cloned().collect();
            for pairing in pairings(a, hb, b.kept.len(), ia == ib) {
                let eqs: Vec<(Term, Term)> = pairing.iter().map(|&(i, j)| (ha[i].clone(), hb[j].clone())).collect();
                let Some(theta) = unify_all(&eqs) else { continue };
                let mut user = ha.clone();
                let mut ids_b = vec![0; nb];
                for &(i, j) in &pairing {
                    ids_b[j] = i as ConstraintId + 1;
                }
                for (j, h) in hb.iter().enumerate() {
                    if ids_b[j] == 0 {
                        user.push(h.clone());
                        ids_b[j] = user.len() as ConstraintId;
                    }
                }
                let guards: Vec<Term> = a.guard.iter().chain(gb).cloned().collect();
                let Some(symbolic) = symbolic(theta.apply_all(&user), theta.apply_all(&guards)) else { continue };
                let ids_a = (1..=ha.len() as ConstraintId).collect();
                out.push(Overlap { rules: (ia, ib), pairing, symbolic, ids: (ids_a, ids_b) });
            }
        }
    }
    out
}

/// Critical pairs of one overlap, one per satisfying instantiation.
pub fn overlap_pairs(program: &Program, ov: &Overlap, config: &Config, rng: &mut impl Rng) -> Vec<CriticalPair> {
    let required = [(ov.rules.0, ov.ids.0.clone()), (ov.rules.1, ov.ids.1.clone())];
    let mut out = Vec::new();
    for inst in instantiate(program, &ov.symbolic, &required, config.sample_grid, rng) {
        let succ = |r: usize, ids: &[ConstraintId]| -> Result<State, String> {
            let i = instance_for(&inst.state, program, r, ids)
                .map_err(|e| e.to_string())?
                .expect("instantiation checked applicability");
            apply_instance(&inst.state, program, &i).map_err(|e| e.to_string())
        };
        out.push(CriticalPair {
            rules: ov.rules,
            overlap: ov.pairing.len(),
            assignment: inst.assignment.clone(),
            left: succ(ov.rules.0, &ov.ids.0),
            right: succ(ov.rules.1, &ov.ids.1),
            critical_state: inst.state,
        });
    }
    out
}

pub fn critical_pairs(program: &Program, config: &Config) -> Vec<CriticalPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    overlaps(program).iter().flat_map(|ov| overlap_pairs(program, ov, config, &mut rng)).collect()
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Joinability {
    Joinable,
    NotJoinable { left: State, right: State },
    Unknown(String),
}

impl Joinability {
    fn rank(&self) -> u8 {
        match self {
            Joinability::Joinable => 0,
            Joinability::Unknown(_) => 1,
            Joinability::NotJoinable { .. } => 2,
        }
    }
}

/// Normalize both successors exhaustively and look for a common normal form.
pub fn joinable(cp: &CriticalPair, program: &Program, bound: usize) -> Joinability {
    let (left, right) = match (&cp.left, &cp.right) {
        (Ok(l), Ok(r)) => (l, r),
        (Err(e), _) | (_, Err(e)) => return Joinability::Unknown(e.clone()),
    };
    let l = run_exhaustive(program, left.clone(), bound, Scheduling::RemovalFirst);
    let r = run_exhaustive(program, right.clone(), bound, Scheduling::RemovalFirst);
    if let Some(e) = l.errors.first().or(r.errors.first()) {
        return Joinability::Unknown(e.clone());
    }
    if l.normal_forms.iter().any(|a| r.normal_forms.iter().any(|b| state_equiv(a, b))) {
        return Joinability::Joinable;
    }
    if l.complete && r.complete {
        if let (Some(a), Some(b)) = (l.normal_forms.first(), r.normal_forms.first()) {
            return Joinability::NotJoinable { left: a.clone(), right: b.clone() };
        }
    }
    Joinability::Unknown(format!("search bound {bound} reached"))
}

/// Verdict for one overlap, aggregated over its instantiations.
#[derive(Clone, Debug)]
pub struct OverlapVerdict {
    pub rules: (String, String),
    pub overlap: usize,
    pub symbolic: SymbolicState,
    pub verdict: Joinability,
    /// The instance behind a negative or unknown verdict.
    pub witness: Option<CriticalPair>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Confluence {
    Confluent,
    NotConfluent,
    Unknown,
}

#[derive(Clone, Debug)]
pub struct ConfluenceReport {
    pub overlaps: Vec<OverlapVerdict>,
    pub verdict: Confluence,
    pub seed: u64,
}

impl ConfluenceReport {
    pub fn witnesses(&self) -> impl Iterator<Item = &OverlapVerdict> {
        self.overlaps.iter().filter(|o| matches!(o.verdict, Joinability::NotJoinable { .. }))
    }
}

pub fn check_confluence(program: &Program, config: &Config) -> ConfluenceReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let ovs = overlaps(program);
    let pairs: Vec<Vec<CriticalPair>> = ovs.iter().map(|ov| overlap_pairs(program, ov, config, &mut rng)).collect();
    // Joinability checks are independent; run one thread per overlap.
    let verdicts: Vec<Vec<Joinability>> = std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|cps| s.spawn(move || cps.iter().map(|cp| joinable(cp, program, config.joinability_bound)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("joinability check panicked")).collect()
    });
    let mut overlaps = Vec::new();
    for ((ov, cps), vs) in ovs.into_iter().zip(pairs).zip(verdicts) {
        if cps.is_empty() {
            continue;
        }
        let (worst, witness) = cps
            .into_iter()
            .zip(vs)
            .fold((Joinability::Joinable, None), |(w, wc), (cp, v)| {
                if v.rank() > w.rank() {
                    (v, Some(cp))
                } else {
                    (w, wc)
                }
            });
        overlaps.push(OverlapVerdict {
            rules: (program.rules[ov.rules.0].label(), program.rules[ov.rules.1].label()),
            overlap: ov.pairing.len(),
            symbolic: ov.symbolic,
            verdict: worst,
            witness,
        });
    }
    let verdict = match overlaps.iter().map(|o| o.verdict.rank()).max().unwrap_or(0) {
        0 => Confluence::Confluent,
        1 => Confluence::Unknown,
        _ => Confluence::NotConfluent,
    };
    ConfluenceReport { overlaps, verdict, seed: config.seed }
}

impl fmt::Display for ConfluenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.overlaps {
            let v = match o.verdict {
                Joinability::Joinable => "joinable",
                Joinability::NotJoinable { .. } => "NOT JOINABLE",
                Joinability::Unknown(_) => "unknown",
            };
            writeln!(f, "CP {}~{} overlap={} → {v}", o.rules.0, o.rules.1, o.overlap)?;
        }
        let v = match self.verdict {
            Confluence::Confluent => "yes",
            Confluence::NotConfluent => "no",
            Confluence::Unknown => "unknown",
        };
        writeln!(f, "CONFLUENT: {v}")?;
        for o in &self.overlaps {
            let Some(cp) = &o.witness else { continue };
            let state = one_line(&cp.critical_state.answer());
            let at = if cp.assignment.is_empty() { String::new() } else { format!(" at {}", format_assignment(&cp.assignment)) };
            match &o.verdict {
                Joinability::NotJoinable { left, right } => writeln!(
                    f,
                    "WITNESS {}~{}: {state}{at} => {} | {}",
                    o.rules.0,
                    o.rules.1,
                    one_line(&left.answer()),
                    one_line(&right.answer())
                )?,
                Joinability::Unknown(why) => writeln!(f, "UNKNOWN {}~{}: {state}{at}: {why}", o.rules.0, o.rules.1)?,
                Joinability::Joinable => {}
            }
        }
        writeln!(f, "SEED: {}", self.seed)
    }
}

/// An answer as a single comma-separated line.
pub fn one_line(answer: &str) -> String {
    answer.lines().collect::<Vec<_>>().join(", ")
}
