//! Execution states: identified user constraints, the built-in store, the
//! propagation history and the goal's global variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::builtins::{is_builtin_term, BuiltinError, BuiltinStore};
use crate::terms::{eval_ground, Symbol, Term, Var};

pub type ConstraintId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalError {
    #[error(transparent)]
    Builtin(#[from] BuiltinError),
    #[error("`{0}` is not a constraint")]
    NotAConstraint(String),
}

/// Records that a rule fired on the given constraint ids (head order).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Token {
    pub rule: usize,
    pub ids: Vec<ConstraintId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdConstraint {
    pub id: ConstraintId,
    pub term: Term,
}

type Key = (Symbol, usize);

fn key_of(t: &Term) -> Option<Key> {
    match t {
        Term::Compound(name, args) => Some((name.clone(), args.len())),
        _ => None,
    }
}

/// A snapshot of a computation. Transitions clone and modify.
#[derive(Clone, Debug, Default)]
pub struct State {
    user: BTreeMap<ConstraintId, Term>,
    index: BTreeMap<Key, BTreeSet<ConstraintId>>,
    builtin: BuiltinStore,
    history: BTreeSet<Token>,
    globals: BTreeSet<Var>,
    next_id: ConstraintId,
    next_var: u32,
}

impl State {
    pub fn new() -> Self {
        State { next_id: 1, next_var: 1, ..Default::default() }
    }

    /// Fresh ids for user constraints, built-ins told in order, and the
    /// goal's variables recorded as globals.
    pub fn initial(goal: &[Term]) -> Result<State, GoalError> {
        State::new().add_constraints(goal)
    }

    /// Add a goal to an existing state (the online property).
    pub fn add_constraints(&self, goal: &[Term]) -> Result<State, GoalError> {
        let mut s = self.clone();
        s.add_goal_mut(goal)?;
        Ok(s)
    }

    pub(crate) fn add_goal_mut(&mut self, goal: &[Term]) -> Result<Vec<ConstraintId>, GoalError> {
        let mut added = Vec::new();
        for c in goal {
            self.declare_goal_vars(c);
            if self.is_failed() {
                break;
            }
            if is_builtin_term(c) {
                self.tell(c)?;
            } else if key_of(c).is_some() {
                let t = eval_ground(&self.builtin.normalize(c)).map_err(BuiltinError::from)?;
                added.push(self.insert(t));
            } else {
                return Err(GoalError::NotAConstraint(c.to_string()));
            }
        }
        Ok(added)
    }

    pub(crate) fn declare_goal_vars(&mut self, c: &Term) {
        for v in c.vars() {
            self.next_var = self.next_var.max(v.index + 1);
            if !v.name.starts_with('_') {
                self.globals.insert(v);
            }
        }
    }

    /// Make sure fresh variables never collide with variables in `t`.
    pub(crate) fn reserve_vars(&mut self, t: &Term) {
        self.next_var = self.next_var.max(t.max_var_index() + 1);
    }

    pub fn is_failed(&self) -> bool {
        !self.builtin.consistent()
    }

    pub fn builtin(&self) -> &BuiltinStore {
        &self.builtin
    }

    pub fn history(&self) -> &BTreeSet<Token> {
        &self.history
    }

    pub fn globals(&self) -> &BTreeSet<Var> {
        &self.globals
    }

    pub fn set_globals(&mut self, globals: BTreeSet<Var>) {
        self.globals = globals;
    }

    pub fn len(&self) -> usize {
        self.user.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user.is_empty()
    }

    pub fn get(&self, id: ConstraintId) -> Option<&Term> {
        self.user.get(&id)
    }

    pub fn contains(&self, id: ConstraintId) -> bool {
        self.user.contains_key(&id)
    }

    /// Live user constraints in id order.
    pub fn constraints(&self) -> impl Iterator<Item = IdConstraint> + '_ {
        self.user.iter().map(|(&id, t)| IdConstraint { id, term: t.clone() })
    }

    pub fn ids(&self) -> impl Iterator<Item = ConstraintId> + '_ {
        self.user.keys().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.user.values()
    }

    /// Ids of live constraints with the given symbol and arity.
    pub fn ids_for(&self, name: &str, arity: usize) -> Vec<ConstraintId> {
        self.index
            .get(&(Symbol::from(name), arity))
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    pub fn next_id(&self) -> ConstraintId {
        self.next_id
    }

    pub(crate) fn insert(&mut self, t: Term) -> ConstraintId {
        let id = self.next_id;
        self.next_id += 1;
        self.reserve_vars(&t);
        if let Some(k) = key_of(&t) {
            self.index.entry(k).or_default().insert(id);
        }
        self.user.insert(id, t);
        id
    }

    /// Put a constraint back under its original id.
    pub(crate) fn reinsert(&mut self, id: ConstraintId, t: Term) {
        let t = self.builtin.normalize(&t);
        self.next_id = self.next_id.max(id + 1);
        if let Some(k) = key_of(&t) {
            self.index.entry(k).or_default().insert(id);
        }
        self.user.insert(id, t);
    }

    /// Remove every user constraint, in id order.
    pub(crate) fn take_user(&mut self) -> Vec<(ConstraintId, Term)> {
        self.index.clear();
        std::mem::take(&mut self.user).into_iter().collect()
    }

    pub(crate) fn remove(&mut self, id: ConstraintId) -> Option<Term> {
        let t = self.user.remove(&id)?;
        if let Some(k) = key_of(&t) {
            if let Some(set) = self.index.get_mut(&k) {
                set.remove(&id);
                if set.is_empty() {
                    self.index.remove(&k);
                }
            }
        }
        Some(t)
    }

    pub(crate) fn fresh_var(&mut self, name: &Symbol) -> Var {
        let v = Var::with_index(name.clone(), self.next_var);
        self.next_var += 1;
        v
    }

    /// Tell a built-in. Returns the ids of stored constraints whose terms
    /// changed as a result (candidates for reactivation).
    pub(crate) fn tell(&mut self, c: &Term) -> Result<Vec<ConstraintId>, BuiltinError> {
        let changed = self.builtin.tell_mut(c)?;
        if !changed || self.is_failed() {
            return Ok(Vec::new());
        }
        let mut woken = Vec::new();
        for (id, t) in self.user.iter_mut() {
            let n = self.builtin.normalize(t);
            if &n != t {
                *t = n;
                woken.push(*id);
            }
        }
        Ok(woken)
    }

    pub(crate) fn record(&mut self, token: Token) {
        self.history.insert(token);
    }

    pub fn has_token(&self, token: &Token) -> bool {
        self.history.contains(token)
    }

    /// Golden format: user constraints sorted by (symbol, arity, id), then
    /// one `Var = Term` line per binding.
    pub fn canonical(&self) -> String {
        if self.is_failed() {
            return "failed\n".to_string();
        }
        let mut out = String::new();
        for (id, t) in self.sorted_user() {
            let _ = writeln!(out, "{t} #{id}");
        }
        for (v, t) in self.builtin.bindings().iter() {
            let _ = writeln!(out, "{v} = {t}");
        }
        out
    }

    fn sorted_user(&self) -> Vec<(ConstraintId, &Term)> {
        let mut v: Vec<_> = self.user.iter().map(|(id, t)| (*id, t)).collect();
        v.sort_by(|a, b| {
            let ka = a.1.functor().unwrap_or(("", 0));
            let kb = b.1.functor().unwrap_or(("", 0));
            ka.cmp(&kb).then(a.0.cmp(&b.0))
        });
        v
    }

    /// Answer in constraint-logic-programming style: bindings of the goal
    /// variables, then the remaining user constraints.
    pub fn answer(&self) -> String {
        if self.is_failed() {
            return "false\n".to_string();
        }
        let view = self.view();
        let mut lines = Vec::new();
        let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
        for (g, value) in &view.globals {
            match value {
                Term::Var(rep) => classes.entry(rep.clone()).or_default().push(g.clone()),
                other => lines.push(format!("{g} = {other}")),
            }
        }
        let mut chains = Vec::new();
        for (rep, mut members) in classes {
            if !members.contains(&rep) {
                members.push(rep);
            }
            members.sort();
            members.dedup();
            for pair in members.windows(2) {
                chains.push(format!("{} = {}", pair[0], pair[1]));
            }
        }
        chains.extend(lines);
        // Answers list constraints by symbol, then by term, so that equal
        // stores print identically whatever their derivation.
        let mut users: Vec<(ConstraintId, Term)> = view.user;
        users.sort_by(|a, b| {
            let ka = a.1.functor().unwrap_or(("", 0));
            let kb = b.1.functor().unwrap_or(("", 0));
            ka.cmp(&kb).then_with(|| a.1.cmp(&b.1)).then(a.0.cmp(&b.0))
        });
        chains.extend(users.into_iter().map(|(_, t)| t.to_string()));
        if chains.is_empty() {
            return "true\n".to_string();
        }
        chains.join("\n") + "\n"
    }

    /// Alias-canonical view: every class of variables equated by the
    /// bindings is collapsed onto its smallest global (or its unbound
    /// representative), and built-ins are projected onto the globals.
    pub(crate) fn view(&self) -> View {
        let b = self.builtin.bindings();
        let mut classes: BTreeMap<Var, Vec<Var>> = BTreeMap::new();
        for (v, t) in b.iter() {
            if let Term::Var(w) = t {
                classes.entry(w.clone()).or_default().push(v.clone());
            }
        }
        let mut kappa: BTreeMap<Var, Var> = BTreeMap::new();
        for (w, members) in classes {
            let rep = members
                .iter()
                .chain(std::iter::once(&w))
                .filter(|m| self.globals.contains(*m))
                .min()
                .cloned()
                .unwrap_or_else(|| w.clone());
            for m in members.into_iter().chain(std::iter::once(w)) {
                if m != rep {
                    kappa.insert(m, rep.clone());
                }
            }
        }
        let collapse = |t: &Term| t.map_vars(&mut |v| Term::Var(kappa.get(v).cloned().unwrap_or_else(|| v.clone())));
        let globals = self
            .globals
            .iter()
            .map(|g| (g.clone(), collapse(&self.builtin.normalize(&Term::Var(g.clone())))))
            .collect();
        let user = self.user.iter().map(|(id, t)| (*id, collapse(t))).collect();
        View { globals, user }
    }
}

pub(crate) struct View {
    pub globals: BTreeMap<Var, Term>,
    pub user: Vec<(ConstraintId, Term)>,
}

/// State equivalence: failed states are all equivalent; otherwise the user
/// multisets and the built-ins projected onto the global variables must be
/// equal up to a renaming of the non-global variables. Multiplicities count.
/// Propagation history is ignored.
pub fn state_equiv(a: &State, b: &State) -> bool {
    equiv(a, b, false)
}

/// Like [`state_equiv`], but the live part of the propagation history must
/// also correspond under the constraint matching. Used to deduplicate states
/// during exhaustive search, where history affects the future.
pub fn state_equiv_with_history(a: &State, b: &State) -> bool {
    equiv(a, b, true)
}

fn equiv(a: &State, b: &State, with_history: bool) -> bool {
    match (a.is_failed(), b.is_failed()) {
        (true, true) => return true,
        (true, false) | (false, true) => return false,
        _ => {}
    }
    if a.user.len() != b.user.len() {
        return false;
    }
    let mut ka: Vec<_> = a.user.values().map(key_of).collect();
    let mut kb: Vec<_> = b.user.values().map(key_of).collect();
    ka.sort();
    kb.sort();
    if ka != kb {
        return false;
    }
    let va = a.view();
    let vb = b.view();
    let globals: BTreeSet<Var> = a.globals.union(&b.globals).cloned().collect();
    let mut ren = Renaming::default();
    for g in &globals {
        let ta = va.globals.get(g).cloned().unwrap_or_else(|| Term::Var(g.clone()));
        let tb = vb.globals.get(g).cloned().unwrap_or_else(|| Term::Var(g.clone()));
        if !ren.variant(&ta, &tb, &globals) {
            return false;
        }
    }
    let live_tokens = |s: &State| -> BTreeSet<Token> {
        s.history.iter().filter(|t| t.ids.iter().all(|id| s.user.contains_key(id))).cloned().collect()
    };
    let (ta, tb) = if with_history { (live_tokens(a), live_tokens(b)) } else { Default::default() };
    if ta.len() != tb.len() {
        return false;
    }
    let track_ids = !ta.is_empty();

    let mut left: Vec<(ConstraintId, Term)> = va.user;
    let mut right: Vec<(ConstraintId, Term)> = vb.user;
    if !track_ids {
        // Ground constraints must agree as multisets; only the rest needs search.
        let mut ga: Vec<Term> = left.iter().filter(|(_, t)| t.is_ground()).map(|(_, t)| t.clone()).collect();
        let mut gb: Vec<Term> = right.iter().filter(|(_, t)| t.is_ground()).map(|(_, t)| t.clone()).collect();
        ga.sort();
        gb.sort();
        if ga != gb {
            return false;
        }
        left.retain(|(_, t)| !t.is_ground());
        right.retain(|(_, t)| !t.is_ground());
    }
    left.sort_by_key(|x| key_of(&x.1));
    let mut used = vec![false; right.len()];
    let mut idmap = BTreeMap::new();
    let ctx = SearchCtx { left: &left, right: &right, globals: &globals, tokens: (&ta, &tb), track_ids };
    ctx.search(0, &mut used, &mut ren, &mut idmap)
}

struct SearchCtx<'a> {
    left: &'a [(ConstraintId, Term)],
    right: &'a [(ConstraintId, Term)],
    globals: &'a BTreeSet<Var>,
    tokens: (&'a BTreeSet<Token>, &'a BTreeSet<Token>),
    track_ids: bool,
}

impl SearchCtx<'_> {
    fn search(
        &self,
        i: usize,
        used: &mut [bool],
        ren: &mut Renaming,
        idmap: &mut BTreeMap<ConstraintId, ConstraintId>,
    ) -> bool {
        if i == self.left.len() {
            if !self.track_ids {
                return true;
            }
            let mapped: BTreeSet<Token> = self
                .tokens
                .0
                .iter()
                .map(|t| Token { rule: t.rule, ids: t.ids.iter().map(|id| idmap[id]).collect() })
                .collect();
            return &mapped == self.tokens.1;
        }
        let (id, t) = &self.left[i];
        let key = key_of(t);
        for j in 0..self.right.len() {
            if used[j] || key_of(&self.right[j].1) != key {
                continue;
            }
            let mut attempt = ren.clone();
            if !attempt.variant(t, &self.right[j].1, self.globals) {
                continue;
            }
            used[j] = true;
            idmap.insert(*id, self.right[j].0);
            if self.search(i + 1, used, &mut attempt, idmap) {
                *ren = attempt;
                return true;
            }
            idmap.remove(id);
            used[j] = false;
        }
        false
    }
}

/// A partial bijection between the non-global variables of two states.
#[derive(Clone, Default)]
struct Renaming {
    fwd: BTreeMap<Var, Var>,
    bwd: BTreeMap<Var, Var>,
}

impl Renaming {
    fn variant(&mut self, a: &Term, b: &Term, globals: &BTreeSet<Var>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                if globals.contains(x) || globals.contains(y) {
                    return x == y;
                }
                match (self.fwd.get(x), self.bwd.get(y)) {
                    (Some(fx), Some(by)) => fx == y && by == x,
                    (None, None) => {
                        self.fwd.insert(x.clone(), y.clone());
                        self.bwd.insert(y.clone(), x.clone());
                        true
                    }
                    _ => false,
                }
            }
            (Term::Num(m), Term::Num(n)) => m == n,
            (Term::Compound(f, xs), Term::Compound(g, ys)) => {
                f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.variant(x, y, globals))
            }
            _ => false,
        }
    }
}

/// Bucket key for fast pre-filtering before an equivalence check: the sorted
/// user terms and global values with non-global variables erased.
pub fn shape_key(s: &State) -> String {
    if s.is_failed() {
        return "failed".into();
    }
    let view = s.view();
    let erase = |t: &Term| {
        t.map_vars(&mut |v| if s.globals.contains(v) { Term::Var(v.clone()) } else { Term::atom("_") })
    };
    let mut parts: Vec<String> = view.user.iter().map(|(_, t)| erase(t).to_string()).collect();
    parts.sort();
    for (g, t) in &view.globals {
        parts.push(format!("{g}={}", erase(t)));
    }
    parts.join(";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_goal, parse_term};

    fn g(s: &str) -> Vec<Term> {
        parse_goal(s).unwrap()
    }

    #[test]
    fn initial_state_examples() {
        let s = State::initial(&g("gcd(12), gcd(8)")).unwrap();
        let cs: Vec<_> = s.constraints().collect();
        assert_eq!(cs.len(), 2);
        assert_eq!((cs[0].id, cs[0].term.to_string()), (1, "gcd(12)".to_string()));
        assert_eq!((cs[1].id, cs[1].term.to_string()), (2, "gcd(8)".to_string()));

        let s = State::initial(&g("X = 3, p(X)")).unwrap();
        assert_eq!(s.get(1), Some(&parse_term("p(3)").unwrap()));
        assert_eq!(s.builtin().bindings().get(&Var::new("X")), Some(&Term::int(3)));

        assert!(State::initial(&g("1 = 2")).unwrap().is_failed());
    }

    #[test]
    fn add_constraints_examples() {
        let s = State::initial(&g("min(1)")).unwrap();
        assert_eq!(s.add_constraints(&[]).unwrap().canonical(), s.canonical());
        let s = State::initial(&g("X = 1, p(X)")).unwrap();
        assert!(s.add_constraints(&g("X = 2")).unwrap().is_failed());
        let s2 = s.add_constraints(&g("q(Y)")).unwrap();
        assert!(s2.globals().contains(&Var::new("Y")));
    }

    #[test]
    fn alias_normal_form_is_equivalent() {
        // X=Y ∧ c(Y,Y) versus Y=X ∧ c(X,X), both with X and Y global.
        let a = State::initial(&g("c(X,Y), X = Y")).unwrap();
        let b = State::initial(&g("c(X,Y), Y = X")).unwrap();
        assert!(state_equiv(&a, &b));
    }

    #[test]
    fn multiplicities_matter() {
        let a = State::initial(&g("X = Y, c(X,X)")).unwrap();
        let b = State::initial(&g("X = Y, c(X,X), c(X,X)")).unwrap();
        assert!(!state_equiv(&a, &b));
        assert!(state_equiv(&a, &a));
    }

    #[test]
    fn local_variables_are_renamable() {
        let mut a = State::initial(&g("p(A)")).unwrap();
        let mut b = State::initial(&g("p(A)")).unwrap();
        let la = a.fresh_var(&Symbol::from("L"));
        let lb = b.fresh_var(&Symbol::from("K"));
        a.insert(Term::compound("q", vec![Term::Var(la.clone()), Term::Var(la)]));
        b.insert(Term::compound("q", vec![Term::Var(lb.clone()), Term::Var(lb)]));
        assert!(state_equiv(&a, &b));
        // Globals are rigid.
        let c = State::initial(&g("p(B)")).unwrap();
        let d = State::initial(&g("p(A)")).unwrap();
        let mut cd = c.clone();
        cd.set_globals(d.globals().union(c.globals()).cloned().collect());
        assert!(!state_equiv(&cd, &d));
    }

    #[test]
    fn failed_states_are_equivalent() {
        let a = State::initial(&g("1 = 2")).unwrap();
        let b = State::initial(&g("p, a = b")).unwrap();
        assert!(state_equiv(&a, &b));
        assert!(!state_equiv(&a, &State::new()));
    }

    #[test]
    fn answer_prints_alias_chains() {
        let s = State::initial(&g("A = B, C = B")).unwrap();
        assert_eq!(s.answer(), "A = B\nB = C\n");
        let s = State::initial(&g("fib(10, M), M = 89")).unwrap();
        assert_eq!(s.answer(), "M = 89\nfib(10,89)\n");
    }
}
