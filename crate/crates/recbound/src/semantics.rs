//! Concrete semantics: a worst-case step counter and a small-step
//! interpreter.
//!
//! The worst-case time of a stack element is computed compositionally: the
//! cost of a call is one step plus the callee's cost plus the cost of the
//! continuation. Demonic branches take the maximum over both sides.
//! Valuations are integer vectors; results are exact. A revisit of a
//! pending (label, valuation) pair means some scheduler can loop forever,
//! so the result is infinite; a budget caps the number of expanded pairs.

use crate::cfg::{Cfg, Step};
use crate::frontend::{FunId, Label, NormExpr, Program, VarId};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunTime {
    Finite(u64),
    Infinite,
    /// The evaluation budget was exhausted before an answer was reached.
    Unknown(u64),
}

impl RunTime {
    fn add(self, other: RunTime) -> RunTime {
        use RunTime::*;
        match (self, other) {
            (Infinite, _) | (_, Infinite) => Infinite,
            (Unknown(b), _) | (_, Unknown(b)) => Unknown(b),
            (Finite(a), Finite(b)) => Finite(a + b),
        }
    }

    fn max(self, other: RunTime) -> RunTime {
        use RunTime::*;
        match (self, other) {
            (Infinite, _) | (_, Infinite) => Infinite,
            (Unknown(b), _) | (_, Unknown(b)) => Unknown(b),
            (Finite(a), Finite(b)) => Finite(a.max(b)),
        }
    }

    fn inc(self) -> RunTime {
        self.add(RunTime::Finite(1))
    }
}

impl std::fmt::Display for RunTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunTime::Finite(n) => write!(f, "{}", n),
            RunTime::Infinite => write!(f, "INF"),
            RunTime::Unknown(b) => write!(f, "UNKNOWN({})", b),
        }
    }
}

/// Exact floor division on machine integers.
pub fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    let r = a % b;
    if r != 0 && ((r < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

/// Positional layout of every function's variables, for integer valuations.
pub struct VarLayout {
    pos: Vec<usize>,
}

impl VarLayout {
    pub fn new(program: &Program) -> VarLayout {
        let mut pos = vec![0usize; program.vars.len()];
        for f in &program.functions {
            for (i, v) in f.vars.iter().enumerate() {
                pos[v.0 as usize] = i;
            }
        }
        VarLayout { pos }
    }

    pub fn index(&self, v: VarId) -> usize {
        self.pos[v.0 as usize]
    }

    pub fn eval(&self, e: &NormExpr, vals: &[i64]) -> BigRational {
        e.eval(|v| BigRational::from_integer(BigInt::from(vals[self.index(v)])))
    }

    pub fn eval_int(&self, e: &NormExpr, vals: &[i64]) -> i64 {
        let q = self.eval(e, vals);
        debug_assert!(q.is_integer(), "integer program expression");
        let s = q.to_integer().to_string();
        s.parse().expect("value fits an i64")
    }
}

enum Entry {
    InProgress,
    Done(RunTime),
}

type Key = (Label, Vec<i64>);

/// Worst-case number of execution steps starting from function `fun` at its
/// entry with the given valuation (ordered like `fun.vars`).
pub fn worst_case_time(
    program: &Program,
    cfg: &Cfg,
    fun: FunId,
    vals: &[i64],
    budget: u64,
) -> RunTime {
    let layout = VarLayout::new(program);
    let entry = cfg.fun_cfg(fun).entry;
    let mut memo: HashMap<Key, Entry> = HashMap::new();
    let mut visits: u64 = 0;

    enum Task {
        Enter(Key),
        Exit(Key),
    }

    let children_of = |key: &Key| -> (Vec<Key>, NodeOp) {
        let (label, vals) = key;
        let fc = cfg.fun_cfg(cfg.label_fun[label]);
        let out = fc.outgoing(*label);
        match &out[..] {
            [t] => match &t.step {
                Step::Update(upd) => {
                    let mut next = vals.clone();
                    if let Some((x, e)) = upd {
                        next[layout.index(*x)] = layout.eval_int(e, vals);
                    }
                    if t.to == fc.terminal {
                        (vec![], NodeOp::Const)
                    } else {
                        (vec![(t.to, next)], NodeOp::Sum)
                    }
                }
                Step::Call { callee, passing } => {
                    let callee_cfg = cfg.fun_cfg(*callee);
                    let callee_decl = program.function(*callee);
                    let mut cvals = vec![0i64; callee_decl.vars.len()];
                    for (v, e) in passing {
                        cvals[layout.index(*v)] = layout.eval_int(e, vals);
                    }
                    let mut kids = vec![(callee_cfg.entry, cvals)];
                    if t.to != fc.terminal {
                        kids.push((t.to, vals.clone()));
                    }
                    (kids, NodeOp::Sum)
                }
                other => panic!("single transition with step {:?}", other),
            },
            [a, b] => match (&a.step, &b.step) {
                (Step::Guard { dnf, .. }, Step::Guard { .. }) => {
                    let holds = dnf
                        .eval(|v| BigRational::from_integer(BigInt::from(vals[layout.index(v)])));
                    let t = if holds { a } else { b };
                    if t.to == fc.terminal {
                        (vec![], NodeOp::Const)
                    } else {
                        (vec![(t.to, vals.clone())], NodeOp::Sum)
                    }
                }
                (Step::Star, Step::Star) => {
                    let mut kids = Vec::new();
                    for t in [a, b] {
                        if t.to != fc.terminal {
                            kids.push((t.to, vals.clone()));
                        }
                    }
                    (kids, NodeOp::Max)
                }
                other => panic!("unexpected transition pair {:?}", other),
            },
            other => panic!("label with {} outgoing transitions", other.len()),
        }
    };

    let root: Key = (entry, vals.to_vec());
    let mut stack = vec![Task::Enter(root.clone())];
    while let Some(task) = stack.pop() {
        match task {
            Task::Enter(key) => {
                match memo.get(&key) {
                    Some(_) => continue,
                    None => {}
                }
                visits += 1;
                if visits > budget {
                    memo.insert(key, Entry::Done(RunTime::Unknown(budget)));
                    continue;
                }
                memo.insert(key.clone(), Entry::InProgress);
                let (kids, _) = children_of(&key);
                stack.push(Task::Exit(key));
                for k in kids.into_iter().rev() {
                    stack.push(Task::Enter(k));
                }
            }
            Task::Exit(key) => {
                let (kids, op) = children_of(&key);
                let vals_of = |k: &Key| match memo.get(k) {
                    Some(Entry::Done(v)) => *v,
                    // A pending child is an ancestor: the pair is on a cycle.
                    Some(Entry::InProgress) => RunTime::Infinite,
                    None => unreachable!("child evaluated before parent exit"),
                };
                let value = match op {
                    NodeOp::Const => RunTime::Finite(1),
                    NodeOp::Sum => kids
                        .iter()
                        .map(vals_of)
                        .fold(RunTime::Finite(0), RunTime::add)
                        .inc(),
                    NodeOp::Max => kids
                        .iter()
                        .map(vals_of)
                        .fold(RunTime::Finite(0), RunTime::max)
                        .inc(),
                };
                memo.insert(key, Entry::Done(value));
            }
        }
    }
    match memo.get(&root) {
        Some(Entry::Done(v)) => *v,
        _ => unreachable!("root evaluated"),
    }
}

enum NodeOp {
    /// Terminal successor only: one step and done.
    Const,
    Sum,
    Max,
}

// ---------------------------------------------------------------------------
// Small-step interpreter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct StackElem {
    pub fun: FunId,
    pub label: Label,
    pub vals: Vec<i64>,
}

/// A configuration: the call stack, top element last.
pub type Config = Vec<StackElem>;

/// Performs one step. For demonic labels the scheduler picks the transition
/// index (0 or 1). Returns false when the configuration was already empty.
pub fn step(
    program: &Program,
    cfg: &Cfg,
    layout: &VarLayout,
    config: &mut Config,
    scheduler: &mut dyn FnMut(&Config) -> usize,
) -> bool {
    let top = match config.last() {
        Some(t) => t.clone(),
        None => return false,
    };
    let fc = cfg.fun_cfg(top.fun);
    let out = fc.outgoing(top.label);
    let advance = |config: &mut Config, to: Label, vals: Vec<i64>| {
        config.pop();
        if to != fc.terminal {
            config.push(StackElem { fun: top.fun, label: to, vals });
        }
    };
    match &out[..] {
        [t] => match &t.step {
            Step::Update(upd) => {
                let mut next = top.vals.clone();
                if let Some((x, e)) = upd {
                    next[layout.index(*x)] = layout.eval_int(e, &top.vals);
                }
                advance(config, t.to, next);
            }
            Step::Call { callee, passing } => {
                let callee_decl = program.function(*callee);
                let mut cvals = vec![0i64; callee_decl.vars.len()];
                for (v, e) in passing {
                    cvals[layout.index(*v)] = layout.eval_int(e, &top.vals);
                }
                let centry = cfg.fun_cfg(*callee).entry;
                advance(config, t.to, top.vals.clone());
                config.push(StackElem { fun: *callee, label: centry, vals: cvals });
            }
            other => panic!("single transition with step {:?}", other),
        },
        [a, b] => match (&a.step, &b.step) {
            (Step::Guard { dnf, .. }, Step::Guard { .. }) => {
                let holds = dnf.eval(|v| {
                    BigRational::from_integer(BigInt::from(top.vals[layout.index(v)]))
                });
                let t = if holds { a } else { b };
                advance(config, t.to, top.vals.clone());
            }
            (Step::Star, Step::Star) => {
                let choice = scheduler(config).min(1);
                let t = if choice == 0 { a } else { b };
                advance(config, t.to, top.vals.clone());
            }
            other => panic!("unexpected transition pair {:?}", other),
        },
        other => panic!("label with {} outgoing transitions", other.len()),
    }
    true
}

/// Runs to termination under a deterministic "always first" scheduler;
/// returns the step count, or None if `max_steps` is exceeded.
pub fn run_length_first_scheduler(
    program: &Program,
    cfg: &Cfg,
    fun: FunId,
    vals: &[i64],
    max_steps: u64,
) -> Option<u64> {
    let layout = VarLayout::new(program);
    let mut config = vec![StackElem {
        fun,
        label: cfg.fun_cfg(fun).entry,
        vals: vals.to_vec(),
    }];
    let mut steps = 0;
    let mut pick = |_: &Config| 0usize;
    while !config.is_empty() {
        if steps >= max_steps {
            return None;
        }
        step(program, cfg, &layout, &mut config, &mut pick);
        steps += 1;
    }
    Some(steps)
}

/// Maximum run length over all demonic schedulers, by exhaustive search.
/// Returns None if any run exceeds `max_steps`.
pub fn max_run_length_exhaustive(
    program: &Program,
    cfg: &Cfg,
    fun: FunId,
    vals: &[i64],
    max_steps: u64,
) -> Option<u64> {
    let layout = VarLayout::new(program);
    let init = vec![StackElem {
        fun,
        label: cfg.fun_cfg(fun).entry,
        vals: vals.to_vec(),
    }];
    // Depth-first search over pending (configuration, steps so far) states,
    // branching at demonic labels.
    let mut best = 0u64;
    let mut work: Vec<(Config, u64)> = vec![(init, 0)];
    while let Some((mut config, mut steps)) = work.pop() {
        loop {
            if config.is_empty() {
                best = best.max(steps);
                break;
            }
            if steps >= max_steps {
                return None;
            }
            let top = config.last().unwrap();
            let fc = cfg.fun_cfg(top.fun);
            let out = fc.outgoing(top.label);
            let demonic = out.len() == 2 && matches!(out[0].step, Step::Star);
            if demonic {
                let mut alt = config.clone();
                let mut pick1 = |_: &Config| 1usize;
                step(program, cfg, &layout, &mut alt, &mut pick1);
                work.push((alt, steps + 1));
            }
            let mut pick0 = |_: &Config| 0usize;
            step(program, cfg, &layout, &mut config, &mut pick0);
            steps += 1;
        }
    }
    Some(best)
}

/// Outcome of a random run used for invariant sampling.
pub struct SampledRun {
    pub steps: u64,
    pub terminated: bool,
    /// First violation: (label, valuation) of a stack element that fails
    /// the claimed invariant at that label.
    pub violation: Option<(Label, Vec<i64>)>,
}

/// Runs with a seeded random scheduler, checking every stack element of
/// every visited configuration against `claims` (label to DNF map).
pub fn run_checked(
    program: &Program,
    cfg: &Cfg,
    fun: FunId,
    vals: &[i64],
    claims: &BTreeMap<Label, crate::frontend::Dnf>,
    seed: u64,
    max_steps: u64,
) -> SampledRun {
    let layout = VarLayout::new(program);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = vec![StackElem {
        fun,
        label: cfg.fun_cfg(fun).entry,
        vals: vals.to_vec(),
    }];
    let mut steps = 0u64;
    let check = |config: &Config| -> Option<(Label, Vec<i64>)> {
        for elem in config {
            if let Some(dnf) = claims.get(&elem.label) {
                let ok = dnf.eval(|v| {
                    BigRational::from_integer(BigInt::from(elem.vals[layout.index(v)]))
                });
                if !ok {
                    return Some((elem.label, elem.vals.clone()));
                }
            }
        }
        None
    };
    if let Some(v) = check(&config) {
        return SampledRun { steps, terminated: false, violation: Some(v) };
    }
    while !config.is_empty() && steps < max_steps {
        let mut pick = |_: &Config| rng.gen_range(0..2usize);
        step(program, cfg, &layout, &mut config, &mut pick);
        steps += 1;
        if let Some(v) = check(&config) {
            return SampledRun { steps, terminated: false, violation: Some(v) };
        }
    }
    SampledRun { steps, terminated: config.is_empty(), violation: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build;
    use crate::frontend::parse;

    fn setup(src: &str) -> (Program, Cfg) {
        let p = parse(src).unwrap();
        let cfg = build(&p);
        (p, cfg)
    }

    #[test]
    fn halving_recursion_time_matches_closed_form() {
        let (p, cfg) = setup(include_str!("../corpus/binary_search.rec"));
        for n in 1i64..=64 {
            let expected = 2 * ((63 - (n as u64).leading_zeros() as u64) + 1);
            let got = worst_case_time(&p, &cfg, FunId(0), &[n], DEFAULT_BUDGET);
            assert_eq!(got, RunTime::Finite(expected), "n = {}", n);
        }
    }

    #[test]
    fn walk_time_matches_closed_form() {
        let (p, cfg) = setup(include_str!("../corpus/randwalk.rec"));
        for i in -5i64..=10 {
            for j in -5i64..=10 {
                let s = 2 * i + 3 * j;
                let expected = if s >= 101 { 2 } else { (4 * (101 - s) + 2) as u64 };
                let got = worst_case_time(&p, &cfg, FunId(0), &[i, j], DEFAULT_BUDGET);
                assert_eq!(got, RunTime::Finite(expected), "i = {}, j = {}", i, j);
            }
        }
    }

    #[test]
    fn nested_loop_time_matches_closed_form() {
        let (p, cfg) = setup(include_str!("../corpus/nestedloop.rec"));
        for m in 0i64..=6 {
            for n in 0i64..=6 {
                let expected = ((m + 1 - 1) * (4 * n + 9) + 2) as u64;
                let got = worst_case_time(&p, &cfg, FunId(0), &[1, 0, m, n], DEFAULT_BUDGET);
                assert_eq!(got, RunTime::Finite(expected), "m = {}, n = {}", m, n);
            }
        }
    }

    #[test]
    fn mergesort_small_instances() {
        let (p, cfg) = setup(include_str!("../corpus/mergesort.rec"));
        // worked out by hand: the base case takes 2 steps, (i, j) = (1, 2)
        // takes 31
        assert_eq!(
            worst_case_time(&p, &cfg, FunId(0), &[1, 1, 0], DEFAULT_BUDGET),
            RunTime::Finite(2)
        );
        assert_eq!(
            worst_case_time(&p, &cfg, FunId(0), &[1, 2, 0], DEFAULT_BUDGET),
            RunTime::Finite(31)
        );
    }

    #[test]
    fn worst_case_agrees_with_exhaustive_schedulers() {
        let (p, cfg) = setup(include_str!("../corpus/mergesort.rec"));
        for j in 1i64..=4 {
            let compositional = worst_case_time(&p, &cfg, FunId(0), &[1, j, 0], DEFAULT_BUDGET);
            let exhaustive =
                max_run_length_exhaustive(&p, &cfg, FunId(0), &[1, j, 0], 100_000).unwrap();
            assert_eq!(compositional, RunTime::Finite(exhaustive), "j = {}", j);
        }
    }

    #[test]
    fn deterministic_run_matches_worst_case_when_no_stars() {
        let (p, cfg) = setup(include_str!("../corpus/binary_search.rec"));
        for n in 1i64..=32 {
            let t = worst_case_time(&p, &cfg, FunId(0), &[n], DEFAULT_BUDGET);
            let r = run_length_first_scheduler(&p, &cfg, FunId(0), &[n], 100_000).unwrap();
            assert_eq!(t, RunTime::Finite(r));
        }
    }

    #[test]
    fn nonterminating_program_detected() {
        let (p, cfg) = setup("loop(x) { while x >= 0 do skip od }");
        assert_eq!(
            worst_case_time(&p, &cfg, FunId(0), &[0], DEFAULT_BUDGET),
            RunTime::Infinite
        );
        // terminating side still finite
        assert_eq!(
            worst_case_time(&p, &cfg, FunId(0), &[-1], DEFAULT_BUDGET),
            RunTime::Finite(1)
        );
    }

    #[test]
    fn budget_exhaustion_reports_unknown() {
        let (p, cfg) = setup(include_str!("../corpus/randwalk.rec"));
        let got = worst_case_time(&p, &cfg, FunId(0), &[-1000, 0], 10);
        assert_eq!(got, RunTime::Unknown(10));
    }

    #[test]
    fn invariant_sampling_accepts_source_annotations() {
        let (p, cfg) = setup(include_str!("../corpus/mergesort.rec"));
        let claims = cfg.annotations.clone();
        for seed in 0..50 {
            let i = (seed % 5) as i64;
            let j = i + (seed % 7) as i64;
            let run = run_checked(&p, &cfg, FunId(0), &[i, j, 0], &claims, seed, 10_000);
            assert!(run.violation.is_none(), "violation at seed {}: {:?}", seed, run.violation);
            assert!(run.terminated);
        }
    }

    #[test]
    fn invariant_sampling_catches_bad_claim() {
        let (p, cfg) = setup(include_str!("../corpus/binary_search.rec"));
        // claim n >= 3 at the entry label, violated once recursion reaches 2
        let n = p.resolve_var(FunId(0), "n").unwrap();
        let atom = NormExpr::var(n).add_const(&BigRational::from_integer(BigInt::from(-3)));
        let mut claims = BTreeMap::new();
        claims.insert(Label(1), crate::frontend::Dnf::literal(atom));
        let run = run_checked(&p, &cfg, FunId(0), &[8], &claims, 7, 10_000);
        assert!(run.violation.is_some());
    }

    #[test]
    fn floor_div_is_floor() {
        assert_eq!(floor_div(7, 2), 3);
        assert_eq!(floor_div(-7, 2), -4);
        assert_eq!(floor_div(7, -2), -4);
        assert_eq!(floor_div(-7, -2), 3);
        assert_eq!(floor_div(6, 3), 2);
        assert_eq!(floor_div(-6, 3), -2);
    }
}
