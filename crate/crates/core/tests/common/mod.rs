//! Brute-force references shared by the integration test targets. None of
//! these reuse the library's split, automaton or solver code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use atldk::arena::{Arena, Coalition, Run, StateId, Strategy};
use atldk::formula::Formula;
use atldk::random::{random_arena, RandomArenaConfig};

pub fn alicebob() -> Arc<Arena> {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/arenas/alicebob.json"))
            .unwrap();
    Arc::new(Arena::from_json(&text).unwrap())
}

pub fn batch(count: u64, seed: u64, cfg: &RandomArenaConfig) -> Vec<Arc<Arena>> {
    (0..count)
        .map(|i| {
            Arc::new(random_arena(
                seed.wrapping_mul(1_000_003).wrapping_add(i),
                cfg,
            ))
        })
        .collect()
}

/// Every coalition over the arena's agents, smallest first.
pub fn coalitions(g: &Arena) -> Vec<Coalition> {
    let n = g.agents().len();
    (0..1usize << n)
        .map(|m| Coalition::new((0..n).filter(|a| m & (1 << a) != 0)))
        .collect()
}

/// Per-agent action indices of a joint action, decoded by mixed radix.
pub fn decode(g: &Arena, mut c: usize) -> Vec<usize> {
    let mut out = vec![0; g.agents().len()];
    for (slot, agent) in out.iter_mut().zip(g.agents()).rev() {
        let k = agent.actions.len();
        *slot = c % k;
        c /= k;
    }
    out
}

fn restrict(g: &Arena, a: &Coalition, c: usize) -> Vec<usize> {
    let joint = decode(g, c);
    a.members().iter().map(|&m| joint[m]).collect()
}

fn observed(g: &Arena, a: &Coalition, q: StateId) -> Vec<String> {
    let mut props = BTreeSet::new();
    for &m in a.members() {
        for &p in &g.agent(m).observes {
            if g.has_label(q, p) {
                props.insert(g.prop_name(p).to_string());
            }
        }
    }
    props.into_iter().collect()
}

/// All initialized runs with exactly `len` transitions.
pub fn runs(g: &Arena, len: usize) -> Vec<Run> {
    let mut frontier: Vec<Run> = g.initial().iter().map(|&q| Run::empty(q)).collect();
    for _ in 0..len {
        let mut next = Vec::new();
        for r in &frontier {
            for c in 0..g.num_joint_actions() {
                for &t in g.successors(r.last(), c) {
                    let mut r2 = r.clone();
                    r2.push(c, t);
                    next.push(r2);
                }
            }
        }
        frontier = next;
    }
    frontier
}

/// Key identifying the `~_A` class of a run: coalition actions and
/// observations, position by position.
pub fn history_key(g: &Arena, a: &Coalition, r: &Run) -> (Vec<Vec<usize>>, Vec<Vec<String>>) {
    let acts = (0..r.len()).map(|i| restrict(g, a, r.action(i))).collect();
    let obs = (0..=r.len()).map(|i| observed(g, a, r.state(i))).collect();
    (acts, obs)
}

/// Runs of length `len` grouped into `~_A` classes.
pub fn run_classes(g: &Arena, a: &Coalition, len: usize) -> Vec<Vec<Run>> {
    let mut classes: BTreeMap<_, Vec<Run>> = BTreeMap::new();
    for r in runs(g, len) {
        classes.entry(history_key(g, a, &r)).or_default().push(r);
    }
    classes.into_values().collect()
}

/// Every kset reachable within `len` steps, by run enumeration.
pub fn ksets_by_runs(g: &Arena, a: &Coalition, len: usize) -> BTreeSet<Vec<StateId>> {
    let mut out = BTreeSet::new();
    for l in 0..=len {
        for class in run_classes(g, a, l) {
            let last: BTreeSet<StateId> = class.iter().map(|r| r.last()).collect();
            out.insert(last.into_iter().collect());
        }
    }
    out
}

/// Truth of a propositional formula at each state.
pub fn eval_boolean(g: &Arena, f: &Formula) -> Vec<bool> {
    (0..g.num_states()).map(|q| eval_at(g, f, q)).collect()
}

fn eval_at(g: &Arena, f: &Formula, q: StateId) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(p) => g.has_label(q, g.prop_id(p).unwrap()),
        Formula::Not(a) => !eval_at(g, a, q),
        Formula::And(a, b) => eval_at(g, a, q) && eval_at(g, b, q),
        Formula::Or(a, b) => eval_at(g, a, q) || eval_at(g, b, q),
        Formula::Implies(a, b) => !eval_at(g, a, q) || eval_at(g, b, q),
        other => panic!("not propositional: {other}"),
    }
}

/// Complete-information controllable predecessor: some choice of the
/// coalition forces every successor into `z`.
pub fn ci_pre(g: &Arena, a: &Coalition, z: &[bool]) -> Vec<bool> {
    (0..g.num_states())
        .map(|q| {
            let mut by_choice: BTreeMap<Vec<usize>, bool> = BTreeMap::new();
            for c in 0..g.num_joint_actions() {
                let ok = g.successors(q, c).iter().all(|&t| z[t]);
                let e = by_choice.entry(restrict(g, a, c)).or_insert(true);
                *e &= ok;
            }
            by_choice.values().any(|&b| b)
        })
        .collect()
}

pub fn ci_next(g: &Arena, a: &Coalition, p: &[bool]) -> Vec<bool> {
    ci_pre(g, a, p)
}

fn ci_fix(g: &Arena, a: &Coalition, p1: &[bool], p2: &[bool], start: bool) -> Vec<bool> {
    let mut z = vec![start; g.num_states()];
    loop {
        let pre = ci_pre(g, a, &z);
        let next: Vec<bool> = (0..z.len()).map(|q| p2[q] || (p1[q] && pre[q])).collect();
        if next == z {
            return z;
        }
        z = next;
    }
}

pub fn ci_until(g: &Arena, a: &Coalition, p1: &[bool], p2: &[bool]) -> Vec<bool> {
    ci_fix(g, a, p1, p2, false)
}

pub fn ci_weak(g: &Arena, a: &Coalition, p1: &[bool], p2: &[bool]) -> Vec<bool> {
    ci_fix(g, a, p1, p2, true)
}

/// Plays `strategy` from every state of `start` against every environment
/// resolution for `horizon` steps. Runs sharing an observation history get
/// the same action, so they are tracked together.
pub fn replay_until(
    g: &Arena,
    strategy: &Strategy,
    start: &[StateId],
    p1: &dyn Fn(StateId) -> bool,
    p2: &dyn Fn(StateId) -> bool,
    horizon: usize,
) -> Result<(), String> {
    let a = &strategy.coalition;
    let view = g.view(a);
    let obs0 = view.obs(start[0]);
    assert!(start.iter().all(|&s| view.obs(s) == obs0));
    let mut stack = vec![(vec![obs0], start.to_vec())];
    while let Some((history, open)) = stack.pop() {
        let open: Vec<StateId> = open.into_iter().filter(|&q| !p2(q)).collect();
        if open.is_empty() {
            continue;
        }
        if let Some(&bad) = open.iter().find(|&&q| !p1(q)) {
            return Err(format!("state {} violates p1 before p2", g.state_name(bad)));
        }
        if history.len() > horizon {
            return Err(format!("p2 not reached within {horizon} steps"));
        }
        let choice = strategy.action_for(&history);
        let mut children: BTreeMap<Vec<usize>, BTreeSet<StateId>> = BTreeMap::new();
        for &q in &open {
            for c in 0..g.num_joint_actions() {
                if view.restrict(c) != choice {
                    continue;
                }
                for &t in g.successors(q, c) {
                    children.entry(view.obs(t)).or_default().insert(t);
                }
            }
        }
        for (z, set) in children {
            let mut h = history.clone();
            h.push(z);
            stack.push((h, set.into_iter().collect()));
        }
    }
    Ok(())
}
