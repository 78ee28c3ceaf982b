//! Goal tree automata for `<<A>>(p1 U p2)` and `<<A>>(p1 W p2)` over a hat
//! arena. A non-failure state `(R1, R2)` pairs the current kset `R2` with the
//! members `R1` whose histories have not yet discharged the obligation.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::arena::{ActionIdx, Arena, Coalition, CoalitionView, Observation, PropId, StateId};
use crate::epistemic_split::HatArena;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("unknown kset {0:?}")]
    UnknownKset(Vec<String>),
    #[error("unknown prop id {0}")]
    UnknownProp(PropId),
    #[error("coalition does not match the one the hat arena was built for")]
    CoalitionMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AutomatonState {
    Bot,
    Pair {
        pending: Vec<StateId>,
        kset: Vec<StateId>,
    },
}

impl AutomatonState {
    pub fn is_bot(&self) -> bool {
        matches!(self, AutomatonState::Bot)
    }

    /// True for `(empty, R)`: every history ending in `R` has discharged the goal.
    pub fn is_discharged(&self) -> bool {
        matches!(self, AutomatonState::Pair { pending, .. } if pending.is_empty())
    }

    pub fn kset(&self) -> Option<&[StateId]> {
        match self {
            AutomatonState::Bot => None,
            AutomatonState::Pair { kset, .. } => Some(kset),
        }
    }

    pub fn pending(&self) -> Option<&[StateId]> {
        match self {
            AutomatonState::Bot => None,
            AutomatonState::Pair { pending, .. } => Some(pending),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcceptanceKind {
    /// Every path must visit a discharged state.
    Until,
    /// Every path must avoid `Bot`.
    WeakUntil,
}

/// State 0 is always `Bot`.
pub const BOT: usize = 0;

#[derive(Debug, Clone)]
pub struct TreeAutomaton {
    states: Vec<AutomatonState>,
    // delta[s][ca] = sorted successor ids
    delta: Vec<Vec<Vec<usize>>>,
    initial: usize,
    kind: AcceptanceKind,
    goal: (PropId, PropId),
    kset: Vec<StateId>,
    coalition: Coalition,
}

impl TreeAutomaton {
    pub fn states(&self) -> &[AutomatonState] {
        &self.states
    }

    pub fn state(&self, s: usize) -> &AutomatonState {
        &self.states[s]
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.delta[BOT].len()
    }

    /// `delta-breve(s, ca)`.
    pub fn successors(&self, s: usize, ca: ActionIdx) -> &[usize] {
        &self.delta[s][ca]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn kind(&self) -> AcceptanceKind {
        self.kind
    }

    pub fn goal(&self) -> (PropId, PropId) {
        self.goal
    }

    pub fn kset(&self) -> &[StateId] {
        &self.kset
    }

    pub fn coalition(&self) -> &Coalition {
        &self.coalition
    }

    /// Same states and transitions, different acceptance.
    pub fn with_kind(&self, kind: AcceptanceKind) -> TreeAutomaton {
        TreeAutomaton {
            kind,
            ..self.clone()
        }
    }

    pub fn index_of(&self, state: &AutomatonState) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Graphviz rendering; hyperedges are drawn as a small point node per
    /// `(state, c_A)` fanning out to one successor per observation class.
    pub fn to_dot(&self, arena: &Arena, verdict: Option<bool>) -> String {
        let view = arena.view(&self.coalition);
        let set = |v: &[StateId]| {
            let names: Vec<&str> = v.iter().map(|&q| arena.state_name(q)).collect();
            format!("{{{}}}", names.join(","))
        };
        let mut out = String::new();
        let kind = match self.kind {
            AcceptanceKind::Until => "until: every path visits (∅,R)",
            AcceptanceKind::WeakUntil => "weak until: no path visits ⊥",
        };
        let result = match verdict {
            Some(true) => " NONEMPTY",
            Some(false) => " EMPTY",
            None => "",
        };
        writeln!(out, "digraph automaton {{").unwrap();
        writeln!(out, "  label={:?};", format!("{kind}{result}")).unwrap();
        writeln!(out, "  node [shape=box];").unwrap();
        for (i, s) in self.states.iter().enumerate() {
            let label = match s {
                AutomatonState::Bot => "⊥".to_string(),
                AutomatonState::Pair { pending, kset } => {
                    let first = if pending.is_empty() {
                        "∅".to_string()
                    } else {
                        set(pending)
                    };
                    format!("{first}, {}", set(kset))
                }
            };
            let style = if i == self.initial {
                ", penwidth=2"
            } else {
                ""
            };
            let peri = if s.is_discharged() {
                ", peripheries=2"
            } else {
                ""
            };
            writeln!(out, "  s{i} [label={label:?}{style}{peri}];").unwrap();
        }
        for (i, row) in self.delta.iter().enumerate() {
            if i == BOT {
                writeln!(out, "  s0 -> s0 [label=\"*\"];").unwrap();
                continue;
            }
            for (ca, succ) in row.iter().enumerate() {
                let label = view.format_action(ca);
                if let [only] = succ.as_slice() {
                    writeln!(out, "  s{i} -> s{only} [label={label:?}];").unwrap();
                } else {
                    writeln!(out, "  h{i}_{ca} [shape=point];").unwrap();
                    writeln!(
                        out,
                        "  s{i} -> h{i}_{ca} [label={label:?}, arrowhead=none];"
                    )
                    .unwrap();
                    for t in succ {
                        writeln!(out, "  h{i}_{ca} -> s{t};").unwrap();
                    }
                }
            }
        }
        writeln!(out, "}}").unwrap();
        out
    }
}

/// Successors of `R2` under `ca` grouped by their A-observation; only
/// observations that actually occur are listed.
pub fn enumerate_observation_classes(
    view: &CoalitionView<'_>,
    r2: &[StateId],
    ca: ActionIdx,
) -> Vec<(Observation, Vec<StateId>)> {
    view.classes(r2, ca).into_iter().collect()
}

pub fn build_until_automaton(
    hat: &HatArena,
    coalition: &Coalition,
    p1: PropId,
    p2: PropId,
    kset: &[StateId],
) -> Result<TreeAutomaton, AutomatonError> {
    build(hat, coalition, p1, p2, kset, AcceptanceKind::Until)
}

pub fn build_weak_until_automaton(
    hat: &HatArena,
    coalition: &Coalition,
    p1: PropId,
    p2: PropId,
    kset: &[StateId],
) -> Result<TreeAutomaton, AutomatonError> {
    build(hat, coalition, p1, p2, kset, AcceptanceKind::WeakUntil)
}

fn build(
    hat: &HatArena,
    coalition: &Coalition,
    p1: PropId,
    p2: PropId,
    kset: &[StateId],
    kind: AcceptanceKind,
) -> Result<TreeAutomaton, AutomatonError> {
    if coalition != hat.coalition() {
        return Err(AutomatonError::CoalitionMismatch);
    }
    let g = hat.base();
    for p in [p1, p2] {
        if p >= g.num_props() {
            return Err(AutomatonError::UnknownProp(p));
        }
    }
    if hat.kset_id(kset).is_none() {
        let names = kset.iter().map(|&q| g.state_name(q).to_string()).collect();
        return Err(AutomatonError::UnknownKset(names));
    }
    let view = g.view(coalition);
    let has_p2 = |q: StateId| g.has_label(q, p2);
    let neither = |q: StateId| !g.has_label(q, p1) && !g.has_label(q, p2);

    let mut states = vec![AutomatonState::Bot];
    let mut index: HashMap<AutomatonState, usize> = HashMap::new();
    index.insert(AutomatonState::Bot, BOT);
    let mut delta: Vec<Vec<Vec<usize>>> = vec![vec![vec![BOT]; view.num_actions()]];
    let mut queue = VecDeque::new();

    let initial_state = if kset.iter().any(|&s| neither(s)) {
        AutomatonState::Bot
    } else {
        AutomatonState::Pair {
            pending: kset.iter().copied().filter(|&s| !has_p2(s)).collect(),
            kset: kset.to_vec(),
        }
    };
    let mut intern = |st: AutomatonState,
                      states: &mut Vec<AutomatonState>,
                      queue: &mut VecDeque<usize>|
     -> usize {
        *index.entry(st.clone()).or_insert_with(|| {
            states.push(st);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    let initial = intern(initial_state, &mut states, &mut queue);

    while let Some(s) = queue.pop_front() {
        let (pending, r2) = match &states[s] {
            AutomatonState::Bot => continue,
            AutomatonState::Pair { pending, kset } => (pending.clone(), kset.clone()),
        };
        let mut row = Vec::with_capacity(view.num_actions());
        for ca in 0..view.num_actions() {
            // rule (1): an undischarged history can reach a state with neither goal atom
            if view.post(&pending, ca).into_iter().any(neither) {
                row.push(vec![BOT]);
                continue;
            }
            // rule (2): one successor per observation class of R2
            let mut succ = Vec::new();
            for (z, out2) in enumerate_observation_classes(&view, &r2, ca) {
                let out1: Vec<StateId> = view
                    .out(&pending, ca, &z)
                    .into_iter()
                    .filter(|&q| !has_p2(q))
                    .collect();
                debug_assert!(out1.iter().all(|q| out2.binary_search(q).is_ok()));
                debug_assert!(out1.iter().all(|&q| g.has_label(q, p1)));
                let t = intern(
                    AutomatonState::Pair {
                        pending: out1,
                        kset: out2,
                    },
                    &mut states,
                    &mut queue,
                );
                succ.push(t);
            }
            succ.sort_unstable();
            succ.dedup();
            row.push(succ);
        }
        if delta.len() <= s {
            delta.resize(s + 1, Vec::new());
        }
        delta[s] = row;
    }
    Ok(TreeAutomaton {
        states,
        delta,
        initial,
        kind,
        goal: (p1, p2),
        kset: kset.to_vec(),
        coalition: coalition.clone(),
    })
}

/// Groups successor ids of one transition by the observation of their kset.
pub fn successor_classes(
    a: &TreeAutomaton,
    arena: &Arena,
    s: usize,
    ca: ActionIdx,
) -> BTreeMap<Observation, usize> {
    let view = arena.view(a.coalition());
    a.successors(s, ca)
        .iter()
        .filter_map(|&t| a.state(t).kset().map(|k| (view.obs(k[0]), t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic_split::split;
    use std::sync::Arc;

    // a single agent walks along a line; `loop` keeps p, `go` moves to q.
    fn line() -> Arc<Arena> {
        Arc::new(
            Arena::from_json(
                r#"{"agents":[{"name":"a","actions":["loop","go"],"observes":["p","q"]}],
                "states":[{"id":"s","labels":["p"]},{"id":"t","labels":["q"]},{"id":"z","labels":[]}],
                "initial":["s"],
                "transitions":[
                  {"from":"s","actions":{"a":"loop"},"to":["s"]},
                  {"from":"s","actions":{"a":"go"},"to":["t"]},
                  {"from":"t","actions":{"a":"loop"},"to":["z"]},
                  {"from":"t","actions":{"a":"go"},"to":["z"]},
                  {"from":"z","actions":{"a":"loop"},"to":["z"]},
                  {"from":"z","actions":{"a":"go"},"to":["z"]}]}"#,
            )
            .unwrap(),
        )
    }

    #[test]
    fn shared_construction_and_invariants() {
        let g = line();
        let a = g.all_agents();
        let h = split(&g, &a);
        let (p, q) = (g.prop_id("p").unwrap(), g.prop_id("q").unwrap());
        let s = g.state_id("s").unwrap();
        let until = build_until_automaton(&h, &a, p, q, &[s]).unwrap();
        let weak = build_weak_until_automaton(&h, &a, p, q, &[s]).unwrap();
        assert_eq!(until.states(), weak.states());
        assert_eq!(until.delta, weak.delta);
        assert_eq!(until.kind(), AcceptanceKind::Until);
        assert_eq!(
            until.state(until.initial()),
            &AutomatonState::Pair {
                pending: vec![s],
                kset: vec![s]
            }
        );
        for ca in 0..until.num_actions() {
            assert_eq!(until.successors(BOT, ca), &[BOT]);
        }
        // loop stays, go discharges
        let init = until.initial();
        assert_eq!(until.successors(init, 0), &[init]);
        let t = until.successors(init, 1)[0];
        assert!(until.state(t).is_discharged());
        // discharged states never fail
        for ca in 0..until.num_actions() {
            for &n in until.successors(t, ca) {
                assert!(until.state(n).is_discharged());
            }
        }
    }

    #[test]
    fn initial_rules() {
        let g = line();
        let a = g.all_agents();
        let h = split(&g, &a);
        let (p, q) = (g.prop_id("p").unwrap(), g.prop_id("q").unwrap());
        let s = g.state_id("s").unwrap();
        // every member already satisfies p2
        let aut = build_until_automaton(&h, &a, q, p, &[s]).unwrap();
        assert!(aut.state(aut.initial()).is_discharged());
        // some member has neither atom
        let z = g.state_id("z").unwrap();
        let aut = build_until_automaton(&h, &a, p, q, &[z]).unwrap();
        assert_eq!(aut.initial(), BOT);
    }

    #[test]
    fn errors() {
        let g = line();
        let a = g.all_agents();
        let h = split(&g, &a);
        let t = g.state_id("t").unwrap();
        let s = g.state_id("s").unwrap();
        assert!(matches!(
            build_until_automaton(&h, &a, 0, 1, &[s, t]),
            Err(AutomatonError::UnknownKset(_))
        ));
        assert_eq!(
            build_until_automaton(&h, &a, 99, 1, &[s]).unwrap_err(),
            AutomatonError::UnknownProp(99)
        );
        assert_eq!(
            build_until_automaton(&h, &Coalition::empty(), 0, 1, &[s]).unwrap_err(),
            AutomatonError::CoalitionMismatch
        );
    }

    #[test]
    fn observation_classes() {
        let g = line();
        let a = g.all_agents();
        let view = g.view(&a);
        assert!(enumerate_observation_classes(&view, &[], 0).is_empty());
        let classes = enumerate_observation_classes(&view, &[0], 1);
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].1, vec![1]);
    }
}
