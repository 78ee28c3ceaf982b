//! Emptiness of goal automata as two-player games: the coalition picks an
//! action, the environment picks an observation class. Until goals are
//! reachability games (least fixpoint), weak-until goals are safety games
//! (greatest fixpoint). A generic solver over visited-set conditions serves
//! as a reference.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::arena::{ActionIdx, Arena, Observation, Strategy};
use crate::strategy_automata::{AcceptanceKind, TreeAutomaton, BOT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmptinessError {
    #[error("oracle guard exceeded: automaton has {states} states, guard is {guard}")]
    Guard { states: usize, guard: usize },
    #[error("automaton is empty; no witness exists")]
    Empty,
    #[error("solver expects {expected:?} acceptance, automaton has {found:?}")]
    WrongKind {
        expected: AcceptanceKind,
        found: AcceptanceKind,
    },
}

fn expect_kind(a: &TreeAutomaton, expected: AcceptanceKind) -> Result<(), EmptinessError> {
    if a.kind() == expected {
        Ok(())
    } else {
        Err(EmptinessError::WrongKind {
            expected,
            found: a.kind(),
        })
    }
}

/// Default bound on automaton size for the generic solver.
pub const DEFAULT_ORACLE_GUARD: usize = 20;
const MAX_ORACLE_GUARD: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Attractor,
    Safety,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSolution {
    pub kind: SolverKind,
    pub winning: Vec<bool>,
    /// Coalition action chosen at each winning, non-terminal state.
    pub choice: Vec<Option<ActionIdx>>,
    /// Attractor round at which a state was added; 0 for targets. Unused for safety.
    pub rank: Vec<Option<usize>>,
    pub rounds: usize,
    pub initial: usize,
}

impl GameSolution {
    pub fn nonempty(&self) -> bool {
        self.winning[self.initial]
    }
}

/// Reachability of discharged states. Each state's choice is the least action
/// that qualified in the round the state entered, so ranks strictly decrease
/// along every choice-induced path.
pub fn check_until_nonempty(a: &TreeAutomaton) -> Result<GameSolution, EmptinessError> {
    expect_kind(a, AcceptanceKind::Until)?;
    let n = a.num_states();
    let mut winning = vec![false; n];
    let mut rank = vec![None; n];
    let mut choice = vec![None; n];
    for s in 0..n {
        if a.state(s).is_discharged() {
            winning[s] = true;
            rank[s] = Some(0);
        }
    }
    let mut rounds = 0;
    loop {
        let mut added = Vec::new();
        for s in 0..n {
            if winning[s] || s == BOT {
                continue;
            }
            if let Some(ca) =
                (0..a.num_actions()).find(|&ca| a.successors(s, ca).iter().all(|&t| winning[t]))
            {
                added.push((s, ca));
            }
        }
        if added.is_empty() {
            break;
        }
        rounds += 1;
        for (s, ca) in added {
            winning[s] = true;
            rank[s] = Some(rounds);
            choice[s] = Some(ca);
        }
    }
    Ok(GameSolution {
        kind: SolverKind::Attractor,
        winning,
        choice,
        rank,
        rounds,
        initial: a.initial(),
    })
}

/// Largest set of states avoiding `Bot` that the coalition can stay inside.
pub fn check_weak_nonempty(a: &TreeAutomaton) -> Result<GameSolution, EmptinessError> {
    expect_kind(a, AcceptanceKind::WeakUntil)?;
    let n = a.num_states();
    let mut safe: Vec<bool> = (0..n).map(|s| s != BOT).collect();
    let stays =
        |s: usize, ca: ActionIdx, safe: &[bool]| a.successors(s, ca).iter().all(|&t| safe[t]);
    let mut rounds = 0;
    loop {
        let drop: Vec<usize> = (0..n)
            .filter(|&s| safe[s] && !(0..a.num_actions()).any(|ca| stays(s, ca, &safe)))
            .collect();
        if drop.is_empty() {
            break;
        }
        rounds += 1;
        for s in drop {
            safe[s] = false;
        }
    }
    let choice = (0..n)
        .map(|s| {
            if safe[s] {
                (0..a.num_actions()).find(|&ca| stays(s, ca, &safe))
            } else {
                None
            }
        })
        .collect();
    Ok(GameSolution {
        kind: SolverKind::Safety,
        winning: safe,
        choice,
        rank: vec![None; n],
        rounds,
        initial: a.initial(),
    })
}

/// Dispatches on the automaton's acceptance kind.
pub fn solve(a: &TreeAutomaton) -> GameSolution {
    let sol = match a.kind() {
        AcceptanceKind::Until => check_until_nonempty(a),
        AcceptanceKind::WeakUntil => check_weak_nonempty(a),
    };
    sol.expect("kind matches by dispatch")
}

/// Reference solver: a path is accepting iff the set of states it visits
/// satisfies `accept`. Solves the product with the visited set, layer by
/// layer from the largest visited sets down.
pub fn generic_occurrence_emptiness(
    a: &TreeAutomaton,
    accept: impl Fn(u64) -> bool,
    guard: usize,
) -> Result<bool, EmptinessError> {
    let n = a.num_states();
    if n > guard.min(MAX_ORACLE_GUARD) {
        return Err(EmptinessError::Guard { states: n, guard });
    }
    let mut memo: HashMap<u64, u64> = HashMap::new();
    let init = a.initial();
    let win = layer(a, &accept, 1 << init, &mut memo);
    Ok(win & (1 << init) != 0)
}

/// Winning states of layer `v` (states of `v` with visited set exactly `v`), as a bitmask.
fn layer(
    a: &TreeAutomaton,
    accept: &impl Fn(u64) -> bool,
    v: u64,
    memo: &mut HashMap<u64, u64>,
) -> u64 {
    if let Some(&w) = memo.get(&v) {
        return w;
    }
    let members: Vec<usize> = (0..a.num_states()).filter(|&s| v & (1 << s) != 0).collect();
    // outside[s][ca] = does every successor leaving v win in its own layer
    let mut outside: HashMap<(usize, ActionIdx), bool> = HashMap::new();
    for &s in &members {
        for ca in 0..a.num_actions() {
            let ok = a
                .successors(s, ca)
                .iter()
                .filter(|&&t| v & (1 << t) == 0)
                .all(|&t| {
                    let w = layer(a, accept, v | (1 << t), memo);
                    w & (1 << t) != 0
                });
            outside.insert((s, ca), ok);
        }
    }
    let inside_ok = |s: usize, ca: ActionIdx, cur: u64| {
        outside[&(s, ca)]
            && a.successors(s, ca)
                .iter()
                .filter(|&&t| v & (1 << t) != 0)
                .all(|&t| cur & (1 << t) != 0)
    };
    let step = |cur: u64| {
        members
            .iter()
            .filter(|&&s| (0..a.num_actions()).any(|ca| inside_ok(s, ca, cur)))
            .fold(0u64, |m, &s| m | (1 << s))
    };
    // staying in v forever visits exactly v
    let mut cur = if accept(v) { v } else { 0 };
    loop {
        let next = step(cur);
        let next = if accept(v) { next & cur } else { next | cur };
        if next == cur {
            break;
        }
        cur = next;
    }
    memo.insert(v, cur);
    cur
}

/// Visited-set condition equivalent to the automaton's acceptance kind.
pub fn occurrence_condition(a: &TreeAutomaton) -> impl Fn(u64) -> bool {
    let discharged: u64 = (0..a.num_states())
        .filter(|&s| a.state(s).is_discharged())
        .fold(0, |m, s| m | (1 << s));
    let kind = a.kind();
    move |v: u64| {
        let no_bot = v & (1 << BOT) == 0;
        match kind {
            AcceptanceKind::Until => no_bot && v & discharged != 0,
            AcceptanceKind::WeakUntil => no_bot,
        }
    }
}

/// Turns a solution into an observation-based strategy. Histories start with
/// the observation of the kset; exploration stops at discharged states and at
/// depth `|automaton|`. Unlisted histories fall back to the least action.
pub fn extract_witness_strategy(
    a: &TreeAutomaton,
    sol: &GameSolution,
    arena: &Arena,
) -> Result<Strategy, EmptinessError> {
    if !sol.nonempty() {
        return Err(EmptinessError::Empty);
    }
    let view = arena.view(a.coalition());
    let obs_of = |s: usize| -> Observation {
        view.obs(a.state(s).kset().expect("winning states are not Bot")[0])
    };
    let mut map = std::collections::BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back((sol.initial, vec![obs_of(sol.initial)]));
    let cap = a.num_states();
    while let Some((s, history)) = queue.pop_front() {
        if a.state(s).is_discharged() && a.kind() == AcceptanceKind::Until {
            continue;
        }
        let Some(ca) = sol.choice[s] else { continue };
        map.insert(history.clone(), ca);
        if history.len() > cap {
            continue;
        }
        for &t in a.successors(s, ca) {
            let mut h = history.clone();
            h.push(obs_of(t));
            queue.push_back((t, h));
        }
    }
    Ok(Strategy {
        coalition: a.coalition().clone(),
        default: 0,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epistemic_split::split;
    use crate::strategy_automata::{build_until_automaton, build_weak_until_automaton};
    use std::sync::Arc;

    // From s the agent may `stay` or `go`; `go` reaches either t (goal) or z
    // (dead end), indistinguishably for the agent until arrival.
    fn gamble() -> Arc<Arena> {
        Arc::new(
            Arena::from_json(
                r#"{"agents":[{"name":"a","actions":["stay","go"],"observes":["p","q"]}],
                "states":[{"id":"s","labels":["p"]},{"id":"t","labels":["q"]},{"id":"z","labels":[]}],
                "initial":["s"],
                "transitions":[
                  {"from":"s","actions":{"a":"stay"},"to":["s"]},
                  {"from":"s","actions":{"a":"go"},"to":["t","z"]},
                  {"from":"t","actions":{"a":"stay"},"to":["t"]},
                  {"from":"t","actions":{"a":"go"},"to":["t"]},
                  {"from":"z","actions":{"a":"stay"},"to":["z"]},
                  {"from":"z","actions":{"a":"go"},"to":["z"]}]}"#,
            )
            .unwrap(),
        )
    }

    #[test]
    fn until_empty_weak_nonempty() {
        let g = gamble();
        let a = g.all_agents();
        let h = split(&g, &a);
        let (p, q) = (g.prop_id("p").unwrap(), g.prop_id("q").unwrap());
        let u = build_until_automaton(&h, &a, p, q, &[0]).unwrap();
        let w = build_weak_until_automaton(&h, &a, p, q, &[0]).unwrap();
        let su = check_until_nonempty(&u).unwrap();
        let sw = check_weak_nonempty(&w).unwrap();
        assert!(matches!(
            check_until_nonempty(&w),
            Err(EmptinessError::WrongKind { .. })
        ));
        assert!(!su.nonempty());
        assert!(sw.nonempty());
        assert_eq!(sw.choice[w.initial()], Some(0));
        for aut in [&u, &w] {
            let cond = occurrence_condition(aut);
            assert_eq!(
                generic_occurrence_emptiness(aut, cond, DEFAULT_ORACLE_GUARD).unwrap(),
                solve(aut).nonempty()
            );
        }
        assert_eq!(
            extract_witness_strategy(&u, &su, &g).unwrap_err(),
            EmptinessError::Empty
        );
    }

    #[test]
    fn reachable_goal_has_ranked_witness() {
        let g = gamble();
        let a = g.all_agents();
        let h = split(&g, &a);
        let (p, q) = (g.prop_id("p").unwrap(), g.prop_id("q").unwrap());
        // p U (q or not p) is just "eventually leave s": use q as p2 on {t}
        let u = build_until_automaton(&h, &a, p, q, &[1]).unwrap();
        let sol = check_until_nonempty(&u).unwrap();
        assert!(sol.nonempty());
        assert_eq!(sol.rank[u.initial()], Some(0));
        let strat = extract_witness_strategy(&u, &sol, &g).unwrap();
        assert!(strat.map.is_empty());
    }

    #[test]
    fn guard() {
        let g = gamble();
        let a = g.all_agents();
        let h = split(&g, &a);
        let (p, q) = (g.prop_id("p").unwrap(), g.prop_id("q").unwrap());
        let u = build_until_automaton(&h, &a, p, q, &[0]).unwrap();
        assert_eq!(u.num_states(), 2);
        let cond = occurrence_condition(&u);
        assert!(matches!(
            generic_occurrence_emptiness(&u, cond, 1),
            Err(EmptinessError::Guard { .. })
        ));
    }
}
