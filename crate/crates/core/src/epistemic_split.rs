//! Knowledge subset construction: refines an arena into hat states `(q, S)`
//! where `S` is the set of states reachable by histories the coalition
//! cannot tell apart from the actual one. Also the direct labelings for
//! `K_A p` and `<<A>>X p`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::arena::{Arena, ArenaBuilder, Coalition, Observation, PropId, Run, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("state cap exceeded: more than {cap} hat states")]
    StateCap { cap: usize },
    #[error("run is not an initialized run of the base arena")]
    NotInitialized,
    #[error("unknown prop `{0}`")]
    UnknownProp(String),
    #[error("coalition does not match the one the hat arena was built for")]
    CoalitionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KsetId(pub usize);

/// The refined arena `Gamma-hat_A` with provenance back to its base arena.
#[derive(Debug, Clone)]
pub struct HatArena {
    pub arena: Arena,
    base: Arc<Arena>,
    coalition: Coalition,
    base_of: Vec<StateId>,
    kset_of: Vec<KsetId>,
    ksets: Vec<Vec<StateId>>,
    kset_index: HashMap<Vec<StateId>, KsetId>,
    index: HashMap<(StateId, KsetId), StateId>,
}

/// Default cap on the number of materialized hat states.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

/// Builds the reachable part of `Gamma-hat_A`.
pub fn split(g: &Arc<Arena>, coalition: &Coalition) -> HatArena {
    split_capped(g, coalition, usize::MAX).expect("uncapped split cannot fail")
}

pub fn split_capped(
    g: &Arc<Arena>,
    coalition: &Coalition,
    cap: usize,
) -> Result<HatArena, SplitError> {
    let view = g.view(coalition);
    let obs: Vec<Observation> = (0..g.num_states()).map(|q| view.obs(q)).collect();

    let mut ksets: Vec<Vec<StateId>> = Vec::new();
    let mut kset_index: HashMap<Vec<StateId>, KsetId> = HashMap::new();
    let mut intern = |set: Vec<StateId>, ksets: &mut Vec<Vec<StateId>>| -> KsetId {
        *kset_index.entry(set.clone()).or_insert_with(|| {
            ksets.push(set);
            KsetId(ksets.len() - 1)
        })
    };

    let mut base_of = Vec::new();
    let mut kset_of = Vec::new();
    let mut index: HashMap<(StateId, KsetId), StateId> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut add = |q: StateId,
                   k: KsetId,
                   base_of: &mut Vec<StateId>,
                   kset_of: &mut Vec<KsetId>,
                   queue: &mut VecDeque<StateId>| {
        *index.entry((q, k)).or_insert_with(|| {
            base_of.push(q);
            kset_of.push(k);
            queue.push_back(base_of.len() - 1);
            base_of.len() - 1
        })
    };

    let mut initial = Vec::new();
    for &q0 in g.initial() {
        let s0: Vec<StateId> = g
            .initial()
            .iter()
            .copied()
            .filter(|&s| obs[s] == obs[q0])
            .collect();
        let k = intern(s0, &mut ksets);
        initial.push(add(q0, k, &mut base_of, &mut kset_of, &mut queue));
    }

    // (kset, coalition action, observation) -> successor kset
    let mut out_cache: HashMap<(KsetId, usize, Observation), KsetId> = HashMap::new();
    let mut edges: Vec<Vec<Vec<StateId>>> = Vec::new();
    while let Some(h) = queue.pop_front() {
        if base_of.len() > cap {
            return Err(SplitError::StateCap { cap });
        }
        let (q, k) = (base_of[h], kset_of[h]);
        let mut row = Vec::with_capacity(g.num_joint_actions());
        for c in 0..g.num_joint_actions() {
            let ca = view.restrict(c);
            let mut succ = BTreeSet::new();
            for &q2 in g.successors(q, c) {
                let key = (k, ca, obs[q2].clone());
                let k2 = match out_cache.get(&key) {
                    Some(&k2) => k2,
                    None => {
                        let set = view.out(&ksets[k.0], ca, &obs[q2]);
                        let k2 = intern(set, &mut ksets);
                        out_cache.insert(key, k2);
                        k2
                    }
                };
                succ.insert(add(q2, k2, &mut base_of, &mut kset_of, &mut queue));
            }
            row.push(succ.into_iter().collect());
        }
        debug_assert_eq!(edges.len(), h);
        edges.push(row);
    }
    if base_of.len() > cap {
        return Err(SplitError::StateCap { cap });
    }

    let mut b = g.builder_like();
    for h in 0..base_of.len() {
        let name = hat_name(g, base_of[h], &ksets[kset_of[h].0]);
        add_state(&mut b, &name, g.labels(base_of[h]).clone());
    }
    for h in initial {
        b.initial(h);
    }
    for (h, row) in edges.iter().enumerate() {
        for (c, succ) in row.iter().enumerate() {
            for &t in succ {
                b.transition_idx(h, c, t);
            }
        }
    }
    let arena = b.build().expect("lifted transition relation stays serial");
    Ok(HatArena {
        arena,
        base: Arc::clone(g),
        coalition: coalition.clone(),
        base_of,
        kset_of,
        ksets,
        kset_index,
        index,
    })
}

fn add_state(b: &mut ArenaBuilder, name: &str, labels: BTreeSet<PropId>) {
    b.state_with_labels(name, labels)
        .expect("hat state names are unique");
}

fn hat_name(g: &Arena, q: StateId, kset: &[StateId]) -> String {
    let members: Vec<&str> = kset.iter().map(|&s| g.state_name(s)).collect();
    format!("{}@{{{}}}", g.state_name(q), members.join(","))
}

impl HatArena {
    pub fn base(&self) -> &Arc<Arena> {
        &self.base
    }

    pub fn coalition(&self) -> &Coalition {
        &self.coalition
    }

    pub fn num_states(&self) -> usize {
        self.base_of.len()
    }

    /// Base state of a hat state.
    pub fn base_of(&self, h: StateId) -> StateId {
        self.base_of[h]
    }

    pub fn kset_of(&self, h: StateId) -> KsetId {
        self.kset_of[h]
    }

    pub fn kset(&self, k: KsetId) -> &[StateId] {
        &self.ksets[k.0]
    }

    pub fn ksets(&self) -> impl Iterator<Item = (KsetId, &[StateId])> {
        self.ksets
            .iter()
            .enumerate()
            .map(|(i, s)| (KsetId(i), s.as_slice()))
    }

    pub fn num_ksets(&self) -> usize {
        self.ksets.len()
    }

    pub fn kset_id(&self, set: &[StateId]) -> Option<KsetId> {
        self.kset_index.get(set).copied()
    }

    pub fn hat_state(&self, q: StateId, k: KsetId) -> Option<StateId> {
        self.index.get(&(q, k)).copied()
    }

    pub fn base_of_map(&self) -> &[StateId] {
        &self.base_of
    }

    pub fn kset_of_map(&self) -> &[KsetId] {
        &self.kset_of
    }

    /// Base state names of a kset.
    pub fn kset_names(&self, k: KsetId) -> Vec<String> {
        self.kset(k)
            .iter()
            .map(|&s| self.base.state_name(s).to_string())
            .collect()
    }

    /// The unique hat run corresponding to an initialized base run.
    pub fn lift_run(&self, run: &Run) -> Result<Run, SplitError> {
        if !self.base.is_initialized(run) {
            return Err(SplitError::NotInitialized);
        }
        let mut cur = *self
            .arena
            .initial()
            .iter()
            .find(|&&h| self.base_of[h] == run.start)
            .ok_or(SplitError::NotInitialized)?;
        let mut lifted = Run::empty(cur);
        for &(c, next) in &run.steps {
            cur = *self
                .arena
                .successors(cur, c)
                .iter()
                .find(|&&h| self.base_of[h] == next)
                .expect("every base transition lifts");
            lifted.push(c, cur);
        }
        Ok(lifted)
    }

    pub fn project_run(&self, run: &Run) -> Run {
        Run {
            start: self.base_of[run.start],
            steps: run
                .steps
                .iter()
                .map(|&(c, h)| (c, self.base_of[h]))
                .collect(),
        }
    }

    fn per_kset(&self, f: impl Fn(&[StateId]) -> bool) -> Vec<bool> {
        let by_kset: Vec<bool> = self.ksets.iter().map(|s| f(s)).collect();
        self.kset_of.iter().map(|k| by_kset[k.0]).collect()
    }

    /// Hat states satisfying `K_A p`: `p` holds at every member of the kset.
    pub fn label_knowledge(&self, p: PropId) -> Result<Vec<bool>, SplitError> {
        if p >= self.base.num_props() {
            return Err(SplitError::UnknownProp(p.to_string()));
        }
        Ok(self.per_kset(|s| s.iter().all(|&r| self.base.has_label(r, p))))
    }

    /// Hat states satisfying `<<A>>X p`: some coalition action forces `p`
    /// in every successor of every kset member.
    pub fn label_next(&self, coalition: &Coalition, p: PropId) -> Result<Vec<bool>, SplitError> {
        if coalition != &self.coalition {
            return Err(SplitError::CoalitionMismatch);
        }
        if p >= self.base.num_props() {
            return Err(SplitError::UnknownProp(p.to_string()));
        }
        let view = self.base.view(&self.coalition);
        Ok(self.per_kset(|s| {
            (0..view.num_actions())
                .any(|ca| view.post(s, ca).iter().all(|&r| self.base.has_label(r, p)))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arena(text: &str) -> Arc<Arena> {
        Arc::new(Arena::from_json(text).unwrap())
    }

    // a chooses between two doors; both start states look alike to a.
    const DOORS: &str = r#"{
        "agents":[{"name":"a","actions":["l","r"],"observes":["o"]},{"name":"e","actions":["n"],"observes":[]}],
        "hidden_props":["p","h"],
        "states":[{"id":"s1","labels":["h"]},{"id":"s2","labels":[]},{"id":"t","labels":["p","o"]},{"id":"u","labels":["o"]}],
        "initial":["s1","s2"],
        "transitions":[
          {"from":"s1","actions":{"a":"l","e":"n"},"to":["t"]},
          {"from":"s1","actions":{"a":"r","e":"n"},"to":["u"]},
          {"from":"s2","actions":{"a":"l","e":"n"},"to":["t"]},
          {"from":"s2","actions":{"a":"r","e":"n"},"to":["t","u"]},
          {"from":"t","actions":{"a":"l","e":"n"},"to":["t"]},
          {"from":"t","actions":{"a":"r","e":"n"},"to":["t"]},
          {"from":"u","actions":{"a":"l","e":"n"},"to":["u"]},
          {"from":"u","actions":{"a":"r","e":"n"},"to":["u"]}
        ]}"#;

    #[test]
    fn initial_ksets_group_by_observation() {
        let g = arena(DOORS);
        let a = g.coalition(["a"]).unwrap();
        let h = split(&g, &a);
        assert_eq!(h.arena.initial().len(), 2);
        for &i in h.arena.initial() {
            assert_eq!(h.kset(h.kset_of(i)), &[0, 1]);
        }
    }

    #[test]
    fn next_and_knowledge_labels() {
        let g = arena(DOORS);
        let a = g.coalition(["a"]).unwrap();
        let h = split(&g, &a);
        let p = g.prop_id("p").unwrap();
        let nxt = h.label_next(&a, p).unwrap();
        // action l forces p from both s1 and s2
        for &i in h.arena.initial() {
            assert!(nxt[i]);
        }
        let know = h.label_knowledge(p).unwrap();
        for s in 0..h.num_states() {
            let members = h.kset(h.kset_of(s));
            assert_eq!(know[s], members.iter().all(|&r| g.has_label(r, p)));
        }
        // kset {t, u}: u keeps looping without p
        let (t, u) = (g.state_id("t").unwrap(), g.state_id("u").unwrap());
        let ku = h.kset_id(&[t, u]).unwrap();
        let hu = h.hat_state(u, ku).unwrap();
        assert!(!nxt[hu]);
        assert!(matches!(
            h.label_next(&Coalition::empty(), p),
            Err(SplitError::CoalitionMismatch)
        ));
    }

    #[test]
    fn right_door_mixes_histories() {
        let g = arena(DOORS);
        let a = g.coalition(["a"]).unwrap();
        let h = split(&g, &a);
        let t = g.state_id("t").unwrap();
        let u = g.state_id("u").unwrap();
        // after r both t and u observe o: kset {t, u}
        assert!(h.kset_id(&[t, u]).is_some());
        assert!(h.kset_id(&[t]).is_some());
    }

    #[test]
    fn perfect_information_collapses() {
        let g = arena(
            r#"{"agents":[{"name":"a","actions":["x"],"observes":["p","q"]}],
            "states":[{"id":"s","labels":["p"]},{"id":"t","labels":["q"]}],"initial":["s"],
            "transitions":[{"from":"s","actions":{"a":"x"},"to":["s","t"]},{"from":"t","actions":{"a":"x"},"to":["t"]}]}"#,
        );
        let h = split(&g, &g.all_agents());
        assert_eq!(h.num_states(), 2);
        for s in 0..h.num_states() {
            assert_eq!(h.kset(h.kset_of(s)), &[h.base_of(s)]);
        }
    }

    #[test]
    fn lift_and_project() {
        let g = arena(DOORS);
        let a = g.coalition(["a"]).unwrap();
        let h = split(&g, &a);
        let r = Run {
            start: 1,
            steps: vec![(g.joint_index(&[1, 0]), 3), (0, 3)],
        };
        let lifted = h.lift_run(&r).unwrap();
        assert!(h.arena.is_initialized(&lifted));
        assert_eq!(h.project_run(&lifted), r);
        assert_eq!(h.lift_run(&Run::empty(0)).unwrap().len(), 0);
        assert_eq!(h.lift_run(&Run::empty(2)), Err(SplitError::NotInitialized));
    }

    #[test]
    fn state_cap() {
        let g = arena(DOORS);
        let a = g.coalition(["a"]).unwrap();
        assert_eq!(
            split_capped(&g, &a, 2).unwrap_err(),
            SplitError::StateCap { cap: 2 }
        );
    }
}
