//! Game arenas: agents, joint actions, labeled states and a total transition
//! relation, together with coalition-relative observation and outcome sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StateId = usize;
pub type PropId = usize;
pub type AgentId = usize;

/// Index of a joint action in the mixed-radix enumeration of `C`.
pub type JointIdx = usize;

/// Index of a coalition action in [`CoalitionView::actions`].
pub type ActionIdx = usize;

/// A coalition observation: the sorted props of `Prop_A` holding at a state.
pub type Observation = Vec<PropId>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArenaError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("arena has no states")]
    NoStates,
    #[error("arena has no initial states")]
    NoInitial,
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("duplicate agent `{0}`")]
    DuplicateAgent(String),
    #[error("agent `{agent}` declares action `{action}` twice")]
    DuplicateAction { agent: String, action: String },
    #[error("agent `{0}` has no actions")]
    NoActions(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("unknown action `{action}` for agent `{agent}`")]
    UnknownAction { agent: String, action: String },
    #[error("unknown prop `{0}`")]
    UnknownProp(String),
    #[error("prop `{0}` is declared hidden but observed by an agent")]
    HiddenObserved(String),
    #[error("invalid prop name `{0}`: '#' is reserved")]
    ReservedProp(String),
    #[error("transition from `{from}` does not assign an action to agent `{agent}`")]
    IncompleteJointAction { from: String, agent: String },
    #[error("non-serial transition relation: state `{state}` has no successor under {action}")]
    NonSerial { state: String, action: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Agent {
    pub name: String,
    pub actions: Vec<String>,
    pub observes: BTreeSet<PropId>,
}

/// A coalition, stored as the sorted list of member agent ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(Vec<AgentId>);

impl Coalition {
    pub fn new(members: impl IntoIterator<Item = AgentId>) -> Self {
        let set: BTreeSet<AgentId> = members.into_iter().collect();
        Coalition(set.into_iter().collect())
    }

    pub fn empty() -> Self {
        Coalition(Vec::new())
    }

    pub fn members(&self) -> &[AgentId] {
        &self.0
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.0.binary_search(&agent).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A finite run: a start state followed by `(joint action, target)` steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Run {
    pub start: StateId,
    pub steps: Vec<(JointIdx, StateId)>,
}

impl Run {
    pub fn empty(start: StateId) -> Self {
        Run {
            start,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `rho[i]` for `i <= len`.
    pub fn state(&self, i: usize) -> StateId {
        if i == 0 {
            self.start
        } else {
            self.steps[i - 1].1
        }
    }

    pub fn last(&self) -> StateId {
        self.steps.last().map_or(self.start, |s| s.1)
    }

    /// `act(rho, i)` for `i < len`.
    pub fn action(&self, i: usize) -> JointIdx {
        self.steps[i].0
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        std::iter::once(self.start).chain(self.steps.iter().map(|s| s.1))
    }

    pub fn push(&mut self, action: JointIdx, target: StateId) {
        self.steps.push((action, target));
    }
}

/// An observation-based strategy for a coalition, as a finite map from
/// A-histories to coalition actions plus a default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    pub coalition: Coalition,
    pub default: ActionIdx,
    pub map: BTreeMap<Vec<Observation>, ActionIdx>,
}

impl Strategy {
    pub fn action_for(&self, history: &[Observation]) -> ActionIdx {
        self.map.get(history).copied().unwrap_or(self.default)
    }

    pub fn to_document(&self, arena: &Arena) -> StrategyDocument {
        let view = arena.view(&self.coalition);
        let names = |obs: &Observation| {
            obs.iter()
                .map(|&p| arena.prop_name(p).to_string())
                .collect()
        };
        StrategyDocument {
            coalition: self
                .coalition
                .members()
                .iter()
                .map(|&a| arena.agent(a).name.clone())
                .collect(),
            default: view.action_document(self.default),
            map: self
                .map
                .iter()
                .map(|(history, &action)| StrategyEntry {
                    history: history.iter().map(names).collect(),
                    action: view.action_document(action),
                })
                .collect(),
        }
    }
}

/// A joint or coalition action keyed by agent name, in arena agent order.
pub type ActionDocument = IndexMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyDocument {
    pub coalition: Vec<String>,
    pub default: ActionDocument,
    pub map: Vec<StrategyEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyEntry {
    pub history: Vec<Vec<String>>,
    pub action: ActionDocument,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArenaDocument {
    pub agents: Vec<AgentDocument>,
    #[serde(default)]
    pub hidden_props: Vec<String>,
    pub states: Vec<StateDocument>,
    pub initial: Vec<String>,
    pub transitions: Vec<TransitionDocument>,
    #[serde(default)]
    pub complete_with_sink: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDocument {
    pub name: String,
    pub actions: Vec<String>,
    #[serde(default)]
    pub observes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDocument {
    pub id: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionDocument {
    pub from: String,
    pub actions: ActionDocument,
    pub to: Vec<String>,
}

/// A validated game arena. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arena {
    agents: Vec<Agent>,
    props: Vec<String>,
    prop_index: HashMap<String, PropId>,
    hidden: BTreeSet<PropId>,
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    labels: Vec<BTreeSet<PropId>>,
    initial: Vec<StateId>,
    // delta[q][c] = sorted successor set
    delta: Vec<Vec<Vec<StateId>>>,
}

/// Incremental arena construction; [`ArenaBuilder::build`] checks every
/// arena invariant.
#[derive(Debug, Clone, Default)]
pub struct ArenaBuilder {
    agents: Vec<Agent>,
    props: Vec<String>,
    prop_index: HashMap<String, PropId>,
    hidden: BTreeSet<PropId>,
    states: Vec<String>,
    state_index: HashMap<String, StateId>,
    labels: Vec<BTreeSet<PropId>>,
    initial: BTreeSet<StateId>,
    edges: Vec<BTreeMap<JointIdx, BTreeSet<StateId>>>,
}

fn check_prop_name(name: &str) -> Result<(), ArenaError> {
    if name.contains('#') {
        Err(ArenaError::ReservedProp(name.to_string()))
    } else if name.is_empty() {
        Err(ArenaError::Schema("empty prop name".into()))
    } else {
        Ok(())
    }
}

impl ArenaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern_prop(&mut self, name: &str) -> PropId {
        if let Some(&p) = self.prop_index.get(name) {
            return p;
        }
        let id = self.props.len();
        self.props.push(name.to_string());
        self.prop_index.insert(name.to_string(), id);
        id
    }

    pub fn agent(
        &mut self,
        name: &str,
        actions: &[&str],
        observes: &[&str],
    ) -> Result<AgentId, ArenaError> {
        if self.agents.iter().any(|a| a.name == name) {
            return Err(ArenaError::DuplicateAgent(name.to_string()));
        }
        if actions.is_empty() {
            return Err(ArenaError::NoActions(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for act in actions {
            if !seen.insert(*act) {
                return Err(ArenaError::DuplicateAction {
                    agent: name.into(),
                    action: act.to_string(),
                });
            }
        }
        let mut obs = BTreeSet::new();
        for p in observes {
            check_prop_name(p)?;
            let id = self.intern_prop(p);
            if self.hidden.contains(&id) {
                return Err(ArenaError::HiddenObserved(p.to_string()));
            }
            obs.insert(id);
        }
        self.agents.push(Agent {
            name: name.to_string(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
            observes: obs,
        });
        Ok(self.agents.len() - 1)
    }

    pub fn hidden_prop(&mut self, name: &str) -> Result<PropId, ArenaError> {
        check_prop_name(name)?;
        let id = self.intern_prop(name);
        if self.agents.iter().any(|a| a.observes.contains(&id)) {
            return Err(ArenaError::HiddenObserved(name.to_string()));
        }
        self.hidden.insert(id);
        Ok(id)
    }

    pub fn state(&mut self, name: &str, labels: &[&str]) -> Result<StateId, ArenaError> {
        let mut set = BTreeSet::new();
        for l in labels {
            let p = *self
                .prop_index
                .get(*l)
                .ok_or_else(|| ArenaError::UnknownProp(l.to_string()))?;
            set.insert(p);
        }
        self.state_with_labels(name, set)
    }

    pub(crate) fn state_with_labels(
        &mut self,
        name: &str,
        labels: BTreeSet<PropId>,
    ) -> Result<StateId, ArenaError> {
        if self.state_index.contains_key(name) {
            return Err(ArenaError::DuplicateState(name.to_string()));
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.state_index.insert(name.to_string(), id);
        self.labels.push(labels);
        self.edges.push(BTreeMap::new());
        Ok(id)
    }

    pub fn initial(&mut self, state: StateId) {
        self.initial.insert(state);
    }

    fn joint_count(&self) -> usize {
        self.agents.iter().map(|a| a.actions.len()).product()
    }

    fn joint_index(&self, actions: &[usize]) -> JointIdx {
        actions
            .iter()
            .zip(&self.agents)
            .fold(0, |acc, (&i, agent)| acc * agent.actions.len() + i)
    }

    pub fn transition(&mut self, from: StateId, joint: &[usize], to: StateId) {
        let c = self.joint_index(joint);
        self.edges[from].entry(c).or_default().insert(to);
    }

    pub(crate) fn transition_idx(&mut self, from: StateId, joint: JointIdx, to: StateId) {
        self.edges[from].entry(joint).or_default().insert(to);
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    /// Routes every `(q, c)` pair without successors to a fresh, unlabeled
    /// sink state that loops on every joint action.
    pub fn complete_with_sink(&mut self) -> StateId {
        let mut name = String::from("sink");
        while self.state_index.contains_key(&name) {
            name.push('_');
        }
        let sink = self
            .state_with_labels(&name, BTreeSet::new())
            .expect("fresh sink name");
        let n = self.joint_count();
        for q in 0..self.states.len() {
            for c in 0..n {
                let succ = self.edges[q].entry(c).or_default();
                if succ.is_empty() {
                    succ.insert(sink);
                }
            }
        }
        sink
    }

    pub fn build(self) -> Result<Arena, ArenaError> {
        if self.agents.is_empty() {
            return Err(ArenaError::Schema("arena has no agents".into()));
        }
        if self.states.is_empty() {
            return Err(ArenaError::NoStates);
        }
        if self.initial.is_empty() {
            return Err(ArenaError::NoInitial);
        }
        let n = self.joint_count();
        let mut delta = Vec::with_capacity(self.states.len());
        for (q, edges) in self.edges.iter().enumerate() {
            let mut row = Vec::with_capacity(n);
            for c in 0..n {
                match edges.get(&c) {
                    Some(succ) if !succ.is_empty() => row.push(succ.iter().copied().collect()),
                    _ => {
                        let joint = decode_joint(&self.agents, c);
                        let action = format_joint(&self.agents, &joint);
                        return Err(ArenaError::NonSerial {
                            state: self.states[q].clone(),
                            action,
                        });
                    }
                }
            }
            delta.push(row);
        }
        Ok(Arena {
            agents: self.agents,
            props: self.props,
            prop_index: self.prop_index,
            hidden: self.hidden,
            states: self.states,
            state_index: self.state_index,
            labels: self.labels,
            initial: self.initial.into_iter().collect(),
            delta,
        })
    }
}

fn decode_joint(agents: &[Agent], mut c: JointIdx) -> Vec<usize> {
    let mut out = vec![0; agents.len()];
    for (slot, agent) in out.iter_mut().zip(agents).rev() {
        let k = agent.actions.len();
        *slot = c % k;
        c /= k;
    }
    out
}

fn format_joint(agents: &[Agent], joint: &[usize]) -> String {
    let parts: Vec<&str> = joint
        .iter()
        .zip(agents)
        .map(|(&i, a)| a.actions[i].as_str())
        .collect();
    format!("({})", parts.join(","))
}

impl Arena {
    pub fn from_json(text: &str) -> Result<Arena, ArenaError> {
        let doc: ArenaDocument =
            serde_json::from_str(text).map_err(|e| ArenaError::Schema(e.to_string()))?;
        Arena::from_document(&doc)
    }

    pub fn from_document(doc: &ArenaDocument) -> Result<Arena, ArenaError> {
        let mut b = ArenaBuilder::new();
        for p in &doc.hidden_props {
            b.hidden_prop(p)?;
        }
        for a in &doc.agents {
            let actions: Vec<&str> = a.actions.iter().map(String::as_str).collect();
            let observes: Vec<&str> = a.observes.iter().map(String::as_str).collect();
            b.agent(&a.name, &actions, &observes)?;
        }
        for s in &doc.states {
            let labels: Vec<&str> = s.labels.iter().map(String::as_str).collect();
            b.state(&s.id, &labels)?;
        }
        for q in &doc.initial {
            let id = b
                .state_id(q)
                .ok_or_else(|| ArenaError::UnknownState(q.clone()))?;
            b.initial(id);
        }
        for t in &doc.transitions {
            let from = b
                .state_id(&t.from)
                .ok_or_else(|| ArenaError::UnknownState(t.from.clone()))?;
            for name in t.actions.keys() {
                if !b.agents.iter().any(|a| &a.name == name) {
                    return Err(ArenaError::UnknownAgent(name.clone()));
                }
            }
            let mut joint = Vec::with_capacity(b.agents.len());
            for agent in &b.agents {
                let act = t.actions.get(&agent.name).ok_or_else(|| {
                    ArenaError::IncompleteJointAction {
                        from: t.from.clone(),
                        agent: agent.name.clone(),
                    }
                })?;
                let idx = agent.actions.iter().position(|x| x == act).ok_or_else(|| {
                    ArenaError::UnknownAction {
                        agent: agent.name.clone(),
                        action: act.clone(),
                    }
                })?;
                joint.push(idx);
            }
            for to in &t.to {
                let target = b
                    .state_id(to)
                    .ok_or_else(|| ArenaError::UnknownState(to.clone()))?;
                b.transition(from, &joint, target);
            }
        }
        if doc.complete_with_sink {
            b.complete_with_sink();
        }
        b.build()
    }

    /// Serializes the arena with one transition entry per `(state, joint action)`.
    pub fn to_document(&self) -> ArenaDocument {
        let agents = self
            .agents
            .iter()
            .map(|a| AgentDocument {
                name: a.name.clone(),
                actions: a.actions.clone(),
                observes: a.observes.iter().map(|&p| self.props[p].clone()).collect(),
            })
            .collect();
        let states = (0..self.num_states())
            .map(|q| StateDocument {
                id: self.states[q].clone(),
                labels: self.labels[q]
                    .iter()
                    .map(|&p| self.props[p].clone())
                    .collect(),
            })
            .collect();
        let mut transitions = Vec::new();
        for q in 0..self.num_states() {
            for c in 0..self.num_joint_actions() {
                transitions.push(TransitionDocument {
                    from: self.states[q].clone(),
                    actions: self.joint_document(c),
                    to: self.delta[q][c]
                        .iter()
                        .map(|&s| self.states[s].clone())
                        .collect(),
                });
            }
        }
        ArenaDocument {
            agents,
            hidden_props: self.hidden.iter().map(|&p| self.props[p].clone()).collect(),
            states,
            initial: self
                .initial
                .iter()
                .map(|&q| self.states[q].clone())
                .collect(),
            transitions,
            complete_with_sink: false,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("arena document serializes")
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id]
    }

    pub fn agent_id(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name)
    }

    pub fn all_agents(&self) -> Coalition {
        Coalition::new(0..self.agents.len())
    }

    /// Resolves agent names into a coalition.
    pub fn coalition<S: AsRef<str>>(
        &self,
        names: impl IntoIterator<Item = S>,
    ) -> Result<Coalition, ArenaError> {
        let mut ids = Vec::new();
        for n in names {
            let n = n.as_ref();
            ids.push(
                self.agent_id(n)
                    .ok_or_else(|| ArenaError::UnknownAgent(n.to_string()))?,
            );
        }
        Ok(Coalition::new(ids))
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.delta.first().map_or(0, Vec::len)
    }

    pub fn state_name(&self, q: StateId) -> &str {
        &self.states[q]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn prop_name(&self, p: PropId) -> &str {
        &self.props[p]
    }

    pub fn prop_id(&self, name: &str) -> Option<PropId> {
        self.prop_index.get(name).copied()
    }

    pub fn hidden_props(&self) -> &BTreeSet<PropId> {
        &self.hidden
    }

    pub fn labels(&self, q: StateId) -> &BTreeSet<PropId> {
        &self.labels[q]
    }

    pub fn has_label(&self, q: StateId, p: PropId) -> bool {
        self.labels[q].contains(&p)
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, q: StateId) -> bool {
        self.initial.binary_search(&q).is_ok()
    }

    pub fn successors(&self, q: StateId, c: JointIdx) -> &[StateId] {
        &self.delta[q][c]
    }

    pub fn joint_action(&self, c: JointIdx) -> Vec<usize> {
        decode_joint(&self.agents, c)
    }

    pub fn joint_index(&self, actions: &[usize]) -> JointIdx {
        actions
            .iter()
            .zip(&self.agents)
            .fold(0, |acc, (&i, agent)| acc * agent.actions.len() + i)
    }

    pub fn format_joint(&self, c: JointIdx) -> String {
        format_joint(&self.agents, &self.joint_action(c))
    }

    pub fn joint_document(&self, c: JointIdx) -> ActionDocument {
        self.joint_action(c)
            .into_iter()
            .zip(&self.agents)
            .map(|(i, a)| (a.name.clone(), a.actions[i].clone()))
            .collect()
    }

    /// `Prop_A`: the props observable by some member of the coalition.
    pub fn observable(&self, coalition: &Coalition) -> BTreeSet<PropId> {
        coalition
            .members()
            .iter()
            .flat_map(|&a| self.agents[a].observes.iter().copied())
            .collect()
    }

    /// `lambda_A(q)`.
    pub fn obs(&self, coalition: &Coalition, q: StateId) -> Observation {
        let visible = self.observable(coalition);
        self.labels[q]
            .iter()
            .copied()
            .filter(|p| visible.contains(p))
            .collect()
    }

    pub fn view(&self, coalition: &Coalition) -> CoalitionView<'_> {
        CoalitionView::new(self, coalition.clone())
    }

    pub fn is_run(&self, run: &Run) -> bool {
        let mut cur = run.start;
        if cur >= self.num_states() {
            return false;
        }
        for &(c, next) in &run.steps {
            if c >= self.num_joint_actions() || self.delta[cur][c].binary_search(&next).is_err() {
                return false;
            }
            cur = next;
        }
        true
    }

    pub fn is_initialized(&self, run: &Run) -> bool {
        self.is_run(run) && self.is_initial(run.start)
    }

    /// `rho1 ~_A rho2`: equal length, equal A-projected actions, equal
    /// A-observations at every position.
    pub fn obs_equiv(&self, coalition: &Coalition, r1: &Run, r2: &Run) -> bool {
        if r1.len() != r2.len() {
            return false;
        }
        let view = self.view(coalition);
        (0..r1.len()).all(|i| view.restrict(r1.action(i)) == view.restrict(r2.action(i)))
            && (0..=r1.len()).all(|i| view.obs(r1.state(i)) == view.obs(r2.state(i)))
    }

    /// Copy of the arena with one more hidden prop, holding exactly where
    /// `holds[q]` is true.
    pub fn with_fresh_prop(&self, name: &str, holds: &[bool]) -> (Arena, PropId) {
        assert_eq!(holds.len(), self.num_states());
        assert!(
            !self.prop_index.contains_key(name),
            "fresh prop `{name}` already present"
        );
        let mut next = self.clone();
        let id = next.props.len();
        next.props.push(name.to_string());
        next.prop_index.insert(name.to_string(), id);
        next.hidden.insert(id);
        for (q, &h) in holds.iter().enumerate() {
            if h {
                next.labels[q].insert(id);
            }
        }
        (next, id)
    }

    pub(crate) fn builder_like(&self) -> ArenaBuilder {
        ArenaBuilder {
            agents: self.agents.clone(),
            props: self.props.clone(),
            prop_index: self.prop_index.clone(),
            hidden: self.hidden.clone(),
            ..ArenaBuilder::default()
        }
    }
}

impl fmt::Display for Arena {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "arena: {} agents, {} states, {} joint actions, {} initial",
            self.agents.len(),
            self.num_states(),
            self.num_joint_actions(),
            self.initial.len()
        )
    }
}

/// Coalition-relative queries over an arena: `C_A`, restriction `c|_A`,
/// `lambda_A` and `out(S, c_A, Z)`.
#[derive(Debug, Clone)]
pub struct CoalitionView<'a> {
    arena: &'a Arena,
    coalition: Coalition,
    visible: BTreeSet<PropId>,
    actions: Vec<Vec<usize>>,
    of_joint: Vec<ActionIdx>,
    extensions: Vec<Vec<JointIdx>>,
}

impl<'a> CoalitionView<'a> {
    fn new(arena: &'a Arena, coalition: Coalition) -> Self {
        let visible = arena.observable(&coalition);
        let radices: Vec<usize> = coalition
            .members()
            .iter()
            .map(|&a| arena.agents[a].actions.len())
            .collect();
        let count: usize = radices.iter().product();
        let actions: Vec<Vec<usize>> = (0..count)
            .map(|mut i| {
                let mut v = vec![0; radices.len()];
                for (slot, &k) in v.iter_mut().zip(&radices).rev() {
                    *slot = i % k;
                    i /= k;
                }
                v
            })
            .collect();
        let mut of_joint = Vec::with_capacity(arena.num_joint_actions());
        let mut extensions = vec![Vec::new(); count];
        for c in 0..arena.num_joint_actions() {
            let joint = arena.joint_action(c);
            let ca = coalition
                .members()
                .iter()
                .zip(&radices)
                .fold(0, |acc, (&a, &k)| acc * k + joint[a]);
            of_joint.push(ca);
            extensions[ca].push(c);
        }
        CoalitionView {
            arena,
            coalition,
            visible,
            actions,
            of_joint,
            extensions,
        }
    }

    pub fn arena(&self) -> &'a Arena {
        self.arena
    }

    pub fn coalition(&self) -> &Coalition {
        &self.coalition
    }

    pub fn visible(&self) -> &BTreeSet<PropId> {
        &self.visible
    }

    /// `C_A` in lexicographic order over the arena's action order.
    pub fn actions(&self) -> &[Vec<usize>] {
        &self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    /// `c|_A`.
    pub fn restrict(&self, c: JointIdx) -> ActionIdx {
        self.of_joint[c]
    }

    /// All joint actions `c'` with `c'|_A = ca`.
    pub fn extensions(&self, ca: ActionIdx) -> &[JointIdx] {
        &self.extensions[ca]
    }

    pub fn obs(&self, q: StateId) -> Observation {
        self.arena.labels[q]
            .iter()
            .copied()
            .filter(|p| self.visible.contains(p))
            .collect()
    }

    /// Every `delta`-successor of `S` under joint actions extending `ca`.
    pub fn post(&self, set: &[StateId], ca: ActionIdx) -> BTreeSet<StateId> {
        let mut out = BTreeSet::new();
        for &s in set {
            for &c in &self.extensions[ca] {
                out.extend(self.arena.delta[s][c].iter().copied());
            }
        }
        out
    }

    /// `out(S, c_A, Z)` with exact-label match `lambda_A(s') = Z`.
    pub fn out(&self, set: &[StateId], ca: ActionIdx, z: &[PropId]) -> Vec<StateId> {
        self.post(set, ca)
            .into_iter()
            .filter(|&s| self.obs(s) == z)
            .collect()
    }

    /// Successors of `S` under `ca`, grouped by their A-observation.
    pub fn classes(&self, set: &[StateId], ca: ActionIdx) -> BTreeMap<Observation, Vec<StateId>> {
        let mut classes: BTreeMap<Observation, Vec<StateId>> = BTreeMap::new();
        for s in self.post(set, ca) {
            classes.entry(self.obs(s)).or_default().push(s);
        }
        classes
    }

    pub fn format_action(&self, ca: ActionIdx) -> String {
        let parts: Vec<&str> = self
            .coalition
            .members()
            .iter()
            .zip(&self.actions[ca])
            .map(|(&a, &i)| self.arena.agents[a].actions[i].as_str())
            .collect();
        format!("({})", parts.join(","))
    }

    pub fn action_document(&self, ca: ActionIdx) -> ActionDocument {
        self.coalition
            .members()
            .iter()
            .zip(&self.actions[ca])
            .map(|(&a, &i)| {
                (
                    self.arena.agents[a].name.clone(),
                    self.arena.agents[a].actions[i].clone(),
                )
            })
            .collect()
    }

    /// Parses an agent-name-keyed action map for this coalition.
    pub fn action_from_document(&self, doc: &ActionDocument) -> Result<ActionIdx, ArenaError> {
        let mut idx = 0;
        for &a in self.coalition.members() {
            let agent = &self.arena.agents[a];
            let act = doc.get(&agent.name).ok_or_else(|| {
                ArenaError::Schema(format!("missing action for `{}`", agent.name))
            })?;
            let i = agent.actions.iter().position(|x| x == act).ok_or_else(|| {
                ArenaError::UnknownAction {
                    agent: agent.name.clone(),
                    action: act.clone(),
                }
            })?;
            idx = idx * agent.actions.len() + i;
        }
        Ok(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_agent() -> Arena {
        let mut b = ArenaBuilder::new();
        b.hidden_prop("h").unwrap();
        b.agent("a", &["x", "y"], &["p"]).unwrap();
        b.agent("b", &["x", "y"], &["q"]).unwrap();
        let s0 = b.state("s0", &[]).unwrap();
        let s1 = b.state("s1", &["p"]).unwrap();
        let s2 = b.state("s2", &["p", "h"]).unwrap();
        let s3 = b.state("s3", &["q"]).unwrap();
        b.initial(s0);
        for c in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            b.transition(s0, &c, if c[0] == 0 { s1 } else { s3 });
            b.transition(s0, &c, s2);
            for s in [s1, s2, s3] {
                b.transition(s, &c, s);
            }
        }
        b.build().unwrap()
    }

    #[test]
    fn minimal_serial_arena() {
        let mut b = ArenaBuilder::new();
        b.agent("a", &["go"], &[]).unwrap();
        let q = b.state("q", &[]).unwrap();
        b.initial(q);
        b.transition(q, &[0], q);
        let g = b.build().unwrap();
        assert_eq!(g.num_states(), 1);
        assert_eq!(g.num_joint_actions(), 1);
    }

    #[test]
    fn non_serial_rejected_without_sink() {
        let text = r#"{"agents":[{"name":"a","actions":["x","y"],"observes":[]}],
            "states":[{"id":"q","labels":[]}],"initial":["q"],
            "transitions":[{"from":"q","actions":{"a":"x"},"to":["q"]}]}"#;
        let err = Arena::from_json(text).unwrap_err();
        assert!(
            err.to_string()
                .starts_with("non-serial transition relation"),
            "{err}"
        );
        let fixed = text.replace("}]}", "}],\"complete_with_sink\":true}");
        let g = Arena::from_json(&fixed).unwrap();
        assert_eq!(g.num_states(), 2);
        assert_eq!(g.state_name(1), "sink");
        assert_eq!(g.successors(0, 1), &[1]);
    }

    #[test]
    fn loader_errors() {
        let dup = r#"{"agents":[{"name":"a","actions":["x"]}],"states":[{"id":"q"},{"id":"q"}],
            "initial":["q"],"transitions":[]}"#;
        assert_eq!(
            Arena::from_json(dup).unwrap_err(),
            ArenaError::DuplicateState("q".into())
        );
        let unknown = r#"{"agents":[{"name":"a","actions":["x"]}],"states":[{"id":"q","labels":["zz"]}],
            "initial":["q"],"transitions":[]}"#;
        assert_eq!(
            Arena::from_json(unknown).unwrap_err(),
            ArenaError::UnknownProp("zz".into())
        );
        let bad_action = r#"{"agents":[{"name":"a","actions":["x"]}],"states":[{"id":"q"}],
            "initial":["q"],"transitions":[{"from":"q","actions":{"a":"nope"},"to":["q"]}]}"#;
        assert!(matches!(
            Arena::from_json(bad_action),
            Err(ArenaError::UnknownAction { .. })
        ));
        let reserved = r#"{"agents":[{"name":"a","actions":["x"],"observes":["p#1"]}],"states":[{"id":"q"}],
            "initial":["q"],"transitions":[]}"#;
        assert!(matches!(
            Arena::from_json(reserved),
            Err(ArenaError::ReservedProp(_))
        ));
        assert!(matches!(
            Arena::from_json("{\"agents\": 3}"),
            Err(ArenaError::Schema(_))
        ));
    }

    #[test]
    fn observation_hides_hidden_and_foreign_props() {
        let g = two_agent();
        let a = g.coalition(["a"]).unwrap();
        let s2 = g.state_id("s2").unwrap();
        assert_eq!(g.obs(&a, s2), vec![g.prop_id("p").unwrap()]);
        assert!(g.obs(&Coalition::empty(), s2).is_empty());
        let b = g.coalition(["b"]).unwrap();
        assert!(g.obs(&b, s2).is_empty());
    }

    #[test]
    fn out_is_exact_label_partition() {
        let g = two_agent();
        let a = g.coalition(["a"]).unwrap();
        let view = g.view(&a);
        let p = g.prop_id("p").unwrap();
        assert_eq!(view.out(&[0], 0, &[p]), vec![1, 2]);
        assert_eq!(view.out(&[0], 0, &[]), Vec::<StateId>::new());
        assert_eq!(view.out(&[0], 1, &[]), vec![3]);
        assert!(view.out(&[], 0, &[p]).is_empty());
    }

    #[test]
    fn obs_equiv_basics() {
        let g = two_agent();
        let a = g.coalition(["a"]).unwrap();
        let c = g.joint_index(&[0, 1]);
        let c2 = g.joint_index(&[0, 0]);
        let r1 = Run {
            start: 0,
            steps: vec![(c, 1)],
        };
        let r2 = Run {
            start: 0,
            steps: vec![(c2, 2)],
        };
        assert!(g.obs_equiv(&a, &r1, &r1));
        assert!(g.obs_equiv(&a, &r1, &r2));
        assert!(!g.obs_equiv(&a, &r1, &Run::empty(0)));
        let both = g.all_agents();
        assert!(!g.obs_equiv(&both, &r1, &r2));
    }

    #[test]
    fn document_round_trip() {
        let g = two_agent();
        let back = Arena::from_document(&g.to_document()).unwrap();
        assert_eq!(back.num_states(), g.num_states());
        for q in 0..g.num_states() {
            for c in 0..g.num_joint_actions() {
                assert_eq!(back.successors(q, c), g.successors(q, c));
            }
            assert_eq!(back.labels(q).len(), g.labels(q).len());
        }
    }

    #[test]
    fn joint_index_round_trip() {
        let g = two_agent();
        for c in 0..g.num_joint_actions() {
            assert_eq!(g.joint_index(&g.joint_action(c)), c);
        }
        let view = g.view(&g.coalition(["b"]).unwrap());
        assert_eq!(view.restrict(g.joint_index(&[1, 0])), 0);
        assert_eq!(view.extensions(1), &[1, 3]);
    }
}
