//! The labeling driver: desugars a formula, enumerates its subformulas and
//! labels one fresh prop per subformula, splitting the arena by the coalition
//! at every modal step.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arena::{Arena, ArenaError, Coalition, PropId, StateId, Strategy, StrategyDocument};
use crate::emptiness::{extract_witness_strategy, solve, GameSolution};
use crate::epistemic_split::{split_capped, HatArena, KsetId, SplitError, DEFAULT_STATE_CAP};
use crate::formula::{desugar, enumerate_subformulas, fresh_atom, AgentSet, CoreFormula, Formula};
use crate::strategy_automata::{
    build_until_automaton, build_weak_until_automaton, AutomatonError, TreeAutomaton,
};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelCase {
    Atom,
    Boolean,
    Knowledge,
    Next,
    Until,
    WeakUntil,
}

impl LabelCase {
    pub fn of(f: &CoreFormula) -> LabelCase {
        match f {
            CoreFormula::Atom(_) => LabelCase::Atom,
            CoreFormula::True | CoreFormula::False | CoreFormula::Not(_) | CoreFormula::And(..) => {
                LabelCase::Boolean
            }
            CoreFormula::Know(..) => LabelCase::Knowledge,
            CoreFormula::Next(..) => LabelCase::Next,
            CoreFormula::Until(..) => LabelCase::Until,
            CoreFormula::WeakUntil(..) => LabelCase::WeakUntil,
        }
    }

    pub fn is_modal(self) -> bool {
        !matches!(self, LabelCase::Atom | LabelCase::Boolean)
    }

    pub fn name(self) -> &'static str {
        match self {
            LabelCase::Atom => "atom",
            LabelCase::Boolean => "boolean",
            LabelCase::Knowledge => "knowledge",
            LabelCase::Next => "next",
            LabelCase::Until => "until",
            LabelCase::WeakUntil => "weak-until",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KsetOutcome {
    pub kset: KsetId,
    pub automaton_states: usize,
    pub rounds: usize,
    pub nonempty: bool,
}

/// One step `Gamma_{k-1} -> Gamma_k` of the labeling.
#[derive(Debug, Clone)]
pub struct Level {
    /// 1-based.
    pub k: usize,
    pub case: LabelCase,
    pub formula: CoreFormula,
    /// `chi_k`: the subformula over previously introduced fresh atoms.
    pub reduced: CoreFormula,
    /// `Gamma_k`, carrying `p#k`.
    pub arena: Arc<Arena>,
    pub prop: PropId,
    /// Original arena state each state of `Gamma_k` descends from.
    pub origin: Vec<StateId>,
    /// Present for modal steps; its base is `Gamma_{k-1}`.
    pub split: Option<HatArena>,
    /// Per-kset emptiness results for until and weak-until steps.
    pub ksets: Vec<KsetOutcome>,
}

impl Level {
    pub fn labels(&self) -> Vec<bool> {
        (0..self.arena.num_states())
            .map(|q| self.arena.has_label(q, self.prop))
            .collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels().into_iter().filter(|&b| b).count()
    }
}

#[derive(Debug, Clone)]
pub struct LabelingTable {
    pub base: Arc<Arena>,
    pub levels: Vec<Level>,
}

impl LabelingTable {
    pub fn last(&self) -> &Level {
        self.levels.last().expect("at least one level")
    }

    pub fn final_arena(&self) -> &Arc<Arena> {
        &self.last().arena
    }

    /// Arena before level `k` (1-based) was labeled.
    pub fn arena_before(&self, k: usize) -> &Arc<Arena> {
        if k == 1 {
            &self.base
        } else {
            &self.levels[k - 2].arena
        }
    }

    /// Truth of `phi_k` at the states of `Gamma_n`.
    pub fn truth_at_final(&self, k: usize) -> Vec<bool> {
        let last = self.final_arena();
        let p = self.levels[k - 1].prop;
        (0..last.num_states())
            .map(|q| last.has_label(q, p))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub state_cap: usize,
    pub parallel: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            state_cap: DEFAULT_STATE_CAP,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub holds: bool,
    pub formula: Formula,
    /// Truth of the formula at each initial state of the input arena.
    pub initial: Vec<(StateId, bool)>,
    pub table: LabelingTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub holds: bool,
    pub formula: String,
    pub levels: Vec<LevelDocument>,
    pub initial: Vec<InitialDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelDocument {
    pub k: usize,
    pub case: LabelCase,
    pub states: usize,
    pub labeled: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialDocument {
    pub state: String,
    pub label: bool,
}

impl Verdict {
    pub fn to_document(&self) -> VerdictDocument {
        VerdictDocument {
            holds: self.holds,
            formula: self.formula.to_string(),
            levels: self
                .table
                .levels
                .iter()
                .map(|l| LevelDocument {
                    k: l.k,
                    case: l.case,
                    states: l.arena.num_states(),
                    labeled: l.labeled_count(),
                })
                .collect(),
            initial: self
                .initial
                .iter()
                .map(|&(q, label)| InitialDocument {
                    state: self.table.base.state_name(q).to_string(),
                    label,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("verdict serializes")
    }
}

pub fn model_check(
    arena: &Arena,
    formula: &Formula,
    opts: &CheckOptions,
) -> Result<Verdict, CheckError> {
    let table = label(arena, formula, opts)?;
    let last = table.last();
    let g = &last.arena;
    let mut initial: Vec<(StateId, bool)> = g
        .initial()
        .iter()
        .map(|&q| (last.origin[q], g.has_label(q, last.prop)))
        .collect();
    initial.sort_unstable();
    let holds = initial.iter().all(|&(_, b)| b);
    Ok(Verdict {
        holds,
        formula: formula.clone(),
        initial,
        table,
    })
}

/// Runs every labeling step and keeps all intermediate arenas.
pub fn label(
    arena: &Arena,
    formula: &Formula,
    opts: &CheckOptions,
) -> Result<LabelingTable, CheckError> {
    let core = desugar(formula);
    for atom in core.atoms() {
        if arena.prop_id(&atom).is_none() {
            return Err(CheckError::UnknownAtom(atom));
        }
    }
    let subs = enumerate_subformulas(&core);
    let base = Arc::new(arena.clone());
    let mut levels: Vec<Level> = Vec::with_capacity(subs.len());
    let mut cur = Arc::clone(&base);
    let mut origin: Vec<StateId> = (0..arena.num_states()).collect();
    for (i, sub) in subs.entries.iter().enumerate() {
        let level = label_step(&cur, &origin, i + 1, &sub.formula, &sub.reduced, opts)?;
        cur = Arc::clone(&level.arena);
        origin = level.origin.clone();
        levels.push(level);
    }
    Ok(LabelingTable { base, levels })
}

/// Labels `p#k` on `Gamma_{k-1}` (refined first for modal steps).
pub fn label_step(
    prev: &Arc<Arena>,
    origin: &[StateId],
    k: usize,
    formula: &CoreFormula,
    reduced: &CoreFormula,
    opts: &CheckOptions,
) -> Result<Level, CheckError> {
    let case = LabelCase::of(reduced);
    let name = fresh_atom(k);
    let prop = |g: &Arena, a: &str| {
        g.prop_id(a)
            .ok_or_else(|| CheckError::UnknownAtom(a.to_string()))
    };
    let atom_of = |f: &CoreFormula| match f {
        CoreFormula::Atom(a) => a.clone(),
        other => unreachable!("reduced subformula has non-atom operand {other}"),
    };
    let finish =
        |arena: Arena, labels: Vec<bool>, origin: Vec<StateId>, split: Option<HatArena>, ksets| {
            let (g, p) = arena.with_fresh_prop(&name, &labels);
            Level {
                k,
                case,
                formula: formula.clone(),
                reduced: reduced.clone(),
                arena: Arc::new(g),
                prop: p,
                origin,
                split,
                ksets,
            }
        };
    let n = prev.num_states();
    match reduced {
        CoreFormula::Atom(a) => {
            let p = prop(prev, a)?;
            let labels = (0..n).map(|q| prev.has_label(q, p)).collect();
            Ok(finish(
                (**prev).clone(),
                labels,
                origin.to_vec(),
                None,
                Vec::new(),
            ))
        }
        CoreFormula::True | CoreFormula::False | CoreFormula::Not(_) | CoreFormula::And(..) => {
            let labels = match reduced {
                CoreFormula::True => vec![true; n],
                CoreFormula::False => vec![false; n],
                CoreFormula::Not(a) => {
                    let p = prop(prev, &atom_of(a))?;
                    (0..n).map(|q| !prev.has_label(q, p)).collect()
                }
                CoreFormula::And(a, b) => {
                    let (pa, pb) = (prop(prev, &atom_of(a))?, prop(prev, &atom_of(b))?);
                    (0..n)
                        .map(|q| prev.has_label(q, pa) && prev.has_label(q, pb))
                        .collect()
                }
                _ => unreachable!(),
            };
            Ok(finish(
                (**prev).clone(),
                labels,
                origin.to_vec(),
                None,
                Vec::new(),
            ))
        }
        CoreFormula::Know(ag, a) | CoreFormula::Next(ag, a) => {
            let coalition = coalition_of(prev, ag)?;
            let hat = split_capped(prev, &coalition, opts.state_cap)?;
            let p = prop(prev, &atom_of(a))?;
            let labels = if case == LabelCase::Knowledge {
                hat.label_knowledge(p)?
            } else {
                hat.label_next(&coalition, p)?
            };
            let orig = hat.base_of_map().iter().map(|&q| origin[q]).collect();
            Ok(finish(
                hat.arena.clone(),
                labels,
                orig,
                Some(hat),
                Vec::new(),
            ))
        }
        CoreFormula::Until(ag, a, b) | CoreFormula::WeakUntil(ag, a, b) => {
            let coalition = coalition_of(prev, ag)?;
            let hat = split_capped(prev, &coalition, opts.state_cap)?;
            let (p1, p2) = (prop(prev, &atom_of(a))?, prop(prev, &atom_of(b))?);
            let weak = case == LabelCase::WeakUntil;
            let run = |kid: KsetId| -> Result<KsetOutcome, AutomatonError> {
                let (aut, sol) = solve_kset(&hat, &coalition, p1, p2, hat.kset(kid), weak)?;
                Ok(KsetOutcome {
                    kset: kid,
                    automaton_states: aut.num_states(),
                    rounds: sol.rounds,
                    nonempty: sol.nonempty(),
                })
            };
            let ids: Vec<KsetId> = (0..hat.num_ksets()).map(KsetId).collect();
            let outcomes: Vec<KsetOutcome> = if opts.parallel {
                ids.par_iter()
                    .map(|&kid| run(kid))
                    .collect::<Result<_, _>>()?
            } else {
                ids.iter().map(|&kid| run(kid)).collect::<Result<_, _>>()?
            };
            let labels = hat
                .kset_of_map()
                .iter()
                .map(|k| outcomes[k.0].nonempty)
                .collect();
            let orig = hat.base_of_map().iter().map(|&q| origin[q]).collect();
            Ok(finish(hat.arena.clone(), labels, orig, Some(hat), outcomes))
        }
    }
}

fn coalition_of(g: &Arena, agents: &AgentSet) -> Result<Coalition, CheckError> {
    Ok(g.coalition(agents.iter())?)
}

/// Builds and solves the automaton for one kset.
pub fn solve_kset(
    hat: &HatArena,
    coalition: &Coalition,
    p1: PropId,
    p2: PropId,
    kset: &[StateId],
    weak: bool,
) -> Result<(TreeAutomaton, GameSolution), AutomatonError> {
    let aut = if weak {
        build_weak_until_automaton(hat, coalition, p1, p2, kset)?
    } else {
        build_until_automaton(hat, coalition, p1, p2, kset)?
    };
    let sol = solve(&aut);
    Ok((aut, sol))
}

/// A strategy witnessing the outermost until or weak-until step at the
/// first initial state where it holds, with the arena it is stated over.
pub fn witness(table: &LabelingTable) -> Result<Option<(Strategy, Arc<Arena>)>, CheckError> {
    let Some(level) = table
        .levels
        .iter()
        .rev()
        .find(|l| matches!(l.case, LabelCase::Until | LabelCase::WeakUntil))
    else {
        return Ok(None);
    };
    let hat = level.split.as_ref().expect("modal levels keep their split");
    let Some(&h) = level
        .arena
        .initial()
        .iter()
        .find(|&&h| level.arena.has_label(h, level.prop))
    else {
        return Ok(None);
    };
    let (ag, a, b) = match &level.reduced {
        CoreFormula::Until(ag, a, b) | CoreFormula::WeakUntil(ag, a, b) => (ag, a, b),
        _ => unreachable!(),
    };
    let prev = hat.base();
    let coalition = coalition_of(prev, ag)?;
    let pid = |f: &CoreFormula| match f {
        CoreFormula::Atom(x) => prev
            .prop_id(x)
            .ok_or_else(|| CheckError::UnknownAtom(x.clone())),
        _ => unreachable!(),
    };
    let (p1, p2) = (pid(a)?, pid(b)?);
    let kset = hat.kset(hat.kset_of(h)).to_vec();
    let (aut, sol) = solve_kset(
        hat,
        &coalition,
        p1,
        p2,
        &kset,
        level.case == LabelCase::WeakUntil,
    )?;
    let strategy =
        extract_witness_strategy(&aut, &sol, prev).expect("labeled kset has a nonempty automaton");
    Ok(Some((strategy, Arc::clone(prev))))
}

pub fn witness_document(table: &LabelingTable) -> Result<Option<StrategyDocument>, CheckError> {
    Ok(witness(table)?.map(|(s, g)| s.to_document(&g)))
}

/// Human-readable trace of every labeling step.
pub fn explain(verdict: &Verdict) -> String {
    let mut out = String::new();
    let t = &verdict.table;
    writeln!(out, "formula: {}", verdict.formula).unwrap();
    writeln!(out, "core:    {}", t.last().formula).unwrap();
    writeln!(out, "{}", t.base).unwrap();
    for l in &t.levels {
        write!(
            out,
            "{:>3}  {:<10}  {} := {:<28}  states {:>6}  labeled {:>6}",
            l.k,
            l.case.name(),
            fresh_atom(l.k),
            l.reduced.to_string(),
            l.arena.num_states(),
            l.labeled_count()
        )
        .unwrap();
        if let Some(h) = &l.split {
            write!(out, "  ksets {}", h.num_ksets()).unwrap();
        }
        if !l.ksets.is_empty() {
            let nonempty = l.ksets.iter().filter(|o| o.nonempty).count();
            let largest = l
                .ksets
                .iter()
                .map(|o| o.automaton_states)
                .max()
                .unwrap_or(0);
            write!(out, "  nonempty {nonempty}  largest automaton {largest}").unwrap();
        }
        writeln!(out).unwrap();
    }
    for &(q, b) in &verdict.initial {
        writeln!(out, "initial {}: {}", t.base.state_name(q), b).unwrap();
    }
    writeln!(
        out,
        "verdict: {}",
        if verdict.holds {
            "holds"
        } else {
            "does not hold"
        }
    )
    .unwrap();
    out
}
