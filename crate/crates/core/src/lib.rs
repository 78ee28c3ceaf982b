//! Model checking for ATL with distributed knowledge over concurrent game
//! arenas with imperfect information and perfect recall.

pub mod arena;
pub mod checker;
pub mod emptiness;
pub mod epistemic_split;
pub mod formula;
pub mod random;
pub mod strategy_automata;

pub use arena::{Arena, ArenaBuilder, ArenaError, Coalition, Run, Strategy};
pub use checker::{explain, model_check, CheckError, CheckOptions, LabelCase, Verdict};
pub use epistemic_split::{split, split_capped, HatArena, KsetId, DEFAULT_STATE_CAP};
pub use formula::{desugar, parse_formula, CoreFormula, Formula};
pub use strategy_automata::{AcceptanceKind, AutomatonState, TreeAutomaton};
