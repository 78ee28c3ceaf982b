//! `atldk`: command-line front end for the ATL model checker.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use atldk::arena::{Arena, Coalition};
use atldk::checker::{
    explain, label, model_check, solve_kset, witness_document, CheckOptions, LabelCase, Verdict,
};
use atldk::emptiness::{
    generic_occurrence_emptiness, occurrence_condition, solve, DEFAULT_ORACLE_GUARD,
};
use atldk::epistemic_split::{split_capped, HatArena, DEFAULT_STATE_CAP};
use atldk::formula::{parse_formula, CoreFormula, Formula};
use atldk::random::{random_arena, RandomArenaConfig};
use atldk::strategy_automata::{
    build_until_automaton, build_weak_until_automaton, AutomatonState, TreeAutomaton,
};

const EXIT_DIVERGENCE: u8 = 3;

// stdout writes that tolerate a closed pipe, so `atldk ... | head` exits quietly
macro_rules! out {
    ($($t:tt)*) => { emit(&format!($($t)*)) };
}

macro_rules! outln {
    ($($t:tt)*) => { emit(&(format!($($t)*) + "\n")) };
}

fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

#[derive(Debug, Parser)]
#[command(
    name = "atldk",
    version,
    about = "Model checker for ATL with distributed knowledge under imperfect information"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Debug, Args)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    /// Maximum number of states of any refined arena.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP, global = true)]
    state_cap: usize,
    /// Maximum automaton size for the generic occurrence oracle.
    #[arg(long, default_value_t = DEFAULT_ORACLE_GUARD, global = true)]
    oracle_guard: usize,
    /// Seed for random-batch oracle runs.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
    /// Write every intermediate arena as JSON into this directory.
    #[arg(long, global = true)]
    dump_arenas: Option<PathBuf>,
    /// Write the witness strategy of a positive verdict to this file.
    #[arg(long, global = true)]
    witness: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Json,
    Dot,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether a formula holds at every initial state.
    Check(FormulaArgs),
    /// Refine an arena by a coalition's knowledge.
    Split(SplitArgs),
    /// Build the goal automaton for one kset.
    Automaton(AutomatonArgs),
    /// Cross-check the game solvers against the generic occurrence oracle.
    Oracle(OracleArgs),
    /// Print every labeling step of a check.
    Explain(FormulaArgs),
}

#[derive(Debug, Args)]
struct FormulaInput {
    /// Formula text.
    #[arg(long)]
    formula: Option<String>,
    /// File holding the formula; takes precedence over --formula.
    #[arg(long)]
    formula_file: Option<PathBuf>,
}

impl FormulaInput {
    fn text(&self) -> Result<Option<String>> {
        if let Some(path) = &self.formula_file {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(Some(text.trim().to_string()));
        }
        Ok(self.formula.clone())
    }

    fn parse(&self) -> Result<Formula> {
        let text = self
            .text()?
            .ok_or_else(|| anyhow!("a formula is required (--formula or --formula-file)"))?;
        parse_formula(&text).map_err(|e| anyhow!("formula: {e}"))
    }
}

#[derive(Debug, Args)]
struct FormulaArgs {
    /// Arena JSON file.
    #[arg(long)]
    arena: PathBuf,
    #[command(flatten)]
    formula: FormulaInput,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    arena: PathBuf,
    /// Comma-separated agent names.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    coalition: Vec<String>,
    /// Write the refined arena document here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GoalKind {
    Until,
    Weak,
}

#[derive(Debug, Args)]
struct AutomatonArgs {
    #[arg(long)]
    arena: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    coalition: Vec<String>,
    /// Comma-separated base state names; defaults to the kset of the first initial state.
    #[arg(long, value_delimiter = ',')]
    kset: Vec<String>,
    /// Left goal operand, a propositional formula.
    #[arg(long, default_value = "true")]
    p1: String,
    /// Right goal operand, a propositional formula.
    #[arg(long)]
    p2: String,
    #[arg(long, value_enum, default_value_t = GoalKind::Until)]
    kind: GoalKind,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    /// Arena JSON file; omit to run on a seeded batch of random arenas.
    #[arg(long)]
    arena: Option<PathBuf>,
    #[command(flatten)]
    formula: FormulaInput,
    /// Number of random arenas in batch mode.
    #[arg(long, default_value_t = 50)]
    count: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Check(args) => cmd_check(g, args),
        Command::Split(args) => cmd_split(g, args),
        Command::Automaton(args) => cmd_automaton(g, args),
        Command::Oracle(args) => cmd_oracle(g, args),
        Command::Explain(args) => cmd_explain(g, args),
    }
}

fn load_arena(path: &Path) -> Result<Arena> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Arena::from_json(&text).with_context(|| format!("loading arena {}", path.display()))
}

fn options(g: &Global) -> CheckOptions {
    CheckOptions {
        state_cap: g.state_cap,
        ..CheckOptions::default()
    }
}

fn coalition(arena: &Arena, names: &[String]) -> Result<Coalition> {
    let names: Vec<&str> = names
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .collect();
    Ok(arena.coalition(names)?)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn dump_levels(dir: &Path, verdict: &Verdict) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_json(&dir.join("level_0.json"), &verdict.table.base.to_document())?;
    for l in &verdict.table.levels {
        write_json(
            &dir.join(format!("level_{}.json", l.k)),
            &l.arena.to_document(),
        )?;
    }
    Ok(())
}

fn cmd_check(g: &Global, args: &FormulaArgs) -> Result<u8> {
    let arena = load_arena(&args.arena)?;
    let formula = args.formula.parse()?;
    let verdict = model_check(&arena, &formula, &options(g))?;
    if let Some(dir) = &g.dump_arenas {
        dump_levels(dir, &verdict)?;
    }
    if let Some(path) = &g.witness {
        match witness_document(&verdict.table)? {
            Some(doc) => write_json(path, &doc)?,
            None => eprintln!("no witness: no until or weak-until step holds at an initial state"),
        }
    }
    match g.format {
        Format::Human => out!("{}", level_table(&verdict)),
        Format::Json => outln!("{}", verdict.to_json()),
        Format::Dot => bail!("dot output is available for split and automaton"),
    }
    Ok(if verdict.holds { 0 } else { 1 })
}

fn level_table(v: &Verdict) -> String {
    let mut out = format!("formula  {}\n", v.formula);
    out.push_str(&format!(
        "{:>4}  {:<10}  {:>8}  {:>8}\n",
        "k", "case", "states", "labeled"
    ));
    for l in &v.table.levels {
        out.push_str(&format!(
            "{:>4}  {:<10}  {:>8}  {:>8}\n",
            l.k,
            l.case.name(),
            l.arena.num_states(),
            l.labeled_count()
        ));
    }
    for &(q, b) in &v.initial {
        out.push_str(&format!("initial {}: {}\n", v.table.base.state_name(q), b));
    }
    out.push_str(if v.holds {
        "HOLDS\n"
    } else {
        "DOES NOT HOLD\n"
    });
    out
}

fn cmd_explain(g: &Global, args: &FormulaArgs) -> Result<u8> {
    let arena = load_arena(&args.arena)?;
    let formula = args.formula.parse()?;
    let verdict = model_check(&arena, &formula, &options(g))?;
    if let Some(dir) = &g.dump_arenas {
        dump_levels(dir, &verdict)?;
    }
    match g.format {
        Format::Human => out!("{}", explain(&verdict)),
        Format::Json => {
            let levels: Vec<_> = verdict
                .table
                .levels
                .iter()
                .map(|l| {
                    json!({
                        "k": l.k,
                        "case": l.case,
                        "reduced": l.reduced.to_string(),
                        "subformula": l.formula.to_string(),
                        "states": l.arena.num_states(),
                        "labeled": l.labeled_count(),
                        "ksets": l.split.as_ref().map(|h| h.num_ksets()),
                        "nonempty_ksets": l.ksets.iter().filter(|o| o.nonempty).count(),
                    })
                })
                .collect();
            let doc = json!({ "holds": verdict.holds, "formula": verdict.formula.to_string(), "levels": levels });
            outln!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Dot => bail!("dot output is available for split and automaton"),
    }
    Ok(0)
}

fn kset_list(h: &HatArena) -> Vec<Vec<String>> {
    h.ksets().map(|(k, _)| h.kset_names(k)).collect()
}

fn cmd_split(g: &Global, args: &SplitArgs) -> Result<u8> {
    let arena = Arc::new(load_arena(&args.arena)?);
    let a = coalition(&arena, &args.coalition)?;
    let h = split_capped(&arena, &a, g.state_cap)?;
    if let Some(path) = &args.out {
        write_json(path, &h.arena.to_document())?;
    }
    let ksets = kset_list(&h);
    match g.format {
        Format::Human => {
            outln!("hat states: {}", h.num_states());
            outln!("ksets: {}", ksets.len());
            let largest = ksets.iter().map(Vec::len).max().unwrap_or(0);
            outln!("largest kset: {largest}");
            for k in ksets.iter().filter(|k| k.len() > 1) {
                outln!("kset {{{}}}", k.join(","));
            }
        }
        Format::Json => {
            let doc = json!({
                "states": h.num_states(),
                "non_singleton": ksets.iter().filter(|k| k.len() > 1).count(),
                "ksets": ksets,
            });
            outln!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Format::Dot => out!("{}", arena_dot(&h.arena)),
    }
    Ok(0)
}

fn arena_dot(g: &Arena) -> String {
    let mut out = String::from("digraph arena {\n  node [shape=ellipse];\n");
    for q in 0..g.num_states() {
        let labels: Vec<&str> = g.labels(q).iter().map(|&p| g.prop_name(p)).collect();
        let label = format!("{}\n{}", g.state_name(q), labels.join(","));
        let style = if g.is_initial(q) { ", penwidth=2" } else { "" };
        out.push_str(&format!("  n{q} [label={label:?}{style}];\n"));
    }
    for q in 0..g.num_states() {
        let mut by_target: std::collections::BTreeMap<usize, Vec<String>> = Default::default();
        for c in 0..g.num_joint_actions() {
            for &t in g.successors(q, c) {
                by_target.entry(t).or_default().push(g.format_joint(c));
            }
        }
        for (t, acts) in by_target {
            out.push_str(&format!("  n{q} -> n{t} [label={:?}];\n", acts.join(" ")));
        }
    }
    out.push_str("}\n");
    out
}

/// Adds a hidden prop holding where a propositional formula holds.
fn goal_prop(arena: &Arena, text: &str, name: &str) -> Result<(Arena, usize)> {
    let f = parse_formula(text).map_err(|e| anyhow!("goal `{text}`: {e}"))?;
    let table = label(
        arena,
        &f,
        &CheckOptions {
            parallel: false,
            ..CheckOptions::default()
        },
    )?;
    if table.levels.iter().any(|l| l.case.is_modal()) {
        bail!("goal `{text}` must be propositional");
    }
    Ok(arena.with_fresh_prop(name, &table.last().labels()))
}

fn cmd_automaton(g: &Global, args: &AutomatonArgs) -> Result<u8> {
    let base = load_arena(&args.arena)?;
    let a = coalition(&base, &args.coalition)?;
    let (with_p1, p1) = goal_prop(&base, &args.p1, "goal#1")?;
    let (with_p2, p2) = goal_prop(&with_p1, &args.p2, "goal#2")?;
    let arena = Arc::new(with_p2);
    let h = split_capped(&arena, &a, g.state_cap)?;
    let kset = if args.kset.is_empty() {
        let first = h.arena.initial()[0];
        h.kset(h.kset_of(first)).to_vec()
    } else {
        let mut ids = args
            .kset
            .iter()
            .map(|n| {
                arena
                    .state_id(n.trim())
                    .ok_or_else(|| anyhow!("unknown state `{n}`"))
            })
            .collect::<Result<Vec<_>>>()?;
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let aut = match args.kind {
        GoalKind::Until => build_until_automaton(&h, &a, p1, p2, &kset)?,
        GoalKind::Weak => build_weak_until_automaton(&h, &a, p1, p2, &kset)?,
    };
    let sol = solve(&aut);
    let verdict = if sol.nonempty() { "NONEMPTY" } else { "EMPTY" };
    let text = match g.format {
        Format::Dot => aut.to_dot(&arena, Some(sol.nonempty())),
        Format::Json => {
            serde_json::to_string_pretty(&automaton_json(&aut, &arena, sol.nonempty())?)? + "\n"
        }
        Format::Human => automaton_text(&aut, &arena, &sol.winning) + verdict + "\n",
    };
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            outln!("{verdict}");
        }
        None => out!("{text}"),
    }
    Ok(0)
}

fn state_text(s: &AutomatonState, g: &Arena) -> String {
    let set = |v: &[usize]| {
        v.iter()
            .map(|&q| g.state_name(q))
            .collect::<Vec<_>>()
            .join(",")
    };
    match s {
        AutomatonState::Bot => "⊥".into(),
        AutomatonState::Pair { pending, kset } => {
            format!("({{{}}}, {{{}}})", set(pending), set(kset))
        }
    }
}

fn automaton_text(aut: &TreeAutomaton, g: &Arena, winning: &[bool]) -> String {
    let view = g.view(aut.coalition());
    let mut out = format!(
        "{} states, initial {}\n",
        aut.num_states(),
        state_text(aut.state(aut.initial()), g)
    );
    for (i, s) in aut.states().iter().enumerate() {
        let mark = if winning[i] { "+" } else { " " };
        out.push_str(&format!("{mark} s{i} {}\n", state_text(s, g)));
        if s.is_bot() {
            continue;
        }
        for ca in 0..aut.num_actions() {
            let succ: Vec<String> = aut
                .successors(i, ca)
                .iter()
                .map(|t| format!("s{t}"))
                .collect();
            out.push_str(&format!(
                "      {} -> {}\n",
                view.format_action(ca),
                succ.join(" ")
            ));
        }
    }
    out
}

fn automaton_json(aut: &TreeAutomaton, g: &Arena, nonempty: bool) -> Result<serde_json::Value> {
    let view = g.view(aut.coalition());
    let names = |v: &[usize]| {
        v.iter()
            .map(|&q| g.state_name(q).to_string())
            .collect::<Vec<_>>()
    };
    let states: Vec<_> = aut
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let transitions: Vec<_> = if s.is_bot() {
                Vec::new()
            } else {
                (0..aut.num_actions())
                    .map(|ca| json!({ "action": view.action_document(ca), "to": aut.successors(i, ca) }))
                    .collect()
            };
            json!({
                "id": i,
                "bot": s.is_bot(),
                "pending": s.pending().map(names),
                "kset": s.kset().map(names),
                "transitions": transitions,
            })
        })
        .collect();
    Ok(json!({
        "kind": format!("{:?}", aut.kind()),
        "nonempty": nonempty,
        "initial": aut.initial(),
        "states": states,
    }))
}

struct OracleTally {
    automata: usize,
    divergences: Vec<String>,
    guarded: usize,
}

/// Re-solves every until and weak-until automaton of a check with the generic oracle.
fn oracle_arena(
    arena: &Arena,
    formula: &Formula,
    g: &Global,
    tally: &mut OracleTally,
) -> Result<()> {
    let table = label(arena, formula, &options(g))?;
    for level in &table.levels {
        let (ag, a, b) = match &level.reduced {
            CoreFormula::Until(ag, a, b) | CoreFormula::WeakUntil(ag, a, b) => (ag, a, b),
            _ => continue,
        };
        let weak = level.case == LabelCase::WeakUntil;
        let h = level.split.as_ref().expect("modal levels keep their split");
        let prev = h.base();
        let pid = |f: &CoreFormula| {
            prev.prop_id(&f.to_string())
                .ok_or_else(|| anyhow!("missing prop {f}"))
        };
        let (p1, p2) = (pid(a)?, pid(b)?);
        let a = prev.coalition(ag.iter())?;
        for (k, set) in h.ksets() {
            let (aut, sol) = solve_kset(h, &a, p1, p2, set, weak)?;
            match generic_occurrence_emptiness(&aut, occurrence_condition(&aut), g.oracle_guard) {
                Ok(reference) => {
                    tally.automata += 1;
                    if reference != sol.nonempty() {
                        tally.divergences.push(format!(
                            "level {} kset {:?}",
                            level.k,
                            h.kset_names(k)
                        ));
                    }
                }
                Err(_) => tally.guarded += 1,
            }
        }
    }
    Ok(())
}

fn cmd_oracle(g: &Global, args: &OracleArgs) -> Result<u8> {
    let formula = args.formula.parse()?;
    let mut tally = OracleTally {
        automata: 0,
        divergences: Vec::new(),
        guarded: 0,
    };
    let arenas = if args.arena.is_some() { 1 } else { args.count };
    match &args.arena {
        Some(path) => oracle_arena(&load_arena(path)?, &formula, g, &mut tally)?,
        None => {
            for i in 0..args.count {
                let arena = random_arena(g.seed.wrapping_add(i), &RandomArenaConfig::default());
                oracle_arena(&arena, &formula, g, &mut tally)?;
            }
        }
    }
    let agree = tally.divergences.is_empty();
    match g.format {
        Format::Json => {
            let doc = json!({
                "arenas": arenas,
                "automata": tally.automata,
                "guard_exceeded": tally.guarded,
                "divergences": tally.divergences,
                "agree": agree,
            });
            outln!("{}", serde_json::to_string_pretty(&doc)?);
        }
        _ => {
            outln!(
                "arenas {arenas}, automata {}, guard exceeded {}",
                tally.automata,
                tally.guarded
            );
            for d in &tally.divergences {
                outln!("DIVERGENCE {d}");
            }
            outln!("{}", if agree { "AGREE" } else { "DIVERGE" });
        }
    }
    if !agree {
        return Ok(EXIT_DIVERGENCE);
    }
    if tally.guarded > 0 {
        bail!(
            "oracle guard {} exceeded on {} automata",
            g.oracle_guard,
            tally.guarded
        );
    }
    Ok(0)
}
