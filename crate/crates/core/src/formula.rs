//! Formulas: surface syntax, desugaring to the primitive connectives, and the
//! subformula enumeration consumed by the labeling driver.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub type AgentSet = BTreeSet<String>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unknown operator `{op}` at {pos}")]
    UnknownOperator { pos: usize, op: String },
}

/// Temporal part of a coalition modality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathFormula {
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    WeakUntil(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// `<<A>> path` when `dual` is false, `[[A]] path` when true.
    Coalition {
        dual: bool,
        agents: AgentSet,
        path: PathFormula,
    },
    Know(AgentSet, Box<Formula>),
    Possible(AgentSet, Box<Formula>),
}

/// The primitive fragment: atoms, constants, negation, conjunction,
/// `<<A>>X`, `<<A>>U`, `<<A>>W` and `K_A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoreFormula {
    True,
    False,
    Atom(String),
    Not(Box<CoreFormula>),
    And(Box<CoreFormula>, Box<CoreFormula>),
    Next(AgentSet, Box<CoreFormula>),
    Until(AgentSet, Box<CoreFormula>, Box<CoreFormula>),
    WeakUntil(AgentSet, Box<CoreFormula>, Box<CoreFormula>),
    Know(AgentSet, Box<CoreFormula>),
}

fn agents_of(names: &[&str]) -> AgentSet {
    names.iter().map(|s| s.to_string()).collect()
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn know(agents: &[&str], f: Formula) -> Formula {
        Formula::Know(agents_of(agents), Box::new(f))
    }

    pub fn possible(agents: &[&str], f: Formula) -> Formula {
        Formula::Possible(agents_of(agents), Box::new(f))
    }

    pub fn modal(dual: bool, agents: &[&str], path: PathFormula) -> Formula {
        Formula::Coalition {
            dual,
            agents: agents_of(agents),
            path,
        }
    }

    pub fn next(agents: &[&str], f: Formula) -> Formula {
        Formula::modal(false, agents, PathFormula::Next(Box::new(f)))
    }

    pub fn until(agents: &[&str], a: Formula, b: Formula) -> Formula {
        Formula::modal(false, agents, PathFormula::Until(Box::new(a), Box::new(b)))
    }

    pub fn weak_until(agents: &[&str], a: Formula, b: Formula) -> Formula {
        Formula::modal(
            false,
            agents,
            PathFormula::WeakUntil(Box::new(a), Box::new(b)),
        )
    }

    pub fn eventually(agents: &[&str], f: Formula) -> Formula {
        Formula::modal(false, agents, PathFormula::Eventually(Box::new(f)))
    }

    pub fn always(agents: &[&str], f: Formula) -> Formula {
        Formula::modal(false, agents, PathFormula::Always(Box::new(f)))
    }

    /// Every coalition mentioned anywhere in the formula.
    pub fn agents(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Coalition { agents, .. }
            | Formula::Know(agents, _)
            | Formula::Possible(agents, _) => out.extend(agents.iter().cloned()),
            _ => {}
        });
        out
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(p) = f {
                out.insert(p.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => {}
            Formula::Not(a) | Formula::Know(_, a) | Formula::Possible(_, a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Coalition { path, .. } => match path {
                PathFormula::Next(a) | PathFormula::Eventually(a) | PathFormula::Always(a) => {
                    a.visit(f)
                }
                PathFormula::Until(a, b) | PathFormula::WeakUntil(a, b) => {
                    a.visit(f);
                    b.visit(f);
                }
            },
        }
    }
}

fn write_agents(f: &mut fmt::Formatter<'_>, agents: &AgentSet) -> fmt::Result {
    let names: Vec<&str> = agents.iter().map(String::as_str).collect();
    write!(f, "{}", names.join(","))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Not(a) => write!(f, "!{a}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Implies(a, b) => write!(f, "({a} -> {b})"),
            Formula::Know(ag, a) => {
                write!(f, "K{{")?;
                write_agents(f, ag)?;
                write!(f, "}} {a}")
            }
            Formula::Possible(ag, a) => {
                write!(f, "P{{")?;
                write_agents(f, ag)?;
                write!(f, "}} {a}")
            }
            Formula::Coalition { dual, agents, path } => {
                let (open, close) = if *dual { ("[", "]") } else { ("<", ">") };
                write!(f, "{open}")?;
                write_agents(f, agents)?;
                write!(f, "{close}")?;
                match path {
                    PathFormula::Next(a) => write!(f, "X {a}"),
                    PathFormula::Eventually(a) => write!(f, "F {a}"),
                    PathFormula::Always(a) => write!(f, "G {a}"),
                    PathFormula::Until(a, b) => write!(f, "({a} U {b})"),
                    PathFormula::WeakUntil(a, b) => write!(f, "({a} W {b})"),
                }
            }
        }
    }
}

impl fmt::Display for CoreFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreFormula::True => write!(f, "true"),
            CoreFormula::False => write!(f, "false"),
            CoreFormula::Atom(p) => write!(f, "{p}"),
            CoreFormula::Not(a) => write!(f, "!{a}"),
            CoreFormula::And(a, b) => write!(f, "({a} & {b})"),
            CoreFormula::Know(ag, a) => {
                write!(f, "K{{")?;
                write_agents(f, ag)?;
                write!(f, "}} {a}")
            }
            CoreFormula::Next(ag, a) => {
                write!(f, "<")?;
                write_agents(f, ag)?;
                write!(f, ">X {a}")
            }
            CoreFormula::Until(ag, a, b) => {
                write!(f, "<")?;
                write_agents(f, ag)?;
                write!(f, ">({a} U {b})")
            }
            CoreFormula::WeakUntil(ag, a, b) => {
                write!(f, "<")?;
                write_agents(f, ag)?;
                write!(f, ">({a} W {b})")
            }
        }
    }
}

impl CoreFormula {
    /// Converts back into the surface type (every core node is also a surface node).
    pub fn to_formula(&self) -> Formula {
        match self {
            CoreFormula::True => Formula::True,
            CoreFormula::False => Formula::False,
            CoreFormula::Atom(p) => Formula::Atom(p.clone()),
            CoreFormula::Not(a) => Formula::not(a.to_formula()),
            CoreFormula::And(a, b) => Formula::and(a.to_formula(), b.to_formula()),
            CoreFormula::Know(ag, a) => Formula::Know(ag.clone(), Box::new(a.to_formula())),
            CoreFormula::Next(ag, a) => Formula::Coalition {
                dual: false,
                agents: ag.clone(),
                path: PathFormula::Next(Box::new(a.to_formula())),
            },
            CoreFormula::Until(ag, a, b) => Formula::Coalition {
                dual: false,
                agents: ag.clone(),
                path: PathFormula::Until(Box::new(a.to_formula()), Box::new(b.to_formula())),
            },
            CoreFormula::WeakUntil(ag, a, b) => Formula::Coalition {
                dual: false,
                agents: ag.clone(),
                path: PathFormula::WeakUntil(Box::new(a.to_formula()), Box::new(b.to_formula())),
            },
        }
    }

    pub fn children(&self) -> Vec<&CoreFormula> {
        match self {
            CoreFormula::True | CoreFormula::False | CoreFormula::Atom(_) => vec![],
            CoreFormula::Not(a) | CoreFormula::Next(_, a) | CoreFormula::Know(_, a) => vec![a],
            CoreFormula::And(a, b)
            | CoreFormula::Until(_, a, b)
            | CoreFormula::WeakUntil(_, a, b) => vec![a, b],
        }
    }

    pub fn is_modal(&self) -> bool {
        matches!(
            self,
            CoreFormula::Next(..)
                | CoreFormula::Until(..)
                | CoreFormula::WeakUntil(..)
                | CoreFormula::Know(..)
        )
    }

    /// Number of modal connectives in the tree.
    pub fn modal_count(&self) -> usize {
        usize::from(self.is_modal())
            + self
                .children()
                .iter()
                .map(|c| c.modal_count())
                .sum::<usize>()
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            if let CoreFormula::Atom(p) = f {
                out.insert(p.clone());
            }
            stack.extend(f.children());
        }
        out
    }
}

fn core_not(f: CoreFormula) -> CoreFormula {
    CoreFormula::Not(Box::new(f))
}

fn core_and(a: CoreFormula, b: CoreFormula) -> CoreFormula {
    CoreFormula::And(Box::new(a), Box::new(b))
}

/// Rewrites the abbreviations into primitive connectives. Each identity is
/// applied literally, without boolean simplification.
pub fn desugar(f: &Formula) -> CoreFormula {
    match f {
        Formula::True => CoreFormula::True,
        Formula::False => CoreFormula::False,
        Formula::Atom(p) => CoreFormula::Atom(p.clone()),
        Formula::Not(a) => core_not(desugar(a)),
        Formula::And(a, b) => core_and(desugar(a), desugar(b)),
        // a | b = !(!a & !b)
        Formula::Or(a, b) => core_not(core_and(core_not(desugar(a)), core_not(desugar(b)))),
        // a -> b = !(a & !b)
        Formula::Implies(a, b) => core_not(core_and(desugar(a), core_not(desugar(b)))),
        Formula::Know(ag, a) => CoreFormula::Know(ag.clone(), Box::new(desugar(a))),
        Formula::Possible(ag, a) => core_not(CoreFormula::Know(
            ag.clone(),
            Box::new(core_not(desugar(a))),
        )),
        Formula::Coalition {
            dual: false,
            agents,
            path,
        } => desugar_angle(agents, path),
        Formula::Coalition {
            dual: true,
            agents,
            path,
        } => desugar_box(agents, path),
    }
}

/// Splits a path into (left operand, right operand, weak); `X` has no left operand.
fn path_operands(path: &PathFormula) -> (Option<CoreFormula>, CoreFormula, bool) {
    match path {
        PathFormula::Next(a) => (None, desugar(a), false),
        PathFormula::Until(a, b) => (Some(desugar(a)), desugar(b), false),
        PathFormula::WeakUntil(a, b) => (Some(desugar(a)), desugar(b), true),
        PathFormula::Eventually(a) => (Some(CoreFormula::True), desugar(a), false),
        PathFormula::Always(a) => (Some(desugar(a)), CoreFormula::False, true),
    }
}

fn desugar_angle(agents: &AgentSet, path: &PathFormula) -> CoreFormula {
    match path_operands(path) {
        (None, a, _) => CoreFormula::Next(agents.clone(), Box::new(a)),
        (Some(a), b, false) => CoreFormula::Until(agents.clone(), Box::new(a), Box::new(b)),
        (Some(a), b, true) => CoreFormula::WeakUntil(agents.clone(), Box::new(a), Box::new(b)),
    }
}

fn desugar_box(agents: &AgentSet, path: &PathFormula) -> CoreFormula {
    let ag = agents.clone();
    match path_operands(path) {
        // [[A]]X a = !<<A>>X !a
        (None, a, _) => core_not(CoreFormula::Next(ag, Box::new(core_not(a)))),
        // [[A]](a U b) = !<<A>>(!b W (!b & !a))
        (Some(a), b, false) => core_not(CoreFormula::WeakUntil(
            ag,
            Box::new(core_not(b.clone())),
            Box::new(core_and(core_not(b), core_not(a))),
        )),
        // [[A]](a W b) = !<<A>>(!b U (!b & !a))
        (Some(a), b, true) => core_not(CoreFormula::Until(
            ag,
            Box::new(core_not(b.clone())),
            Box::new(core_and(core_not(b), core_not(a))),
        )),
    }
}

/// One entry `phi_k` of the enumeration, with its reduced form `chi_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subformula {
    pub formula: CoreFormula,
    /// `phi_k` with each immediate subformula replaced by its fresh atom.
    pub reduced: CoreFormula,
    /// 0-based indices of the immediate subformulas.
    pub children: Vec<usize>,
}

/// Postorder, deduplicated enumeration `phi_1 .. phi_n` with `phi_n` the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubformulaList {
    pub entries: Vec<Subformula>,
}

/// Name of the fresh prop for the `k`-th (1-based) subformula.
pub fn fresh_atom(k: usize) -> String {
    format!("p#{k}")
}

impl SubformulaList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self) -> &Subformula {
        self.entries.last().expect("enumeration is never empty")
    }
}

pub fn enumerate_subformulas(f: &CoreFormula) -> SubformulaList {
    fn go(
        f: &CoreFormula,
        seen: &mut HashMap<CoreFormula, usize>,
        out: &mut Vec<Subformula>,
    ) -> usize {
        if let Some(&i) = seen.get(f) {
            return i;
        }
        let children: Vec<usize> = f.children().into_iter().map(|c| go(c, seen, out)).collect();
        let atom = |i: usize| Box::new(CoreFormula::Atom(fresh_atom(i + 1)));
        let reduced = match f {
            CoreFormula::True | CoreFormula::False | CoreFormula::Atom(_) => f.clone(),
            CoreFormula::Not(_) => CoreFormula::Not(atom(children[0])),
            CoreFormula::And(..) => CoreFormula::And(atom(children[0]), atom(children[1])),
            CoreFormula::Next(ag, _) => CoreFormula::Next(ag.clone(), atom(children[0])),
            CoreFormula::Know(ag, _) => CoreFormula::Know(ag.clone(), atom(children[0])),
            CoreFormula::Until(ag, ..) => {
                CoreFormula::Until(ag.clone(), atom(children[0]), atom(children[1]))
            }
            CoreFormula::WeakUntil(ag, ..) => {
                CoreFormula::WeakUntil(ag.clone(), atom(children[0]), atom(children[1]))
            }
        };
        let idx = out.len();
        out.push(Subformula {
            formula: f.clone(),
            reduced,
            children,
        });
        seen.insert(f.clone(), idx);
        idx
    }
    let mut seen = HashMap::new();
    let mut entries = Vec::new();
    go(f, &mut seen, &mut entries);
    SubformulaList { entries }
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Not => write!(f, "`!`"),
            Tok::And => write!(f, "`&`"),
            Tok::Or => write!(f, "`|`"),
            Tok::Arrow => write!(f, "`->`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LAngle => write!(f, "`<`"),
            Tok::RAngle => write!(f, "`>`"),
            Tok::LBracket => write!(f, "`[`"),
            Tok::RBracket => write!(f, "`]`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::End => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match ch {
            '!' => Some(Tok::Not),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' => Some(Tok::LAngle),
            '>' => Some(Tok::RAngle),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((i, t));
            i += 1;
        } else if ch == '-' && bytes.get(i + 1) == Some(&b'>') {
            out.push((i, Tok::Arrow));
            i += 2;
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
            {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let start = i;
            while i < bytes.len()
                && !(bytes[i] as char).is_ascii_alphanumeric()
                && !(bytes[i] as char).is_ascii_whitespace()
            {
                i += 1;
            }
            let op = text.get(start..i.max(start + 1)).unwrap_or("?").to_string();
            return Err(ParseError::UnknownOperator { pos: start, op });
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let (pos, tok) = &self.toks[self.pos];
        ParseError::Syntax {
            pos: *pos,
            expected: expected.to_string(),
            found: tok.to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = Formula::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = Formula::and(lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn agents(&mut self, close: Tok, what: &str) -> Result<AgentSet, ParseError> {
        let mut out = AgentSet::new();
        if *self.peek() == close {
            self.bump();
            return Ok(out);
        }
        loop {
            match self.bump() {
                Tok::Ident(name) => {
                    out.insert(name);
                }
                _ => {
                    self.pos -= 1;
                    return Err(self.error("agent name"));
                }
            }
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                t if *t == close => {
                    self.bump();
                    return Ok(out);
                }
                _ => return Err(self.error(what)),
            }
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Not => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Ident(k) if (k == "K" || k == "P") && *self.peek_at(1) == Tok::LBrace => {
                self.bump();
                self.bump();
                let agents = self.agents(Tok::RBrace, "`,` or `}`")?;
                let body = Box::new(self.unary()?);
                Ok(if k == "K" {
                    Formula::Know(agents, body)
                } else {
                    Formula::Possible(agents, body)
                })
            }
            Tok::LAngle => {
                self.bump();
                let agents = self.agents(Tok::RAngle, "`,` or `>`")?;
                let path = self.tail()?;
                Ok(Formula::Coalition {
                    dual: false,
                    agents,
                    path,
                })
            }
            Tok::LBracket => {
                self.bump();
                let agents = self.agents(Tok::RBracket, "`,` or `]`")?;
                let path = self.tail()?;
                Ok(Formula::Coalition {
                    dual: true,
                    agents,
                    path,
                })
            }
            _ => self.atomish(),
        }
    }

    fn tail(&mut self) -> Result<PathFormula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(op) if op == "X" || op == "F" || op == "G" => {
                self.bump();
                let body = Box::new(self.unary()?);
                Ok(match op.as_str() {
                    "X" => PathFormula::Next(body),
                    "F" => PathFormula::Eventually(body),
                    _ => PathFormula::Always(body),
                })
            }
            Tok::LParen => {
                self.bump();
                let lhs = Box::new(self.formula()?);
                let weak = match self.peek() {
                    Tok::Ident(op) if op == "U" => false,
                    Tok::Ident(op) if op == "W" => true,
                    _ => return Err(self.error("`U` or `W`")),
                };
                self.bump();
                let rhs = Box::new(self.formula()?);
                self.expect(Tok::RParen, "`)`")?;
                Ok(if weak {
                    PathFormula::WeakUntil(lhs, rhs)
                } else {
                    PathFormula::Until(lhs, rhs)
                })
            }
            _ => Err(self.error("`X`, `F`, `G` or `(`")),
        }
    }

    fn atomish(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(match name.as_str() {
                    "true" => Formula::True,
                    "false" => Formula::False,
                    _ => Formula::Atom(name),
                })
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            _ => Err(self.error("formula")),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(p.error("end of input"));
    }
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}
