//! Seeded generators for arenas and formulas, used by tests and the CLI.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arena::{Arena, ArenaBuilder};
use crate::formula::{Formula, PathFormula};

#[derive(Debug, Clone)]
pub struct RandomArenaConfig {
    pub max_states: usize,
    pub agents: usize,
    pub max_actions: usize,
    pub props: usize,
    /// Every prop observed by every agent, every state a distinct label set.
    pub fully_observable: bool,
}

impl Default for RandomArenaConfig {
    fn default() -> Self {
        RandomArenaConfig {
            max_states: 4,
            agents: 2,
            max_actions: 2,
            props: 3,
            fully_observable: false,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn prop_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

pub fn agent_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

pub fn random_arena(seed: u64, cfg: &RandomArenaConfig) -> Arena {
    let mut r = rng(seed);
    let props = prop_names(cfg.props);
    let max_states = if cfg.fully_observable {
        cfg.max_states.min(1 << cfg.props)
    } else {
        cfg.max_states
    };
    let n = r.gen_range(1..=max_states.max(1));
    let mut b = ArenaBuilder::new();
    let mut observed = vec![false; props.len()];
    let mut sizes = Vec::with_capacity(cfg.agents);
    for (i, name) in agent_names(cfg.agents).iter().enumerate() {
        let k = r.gen_range(1..=cfg.max_actions.max(1));
        sizes.push(k);
        let actions: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let acts: Vec<&str> = actions.iter().map(String::as_str).collect();
        let obs: Vec<&str> = props
            .iter()
            .enumerate()
            .filter(|_| cfg.fully_observable || r.gen_bool(0.5))
            .map(|(j, p)| {
                observed[j] = true;
                p.as_str()
            })
            .collect();
        b.agent(name, &acts, &obs)
            .unwrap_or_else(|e| panic!("agent {i}: {e}"));
    }
    for (j, p) in props.iter().enumerate() {
        if !observed[j] {
            b.hidden_prop(p).expect("fresh prop");
        }
    }
    let label_sets: Vec<Vec<&str>> = if cfg.fully_observable {
        let mut masks: Vec<usize> = (0..1usize << props.len()).collect();
        masks.shuffle(&mut r);
        masks[..n]
            .iter()
            .map(|m| {
                props
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| m & (1 << j) != 0)
                    .map(|(_, p)| p.as_str())
                    .collect()
            })
            .collect()
    } else {
        (0..n)
            .map(|_| {
                props
                    .iter()
                    .filter(|_| r.gen_bool(0.5))
                    .map(String::as_str)
                    .collect()
            })
            .collect()
    };
    for (q, labels) in label_sets.iter().enumerate() {
        b.state(&format!("s{q}"), labels).expect("fresh state");
    }
    let initial: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.5)).collect();
    if initial.is_empty() {
        b.initial(0);
    }
    for q in initial {
        b.initial(q);
    }
    let joints: usize = sizes.iter().product();
    for q in 0..n {
        for c in 0..joints {
            let mut targets: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.4)).collect();
            if targets.is_empty() {
                targets.push(r.gen_range(0..n));
            }
            let joint = decode(&sizes, c);
            for t in targets {
                b.transition(q, &joint, t);
            }
        }
    }
    b.build().expect("generated arena is valid")
}

fn decode(sizes: &[usize], mut c: usize) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, &k) in out.iter_mut().zip(sizes).rev() {
        *slot = c % k;
        c /= k;
    }
    out
}

/// Random boolean combination of the given atoms, of depth at most `depth`.
pub fn random_boolean<R: Rng>(r: &mut R, atoms: &[String], depth: usize) -> Formula {
    if depth == 0 || r.gen_bool(0.3) {
        return match r.gen_range(0..10) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms.choose(r).expect("at least one atom")),
        };
    }
    match r.gen_range(0..3) {
        0 => Formula::not(random_boolean(r, atoms, depth - 1)),
        1 => Formula::and(
            random_boolean(r, atoms, depth - 1),
            random_boolean(r, atoms, depth - 1),
        ),
        _ => Formula::or(
            random_boolean(r, atoms, depth - 1),
            random_boolean(r, atoms, depth - 1),
        ),
    }
}

/// Random formula over all surface connectives, with at most `modal` modalities.
pub fn random_formula<R: Rng>(
    r: &mut R,
    atoms: &[String],
    agents: &[String],
    modal: usize,
) -> Formula {
    if modal == 0 {
        return random_boolean(r, atoms, 2);
    }
    let coalition: Vec<&str> = agents
        .iter()
        .filter(|_| r.gen_bool(0.6))
        .map(String::as_str)
        .collect();
    let left = modal / 2;
    let right = modal - 1 - left;
    let sub = |r: &mut R, m: usize| random_formula(r, atoms, agents, m);
    let dual = r.gen_bool(0.3);
    match r.gen_range(0..8) {
        0 => Formula::know(&coalition, sub(r, modal - 1)),
        1 => Formula::possible(&coalition, sub(r, modal - 1)),
        2 => Formula::modal(
            dual,
            &coalition,
            PathFormula::Next(Box::new(sub(r, modal - 1))),
        ),
        3 => Formula::modal(
            dual,
            &coalition,
            PathFormula::Until(Box::new(sub(r, left)), Box::new(sub(r, right))),
        ),
        4 => Formula::modal(
            dual,
            &coalition,
            PathFormula::WeakUntil(Box::new(sub(r, left)), Box::new(sub(r, right))),
        ),
        5 => Formula::modal(
            dual,
            &coalition,
            PathFormula::Eventually(Box::new(sub(r, modal - 1))),
        ),
        6 => Formula::modal(
            dual,
            &coalition,
            PathFormula::Always(Box::new(sub(r, modal - 1))),
        ),
        _ => Formula::and(sub(r, left), Formula::not(sub(r, modal - left))),
    }
}
