use std::collections::BTreeSet;
use std::sync::Arc;

use atldk::checker::{model_check, witness, CheckOptions};
use atldk::emptiness::check_until_nonempty;
use atldk::epistemic_split::split;
use atldk::formula::parse_formula;
use atldk::strategy_automata::{build_until_automaton, AutomatonState};
use atldk::Arena;

fn alicebob() -> Arc<Arena> {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/arenas/alicebob.json"))
            .unwrap();
    Arc::new(Arena::from_json(&text).unwrap())
}

fn names(g: &Arena, set: &[usize]) -> Vec<String> {
    set.iter().map(|&q| g.state_name(q).to_string()).collect()
}

#[test]
fn shape() {
    let g = alicebob();
    assert_eq!(g.num_states(), 16);
    assert_eq!(g.num_joint_actions(), 25);
    let sink = g.state_id("sink").unwrap();
    assert!(g.labels(sink).is_empty());
    assert_eq!(g.successors(g.state_id("q12").unwrap(), 0), &[sink]);
}

#[test]
fn observations() {
    let g = alicebob();
    let alice = g.coalition(["Alice"]).unwrap();
    let obs = |q: &str| -> BTreeSet<&str> {
        g.obs(&alice, g.state_id(q).unwrap())
            .iter()
            .map(|&p| g.prop_name(p))
            .collect()
    };
    assert_eq!(obs("q4"), BTreeSet::from(["tx_a", "valid", "y_a"]));
    assert_eq!(obs("q1"), BTreeSet::from(["valid"]));
    let both = g.coalition(["Alice", "Bob"]).unwrap();
    assert!(g.obs(&both, g.state_id("q1").unwrap()) == g.obs(&both, g.state_id("q2").unwrap()));
}

#[test]
fn split_by_both_agents() {
    let g = alicebob();
    let ab = g.coalition(["Alice", "Bob"]).unwrap();
    let h = split(&g, &ab);
    assert_eq!(h.num_states(), 16);
    let big: Vec<Vec<String>> = h
        .ksets()
        .filter(|(_, s)| s.len() > 1)
        .map(|(_, s)| names(&g, s))
        .collect();
    assert_eq!(big, vec![vec!["q1".to_string(), "q2".into(), "q3".into()]]);
    for q in ["q1", "q2", "q3"] {
        let k = h.kset_id(&[1, 2, 3]).unwrap();
        assert!(h.hat_state(g.state_id(q).unwrap(), k).is_some());
    }
    // every other base state carries exactly its singleton
    for h_state in 0..h.num_states() {
        let b = h.base_of(h_state);
        if ![1, 2, 3].contains(&b) {
            assert_eq!(h.kset(h.kset_of(h_state)), &[b]);
        }
    }
}

#[test]
fn verdicts() {
    let g = alicebob();
    let opts = CheckOptions::default();
    let both = parse_formula("<Alice,Bob>(valid U (c & s))").unwrap();
    let v = model_check(&g, &both, &opts).unwrap();
    assert!(v.holds);
    assert_eq!(v.initial.len(), 1);
    let alone = parse_formula("<Alice>(valid U (c & s))").unwrap();
    assert!(!model_check(&g, &alone, &opts).unwrap().holds);
    let bob = parse_formula("<Bob>(valid U (c & s))").unwrap();
    assert!(!model_check(&g, &bob, &opts).unwrap().holds);
}

#[test]
fn goal_automaton_discharges_at_q12() {
    let g = alicebob();
    let ab = g.coalition(["Alice", "Bob"]).unwrap();
    let goal: Vec<bool> = (0..g.num_states())
        .map(|q| g.has_label(q, g.prop_id("c").unwrap()) && g.has_label(q, g.prop_id("s").unwrap()))
        .collect();
    let all = vec![true; g.num_states()];
    let (g1, top) = g.with_fresh_prop("top", &all);
    let (g2, cs) = g1.with_fresh_prop("cs", &goal);
    let g2 = Arc::new(g2);
    let h = split(&g2, &ab);
    let q0 = g2.state_id("q0").unwrap();
    let aut = build_until_automaton(&h, &ab, top, cs, &[q0]).unwrap();
    let sol = check_until_nonempty(&aut).unwrap();
    assert!(sol.nonempty());
    let q12 = g2.state_id("q12").unwrap();
    let target = AutomatonState::Pair {
        pending: vec![],
        kset: vec![q12],
    };
    assert!(aut.index_of(&target).is_some());
    // follow the chosen actions: every branch ends in (empty, {q12})
    let mut frontier = vec![aut.initial()];
    let mut steps = 0;
    while let Some(s) = frontier.pop() {
        if aut.state(s).is_discharged() {
            assert_eq!(aut.state(s), &target);
            continue;
        }
        let ca = sol.choice[s].unwrap();
        frontier.extend_from_slice(aut.successors(s, ca));
        steps += 1;
        assert!(steps < 100);
    }
}

#[test]
fn witness_starts_with_guess_and_picks_least_action() {
    let g = alicebob();
    let f = parse_formula("<Alice,Bob>(valid U (c & s))").unwrap();
    let v = model_check(&g, &f, &CheckOptions::default()).unwrap();
    let (strategy, arena) = witness(&v.table).unwrap().unwrap();
    let doc = strategy.to_document(&arena);
    assert_eq!(doc.coalition, ["Alice", "Bob"]);
    let first = doc.map.iter().find(|e| e.history.len() == 1).unwrap();
    assert_eq!(first.history, vec![vec!["valid".to_string()]]);
    assert_eq!(first.action["Alice"], "g");
    assert_eq!(first.action["Bob"], "g");
    // at q10 both agents see tx; (tc,ds) is the least winning action
    let at_q10 = doc
        .map
        .iter()
        .find(|e| {
            e.history.len() == 4
                && e.history[2].contains(&"x_a".to_string())
                && e.history[2].contains(&"x_b".to_string())
        })
        .unwrap();
    assert_eq!(
        (
            at_q10.action["Alice"].as_str(),
            at_q10.action["Bob"].as_str()
        ),
        ("tc", "ds")
    );
}

#[test]
fn fast_enough() {
    let g = alicebob();
    let f = parse_formula("<Alice,Bob>(valid U (c & s))").unwrap();
    let start = std::time::Instant::now();
    assert!(model_check(&g, &f, &CheckOptions::default()).unwrap().holds);
    assert!(start.elapsed().as_secs_f64() < 5.0);
}
