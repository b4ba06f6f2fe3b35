mod common;

use common::*;
use mdpst::automata::{fixture_dra, fixture_ldba, Automaton};
use mdpst::hexworld::{decode_state, default_layout, generate_hexworld, HexConfig, Orientation};
use mdpst::montecarlo::{simulate, NatureMode, SimConfig};
use mdpst::synthesis::{solve, SynthOptions};

fn solve_both(cfg: &HexConfig) -> (f64, f64) {
    let m = generate_hexworld(cfg).unwrap();
    let l = Automaton::Ldba(fixture_ldba(&persist_avoid()).unwrap());
    let d = Automaton::Dra(fixture_dra(&persist_avoid()).unwrap());
    let a = solve(&m, &l, &SynthOptions::default()).unwrap().0.report.value;
    let b = solve(&m, &d, &SynthOptions::default()).unwrap().0.report.value;
    (a, b)
}

#[test]
fn ldba_and_dra_agree() {
    for (nx, ny) in [(10, 5), (16, 8)] {
        let (a, b) = solve_both(&HexConfig::new(default_layout(nx, ny).unwrap()));
        assert!((a - b).abs() < 1e-3, "{nx}x{ny}: {a} vs {b}");
    }
}

#[test]
fn default_small_value_is_set_by_the_start_obstacle() {
    let layout = default_layout(10, 5).unwrap();
    assert!(layout.obstacles.contains(&layout.cell(1, 2)));
    let (a, _) = solve_both(&HexConfig::new(layout));
    assert!((a - 0.15 / 0.85).abs() < 1e-3, "{a}");
}

#[test]
fn hexworld_shape() {
    let cfg = HexConfig::new(default_layout(10, 5).unwrap());
    let m = generate_hexworld(&cfg).unwrap();
    assert_eq!(m.num_states(), 200);
    assert_eq!(decode_state(m.initial()), (0, Orientation::N));
    for s in 0..m.num_states() {
        assert_eq!(m.choices(s).len(), 4);
        for c in m.choices(s) {
            let total: f64 = c.outcomes.iter().map(|o| o.prob).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn runs_from_inside_the_region_satisfy() {
    let mut layout = default_layout(10, 5).unwrap();
    layout.obstacles.clear();
    let m = generate_hexworld(&HexConfig::new(layout)).unwrap();
    let aut = Automaton::Ldba(fixture_ldba(&persist_avoid()).unwrap());
    let (sol, strat) = solve(&m, &aut, &SynthOptions::default()).unwrap();
    assert!((sol.report.value - 1.0).abs() < 1e-9);
    for nature in [NatureMode::Random, NatureMode::Adversarial] {
        let mut cfg = SimConfig::new(10_000, 500, 7);
        cfg.windows = (2, 200);
        cfg.nature = nature;
        let runs = simulate(&m, &aut, &strat, &cfg).unwrap();
        let frac = runs.iter().filter(|r| r.satisfied).count() as f64 / runs.len() as f64;
        assert!(frac >= 0.99, "{nature:?}: {frac}");
    }
}
