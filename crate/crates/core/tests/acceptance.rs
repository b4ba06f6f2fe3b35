//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! of them failed.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::*;
use mdpst::automata::{fixture_dra, fixture_ldba, Automaton, FixtureKind};
use mdpst::hexworld::{default_layout, generate_hexworld, HexConfig};
use mdpst::ltl::{parse_ltl, eval_lasso, Lasso};
use mdpst::model::LabelSet;
use mdpst::montecarlo::{simulate, SimConfig};
use mdpst::oracle::{brute_force_value, brute_force_value_from, mdp_buchi_region, sample_lassos, Objective};
use mdpst::product::{build_product, build_product_dra};
use mdpst::synthesis::{solve, solve_product, SynthOptions};
use mdpst::winning_region::{
    compute_winning_region, qualitative_as_reach, robust_reach_vi, split_accepting, prune_relevant, Classifier,
};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond { Ok(ok.into()) } else { Err(bad.into()) }
}

fn opts(theta: f64) -> SynthOptions {
    SynthOptions {
        wr: tight(theta),
        round_robin: false,
    }
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let p = appendix_b();
    let wr = compute_winning_region(&p, &tight(1e-9));
    let first = wr.iterations.first().ok_or("no iterations")?;
    if first.values.contains_key("S10") || first.retained != 9 {
        return Err(format!("pruning kept S10 (retained {})", first.retained));
    }
    let want = [
        ("S1", 0.8),
        ("S2", 1.0),
        ("S3", 1.0),
        ("S4^out", 1.0),
        ("S5^out", 0.0),
        ("S6", 0.0),
        ("S7", 0.0),
        ("S8", 0.0),
        ("S9", 0.94),
    ];
    for (name, v) in want {
        let got = *first.values.get(name).ok_or(format!("no value for {name}"))?;
        if (got - v).abs() > 1e-6 {
            return Err(format!("iteration 1: V({name}) = {got}, expected {v}"));
        }
    }
    let names: BTreeSet<String> = wr.states.iter().map(|&s| p.model.state_name(s)).collect();
    let expected: BTreeSet<String> = ["S2", "S3", "S4"].map(String::from).into();
    if wr.iterations.len() != 2 || names != expected {
        return Err(format!("{} iterations, region {names:?}", wr.iterations.len()));
    }
    let sol = solve_product(p, &opts(1e-9)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(
        (sol.report.value - 0.8).abs() < 1e-6 && elapsed < Duration::from_secs(1),
        format!("2 iterations, region {{S2,S3,S4}}, V(S1) = {:.6}, {elapsed:.2?}", sol.report.value),
        format!("V(S1) = {}, {elapsed:.2?}", sol.report.value),
    )
}

fn product_sizes() -> Outcome {
    let m = generate_hexworld(&HexConfig::new(default_layout(10, 5).map_err(|e| e.to_string())?))
        .map_err(|e| e.to_string())?;
    let ldba = fixture_ldba(&persist_avoid()).map_err(|e| e.to_string())?;
    let dra = fixture_dra(&persist_avoid()).map_err(|e| e.to_string())?;
    let a = build_product(&m, &ldba).map_err(|e| e.to_string())?.num_states();
    let b = build_product_dra(&m, &dra).map_err(|e| e.to_string())?.num_states();
    check(
        ldba.num_states() == 4 && dra.num_states() == 8 && a == 800 && b == 1600,
        format!("LDBA product {a} states, DRA product {b} states"),
        format!("LDBA ({} states) product {a}, DRA ({} states) product {b}", ldba.num_states(), dra.num_states()),
    )
}

fn scaling() -> Outcome {
    let kind = persist_avoid();
    let auts = [
        Automaton::Ldba(fixture_ldba(&kind).map_err(|e| e.to_string())?),
        Automaton::Dra(fixture_dra(&kind).map_err(|e| e.to_string())?),
    ];
    let mut times = [Vec::new(), Vec::new()];
    let mut notes = Vec::new();
    for (nx, ny) in [(10, 5), (16, 8), (20, 10)] {
        let m = generate_hexworld(&HexConfig::new(default_layout(nx, ny).map_err(|e| e.to_string())?))
            .map_err(|e| e.to_string())?;
        for (k, aut) in auts.iter().enumerate() {
            let mut best = Duration::MAX;
            let mut value = 0.0;
            let mut wr = 0;
            for _ in 0..5 {
                let t = Instant::now();
                let (sol, _) = solve(&m, aut, &SynthOptions::default()).map_err(|e| e.to_string())?;
                best = best.min(t.elapsed());
                value = sol.report.value;
                wr = sol.report.wr_size;
            }
            if !(value > 0.0 && value <= 1.0) || wr == 0 {
                return Err(format!("{nx}x{ny}: value {value}, region size {wr}"));
            }
            times[k].push(best);
        }
        notes.push(format!("{nx}x{ny} {:.0?}/{:.0?}", times[0].last().unwrap(), times[1].last().unwrap()));
    }
    let monotone = times.iter().all(|t| t.windows(2).all(|w| w[0] <= w[1]));
    let ldba_faster = times[0].iter().zip(&times[1]).all(|(a, b)| a < b);
    check(
        monotone && ldba_faster,
        format!("LDBA/DRA synthesis times {}", notes.join(", ")),
        format!("times not ordered: {}", notes.join(", ")),
    )
}

const ORACLE_INSTANCES: u64 = 200;

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..ORACLE_INSTANCES {
        let p = random_product(seed, false);
        let oracle = brute_force_value(&p, &Objective::Buchi(p.accepting.clone())).map_err(|e| e.to_string())?;
        let sol = solve_product(p, &opts(1e-12)).map_err(|e| e.to_string())?;
        let diff = (sol.report.value - oracle).abs();
        worst = worst.max(diff);
        if diff > 1e-6 {
            return Err(format!("seed {seed}: solve {} vs oracle {oracle}", sol.report.value));
        }
    }
    Ok(format!("{ORACLE_INSTANCES} instances, max difference {worst:.1e}"))
}

fn classical_degeneration() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let p = random_product(10_000 + seed, true);
        let reach = forward_reachable(&p);
        let expected: BTreeSet<usize> = mdp_buchi_region(&p.model, &p.accepting)
            .intersection(&reach)
            .copied()
            .collect();
        let obj = Objective::Buchi(p.accepting.clone());
        let oracle: Vec<(usize, f64)> = reach
            .iter()
            .map(|&s| brute_force_value_from(&p, &obj, s).map(|v| (s, v)))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let sol = solve_product(p, &opts(1e-12)).map_err(|e| e.to_string())?;
        if sol.region.states != expected {
            return Err(format!("seed {seed}: region {:?} vs oracle {expected:?}", sol.region.states));
        }
        for (s, v) in oracle {
            let diff = (sol.strategy.values.values[s] - v).abs();
            worst = worst.max(diff);
            if diff > 1e-6 {
                return Err(format!("seed {seed}: value at {s} {} vs oracle {v}", sol.strategy.values.values[s]));
            }
        }
    }
    Ok(format!("100 instances, regions equal, max value difference {worst:.1e}"))
}

fn refinement() -> Outcome {
    let mut gained = 0;
    for seed in 0..50 {
        let p = random_product(20_000 + seed, false);
        let r = refine(&p, seed);
        let v = solve_product(p, &opts(1e-12)).map_err(|e| e.to_string())?.report.value;
        let w = solve_product(r, &opts(1e-12)).map_err(|e| e.to_string())?.report.value;
        if w < v - 1e-9 {
            return Err(format!("seed {seed}: refined value {w} below {v}"));
        }
        if w > v + 1e-9 {
            gained += 1;
        }
    }
    Ok(format!("50 instances, never lower ({gained} strictly higher)"))
}

fn robustness() -> Outcome {
    let m = generate_hexworld(&HexConfig::new(default_layout(10, 5).map_err(|e| e.to_string())?))
        .map_err(|e| e.to_string())?;
    let aut = Automaton::Ldba(fixture_ldba(&persist_avoid()).map_err(|e| e.to_string())?);
    let (sol, strat) = solve(&m, &aut, &SynthOptions::default()).map_err(|e| e.to_string())?;
    let runs = simulate(&m, &aut, &strat, &SimConfig::new(1000, 2000, 42)).map_err(|e| e.to_string())?;
    let frac = runs.iter().filter(|r| r.satisfied).count() as f64 / runs.len() as f64;
    let value = sol.report.value;
    check(
        frac >= value - 0.03,
        format!("satisfied {frac:.3} vs value {value:.4}"),
        format!("satisfied {frac:.3} below value {value:.4} - 0.03"),
    )
}

fn all_lassos(max_len: usize) -> Vec<Lasso> {
    let letter = |bit: bool| -> LabelSet {
        if bit { ["a"].into_iter().collect() } else { LabelSet::new() }
    };
    let mut out = Vec::new();
    for total in 1..=max_len {
        for stem in 0..total {
            for bits in 0..(1u32 << total) {
                let word: Vec<LabelSet> = (0..total).map(|i| letter(bits >> i & 1 == 1)).collect();
                out.push(Lasso::new(word[..stem].to_vec(), word[stem..].to_vec()));
            }
        }
    }
    out
}

fn language() -> Outcome {
    let kind = persist_avoid();
    let phi = parse_ltl(&kind.formula()).map_err(|e| e.to_string())?;
    let ldba = fixture_ldba(&kind).map_err(|e| e.to_string())?;
    let dra = fixture_dra(&kind).map_err(|e| e.to_string())?;
    let lassos = sample_lassos(&ldba.ap, 12, 1000, 2024).map_err(|e| e.to_string())?;
    let mut bad = 0;
    for w in &lassos {
        let truth = eval_lasso(&phi, w);
        bad += usize::from(ldba.accepts_lasso(w) != truth) + usize::from(dra.accepts_lasso(w) != truth);
    }
    let short = all_lassos(6);
    for k in [FixtureKind::Gf("a".into()), FixtureKind::GfConj(vec!["a".into()])] {
        let f = parse_ltl(&k.formula()).map_err(|e| e.to_string())?;
        let l = fixture_ldba(&k).map_err(|e| e.to_string())?;
        let d = fixture_dra(&k).map_err(|e| e.to_string())?;
        for w in &short {
            let truth = eval_lasso(&f, w);
            bad += usize::from(l.accepts_lasso(w) != truth) + usize::from(d.accepts_lasso(w) != truth);
        }
    }
    check(
        bad == 0,
        format!("1000 sampled lassos and {} exhaustive short lassos, no disagreement", short.len()),
        format!("{bad} disagreements"),
    )
}

fn classifier_agreement() -> Outcome {
    for seed in 0..ORACLE_INSTANCES {
        let p = random_product(seed, false);
        let sub = prune_relevant(&p, &p.accepting, &BTreeSet::new());
        let split = split_accepting(&p, &sub, &p.accepting.iter().copied().filter(|&s| sub.retained[s]).collect());
        let qual = qualitative_as_reach(&split.arena, &split.targets).set();
        let vf = robust_reach_vi(&split.arena, &split.targets, 1e-9, 10_000_000);
        let numeric: BTreeSet<usize> = (0..split.len()).filter(|&i| vf.values[i] >= 1.0 - 1e-2).collect();
        if qual != numeric {
            return Err(format!("seed {seed}: qualitative {qual:?} vs numeric {numeric:?}"));
        }
        let mut numeric_opts = tight(1e-9);
        numeric_opts.classifier = Classifier::Numeric { kappa: 1e-2 };
        let a = compute_winning_region(&p, &tight(1e-9)).states;
        let b = compute_winning_region(&p, &numeric_opts).states;
        if a != b {
            return Err(format!("seed {seed}: regions differ, {a:?} vs {b:?}"));
        }
    }
    Ok(format!("{ORACLE_INSTANCES} instances, prob-1 sets and regions identical"))
}

fn main() -> std::process::ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("golden ten-state example", golden_example),
        ("product sizing", product_sizes),
        ("hexworld scaling", scaling),
        ("oracle equivalence", oracle_equivalence),
        ("classical MDP degeneration", classical_degeneration),
        ("refinement monotonicity", refinement),
        ("robustness under sampled natures", robustness),
        ("fixture language correctness", language),
        ("classifier agreement", classifier_agreement),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(msg) => println!("[{}] {name}: PASS ({msg})", i + 1),
            Err(msg) => {
                println!("[{}] {name}: FAIL ({msg})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", criteria.len(), criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
