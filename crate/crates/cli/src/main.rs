use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mdpst::automata::{automaton_to_json, fixture_dra, fixture_ldba, Automaton, FixtureKind};
use mdpst::hexworld::{default_layout, generate_hexworld, HexConfig, HexLayout, ACTIONS};
use mdpst::io::{canonical_json, model_from_json, model_to_json};
use mdpst::montecarlo::{hex_trajectory_csv, simulate, trajectory, NatureMode, SimConfig, SimReport};
use mdpst::oracle::{brute_force_value_from, Objective};
use mdpst::product::ProductMdpst;
use mdpst::synthesis::{build, solve, MdpstStrategy, SynthOptions};
use mdpst::winning_region::{winning_region, Classifier, WrOptions};

#[derive(Parser)]
#[command(name = "mdpst", version, about = "Robust LTL strategy synthesis for MDPs with set-valued transitions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Qualitative,
    Numeric,
}

#[derive(Clone, Copy, ValueEnum)]
enum NatureArg {
    Random,
    Adversarial,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Buchi,
    Reach,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureArg {
    Gf,
    GfConj,
    PersistAvoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ldba,
    Dra,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a model file and report every problem found.
    Validate { model: PathBuf },
    /// Build the product of a model and an automaton (HOA or JSON).
    Product {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        automaton: PathBuf,
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Winning region of a product.
    Wr {
        #[arg(long)]
        product: PathBuf,
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "qualitative")]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = 1e-3)]
        theta: f64,
        #[arg(long, default_value_t = 1e-2)]
        kappa: f64,
    },
    /// Synthesise a strategy for a model and an automaton.
    Synth {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        automaton: PathBuf,
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        theta: f64,
        #[arg(long)]
        round_robin: bool,
    },
    /// Generate a hexagonal grid-world model.
    Hexworld {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        /// Layout JSON to use instead of the default layout.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Also write the layout used.
        #[arg(long)]
        layout_out: Option<PathBuf>,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
    /// Monte Carlo evaluation of a strategy.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        automaton: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "random")]
        nature: NatureArg,
        /// Satisfaction windows as `m,w`.
        #[arg(long, default_value = "5,200")]
        windows: String,
        #[arg(short = 'o', long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the trajectory of run 0 as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Exhaustive max-min value of a small product.
    Oracle {
        #[arg(long)]
        product: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        /// Product state ids; defaults to the accepting states.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        targets: Vec<usize>,
        #[arg(long)]
        from: Option<usize>,
    },
    /// Write one of the built-in automata as JSON.
    Fixture {
        #[arg(long, value_enum)]
        kind: FixtureArg,
        #[arg(long, value_enum, default_value = "ldba")]
        automaton: KindArg,
        /// Goal groups, `|`-separated atoms within a group, `,` between groups.
        #[arg(long, default_value = "b1|b2,b3,b4|b5")]
        goals: String,
        #[arg(long, default_value = "obs")]
        avoid: String,
        #[arg(short = 'o', long)]
        out: PathBuf,
    },
}

type Fallible<T> = Result<T, String>;

fn read(path: &Path) -> Fallible<String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, v: &Value) -> Fallible<()> {
    fs::write(path, canonical_json(v)).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Fallible<()> {
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_model(path: &Path) -> Fallible<mdpst::model::MdpstModel> {
    model_from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_automaton(path: &Path) -> Fallible<Automaton> {
    Automaton::load(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_product(path: &Path) -> Fallible<ProductMdpst> {
    ProductMdpst::from_json(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cmd: Cmd) -> Fallible<()> {
    match cmd {
        Cmd::Validate { model } => {
            let m = load_model(&model)?;
            println!(
                "ok: {} states, {} actions, {} transitions{}",
                m.num_states(),
                m.actions().len(),
                m.num_transitions(),
                if m.is_classical_mdp() { " (classical MDP)" } else { "" }
            );
        }
        Cmd::Product { model, automaton, out, dot } => {
            let m = load_model(&model)?;
            let a = load_automaton(&automaton)?;
            let p = build(&m, &a).map_err(|e| e.to_string())?;
            write_json(&out, &p.to_json())?;
            if let Some(d) = dot {
                write_text(&d, &p.to_dot())?;
            }
            println!("product: {} states, {} transitions", p.num_states(), p.model.num_transitions());
        }
        Cmd::Wr { product, out, classifier, theta, kappa } => {
            let p = load_product(&product)?;
            if !(theta > 0.0) {
                return Err("theta must be positive".into());
            }
            let opts = WrOptions {
                theta,
                classifier: match classifier {
                    ClassifierArg::Qualitative => Classifier::Qualitative,
                    ClassifierArg::Numeric => Classifier::Numeric { kappa },
                },
                ..WrOptions::default()
            };
            let w = winning_region(&p, &opts);
            write_json(&out, &w.to_json(&p))?;
            for warning in &w.warnings {
                eprintln!("warning: {warning}");
            }
            println!("winning region: {} states after {} iterations", w.states.len(), w.iterations.len());
        }
        Cmd::Synth { model, automaton, out, report, theta, round_robin } => {
            let m = load_model(&model)?;
            let a = load_automaton(&automaton)?;
            if !(theta > 0.0) {
                return Err("theta must be positive".into());
            }
            let mut opts = SynthOptions {
                round_robin,
                ..SynthOptions::default()
            };
            opts.wr.theta = theta;
            let (sol, strat) = solve(&m, &a, &opts).map_err(|e| e.to_string())?;
            write_json(&out, &strat.to_json())?;
            if let Some(r) = report {
                let mut v = serde_json::to_value(&sol.report).expect("report serializes");
                v["warnings"] = json!(sol.region.warnings);
                write_json(&r, &v)?;
            }
            println!(
                "value {:.6}; product {} states; winning region {} states",
                sol.report.value, sol.report.product_states, sol.report.wr_size
            );
        }
        Cmd::Hexworld { nx, ny, layout, layout_out, out } => {
            let l = match layout {
                Some(path) => {
                    let l = HexLayout::from_json(&read(&path)?).map_err(|e| format!("{}: {e}", path.display()))?;
                    if (l.nx, l.ny) != (nx, ny) {
                        return Err(format!("layout is {}x{}, not {nx}x{ny}", l.nx, l.ny));
                    }
                    l
                }
                None => default_layout(nx, ny).map_err(|e| e.to_string())?,
            };
            let m = generate_hexworld(&HexConfig::new(l.clone())).map_err(|e| e.to_string())?;
            write_json(&out, &model_to_json(&m))?;
            if let Some(path) = layout_out {
                write_json(&path, &l.to_json())?;
            }
            println!("hexworld {nx}x{ny}: {} states, obstacles {:?}", m.num_states(), l.obstacles);
        }
        Cmd::Simulate {
            model,
            automaton,
            strategy,
            runs,
            steps,
            seed,
            nature,
            windows,
            out,
            csv,
            trajectory: traj,
        } => {
            let m = load_model(&model)?;
            let a = load_automaton(&automaton)?;
            let s = MdpstStrategy::from_json(&read(&strategy)?).map_err(|e| format!("{}: {e}", strategy.display()))?;
            let (mw, w) = windows
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| format!("bad --windows {windows:?}, expected m,w"))?;
            let cfg = SimConfig {
                runs,
                horizon: steps,
                seed,
                nature: match nature {
                    NatureArg::Random => NatureMode::Random,
                    NatureArg::Adversarial => NatureMode::Adversarial,
                },
                windows: (mw, w),
            };
            let verdicts = simulate(&m, &a, &s, &cfg).map_err(|e| e.to_string())?;
            let report = SimReport::new(&cfg, s.value, verdicts);
            write_json(&out, &report.to_json())?;
            if let Some(path) = csv {
                write_text(&path, &report.to_csv())?;
            }
            if let Some(path) = traj {
                let (_, trace) = trajectory(&m, &a, &s, &cfg, 0).map_err(|e| e.to_string())?;
                let is_hex = m.actions().iter().map(String::as_str).eq(ACTIONS);
                let text = if is_hex {
                    hex_trajectory_csv(&trace)
                } else {
                    let mut t = String::from("step,state,q,action\n");
                    for st in &trace {
                        t.push_str(&format!(
                            "{},{},{},{}\n",
                            st.step,
                            st.state,
                            st.q,
                            st.action.as_deref().unwrap_or("")
                        ));
                    }
                    t
                };
                write_text(&path, &text)?;
            }
            println!(
                "satisfied {}/{} ({:.4}); strategy value {:.6}",
                report.satisfied, report.runs, report.fraction, report.value
            );
        }
        Cmd::Oracle { product, objective, targets, from } => {
            let p = load_product(&product)?;
            let set = if targets.is_empty() {
                p.accepting.clone()
            } else {
                targets.into_iter().collect()
            };
            if let Some(&bad) = set.iter().find(|&&t| t >= p.num_states()) {
                return Err(format!("target {bad} out of range"));
            }
            let obj = match objective {
                ObjectiveArg::Buchi => Objective::Buchi(set),
                ObjectiveArg::Reach => Objective::Reach(set),
            };
            let start = from.unwrap_or(p.initial());
            if start >= p.num_states() {
                return Err(format!("state {start} out of range"));
            }
            let v = brute_force_value_from(&p, &obj, start).map_err(|e| e.to_string())?;
            println!("value {v:.6}");
        }
        Cmd::Fixture { kind, automaton, goals, avoid, out } => {
            let groups: Vec<Vec<String>> = goals
                .split(',')
                .map(|g| g.split('|').map(|a| a.trim().to_string()).filter(|a| !a.is_empty()).collect())
                .collect();
            let kind = match kind {
                FixtureArg::Gf => FixtureKind::Gf(groups.concat().first().cloned().ok_or("no goal atom")?),
                FixtureArg::GfConj => FixtureKind::GfConj(groups.concat()),
                FixtureArg::PersistAvoid => FixtureKind::PersistAvoid {
                    groups,
                    avoid: Some(avoid).filter(|a| !a.is_empty()),
                },
            };
            let a = match automaton {
                KindArg::Ldba => Automaton::Ldba(fixture_ldba(&kind).map_err(|e| e.to_string())?),
                KindArg::Dra => Automaton::Dra(fixture_dra(&kind).map_err(|e| e.to_string())?),
            };
            write_json(&out, &automaton_to_json(&a))?;
            println!("{}: {} states", kind.formula(), a.num_states());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("MDPST_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
