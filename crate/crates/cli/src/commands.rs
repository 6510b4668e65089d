use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use nashplan::batch::{run_monte_carlo, summarize, BenchStats};
use nashplan::game::{build_potential_ocp, nash_gap, GameDefinition, NashGapReport};
use nashplan::ilqr;
use nashplan::par::with_jobs;
use nashplan::runner::{self, goal_errors, min_pairwise_distance, MpcLog};
use nashplan::scenarios::{self, MonteCarloConfig, ScenarioConfig};

use crate::args::GlobalArgs;
use crate::io::{self, ControlsFile, MpcRunReport, PlanRecord, SolveRunReport};
use crate::plot::{self, PlannedPath};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_GAP_EXCEEDED: i32 = 3;

fn jobs(g: &GlobalArgs) -> usize {
    g.jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn scenario(g: &GlobalArgs, fallback: Option<&str>) -> Result<ScenarioConfig> {
    let mut cfg = match (&g.scenario, g.builtin.as_deref().or(fallback)) {
        (Some(path), _) => scenarios::load_file(path)?,
        (None, Some(name)) => scenarios::builtin(name)?,
        (None, None) => bail!("no scenario given: pass --scenario <path> or --builtin <name>"),
    };
    if let Some(d) = g.duration {
        cfg.timing.duration_s = d;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn scenario_name(cfg: &ScenarioConfig, g: &GlobalArgs) -> String {
    cfg.name.clone().or_else(|| g.scenario.as_ref().map(|p| p.display().to_string())).unwrap_or_else(|| "scenario".into())
}

fn out_dir(g: &GlobalArgs) -> Result<&Path> {
    std::fs::create_dir_all(&g.out).with_context(|| format!("cannot create {}", g.out.display()))?;
    Ok(&g.out)
}

fn goal_positions(cfg: &ScenarioConfig) -> Vec<(f64, f64)> {
    cfg.agents.iter().map(|a| (a.goal[0], a.goal[1])).collect()
}

fn write_plot(path: &Path, csv: &Path, cfg: &ScenarioConfig, plans: &[PlannedPath]) -> Result<()> {
    let table = io::read_trajectory_csv(csv)?;
    let svg = plot::trajectory_svg(&table, Some(&goal_positions(cfg)), plans);
    std::fs::write(path, svg).with_context(|| format!("cannot write {}", path.display()))
}

fn print_gaps(report: &NashGapReport) {
    println!("agent  equilibrium_cost  best_response_cost  relative_gap");
    for a in &report.agents {
        println!(
            "{:>5}  {:>16.6}  {:>18.6}  {:>12.3e}",
            a.agent, a.equilibrium_cost, a.best_response_cost, a.relative_gap
        );
    }
}

fn verify(game: &GameDefinition, controls: &[nalgebra::DVector<f64>], cfg: &ScenarioConfig, g: &GlobalArgs) -> Result<NashGapReport> {
    let x0 = cfg.initial_state();
    Ok(with_jobs(jobs(g), |exec| nash_gap(game, controls, &x0, &cfg.solver, exec))?)
}

pub fn solve(g: &GlobalArgs) -> Result<i32> {
    let cfg = scenario(g, None)?;
    let game = cfg.full_game()?;
    let ocp = build_potential_ocp(&game)?;
    let x0 = cfg.initial_state();
    let sol = match ilqr::solve(&ocp, &x0, None, &cfg.solver) {
        Ok(sol) => sol,
        Err(e) => {
            eprintln!("solve failed: {e}");
            return Ok(EXIT_NOT_CONVERGED);
        }
    };
    let nash = if g.verify { Some(verify(&game, &sol.controls, &cfg, g)?) } else { None };

    let dir = out_dir(g)?;
    let csv = dir.join("trajectory.csv");
    io::write_trajectory_csv(&csv, game.layout(), game.dt(), &sol.trajectory.states, &sol.controls)?;
    io::write_json(&dir.join("controls.json"), &ControlsFile::new(game.dt(), &sol.controls))?;
    let states = &sol.trajectory.states;
    let report = SolveRunReport {
        scenario: scenario_name(&cfg, g),
        agents: game.num_agents(),
        horizon: game.horizon(),
        dt: game.dt(),
        solve: sol.report.clone(),
        nash: nash.clone(),
        min_distance: states.iter().map(|x| min_pairwise_distance(&game, x)).fold(f64::INFINITY, f64::min),
        final_goal_errors: goal_errors(&game, states.last().unwrap()),
    };
    io::write_json(&dir.join("report.json"), &report)?;
    if g.plot {
        write_plot(&dir.join("trajectory.svg"), &csv, &cfg, &[])?;
    }

    println!(
        "{}: {} after {} iterations, cost {:.6}",
        report.scenario,
        if sol.report.converged { "converged" } else { "not converged" },
        sol.report.iterations,
        sol.report.final_cost()
    );
    if let Some(n) = &nash {
        print_gaps(n);
    }
    Ok(if sol.report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn planned_paths(cfg: &ScenarioConfig, game: &GameDefinition, log: &MpcLog) -> Vec<PlannedPath> {
    let layout = game.layout();
    let mut out = Vec::new();
    for r in &log.replans {
        for i in 0..cfg.agents.len() {
            let off = layout.state_range(i).start;
            out.push(PlannedPath {
                agent: i,
                points: r.planned_states.iter().map(|x| (x[off], x[off + 1])).collect(),
            });
        }
    }
    out
}

pub fn mpc(g: &GlobalArgs) -> Result<i32> {
    let cfg = scenario(g, None)?;
    let game = cfg.game(cfg.plan_horizon_steps())?;
    let log = runner::run(&game, &cfg.initial_state(), &cfg.mpc_config())?;

    let dir = out_dir(g)?;
    let csv = dir.join("trajectory.csv");
    io::write_trajectory_csv(&csv, game.layout(), game.dt(), &log.states, &log.controls)?;
    let report = MpcRunReport::new(scenario_name(&cfg, g), cfg.plan_horizon_steps(), &log);
    io::write_json(&dir.join("report.json"), &report)?;
    if g.keep_plans {
        let plans: Vec<PlanRecord> = log
            .replans
            .iter()
            .map(|r| PlanRecord {
                step: r.step,
                states: r.planned_states.iter().map(|x| x.as_slice().to_vec()).collect(),
                controls: r.planned_controls.iter().map(|u| u.as_slice().to_vec()).collect(),
            })
            .collect();
        io::write_json(&dir.join("plans.json"), &plans)?;
    }
    if g.plot {
        let plans = if g.keep_plans { planned_paths(&cfg, &game, &log) } else { Vec::new() };
        write_plot(&dir.join("trajectory.svg"), &csv, &cfg, &plans)?;
    }

    println!(
        "{}: {} steps, {} replans, goals {}, min distance {:.3} m{}",
        report.scenario,
        report.executed_steps,
        report.replans.len(),
        if report.reached_goals { "reached" } else { "not reached" },
        report.min_distance,
        if report.degraded { ", degraded replans" } else { "" }
    );
    Ok(if report.degraded { EXIT_NOT_CONVERGED } else { EXIT_OK })
}

pub fn verify_nash(g: &GlobalArgs, controls: Option<&PathBuf>, resolve: bool) -> Result<i32> {
    let cfg = scenario(g, None)?;
    let game = cfg.full_game()?;
    let candidate = match (controls, resolve) {
        (Some(path), _) => ControlsFile::read(path)?.to_vectors(game.horizon(), game.layout().input_dim(), game.dt())?,
        (None, true) => {
            let ocp = build_potential_ocp(&game)?;
            ilqr::solve(&ocp, &cfg.initial_state(), None, &cfg.solver)?.controls
        }
        (None, false) => bail!("pass --controls <path> or --resolve"),
    };
    let report = verify(&game, &candidate, &cfg, g)?;
    let dir = out_dir(g)?;
    io::write_json(&dir.join("nash_report.json"), &report)?;
    print_gaps(&report);
    let certified = report.agents.iter().all(|a| a.relative_gap.is_finite()) && report.certifies(g.tolerance);
    println!(
        "max relative gap {:.3e} ({} tolerance {:.1e})",
        report.max_relative_gap(),
        if certified { "within" } else { "exceeds" },
        g.tolerance
    );
    Ok(if certified { EXIT_OK } else { EXIT_GAP_EXCEEDED })
}

pub fn bench(g: &GlobalArgs, samples: Option<usize>, mc_path: Option<&PathBuf>, bins: usize) -> Result<i32> {
    let mut mc = match mc_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str::<MonteCarloConfig>(&text).with_context(|| format!("malformed Monte-Carlo config {}", path.display()))?
        }
        None => MonteCarloConfig::default(),
    };
    if let Some(n) = samples {
        mc.samples = n;
    }
    if let Some(seed) = g.seed {
        mc.seed = seed;
    }
    if let Some(d) = g.duration {
        mc.horizon_s = d;
    }
    let base = scenario(&GlobalArgs { duration: None, ..g.clone() }, Some("intersection3"))?;
    let started = Instant::now();
    let outcomes = with_jobs(jobs(g), |exec| run_monte_carlo(&mc, &base, exec))?;
    let elapsed = started.elapsed().as_secs_f64();
    let stats: BenchStats = summarize(mc.seed, &outcomes, bins);

    let dir = out_dir(g)?;
    io::write_json(&dir.join("bench_stats.json"), &stats)?;
    let caption = format!(
        "{} samples, {:.1}% converged, solve time {:.1} ± {:.1} ms",
        stats.deterministic.samples,
        100.0 * stats.convergence_rate(),
        stats.timing.mean_ms,
        stats.timing.std_ms
    );
    std::fs::write(dir.join("bench_histogram.svg"), plot::histogram_svg(&stats.timing.histogram, "solve time [ms]", &caption))?;

    println!("{caption}");
    println!(
        "iterations {:.2} ± {:.2}, non-monotone {}, failed {}, batch {:.1} s on {} job(s)",
        stats.deterministic.iteration_mean,
        stats.deterministic.iteration_std,
        stats.deterministic.non_monotone,
        stats.deterministic.failed,
        elapsed,
        jobs(g)
    );
    Ok(EXIT_OK)
}

pub fn plot(g: &GlobalArgs, csv: &Path) -> Result<i32> {
    let table = io::read_trajectory_csv(csv)?;
    let goals = if g.scenario.is_some() || g.builtin.is_some() {
        let cfg = scenario(g, None)?;
        if cfg.agents.len() != table.tracks.len() {
            bail!("scenario has {} agents but the trajectory has {}", cfg.agents.len(), table.tracks.len());
        }
        Some(goal_positions(&cfg))
    } else {
        None
    };
    let svg = plot::trajectory_svg(&table, goals.as_deref(), &[]);
    let dir = out_dir(g)?;
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("trajectory");
    let path = dir.join(format!("{stem}.svg"));
    std::fs::write(&path, svg).with_context(|| format!("cannot write {}", path.display()))?;
    println!("{}", path.display());
    Ok(EXIT_OK)
}
