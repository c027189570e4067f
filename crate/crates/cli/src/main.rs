use std::io::Write;

use anyhow::{Context, Result};
use clap::Parser;
use stldg::assembly::AssemblyOptions;
use stldg::problems::{problem_by_name, HeatProblem};
use stldg::study::{
    condition_study, converge_h, converge_hp, converge_p, run, uniform_mesh, HpSchedule, RunSettings, StudyRow,
    CONDITION_HEADER, STUDY_HEADER,
};

mod config;

use config::{Cli, Experiment, ExperimentConfig};

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn problem(cfg: &ExperimentConfig, degree: usize) -> Result<Box<dyn HeatProblem>> {
    Ok(problem_by_name(&cfg.problem, cfg.dim, degree)?)
}

fn study_table(rows: Vec<StudyRow>) -> Table {
    Table { header: STUDY_HEADER.to_vec(), rows: rows.iter().map(StudyRow::record).collect() }
}

fn execute(cfg: &ExperimentConfig) -> Result<Table> {
    let opts = AssemblyOptions { eta_star: cfg.eta_star, alpha: cfg.alpha };
    let settings = |kind| RunSettings { kind, opts, mode: cfg.solver, newton: cfg.newton };
    let mut rows = Vec::new();
    match cfg.experiment {
        Experiment::ConvergeH => {
            for &p in &cfg.degrees {
                let pb = problem(cfg, p)?;
                for &kind in &cfg.spaces {
                    log::info!("converge-h: {} with {kind}, p = {p}", pb.name());
                    rows.extend(converge_h(pb.as_ref(), &settings(kind), p, &cfg.levels)?);
                }
            }
        }
        Experiment::ConvergeP => {
            let pb = problem(cfg, *cfg.degrees.iter().max().unwrap_or(&1))?;
            for &kind in &cfg.spaces {
                log::info!("converge-p: {} with {kind} on nx = {}", pb.name(), cfg.nx);
                rows.extend(converge_p(pb.as_ref(), &settings(kind), &cfg.degrees, cfg.nx)?);
            }
        }
        Experiment::ConvergeHp => {
            let pb = problem(cfg, 2)?;
            let schedule = match cfg.sigma_x {
                Some(sx) => HpSchedule { mu: cfg.mu, ..HpSchedule::corner(sx, cfg.sigma_t) },
                None => HpSchedule::initial_layer(cfg.sigma_t, cfg.mu, cfg.nx),
            };
            for &kind in &cfg.spaces {
                log::info!("converge-hp: {} with {kind}", pb.name());
                rows.extend(converge_hp(pb.as_ref(), &settings(kind), &schedule, &cfg.levels)?);
            }
        }
        Experiment::Condition => {
            let exps: Vec<u32> = cfg.levels.iter().map(|&i| i as u32).collect();
            let table = condition_study(&cfg.spaces, &cfg.degrees, &exps, &opts)?;
            return Ok(Table { header: CONDITION_HEADER.to_vec(), rows: table.iter().map(|r| r.record()).collect() });
        }
        Experiment::Solve => {
            let p = cfg.degrees[0];
            let pb = problem(cfg, p)?;
            for &kind in &cfg.spaces {
                log::info!("solve: {} with {kind}, p = {p}, nx = {}", pb.name(), cfg.levels[0]);
                let r = run(pb.as_ref(), uniform_mesh(pb.as_ref(), cfg.levels[0], p)?, &settings(kind))?;
                log::info!(
                    "{} systems, {} factorisations, max residual {:.2e}",
                    r.solve.systems,
                    r.solve.factorizations,
                    r.solve.max_residual
                );
                rows.push(StudyRow::from_result(kind.label(), &r));
            }
        }
    }
    Ok(study_table(rows))
}

fn write_csv(table: &Table, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    match try_main() {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn try_main() -> Result<()> {
    let cfg = ExperimentConfig::resolve(Cli::parse())?;
    let table = execute(&cfg)?;
    match &cfg.out {
        Some(path) => {
            let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&table, &mut f)?;
            log::info!("wrote {} rows to {}", table.rows.len(), path.display());
        }
        None => write_csv(&table, &mut std::io::stdout().lock())?,
    }
    Ok(())
}
