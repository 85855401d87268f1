use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Duration;

use drvsl_core::dro::{self, RadiusError, RadiusMode, RadiusParams};
use drvsl_core::issa::{self, IssaOptions, IssaReport, Pool};
use drvsl_core::misocp::{build_p5, solve_p5, theta_bound, LevelGrid};
use drvsl_core::mpc::{run_mpc, write_trace_csv, MpcSetup};
use drvsl_core::scenario::{generate_samples, save_samples, write_samples_csv};
use drvsl_core::validate::{compare_with_sample_average, validate_guarantee, GuaranteeSetup};
use drvsl_core::{ctm, Config, Instance, SpeedSchedule, Spec};
use serde::Serialize;

use crate::Common;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    /// No schedule with a finite certificate anywhere the command looked.
    Infeasible(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Io(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Run {
    cfg: Config,
    out: PathBuf,
}

fn setup(c: &Common) -> Result<Run> {
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let mut cfg = Config::load(&c.config).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(b) = c.budget {
        if !(b >= 0.0) {
            return Err(CliError::Config(format!("--budget {b}: must be >= 0")));
        }
    }
    let out = c.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("creating {}: {e}", out.display())))?;
    Ok(Run { cfg, out })
}

fn need_spec(cfg: &Config, what: &str) -> Result<Spec> {
    cfg.spec().ok_or_else(|| CliError::Config(format!("samples: {what} needs a sample spec")))
}

fn issa_opts(cfg: &Config, budget: Option<f64>) -> IssaOptions {
    let mut o = cfg.solver.issa();
    if let Some(b) = budget {
        o.budget_s = b;
    }
    o
}

/// Training instance with the radius resolved per the config.
fn training_instance(cfg: &Config, opts: &IssaOptions) -> Result<Instance> {
    let samples = cfg.training_samples().map_err(|e| CliError::Config(e.to_string()))?;
    let template = cfg.instance(samples, 0.0);
    let eps = match &cfg.radius {
        RadiusMode::Given { epsilon } => *epsilon,
        RadiusMode::Formula { c1, c2, a } => radius_report(dro::wasserstein_radius(&RadiusParams {
            beta: cfg.beta,
            n: template.n_samples(),
            ell: template.cfg.n() * template.cfg.horizon,
            a: *a,
            c1: *c1,
            c2: *c2,
        }))?,
        RadiusMode::Tuned(tune) => {
            let spec = need_spec(cfg, "radius tuning")?;
            radius_report(dro::tune_radius(&template.cfg, &spec, &template, opts, cfg.beta, tune).map(|r| r.epsilon))?
        }
    };
    log::info!("epsilon {eps}");
    Ok(template.with_epsilon(eps))
}

fn radius_report<R>(r: std::result::Result<R, RadiusError>) -> Result<R> {
    r.map_err(|e| match e {
        RadiusError::GridExhausted { .. } | RadiusError::NoCandidates => CliError::Infeasible(e.to_string()),
        _ => CliError::Config(format!("radius: {e}")),
    })
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

fn write_csv(path: &Path, f: impl FnOnce(BufWriter<File>) -> csv::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
    f(BufWriter::new(file)).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    config: String,
    seed: u64,
    epsilon: f64,
    n_samples: usize,
    #[serde(flatten)]
    report: &'a IssaReport<f64>,
}

pub fn solve(c: &Common) -> Result<()> {
    let run = setup(c)?;
    let opts = issa_opts(&run.cfg, c.budget);
    let inst = training_instance(&run.cfg, &opts)?;
    let rep = issa::run(&inst, &opts, &Pool::new(0));
    write_json(
        &run.out.join("report.json"),
        &SolveOutput {
            config: c.config.display().to_string(),
            seed: run.cfg.seed,
            epsilon: inst.epsilon,
            n_samples: inst.n_samples(),
            report: &rep,
        },
    )?;
    write_csv(&run.out.join("iterations.csv"), |w| issa::write_iterations_csv(&rep.log, w))?;
    let Some(u) = &rep.u_best else {
        return Err(CliError::Infeasible(format!(
            "{} iterations, {} candidates, none certified ({:?})",
            rep.iterations, rep.infeasible, rep.termination
        )));
    };
    let trajs: Vec<Vec<Vec<f64>>> = dro::propagate_all(&inst, u).into_iter().map(|t| t.rho).collect();
    write_csv(&run.out.join("trajectories.csv"), |w| ctm::write_trajectories_csv(&inst.cfg, u, &trajs, w))?;
    println!(
        "certificate {:.6} veh/h, UB {:?}, {} iterations ({:?}); wrote {}",
        rep.certificate.unwrap_or(f64::NAN),
        rep.ub,
        rep.iterations,
        rep.termination,
        run.out.display()
    );
    Ok(())
}

pub fn mpc(c: &Common) -> Result<()> {
    let run = setup(c)?;
    let cfg = &run.cfg;
    let mut mpc_cfg = cfg.mpc.clone().ok_or_else(|| CliError::Config("mpc: block missing".into()))?;
    if let Some(b) = c.budget {
        mpc_cfg.t_run = b;
    }
    let spec = need_spec(cfg, "mpc")?;
    let opts = issa_opts(cfg, None);
    let template = training_instance(cfg, &opts)?;
    let trace = run_mpc(&MpcSetup {
        cfg: &cfg.highway,
        events: &cfg.events,
        mpc: &mpc_cfg,
        training: &spec,
        template: &template,
        n: cfg.n_samples,
        issa: &opts,
        seed: cfg.seed,
    });
    write_json(&run.out.join("report.json"), &trace)?;
    write_csv(&run.out.join("trace.csv"), |w| write_trace_csv(&trace, w))?;
    let fallbacks = trace.solves.iter().filter(|s| s.fallback).count();
    println!(
        "{} slots, {} solves, {} fell back; wrote {}",
        trace.slots.len(),
        trace.solves.len(),
        fallbacks,
        run.out.display()
    );
    if fallbacks == trace.solves.len() && !trace.solves.is_empty() {
        return Err(CliError::Infeasible("every MPC solve fell back".into()));
    }
    Ok(())
}

pub fn validate(c: &Common, replications: Option<usize>, compare: bool) -> Result<()> {
    let run = setup(c)?;
    let cfg = &run.cfg;
    let spec = need_spec(cfg, "validate")?;
    let opts = issa_opts(cfg, c.budget);
    let template = training_instance(cfg, &opts)?;
    let rep = validate_guarantee(&GuaranteeSetup {
        cfg: &template.cfg,
        spec: &spec,
        template: &template,
        issa: &opts,
        beta: cfg.beta,
        replications: replications.unwrap_or(cfg.validation.replications),
        n: cfg.n_samples,
        n_val: cfg.validation.n_val,
        seed: cfg.seed,
    });
    write_json(&run.out.join("guarantee.json"), &rep)?;
    println!(
        "rate {:.4} ({} / {} with a schedule, {} without), p {:.4}, {}; wrote {}",
        rep.rate,
        rep.hits,
        rep.with_schedule,
        rep.without_schedule,
        rep.p_value,
        if rep.passed { "pass" } else { "fail" },
        run.out.display()
    );
    if compare {
        let cmp = compare_with_sample_average(&template, &opts, &spec, cfg.validation.n_val, cfg.seed);
        write_json(&run.out.join("comparison.json"), &cmp)?;
        println!("congested rollouts: robust {:?}, sample average {:?}", cmp.dro_congestion, cmp.sa_congestion);
    }
    if rep.with_schedule == 0 {
        return Err(CliError::Infeasible("no replication produced a schedule".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeOutput {
    epsilon: f64,
    levels: Vec<f64>,
    theta_bar: f64,
    status: String,
    objective: Option<f64>,
    best_bound: Option<f64>,
    schedule: Option<SpeedSchedule>,
    /// Certificate of the P5 schedule, for comparison with `objective`.
    certificate: Option<f64>,
    cuts_added: usize,
    max_violation: f64,
}

pub fn analyze(c: &Common, levels: Option<usize>) -> Result<()> {
    let run = setup(c)?;
    let cfg = &run.cfg;
    let k = levels.unwrap_or(cfg.misocp.levels);
    if k == 0 {
        return Err(CliError::Config("--levels: must be at least 1".into()));
    }
    let inst = training_instance(cfg, &issa_opts(cfg, None))?;
    let theta = theta_bound(&inst.cfg, inst.eta_bar, inst.cfg.horizon);
    let grid = LevelGrid::uniform(k, theta);
    let mut p5 = build_p5(&inst, &grid);
    let budget = c.budget.unwrap_or(cfg.misocp.budget_s);
    let sol = solve_p5(&mut p5, Some(Duration::from_secs_f64(budget)));
    let schedule = sol.solution.status.has_solution().then(|| p5.index.schedule(&sol.solution.x));
    let certificate = schedule.as_ref().and_then(|u| dro::certificate(&inst, u).value);
    let out = AnalyzeOutput {
        epsilon: inst.epsilon,
        levels: grid.points.clone(),
        theta_bar: theta,
        status: format!("{:?}", sol.solution.status),
        objective: sol.solution.objective,
        best_bound: sol.solution.best_bound,
        schedule,
        certificate,
        cuts_added: sol.cuts_added,
        max_violation: sol.max_violation,
    };
    write_json(&run.out.join("report.json"), &out)?;
    println!(
        "P5 with {k} levels: {} objective {:?}, certificate {:?}; wrote {}",
        out.status,
        out.objective,
        out.certificate,
        run.out.display()
    );
    if out.schedule.is_none() {
        return Err(CliError::Infeasible(format!("P5 returned {}", out.status)));
    }
    Ok(())
}

pub fn tune_radius(c: &Common) -> Result<()> {
    let run = setup(c)?;
    let cfg = &run.cfg;
    let RadiusMode::Tuned(tune) = &cfg.radius else {
        return Err(CliError::Config("radius: tune-radius needs mode \"tuned\"".into()));
    };
    let spec = need_spec(cfg, "tune-radius")?;
    let opts = issa_opts(cfg, c.budget);
    let samples = cfg.training_samples().map_err(|e| CliError::Config(e.to_string()))?;
    let template = cfg.instance(samples, 0.0);
    let rep = radius_report(dro::tune_radius(&template.cfg, &spec, &template, &opts, cfg.beta, tune))?;
    write_json(&run.out.join("report.json"), &rep)?;
    println!(
        "epsilon {} ({} trials with a schedule); wrote {}",
        rep.epsilon,
        rep.trials_with_schedule,
        run.out.display()
    );
    Ok(())
}

pub fn gen_samples(c: &Common, count: Option<usize>) -> Result<()> {
    let run = setup(c)?;
    let cfg = &run.cfg;
    let spec = need_spec(cfg, "gen-samples")?;
    let n = count.unwrap_or(cfg.n_samples);
    let samples = generate_samples(&cfg.planning_highway(), &spec, n).map_err(|e| CliError::Config(e.to_string()))?;
    let path = run.out.join("samples.json");
    save_samples(&path, &samples).map_err(|e| CliError::Io(e.to_string()))?;
    write_csv(&run.out.join("samples.csv"), |w| write_samples_csv(&samples, w))?;
    println!("{n} samples (seed {}) written to {}", cfg.seed, path.display());
    Ok(())
}
