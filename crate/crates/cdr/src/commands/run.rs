use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use cdr_core::baselines::{grid_search, reconstruct, BaselineConfig, Method};
use cdr_core::forward::{default_calib, generate_poisson_mask, ForwardOperator};
use cdr_core::net::NetworkConfig;
use cdr_core::signal::{dictionary_match, SpgrDictionary, VfaImageSeries};
use cdr_core::training::{run_reconstruction, Mode, RunOptions, TrainingConfig};
use clap::{Args, ValueEnum};

use super::WallClock;
use crate::container::Container;
use crate::dataset::{write_images, write_mask, write_maps, write_params, Dataset};
use crate::tables;

pub const DETERMINISTIC_ENV: &str = "RECON_DETERMINISTIC";

/// λ grid for baselines, as fractions of `max |A^H y_u|`.
pub const LAMBDA_FRACTIONS: [f64; 5] = [0.0, 0.01, 0.03, 0.1, 0.3];
pub const ITERATION_GRID: [usize; 5] = [10, 20, 50, 100, 150];

pub fn deterministic_from_env() -> bool {
    std::env::var(DETERMINISTIC_ENV).is_ok_and(|v| v == "1")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cd,
    Cdr,
    L1,
    Lr,
}

impl MethodArg {
    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Cd => "cd",
            MethodArg::Cdr => "cdr",
            MethodArg::L1 => "l1",
            MethodArg::Lr => "lr",
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ExperimentPlan {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long = "method", value_enum, value_delimiter = ',', default_values_t = vec![MethodArg::Cdr])]
    pub methods: Vec<MethodArg>,
    #[arg(long = "R", value_delimiter = ',', default_values_t = vec![4.0, 8.0])]
    pub rs: Vec<f64>,
    /// Regularization weights for `cdr` cells.
    #[arg(long = "mu", value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.5, 1.0])]
    pub mus: Vec<f64>,
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    /// Seeds for the mask and the network; one cell set per seed.
    #[arg(long = "seed", value_delimiter = ',', default_values_t = vec![0])]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Fixed baseline λ as a fraction of max |A^H y|; grid search when absent.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Baseline iteration count used with `--lambda`.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
}

impl ExperimentPlan {
    pub fn new(dataset: PathBuf, out: PathBuf) -> Self {
        Self {
            dataset,
            methods: vec![MethodArg::Cdr],
            rs: vec![4.0, 8.0],
            mus: vec![0.05, 0.1, 0.5, 1.0],
            steps: 3000,
            seeds: vec![0],
            jobs: 1,
            out,
            lambda: None,
            iters: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.rs.is_empty() || self.seeds.is_empty() {
            bail!("plan grids must be nonempty");
        }
        if self.methods.contains(&MethodArg::Cdr) && self.mus.is_empty() {
            bail!("cdr cells need at least one mu");
        }
        if !self.dataset.exists() {
            bail!("dataset {} does not exist", self.dataset.display());
        }
        if self.steps == 0 || self.jobs == 0 {
            bail!("steps and jobs must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSpec {
    pub method: MethodArg,
    pub r: f64,
    pub mu: Option<f64>,
    pub seed: u64,
}

impl CellSpec {
    pub fn name(&self) -> String {
        match self.mu {
            Some(mu) => format!("{}_R{}_mu{}_s{}", self.method.name(), self.r, mu, self.seed),
            None => format!("{}_R{}_s{}", self.method.name(), self.r, self.seed),
        }
    }
}

/// Enumerate cells: seeds × R × methods, with one `cdr` cell per μ.
pub fn cells(plan: &ExperimentPlan) -> Vec<CellSpec> {
    let mut out = Vec::new();
    for &seed in &plan.seeds {
        for &r in &plan.rs {
            for &method in &plan.methods {
                let mus: Vec<Option<f64>> = match method {
                    MethodArg::Cdr => plan.mus.iter().map(|&m| Some(m)).collect(),
                    MethodArg::Cd => vec![Some(0.0)],
                    _ => vec![None],
                };
                for mu in mus {
                    let cell = CellSpec { method, r, mu, seed };
                    if !out.contains(&cell) {
                        out.push(cell);
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub computed: Vec<String>,
    pub skipped: Vec<String>,
    pub failed: Vec<(String, String)>,
}

/// Execute every cell of `plan` that is not already complete.
///
/// A cell is built in `<name>.partial/` and renamed into place when done, so
/// an existing `<name>/` directory is always complete and is skipped. A
/// failing cell leaves `<name>.failed` with the error and the run continues.
/// `deterministic` forces one worker and omits wall-clock columns.
pub fn run(plan: &ExperimentPlan, deterministic: bool) -> Result<RunSummary> {
    plan.validate()?;
    let ds = Dataset::load(&plan.dataset)?;
    fs::create_dir_all(&plan.out).with_context(|| format!("creating {}", plan.out.display()))?;
    let dict = SpgrDictionary::with_defaults(&ds.params);
    let todo = cells(plan);
    let jobs = if deterministic { 1 } else { plan.jobs.min(todo.len()).max(1) };
    let next = AtomicUsize::new(0);
    let summary = Mutex::new(RunSummary::default());
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(cell) = todo.get(i) else { break };
        let name = cell.name();
        let done = plan.out.join(&name);
        if done.is_dir() {
            log::info!("{name}: complete, skipping");
            summary.lock().unwrap().skipped.push(name);
            continue;
        }
        let failed = plan.out.join(format!("{name}.failed"));
        let _ = fs::remove_file(&failed);
        log::info!("{name}: running");
        match run_cell(plan, &ds, &dict, cell, deterministic) {
            Ok(()) => summary.lock().unwrap().computed.push(name),
            Err(e) => {
                let msg = format!("{e:#}");
                log::error!("{name}: {msg}");
                let _ = fs::write(&failed, format!("{msg}\n"));
                summary.lock().unwrap().failed.push((name, msg));
            }
        }
    };
    std::thread::scope(|s| {
        for _ in 1..jobs {
            s.spawn(worker);
        }
        worker();
    });
    let mut summary = summary.into_inner().unwrap();
    summary.computed.sort();
    summary.skipped.sort();
    summary.failed.sort();
    Ok(summary)
}

fn peak_magnitude(x: &VfaImageSeries) -> f64 {
    x.data().iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

fn run_cell(plan: &ExperimentPlan, ds: &Dataset, dict: &SpgrDictionary, cell: &CellSpec, deterministic: bool) -> Result<()> {
    let name = cell.name();
    let partial = plan.out.join(format!("{name}.partial"));
    if partial.exists() {
        fs::remove_dir_all(&partial)?;
    }
    fs::create_dir_all(&partial)?;
    let (k, h, w) = ds.imgs.dims();
    let mask = generate_poisson_mask(h, w, k, cell.r, default_calib(h), cell.seed)?;
    let op = ForwardOperator::new(mask, ds.sens.clone())?;
    let y_u = op.undersample(&ds.ksp)?;

    let mut c = Container::new();
    c.set("kind", "result")?;
    c.set("method", cell.method.name())?;
    c.set("R", cell.r)?;
    c.set("seed", cell.seed)?;
    c.set("subject", ds.seed)?;
    if let Some(mu) = cell.mu {
        c.set("mu", mu)?;
    }
    write_params(&mut c, &ds.params)?;
    write_mask(&mut c, op.mask())?;

    let (images, maps) = match cell.method {
        MethodArg::Cd | MethodArg::Cdr => {
            let (mode, mu) = match cell.method {
                MethodArg::Cd => (Mode::Cd, 0.0),
                _ => (Mode::CdR, cell.mu.unwrap_or(0.0)),
            };
            let net = NetworkConfig::desk(k, h, w, cell.seed);
            let cfg = TrainingConfig {
                total_steps: plan.steps,
                ..TrainingConfig::desk(mode, mu)
            };
            let clock = WallClock::start();
            let opts = RunOptions {
                ground_truth: Some(&ds.imgs),
                warmstart: None,
                clock: if deterministic { None } else { Some(&clock) },
            };
            let rec = run_reconstruction(&y_u, &op, dict, &net, &cfg, opts)?;
            let t = &rec.trace;
            c.set("step", rec.checkpoint_step)?;
            c.set("selected_stop", t.selected_stop.unwrap_or(rec.checkpoint_step))?;
            c.set("steps_run", t.len())?;
            c.put_real("weights", &[rec.weights.len()], rec.weights.params())?;
            let mut rows = Vec::with_capacity(t.len() * 4);
            for i in 0..t.len() {
                rows.extend([t.data_loss[i], t.reg_loss[i], t.total_loss[i], t.nrmse[i]]);
            }
            c.put_real("trace", &[t.len(), 4], &rows)?;
            tables::write_trace(&partial.join("trace.csv"), t, !deterministic)?;
            (rec.images, rec.maps)
        }
        MethodArg::L1 | MethodArg::Lr => {
            let method = if cell.method == MethodArg::L1 { Method::L1 } else { Method::Lr };
            let peak = peak_magnitude(&op.apply_adjoint(&y_u)?);
            let template = BaselineConfig {
                seed: cell.seed,
                ..BaselineConfig::new(method, 0.0, plan.iters)
            };
            let (cfg, x) = match plan.lambda {
                Some(frac) => {
                    let cfg = BaselineConfig {
                        lambda: frac * peak,
                        ..template
                    };
                    (cfg, reconstruct(&y_u, &op, &cfg)?)
                }
                None => {
                    let lambdas: Vec<f64> = LAMBDA_FRACTIONS.iter().map(|f| f * peak).collect();
                    let g = grid_search(&y_u, &op, &ds.imgs, &template, &lambdas, &ITERATION_GRID)?;
                    let mut wtr = csv::Writer::from_path(partial.join("grid.csv"))?;
                    wtr.write_record(["lambda", "n_iter", "nrmse"])?;
                    for (l, n, e) in &g.table {
                        wtr.write_record([l.to_string(), n.to_string(), e.to_string()])?;
                    }
                    wtr.flush()?;
                    (g.best, g.images)
                }
            };
            c.set("lambda", cfg.lambda)?;
            c.set("step", cfg.n_iter)?;
            let maps = dictionary_match(&x, dict)?.0;
            (x, maps)
        }
    };
    write_images(&mut c, "imgs", &images)?;
    write_maps(&mut c, &maps)?;
    c.write(&partial.join("result"))?;
    let done = plan.out.join(&name);
    fs::rename(&partial, &done).with_context(|| format!("publishing {}", done.display()))
}
