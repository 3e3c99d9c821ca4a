//! The `udrl` command line: train, eval, importance and serve.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use udrl_core::env::EnvKind;
use udrl_core::eval::{self, EvalStats, ImportanceVector, InferenceSpec};
use udrl_core::models::{Family, TrainedModel};
use udrl_core::udrl::{run_training_with, Command, TrainingConfig, TrainingLog};
use udrl_core::{rng, UdrlError};

use crate::api::{self, AppState, ModelEntry, ModelInfo};
use crate::error::{Result, ServiceError};
use crate::manifest::{load_log, save_log, seeded_config, RunManifest, SeedRun, MANIFEST_FILE};
use crate::model_io::{load_model, save_model};

pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Parser)]
#[command(name = "udrl", version, about = "Train and inspect command-conditioned behavior functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Train one model per seed and write models, logs, CSV and a manifest.
    Train(TrainArgs),
    /// Greedy inference for every model of a manifest.
    Eval(EvalArgs),
    /// Write feature importances as `.dat` files.
    Importance(ImportanceArgs),
    /// Serve the models of one or more manifests over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub env: EnvKind,
    #[arg(long)]
    pub model: Family,
    #[arg(long, default_value_t = 500)]
    pub episodes: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub buffer: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub k_best: Option<usize>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub refit_period: Option<usize>,
    /// Trees per forest.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Neighbours for KNN.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub gbt_rounds: Option<usize>,
    #[arg(long)]
    pub adaboost_stages: Option<usize>,
    /// Adam steps after each collected episode (MLP).
    #[arg(long)]
    pub mlp_steps: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, requires = "dt", allow_hyphen_values = true)]
    pub dr: Option<f64>,
    #[arg(long, requires = "dr")]
    pub dt: Option<u32>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Base seed of the evaluation resets.
    #[arg(long, default_value_t = 0)]
    pub eval_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Global,
    Local,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// One state per line, whitespace or comma separated; a line may also
    /// carry the two command values.
    #[arg(long, conflicts_with = "from_rollout")]
    pub states: Option<PathBuf>,
    /// Use the states of one greedy rollout.
    #[arg(long)]
    pub from_rollout: bool,
    /// Which run to inspect (defaults to the first).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (defaults to the manifest directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    #[arg(long, env = "UDRL_ADDR", default_value = DEFAULT_ADDR)]
    pub addr: String,
}

/// Failure of a subcommand, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(ServiceError),
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        CliError::Runtime(e)
    }
}

impl From<UdrlError> for CliError {
    fn from(e: UdrlError) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit status: 0 on success, 2 on usage errors, 1 otherwise.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Cmd::Train(a) => train(&a),
        Cmd::Eval(a) => eval_cmd(&a),
        Cmd::Importance(a) => importance(&a),
        Cmd::Serve(a) => serve(&a),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn training_config(a: &TrainArgs) -> std::result::Result<TrainingConfig, CliError> {
    let mut c = TrainingConfig::new(a.env, a.model, 0);
    c.n_episodes = a.episodes;
    if let Some(v) = a.epsilon {
        c.epsilon = v;
    }
    if let Some(v) = a.buffer {
        c.buffer_capacity = v;
    }
    if let Some(v) = a.warmup {
        c.n_warmup_episodes = v;
    }
    if let Some(v) = a.k_best {
        c.k_best = v;
    }
    if let Some(v) = a.segments {
        c.segments_per_episode = v;
    }
    if let Some(v) = a.refit_period {
        c.refit_period = v;
    }
    if let Some(v) = a.n_trees {
        c.model.forest.n_trees = v;
    }
    if let Some(v) = a.k {
        c.model.knn.k = v;
    }
    if let Some(v) = a.gbt_rounds {
        c.model.gbt.n_rounds = v;
    }
    if let Some(v) = a.adaboost_stages {
        c.model.adaboost.n_stages = v;
    }
    if let Some(v) = a.mlp_steps {
        c.model.mlp.update_steps = v;
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(c)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn train(a: &TrainArgs) -> std::result::Result<(), CliError> {
    let config = training_config(a)?;
    if a.seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let mut sorted = a.seeds.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != a.seeds.len() {
        return Err(CliError::Usage("seeds must be distinct".into()));
    }
    fs::create_dir_all(&a.out).map_err(|e| ServiceError::io(&a.out, e))?;

    let mut logs = Vec::new();
    let mut runs = Vec::new();
    for &seed in &a.seeds {
        let run_config = seeded_config(&config, seed);
        let outcome = run_training_with(&run_config, |r| {
            if !a.quiet && (r.episode + 1) % 50 == 0 {
                eprintln!("seed {seed}: episode {} return {:.1}", r.episode + 1, r.total_return);
            }
        })?;
        let run = SeedRun {
            seed,
            model: format!("model-seed{seed}.bin").into(),
            log: format!("log-seed{seed}.csv").into(),
        };
        save_model(&outcome.model, &a.out.join(&run.model))?;
        save_log(&outcome.log, &a.out.join(&run.log))?;
        logs.push(outcome.log);
        runs.push(run);
    }

    let training_csv = PathBuf::from("training.csv");
    eval::export_seed_csv(&logs, &a.out.join(&training_csv))?;
    eval::export_training_csv(&[(a.model.name(), &logs)], &a.out.join("training_mean.csv"))?;
    let manifest = RunManifest {
        created_at: unix_now(),
        out_dir: a.out.clone(),
        seeds: a.seeds.clone(),
        training_csv,
        importance: vec![],
        runs,
        config,
    };
    manifest.save(&a.out.join(MANIFEST_FILE))?;
    Ok(())
}

/// A loaded run: model, log and where it came from.
pub struct LoadedRun {
    pub seed: u64,
    pub model: TrainedModel,
    pub log: TrainingLog,
}

pub fn load_runs(manifest: &RunManifest, dir: &Path) -> Result<Vec<LoadedRun>> {
    manifest
        .runs
        .iter()
        .map(|r| {
            Ok(LoadedRun {
                seed: r.seed,
                model: load_model(&dir.join(&r.model))?,
                log: load_log(&dir.join(&r.log), r.seed)?,
            })
        })
        .collect()
}

/// `mean ± std` with two decimals.
pub fn format_stats(stats: &EvalStats) -> String {
    format!("{:.2} ± {:.2}", stats.mean, stats.std)
}

fn eval_cmd(a: &EvalArgs) -> std::result::Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let (manifest, dir) = RunManifest::load(&a.manifest)?;
    let env = manifest.config.env;
    let mut pooled = Vec::new();
    for run in load_runs(&manifest, &dir)? {
        let command = match (a.dr, a.dt) {
            (Some(d_r), Some(d_t)) => Command::new(d_r, d_t),
            _ => eval::choose_inference_command(&run.log, env)?,
        };
        let mut spec = InferenceSpec::new(env, command);
        spec.n_episodes = a.n;
        let stats = eval::evaluate(&run.model, &spec, rng::derive_seed(run.seed, a.eval_seed))?;
        println!(
            "seed {}: f(·, {}, {}) = {}",
            run.seed,
            command.d_r,
            command.d_t,
            format_stats(&stats)
        );
        pooled.extend(stats.per_episode_returns);
    }
    let pooled = EvalStats::from_returns(pooled);
    println!("{} {}: {}", env, manifest.config.model.family, format_stats(&pooled));
    Ok(())
}

/// Parses a states file; each row becomes a full model input, taking the
/// command from `fallback` when the row holds only a state.
pub fn parse_states(text: &str, state_dim: usize, fallback: Command, path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| ServiceError::Manifest {
                path: path.into(),
                message: format!("line {}: {e}", n + 1),
            })?;
        let row = match values.len() {
            d if d == state_dim => {
                let mut v = values;
                v.extend([fallback.d_r, fallback.d_t as f64]);
                v
            }
            d if d == state_dim + 2 => values,
            d => {
                return Err(ServiceError::Manifest {
                    path: path.into(),
                    message: format!("line {}: expected {} or {} values, got {d}", n + 1, state_dim, state_dim + 2),
                })
            }
        };
        rows.push(row);
    }
    Ok(rows)
}

fn rollout_inputs(model: &TrainedModel, env: EnvKind, command: Command, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng::stream(seed, 0);
    let episode = udrl_core::udrl::collect_episode(env, Some(model), command, 0.0, &mut rng)?;
    Ok(episode
        .transitions
        .iter()
        .map(|t| t.command.feature_vector(&t.state))
        .collect())
}

fn importance(a: &ImportanceArgs) -> std::result::Result<(), CliError> {
    if a.kind == KindArg::Local && a.states.is_none() && !a.from_rollout {
        return Err(CliError::Usage("--kind local needs --states FILE or --from-rollout".into()));
    }
    let (mut manifest, dir) = RunManifest::load(&a.manifest)?;
    let run_meta = match a.seed {
        Some(s) => manifest.runs.iter().find(|r| r.seed == s),
        None => manifest.runs.first(),
    }
    .cloned()
    .ok_or_else(|| CliError::Usage("no matching run in manifest".into()))?;
    let model = load_model(&dir.join(&run_meta.model))?;
    let out = a.out.clone().unwrap_or_else(|| dir.clone());
    fs::create_dir_all(&out).map_err(|e| ServiceError::io(&out, e))?;
    let env = manifest.config.env;

    let mut written: Vec<(PathBuf, ImportanceVector)> = Vec::new();
    match a.kind {
        KindArg::Global => {
            let v = eval::global_mdi(&model)?;
            written.push((format!("importance-global-seed{}.dat", run_meta.seed).into(), v));
        }
        KindArg::Local => {
            let log = load_log(&dir.join(&run_meta.log), run_meta.seed)?;
            let command = eval::choose_inference_command(&log, env)?;
            let inputs = match &a.states {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| ServiceError::io(p, e))?;
                    parse_states(&text, env.spec().state_dim, command, p)?
                }
                None => rollout_inputs(&model, env, command, run_meta.seed)?,
            };
            for (i, x) in inputs.iter().enumerate() {
                let v = eval::local_path_importance(&model, x)?;
                written.push((format!("importance-local-seed{}-{i}.dat", run_meta.seed).into(), v));
            }
        }
    }
    for (name, v) in &written {
        let path = out.join(name);
        eval::export_importance_dat(v, &path)?;
        println!("{}", path.display());
        let recorded = if out == dir { name.clone() } else { path };
        if !manifest.importance.contains(&recorded) {
            manifest.importance.push(recorded);
        }
    }
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(())
}

/// Loads every run of the given manifests as API model entries. Ids are
/// `{env}-{family}-seed{seed}`, suffixed when two manifests collide.
pub fn model_entries(manifests: &[PathBuf]) -> Result<Vec<ModelEntry>> {
    let mut entries: Vec<ModelEntry> = Vec::new();
    for (m_idx, path) in manifests.iter().enumerate() {
        let (manifest, dir) = RunManifest::load(path)?;
        let env = manifest.config.env;
        for run in load_runs(&manifest, &dir)? {
            let mut model_id = format!("{}-{}-seed{}", env, run.model.family, run.seed);
            if entries.iter().any(|e| e.info.model_id == model_id) {
                model_id = format!("{model_id}-{m_idx}");
            }
            let info = ModelInfo {
                model_id,
                env,
                family: run.model.family.name().to_string(),
                seed: run.seed,
                default_command: eval::choose_inference_command(&run.log, env)?,
                feature_names: run.model.feature_names.clone(),
            };
            entries.push(ModelEntry {
                info,
                model: Arc::new(run.model),
            });
        }
    }
    Ok(entries)
}

fn serve(a: &ServeArgs) -> std::result::Result<(), CliError> {
    let entries = model_entries(&a.manifest)?;
    let n_models = entries.len();
    let app = api::router(AppState::new(entries));
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ServiceError::io("<runtime>", e))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.addr)
            .await
            .map_err(|e| ServiceError::io(&a.addr, e))?;
        eprintln!("serving {n_models} models on http://{}", a.addr);
        axum::serve(listener, app).await.map_err(|e| ServiceError::io(&a.addr, e))
    })?;
    Ok(())
}
