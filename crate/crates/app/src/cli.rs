//! Command-line surface: argument parsing and one function per subcommand.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use polcbm::concepts::ClassConceptTable;
use polcbm::optim::AdamConfig;
use polcbm::pacbm::{
    evaluate, read_checkpoint, sample_split, train, write_checkpoint, LabeledSet, ModelConfig, Normalization,
    PaCBMModel, Strategy, TrainConfig,
};
use polcbm::par::Exec;
use polcbm::polsar::{read_scene, write_scene, Scene};
use polcbm::synthgen::{build_prototypes, class_table, generate_scene, SceneSpec};
use serde::Serialize;
use serde_json::json;

use crate::analysis::write_decomposition;
use crate::api::{router, ServiceState};
use crate::error::{AppError, AppResult};
use crate::explain::explain;
use crate::manifest::{hash_artifacts, manifest_path, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "polcbm", version, about = "Interpretable PolSAR classification with concept bottlenecks")]
pub struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene from a SceneSpec JSON.
    Gen(GenArgs),
    /// Write per-pixel decomposition rasters for a scene.
    Decompose(DecomposeArgs),
    /// Train a model on a scene.
    Train(TrainArgs),
    /// Evaluate a model on the validation split of a scene.
    Eval(EvalArgs),
    /// Predict one anchor pixel.
    Predict(PredictArgs),
    /// Extract symbolic concept-to-label formulas.
    Explain(ExplainArgs),
    /// Serve the JSON API for one model and one scene.
    Serve(ServeArgs),
    /// Write an untrained model for a scene.
    Init(InitArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// SceneSpec JSON; the default 6-class scene when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the SceneSpec.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "joint")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val_per_class: usize,
    /// Keep concept-branch gradients out of the encoder (joint only).
    #[arg(long)]
    pub detach_concepts: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub train_per_class: usize,
    #[arg(long, default_value_t = 500)]
    pub val_per_class: usize,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub row: usize,
    #[arg(long)]
    pub col: usize,
    /// Write the run manifest here instead of to stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed of the random concept vectors used for fitting.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    /// Write the run manifest here instead of to stderr.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InitArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "joint")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 0.7)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Class concept table recomputed from the prototypes stored with a scene.
pub fn scene_class_table(scene: &Scene) -> AppResult<ClassConceptTable> {
    let specs = scene
        .meta
        .prototypes
        .iter()
        .map(|d| polcbm::synthgen::PrototypeSpec::new(&d.name, d.weights, d.span_scale))
        .collect::<Vec<_>>();
    Ok(class_table(&build_prototypes(&specs)?)?)
}

struct Run {
    command: &'static str,
    start: Instant,
    config: serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<String>,
}

impl Run {
    fn new(command: &'static str, config: impl Serialize, seed: Option<u64>, inputs: &[&Path]) -> AppResult<Self> {
        Ok(Self {
            command,
            start: Instant::now(),
            config: serde_json::to_value(config)?,
            seed,
            inputs: inputs.iter().map(|p| display(p)).collect(),
        })
    }

    fn manifest(self, outputs: &[&Path]) -> AppResult<RunManifest> {
        let mut artifacts = std::collections::BTreeMap::new();
        for o in outputs {
            artifacts.extend(hash_artifacts(o)?);
        }
        Ok(RunManifest {
            command: self.command.into(),
            config: self.config,
            seed: self.seed,
            inputs: self.inputs,
            outputs: outputs.iter().map(|p| display(p)).collect(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            artifacts,
        })
    }

    /// Writes the manifest beside the primary output.
    fn finish(self, outputs: &[&Path]) -> AppResult<()> {
        let primary = outputs[0];
        self.manifest(outputs)?.write(&manifest_path(primary))
    }

    /// Manifest to a chosen file, or one line on stderr.
    fn finish_detached(self, target: Option<&Path>) -> AppResult<()> {
        let m = self.manifest(&[])?;
        match target {
            Some(p) => m.write(p),
            None => {
                eprintln!("{}", serde_json::to_string(&m)?);
                Ok(())
            }
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn split_for(scene: &Scene, train_pc: usize, val_pc: usize, seed: u64, exec: Exec) -> AppResult<(LabeledSet, LabeledSet)> {
    let split = sample_split(scene, train_pc, val_pc, seed, exec)?;
    Ok((split.train, split.val))
}

pub fn run_gen(a: &GenArgs, exec: Exec) -> AppResult<()> {
    let mut spec: SceneSpec = match &a.spec {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => SceneSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let inputs: Vec<&Path> = a.spec.iter().map(|p| p.as_path()).collect();
    let run = Run::new("gen", &spec, Some(spec.seed), &inputs)?;
    let scene = generate_scene(&spec, exec)?;
    write_scene(&a.out, &scene)?;
    run.finish(&[&a.out])
}

pub fn run_decompose(a: &DecomposeArgs, exec: Exec) -> AppResult<()> {
    let run = Run::new("decompose", json!({}), None, &[&a.scene])?;
    let scene = read_scene(&a.scene)?;
    write_decomposition(&scene, &a.out, exec)?;
    run.finish(&[&a.out])
}

pub fn run_train(a: &TrainArgs, exec: Exec) -> AppResult<()> {
    let cfg = TrainConfig {
        strategy: a.strategy,
        epochs: a.epochs,
        batch: a.batch,
        adam: AdamConfig {
            learning_rate: a.lr,
            ..AdamConfig::default()
        },
        lambda: a.lambda,
        seed: a.seed,
        detach_concepts: a.detach_concepts,
    };
    cfg.validate()?;
    let config = json!({
        "train": cfg,
        "train_per_class": a.train_per_class,
        "val_per_class": a.val_per_class,
    });
    let run = Run::new("train", config, Some(a.seed), &[&a.scene])?;
    let scene = read_scene(&a.scene)?;
    let table = scene_class_table(&scene)?;
    let (train_set, _) = split_for(&scene, a.train_per_class, a.val_per_class, a.seed, exec)?;
    let outcome = train(&train_set, table, &cfg, exec)?;
    write_checkpoint(&a.out, &outcome.model)?;
    let log_path = log_path(&a.out);
    write_json(&log_path, &outcome.log)?;
    run.finish(&[&a.out, &log_path])
}

/// `<model>.log.json`, the per-epoch training losses.
pub fn log_path(model: &Path) -> PathBuf {
    let mut name = model.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".log.json");
    model.with_file_name(name)
}

pub fn run_eval(a: &EvalArgs, exec: Exec) -> AppResult<()> {
    let model = read_checkpoint(&a.model)?;
    let config = json!({ "train_per_class": a.train_per_class, "val_per_class": a.val_per_class });
    let run = Run::new("eval", config, Some(model.config.seed), &[&a.model, &a.scene])?;
    let scene = read_scene(&a.scene)?;
    let (_, val) = split_for(&scene, a.train_per_class, a.val_per_class, model.config.seed, exec)?;
    let report = evaluate(&model, &val, exec)?;
    write_json(&a.report, &report)?;
    run.finish(&[&a.report])
}

fn load_state(model: &Path, scene: &Path, explain_seed: u64) -> AppResult<ServiceState> {
    ServiceState::new(read_checkpoint(model)?, read_scene(scene)?, explain_seed)
}

pub fn run_predict(a: &PredictArgs) -> AppResult<()> {
    let run = Run::new("predict", json!({ "row": a.row, "col": a.col }), None, &[&a.model, &a.scene])?;
    let model = read_checkpoint(&a.model)?;
    let scene = read_scene(&a.scene)?;
    let out = predict_one(&model, &scene, a.row, a.col)?;
    println!("{}", serde_json::to_string(&out)?);
    run.finish_detached(a.manifest.as_deref())
}

/// The `/api/predict` payload for one anchor.
pub fn predict_one(model: &PaCBMModel, scene: &Scene, row: usize, col: usize) -> AppResult<crate::api::PredictResponse> {
    let patch = scene.patch(row, col)?;
    let out = model.forward_patch(&patch)?;
    Ok(crate::api::PredictResponse {
        row: Some(row),
        col: Some(col),
        label_name: model.class_table.class_names()[out.label].clone(),
        concepts: out.concept_probs,
        direct_logits: out.direct_logits,
        concept_path_logits: out.concept_path_logits,
        label: out.label,
        direct_label: out.direct_label,
        true_label: patch.label.map(usize::from),
    })
}

pub fn run_explain(a: &ExplainArgs) -> AppResult<()> {
    let run = Run::new("explain", json!({}), Some(a.seed), &[&a.model])?;
    let model = read_checkpoint(&a.model)?;
    write_json(&a.out, &explain(&model, a.seed)?)?;
    run.finish(&[&a.out])
}

pub fn run_init(a: &InitArgs) -> AppResult<()> {
    let run = Run::new("init", json!({ "strategy": a.strategy, "lambda": a.lambda }), Some(a.seed), &[&a.scene])?;
    let scene = read_scene(&a.scene)?;
    let table = scene_class_table(&scene)?;
    let model = PaCBMModel::new(table, Normalization::identity(), ModelConfig::new(a.strategy, a.lambda, a.seed))?;
    write_checkpoint(&a.out, &model)?;
    run.finish(&[&a.out])
}

pub fn run_serve(a: &ServeArgs) -> AppResult<()> {
    let run = Run::new("serve", json!({ "bind": a.bind, "port": a.port }), None, &[&a.model, &a.scene])?;
    let state = Arc::new(load_state(&a.model, &a.scene, 0)?);
    let addr: SocketAddr = format!("{}:{}", a.bind, a.port)
        .parse()
        .map_err(|e| AppError::Argument(format!("bad bind address: {e}")))?;
    run.finish_detached(a.manifest.as_deref())?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("{}", json!({ "listening": listener.local_addr()?.to_string() }));
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok::<_, AppError>(())
    })
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", crate::error::ErrorLine { kind: "usage", message: first });
            return 2;
        }
    };
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let result = match &cli.command {
        Command::Gen(a) => run_gen(a, exec),
        Command::Decompose(a) => run_decompose(a, exec),
        Command::Train(a) => run_train(a, exec),
        Command::Eval(a) => run_eval(a, exec),
        Command::Predict(a) => run_predict(a),
        Command::Explain(a) => run_explain(a),
        Command::Serve(a) => run_serve(a),
        Command::Init(a) => run_init(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("{}", crate::error::ErrorLine { kind: e.kind(), message: &msg });
            1
        }
    }
}

