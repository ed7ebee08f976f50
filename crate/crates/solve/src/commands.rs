//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use residual_core::decode::{gap_row, greedy_solve, GapReport};
use residual_core::model::ModelParams;
use residual_core::oracle::build_table;
use residual_core::problem::generate;
use residual_core::residual::{verify_bound_with, ZeroValue};
use residual_core::training::Trainer;
use residual_core::{ProblemInstance, ValueFn};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cli::{EvalArgs, GenArgs, InstanceFormat, OracleArgs, ReportFormat, SolveArgs, TrainArgs, VerifyArgs};
use crate::error::{Result, SolveError};
use crate::formats::instance::{batch_csv, read_instances, write_instances};
use crate::formats::report::{gap_csv, BoundRecord, GapReportRecord, OracleRecord, SolveRecord};
use crate::formats::{metrics, Checkpoint, ConfigFile, GeneratorSpec, RunManifest};

/// Start time and arguments of the current invocation, for the manifest.
pub struct RunContext {
    args: Vec<String>,
    started: Instant,
    started_at: u64,
}

impl RunContext {
    pub fn start(args: Vec<String>) -> Self {
        Self {
            args,
            started: Instant::now(),
            started_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    fn manifest(
        &self,
        command: &str,
        seed: Option<u64>,
        config: serde_json::Value,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
    ) -> RunManifest {
        RunManifest {
            command: command.to_owned(),
            args: self.args.clone(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            config,
            inputs,
            outputs,
            started_at: self.started_at,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(SolveError::io(path))
}

/// Writes to `out`, or to standard output when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(SolveError::io("<stdout>")),
    }
}

fn jsonl<T: Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records always serialize") + "\n")
        .collect()
}

/// Where per-instance values come from.
pub enum ValueSource {
    Zero,
    Oracle,
    Model(Box<ModelParams>),
}

impl ValueSource {
    pub fn parse(spec: &str) -> Result<Self> {
        Ok(match spec {
            "zero" => ValueSource::Zero,
            "oracle" => ValueSource::Oracle,
            path => ValueSource::Model(Box::new(Checkpoint::load(Path::new(path))?.params)),
        })
    }

    fn inputs(spec: &str) -> Vec<PathBuf> {
        match spec {
            "zero" | "oracle" => Vec::new(),
            path => vec![PathBuf::from(path)],
        }
    }

    /// Runs `f` with this source's value function for `instance`.
    pub fn with<T>(
        &self,
        instance: &ProblemInstance,
        f: impl FnOnce(&dyn ValueFn) -> residual_core::Result<T>,
    ) -> Result<T> {
        Ok(match self {
            ValueSource::Zero => f(&ZeroValue)?,
            ValueSource::Oracle => f(&build_table(instance)?)?,
            ValueSource::Model(params) => {
                params.check_instance(instance)?;
                f(params.as_ref())?
            }
        })
    }
}

fn generator_spec(args: &GenArgs) -> Result<GeneratorSpec> {
    let mut table = toml::Table::new();
    table.insert("family".into(), toml::Value::String(args.family.clone()));
    let n = i64::try_from(args.n).map_err(|_| SolveError::Usage("n is too large".into()))?;
    table.insert("n".into(), toml::Value::Integer(n));
    for param in &args.params {
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| SolveError::Usage(format!("expected KEY=VALUE, got `{param}`")))?;
        let parsed: toml::Table = toml::from_str(&format!("v = {value}"))
            .map_err(|e| SolveError::Usage(format!("bad value for `{key}`: {e}")))?;
        table.insert(key.trim().to_owned(), parsed["v"].clone());
    }
    GeneratorSpec::deserialize(table).map_err(|e| SolveError::Config(e.to_string()))
}

pub fn gen(args: &GenArgs, ctx: &RunContext) -> Result<()> {
    let spec = generator_spec(args)?;
    let params = spec.to_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let instances = generate(&params, &mut rng, args.count)?;
    let text = match args.format {
        InstanceFormat::Jsonl => {
            let mut buf = Vec::new();
            write_instances(&mut buf, &instances).expect("in-memory write");
            String::from_utf8(buf).expect("JSON is UTF-8")
        }
        InstanceFormat::Csv => batch_csv(&instances),
    };
    write_file(&args.out, &text)?;
    let config = json!({
        "generator": GeneratorSpec::from_params(&params),
        "count": args.count,
        "format": match args.format { InstanceFormat::Jsonl => "jsonl", InstanceFormat::Csv => "csv" },
    });
    ctx.manifest("gen", Some(args.seed), config, Vec::new(), vec![args.out.clone()])
        .save(&RunManifest::path_for(&args.out))
}

pub fn train(args: &TrainArgs, ctx: &RunContext) -> Result<()> {
    let resumed = args.resume.as_deref().map(Checkpoint::load).transpose()?;
    let mut config = match (&args.config, &resumed) {
        (Some(path), _) => ConfigFile::load(path)?,
        (None, Some(ckpt)) => ckpt
            .config
            .clone()
            .ok_or_else(|| SolveError::Config("checkpoint carries no config; pass --config".into()))?,
        (None, None) => ConfigFile::default(),
    };
    if let Some(steps) = args.steps {
        config.steps = steps;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let core = config.to_core()?;
    let config = ConfigFile::from_core(&core);
    let mut trainer = match resumed {
        Some(ckpt) => {
            if ckpt.seed != core.seed {
                return Err(SolveError::Config(format!(
                    "checkpoint was trained with seed {}, config says {}",
                    ckpt.seed, core.seed
                )));
            }
            let state = ckpt
                .state
                .ok_or_else(|| SolveError::Config("checkpoint carries no training state".into()))?;
            Trainer::resume(core, ckpt.params, state)?
        }
        None => Trainer::new(core)?,
    };
    let stop = args.stop_after.unwrap_or(config.steps).min(config.steps);
    trainer.run_until(stop)?;

    let metrics_path = args.metrics.clone().unwrap_or_else(|| args.out.with_extension("metrics.csv"));
    metrics::write_metrics(&metrics_path, trainer.metrics(), args.resume.is_some())?;
    let baseline = trainer.baseline_gap();
    let (params, state, rows) = trainer.into_parts();
    Checkpoint {
        params,
        seed: config.seed,
        config: Some(config.clone()),
        state: Some(state),
    }
    .save(&args.out)?;

    if let Some(last) = rows.last() {
        eprintln!(
            "step {}: residual ma {:.6}, Ψ {:.6}, Φ {:.6}, decode gap {:.4} (random {:.4})",
            last.step, last.loss_ma, last.psi_exact_eval, last.phi_exact_eval, last.decode_gap_mean, baseline
        );
    }
    let mut inputs: Vec<PathBuf> = args.config.iter().cloned().collect();
    inputs.extend(args.resume.iter().cloned());
    let manifest_config = serde_json::to_value(&config).expect("configs always serialize");
    ctx.manifest("train", Some(config.seed), manifest_config, inputs, vec![args.out.clone(), metrics_path])
        .save(&RunManifest::path_for(&args.out))
}

/// Applies `f` to every instance on the rayon pool, keeping input order.
fn per_instance<T: Send>(
    instances: &[ProblemInstance],
    f: impl Fn(usize, &ProblemInstance) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    instances.par_iter().enumerate().map(|(i, inst)| f(i, inst)).collect()
}

fn save_manifest(
    ctx: &RunContext,
    command: &str,
    out: Option<&Path>,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: Vec<PathBuf>,
) -> Result<()> {
    match out {
        Some(out) => ctx
            .manifest(command, seed, config, inputs, vec![out.to_path_buf()])
            .save(&RunManifest::path_for(out)),
        None => Ok(()),
    }
}

pub fn solve(args: &SolveArgs, ctx: &RunContext) -> Result<()> {
    let instances = read_instances(&args.instances)?;
    let source = ValueSource::parse(&args.values.values)?;
    let records = per_instance(&instances, |i, inst| {
        let result = source.with(inst, |v| greedy_solve(v, inst))?;
        Ok(SolveRecord::new(i, &result, args.trace))
    })?;
    emit(args.out.as_deref(), &jsonl(&records))?;
    let mut inputs = vec![args.instances.clone()];
    inputs.extend(ValueSource::inputs(&args.values.values));
    let config = json!({ "values": args.values.values, "trace": args.trace });
    save_manifest(ctx, "solve", args.out.as_deref(), None, config, inputs)
}

pub fn eval(args: &EvalArgs, ctx: &RunContext) -> Result<()> {
    let instances = read_instances(&args.instances)?;
    let source = ValueSource::parse(&args.values.values)?;
    let rows = per_instance(&instances, |i, inst| {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(i as u64);
        source.with(inst, |v| gap_row(v, inst, i, &mut rng))
    })?;
    let report = GapReport::from_rows(rows);
    let text = match args.format {
        ReportFormat::Csv => gap_csv(&report),
        ReportFormat::Json => {
            serde_json::to_string_pretty(&GapReportRecord::from(&report)).expect("reports always serialize") + "\n"
        }
    };
    emit(args.out.as_deref(), &text)?;
    eprintln!(
        "{} instances: mean gap {:.6}, max gap {:.6}, random mean gap {:.6}",
        report.rows.len(),
        report.mean_gap,
        report.max_gap,
        report.random_mean_gap
    );
    let mut inputs = vec![args.instances.clone()];
    inputs.extend(ValueSource::inputs(&args.values.values));
    let format = match args.format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let config = json!({ "values": args.values.values, "format": format });
    save_manifest(ctx, "eval", args.out.as_deref(), Some(args.seed), config, inputs)
}

pub fn oracle(args: &OracleArgs, ctx: &RunContext) -> Result<()> {
    let instances = read_instances(&args.instances)?;
    let records = per_instance(&instances, |i, inst| Ok(OracleRecord::new(i, &build_table(inst)?, args.table)))?;
    emit(args.out.as_deref(), &jsonl(&records))?;
    let config = json!({ "table": args.table });
    save_manifest(ctx, "oracle", args.out.as_deref(), None, config, vec![args.instances.clone()])
}

pub fn verify_bound(args: &VerifyArgs, ctx: &RunContext) -> Result<()> {
    let instances = read_instances(&args.instances)?;
    let source = ValueSource::parse(&args.values.values)?;
    let records = per_instance(&instances, |i, inst| {
        let oracle = build_table(inst)?;
        let report = source.with(inst, |v| verify_bound_with(inst, v, &oracle))?;
        Ok(BoundRecord::new(i, &report))
    })?;
    emit(args.out.as_deref(), &jsonl(&records))?;
    let failed = records.iter().filter(|r| !r.holds).count();
    eprintln!("{} instances checked, {failed} violation(s)", records.len());
    let mut inputs = vec![args.instances.clone()];
    inputs.extend(ValueSource::inputs(&args.values.values));
    let config = json!({ "values": args.values.values });
    save_manifest(ctx, "verify-bound", args.out.as_deref(), None, config, inputs)?;
    if failed > 0 {
        return Err(SolveError::BoundViolated(failed));
    }
    Ok(())
}
