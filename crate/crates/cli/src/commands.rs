use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use bpm_core::detector::{write_curves_csv, write_replicates_csv, VerdictReport};
use bpm_core::systems::{SystemConfig, THETA_NAME, X_NAME, Y_NAME};
use bpm_core::{
    load_csv, run_pairwise, save_csv, simulate, staircase_theta, CsvSchema, Dataset, DetectionConfig, Error,
    PairwiseResult, Result, TimeSeries,
};
use serde::Serialize;

use crate::settings::{merge_detect, merge_system, DetectSettings, SystemFlags};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const REPLICATES_FILE: &str = "replicates.csv";
pub const VERDICTS_FILE: &str = "verdicts.json";

/// Written next to every output so a run can be repeated exactly.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    config_path: Option<&'a Path>,
    output_dir: &'a Path,
    seed: Option<u64>,
    tool_version: &'static str,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<&'a Path>,
    resolved: serde_json::Value,
}

impl RunManifest<'_> {
    fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)?;
        Ok(())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// `out.csv` -> `out.manifest.json`
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension(MANIFEST_FILE)
}

fn to_value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub system: SystemFlags,
    pub output: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = merge_system(args.config.as_deref(), &args.system)?.to_spec()?;
    let data = simulate(&spec)?;
    create_dir(parent_dir(&args.output))?;
    save_csv(&data, &args.output)?;
    RunManifest {
        command: "simulate",
        config_path: args.config.as_deref(),
        output_dir: parent_dir(&args.output),
        seed: None,
        tool_version: env!("CARGO_PKG_VERSION"),
        argv: std::env::args().collect(),
        input: None,
        resolved: to_value(&spec.to_config())?,
    }
    .write(&manifest_path_for(&args.output))?;
    println!("wrote {} samples to {}", data.len(), args.output.display());
    Ok(())
}

pub struct DetectArgs {
    pub data: PathBuf,
    pub config: Option<PathBuf>,
    pub settings: DetectSettings,
    pub jobs: Option<usize>,
    pub out_dir: PathBuf,
}

/// Input series after column selection.
struct Input {
    data: Dataset,
    x: String,
    y: String,
    theta: Option<String>,
}

fn header_has(path: &Path, column: &str) -> Result<bool> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| io_err(path, e))?;
    Ok(first.trim_end().split(',').any(|c| c.trim() == column))
}

fn load_input(path: &Path, s: &DetectSettings) -> Result<Input> {
    let x = s.x.clone().unwrap_or_else(|| X_NAME.to_owned());
    let y = s.y.clone().unwrap_or_else(|| Y_NAME.to_owned());
    check_theta_given(s)?;
    let trial_column = match &s.trial_column {
        Some(c) => Some(c.clone()),
        None => header_has(path, bpm_core::data::TRIAL_COLUMN)?.then(|| bpm_core::data::TRIAL_COLUMN.to_owned()),
    };
    let mut schema = CsvSchema::new().column(&x, &x).column(&y, &y);
    if let Some(t) = &s.theta {
        schema = schema.column(t, t);
    }
    if let Some(tc) = &trial_column {
        schema = schema.trial_column(tc);
    }
    let data = load_csv(path, &schema)?;
    let (data, theta) = match s.theta_staircase {
        Some(seg) => (with_staircase(data, seg, s.staircase_delta.unwrap_or(1.0))?, Some(THETA_NAME.to_owned())),
        None => (data, s.theta.clone()),
    };
    Ok(Input { data, x, y, theta })
}

fn check_theta_given(s: &DetectSettings) -> Result<()> {
    if s.needs_theta() && s.theta.is_none() && s.theta_staircase.is_none() {
        return Err(Error::Config(
            "BPM needs a θ series: pass --theta COLUMN or --theta-staircase SEG".into(),
        ));
    }
    Ok(())
}

/// Adds a staircase θ. Without trial ids in the data, the staircase segments
/// become the trial ids of every series.
fn with_staircase(data: Dataset, segment_length: usize, delta: f64) -> Result<Dataset> {
    if data.get(THETA_NAME).is_ok() {
        return Err(Error::Config(format!(
            "--theta-staircase would replace the existing `{THETA_NAME}` column"
        )));
    }
    let theta = staircase_theta(data.len(), segment_length, delta, 0.0)?;
    match data.trial_ids().map(<[i64]>::to_vec) {
        Some(ids) => {
            let mut data = data;
            data.insert(theta.with_trial_ids(Some(ids))?)?;
            Ok(data)
        }
        None => {
            let ids = theta.trial_ids().map(<[i64]>::to_vec);
            let mut series: Vec<TimeSeries> = data
                .series()
                .iter()
                .map(|s| s.clone().with_trial_ids(ids.clone()))
                .collect::<Result<_>>()?;
            series.push(theta);
            Dataset::new(series)
        }
    }
}

fn run_all(input: &Input, s: &DetectSettings, jobs: Option<usize>) -> Result<Vec<(DetectionConfig, PairwiseResult)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        s.method_choice()
            .methods()
            .into_iter()
            .map(|m| {
                let cfg = s.detection_config(m);
                let res = run_pairwise(&input.data, &input.x, &input.y, input.theta.as_deref(), &cfg)?;
                Ok((cfg, res))
            })
            .collect()
    })
}

fn resolved_detection(s: &DetectSettings, runs: &[(DetectionConfig, PairwiseResult)]) -> Result<serde_json::Value> {
    let configs: Vec<&DetectionConfig> = runs.iter().map(|r| &r.0).collect();
    Ok(serde_json::json!({ "settings": to_value(s)?, "detection": to_value(&configs)? }))
}

pub fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let s = merge_detect(args.config.as_deref(), &args.settings)?;
    let input = load_input(&args.data, &s)?;
    let runs = run_all(&input, &s, args.jobs)?;

    create_dir(&args.out_dir)?;
    let curves: Vec<_> = runs
        .iter()
        .flat_map(|(_, r)| r.directions().map(|d| &d.curve))
        .collect();
    let path = args.out_dir.join(CURVES_FILE);
    write_curves_csv(curves.iter().copied(), File::create(&path).map_err(|e| io_err(&path, e))?)?;
    let path = args.out_dir.join(REPLICATES_FILE);
    write_replicates_csv(curves.iter().copied(), File::create(&path).map_err(|e| io_err(&path, e))?)?;

    let verdicts: Vec<VerdictReport> = runs
        .iter()
        .flat_map(|(cfg, r)| r.directions().map(|d| VerdictReport::new(d, cfg)))
        .collect();
    let path = args.out_dir.join(VERDICTS_FILE);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &verdicts)?;

    RunManifest {
        command: "detect",
        config_path: args.config.as_deref(),
        output_dir: &args.out_dir,
        seed: Some(s.seed.unwrap_or(0)),
        tool_version: env!("CARGO_PKG_VERSION"),
        argv: std::env::args().collect(),
        input: Some(&args.data),
        resolved: resolved_detection(&s, &runs)?,
    }
    .write(&args.out_dir.join(MANIFEST_FILE))?;

    for v in &verdicts {
        println!(
            "{} {} -> {}: final skill {:.4}, converged {}",
            v.method, v.cause, v.effect, v.final_skill, v.converged
        );
    }
    Ok(())
}

pub struct SweepArgs {
    pub data: Option<PathBuf>,
    pub spec: Option<PathBuf>,
    pub system: SystemFlags,
    pub config: Option<PathBuf>,
    pub settings: DetectSettings,
    pub jobs: Option<usize>,
    pub output: PathBuf,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let s = merge_detect(args.config.as_deref(), &args.settings)?;
    let from_system = args.spec.is_some() || !args.system.is_empty();
    let (input, system) = match (&args.data, from_system) {
        (Some(_), true) => {
            return Err(Error::Config(
                "give either a data file or a system spec, not both".into(),
            ))
        }
        (None, false) => {
            return Err(Error::Config(
                "sweep needs a data file or a system spec (--spec or --case)".into(),
            ))
        }
        (Some(path), false) => (load_input(path, &s)?, None),
        (None, true) => {
            if s.theta_staircase.is_some() {
                return Err(Error::Config(
                    "--theta-staircase applies to data files; simulated data already has θ".into(),
                ));
            }
            let spec = merge_system(args.spec.as_deref(), &args.system)?.to_spec()?;
            let input = Input {
                data: simulate(&spec)?,
                x: s.x.clone().unwrap_or_else(|| X_NAME.to_owned()),
                y: s.y.clone().unwrap_or_else(|| Y_NAME.to_owned()),
                theta: Some(s.theta.clone().unwrap_or_else(|| THETA_NAME.to_owned())),
            };
            (input, Some(spec.to_config()))
        }
    };
    let runs = run_all(&input, &s, args.jobs)?;

    create_dir(parent_dir(&args.output))?;
    let file = File::create(&args.output).map_err(|e| io_err(&args.output, e))?;
    write_replicates_csv(
        runs.iter().flat_map(|(_, r)| r.directions().map(|d| &d.curve)),
        BufWriter::new(file),
    )?;

    let mut resolved = resolved_detection(&s, &runs)?;
    if let Some(system) = system {
        resolved["system"] = to_value::<SystemConfig>(&system)?;
    }
    RunManifest {
        command: "sweep",
        config_path: args.config.as_deref().or(args.spec.as_deref()),
        output_dir: parent_dir(&args.output),
        seed: Some(s.seed.unwrap_or(0)),
        tool_version: env!("CARGO_PKG_VERSION"),
        argv: std::env::args().collect(),
        input: args.data.as_deref(),
        resolved,
    }
    .write(&manifest_path_for(&args.output))?;
    let rows: usize = runs
        .iter()
        .flat_map(|(_, r)| r.directions().map(|d| d.curve.len() * d.curve.replicates))
        .sum();
    println!("wrote {rows} rows to {}", args.output.display());
    Ok(())
}
