use std::fmt;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{parse_model, Comparison, Threshold};
use crate::refine::{
    exploration_loop, refinement_loop, single_shot, HeuristicConfig, IterationLog, LoopBudget,
    LoopOptions, LoopOutcome,
};
use crate::scalar::{Rational, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SingleShot,
    Refine,
    BeliefExplore,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SingleShot => "single-shot",
            Mode::Refine => "refine",
            Mode::BeliefExplore => "belief-explore",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Mode::SingleShot, Mode::Refine, Mode::BeliefExplore]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Parses `<=0.7`, `>= 1/2` and similar.
pub fn parse_threshold(text: &str) -> Result<Threshold<Rational>> {
    let text = text.trim();
    let (comparison, rest) = if let Some(rest) = text.strip_prefix("<=") {
        (Comparison::AtMost, rest)
    } else if let Some(rest) = text.strip_prefix(">=") {
        (Comparison::AtLeast, rest)
    } else {
        return Err(Error::Config(format!(
            "threshold `{text}` must start with <= or >="
        )));
    };
    let value = Rational::parse(rest).ok_or_else(|| {
        Error::Config(format!("threshold value `{}` is not a number", rest.trim()))
    })?;
    Ok(Threshold { comparison, value })
}

pub const DEFAULT_RESOLUTION: u64 = 4;

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    /// Grid resolution for single-shot; [`DEFAULT_RESOLUTION`] when absent.
    pub resolution: Option<u64>,
    pub heuristic: HeuristicConfig,
    pub time: Duration,
    pub max_iterations: Option<usize>,
    pub gap_target: f64,
    pub exact: bool,
    /// Overrides the threshold of the model file.
    pub threshold: Option<Threshold<Rational>>,
    pub strict_cutoff: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Refine,
            resolution: None,
            heuristic: HeuristicConfig::default(),
            time: Duration::from_secs(60),
            max_iterations: None,
            gap_target: 1e-6,
            exact: false,
            threshold: None,
            strict_cutoff: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == Some(0) {
            return Err(Error::Config("resolutions are positive".into()));
        }
        Ok(())
    }

    fn loop_options(&self) -> LoopOptions {
        LoopOptions {
            heuristic: self.heuristic.clone(),
            budget: LoopBudget {
                time: Some(self.time),
                max_iterations: self.max_iterations,
            },
            gap_target: self.gap_target,
            strict_cutoff: self.strict_cutoff,
            ..LoopOptions::default()
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub mode: String,
    pub heuristic: String,
    #[serde(rename = "L")]
    pub lower: f64,
    #[serde(rename = "U")]
    pub upper: f64,
    pub iterations: usize,
    pub abstraction_states: usize,
    pub time_s: f64,
    pub status: String,
}

/// The record plus what the CLI needs beyond it.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub record: RunRecord,
    pub threshold_holds: Option<bool>,
    pub log: Vec<IterationLog>,
    pub abstraction_dump: Option<String>,
}

fn execute<T: Scalar>(config: &RunConfig, model: &str, text: &str) -> Result<RunReport> {
    let (pomdp, mut spec) = parse_model::<T>(text)?;
    if let Some(t) = &config.threshold {
        spec.threshold = Some(Threshold {
            comparison: t.comparison,
            value: T::parse(&t.value.render())
                .ok_or_else(|| Error::Config("threshold not representable".into()))?,
        });
    }
    let start = Instant::now();
    let options = config.loop_options();
    let outcome: LoopOutcome<T> = match config.mode {
        Mode::SingleShot => {
            let eta = config.resolution.unwrap_or(DEFAULT_RESOLUTION);
            single_shot(&pomdp, &spec, eta, &options)?
        }
        Mode::Refine => refinement_loop(&pomdp, &spec, &options)?,
        Mode::BeliefExplore => exploration_loop(&pomdp, &spec, &options)?,
    };
    let (lower, upper) = outcome.bounds();
    let record = RunRecord {
        model: model.to_string(),
        mode: config.mode.to_string(),
        heuristic: config.heuristic.name.clone(),
        lower,
        upper,
        iterations: outcome.iterations,
        abstraction_states: outcome.abstraction.as_ref().map_or(0, |a| a.num_states()),
        time_s: start.elapsed().as_secs_f64(),
        status: outcome.status.to_string(),
    };
    Ok(RunReport {
        record,
        threshold_holds: outcome.threshold_holds,
        abstraction_dump: outcome.abstraction.as_ref().map(|a| a.export()),
        log: outcome.log,
    })
}

/// Verifies the model in `text` under `config`.
pub fn run(config: &RunConfig, model: &str, text: &str) -> Result<RunReport> {
    config.validate()?;
    if config.exact {
        execute::<Rational>(config, model, text)
    } else {
        execute::<f64>(config, model, text)
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "model",
    "mode",
    "heuristic",
    "L",
    "U",
    "iterations",
    "abstraction_states",
    "time_s",
    "status",
];

/// Appends records to `path`, writing the header when the file is new or
/// empty.
pub fn append_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let fresh = std::fs::metadata(path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(fresh)
        .from_writer(file);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for r in reader.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

/// Writes the iteration log as JSON lines.
pub fn write_log(path: &Path, log: &[IterationLog]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    for entry in log {
        serde_json::to_writer(&mut file, entry)?;
        writeln!(file)?;
    }
    Ok(())
}
