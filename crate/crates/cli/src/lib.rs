//! Command dispatch for the `nlbox` binary.

pub mod box_spec;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use nlbox::hidden_variable::{
    hv_dependence, lambda_sweep, p0_grid, pr_hv_model, sweep_csv, truth_table, truth_table_csv,
    HvDependence,
};
use nlbox::sampler::{
    compare, empirical_chsh, records_csv, sample_box, sample_box_records, sample_hv,
    sample_hv_records,
};
use nlbox::{
    chsh, locality, ChshResult, EmpiricalTable, Execution, LambdaDist, LocalityReport, Tolerance,
};

use crate::box_spec::{parse_box_spec, BoxSpec, SpecError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Emit the box table as JSON (or CSV).
    Build,
    /// No-signaling, PI, OI, factorizability and conditioned dependence.
    Analyze,
    /// Correlations E(x,y) and the CHSH value.
    Chsh,
    /// Truth table of the PR hidden-variable model.
    Table1,
    /// Seeded Monte Carlo sampling.
    Sample,
    /// CHSH, no-signaling and the PR relation over a grid of P(λ=0).
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Command-line configuration.
#[derive(Clone, Debug, Parser)]
#[command(name = "nlbox", version, about = "Analyze bipartite correlation boxes")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,

    /// pr | local:f0,f1,g0,g1 | hv:p0=R | singlet:θa0,θa1,θb0,θb1 | file:PATH | mix:S@W+S@W...
    #[arg(long = "box", value_name = "SPEC")]
    pub box_spec: Option<String>,

    /// Tolerance for every comparison.
    #[arg(long = "eps", default_value_t = Tolerance::DEFAULT_EPS, allow_negative_numbers = true)]
    pub tolerance: f64,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Trials per setting pair.
    #[arg(long)]
    pub trials: Option<u64>,

    /// Defaults to csv for table1 and json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,

    #[arg(short = 'o', value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// p0 grid for sweep, START:STOP:STEP.
    #[arg(long)]
    pub grid: Option<String>,

    /// With sample: dump every trial as `x,y,lambda,a,b` CSV.
    #[arg(long)]
    pub records: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(SpecError),
    #[error("{0}")]
    Parameter(String),
    #[error("{0}")]
    Validation(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Spec(SpecError::Grammar { .. }) => 3,
            CliError::Spec(SpecError::Semantic { .. }) | CliError::Parameter(_) => 4,
            CliError::Spec(SpecError::InvalidFile { .. }) | CliError::Validation(_) => 5,
            CliError::Spec(SpecError::Io { .. }) | CliError::Io { .. } => 6,
        }
    }
}

impl From<SpecError> for CliError {
    fn from(e: SpecError) -> Self {
        CliError::Spec(e)
    }
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    label: &'a str,
    #[serde(flatten)]
    report: LocalityReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    hv_dependence: Option<HvDependence>,
}

#[derive(Serialize)]
struct SampleOutput<'a> {
    label: &'a str,
    seed: u64,
    trials_per_setting: u64,
    counts: &'a nlbox::sampler::Counts,
    chsh: ChshResult,
    linf: f64,
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("outputs always serialize");
    s.push('\n');
    s
}

fn tolerance(cfg: &RunConfig) -> Result<Tolerance, CliError> {
    Tolerance::new(cfg.tolerance).map_err(|e| CliError::Parameter(e.to_string()))
}

fn require_box(cfg: &RunConfig, tol: Tolerance) -> Result<BoxSpec, CliError> {
    let spec = cfg
        .box_spec
        .as_deref()
        .ok_or_else(|| CliError::Usage(format!("{:?} requires --box", cfg.command)))?;
    Ok(parse_box_spec(spec, tol)?)
}

fn validated_table(spec: &BoxSpec, tol: Tolerance) -> Result<nlbox::BoxTable, CliError> {
    let t = spec.table();
    t.validate(tol)
        .map_err(|v| CliError::Validation(nlbox::Error::InvalidTable(v).to_string()))?;
    Ok(t)
}

fn unsupported(cmd: Command, format: Format) -> CliError {
    CliError::Parameter(format!("{format:?} output is not available for {cmd:?}").to_lowercase())
}

/// Parses `START:STOP:STEP`.
pub fn parse_grid(s: &str) -> Result<Vec<LambdaDist>, CliError> {
    let parts: Vec<_> = s.split(':').collect();
    let bad = || CliError::Parameter(format!("malformed grid {s:?}, expected START:STOP:STEP"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    p0_grid(nums[0], nums[1], nums[2]).map_err(|e| CliError::Parameter(format!("grid {s:?}: {e}")))
}

/// Runs one command and returns what it would print.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let tol = tolerance(cfg)?;
    let exec = Execution::default();
    let format = cfg.format.unwrap_or(match cfg.command {
        Command::Table1 => Format::Csv,
        _ => Format::Json,
    });

    match cfg.command {
        Command::Build => {
            let t = validated_table(&require_box(cfg, tol)?, tol)?;
            Ok(match format {
                Format::Json => json_line(&t),
                Format::Csv => {
                    let mut out = String::from("x,y,a,b,p\n");
                    for (x, y, a, b, p) in t.cells() {
                        out.push_str(&format!("{x},{y},{a},{b},{p}\n"));
                    }
                    out
                }
            })
        }
        Command::Analyze => {
            if format == Format::Csv {
                return Err(unsupported(cfg.command, format));
            }
            let spec = require_box(cfg, tol)?;
            let t = validated_table(&spec, tol)?;
            let hv_dependence = match &spec {
                BoxSpec::Hv(m) => Some(hv_dependence(m)),
                BoxSpec::Table(_) => None,
            };
            let out = AnalyzeOutput {
                label: t.label(),
                report: locality::analyze(&t, tol),
                hv_dependence,
            };
            Ok(json_line(&out))
        }
        Command::Chsh => {
            if format == Format::Csv {
                return Err(unsupported(cfg.command, format));
            }
            let t = validated_table(&require_box(cfg, tol)?, tol)?;
            Ok(json_line(&chsh::chsh_value(&t)))
        }
        Command::Table1 => {
            let model = match &cfg.box_spec {
                None => pr_hv_model(LambdaDist::uniform()),
                Some(s) => match parse_box_spec(s, tol)? {
                    BoxSpec::Hv(m) => m,
                    BoxSpec::Table(_) => {
                        return Err(CliError::Parameter(format!(
                            "table1 needs a hidden-variable model (hv:p0=...), got {s:?}"
                        )))
                    }
                },
            };
            let rows = truth_table(&model);
            Ok(match format {
                Format::Csv => truth_table_csv(&rows),
                Format::Json => json_line(&rows),
            })
        }
        Command::Sample => {
            let spec = require_box(cfg, tol)?;
            let seed = cfg
                .seed
                .ok_or_else(|| CliError::Usage("sample requires --seed".into()))?;
            let trials = cfg
                .trials
                .ok_or_else(|| CliError::Usage("sample requires --trials".into()))?;
            if trials == 0 {
                return Err(CliError::Parameter("--trials must be at least 1".into()));
            }
            let exact = validated_table(&spec, tol)?;
            if cfg.records {
                let recs = match &spec {
                    BoxSpec::Hv(m) => sample_hv_records(m, trials, seed),
                    BoxSpec::Table(t) => sample_box_records(t, trials, seed),
                }
                .map_err(|e| CliError::Parameter(e.to_string()))?;
                return Ok(records_csv(&recs));
            }
            let empirical: EmpiricalTable = match &spec {
                BoxSpec::Hv(m) => sample_hv(m, trials, seed, exec),
                BoxSpec::Table(t) => sample_box(t, trials, seed, exec),
            }
            .map_err(|e| CliError::Parameter(e.to_string()))?;
            match format {
                Format::Csv => Ok(empirical.to_csv()),
                Format::Json => {
                    let chsh = empirical_chsh(&empirical)
                        .map_err(|e| CliError::Parameter(e.to_string()))?;
                    let cmp = compare(&empirical, &exact)
                        .map_err(|e| CliError::Parameter(e.to_string()))?;
                    Ok(json_line(&SampleOutput {
                        label: exact.label(),
                        seed,
                        trials_per_setting: trials,
                        counts: &empirical.counts,
                        chsh,
                        linf: cmp.linf,
                    }))
                }
            }
        }
        Command::Sweep => {
            let grid = cfg
                .grid
                .as_deref()
                .ok_or_else(|| CliError::Usage("sweep requires --grid START:STOP:STEP".into()))?;
            let points = lambda_sweep(&parse_grid(grid)?, tol, exec);
            Ok(match format {
                Format::Json => json_line(&points),
                Format::Csv => sweep_csv(&points),
            })
        }
    }
}

/// Runs the command and writes its output to `-o` or standard output.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let out = run(cfg)?;
    match &cfg.output {
        Some(path) => fs::write(path, out).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("nlbox").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn chsh_of_pr_box() {
        let out = run(&cfg(&["chsh", "--box", "pr"])).unwrap();
        assert_eq!(out, "{\"e\":[[1.0,1.0],[1.0,-1.0]],\"s\":4.0}\n");
    }

    #[test]
    fn table1_defaults_to_csv() {
        let out = run(&cfg(&["table1"])).unwrap();
        assert!(out.starts_with("x,y,lambda,a,b\n0,0,0,0,0\n"));
        let json = run(&cfg(&["table1", "--format", "json"])).unwrap();
        assert!(json.starts_with("[{\"x\":0,\"y\":0,\"lambda\":0,\"a\":0,\"b\":0}"));
    }

    #[test]
    fn analyze_pr_box() {
        let out = run(&cfg(&["analyze", "--box", "pr"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["no_signaling"]["status"], "holds");
        assert_eq!(v["outcome_independence"]["status"], "violated");
        assert!(v.get("hv_dependence").is_none());

        let out = run(&cfg(&["analyze", "--box", "hv:p0=0.3"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["hv_dependence"]["b_depends_on_x"], true);
        assert_eq!(
            v["no_signaling"]["witnesses"][0],
            serde_json::json!([0, 0, 0, 0, 0.3, 0.7])
        );
    }

    #[test]
    fn missing_arguments_are_usage_errors() {
        assert_eq!(run(&cfg(&["chsh"])).unwrap_err().exit_code(), 2);
        assert_eq!(
            run(&cfg(&["sample", "--box", "pr", "--trials", "3"]))
                .unwrap_err()
                .exit_code(),
            2
        );
        assert_eq!(run(&cfg(&["sweep"])).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn error_classes_have_distinct_codes() {
        assert_eq!(
            run(&cfg(&["chsh", "--box", "nope"]))
                .unwrap_err()
                .exit_code(),
            3
        );
        assert_eq!(
            run(&cfg(&["chsh", "--box", "mix:pr@0.2+pr@0.2"]))
                .unwrap_err()
                .exit_code(),
            4
        );
        assert_eq!(
            run(&cfg(&["chsh", "--box", "pr", "--eps", "-1"]))
                .unwrap_err()
                .exit_code(),
            4
        );
        assert_eq!(
            run(&cfg(&["sweep", "--grid", "0:1"]))
                .unwrap_err()
                .exit_code(),
            4
        );
        assert_eq!(
            run(&cfg(&["chsh", "--box", "file:/no/such/file.json"]))
                .unwrap_err()
                .exit_code(),
            6
        );
    }

    #[test]
    fn sweep_output() {
        let out = run(&cfg(&["sweep", "--grid", "0:1:0.5"])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        assert_eq!(
            v[1],
            serde_json::json!({"p0": 0.5, "chsh": 4.0, "no_signaling": "holds", "constraint_ok": true})
        );
        assert_eq!(v[0]["no_signaling"], "violated");
    }

    #[test]
    fn sample_records_csv() {
        let out = run(&cfg(&[
            "sample",
            "--box",
            "hv:p0=1",
            "--seed",
            "1",
            "--trials",
            "2",
            "--records",
        ]))
        .unwrap();
        assert_eq!(out, "x,y,lambda,a,b\n0,0,0,0,0\n0,0,0,0,0\n0,1,0,0,0\n0,1,0,0,0\n1,0,0,1,1\n1,0,0,1,1\n1,1,0,1,0\n1,1,0,1,0\n");
    }
}
