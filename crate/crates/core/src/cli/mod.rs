//! Command-line front end. JSON in, JSON or CSV out.
//!
//! Exit codes: 0 success, 1 a checked relation failed, 2 schema or usage
//! error, 3 unphysical input state.

mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelConfig};
use crate::engine::{self, DualityReport, InterferometerConfig};
use crate::error::Error;
use crate::qmath::complex_json::ReIm;
use crate::qmath::{bloch_to_density, ComplexMatrix2, DensityOperator, PIPELINE_TOL};
use crate::sqds::{self, Branch};

pub use verify::{run_cases, verify_random, Case, ChannelInput, SqdsInput, VerifySummary};

pub const DEFAULT_SEED: u64 = 20_020_704;
pub const SEED_ENV: &str = "WHICHWAY_SEED";
/// Monte-Carlo trials are split into this many ChaCha8 streams.
pub const CHANNEL_SHARDS: u64 = 16;
/// Every fig3 row must satisfy D² + V² = 1 to this level.
pub const FIG3_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "whichway", version, about = "Wave-particle duality with a quantum which-way detector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Seed for every random draw.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Duality report for one configuration read from JSON.
    Report {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// D², V² and the Englert slack over a (P, Q) grid with pure states.
    SweepFig3 {
        #[arg(long, default_value = "101x101")]
        grid: Grid,
    },
    /// f_Q and its branch over a (P_Q, Q_D) grid.
    SweepFq {
        #[arg(long, default_value = "101x101")]
        grid: Grid,
        /// Norm of the initial Detecton Bloch vector.
        #[arg(long, default_value_t = 0.882)]
        s_norm: f64,
    },
    /// Classical channel quantities plus a Monte-Carlo betting run.
    Channel {
        #[arg(long)]
        w_plus: f64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
    },
    /// Check every invariant on random instances, or replay a case file.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// Regression file to replay instead of drawing random cases.
        #[arg(long = "in", value_name = "PATH")]
        replay: Option<PathBuf>,
    },
}

/// `NxM` grid size, both at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
        let (rows, cols) = (parse(a)?, parse(b)?);
        if rows < 2 || cols < 2 {
            return Err(format!("grid counts must be at least 2, got {rows}x{cols}"));
        }
        Ok(Grid { rows, cols })
    }
}

fn axis(i: usize, n: usize, max: f64) -> f64 {
    if i + 1 == n {
        max
    } else {
        max * (i as f64 / (n - 1) as f64)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Physics(#[from] Error),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Physics(Error::ConventionViolation { .. }) => 1,
            CliError::Physics(_) => 3,
            _ => 2,
        }
    }
}

/// Deserialize JSON, reporting the path of the offending field.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Schema { path: e.path().to_string(), message: e.inner().to_string() })
}

pub type MatrixInput = [[ReIm; 2]; 2];

fn matrix_from_input(m: &MatrixInput) -> ComplexMatrix2 {
    ComplexMatrix2::new(m[0][0].into(), m[0][1].into(), m[1][0].into(), m[1][1].into())
}

fn matrix_to_input(m: &ComplexMatrix2) -> MatrixInput {
    [[m.get(0, 0).into(), m.get(0, 1).into()], [m.get(1, 0).into(), m.get(1, 1).into()]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DetectorInput {
    Bloch([f64; 3]),
    Matrix(MatrixInput),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitariesInput {
    Matrices {
        u_plus: MatrixInput,
        u_minus: MatrixInput,
    },
    /// U± = exp[(i/2)(φ_D ± Φ)σz]
    Sqds {
        phi_d: f64,
        entangling_phase: f64,
    },
}

/// Input schema of `report`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportInput {
    pub s_q0: [f64; 3],
    pub rho_d0: DetectorInput,
    pub unitaries: UnitariesInput,
    #[serde(default)]
    pub phi: f64,
}

impl ReportInput {
    pub fn to_config(&self) -> crate::Result<InterferometerConfig> {
        let rho_d0 = match &self.rho_d0 {
            DetectorInput::Bloch(s) => bloch_to_density((*s).into())?,
            DetectorInput::Matrix(m) => DensityOperator::new(matrix_from_input(m))?,
        };
        let (u_plus, u_minus) = match &self.unitaries {
            UnitariesInput::Matrices { u_plus, u_minus } => (matrix_from_input(u_plus), matrix_from_input(u_minus)),
            UnitariesInput::Sqds { phi_d, entangling_phase } => {
                sqds::detecton_phase_unitaries(*phi_d, *entangling_phase)
            }
        };
        InterferometerConfig::new(self.s_q0.into(), rho_d0, u_plus, u_minus, self.phi)
    }

    pub fn from_config(cfg: &InterferometerConfig) -> Self {
        ReportInput {
            s_q0: cfg.s_q0().as_array(),
            rho_d0: DetectorInput::Matrix(matrix_to_input(cfg.rho_d0().matrix())),
            unitaries: UnitariesInput::Matrices {
                u_plus: matrix_to_input(cfg.u_plus()),
                u_minus: matrix_to_input(cfg.u_minus()),
            },
            phi: cfg.phi(),
        }
    }
}

/// Report for a JSON configuration, and the exit code it implies.
pub fn cmd_report(json: &str) -> Result<(DualityReport, i32), CliError> {
    let input: ReportInput = parse_json(json)?;
    let cfg = input.to_config()?;
    engine::evolve_full(&cfg)?;
    let report = engine::duality_report(&cfg);
    let code = if report.holds(PIPELINE_TOL) { 0 } else { 1 };
    Ok((report, code))
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fig3Row {
    pub p: f64,
    pub q: f64,
    pub d2: f64,
    pub v2: f64,
    pub slack: f64,
}

/// Pure Quanton with P = s_Qx, pure Detecton with V_D0 = 1 and Φ = arcsin Q,
/// evaluated through the generic interferometer.
pub fn fig3_row(p: f64, q: f64) -> crate::Result<Fig3Row> {
    let cfg = sqds::to_engine_config(&sqds::fq_grid_config(p, q, 1.0)?);
    let d = engine::distinguishability(&cfg);
    let v = engine::visibility(&cfg);
    let (d2, v2) = (d * d, v * v);
    Ok(Fig3Row { p, q, d2, v2, slack: 1.0 - d2 - v2 })
}

pub fn sweep_fig3(grid: Grid) -> crate::Result<Vec<Fig3Row>> {
    (0..grid.rows * grid.cols)
        .into_par_iter()
        .map(|k| fig3_row(axis(k / grid.cols, grid.rows, 1.0), axis(k % grid.cols, grid.cols, 1.0)))
        .collect()
}

pub fn fig3_csv(rows: &[Fig3Row]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["P", "Q", "D2", "V2", "slack"])?;
    for r in rows {
        w.write_record([r.p, r.q, r.d2, r.v2, r.slack].map(fmt_num))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FqValue {
    Defined(f64, Branch),
    Undefined(Branch),
    /// Q_D outside [0, |s_D0|].
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FqRow {
    pub p_q: f64,
    pub q_d: f64,
    pub value: FqValue,
}

pub fn fq_row(p_q: f64, q_d: f64, s_norm: f64) -> FqRow {
    let value = match sqds::fq_grid_config(p_q, q_d, s_norm) {
        Err(_) => FqValue::Skipped,
        Ok(cfg) => match sqds::f_q(&cfg) {
            Ok(f) => FqValue::Defined(f, sqds::branch(&cfg)),
            Err(_) => FqValue::Undefined(sqds::branch(&cfg)),
        },
    };
    FqRow { p_q, q_d, value }
}

pub fn sweep_fq(grid: Grid, s_norm: f64) -> Result<Vec<FqRow>, CliError> {
    if !(0.0..=1.0).contains(&s_norm) {
        return Err(CliError::Usage(format!("--s-norm must lie in [0, 1], got {s_norm}")));
    }
    Ok((0..grid.rows * grid.cols)
        .into_par_iter()
        .map(|k| fq_row(axis(k / grid.cols, grid.rows, 1.0), axis(k % grid.cols, grid.cols, s_norm), s_norm))
        .collect())
}

pub fn fq_csv(rows: &[FqRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["P_Q", "Q_D", "f_Q", "branch"])?;
    for r in rows {
        let (f, b) = match r.value {
            FqValue::Defined(f, b) => (fmt_num(f), b.as_str()),
            FqValue::Undefined(b) => ("undefined".to_string(), b.as_str()),
            FqValue::Skipped => ("skipped".to_string(), "skipped"),
        };
        w.write_record([fmt_num(r.p_q), fmt_num(r.q_d), f, b.to_string()])?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub w_plus: f64,
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "P")]
    pub predictability: f64,
    #[serde(rename = "Q")]
    pub quality: f64,
    #[serde(rename = "D")]
    pub distinguishability: f64,
    #[serde(rename = "L_prior")]
    pub prior_likelihood: f64,
    #[serde(rename = "L_posterior")]
    pub posterior_likelihood: f64,
    #[serde(rename = "L_empirical")]
    pub empirical_likelihood: f64,
    pub binomial_3sigma: f64,
    pub pass: bool,
}

pub fn cmd_channel(w_plus: f64, epsilon: f64, trials: u64, seed: u64) -> Result<ChannelSummary, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let cfg = ChannelConfig::new(w_plus, epsilon).map_err(|e| CliError::Usage(e.to_string()))?;
    let posterior = channel::posterior_likelihood(&cfg);
    let empirical = channel::monte_carlo_bet_sharded(&cfg, trials, seed, CHANNEL_SHARDS);
    let sigma3 = channel::binomial_3sigma(posterior, trials);
    Ok(ChannelSummary {
        w_plus,
        epsilon,
        trials,
        seed,
        predictability: channel::predictability(&cfg),
        quality: channel::channel_quality(&cfg),
        distinguishability: channel::total_distinguishability(&cfg),
        prior_likelihood: channel::prior_likelihood(&cfg),
        posterior_likelihood: posterior,
        empirical_likelihood: empirical,
        binomial_3sigma: sigma3,
        pass: (empirical - posterior).abs() <= sigma3,
    })
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable report");
    v.push(b'\n');
    v
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes),
        None => io::stdout().lock().write_all(bytes),
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Runs one command and returns its exit code.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Report { input } => {
            let (report, code) = cmd_report(&read_input(input)?)?;
            emit(out, &to_json(&report))?;
            Ok(code)
        }
        Command::SweepFig3 { grid } => {
            let rows = sweep_fig3(*grid)?;
            emit(out, &fig3_csv(&rows)?)?;
            Ok(if rows.iter().all(|r| r.slack.abs() <= FIG3_TOL) { 0 } else { 1 })
        }
        Command::SweepFq { grid, s_norm } => {
            let rows = sweep_fq(*grid, *s_norm)?;
            emit(out, &fq_csv(&rows)?)?;
            let bounded = rows.iter().all(|r| match r.value {
                FqValue::Defined(f, _) => (0.0..=1.0 + sqds::SQDS_TOL).contains(&f),
                _ => true,
            });
            Ok(if bounded { 0 } else { 1 })
        }
        Command::Channel { w_plus, epsilon, trials } => {
            let summary = cmd_channel(*w_plus, *epsilon, *trials, cli.seed)?;
            emit(out, &to_json(&summary))?;
            Ok(0)
        }
        Command::Verify { samples, replay } => {
            let summary = match replay {
                Some(path) => {
                    let file: verify::CaseFile = parse_json(&read_input(path)?)?;
                    run_cases(&file.cases)
                }
                None => {
                    if *samples == 0 {
                        return Err(CliError::Usage("--samples must be at least 1".into()));
                    }
                    verify_random(*samples, cli.seed)
                }
            };
            emit(out, &to_json(&summary))?;
            Ok(if summary.passed { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const DETECTOR_OFF: &str = r#"{
        "s_q0": [0.6, 0.0, 0.8],
        "rho_d0": {"bloch": [0.0, 0.0, 1.0]},
        "unitaries": {"matrices": {
            "u_plus": [[{"re": 1, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 1, "im": 0}]],
            "u_minus": [[{"re": 1, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 1, "im": 0}]]
        }},
        "phi": 0.25
    }"#;

    #[test]
    fn grid_parsing() {
        assert_eq!("3x7".parse::<Grid>().unwrap(), Grid { rows: 3, cols: 7 });
        assert!("1x5".parse::<Grid>().is_err());
        assert!("5".parse::<Grid>().is_err());
        assert!("ax2".parse::<Grid>().is_err());
        assert_eq!(axis(4, 5, 0.882), 0.882);
        assert_eq!(axis(0, 5, 0.882), 0.0);
    }

    #[test]
    fn report_detector_off() {
        let (r, code) = cmd_report(DETECTOR_OFF).unwrap();
        assert_eq!(code, 0);
        assert_abs_diff_eq!(r.visibility, r.a_priori_visibility, epsilon = 1e-15);
        assert_abs_diff_eq!(r.quality, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.distinguishability, r.predictability, epsilon = 1e-15);
        // Pure Quanton and pure detector: Englert equality.
        assert_abs_diff_eq!(r.slack("englert").unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn report_sqds_unitaries() {
        let json = r#"{"s_q0": [0.0, 0.0, 1.0], "rho_d0": {"bloch": [1.0, 0.0, 0.0]},
                       "unitaries": {"sqds": {"phi_d": 0.0, "entangling_phase": 1.5707963267948966}}}"#;
        let (r, code) = cmd_report(json).unwrap();
        assert_eq!(code, 0);
        assert_abs_diff_eq!(r.quality, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.visibility, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn report_errors_map_to_exit_codes() {
        let bad_trace = r#"{"s_q0": [0, 0, 1],
            "rho_d0": {"matrix": [[{"re": 0.6, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 0.5, "im": 0}]]},
            "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}}"#;
        let e = cmd_report(bad_trace).unwrap_err();
        assert!(matches!(e, CliError::Physics(Error::InvalidTrace { .. })));
        assert_eq!(e.exit_code(), 3);

        let long_bloch = r#"{"s_q0": [1, 0, 1], "rho_d0": {"bloch": [0, 0, 1]},
            "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}}"#;
        assert_eq!(cmd_report(long_bloch).unwrap_err().exit_code(), 3);

        let missing = r#"{"s_q0": [0, 0, 1], "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}}"#;
        let e = cmd_report(missing).unwrap_err();
        assert_eq!(e.exit_code(), 2);

        let typo = r#"{"s_q0": [0, 0, 1], "rho_d0": {"bloch": [0, 0, "x"]},
            "unitaries": {"sqds": {"phi_d": 0, "entangling_phase": 0}}}"#;
        match cmd_report(typo).unwrap_err() {
            CliError::Schema { path, .. } => assert_eq!(path, "rho_d0.bloch[2]"),
            other => panic!("{other:?}"),
        }

        let not_unitary = r#"{"s_q0": [0, 0, 1], "rho_d0": {"bloch": [0, 0, 1]},
            "unitaries": {"matrices": {
                "u_plus": [[{"re": 2, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 1, "im": 0}]],
                "u_minus": [[{"re": 1, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 1, "im": 0}]]}}}"#;
        assert_eq!(cmd_report(not_unitary).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn report_input_round_trip() {
        let mut rng = crate::qmath::seeded_rng(90, 0);
        for _ in 0..200 {
            let cfg = engine::random_config(&mut rng, false);
            let json = serde_json::to_string(&ReportInput::from_config(&cfg)).unwrap();
            let back: ReportInput = parse_json(&json).unwrap();
            assert_eq!(back.to_config().unwrap(), cfg);
        }
    }

    #[test]
    fn fig3_examples() {
        let r = fig3_row(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(r.d2, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.v2, 1.0, epsilon = 1e-15);
        for q in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(fig3_row(1.0, q).unwrap().v2, 0.0, epsilon = 1e-15);
        }
        let rows = sweep_fig3(Grid { rows: 21, cols: 21 }).unwrap();
        for r in &rows {
            assert!(r.slack.abs() < FIG3_TOL);
            assert_abs_diff_eq!(r.d2, r.p * r.p + r.q * r.q * (1.0 - r.p * r.p), epsilon = 1e-10);
        }
    }

    #[test]
    fn fig3_csv_round_trips() {
        let rows = sweep_fig3(Grid { rows: 5, cols: 4 }).unwrap();
        let text = String::from_utf8(fig3_csv(&rows).unwrap()).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.headers().unwrap(), vec!["P", "Q", "D2", "V2", "slack"]);
        for (rec, row) in rdr.records().zip(&rows) {
            let rec = rec.unwrap();
            let vals: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
            assert_eq!(vals, vec![row.p, row.q, row.d2, row.v2, row.slack]);
        }
    }

    #[test]
    fn fq_examples() {
        let rows = sweep_fq(Grid { rows: 11, cols: 11 }, 0.882).unwrap();
        let mut branches = [false; 2];
        for r in &rows {
            match r.value {
                FqValue::Defined(f, b) => {
                    assert!(f <= 1.0 + 1e-12);
                    if r.p_q == 0.0 {
                        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
                    }
                    branches[(b == Branch::CorrelationDominant) as usize] = true;
                }
                FqValue::Undefined(_) => assert_eq!(r.p_q, 1.0),
                FqValue::Skipped => panic!("grid stays inside Q_D <= s_norm"),
            }
        }
        assert!(branches[0] && branches[1]);

        for r in sweep_fq(Grid { rows: 11, cols: 11 }, 1.0).unwrap() {
            if let FqValue::Defined(f, _) = r.value {
                assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
            }
        }
        assert_eq!(fq_row(0.5, 0.95, 0.882).value, FqValue::Skipped);
        assert!(sweep_fq(Grid { rows: 2, cols: 2 }, 1.5).is_err());

        let text = String::from_utf8(fq_csv(&rows).unwrap()).unwrap();
        assert!(text.starts_with("P_Q,Q_D,f_Q,branch\n"));
        assert!(text.contains(",undefined,"));
    }

    #[test]
    fn channel_examples() {
        let s = cmd_channel(0.5, 0.0, 10_000, 1).unwrap();
        assert_eq!(s.empirical_likelihood, 1.0);
        let s = cmd_channel(0.7, 0.2, 1_000_000, 2).unwrap();
        assert_abs_diff_eq!(s.distinguishability, 0.6, epsilon = 1e-15);
        assert!((s.empirical_likelihood - 0.8).abs() < 0.0012);
        assert_eq!(
            to_json(&cmd_channel(0.3, 0.1, 50_000, 3).unwrap()),
            to_json(&cmd_channel(0.3, 0.1, 50_000, 3).unwrap())
        );
        assert_eq!(cmd_channel(1.2, 0.1, 10, 3).unwrap_err().exit_code(), 2);
        assert_eq!(cmd_channel(0.2, 0.1, 0, 3).unwrap_err().exit_code(), 2);
    }
}
