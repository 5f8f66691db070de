//! Command-line jobs: classify a weight, build its matrices, run an
//! extension, dump a Whitney cover. Every job renders all of its outputs in
//! memory first and writes them only once nothing can fail any more.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension_engine::{
    assemble_unchecked, boundary_limits, dyadic_samples, random_samples, verify_bounds, BoundReport,
    ExtensionPlan, ExtensionRows, LimitReport, PlanOptions, Thresholds, DEFAULT_MAX_GENERATION,
    DEFAULT_P_FOLD_CAP,
};
use crate::matrix_calculus::{
    associated_matrix, goodness, interleave_matrix, strong_regularization, GoodnessReport, SandwichFit, SandwichH, Verdict,
    WeightMatrix, DEFAULT_XI_GRID,
};
use crate::seq_calculus::DEFAULT_K;
use crate::trend::geometric_grid;
use crate::ultrajets::{certify_at, JetCertificate, JetFile, UltraJet};
use crate::weight_functions::{classify, kappa_on_grid, WeightClassification, WeightDefinition};
use crate::whitney_geometry::{
    coverage, verify_eq14, CompactSet1D, CoverOptions, CoverageReport, Eq14Report, ExtensionConstants, WhitneyCover,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Matrix,
    Extend,
    CoverDump,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "ultrajet", about = "Weight classes, weight matrices and Whitney ultrajet extension")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Job configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sequence length `K`.
    #[arg(long)]
    pub k: Option<usize>,
    /// Comma-separated `xi` grid.
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub l: f64,
    #[serde(default)]
    pub xi: Option<f64>,
    #[serde(default)]
    pub p_fold: Option<usize>,
    #[serde(default)]
    pub p_fold_cap: Option<usize>,
    #[serde(default)]
    pub r_cov: Option<f64>,
    #[serde(default)]
    pub max_generation: Option<i32>,
    #[serde(default)]
    pub cutoff: bool,
    #[serde(default)]
    pub thresholds: Option<Thresholds>,
}

/// Sample counts and orders of the extension checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub j_max: u32,
    pub alpha_check: usize,
    pub limit_alpha: usize,
    pub random: usize,
    /// Samples per expanded interval for `cover-dump`.
    pub per_interval: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { j_max: 40, alpha_check: 8, limit_alpha: 6, random: 200, per_interval: 16 }
    }
}

/// Job file. Relative paths are taken relative to the file itself.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub weight: Option<PathBuf>,
    #[serde(default)]
    pub jet: Option<PathBuf>,
    /// `E` for `cover-dump` when no jet is given.
    #[serde(default)]
    pub set: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub xi_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub t_grid: Option<GridSpec>,
    #[serde(default)]
    pub plan: Option<PlanConfig>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub sampling: Option<Sampling>,
}

/// Job result short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    /// Inconclusive trend, undecidable condition or negative control.
    Flagged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Flagged => 2,
        }
    }
}

/// A job after merging the configuration with command-line overrides.
#[derive(Debug, Clone)]
pub struct Job {
    pub command: Command,
    pub base_dir: PathBuf,
    pub config: JobConfig,
    pub out_dir: PathBuf,
    pub k: usize,
    pub xi_grid: Vec<f64>,
    pub seed: u64,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

impl Job {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let config: JobConfig = read_json(&cli.config)?;
        if let Some(c) = config.command {
            if c != cli.command {
                return Err(Error::InvalidInput(format!(
                    "configuration is for {c:?}, command line asks for {:?}",
                    cli.command
                )));
            }
        }
        let base_dir = cli.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let out_dir = cli
            .out
            .clone()
            .or_else(|| config.out_dir.as_ref().map(|p| base_dir.join(p)))
            .ok_or_else(|| Error::InvalidInput("no output directory (--out or out_dir)".into()))?;
        let k = cli.k.or(config.k).unwrap_or(DEFAULT_K);
        let xi_grid = cli.xi.clone().or_else(|| config.xi_grid.clone()).unwrap_or_else(|| DEFAULT_XI_GRID.to_vec());
        let seed = cli.seed.or(config.seed).unwrap_or(0);
        Ok(Self { command: cli.command, base_dir, config, out_dir, k, xi_grid, seed })
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    fn weight(&self) -> Result<(WeightDefinition, crate::weight_functions::WeightFunction)> {
        let p = self.config.weight.as_ref().ok_or_else(|| Error::InvalidInput("job needs `weight`".into()))?;
        let def: WeightDefinition = read_json(&self.path(p))?;
        let w = def.build()?;
        Ok((def, w))
    }

    fn jet(&self) -> Result<UltraJet> {
        let p = self.config.jet.as_ref().ok_or_else(|| Error::InvalidInput("job needs `jet`".into()))?;
        UltraJet::from_file(&read_json::<JetFile>(&self.path(p))?)
    }

    fn t_grid(&self) -> Result<Vec<f64>> {
        let g = self.config.t_grid.unwrap_or(GridSpec { min: 1.0, max: 1e6, points: 64 });
        if !(g.min > 0.0 && g.max > g.min && g.points >= 2) {
            return Err(Error::InvalidInput("t_grid needs 0 < min < max and points >= 2".into()));
        }
        Ok(geometric_grid(g.min, g.max, g.points))
    }

    fn sampling(&self) -> Sampling {
        self.config.sampling.unwrap_or_default()
    }
}

/// Files of a finished job, written together.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
        s.push('\n');
        self.files.push((name.into(), s));
        Ok(())
    }

    fn text(&mut self, name: &str, s: String) {
        self.files.push((name.into(), s));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidInput(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body).map_err(io)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
struct ClassifyReport<'a> {
    weight: &'a WeightDefinition,
    t_grid: (f64, f64, usize),
    status: Outcome,
    message: Option<String>,
    classification: Option<WeightClassification>,
    k: usize,
    xi_grid: &'a [f64],
    goodness: GoodnessReport,
}

fn goodness_decided(g: &GoodnessReport) -> bool {
    [&g.r_good, &g.b_good, &g.condition_d, &g.moderate_growth_roumieu, &g.moderate_growth_beurling]
        .iter()
        .all(|c| c.verdict == Verdict::Holds)
}

pub fn cmd_classify(job: &Job) -> Result<(Outcome, Outputs)> {
    let (def, w) = job.weight()?;
    let grid = job.t_grid()?;
    let (classification, message) = match classify(&w, &grid) {
        Ok(c) => (Some(c), None),
        Err(Error::InconclusiveTrend(m)) => (None, Some(m)),
        Err(e) => return Err(e),
    };
    let m = associated_matrix(&w, &job.xi_grid, job.k)?;
    let good = goodness(&m, job.k);
    let status = if classification.is_some() && goodness_decided(&good) { Outcome::Pass } else { Outcome::Flagged };
    let mut csv = String::from("t,omega,kappa,ratio\n");
    match kappa_on_grid(&w, &grid) {
        Ok(kappa) => {
            for (t, k) in grid.iter().zip(&kappa) {
                let o = w.eval(*t);
                let _ = writeln!(csv, "{t},{o},{k},{}", k / o);
            }
        }
        Err(Error::DivergentTail { .. }) => {
            for t in &grid {
                let _ = writeln!(csv, "{t},{},,", w.eval(*t));
            }
        }
        Err(e) => return Err(e),
    }
    let report = ClassifyReport {
        weight: &def,
        t_grid: (grid[0], grid[grid.len() - 1], grid.len()),
        status,
        message,
        classification,
        k: job.k,
        xi_grid: &job.xi_grid,
        goodness: good,
    };
    let mut out = Outputs::default();
    out.json("classification.json", &report)?;
    out.text("kappa_vs_omega.csv", csv);
    Ok((status, out))
}

#[derive(Debug, Clone, Serialize)]
struct MatrixReport<'a> {
    weight: &'a WeightDefinition,
    k: usize,
    status: Outcome,
    associated: &'a WeightMatrix,
    regularized: &'a WeightMatrix,
    interleaved: &'a WeightMatrix,
    sandwich: &'a [SandwichFit],
    goodness: GoodnessReport,
}

fn matrix_csv(out: &mut String, name: &str, m: &WeightMatrix) {
    for r in m.rows() {
        for k in 0..=r.big.k_max() {
            let _ = writeln!(out, "{name},{},{k},{},{}", r.xi, r.big.log_value(k), r.divided.log_value(k));
        }
    }
}

pub fn cmd_matrix(job: &Job) -> Result<(Outcome, Outputs)> {
    let (def, w) = job.weight()?;
    let s = associated_matrix(&w, &job.xi_grid, job.k)?;
    let reg = strong_regularization(&s)?;
    let v = interleave_matrix(&reg.matrix)?;
    let good = goodness(&s, job.k);
    let status = if goodness_decided(&good) { Outcome::Pass } else { Outcome::Flagged };
    let mut csv = String::from("matrix,xi,k,log_big,log_divided\n");
    matrix_csv(&mut csv, "associated", &s);
    matrix_csv(&mut csv, "regularized", &reg.matrix);
    matrix_csv(&mut csv, "interleaved", &v);
    let report = MatrixReport {
        weight: &def,
        k: job.k,
        status,
        associated: &s,
        regularized: &reg.matrix,
        interleaved: &v,
        sandwich: &reg.sandwich,
        goodness: good,
    };
    let mut out = Outputs::default();
    out.json("matrix.json", &report)?;
    out.text("matrix_rows.csv", csv);
    Ok((status, out))
}

#[derive(Debug, Clone, Serialize)]
struct ExtendReport<'a> {
    weight: &'a WeightDefinition,
    status: Outcome,
    sigma_scale: f64,
    sandwich_h: &'a SandwichH,
    certificate: &'a JetCertificate,
    plan: &'a ExtensionPlan,
    pieces: usize,
    capped_pieces: usize,
    seed: u64,
    samples: usize,
    bounds: &'a BoundReport,
    limits: Vec<LimitSummary>,
}

#[derive(Debug, Clone, Serialize)]
struct LimitSummary {
    a: f64,
    direction: f64,
    precision_floor: Option<u32>,
    monotone: Vec<bool>,
    fitted: Vec<f64>,
}

fn limit_summary(r: &LimitReport) -> LimitSummary {
    LimitSummary {
        a: r.a,
        direction: r.direction,
        precision_floor: r.precision_floor,
        monotone: r.rows.iter().map(|x| x.monotone).collect(),
        fitted: r.rows.iter().map(|x| x.fitted).collect(),
    }
}

pub fn cmd_extend(job: &Job) -> Result<(Outcome, Outputs)> {
    let (def, w) = job.weight()?;
    let jet = job.jet()?;
    let pc = job.config.plan.clone().ok_or_else(|| Error::InvalidInput("extend needs `plan`".into()))?;
    let xi = pc.xi.unwrap_or(job.xi_grid[0]);
    let rows = ExtensionRows::from_weight(&w, xi, job.k, &geometric_grid(std::f64::consts::E, 1e6, 64))?;
    let cert = certify_at(&jet, &rows.v, xi)?;
    let opts = PlanOptions {
        l: pc.l,
        r_cov: pc.r_cov.unwrap_or(1.0),
        max_generation: pc.max_generation.unwrap_or(DEFAULT_MAX_GENERATION),
        p_fold: pc.p_fold,
        p_fold_cap: pc.p_fold_cap.unwrap_or(DEFAULT_P_FOLD_CAP),
        thresholds: pc.thresholds.unwrap_or_default(),
        cutoff: pc.cutoff,
    };
    let f = assemble_unchecked(&jet, &cert, &rows, &opts)?;
    let sm = job.sampling();
    let alpha = sm.alpha_check.min(f.plan().p_fold);
    let mut samples = dyadic_samples(&f, sm.j_max);
    samples.extend(random_samples(&f, sm.random, job.seed));
    let bounds = verify_bounds(&f, &samples, alpha)?;
    let limit_alpha = sm.limit_alpha.min(alpha).min(jet.alpha_max());
    let limits = jet
        .set()
        .endpoints()
        .into_iter()
        .map(|a| boundary_limits(&f, a, limit_alpha, sm.j_max))
        .collect::<Result<Vec<_>>>()?;

    let mut samples_csv = String::from("x,alpha,value\n");
    let values = crate::par::try_map(&samples, |&x| f.eval_derivatives(x, alpha))?;
    for (x, v) in samples.iter().zip(&values) {
        for (a, y) in v.iter().enumerate() {
            let _ = writeln!(samples_csv, "{x},{a},{y}");
        }
    }
    let mut limits_csv = String::from("a,alpha,j,d,error\n");
    for r in &limits {
        for row in &r.rows {
            for (j, d, e) in &row.errors {
                let _ = writeln!(limits_csv, "{},{},{j},{d},{e}", r.a, row.alpha);
            }
        }
    }
    let limits_ok = limits.iter().all(|r| r.rows.iter().all(|x| x.monotone));
    let status =
        if f.plan().valid && bounds.passed && limits_ok { Outcome::Pass } else { Outcome::Flagged };
    let report = ExtendReport {
        weight: &def,
        status,
        sigma_scale: rows.sigma_scale,
        sandwich_h: &rows.h,
        certificate: &cert,
        plan: f.plan(),
        pieces: f.pieces().len(),
        capped_pieces: f.pieces().iter().filter(|p| p.capped).count(),
        seed: job.seed,
        samples: samples.len(),
        bounds: &bounds,
        limits: limits.iter().map(limit_summary).collect(),
    };
    let mut out = Outputs::default();
    out.json("bounds.json", &report)?;
    out.text("extension_samples.csv", samples_csv);
    out.text("boundary_limits.csv", limits_csv);
    Ok((status, out))
}

#[derive(Debug, Clone, Serialize)]
struct CoverReport {
    status: Outcome,
    set: Vec<(f64, f64)>,
    r_cov: f64,
    intervals: usize,
    d_floor: f64,
    constants: ExtensionConstants,
    eq14: Eq14Report,
    coverage: CoverageReport,
}

pub fn cmd_cover_dump(job: &Job) -> Result<(Outcome, Outputs)> {
    let set = match (&job.config.set, &job.config.jet) {
        (Some(s), _) => CompactSet1D::new(s.clone())?,
        (None, Some(_)) => job.jet()?.set().clone(),
        (None, None) => return Err(Error::InvalidInput("cover-dump needs `set` or `jet`".into())),
    };
    let pc = job.config.plan.as_ref();
    let r_cov = pc.and_then(|p| p.r_cov).unwrap_or(1.0);
    let max_generation = pc.and_then(|p| p.max_generation).unwrap_or(crate::whitney_geometry::DEFAULT_MAX_GENERATION);
    let cover = WhitneyCover::build_with(&set, r_cov, CoverOptions { max_generation, ..CoverOptions::default() })?;
    let samples = cover.expanded_samples(job.sampling().per_interval);
    let eq14 = verify_eq14(&cover, &samples);
    let cov = coverage(&cover, &samples);
    let status = if eq14.passed() && cov.uncovered.is_empty() && cov.max_overlap <= 3 {
        Outcome::Pass
    } else {
        Outcome::Flagged
    };
    let report = CoverReport {
        status,
        set: set.components().to_vec(),
        r_cov,
        intervals: cover.intervals().len(),
        d_floor: cover.d_floor(),
        constants: cover.constants(),
        eq14,
        coverage: cov,
    };
    let mut out = Outputs::default();
    out.json("cover_report.json", &report)?;
    out.text("cover.csv", cover.to_csv());
    Ok((status, out))
}

/// Runs a job and writes its outputs; nothing is written on error.
pub fn run_job(job: &Job) -> Result<Outcome> {
    let (outcome, out) = match job.command {
        Command::Classify => cmd_classify(job)?,
        Command::Matrix => cmd_matrix(job)?,
        Command::Extend => cmd_extend(job)?,
        Command::CoverDump => cmd_cover_dump(job)?,
    };
    out.write(&job.out_dir)?;
    Ok(outcome)
}

/// Exit code of a command line: 0 pass, 2 flagged, 1 error.
pub fn run(cli: &Cli) -> i32 {
    match Job::from_cli(cli).and_then(|j| run_job(&j)) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
