use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use solenoid_core::classification::{
    classify, genericity_experiment, integral_curve, perturb_to_generic, un_openness_check, ClassifyOptions,
    ExperimentConfig,
};
use solenoid_core::flows::{
    build_conjugacy_with, random_points, return_time_quadrature, return_time_series, ConjugacyOptions,
    GeneratedFlow, DEFAULT_STEP, DEFAULT_TOL,
};
use solenoid_core::io::{write_eval_csv, write_integral_csv, write_trajectory_csv};
use solenoid_core::series::{dk_distance, reciprocal, BohrSeries, DkOrder, SeriesJson};
use solenoid_core::solenoid::{SolenoidPoint, SolenoidSpec};
use solenoid_core::LabError;

#[derive(Debug, Parser)]
#[command(name = "solenoid-lab", version, about = "Flows on solenoids: series, classification, conjugacies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Solenoid spec JSON: {"factors": [...]}
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Series JSON
    #[arg(long, global = true)]
    pub series: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Depth of generated points (default J + 1)
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Series truncation tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Largest time scanned for crossings
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    /// Largest n for the U_n crossings
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<u32>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads
    #[arg(long, global = true, env = "SOLENOID_LAB_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a series at evenly spaced times or at given points
    Eval {
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// JSON array of angle lists; replaces the time grid
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Decide almost periodicity of λ
    Classify,
    /// Trajectory of the flow generated by v
    Flow {
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Deepest angle of the start point
        #[arg(long, default_value_t = 0.0)]
        x_top: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
    },
    /// Return times of v: series, quadrature and timed integration
    ReturnTime {
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
    },
    /// Build the conjugacy of v to a linear flow and verify it
    Conjugate {
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Number of times and of points in the verification grid
        #[arg(long, default_value_t = 20)]
        grid: usize,
    },
    /// I(T) for λ in closed form
    IntegralCurve {
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        /// Use T = P_k/3 for k = 1..=K
        #[arg(long)]
        resonant: Option<usize>,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// λ + Im/Re ρ_m within epsilon of λ
    Perturb {
        #[arg(long)]
        epsilon: f64,
    },
    /// Openness of U_n around λ
    Openness {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Random positive fields and their ρ_m perturbations
    Experiment {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
        epsilons: Vec<f64>,
    },
    /// d_k distance between --series and --other
    Dk {
        #[arg(long)]
        other: PathBuf,
        /// A positive integer or "inf"
        #[arg(long, default_value = "1")]
        k: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Domain(String),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Domain(_) => 3,
            CliError::Tolerance(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "invalid input: {m}"),
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Tolerance(m) => write!(f, "tolerance not met: {m}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Parse(_) => CliError::Parse(e.to_string()),
            LabError::ResidualTooLarge { .. } => CliError::Tolerance(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

impl Common {
    fn positive(&self, name: &str, x: Option<f64>, default: f64) -> CliResult<f64> {
        let v = x.unwrap_or(default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Parse(format!("--{name} must be positive, got {v}")));
        }
        Ok(v)
    }

    fn tol(&self, default: f64) -> CliResult<f64> {
        self.positive("tol", self.tol, default)
    }

    fn t_max(&self, default: f64) -> CliResult<f64> {
        self.positive("t-max", self.t_max, default)
    }

    fn spec(&self) -> CliResult<Option<SolenoidSpec>> {
        self.spec.as_deref().map(parse_json::<SolenoidSpec>).transpose()
    }

    fn load_series(&self, path: Option<&Path>) -> CliResult<BohrSeries> {
        let path = path.ok_or_else(|| CliError::Parse("--series is required".into()))?;
        let json: SeriesJson = parse_json(path)?;
        let spec = match self.spec()? {
            Some(s) => Arc::new(s),
            None => Arc::new(json.spec.clone()),
        };
        Ok(BohrSeries::from_json_with_spec(&json, spec)?)
    }

    fn series(&self) -> CliResult<BohrSeries> {
        self.load_series(self.series.as_deref())
    }

    fn depth(&self, spec: &SolenoidSpec) -> usize {
        self.depth.unwrap_or(spec.depth() + 1)
    }

    fn emit(&self, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
        match &self.out {
            Some(p) => {
                let mut f = io::BufWriter::new(fs::File::create(p)?);
                write(&mut f)?;
                f.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock)?;
            }
        }
        Ok(())
    }

    fn emit_json(&self, value: &Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        self.emit(|w| writeln!(w, "{text}"))
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("output types serialize")
}

pub fn run(cli: &Cli) -> CliResult<u8> {
    let c = &cli.common;
    match &cli.command {
        Command::Eval {
            t_start,
            t_end,
            samples,
            points,
        } => cmd_eval(c, *t_start, *t_end, *samples, points.as_deref()),
        Command::Classify => cmd_classify(c),
        Command::Flow {
            t_end,
            samples,
            x_top,
            step,
        } => cmd_flow(c, *t_end, *samples, *x_top, *step),
        Command::ReturnTime { points, step } => cmd_return_time(c, *points, *step),
        Command::Conjugate { step, grid } => cmd_conjugate(c, *step, *grid),
        Command::IntegralCurve {
            times,
            resonant,
            samples,
        } => cmd_integral_curve(c, times, *resonant, *samples),
        Command::Perturb { epsilon } => cmd_perturb(c, *epsilon),
        Command::Openness { n, trials } => cmd_openness(c, *n, *trials),
        Command::Experiment { samples, epsilons } => cmd_experiment(c, *samples, epsilons),
        Command::Dk { other, k } => cmd_dk(c, other, k),
    }
}

fn cmd_eval(c: &Common, t_start: f64, t_end: f64, samples: usize, points: Option<&Path>) -> CliResult<u8> {
    let f = c.series()?;
    let tol = c.tol(1e-12)?;
    match points {
        None => {
            let n = samples.max(1);
            let mut rows = Vec::with_capacity(n);
            for k in 0..n {
                let t = if n == 1 {
                    t_start
                } else {
                    t_start + (t_end - t_start) * k as f64 / (n - 1) as f64
                };
                rows.push((t, f.evaluate_at_time(t, tol)?));
            }
            c.emit(|w| write_eval_csv(w, &rows))?;
        }
        Some(path) => {
            let angles: Vec<Vec<f64>> = parse_json(path)?;
            let mut rows = Vec::with_capacity(angles.len());
            for (i, a) in angles.into_iter().enumerate() {
                let x = SolenoidPoint::new(a)?;
                rows.push((i as f64, f.evaluate_at_point(&x, tol)?));
            }
            c.emit(|w| write_eval_csv(w, &rows))?;
        }
    }
    Ok(0)
}

fn cmd_classify(c: &Common) -> CliResult<u8> {
    let lambda = c.series()?;
    let report = classify(&lambda, c.n_max.unwrap_or(5), c.t_max(1e12)?)?;
    c.emit_json(&to_value(&report))?;
    Ok(report.exit_code() as u8)
}

fn cmd_flow(c: &Common, t_end: f64, samples: usize, x_top: f64, step: f64) -> CliResult<u8> {
    let v = c.series()?;
    let flow = GeneratedFlow::with_settings(v.clone(), step, c.tol(DEFAULT_TOL)?)?;
    let x = SolenoidPoint::from_top_angle(v.spec(), x_top, c.depth(v.spec()))?;
    let rows = flow.trajectory(&x, t_end, samples)?;
    c.emit(|w| write_trajectory_csv(w, &rows))?;
    Ok(0)
}

fn cmd_return_time(c: &Common, count: usize, step: f64) -> CliResult<u8> {
    let v = c.series()?;
    if !v.is_finite() {
        return Err(LabError::UnsupportedTail("return times need a finite field".into()).into());
    }
    let tol = c.tol(1e-12)?;
    let lambda = reciprocal(&v, v.max_level(), 1e-13)?.series;
    let tau = return_time_series(&lambda, tol)?;
    let flow = GeneratedFlow::with_settings(v.clone(), step, DEFAULT_TOL)?;
    let points = random_points(v.spec(), c.depth(v.spec()), count, c.seed.unwrap_or(0))?;
    let mut samples = Vec::with_capacity(points.len());
    let mut worst: f64 = 0.0;
    for x in &points {
        let series = tau.evaluate_at_point(x, tol)?.value.re;
        let quadrature = return_time_quadrature(&lambda, x, tol)?;
        let section = flow.section_return(x)?.time;
        worst = worst
            .max((series - quadrature).abs())
            .max((series - section).abs())
            .max((quadrature - section).abs());
        samples.push(json!({
            "angles": x.angles(),
            "series": series,
            "quadrature": quadrature,
            "section": section,
        }));
    }
    c.emit_json(&json!({
        "tau": to_value(&tau.to_json()),
        "samples": samples,
        "max_disagreement": worst,
    }))?;
    Ok(0)
}

fn cmd_conjugate(c: &Common, step: f64, grid: usize) -> CliResult<u8> {
    let v = c.series()?;
    let opts = ConjugacyOptions {
        times: grid,
        points: grid,
        seed: c.seed.unwrap_or(0),
        step,
        residual_limit: c.tol(1e-6)?,
        ..Default::default()
    };
    let data = build_conjugacy_with(&v, &opts)?;
    c.emit_json(&to_value(&data.report()))?;
    data.check(opts.residual_limit)?;
    Ok(0)
}

fn cmd_integral_curve(c: &Common, times: &[f64], resonant: Option<usize>, samples: usize) -> CliResult<u8> {
    let lambda = c.series()?;
    let ts: Vec<f64> = if !times.is_empty() {
        times.to_vec()
    } else if let Some(k) = resonant {
        (1..=k).map(|j| lambda.spec().product_f64(j) / 3.0).collect()
    } else {
        let t_max = c.t_max(1e6)?;
        let n = samples.max(2);
        (0..n)
            .map(|i| 10f64.powf(-1.0 + (t_max.log10() + 1.0) * i as f64 / (n - 1) as f64))
            .collect()
    };
    let rows = integral_curve(&lambda, &ts, c.tol(1e-9)?)?;
    c.emit(|w| write_integral_csv(w, &rows))?;
    Ok(0)
}

fn classify_options(c: &Common) -> CliResult<ClassifyOptions> {
    Ok(ClassifyOptions {
        n_max: c.n_max.unwrap_or(5),
        t_max: c.t_max(1e12)?,
    })
}

fn cmd_perturb(c: &Common, epsilon: f64) -> CliResult<u8> {
    let lambda = c.series()?;
    let p = perturb_to_generic(&lambda, epsilon, &classify_options(c)?)?;
    c.emit_json(&json!({
        "epsilon": epsilon,
        "m": p.m,
        "part": to_value(&p.part),
        "sup_bound": p.sup_bound,
        "min_bound": p.min_bound,
        "report": to_value(&p.report),
        "series": to_value(&p.series.to_json()),
    }))?;
    Ok(p.report.exit_code() as u8)
}

fn cmd_openness(c: &Common, n: u32, trials: usize) -> CliResult<u8> {
    let lambda = c.series()?;
    let rep = un_openness_check(&lambda, n, trials, c.seed.unwrap_or(0), c.t_max(1e12)?)?;
    c.emit_json(&to_value(&rep))?;
    Ok(if rep.passed { 0 } else { 4 })
}

fn cmd_experiment(c: &Common, samples: usize, epsilons: &[f64]) -> CliResult<u8> {
    let seed = c
        .seed
        .ok_or_else(|| CliError::Parse("--seed is required for the experiment".into()))?;
    let spec = c
        .spec()?
        .ok_or_else(|| CliError::Parse("--spec is required for the experiment".into()))?;
    if epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) {
        return Err(CliError::Parse("epsilons must be positive".into()));
    }
    let mut cfg = ExperimentConfig::new(samples, epsilons.to_vec(), seed);
    cfg.threads = c.threads.unwrap_or(0);
    cfg.classify = classify_options(c)?;
    let summary = genericity_experiment(Arc::new(spec), &cfg)?;
    let text = summary.to_json();
    c.emit(|w| writeln!(w, "{text}"))?;
    Ok(0)
}

fn cmd_dk(c: &Common, other: &Path, k: &str) -> CliResult<u8> {
    let v = c.series()?;
    let w = c.load_series(Some(other))?;
    let order = match k {
        "inf" | "infinity" => DkOrder::Infinity,
        s => DkOrder::Finite(
            s.parse()
                .map_err(|_| CliError::Parse(format!("--k must be a positive integer or inf, got {s}")))?,
        ),
    };
    let d = dk_distance(&v, &w, order)?;
    c.emit_json(&json!({"k": k, "distance": d}))?;
    Ok(0)
}
