//! Almost-periodicity classification through boundedness of
//! I(T) = ∫_0^T (λ_e − λ_0) dt, the ρ_m perturbations, the U_n openness
//! estimate and the genericity experiment.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::series::{certify_positive, dk_distance, BohrSeries, DkOrder, Part, TailKind, TailSpec};
use crate::solenoid::{cis_minus_one, phase_centered, Frequency, SolenoidSpec};

/// Default accuracy of closed-form integral evaluations.
pub const INTEGRAL_TOL: f64 = 1e-9;
/// Deepest tail level the integral will expand.
const MAX_TAIL_LEVEL: usize = 2000;
/// Log-grid density of the numeric scan, points per decade.
const SCAN_PER_DECADE: usize = 24;
const SCAN_START: f64 = 0.1;
/// Largest ρ_m index tried by the perturbation search.
const MAX_RHO_INDEX: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AlmostPeriodic,
    NotAlmostPeriodic,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    AnalyticL1,
    AnalyticParseval,
    NumericScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct APReport {
    pub verdict: Verdict,
    pub method: Method,
    /// max |I(T)| over the scan.
    pub sup_integral: f64,
    /// n ↦ first scanned T with |I(T)| > n.
    pub crossings: BTreeMap<u32, f64>,
    /// sup |I| bound when the verdict is almost periodic.
    pub bound: Option<f64>,
}

impl APReport {
    /// Exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::AlmostPeriodic => 0,
            Verdict::NotAlmostPeriodic => 10,
            Verdict::Inconclusive => 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralPoint {
    pub t: f64,
    pub value: Complex64,
    pub truncation_bound: f64,
}

/// λ_r (e^{2πirT} − 1)/(2πir) for r = m/P.
fn integral_term(c: Complex64, m: i64, period: f64, r: f64, t: f64) -> Complex64 {
    c * cis_minus_one(phase_centered(m, period, t)) / Complex64::new(0.0, TAU * r)
}

/// I(T) in closed form. Tail levels are added until
/// min(|T|·remainder, Σ|c|·P_j/π) beyond the last one drops below `tol`.
pub fn integral_at(lambda: &BohrSeries, t: f64, tol: f64) -> IntegralPoint {
    let spec = lambda.spec();
    let mut value = Complex64::new(0.0, 0.0);
    for (r, c) in lambda.coefficients() {
        if !r.is_zero() {
            value += integral_term(*c, r.numerator(), spec.product_f64(r.level()), r.to_f64(spec), t);
        }
    }
    let mut truncation_bound = 0.0;
    if let Some(tail) = lambda.tail() {
        let bound = |level: usize| {
            (t.abs() * tail.remainder(spec, level)).min(2.0 * tail.integral_l1(spec, level))
        };
        let mut level = tail.start_level - 1;
        truncation_bound = bound(level);
        while truncation_bound >= tol && level < MAX_TAIL_LEVEL {
            level += 1;
            let period = spec.product_f64(level);
            for (sign, c) in tail.level_terms(spec, level) {
                value += integral_term(c, sign, period, sign as f64 / period, t);
            }
            truncation_bound = bound(level);
        }
    }
    IntegralPoint {
        t,
        value,
        truncation_bound,
    }
}

pub fn integral_curve(lambda: &BohrSeries, times: &[f64], tol: f64) -> Result<Vec<IntegralPoint>> {
    if !lambda.is_real() {
        return Err(LabError::NotReal);
    }
    Ok(times.iter().map(|&t| integral_at(lambda, t, tol)).collect())
}

/// Σ_{r≠0} |λ_r|/(π|r|) with the tail in closed form: a bound for sup |I|.
pub fn l1_integral_bound(lambda: &BohrSeries) -> f64 {
    let spec = lambda.spec();
    let finite: f64 = lambda
        .coefficients()
        .iter()
        .filter(|(r, _)| !r.is_zero())
        .map(|(r, c)| c.norm() / (PI * r.to_f64(spec).abs()))
        .sum();
    finite + lambda.tail().map_or(0.0, |t| 2.0 * t.integral_l1(spec, 0))
}

/// Scan times: a log grid from 0.1 to `t_max` merged with the resonant
/// probes P_k/4, P_k/3, P_k/2.
pub fn scan_times(spec: &SolenoidSpec, t_max: f64) -> Vec<f64> {
    let mut times = Vec::new();
    if !(t_max >= SCAN_START) {
        if t_max > 0.0 {
            times.push(t_max);
        }
        return times;
    }
    let decades = (t_max / SCAN_START).log10();
    let n = (decades * SCAN_PER_DECADE as f64).ceil() as usize;
    for i in 0..=n {
        let t = SCAN_START * 10f64.powf(decades * i as f64 / n.max(1) as f64);
        times.push(t.min(t_max));
    }
    for k in 0..MAX_TAIL_LEVEL {
        let p = spec.product_f64(k);
        if p / 4.0 > t_max {
            break;
        }
        for d in [4.0, 3.0, 2.0] {
            if p / d <= t_max {
                times.push(p / d);
            }
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub sup_integral: f64,
    pub crossings: BTreeMap<u32, f64>,
}

/// Walks the scan times in increasing order, recording for each n ≤ n_max
/// the first T whose certified lower bound |I(T)| − truncation exceeds n.
pub fn numeric_scan(lambda: &BohrSeries, n_max: u32, t_max: f64, tol: f64) -> ScanResult {
    let mut sup_integral: f64 = 0.0;
    let mut crossings = BTreeMap::new();
    for t in scan_times(lambda.spec(), t_max) {
        let p = integral_at(lambda, t, tol);
        let size = p.value.norm();
        sup_integral = sup_integral.max(size);
        let lower = size - p.truncation_bound;
        for n in 1..=n_max {
            if lower > n as f64 {
                crossings.entry(n).or_insert(t);
            }
        }
    }
    ScanResult {
        sup_integral,
        crossings,
    }
}

/// Decision ladder: finite l1 bound of the integral, then divergence of
/// the integral's square sum for ρ-type tails, then the numeric scan.
pub fn classify(lambda: &BohrSeries, n_max: u32, t_max: f64) -> Result<APReport> {
    if !lambda.is_real() {
        return Err(LabError::NotReal);
    }
    let spec = lambda.spec();
    let scan = numeric_scan(lambda, n_max, t_max, INTEGRAL_TOL);
    let (verdict, method, bound) = match lambda.tail() {
        Some(t) if t.integral_cycle_factor(spec) >= 1.0 => {
            if t.kind == TailKind::Rho {
                (Verdict::NotAlmostPeriodic, Method::AnalyticParseval, None)
            } else if scan.crossings.len() == n_max as usize {
                (Verdict::NotAlmostPeriodic, Method::NumericScan, None)
            } else {
                (Verdict::Inconclusive, Method::NumericScan, None)
            }
        }
        _ => (
            Verdict::AlmostPeriodic,
            Method::AnalyticL1,
            Some(l1_integral_bound(lambda)),
        ),
    };
    Ok(APReport {
        verdict,
        method,
        sup_integral: scan.sup_integral,
        crossings: scan.crossings,
        bound,
    })
}

/// scale·ρ_m, or its real or imaginary part.
pub fn make_rho(spec: Arc<SolenoidSpec>, m: usize, part: Part, scale: f64) -> Result<BohrSeries> {
    if m == 0 {
        return Err(LabError::InvalidArgument("ρ_m needs m ≥ 1".into()));
    }
    BohrSeries::zero(spec).with_tail(TailSpec::rho(m, Complex64::new(scale, 0.0), part))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub n_max: u32,
    pub t_max: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            n_max: 5,
            t_max: 1e12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Perturbation {
    pub series: BohrSeries,
    pub report: APReport,
    pub m: usize,
    pub part: Part,
    /// 2^{1−m}: the sup bound of the added ρ_m part.
    pub sup_bound: f64,
    /// Positivity lower bound of the perturbed field.
    pub min_bound: f64,
}

/// λ + Im ρ_m or λ + Re ρ_m with the smallest m whose sup bound is below
/// ε and which keeps the field certified positive.
pub fn perturb_to_generic(lambda: &BohrSeries, epsilon: f64, opts: &ClassifyOptions) -> Result<Perturbation> {
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidArgument("epsilon must be positive".into()));
    }
    let cert = certify_positive(lambda)?;
    if !cert.certified {
        return Err(LabError::NotPositive(cert.min_bound));
    }
    let spec = lambda.spec_arc().clone();
    let mut m = 1;
    loop {
        let sup_bound = 0.5f64.powi(m as i32 - 1);
        if sup_bound < epsilon && cert.min_bound - sup_bound > 0.0 {
            break;
        }
        m += 1;
        if m > MAX_RHO_INDEX {
            return Err(LabError::InvalidArgument(format!("no ρ_m with m ≤ {MAX_RHO_INDEX} fits ε = {epsilon}")));
        }
    }
    let mut reports = Vec::new();
    for part in [Part::Imaginary, Part::Real] {
        let series = lambda.add(&make_rho(spec.clone(), m, part, 1.0)?)?;
        let min_bound = certify_positive(&series)?.min_bound;
        let report = classify(&series, opts.n_max, opts.t_max)?;
        if report.verdict == Verdict::NotAlmostPeriodic {
            return Ok(Perturbation {
                series,
                report,
                m,
                part,
                sup_bound: 0.5f64.powi(m as i32 - 1),
                min_bound,
            });
        }
        reports.push(serde_json::to_string(&report).expect("report serializes"));
    }
    Err(LabError::BothInconclusive { reports })
}

/// Shape of the random finite real series used by the experiment and the
/// openness trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldConfig {
    pub max_level: usize,
    pub harmonics_per_level: usize,
    /// Magnitude ratio between consecutive levels.
    pub decay: f64,
    /// Σ|c_r| of the mean-zero part.
    pub l1: f64,
}

impl Default for RandomFieldConfig {
    fn default() -> Self {
        RandomFieldConfig {
            max_level: 3,
            harmonics_per_level: 2,
            decay: 0.25,
            l1: 0.5,
        }
    }
}

/// Mean-zero real finite series with random phases and level-geometric
/// magnitudes, rescaled to the requested l1 norm.
pub fn random_field<R: Rng + ?Sized>(
    spec: &Arc<SolenoidSpec>,
    cfg: &RandomFieldConfig,
    rng: &mut R,
) -> Result<BohrSeries> {
    let mut terms = Vec::new();
    for level in 0..=cfg.max_level.min(spec.depth()) {
        let top = if level == 0 { 3 } else { 2 * spec.factor(level) as i64 - 1 };
        for _ in 0..cfg.harmonics_per_level {
            let m = rng.random_range(1..=top);
            let size = cfg.decay.powi(level as i32) * rng.random_range(0.5..1.0);
            let c = Complex64::from_polar(size / 2.0, TAU * rng.random::<f64>());
            let r = Frequency::new(spec, level, m)?;
            terms.push((r, c));
            terms.push((r.neg(), c.conj()));
        }
    }
    let raw = BohrSeries::from_terms(spec.clone(), terms)?.into_real()?;
    let norm = raw.l1_norm();
    if norm == 0.0 {
        return Ok(raw);
    }
    Ok(raw.scale(Complex64::new(cfg.l1 / norm, 0.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpennessReport {
    pub n: u32,
    pub t_n: f64,
    /// δ = |I(T_n)| − n (truncation error already subtracted).
    pub margin: f64,
    /// δ/(3|T_n|): l1 radius of the perturbations.
    pub radius: f64,
    pub trials: usize,
    pub in_u_n: usize,
    pub auxiliary_holds: usize,
    /// min over trials of |I_μ(T_n)| − n.
    pub min_excess: f64,
    pub passed: bool,
}

/// Samples μ = λ + η with Σ|η_r| < δ/(3|T_n|) and checks μ ∈ U_n and
/// d_1(λ − λ_0, μ − μ_0) ≤ 2·d_1(λ, μ) for each.
pub fn un_openness_check(
    lambda: &BohrSeries,
    n: u32,
    trials: usize,
    seed: u64,
    t_max: f64,
) -> Result<OpennessReport> {
    if !lambda.is_real() {
        return Err(LabError::NotReal);
    }
    let scan = numeric_scan(lambda, n, t_max, INTEGRAL_TOL);
    let t_n = *scan.crossings.get(&n).ok_or(LabError::NoCrossing(n))?;
    let base = integral_at(lambda, t_n, INTEGRAL_TOL);
    let margin = base.value.norm() - base.truncation_bound - n as f64;
    let radius = margin / (3.0 * t_n.abs());
    let spec = lambda.spec_arc().clone();
    let centered = lambda.without_mean();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_u_n = 0;
    let mut auxiliary_holds = 0;
    let mut min_excess = f64::INFINITY;
    for _ in 0..trials {
        let cfg = RandomFieldConfig {
            max_level: 2,
            harmonics_per_level: 2,
            decay: 0.5,
            l1: 1.0,
        };
        let shape = random_field(&spec, &cfg, &mut rng)?;
        let mean = rng.random_range(-1.0..1.0);
        let eta = shape.add_constant(Complex64::new(mean, 0.0));
        let size = radius * rng.random_range(0.05..0.95);
        let eta = eta.scale(Complex64::new(size / eta.l1_norm(), 0.0));
        let mu = lambda.add(&eta)?;

        let p = integral_at(&mu, t_n, INTEGRAL_TOL);
        let excess = p.value.norm() - p.truncation_bound - n as f64;
        min_excess = min_excess.min(excess);
        if excess > 0.0 {
            in_u_n += 1;
        }
        let full = dk_distance(lambda, &mu, DkOrder::Finite(1))?;
        let centred = dk_distance(&centered, &mu.without_mean(), DkOrder::Finite(1))?;
        if centred <= 2.0 * full {
            auxiliary_holds += 1;
        }
    }
    Ok(OpennessReport {
        n,
        t_n,
        margin,
        radius,
        trials,
        in_u_n,
        auxiliary_holds,
        min_excess,
        passed: in_u_n == trials && auxiliary_holds == trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub samples: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub classify: ClassifyOptions,
    pub field: RandomFieldConfig,
}

impl ExperimentConfig {
    pub fn new(samples: usize, epsilons: Vec<f64>, seed: u64) -> Self {
        ExperimentConfig {
            samples,
            epsilons,
            seed,
            threads: 0,
            classify: ClassifyOptions::default(),
            field: RandomFieldConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub epsilon: f64,
    pub m: usize,
    pub part: Part,
    pub verdict: Verdict,
    pub method: Method,
    pub crossings: usize,
    pub sup_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub terms: usize,
    pub min_bound: f64,
    pub verdict: Verdict,
    pub bound: Option<f64>,
    pub sup_integral: f64,
    pub perturbations: Vec<PerturbationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub non_ap_rate: f64,
    pub mean_m: f64,
    pub mean_crossings: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub factors: Vec<u64>,
    pub seed: u64,
    pub samples: usize,
    pub ap_rate: f64,
    pub mean_sup_integral: f64,
    pub perturbed: Vec<EpsilonSummary>,
    pub records: Vec<SampleRecord>,
}

impl ExperimentSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

fn run_sample(spec: &Arc<SolenoidSpec>, cfg: &ExperimentConfig, index: usize) -> Result<SampleRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let lambda = random_field(spec, &cfg.field, &mut rng)?.add_constant(Complex64::new(1.0, 0.0));
    let min_bound = certify_positive(&lambda)?.min_bound;
    let raw = classify(&lambda, cfg.classify.n_max, cfg.classify.t_max)?;
    let mut perturbations = Vec::with_capacity(cfg.epsilons.len());
    for &epsilon in &cfg.epsilons {
        let record = match perturb_to_generic(&lambda, epsilon, &cfg.classify) {
            Ok(p) => PerturbationRecord {
                epsilon,
                m: p.m,
                part: p.part,
                verdict: p.report.verdict,
                method: p.report.method,
                crossings: p.report.crossings.len(),
                sup_integral: p.report.sup_integral,
            },
            Err(LabError::BothInconclusive { .. }) => PerturbationRecord {
                epsilon,
                m: 0,
                part: Part::Full,
                verdict: Verdict::Inconclusive,
                method: Method::NumericScan,
                crossings: 0,
                sup_integral: 0.0,
            },
            Err(e) => return Err(e),
        };
        perturbations.push(record);
    }
    Ok(SampleRecord {
        index,
        terms: lambda.len(),
        min_bound,
        verdict: raw.verdict,
        bound: raw.bound,
        sup_integral: raw.sup_integral,
        perturbations,
    })
}

/// Classifies random positive finite λ and their ρ_m perturbations.
/// Sample i draws from a ChaCha8 stream keyed by (seed, i), and records
/// are reduced in index order, so the summary does not depend on the
/// thread count.
pub fn genericity_experiment(spec: Arc<SolenoidSpec>, cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    if cfg.samples == 0 {
        return Err(LabError::InvalidArgument("the experiment needs at least one sample".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| LabError::InvalidArgument(e.to_string()))?;
    let records = pool.install(|| {
        (0..cfg.samples)
            .into_par_iter()
            .map(|i| run_sample(&spec, cfg, i))
            .collect::<Result<Vec<_>>>()
    })?;
    let count = records.len() as f64;
    let ap = records.iter().filter(|r| r.verdict == Verdict::AlmostPeriodic).count();
    let perturbed = cfg
        .epsilons
        .iter()
        .enumerate()
        .map(|(k, &epsilon)| {
            let rows: Vec<&PerturbationRecord> = records.iter().map(|r| &r.perturbations[k]).collect();
            let hits = rows.iter().filter(|p| p.verdict == Verdict::NotAlmostPeriodic).count();
            EpsilonSummary {
                epsilon,
                non_ap_rate: hits as f64 / count,
                mean_m: rows.iter().map(|p| p.m as f64).sum::<f64>() / count,
                mean_crossings: rows.iter().map(|p| p.crossings as f64).sum::<f64>() / count,
            }
        })
        .collect();
    Ok(ExperimentSummary {
        factors: spec.factors().to_vec(),
        seed: cfg.seed,
        samples: cfg.samples,
        ap_rate: ap as f64 / count,
        mean_sup_integral: records.iter().map(|r| r.sup_integral).sum::<f64>() / count,
        perturbed,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    fn dyadic(j: usize) -> Arc<SolenoidSpec> {
        Arc::new(SolenoidSpec::dyadic(j))
    }

    fn one_plus_im_rho1(j: usize) -> BohrSeries {
        make_rho(dyadic(j), 1, Part::Imaginary, 1.0)
            .unwrap()
            .add_constant(Complex64::new(1.0, 0.0))
    }

    /// Σ_{j≥1} (1 − cos(2πT/2^j))/(2π), summed term by term.
    fn im_rho1_integral_oracle(k: i32) -> f64 {
        (1..=k + 40)
            .map(|j| {
                // T/2^j = 2^{k−j}/3; only its fractional part matters
                let x = if j <= k { (2f64.powi(k - j) / 3.0).fract() } else { 2f64.powi(k - j) / 3.0 };
                (1.0 - (TAU * x).cos()) / TAU
            })
            .sum()
    }

    #[test]
    fn constant_has_zero_integral() {
        let l = BohrSeries::real_constant(dyadic(3), 2.5);
        for p in integral_curve(&l, &[0.0, 1.0, 1e6], 1e-12).unwrap() {
            assert_eq!(p.value, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn im_rho1_matches_trig_oracle() {
        let l = one_plus_im_rho1(64);
        for k in 1..=30 {
            let t = 2f64.powi(k) / 3.0;
            let p = integral_at(&l, t, 1e-12);
            let oracle = im_rho1_integral_oracle(k);
            assert!((p.value.re - oracle).abs() < 1e-9, "k={k}: {} vs {oracle}", p.value.re);
            assert!(p.value.im.abs() < 1e-12);
            assert!(p.truncation_bound < 1e-12);
        }
    }

    #[test]
    fn integral_matches_quadrature() {
        let s = Arc::new(SolenoidSpec::new([2, 3, 2].repeat(15)).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = random_field(&s, &RandomFieldConfig::default(), &mut rng)
            .unwrap()
            .add_constant(Complex64::new(1.0, 0.0))
            .add(&make_rho(s.clone(), 2, Part::Real, 0.3).unwrap())
            .unwrap();
        // tail mass beyond level 45 is below 1e-13
        let centred = l.without_mean().partial_sum(45).unwrap();
        for _ in 0..5 {
            let t = rng.random_range(0.0..1000.0);
            let closed = integral_at(&l, t, 1e-12).value.re;
            let pieces = t.ceil() as usize;
            let quad: f64 = (0..pieces)
                .map(|i| {
                    let a = t * i as f64 / pieces as f64;
                    let b = t * (i + 1) as f64 / pieces as f64;
                    adaptive_simpson(|u| centred.evaluate_finite(u).re, a, b, 1e-10)
                })
                .sum();
            assert!((closed - quad).abs() < 1e-6, "{closed} vs {quad}");
        }
    }

    #[test]
    fn finite_series_are_almost_periodic_and_bound_holds() {
        let s = Arc::new(SolenoidSpec::new(vec![2, 3, 2]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let l = random_field(&s, &RandomFieldConfig::default(), &mut rng)
                .unwrap()
                .add_constant(Complex64::new(1.0, 0.0));
            let rep = classify(&l, 3, 1e6).unwrap();
            assert_eq!((rep.verdict, rep.method), (Verdict::AlmostPeriodic, Method::AnalyticL1));
            let b = rep.bound.unwrap();
            for t in scan_times(&s, 1e6) {
                let p = integral_at(&l, t, 1e-12);
                assert!(p.value.norm() <= b + p.truncation_bound + 1e-12);
            }
            assert!(rep.sup_integral <= b);
        }
    }

    #[test]
    fn rho_tail_is_not_almost_periodic() {
        let rep = classify(&one_plus_im_rho1(40), 4, 2f64.powi(40) / 3.0).unwrap();
        assert_eq!((rep.verdict, rep.method), (Verdict::NotAlmostPeriodic, Method::AnalyticParseval));
        // the scan agrees: every n ≤ 4 is crossed
        assert_eq!(rep.crossings.len(), 4);
        let ts: Vec<f64> = rep.crossings.values().copied().collect();
        assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(rep.exit_code(), 10);
    }

    #[test]
    fn geometric_tails() {
        let s = dyadic(8);
        let fast = BohrSeries::real_constant(s.clone(), 1.0)
            .with_tail(TailSpec::geometric(1, Complex64::new(0.25, 0.0), 0.125, Part::Imaginary).unwrap())
            .unwrap();
        let rep = classify(&fast, 3, 1e6).unwrap();
        assert_eq!(rep.verdict, Verdict::AlmostPeriodic);
        // Σ (1/8)^{j−1}·2^j/π·0.25 = 0.5/π · 1/(1 − 1/4)
        let expect = 0.25 * 2.0 / PI / 0.75;
        assert!((rep.bound.unwrap() - expect).abs() < 1e-12);

        let edge = BohrSeries::real_constant(s, 1.0)
            .with_tail(TailSpec::geometric(1, Complex64::new(0.25, 0.0), 0.5, Part::Imaginary).unwrap())
            .unwrap();
        let tiny = classify(&edge, 3, 10.0).unwrap();
        assert_eq!((tiny.verdict, tiny.exit_code()), (Verdict::Inconclusive, 11));
    }

    #[test]
    fn make_rho_bounds() {
        let s = dyadic(30);
        for m in 1..6 {
            let r = make_rho(s.clone(), m, Part::Imaginary, 1.0).unwrap();
            assert_eq!(r.mean_value(), Complex64::new(0.0, 0.0));
            let bound = 0.5f64.powi(m as i32 - 1);
            for k in 0..200 {
                let t = k as f64 * 0.37 + 2f64.powi(m as i32) / 3.0;
                assert!(r.evaluate_at_time(t, 1e-14).unwrap().value.norm() <= bound);
            }
            let direct: Complex64 = (m..=m + 10)
                .map(|j| {
                    let p = 2f64.powi(j as i32);
                    Complex64::new((TAU * (5.5 / p).fract()).sin() / p, 0.0)
                })
                .sum();
            let partial = r.partial_sum(m + 10).unwrap().evaluate_finite(5.5);
            assert!((partial - direct).norm() < 1e-14);
        }
        assert!(make_rho(s, 0, Part::Real, 1.0).is_err());
    }

    #[test]
    fn perturbing_the_constant() {
        let l = BohrSeries::real_constant(dyadic(16), 1.0);
        let p = perturb_to_generic(&l, 1e-3, &ClassifyOptions::default()).unwrap();
        assert_eq!(p.m, 11);
        assert_eq!(p.part, Part::Imaginary);
        assert_eq!(p.report.verdict, Verdict::NotAlmostPeriodic);
        assert!(p.min_bound >= 1.0 - 1e-3);
        let diff = p.series.sub(&l).unwrap();
        let sup = crate::series::sampled_sup(&diff, 2f64.powi(13), 4096, 1e-14).unwrap();
        assert!(sup <= 1e-3);
    }

    #[test]
    fn openness_holds_for_im_rho1() {
        let l = one_plus_im_rho1(40);
        for n in [1, 2] {
            let rep = un_openness_check(&l, n, 20, 7, 1e12).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert!(rep.margin > 0.0);
        }
        let c = BohrSeries::real_constant(dyadic(4), 1.0);
        assert!(matches!(un_openness_check(&c, 1, 5, 0, 1e6), Err(LabError::NoCrossing(1))));
    }

    #[test]
    fn crossings_are_nested() {
        let rep = classify(&one_plus_im_rho1(40), 6, 1e12).unwrap();
        let ts: Vec<(u32, f64)> = rep.crossings.into_iter().collect();
        for w in ts.windows(2) {
            assert!(w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        }
    }

    #[test]
    fn experiment_is_deterministic() {
        let s = Arc::new(SolenoidSpec::new(vec![2, 3, 2, 2]).unwrap());
        let mut cfg = ExperimentConfig::new(6, vec![1e-1, 1e-2], 3);
        cfg.threads = 1;
        let a = genericity_experiment(s.clone(), &cfg).unwrap();
        cfg.threads = 3;
        let b = genericity_experiment(s.clone(), &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert_eq!(a.ap_rate, 1.0);
        assert!(a.perturbed.iter().all(|e| e.non_ap_rate == 1.0));
        cfg.samples = 0;
        assert!(genericity_experiment(s, &cfg).is_err());
    }
}
