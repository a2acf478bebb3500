//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::f64::consts::{E, PI, TAU};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use solenoid_core::classification::{
    genericity_experiment, integral_at, make_rho, perturb_to_generic, random_field, un_openness_check,
    ClassifyOptions, ExperimentConfig, RandomFieldConfig, Verdict,
};
use solenoid_core::flows::{
    build_conjugacy_with, linear_first_return, return_time_series, ConjugacyOptions,
    GeneratedFlow, LinearFlow,
};
use solenoid_core::quadrature::adaptive_simpson;
use solenoid_core::series::{reciprocal, sampled_sup, BohrSeries, Part};
use solenoid_core::solenoid::{character, pi_n, Frequency, SolenoidPoint, SolenoidSpec};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn spec(f: &[u64]) -> Arc<SolenoidSpec> {
    Arc::new(SolenoidSpec::new(f.to_vec()).unwrap())
}

fn alternating() -> Arc<SolenoidSpec> {
    spec(&[2, 3, 2, 3, 2, 3])
}

/// 1 + mean-zero random real series with l1 norm 0.5, levels ≤ 4.
fn positive_field(s: &Arc<SolenoidSpec>, rng: &mut ChaCha8Rng) -> BohrSeries {
    let cfg = RandomFieldConfig {
        max_level: 4,
        harmonics_per_level: 2,
        decay: 0.5,
        l1: 0.5,
    };
    random_field(s, &cfg, rng).unwrap().add_constant(Complex64::new(1.0, 0.0))
}

fn lambda_rho1() -> BohrSeries {
    let s = Arc::new(SolenoidSpec::dyadic(8));
    make_rho(s.clone(), 1, Part::Imaginary, 1.0)
        .unwrap()
        .add_constant(Complex64::new(1.0, 0.0))
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {took:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn character_identity() -> Outcome {
    let started = Instant::now();
    let s = alternating();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let level = rng.random_range(0..s.depth());
        // |r| ≤ 5: f64 angles carry 2^-53 error, scaled by the numerator
        let bound = 5 * s.product_f64(level) as i64;
        let r = Frequency::new(&s, level, rng.random_range(-bound..=bound)).unwrap();
        let t: f64 = rng.random_range(-100.0..100.0);
        let x = pi_n(&s, t, s.depth()).unwrap();
        let exact = r.value(&s) * BigRational::from_float(t).unwrap();
        let phase = (&exact - exact.floor()).to_f64().unwrap();
        let expected = Complex64::from_polar(1.0, TAU * phase);
        worst = worst.max((character(&r, &x).unwrap() - expected).norm());
    }
    within(Duration::from_secs(1), started)?;
    if worst < 1e-12 {
        Ok(format!("max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e}"))
    }
}

fn return_time_agreement() -> Outcome {
    let started = Instant::now();
    let s = alternating();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = positive_field(&s, &mut rng);
        let lambda = reciprocal(&v, v.max_level(), 1e-13).unwrap().series;
        let tau = return_time_series(&lambda, 1e-14).unwrap();
        let flow = GeneratedFlow::new(v).unwrap();
        for _ in 0..10 {
            let x = SolenoidPoint::random(&s, s.depth(), &mut rng).unwrap();
            let a = tau.evaluate_at_point(&x, 1e-14).unwrap().value.re;
            // λ = 1/v integrated directly, independent of the reciprocal series
            let orbit = flow.field().along_orbit(&x, 1e-15).unwrap();
            let b = adaptive_simpson(|u| 1.0 / orbit.eval_re(u), 0.0, 1.0, 1e-12);
            let c = flow.section_return(&x).unwrap().time;
            worst = worst.max((a - b).abs()).max((a - c).abs()).max((b - c).abs());
        }
    }
    within(Duration::from_secs(30), started)?;
    if worst < 1e-7 {
        Ok(format!("max pairwise gap {worst:.2e}"))
    } else {
        Err(format!("max pairwise gap {worst:.2e}"))
    }
}

fn linear_return() -> Outcome {
    let s = alternating();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0, E] {
        let flow = LinearFlow::new(s.clone(), alpha).unwrap();
        let mut points = vec![SolenoidPoint::identity(s.depth())];
        points.extend((0..5).map(|_| SolenoidPoint::random(&s, s.depth(), &mut rng).unwrap()));
        for x in &points {
            let t = linear_first_return(&flow, x).unwrap();
            worst = worst.max((t - 1.0 / alpha).abs());
        }
    }
    if worst < 1e-9 {
        Ok(format!("max |T - 1/alpha| {worst:.2e}"))
    } else {
        Err(format!("max |T - 1/alpha| {worst:.2e}"))
    }
}

fn conjugacy() -> Outcome {
    let started = Instant::now();
    let s = alternating();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let v = positive_field(&s, &mut rng);
        let opts = ConjugacyOptions {
            seed: i,
            ..ConjugacyOptions::default()
        };
        assert_eq!((opts.times, opts.points, opts.t_min, opts.t_max), (20, 20, -5.0, 5.0));
        let data = build_conjugacy_with(&v, &opts).map_err(|e| e.to_string())?;
        worst = worst.max(data.residual);
    }
    within(Duration::from_secs(120), started)?;
    if worst < 1e-6 {
        Ok(format!("max residual {worst:.2e}"))
    } else {
        Err(format!("max residual {worst:.2e}"))
    }
}

fn unbounded_integral() -> Outcome {
    let started = Instant::now();
    let lambda = lambda_rho1();
    let c: f64 = (1..64)
        .map(|i| (1.0 - (TAU / (3.0 * 2f64.powi(i))).cos()) / TAU)
        .sum();
    let mut worst: f64 = 0.0;
    let mut previous = f64::NEG_INFINITY;
    let mut crossed = [false; 5];
    for k in 5..=30 {
        let p = integral_at(&lambda, 2f64.powi(k) / 3.0, 1e-9);
        let expected = 3.0 * k as f64 / (4.0 * PI) + c;
        worst = worst.max((p.value.re - expected).abs());
        if k > 8 && p.value.re <= previous {
            return Err(format!("not monotone at k = {k}"));
        }
        previous = p.value.re;
        let lower = p.value.norm() - p.truncation_bound;
        for (n, hit) in crossed.iter_mut().enumerate() {
            *hit |= lower > (n + 1) as f64;
        }
    }
    within(Duration::from_secs(1), started)?;
    if !crossed.iter().all(|&h| h) {
        return Err(format!("crossings {crossed:?}"));
    }
    if worst < 0.2 {
        Ok(format!("max deviation {worst:.2e}, crosses n = 1..5"))
    } else {
        Err(format!("max deviation {worst:.2e}"))
    }
}

fn perturbation_smallness() -> Outcome {
    let started = Instant::now();
    let s = alternating();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let bases = [
        BohrSeries::real_constant(s.clone(), 1.0),
        positive_field(&s, &mut rng),
        positive_field(&s, &mut rng),
    ];
    let opts = ClassifyOptions::default();
    let mut worst_ratio: f64 = 0.0;
    for base in &bases {
        for d in 1..=6 {
            let eps = 10f64.powi(-d);
            let p = perturb_to_generic(base, eps, &opts).map_err(|e| e.to_string())?;
            if p.report.verdict != Verdict::NotAlmostPeriodic {
                return Err(format!("eps {eps:e}: verdict {:?}", p.report.verdict));
            }
            let diff = p.series.sub(base).unwrap();
            let window = 4.0 * s.product_f64(p.m);
            let sup = sampled_sup(&diff, window, 4096, 1e-12).unwrap();
            if sup > eps {
                return Err(format!("eps {eps:e}: sampled sup {sup:e}"));
            }
            worst_ratio = worst_ratio.max(sup / eps);
        }
    }
    within(Duration::from_secs(30), started)?;
    Ok(format!("max sup/eps {worst_ratio:.3}, all not_almost_periodic"))
}

fn openness() -> Outcome {
    let started = Instant::now();
    let lambda = lambda_rho1();
    let mut lines = Vec::new();
    for n in [1, 2] {
        let r = un_openness_check(&lambda, n, 100, 7 + n as u64, 1e12).map_err(|e| e.to_string())?;
        if !(r.passed && r.in_u_n == 100 && r.auxiliary_holds == 100) {
            return Err(format!("n = {n}: {}/100 in U_n, auxiliary {}/100", r.in_u_n, r.auxiliary_holds));
        }
        lines.push(format!("n = {n}: 100/100, min excess {:.2e}", r.min_excess));
    }
    within(Duration::from_secs(30), started)?;
    Ok(lines.join("; "))
}

/// s(t) for ds/dt = a + b·cos(2πs), s(0) = 0, by separation of variables.
fn exact_arc(a: f64, b: f64, t: f64) -> f64 {
    let w = (a * a - b * b).sqrt();
    let k = ((a + b) / (a - b)).sqrt();
    let phi = PI * w * t;
    ((k * phi.tan()).atan() + PI * (phi / PI).round()) / PI
}

fn integrator_order() -> Outcome {
    let s = Arc::new(SolenoidSpec::dyadic(4));
    let v = BohrSeries::cosine(s.clone(), Frequency::new(&s, 0, 1).unwrap(), 0.3)
        .unwrap()
        .add_constant(Complex64::new(1.0, 0.0));
    let x = SolenoidPoint::identity(s.depth());
    let t = 10.0;
    let exact = exact_arc(1.0, 0.3, t);
    let steps = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let mut pts = Vec::new();
    for h in steps {
        let flow = GeneratedFlow::with_settings(v.clone(), h, 1e-15).unwrap();
        let err = (flow.arc_coordinate(t, &x).unwrap() - exact).abs();
        pts.push((h.ln(), err.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if (slope - 4.0).abs() <= 0.3 {
        Ok(format!("slope {slope:.3}"))
    } else {
        Err(format!("slope {slope:.3}"))
    }
}

fn experiment() -> Outcome {
    let started = Instant::now();
    let s = alternating();
    let mut cfg = ExperimentConfig::new(50, vec![1e-1, 1e-2, 1e-3], 42);
    cfg.threads = 1;
    let one = genericity_experiment(s.clone(), &cfg).map_err(|e| e.to_string())?;
    cfg.threads = 4;
    let four = genericity_experiment(s, &cfg).map_err(|e| e.to_string())?;
    within(Duration::from_secs(120), started)?;
    let eps = one
        .perturbed
        .iter()
        .find(|e| e.epsilon == 1e-3)
        .ok_or("no 1e-3 summary")?;
    if one.to_json() != four.to_json() {
        return Err("summaries differ between 1 and 4 threads".into());
    }
    if one.ap_rate != 1.0 || eps.non_ap_rate != 1.0 {
        return Err(format!("ap rate {}, non-AP rate at 1e-3 {}", one.ap_rate, eps.non_ap_rate));
    }
    Ok("raw 100% AP, 1e-3 perturbations 100% non-AP, JSON identical".into())
}

fn reciprocal_check() -> Outcome {
    let s = Arc::new(SolenoidSpec::dyadic(2));
    let v = BohrSeries::cosine(s.clone(), Frequency::new(&s, 0, 1).unwrap(), 0.5)
        .unwrap()
        .add_constant(Complex64::new(1.0, 0.0));
    let lambda = reciprocal(&v, 0, 1e-13).map_err(|e| e.to_string())?.series;
    let mean_err = (lambda.mean_value().re - 2.0 / 3f64.sqrt()).abs();
    let samples = 10_000;
    let residual = (0..samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            (lambda.evaluate_finite(t) * (1.0 + 0.5 * (TAU * t).cos()) - 1.0).norm()
        })
        .fold(0.0, f64::max);
    let msg = format!("mean error {mean_err:.2e}, residual {residual:.2e}");
    if mean_err < 1e-10 && residual < 1e-10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("character identity", character_identity),
        ("return-time triple agreement", return_time_agreement),
        ("linear return constant", linear_return),
        ("conjugacy residual", conjugacy),
        ("unbounded integral", unbounded_integral),
        ("perturbation smallness", perturbation_smallness),
        ("U_n openness", openness),
        ("integrator order", integrator_order),
        ("genericity experiment", experiment),
        ("reciprocal", reciprocal_check),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} ({secs:.2}s)", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
