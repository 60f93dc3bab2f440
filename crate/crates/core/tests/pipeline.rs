mod common;

use std::f64::consts::PI;

use common::{fit_1d, simpson, simpson_pieces, step_samples, truncated_normal};
use levycal::calib::{calibrate, exact_stable_ecf, CalibProblem, DataSource, FormConfig, Mode};
use levycal::charfn::{levy_cf_from_density, stable_cf_with};
use levycal::funcform::{Form, FunctionalForm, NnForm, PlForm};
use levycal::optimizer::OptimizerOptions;
use levycal::quadrature::{circle_rule, disk_rule};
use levycal::simulate::{sample_stable_increments, RngState, DEFAULT_DIRECTIONS};
use num_complex::Complex64;

#[test]
fn nn_fits_a_step_from_twenty_samples() {
    let (xs, ys) = step_samples(20);
    let form = Form::Nn(NnForm::with_depth(1, 3).unwrap());
    let opts = OptimizerOptions { max_iters: 3000, ..Default::default() };
    let theta = fit_1d(&form, &xs, &ys, 0, &opts);
    let mse = xs.iter().zip(&ys).map(|(&x, &y)| (form.eval(&theta, &[x]) - y).powi(2)).sum::<f64>() / 20.0;
    assert!(mse <= 1e-3, "mse {mse}");
    let band = 2.0 / 19.0;
    let worst = (0..=1000)
        .map(|k| k as f64 / 1000.0)
        .filter(|x| (x - 0.5).abs() > band)
        .map(|x| (form.eval(&theta, &[x]) - if x > 0.5 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.1, "max error {worst}");
}

#[test]
fn pl_with_forty_nodes_interpolates_samples() {
    let (xs, ys) = step_samples(20);
    let form = Form::Pl(PlForm::new(1, 40, [0.0, 1.0]).unwrap());
    let opts = OptimizerOptions { max_iters: 5000, grad_tol: 1e-14, f_rel_tol: 0.0, ..Default::default() };
    let theta = fit_1d(&form, &xs, &ys, 0, &opts);
    for (&x, &y) in xs.iter().zip(&ys) {
        assert!((form.eval(&theta, &[x]) - y).abs() < 1e-6, "x={x}");
    }
}

fn noisy_problem(form: FormConfig, seed: u64) -> CalibProblem {
    let data = sample_stable_increments(|_| 1.0, 1.5, 0.5, 1000, DEFAULT_DIRECTIONS, &RngState::new(seed)).unwrap();
    CalibProblem::new(Mode::Stable, form, DataSource::Increments(data))
}

#[test]
fn calibration_is_bitwise_reproducible() {
    let p = noisy_problem(FormConfig::nn(3), 1);
    let opts = OptimizerOptions { max_iters: 100, ..Default::default() };
    let a = calibrate(&p, &opts).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| calibrate(&p, &opts).unwrap());
    assert_eq!(a.theta_star, b.theta_star);
    assert_eq!(a.alpha_hat.unwrap().to_bits(), b.alpha_hat.unwrap().to_bits());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn collocation_count_has_small_effect() {
    let mut out = Vec::new();
    for m in [500, 1000] {
        let mut p = noisy_problem(FormConfig::pl(20), 3);
        p.collocation.m_colloc = m;
        out.push(calibrate(&p, &OptimizerOptions::default()).unwrap().alpha_hat.unwrap());
    }
    assert!((out[0] - out[1]).abs() <= 0.01, "{out:?}");
}

#[test]
fn stable_exponent_matches_one_dimensional_integral() {
    // Gamma = 1: the exponent is dt |xi|^alpha times the integral of |cos|^alpha.
    let alpha = 0.75;
    let c = 4.0 * simpson(&|t: f64| t.cos().abs().powf(alpha), 0.0, PI / 2.0, 1e-13);
    let rule = circle_rule(10_000).unwrap();
    for xi in [[1.0, 0.0], [0.3, -2.0], [-1.5, 1.5]] {
        let norm = f64::hypot(xi[0], xi[1]);
        let got = -stable_cf_with(|_| 1.0, &rule, alpha, xi, 0.5).unwrap().re.ln();
        let want = 0.5 * norm.powf(alpha) * c;
        assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
    }
}

#[test]
fn exact_reference_matches_direct_sum() {
    let pts = [[0.5, 0.25], [2.0, -1.0]];
    let est = exact_stable_ecf(|t| 1.0 + 0.5 * (2.0 * t).cos(), 1.2, 0.5, 400, &pts).unwrap();
    for (p, v) in pts.iter().zip(&est.values) {
        let n = 400;
        let s: f64 = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                (p[0] * t.cos() + p[1] * t.sin()).abs().powf(1.2) * (1.0 + 0.5 * (2.0 * t).cos()) * 2.0 * PI / n as f64
            })
            .sum();
        assert!((v - Complex64::new((-0.5 * s).exp(), 0.0)).norm() < 1e-13);
    }
}

#[test]
fn levy_exponent_matches_nested_simpson() {
    let m = 8.0;
    let rule = disk_rule(m, 64, 2048).unwrap();
    let nu: Vec<f64> = rule.nodes.iter().map(|&x| truncated_normal(x)).collect();
    for xi in [[0.7, -0.3], [1.5, 2.0]] {
        let got = levy_cf_from_density(&rule, &nu, xi, 1.0).unwrap().ln();
        let part = |im: bool| {
            let radial = |r: f64| {
                let inner = |t: f64| {
                    let (s, c) = t.sin_cos();
                    let u = r * (xi[0] * c + xi[1] * s);
                    let comp = if r <= 1.0 { u } else { 0.0 };
                    let k = if im { u.sin() - comp } else { u.cos() - 1.0 };
                    k * 2.0 / PI * (-r * r / 2.0).exp() * r
                };
                simpson(&inner, 0.0, PI / 2.0, 1e-12)
            };
            simpson_pieces(&radial, &[0.0, 1.0, m], 1e-11)
        };
        let want = Complex64::new(part(false), part(true));
        assert!((got - want).norm() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn price_table_recovers_log_returns() {
    let mut rng = RngState::new(9).substream(levycal::simulate::Stream::Pilot, 0);
    let returns: Vec<[f64; 2]> = (0..200)
        .map(|_| {
            use rand::Rng;
            [0.02 * (rng.random::<f64>() - 0.5), 0.03 * (rng.random::<f64>() - 0.5)]
        })
        .collect();
    let mut text = String::from("date,A,B\n");
    let mut p = [100.0f64, 40.0];
    let day0 = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    for k in 0..=returns.len() {
        if k > 0 {
            p[0] *= returns[k - 1][0].exp();
            p[1] *= returns[k - 1][1].exp();
        }
        text.push_str(&format!("{},{:e},{:e}\n", day0 + chrono::Days::new(k as u64), p[0], p[1]));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prices.csv");
    std::fs::write(&path, text).unwrap();
    let table = levycal::ingest_prices(&path).unwrap();
    assert_eq!(table.len(), 201);
    let series = table.pair_series(0, 1, 1.0).unwrap();
    for c in 0..2 {
        let mean = returns.iter().map(|r| r[c]).sum::<f64>() / 200.0;
        for (got, r) in series.increments.iter().zip(&returns) {
            assert!((got[c] - (r[c] - mean)).abs() < 1e-12);
        }
    }
}
