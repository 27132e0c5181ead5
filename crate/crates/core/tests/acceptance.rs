//! Acceptance criteria 1-10, one PASS/FAIL line each.

mod common;

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::props;
use ep_atlas::asymptotics::{compensation_slope, infinite_fence_energy_at};
use ep_atlas::collectivity::{b_curve, b_measure_at};
use ep_atlas::ep::{accumulation_scan, find_eps, resultant_oracle, RESULTANT_MAX_N};
use ep_atlas::model::{build_picket_fence, build_power_law, build_two_level, Angle, ModelSpec};
use ep_atlas::phase_loop::{loop_ep, omega_comparison, TwoLevel};
use ep_atlas::secular::{eigen_spectrum_at, eigenvalues_at, two_level_closed_form_at};
use ep_atlas::trajectory::width_partition;
use num_complex::Complex64;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let m = ((stop - start) / step).round() as usize;
    (0..=m).map(|i| start + step * i as f64).collect()
}

fn nearest(z: Complex64, set: &[Complex64]) -> f64 {
    set.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
}

fn two_level_closed_forms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_e, mut worst_ep) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let eps1: f64 = rng.random_range(-3.0..3.0);
        let eps2 = eps1 + rng.random_range(0.1..3.0);
        let omega = Angle::from_degrees(rng.random_range(5.0..85.0));
        let lambda = Complex64::from_polar(rng.random_range(0.01..5.0), rng.random_range(0.0f64..=90.0).to_radians());
        let model = build_two_level(eps1, eps2, omega).unwrap();
        let got = eigenvalues_at(&model, lambda).unwrap();
        let (a, b) = two_level_closed_form_at(eps1, eps2, omega, lambda);
        let scale = 1.0 + lambda.norm() + eps1.abs().max(eps2.abs());
        for z in [a, b] {
            worst_e = worst_e.max(nearest(z, &got) / scale);
        }
        let points: Vec<Complex64> = find_eps(&model).unwrap().iter().flat_map(|p| p.members().map(|m| m.0)).collect();
        let d = eps2 - eps1;
        for s in [1.0, -1.0] {
            let want = Complex64::i() * d * Complex64::from_polar(1.0, s * 2.0 * omega.radians());
            worst_ep = worst_ep.max(nearest(want, &points) / d);
        }
    }
    verdict(
        worst_e <= 1e-10 && worst_ep <= 1e-9,
        format!("200 tuples: max eigenvalue error {worst_e:.1e} (tol 1e-10), max EP error {worst_ep:.1e} (tol 1e-9)"),
    )
}

fn ep_count_law() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [5usize, 9, 15, 19] {
        let model = build_picket_fence(n).unwrap();
        let eps = find_eps(&model).unwrap();
        let points: Vec<Complex64> = eps.iter().flat_map(|p| p.members().map(|m| m.0)).collect();
        let residual = eps.iter().map(|p| p.residual).fold(0.0, f64::max);
        ok &= eps.len() == n - 1 && points.len() == 2 * n - 2 && residual <= 1e-9;
        let mut note = format!("N={n}: {} classes, {} points, max residual {residual:.1e}", eps.len(), points.len());
        if n <= RESULTANT_MAX_N {
            let roots = resultant_oracle(&model).unwrap();
            let d = roots
                .iter()
                .map(|r| nearest(*r, &points))
                .chain(points.iter().map(|p| nearest(*p, &roots)))
                .fold(0.0, f64::max);
            ok &= roots.len() == points.len() && d <= 1e-8;
            note += &format!(", resultant max deviation {d:.1e}");
        }
        notes.push(note);
    }
    verdict(ok, notes.join("; "))
}

fn accumulation() -> Verdict {
    let ladder = [15usize, 19, 27, 43];
    let report = accumulation_scan(&ladder, &ModelSpec::PicketFence { n: 15 }).unwrap();
    let mins: Vec<f64> = report.distances.unwrap().iter().map(|d| d.min).collect();
    let ok = mins.windows(2).all(|w| w[1] < w[0]);
    let text: Vec<String> = ladder.iter().zip(&mins).map(|(n, d)| format!("N={n}: {d:.5}")).collect();
    verdict(ok, format!("min |Lambda_EP - 1/pi|: {}", text.join(", ")))
}

fn b_peaks() -> Verdict {
    let g = grid(0.05, 1.0, 0.005);
    let picket = b_curve(&build_picket_fence(101).unwrap(), Angle::ZERO, &g).unwrap();
    let p = picket.peak.map_or(f64::NAN, |p| p.lambda);
    let ok1 = (p - FRAC_1_PI).abs() <= 0.05;
    let at = |n: usize| b_measure_at(&build_picket_fence(n).unwrap(), c(FRAC_1_PI, 0.0)).unwrap();
    let (b101, b301) = (at(101), at(301));
    let ok2 = b301 > b101;
    let comp = b_curve(&build_power_law(101, 1.0, 4.0).unwrap(), Angle::ZERO, &g).unwrap();
    let q = comp.peak.map_or(f64::NAN, |p| p.lambda);
    let ok3 = (q - FRAC_2_PI).abs() <= 0.1;
    let under = b_curve(&build_power_law(101, 0.0, 4.0).unwrap(), Angle::ZERO, &g).unwrap();
    let ok4 = under.peak.is_none();
    let raw = under
        .grid_max
        .map_or("none".into(), |m| format!("{:.3} (B = {:.4})", m.lambda, m.value));
    verdict(
        ok1 && ok2 && ok3 && ok4,
        format!(
            "picket peak {p:.4} (1/pi +- 0.05); B(1/pi) N=101 {b101:.3} < N=301 {b301:.3}; r=1,t=4 peak {q:.4} (2/pi +- 0.1); \
             r=0,t=4 interior peak: {} (raw grid max {raw}, relative prominence {:.3} < 0.5)",
            if ok4 { "none" } else { "found" },
            under.relative_prominence.unwrap_or(f64::NAN)
        ),
    )
}

fn width_branches() -> Verdict {
    let model = build_picket_fence(101).unwrap();
    let small = eigen_spectrum_at(&model, c(0.1, 0.0)).unwrap().widths();
    let dev_small = small.iter().map(|g| (g / 0.2 - 1.0).abs()).fold(0.0, f64::max);
    let inside = small.iter().filter(|g| (*g / 0.2 - 1.0).abs() <= 0.05).count();
    let ok1 = dev_small <= 0.05;
    let sp = eigen_spectrum_at(&model, c(2.0, 0.0)).unwrap();
    let (_, _) = width_partition(&sp).unwrap();
    let broad = sp
        .eigenvalues()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.im.total_cmp(&b.1.im).reverse())
        .map(|(k, _)| k)
        .unwrap();
    let target = 2.0 / (PI * PI * 2.0);
    let dev_mid = sp
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|&(k, z)| k != broad && z.re.abs() < 101.0 / 6.0)
        .map(|(_, z)| (-2.0 * z.im / target - 1.0).abs())
        .fold(0.0, f64::max);
    let ok2 = dev_mid <= 0.10;
    let sp = eigen_spectrum_at(&model, c(10.0, 0.0)).unwrap();
    let (b, trapped) = width_partition(&sp).unwrap();
    let frac = b / (b + trapped.iter().sum::<f64>());
    let ok3 = frac >= 0.95;
    verdict(
        ok1 && ok2 && ok3,
        format!(
            "lambda=0.1: max |Gamma/(2 lambda) - 1| = {dev_small:.4} (tol 0.05; {inside}/101 within); \
             lambda=2 central third: max |Gamma/(2/(pi^2 lambda)) - 1| = {dev_mid:.4} (tol 0.10); lambda=10 broad fraction {frac:.4} (>= 0.95)"
        ),
    )
}

fn infinite_fence() -> Verdict {
    let n = 1001;
    let z = eigenvalues_at(&build_picket_fence(n).unwrap(), c(2.0, 0.0)).unwrap();
    let e = infinite_fence_energy_at(c(2.0, 0.0), 0).unwrap();
    let central: Vec<&Complex64> = z.iter().filter(|z| z.re.abs() < n as f64 / 200.0 && z.im > -1.0).collect();
    let worst = central
        .iter()
        .map(|z| (*z - (e + (z.re - e.re).round())).norm())
        .fold(0.0, f64::max);
    verdict(
        !central.is_empty() && worst < 5e-3,
        format!("N=1001, lambda=2, {} central states (|Re E| < N/200): max |Delta| = {worst:.2e} (tol 5e-3)", central.len()),
    )
}

fn compensation_scaling() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (r, t) in [(0.0, 2.0), (1.0, 4.0), (0.0, 4.0)] {
        let slope = compensation_slope(r, t, 1e2, 1e4, 21).unwrap();
        let want = 2.0 * (1.0 + r) / t - 1.0;
        ok &= (slope - want).abs() <= 0.05;
        notes.push(format!("(r={r},t={t}): {slope:.4} vs {want:.4}"));
    }
    verdict(ok, format!("log-log slopes {} (tol 0.05)", notes.join(", ")))
}

fn monodromy() -> Verdict {
    let m = TwoLevel {
        eps1: 0.0,
        eps2: 1.0,
        omega: Angle::from_degrees(30.0),
    };
    let [a, b] = ep_atlas::ep::two_level_eps(m.eps1, m.eps2, m.omega).unwrap();
    let centre = if a.lambda_ep.re >= 0.0 { a.lambda_ep } else { b.lambda_ep };
    let mut ok = true;
    let mut notes = Vec::new();
    for (w, want) in [(1, ([1, 0], [1, -1])), (2, ([0, 1], [-1, -1])), (4, ([0, 1], [1, 1]))] {
        let r = loop_ep(centre, 0.2, w, 512, m).unwrap();
        let good = (r.permutation, r.signs) == want && r.max_deviation <= 1e-6 && r.samples == 512;
        ok &= good;
        let image = |i: usize| format!("{}psi{}", if r.signs[i] < 0 { "-" } else { "" }, r.permutation[i] + 1);
        notes.push(format!("{w}: (psi1, psi2) -> ({}, {}) dev {:.1e}", image(0), image(1), r.max_deviation));
    }
    let oc = omega_comparison(0.0, 1.0, 100.0, Angle::from_degrees(1.0)).unwrap();
    let dist = |z: Complex64, x: f64| (z - x).norm();
    let (hi, lo) = (oc.above, oc.below);
    let split_a = dist(hi.tan_theta_asymptotic, hi.tan_omega).max(dist(lo.tan_theta_asymptotic, lo.minus_cot_omega));
    let split_b = dist(hi.tan_theta_asymptotic, hi.minus_cot_omega).max(dist(lo.tan_theta_asymptotic, lo.tan_omega));
    let branch = split_a.min(split_b);
    ok &= branch <= 1e-4;
    let side = if split_b < split_a { "46 deg -> -cot w, 44 deg -> tan w" } else { "46 deg -> tan w, 44 deg -> -cot w" };
    verdict(
        ok,
        format!(
            "windings {}; omega comparison at lambda=100: {side}, asymptote error {branch:.1e} (tol 1e-4), raw error {:.1e}",
            notes.join(", "),
            dist(hi.tan_theta_raw, if split_b < split_a { hi.minus_cot_omega } else { hi.tan_omega })
        ),
    )
}

fn run_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> props::Outcome,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn property_suite() -> Verdict {
    let results = [
        run_property("trace", 100, (props::arbitrary_model(40), props::coupling()), |(m, l)| {
            props::trace_is_conserved(&m, l)
        }),
        run_property("oracle", 100, (props::arbitrary_model(8), props::coupling()), |(m, l)| {
            props::oracle_agrees(&m, l)
        }),
        run_property("B >= 1", 80, (props::arbitrary_model(30), props::coupling()), |(m, l)| {
            props::b_at_least_one(&m, l)
        }),
        run_property("norms >= 1", 80, (props::arbitrary_model(30), props::coupling()), |(m, l)| {
            props::norms_at_least_one(&m, l)
        }),
        run_property("phi = 90 real", 70, (props::arbitrary_model(40), 0.01..5.0f64), |(m, l)| {
            props::imaginary_coupling_real_spectrum(&m, l)
        }),
        run_property("mirror", 70, (2usize..60, 0.01..5.0f64), |(n, l)| props::picket_mirror_symmetric(n, l)),
    ];
    let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "500 cases over 6 properties".to_string()
        } else {
            failures.join("; ")
        },
    )
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv" || x == "toml"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = root.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_ep-atlas"))
            .args(["fig3", "--seed", "42", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (status.status.success(), out.join("fig3"))
    };
    let (ok_a, a) = run("a");
    let (ok_b, b) = run("b");
    if !(ok_a && ok_b) {
        return verdict(false, "fig3 run failed");
    }
    let (fa, fb) = (read_csvs(&a), read_csvs(&b));
    let manifest = |d: &Path| -> Vec<(String, String)> {
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("manifest.json")).unwrap()).unwrap();
        v["files"]
            .as_array()
            .unwrap()
            .iter()
            .map(|f| (f["name"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
            .collect()
    };
    let same = !fa.is_empty() && fa == fb && manifest(&a) == manifest(&b);
    verdict(
        same,
        format!("{} files compared byte for byte, manifest digests {}", fa.len(), if same { "equal" } else { "differ" }),
    )
}

type Criterion = (u32, &'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "two-level closed forms", Duration::from_secs(5), two_level_closed_forms),
        (2, "EP count law", Duration::from_secs(60), ep_count_law),
        (3, "accumulation at 1/pi", Duration::from_secs(300), accumulation),
        (4, "B peaks", Duration::from_secs(600), b_peaks),
        (5, "asymptotic width branches", Duration::from_secs(30), width_branches),
        (6, "infinite-N fence", Duration::from_secs(60), infinite_fence),
        (7, "compensation scaling", Duration::from_secs(30), compensation_scaling),
        (8, "monodromy and omega comparison", Duration::from_secs(10), monodromy),
        (9, "property suite", Duration::from_secs(120), property_suite),
        (10, "determinism of fig3 --seed 42", Duration::from_secs(600), determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let pass = v.ok && in_budget;
        if !pass {
            failed.push(id);
        }
        println!(
            "{} {id:>2} {name}: {} [{:.2} s / budget {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {} of 10 passed", 10 - failed.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
