//! Acceptance suite. Each test checks one criterion at its stated tolerance
//! and runtime budget and prints a single PASS/FAIL line to stderr, even when
//! output capture is on.
//!
//! Criteria 6, 8 and 9 drive the `psqi` binary; the rest call the library
//! directly against oracles written here.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use psqi_core::eval::{binary_margin, optimal_margin, score_windows, spearman, EvalRecord};
use psqi_core::filter::{design_butterworth, filtfilt, FilterSpec};
use psqi_core::metrics::{match_peaks, tolerance_samples};
use psqi_core::perturbation::{apply_perturbation, perturbation_deviation, sample_noise};
use psqi_core::rng::GaussianStream;
use psqi_core::signal::{useful_component, SnrConfig};
use psqi_core::{
    decode, minimize, synth_corpus, CmaConfig, PeakList, PsqiConfig, Signal, SynthSpec, TaskBinding,
};

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!(
        "acceptance {id} [{name}]: {verdict} ({detail}; {:.2} s)\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn energy(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

// 1 ---------------------------------------------------------------------

fn random_window(g: &mut GaussianStream) -> Signal {
    let fs = [125.0, 250.0, 360.0, 500.0][g.below(4)];
    let n = 500 + g.below(2500);
    let f = g.uniform_in(0.6, 0.4 * fs);
    let (drift, noise, offset) = (
        g.uniform_in(-3.0, 3.0),
        g.uniform_in(0.0, 1.0),
        g.uniform_in(-5.0, 5.0),
    );
    let spikes = g.below(12);
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            offset + (2.0 * PI * f * t).sin() + drift * t + noise * g.normal()
        })
        .collect();
    for _ in 0..spikes {
        let c = g.below(n);
        x[c] += g.uniform_in(-8.0, 8.0);
    }
    Signal::new(x, fs).unwrap()
}

#[test]
fn c1_perturbation_feasibility() {
    let start = Instant::now();
    let mut g = GaussianStream::new(0xC1);
    let (mut worst_rel, mut violations) = (0.0f64, 0usize);
    for case in 0..1000u64 {
        let x = random_window(&mut g);
        let x_filt = useful_component(&x).unwrap();
        let cfg = SnrConfig::new(g.uniform_in(-5.0, 40.0), g.uniform_in(-20.0, 30.0));
        let theta = decode(&[3.0 * g.normal(), 3.0 * g.normal()], x.fs());
        let z = sample_noise(case ^ 0x5eed, x.len()).unwrap();

        let dev = perturbation_deviation(&x_filt, &z, theta, &cfg).unwrap();
        let pre = energy(x_filt.samples()) / energy(&dev.unclipped);
        worst_rel = worst_rel.max((pre - cfg.gamma()).abs() / cfg.gamma());

        let y = apply_perturbation(&x, &x_filt, &z, theta, &cfg).unwrap();
        let d: Vec<f64> = y
            .samples()
            .iter()
            .zip(x.samples())
            .map(|(a, b)| a - b)
            .collect();
        let post = energy(x_filt.samples()) / energy(&d);
        // `y - x` carries one rounding of `x`; the bound gets the same slack.
        let local_ok = d
            .iter()
            .zip(x_filt.samples())
            .zip(x.samples())
            .all(|((di, xf), xi)| {
                di.abs() <= xf.abs() / cfg.beta().sqrt() + 1e-12 + 4.0 * f64::EPSILON * xi.abs()
            });
        let clipped_ok = dev
            .clipped
            .iter()
            .zip(x_filt.samples())
            .all(|(di, xf)| di.abs() <= xf.abs() / cfg.beta().sqrt() + 1e-12);
        let post_clipped = energy(x_filt.samples()) / energy(&dev.clipped);
        if !(local_ok
            && clipped_ok
            && post >= cfg.gamma() * (1.0 - 1e-9)
            && post_clipped >= cfg.gamma())
        {
            violations += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_rel < 1e-6 && violations == 0 && elapsed < Duration::from_secs(30);
    report(
        1,
        "perturbation feasibility",
        pass,
        elapsed,
        &format!("1000 cases, max relative SNR error {worst_rel:.1e}, {violations} constraint violations"),
    );
}

// 2 ---------------------------------------------------------------------

/// `sum_n h[n] e^{-j w n}` magnitude, from an impulse response centered at
/// `center`.
fn response_at(h: &[f64], center: usize, f: f64, fs: f64) -> f64 {
    let w = 2.0 * PI * f / fs;
    let (mut re, mut im) = (0.0, 0.0);
    for (n, v) in h.iter().enumerate() {
        let k = n as f64 - center as f64;
        re += v * (w * k).cos();
        im -= v * (w * k).sin();
    }
    (re * re + im * im).sqrt()
}

fn analytic_bandpass(f: f64, lo: f64, hi: f64, order: i32, fs: f64) -> f64 {
    let w = |hz: f64| (PI * hz / fs).tan();
    let (wl, wh, wf) = (w(lo), w(hi), w(f));
    let x = (wf * wf - wl * wh) / (wf * (wh - wl));
    1.0 / (1.0 + x.abs().powi(2 * order)).sqrt()
}

/// Frequency in `(a, b)` where `g` crosses `level`, by bisection.
fn crossing(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, level: f64) -> f64 {
    let above_at_a = g(a) > level;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if (g(m) > level) == above_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn c2_zero_phase_contract() {
    let start = Instant::now();
    let fs = 250.0;
    let n = 5000;
    let mut notes = Vec::new();
    let mut pass = true;

    let constant = Signal::new(vec![3.7; n], fs).unwrap();
    let residual = energy(useful_component(&constant).unwrap().samples()).sqrt()
        / energy(constant.samples()).sqrt();
    pass &= residual < 1e-4;
    notes.push(format!("constant residual {residual:.1e}"));

    let sine: Vec<f64> = (0..n)
        .map(|i| (2.0 * PI * 5.0 * i as f64 / fs).sin())
        .collect();
    let y = useful_component(&Signal::new(sine.clone(), fs).unwrap()).unwrap();
    let lag = (-25i64..=25)
        .max_by(|&a, &b| {
            let c = |l: i64| -> f64 {
                (500..n - 500)
                    .map(|i| sine[i] * y.samples()[(i as i64 + l) as usize])
                    .sum()
            };
            c(a).total_cmp(&c(b))
        })
        .unwrap();
    pass &= lag == 0;
    notes.push(format!("5 Hz lag {lag} samples"));

    // |H|^2 of the zero-phase bandpass is the spectrum of its response to a
    // centered impulse; the -3 dB point of |H| is where |H|^2 = 1/2.
    let mut worst_cutoff = 0.0f64;
    let mut worst_shape = 0.0f64;
    for (order, lo, hi) in [
        (6usize, 5.0, 15.0),
        (4, 0.5, 40.0),
        (2, 8.0, 20.0),
        (6, 40.0, 60.0),
    ] {
        let coeffs = design_butterworth(&FilterSpec::bandpass(order, lo, hi), fs).unwrap();
        let len = 1 << 14;
        let mut impulse = vec![0.0; len];
        impulse[len / 2] = 1.0;
        let h2 = filtfilt(&coeffs, &impulse).unwrap();
        let mag = |f: f64| response_at(&h2, len / 2, f, fs).sqrt();
        let center = (lo * hi).sqrt();
        let f_lo = crossing(mag, 0.01, center, 0.5f64.sqrt());
        let f_hi = crossing(mag, center, fs / 2.0 - 0.01, 0.5f64.sqrt());
        worst_cutoff = worst_cutoff
            .max((f_lo - lo).abs() / lo)
            .max((f_hi - hi).abs() / hi);
        for k in 1..100 {
            let f = k as f64 / 100.0 * fs / 2.0;
            worst_shape =
                worst_shape.max((mag(f) - analytic_bandpass(f, lo, hi, order as i32, fs)).abs());
        }
    }
    pass &= worst_cutoff < 0.02 && worst_shape < 1e-3;
    notes.push(format!(
        "worst -3 dB offset {:.3}%, worst |H| deviation {worst_shape:.1e}",
        100.0 * worst_cutoff
    ));

    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(5);
    report(2, "zero-phase contract", pass, elapsed, &notes.join(", "));
}

// 3 ---------------------------------------------------------------------

#[test]
fn c3_cmaes_sanity() {
    let start = Instant::now();
    let cfg = CmaConfig {
        population: 8,
        max_iterations: 60,
        initial_sigma: 0.3,
        seed: 3,
    };
    let mut calls = 0usize;
    let m = minimize(
        |u: &[f64]| {
            calls += 1;
            (u[0] - 0.8).powi(2) + (u[1] + 0.5).powi(2)
        },
        &[0.0, 0.0],
        &cfg,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let pass = m.best_value < 1e-4
        && calls == 480
        && m.history.len() == 480
        && elapsed < Duration::from_secs(5);
    report(
        3,
        "cma-es sanity",
        pass,
        elapsed,
        &format!(
            "best {:.1e}, {calls} objective calls for budget 480",
            m.best_value
        ),
    );
}

// 4 ---------------------------------------------------------------------

fn max_matching(r: &[usize], d: &[usize], tol: usize) -> usize {
    fn go(i: usize, r: &[usize], d: &[usize], used: &mut [bool], tol: usize) -> usize {
        if i == r.len() {
            return 0;
        }
        let mut best = go(i + 1, r, d, used, tol);
        for j in 0..d.len() {
            if !used[j] && r[i].abs_diff(d[j]) <= tol {
                used[j] = true;
                best = best.max(1 + go(i + 1, r, d, used, tol));
                used[j] = false;
            }
        }
        best
    }
    go(0, r, d, &mut vec![false; d.len()], tol)
}

#[test]
fn c4_metric_oracle() {
    let start = Instant::now();
    let fs = 250.0;
    let tol = tolerance_samples(0.020, fs);
    let mut g = GaussianStream::new(0xC4);
    let mut mismatches = 0;
    for _ in 0..500 {
        let mut r = Vec::new();
        let mut pos = tol + g.below(40);
        for _ in 0..g.below(9) {
            r.push(pos);
            pos += 2 * tol + 1 + g.below(40);
        }
        let mut d: Vec<usize> = (0..g.below(9))
            .map(|_| {
                if !r.is_empty() && g.uniform() < 0.7 {
                    (r[g.below(r.len())] + g.below(2 * tol + 3)).saturating_sub(tol + 1)
                } else {
                    g.below(pos + tol)
                }
            })
            .collect();
        d.sort_unstable();
        d.dedup();
        let m = match_peaks(
            &PeakList::new(r.clone()).unwrap(),
            &PeakList::new(d.clone()).unwrap(),
            0.020,
            fs,
        );
        let best = max_matching(&r, &d, tol);
        if m.tp != best || m.fp != d.len() - best || m.fn_ != r.len() - best {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches == 0 && elapsed < Duration::from_secs(10);
    report(
        4,
        "metric oracle",
        pass,
        elapsed,
        &format!("500 instances, {mismatches} mismatches"),
    );
}

// 5 ---------------------------------------------------------------------

fn counting_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (a, b) = (counting_ranks(xs), counting_ranks(ys));
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn brute_margin(records: &[EvalRecord], min_count: usize) -> Option<(f64, f64)> {
    let mut qs: Vec<f64> = records.iter().map(|r| r.sqi).collect();
    qs.sort_by(f64::total_cmp);
    qs.dedup();
    let mut best: Option<(f64, f64)> = None;
    for w in qs.windows(2) {
        let tau = 0.5 * (w[0] + w[1]);
        let (mut sa, mut na, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
        for r in records {
            if r.sqi >= tau {
                sa += r.metric;
                na += 1;
            } else {
                sb += r.metric;
                nb += 1;
            }
        }
        if na < min_count || nb < min_count {
            continue;
        }
        let delta = sa / na as f64 - sb / nb as f64;
        if best.is_none_or(|(_, d)| delta > d + 1e-12) {
            best = Some((tau, delta));
        }
    }
    best
}

#[test]
fn c5_harness_oracle() {
    let start = Instant::now();
    let mut g = GaussianStream::new(0xC5);
    let (mut margin_bad, mut feasible, mut worst_rho) = (0, 0, 0.0f64);
    for _ in 0..100 {
        let n = 10 + g.below(90);
        let levels = 2 + g.below(30);
        let records: Vec<EvalRecord> = (0..n)
            .map(|i| {
                let q = g.below(levels) as f64 / (levels - 1) as f64;
                EvalRecord::new(i.to_string(), q, (0.5 * q + 0.5 * g.uniform()).min(1.0))
            })
            .collect();
        let min_count = 1 + g.below(8);
        match (
            optimal_margin(&records, min_count),
            brute_margin(&records, min_count),
        ) {
            (Ok(m), Some((tau, delta))) => {
                feasible += 1;
                if m.tau_star != tau || (m.delta_star - delta).abs() > 1e-12 {
                    margin_bad += 1;
                }
            }
            (Err(_), None) => {}
            _ => margin_bad += 1,
        }
        let xs: Vec<f64> = records.iter().map(|r| r.sqi).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.metric).collect();
        if let Ok(r) = spearman(&xs, &ys) {
            worst_rho = worst_rho.max((r - brute_spearman(&xs, &ys)).abs());
        }
    }
    let mut grouped = Vec::new();
    for i in 0..1000 {
        grouped.push(EvalRecord::new(
            format!("a{i}"),
            1.0,
            (i < 981) as u8 as f64,
        ));
        grouped.push(EvalRecord::new(
            format!("b{i}"),
            0.0,
            (i < 612) as u8 as f64,
        ));
    }
    let bm = binary_margin(&grouped).unwrap();
    let elapsed = start.elapsed();
    let pass = margin_bad == 0
        && worst_rho < 1e-12
        && (bm - 0.369).abs() < 1e-12
        && elapsed < Duration::from_secs(10);
    report(
        5,
        "harness oracle",
        pass,
        elapsed,
        &format!(
            "100 record sets ({feasible} feasible), {margin_bad} margin mismatches, \
             max Spearman error {worst_rho:.1e}, binary margin {bm:.6}"
        ),
    );
}

// 6, 8, 9 ---------------------------------------------------------------

const CORPUS_SEED: &str = "0";
const MASTER_SEED: &str = "0";

fn psqi(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_psqi"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "psqi {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn summary_value(csv: &str, key: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing from summary"))
        .to_string()
}

struct EndToEnd {
    dir: PathBuf,
    summary: String,
    elapsed: Duration,
}

/// The 200-window corpus, scored and evaluated once for criteria 6 and 8.
fn end_to_end() -> &'static EndToEnd {
    static RUN: OnceLock<EndToEnd> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = std::env::temp_dir().join(format!("psqi-acceptance-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        let data = dir.join("data");
        let (scores, summary) = (dir.join("scores.csv"), dir.join("summary.csv"));
        let start = Instant::now();
        psqi(&[
            "synth",
            "--windows",
            "200",
            "--fs",
            "250",
            "--snr-min-db",
            "0",
            "--snr-max-db",
            "40",
            "--seed",
            CORPUS_SEED,
            "--out",
            data.to_str().unwrap(),
        ]);
        psqi(&[
            "score",
            data.to_str().unwrap(),
            "--seed",
            MASTER_SEED,
            "--out",
            scores.to_str().unwrap(),
        ]);
        psqi(&[
            "evaluate",
            scores.to_str().unwrap(),
            "--min-count",
            "5",
            "--out",
            summary.to_str().unwrap(),
        ]);
        let elapsed = start.elapsed();
        EndToEnd {
            summary: fs::read_to_string(&summary).unwrap(),
            dir,
            elapsed,
        }
    })
}

#[test]
fn c6_end_to_end_monotonicity() {
    let run = end_to_end();
    let rho: f64 = summary_value(&run.summary, "spearman_records")
        .parse()
        .unwrap();
    let delta: f64 = summary_value(&run.summary, "delta_star").parse().unwrap();
    let pass = rho >= 0.5 && delta > 0.0 && run.elapsed < Duration::from_secs(300);
    report(
        6,
        "end-to-end monotonicity",
        pass,
        run.elapsed,
        &format!("200 windows, Spearman(q, F1) {rho:.3}, delta* {delta:.4}"),
    );
}

#[test]
fn c8_sweep_self_consistency() {
    let run = end_to_end();
    let data = run.dir.join("data");
    let matrix = run.dir.join("sweep.csv");
    let start = Instant::now();
    psqi(&[
        "sweep",
        data.to_str().unwrap(),
        "--gammas",
        "15,25,35",
        "--betas",
        "-10,10,30",
        "--min-count",
        "5",
        "--seed",
        MASTER_SEED,
        "--out",
        matrix.to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    let text = fs::read_to_string(&matrix).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    let full = rows.len() == 4
        && rows.iter().all(|r| r.len() == 4)
        && rows[1..]
            .iter()
            .flat_map(|r| &r[1..])
            .all(|c| !c.is_empty() && *c != "error");
    let beta_col = rows[0]
        .iter()
        .position(|b| b.parse::<f64>().ok() == Some(10.0));
    let gamma_row = rows
        .iter()
        .position(|r| r[0].parse::<f64>().ok() == Some(25.0));
    let cell = match (gamma_row, beta_col) {
        (Some(g), Some(b)) => rows[g][b].to_string(),
        _ => String::new(),
    };
    let delta6 = summary_value(&run.summary, "delta_star");
    // Both tables print shortest round-trip decimals, so equal text is equal bits.
    let pass = full && cell == delta6 && elapsed < Duration::from_secs(900);
    report(
        8,
        "sweep self-consistency",
        pass,
        elapsed,
        &format!(
            "3x3 matrix complete: {full}, cell (25, 10) = {cell}, criterion 6 delta* = {delta6}"
        ),
    );
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn c9_reproducibility() {
    let start = Instant::now();
    let runs: Vec<PathBuf> = (0..2)
        .map(|k| {
            let root = std::env::temp_dir().join(format!("psqi-repro-{}-{k}", std::process::id()));
            let _ = fs::remove_dir_all(&root);
            fs::create_dir_all(&root).unwrap();
            root
        })
        .collect();
    for root in &runs {
        let p = |name: &str| root.join(name).to_str().unwrap().to_string();
        let data = p("data");
        psqi(&[
            "synth",
            "--windows",
            "24",
            "--seed",
            "9",
            "--weak-fraction",
            "0.25",
            "--out",
            &data,
        ]);
        psqi(&["score", &data, "--seed", "4", "--out", &p("scores.csv")]);
        psqi(&[
            "evaluate",
            &p("scores.csv"),
            "--min-count",
            "1",
            "--out",
            &p("summary.csv"),
        ]);
        psqi(&[
            "sweep",
            &data,
            "--gammas",
            "20,30",
            "--betas",
            "0,10",
            "--min-count",
            "1",
            "--seed",
            "4",
            "--out",
            &p("sweep.csv"),
        ]);
        psqi(&["features", &data, "--out", &p("features.csv")]);
        psqi(&[
            "perturb",
            &data,
            "--window",
            "synth-0003#0",
            "--seed",
            "4",
            "--out",
            &p("perturbed.csv"),
        ]);
    }
    let mut compared = 0;
    let mut differing = Vec::new();
    for sub in ["", "data"] {
        let (a, b) = (csv_files(&runs[0].join(sub)), csv_files(&runs[1].join(sub)));
        if a.len() != b.len() {
            differing.push(format!("{sub}/ file count"));
        }
        for ((na, ba), (_, bb)) in a.iter().zip(&b) {
            compared += 1;
            if ba != bb {
                differing.push(na.clone());
            }
        }
    }
    let elapsed = start.elapsed();
    for root in &runs {
        let _ = fs::remove_dir_all(root);
    }
    let pass = compared >= 30 && differing.is_empty();
    report(
        9,
        "reproducibility",
        pass,
        elapsed,
        &format!("6 commands run twice, {compared} csv files compared, differing: {differing:?}"),
    );
}

// 7 ---------------------------------------------------------------------

#[test]
fn c7_degradation_detection() {
    let start = Instant::now();
    let binding = TaskBinding::default_rpeaks();
    let spec = SynthSpec {
        n_windows: 100,
        weak_fraction: 0.5,
        weak_amplitude: 0.25,
        snr_db: None,
        ..SynthSpec::default()
    };
    let mut gaps = Vec::new();
    for seed in [0u64, 1, 2] {
        let corpus = synth_corpus(&spec, seed).unwrap();
        let signals: Vec<Signal> = corpus.iter().map(|w| w.signal.clone()).collect();
        let cfg = PsqiConfig {
            master_seed: seed,
            ..PsqiConfig::default()
        };
        let scores = score_windows(&signals, &binding, &cfg);
        let (mut clean, mut fragile) = (Vec::new(), Vec::new());
        for (w, q) in corpus.iter().zip(scores) {
            let q = q.unwrap();
            if w.window_id.ends_with(psqi_core::data::WEAK_SUFFIX) {
                fragile.push(q);
            } else {
                clean.push(q);
            }
        }
        assert_eq!((clean.len(), fragile.len()), (50, 50));
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        gaps.push(mean(&clean) - mean(&fragile));
    }
    let elapsed = start.elapsed();
    let pass = gaps.iter().all(|g| *g > 0.05) && elapsed < Duration::from_secs(120);
    report(
        7,
        "degradation detection",
        pass,
        elapsed,
        &format!("mean q(clean) - mean q(attenuated beat) per seed {gaps:.4?}, need > 0.05"),
    );
}
