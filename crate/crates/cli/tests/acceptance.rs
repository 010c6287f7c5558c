//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use edmpc::analysis::{column_at, detect_trapped_state, interaction_coefficients, partition_variance, Regime};
use edmpc::config::Config;
use edmpc::control::{propaganda_response, ControllerParams};
use edmpc::edm::{knn, simplex_weights, smap_predict, SMapParams};
use edmpc::evaluation::{embed_dimension_scan, forecast_out_of_sample, select_theta, tp_scan};
use edmpc::experiment::{comparison_frame, run, LegitimacyMode, RunRequest};
use edmpc::stats::{exponential_gof, mann_whitney_greater, waiting_times};
use edmpc::timeseries::{Embedding, Frame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Frames shared between criteria.
#[derive(Default)]
struct Frames {
    all: Vec<(String, Frame)>,
}

impl Frames {
    fn keep(&mut self, label: String, frame: &Frame) {
        self.all.push((label, frame.clone()));
    }
}

// oracles

fn gauss_solve(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Vec<f64> {
    let n = r.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
        m.swap(col, piv);
        r.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
            r[row] -= f * r[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (r[row] - s) / m[row][row];
    }
    x
}

fn wls_forecast(rows: &[Vec<f64>], ys: &[f64], q: &[f64], theta: f64) -> f64 {
    let d: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let dbar = d.iter().sum::<f64>() / d.len() as f64;
    let p = q.len() + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (i, r) in rows.iter().enumerate() {
        let w2 = (-theta * d[i] / dbar).exp().powi(2);
        let x: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
        for a in 0..p {
            xty[a] += w2 * x[a] * ys[i];
            for b in 0..p {
                xtx[a][b] += w2 * x[a] * x[b];
            }
        }
    }
    let c = gauss_solve(xtx, xty);
    c[0] + c[1..].iter().zip(q).map(|(a, b)| a * b).sum::<f64>()
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, e: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..e).map(|_| rng.random_range(-5.0..5.0)).collect()).collect()
}

// criteria

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut worst_ols) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(20..=60);
        let e = rng.random_range(1..=4);
        let rows = random_rows(&mut rng, n, e);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let qs = random_rows(&mut rng, 3, e);
        let lib = Embedding::from_rows(&rows, &ys, None).unwrap();
        let queries = Embedding::from_rows(&qs, &[0.0; 3], None).unwrap();
        let theta = rng.random_range(0.0..4.0);
        for (theta, worst) in [(theta, &mut worst), (0.0, &mut worst_ols)] {
            let out = smap_predict(&lib, &queries, &SMapParams::new(theta)).unwrap();
            for (o, q) in out.iter().zip(&qs) {
                *worst = worst.max((o.prediction - wls_forecast(&rows, &ys, q, theta)).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    outcome(
        worst <= 1e-8 && worst_ols <= 1e-8 && elapsed < Duration::from_secs(10),
        format!(
            "max |S-map - WLS oracle| {worst:.2e}, max |theta=0 - OLS| {worst_ols:.2e} (tol 1e-8), {:.2}s (limit 10s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = rng.random_range(5..=80);
        let e = rng.random_range(1..=6);
        let k = rng.random_range(1..=n);
        let rows = random_rows(&mut rng, n, e);
        let lib = Embedding::from_rows(&rows, &vec![0.0; n], None).unwrap();
        let q: Vec<f64> = (0..e).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut all: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<usize> = all[..k].iter().map(|a| a.1).collect();
        if knn(&lib, &q, k, None).unwrap().indices != want {
            mismatches += 1;
        }
    }
    // weights sum to one up to rounding of the final division
    let mut worst_sum = 0.0f64;
    let mut zero_ok = true;
    for _ in 0..1000 {
        let m = rng.random_range(1..=10);
        let mut d: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let zeros = rng.random_range(0..=m.min(3));
        for x in d.iter_mut().take(zeros) {
            *x = 0.0;
        }
        d.sort_by(f64::total_cmp);
        let w = simplex_weights(&d);
        worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
        if zeros > 0 {
            zero_ok &= d
                .iter()
                .zip(&w)
                .all(|(x, wi)| *wi == if *x == 0.0 { 1.0 / zeros as f64 } else { 0.0 });
        }
    }
    outcome(
        mismatches == 0 && worst_sum <= 4.0 * f64::EPSILON && zero_ok,
        format!(
            "{mismatches}/1000 knn mismatches, max |sum w - 1| {worst_sum:.1e}, zero-distance contract {}",
            if zero_ok { "held" } else { "broken" }
        ),
    )
}

fn criterion_3(frames: &mut Frames) -> Outcome {
    let started = Instant::now();
    let config = Config::default();
    let frame = run(
        &config,
        &RunRequest {
            seed: 0,
            steps: 10_000,
            control: false,
            legitimacy: LegitimacyMode::Constant,
        },
    )
    .unwrap()
    .frame;
    frames.keep("nominal 10000 seed 0".into(), &frame);
    let active = frame.column("active").unwrap();
    let e = embed_dimension_scan(active, 10, 5, config.scan_split).unwrap();
    let t = tp_scan(active, 5, 5, config.scan_split).unwrap();
    let rho = e.rho();
    let max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rho5 = rho[4];
    let tp = t.rho();
    let elapsed = started.elapsed();
    let pass = rho5.is_finite()
        && max - rho5 <= 0.05
        && tp[0] > tp[4]
        && tp[1] > tp[4]
        && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "rho(E=5) {rho5:.4}, max over E=1..10 {max:.4} (gap tol 0.05); rho(Tp=1,2,5) {:.4}, {:.4}, {:.4}; {:.1}s (limit 120s)",
            tp[0],
            tp[1],
            tp[4],
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4(frames: &mut Frames) -> Outcome {
    let config = Config::default();
    let spec = config.embedding_spec();
    let (lib, pred) = (config.lib_range().unwrap(), config.pred_range().unwrap());
    let mut rhos = Vec::new();
    let mut thetas = Vec::new();
    for seed in 0..5 {
        let frame = comparison_frame(&config, seed).unwrap();
        frames.keep(format!("comparison seed {seed}"), &frame);
        let theta = select_theta(&frame, &spec, lib, 0.8).unwrap().best().map_or(config.theta, |b| b.0);
        let out = forecast_out_of_sample(&frame, &spec, lib, pred, theta).unwrap();
        rhos.push(out.skill.rho_or_nan());
        thetas.push(theta);
    }
    let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    outcome(
        mean >= 0.9,
        format!("mean out-of-sample rho {mean:.4} (need >= 0.9); per seed {rhos:.3?}, theta {thetas:?}"),
    )
}

fn random_runs(frames: &mut Frames, control: bool) -> (Vec<Frame>, Duration) {
    let config = Config::default();
    let started = Instant::now();
    let mut out = Vec::new();
    for seed in 0..SEEDS {
        let r = run(
            &config,
            &RunRequest {
                seed,
                steps: config.steps,
                control,
                legitimacy: LegitimacyMode::Random,
            },
        )
        .unwrap();
        let label = format!("{} random seed {seed}", if control { "controlled" } else { "uncontrolled" });
        frames.keep(label, &r.frame);
        out.push(r.frame);
    }
    (out, started.elapsed())
}

fn criterion_5(frames: &mut Frames) -> (Outcome, Vec<Frame>) {
    let opts = Config::default().trap_options();
    let (open, t_open) = random_runs(frames, false);
    let (closed, t_closed) = random_runs(frames, true);
    let count = |runs: &[Frame]| -> (usize, usize) {
        let per: Vec<usize> = runs.iter().map(|f| detect_trapped_state(f, &opts).unwrap().len()).collect();
        (per.iter().filter(|&&n| n > 0).count(), per.iter().sum())
    };
    let (open_runs, open_total) = count(&open);
    let (closed_runs, closed_total) = count(&closed);
    let elapsed = t_open + t_closed;
    (
        outcome(
            open_total >= 1 && closed_total == 0 && elapsed < Duration::from_secs(600),
            format!(
                "uncontrolled: {open_total} trapped intervals in {open_runs}/{SEEDS} runs (need >= 1); \
                 controlled: {closed_total} in {closed_runs}/{SEEDS} runs (need 0); {:.0}s (limit 600s)",
                elapsed.as_secs_f64()
            ),
        ),
        closed,
    )
}

fn criterion_6(frames: &mut Frames) -> Outcome {
    let config = Config::default();
    let mut passed = 0;
    let mut notes = Vec::new();
    for seed in 0..SEEDS {
        let frame = run(
            &config,
            &RunRequest {
                seed,
                steps: config.steps,
                control: false,
                legitimacy: LegitimacyMode::Constant,
            },
        )
        .unwrap()
        .frame;
        frames.keep(format!("nominal seed {seed}"), &frame);
        let waits = waiting_times(frame.column("active").unwrap(), config.outburst_threshold);
        match exponential_gof(&waits) {
            Ok(fit) if !fit.rejects(0.01).unwrap() => passed += 1,
            Ok(fit) => notes.push(format!("seed {seed} rejected (n {}, stat {:.3})", fit.n, fit.modified)),
            Err(e) => notes.push(format!("seed {seed}: {e}")),
        }
    }
    outcome(
        passed >= 15,
        format!("{passed}/{SEEDS} seeds consistent with exponential waits at alpha 0.01 (need >= 15) {notes:?}"),
    )
}

fn criterion_7() -> Outcome {
    let p = ControllerParams::default();
    let mid = propaganda_response(50.0, &p);
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut monotone = true;
    let mut bounded = true;
    let mut interior = true;
    for _ in 0..1000 {
        let (a, b) = (rng.random_range(0.0..1120.0), rng.random_range(0.0..1120.0));
        let (pa, pb) = (propaganda_response(a, &p), propaganda_response(b, &p));
        monotone &= (a <= b) == (pa <= pb) || pa == pb;
        bounded &= (p.p_min..=p.p_max).contains(&pa) && (p.p_min..=p.p_max).contains(&pb);
        // the logistic only rounds onto its upper asymptote far above the midpoint
        for (x, px) in [(a, pa), (b, pb)] {
            if x <= 500.0 {
                interior &= p.p_min < px && px < p.p_max;
            }
        }
    }
    outcome(
        mid == 0.33 && monotone && bounded && interior,
        format!(
            "P(50) = {mid}; 1000 random pairs monotone {monotone}, within [0.06, 0.6] {bounded}, strictly inside for A <= 500 {interior}"
        ),
    )
}

fn criterion_8(controlled: &[Frame]) -> Outcome {
    let config = Config::default();
    let opts = config.partition_options();
    let mut pooled: Option<edmpc::analysis::VariancePartition> = None;
    for frame in controlled {
        let jac = interaction_coefficients(frame, config.analysis_theta).unwrap();
        let leg = column_at(frame, "legitimacy", &jac.times).unwrap();
        let part = partition_variance(&jac, &leg, &opts).unwrap();
        match &mut pooled {
            None => pooled = Some(part),
            Some(p) => p.extend(&part),
        }
    }
    let pooled = pooled.unwrap();
    let (low, high) = (pooled.sample(Regime::Low), pooled.sample(Regime::High));
    match mann_whitney_greater(&low, &high) {
        Ok(t) => {
            let med = |v: &[f64]| {
                let mut s = v.to_vec();
                s.sort_by(f64::total_cmp);
                s[s.len() / 2]
            };
            outcome(
                t.p_value < 0.05,
                format!(
                    "one-sided rank test low > high: p = {:.4} (need < 0.05); windows low {} high {}, median variance low {:.4} high {:.4}",
                    t.p_value,
                    low.len(),
                    high.len(),
                    med(&low),
                    med(&high)
                ),
            )
        }
        Err(e) => outcome(false, format!("rank test impossible: {e} (low {}, high {})", low.len(), high.len())),
    }
}

fn edmpc(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_edmpc"))
        .args(args)
        .env_remove("EDMPC_CONFIG")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_outputs(a: &Path, b: &Path) -> Result<usize, String> {
    let mut n = 0;
    for entry in fs::read_dir(a).map_err(|e| e.to_string())? {
        let name = entry.map_err(|e| e.to_string())?.file_name();
        if name == "manifest.json" {
            continue;
        }
        let x = fs::read(a.join(&name)).map_err(|e| e.to_string())?;
        let y = fs::read(b.join(&name)).map_err(|e| format!("{name:?} missing from replay: {e}"))?;
        if x != y {
            return Err(format!("{name:?} differs"));
        }
        n += 1;
    }
    Ok(n)
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let d = |n: &str| tmp.path().join(n);
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    let frame = s(&d("sim").join("frame_seed3.csv"));
    let commands: Vec<(&str, Vec<String>)> = vec![
        ("simulate", vec!["simulate".into(), "--seed".into(), "3".into(), "--steps".into(), "800".into(), "--control".into(), "on".into(), "--set".into(), "warmup_ticks=400".into(), "--legitimacy".into(), "random".into(), "--set".into(), "schedule_start=100".into(), "--out".into(), s(&d("sim"))]),
        ("scan", vec!["scan".into(), "--mode".into(), "e".into(), "--data".into(), frame.clone(), "--out".into(), s(&d("scan"))]),
        ("forecast", vec!["forecast".into(), "--data".into(), frame.clone(), "--lib".into(), "1:500".into(), "--pred".into(), "520:790".into(), "--auto-theta".into(), "--out".into(), s(&d("forecast"))]),
        ("analyze", vec!["analyze".into(), "--data".into(), frame.clone(), "--out".into(), s(&d("analyze"))]),
        ("export-comparison", vec!["export-comparison".into(), "--seed".into(), "2".into(), "--out".into(), s(&d("export"))]),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, args) in &commands {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = Path::new(args[args.len() - 1]).to_path_buf();
        if !edmpc(&args) {
            pass = false;
            notes.push(format!("{name}: run failed"));
            continue;
        }
        let again = tmp.path().join(format!("{name}-replay"));
        if !edmpc(&["replay", "--manifest", &s(&out.join("manifest.json")), "--out", &s(&again)]) {
            pass = false;
            notes.push(format!("{name}: replay failed"));
            continue;
        }
        match same_outputs(&out, &again) {
            Ok(n) => notes.push(format!("{name}: {n} files identical")),
            Err(e) => {
                pass = false;
                notes.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn criterion_10(frames: &Frames) -> Outcome {
    let n = Config::default().n_citizens as f64;
    let mut ticks = 0usize;
    let mut bad = Vec::new();
    for (label, f) in &frames.all {
        let (q, a, j) = (f.column("quiet").unwrap(), f.column("active").unwrap(), f.column("jailed").unwrap());
        ticks += f.len();
        if (0..f.len()).any(|i| q[i] + a[i] + j[i] != n) {
            bad.push(label.clone());
        }
    }
    outcome(
        bad.is_empty(),
        format!("{} runs, {ticks} ticks checked; violations in {bad:?}", frames.all.len()),
    )
}

fn report(n: usize, o: &Outcome, failed: &mut Vec<usize>) {
    println!("criterion {n:>2}: {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    if !o.pass {
        failed.push(n);
    }
}

fn main() {
    let mut frames = Frames::default();
    let mut failed = Vec::new();
    report(1, &criterion_1(), &mut failed);
    report(2, &criterion_2(), &mut failed);
    report(3, &criterion_3(&mut frames), &mut failed);
    report(4, &criterion_4(&mut frames), &mut failed);
    let (c5, controlled) = criterion_5(&mut frames);
    report(5, &c5, &mut failed);
    report(6, &criterion_6(&mut frames), &mut failed);
    report(7, &criterion_7(), &mut failed);
    report(8, &criterion_8(&controlled), &mut failed);
    report(9, &criterion_9(), &mut failed);
    report(10, &criterion_10(&frames), &mut failed);
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
