use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::time::Instant;

use edmpc::analysis::{
    column_at, detect_trapped_state, interaction_coefficients, partition_variance, Regime, VariancePartition,
};
use edmpc::config::Config;
use edmpc::evaluation::{embed_dimension_scan, forecast_out_of_sample, select_theta, theta_scan, tp_scan, THETA_GRID};
use edmpc::experiment::{comparison_frame, run, LegitimacyMode, RunRequest};
use edmpc::stats::{exponential_gof, mann_whitney_greater, waiting_times};
use edmpc::timeseries::{
    build_generalized_embedding, format_value, split_library_prediction, Coordinate, Embedding, EmbeddingSpec,
    Frame, TimeRange,
};
use rayon::prelude::*;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{FileRecord, OutputSet, RunManifest};

/// What a command consumed, for its manifest.
#[derive(Default)]
struct Provenance {
    seeds: Vec<u64>,
    inputs: Vec<FileRecord>,
}

impl Provenance {
    fn read_frame(&mut self, path: &Path) -> CliResult<Frame> {
        self.inputs.push(FileRecord::of(path, path.display().to_string())?);
        let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        Ok(Frame::read_csv(BufReader::new(file))?)
    }
}

/// Runs `command` into its output directory and records a manifest. On
/// failure every output of this invocation is removed.
pub fn execute(command: &Command, mut config: Config) -> CliResult<RunManifest> {
    let started = Instant::now();
    let mut command = command.clone();
    let mut out = OutputSet::create(command.out_mut())?;
    let result = match &command {
        Command::Simulate(a) => simulate(a, &mut config, &mut out),
        Command::Scan(a) => scan(a, &mut config, &mut out),
        Command::Forecast(a) => forecast(a, &mut config, &mut out),
        Command::Analyze(a) => analyze(a, &mut config, &mut out),
        Command::ExportComparison(a) => export_comparison(a, &config, &mut out),
        Command::Replay(_) => Err(CliError::Usage("replay is not a recorded command".into())),
    };
    let finish = |prov: Provenance, out: &mut OutputSet| -> CliResult<RunManifest> {
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.clone(),
            config: config.clone(),
            seeds: prov.seeds,
            inputs: prov.inputs,
            outputs: out.records()?,
            duration_secs: started.elapsed().as_secs_f64(),
        };
        out.write_manifest(&manifest)?;
        Ok(manifest)
    };
    match result.and_then(|prov| finish(prov, &mut out)) {
        Ok(m) => Ok(m),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn parse_range(text: &str) -> CliResult<TimeRange> {
    text.parse().map_err(|e: edmpc::Error| CliError::Usage(e.to_string()))
}

fn seed_list(a: &SimulateArgs) -> CliResult<Vec<u64>> {
    match &a.seeds {
        None => Ok(vec![a.seed]),
        Some(s) => {
            let r = parse_range(s)?;
            if r.first < 0 {
                return Err(CliError::Usage("seeds must be >= 0".into()));
            }
            Ok((r.first as u64..=r.last as u64).collect())
        }
    }
}

fn simulate(a: &SimulateArgs, config: &mut Config, out: &mut OutputSet) -> CliResult<Provenance> {
    if let Some(steps) = a.steps {
        config.set("steps", &steps.to_string())?;
    }
    let seeds = seed_list(a)?;
    let cfg = &*config;
    let request = |seed| RunRequest {
        seed,
        steps: cfg.steps,
        control: a.control == Switch::On,
        legitimacy: match a.legitimacy {
            LegitimacyArg::Constant => LegitimacyMode::Constant,
            LegitimacyArg::Random => LegitimacyMode::Random,
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let runs = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| run(cfg, &request(s)))
            .collect::<edmpc::Result<Vec<_>>>()
    })?;
    for (seed, r) in seeds.iter().zip(&runs) {
        out.write(&format!("frame_seed{seed}.csv"), |w| r.frame.write_csv(w))?;
        let traps = detect_trapped_state(&r.frame, &cfg.trap_options())?;
        let active = r.frame.column("active")?;
        eprintln!(
            "seed {seed}: {} ticks, max active {}, trapped intervals {}{}",
            r.frame.len(),
            active.iter().copied().fold(0.0, f64::max),
            traps.len(),
            if r.held > 0 { format!(", {} held decisions", r.held) } else { String::new() }
        );
    }
    Ok(Provenance {
        seeds,
        inputs: Vec::new(),
    })
}

fn generated_frame(kind: Generate, seed: u64, steps: usize, config: &Config) -> CliResult<Frame> {
    Ok(match kind {
        Generate::Nominal => {
            run(
                config,
                &RunRequest {
                    seed,
                    steps,
                    control: false,
                    legitimacy: LegitimacyMode::Constant,
                },
            )?
            .frame
        }
        Generate::Comparison => comparison_frame(config, seed)?,
    })
}

fn scan(a: &ScanArgs, config: &mut Config, out: &mut OutputSet) -> CliResult<Provenance> {
    if let Some(tp) = a.tp {
        config.set("tp", &tp.to_string())?;
    }
    for (key, v) in [("scan_e_max", a.e_max), ("scan_tp_max", a.tp_max)] {
        if let Some(v) = v {
            config.set(key, &v.to_string())?;
        }
    }
    if let Some(split) = a.split {
        config.set("scan_split", &format!("{split:?}"))?;
    }
    let mut prov = Provenance::default();
    let frame = match &a.data {
        Some(path) => prov.read_frame(path)?,
        None => {
            let kind = a.generate.unwrap_or(match a.mode {
                ScanMode::Theta => Generate::Comparison,
                _ => Generate::Nominal,
            });
            prov.seeds.push(a.seed);
            generated_frame(kind, a.seed, a.steps.unwrap_or(config.steps), config)?
        }
    };
    let result = match a.mode {
        ScanMode::E => embed_dimension_scan(frame.column(&a.column)?, config.scan_e_max, config.tp, config.scan_split)?,
        ScanMode::Tp => tp_scan(frame.column(&a.column)?, a.e, config.scan_tp_max, config.scan_split)?,
        ScanMode::Theta => {
            let emb = build_generalized_embedding(&frame, &config.embedding_spec())?;
            let (lib, pred) = split_library_prediction(&emb, config.lib_range()?, config.pred_range()?, false)?;
            theta_scan(&lib, &pred, &THETA_GRID)?
        }
    };
    let degenerate = result.skills.iter().filter(|s| s.is_degenerate()).count();
    if degenerate > 0 {
        eprintln!("warning: {degenerate} scan points have degenerate skill (zero variance), written as nan");
    }
    if let Some((best, skill)) = result.best() {
        eprintln!("best {} = {} (rho {:.4})", result.axis_kind.name(), format_value(best), skill.rho_or_nan());
    }
    let name = match a.mode {
        ScanMode::E => "scan_e.csv",
        ScanMode::Tp => "scan_tp.csv",
        ScanMode::Theta => "scan_theta.csv",
    };
    out.write(name, |w| result.write_csv(w))?;
    Ok(prov)
}

fn parse_coordinates(items: &[String]) -> CliResult<Vec<Coordinate>> {
    items
        .iter()
        .map(|item| {
            let (col, lag) = item
                .rsplit_once(':')
                .ok_or_else(|| CliError::Usage(format!("coordinate '{item}' is not column:lag")))?;
            let lag = lag
                .parse()
                .map_err(|_| CliError::Usage(format!("bad lag in coordinate '{item}'")))?;
            Ok(Coordinate::new(col, lag))
        })
        .collect()
}

fn write_skill(w: &mut dyn Write, s: &edmpc::edm::SkillReport) -> edmpc::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["rho", "mae", "rmse", "n"])?;
    w.write_record([format_value(s.rho_or_nan()), format_value(s.mae), format_value(s.rmse), s.n.to_string()])?;
    w.flush()?;
    Ok(())
}

fn forecast(a: &ForecastArgs, config: &mut Config, out: &mut OutputSet) -> CliResult<Provenance> {
    if let Some(tp) = a.tp {
        config.set("tp", &tp.to_string())?;
    }
    if let Some(lib) = &a.lib {
        parse_range(lib)?;
        config.lib = lib.clone();
    }
    if let Some(pred) = &a.pred {
        parse_range(pred)?;
        config.pred = pred.clone();
    }
    if let Some(theta) = a.theta {
        config.set("theta", &format!("{theta:?}"))?;
    }
    let mut prov = Provenance::default();
    let frame = prov.read_frame(&a.data)?;
    let spec = if a.coords.is_empty() {
        EmbeddingSpec::new(config.embedding_spec().coordinates().to_vec(), &a.target, config.tp)?
    } else {
        EmbeddingSpec::new(parse_coordinates(&a.coords)?, &a.target, config.tp)?
    };
    let (lib, pred) = (config.lib_range()?, config.pred_range()?);
    let mut theta = config.theta;
    if a.auto_theta {
        let scan = select_theta(&frame, &spec, lib, 0.8)?;
        theta = scan
            .best()
            .map(|b| b.0)
            .ok_or_else(|| CliError::Numerical("no theta gave a usable forecast".into()))?;
        out.write("theta_scan.csv", |w| scan.write_csv(w))?;
    }
    let result = forecast_out_of_sample(&frame, &spec, lib, pred, theta)?;
    out.write("predictions.csv", |w| result.write_csv(w))?;
    out.write("skill.csv", |w| write_skill(w, &result.skill))?;
    if result.skill.is_degenerate() {
        eprintln!("warning: degenerate skill (zero variance)");
    }
    println!(
        "rho {} mae {} rmse {} n {} theta {}",
        format_value(result.skill.rho_or_nan()),
        format_value(result.skill.mae),
        format_value(result.skill.rmse),
        result.skill.n,
        format_value(theta)
    );
    Ok(prov)
}

fn analyze(a: &AnalyzeArgs, config: &mut Config, out: &mut OutputSet) -> CliResult<Provenance> {
    if let Some(theta) = a.theta {
        config.set("analysis_theta", &format!("{theta:?}"))?;
    }
    let ticks = a.ticks.as_deref().map(parse_range).transpose()?;
    let mut prov = Provenance::default();
    let multi = a.data.len() > 1;
    let mut pooled: Option<VariancePartition> = None;
    for (k, path) in a.data.iter().enumerate() {
        let mut frame = prov.read_frame(path)?;
        if let Some(r) = ticks {
            let from = frame.row_of(r.first.max(frame.start())).ok_or_else(|| CliError::Usage(format!("ticks {}:{} outside data", r.first, r.last)))?;
            let last = r.last.min(frame.time_at(frame.len() - 1));
            let to = frame.row_of(last).map(|i| i + 1).unwrap_or(from);
            frame = frame.slice(from, to)?;
        }
        let suffix = if multi { format!("_{k}") } else { String::new() };
        if a.all() || a.trapped {
            let t = detect_trapped_state(&frame, &config.trap_options())?;
            out.write(&format!("trapped{suffix}.csv"), |w| t.write_csv(w))?;
        }
        if a.all() || a.outbursts {
            let waits = waiting_times(frame.column("active")?, config.outburst_threshold);
            out.write(&format!("waiting_times{suffix}.csv"), |w| {
                let mut w = csv::Writer::from_writer(w);
                w.write_record(["wait"])?;
                for v in &waits {
                    w.write_record([format_value(*v)])?;
                }
                w.flush()?;
                Ok(())
            })?;
            match exponential_gof(&waits) {
                Ok(fit) => {
                    let reject = fit.rejects(0.01)?;
                    out.write(&format!("exponential_fit{suffix}.csv"), |w| {
                        let mut w = csv::Writer::from_writer(w);
                        w.write_record(["n", "mean", "d", "modified", "reject_at_0.01"])?;
                        w.write_record([
                            fit.n.to_string(),
                            format_value(fit.mean),
                            format_value(fit.d),
                            format_value(fit.modified),
                            reject.to_string(),
                        ])?;
                        w.flush()?;
                        Ok(())
                    })?;
                }
                Err(e) => eprintln!("warning: {}: no exponential fit: {e}", path.display()),
            }
        }
        if a.all() || a.jacobian || a.partition {
            let j = interaction_coefficients(&frame, config.analysis_theta)?;
            if j.finite_fraction() < 1.0 {
                eprintln!(
                    "warning: {}: {} of {} coefficients flagged",
                    path.display(),
                    j.flagged.iter().filter(|&&f| f).count(),
                    j.len()
                );
            }
            if a.all() || a.jacobian {
                out.write(&format!("jacobian{suffix}.csv"), |w| j.write_csv(w))?;
            }
            if a.all() || a.partition {
                let leg = column_at(&frame, "legitimacy", &j.times)?;
                let p = partition_variance(&j, &leg, &config.partition_options())?;
                match &mut pooled {
                    None => pooled = Some(p),
                    Some(acc) => acc.extend(&p),
                }
            }
        }
    }
    if let Some(p) = pooled {
        out.write("variance.csv", |w| p.write_csv(w))?;
        for regime in [Regime::Low, Regime::High] {
            match p.density(regime) {
                Some(kde) => out.write(&format!("density_{}.csv", regime.name()), |w| {
                    let mut w = csv::Writer::from_writer(w);
                    w.write_record(["variance", "density"])?;
                    for (x, d) in kde.grid(200) {
                        w.write_record([format_value(x), format_value(d)])?;
                    }
                    w.flush()?;
                    Ok(())
                })?,
                None => eprintln!("warning: no density for the {} regime (too few or identical windows)", regime.name()),
            }
        }
        let (low, high) = (p.sample(Regime::Low), p.sample(Regime::High));
        match mann_whitney_greater(&low, &high) {
            Ok(t) => {
                out.write("rank_test.csv", |w| {
                    let mut w = csv::Writer::from_writer(w);
                    w.write_record(["n_low", "n_high", "u", "z", "p_value"])?;
                    w.write_record([
                        low.len().to_string(),
                        high.len().to_string(),
                        format_value(t.u),
                        format_value(t.z),
                        format_value(t.p_value),
                    ])?;
                    w.flush()?;
                    Ok(())
                })?;
                println!("low-vs-high variance rank test: p = {}", format_value(t.p_value));
            }
            Err(e) => eprintln!("warning: no rank test: {e}"),
        }
    }
    Ok(prov)
}

fn write_matrix(w: &mut dyn Write, emb: &Embedding, target: &str) -> edmpc::Result<()> {
    let mut w = csv::Writer::from_writer(w);
    let header: Vec<String> = std::iter::once("time".to_owned())
        .chain(emb.labels().iter().cloned())
        .chain(std::iter::once(target.to_owned()))
        .collect();
    w.write_record(&header)?;
    for (i, row) in emb.rows().enumerate() {
        let rec: Vec<String> = std::iter::once(emb.times()[i].to_string())
            .chain(row.iter().map(|&v| format_value(v)))
            .chain(std::iter::once(format_value(emb.targets()[i])))
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn export_comparison(a: &ExportArgs, config: &Config, out: &mut OutputSet) -> CliResult<Provenance> {
    let frame = comparison_frame(config, a.seed)?;
    let spec = config.embedding_spec();
    let emb = build_generalized_embedding(&frame, &spec)?;
    let (train, test) = split_library_prediction(&emb, config.lib_range()?, config.pred_range()?, false)?;
    let target = format!("{}(t+{})", spec.target(), spec.tp());
    out.write("comparison_frame.csv", |w| frame.write_csv(w))?;
    out.write("train.csv", |w| write_matrix(w, &train, &target))?;
    out.write("test.csv", |w| write_matrix(w, &test, &target))?;
    eprintln!("train rows {}, test rows {}", train.len(), test.len());
    Ok(Provenance {
        seeds: vec![a.seed],
        inputs: Vec::new(),
    })
}

/// Re-runs the manifest's command into `a.out` and compares outputs.
pub fn replay(a: &ReplayArgs) -> CliResult<RunManifest> {
    let original = RunManifest::read(&a.manifest)?;
    for input in &original.inputs {
        let now = FileRecord::of(Path::new(&input.path), input.path.clone())?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Data(format!("input {} changed since the recorded run", input.path)));
        }
    }
    let mut command = original.command.clone();
    *command.out_mut() = a.out.clone();
    let replayed = execute(&command, original.config.clone())?;
    let mismatched: Vec<&str> = original
        .outputs
        .iter()
        .filter(|o| !replayed.outputs.contains(o))
        .map(|o| o.path.as_str())
        .collect();
    if !mismatched.is_empty() || replayed.outputs.len() != original.outputs.len() {
        return Err(CliError::Data(format!("replay differs from the record: {}", mismatched.join(", "))));
    }
    println!("replay identical: {} files", replayed.outputs.len());
    Ok(replayed)
}
