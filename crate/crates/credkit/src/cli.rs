//! Command-line interface: `synth`, `train`, `detect`, `bench`, `eval`,
//! and `plot` subcommands over the library modules.
//!
//! Global flags: `--seed` (default 42) drives every randomized step,
//! `--out-dir` receives all output files, and `--precision` picks the
//! floating-point width for model math (model files themselves always
//! store 32-bit values). Given identical flags and seed, every subcommand
//! writes byte-identical output files. The environment variable
//! `CREDKIT_THREADS` caps the worker-thread count (default: all
//! processors); results do not depend on it.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/input error, 3 internal
//! invariant failure.

use crate::cred::{
    build_model, load_model, save_model, train, windows_to_dataset, CredConfig, CredModel, Dataset,
    Hyper, LabeledWindow, WindowSetSpec,
};
use crate::detectors::{
    cred_detect, read_detections_csv, write_detections_csv, DEFAULT_MIN_DUR_S, DEFAULT_TRIGGER,
    DETECT_STRIDE_S, DETECT_WINDOW_S,
};
use crate::dsp::{STFT_HOP, TARGET_RATE_HZ};
use crate::error::{CredError, Result};
use crate::eval::{
    magnitude_histogram, match_catalog, metrics, pr_sweep, render_csv_chart, sensitivity_bench,
    window_classify, write_confusion_csv, write_magnitude_hist_csv, write_sweep_csv, BenchSpec,
    ConfusionMatrix, WindowClass, DEFAULT_MATCH_TOL_S,
};
use crate::nn::{Mode, Real};
use crate::rng::Rng;
use crate::synth::{
    assemble_scene, ricker, synthetic_event, write_truth, EventInsert, SyntheticScene, TruthKind,
};
use crate::waveio::{
    read_catalog, read_waveform, write_catalog, write_waveform, Catalog, CatalogEvent,
};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Length of each synthetic earthquake insert in generated scenes.
const SCENE_EVENT_DURATION_S: f64 = 20.0;
/// Minimum quiet gap between scene inserts.
const SCENE_MIN_GAP_S: f64 = 10.0;
/// Magnitude histogram bin width used by `eval`.
const MAGNITUDE_BIN_WIDTH: f64 = 0.2;

#[derive(Parser, Debug)]
#[command(
    name = "credkit",
    version,
    about = "Earthquake signal detection toolkit",
    propagate_version = true
)]
pub struct Cli {
    /// Master seed; all randomized steps derive from it deterministically.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Directory where all output files are written.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Floating-point precision for model arithmetic.
    #[arg(long, global = true, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Small model that trains on a laptop CPU in minutes.
    Desk,
    /// Full-scale model (~250k parameters) for parity experiments.
    Paper,
}

/// SNR levels in dB: a single value, a comma list, or an inclusive
/// `start:end:step` range (`-2:20:1` gives 23 levels).
#[derive(Debug, Clone, PartialEq)]
pub struct SnrList(pub Vec<f64>);

fn parse_snr_list(s: &str) -> std::result::Result<SnrList, String> {
    let parse_num = |v: &str| -> std::result::Result<f64, String> {
        let x: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("{v:?} is not a number"))?;
        if !x.is_finite() {
            return Err(format!("{v:?} is not finite"));
        }
        Ok(x)
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("range form is start:end:step".into());
        }
        let (start, end, step) = (
            parse_num(parts[0])?,
            parse_num(parts[1])?,
            parse_num(parts[2])?,
        );
        if step <= 0.0 {
            return Err(format!("step must be positive, got {step}"));
        }
        if end < start {
            return Err(format!("range end {end} is below start {start}"));
        }
        let count = ((end - start) / step + 1e-9).floor() as usize + 1;
        return Ok(SnrList(
            (0..count).map(|i| start + i as f64 * step).collect(),
        ));
    }
    let values: Vec<f64> = s
        .split(',')
        .map(parse_num)
        .collect::<std::result::Result<_, _>>()?;
    if values.is_empty() {
        return Err("no SNR levels given".into());
    }
    Ok(SnrList(values))
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Generate a seeded synthetic scene: clean waveform, noisy copies at
    /// the requested SNR levels, insert truth, and an event catalog.
    Synth {
        /// Earthquake inserts in the scene.
        #[arg(long, default_value_t = 50)]
        events: usize,
        /// Earthquake-free Ricker bursts in the scene.
        #[arg(long, default_value_t = 50)]
        fakes: usize,
        /// Scene length in seconds.
        #[arg(long, default_value_t = 3024.0)]
        duration_s: f64,
        /// Noise levels for the noisy scene copies.
        #[arg(long, value_parser = parse_snr_list, default_value = "12")]
        snr_list: SnrList,
        /// Also write this many labeled 30 s training windows (half with
        /// an event, half pure noise) under `<out-dir>/data/`.
        #[arg(long)]
        train_windows: Option<usize>,
    },
    /// Train a detector on a directory of labeled windows.
    Train {
        /// Directory of 30 s window CSVs plus an optional catalog.csv
        /// giving each event window's P/S times (seconds into the window,
        /// event_id = window file stem). Windows without a catalog row
        /// count as noise.
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value_t = 60)]
        epochs: usize,
        #[arg(long, default_value_t = 16)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Early-stop patience in epochs without validation improvement.
        #[arg(long, default_value_t = 8)]
        patience: usize,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
    },
    /// Scan a continuous waveform with a trained model.
    Detect {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Continuous 100 Hz waveform CSV.
        #[arg(long)]
        waveform: PathBuf,
        #[arg(long, default_value_t = DETECT_WINDOW_S)]
        window_s: f64,
        #[arg(long, default_value_t = DETECT_STRIDE_S)]
        stride_s: f64,
        /// Probability threshold for event extraction.
        #[arg(long, default_value_t = DEFAULT_TRIGGER)]
        threshold: f64,
    },
    /// SNR sensitivity sweep: the model against grid-tuned classical
    /// baselines on seeded synthetic scenes.
    Bench {
        /// Model file; without it an untrained desk-scale model is used
        /// (smoke tests only — train one for meaningful numbers).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_parser = parse_snr_list, default_value = "-2:20:1")]
        snr_list: SnrList,
        /// Number of scene seeds; reported numbers are per-seed medians.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
    },
    /// Match a detections file against an event catalog.
    Eval {
        /// Detections CSV written by `detect`.
        #[arg(long)]
        detections: PathBuf,
        /// Catalog CSV with P/S times on the same clock as the detections.
        #[arg(long)]
        catalog: PathBuf,
        /// Matching tolerance in seconds.
        #[arg(long, default_value_t = DEFAULT_MATCH_TOL_S)]
        tol_s: f64,
    },
    /// Render any of the toolkit's CSV reports as an SVG chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
    },
}

/// Parses `argv` and runs the requested subcommand, returning the process
/// exit code. `--help`/`--version` exit 0; usage errors print the synopsis
/// to standard error and exit 1; runtime failures print one `error:` line
/// and exit 2 (data) or 3 (internal invariant).
pub fn dispatch<I, A>(argv: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    let outcome = match cli.precision {
        Precision::F32 => run::<f32>(&cli),
        Precision::F64 => run::<f64>(&cli),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Applies the `CREDKIT_THREADS` cap. Invalid values fall back to the
/// default with a warning; a pre-existing global pool (e.g. in-process
/// callers) is left as is.
fn init_thread_pool() {
    let Ok(raw) = std::env::var("CREDKIT_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        _ => eprintln!("warning: ignoring CREDKIT_THREADS={raw:?} (want a positive integer)"),
    }
}

fn run<T: Real>(cli: &Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|source| CredError::Io {
        path: cli.out_dir.clone(),
        source,
    })?;
    match &cli.command {
        Cmd::Synth {
            events,
            fakes,
            duration_s,
            snr_list,
            train_windows,
        } => run_synth(
            cli,
            *events,
            *fakes,
            *duration_s,
            &snr_list.0,
            *train_windows,
        ),
        Cmd::Train {
            data_dir,
            epochs,
            batch,
            lr,
            patience,
            preset,
        } => run_train::<T>(
            cli,
            data_dir,
            &Hyper {
                epochs: *epochs,
                batch_size: *batch,
                lr: *lr,
                patience: *patience,
            },
            *preset,
        ),
        Cmd::Detect {
            model,
            waveform,
            window_s,
            stride_s,
            threshold,
        } => run_detect::<T>(cli, model, waveform, *window_s, *stride_s, *threshold),
        Cmd::Bench {
            model,
            snr_list,
            seeds,
        } => run_bench::<T>(cli, model.as_deref(), &snr_list.0, *seeds),
        Cmd::Eval {
            detections,
            catalog,
            tol_s,
        } => run_eval(cli, detections, catalog, *tol_s),
        Cmd::Plot { csv } => run_plot(cli, csv),
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

/// Filesystem-safe tag for an SNR level: `-2` → `m2`, `6.5` → `6p5`.
fn snr_tag(v: f64) -> String {
    format!("{v}").replace('-', "m").replace('.', "p")
}

/// Recovers which generated event landed at each earthquake truth span by
/// exact sample comparison (inserts are copied into the clean scene
/// verbatim), yielding absolute P/S times.
fn scene_catalog(scene: &SyntheticScene, pool: &[EventInsert]) -> Result<Catalog> {
    let rate = scene.trace.sampling_rate;
    let mut catalog = Vec::new();
    for rec in &scene.truth {
        if rec.kind != TruthKind::Earthquake {
            continue;
        }
        let pos = (rec.start_s * rate).round() as usize;
        let len = ((rec.end_s - rec.start_s) * rate).round() as usize;
        let placed = &scene.trace.z[pos..pos + len];
        let ev = pool
            .iter()
            .find(|e| e.trace.z.as_slice() == placed)
            .ok_or_else(|| {
                CredError::GeometryMismatch("an inserted event matches no generated event".into())
            })?;
        catalog.push(CatalogEvent {
            event_id: format!("ev{:03}", catalog.len()),
            p_time: rec.start_s + ev.p_s,
            s_time: rec.start_s + ev.s_s,
            magnitude: None,
        });
    }
    Ok(catalog)
}

fn run_synth(
    cli: &Cli,
    events: usize,
    fakes: usize,
    duration_s: f64,
    snr_levels: &[f64],
    train_windows: Option<usize>,
) -> Result<()> {
    let seed = cli.seed;
    let pool: Vec<EventInsert> = (0..events)
        .map(|i| {
            synthetic_event(
                SCENE_EVENT_DURATION_S,
                TARGET_RATE_HZ,
                seed ^ ((i as u64 + 1) << 8),
            )
        })
        .collect::<Result<_>>()?;
    let event_traces: Vec<_> = pool.iter().map(|e| e.trace.clone()).collect();
    let mut fake_rng = Rng::derive(seed, 0xFA4E5);
    let fake_bursts: Vec<Vec<f64>> = (0..fakes)
        .map(|_| ricker(fake_rng.uniform(2.0, 6.0), TARGET_RATE_HZ, 1.0))
        .collect::<Result<_>>()?;
    let scene = assemble_scene(
        &event_traces,
        &fake_bursts,
        duration_s,
        SCENE_MIN_GAP_S,
        seed ^ 0x5CE2E,
    )?;

    let clean_path = cli.out_dir.join("scene_clean.csv");
    write_waveform(&clean_path, &scene.trace)?;
    wrote(&clean_path);
    let truth_path = cli.out_dir.join("truth.csv");
    write_truth(&truth_path, &scene.truth)?;
    wrote(&truth_path);
    let catalog_path = cli.out_dir.join("catalog.csv");
    write_catalog(&catalog_path, &scene_catalog(&scene, &pool)?)?;
    wrote(&catalog_path);

    for (i, &snr) in snr_levels.iter().enumerate() {
        let noisy = scene.with_noise(snr, seed ^ ((i as u64 + 1) << 32))?;
        let path = cli
            .out_dir
            .join(format!("scene_snr_{}db.csv", snr_tag(snr)));
        write_waveform(&path, &noisy.trace)?;
        wrote(&path);
    }

    if let Some(n) = train_windows {
        write_training_set(&cli.out_dir.join("data"), n, seed)?;
    }
    Ok(())
}

/// Writes `n` labeled training windows plus their window catalog: one
/// waveform CSV per window, and catalog rows (event_id = file stem, P/S in
/// seconds from the window start) for the windows that contain an event.
fn write_training_set(dir: &Path, n: usize, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CredError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let spec = WindowSetSpec {
        event_windows: n.div_ceil(2),
        noise_windows: n / 2,
        seed,
        ..WindowSetSpec::default()
    };
    let windows = crate::cred::synthetic_windows(&spec)?;
    let mut catalog = Vec::new();
    for (i, w) in windows.iter().enumerate() {
        let name = format!("w{i:04}");
        write_waveform(dir.join(format!("{name}.csv")), &w.trace)?;
        if let Some((p, s)) = w.event {
            catalog.push(CatalogEvent {
                event_id: name,
                p_time: p,
                s_time: s,
                magnitude: None,
            });
        }
    }
    write_catalog(dir.join("catalog.csv"), &catalog)?;
    println!("wrote {} windows under {}", windows.len(), dir.display());
    Ok(())
}

/// Reads a training directory: every `*.csv` except `catalog.csv` is a
/// window; the catalog labels event windows by file stem.
fn load_data_dir(dir: &Path) -> Result<Vec<LabeledWindow>> {
    let io_err = |source| CredError::Io {
        path: dir.to_path_buf(),
        source,
    };
    if !dir.is_dir() {
        return Err(CredError::MissingFile(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(io_err)?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_name().is_some_and(|n| n != "catalog.csv")
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CredError::EmptyDataset);
    }

    let catalog_path = dir.join("catalog.csv");
    let mut arrivals: HashMap<String, (f64, f64)> = HashMap::new();
    if catalog_path.exists() {
        for ev in read_catalog(&catalog_path)? {
            arrivals.insert(ev.event_id, (ev.p_time, ev.s_time));
        }
    }

    files
        .into_iter()
        .map(|path| {
            let trace = read_waveform(&path)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(LabeledWindow {
                trace,
                event: arrivals.get(&stem).copied(),
            })
        })
        .collect()
}

/// Expands one model output row (one value per pooled step) back to the
/// spectrogram frame grid, mirroring detection-time stitching.
fn expand_row(row: &[f64], input_frames: usize) -> Vec<f64> {
    let chunk = input_frames.div_ceil(row.len());
    (0..input_frames).map(|f| row[f / chunk]).collect()
}

fn run_train<T: Real>(cli: &Cli, data_dir: &Path, hyper: &Hyper, preset: Preset) -> Result<()> {
    let windows = load_data_dir(data_dir)?;
    let mut cfg = match preset {
        Preset::Desk => CredConfig::default(),
        Preset::Paper => CredConfig::paper_preset(),
    };
    cfg.seed = cli.seed;
    let ds = windows_to_dataset::<T>(&windows, &cfg)?;

    // Deterministic shuffled 80/20 split with at least one window on each
    // side (train() rejects an empty side anyway).
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    Rng::derive(cli.seed, 0x5B117).shuffle(&mut order);
    let n_val = (n / 5).max(1);
    if n_val >= n {
        return Err(CredError::EmptyDataset);
    }
    let (val_idx, train_idx) = order.split_at(n_val);
    let (x, y) = ds.select(train_idx);
    let train_set = Dataset { x, y };
    let (x, y) = ds.select(val_idx);
    let val_set = Dataset { x, y };

    let model = build_model::<T>(&cfg)?;
    let (model, report) = train(model, &train_set, &val_set, hyper)?;

    let model_path = cli.out_dir.join("model.cred");
    save_model(&model, &model_path)?;
    wrote(&model_path);
    let report_path = cli.out_dir.join("train_report.csv");
    report.write_csv(&report_path)?;
    wrote(&report_path);

    // Threshold sweep on the held-out windows, on the same frame grid the
    // detector uses.
    let probs = model.forward(&val_set.x, Mode::Infer)?;
    let t_out = cfg.output_frames();
    let hop_s = STFT_HOP as f64 / TARGET_RATE_HZ;
    let streams: Vec<Vec<f64>> = (0..val_idx.len())
        .map(|w| {
            let row: Vec<f64> = probs.data[w * t_out..(w + 1) * t_out]
                .iter()
                .map(|v| v.to_f64())
                .collect();
            expand_row(&row, cfg.input_frames)
        })
        .collect();
    let labels: Vec<WindowClass> = val_idx
        .iter()
        .map(|&i| {
            if windows[i].event.is_some() {
                WindowClass::Earthquake
            } else {
                WindowClass::Noise
            }
        })
        .collect();
    let thresholds: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let curve = pr_sweep(&streams, &labels, hop_s, DEFAULT_MIN_DUR_S, &thresholds)?;
    let curve_path = cli.out_dir.join("pr_curve.csv");
    curve.write_csv(&curve_path)?;
    wrote(&curve_path);

    let tr = curve.best_threshold.unwrap_or(DEFAULT_TRIGGER);
    let mut cm = ConfusionMatrix::default();
    for (stream, label) in streams.iter().zip(&labels) {
        let got = window_classify(stream, hop_s, tr, DEFAULT_MIN_DUR_S);
        match (label, got) {
            (WindowClass::Earthquake, WindowClass::Earthquake) => cm.true_pos += 1,
            (WindowClass::Earthquake, WindowClass::Noise) => cm.false_neg += 1,
            (WindowClass::Noise, WindowClass::Earthquake) => cm.false_pos += 1,
            (WindowClass::Noise, WindowClass::Noise) => cm.true_neg += 1,
        }
    }
    let confusion_path = cli.out_dir.join("confusion.csv");
    write_confusion_csv(&confusion_path, &cm)?;
    wrote(&confusion_path);
    Ok(())
}

fn run_detect<T: Real>(
    cli: &Cli,
    model_path: &Path,
    waveform: &Path,
    window_s: f64,
    stride_s: f64,
    threshold: f64,
) -> Result<()> {
    let model: CredModel<T> = load_model(model_path)?;
    let trace = read_waveform(waveform)?;
    let detections = cred_detect(&model, &trace, window_s, stride_s, threshold)?;
    let path = cli.out_dir.join("detections.csv");
    write_detections_csv(&path, &detections)?;
    wrote(&path);
    println!("{} detections", detections.len());
    Ok(())
}

fn run_bench<T: Real>(
    cli: &Cli,
    model_path: Option<&Path>,
    snr_levels: &[f64],
    seed_count: usize,
) -> Result<()> {
    let model: CredModel<T> = match model_path {
        Some(p) => load_model(p)?,
        None => {
            let cfg = CredConfig {
                seed: cli.seed,
                ..CredConfig::default()
            };
            build_model(&cfg)?
        }
    };
    if seed_count == 0 {
        return Err(CredError::InvalidConfig(
            "--seeds must be at least 1".into(),
        ));
    }
    let seeds: Vec<u64> = (0..seed_count)
        .map(|i| cli.seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .collect();
    let spec = BenchSpec {
        seeds,
        ..BenchSpec::default()
    };
    let results = sensitivity_bench(&model, &spec, snr_levels)?;
    let path = cli.out_dir.join("sweep.csv");
    write_sweep_csv(&path, &results)?;
    wrote(&path);
    Ok(())
}

fn run_eval(cli: &Cli, detections: &Path, catalog_path: &Path, tol_s: f64) -> Result<()> {
    let dets = read_detections_csv(detections)?;
    let catalog = read_catalog(catalog_path)?;
    let m = match_catalog(&dets, &catalog, tol_s);

    let cm = ConfusionMatrix {
        true_pos: m.matched.len(),
        false_pos: m.new.len(),
        false_neg: m.missed.len(),
        true_neg: 0,
    };
    let s = metrics(&cm);
    let mut out = String::from("matched,new,missed,precision,recall,fscore\n");
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        m.matched.len(),
        m.new.len(),
        m.missed.len(),
        crate::eval::csv_opt(s.precision),
        crate::eval::csv_opt(s.recall),
        crate::eval::csv_opt(s.fscore),
    );
    let report_path = cli.out_dir.join("match_report.csv");
    crate::waveio::write_text(&report_path, &out)?;
    wrote(&report_path);

    let magnitudes: Vec<f64> = m
        .matched
        .iter()
        .filter_map(|&(_, e)| catalog[e].magnitude)
        .collect();
    let hist = magnitude_histogram(&magnitudes, MAGNITUDE_BIN_WIDTH);
    let hist_path = cli.out_dir.join("magnitude_hist.csv");
    write_magnitude_hist_csv(&hist_path, &hist)?;
    wrote(&hist_path);
    println!(
        "matched {} of {} events, {} unmatched detections",
        m.matched.len(),
        catalog.len(),
        m.new.len()
    );
    Ok(())
}

fn run_plot(cli: &Cli, csv: &Path) -> Result<()> {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "chart".into());
    let path = cli.out_dir.join(format!("{stem}.svg"));
    render_csv_chart(csv, &path)?;
    wrote(&path);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range_is_inclusive() {
        let list = parse_snr_list("-2:20:1").unwrap();
        assert_eq!(list.0.len(), 23);
        assert_eq!(list.0[0], -2.0);
        assert_eq!(list.0[22], 20.0);
        assert_eq!(parse_snr_list("0:20:2").unwrap().0.len(), 11);
    }

    #[test]
    fn snr_list_accepts_scalars_and_comma_lists() {
        assert_eq!(parse_snr_list("12").unwrap().0, vec![12.0]);
        assert_eq!(parse_snr_list("-3.5").unwrap().0, vec![-3.5]);
        assert_eq!(parse_snr_list("1,2,8").unwrap().0, vec![1.0, 2.0, 8.0]);
    }

    #[test]
    fn snr_list_rejects_garbage() {
        assert!(parse_snr_list("abc").is_err());
        assert!(parse_snr_list("0:10:0").is_err());
        assert!(parse_snr_list("10:0:1").is_err());
        assert!(parse_snr_list("1:2").is_err());
        assert!(parse_snr_list("nan").is_err());
    }

    #[test]
    fn seed_defaults_to_42_and_flags_parse() {
        let cli = Cli::try_parse_from(["credkit", "plot", "--csv", "x.csv"]).unwrap();
        assert_eq!(cli.seed, 42);
        assert_eq!(cli.out_dir, PathBuf::from("out"));
        assert_eq!(cli.precision, Precision::F32);

        let cli = Cli::try_parse_from([
            "credkit",
            "detect",
            "--model",
            "m.cred",
            "--waveform",
            "w.csv",
            "--seed",
            "7",
            "--precision",
            "f64",
        ])
        .unwrap();
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.precision, Precision::F64);
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        assert!(Cli::try_parse_from(["credkit", "synth", "--bogus"]).is_err());
        assert_eq!(dispatch(["credkit", "synth", "--bogus"]), 1);
        assert_eq!(dispatch(["credkit", "no-such-command"]), 1);
    }

    #[test]
    fn help_exits_zero_everywhere() {
        for args in [
            vec!["credkit", "--help"],
            vec!["credkit", "synth", "--help"],
            vec!["credkit", "train", "--help"],
            vec!["credkit", "detect", "--help"],
            vec!["credkit", "bench", "--help"],
            vec!["credkit", "eval", "--help"],
            vec!["credkit", "plot", "--help"],
        ] {
            assert_eq!(dispatch(args), 0);
        }
    }

    #[test]
    fn snr_tags_are_filesystem_safe() {
        assert_eq!(snr_tag(-2.0), "m2");
        assert_eq!(snr_tag(6.5), "6p5");
        assert_eq!(snr_tag(20.0), "20");
    }

    #[test]
    fn expand_row_repeats_each_pooled_step() {
        assert_eq!(expand_row(&[0.1, 0.9], 5), vec![0.1, 0.1, 0.1, 0.9, 0.9]);
    }
}
