use std::error::Error;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use slipcal::balance::{build_balanced_with, collapse_runs, split_train_test, Recording};
use slipcal::baseline::{fit_threshold_model, ThresholdModel};
use slipcal::eval::{
    class_pools, evaluate, exclusion_sweep, plan_covering, sweep_sampling_rates, sweep_window_sizes, transfer_matrix,
    EvalReport, ExclusionAxis, SweepAxis,
};
use slipcal::io::{
    format_dataset, format_eval_report, format_spectral_report, read_dataset, read_recordings, recording_file_name,
    spectral_svg, write_recording, write_text, RunConfig,
};
use slipcal::lstm::{read_model, train, write_model, LstmModel};
use slipcal::seed::{derive_seed, fnv1a};
use slipcal::spectral::{most_significant_band, significance_analysis, FrequencyBand};
use slipcal::synth::generate_corpus;

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "slipcal", version, about = "Slip-detection calibration toolkit")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    overwrite: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of recording CSVs.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: <output_dir>/recordings).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collapse recordings into univariate gradient signals.
    Preprocess {
        /// Recording files or directories.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a balanced windowed dataset and its train/test split.
    Balance {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config window size.
        #[arg(long)]
        window: Option<usize>,
        /// Output directory for dataset.csv, train.csv and test.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bootstrap spectral significance analysis of slip vs. non-slip.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot.
        #[arg(long)]
        plot: bool,
    },
    /// Train an LSTM on a dataset CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Training dataset CSV (from `balance`).
        #[arg(long)]
        train: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an LSTM model or a threshold model on a dataset CSV.
    Eval {
        /// LSTM model file.
        #[arg(long, conflicts_with = "threshold", required_unless_present = "threshold")]
        model: Option<PathBuf>,
        /// Threshold model record.
        #[arg(long)]
        threshold: Option<PathBuf>,
        #[arg(long)]
        test: PathBuf,
        /// Report CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the amplitude-threshold baseline.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        /// Band as LOW,HIGH in Hz; chosen by spectral significance if absent.
        #[arg(long, value_parser = parse_band)]
        band: Option<FrequencyBand>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a measurement sweep.
    Sweep {
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: config output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_band(s: &str) -> std::result::Result<FrequencyBand, String> {
    let (a, b) = s.split_once(',').ok_or("expected LOW,HIGH")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("'{a}' is not a number"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("'{b}' is not a number"))?;
    FrequencyBand::new(lo, hi).map_err(|e| e.to_string())
}

fn parse_axis(s: &str) -> std::result::Result<SweepAxis, String> {
    s.parse()
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("slipcal-out"))
}

/// Recordings named by the config, or a synthetic corpus when none are.
fn load_recordings(cfg: &RunConfig) -> Result<Vec<Recording>> {
    if cfg.data.is_empty() {
        Ok(generate_corpus(
            &cfg.synth_materials,
            &cfg.synth,
            cfg.synth.duration_s,
            &cfg.synth_sensors,
            derive_seed(cfg.seed, "synth", &[]),
        )?)
    } else {
        Ok(read_recordings(&cfg.data)?)
    }
}

fn stamp(cfg: &RunConfig) -> String {
    format!("# seed={} config={:016x}\n", cfg.seed, cfg.fingerprint())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let ow = cli.overwrite;
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out.unwrap_or_else(|| out_dir(&cfg, None).join("recordings"));
            let recs = generate_corpus(
                &cfg.synth_materials,
                &cfg.synth,
                cfg.synth.duration_s,
                &cfg.synth_sensors,
                derive_seed(cfg.seed, "synth", &[]),
            )?;
            for r in &recs {
                write_recording(r, &dir.join(recording_file_name(r)), ow)?;
            }
            println!("synth: wrote {} recordings to {}", recs.len(), dir.display());
        }
        Command::Preprocess { input, out } => {
            let recs = read_recordings(&input)?;
            let runs = collapse_runs(&recs);
            for (run, rec) in runs.iter().zip(sorted(&recs)) {
                let mut text = String::from("# slipcal-signal v1\n");
                text.push_str(&format!("# fs_hz={}\n", rec.sampling_rate_hz()));
                text.push_str("index,value\n");
                for (i, v) in run.samples.iter().enumerate() {
                    text.push_str(&format!("{i},{v:.16e}\n"));
                }
                let name = recording_file_name(rec).replace(".csv", ".signal.csv");
                write_text(&out.join(name), &text, ow)?;
            }
            println!("preprocess: collapsed {} recordings into {}", runs.len(), out.display());
        }
        Command::Balance { config, window, out } => {
            let cfg = RunConfig::load(&config)?;
            let w = window.unwrap_or(cfg.window_size);
            let recs = load_recordings(&cfg)?;
            let plan = plan_covering(&recs);
            let ds = build_balanced_with(&recs, w, derive_seed(cfg.seed, "balance", &[w as u64]), &plan)?;
            let (tr, te) = split_train_test(&ds, derive_seed(cfg.seed, "split", &[w as u64]));
            let dir = out_dir(&cfg, out);
            let fp = cfg.fingerprint();
            write_text(&dir.join("dataset.csv"), &format_dataset(&ds, fp), ow)?;
            write_text(&dir.join("train.csv"), &format_dataset(&tr, fp), ow)?;
            write_text(&dir.join("test.csv"), &format_dataset(&te, fp), ow)?;
            println!(
                "balance: {} windows of {w} ({} slip / {} non-slip), train {} / test {} -> {}",
                ds.len(),
                ds.count(slipcal::balance::Label::Slip),
                ds.count(slipcal::balance::Label::NonSlip),
                tr.len(),
                te.len(),
                dir.display()
            );
        }
        Command::Spectrum { config, out, plot } => {
            let cfg = RunConfig::load(&config)?;
            let recs = load_recordings(&cfg)?;
            let (ns, sl) = class_pools(&recs);
            let fs = recs[0].sampling_rate_hz();
            let report = significance_analysis(&ns, &sl, fs, derive_seed(cfg.seed, "spectrum", &[]), &cfg.spectral)?;
            let dir = out_dir(&cfg, out);
            write_text(&dir.join("spectral.csv"), &format_spectral_report(&report, cfg.fingerprint()), ow)?;
            if plot {
                write_text(&dir.join("spectral.svg"), &spectral_svg(&report), ow)?;
            }
            let band = most_significant_band(&report, cfg.band_threshold)
                .map(|b| format!("{} to {} Hz", b.low_hz, b.high_hz))
                .unwrap_or_else(|e| e.to_string());
            println!("spectrum: {} bins, most significant band {band} -> {}", report.bins(), dir.display());
        }
        Command::Train { config, train: path, out } => {
            let cfg = RunConfig::load(&config)?;
            let ds = read_dataset(&path)?;
            let (model, history) = train::<f64>(&ds, &cfg.train_config())?;
            let mut buf = Vec::new();
            write_model(&model, &mut buf)?;
            write_text(&out, std::str::from_utf8(&buf)?, ow)?;
            let last = history.epochs.last();
            println!(
                "train: {} windows, {} epochs, final loss {:.4}, train accuracy {:.3} -> {}",
                ds.len(),
                history.epochs.len(),
                last.map_or(f64::NAN, |e| e.loss),
                last.map_or(f64::NAN, |e| e.accuracy),
                out.display()
            );
        }
        Command::Eval { model, threshold, test, out } => {
            let ds = read_dataset(&test)?;
            let (report, fingerprint): (EvalReport, u64) = if let Some(m) = model {
                let f = fs::File::open(&m).map_err(|e| format!("{}: {e}", m.display()))?;
                let model: LstmModel<f64> = read_model(std::io::BufReader::new(f))?;
                (evaluate(&model, &ds)?, model.config_fingerprint)
            } else {
                let p = threshold.expect("clap requires one of the models");
                let text = fs::read_to_string(&p)?;
                let t: ThresholdModel = text.parse()?;
                (evaluate(&t, &ds)?, fnv1a(t.to_string().as_bytes()))
            };
            if let Some(o) = &out {
                write_text(o, &format_eval_report(&report, ds.seed, fingerprint), ow)?;
            }
            println!(
                "eval: accuracy {:.3} (TP {:.3}, TN {:.3}) on {} windows",
                report.accuracy,
                report.tp_rate,
                report.tn_rate,
                ds.len()
            );
        }
        Command::Baseline { config, train: path, band, out } => {
            let cfg = RunConfig::load(&config)?;
            let ds = read_dataset(&path)?;
            let band = match band {
                Some(b) => b,
                None => {
                    let recs = load_recordings(&cfg)?;
                    let (ns, sl) = class_pools(&recs);
                    let report = significance_analysis(
                        &ns,
                        &sl,
                        recs[0].sampling_rate_hz(),
                        derive_seed(cfg.seed, "spectrum", &[]),
                        &cfg.spectral,
                    )?;
                    most_significant_band(&report, cfg.band_threshold)?
                }
            };
            let model = fit_threshold_model(
                ds.windows.iter().map(|w| (w.samples.as_slice(), w.label)),
                band,
                ds.sampling_rate_hz,
            )?;
            write_text(&out, &format!("{}{model}\n", stamp(&cfg)), ow)?;
            println!(
                "baseline: band {} to {} Hz, threshold {:e} -> {}",
                band.low_hz,
                band.high_hz,
                model.threshold,
                out.display()
            );
        }
        Command::Sweep { axis, config, out } => {
            let cfg = RunConfig::load(&config)?;
            let recs = load_recordings(&cfg)?;
            let ec = cfg.eval_config();
            let seed = derive_seed(cfg.seed, "sweep", &[]);
            let mut report = match axis {
                SweepAxis::WindowSize => sweep_window_sizes(&recs, &cfg.sweep.window_sizes, &ec, seed)?,
                SweepAxis::SamplingRate => {
                    sweep_sampling_rates(&recs, &cfg.sweep.factors, cfg.sweep.base_window, &ec, seed)?
                }
                SweepAxis::Material => exclusion_sweep(&recs, ExclusionAxis::Material, &ec, seed)?,
                SweepAxis::Speed => exclusion_sweep(&recs, ExclusionAxis::Speed, &ec, seed)?,
                SweepAxis::Transfer => transfer_matrix(&recs, &ec, seed)?,
            };
            report.seed = cfg.seed;
            report.config_fingerprint = cfg.fingerprint();
            let dir = out_dir(&cfg, out);
            let name = format!("sweep_{}", axis.name());
            write_text(&dir.join(format!("{name}.csv")), &report.to_csv(), ow)?;
            write_text(&dir.join(format!("{name}.txt")), &report.to_table(), ow)?;
            print!("{}", report.to_table());
            println!("sweep: {} rows -> {}", report.rows.len(), dir.join(format!("{name}.csv")).display());
        }
    }
    Ok(())
}

/// Recordings in the order `collapse_runs` emits them.
fn sorted(recs: &[Recording]) -> Vec<&Recording> {
    let mut v: Vec<&Recording> = recs.iter().collect();
    v.sort_by(|a, b| a.provenance().cmp(b.provenance()));
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
