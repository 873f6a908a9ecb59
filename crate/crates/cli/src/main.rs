use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use skysnn_core::device::write_event_log;
use skysnn_core::energy::{report_and_compare, spike_energy, EnergyLedger, SpikePath};
use skysnn_core::io::{run_scenario_file, Checkpoint, RunConfig};
use skysnn_core::pipeline;
use skysnn_core::snn::{encode_poisson_rates_steps, Mode};
use skysnn_core::train::WeightMode;
use skysnn_core::{seed, DeviceSim, SkyrmionNeuron, Terminal, TrackGeometry};

#[derive(Parser, Debug)]
#[command(name = "skysnn", version, about = "All-skyrmion spiking neural network simulator")]
struct Cli {
    /// Run configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir` from the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Reference,
    Skyrmion,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightsArg {
    Analog,
    Binary,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unsupervised STDP training; writes checkpoint.skyckpt.
    Train,
    /// Assigns a class to every excitatory neuron and stores it in the checkpoint.
    Label {
        #[arg(long, value_enum, default_value = "analog")]
        weights: WeightsArg,
    },
    /// Writes checkpoint_binary.skyckpt with weights thresholded to {0, w_max}.
    Binarize {
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Evaluates on the test set and writes the report as JSON and CSV.
    Eval {
        #[arg(long, value_enum, default_value = "reference")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "analog")]
        weights: WeightsArg,
    },
    /// Runs a device scenario file and writes its event log.
    DeviceSim {
        scenario: PathBuf,
        /// Event log destination; stdout when omitted.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Per-spike energy on the canonical spike path, or over test images
    /// run through the device model when a checkpoint is given.
    EnergyReport {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Accuracy of the binarized network over a list of thresholds.
    SweepThreshold {
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.3, 0.4, 0.5, 0.6, 0.7])]
        thresholds: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(|k| std::env::var(k).ok())?;
    if let Some(o) = &cli.out_dir {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn analog_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("checkpoint.skyckpt")
}

fn binary_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("checkpoint_binary.skyckpt")
}

fn weights_path(cfg: &RunConfig, w: WeightsArg) -> PathBuf {
    match w {
        WeightsArg::Analog => analog_path(cfg),
        WeightsArg::Binary => binary_path(cfg),
    }
}

fn load_ck(cfg: &RunConfig, path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path, cfg.stdp.w_max).with_context(|| format!("loading {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Train => {
            fs::create_dir_all(&cfg.out_dir)?;
            fs::write(cfg.out_dir.join("config.resolved.toml"), cfg.echo()?)?;
            let data = pipeline::load_train(&cfg)?;
            let start = Instant::now();
            let out_dir = cfg.out_dir.clone();
            let (net, summary) = pipeline::train_network(&cfg, &data, |k, n| {
                pipeline::to_checkpoint(n, None).save(&out_dir.join(format!("checkpoint_{k:06}.skyckpt")))?;
                eprintln!("checkpoint after {k} samples ({:.1} s)", start.elapsed().as_secs_f64());
                Ok(())
            })?;
            pipeline::to_checkpoint(&net, None).save(&analog_path(&cfg))?;
            write_json(&cfg.out_dir.join("train_summary.json"), &summary)?;
            eprintln!(
                "trained on {} samples in {:.1} s, {:.2} excitatory spikes per sample",
                summary.samples,
                start.elapsed().as_secs_f64(),
                summary.mean_exc_spikes
            );
        }
        Command::Label { weights } => {
            let path = weights_path(&cfg, weights);
            let ck = load_ck(&cfg, &path)?;
            let net = pipeline::from_checkpoint(&cfg, &ck)?;
            let labels = pipeline::label_network(&cfg, &net, &pipeline::load_train(&cfg)?)?;
            pipeline::to_checkpoint(&net, Some(&labels)).save(&path)?;
            write_json(&cfg.out_dir.join("labels.json"), &labels)?;
            eprintln!("labeled {} neurons, {} silent", labels.labels.len(), labels.silent);
        }
        Command::Binarize { threshold } => {
            let th = threshold.unwrap_or(cfg.binarize_threshold);
            let ck = load_ck(&cfg, &analog_path(&cfg))?;
            let net = pipeline::from_checkpoint(&cfg, &ck)?;
            let bin = pipeline::binarized(&net, th)?;
            let mut out = pipeline::to_checkpoint(&bin, None);
            out.labels = ck.labels.clone();
            out.save(&binary_path(&cfg))?;
            let ones = bin.weights.as_slice().iter().filter(|&&w| w > 0.0).count();
            eprintln!(
                "binarized at {th}: {ones} of {} synapses set",
                bin.weights.as_slice().len()
            );
        }
        Command::Eval { mode, weights } => {
            cfg.mode = match mode {
                ModeArg::Reference => Mode::Reference,
                ModeArg::Skyrmion => Mode::Skyrmion,
            };
            cfg.validate()?;
            let ck = load_ck(&cfg, &weights_path(&cfg, weights))?;
            let net = pipeline::from_checkpoint(&cfg, &ck)?;
            let labels = pipeline::labels_of(&ck)?;
            let wm = match weights {
                WeightsArg::Analog => WeightMode::Analog,
                WeightsArg::Binary => WeightMode::Binary,
            };
            let report = pipeline::evaluate_network(&cfg, &net, &labels, &pipeline::load_test(&cfg)?, wm)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let stem = format!(
                "eval_{}_{}",
                format!("{mode:?}").to_lowercase(),
                format!("{weights:?}").to_lowercase()
            );
            write_json(&cfg.out_dir.join(format!("{stem}.json")), &report)?;
            let mut w = create(&cfg.out_dir.join(format!("{stem}_confusion.csv")))?;
            report.write_confusion_csv(&mut w)?;
            w.flush()?;
            match report.accuracy {
                Some(a) => println!("accuracy {:.4} over {} images", a, report.n_images),
                None => println!("no test images; accuracy undefined"),
            }
        }
        Command::DeviceSim { scenario, log } => {
            let out = run_scenario_file(&scenario)?;
            match log {
                Some(p) => {
                    let mut w = create(&p)?;
                    write_event_log(&mut w, &out.events)?;
                    w.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut w = stdout.lock();
                    write_event_log(&mut w, &out.events)?;
                }
            }
            for (t, name) in &out.fires {
                eprintln!("fire {name} at {t} ns");
            }
            eprintln!(
                "{} events, {} injected, {} fired, {:.4} fJ",
                out.events.len(),
                out.counters.injected,
                out.counters.fired,
                out.ledger.total_fj()
            );
        }
        Command::EnergyReport { checkpoint } => {
            fs::create_dir_all(&cfg.out_dir)?;
            let (ledger, fired) = match checkpoint {
                Some(p) => network_energy(&cfg, &p)?,
                None => canonical_spike_energy(&cfg)?,
            };
            let report = report_and_compare(&ledger, fired, cfg.energy.baseline_per_spike_fj);
            write_json(&cfg.out_dir.join("energy_report.json"), &report)?;
            let mut w = create(&cfg.out_dir.join("energy_entries.csv"))?;
            ledger.write_csv(&mut w)?;
            w.flush()?;
            match report.per_spike_fj {
                Some(e) => println!(
                    "{e:.4} fJ per spike over {fired} spikes, {:.0}x below baseline",
                    report.ratio_vs_baseline.unwrap_or(f64::NAN)
                ),
                None => println!("no spikes fired; per-spike energy undefined"),
            }
        }
        Command::SweepThreshold { thresholds } => {
            let ck = load_ck(&cfg, &analog_path(&cfg))?;
            let net = pipeline::from_checkpoint(&cfg, &ck)?;
            let train = pipeline::load_train(&cfg)?;
            let test = pipeline::load_test(&cfg)?;
            let points = pipeline::sweep_threshold(&cfg, &net, &train, &test, &thresholds)?;
            fs::create_dir_all(&cfg.out_dir)?;
            let mut w = create(&cfg.out_dir.join("sweep_threshold.csv"))?;
            writeln!(w, "threshold_frac,ones_fraction,accuracy")?;
            for p in &points {
                let acc = p.accuracy.map(|a| a.to_string()).unwrap_or_default();
                writeln!(w, "{},{},{}", p.threshold_frac, p.ones_fraction, acc)?;
                println!("{:.3} ones={:.4} accuracy={acc}", p.threshold_frac, p.ones_fraction);
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// One skyrmion through a synapse track into a threshold-1 neuron whose
/// output leaves on a second track: one spike end to end.
fn canonical_spike_energy(cfg: &RunConfig) -> Result<(EnergyLedger, u64)> {
    let path = SpikePath::default();
    let layout = &cfg.device.layout;
    let mut sim = DeviceSim::new(cfg.device.material);
    let n = sim.add_neuron(SkyrmionNeuron::new(1, 0.0, layout.conversion_delay_ns)?);
    let geom = |len| TrackGeometry::plain(len, layout.width_nm, layout.thickness_nm, layout.min_spacing_nm);
    let input = sim.add_track(geom(path.segments_nm[0]), cfg.device.drive, Terminal::Neuron(n))?;
    let output = sim.add_track(geom(path.segments_nm[1]), cfg.device.drive, Terminal::Sink)?;
    sim.connect_output(n, output)?;
    sim.inject_skyrmion(input, 0.0)?;
    sim.run_until_idle()?;
    let analytic = spike_energy(&path, &cfg.device.drive, &cfg.device.material)?;
    eprintln!(
        "canonical spike: transport {:.4} fJ, nucleation {:.4} fJ, total {:.4} fJ",
        analytic.transport_fj, analytic.nucleation_fj, analytic.total_fj
    );
    Ok((sim.ledger().clone(), sim.counters().fired))
}

fn network_energy(cfg: &RunConfig, path: &Path) -> Result<(EnergyLedger, u64)> {
    let ck = load_ck(cfg, path)?;
    let mut net = pipeline::from_checkpoint(cfg, &ck)?;
    let w_max = net.weights.w_max();
    if net.weights.as_slice().iter().any(|&w| w != 0.0 && w != w_max) {
        net = pipeline::binarized(&net, cfg.binarize_threshold)?;
        eprintln!("analog checkpoint binarized at {}", cfg.binarize_threshold);
    }
    let test = pipeline::load_test(cfg)?;
    if test.is_empty() {
        bail!("test set is empty");
    }
    let p = cfg.present_params();
    let mut ledger = EnergyLedger::default();
    let mut fired = 0;
    for i in 0..cfg.energy.n_images.min(test.len()) {
        let mut rng = seed::stream_rng(cfg.seed, seed::streams::EVAL, i as u64);
        let steps = encode_poisson_rates_steps(test.image(i)?, p.encoder.rate_scale, p.encoder.presentation_ms, p.dt_ms, &mut rng);
        let run = net.run_skyrmion(&cfg.device, &steps, 0, p.dt_ms, false)?;
        fired += run.counters.fired;
        ledger.merge(&run.ledger);
    }
    Ok((ledger, fired))
}
