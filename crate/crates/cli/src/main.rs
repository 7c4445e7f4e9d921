use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ebt_cli::commands::{self, TrackOptions};
use ebt_cli::config::{CandidateSet, RunConfig, TrackerKind};
use ebt_core::eval::{teleport_x150, SynthSpec};
use ebt_core::imgio::BoundingBox;
use ebt_core::{Error, Result};

/// Object tracking with instance-specific edge-box proposals.
#[derive(Parser)]
#[command(name = "ebt", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a sequence directory.
    Track {
        /// Directory of frames (PPM/PGM/BMP), optionally with groundtruth.txt.
        sequence: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Initial box as x,y,w,h (defaults to the first ground-truth line).
        #[arg(long)]
        init: Option<String>,
        /// Ground-truth file, if not inside the sequence directory.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Write per-frame overlay images.
        #[arg(long)]
        overlays: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Score trajectories against ground truth.
    Eval {
        /// Trajectory files (trajectory.csv or one box per line).
        #[arg(long = "traj", required = true)]
        trajectories: Vec<PathBuf>,
        /// Ground-truth files, paired in order with --traj.
        #[arg(long = "gt", required = true)]
        ground_truth: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Dump proposals for a single frame.
    Propose {
        frame: PathBuf,
        /// Previous target box as x,y,w,h.
        #[arg(long)]
        prev: String,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Render a synthetic sequence from a JSON spec or a stock name.
    Synth {
        /// Spec file, or "teleport-x150".
        spec: String,
        #[arg(short, long)]
        out: PathBuf,
        /// Override the spec's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every test-set by update-set combination.
    Ablate {
        #[arg(required = true)]
        sequences: Vec<PathBuf>,
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// ebt or ncc_eb.
    #[arg(long)]
    tracker: Option<String>,
    /// Drop the smoothness term from the decision rule.
    #[arg(long)]
    no_smoothness: bool,
    /// Number of proposals kept after re-ranking.
    #[arg(long)]
    proposals: Option<usize>,
    /// Candidates used to pick the estimate: E, R or E+R.
    #[arg(long)]
    test_set: Option<String>,
    /// Candidates used to update the model: E, R or E+R.
    #[arg(long)]
    update_set: Option<String>,
    /// Any other configuration key, as key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                RunConfig::from_json(&text)?
            }
            None => RunConfig::default(),
        };
        if !self.set.is_empty() {
            let mut v = serde_json::to_value(&cfg).expect("config serialises");
            for kv in &self.set {
                let (k, raw) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::config(kv.as_str(), "expected KEY=VALUE"))?;
                let obj = v.as_object_mut().expect("config is an object");
                if !obj.contains_key(k) {
                    return Err(Error::config(k, "unknown key"));
                }
                let val = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
                obj.insert(k.to_string(), val);
            }
            cfg = serde_json::from_value(v).map_err(|e| Error::config("--set", e.to_string()))?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = &self.tracker {
            cfg.tracker = match t.as_str() {
                "ebt" => TrackerKind::Ebt,
                "ncc_eb" | "ncc-eb" => TrackerKind::NccEb,
                _ => return Err(Error::config("tracker", format!("{t} is not ebt or ncc_eb"))),
            };
        }
        if self.no_smoothness {
            cfg.smoothness = false;
        }
        if let Some(h) = self.proposals {
            cfg.max_proposals = h;
        }
        if let Some(s) = &self.test_set {
            cfg.test_set = CandidateSet::parse(s)?;
        }
        if let Some(s) = &self.update_set {
            cfg.update_set = CandidateSet::parse(s)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_box(field: &str, s: &str) -> Result<BoundingBox> {
    let v: Vec<f64> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::config(field, e.to_string()))?;
    if v.len() != 4 || v[2] <= 0.0 || v[3] <= 0.0 {
        return Err(Error::config(field, "expected x,y,w,h with positive size"));
    }
    Ok(BoundingBox::new(v[0], v[1], v[2], v[3]))
}

fn load_spec(spec: &str) -> Result<SynthSpec> {
    if spec == "teleport-x150" && !Path::new(spec).exists() {
        return Ok(teleport_x150());
    }
    let p = Path::new(spec);
    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
    SynthSpec::from_json(&text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Track {
            sequence,
            out,
            init,
            gt,
            overlays,
            cfg,
        } => {
            let cfg = cfg.resolve()?;
            let init = init.as_deref().map(|s| parse_box("init", s)).transpose()?;
            let opts = TrackOptions {
                init,
                ground_truth: gt,
                overlays,
            };
            let r = commands::cmd_track(&cfg, &sequence, &out, &opts)?;
            if r.has_ground_truth {
                println!(
                    "{} frames, {:.1} fps, auc {:.4}, ps20 {:.4}",
                    r.result.trajectory.len(),
                    r.result.fps(),
                    r.result.curves.auc,
                    r.result.curves.ps20
                );
            } else {
                println!("{} frames, {:.1} fps", r.result.trajectory.len(), r.result.fps());
            }
        }
        Command::Eval {
            trajectories,
            ground_truth,
            out,
        } => {
            if trajectories.len() != ground_truth.len() {
                return Err(Error::LengthMismatch {
                    what: "--traj vs --gt files".into(),
                    left: trajectories.len(),
                    right: ground_truth.len(),
                });
            }
            let pairs: Vec<_> = trajectories.into_iter().zip(ground_truth).collect();
            let rep = commands::cmd_eval(&pairs, out.as_deref())?;
            for e in &rep.sequences {
                println!("{}\tauc {:.4}\tps20 {:.4}", e.name, e.auc, e.ps20);
            }
            println!("mean\tauc {:.4}\tps20 {:.4}", rep.mean_auc, rep.mean_ps20);
        }
        Command::Propose { frame, prev, out, cfg } => {
            let cfg = cfg.resolve()?;
            let prev = parse_box("prev", &prev)?;
            let r = commands::cmd_propose(&cfg, &frame, prev, &out)?;
            println!("{} proposals in pool, {} after re-ranking", r.pool, r.selected);
        }
        Command::Synth { spec, out, seed } => {
            let mut spec = load_spec(&spec)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let n = commands::cmd_synth(&spec, &out)?;
            println!("{n} frames written to {}", out.display());
        }
        Command::Ablate { sequences, out, cfg } => {
            let cfg = cfg.resolve()?;
            let cells = commands::cmd_ablate(&cfg, &sequences, &out)?;
            println!("test\tupdate\tauc\tps20");
            for c in cells {
                println!("{}\t{}\t{:.4}\t{:.4}", c.test, c.update, c.mean_auc, c.mean_ps20);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e) as u8)
        }
    }
}
