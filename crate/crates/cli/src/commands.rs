//! Subcommand implementations, independent of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ebt_core::edgemap::EdgeStructures;
use ebt_core::eval::{
    compute_curves, curves_svg, parse_trajectory, run_ope, synth_sequence, trajectory_csv, FrameOutput, MetricCurves,
    OpeResult, SynthSpec,
};
use ebt_core::imgio::{
    draw_rect, load_sequence, parse_ground_truth, read_ground_truth, read_image, write_ground_truth, write_ppm,
    BoundingBox, GroundTruth, Image,
};
use ebt_core::objectness::{proposals_csv, propose};
use ebt_core::rerank::{init_rerank, rerank_features, rerank_select};
use ebt_core::{Error, Result};

use crate::config::{CandidateSet, RunConfig, TrackerKind};
use crate::pipeline::Pipeline;

pub const MANIFEST_SCHEMA: &str = "ebt-manifest/1";
pub const GT_NAMES: [&str; 2] = ["groundtruth.txt", "groundtruth_rect.txt"];

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Ground-truth file inside a sequence directory, if any.
pub fn find_ground_truth(dir: &Path) -> Option<PathBuf> {
    GT_NAMES.iter().map(|n| dir.join(n)).find(|p| p.is_file())
}

/// Track a loaded sequence from `init`; `gt` (if any) must match in length.
pub fn track_frames(cfg: &RunConfig, frames: &[Image], init: BoundingBox, gt: Option<&GroundTruth>) -> Result<(OpeResult, Pipeline)> {
    let mut pipe = Pipeline::new(cfg.clone())?;
    let mut truth: GroundTruth = match gt {
        Some(g) => g.clone(),
        None => vec![None; frames.len()],
    };
    if truth.len() != frames.len() {
        return Err(Error::LengthMismatch {
            what: "frames vs ground truth".into(),
            left: frames.len(),
            right: truth.len(),
        });
    }
    let original = truth.first().copied().flatten();
    truth[0] = Some(init);
    let mut res = run_ope(&mut pipe, frames, &truth)?;
    truth[0] = original;
    res.curves = compute_curves(&res.boxes(), &truth)?;
    Ok((res, pipe))
}

#[derive(Serialize)]
pub struct Summary {
    pub sequence: String,
    pub tracker: String,
    pub auc: f64,
    pub ps20: f64,
    pub fps: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'static str,
    tool_version: &'static str,
    sequence: String,
    frames: usize,
    width: usize,
    height: usize,
    init: BoundingBox,
    seed: u64,
    config: &'a RunConfig,
    outputs: Vec<&'static str>,
}

pub struct TrackOptions {
    pub init: Option<BoundingBox>,
    pub ground_truth: Option<PathBuf>,
    pub overlays: bool,
}

pub struct TrackOutcome {
    pub result: OpeResult,
    pub has_ground_truth: bool,
}

fn tracker_name(cfg: &RunConfig) -> String {
    match cfg.tracker {
        TrackerKind::Ebt => "ebt",
        TrackerKind::NccEb => "ncc_eb",
    }
    .to_string()
}

/// Track one sequence directory and write trajectory, manifest, timings,
/// optional overlays, and metrics when ground truth is present.
pub fn cmd_track(cfg: &RunConfig, seq: &Path, out: &Path, opts: &TrackOptions) -> Result<TrackOutcome> {
    cfg.validate()?;
    let frames = load_sequence(seq)?;
    let gt_path = opts.ground_truth.clone().or_else(|| find_ground_truth(seq));
    let gt = match &gt_path {
        Some(p) => Some(read_ground_truth(p)?),
        None => None,
    };
    let init = match (opts.init, gt.as_ref().and_then(|g| g.first().copied().flatten())) {
        (Some(b), _) | (None, Some(b)) => b,
        (None, None) => {
            return Err(Error::GroundTruth {
                line: 1,
                reason: "no initial box: pass --init or provide ground truth".into(),
            })
        }
    };
    let (result, pipe) = track_frames(cfg, &frames, init, gt.as_ref())?;

    mkdir(out)?;
    write(&out.join("trajectory.csv"), &trajectory_csv(&result.trajectory))?;
    write(&out.join("timing.csv"), &pipe.timing_csv())?;
    let mut outputs = vec!["trajectory.csv", "timing.csv"];
    let name = seq
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some(g) = &gt {
        write(&out.join("curves.csv"), &result.curves.to_csv())?;
        write(&out.join("curves.svg"), &curves_svg(&result.curves, &name))?;
        let summary = Summary {
            sequence: name.clone(),
            tracker: tracker_name(cfg),
            auc: result.curves.auc,
            ps20: result.curves.ps20,
            fps: result.fps(),
        };
        write(&out.join("summary.json"), &serde_json::to_string_pretty(&summary).expect("summary serialises"))?;
        outputs.extend(["curves.csv", "curves.svg", "summary.json"]);
        if opts.overlays {
            write_overlays(&out.join("overlays"), &frames, &result.trajectory, Some(g))?;
            outputs.push("overlays/");
        }
    } else if opts.overlays {
        write_overlays(&out.join("overlays"), &frames, &result.trajectory, None)?;
        outputs.push("overlays/");
    }
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        sequence: name,
        frames: frames.len(),
        width: frames[0].width(),
        height: frames[0].height(),
        init,
        seed: cfg.seed,
        config: cfg,
        outputs,
    };
    write(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serialises"))?;
    Ok(TrackOutcome {
        result,
        has_ground_truth: gt.is_some(),
    })
}

fn write_overlays(dir: &Path, frames: &[Image], traj: &[FrameOutput], gt: Option<&GroundTruth>) -> Result<()> {
    mkdir(dir)?;
    for (i, (f, t)) in frames.iter().zip(traj).enumerate() {
        let mut img = f.to_rgb();
        if let Some(Some(g)) = gt.map(|g| g[i]) {
            draw_rect(&mut img, &g, [0, 220, 0], 1);
        }
        draw_rect(&mut img, &t.bbox, [230, 20, 20], 2);
        write_ppm(&dir.join(format!("{:04}.ppm", i + 1)), &img)?;
    }
    Ok(())
}

/// Read a trajectory CSV, or a ground-truth style file as a fallback.
pub fn read_trajectory(path: &Path) -> Result<Vec<BoundingBox>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim_start().starts_with("frame,") {
        return Ok(parse_trajectory(&text)?.into_iter().map(|f| f.bbox).collect());
    }
    let gt = parse_ground_truth(&text)?;
    gt.into_iter()
        .enumerate()
        .map(|(i, b)| {
            b.ok_or_else(|| Error::GroundTruth {
                line: i + 1,
                reason: "trajectory rows must hold a box".into(),
            })
        })
        .collect()
}

#[derive(Serialize)]
pub struct EvalReport {
    pub sequences: Vec<EvalEntry>,
    pub mean_auc: f64,
    pub mean_ps20: f64,
}

#[derive(Serialize)]
pub struct EvalEntry {
    pub name: String,
    pub auc: f64,
    pub ps20: f64,
    #[serde(skip)]
    pub curves: MetricCurves,
}

/// Metrics for each (trajectory, ground truth) pair and their unweighted mean.
pub fn cmd_eval(pairs: &[(PathBuf, PathBuf)], out: Option<&Path>) -> Result<EvalReport> {
    let mut entries = Vec::new();
    for (tp, gp) in pairs {
        let traj = read_trajectory(tp)?;
        let gt = read_ground_truth(gp)?;
        let curves = compute_curves(&traj, &gt).map_err(|e| match e {
            Error::LengthMismatch { left, right, .. } => Error::LengthMismatch {
                what: format!("{} vs {}", tp.display(), gp.display()),
                left,
                right,
            },
            other => other,
        })?;
        let name = tp
            .parent()
            .and_then(|p| p.file_name())
            .or_else(|| tp.file_stem())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        entries.push(EvalEntry {
            name,
            auc: curves.auc,
            ps20: curves.ps20,
            curves,
        });
    }
    let n = entries.len().max(1) as f64;
    let report = EvalReport {
        mean_auc: entries.iter().map(|e| e.auc).sum::<f64>() / n,
        mean_ps20: entries.iter().map(|e| e.ps20).sum::<f64>() / n,
        sequences: entries,
    };
    if let Some(out) = out {
        mkdir(out)?;
        for (i, e) in report.sequences.iter().enumerate() {
            let stem = format!("{:02}_{}", i, e.name);
            write(&out.join(format!("{stem}_curves.csv")), &e.curves.to_csv())?;
            write(&out.join(format!("{stem}_curves.svg")), &curves_svg(&e.curves, &e.name))?;
        }
        write(&out.join("summary.json"), &serde_json::to_string_pretty(&report).expect("report serialises"))?;
    }
    Ok(report)
}

pub struct ProposeOutcome {
    pub pool: usize,
    pub selected: usize,
}

/// Proposal debugging view of one frame: the thresholded pool, the
/// re-ranked selection with its features, and an overlay.
pub fn cmd_propose(cfg: &RunConfig, frame: &Path, prev: BoundingBox, out: &Path) -> Result<ProposeOutcome> {
    cfg.validate()?;
    let img = read_image(frame)?;
    let es = EdgeStructures::build(&img, &cfg.edges());
    let pcfg = cfg.proposal();
    let pool = propose(&es, &prev, &pcfg);
    let selection = if cfg.rerank_enabled {
        let model = init_rerank(&prev, &pool, &es, pcfg.kappa, &cfg.rerank());
        rerank_select(&pool, &model, &es, pcfg.kappa, pcfg.max_proposals)
    } else {
        pool.iter().take(pcfg.max_proposals).copied().collect()
    };
    let boxes: Vec<BoundingBox> = selection.iter().map(|s| s.bbox).collect();
    let feats = rerank_features(&boxes, &es, pcfg.kappa);
    let mut sel = String::from("rank,x,y,w,h,objectness,rerank");
    for i in 1..=10 {
        sel.push_str(&format!(",f{i}"));
    }
    sel.push('\n');
    for (r, (s, f)) in selection.iter().zip(&feats).enumerate() {
        sel.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6}",
            r + 1,
            s.bbox.x,
            s.bbox.y,
            s.bbox.w,
            s.bbox.h,
            s.objectness,
            s.rerank_score
        ));
        for v in f {
            sel.push_str(&format!(",{v:.6}"));
        }
        sel.push('\n');
    }
    mkdir(out)?;
    write(&out.join("pool.csv"), &proposals_csv(&pool))?;
    write(&out.join("proposals.csv"), &sel)?;
    let mut overlay = img.to_rgb();
    for s in selection.iter().take(10).rev() {
        draw_rect(&mut overlay, &s.bbox, [240, 200, 0], 1);
    }
    draw_rect(&mut overlay, &prev, [0, 200, 255], 1);
    if let Some(top) = selection.first() {
        draw_rect(&mut overlay, &top.bbox, [230, 20, 20], 2);
    }
    write_ppm(&out.join("overlay.ppm"), &overlay)?;
    es.write_edge_pgm(&out.join("edges.pgm"))?;
    Ok(ProposeOutcome {
        pool: pool.len(),
        selected: selection.len(),
    })
}

/// Materialise a synthetic spec as `0001.ppm, ...` plus `groundtruth.txt`.
pub fn cmd_synth(spec: &SynthSpec, out: &Path) -> Result<usize> {
    let (frames, gt) = synth_sequence(spec)?;
    mkdir(out)?;
    for (i, f) in frames.iter().enumerate() {
        write_ppm(&out.join(format!("{:04}.ppm", i + 1)), f)?;
    }
    write_ground_truth(&out.join("groundtruth.txt"), &gt)?;
    write(&out.join("spec.json"), &spec.to_json())?;
    Ok(frames.len())
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationCell {
    pub test: &'static str,
    pub update: &'static str,
    pub mean_auc: f64,
    pub mean_ps20: f64,
}

/// Every test-set by update-set combination over the given sequences.
pub fn cmd_ablate(cfg: &RunConfig, seqs: &[PathBuf], out: &Path) -> Result<Vec<AblationCell>> {
    cfg.validate()?;
    let mut loaded = Vec::new();
    for s in seqs {
        let frames = load_sequence(s)?;
        let gp = find_ground_truth(s).ok_or_else(|| Error::GroundTruth {
            line: 0,
            reason: format!("no ground truth in {}", s.display()),
        })?;
        let gt = read_ground_truth(&gp)?;
        loaded.push((frames, gt));
    }
    let mut cells = Vec::new();
    for test in CandidateSet::ALL {
        for update in CandidateSet::ALL {
            let c = RunConfig {
                test_set: test,
                update_set: update,
                ..cfg.clone()
            };
            let mut aucs = Vec::new();
            let mut ps = Vec::new();
            for (frames, gt) in &loaded {
                let init = gt[0].ok_or_else(|| Error::GroundTruth {
                    line: 1,
                    reason: "first frame has no box".into(),
                })?;
                let (r, _) = track_frames(&c, frames, init, Some(gt))?;
                aucs.push(r.curves.auc);
                ps.push(r.curves.ps20);
            }
            let n = aucs.len().max(1) as f64;
            cells.push(AblationCell {
                test: test.label(),
                update: update.label(),
                mean_auc: aucs.iter().sum::<f64>() / n,
                mean_ps20: ps.iter().sum::<f64>() / n,
            });
        }
    }
    mkdir(out)?;
    let mut csv = String::from("test,update,mean_auc,mean_ps20\n");
    for c in &cells {
        csv.push_str(&format!("{},{},{:.6},{:.6}\n", c.test, c.update, c.mean_auc, c.mean_ps20));
    }
    write(&out.join("ablation.csv"), &csv)?;
    Ok(cells)
}

/// Process exit status for an error: 2 configuration, 3 data, 4 runtime.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Synth { .. } => 2,
        Error::Frame { .. } => 4,
        _ => 3,
    }
}
