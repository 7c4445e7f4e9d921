use ebt_cli::commands::track_frames;
use ebt_cli::config::{CandidateSet, RunConfig, TrackerKind};
use ebt_core::eval::{synth_sequence, SynthSpec};
use ebt_core::imgio::{GroundTruth, Image};

fn fixture() -> (Vec<Image>, GroundTruth) {
    let spec = SynthSpec::from_json(include_str!("../../../specs/fixture-30.json")).unwrap();
    synth_sequence(&spec).unwrap()
}

#[test]
fn default_config_follows_the_fixture() {
    let (frames, gt) = fixture();
    let (r, pipe) = track_frames(&RunConfig::default(), &frames, gt[0].unwrap(), Some(&gt)).unwrap();
    let last = r.trajectory.last().unwrap().bbox;
    assert!(last.iou(&gt[29].unwrap()) > 0.5, "final box {last}");
    assert_eq!(pipe.records.len(), 30);
    assert!(pipe.records.iter().all(|f| f.proposals <= 200));
}

#[test]
fn runs_are_reproducible() {
    let (frames, gt) = fixture();
    let cfg = RunConfig {
        seed: 99,
        ..RunConfig::default()
    };
    let (a, _) = track_frames(&cfg, &frames[..12], gt[0].unwrap(), None).unwrap();
    let (b, _) = track_frames(&cfg, &frames[..12], gt[0].unwrap(), None).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
}

#[test]
fn every_selector_combination_runs() {
    let (frames, gt) = fixture();
    let frames = &frames[..8];
    for test in CandidateSet::ALL {
        for update in CandidateSet::ALL {
            let cfg = RunConfig {
                test_set: test,
                update_set: update,
                local_test_step: 2,
                ..RunConfig::default()
            };
            let (r, _) = track_frames(&cfg, frames, gt[0].unwrap(), None).unwrap();
            assert_eq!(r.trajectory.len(), 8, "{test:?}/{update:?}");
        }
    }
}

#[test]
fn ncc_variant_and_ablation_switches_run() {
    let (frames, gt) = fixture();
    let frames = &frames[..8];
    for cfg in [
        RunConfig {
            tracker: TrackerKind::NccEb,
            ..RunConfig::default()
        },
        RunConfig {
            smoothness: false,
            ..RunConfig::default()
        },
        RunConfig {
            max_proposals: 100,
            ..RunConfig::default()
        },
        RunConfig {
            rerank_enabled: false,
            ..RunConfig::default()
        },
    ] {
        let (r, pipe) = track_frames(&cfg, frames, gt[0].unwrap(), None).unwrap();
        assert_eq!(r.trajectory.len(), 8);
        assert!(pipe.records.iter().all(|f| f.proposals <= cfg.max_proposals));
    }
}
