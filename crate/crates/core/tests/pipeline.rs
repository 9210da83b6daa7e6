mod common;

use rand::seq::SliceRandom;
use slipcal::balance::{Finger, Label, Material, Recording};
use slipcal::eval::{
    balanced_split, evaluate, exclusion_sweep, predictions, sweep_sampling_rates, sweep_window_sizes, transfer_matrix,
    EvalConfig, EvalError, ExclusionAxis, COMBINED,
};
use slipcal::io::{format_dataset, format_eval_report, parse_dataset};
use slipcal::lstm::{train, TrainConfig};
use slipcal::seed::rng_for;
use slipcal::synth::{default_profiles, generate_corpus, SensorProfile, SynthConfig};

use common::corpus;

fn quick() -> EvalConfig {
    EvalConfig {
        window_size: 50,
        train: TrainConfig {
            lr_schedule: vec![0.01],
            max_epochs_per_stage: 2,
            ..TrainConfig::default()
        },
    }
}

fn small(seed: u64) -> Vec<Recording> {
    corpus(0.5, &[SensorProfile::new("s0", Finger::Index, 1.0)], seed)
}

#[test]
fn permuting_test_windows_changes_no_prediction() {
    let recs = small(1);
    let (tr, te) = balanced_split(&recs, 50, 1, &[]).unwrap();
    let (model, _) = train::<f64>(&tr, &quick().train).unwrap();
    let base = predictions(&model, &te.windows);
    let mut order: Vec<usize> = (0..te.len()).collect();
    order.shuffle(&mut rng_for(1, "perm", &[]));
    let shuffled: Vec<_> = order.iter().map(|&i| te.windows[i].clone()).collect();
    let p = predictions(&model, &shuffled);
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(p[k], base[i]);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let run = || {
        let recs = small(3);
        let (tr, te) = balanced_split(&recs, 50, 3, &[]).unwrap();
        let cfg = TrainConfig { seed: 3, ..quick().train };
        let (model, _) = train::<f64>(&tr, &cfg).unwrap();
        let r = evaluate(&model, &te).unwrap();
        (format_dataset(&te, 0), format_eval_report(&r, 3, cfg.fingerprint()))
    };
    assert_eq!(run(), run());
}

#[test]
fn dataset_text_survives_a_round_trip_into_training() {
    let recs = small(4);
    let (tr, _) = balanced_split(&recs, 50, 4, &[]).unwrap();
    let text = format_dataset(&tr, 0);
    let back = parse_dataset(text.as_bytes(), "mem").unwrap();
    assert_eq!(back.windows, tr.windows);
    let a = train::<f64>(&tr, &quick().train).unwrap().0;
    let b = train::<f64>(&back, &quick().train).unwrap().0;
    assert_eq!(a.params, b.params);
}

#[test]
fn exclusion_needs_two_levels() {
    let one = vec![default_profiles().remove(0)];
    let recs = generate_corpus(&one, &SynthConfig::default(), 0.5, &[SensorProfile::new("s0", Finger::Index, 1.0)], 5)
        .unwrap();
    let err = exclusion_sweep(&recs, ExclusionAxis::Material, &quick(), 5).unwrap_err();
    assert!(matches!(err, EvalError::Precondition(_)), "{err}");
}

#[test]
fn material_exclusion_reports_both_variants_per_level() {
    let two: Vec<_> = default_profiles()
        .into_iter()
        .filter(|p| matches!(p.material, Material::Aluminum | Material::Pvc))
        .collect();
    let recs = generate_corpus(&two, &SynthConfig::default(), 0.5, &[SensorProfile::new("s0", Finger::Index, 1.0)], 6)
        .unwrap();
    let r = exclusion_sweep(&recs, ExclusionAxis::Material, &quick(), 6).unwrap();
    assert_eq!(r.rows.len(), 4);
    for m in ["aluminum", "pvc"] {
        for v in ["included", "excluded"] {
            let row = r.row(m, v).unwrap_or_else(|| panic!("{m}/{v} missing"));
            let c = row.report.confusion;
            assert_eq!(c.tp + c.fn_, c.tn + c.fp, "{m}/{v} pool is unbalanced");
        }
    }
}

#[test]
fn single_sensor_transfer_is_one_by_one() {
    let r = transfer_matrix(&small(7), &quick(), 7).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.row("s0", "s0").is_some());
    assert!(r.row(COMBINED, "s0").is_none());
}

#[test]
fn two_sensor_transfer_adds_a_combined_source() {
    let sensors = [SensorProfile::new("a", Finger::Index, 1.0), SensorProfile::new("b", Finger::Middle, 1.2)];
    let recs = corpus(0.5, &sensors, 8);
    let r = transfer_matrix(&recs, &quick(), 8).unwrap();
    assert_eq!(r.rows.len(), 9);
    let combined = &r.row(COMBINED, COMBINED).unwrap().report;
    let a = &r.row("a", "a").unwrap().report;
    assert_eq!(combined.confusion.total(), 2 * a.confusion.total());
}

#[test]
fn single_setting_sweeps_have_one_row() {
    let recs = small(9);
    let w = sweep_window_sizes(&recs, &[50], &quick(), 9).unwrap();
    assert_eq!(w.rows.len(), 1);
    assert_eq!(w.rows[0].setting, "50");
    let r = sweep_sampling_rates(&recs, &[4], 200, &quick(), 9).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].setting, "250");
    assert_eq!(r.rows[0].variant, "x4");
}

#[test]
fn window_rows_are_independent_of_their_neighbours() {
    let recs = small(10);
    let alone = sweep_window_sizes(&recs, &[25], &quick(), 10).unwrap();
    let mixed = sweep_window_sizes(&recs, &[50, 25], &quick(), 10).unwrap();
    assert_eq!(alone.row("25", "lstm").unwrap().report, mixed.row("25", "lstm").unwrap().report);
    assert_eq!(mixed.rows[0].setting, "25");
}

#[test]
fn halves_split_every_cell_within_one_window() {
    let (tr, te) = balanced_split(&small(11), 50, 11, &[]).unwrap();
    assert_eq!(tr.ledger.keys().collect::<Vec<_>>(), te.ledger.keys().collect::<Vec<_>>());
    for (cell, &n_test) in &te.ledger {
        let n_train = tr.ledger[cell];
        assert!(n_train == n_test || n_train == n_test + 1, "{cell}: {n_train} vs {n_test}");
    }
    let gap = te.count(Label::Slip).abs_diff(te.count(Label::NonSlip));
    assert!(gap <= te.ledger.len(), "{gap}");
}
