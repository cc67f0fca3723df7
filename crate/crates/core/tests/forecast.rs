use proptest::prelude::*;
use thermoreg_core::forecast::eval::{correction_study, evaluate_pipeline, forecast_bias, forecast_rmse, ErrorProcess, PipelineConfig};
use thermoreg_core::forecast::{correct_forecast, examples, predict_horizon, retrain_online, train_mlp, DemandRecord, FeatureVector, ForecastErrorStore, TrainConfig, STEPS_PER_DAY, STEPS_PER_WEEK};
use thermoreg_core::plant::{gen_demand_profile, DemandConfig};

const DAY: usize = STEPS_PER_DAY;
const WEEK: usize = STEPS_PER_WEEK;

fn corpus(seed: u64, days: usize) -> Vec<DemandRecord> {
    let cfg = DemandConfig { noise_std: 0.3, ..DemandConfig::default() };
    gen_demand_profile(seed, days, &cfg).to_records()
}

fn fit(records: &[DemandRecord], end: usize) -> thermoreg_core::forecast::MlpModel {
    train_mlp(&examples(records, WEEK, end).unwrap(), &TrainConfig::default()).unwrap().0
}

#[test]
fn smooth_corpus_held_out_day() {
    let rec = corpus(11, 16);
    let model = fit(&rec, 15 * DAY);
    let rmse = forecast_rmse(&model, &rec, 15 * DAY, 16 * DAY).unwrap();
    let day = &rec[15 * DAY..];
    let mean = day.iter().map(|r| r.demand_kw).sum::<f64>() / DAY as f64;

    assert!(rmse / mean < 0.15, "normalized rmse {}", rmse / mean);
}

#[test]
fn retraining_tracks_a_level_shift() {
    let mut rec = corpus(12, 17);
    let model = fit(&rec, 14 * DAY);
    for r in &mut rec[15 * DAY..] {
        r.demand_kw += 10.0;
    }
    let before = forecast_bias(&model, &rec, 16 * DAY, 17 * DAY).unwrap();
    let day = examples(&rec, 15 * DAY, 16 * DAY).unwrap();
    let after_model = retrain_online(&model, &day, &TrainConfig::default()).unwrap();
    let after = forecast_bias(&after_model, &rec, 16 * DAY, 17 * DAY).unwrap();

    assert!(after.abs() < 0.5 * before.abs());
}

#[test]
fn retraining_without_shift_is_harmless() {
    let rec = corpus(13, 17);
    let model = fit(&rec, 15 * DAY);
    let before = forecast_rmse(&model, &rec, 16 * DAY, 17 * DAY).unwrap();
    let day = examples(&rec, 15 * DAY, 16 * DAY).unwrap();
    let after = forecast_rmse(&retrain_online(&model, &day, &TrainConfig::default()).unwrap(), &rec, 16 * DAY, 17 * DAY).unwrap();

    assert!(after <= 1.1 * before);
}

/// Bit-exact predictions for a fixed corpus and seed. Set
/// `THERMOREG_BLESS=1` to rewrite the snapshot after an intended change.
#[test]
fn predictions_match_snapshot() {
    let rec = corpus(11, 16);
    let model = fit(&rec, 15 * DAY);
    let feats: Vec<FeatureVector> = (15 * DAY..16 * DAY).map(|i| FeatureVector::at(&rec, i).unwrap()).collect();
    let got: String = predict_horizon(&model, &feats).iter().map(|v| format!("{:016x}\n", v.to_bits())).collect();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/forecast_snapshot.txt");
    if std::env::var_os("THERMOREG_BLESS").is_some() {
        std::fs::write(path, &got).unwrap();
    }
    let want = std::fs::read_to_string(path).expect("snapshot missing; run with THERMOREG_BLESS=1");
    assert_eq!(got, want);
}

#[test]
fn horizon_shrinks_through_the_day() {
    let rec = corpus(14, 15);
    let model = fit(&rec, 14 * DAY);
    for kappa in [1, 50, 96] {
        let feats: Vec<FeatureVector> = (14 * DAY + kappa - 1..15 * DAY).map(|i| FeatureVector::at(&rec, i).unwrap()).collect();
        assert_eq!(predict_horizon(&model, &feats).len(), DAY + 1 - kappa);
    }
    let f = FeatureVector::at(&rec, 14 * DAY).unwrap();
    let p = predict_horizon(&model, &[f; 5]);
    assert!(p.iter().all(|&v| v == p[0] && v >= 0.0));
}

#[test]
fn training_is_seed_deterministic() {
    let rec = corpus(15, 14);
    let data = examples(&rec, WEEK, 14 * DAY).unwrap();
    let a = train_mlp(&data, &TrainConfig::default()).unwrap().0;
    let b = train_mlp(&data, &TrainConfig::default()).unwrap().0;
    assert_eq!(a.to_bytes(), b.to_bytes());
    let c = train_mlp(&data, &TrainConfig { seed: 1, ..TrainConfig::default() }).unwrap().0;
    assert_ne!(a.to_bytes(), c.to_bytes());
}

#[test]
fn correction_study_on_ar1_and_white_errors() {
    let ar = correction_study(ErrorProcess::Ar1 { coeff: 0.8, std: 1.5 }, 1000, DAY, 4 * WEEK, 21);
    assert!(ar.corrected_rmse[0] < ar.raw_rmse[0]);
    let wn = correction_study(ErrorProcess::White { std: 1.5 }, 1000, DAY, 4 * WEEK, 22);
    for k in 0..DAY {
        assert!((wn.corrected_rmse[k] / wn.raw_rmse[k] - 1.0).abs() < 0.05, "lead {}", k + 1);
    }
}

#[test]
fn pipeline_on_constant_demand_is_nearly_exact() {
    let rec = gen_demand_profile(0, 17, &DemandConfig::flat(25.0)).to_records();
    let rep = evaluate_pipeline(&rec, &PipelineConfig::default()).unwrap();
    assert_eq!(rep.leads.len(), DAY);
    for l in &rep.leads {
        for v in [l.raw_rmse, l.corrected_rmse, l.retrained_rmse] {
            assert!(v / rep.demand_scale < 0.05, "lead {} rmse {v}", l.lead);
        }
    }
}

#[test]
fn pipeline_correction_helps_the_first_lead() {
    let cfg = DemandConfig { noise_std: 1.5, noise_coeff: 0.9, ..DemandConfig::default() };
    let rec = gen_demand_profile(3, 18, &cfg).to_records();
    let rep = evaluate_pipeline(&rec, &PipelineConfig::default()).unwrap();
    let first = rep.leads[0];
    assert_eq!(first.count, 4 * DAY);
    assert!(first.corrected_rmse < first.raw_rmse);
    assert_eq!(rep.leads[DAY - 1].count, 4);
}

proptest! {
    #[test]
    fn correction_is_linear_before_clamping(
        errors in prop::collection::vec(-3.0f64..3.0, 10..60),
        raw in prop::collection::vec(20.0f64..40.0, 1..8),
        e in -5.0f64..5.0,
    ) {
        let store = ForecastErrorStore::from_errors(8, errors);
        let out = correct_forecast(&raw, e, &store);
        for k in 0..raw.len() {
            prop_assert!((out[k] - raw[k] - e * store.table()[k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn store_appends_without_rewriting(errors in prop::collection::vec(-3.0f64..3.0, 0..40), extra in -3.0f64..3.0) {
        let mut store = ForecastErrorStore::from_errors(4, errors.clone());
        store.push(extra);
        prop_assert_eq!(&store.errors()[..errors.len()], &errors[..]);
    }
}
