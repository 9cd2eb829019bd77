use proptest::prelude::*;
use qfad_core::detector::{
    classify, compute_metrics, fit_threshold, metrics_from_confusion, write_summary,
    write_windows, Averaging, Confusion, DetectionReport, WindowResult, SUMMARY_HEADER,
};
use qfad_core::nettsim::Label;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn threshold_examples() {
    let t = fit_threshold(&[0.9, 0.9, 0.9]).unwrap();
    assert!(close(t.mu, 0.9) && t.sigma == 0.0 && t.tau == t.mu);
    let t = fit_threshold(&[1.0, 0.9]).unwrap();
    assert!(close(t.mu, 0.95) && close(t.sigma, 0.05) && close(t.tau, 0.75));
    assert!(fit_threshold(&[]).is_err());
}

#[test]
fn threshold_from_normal_draws() {
    // tau estimates 0.98 - 4 * 0.005 = 0.96; its sd at n = 1000 is about 4.6e-4,
    // so [0.955, 0.965] sits more than ten sds out on each side.
    let dist = Normal::new(0.98, 0.005).unwrap();
    let mut misses = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..1000).map(|_| dist.sample(&mut rng)).collect();
        let t = fit_threshold(&draws).unwrap();
        if !(0.955..=0.965).contains(&t.tau) {
            misses += 1;
        }
    }
    assert!(misses <= 2, "{misses} of 200 outside the interval");
}

#[test]
fn boundary_is_normal() {
    let t = fit_threshold(&[0.8, 0.9, 1.0]).unwrap();
    let below = t.tau - 1e-12;
    assert_eq!(classify(&[t.tau, below], &t), vec![Label::Normal, Label::Attack]);
    let flat = fit_threshold(&[0.7; 4]).unwrap();
    assert_eq!(
        classify(&[0.7, 0.69999, 0.71], &flat),
        vec![Label::Normal, Label::Attack, Label::Normal]
    );
}

#[test]
fn hand_computed_weighted_metrics() {
    let c = Confusion { tp: 45, fp: 2, fn_: 3, tn: 250 };
    let m = metrics_from_confusion(&c, Averaging::Weighted).unwrap();
    // exact-fraction arithmetic done by hand: per-class ratios weighted by 48/300 and 252/300
    assert!(close(m.accuracy, 0.9833333333333333));
    assert!(close(m.precision, 0.9832310150534017));
    assert!(close(m.recall, 0.9833333333333333));
    assert!(close(m.f1, 0.9832621156852528));
    let m = metrics_from_confusion(&c, Averaging::Macro).unwrap();
    assert!(close(m.precision, 0.9727945505003784));
    assert!(close(m.recall, 0.964781746031746));
    assert!(close(m.f1, 0.9687337154768109));
}

#[test]
fn perfect_and_all_normal_predictions() {
    use Label::*;
    let truth = [Normal, Attack, Normal, Attack, Normal];
    let m = compute_metrics(&truth, &truth).unwrap();
    assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    let m = compute_metrics(&[Normal; 5], &truth).unwrap();
    // attack class contributes zero; normal class has p = 3/5, r = 1, support 3/5
    assert!(close(m.accuracy, 0.6));
    assert!(close(m.recall, 0.6));
    assert!(close(m.precision, 0.36));
    assert!(close(m.f1, 0.6 * 0.75));
    assert!(compute_metrics(&[Normal], &truth).is_err());
}

fn windows(fids: &[f64], truth: &[bool]) -> Vec<WindowResult> {
    fids.iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (&f, &a))| WindowResult {
            session: "test_I".into(),
            window_start: i,
            fidelity: f,
            predicted: Label::Normal,
            truth: if a { Label::Attack } else { Label::Normal },
        })
        .collect()
}

#[test]
fn report_csvs_have_expected_shape() {
    let t = fit_threshold(&[0.95, 0.96, 0.97]).unwrap();
    let r = DetectionReport::build("R1", "fedavg", windows(&[0.99, 0.1, 0.97], &[false, true, false]), &t, Averaging::Weighted).unwrap();
    let mut buf = Vec::new();
    write_windows(&mut buf, &r).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(2).unwrap().starts_with("R1,fedavg,test_I,1,"));
    let mut buf = Vec::new();
    write_summary(&mut buf, &[r]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
    assert!(text.lines().nth(1).unwrap().ends_with(",1,0,0,2"));
}

proptest! {
    #[test]
    fn tau_identity_holds(vals in prop::collection::vec(0.0f64..1.0, 1..200)) {
        let t = fit_threshold(&vals).unwrap();
        prop_assert_eq!(t.tau, t.mu - 4.0 * t.sigma);
        prop_assert!(t.sigma >= 0.0);
        prop_assert_eq!(t.num_validation_samples, vals.len());
    }

    #[test]
    fn lowering_fidelity_never_clears_an_alarm(vals in prop::collection::vec(0.0f64..1.0, 2..50), f in 0.0f64..1.0, drop in 0.0f64..1.0) {
        let t = fit_threshold(&vals).unwrap();
        if t.classify_one(f) == Label::Attack {
            prop_assert_eq!(t.classify_one(f - drop), Label::Attack);
        }
    }

    #[test]
    fn report_metrics_recompute_from_counts(
        fids in prop::collection::vec(0.0f64..1.0, 1..80),
        truth_bits in prop::collection::vec(any::<bool>(), 80),
        macro_avg in any::<bool>(),
    ) {
        let averaging = if macro_avg { Averaging::Macro } else { Averaging::Weighted };
        let t = fit_threshold(&[0.5, 0.6, 0.7]).unwrap();
        let r = DetectionReport::build("R2", "hierarchical", windows(&fids, &truth_bits[..fids.len()]), &t, averaging).unwrap();
        prop_assert_eq!(r.confusion.total(), fids.len());
        prop_assert_eq!(metrics_from_confusion(&r.confusion, averaging).unwrap(), r.metrics);
        for m in [r.metrics.accuracy, r.metrics.precision, r.metrics.recall, r.metrics.f1] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
        }
        for w in &r.per_window {
            prop_assert_eq!(w.predicted, t.classify_one(w.fidelity));
        }
    }
}
