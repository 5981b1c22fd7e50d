use qcascade::analysis::*;
use proptest::prelude::*;
use qcascade::numerics::RandomStream;

fn peak(g2: f64, background: f64) -> SyntheticPeak {
    SyntheticPeak { t0_ps: 0.0, sigma_ps: 57.64, background, g2_zero: g2, bin_ps: 4.0, half_span_ps: 2000.0 }
}

#[test]
fn reported_errors_match_the_scatter() {
    let p = peak(1.77, 20.0);
    let window = WindowSpec::from_peak_width(57.64, WINDOW_EDGE_GHZ).unwrap();
    let mut values = Vec::new();
    let mut errs = Vec::new();
    for k in 0..300 {
        let d = p.sample(&mut RandomStream::new(5, k).rng()).unwrap();
        let e = extract_g2_zero(&fourier_noise_filter(&d, &window).unwrap(), 0.0, 57.64).unwrap();
        values.push(e.g2_zero);
        errs.push(e.err);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let err = errs.iter().sum::<f64>() / n;
    assert!((mean - 1.77).abs() < 3.0 * sd / n.sqrt());
    assert!((err / sd - 1.0).abs() < 0.2, "{err} vs {sd}");
}

#[test]
fn red_detuned_trace_is_recovered_with_its_quoted_precision() {
    // About 37 background coincidences per 4 ps bin gives a ±0.05 error at g2(0) = 1.77.
    let p = peak(1.77, 37.0);
    let d = p.sample(&mut RandomStream::new(2024, 0).rng()).unwrap();
    let out = analyze(&[d], &AnalysisOptions::default()).unwrap();
    let r = &out.report;
    assert!((r.g2_zero - 1.77).abs() < 3.0 * r.err, "{} ± {}", r.g2_zero, r.err);
    assert!(r.err > 0.04 && r.err < 0.06, "{}", r.err);
    assert!((r.sigma_ps - 57.64).abs() < 3.0 * r.calibration.sigma_err_ps.max(1.0));
}

#[test]
fn noise_free_peak_passes_through_the_pipeline() {
    let d = peak(2.0, 20.0).expected().unwrap();
    let out = analyze(&[d], &AnalysisOptions::default()).unwrap();
    let r = &out.report;
    assert!(r.t0_ps.abs() < 1e-6);
    assert!((r.sigma_ps - 57.64).abs() / 57.64 < 0.01);
    // The window trims the far tail of the peak spectrum.
    assert!((r.g2_zero - 2.0).abs() < 0.01, "{}", r.g2_zero);
    let dec = &r.datasets[0].deconvolved;
    assert!(dec.relative_change > 0.0 && dec.relative_change < 0.01);
}

#[test]
fn summed_calibration_uses_every_dataset() {
    let sets: Vec<_> = (0..3)
        .map(|k| peak(1.5 + 0.2 * k as f64, 30.0).sample(&mut RandomStream::new(9, k).rng()).unwrap())
        .collect();
    let out = analyze(&sets, &AnalysisOptions::default()).unwrap();
    assert_eq!(out.report.datasets.len(), 3);
    assert_eq!(out.filtered.len(), 3);
    for (k, d) in out.report.datasets.iter().enumerate() {
        let truth = 1.5 + 0.2 * k as f64;
        assert!((d.estimate.g2_zero - truth).abs() < 3.5 * d.estimate.err, "{k}: {:?}", d.estimate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn g2_is_invariant_under_rescaling(scale in 0.01f64..100.0, seed in 0u64..1000) {
        let d = peak(1.6, 25.0).sample(&mut RandomStream::new(seed, 1).rng()).unwrap();
        let window = WindowSpec::from_peak_width(57.64, WINDOW_EDGE_GHZ).unwrap();
        let f = fourier_noise_filter(&d, &window).unwrap();
        let a = extract_g2_zero(&f, 0.0, 57.64).unwrap();
        let b = extract_g2_zero(&f.scaled(scale).unwrap(), 0.0, 57.64).unwrap();
        prop_assert!((a.g2_zero - b.g2_zero).abs() < 1e-7);
        prop_assert!((a.err - b.err).abs() < 1e-6 * a.err.max(1e-3));
    }
}
