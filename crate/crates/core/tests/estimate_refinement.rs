use maxrep::estimate;

/// Grids of 16 and 64 slopes agree once both use the same exact depth.
#[test]
fn grid_refinement_is_stable() {
    let n_exact = 40;
    let coarse = estimate::estimate_d(16, &estimate::grid_records(16, n_exact).unwrap()).unwrap();
    let fine = estimate::estimate_d(64, &estimate::grid_records(64, n_exact).unwrap()).unwrap();
    let (lo, hi) = estimate::sandwich();
    for e in [&coarse, &fine] {
        assert!(e.lower >= lo && e.upper <= hi, "{} {}", e.lower, e.upper);
        assert!(e.lower <= e.value && e.value <= e.upper);
    }
    assert!((coarse.value - fine.value).abs() <= 0.05, "{} vs {}", coarse.value, fine.value);
}
