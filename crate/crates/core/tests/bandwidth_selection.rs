use circreg::bandwidth::{cv_bandwidth_frechet, plugin_bandwidth, BandwidthGrid, Estimator};
use circreg::frechet_lc::lc_estimate;
use circreg::frechet_ll::ll_estimate;
use circreg::{Angle, CircularSample, DensityModel, DirectionalKernel, PairedSample, RegressionModel};

#[test]
fn plugin_halves_when_sample_grows_thirtytwofold() {
    let k = DirectionalKernel::von_mises();
    let m = DensityModel::von_mises(0.0, 1.0);
    let small = plugin_bandwidth(&m.sample(4000, 31).unwrap(), &k, None).unwrap().h;
    let large = plugin_bandwidth(&m.sample(128_000, 32).unwrap(), &k, None).unwrap().h;
    let ratio = large / small;
    assert!((ratio - 0.5).abs() < 0.5 * 0.15, "ratio {ratio}");
}

#[test]
fn plugin_on_near_uniform_data_errors_or_flags() {
    let k = DirectionalKernel::von_mises();
    let s = DensityModel::von_mises(0.0, 0.01).sample(500, 33).unwrap();
    match plugin_bandwidth(&s, &k, None) {
        Ok(p) => assert!(p.large, "near-uniform plug-in h = {} score = {}", p.h, p.score),
        Err(e) => assert_eq!(e.name(), "degenerate-curvature"),
    }
}

#[test]
fn cv_selects_interior_bandwidth_for_sine_model() {
    let m = RegressionModel::sine(1.0, 0.3);
    let s = m.sample(1000, 34).unwrap();
    let g: BandwidthGrid = "0.05:1.5:20log".parse().unwrap();
    let k = DirectionalKernel::von_mises();
    for est in [Estimator::LocalConstant, Estimator::LocalLinear] {
        let sel = cv_bandwidth_frechet(&m.space(), &s, &k, &g, est, None).unwrap();
        let first = g.values()[0];
        let last = *g.values().last().unwrap();
        assert!(sel.selected_h > first && sel.selected_h < last, "{est:?} picked {}", sel.selected_h);
        let best = sel.scores.iter().find(|s| s.h == sel.selected_h).unwrap().cv;
        assert!(sel.scores.iter().all(|s| best <= s.cv));
    }
}

#[test]
fn duplicated_data_gives_identical_estimates() {
    let m = RegressionModel::sine(1.0, 0.3);
    let s = m.sample(200, 35).unwrap();
    let mut xs = s.predictors().angles().to_vec();
    xs.extend_from_slice(s.predictors().angles());
    let mut ys = s.responses().to_vec();
    ys.extend_from_slice(s.responses());
    let doubled = PairedSample::new(CircularSample::new(xs), ys).unwrap();
    let k = DirectionalKernel::von_mises();
    let sp = m.space();
    for q in 0..16 {
        let x = Angle::new(-3.0 + 0.37 * q as f64);
        for h in [0.1, 0.4, 1.0] {
            let a = lc_estimate(&sp, &s, &k, h, x).unwrap().minimizer.as_scalar().unwrap();
            let b = lc_estimate(&sp, &doubled, &k, h, x).unwrap().minimizer.as_scalar().unwrap();
            assert!((a - b).abs() < 1e-12);
            let a = ll_estimate(&sp, &s, &k, h, x).unwrap().minimizer.as_scalar().unwrap();
            let b = ll_estimate(&sp, &doubled, &k, h, x).unwrap().minimizer.as_scalar().unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }
}
