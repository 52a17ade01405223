use circreg::kde::{h_amise, ise_replicates, mise_empirical, score_sf, KernelDensity};
use circreg::{Angle, DensityModel, DirectionalKernel};

#[test]
fn consistent_at_amise_bandwidth() {
    let model = DensityModel::von_mises(0.0, 2.0);
    let k = DirectionalKernel::von_mises();
    let n = 10_000;
    let h = h_amise(score_sf(&model).unwrap(), &k, n).unwrap();
    let sample = model.sample(n, 8).unwrap();
    let est = KernelDensity::new(&k, &sample, h).unwrap();
    assert!((est.density_at(Angle::ZERO) - model.pdf(0.0)).abs() < 0.05);
}

#[test]
fn disjoint_seed_batches_agree() {
    let model = DensityModel::von_mises(0.0, 1.0);
    let k = DirectionalKernel::von_mises();
    let n = 8000;
    let h = h_amise(score_sf(&model).unwrap(), &k, n).unwrap();
    let a = ise_replicates(&model, &k, h, n, 200, 1).unwrap();
    let b = ise_replicates(&model, &k, h, n, 200, 2).unwrap();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let (ma, mb) = (mean(&a), mean(&b));
    let se = ((var(&a) + var(&b)) / 200.0).sqrt();
    assert!((ma - mb).abs() < 3.0 * se, "{ma} vs {mb}, se {se}");
    assert!((ma - mb).abs() / ma.max(mb) < 0.05, "{ma} vs {mb}");
}

#[test]
fn oversmoothing_costs_mise() {
    let model = DensityModel::von_mises(0.0, 1.0);
    let k = DirectionalKernel::von_mises();
    let n = 4000;
    let h = h_amise(score_sf(&model).unwrap(), &k, n).unwrap();
    let at_amise = mise_empirical(&model, &k, h, n, 50, 3).unwrap();
    let wide = mise_empirical(&model, &k, 2.0, n, 50, 3).unwrap();
    assert!(wide > at_amise, "{wide} <= {at_amise}");
}
