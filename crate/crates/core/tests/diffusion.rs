use sdgc_core::channel::mmse_equalize;
use sdgc_core::diffusion::{
    psd_denoise, sample_unconditional, sd_denoise, train_eps, EpsTrainConfig, GaussianMixture,
    GuidanceWeights, NoiseEstimator, NoiseSchedule, RegParams,
};
use sdgc_core::ndnet::{Activation, MlpModel, SgdConfig};
use sdgc_core::rng::{normal, normal_vec, rng_from_seed, Rng};

#[test]
fn schedule_invariants() {
    let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
    assert_eq!(s.beta(1), 1e-4);
    assert_eq!(s.beta(1000), 0.02);
    for t in 1..=1000 {
        assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
        assert_eq!(s.alpha(t), 1.0 - s.beta(t));
    }
    assert!(s.alpha_bar(1000) < 1e-4);
    // ᾱ_t is the running product of α.
    let mut prod = 1.0;
    for t in 1..=1000 {
        prod *= 1.0 - s.beta(t);
        assert!((s.alpha_bar(t) - prod).abs() <= 1e-15 * prod.max(1e-300));
    }
    assert!(NoiseSchedule::linear(10, 0.02, 0.01).is_err());
    assert!(NoiseSchedule::linear(10, 0.0, 0.01).is_err());
    assert!(NoiseSchedule::linear(10, 0.1, 1.0).is_err());
}

#[test]
fn tweedie_inverts_forward_sample() {
    let s = NoiseSchedule::linear(1000, 1e-4, 0.02).unwrap();
    let mut rng = rng_from_seed(1);
    for t in [1, 10, 500, 1000] {
        let z0 = normal_vec(&mut rng, 8);
        let eps = normal_vec(&mut rng, 8);
        let zt = s.forward_sample(&z0, t, &eps).unwrap();
        let back = s.tweedie_z0(&zt, t, &eps).unwrap();
        for (a, b) in back.iter().zip(&z0) {
            assert!(
                (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                "t={t}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn likelihood_gradients_match_finite_differences() {
    let s = NoiseSchedule::linear(50, 1e-3, 0.1).unwrap();
    let mut rng = rng_from_seed(2);
    let z = normal_vec(&mut rng, 4);
    let y = normal_vec(&mut rng, 4);
    let h = 0.7;
    let t = 17;
    let f = |z: &[f64], h: f64| {
        s.likelihood_weight(t)
            * z.iter()
                .zip(&y)
                .map(|(a, b)| (b - h * a).powi(2))
                .sum::<f64>()
    };
    let gz = s.likelihood_grad_z(&z, &y, h, t).unwrap();
    for i in 0..4 {
        let mut up = z.clone();
        up[i] += 1e-6;
        let mut dn = z.clone();
        dn[i] -= 1e-6;
        let fd = (f(&up, h) - f(&dn, h)) / 2e-6;
        assert!((fd - gz[i]).abs() < 1e-6 * fd.abs().max(1.0));
    }
    let gh = s.likelihood_grad_h(&z, &y, h, t).unwrap();
    let fd = (f(&z, h + 1e-6) - f(&z, h - 1e-6)) / 2e-6;
    assert!((fd - gh).abs() < 1e-6 * fd.abs().max(1.0));
    assert_eq!(s.likelihood_weight(1), -1.0 / s.beta(1));
}

#[test]
fn mixture_noise_matches_numeric_score() {
    let s = NoiseSchedule::linear(100, 1e-3, 0.05).unwrap();
    let gm =
        GaussianMixture::new(vec![0.3, 0.7], vec![vec![1.0, -1.0], vec![-2.0, 0.5]], 0.2).unwrap();
    let t = 40;
    let ab = s.alpha_bar(t);
    let var = ab * 0.2 + 1.0 - ab;
    let log_p = |x: &[f64]| -> f64 {
        gm.means()
            .iter()
            .zip([0.3, 0.7])
            .map(|(m, w)| {
                let d2: f64 = x
                    .iter()
                    .zip(m)
                    .map(|(a, b)| (a - ab.sqrt() * b).powi(2))
                    .sum();
                w * (-d2 / (2.0 * var)).exp()
            })
            .sum::<f64>()
            .ln()
    };
    let x = [0.2, -0.4];
    let eps = gm.predict(&x, t, &s).unwrap();
    for i in 0..2 {
        let mut up = x;
        up[i] += 1e-6;
        let mut dn = x;
        dn[i] -= 1e-6;
        let score = (log_p(&up) - log_p(&dn)) / 2e-6;
        assert!((eps[i] + (1.0 - ab).sqrt() * score).abs() < 1e-7);
    }
}

#[test]
fn exact_prior_sd_beats_equalization() {
    let sch = NoiseSchedule::linear(200, 1e-4, 0.1).unwrap();
    let mut rng = rng_from_seed(3);
    let means: Vec<Vec<f64>> = (0..4)
        .map(|_| normal_vec(&mut rng, 8).iter().map(|v| 1.5 * v).collect())
        .collect();
    let prior = GaussianMixture::new(vec![1.0; 4], means, 0.05).unwrap();
    let g = GuidanceWeights::noise_matched();
    let (mut sd, mut mm) = (0.0, 0.0);
    for _ in 0..30 {
        let z = prior.sample(&mut rng);
        let h = 0.9;
        let y: Vec<f64> = z.iter().map(|v| h * v + 0.3 * normal(&mut rng)).collect();
        let a = sd_denoise(&y, h, 0.09, &prior, &sch, &g, &mut rng).unwrap();
        let b = mmse_equalize(&y, h, 0.09, 2.3).unwrap();
        sd += a.iter().zip(&z).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        mm += b.iter().zip(&z).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
    }
    assert!(sd < 0.7 * mm, "sd {sd} vs mmse {mm}");
}

#[test]
fn psd_recovers_gain_with_exact_priors() {
    struct Rayleigh {
        grid: Vec<f64>,
        weights: Vec<f64>,
    }
    // Quadrature prior for a unit Rayleigh gain.
    impl NoiseEstimator for Rayleigh {
        fn dim(&self) -> usize {
            1
        }
        fn predict(&self, x: &[f64], t: usize, s: &NoiseSchedule) -> sdgc_core::Result<Vec<f64>> {
            let ab = s.alpha_bar(t);
            let v = 1.0 - ab;
            let lw: Vec<f64> = self
                .grid
                .iter()
                .zip(&self.weights)
                .map(|(g, w)| -(x[0] - ab.sqrt() * g).powi(2) / (2.0 * v) + w.ln())
                .collect();
            let m = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p: Vec<f64> = lw.iter().map(|l| (l - m).exp()).collect();
            let z: f64 = p.iter().sum();
            let score: f64 = -p
                .iter()
                .zip(&self.grid)
                .map(|(p, g)| p * (x[0] - ab.sqrt() * g))
                .sum::<f64>()
                / (z * v);
            Ok(vec![-v.sqrt() * score])
        }
    }
    let grid: Vec<f64> = (1..2000).map(|i| i as f64 * 5.0 / 2000.0).collect();
    let weights: Vec<f64> = grid.iter().map(|g| 2.0 * g * (-g * g).exp()).collect();
    let gain_prior = Rayleigh { grid, weights };
    let sch = NoiseSchedule::linear(200, 1e-4, 0.1).unwrap();
    let mut rng: Rng = rng_from_seed(4);
    let means: Vec<Vec<f64>> = (0..4)
        .map(|_| normal_vec(&mut rng, 16).iter().map(|v| 1.5 * v).collect())
        .collect();
    let prior = GaussianMixture::new(vec![1.0; 4], means, 0.05).unwrap();
    let reg = RegParams::new(1e-3, 0.0).unwrap();
    let mut errs = Vec::new();
    for _ in 0..20 {
        let z = prior.sample(&mut rng);
        let h = 1.2;
        let y: Vec<f64> = z.iter().map(|v| h * v + 0.3 * normal(&mut rng)).collect();
        let est = psd_denoise(
            &y,
            0.09,
            &prior,
            &gain_prior,
            &sch,
            &GuidanceWeights::noise_matched(),
            &reg,
            &mut rng,
        )
        .unwrap();
        assert!(est.gain >= 0.0);
        errs.push((est.gain - h).abs() / h);
    }
    errs.sort_by(f64::total_cmp);
    assert!(errs[10] < 0.1, "median relative gain error {}", errs[10]);
}

#[test]
fn trained_estimator_samples_bimodal_mixture() {
    let sch = NoiseSchedule::linear(100, 1e-4, 0.2).unwrap();
    let model = MlpModel::new(&[2, 32, 32, 1], Activation::Tanh, 1)
        .unwrap()
        .with_output_activation(Activation::Identity);
    let cfg = EpsTrainConfig {
        sgd: SgdConfig::new(5e-3, 4000, 64).unwrap(),
        momentum: 0.9,
        clip_norm: Some(10.0),
        cosine_decay: true,
        ema_decay: None,
    };
    let mut rng = rng_from_seed(5);
    let sampler = |r: &mut Rng| {
        vec![
            if rand::Rng::gen_bool(r, 0.5) {
                2.0
            } else {
                -2.0
            } + 0.1 * normal(r),
        ]
    };
    let (trained, report) = train_eps(&model, sampler, &sch, &cfg, &mut rng).unwrap();
    let (head, tail) = report.head_tail(100);
    assert!(tail < head);
    let n = 400;
    let positive = (0..n)
        .filter(|_| sample_unconditional(&trained, &sch, &mut rng).unwrap()[0] > 0.0)
        .count();
    let frac = positive as f64 / n as f64;
    assert!((0.35..=0.65).contains(&frac), "positive fraction {frac}");
}

#[test]
fn denoisers_are_deterministic_given_seed() {
    let sch = NoiseSchedule::linear(30, 1e-3, 0.2).unwrap();
    let prior = GaussianMixture::new(vec![1.0], vec![vec![0.5, -0.5]], 0.1).unwrap();
    let g = GuidanceWeights::constant(1.0, 1.0);
    let a = sd_denoise(
        &[0.4, -0.2],
        1.0,
        0.1,
        &prior,
        &sch,
        &g,
        &mut rng_from_seed(9),
    )
    .unwrap();
    let b = sd_denoise(
        &[0.4, -0.2],
        1.0,
        0.1,
        &prior,
        &sch,
        &g,
        &mut rng_from_seed(9),
    )
    .unwrap();
    assert_eq!(a, b);
}
