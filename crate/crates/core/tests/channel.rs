use sdgc_core::channel::{
    comm_time, mmse_equalize, mmse_estimate_gain, pilot_sequence, ChannelModel, ChannelRealization,
    ComputeTimeModel, LinkBudget, BITS_PER_ELEMENT,
};
use sdgc_core::rng::rng_from_seed;

fn moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn awgn_gain_is_one() {
    let mut rng = rng_from_seed(1);
    for _ in 0..10 {
        assert_eq!(ChannelModel::awgn().sample_gain(&mut rng).unwrap(), 1.0);
    }
}

#[test]
fn rayleigh_power_matches_omega() {
    // |h|² is exponential with mean Ω: mean Ω, variance Ω².
    let model = ChannelModel::rayleigh(2.0).unwrap();
    let mut rng = rng_from_seed(2);
    let p: Vec<f64> = (0..100_000)
        .map(|_| model.sample_gain(&mut rng).unwrap().powi(2))
        .collect();
    let (m, v) = moments(&p);
    assert!((m - 2.0).abs() < 0.03, "mean {m}");
    assert!((v - 4.0).abs() < 0.15, "variance {v}");
}

#[test]
fn nakagami_power_moments() {
    // |h|² ~ Gamma(m, Ω/m): mean Ω, variance Ω²/m.
    for m in [0.5, 1.0, 3.0] {
        let model = ChannelModel::nakagami(m, 1.5).unwrap();
        let mut rng = rng_from_seed(3);
        let p: Vec<f64> = (0..100_000)
            .map(|_| model.sample_gain(&mut rng).unwrap().powi(2))
            .collect();
        let (mean, var) = moments(&p);
        assert!((mean - 1.5).abs() < 0.03, "m={m} mean {mean}");
        assert!(
            (var - 2.25 / m).abs() < 0.06 * 2.25 / m + 0.02,
            "m={m} variance {var}"
        );
    }
}

#[test]
fn invalid_channel_parameters_rejected() {
    assert!(ChannelModel::rayleigh(0.0).is_err());
    assert!(ChannelModel::nakagami(0.4, 1.0).is_err());
    assert!(ChannelRealization::new(-1.0, 0.1).is_err());
    assert!(ChannelRealization::new(1.0, 0.0).is_err());
    assert!(LinkBudget::new(0.0, 1.0, 10.0).is_err());
}

#[test]
fn transmit_adds_noise_of_stated_power() {
    let ch = ChannelRealization::new(0.7, 0.25).unwrap();
    let z = vec![1.0; 50_000];
    let y = ch.transmit_slice(&z, &mut rng_from_seed(4));
    let noise: Vec<f64> = y.iter().map(|v| v - 0.7).collect();
    let (m, v) = moments(&noise);
    assert!(m.abs() < 0.01);
    assert!((v - 0.25).abs() < 0.01);
}

#[test]
fn rate_and_comm_time_follow_shannon() {
    let link = LinkBudget::new(1e6, 2.0, 10.0).unwrap();
    let sigma2 = link.noise_power(1.0);
    assert!((sigma2 - 0.2).abs() < 1e-15);
    let r = link.rate(0.5, sigma2).unwrap();
    let expect = 1e6 * (1.0f64 + 2.0 * 0.25 / 0.2).log2();
    assert!((r - expect).abs() < 1e-6);
    let t = comm_time(&[64, 16, 16], r).unwrap();
    assert!((t - BITS_PER_ELEMENT * 96.0 / expect).abs() < 1e-15);
    assert!(comm_time(&[1], 0.0).is_err());
}

#[test]
fn exec_time_is_sum_of_stages() {
    let ct = ComputeTimeModel::new(0.1, 0.2, 0.3, 0.4, 0.5).unwrap();
    assert!((ct.exec_time(0.05) - 1.55).abs() < 1e-15);
    assert!(ComputeTimeModel::new(-0.1, 0.0, 0.0, 0.0, 0.0).is_err());
}

#[test]
fn mmse_equalizer_formula() {
    let y = [1.0, -2.0, 0.5];
    let out = mmse_equalize(&y, 0.8, 0.1, 1.0).unwrap();
    let s = 0.8 / (0.64 + 0.1);
    for (o, v) in out.iter().zip(y) {
        assert!((o - s * v).abs() < 1e-15);
    }
    assert_eq!(mmse_equalize(&y, 0.0, 0.1, 1.0).unwrap(), vec![0.0; 3]);
}

#[test]
fn pilot_gain_estimate_is_exact_without_noise_floor() {
    let pilot = pilot_sequence(8);
    let rx: Vec<f64> = pilot.iter().map(|p| 1.3 * p).collect();
    // ⟨p, 1.3p⟩ / (‖p‖² + σ²) with σ² → 0.
    assert!((mmse_estimate_gain(&pilot, &rx, 0.0).unwrap() - 1.3).abs() < 1e-15);
    let shrunk = mmse_estimate_gain(&pilot, &rx, 2.0).unwrap();
    assert!((shrunk - 1.3 * 8.0 / 10.0).abs() < 1e-15);
}

#[test]
fn pilot_gain_estimate_is_consistent() {
    // Averaged over many noisy pilots the estimate approaches h·L/(L + σ²).
    let pilot = pilot_sequence(16);
    let ch = ChannelRealization::new(0.9, 0.1).unwrap();
    let mut rng = rng_from_seed(5);
    let n = 20_000;
    let mean = (0..n)
        .map(|_| mmse_estimate_gain(&pilot, &ch.transmit_slice(&pilot, &mut rng), 0.1).unwrap())
        .sum::<f64>()
        / n as f64;
    assert!((mean - 0.9 * 16.0 / 16.1).abs() < 2e-3, "{mean}");
}
