//! End-to-end σ estimation on simulated Logistic-Normal data.

use evmanifold::spectral::{sigma_loglik, DEFAULT_SIGMA_BOUNDS};
use evmanifold::{
    extract_pseudo_angles, fit_sigma_mle, ln_density, sample_pairs, sigma_posterior_band,
    to_unit_frechet, EvModel, FrechetSample, LnSpectral, PosteriorConfig,
};

fn exceedances(sigma: f64, n: usize, seed: u64) -> (FrechetSample, FrechetSample) {
    let (x, y) = sample_pairs(&EvModel::semiparam(sigma).unwrap(), n, seed).unwrap();
    let (fx, fy) = (to_unit_frechet(x.values()).unwrap(), to_unit_frechet(y.values()).unwrap());
    let pa = extract_pseudo_angles(&fx, &fy, 0.98).unwrap();
    (fx.select(&pa.indices), fy.select(&pa.indices))
}

/// Brute-force argmax of the log-likelihood on a 0.01-spaced grid.
fn grid_argmax(x: &FrechetSample, y: &FrechetSample) -> f64 {
    (10..=300)
        .map(|i| i as f64 / 100.0)
        .map(|s| (s, sigma_loglik(s, x.values(), y.values()).unwrap()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

#[test]
fn mle_matches_grid_oracle() {
    for (sigma, seed) in [(1.0, 3), (0.5, 4)] {
        let (x, y) = exceedances(sigma, 2000, seed);
        let fit = fit_sigma_mle(&x, &y, DEFAULT_SIGMA_BOUNDS).unwrap();
        let oracle = grid_argmax(&x, &y);
        assert!((fit.sigma - oracle).abs() <= 0.01, "mle {} vs grid {oracle}", fit.sigma);
        let at_oracle = sigma_loglik(oracle, x.values(), y.values()).unwrap();
        assert!(fit.loglik >= at_oracle - 1e-9);
    }
}

#[test]
fn mle_tracks_true_sigma() {
    let mut at_one = Vec::new();
    let mut at_half = Vec::new();
    for seed in 1..=5 {
        let (x, y) = exceedances(1.0, 2000, seed);
        at_one.push(fit_sigma_mle(&x, &y, DEFAULT_SIGMA_BOUNDS).unwrap().sigma);
        let (x, y) = exceedances(0.5, 2000, 100 + seed);
        at_half.push(fit_sigma_mle(&x, &y, DEFAULT_SIGMA_BOUNDS).unwrap().sigma);
    }
    at_one.sort_by(f64::total_cmp);
    at_half.sort_by(f64::total_cmp);
    assert!((0.8..=1.25).contains(&at_one[2]), "{at_one:?}");
    assert!((0.4..=0.65).contains(&at_half[2]), "{at_half:?}");
}

#[test]
fn posterior_band_is_centered_and_reproducible() {
    let (x, y) = exceedances(1.0, 2000, 7);
    let fit = fit_sigma_mle(&x, &y, DEFAULT_SIGMA_BOUNDS).unwrap();
    let cfg = PosteriorConfig { iters: 4000, burnin: 1000, seed: 9, ..PosteriorConfig::default() };
    let band = sigma_posterior_band(&x, &y, &cfg).unwrap();

    assert!((band.sigma_mean() / fit.sigma - 1.0).abs() < 0.25, "{} vs {}", band.sigma_mean(), fit.sigma);
    let plug_in = LnSpectral::new(fit.sigma).unwrap();
    let covered = band
        .w
        .iter()
        .enumerate()
        .filter(|&(i, &w)| {
            let h = ln_density(w, &plug_in);
            band.h_lo[i] <= h && h <= band.h_hi[i]
        })
        .count();
    assert!(covered as f64 >= 0.9 * band.w.len() as f64, "{covered} of {}", band.w.len());

    let again = sigma_posterior_band(&x, &y, &cfg).unwrap();
    assert_eq!(band, again);
}
