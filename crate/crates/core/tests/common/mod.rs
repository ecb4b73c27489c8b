#![allow(dead_code)]

use persuasion_core::{MultiParams, ProcessParams};
use proptest::prelude::*;

/// β = 3, r = 3, κ = −0.5, σ = 2.
pub fn fig2(sigma0_sq: f64) -> ProcessParams {
    ProcessParams::new(-0.5, 2.0, 3.0, 0.0, sigma0_sq).unwrap()
}

pub fn fig5(sigma0_2: f64) -> MultiParams {
    MultiParams::new(
        vec![-0.75, -0.25, 0.25],
        vec![2.0; 3],
        vec![4.0, sigma0_2, 4.0],
        3.0,
        vec![3.0, 4.0, 0.0],
    )
    .unwrap()
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Relaxed variance written out independently: full disclosure at `t_full`,
/// `x = t_full − t`.
pub fn relaxed_variance_oracle(p: &ProcessParams, t_full: f64, t: f64) -> f64 {
    let x = (t_full - t).max(0.0);
    let (k, s2, c) = (p.kappa, p.sigma * p.sigma, p.r - 2.0 * p.kappa);
    let grow = if k == 0.0 {
        x
    } else {
        ((-2.0 * k * x).exp() - 1.0) / (-2.0 * k)
    };
    -s2 * grow + s2 / (2.0 * (p.r - k)) * ((2.0 * c * x).exp() - (-2.0 * k * x).exp())
}

/// Deterministic-state optimum: `(b(t), v(t))`.
pub fn deterministic_oracle(p: &ProcessParams, beta: f64, t: f64) -> (f64, f64) {
    let c = p.r - 2.0 * p.kappa;
    let b0 = beta.min((2.0 * p.sigma0_sq * (p.r - p.kappa) / c).sqrt());
    let b = b0 * (-c * t).exp();
    (b, c * b * b / (2.0 * (p.r - p.kappa)))
}

/// Random one-dimensional instance and a bias multiplier relative to
/// `σ/√(r − 2κ)`.
pub fn instance() -> impl Strategy<Value = (ProcessParams, f64)> {
    (
        -1.0..1.0f64,
        0.2..3.0f64,
        0.3..5.0f64,
        -5.0..5.0f64,
        0.5..6.0f64,
    )
        .prop_map(|(kappa, sigma, extra, log_s0, mult)| {
            let r = (2.0 * kappa).max(0.0) + extra;
            let p = ProcessParams::new(kappa, sigma, r, 0.0, log_s0.exp()).unwrap();
            let beta = mult * p.stationary_bias();
            (p, beta)
        })
}

/// Random multidimensional instance with `n ∈ {2, 3, 4}` and distinct κ.
pub fn multi_instance() -> impl Strategy<Value = MultiParams> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec(-1.0..1.0f64, n),
            prop::collection::vec(0.3..2.5f64, n),
            prop::collection::vec(-4.0..3.0f64, n),
            prop::collection::vec(-3.0..3.0f64, n),
            0.3..4.0f64,
            1.2..4.0f64,
        )
            .prop_map(|(mut kappa, sigma, log_s0, dir, extra, mult)| {
                kappa.sort_by(f64::total_cmp);
                for i in 1..kappa.len() {
                    if kappa[i] - kappa[i - 1] < 0.05 {
                        kappa[i] = kappa[i - 1] + 0.05;
                    }
                }
                let r = (2.0 * kappa[kappa.len() - 1]).max(0.0) + extra;
                let sigma0_sq = log_s0.iter().map(|x| x.exp()).collect();
                let mut p = MultiParams::new(kappa, sigma, sigma0_sq, r, dir).unwrap();
                let norm = p.beta_norm();
                let target = mult * persuasion_core::sigma_hat(&p).sigma_hat;
                p.beta.iter_mut().for_each(|b| *b *= target / norm);
                p
            })
    })
}
