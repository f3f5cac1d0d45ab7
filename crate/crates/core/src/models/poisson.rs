//! Homogeneous Poisson and power-law inhomogeneous Poisson intensities.
//!
//! NHPP: `λ(t) = α k t^(k−1)`, `Λ(t) = α t^k`.

pub(super) fn nhpp_intensity(alpha: f64, k: f64, t: f64) -> f64 {
    if t == 0.0 {
        return if k < 1.0 {
            f64::INFINITY
        } else if k == 1.0 {
            alpha
        } else {
            0.0
        };
    }
    alpha * k * t.powf(k - 1.0)
}

pub(super) fn nhpp_cumulative(alpha: f64, k: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    alpha * t.powf(k)
}

/// `(k − 1) ln t`, defined as 0 when `k = 1` so `t = 0` stays finite there.
fn shape_term(k: f64, t: f64) -> f64 {
    if k == 1.0 {
        0.0
    } else {
        (k - 1.0) * t.ln()
    }
}

pub(super) fn hpp_loglik(mu: f64, onsets: &[f64], duration: f64) -> f64 {
    let log_mu = mu.ln();
    let mut acc = 0.0;
    for _ in onsets {
        acc += log_mu;
    }
    acc - mu * duration
}

pub(super) fn hpp_loglik_grad(mu: f64, onsets: &[f64], duration: f64, grad: &mut [f64]) -> f64 {
    grad[0] = onsets.len() as f64 / mu - duration;
    hpp_loglik(mu, onsets, duration)
}

pub(super) fn nhpp_loglik(alpha: f64, k: f64, onsets: &[f64], duration: f64) -> f64 {
    let base = alpha.ln() + k.ln();
    let mut acc = 0.0;
    for &t in onsets {
        acc += base + shape_term(k, t);
    }
    acc - nhpp_cumulative(alpha, k, duration)
}

pub(super) fn nhpp_loglik_grad(alpha: f64, k: f64, onsets: &[f64], duration: f64, grad: &mut [f64]) -> f64 {
    let j = onsets.len() as f64;
    let t_pow = duration.powf(k);
    let sum_log_t: f64 = onsets.iter().map(|t| t.ln()).sum();
    grad[0] = j / alpha - t_pow;
    grad[1] = j / k + sum_log_t - alpha * t_pow * duration.ln();
    nhpp_loglik(alpha, k, onsets, duration)
}
