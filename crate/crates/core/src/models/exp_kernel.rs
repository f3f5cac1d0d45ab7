//! Hawkes intensities built from a sum of exponential kernels
//! `φ(t) = Σ_k α_k β_k e^(−β_k t)`.
//!
//! The kernel is Markovian, so the excitation at onset `j` follows from the
//! excitation at onset `j − 1`:
//! `A_j = e^(−β(t_j − t_{j−1})) (1 + A_{j−1})`, with the derivative
//! `∂A_j/∂β = e^(−βΔ) (∂A_{j−1}/∂β − Δ (1 + A_{j−1}))`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpKernel {
    pub alpha: f64,
    pub beta: f64,
}

impl ExpKernel {
    pub fn new(alpha: f64, beta: f64) -> Self {
        ExpKernel { alpha, beta }
    }
}

pub(super) fn intensity(mu: f64, kernels: &[ExpKernel], history: &[f64], t: f64) -> f64 {
    let mut lambda = mu;
    for k in kernels {
        let s: f64 = history.iter().map(|&ti| (-k.beta * (t - ti)).exp()).sum();
        lambda += k.alpha * k.beta * s;
    }
    lambda
}

pub(super) fn cumulative(mu: f64, kernels: &[ExpKernel], history: &[f64], t: f64) -> f64 {
    let mut total = mu * t;
    for k in kernels {
        let s: f64 = history.iter().map(|&ti| -(-k.beta * (t - ti)).exp_m1()).sum();
        total += k.alpha * s;
    }
    total
}

pub(super) fn compensator_at_onsets(mu: f64, kernels: &[ExpKernel], onsets: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(onsets.len());
    // per kernel: Σ_{i<j} (1 − e^(−β(t_j − t_i))), updated recursively
    let mut integrated = [0.0f64; 2];
    let mut excitation = [0.0f64; 2];
    for (j, &t) in onsets.iter().enumerate() {
        let mut total = mu * t;
        for (ki, k) in kernels.iter().enumerate() {
            if j > 0 {
                let dt = t - onsets[j - 1];
                let decay = (-k.beta * dt).exp();
                // mass released between t_{j-1} and t_j by all earlier onsets
                integrated[ki] += (1.0 + excitation[ki]) * -(-k.beta * dt).exp_m1();
                excitation[ki] = decay * (1.0 + excitation[ki]);
            }
            total += k.alpha * integrated[ki];
        }
        out.push(total);
    }
    out
}

/// Session log-likelihood; with `grad` also accumulates the gradient in
/// `[mu, alpha_1, beta_1, alpha_2, beta_2, ...]` order.
pub(super) fn loglik(
    mu: f64,
    kernels: &[ExpKernel],
    onsets: &[f64],
    duration: f64,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    let mut a = [0.0f64; 2];
    let mut b = [0.0f64; 2];
    let mut acc = 0.0;
    for (j, &t) in onsets.iter().enumerate() {
        let mut lambda = mu;
        for (ki, k) in kernels.iter().enumerate() {
            if j > 0 {
                let dt = t - onsets[j - 1];
                let decay = (-k.beta * dt).exp();
                b[ki] = decay * (b[ki] - dt * (1.0 + a[ki]));
                a[ki] = decay * (1.0 + a[ki]);
            }
            lambda += k.alpha * k.beta * a[ki];
        }
        acc += lambda.ln();
        if let Some(g) = grad.as_deref_mut() {
            let inv = 1.0 / lambda;
            g[0] += inv;
            for (ki, k) in kernels.iter().enumerate() {
                g[1 + 2 * ki] += k.beta * a[ki] * inv;
                g[2 + 2 * ki] += k.alpha * (a[ki] + k.beta * b[ki]) * inv;
            }
        }
    }

    let mut compensator = mu * duration;
    for (ki, k) in kernels.iter().enumerate() {
        let mut mass = 0.0;
        let mut d_beta = 0.0;
        for &t in onsets {
            let d = duration - t;
            mass += -(-k.beta * d).exp_m1();
            d_beta += d * (-k.beta * d).exp();
        }
        compensator += k.alpha * mass;
        if let Some(g) = grad.as_deref_mut() {
            g[1 + 2 * ki] -= mass;
            g[2 + 2 * ki] -= k.alpha * d_beta;
        }
    }
    if let Some(g) = grad {
        g[0] -= duration;
    }
    acc - compensator
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(J²) evaluation straight from the kernel sum.
    fn naive_loglik(mu: f64, ks: &[ExpKernel], s: &[f64], t_end: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &t) in s.iter().enumerate() {
            acc += intensity(mu, ks, &s[..j], t).ln();
        }
        acc - cumulative(mu, ks, s, t_end)
    }

    #[test]
    fn recursion_matches_quadratic_sum() {
        let s = [0.1, 0.4, 0.45, 2.0, 2.2, 7.5, 7.51, 9.0];
        let ks = [ExpKernel::new(0.6, 2.5), ExpKernel::new(0.3, 0.2)];
        for n in 1..=2 {
            let fast = loglik(0.3, &ks[..n], &s, 10.0, None);
            let slow = naive_loglik(0.3, &ks[..n], &s, 10.0);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn onset_compensator_matches_direct_integral() {
        let s = [0.1, 0.4, 0.45, 2.0, 2.2, 7.5];
        let ks = [ExpKernel::new(0.6, 2.5), ExpKernel::new(0.3, 0.2)];
        let fast = compensator_at_onsets(0.2, &ks, &s);
        for (j, &t) in s.iter().enumerate() {
            let direct = cumulative(0.2, &ks, &s[..j], t);
            assert!((fast[j] - direct).abs() < 1e-12);
        }
    }
}
