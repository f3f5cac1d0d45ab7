//! Hawkes process with the Omori power-law kernel `φ(t) = k (c + t)^(−p)`.
//!
//! The kernel is not Markovian; every evaluation sums over the full history.

/// `c^(1−p) − (c+d)^(1−p)` without cancellation when `p` is close to 1.
fn tail_mass_diff(c: f64, d: f64, p: f64) -> f64 {
    let lc = c.ln();
    let lcd = (c + d).ln();
    ((1.0 - p) * lcd).exp() * ((1.0 - p) * (lc - lcd)).exp_m1()
}

pub(super) fn intensity(mu: f64, k: f64, c: f64, p: f64, history: &[f64], t: f64) -> f64 {
    let s: f64 = history.iter().map(|&ti| (c + t - ti).powf(-p)).sum();
    mu + k * s
}

pub(super) fn cumulative(mu: f64, k: f64, c: f64, p: f64, history: &[f64], t: f64) -> f64 {
    let s: f64 = history.iter().map(|&ti| tail_mass_diff(c, t - ti, p)).sum();
    mu * t + k / (p - 1.0) * s
}

/// Session log-likelihood; with `grad` also the gradient in `[mu, k, c, p]` order.
pub(super) fn loglik(
    mu: f64,
    k: f64,
    c: f64,
    p: f64,
    onsets: &[f64],
    duration: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let want_grad = grad.is_some();
    let mut acc = 0.0;
    let (mut g_mu, mut g_k, mut g_c, mut g_p) = (0.0, 0.0, 0.0, 0.0);
    for (j, &t) in onsets.iter().enumerate() {
        let mut s0 = 0.0; // Σ (c+d)^(−p)
        let mut s1 = 0.0; // Σ (c+d)^(−p−1)
        let mut s_log = 0.0; // Σ ln(c+d) (c+d)^(−p)
        for &ti in &onsets[..j] {
            let x = c + t - ti;
            let xp = x.powf(-p);
            s0 += xp;
            if want_grad {
                s1 += xp / x;
                s_log += x.ln() * xp;
            }
        }
        let lambda = mu + k * s0;
        acc += lambda.ln();
        if want_grad {
            let inv = 1.0 / lambda;
            g_mu += inv;
            g_k += s0 * inv;
            g_c += -p * k * s1 * inv;
            g_p += -k * s_log * inv;
        }
    }

    let pm1 = p - 1.0;
    let mut mass = 0.0;
    let (mut m_c, mut m_p) = (0.0, 0.0);
    for &t in onsets {
        let d = duration - t;
        let diff = tail_mass_diff(c, d, p);
        mass += diff;
        if want_grad {
            let cd = c + d;
            m_c += c.powf(-p) - cd.powf(-p);
            m_p += (-c.ln() * c.powf(1.0 - p) + cd.ln() * cd.powf(1.0 - p)) / pm1 - diff / (pm1 * pm1);
        }
    }
    let compensator = mu * duration + k / pm1 * mass;
    if let Some(g) = grad {
        g[0] = g_mu - duration;
        g[1] = g_k - mass / pm1;
        g[2] = g_c + k * m_c;
        g[3] = g_p - k * m_p;
    }
    acc - compensator
}
