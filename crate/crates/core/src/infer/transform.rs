//! Maps between the constrained parameter space and ℝᵈ.
//!
//! Gamma-prior parameters use a shifted log, `θ = lb + eˣ`; Uniform(lo, hi)
//! parameters use a scaled logit, `θ = lo + (hi − lo) σ(x)`.

use super::prior::{Prior, PriorSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    ShiftedLog { lower: f64 },
    ScaledLogit { lo: f64, hi: f64 },
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln σ(x), stable in both tails.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

impl Transform {
    pub fn for_prior(prior: &Prior, lower_bound: f64) -> Self {
        match *prior {
            Prior::Gamma { .. } => Transform::ShiftedLog { lower: lower_bound },
            Prior::Uniform { lo, hi } => Transform::ScaledLogit { lo, hi },
        }
    }

    pub fn constrain(&self, x: f64) -> f64 {
        match *self {
            Transform::ShiftedLog { lower } => lower + x.exp(),
            Transform::ScaledLogit { lo, hi } => lo + (hi - lo) * sigmoid(x),
        }
    }

    pub fn unconstrain(&self, theta: f64) -> f64 {
        match *self {
            Transform::ShiftedLog { lower } => (theta - lower).ln(),
            Transform::ScaledLogit { lo, hi } => {
                let u = (theta - lo) / (hi - lo);
                u.ln() - (1.0 - u).ln()
            }
        }
    }

    /// `(dθ/dx, ln|dθ/dx|, d ln|dθ/dx| / dx)`.
    pub fn jacobian(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            Transform::ShiftedLog { .. } => (x.exp(), x, 1.0),
            Transform::ScaledLogit { lo, hi } => {
                let w = hi - lo;
                let s = sigmoid(x);
                (w * s * (1.0 - s), w.ln() + log_sigmoid(x) + log_sigmoid(-x), 1.0 - 2.0 * s)
            }
        }
    }
}

pub fn transforms(spec: &PriorSpec) -> Vec<Transform> {
    spec.priors
        .iter()
        .zip(spec.family.lower_bounds())
        .map(|(p, lb)| Transform::for_prior(p, lb))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_jacobian() {
        let ts = [
            Transform::ShiftedLog { lower: 0.0 },
            Transform::ShiftedLog { lower: 1.0 },
            Transform::ScaledLogit { lo: 1.0, hi: 4.0 },
        ];
        for t in ts {
            for &x in &[-3.0, -0.2, 0.0, 0.8, 2.5] {
                let th = t.constrain(x);
                assert!((t.unconstrain(th) - x).abs() < 1e-10);
                let h = 1e-6;
                let fd = (t.constrain(x + h) - t.constrain(x - h)) / (2.0 * h);
                let (d, logd, dlogd) = t.jacobian(x);
                assert!((d - fd).abs() < 1e-7);
                assert!((logd - d.ln()).abs() < 1e-12);
                let fd2 = (t.jacobian(x + h).1 - t.jacobian(x - h).1) / (2.0 * h);
                assert!((dlogd - fd2).abs() < 1e-7);
            }
        }
    }
}
