//! No-U-Turn sampler with multinomial trajectory sampling, the generalized
//! U-turn criterion, dual-averaging step size adaptation and windowed
//! diagonal mass-matrix adaptation.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::posterior::Posterior;
use crate::rng::Rng;
use crate::stats::logsumexp;

pub const MAX_DELTA_H: f64 = 1000.0;

#[derive(Debug, Clone)]
struct Point {
    q: Vec<f64>,
    p: Vec<f64>,
    g: Vec<f64>,
    logp: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

struct Hamiltonian<'a> {
    post: &'a Posterior,
    inv_metric: Vec<f64>,
}

impl Hamiltonian<'_> {
    fn energy(&self, z: &Point) -> f64 {
        let k: f64 = z.p.iter().zip(&self.inv_metric).map(|(p, m)| p * p * m).sum();
        let h = -z.logp + 0.5 * k;
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    fn p_sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_metric).map(|(p, m)| p * m).collect()
    }

    fn sample_momentum(&self, rng: &mut Rng) -> Vec<f64> {
        self.inv_metric
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                z / m.sqrt()
            })
            .collect()
    }

    fn leapfrog(&self, z: &mut Point, eps: f64) {
        for i in 0..z.q.len() {
            z.p[i] += 0.5 * eps * z.g[i];
        }
        for i in 0..z.q.len() {
            z.q[i] += eps * self.inv_metric[i] * z.p[i];
        }
        z.logp = self.post.log_density_and_grad(&z.q, &mut z.g);
        for i in 0..z.q.len() {
            z.p[i] += 0.5 * eps * z.g[i];
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TransitionStats {
    pub accept_prob: f64,
    pub divergent: bool,
    pub depth: usize,
    pub n_leapfrog: usize,
}

struct Tree<'a, 'b> {
    ham: &'a Hamiltonian<'b>,
    eps: f64,
    max_depth: usize,
    h0: f64,
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

fn criterion(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct Edge {
    p_sharp_beg: Vec<f64>,
    p_sharp_end: Vec<f64>,
    p_beg: Vec<f64>,
    p_end: Vec<f64>,
}

impl Tree<'_, '_> {
    /// Extends the trajectory from `z` by `2^depth` steps. `rho` accumulates
    /// the momentum sum, `log_sum_weight` the multinomial weight.
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        depth: usize,
        z: &mut Point,
        z_propose: &mut Point,
        rho: &mut [f64],
        log_sum_weight: &mut f64,
        sign: f64,
        rng: &mut Rng,
    ) -> (bool, Edge) {
        if depth == 0 {
            self.ham.leapfrog(z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = self.ham.energy(z);
            if h - self.h0 > MAX_DELTA_H {
                self.divergent = true;
            }
            *log_sum_weight = logsumexp(&[*log_sum_weight, self.h0 - h]);
            self.sum_metro_prob += if self.h0 - h > 0.0 { 1.0 } else { (self.h0 - h).exp() };
            z_propose.clone_from(z);
            let ps = self.ham.p_sharp(&z.p);
            add_assign(rho, &z.p);
            let edge = Edge {
                p_sharp_beg: ps.clone(),
                p_sharp_end: ps,
                p_beg: z.p.clone(),
                p_end: z.p.clone(),
            };
            return (!self.divergent, edge);
        }

        let d = z.q.len();
        let mut rho_init = vec![0.0; d];
        let mut lsw_init = f64::NEG_INFINITY;
        let (valid_init, e_init) = self.build(depth - 1, z, z_propose, &mut rho_init, &mut lsw_init, sign, rng);
        if !valid_init {
            return (false, e_init);
        }

        let mut z_propose_final = z.clone();
        let mut rho_final = vec![0.0; d];
        let mut lsw_final = f64::NEG_INFINITY;
        let (valid_final, e_final) =
            self.build(depth - 1, z, &mut z_propose_final, &mut rho_final, &mut lsw_final, sign, rng);
        if !valid_final {
            return (false, e_final);
        }

        let lsw_subtree = logsumexp(&[lsw_init, lsw_final]);
        *log_sum_weight = logsumexp(&[*log_sum_weight, lsw_subtree]);
        if lsw_final > lsw_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept = (lsw_final - lsw_subtree).exp();
            if rng.random::<f64>() < accept {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree = sum(&rho_init, &rho_final);
        add_assign(rho, &rho_subtree);
        let mut persist = criterion(&e_init.p_sharp_beg, &e_final.p_sharp_end, &rho_subtree);
        let rho_ext = sum(&rho_init, &e_final.p_beg);
        persist &= criterion(&e_init.p_sharp_beg, &e_final.p_sharp_beg, &rho_ext);
        let rho_ext = sum(&rho_final, &e_init.p_end);
        persist &= criterion(&e_init.p_sharp_end, &e_final.p_sharp_end, &rho_ext);

        let edge = Edge {
            p_sharp_beg: e_init.p_sharp_beg,
            p_sharp_end: e_final.p_sharp_end,
            p_beg: e_init.p_beg,
            p_end: e_final.p_end,
        };
        (persist, edge)
    }
}

/// One NUTS transition from `z0` (its momentum is resampled).
fn transition(
    ham: &Hamiltonian<'_>,
    z0: &Point,
    eps: f64,
    max_depth: usize,
    rng: &mut Rng,
) -> (Point, TransitionStats) {
    let mut start = z0.clone();
    start.p = ham.sample_momentum(rng);
    let h0 = ham.energy(&start);

    let mut z_fwd = start.clone();
    let mut z_bck = start.clone();
    let mut z_sample = start.clone();
    let mut z_propose = start.clone();

    // momenta and p_sharp at the two ends of the whole trajectory
    let ps0 = ham.p_sharp(&start.p);
    let (mut p_f, mut ps_f) = (start.p.clone(), ps0.clone());
    let (mut p_b, mut ps_b) = (start.p.clone(), ps0);

    let mut rho = start.p.clone();
    let mut log_sum_weight = 0.0;
    let mut tree = Tree {
        ham,
        eps,
        max_depth,
        h0,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };
    let mut depth = 0;
    let d = start.q.len();

    while depth < tree.max_depth {
        let mut rho_new = vec![0.0; d];
        let mut lsw_subtree = f64::NEG_INFINITY;
        let forward = rng.random::<f64>() > 0.5;
        let (valid, e) = if forward {
            tree.build(depth, &mut z_fwd, &mut z_propose, &mut rho_new, &mut lsw_subtree, 1.0, rng)
        } else {
            tree.build(depth, &mut z_bck, &mut z_propose, &mut rho_new, &mut lsw_subtree, -1.0, rng)
        };
        if !valid {
            break;
        }
        depth += 1;

        if lsw_subtree > log_sum_weight || rng.random::<f64>() < (lsw_subtree - log_sum_weight).exp() {
            z_sample.clone_from(&z_propose);
        }
        log_sum_weight = logsumexp(&[log_sum_weight, lsw_subtree]);

        // old trajectory end adjacent to the new subtree, and the far ends
        let (p_adj, ps_adj, ps_far_old) = if forward { (&p_f, &ps_f, &ps_b) } else { (&p_b, &ps_b, &ps_f) };
        let rho_old = rho.clone();
        rho = sum(&rho_old, &rho_new);
        let mut persist = criterion(ps_far_old, &e.p_sharp_end, &rho);
        let rho_ext = sum(&rho_old, &e.p_beg);
        persist &= criterion(ps_far_old, &e.p_sharp_beg, &rho_ext);
        let rho_ext = sum(&rho_new, p_adj);
        persist &= criterion(ps_adj, &e.p_sharp_end, &rho_ext);

        if forward {
            p_f = e.p_end;
            ps_f = e.p_sharp_end;
        } else {
            p_b = e.p_end;
            ps_b = e.p_sharp_end;
        }
        if !persist {
            break;
        }
    }

    let stats = TransitionStats {
        accept_prob: if tree.n_leapfrog > 0 {
            tree.sum_metro_prob / tree.n_leapfrog as f64
        } else {
            0.0
        },
        divergent: tree.divergent,
        depth,
        n_leapfrog: tree.n_leapfrog,
    };
    (z_sample, stats)
}

struct DualAveraging {
    mu: f64,
    delta: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    const GAMMA: f64 = 0.05;
    const T0: f64 = 10.0;
    const KAPPA: f64 = 0.75;

    fn new(eps: f64, delta: f64) -> Self {
        DualAveraging {
            mu: (10.0 * eps).ln(),
            delta,
            counter: 0.0,
            s_bar: 0.0,
            x_bar: 0.0,
        }
    }

    fn learn(&mut self, accept: f64) -> f64 {
        self.counter += 1.0;
        let a = accept.min(1.0);
        let eta = 1.0 / (self.counter + Self::T0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.delta - a);
        let x = self.mu - self.s_bar * self.counter.sqrt() / Self::GAMMA;
        let x_eta = self.counter.powf(-Self::KAPPA);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

fn init_stepsize(ham: &Hamiltonian<'_>, z: &Point, mut eps: f64, rng: &mut Rng) -> f64 {
    let trial = |eps: f64, rng: &mut Rng| {
        let mut zz = z.clone();
        zz.p = ham.sample_momentum(rng);
        let h0 = ham.energy(&zz);
        ham.leapfrog(&mut zz, eps);
        h0 - ham.energy(&zz)
    };
    let threshold = 0.8f64.ln();
    let direction = if trial(eps, rng) > threshold { 1 } else { -1 };
    for _ in 0..100 {
        let delta_h = trial(eps, rng);
        if direction == 1 && !(delta_h > threshold) {
            break;
        }
        if direction == -1 && !(delta_h < threshold) {
            break;
        }
        eps = if direction == 1 { eps * 2.0 } else { eps * 0.5 };
        if !(1e-12..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-12, 1e7)
}

/// Windowed adaptation schedule: `(start, end)` iteration ranges during which
/// the mass matrix is estimated.
fn adaptation_windows(warmup: usize) -> Vec<(usize, usize)> {
    if warmup < 20 {
        return Vec::new();
    }
    let (mut init, mut term, mut size) = (75usize, 50usize, 25usize);
    if init + term + size > warmup {
        init = (0.15 * warmup as f64) as usize;
        term = (0.1 * warmup as f64) as usize;
        size = warmup - init - term;
    }
    let last = warmup - term;
    let mut out = Vec::new();
    let mut start = init;
    while start < last {
        let mut end = start + size;
        if end + 2 * size > last {
            end = last;
        }
        out.push((start, end));
        start = end;
        size *= 2;
    }
    out
}

#[derive(Default)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn add(&mut self, x: &[f64]) {
        if self.mean.is_empty() {
            self.mean = vec![0.0; x.len()];
            self.m2 = vec![0.0; x.len()];
        }
        self.n += 1.0;
        for ((&xi, mean), m2) in x.iter().zip(&mut self.mean).zip(&mut self.m2) {
            let d = xi - *mean;
            *mean += d / self.n;
            *m2 += d * (xi - *mean);
        }
    }

    fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n;
        self.m2
            .iter()
            .map(|m| {
                let var = m / (n - 1.0);
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

pub struct ChainResult {
    /// Kept draws on the unconstrained scale.
    pub draws: Vec<Vec<f64>>,
    pub divergences: usize,
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub mean_accept: f64,
    pub mean_tree_depth: f64,
}

pub struct NutsSettings {
    pub warmup: usize,
    pub draws: usize,
    pub target_accept: f64,
    pub max_depth: usize,
}

pub fn run_chain(post: &Posterior, x0: Vec<f64>, settings: &NutsSettings, rng: &mut Rng) -> ChainResult {
    let d = post.dim();
    let mut ham = Hamiltonian {
        post,
        inv_metric: vec![1.0; d],
    };
    let mut g = vec![0.0; d];
    let logp = post.log_density_and_grad(&x0, &mut g);
    let mut z = Point {
        q: x0,
        p: vec![0.0; d],
        g,
        logp,
    };

    let mut eps = init_stepsize(&ham, &z, 1.0, rng);
    let mut da = DualAveraging::new(eps, settings.target_accept);
    let windows = adaptation_windows(settings.warmup);
    let mut wi = 0;
    let mut welford = Welford::default();

    for it in 0..settings.warmup {
        let (znew, st) = transition(&ham, &z, eps, settings.max_depth, rng);
        z = znew;
        eps = da.learn(st.accept_prob);
        if wi < windows.len() {
            let (start, end) = windows[wi];
            if it >= start && it < end {
                welford.add(&z.q);
            }
            if it + 1 == end {
                ham.inv_metric = welford.regularized_variance();
                welford = Welford::default();
                wi += 1;
                eps = init_stepsize(&ham, &z, eps, rng);
                da = DualAveraging::new(eps, settings.target_accept);
            }
        }
    }
    if settings.warmup > 0 {
        eps = da.final_step();
    }

    let mut draws = Vec::with_capacity(settings.draws);
    let mut divergences = 0;
    let mut acc = 0.0;
    let mut depth = 0.0;
    for _ in 0..settings.draws {
        let (znew, st) = transition(&ham, &z, eps, settings.max_depth, rng);
        z = znew;
        if st.divergent {
            divergences += 1;
        }
        acc += st.accept_prob;
        depth += st.depth as f64;
        draws.push(z.q.clone());
    }
    let n = settings.draws.max(1) as f64;
    ChainResult {
        draws,
        divergences,
        step_size: eps,
        inv_metric: ham.inv_metric,
        mean_accept: acc / n,
        mean_tree_depth: depth / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_tile_the_adaptation_phase() {
        let w = adaptation_windows(1000);
        assert_eq!(w.first().unwrap().0, 75);
        assert_eq!(w.last().unwrap().1, 950);
        for pair in w.windows(2) {
            assert_eq!(pair[0].1, pair[1].0);
        }
        let w = adaptation_windows(100);
        assert_eq!(w, vec![(15, 90)]);
        assert!(adaptation_windows(10).is_empty());
    }
}
