//! Hand-derived derivatives of `gamma_k = alpha(|e_k|^2) e_k` for the
//! default gain `alpha(s) = a / (1 - s)`, `a = c (r + 1)`, written out term
//! by term without jets. Used as an independent oracle.

#![allow(dead_code)]

use funnel_core::controller::{gamma_jet, ControllerConfig};
use funnel_core::TimePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sum_i k_i v_i` over equally long vectors.
pub fn comb(terms: &[(f64, &[f64])]) -> Vec<f64> {
    let n = terms[0].1.len();
    (0..n)
        .map(|j| terms.iter().map(|(k, v)| k * v[j]).sum())
        .collect()
}

pub struct Hand {
    pub a: f64,
    pub c: f64,
    pub phi: f64,
}

impl Hand {
    pub fn alpha(&self, s: f64) -> f64 {
        self.a / (1.0 - s)
    }

    pub fn alpha_d1(&self, s: f64) -> f64 {
        self.a / (1.0 - s).powi(2)
    }

    pub fn alpha_d2(&self, s: f64) -> f64 {
        2.0 * self.a / (1.0 - s).powi(3)
    }

    /// `e_k' = (c - alpha_k) phi e_k + e_{k+1}`.
    pub fn e_dot(&self, ek: &[f64], next: &[f64]) -> Vec<f64> {
        let ak = self.alpha(dot(ek, ek));
        comb(&[((self.c - ak) * self.phi, ek), (1.0, next)])
    }

    /// `e_k''` from `e_k, e_{k+1}, e_{k+2}`:
    /// `-2 alpha'(|e_k|^2) <e_k, e_k'> phi e_k + (c - alpha_k) c phi^2 e_k
    ///  + (c - alpha_k)((c - alpha_k) phi^2 e_k + phi e_{k+1})
    ///  + (c - alpha_{k+1}) phi e_{k+1} + e_{k+2}`.
    pub fn e_ddot(&self, ek: &[f64], e1: &[f64], e2: &[f64]) -> Vec<f64> {
        let (c, phi) = (self.c, self.phi);
        let sk = dot(ek, ek);
        let ak = self.alpha(sk);
        let ak1 = self.alpha(dot(e1, e1));
        let ed = self.e_dot(ek, e1);
        let t1 = -2.0 * self.alpha_d1(sk) * dot(ek, &ed) * phi;
        let t2 = (c - ak) * c * phi * phi;
        let t3 = (c - ak) * (c - ak) * phi * phi;
        comb(&[
            (t1 + t2 + t3, ek),
            ((c - ak) * phi, e1),
            ((c - ak1) * phi, e1),
            (1.0, e2),
        ])
    }

    pub fn gamma(&self, ek: &[f64]) -> Vec<f64> {
        comb(&[(self.alpha(dot(ek, ek)), ek)])
    }

    /// `gamma' = 2 alpha' <e, e'> e + alpha e'`.
    pub fn gamma_d1(&self, ek: &[f64], e1: &[f64]) -> Vec<f64> {
        let s = dot(ek, ek);
        let ed = self.e_dot(ek, e1);
        comb(&[
            (2.0 * self.alpha_d1(s) * dot(ek, &ed), ek),
            (self.alpha(s), &ed),
        ])
    }

    /// `gamma'' = alpha'' e + 2 alpha' e' + alpha e''` with
    /// `s' = 2 <e, e'>`, `s'' = 2 (|e'|^2 + <e, e''>)`,
    /// `(alpha)' = alpha'(s) s'`, `(alpha)'' = alpha''(s) s'^2 + alpha'(s) s''`.
    pub fn gamma_d2(&self, ek: &[f64], e1: &[f64], e2: &[f64]) -> Vec<f64> {
        let s = dot(ek, ek);
        let ed = self.e_dot(ek, e1);
        let edd = self.e_ddot(ek, e1, e2);
        let sd = 2.0 * dot(ek, &ed);
        let sdd = 2.0 * (dot(&ed, &ed) + dot(ek, &edd));
        let ad = self.alpha_d1(s) * sd;
        let add = self.alpha_d2(s) * sd * sd + self.alpha_d1(s) * sdd;
        comb(&[(add, ek), (2.0 * ad, &ed), (self.alpha(s), &edd)])
    }
}

/// Random vector of dimension `m` with norm at most `bound`.
pub fn random_in_ball<R: Rng>(rng: &mut R, m: usize, bound: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 0.0 && n <= 1.0 {
            let radius = bound * rng.gen::<f64>();
            return v.iter().map(|x| x * radius / n).collect();
        }
    }
}

/// Largest `|jet - hand| / |hand|` over `samples` random cascades with
/// `|e_k| <= 0.9`, for every level `i` and order `j <= min(2, r - i)`.
pub fn gamma_deviation(r: usize, m: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let horizon = rng.gen_range(1.0..100.0);
        let c = rng.gen_range(0.5..2.0);
        let t = rng.gen_range(0.0..0.99) * horizon;
        let cfg = ControllerConfig::standard(r, m, horizon, c).unwrap();
        let time = TimePoint::at(t, horizon);
        let hand = Hand {
            a: c * (r as f64 + 1.0),
            c,
            phi: 1.0 / (c * (horizon - t)),
        };
        let levels: Vec<Vec<f64>> = (0..r).map(|_| random_in_ball(&mut rng, m, 0.9)).collect();
        for i in 0..r {
            for j in 0..=(r - 1 - i).min(2) {
                let jet = gamma_jet(&cfg, time, i + 1, &levels[i..=i + j]).unwrap();
                let exact = match j {
                    0 => hand.gamma(&levels[i]),
                    1 => hand.gamma_d1(&levels[i], &levels[i + 1]),
                    _ => hand.gamma_d2(&levels[i], &levels[i + 1], &levels[i + 2]),
                };
                let got = jet.derivative(j);
                let diff: Vec<f64> = got.iter().zip(&exact).map(|(a, b)| a - b).collect();
                let scale = norm(&exact);
                let dev = if scale > 0.0 {
                    norm(&diff) / scale
                } else {
                    norm(&diff)
                };
                worst = worst.max(dev);
            }
        }
    }
    worst
}
