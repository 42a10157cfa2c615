//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] of order `p` and dimension `m` holds the scaled Taylor
//! coefficients `a_0, ..., a_p` of an `R^m`-valued signal at one instant,
//! where `a_j = f^{(j)}(t) / j!`. Products are plain truncated convolutions;
//! factorials only appear when converting to and from raw derivatives.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    // Coefficient j occupies coeffs[j * dim..(j + 1) * dim].
    coeffs: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    /// Builds a jet from its scaled coefficients `a_0..a_p`, each an `m`-vector.
    pub fn new(coeffs: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coeffs
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::config("a jet needs at least one coefficient"))?;
        if dim == 0 {
            return Err(Error::config("a jet needs dimension >= 1"));
        }
        let mut flat = Vec::with_capacity(dim * coeffs.len());
        for c in &coeffs {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            flat.extend_from_slice(c);
        }
        Ok(Self { dim, coeffs: flat })
    }

    /// Scalar jet from scaled coefficients.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn scalar(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Self { dim: 1, coeffs }
    }

    /// Jet of a signal that is constant near the expansion point.
    pub fn constant(value: &[f64], order: usize) -> Self {
        let dim = value.len();
        let mut coeffs = vec![0.0; dim * (order + 1)];
        coeffs[..dim].copy_from_slice(value);
        Self { dim, coeffs }
    }

    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            dim,
            coeffs: vec![0.0; dim * (order + 1)],
        }
    }

    /// Builds a jet from raw derivatives `f, f', ..., f^{(p)}`.
    pub fn from_derivatives(derivs: Vec<Vec<f64>>) -> Result<Self> {
        let scaled = derivs
            .into_iter()
            .enumerate()
            .map(|(j, d)| {
                let f = factorial(j);
                d.into_iter().map(|x| x / f).collect()
            })
            .collect();
        Self::new(scaled)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / self.dim - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Scaled coefficient `a_j`.
    pub fn coeff(&self, j: usize) -> &[f64] {
        &self.coeffs[j * self.dim..(j + 1) * self.dim]
    }

    pub fn value(&self) -> &[f64] {
        self.coeff(0)
    }

    /// Raw derivative `f^{(j)} = j! a_j`.
    pub fn derivative(&self, j: usize) -> Vec<f64> {
        let f = factorial(j);
        self.coeff(j).iter().map(|x| x * f).collect()
    }

    /// Constant term of a scalar jet.
    pub fn scalar_value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Scaled coefficients as one vector per order.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.coeffs.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// Appends the next scaled coefficient, raising the order by one.
    pub fn push(&mut self, coeff: &[f64]) -> Result<()> {
        self.check_dim(coeff.len())?;
        self.coeffs.extend_from_slice(coeff);
        Ok(())
    }

    /// Drops all coefficients above `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let keep = (order.min(self.order()) + 1) * self.dim;
        Self {
            dim: self.dim,
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }

    fn check_order(&self, other: &Jet) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: other.order(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other.dim)?;
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Jet {
            dim: self.dim,
            coeffs,
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other.dim)?;
        self.check_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Jet {
            dim: self.dim,
            coeffs,
        })
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|a| k * a).collect(),
        }
    }

    /// Adds a constant to the value coefficient.
    pub fn offset(&self, value: &[f64]) -> Result<Jet> {
        self.check_dim(value.len())?;
        let mut out = self.clone();
        for (a, v) in out.coeffs.iter_mut().zip(value) {
            *a += v;
        }
        Ok(out)
    }

    /// Truncated product. A scalar operand broadcasts over the other one;
    /// two vector operands of equal dimension multiply componentwise.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_order(other)?;
        let dim = match (self.dim, other.dim) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => {
                return Err(Error::DimensionMismatch {
                    expected: a,
                    got: b,
                })
            }
        };
        let p = self.order();
        let mut coeffs = vec![0.0; dim * (p + 1)];
        for k in 0..=p {
            let out = &mut coeffs[k * dim..(k + 1) * dim];
            for i in 0..=k {
                let a = self.coeff(i);
                let b = other.coeff(k - i);
                for (c, o) in out.iter_mut().enumerate() {
                    let ai = if self.dim == 1 { a[0] } else { a[c] };
                    let bi = if other.dim == 1 { b[0] } else { b[c] };
                    *o += ai * bi;
                }
            }
        }
        Ok(Jet { dim, coeffs })
    }

    /// Truncated inner product of two vector jets, giving a scalar jet.
    pub fn inner(&self, other: &Jet) -> Result<Jet> {
        self.check_dim(other.dim)?;
        self.check_order(other)?;
        let p = self.order();
        let coeffs = (0..=p)
            .map(|k| {
                (0..=k)
                    .map(|i| crate::linalg::dot(self.coeff(i), other.coeff(k - i)))
                    .sum()
            })
            .collect();
        Ok(Jet { dim: 1, coeffs })
    }

    /// Composes a scalar function `g` with this scalar jet `s`.
    ///
    /// `derivs[k]` must hold `g^{(k)}(s_0)` for `k = 0..=order`. The result is
    /// the jet of `g(s(t))`, obtained by resumming `sum_k g^{(k)}(s_0)/k! (s - s_0)^k`.
    pub fn compose(&self, derivs: &[f64]) -> Result<Jet> {
        self.check_dim(1)?;
        let p = self.order();
        if derivs.len() < p + 1 {
            return Err(Error::OrderMismatch {
                left: p,
                right: derivs.len().saturating_sub(1),
            });
        }
        let mut out = vec![0.0; p + 1];
        out[0] = derivs[0];
        if p == 0 {
            return Ok(Jet::scalar(out));
        }
        // delta = s - s_0 has a zero constant term, so delta^k starts at order k.
        let mut delta = self.coeffs.clone();
        delta[0] = 0.0;
        let mut power = delta.clone();
        for (k, d) in derivs.iter().enumerate().take(p + 1).skip(1) {
            let w = d / factorial(k);
            for j in k..=p {
                out[j] += w * power[j];
            }
            if k < p {
                let mut next = vec![0.0; p + 1];
                for j in (k + 1)..=p {
                    next[j] = (1..=(j - k)).map(|i| delta[i] * power[j - i]).sum();
                }
                power = next;
            }
        }
        Ok(Jet::scalar(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn worked_examples() {
        let a = Jet::scalar(vec![1.0, 2.0]);
        let b = Jet::scalar(vec![3.0, -1.0]);
        assert_eq!(a.mul(&b).unwrap(), Jet::scalar(vec![3.0, 5.0]));
        assert_eq!(a.add(&b).unwrap(), Jet::scalar(vec![4.0, 1.0]));

        let u = Jet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let v = Jet::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(u.inner(&v).unwrap(), Jet::scalar(vec![0.0, 2.0]));
    }

    #[test]
    fn mismatches_are_errors() {
        let a = Jet::scalar(vec![1.0, 2.0]);
        let b = Jet::scalar(vec![1.0, 2.0, 3.0]);
        assert!(matches!(a.add(&b), Err(Error::OrderMismatch { .. })));
        let u = Jet::constant(&[1.0, 2.0], 1);
        let w = Jet::constant(&[1.0, 2.0, 3.0], 1);
        assert!(matches!(u.inner(&w), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(u.mul(&w), Err(Error::DimensionMismatch { .. })));
        assert!(Jet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn scalar_broadcasts_over_vector() {
        let s = Jet::scalar(vec![2.0, 1.0]);
        let v = Jet::new(vec![vec![1.0, -1.0], vec![0.5, 0.0]]).unwrap();
        let p = s.mul(&v).unwrap();
        assert_eq!(p.coeff(0), &[2.0, -2.0]);
        assert_eq!(p.coeff(1), &[2.0, -1.0]);
        assert_eq!(v.mul(&s).unwrap(), p);
    }

    #[test]
    fn compose_matches_polynomial_chain_rule() {
        // s(t) = 1 + 2t + 3t^2, g(x) = x^3  =>  g(s(t)) expanded by hand.
        let s = Jet::scalar(vec![1.0, 2.0, 3.0, 0.0]);
        let derivs = [1.0, 3.0, 6.0, 6.0];
        let g = s.compose(&derivs).unwrap();
        // (1 + 2t + 3t^2)^3 = 1 + 6t + 21t^2 + 44t^3 + ...
        let want = [1.0, 6.0, 21.0, 44.0];
        for (j, w) in want.iter().enumerate() {
            assert_relative_eq!(g.coeff(j)[0], *w, epsilon = 1e-14);
        }
    }

    #[test]
    fn compose_of_exp_matches_series() {
        // exp(t) composed from derivatives of exp at 0 on s(t) = t.
        let s = Jet::scalar(vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        let g = s.compose(&[1.0; 5]).unwrap();
        for j in 0..5 {
            assert_relative_eq!(g.coeff(j)[0], 1.0 / factorial(j), epsilon = 1e-15);
        }
    }

    #[test]
    fn derivative_round_trip() {
        let j = Jet::from_derivatives(vec![vec![1.0], vec![2.0], vec![6.0]]).unwrap();
        assert_eq!(j.coeff(2), &[3.0]);
        assert_eq!(j.derivative(2), vec![6.0]);
    }
}
