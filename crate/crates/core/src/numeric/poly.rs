//! Dense univariate polynomials with exact coefficient arithmetic.
//!
//! Profile pieces are stored as polynomials in a shifted variable so that
//! near-pole quantities like `(r^2 - m^2) / m^4` can be formed by coefficient
//! manipulation instead of cancellation-prone floating-point subtraction.

/// Polynomial `c[0] + c[1] u + c[2] u^2 + ...` in a local variable `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Poly { coeffs }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut coeffs = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![0.0; n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0.0);
            let b = other.coeffs.get(i).copied().unwrap_or(0.0);
            *c = a - b;
        }
        Poly { coeffs }
    }

    /// Divide by `u^k`, asserting the low-order coefficients vanish to
    /// rounding. Used to form `(r^2 - m^2)/m^4` exactly near poles.
    pub fn shift_down(&self, k: usize, tol: f64) -> Poly {
        for i in 0..k.min(self.coeffs.len()) {
            debug_assert!(
                self.coeffs[i].abs() <= tol,
                "shift_down: coefficient {i} = {} not negligible",
                self.coeffs[i]
            );
        }
        if self.coeffs.len() <= k {
            return Poly::zero();
        }
        Poly {
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    /// Re-expand around a new origin: returns q with q(v) = p(a + v).
    pub fn recenter(&self, a: f64) -> Poly {
        // Repeated synthetic division by (u - a); the remainders are the
        // Taylor coefficients at a.
        let n = self.coeffs.len();
        let mut coeffs = self.coeffs.clone();
        let mut shifted = vec![0.0; n];
        for item in shifted.iter_mut().take(n) {
            let mut rem = coeffs[coeffs.len() - 1];
            let mut quot = vec![0.0; coeffs.len().saturating_sub(1)];
            for i in (0..coeffs.len() - 1).rev() {
                quot[i] = rem;
                rem = coeffs[i] + rem * a;
            }
            *item = rem;
            if quot.is_empty() {
                break;
            }
            coeffs = quot;
        }
        Poly { coeffs: shifted }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivative() {
        let p = Poly::new(vec![1.0, -2.0, 3.0]); // 1 - 2u + 3u^2
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(2.0), 9.0);
        let d = p.derivative();
        assert_eq!(d.coeffs, vec![-2.0, 6.0]);
    }

    #[test]
    fn recenter_matches_direct_eval() {
        let p = Poly::new(vec![0.5, 1.0, -0.25, 2.0]);
        let q = p.recenter(1.7);
        for &v in &[-0.3, 0.0, 0.9, 2.2] {
            let lhs = q.eval(v);
            let rhs = p.eval(1.7 + v);
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn shift_down_strips_leading_zeros() {
        let p = Poly::new(vec![0.0, 0.0, 3.0, 4.0]);
        let q = p.shift_down(2, 1e-14);
        assert_eq!(q.coeffs, vec![3.0, 4.0]);
    }

    #[test]
    fn mul_and_sub() {
        let a = Poly::new(vec![1.0, 1.0]); // 1 + u
        let b = Poly::new(vec![1.0, -1.0]); // 1 - u
        let prod = a.mul(&b); // 1 - u^2
        assert_eq!(prod.coeffs, vec![1.0, 0.0, -1.0]);
        let diff = prod.sub(&Poly::new(vec![1.0]));
        assert_eq!(diff.coeffs, vec![0.0, 0.0, -1.0]);
    }
}
