//! Chebyshev sampling with barycentric interpolation.

/// A function tabulated at Chebyshev–Gauss–Lobatto nodes on [-a, a],
/// evaluated by the barycentric formula (spectrally accurate for smooth
/// functions, exact at the nodes).
#[derive(Debug, Clone)]
pub struct ChebyshevTable {
    pub half_width: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl ChebyshevTable {
    /// Chebyshev–Lobatto nodes x_k = a cos(k pi / (n-1)), k = 0..n-1,
    /// ordered increasing.
    pub fn nodes(half_width: f64, n: usize) -> Vec<f64> {
        assert!(n >= 2);
        (0..n)
            .map(|k| -half_width * (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
            .collect()
    }

    pub fn build(half_width: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        let nodes = Self::nodes(half_width, n);
        let values = nodes.iter().map(|&x| f(x)).collect();
        ChebyshevTable {
            half_width,
            nodes,
            values,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        // Barycentric weights for Lobatto nodes: (-1)^k, halved at the ends.
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..n {
            let dx = x - self.nodes[k];
            if dx == 0.0 {
                return self.values[k];
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n - 1 {
                w *= 0.5;
            }
            let t = w / dx;
            num += t * self.values[k];
            den += t;
        }
        num / den
    }

    pub fn in_range(&self, x: f64) -> bool {
        x.abs() <= self.half_width
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_smooth_function_spectrally() {
        let table = ChebyshevTable::build(1.2, 48, |x| (2.0 * x).sin() + 0.3 * x.cosh());
        for i in 0..200 {
            let x = -1.2 + 2.4 * i as f64 / 199.0;
            let exact = (2.0 * x).sin() + 0.3 * x.cosh();
            assert!(
                (table.eval(x) - exact).abs() < 1e-12,
                "x={x}: {} vs {exact}",
                table.eval(x)
            );
        }
    }

    #[test]
    fn exact_at_nodes() {
        let table = ChebyshevTable::build(0.7, 9, |x| x * x * x - x);
        for (k, &x) in table.nodes.clone().iter().enumerate() {
            assert_eq!(table.eval(x), table.values[k]);
        }
    }
}
