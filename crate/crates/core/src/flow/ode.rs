//! Embedded Dormand–Prince 5(4) stepper with fourth-order dense output.

/// Maximum state dimension across all charts and passenger blocks:
/// 4 chart coordinates + 4 Jacobi components + 1 Riccati + 1 accumulator.
pub const MAX_DIM: usize = 10;

/// Right-hand side of an autonomous system in a fixed chart.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Bisection tolerance for event times.
    pub event_time_tol: f64,
    /// Pole-chart entry and exit distances (hysteresis).
    pub pole_enter: f64,
    pub pole_exit: f64,
    /// Record every accepted step, or only events and endpoints.
    pub record_steps: bool,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        IntegrationOptions {
            rtol: 1e-11,
            atol: 1e-13,
            h_max: 5.0,
            max_steps: 20_000_000,
            event_time_tol: 1e-12,
            pole_enter: 1e-2,
            pole_exit: 2e-2,
            record_steps: true,
        }
    }
}

impl IntegrationOptions {
    pub fn with_tolerance(mut self, rtol: f64) -> Self {
        self.rtol = rtol;
        self.atol = rtol * 1e-2;
        self
    }
}

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output polynomial.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub s0: f64,
    pub h: f64,
    pub dim: usize,
    y0: [f64; MAX_DIM],
    rcont: [[f64; MAX_DIM]; 5],
}

impl DenseStep {
    pub fn s1(&self) -> f64 {
        self.s0 + self.h
    }

    /// Interpolated state at s in [s0, s0 + h].
    pub fn eval(&self, s: f64, out: &mut [f64]) {
        let th = (s - self.s0) / self.h;
        let th1 = 1.0 - th;
        for i in 0..self.dim {
            out[i] = self.rcont[0][i]
                + th
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + th * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        let _ = self.y0;
    }
}

/// Adaptive stepper state for one chart segment.
pub struct Stepper {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h: f64,
}

pub enum StepOutcome {
    Accepted(DenseStep),
    /// Step size collapsed below the floor.
    Failed { s: f64 },
}

impl Stepper {
    pub fn new(opts: &IntegrationOptions) -> Self {
        Stepper {
            rtol: opts.rtol,
            atol: opts.atol,
            h_max: opts.h_max,
            h: 0.0,
        }
    }

    /// Initial step-size guess from the field magnitude.
    pub fn init_h(&mut self, field: &dyn VectorField, y: &[f64]) {
        let mut dy = [0.0; MAX_DIM];
        field.eval(y, &mut dy);
        let ynorm: f64 = y
            .iter()
            .take(field.dim())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(1e-3);
        let fnorm: f64 = dy
            .iter()
            .take(field.dim())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
            .max(1e-3);
        self.h = (0.01 * ynorm / fnorm).clamp(1e-8, self.h_max.min(0.1));
    }

    /// Advance one accepted step from (s, y), writing the new state into y.
    /// `s_cap` truncates the proposed step (end of integration window).
    pub fn step(
        &mut self,
        field: &dyn VectorField,
        s: f64,
        y: &mut [f64],
        s_cap: f64,
        forward: bool,
    ) -> StepOutcome {
        let dim = field.dim();
        let dir = if forward { 1.0 } else { -1.0 };
        let mut k = [[0.0; MAX_DIM]; 7];
        let mut ytmp = [0.0; MAX_DIM];
        loop {
            let mut h = self.h.min(self.h_max);
            let remaining = (s_cap - s).abs();
            if h > remaining {
                h = remaining;
            }
            if h < 1e-14 * (1.0 + s.abs()) {
                return StepOutcome::Failed { s };
            }
            let hs = dir * h;
            field.eval(y, &mut k[0]);
            stage(&mut ytmp, y, &k, &A2, hs, dim);
            field.eval(&ytmp, &mut k[1]);
            stage(&mut ytmp, y, &k, &A3, hs, dim);
            field.eval(&ytmp, &mut k[2]);
            stage(&mut ytmp, y, &k, &A4, hs, dim);
            field.eval(&ytmp, &mut k[3]);
            stage(&mut ytmp, y, &k, &A5, hs, dim);
            field.eval(&ytmp, &mut k[4]);
            stage(&mut ytmp, y, &k, &A6, hs, dim);
            field.eval(&ytmp, &mut k[5]);
            // Fifth-order solution.
            let mut y1 = [0.0; MAX_DIM];
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, b) in B.iter().enumerate() {
                    acc += b * k[j][i];
                }
                y1[i] = y[i] + hs * acc;
            }
            field.eval(&y1, &mut k[6]);
            // Error estimate.
            let mut err: f64 = 0.0;
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, e) in E.iter().enumerate() {
                    acc += e * k[j][i];
                }
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err = err.max((hs * acc / sc).abs());
            }
            if err <= 1.0 || h <= 1e-13 * (1.0 + s.abs()) {
                // Build the dense output.
                let mut dense = DenseStep {
                    s0: s,
                    h: hs,
                    dim,
                    y0: [0.0; MAX_DIM],
                    rcont: [[0.0; MAX_DIM]; 5],
                };
                for i in 0..dim {
                    let ydiff = y1[i] - y[i];
                    let bspl = hs * k[0][i] - ydiff;
                    dense.y0[i] = y[i];
                    dense.rcont[0][i] = y[i];
                    dense.rcont[1][i] = ydiff;
                    dense.rcont[2][i] = bspl;
                    dense.rcont[3][i] = ydiff - hs * k[6][i] - bspl;
                    let mut acc = 0.0;
                    for (j, d) in D.iter().enumerate() {
                        acc += d * k[j][i];
                    }
                    dense.rcont[4][i] = hs * acc;
                }
                y[..dim].copy_from_slice(&y1[..dim]);
                // Step-size update for the next step.
                let scale = if err > 0.0 {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                self.h = (h * scale).min(self.h_max);
                return StepOutcome::Accepted(dense);
            }
            let scale = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            self.h = h * scale;
        }
    }
}

#[inline]
fn stage(out: &mut [f64; MAX_DIM], y: &[f64], k: &[[f64; MAX_DIM]; 7], a: &[f64], hs: f64, dim: usize) {
    for i in 0..dim {
        let mut acc = 0.0;
        for (j, aj) in a.iter().enumerate() {
            acc += aj * k[j][i];
        }
        out[i] = y[i] + hs * acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic;
    impl VectorField for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy_and_dense_output() {
        let opts = IntegrationOptions::default();
        let mut stepper = Stepper::new(&opts);
        let mut y = [0.0; MAX_DIM];
        y[1] = 1.0; // y = sin(s)
        stepper.init_h(&Harmonic, &y);
        let mut s = 0.0;
        let target = 10.0;
        let mut checked_dense = false;
        while s < target {
            match stepper.step(&Harmonic, s, &mut y, target, true) {
                StepOutcome::Accepted(dense) => {
                    // Check interpolation mid-step.
                    let mid = dense.s0 + 0.37 * dense.h;
                    let mut buf = [0.0; MAX_DIM];
                    dense.eval(mid, &mut buf);
                    assert!(
                        (buf[0] - mid.sin()).abs() < 1e-9,
                        "dense output off at {mid}: {} vs {}",
                        buf[0],
                        mid.sin()
                    );
                    checked_dense = true;
                    s = dense.s1();
                }
                StepOutcome::Failed { .. } => panic!("step failed"),
            }
        }
        assert!(checked_dense);
        assert!((y[0] - target.sin()).abs() < 1e-9);
        assert!((y[1] - target.cos()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let opts = IntegrationOptions::default();
        let mut stepper = Stepper::new(&opts);
        let mut y = [0.0; MAX_DIM];
        y[0] = (5.0f64).sin();
        y[1] = (5.0f64).cos();
        stepper.init_h(&Harmonic, &y);
        let mut s = 5.0;
        while s > 0.0 {
            match stepper.step(&Harmonic, s, &mut y, 0.0, false) {
                StepOutcome::Accepted(d) => s = d.s1(),
                StepOutcome::Failed { .. } => panic!("step failed"),
            }
        }
        assert!(y[0].abs() < 1e-9);
        assert!((y[1] - 1.0).abs() < 1e-9);
    }
}
