//! Dormand–Prince 5(4) stepper for small autonomous-in-structure systems.

/// Right-hand side `y' = f(t, y)`.
pub trait Rhs<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> Rhs<N> for F {
    fn eval(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order weights are the last row of A; these are the error weights b5 - b4
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    /// Last accepted step proposal, reused by the next call.
    pub h: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepError {
    StepTooSmall(f64),
    TooManySteps,
    NonFinite(f64),
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64, h0: f64) -> Self {
        Self {
            rtol,
            atol,
            h_min: 1e-14,
            h: h0,
            max_steps: 1_000_000,
        }
    }

    /// Advance `y` from `t0` to exactly `t1`.
    pub fn integrate<const N: usize, F: Rhs<N>>(
        &mut self,
        f: &F,
        t0: f64,
        t1: f64,
        y: &mut [f64; N],
    ) -> Result<(), StepError> {
        let mut t = t0;
        let mut k1 = f.eval(t, y);
        let mut steps = 0;
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(StepError::TooManySteps);
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = *y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for m in 0..N {
                            ys[m] += h * a * kj[m];
                        }
                    }
                }
                k[s] = f.eval(t + C[s] * h, &ys);
            }
            let mut y_new = *y;
            for (j, kj) in k.iter().enumerate().take(6) {
                for m in 0..N {
                    y_new[m] += h * A[6][j] * kj[m];
                }
            }
            let mut err = 0.0f64;
            for m in 0..N {
                let e: f64 = (0..7).map(|j| E[j] * k[j][m]).sum::<f64>() * h;
                let sc = self.atol + self.rtol * y[m].abs().max(y_new[m].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                if h <= self.h_min {
                    return Err(StepError::NonFinite(t));
                }
                self.h = 0.25 * h;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                *y = y_new;
                k1 = k[6];
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                if h <= self.h_min {
                    return Err(StepError::StepTooSmall(t));
                }
                self.h = (h * factor).max(self.h_min);
            }
        }
        Ok(())
    }
}
