//! Dormand–Prince 5(4) embedded Runge–Kutta pair with elementary step control.

pub type State = [f64; 2];

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
/// Fifth-order weights (equal to the last row of `A`, first-same-as-last).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

pub enum StepOutcome<E> {
    Accepted { y: State, dydt: State, h_next: f64 },
    Rejected { h_next: f64 },
    Failed(E),
}

/// One attempted step from `(t, y)` with derivative `k1 = f(t, y)`.
pub fn try_step<E, F>(
    f: &mut F,
    t: f64,
    y: State,
    k1: State,
    h: f64,
    tol: Tolerances,
) -> StepOutcome<E>
where
    F: FnMut(f64, State) -> Result<State, E>,
{
    let mut k = [[0.0; 2]; 7];
    k[0] = k1;
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = match f(t + C[s] * h, ys) {
            Ok(v) => v,
            // non-evaluable stage (e.g. outside a domain): retry smaller
            Err(e) => {
                if h.abs() <= f64::EPSILON * t.abs().max(1.0) * 16.0 {
                    return StepOutcome::Failed(e);
                }
                return StepOutcome::Rejected { h_next: 0.25 * h };
            }
        };
    }
    let mut y5 = y;
    let mut err = 0.0;
    for i in 0..2 {
        let mut d5 = 0.0;
        let mut d4 = 0.0;
        for s in 0..7 {
            d5 += B5[s] * k[s][i];
            d4 += B4[s] * k[s][i];
        }
        y5[i] += h * d5;
        let sc = tol.abs + tol.rel * y[i].abs().max(y5[i].abs());
        let e = h * (d5 - d4) / sc;
        err += e * e;
    }
    let err = (err / 2.0).sqrt();
    let factor = if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    };
    if err <= 1.0 && err.is_finite() {
        StepOutcome::Accepted {
            y: y5,
            dydt: k[6],
            h_next: h * factor,
        }
    } else if err.is_finite() {
        StepOutcome::Rejected {
            h_next: h * factor.min(1.0),
        }
    } else {
        StepOutcome::Rejected { h_next: 0.25 * h }
    }
}

/// Starting step from the usual derivative-norm heuristic.
pub fn initial_step<E, F>(f: &mut F, t: f64, y: State, k1: State, tol: Tolerances) -> f64
where
    F: FnMut(f64, State) -> Result<State, E>,
{
    let sc = |i: usize| tol.abs + tol.rel * y[i].abs();
    let norm = |v: State| ((v[0] / sc(0)).powi(2) + (v[1] / sc(1)).powi(2)).sqrt() / 2f64.sqrt();
    let d0 = norm(y);
    let d1 = norm(k1);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = [y[0] + h0 * k1[0], y[1] + h0 * k1[1]];
    let d2 = match f(t + h0, y1) {
        Ok(k2) => norm([k2[0] - k1[0], k2[1] - k1[1]]) / h0,
        Err(_) => return h0,
    };
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
