//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use hawkes_epi::{ModelParams, State};

/// Right-hand side of the deterministic skeleton, written out from the
/// compartment equations rather than calling the library drift.
pub fn skeleton_rhs(p: &ModelParams, x: &[f64; 6]) -> [f64; 6] {
    let [s_h, i_h, q_h, r_h, s_r, i_r] = *x;
    let n_h = s_h + i_h + q_h + r_h;
    let n_r = s_r + i_r;
    let force_h = (1.0 - p.p) * (p.eta1 * i_r + p.eta2 * i_h) * s_h / n_h;
    let force_r = p.eta3 * s_r * i_r / n_r;
    [
        p.theta_h - force_h - p.mu_h * s_h,
        force_h - (p.mu_h + p.delta_h + p.zeta) * i_h,
        p.zeta * i_h - (p.mu_h + p.gamma_h + (1.0 - p.theta_q) * p.delta_h) * q_h,
        p.gamma_h * q_h - p.mu_h * r_h,
        p.theta_r - force_r - p.mu_r * s_r,
        force_r - (p.mu_r + p.delta_r) * i_r,
    ]
}

/// Dormand–Prince 5(4) with step-size control, integrating `rhs` from `t0`
/// to `t1`.
pub fn dormand_prince<F>(rhs: F, x0: [f64; 6], t0: f64, t1: f64, rtol: f64, atol: f64) -> [f64; 6]
where
    F: Fn(&[f64; 6]) -> [f64; 6],
{
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut x = x0;
    let mut t = t0;
    let mut h = (t1 - t0) / 1000.0;
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [[0.0; 6]; 7];
        for s in 0..7 {
            let mut xs = x;
            for j in 0..s {
                for c in 0..6 {
                    xs[c] += h * A[s][j] * k[j][c];
                }
            }
            k[s] = rhs(&xs);
        }
        let mut x5 = x;
        let mut err: f64 = 0.0;
        for c in 0..6 {
            let (mut d5, mut d4) = (0.0, 0.0);
            for s in 0..7 {
                d5 += B5[s] * k[s][c];
                d4 += B4[s] * k[s][c];
            }
            x5[c] += h * d5;
            let scale = atol + rtol * x[c].abs().max(x5[c].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            x = x5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    x
}

/// Endemic equilibrium of the deterministic skeleton for parameters with
/// `eta3 > mu_r + delta_r`.
///
/// The rodent block is solved in closed form; the human block reduces to a
/// scalar equation in `I_h`, solved by bisection.
pub fn endemic_equilibrium(p: &ModelParams) -> State {
    let f = (p.mu_r + p.delta_r) / p.eta3;
    assert!(f < 1.0, "rodent infection must be self-sustaining");
    let n_r = p.theta_r / (p.mu_r * f + (p.mu_r + p.delta_r) * (1.0 - f));
    let (s_r, i_r) = (f * n_r, (1.0 - f) * n_r);

    let k = p.mu_h + p.delta_h + p.zeta;
    let c_q = p.zeta / (p.mu_h + p.gamma_h + (1.0 - p.theta_q) * p.delta_h);
    let c_r = p.gamma_h * c_q / p.mu_h;
    let humans = |i_h: f64| {
        let s_h = (p.theta_h - k * i_h) / p.mu_h;
        (s_h, c_q * i_h, c_r * i_h)
    };
    let residual = |i_h: f64| {
        let (s_h, q_h, r_h) = humans(i_h);
        let n_h = s_h + i_h + q_h + r_h;
        (1.0 - p.p) * (p.eta1 * i_r + p.eta2 * i_h) * s_h / n_h - k * i_h
    };
    // residual > 0 at 0 (rodent forcing) and < 0 where S_h vanishes.
    let (mut lo, mut hi) = (0.0, p.theta_h / k);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i_h = 0.5 * (lo + hi);
    let (s_h, q_h, r_h) = humans(i_h);
    State::new(s_h, i_h, q_h, r_h, s_r, i_r)
}

/// Exponential integral `E1(x)` for moderate `x > 0` by its power series.
pub fn e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let add = -term / k as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + sum
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let (m, _) = mean_se(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
