//! Bounded Gauss–Newton polish of a simplex estimate.
//!
//! The simplex locates the basin; near the minimum the sum of squares is flat to rounding,
//! so the last digits come from solving the normal equations with the analytic Jacobian.

use crate::model::capacity_unchecked;

/// Relative change in the sum of squares below which it no longer orders candidates.
pub(crate) const NOISE_LEVEL: f64 = 1e-12;

pub(crate) struct Polish<'a> {
    pub ns: &'a [f64],
    pub xs: &'a [f64],
    pub fit_x1: bool,
    pub upper: [f64; 3],
    pub max_iter: usize,
}

impl Polish<'_> {
    fn sse(&self, theta: &[f64; 3]) -> f64 {
        self.ns
            .iter()
            .zip(self.xs)
            .map(|(&n, &x)| (x - theta[2] * capacity_unchecked(n, theta[0], theta[1])).powi(2))
            .sum()
    }

    /// Gradient-side terms `J^T J` and `J^T r` for residuals `x - x1 C`.
    fn normal_equations(&self, theta: &[f64; 3]) -> ([[f64; 3]; 3], [f64; 3]) {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        let [alpha, beta, x1] = *theta;
        for (&n, &x) in self.ns.iter().zip(self.xs) {
            let denom = 1.0 + alpha * (n - 1.0) + beta * n * (n - 1.0);
            let c = n / denom;
            let r = x - x1 * c;
            // derivatives of the model x1 C
            let d_model = [-x1 * c * (n - 1.0) / denom, -x1 * c * n * (n - 1.0) / denom, c];
            for i in 0..3 {
                jtr[i] += d_model[i] * r;
                for j in 0..3 {
                    jtj[i][j] += d_model[i] * d_model[j];
                }
            }
        }
        (jtj, jtr)
    }

    pub fn run(&self, start: [f64; 3]) -> [f64; 3] {
        let mut theta = start;
        let mut f = self.sse(&theta);
        let mut lambda = 0.0;
        let slack = 8.0 * f64::EPSILON;
        for _ in 0..self.max_iter {
            let mut base = theta;
            let mut free = [true, true, self.fit_x1];
            let (step, jtj, jtr) = loop {
                let (jtj, jtr) = self.normal_equations(&base);
                let Some(step) = solve_free(&jtj, &jtr, &free, lambda) else {
                    return theta;
                };
                // a coordinate the step would push through zero is pinned there
                let blocked: Vec<usize> = (0..2).filter(|&k| free[k] && base[k] + step[k] <= 0.0).collect();
                if blocked.is_empty() {
                    break (step, jtj, jtr);
                }
                for k in blocked {
                    free[k] = false;
                    base[k] = 0.0;
                }
            };
            let diag_max = (0..3).map(|k| jtj[k][k]).fold(0.0, f64::max);
            let mut trial = base;
            for k in 0..3 {
                trial[k] = (base[k] + step[k]).min(self.upper[k]);
            }
            let f_trial = self.sse(&trial);
            // close to the minimum the change in f drowns in rounding; the undamped step
            // then still moves toward the zero of the gradient, which is computed accurately
            let predicted: f64 = 0.5 * (0..3).map(|k| step[k] * jtr[k]).sum::<f64>();
            let in_noise = lambda == 0.0 && predicted.abs() <= NOISE_LEVEL * f && f_trial <= f * (1.0 + NOISE_LEVEL);
            if f_trial <= f + slack * f || in_noise {
                let tiny = (0..3).all(|k| (trial[k] - theta[k]).abs() <= 4.0 * f64::EPSILON * theta[k].abs());
                theta = trial;
                f = f_trial;
                lambda = if lambda <= 1e-8 * diag_max { 0.0 } else { lambda / 10.0 };
                if tiny {
                    break;
                }
            } else {
                lambda = if lambda == 0.0 { 1e-9 * diag_max } else { lambda * 10.0 };
                if lambda > 1e6 * diag_max {
                    break;
                }
            }
        }
        theta
    }
}

/// Solves `(J^T J + lambda diag) d = J^T r` over the free coordinates.
fn solve_free(jtj: &[[f64; 3]; 3], jtr: &[f64; 3], free: &[bool; 3], lambda: f64) -> Option<[f64; 3]> {
    let idx: Vec<usize> = (0..3).filter(|&k| free[k]).collect();
    let m = idx.len();
    let mut step = [0.0; 3];
    if m == 0 {
        return Some(step);
    }
    let mut a: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| jtj[i][j] + if i == j { lambda * jtj[i][i] } else { 0.0 }).collect())
        .collect();
    let mut b: Vec<f64> = idx.iter().map(|&i| jtr[i]).collect();
    for col in 0..m {
        let pivot = (col..m).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= factor * src;
            }
            b[row] -= factor * b[col];
        }
    }
    for row in (0..m).rev() {
        let tail: f64 = (row + 1..m).map(|k| a[row][k] * step[idx[k]]).sum();
        step[idx[row]] = (b[row] - tail) / a[row][row];
    }
    step.iter().all(|v| v.is_finite()).then_some(step)
}
