#![allow(dead_code)]

/// Steady state of the repairman birth–death chain by solving the global balance
/// equations with Gaussian elimination. States are the number of requests at the server.
/// Returns (throughput, mean queue length).
pub fn repairman_brute_force(n: usize, s: f64, z: f64) -> (f64, f64) {
    let states = n + 1;
    // generator matrix Q, pi Q = 0
    let mut q = vec![vec![0.0; states]; states];
    for k in 0..states {
        if k < n {
            q[k][k + 1] = (n - k) as f64 / z;
        }
        if k > 0 {
            q[k][k - 1] = 1.0 / s;
        }
        let out: f64 = q[k].iter().sum();
        q[k][k] = -out;
    }
    // transpose to A pi = 0, replace last row with normalization
    let mut a: Vec<Vec<f64>> = (0..states).map(|i| (0..states).map(|j| q[j][i]).collect()).collect();
    let mut b = vec![0.0; states];
    a[states - 1] = vec![1.0; states];
    b[states - 1] = 1.0;
    let pi = solve(a, b);
    let busy = 1.0 - pi[0];
    let queue: f64 = pi.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    (busy / s, queue)
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (dst, src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Throughput from the capacity formula written out directly.
pub fn usl_throughput(n: f64, alpha: f64, beta: f64, x1: f64) -> f64 {
    x1 * n / (1.0 + alpha * (n - 1.0) + beta * n * (n - 1.0))
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
