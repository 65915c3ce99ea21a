//! Nelder–Mead simplex search inside a box.
//!
//! Every trial vertex is clamped into the box before evaluation, so the search never
//! leaves the feasible region. Ordering of equal objective values is resolved by
//! lexicographic comparison of the vertex coordinates, which keeps runs reproducible.

use std::cmp::Ordering;

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexOptions {
    /// Stop when `f_worst - f_best <= ftol_rel * |f_best| + f_floor` and the simplex is small.
    pub ftol_rel: f64,
    pub f_floor: f64,
    /// Per-coordinate size tolerance, relative to each coordinate's `scale`.
    pub xtol_rel: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Vertex {
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Bounds<'a> {
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl Bounds<'_> {
    fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

fn order(a: &Vertex, b: &Vertex) -> Ordering {
    a.f.total_cmp(&b.f).then_with(|| {
        a.x.iter()
            .rev()
            .zip(b.x.iter().rev())
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Runs one simplex search from `start` with initial edge lengths `steps`.
///
/// An edge that would leave the box is flipped to the other side of `start`.
pub(crate) fn minimize<F>(
    f: &F,
    start: &[f64],
    steps: &[f64],
    scale: &[f64],
    bounds: Bounds<'_>,
    opts: SimplexOptions,
) -> (Vertex, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    let eval = |mut x: Vec<f64>| {
        bounds.project(&mut x);
        let f = f(&x);
        Vertex { x, f }
    };

    let mut simplex = Vec::with_capacity(dim + 1);
    simplex.push(eval(start.to_vec()));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += steps[i];
        if x[i] > bounds.upper[i] {
            x[i] = start[i] - steps[i];
        }
        simplex.push(eval(x));
    }

    let mut iterations = 0;
    while iterations < opts.max_iter {
        simplex.sort_by(order);
        let best = simplex[0].f;
        let worst = simplex[dim].f;
        let f_small = worst - best <= opts.ftol_rel * best.abs() + opts.f_floor;
        let x_small = (0..dim).all(|i| {
            let (lo, hi) =
                simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.x[i]), hi.max(v.x[i])));
            hi - lo <= opts.xtol_rel * scale[i]
        });
        if (f_small && x_small) || simplex.iter().all(|v| v.x == simplex[0].x) {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..dim).map(|i| simplex[..dim].iter().map(|v| v.x[i]).sum::<f64>() / dim as f64).collect();
        let along =
            |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[dim].x).map(|(c, w)| c + t * (w - c)).collect() };

        let reflected = eval(along(-1.0));
        if reflected.f < simplex[0].f {
            let expanded = eval(along(-2.0));
            simplex[dim] = if expanded.f < reflected.f { expanded } else { reflected };
            continue;
        }
        if reflected.f < simplex[dim - 1].f {
            simplex[dim] = reflected;
            continue;
        }
        let contracted = if reflected.f < simplex[dim].f { eval(along(-0.5)) } else { eval(along(0.5)) };
        if contracted.f < simplex[dim].f.min(reflected.f) {
            simplex[dim] = contracted;
            continue;
        }
        let best_x = simplex[0].x.clone();
        for v in simplex.iter_mut().skip(1) {
            let x = best_x.iter().zip(&v.x).map(|(b, p)| b + 0.5 * (p - b)).collect();
            *v = eval(x);
        }
    }
    simplex.sort_by(order);
    (simplex.swap_remove(0), iterations)
}
