//! Nelder-Mead simplex minimization.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_iter: usize,
    /// Stop when `max f - min f` over the simplex falls below this.
    pub f_tol: f64,
    /// Stop when every vertex is within this distance of the best one.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iter: 2000,
            f_tol: 1e-15,
            x_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
}

pub fn nelder_mead<const N: usize, F>(mut f: F, x0: [f64; N], opts: NelderMeadOptions) -> Minimum<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += opts.initial_step;
        let v = f(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        let spread = (0..=N)
            .flat_map(|k| (0..N).map(move |i| (k, i)))
            .map(|(k, i)| (simplex[k].0[i] - simplex[0].0[i]).abs())
            .fold(0.0, f64::max);
        if worst - best <= opts.f_tol || spread <= opts.x_tol {
            break;
        }

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for i in 0..N {
                centroid[i] += x[i] / N as f64;
            }
        }
        let along = |coef: f64| -> [f64; N] {
            std::array::from_fn(|i| centroid[i] + coef * (simplex[N].0[i] - centroid[i]))
        };

        let xr = along(-ALPHA);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-GAMMA);
            let fe = f(&xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(-RHO);
            (x, f(&x))
        } else {
            let x = along(RHO);
            (x, f(&x))
        };
        if fc < worst.min(fr) {
            simplex[N] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let x_best = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let x: [f64; N] =
                std::array::from_fn(|i| x_best[i] + SIGMA * (vertex.0[i] - x_best[i]));
            *vertex = (x, f(&x));
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    Minimum {
        x: simplex[0].0,
        value: simplex[0].1,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let m = nelder_mead(
            |x: &[f64; 3]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2) + x[2] * x[2],
            [0.0; 3],
            NelderMeadOptions::default(),
        );
        assert!(m.value < 1e-14);
        assert!((m.x[0] - 1.0).abs() < 1e-6);
        assert!((m.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let m = nelder_mead(
            |x: &[f64; 2]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            [-1.2, 1.0],
            NelderMeadOptions {
                max_iter: 5000,
                ..Default::default()
            },
        );
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m);
    }
}
