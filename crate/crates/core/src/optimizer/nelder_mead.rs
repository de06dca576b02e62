//! Nelder–Mead minimization with dimension-adaptive coefficients.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// edge length of the initial simplex
    pub initial_step: f64,
    /// stop once every vertex is this close to the best one
    pub diameter_tol: f64,
    pub max_evaluations: usize,
    /// fresh simplices built around the converged point
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.5,
            diameter_tol: 1e-7,
            max_evaluations: 20_000,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl Simplex {
    fn sort(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn diameter(&self) -> f64 {
        let best = &self.points[0];
        self.points[1..]
            .iter()
            .map(|p| {
                p.iter()
                    .zip(best)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimizes `f` from `x0`. Non-finite values count as `+inf`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one parameter");
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut evaluations = 0usize;
    let mut iterations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0, &mut evaluations);
    let mut converged = false;
    let mut step = opts.initial_step;
    for round in 0..=opts.restarts {
        let mut s = Simplex {
            points: vec![best_x.clone()],
            values: vec![best_v],
        };
        for i in 0..n {
            let mut p = best_x.clone();
            p[i] += step;
            let v = eval(&p, &mut evaluations);
            s.points.push(p);
            s.values.push(v);
        }
        converged = false;
        while evaluations < opts.max_evaluations {
            s.sort();
            if s.diameter() < opts.diameter_tol {
                converged = true;
                break;
            }
            iterations += 1;
            let mut centroid = vec![0.0; n];
            for p in &s.points[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / nf;
                }
            }
            let worst = s.points[n].clone();
            let fw = s.values[n];
            let xr = affine(&centroid, &worst, -alpha);
            let fr = eval(&xr, &mut evaluations);
            if fr < s.values[0] {
                let xe = affine(&centroid, &worst, -gamma);
                let fe = eval(&xe, &mut evaluations);
                if fe < fr {
                    s.points[n] = xe;
                    s.values[n] = fe;
                } else {
                    s.points[n] = xr;
                    s.values[n] = fr;
                }
                continue;
            }
            if fr < s.values[n - 1] {
                s.points[n] = xr;
                s.values[n] = fr;
                continue;
            }
            let (xc, fc) = if fr < fw {
                let xc = affine(&centroid, &worst, -rho);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            } else {
                let xc = affine(&centroid, &worst, rho);
                let fc = eval(&xc, &mut evaluations);
                (xc, fc)
            };
            if fc < fr.min(fw) {
                s.points[n] = xc;
                s.values[n] = fc;
                continue;
            }
            let best = s.points[0].clone();
            for i in 1..=n {
                s.points[i] = affine(&best, &s.points[i], sigma);
                s.values[i] = eval(&s.points[i], &mut evaluations);
            }
        }
        s.sort();
        let improved = s.values[0] < best_v;
        if s.values[0] <= best_v {
            best_v = s.values[0];
            best_x = s.points[0].clone();
        }
        if round > 0 && !improved {
            break;
        }
        step = (step * 0.1).max(10.0 * opts.diameter_tol);
    }
    NelderMeadResult {
        x: best_x,
        value: best_v,
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn kinked_minimum() {
        // the minimum of a max of two planes sits on their crossing
        let r = nelder_mead(
            |x| (x[0] + x[1] - 1.0).max(2.0 * x[1] - x[0]) + 0.1 * (x[0] * x[0] + x[1] * x[1]),
            &[3.0, 3.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.converged);
        let v = |x: &[f64]| (x[0] + x[1] - 1.0).max(2.0 * x[1] - x[0]) + 0.1 * (x[0] * x[0] + x[1] * x[1]);
        for d in [[1e-3, 0.0], [0.0, 1e-3], [-1e-3, 0.0], [0.0, -1e-3]] {
            assert!(v(&[r.x[0] + d[0], r.x[1] + d[1]]) >= r.value);
        }
    }

    #[test]
    fn infinite_values_are_avoided() {
        let r = nelder_mead(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) + x[1] * x[1] },
            &[2.0, 1.0],
            &NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 0.5).abs() < 1e-6);
    }
}
