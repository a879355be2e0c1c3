//! Derivative-free and finite-difference minimizers with an evaluation budget.

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fx: f64,
    /// Best value after each accepted step, starting with the initial point.
    pub trajectory: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

struct Budgeted<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> Result<f64>,
    used: usize,
    budget: usize,
}

impl Budgeted<'_> {
    fn left(&self) -> usize {
        self.budget - self.used
    }

    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        self.used += 1;
        let v = (self.f)(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }
}

/// Nelder-Mead with standard coefficients; converged once every vertex lies
/// within `tol` of the best one.
pub fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    step: f64,
    budget: usize,
    tol: f64,
) -> Result<OptimResult> {
    let p = x0.len();
    let mut fb = Budgeted { f, used: 0, budget };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p + 1);
    simplex.push((x0.to_vec(), fb.eval(x0)?));
    let mut trajectory = vec![simplex[0].1];
    for i in 0..p {
        if fb.left() == 0 {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += step;
        let v = fb.eval(&x)?;
        simplex.push((x, v));
    }
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s.iter()
            .skip(1)
            .map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    let mut converged = simplex.len() == p + 1 && diameter(&simplex) < tol;
    while !converged && simplex.len() == p + 1 && fb.left() > 0 {
        let worst = simplex[p].clone();
        let centroid: Vec<f64> =
            (0..p).map(|k| simplex[..p].iter().map(|(x, _)| x[k]).sum::<f64>() / p as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };
        let xr = along(1.0);
        let fr = fb.eval(&xr)?;
        if fr < simplex[0].1 {
            if fb.left() > 0 {
                let xe = along(2.0);
                let fe = fb.eval(&xe)?;
                simplex[p] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else {
                simplex[p] = (xr, fr);
            }
        } else if fr < simplex[p - 1].1 {
            simplex[p] = (xr, fr);
        } else {
            if fb.left() == 0 {
                break;
            }
            let (xc, fc) = if fr < worst.1 {
                let xc = along(0.5);
                let fc = fb.eval(&xc)?;
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = fb.eval(&xc)?;
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[p] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    if fb.left() == 0 {
                        break;
                    }
                    let x: Vec<f64> = best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let fx = fb.eval(&x)?;
                    *v = (x, fx);
                }
            }
        }
        sort(&mut simplex);
        trajectory.push(simplex[0].1);
        converged = diameter(&simplex) < tol;
    }
    let (x, fx) = simplex.swap_remove(0);
    Ok(OptimResult { x, fx, trajectory, evaluations: fb.used, converged })
}

/// Central-difference gradient with step `1e-4 (1 + |x_i|)`.
fn gradient(fb: &mut Budgeted<'_>, x: &[f64]) -> Result<Option<Vec<f64>>> {
    if fb.left() < 2 * x.len() {
        return Ok(None);
    }
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-4 * (1.0 + x[i].abs());
        y[i] = x[i] + h;
        let fp = fb.eval(&y)?;
        y[i] = x[i] - h;
        let fm = fb.eval(&y)?;
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(Some(g))
}

/// Gradient descent with finite-difference gradients and a backtracking step;
/// converged once the gradient norm drops below `tol`.
pub fn fd_gradient(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    x0: &[f64],
    step: f64,
    budget: usize,
    tol: f64,
) -> Result<OptimResult> {
    let mut fb = Budgeted { f, used: 0, budget };
    let mut x = x0.to_vec();
    let mut fx = fb.eval(&x)?;
    let mut trajectory = vec![fx];
    let mut lr = step;
    let mut converged = false;
    'outer: while let Some(g) = gradient(&mut fb, &x)? {
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gn < tol {
            converged = true;
            break;
        }
        loop {
            if fb.left() == 0 {
                break 'outer;
            }
            let xn: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - lr * b).collect();
            let fnew = fb.eval(&xn)?;
            if fnew <= fx - 1e-4 * lr * gn * gn {
                x = xn;
                fx = fnew;
                trajectory.push(fx);
                lr *= 2.0;
                break;
            }
            lr *= 0.5;
            if lr * gn < 1e-14 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                // no descent at representable step sizes
                converged = true;
                break 'outer;
            }
        }
    }
    Ok(OptimResult { x, fx, trajectory, evaluations: fb.used, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64]) -> Result<f64> {
        Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2))
    }

    fn rosen(x: &[f64]) -> Result<f64> {
        Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
    }

    #[test]
    fn nelder_mead_finds_quadratic_minimum() {
        let r = nelder_mead(&mut quad, &[0.0, 0.0], 0.5, 500, 1e-6).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5);
        assert!(r.trajectory.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.evaluations <= 500);
    }

    #[test]
    fn nelder_mead_respects_budget() {
        let r = nelder_mead(&mut rosen, &[-1.2, 1.0], 0.5, 60, 1e-10).unwrap();
        assert!(!r.converged);
        assert!(r.evaluations <= 60);
    }

    #[test]
    fn gradient_descent_on_quadratic() {
        let r = fd_gradient(&mut quad, &[0.0, 0.0], 0.1, 2000, 1e-4).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-4);
        assert!(r.trajectory.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn start_at_minimum_stays() {
        let r = nelder_mead(&mut quad, &[1.0, -2.0], 0.5, 500, 1e-4).unwrap();
        assert_eq!(r.x, vec![1.0, -2.0]);
        assert_eq!(r.fx, 0.0);
    }
}
