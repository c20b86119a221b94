//! Certified minimization of `max_i [c_i + sum_g w_g * max_l (x_v - t)^2]` over the unit box.
//!
//! The objective is smoothed with nested log-sum-exp at temperature `tau`
//! and minimized by projected Newton steps while `tau` shrinks. The softmax
//! weights at each iterate define a convex combination of the quadratics,
//! whose exact minimum is a lower bound on the optimum.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Copy, Debug)]
pub(crate) struct Choice {
    pub var: usize,
    pub target: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Group {
    pub weight: f64,
    pub choices: Vec<Choice>,
}

#[derive(Clone, Debug)]
pub(crate) struct Piece {
    pub constant: f64,
    pub groups: Vec<Group>,
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub dim: usize,
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub x: Vec<f64>,
    /// Objective at `x`.
    pub upper: f64,
    /// Certified lower bound on the minimum.
    pub lower: f64,
    pub iterations: usize,
}

fn sq(v: f64) -> f64 {
    v * v
}

impl Problem {
    pub fn piece_value(&self, i: usize, x: &[f64]) -> f64 {
        let piece = &self.pieces[i];
        piece.constant
            + piece
                .groups
                .iter()
                .map(|g| {
                    g.weight
                        * g.choices
                            .iter()
                            .map(|c| sq(x[c.var] - c.target))
                            .fold(f64::NEG_INFINITY, f64::max)
                })
                .sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (0..self.pieces.len())
            .map(|i| self.piece_value(i, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smoothed value, gradient, Hessian and the lower bound implied by the
    /// softmax weights at `x`.
    fn smoothed(&self, x: &[f64], tau: f64, want_hess: bool) -> Eval {
        let d = self.dim;
        let mut h_vals = Vec::with_capacity(self.pieces.len());
        let mut grads = Vec::with_capacity(self.pieces.len());
        let mut hessians = Vec::with_capacity(self.pieces.len());
        // Per-piece accumulators for the lower bound: (sum w, sum w t, sum w t^2) per variable.
        let mut accs = Vec::with_capacity(self.pieces.len());

        for piece in &self.pieces {
            let mut h = piece.constant;
            let mut grad = DVector::zeros(d);
            let mut hess = if want_hess {
                DMatrix::zeros(d, d)
            } else {
                DMatrix::zeros(0, 0)
            };
            let mut acc = vec![[0.0f64; 3]; d];
            for g in &piece.groups {
                let qs: Vec<f64> = g.choices.iter().map(|c| sq(x[c.var] - c.target)).collect();
                let qmax = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let es: Vec<f64> = qs.iter().map(|q| ((q - qmax) / tau).exp()).collect();
                let z: f64 = es.iter().sum();
                h += g.weight * (qmax + tau * z.ln());
                // Mean of the choice gradients under the softmax weights, sparse by variable.
                let mut mean: Vec<(usize, f64)> = Vec::new();
                for (c, e) in g.choices.iter().zip(&es) {
                    let pi = e / z;
                    let gv = 2.0 * (x[c.var] - c.target);
                    grad[c.var] += g.weight * pi * gv;
                    let a = &mut acc[c.var];
                    let w = g.weight * pi;
                    a[0] += w;
                    a[1] += w * c.target;
                    a[2] += w * c.target * c.target;
                    if want_hess {
                        hess[(c.var, c.var)] += g.weight * pi * (2.0 + gv * gv / tau);
                        match mean.iter_mut().find(|(v, _)| *v == c.var) {
                            Some(m) => m.1 += pi * gv,
                            None => mean.push((c.var, pi * gv)),
                        }
                    }
                }
                if want_hess {
                    for &(i, mi) in &mean {
                        for &(j, mj) in &mean {
                            hess[(i, j)] -= g.weight * mi * mj / tau;
                        }
                    }
                }
            }
            h_vals.push(h);
            grads.push(grad);
            hessians.push(hess);
            accs.push(acc);
        }

        let hmax = h_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let es: Vec<f64> = h_vals.iter().map(|h| ((h - hmax) / tau).exp()).collect();
        let z: f64 = es.iter().sum();
        let weights: Vec<f64> = es.iter().map(|e| e / z).collect();
        let value = hmax + tau * z.ln();

        let mut grad = DVector::zeros(d);
        for (w, g) in weights.iter().zip(&grads) {
            grad.axpy(*w, g, 1.0);
        }
        let hess = if want_hess {
            let mut hess = DMatrix::zeros(d, d);
            for ((w, g), h) in weights.iter().zip(&grads).zip(&hessians) {
                hess += h * *w;
                hess += (g * g.transpose()) * (*w / tau);
            }
            hess -= (&grad * grad.transpose()) / tau;
            hess
        } else {
            DMatrix::zeros(0, 0)
        };

        let mut lower = 0.0;
        let mut pooled = vec![[0.0f64; 3]; d];
        let mut dual_x = x.to_vec();
        for ((w, piece), acc) in weights.iter().zip(&self.pieces).zip(&accs) {
            lower += w * piece.constant;
            for (p, a) in pooled.iter_mut().zip(acc) {
                p[0] += w * a[0];
                p[1] += w * a[1];
                p[2] += w * a[2];
            }
        }
        for (v, p) in pooled.iter().enumerate() {
            if p[0] > 0.0 {
                let mean = p[1] / p[0];
                lower += (p[2] - p[1] * mean).max(0.0);
                dual_x[v] = mean.clamp(0.0, 1.0);
            }
        }

        Eval {
            value,
            grad,
            hess,
            lower,
            dual_x,
        }
    }

    /// Minimizes the objective until the certified gap is at most `tol`
    /// or the smoothing temperature bottoms out.
    pub fn solve(&self, start: &[f64], tol: f64) -> Solution {
        let mut x: Vec<f64> = start.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let mut best_x = x.clone();
        let mut best_upper = self.value(&x);
        let mut lower = f64::NEG_INFINITY;
        let mut iterations = 0;
        let mut tau = 0.1;

        while tau > 1e-14 {
            for _ in 0..200 {
                iterations += 1;
                let ev = self.smoothed(&x, tau, true);
                lower = lower.max(ev.lower);
                for cand in [&x, &ev.dual_x] {
                    let v = self.value(cand);
                    if v < best_upper {
                        best_upper = v;
                        best_x = cand.clone();
                    }
                }
                if best_upper - lower <= tol {
                    return Solution {
                        x: best_x,
                        upper: best_upper,
                        lower,
                        iterations,
                    };
                }
                match self.newton_step(&x, &ev, tau) {
                    Some(next) => x = next,
                    None => break,
                }
            }
            tau *= 0.1;
        }
        Solution {
            x: best_x,
            upper: best_upper,
            lower,
            iterations,
        }
    }

    /// One projected Newton step with Armijo backtracking. Returns `None`
    /// when no sufficient decrease is possible.
    fn newton_step(&self, x: &[f64], ev: &Eval, tau: f64) -> Option<Vec<f64>> {
        let d = self.dim;
        let free: Vec<usize> = (0..d)
            .filter(|&i| !((x[i] <= 0.0 && ev.grad[i] > 0.0) || (x[i] >= 1.0 && ev.grad[i] < 0.0)))
            .collect();
        let pg: f64 = free.iter().map(|&i| ev.grad[i].abs()).fold(0.0, f64::max);
        if pg < 1e-15 {
            return None;
        }
        let mut dir = vec![0.0; d];
        if let Some(step) = newton_direction(&ev.hess, &ev.grad, &free) {
            for (&i, s) in free.iter().zip(step.iter()) {
                dir[i] = *s;
            }
        } else {
            for &i in &free {
                dir[i] = -ev.grad[i];
            }
        }
        let mut s = 1.0;
        for _ in 0..60 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&dir)
                .map(|(xi, di)| (xi + s * di).clamp(0.0, 1.0))
                .collect();
            let moved: f64 = trial
                .iter()
                .zip(x)
                .enumerate()
                .map(|(i, (t, xi))| ev.grad[i] * (t - xi))
                .sum();
            if moved < 0.0 {
                let f = self.smoothed(&trial, tau, false).value;
                if f <= ev.value + 1e-4 * moved {
                    return Some(trial);
                }
            }
            s *= 0.5;
        }
        None
    }
}

struct Eval {
    value: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    lower: f64,
    dual_x: Vec<f64>,
}

fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>, free: &[usize]) -> Option<Vec<f64>> {
    let m = free.len();
    if m == 0 {
        return None;
    }
    let sub = DMatrix::from_fn(m, m, |i, j| hess[(free[i], free[j])]);
    let rhs = DVector::from_iterator(m, free.iter().map(|&i| -grad[i]));
    let scale = (0..m).map(|i| sub[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut ridge = 1e-12 * scale;
    for _ in 0..12 {
        let mut reg = sub.clone();
        for i in 0..m {
            reg[(i, i)] += ridge;
        }
        if let Some(ch) = reg.cholesky() {
            return Some(ch.solve(&rhs).iter().copied().collect());
        }
        ridge *= 100.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(var: usize, target: f64) -> Group {
        Group {
            weight: 1.0,
            choices: vec![Choice { var, target }],
        }
    }

    #[test]
    fn single_quadratic() {
        let prob = Problem {
            dim: 1,
            pieces: vec![Piece {
                constant: 0.0,
                groups: vec![quad(0, 0.3)],
            }],
        };
        let sol = prob.solve(&[0.9], 1e-12);
        assert!((sol.x[0] - 0.3).abs() < 1e-6);
        assert!(sol.upper - sol.lower <= 1e-12);
    }

    #[test]
    fn max_of_two_quadratics_meets_in_the_middle() {
        let prob = Problem {
            dim: 1,
            pieces: vec![
                Piece {
                    constant: 0.0,
                    groups: vec![quad(0, 0.0)],
                },
                Piece {
                    constant: 0.0,
                    groups: vec![quad(0, 1.0)],
                },
            ],
        };
        let sol = prob.solve(&[0.1], 1e-12);
        assert!((sol.x[0] - 0.5).abs() < 1e-6);
        assert!((sol.upper - 0.25).abs() < 1e-11);
        assert!(sol.lower <= 0.25 + 1e-15);
    }

    #[test]
    fn inner_max_over_choices() {
        // max over targets {0, 1} for the same variable: minimum 1/4 at 0.5.
        let prob = Problem {
            dim: 1,
            pieces: vec![Piece {
                constant: 0.1,
                groups: vec![Group {
                    weight: 1.0,
                    choices: vec![Choice { var: 0, target: 0.0 }, Choice { var: 0, target: 1.0 }],
                }],
            }],
        };
        let sol = prob.solve(&[0.0], 1e-11);
        assert!((sol.upper - 0.35).abs() < 1e-10);
        assert!(sol.upper - sol.lower <= 1e-11);
    }
}
