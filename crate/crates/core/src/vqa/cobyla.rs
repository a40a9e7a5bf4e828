//! Derivative-free minimization in the style of Powell's COBYLA, for the
//! unconstrained case.
//!
//! Steps come from an interpolation model over an `n + 1` point simplex
//! kept within a trust region whose resolution `rho` only shrinks. Recently
//! evaluated points that left the simplex also constrain the model: its
//! Hessian is the least change (Frobenius norm) from the previous one that
//! interpolates them. With no such points the model is the plain linear one
//! and, at a step bound of `rho`, a step is the classic `-rho * g / |g|`.
//! The step bound may grow past `rho` while steps keep succeeding.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::OptimizerConfig;
use crate::{Error, Result};

const ALPHA: f64 = 0.25;
const BETA: f64 = 2.1;
const GAMMA: f64 = 0.5;
const DELTA: f64 = 1.1;
/// The step bound never exceeds this multiple of `rho_begin`.
const MAX_EXPANSION: f64 = 8.0;
/// Extra points farther than this many step bounds are ignored by the model.
const EXTRA_REACH: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// Objective value at every evaluation, in order.
    pub trace: Vec<f64>,
}

pub fn cobyla_minimize<F>(mut f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    cobyla_try(|x| Ok(f(x)), x0, cfg)
}

/// As [`cobyla_minimize`] for objectives that can fail.
pub fn cobyla_try<F>(f: F, x0: &[f64], cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let mut s = Simplex::new(f, x0, cfg.max_iter);
    s.run(cfg.rho_begin, cfg.rho_end)?;
    Ok(s.finish())
}

struct Simplex<F> {
    f: F,
    max_evals: usize,
    trace: Vec<f64>,
    pole: DVector<f64>,
    f_pole: f64,
    /// Row j is the offset of vertex j from the pole.
    offsets: DMatrix<f64>,
    values: Vec<f64>,
    /// Recent points outside the simplex, by absolute position.
    extras: VecDeque<(DVector<f64>, f64)>,
    hessian: DMatrix<f64>,
}

struct Exhausted;

type Eval = std::result::Result<f64, Exhausted>;

impl<F> Simplex<F>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    fn new(f: F, x0: &[f64], max_evals: usize) -> Self {
        let n = x0.len();
        Simplex {
            f,
            max_evals,
            trace: Vec::new(),
            pole: DVector::from_column_slice(x0),
            f_pole: f64::INFINITY,
            offsets: DMatrix::zeros(n, n),
            values: vec![f64::INFINITY; n],
            extras: VecDeque::new(),
            hessian: DMatrix::zeros(n, n),
        }
    }

    fn eval(&mut self, x: &DVector<f64>) -> Result<Eval> {
        if self.trace.len() >= self.max_evals {
            return Ok(Err(Exhausted));
        }
        let value = (self.f)(x.as_slice())?;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective {
                evaluation: self.trace.len(),
                value,
            });
        }
        self.trace.push(value);
        Ok(Ok(value))
    }

    fn n(&self) -> usize {
        self.pole.len()
    }

    fn push_extra(&mut self, x: DVector<f64>, f: f64) {
        if f.is_finite() {
            if self.extras.len() == self.n() {
                self.extras.pop_front();
            }
            self.extras.push_back((x, f));
        }
    }

    /// Replace vertex `j` by `pole + step`, keeping the old vertex as an extra.
    fn replace(&mut self, j: usize, step: &DVector<f64>, value: f64) {
        let old = &self.pole + self.offsets.row(j).transpose();
        let old_value = self.values[j];
        self.offsets.set_row(j, &step.transpose());
        self.values[j] = value;
        self.push_extra(old, old_value);
    }

    /// Make the lowest vertex the pole (strict improvement only).
    fn reselect_pole(&mut self) {
        let mut best = None;
        let mut best_f = self.f_pole;
        for (j, &v) in self.values.iter().enumerate() {
            if v < best_f {
                best = Some(j);
                best_f = v;
            }
        }
        if let Some(j) = best {
            let shift = self.offsets.row(j).into_owned();
            self.pole += shift.transpose();
            for k in 0..self.n() {
                if k == j {
                    self.offsets.row_mut(k).neg_mut();
                } else {
                    let mut row = self.offsets.row_mut(k);
                    row -= &shift;
                }
            }
            std::mem::swap(&mut self.values[j], &mut self.f_pole);
        }
    }

    fn curvature(&self, d: &DVector<f64>) -> f64 {
        0.5 * d.dot(&(&self.hessian * d))
    }

    /// Fit the model gradient and update the Hessian with the least change
    /// that interpolates the pole, the vertices and nearby extras.
    fn fit_model(&mut self, inverse: &DMatrix<f64>, radius: f64) -> DVector<f64> {
        let n = self.n();
        let mut ys: Vec<DVector<f64>> = (0..n).map(|j| self.offsets.row(j).transpose()).collect();
        let mut fs: Vec<f64> = self.values.clone();
        for (x, f) in &self.extras {
            let y = x - &self.pole;
            let dist = y.norm();
            if dist > 0.0 && dist <= EXTRA_REACH * radius {
                ys.push(y);
                fs.push(*f);
            }
        }
        let linear = |h: &DMatrix<f64>| {
            let diffs = DVector::from_iterator(n, (0..n).map(|j| fs[j] - self.f_pole - 0.5 * ys[j].dot(&(h * &ys[j]))));
            inverse * diffs
        };
        let m = ys.len();
        if m == n {
            return linear(&self.hessian);
        }
        // Work in units of the step bound so the system stays well scaled.
        let inv_r = 1.0 / radius;
        let zs: Vec<DVector<f64>> = ys.iter().map(|y| y.scale(inv_r)).collect();
        let prev = self.hessian.scale(radius * radius);
        // Unknowns: multipliers for the pole and the m points, c, g.
        let size = m + 2 + n;
        let mut w = DMatrix::zeros(size, size);
        let mut rhs = DVector::zeros(size);
        let point = |k: usize| -> Option<&DVector<f64>> {
            if k == 0 {
                None
            } else {
                Some(&zs[k - 1])
            }
        };
        for a in 0..=m {
            for b in 0..=m {
                let v = match (point(a), point(b)) {
                    (Some(za), Some(zb)) => 0.5 * za.dot(zb).powi(2),
                    _ => 0.0,
                };
                w[(a, b)] = v;
            }
            w[(a, m + 1)] = 1.0;
            w[(m + 1, a)] = 1.0;
            if let Some(z) = point(a) {
                for i in 0..n {
                    w[(a, m + 2 + i)] = z[i];
                    w[(m + 2 + i, a)] = z[i];
                }
                rhs[a] = fs[a - 1] - 0.5 * z.dot(&(&prev * z));
            } else {
                rhs[a] = self.f_pole;
            }
        }
        let Some(sol) = w.lu().solve(&rhs) else {
            return linear(&self.hessian);
        };
        let mut hess = prev;
        for (k, z) in zs.iter().enumerate() {
            hess += (z * z.transpose()).scale(sol[k + 1]);
        }
        if !hess.iter().all(|v| v.is_finite()) {
            return linear(&self.hessian);
        }
        self.hessian = hess.scale(inv_r * inv_r);
        DVector::from_iterator(n, (0..n).map(|i| sol[m + 2 + i] * inv_r))
    }

    fn run(&mut self, rho_begin: f64, rho_end: f64) -> Result<()> {
        let n = self.n();
        let pole = self.pole.clone();
        match self.eval(&pole)? {
            Ok(v) => self.f_pole = v,
            Err(Exhausted) => return Ok(()),
        }
        if n == 0 {
            return Ok(());
        }
        let mut rho = rho_begin;
        let mut radius = rho_begin;
        if self.rebuild(rho)?.is_none() {
            return Ok(());
        }

        let mut trust_failed = false;
        loop {
            self.reselect_pole();
            let Some(inverse) = self.offsets.clone().try_inverse() else {
                // Degenerate simplex: rebuild it around the pole.
                if self.rebuild(radius)?.is_none() {
                    return Ok(());
                }
                continue;
            };
            let veta: Vec<f64> = (0..n).map(|j| self.offsets.row(j).norm()).collect();
            let vsig: Vec<f64> = (0..n).map(|j| 1.0 / inverse.column(j).norm()).collect();
            let far = (0..n).max_by(|&a, &b| veta[a].total_cmp(&veta[b])).unwrap();
            let flat = (0..n).min_by(|&a, &b| vsig[a].total_cmp(&vsig[b])).unwrap();
            let grad = self.fit_model(&inverse, radius);

            if veta[far] > BETA * radius || vsig[flat] < ALPHA * radius {
                // Geometry step: move the worst vertex along its face normal.
                let j = if veta[far] > BETA * radius { far } else { flat };
                let mut step = inverse.column(j).normalize().scale(GAMMA * radius);
                if grad.dot(&step) > 0.0 {
                    step.neg_mut();
                }
                let x = &self.pole + &step;
                match self.eval(&x)? {
                    Ok(v) => self.replace(j, &step, v),
                    Err(Exhausted) => return Ok(()),
                }
                continue;
            }

            if trust_failed {
                if rho <= rho_end {
                    return Ok(());
                }
                rho *= 0.5;
                if rho <= 1.5 * rho_end {
                    rho = rho_end;
                }
                radius = rho;
                trust_failed = false;
                continue;
            }

            let step = trust_region_step(&grad, &self.hessian, radius);
            let predicted = -(grad.dot(&step) + self.curvature(&step));
            let len = step.norm();
            if len < 0.5 * rho || predicted <= 0.0 {
                if radius > rho {
                    radius = rho;
                } else {
                    trust_failed = true;
                }
                continue;
            }
            let x = &self.pole + &step;
            let fnew = match self.eval(&x)? {
                Ok(v) => v,
                Err(Exhausted) => return Ok(()),
            };
            let actual = self.f_pole - fnew;
            let ratio = actual / predicted;

            // Pick the vertex the new point replaces.
            let coeffs = inverse.transpose() * &step;
            let mut drop = None;
            let mut threshold = if actual > 0.0 { 0.0 } else { 1.0 };
            for j in 0..n {
                let c = coeffs[j].abs();
                if c > threshold {
                    drop = Some(j);
                    threshold = c;
                }
            }
            let mut edge = DELTA * radius;
            for j in 0..n {
                let sigbar = coeffs[j].abs() * vsig[j];
                if sigbar >= ALPHA * radius || sigbar >= vsig[j] {
                    let dist = if actual > 0.0 {
                        (&step - self.offsets.row(j).transpose()).norm()
                    } else {
                        veta[j]
                    };
                    if dist > edge {
                        drop = Some(j);
                        edge = dist;
                    }
                }
            }
            match drop {
                Some(j) => self.replace(j, &step, fnew),
                None => self.push_extra(x, fnew),
            }

            if ratio >= 0.7 && len >= 0.99 * radius {
                radius = (2.0 * radius).min(MAX_EXPANSION * rho_begin);
            } else if ratio < 0.1 {
                if radius > rho {
                    radius = (0.5 * radius).max(rho);
                } else {
                    trust_failed = true;
                }
            }
        }
    }

    /// Fresh axis-aligned simplex of size `size` around the pole.
    fn rebuild(&mut self, size: f64) -> Result<Option<()>> {
        for j in 0..self.n() {
            let mut step = DVector::zeros(self.n());
            step[j] = size;
            let x = &self.pole + &step;
            match self.eval(&x)? {
                Ok(v) => self.replace(j, &step, v),
                Err(Exhausted) => {
                    self.values[j..].iter_mut().for_each(|v| *v = f64::INFINITY);
                    return Ok(None);
                }
            }
        }
        Ok(Some(()))
    }

    fn finish(mut self) -> Minimum {
        self.reselect_pole();
        Minimum {
            x: self.pole.iter().copied().collect(),
            f: self.f_pole,
            trace: self.trace,
        }
    }
}

/// Minimize `g·d + d·B·d / 2` over `|d| <= radius`.
fn trust_region_step(g: &DVector<f64>, b: &DMatrix<f64>, radius: f64) -> DVector<f64> {
    let gnorm = g.norm();
    if b.iter().all(|&v| v == 0.0) {
        if gnorm == 0.0 {
            return DVector::zeros(g.len());
        }
        return g.scale(-radius / gnorm);
    }
    let eig = SymmetricEigen::new(b.clone());
    let gq = eig.eigenvectors.transpose() * g;
    let lam = &eig.eigenvalues;
    let min_eig = lam.min();
    let solve = |shift: f64| -> DVector<f64> {
        let coeffs = DVector::from_iterator(
            g.len(),
            (0..g.len()).map(|i| {
                let denom = lam[i] + shift;
                if denom > 0.0 {
                    -gq[i] / denom
                } else {
                    0.0
                }
            }),
        );
        &eig.eigenvectors * coeffs
    };
    if min_eig > 0.0 {
        let newton = solve(0.0);
        if newton.norm() <= radius {
            return newton;
        }
    }
    let mut lo = (-min_eig).max(0.0);
    let mut hi = lo + gnorm / radius + lam.amax() + f64::MIN_POSITIVE;
    while solve(hi).norm() > radius {
        hi *= 2.0;
    }
    let at_lo = solve(lo + 1e-14 * (1.0 + lo));
    if at_lo.norm() < radius && min_eig <= 0.0 {
        // Hard case: pad along the most negative curvature direction.
        let q = eig.eigenvectors.column(lam.imin()).into_owned();
        let tau = (radius * radius - at_lo.norm_squared()).max(0.0).sqrt();
        let sign = if g.dot(&q) > 0.0 { -1.0 } else { 1.0 };
        return at_lo + q.scale(sign * tau);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if solve(mid).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    solve(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(max_iter: usize) -> OptimizerConfig {
        OptimizerConfig {
            max_iter,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn shifted_quadratic() {
        let m = cobyla_minimize(|x| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), &[0.0, 0.0], &cfg(1000)).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] + 2.0).abs() < 1e-3, "{:?}", m.x);
    }

    #[test]
    fn constant_objective_returns_start() {
        let m = cobyla_minimize(|_| 4.0, &[0.3, -0.7], &cfg(1000)).unwrap();
        assert_eq!(m.x, vec![0.3, -0.7]);
        assert_eq!(m.f, 4.0);
    }

    #[test]
    fn rosenbrock() {
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = cobyla_minimize(rosen, &[-1.2, 1.0], &cfg(2000)).unwrap();
        assert!(m.f < 1e-4, "f = {} at {:?} after {}", m.f, m.x, m.trace.len());
    }

    #[test]
    fn trace_records_every_evaluation() {
        let mut calls = 0;
        let m = cobyla_minimize(
            |x| {
                calls += 1;
                x.iter().map(|v| v * v).sum()
            },
            &[1.0, 1.0, 1.0],
            &cfg(40),
        )
        .unwrap();
        assert_eq!(m.trace.len(), calls);
        assert!(calls <= 40);
        assert_eq!(m.f, m.trace.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let err = cobyla_minimize(|x| if x[0] > 0.2 { f64::NAN } else { x[0] }, &[0.0], &cfg(100)).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective { evaluation: 1, .. }));
    }

    #[test]
    fn budget_is_respected() {
        let m = cobyla_minimize(|x| x[0].sin() + x[1].cos(), &[0.0, 0.0], &cfg(2)).unwrap();
        assert_eq!(m.trace.len(), 2);
    }
}
