//! Small dense Levenberg-Marquardt least-squares solver.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    /// `√(Σ r²)` at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
}

fn residuals(model: &impl Fn(&[f64], f64) -> f64, p: &[f64], x: &[f64], y: &[f64], w: &[f64]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().zip(y).zip(w).map(|((&xi, &yi), &wi)| wi * (model(p, xi) - yi)))
}

/// Minimizes `Σ wᵢ² (model(p, xᵢ) − yᵢ)²` starting from `p0`, with a
/// central-difference Jacobian.
pub fn levenberg_marquardt(
    model: impl Fn(&[f64], f64) -> f64,
    x: &[f64],
    y: &[f64],
    weights: Option<&[f64]>,
    p0: &[f64],
) -> LmResult {
    let ones = vec![1.0; x.len()];
    let w = weights.unwrap_or(&ones);
    let np = p0.len();
    let mut p = p0.to_vec();
    let mut r = residuals(&model, &p, x, y, w);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iterations = 0;
    for it in 0..500 {
        iterations = it + 1;
        let mut jac = DMatrix::zeros(x.len(), np);
        for j in 0..np {
            let h = 1e-6 * p[j].abs().max(1e-6);
            let mut pp = p.clone();
            pp[j] += h;
            let rp = residuals(&model, &pp, x, y, w);
            pp[j] -= 2.0 * h;
            let rm = residuals(&model, &pp, x, y, w);
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for j in 0..np {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rt = residuals(&model, &trial, x, y, w);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    LmResult { params: p, residual_norm: cost.sqrt(), iterations }
}
