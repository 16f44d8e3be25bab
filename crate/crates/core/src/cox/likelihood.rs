use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Value, gradient and Hessian of the penalized negative log partial
/// likelihood with Efron's correction for tied event times:
///
/// `-sum_i [eta_i] + sum_t sum_{l<d_t} ln(S0_t - l/d_t * D0_t) + l2/2 |beta|^2`
///
/// where `S0_t` sums `exp(eta)` over the risk set at `t` and `D0_t` over the
/// events at `t`.
pub fn neg_log_partial_likelihood(
    beta: &DVector<f64>,
    x: &DMatrix<f64>,
    durations: &[f64],
    observed: &[bool],
    l2: f64,
) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    let (n, p) = x.shape();
    if beta.len() != p {
        return Err(Error::data(format!(
            "beta has {} entries, design has {p} columns",
            beta.len()
        )));
    }
    if durations.len() != n || observed.len() != n {
        return Err(Error::data(
            "durations, observed and design rows differ in length",
        ));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::numerical("non-finite coefficient"));
    }

    let eta = x * beta;
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let w: Vec<f64> = eta.iter().map(|e| (e - shift).exp()).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| durations[b].total_cmp(&durations[a]));

    let mut value = 0.0;
    let mut grad = DVector::zeros(p);
    let mut hess = DMatrix::zeros(p, p);
    let mut s0 = 0.0;
    let mut s1 = DVector::zeros(p);
    let mut s2 = DMatrix::zeros(p, p);

    let mut k = 0;
    while k < n {
        let t = durations[order[k]];
        let mut end = k;
        while end < n && durations[order[end]] == t {
            end += 1;
        }
        let mut d = 0usize;
        let mut d0 = 0.0;
        let mut d1 = DVector::zeros(p);
        let mut d2 = DMatrix::zeros(p, p);
        for &i in &order[k..end] {
            let xi = x.row(i).transpose();
            let outer = &xi * xi.transpose();
            s0 += w[i];
            s1.axpy(w[i], &xi, 1.0);
            s2 += &outer * w[i];
            if observed[i] {
                d += 1;
                d0 += w[i];
                d1.axpy(w[i], &xi, 1.0);
                d2 += &outer * w[i];
                value -= eta[i];
                grad -= &xi;
            }
        }
        for l in 0..d {
            let f = l as f64 / d as f64;
            let phi = s0 - f * d0;
            let phi1 = &s1 - &d1 * f;
            let phi2 = &s2 - &d2 * f;
            value += phi.ln() + shift;
            grad += &phi1 / phi;
            hess += &phi2 / phi - (&phi1 * phi1.transpose()) / (phi * phi);
        }
        k = end;
    }

    value += 0.5 * l2 * beta.norm_squared();
    grad.axpy(l2, beta, 1.0);
    for j in 0..p {
        hess[(j, j)] += l2;
    }
    Ok((value, grad, hess))
}
