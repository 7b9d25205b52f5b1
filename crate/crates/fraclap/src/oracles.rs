//! Closed-form and iterative reference spectra: rectangle Neumann
//! eigenvalues, interval energy-extension limits, and the spectral-decimation
//! eigenvalues of the row-of-gasket-cells domains.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// A truncated Fourier cosine series `f(x) = sum a_k cos(pi k x)` on [0,1].
#[derive(Clone, Debug)]
pub struct CosineSeries {
    /// Coefficient `a_k` at index `k`, starting with `a_0`.
    pub coefficients: Vec<f64>,
}

impl CosineSeries {
    pub fn new(coefficients: Vec<f64>) -> Self {
        CosineSeries { coefficients }
    }

    /// Series with a single mode `a_k = 1`.
    pub fn single_mode(k: usize) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = 1.0;
        CosineSeries { coefficients: c }
    }
}

/// Exact Neumann eigenvalues of an `a` by `b` rectangle:
/// `(pi n / a)^2 + (pi k / b)^2` over `n, k >= 0`, sorted ascending,
/// with their `(n, k)` labels. The enumeration cutoff doubles until
/// `count` values are collected.
pub fn rectangle_spectrum(a: f64, b: f64, count: usize) -> Result<Vec<(f64, usize, usize)>> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::invalid("rectangle sides must be positive"));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let base = (PI / a.max(b)).powi(2);
    let mut cut = base * (count as f64).max(4.0);
    loop {
        let mut vals = Vec::new();
        let n_max = (a * cut.sqrt() / PI).floor() as usize;
        for n in 0..=n_max {
            let lx = (PI * n as f64 / a).powi(2);
            if lx > cut {
                break;
            }
            let k_max = (b * (cut - lx).max(0.0).sqrt() / PI).floor() as usize;
            for k in 0..=k_max {
                let v = lx + (PI * k as f64 / b).powi(2);
                if v <= cut {
                    vals.push((v, n, k));
                }
            }
        }
        if vals.len() >= count {
            vals.sort_by(|x, y| x.0.total_cmp(&y.0));
            vals.truncate(count);
            return Ok(vals);
        }
        cut *= 2.0;
    }
}

/// Energies of the minimum-energy extension of a cosine series to the strip
/// `[0,1] x [0, 2^-m]`: returns `(E_m, E_I, 2^m * E_m)` where `E_I` is the
/// interval Dirichlet energy and `E_m` the strip energy.
pub fn extension_energy(series: &CosineSeries, m: u32) -> (f64, f64, f64) {
    let delta = 0.5f64.powi(m as i32);
    let mut e_m = 0.0;
    let mut e_i = 0.0;
    for (k, &a) in series.coefficients.iter().enumerate().skip(1) {
        if a == 0.0 {
            continue;
        }
        let pk = PI * k as f64;
        e_i += 0.5 * pk * pk * a * a;
        let c = (pk * delta).cosh();
        e_m += a * a * pk * (2.0 * pk * delta).sinh() / (4.0 * c * c);
    }
    (e_m, e_i, 2f64.powi(m as i32) * e_m)
}

/// Scaled normal derivatives `2^m du_m/dy (x, 0)` of the minimum-energy
/// extension, for each level in `m_sequence`, together with the limit
/// `-sum (pi k)^2 a_k cos(pi k x)`. The per-level derivative of the
/// closed-form extension is `-a_k pi k tanh(pi k 2^-m) cos(pi k x)` per term.
pub fn normal_derivative_limit(
    series: &CosineSeries,
    x: f64,
    m_sequence: &[u32],
) -> (Vec<f64>, f64) {
    let mut seq = Vec::with_capacity(m_sequence.len());
    for &m in m_sequence {
        let delta = 0.5f64.powi(m as i32);
        let mut d = 0.0;
        for (k, &a) in series.coefficients.iter().enumerate().skip(1) {
            if a == 0.0 {
                continue;
            }
            let pk = PI * k as f64;
            d += -a * pk * (pk * delta).tanh() * (pk * x).cos();
        }
        seq.push(2f64.powi(m as i32) * d);
    }
    let mut limit = 0.0;
    for (k, &a) in series.coefficients.iter().enumerate().skip(1) {
        let pk = PI * k as f64;
        limit += -pk * pk * a * (pk * x).cos();
    }
    (seq, limit)
}

/// The decimation branch `phi_-(t) = (5 - sqrt(25 - 4t)) / 2`, evaluated in
/// the cancellation-free form `2t / (5 + sqrt(25 - 4t))`.
pub fn phi_minus(t: f64) -> Result<f64> {
    if t > 25.0 / 4.0 {
        return Err(Error::invalid(format!("phi_minus domain is t <= 25/4, got {t}")));
    }
    Ok(2.0 * t / (5.0 + (25.0 - 4.0 * t).sqrt()))
}

/// `Phi(t) = lim 5^n phi_-^(n)(t)` for `t` in [0, 4), by direct iteration.
pub fn big_phi(t: f64, rel_tol: f64) -> Result<f64> {
    if !(0.0..4.0).contains(&t) {
        return Err(Error::invalid(format!("big_phi domain is [0, 4), got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut x = t;
    let mut scale = 1.0;
    let mut prev = x;
    for _ in 0..200 {
        x = phi_minus(x)?;
        scale *= 5.0;
        let v = scale * x;
        if (v - prev).abs() <= rel_tol * v.abs() {
            return Ok(v);
        }
        prev = v;
    }
    Err(Error::numerical("big_phi did not converge within 200 iterations"))
}

/// Decimation state for one row mode: level `m`, mode index `j`,
/// the graph eigenvalue `t0 = 2 - 2 cos(pi j / 2^m)` and `Phi(t0)`.
#[derive(Clone, Debug)]
pub struct DecimationState {
    pub m: u32,
    pub j: u64,
    pub t0: f64,
    pub phi: f64,
}

/// Spectral-decimation eigenvalue `(3/2) 5^m Phi(2 - 2 cos(pi j / 2^m))`.
pub fn sg_row_eigenvalue(m: u32, j: u64, rel_tol: f64) -> Result<f64> {
    if j >= 1u64 << m {
        return Err(Error::invalid(format!("mode index j={j} out of range for m={m}")));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let t0 = 2.0 - 2.0 * (PI * j as f64 / 2f64.powi(m as i32)).cos();
    Ok(1.5 * 5f64.powi(m as i32) * big_phi(t0, rel_tol)?)
}

pub fn sg_row_state(m: u32, j: u64, rel_tol: f64) -> Result<DecimationState> {
    if j >= 1u64 << m {
        return Err(Error::invalid(format!("mode index j={j} out of range for m={m}")));
    }
    let t0 = 2.0 - 2.0 * (PI * j as f64 / 2f64.powi(m as i32)).cos();
    let phi = if j == 0 { 0.0 } else { big_phi(t0, rel_tol)? };
    Ok(DecimationState { m, j, t0, phi })
}

/// Row eigenfunction restricted to the junction points `x_k = k/2^m`
/// (`0 <= k <= 2^m`) and the apex points `y_k` (`1 <= k <= 2^m`; cell `k`
/// has vertices `x_{k-1}, x_k, y_k`).
///
/// Junction values are `(cos(pi j x_k) + cos(pi j x_{k+1})) / 2`, with the
/// even reflection `x_{2^m + 1} := x_{2^m - 1}` at the right boundary; apex
/// values are `cos(pi j x_k)`. This is the convention under which the
/// degree-averaged graph Laplacian satisfies
/// `-4 Delta u = (2 - 2 cos(pi j/2^m)) u` at every interior vertex (and at
/// the boundary junctions under even reflection); see the tests.
#[derive(Clone, Debug)]
pub struct RowEigenfunction {
    pub m: u32,
    pub j: u64,
    pub junction_values: Vec<f64>,
    pub apex_values: Vec<f64>,
}

pub fn sg_row_eigenfunction(m: u32, j: u64) -> Result<RowEigenfunction> {
    let cells = 1usize << m;
    if j >= 1u64 << m {
        return Err(Error::invalid(format!("mode index j={j} out of range for m={m}")));
    }
    let c = |k: usize| (PI * j as f64 * k as f64 / cells as f64).cos();
    let mut junction_values = Vec::with_capacity(cells + 1);
    for k in 0..=cells {
        let next = if k == cells { c(cells - 1) } else { c(k + 1) };
        junction_values.push(0.5 * (c(k) + next));
    }
    let apex_values: Vec<f64> = (1..=cells).map(c).collect();
    Ok(RowEigenfunction { m, j, junction_values, apex_values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn rectangle_spectrum_thin_strip() {
        // [0,1] x [0,1/4]: pi^2, 4 pi^2, 9 pi^2, then (4 pi)^2 enters at 16 pi^2.
        let vals = rectangle_spectrum(1.0, 0.25, 6).unwrap();
        let expect = [0.0, PI * PI, 4.0 * PI * PI, 9.0 * PI * PI, 16.0 * PI * PI, 16.0 * PI * PI];
        for (got, want) in vals.iter().zip(expect) {
            assert_relative_eq!(got.0, want, max_relative = 1e-12);
        }
        // The two values at 16 pi^2 are (n=4, k=0) and (n=0, k=1).
        let labels: Vec<(usize, usize)> = vals[4..6].iter().map(|v| (v.1, v.2)).collect();
        assert!(labels.contains(&(4, 0)) && labels.contains(&(0, 1)));
    }

    #[test]
    fn rectangle_spectrum_square_multiplicity() {
        let vals = rectangle_spectrum(1.0, 1.0, 3).unwrap();
        assert_eq!(vals[0].0, 0.0);
        assert_relative_eq!(vals[1].0, PI * PI, max_relative = 1e-12);
        assert_relative_eq!(vals[2].0, PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn rectangle_spectrum_count_one_and_symmetry() {
        let vals = rectangle_spectrum(2.0, 0.7, 1).unwrap();
        assert_eq!(vals.len(), 1);
        assert_eq!(vals[0].0, 0.0);
        let a: Vec<f64> = rectangle_spectrum(2.0, 0.7, 40).unwrap().iter().map(|v| v.0).collect();
        let b: Vec<f64> = rectangle_spectrum(0.7, 2.0, 40).unwrap().iter().map(|v| v.0).collect();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x, y, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn extension_energy_single_mode() {
        let s = CosineSeries::single_mode(1);
        let (_, e_i, _) = extension_energy(&s, 1);
        assert_relative_eq!(e_i, PI * PI / 2.0, max_relative = 1e-14);
        let (_, _, scaled) = extension_energy(&s, 12);
        assert!((scaled - PI * PI / 2.0).abs() <= 1e-4, "got {scaled}");
        // Zero series.
        let z = CosineSeries::new(vec![0.0, 0.0]);
        let (e_m, e_i, _) = extension_energy(&z, 5);
        assert_eq!(e_m, 0.0);
        assert_eq!(e_i, 0.0);
    }

    #[test]
    fn extension_energy_monotone_in_m() {
        let s = CosineSeries::single_mode(1);
        let mut prev = 0.0;
        for m in 1..=14 {
            let (_, _, scaled) = extension_energy(&s, m);
            assert!(scaled > prev, "not increasing at m={m}");
            prev = scaled;
        }
        assert!(prev < PI * PI / 2.0 + 1e-12);
    }

    #[test]
    fn normal_derivative_limits() {
        let s1 = CosineSeries::single_mode(1);
        let (_, limit) = normal_derivative_limit(&s1, 0.0, &[1]);
        assert_relative_eq!(limit, -PI * PI, max_relative = 1e-14);
        let (_, limit_half) = normal_derivative_limit(&s1, 0.5, &[1]);
        assert_abs_diff_eq!(limit_half, 0.0, epsilon = 1e-12);

        let s2 = CosineSeries::single_mode(2);
        let (seq, limit2) = normal_derivative_limit(&s2, 0.0, &[10]);
        assert_relative_eq!(limit2, -4.0 * PI * PI, max_relative = 1e-14);
        assert!((seq[0] - limit2).abs() < 1e-3, "seq={} limit={}", seq[0], limit2);

        // Monotone convergence in m for a single-term series.
        let (seq, limit) = normal_derivative_limit(&s1, 0.0, &[1, 2, 3, 4, 5, 6, 7, 8]);
        for w in seq.windows(2) {
            assert!((w[1] - limit).abs() < (w[0] - limit).abs());
        }
    }

    #[test]
    fn phi_minus_values() {
        assert_eq!(phi_minus(0.0).unwrap(), 0.0);
        assert_relative_eq!(phi_minus(2.0).unwrap(), (5.0 - 17f64.sqrt()) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(phi_minus(4.0).unwrap(), 1.0, max_relative = 1e-15);
        assert!(phi_minus(7.0).is_err());
    }

    #[test]
    fn big_phi_basic() {
        assert_eq!(big_phi(0.0, 1e-13).unwrap(), 0.0);
        // Phi'(0) = 1.
        let t = 1e-8;
        assert!((big_phi(t, 1e-13).unwrap() / t - 1.0).abs() < 1e-6);
        // Stable across restarts at interior points.
        let a = big_phi(2.0, 1e-13).unwrap();
        let b = big_phi(2.0, 1e-13).unwrap();
        assert_eq!(a, b);
        assert!(a > 2.0); // Phi(t) >= t
    }

    #[test]
    fn big_phi_monotone_and_above_t() {
        let mut prev = -1.0;
        for i in 0..40 {
            let t = 0.1 * i as f64;
            if t >= 4.0 {
                break;
            }
            let v = big_phi(t, 1e-13).unwrap();
            assert!(v > prev);
            assert!(v >= t - 1e-12);
            prev = v;
        }
    }

    #[test]
    fn sg_row_eigenvalue_limit() {
        assert_eq!(sg_row_eigenvalue(5, 0, 1e-13).unwrap(), 0.0);
        let m = 12;
        for j in 1..=4u64 {
            let lam = sg_row_eigenvalue(m, j, 1e-13).unwrap();
            let scaled = 0.8f64.powi(m as i32) * lam;
            let target = 1.5 * (PI * j as f64).powi(2);
            let rel = (scaled - target).abs() / target;
            assert!(rel < 1e-3, "j={j}: rel error {rel}");
        }
        // Scaled value increasing in m toward the limit for fixed j.
        let j = 2;
        let target = 1.5 * (PI * j as f64).powi(2);
        let mut prev = 0.0;
        for m in 4..=12 {
            let s = 0.8f64.powi(m) * sg_row_eigenvalue(m as u32, j, 1e-13).unwrap();
            assert!(s > prev);
            assert!(s < target + 1e-9);
            prev = s;
        }
    }

    #[test]
    fn sg_row_eigenfunction_values() {
        // j = 0: constant 1.
        let f = sg_row_eigenfunction(3, 0).unwrap();
        assert!(f.junction_values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(f.apex_values.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        // m = 1, j = 1: u(x0) = 1/2, u(x1) = -1/2.
        let f = sg_row_eigenfunction(1, 1).unwrap();
        assert_relative_eq!(f.junction_values[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(f.junction_values[1], -0.5, max_relative = 1e-14);

        // Bounded by 1.
        let f = sg_row_eigenfunction(5, 3).unwrap();
        assert!(f.junction_values.iter().chain(&f.apex_values).all(|v| v.abs() <= 1.0 + 1e-12));
    }

    /// The graph eigenrelation that pins down the apex convention: on the
    /// row graph (cell k joins x_{k-1}, x_k, y_k pairwise), the
    /// degree-averaged Laplacian must satisfy
    /// `u(p) - avg_{q ~ p} u(q) = (2 - 2cos(pi j/2^m))/4 * u(p)`
    /// at interior vertices, and the alternative apex convention
    /// `u(y_k) = cos(pi j x_{k-1})` must fail it.
    #[test]
    fn sg_row_eigenfunction_graph_relation() {
        for (m, j) in [(2u32, 1u64), (3, 2), (4, 3), (5, 7)] {
            let cells = 1usize << m;
            let f = sg_row_eigenfunction(m, j).unwrap();
            let theta = PI * j as f64 / cells as f64;
            let eig = (2.0 - 2.0 * theta.cos()) / 4.0;
            // Apex vertices: neighbors x_{k-1}, x_k.
            for k in 1..=cells {
                let u = f.apex_values[k - 1];
                let avg = 0.5 * (f.junction_values[k - 1] + f.junction_values[k]);
                assert_abs_diff_eq!(u - avg, eig * u, epsilon = 1e-12);
            }
            // Interior junctions: neighbors x_{k-1}, x_{k+1}, y_k, y_{k+1}.
            for k in 1..cells {
                let u = f.junction_values[k];
                let avg = 0.25
                    * (f.junction_values[k - 1]
                        + f.junction_values[k + 1]
                        + f.apex_values[k - 1]
                        + f.apex_values[k]);
                assert_abs_diff_eq!(u - avg, eig * u, epsilon = 1e-12);
            }
            // Boundary junction x_0 under even reflection (mirror cell with
            // junction value u(x_0) and apex value cos(pi j x_0)).
            let u0 = f.junction_values[0];
            let c0 = 1.0;
            let avg = 0.25 * (f.junction_values[1] + f.apex_values[0] + u0 + c0);
            assert_abs_diff_eq!(u0 - avg, eig * u0, epsilon = 1e-12);
        }

        // The rejected convention u(y_k) = cos(pi j x_{k-1}) breaks the
        // apex relation already at m = 2, j = 1.
        let (m, j) = (2u32, 1u64);
        let cells = 1usize << m;
        let f = sg_row_eigenfunction(m, j).unwrap();
        let theta = PI * j as f64 / cells as f64;
        let eig = (2.0 - 2.0 * theta.cos()) / 4.0;
        let c = |k: usize| (PI * j as f64 * k as f64 / cells as f64).cos();
        let mut max_residual = 0f64;
        for k in 1..=cells {
            let u = c(k - 1); // alternative convention
            let avg = 0.5 * (f.junction_values[k - 1] + f.junction_values[k]);
            max_residual = max_residual.max((u - avg - eig * u).abs());
        }
        assert!(max_residual > 1e-2, "alternative convention unexpectedly passes");
    }
}
