//! Downstream spectral analysis: normalization, multiplicity clustering,
//! renormalization factors r and R, the eigenvalue counting function and
//! Weyl ratios.

use crate::error::{Error, Result};
use crate::fem::Spectrum;
use serde::{Deserialize, Serialize};

/// Default zero-mode threshold for normalization.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

/// Relative-gap threshold for multiplicity clustering. FEM splittings of
/// true multiplets sit orders of magnitude below this while distinct
/// eigenvalues sit above it.
pub const DEFAULT_TAU: f64 = 5e-3;

/// Relative tolerance when matching candidate renormalized eigenvalues.
pub const DEFAULT_MATCH_TOL: f64 = 1e-2;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ClusterParams {
    pub tau: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams { tau: DEFAULT_TAU }
    }
}

impl ClusterParams {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid("cluster threshold tau must be in (0, 1)"));
        }
        Ok(ClusterParams { tau })
    }
}

/// Eigenvalues divided by the first nonzero one.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormalizedSpectrum {
    /// Values `lambda_n / lambda_1` for `n >= 1`; first entry exactly 1.
    pub values: Vec<f64>,
    pub zero_modes: usize,
    pub first_nonzero: f64,
}

/// Treats exactly the leading values below `zero_tol` as zero modes and
/// divides the rest by the first remaining value.
pub fn normalize(spectrum: &Spectrum, zero_tol: f64) -> Result<NormalizedSpectrum> {
    let values = spectrum.values();
    if values.len() < 2 {
        return Err(Error::invalid("need at least two eigenvalues to normalize"));
    }
    let zero_modes = values.iter().take_while(|v| v.abs() < zero_tol).count();
    if zero_modes == values.len() {
        return Err(Error::invalid("no nonzero eigenvalue found"));
    }
    let first = values[zero_modes];
    Ok(NormalizedSpectrum {
        values: values[zero_modes..].iter().map(|v| v / first).collect(),
        zero_modes,
        first_nonzero: first,
    })
}

/// One multiplicity cluster: `start` indexes into the clustered sequence,
/// `size` is the multiplicity, `value` the cluster mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub start: usize,
    pub size: usize,
    pub value: f64,
}

/// Greedy chain clustering: a value joins the current cluster when its
/// relative gap to the previous value is below tau.
pub fn cluster_multiplicities(values: &[f64], params: &ClusterParams) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut start = 0usize;
    let mut sum = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            sum = v;
            continue;
        }
        let prev = values[i - 1];
        let gap = (v - prev) / v.abs().max(f64::MIN_POSITIVE);
        if gap < params.tau {
            sum += v;
        } else {
            clusters.push(Cluster { start, size: i - start, value: sum / (i - start) as f64 });
            start = i;
            sum = v;
        }
    }
    if !values.is_empty() {
        clusters.push(Cluster {
            start,
            size: values.len() - start,
            value: sum / (values.len() - start) as f64,
        });
    }
    clusters
}

/// Level-to-level and eigenvalue renormalization estimates.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RenormEstimate {
    pub r_hat: Option<f64>,
    pub per_n_ratios: Vec<f64>,
    pub big_r_hat: Option<f64>,
    /// Matches `(source cluster index, target cluster index, achieved ratio)`
    /// supporting `big_r_hat`.
    pub match_table: Vec<(usize, usize, f64)>,
    /// First-eigenvalue index (1-based, counting multiplicity, zero modes
    /// excluded) of the anchor target cluster.
    pub anchor_index: Option<usize>,
}

/// Ratios `lambda_n^(m) / lambda_n^(m+1)` over the first `n_use` nonzero
/// cluster representatives; `r_hat` is their median.
pub fn estimate_r(
    spec_m: &Spectrum,
    spec_m1: &Spectrum,
    n_use: usize,
    params: &ClusterParams,
) -> Result<RenormEstimate> {
    if n_use == 0 {
        return Err(Error::invalid("n_use must be at least 1"));
    }
    let a = normalize_reps(spec_m, params)?;
    let b = normalize_reps(spec_m1, params)?;
    let count = n_use.min(a.len()).min(b.len());
    if count == 0 {
        return Err(Error::invalid("insufficient eigenvalues for ratio estimation"));
    }
    let ratios: Vec<f64> = (0..count).map(|i| a[i] / b[i]).collect();
    Ok(RenormEstimate {
        r_hat: Some(median(&ratios)),
        per_n_ratios: ratios,
        ..Default::default()
    })
}

/// Unnormalized nonzero cluster representatives of a spectrum.
fn normalize_reps(spec: &Spectrum, params: &ClusterParams) -> Result<Vec<f64>> {
    let values = spec.values();
    let zero_modes = values.iter().take_while(|v| v.abs() < DEFAULT_ZERO_TOL).count();
    if zero_modes == values.len() {
        return Err(Error::invalid("spectrum has no nonzero values"));
    }
    Ok(cluster_multiplicities(&values[zero_modes..], params).iter().map(|c| c.value).collect())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Searches for an eigenvalue renormalization factor R inside `window`:
/// for each candidate anchor pair of cluster representatives the score is
/// the number of representatives whose R-fold image is again (close to) a
/// representative. Reports the best ratio, or none when fewer than 3
/// matches support it.
pub fn estimate_big_r(
    norm: &NormalizedSpectrum,
    params: &ClusterParams,
    window: (f64, f64),
    match_tol: f64,
) -> Result<RenormEstimate> {
    let clusters = cluster_multiplicities(&norm.values, params);
    if clusters.len() < 8 {
        return Err(Error::invalid("need at least 8 cluster representatives"));
    }
    let reps: Vec<f64> = clusters.iter().map(|c| c.value).collect();
    let mut best: Option<(usize, Vec<(usize, usize, f64)>, f64, usize, usize)> = None;
    for ia in 0..reps.len() {
        for ib in ia + 1..reps.len() {
            let ratio = reps[ib] / reps[ia];
            if ratio < window.0 || ratio > window.1 {
                continue;
            }
            let mut matches = Vec::new();
            for (is, &s) in reps.iter().enumerate() {
                let target = ratio * s;
                // Only count targets inside the observed range.
                if target > reps[reps.len() - 1] * (1.0 + match_tol) {
                    break;
                }
                if let Some((it, &t)) = reps
                    .iter()
                    .enumerate()
                    .min_by(|(_, x), (_, y)| (*x - target).abs().total_cmp(&(*y - target).abs()))
                {
                    if (t - target).abs() <= match_tol * target {
                        matches.push((is, it, t / s));
                    }
                }
            }
            let score = matches.len();
            let better = match &best {
                None => true,
                // Prefer higher score; break ties toward smaller anchor
                // indices (earlier, better-resolved eigenvalues).
                Some((bs, _, _, bia, bib)) => {
                    score > *bs || (score == *bs && (ia, ib) < (*bia, *bib))
                }
            };
            if better {
                best = Some((score, matches, ratio, ia, ib));
            }
        }
    }
    match best {
        Some((score, matches, _ratio, _ia, ib)) if score >= 3 => {
            let refined = median(&matches.iter().map(|m| m.2).collect::<Vec<_>>());
            let anchor_index = Some(clusters[ib].start + 1);
            Ok(RenormEstimate {
                big_r_hat: Some(refined),
                match_table: matches,
                anchor_index,
                ..Default::default()
            })
        }
        _ => Ok(RenormEstimate::default()),
    }
}

/// Weyl counting data: fitted exponent alpha and samples of
/// `W(x) = N(x) / x^alpha` at each eigenvalue.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeylReport {
    pub alpha: f64,
    /// `(x, N(x), W(x))` at each nonzero eigenvalue.
    pub samples: Vec<(f64, usize, f64)>,
    pub fit_range: (f64, f64),
}

/// Fits `alpha` as the least-squares slope of `log N(lambda_n)` against
/// `log lambda_n` over the nonzero eigenvalues; `N` counts zero modes too.
/// `trim` optionally restricts the fit to eigenvalues in `[lo, hi]`.
pub fn weyl(spectrum: &Spectrum, trim: Option<(f64, f64)>) -> Result<WeylReport> {
    let values = spectrum.values();
    let zero_modes = values.iter().take_while(|v| v.abs() < DEFAULT_ZERO_TOL).count();
    let nonzero = &values[zero_modes..];
    if nonzero.len() < 10 {
        return Err(Error::invalid("need at least 10 nonzero eigenvalues for a Weyl fit"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut samples = Vec::new();
    for (i, &v) in nonzero.iter().enumerate() {
        let n_of_x = zero_modes + i + 1; // count of eigenvalues <= v
        let in_range = trim.map(|(lo, hi)| v >= lo && v <= hi).unwrap_or(true);
        if in_range {
            xs.push(v.ln());
            ys.push((n_of_x as f64).ln());
        }
        samples.push((v, n_of_x, 0.0));
    }
    if xs.len() < 2 || xs.iter().all(|&x| (x - xs[0]).abs() < 1e-14) {
        return Err(Error::invalid("degenerate Weyl fit: all abscissae equal"));
    }
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for s in &mut samples {
        s.2 = s.1 as f64 / s.0.powf(alpha);
    }
    let fit_range = trim.unwrap_or((nonzero[0], nonzero[nonzero.len() - 1]));
    Ok(WeylReport { alpha, samples, fit_range })
}
