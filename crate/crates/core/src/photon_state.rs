//! The emitted photon's real-space density matrix and its functionals.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::{asymptotic_time, decay_rate};
use crate::params::SystemParams;
use crate::poles::PoleSystem;
use crate::quadrature::pairwise_sum;
use crate::sweep;

/// Nodes of the discretised-kernel positivity check.
pub const PSD_GRID: usize = 64;

/// ρ(u, u') in retarded coordinates u = t − r, u' = t − r'.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDensityMatrix {
    ps: PoleSystem,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilterReport {
    #[serde(rename = "T")]
    pub window: f64,
    /// Tr(ρ_T²) / P_d(T).
    pub purity: f64,
    /// P_d(T) = (Tr ρ_T)².
    pub efficiency_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityMax {
    pub gamma_p: f64,
    pub purity: f64,
}

/// φ(x) = (e^{xT} − 1)/x, continuous at x = 0.
fn phi(x: C64, t: f64) -> C64 {
    let xt = x * t;
    if xt.norm() < 1e-4 {
        t * (1.0 + xt / 2.0 + xt * xt / 6.0 + xt * xt * xt / 24.0)
    } else {
        ((xt).exp() - 1.0) / x
    }
}

/// φ'(x).
fn phi_prime(x: C64, t: f64) -> C64 {
    let xt = x * t;
    if xt.norm() < 1e-4 {
        t * t * (0.5 + xt / 3.0 + xt * xt / 8.0 + xt * xt * xt / 30.0)
    } else {
        (t * x * xt.exp() - (xt.exp() - 1.0)) / (x * x)
    }
}

/// F(a, b, T) = ∫₀^T du' ∫_{u'}^T du e^{a(u − u') + b u'}.
fn triangle_integral(a: C64, b: C64, t: f64) -> C64 {
    let gap = a - b;
    if gap.norm() < 1e-8 * a.norm().max(b.norm()).max(1.0 / t) {
        phi_prime(0.5 * (a + b), t)
    } else {
        (phi(a, t) - phi(b, t)) / gap
    }
}

/// P_co = (1 − P)/2.
pub fn coincidence_probability(purity: f64) -> f64 {
    0.5 * (1.0 - purity)
}

impl PhotonDensityMatrix {
    pub fn new(ps: &PoleSystem) -> Self {
        Self { ps: ps.clone() }
    }

    pub fn from_params(params: &SystemParams) -> Result<Self> {
        Ok(Self::new(&PoleSystem::from_params(params)?))
    }

    pub fn poles(&self) -> &PoleSystem {
        &self.ps
    }

    /// ρ(u, u'), with ρ(u', u) = ρ(u, u')* for u < u'.
    pub fn eval(&self, u: f64, u_prime: f64) -> C64 {
        debug_assert!(u >= 0.0 && u_prime >= 0.0);
        if u < u_prime {
            return self.eval(u_prime, u).conj();
        }
        let lambda = self.ps.eigen().lambda();
        let mu = self.ps.mu();
        let rho = self.ps.dm_residues();
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..4 {
            for m in 0..2 {
                acc += rho[j][m] * (lambda[m] * (u - u_prime) + mu[j] * u_prime).exp();
            }
        }
        if u == u_prime {
            acc.im = 0.0;
        }
        acc
    }

    /// Tr ρ = Σ f_j / (−μ_j).
    pub fn trace(&self) -> f64 {
        let terms = self.ps.pulse_residues().into_iter().zip(self.ps.mu()).map(|(f, mu)| (-f / mu).re);
        pairwise_sum(terms)
    }

    /// Iterates the double sum Σ ρ_jm ρ*_j'm' · weight(μ_j + μ_j'*, λ_m + λ_m'*).
    fn kernel_sum(&self, rho: &[[C64; 2]; 4], weight: impl Fn(C64, C64) -> C64) -> f64 {
        let lambda = self.ps.eigen().lambda();
        let mu = self.ps.mu();
        let mut terms = Vec::with_capacity(64);
        for j in 0..4 {
            for jp in 0..4 {
                let b = mu[j] + mu[jp].conj();
                for m in 0..2 {
                    for mp in 0..2 {
                        let coeff = rho[j][m] * rho[jp][mp].conj();
                        if coeff == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let a = lambda[m] + lambda[mp].conj();
                        terms.push((2.0 * coeff * weight(a, b)).re);
                    }
                }
            }
        }
        pairwise_sum(terms)
    }

    /// Tr ρ² = Σ 2ρ_jm ρ*_j'm' / ((μ_j + μ_j'*)(λ_m + λ_m'*)).
    pub fn purity(&self) -> f64 {
        self.kernel_sum(&self.ps.dm_residues(), |a, b| 1.0 / (a * b))
    }

    pub fn coincidence_probability(&self) -> f64 {
        coincidence_probability(self.purity())
    }

    /// Tr ρ_T, the probability of a photon inside the first `window`.
    pub fn filtered_trace(&self, window: f64) -> f64 {
        let terms = self.ps.pulse_residues().into_iter().zip(self.ps.mu()).map(|(f, mu)| (f * phi(mu, window)).re);
        pairwise_sum(terms)
    }

    /// Tr ρ_T² over the square [0, T]².
    pub fn filtered_purity_numerator(&self, window: f64) -> f64 {
        self.kernel_sum(&self.ps.dm_residues(), |a, b| triangle_integral(a, b, window))
    }

    /// P(T) = Tr(ρ_T²)/P_d(T) with P_d(T) = (Tr ρ_T)².
    pub fn time_filter(&self, window: f64) -> Result<FilterReport> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::InvalidArgument(format!("filter window must be positive, got {window}")));
        }
        let tr = self.filtered_trace(window);
        let efficiency_sq = tr * tr;
        Ok(FilterReport { window, purity: self.filtered_purity_numerator(window) / efficiency_sq, efficiency_sq })
    }

    /// Purity of ρ̂_T = ρ_T / Tr ρ_T, computed from rescaled residues.
    pub fn normalized_filtered_purity(&self, window: f64) -> Result<f64> {
        if !(window > 0.0) || !window.is_finite() {
            return Err(Error::InvalidArgument(format!("filter window must be positive, got {window}")));
        }
        let scale = 1.0 / self.filtered_trace(window);
        let rho = self.ps.dm_residues().map(|row| row.map(|r| r * scale));
        Ok(self.kernel_sum(&rho, |a, b| triangle_integral(a, b, window)))
    }

    /// T½ with P_d(T½) = 1/2, by bisection to 1e-9 in P_d.
    pub fn half_efficiency_time(&self) -> Result<f64> {
        let target = 0.5;
        let pd = |t: f64| self.filtered_trace(t).powi(2);
        let total = self.trace().powi(2);
        if !(total > target) {
            return Err(Error::InvalidArgument(format!(
                "efficiency never reaches 1/2 (P_d(inf) = {total})"
            )));
        }
        let mut hi = 1.0 / decay_rate(&self.ps);
        while pd(hi) < target {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = pd(mid);
            if (v - target).abs() <= 1e-12 || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(mid);
            }
            if v < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Smallest and largest eigenvalue of the weighted kernel
    /// √w_i ρ(u_i, u_j) √w_j on Chebyshev nodes over [0, 30/Γ].
    pub fn psd_check(&self) -> PsdReport {
        let n = PSD_GRID;
        let length = asymptotic_time(&self.ps);
        let (nodes, weights) = fejer_nodes(n, length);
        let k = DMatrix::from_fn(n, n, |i, j| self.eval(nodes[i], nodes[j]) * (weights[i] * weights[j]).sqrt());
        let eig = k.symmetric_eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        PsdReport { min_eigenvalue: min, max_eigenvalue: max, passed: min >= -1e-8 * max.abs() }
    }
}

/// Fejér's first rule on [0, length]: Chebyshev nodes and positive weights.
fn fejer_nodes(n: usize, length: f64) -> (Vec<f64>, Vec<f64>) {
    use std::f64::consts::PI;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let theta = (2 * k + 1) as f64 * PI / (2 * n) as f64;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            s += (2.0 * j as f64 * theta).cos() / (4.0 * (j * j) as f64 - 1.0);
        }
        let w = 2.0 / n as f64 * (1.0 - 2.0 * s);
        nodes.push(0.5 * length * (1.0 - theta.cos()));
        weights.push(0.5 * length * w);
    }
    (nodes, weights)
}

/// Purity with a one-off nudge of γ_p when the exact value sits on a
/// confluent point.
fn purity_at(params: &SystemParams, gamma_p: f64) -> Result<f64> {
    let p = params.with_gamma_p(gamma_p)?;
    match PhotonDensityMatrix::from_params(&p) {
        Ok(dm) => Ok(dm.purity()),
        Err(Error::DegenerateEigenvalues { .. } | Error::RepeatedPoles { .. }) => {
            Ok(PhotonDensityMatrix::from_params(&params.with_gamma_p(gamma_p * (1.0 + 1e-7))?)?.purity())
        }
        Err(e) => Err(e),
    }
}

/// Locates the interior maximum of P(γ_p) on [lo, hi] at fixed g, κ, Δω.
///
/// A 65-point logarithmic scan brackets the best sample, then golden-section
/// search on log γ_p refines it. A best sample at either end of the range
/// means there is no interior maximum.
pub fn purity_max_line(params: &SystemParams, lo: f64, hi: f64) -> Result<PurityMax> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    const SCAN: usize = 65;
    let (a, b) = (lo.ln(), hi.ln());
    let xs: Vec<f64> = (0..SCAN).map(|i| a + (b - a) * i as f64 / (SCAN - 1) as f64).collect();
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let p = purity_at(params, x.exp())?;
        if p > best.1 {
            best = (i, p);
        }
    }
    let i = best.0;
    if i == 0 || i == SCAN - 1 {
        return Err(Error::NoInteriorMax { lo, hi });
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut l, mut r) = (xs[i - 1], xs[i + 1]);
    let mut c = r - inv_phi * (r - l);
    let mut d = l + inv_phi * (r - l);
    let mut fc = purity_at(params, c.exp())?;
    let mut fd = purity_at(params, d.exp())?;
    while r - l > 1e-10 {
        if fc > fd {
            r = d;
            d = c;
            fd = fc;
            c = r - inv_phi * (r - l);
            fc = purity_at(params, c.exp())?;
        } else {
            l = c;
            c = d;
            fc = fd;
            d = l + inv_phi * (r - l);
            fd = purity_at(params, d.exp())?;
        }
    }
    let x = 0.5 * (l + r);
    Ok(PurityMax { gamma_p: x.exp(), purity: purity_at(params, x.exp())? })
}

/// Row of a (κ/g, γ_p/g) purity map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurityCell {
    pub kappa: f64,
    pub gamma_p: f64,
    pub purity: Option<f64>,
}

/// Purity on a grid; degenerate points come back as `None`.
pub fn purity_map(base: &SystemParams, kappas: &[f64], gamma_ps: &[f64]) -> Vec<PurityCell> {
    let grid: Vec<(f64, f64)> = kappas.iter().flat_map(|&k| gamma_ps.iter().map(move |&gp| (k, gp))).collect();
    sweep::map(&grid, |&(kappa, gamma_p)| PurityCell { kappa, gamma_p, purity: purity_cell(base, kappa, gamma_p) })
}

/// Sequential twin of [`purity_map`].
pub fn purity_map_sequential(base: &SystemParams, kappas: &[f64], gamma_ps: &[f64]) -> Vec<PurityCell> {
    let grid: Vec<(f64, f64)> = kappas.iter().flat_map(|&k| gamma_ps.iter().map(move |&gp| (k, gp))).collect();
    sweep::map_sequential(&grid, |&(kappa, gamma_p)| PurityCell { kappa, gamma_p, purity: purity_cell(base, kappa, gamma_p) })
}

fn purity_cell(base: &SystemParams, kappa: f64, gamma_p: f64) -> Option<f64> {
    let p = base.with_kappa(kappa).ok()?.with_gamma_p(gamma_p).ok()?;
    PhotonDensityMatrix::from_params(&p).ok().map(|dm| dm.purity())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(det: f64, g: f64, kappa: f64, gamma: f64, gp: f64) -> PhotonDensityMatrix {
        PhotonDensityMatrix::from_params(&SystemParams::detuned(det, g, kappa, gamma, gp).unwrap()).unwrap()
    }

    #[test]
    fn pure_without_dephasing() {
        for det in [0.0, 600.0] {
            let d = dm(det, 25.0, 150.0, 0.0, 0.0);
            assert!((d.trace() - 1.0).abs() < 1e-10);
            assert!((d.purity() - 1.0).abs() < 1e-10, "{}", d.purity());
        }
    }

    #[test]
    fn resonant_purity_value() {
        let d = dm(0.0, 1.0, 2.0, 0.0, 0.5);
        assert!((d.trace() - 1.0).abs() < 1e-10);
        assert!((d.purity() - 0.61).abs() < 0.01, "{}", d.purity());
    }

    #[test]
    fn hermitian_with_real_diagonal() {
        let d = dm(600.0, 25.0, 150.0, 0.0, 200.0);
        for (u, v) in [(0.01, 0.002), (0.03, 0.05), (0.1, 0.0)] {
            assert_eq!(d.eval(u, v), d.eval(v, u).conj());
        }
        assert_eq!(d.eval(0.02, 0.02).im, 0.0);
        assert!(d.eval(0.0, 0.0).norm() < 1e-10);
    }

    #[test]
    fn diagonal_is_pulse_shape() {
        let d = dm(600.0, 25.0, 150.0, 0.0, 200.0);
        for u in [0.0, 0.004, 0.02, 0.3] {
            let f = crate::observables::pulse_shape(d.poles(), u);
            assert!((d.eval(u, u).re - f).abs() < 1e-10);
        }
    }

    #[test]
    fn bounds_and_losses() {
        let d = dm(30.0, 25.0, 150.0, 10.0, 80.0);
        let tr = d.trace();
        assert!(tr < 1.0);
        assert!(d.purity() <= tr * tr);
        let d = dm(0.0, 25.0, 150.0, 0.0, 50.0);
        assert!(d.purity() < 1.0 && d.purity() > 0.0);
    }

    #[test]
    fn coincidence_values() {
        assert_eq!(coincidence_probability(1.0), 0.0);
        assert!((coincidence_probability(0.61) - 0.195).abs() < 1e-15);
        let p = 3.0 - 2.0 * 2f64.sqrt();
        assert!((coincidence_probability(p) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn triangle_integral_limit_is_continuous() {
        let b = C64::new(-0.7, 0.3);
        let t = 2.5;
        let exact = triangle_integral(b, b, t);
        let near = triangle_integral(b + C64::new(1e-6, 0.0), b, t);
        assert!((exact - near).norm() < 1e-5 * exact.norm());
        // small arguments go through the series
        let tiny = triangle_integral(C64::new(1e-9, 0.0), C64::new(-1e-9, 0.0), t);
        assert!((tiny - t * t / 2.0).norm() < 1e-8);
    }

    #[test]
    fn filter_limits() {
        let d = dm(0.0, 1.0, 2.0, 0.0, 0.5);
        let long = 60.0 / decay_rate(d.poles());
        let r = d.time_filter(long).unwrap();
        assert!((r.purity - d.purity()).abs() < 1e-6);
        assert!((r.efficiency_sq - d.trace().powi(2)).abs() < 1e-6);
        let n = d.normalized_filtered_purity(1.3).unwrap();
        assert!((n - d.time_filter(1.3).unwrap().purity).abs() < 1e-12);
        assert!(d.time_filter(0.0).is_err());
    }

    #[test]
    fn pure_state_stays_pure_under_filter() {
        let d = dm(0.0, 25.0, 150.0, 0.0, 0.0);
        for t in [0.005, 0.02, 0.1] {
            assert!((d.time_filter(t).unwrap().purity - 1.0).abs() < 1e-9);
            assert!((d.normalized_filtered_purity(t).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn efficiency_is_monotone() {
        let d = dm(0.0, 1.0, 2.0, 0.0, 0.5);
        let pd: Vec<f64> = (1..60).map(|k| d.time_filter(0.2 * k as f64).unwrap().efficiency_sq).collect();
        assert!(pd.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn half_efficiency_time_hits_one_half() {
        let d = dm(0.0, 1.0, 2.0, 0.0, 0.5);
        let t = d.half_efficiency_time().unwrap();
        assert!((d.time_filter(t).unwrap().efficiency_sq - 0.5).abs() < 1e-9);
    }

    #[test]
    fn kernel_is_positive_semidefinite() {
        for (det, gp) in [(0.0, 0.0), (0.0, 50.0), (600.0, 200.0)] {
            let r = dm(det, 25.0, 150.0, 0.0, gp).psd_check();
            assert!(r.passed, "{det} {gp}: {r:?}");
        }
    }

    #[test]
    fn monotone_scan_has_no_interior_max() {
        let p = SystemParams::resonant(1.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(purity_max_line(&p, 1e-3, 0.1), Err(Error::NoInteriorMax { lo: 1e-3, hi: 0.1 }));
    }
}
