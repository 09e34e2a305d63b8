//! Scalar and curve observables: survival probability, decay rate, pulse
//! shape, emission spectrum and mean energies.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::survival_integral;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::poles::PoleSystem;
use crate::quadrature::{integrate, pairwise_sum};

/// Multiple of 1/Γ treated as "t → ∞".
pub const ASYMPTOTIC_DECAY_TIMES: f64 = 30.0;

/// Poles whose survival residue is below this fraction of Σ|E_j| do not
/// contribute to P(t) and are ignored by [`decay_rate`].
const NEGLIGIBLE_RESIDUE: f64 = 1e-9;

/// P(t) = Σ E_j e^{μ_j t}.
pub fn survival_probability(ps: &PoleSystem, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (e, mu) in ps.survival_residues().into_iter().zip(ps.mu()) {
        acc += e * (mu * t).exp();
    }
    acc.re
}

/// Γ = min_j |Re μ_j| over the poles that carry survival weight.
pub fn decay_rate(ps: &PoleSystem) -> f64 {
    let e = ps.survival_residues();
    let total: f64 = e.iter().map(|x| x.norm()).sum();
    ps.mu()
        .iter()
        .zip(e)
        .filter(|(_, ej)| ej.norm() > NEGLIGIBLE_RESIDUE * total)
        .map(|(mu, _)| mu.re.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Γ(γ_p) / Γ(0) at otherwise fixed parameters. Above 1 is anti-Zeno,
/// below 1 is Zeno.
pub fn normalized_decay_rate(params: &SystemParams) -> Result<f64> {
    let free = PoleSystem::from_params(&params.with_gamma_p(0.0)?)?;
    let dephased = PoleSystem::from_params(params)?;
    Ok(decay_rate(&dephased) / decay_rate(&free))
}

/// 30/Γ: the time after which every asymptotic quantity has settled.
pub fn asymptotic_time(ps: &PoleSystem) -> f64 {
    ASYMPTOTIC_DECAY_TIMES / decay_rate(ps)
}

/// Emitted intensity f(τ) at retarded time τ = t − r.
pub fn pulse_shape(ps: &PoleSystem, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for (f, mu) in ps.pulse_residues().into_iter().zip(ps.mu()) {
        acc += f * (mu * tau).exp();
    }
    let value = acc.re;
    if value < 0.0 && value > -1e-10 {
        0.0
    } else {
        value
    }
}

/// ∫₀^{t_max} f(τ) dτ by adaptive quadrature (independent of the
/// closed-form trace).
pub fn pulse_integral_numeric(ps: &PoleSystem, t_max: f64) -> f64 {
    let mut points = vec![0.0];
    // geometric panels resolve the fast initial transient
    for k in (0..48).rev() {
        points.push(t_max * 0.5_f64.powi(k));
    }
    points.dedup();
    integrate(|tau| pulse_shape(ps, tau), &points, 1e-14, 1e-13).value
}

/// ⟨τ⟩ = ∫τ f dτ / ∫f dτ, closed form from the pulse residues.
pub fn pulse_mean_length(ps: &PoleSystem) -> f64 {
    let mut first = C64::new(0.0, 0.0);
    let mut zeroth = C64::new(0.0, 0.0);
    for (f, mu) in ps.pulse_residues().into_iter().zip(ps.mu()) {
        first += f / (mu * mu);
        zeroth += -f / mu;
    }
    first.re / zeroth.re
}

/// The Glauber spectrum S(k) = N / |(k − ω̃_d)(k − ω̃_c) − g²|² and its
/// moments.
///
/// The denominator is expanded around the midpoint of the two bare
/// frequencies, x = k − c, as the real quartic x⁴ + c₂x² + c₁x + c₀ (no cubic
/// term). Moments are integrated adaptively on [−W, W] and completed by the
/// asymptotic tail expansion of 1/|·|².
#[derive(Debug, Clone)]
pub struct Spectrum {
    params: SystemParams,
    norm_factor: f64,
    /// Midpoint in the internal frame.
    center: f64,
    c2: f64,
    c1: f64,
    c0: f64,
    /// Peak positions and half widths, relative to `center`.
    peaks: [(f64, f64); 2],
    half_window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralMoments {
    /// ∫S dk.
    pub norm: f64,
    /// ∫k S dk (reporting frame).
    pub first: f64,
    /// Δ = [∫(k − ω_d)² S dk]^{1/2}.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub norm: f64,
    pub width: f64,
}

impl Spectrum {
    /// Builds the spectrum straight from the parameters; the prefactor uses
    /// a Lyapunov solve for L(0), so confluent parameters are allowed.
    pub fn new(params: &SystemParams) -> Result<Self> {
        let params = *params;
        let g = params.g();
        let norm_factor = if g == 0.0 || params.kappa() == 0.0 {
            0.0
        } else {
            let l0 = survival_integral(&params)?;
            params.kappa() * g * g / (2.0 * PI) / (1.0 - 2.0 * params.gamma_p() * l0)
        };

        let cf = params.internal_frequencies();
        let center = 0.5 * (cf.omega_d_tilde.re + cf.omega_c_tilde.re);
        let a = cf.omega_d_tilde - center;
        let b = cf.omega_c_tilde - center;
        let s = a + b;
        let q = a * b - g * g;
        let c2 = 2.0 * q.re + s.norm_sqr();
        let c1 = -2.0 * (s * q.conj()).re;
        let c0 = q.norm_sqr();

        // complex roots of (x − a)(x − b) − g²
        let root = (0.25 * (a - b) * (a - b) + g * g).sqrt();
        let peaks = [0.5 * s + root, 0.5 * s - root].map(|k| (k.re, k.im.abs()));
        let reach = [a.norm(), b.norm(), g, peaks[0].0.abs() + peaks[0].1, peaks[1].0.abs() + peaks[1].1]
            .into_iter()
            .fold(f64::MIN_POSITIVE, f64::max);
        // 2N/(3W³) below 1e-12 of the norm, and far outside every feature
        let by_tail = (norm_factor.abs() / 1e-12).cbrt();
        let half_window = (1e3 * reach).max(by_tail);
        Ok(Self { params, norm_factor, center, c2, c1, c0, peaks, half_window })
    }

    /// The k-independent prefactor N.
    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    fn density_shifted(&self, x: f64) -> f64 {
        let x2 = x * x;
        self.norm_factor / (x2 * x2 + self.c2 * x2 + self.c1 * x + self.c0)
    }

    /// S(k) at reporting-frame frequency `k`.
    pub fn density(&self, k: f64) -> f64 {
        let x = self.params.to_internal(k) - self.center;
        self.density_shifted(x)
    }

    pub fn curve(&self, grid: &[f64]) -> Result<SpectrumCurve> {
        let m = self.moments();
        Ok(SpectrumCurve {
            grid: grid.to_vec(),
            values: grid.iter().map(|&k| self.density(k)).collect(),
            norm: m.norm,
            width: m.width,
        })
    }

    /// Reporting-frame midpoint of the two bare frequencies.
    pub fn center(&self) -> f64 {
        self.params.to_reporting(self.center)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let w = self.half_window;
        let mut pts = vec![-w, 0.0, w];
        for &(x0, hw) in &self.peaks {
            for m in [0.0, 1.0, 4.0, 20.0, 100.0, 1e3] {
                pts.push(x0 - m * hw);
                pts.push(x0 + m * hw);
            }
        }
        let reach = self.peaks.iter().map(|(x, h)| x.abs() + h).fold(0.0, f64::max);
        for m in [2.0, 10.0, 100.0] {
            pts.push(-m * reach);
            pts.push(m * reach);
        }
        let mut pts: Vec<f64> = pts.into_iter().filter(|p| p.abs() <= w).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// ∫x^n S dx over the shifted variable, n = 0, 1, 2, including tails.
    fn shifted_moment(&self, n: i32) -> f64 {
        let w = self.half_window;
        let pts = self.breakpoints();
        let body = integrate(|x| x.powi(n) * self.density_shifted(x), &pts, 0.0, 1e-13).value;
        let nf = self.norm_factor;
        // 1/|p|² = x⁻⁴ (1 − c₂x⁻² − c₁x⁻³ + …), both tails together
        let tail = match n {
            0 => nf * (2.0 / (3.0 * w.powi(3)) - 2.0 * self.c2 / (5.0 * w.powi(5))),
            1 => -nf * 2.0 * self.c1 / (5.0 * w.powi(5)),
            2 => nf * (2.0 / w - 2.0 * self.c2 / (3.0 * w.powi(3))),
            _ => unreachable!("only moments up to 2 are used"),
        };
        pairwise_sum([body, tail])
    }

    pub fn moments(&self) -> SpectralMoments {
        let m0 = self.shifted_moment(0);
        let m1 = self.shifted_moment(1);
        let m2 = self.shifted_moment(2);
        let shift_reporting = self.params.to_reporting(self.center);
        let first = m1 + shift_reporting * m0;
        // k − ω_d = x + (c − Δω) in the internal frame
        let d = self.center - self.params.detuning();
        let second = m2 + 2.0 * d * m1 + d * d * m0;
        SpectralMoments { norm: m0, first, width: second.max(0.0).sqrt() }
    }
}

/// S(k) at a single reporting-frame frequency.
pub fn spectrum(params: &SystemParams, k: f64) -> Result<f64> {
    Ok(Spectrum::new(params)?.density(k))
}

/// Weights (cavity, dot) of the two-Lorentzian approximation.
pub fn approx_weights(params: &SystemParams) -> Result<(f64, f64)> {
    let two_gp = 2.0 * params.gamma_p();
    let total = two_gp + params.kappa();
    if params.gamma_p() == 0.0 || total == 0.0 {
        return Err(Error::ZeroWidthDotLine);
    }
    Ok((two_gp / total, params.kappa() / total))
}

/// Two-Lorentzian approximation of S(k), intended for |ω_d − ω_c| ≫ g.
///
/// Fails with [`Error::ZeroWidthDotLine`] when γ_p = 0, where the dot line
/// degenerates to a delta function.
pub fn spectrum_approx(params: &SystemParams, k: f64) -> Result<f64> {
    let (w_cav, w_dot) = approx_weights(params)?;
    let kappa = params.kappa();
    let gp = params.gamma_p();
    let dc = k - params.omega_c();
    let dd = k - params.omega_d();
    let s_cav = if kappa > 0.0 { (kappa / (2.0 * PI)) / (dc * dc + 0.25 * kappa * kappa) } else { 0.0 };
    let s_dot = (gp / PI) / (dd * dd + gp * gp);
    Ok(w_cav * s_cav + w_dot * s_dot)
}

/// Mean photon energy and energy handed to the dephasing reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub photon: f64,
    pub environment: f64,
}

/// Closed-form E_p and E_e; only valid without non-cavity decay (γ = 0).
pub fn mean_energies(params: &SystemParams) -> Result<EnergyReport> {
    if params.gamma() > 0.0 {
        return Err(Error::RequiresGammaZero { gamma: params.gamma() });
    }
    let two_gp = 2.0 * params.gamma_p();
    let total = params.kappa() + two_gp;
    if total == 0.0 {
        return Err(Error::NoEscapeChannel);
    }
    let (wd, wc) = (params.omega_d(), params.omega_c());
    Ok(EnergyReport {
        photon: (two_gp * wc + params.kappa() * wd) / total,
        environment: two_gp * (wd - wc) / total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_point(det: f64, gp: f64) -> SystemParams {
        SystemParams::detuned(det, 25.0, 150.0, 0.0, gp).unwrap()
    }

    fn poles(det: f64, gp: f64) -> PoleSystem {
        PoleSystem::from_params(&standard_point(det, gp)).unwrap()
    }

    #[test]
    fn survival_starts_at_one() {
        for gp in [0.0, 50.0, 200.0] {
            assert!((survival_probability(&poles(600.0, gp), 0.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decoupled_survival_is_flat() {
        let p = SystemParams::resonant(0.0, 150.0, 0.0, 200.0).unwrap();
        let ps = PoleSystem::from_params(&p).unwrap();
        for t in [0.0, 0.1, 1.0, 10.0] {
            assert!((survival_probability(&ps, t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_decay_slows_with_dephasing() {
        let rates: Vec<f64> = [0.0, 200.0, 3200.0].iter().map(|&gp| decay_rate(&poles(0.0, gp))).collect();
        assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
    }

    #[test]
    fn purcell_limit() {
        let g = 25.0;
        let kappa = 100.0 * g;
        let p = SystemParams::resonant(g, kappa, 0.0, 0.0).unwrap();
        let rate = decay_rate(&PoleSystem::from_params(&p).unwrap());
        let purcell = 4.0 * g * g / kappa;
        assert!((rate / purcell - 1.0).abs() < 0.05, "{rate} vs {purcell}");
    }

    #[test]
    fn zeno_and_anti_zeno() {
        assert!(normalized_decay_rate(&standard_point(600.0, 200.0)).unwrap() > 1.0);
        assert!(normalized_decay_rate(&standard_point(600.0, 12800.0)).unwrap() < 1.0);
        for gp in [50.0, 200.0, 800.0, 3200.0] {
            assert!(normalized_decay_rate(&standard_point(0.0, gp)).unwrap() <= 1.0);
        }
    }

    #[test]
    fn pulse_starts_dark_and_is_normalized() {
        let p = SystemParams::resonant(25.0, 150.0, 0.0, 0.0).unwrap();
        let ps = PoleSystem::from_params(&p).unwrap();
        assert!(pulse_shape(&ps, 0.0).abs() < 1e-12);
        for (det, gp) in [(0.0, 0.0), (0.0, 200.0), (600.0, 50.0)] {
            let ps = poles(det, gp);
            let t_end = asymptotic_time(&ps);
            let integral = pulse_integral_numeric(&ps, t_end);
            assert!((integral - 1.0).abs() < 1e-8, "{det} {gp}: {integral}");
            let longer = pulse_integral_numeric(&ps, 2.0 * t_end);
            assert!((integral - longer).abs() < 1e-9);
        }
    }

    #[test]
    fn pulse_lengthens_on_resonance() {
        let lengths: Vec<f64> = [0.0, 50.0, 200.0].iter().map(|&gp| pulse_mean_length(&poles(0.0, gp))).collect();
        assert!(lengths[0] < lengths[1] && lengths[1] < lengths[2], "{lengths:?}");
    }

    #[test]
    fn resonant_spectrum_is_mirror_symmetric() {
        let s = Spectrum::new(&standard_point(0.0, 50.0)).unwrap();
        for d in [0.5, 3.0, 40.0, 1e3] {
            let (l, r) = (s.density(-d), s.density(d));
            assert!((l - r).abs() <= 1e-14 * l.max(r));
        }
    }

    #[test]
    fn spectrum_is_normalized() {
        for (det, gp) in [(0.0, 0.0), (0.0, 200.0), (600.0, 0.0), (600.0, 200.0), (600.0, 3200.0)] {
            let m = Spectrum::new(&standard_point(det, gp)).unwrap().moments();
            assert!((m.norm - 1.0).abs() < 1e-6, "{det} {gp}: {}", m.norm);
        }
    }

    #[test]
    fn tail_decays_as_inverse_fourth_power() {
        let s = Spectrum::new(&standard_point(600.0, 200.0)).unwrap();
        let k = 1e7;
        let ratio = s.density(k) * k.powi(4) / s.norm_factor();
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dominant_peak_moves_to_cavity_under_strong_dephasing() {
        let p = standard_point(600.0, 200.0);
        let s = Spectrum::new(&p).unwrap();
        assert!(s.density(0.0) > s.density(600.0));
        let weak = Spectrum::new(&standard_point(600.0, 50.0)).unwrap();
        let strong_ratio = s.density(600.0) / s.density(0.0);
        let weak_ratio = weak.density(600.0) / weak.density(0.0);
        assert!(weak_ratio > strong_ratio);
    }

    #[test]
    fn approximation_weights() {
        for (kappa, gp) in [(150.0, 200.0), (1.0, 1e-3), (0.0, 5.0)] {
            let p = SystemParams::detuned(600.0, 25.0, kappa, 0.0, gp).unwrap();
            let (a, b) = approx_weights(&p).unwrap();
            assert!((a + b - 1.0).abs() < 1e-15);
        }
        let p = standard_point(600.0, 0.0);
        assert_eq!(spectrum_approx(&p, 0.0), Err(Error::ZeroWidthDotLine));
    }

    #[test]
    fn energy_limits_and_conservation() {
        let e = mean_energies(&standard_point(600.0, 0.0)).unwrap();
        assert_eq!(e.photon, 600.0);
        assert_eq!(e.environment, 0.0);
        let p = SystemParams::detuned(600.0, 25.0, 150.0, 0.0, 1e6 * 150.0).unwrap();
        let e = mean_energies(&p).unwrap();
        assert!(e.photon.abs() <= 1e-5 * 600.0);
        let p = SystemParams::new(100.0, 400.0, 25.0, 150.0, 0.0, 80.0).unwrap();
        let e = mean_energies(&p).unwrap();
        assert!(e.environment < 0.0);
        assert!((e.photon + e.environment - 100.0).abs() <= 4.0 * f64::EPSILON * 400.0);
        let p = SystemParams::detuned(600.0, 25.0, 150.0, 0.1, 200.0).unwrap();
        assert!(matches!(mean_energies(&p), Err(Error::RequiresGammaZero { .. })));
    }

    #[test]
    fn first_moment_is_photon_energy() {
        let p = SystemParams::new(600.0, 0.0, 25.0, 150.0, 0.0, 200.0).unwrap();
        let s = Spectrum::new(&p).unwrap();
        let e = mean_energies(&p).unwrap();
        let m = s.moments();
        assert!((m.first / e.photon - 1.0).abs() < 1e-5, "{} vs {}", m.first, e.photon);
        // same physics with a shifted reporting frame
        let shifted = SystemParams::new(1600.0, 1000.0, 25.0, 150.0, 0.0, 200.0).unwrap();
        let s = Spectrum::new(&shifted).unwrap();
        let e = mean_energies(&shifted).unwrap();
        assert!((s.moments().first / e.photon - 1.0).abs() < 1e-5);
    }

    #[test]
    fn width_grows_with_dephasing_and_scales() {
        let widths: Vec<f64> = [0.0, 25.0, 50.0, 100.0, 200.0]
            .iter()
            .map(|&gp| Spectrum::new(&standard_point(0.0, gp)).unwrap().moments().width)
            .collect();
        assert!(widths.windows(2).all(|w| w[1] > w[0]), "{widths:?}");

        let p = SystemParams::new(30.0, 0.0, 25.0, 150.0, 2.0, 40.0).unwrap();
        let w1 = Spectrum::new(&p).unwrap().moments().width;
        let w3 = Spectrum::new(&p.scaled(3.0).unwrap())
            .unwrap()
            .moments()
            .width;
        assert!((w3 / w1 - 3.0).abs() < 1e-7);
    }
}
