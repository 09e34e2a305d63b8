//! Independent cross-checks: the four-component master equation for the
//! dot/cavity moments, and the limiting-case purity formulas.
//!
//! The moment vector is x = (ρ_σσ, ρ_σa, ρ_aσ, ρ_aa) with dx/dt = −G x, where
//! G is the 4×4 matrix below (internal frame, Δω = ω_d − ω_c):
//!
//! ```text
//!  γ      ig              −ig             0
//!  ig     Γ₂ + iΔω         0             −ig
//! −ig      0              Γ₂ − iΔω        ig
//!  0     −ig               ig             κ       Γ₂ = (γ + κ)/2 + γ_p
//! ```
//!
//! This matrix corresponds to a coupling of −g, so its ρ_σa equals −⟨a†σ⟩;
//! populations and eigenvalues are unaffected by that sign.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::roots::{match_nearest, sort_descending};

/// Default step as a fraction of 1/max|G_ij|.
const DEFAULT_STEP_FRACTION: f64 = 0.005;
/// Largest step the integrator accepts, as a fraction of 1/max|G_ij|.
const MAX_STEP_FRACTION: f64 = 0.05;
/// Endpoint change allowed when the step is halved.
const HALVING_LIMIT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleState {
    pub t: f64,
    pub rho_ss: C64,
    pub rho_sa: C64,
    pub rho_as: C64,
    pub rho_aa: C64,
}

impl OracleState {
    fn from_vector(t: f64, x: &Vector4<C64>) -> Self {
        Self { t, rho_ss: x[0], rho_sa: x[1], rho_as: x[2], rho_aa: x[3] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator4 {
    matrix: Matrix4<C64>,
}

impl Generator4 {
    pub fn new(params: &SystemParams) -> Self {
        let c = |re: f64, im: f64| C64::new(re, im);
        let g = params.g();
        let dw = params.detuning();
        let gamma = params.gamma();
        let kappa = params.kappa();
        let g2 = 0.5 * (gamma + kappa) + params.gamma_p();
        #[rustfmt::skip]
        let matrix = Matrix4::new(
            c(gamma, 0.0), c(0.0, g),     c(0.0, -g),     c(0.0, 0.0),
            c(0.0, g),     c(g2, dw),     c(0.0, 0.0),    c(0.0, -g),
            c(0.0, -g),    c(0.0, 0.0),   c(g2, -dw),     c(0.0, g),
            c(0.0, 0.0),   c(0.0, -g),    c(0.0, g),      c(kappa, 0.0),
        );
        Self { matrix }
    }

    /// G, with dx/dt = −G x.
    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    pub fn max_entry(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// One classical RK4 step for the linear system dx/dt = A x, written as the
/// matrix I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24.
fn rk4_propagator<const N: usize>(a: &SMatrix<C64, N, N>, h: f64) -> SMatrix<C64, N, N> {
    let ha = a * C64::new(h, 0.0);
    let mut term = SMatrix::<C64, N, N>::identity();
    let mut sum = term;
    for k in 1..=4 {
        term = term * ha / C64::new(k as f64, 0.0);
        sum += term;
    }
    sum
}

/// R^n by repeated squaring: n RK4 steps of a constant linear system.
fn matrix_power<const N: usize>(mut base: SMatrix<C64, N, N>, mut n: u64) -> SMatrix<C64, N, N> {
    let mut acc = SMatrix::<C64, N, N>::identity();
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base = base * base;
        n >>= 1;
    }
    acc
}

/// Fixed-step RK4 from t = 0, sampled at the (non-decreasing) `times`.
fn integrate_linear<const N: usize>(
    a: &SMatrix<C64, N, N>,
    x0: SVector<C64, N>,
    times: &[f64],
    dt: f64,
) -> Vec<SVector<C64, N>> {
    let mut out = Vec::with_capacity(times.len());
    let mut x = x0;
    let mut t = 0.0;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / dt).ceil().max(1.0) as u64;
            x = matrix_power(rk4_propagator(a, span / steps as f64), steps) * x;
            t = target;
        }
        out.push(x);
    }
    out
}

/// Integrates with `dt` and with `dt/2`, and fails unless the endpoints agree.
fn checked_integration<const N: usize>(
    a: &SMatrix<C64, N, N>,
    x0: SVector<C64, N>,
    times: &[f64],
    dt: f64,
) -> Result<Vec<SVector<C64, N>>> {
    if let Some(w) = times.windows(2).find(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(format!("sample times must be non-decreasing ({} > {})", w[0], w[1])));
    }
    if times.first().is_some_and(|&t| t < 0.0 || !t.is_finite()) || times.last().is_some_and(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("sample times must be finite and non-negative".into()));
    }
    let coarse = integrate_linear(a, x0, times, dt);
    let fine = integrate_linear(a, x0, times, 0.5 * dt);
    if let (Some(c), Some(f)) = (coarse.last(), fine.last()) {
        let change = (c - f).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(change < HALVING_LIMIT) {
            return Err(Error::StepTooLarge { change, limit: HALVING_LIMIT });
        }
    }
    Ok(fine)
}

/// The master-equation oracle for one parameter point.
#[derive(Debug, Clone)]
pub struct MasterOracle {
    params: SystemParams,
    generator: Generator4,
    dt: f64,
}

impl MasterOracle {
    /// `dt = None` picks 0.005/max|G_ij|; an explicit step above
    /// 0.05/max|G_ij| is rejected.
    pub fn new(params: &SystemParams, dt: Option<f64>) -> Result<Self> {
        let generator = Generator4::new(params);
        let max = generator.max_entry().max(f64::MIN_POSITIVE);
        let dt = match dt {
            None => DEFAULT_STEP_FRACTION / max,
            Some(dt) if dt > 0.0 && dt <= MAX_STEP_FRACTION / max => dt,
            Some(dt) => {
                return Err(Error::InvalidArgument(format!(
                    "dt = {dt} outside (0, {}] for this generator",
                    MAX_STEP_FRACTION / max
                )))
            }
        };
        Ok(Self { params: *params, generator, dt })
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    pub fn generator(&self) -> &Generator4 {
        &self.generator
    }

    /// Moments at the requested times, starting from the excited dot.
    pub fn trajectory(&self, times: &[f64]) -> Result<Vec<OracleState>> {
        let a = -self.generator.matrix;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let xs = checked_integration(&a, Vector4::new(one, zero, zero, zero), times, self.dt)?;
        Ok(times.iter().zip(&xs).map(|(&t, x)| OracleState::from_vector(t, x)).collect())
    }

    /// Amplitudes (α, β) at `times` by RK4 on the 2×2 amplitude equation.
    pub fn amplitudes(&self, times: &[f64], initial: [C64; 2]) -> Result<Vec<[C64; 2]>> {
        let cf = self.params.internal_frequencies();
        let i = C64::i();
        let g = C64::new(self.params.g(), 0.0);
        let m = Matrix2::new(-i * cf.omega_d_tilde, -i * g, -i * g, -i * cf.omega_c_tilde);
        let max = m.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
        let dt = self.dt.min(DEFAULT_STEP_FRACTION / max);
        let xs = checked_integration(&m, Vector2::new(initial[0], initial[1]), times, dt)?;
        Ok(xs.iter().map(|x| [x[0], x[1]]).collect())
    }

    /// ρ(u, u') = κ[⟨a†σ⟩(u') β₀(u − u') + ρ_aa(u') β̃₀(u − u')] for u ≥ u',
    /// with the Hermitian extension otherwise.
    pub fn reconstruct_dm(&self, points: &[(f64, f64)]) -> Result<Vec<C64>> {
        let ordered: Vec<(f64, f64)> = points.iter().map(|&(u, v)| if u >= v { (u, v) } else { (v, u) }).collect();
        let mut later: Vec<f64> = ordered.iter().map(|p| p.1).collect();
        let mut gaps: Vec<f64> = ordered.iter().map(|p| p.0 - p.1).collect();
        later.sort_by(f64::total_cmp);
        later.dedup();
        gaps.sort_by(f64::total_cmp);
        gaps.dedup();

        let states = self.trajectory(&later)?;
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let from_dot = self.amplitudes(&gaps, [one, zero])?;
        let from_cavity = self.amplitudes(&gaps, [zero, one])?;
        let kappa = self.params.kappa();

        let lookup = |xs: &[f64], x: f64| xs.binary_search_by(|y| y.total_cmp(&x)).expect("sampled above");
        Ok(points
            .iter()
            .zip(&ordered)
            .map(|(&(u, _), &(hi, lo))| {
                let s = &states[lookup(&later, lo)];
                let k = lookup(&gaps, hi - lo);
                let (beta0, beta0_tilde) = (from_dot[k][1], from_cavity[k][1]);
                // the generator's ρ_σa is −⟨a†σ⟩
                let value = kappa * (-s.rho_sa * beta0 + s.rho_aa * beta0_tilde);
                if u >= hi {
                    value
                } else {
                    value.conj()
                }
            })
            .collect())
    }
}

/// Integrates the master equation, sampled at `times`.
pub fn integrate_master(params: &SystemParams, times: &[f64], dt: Option<f64>) -> Result<Vec<OracleState>> {
    MasterOracle::new(params, dt)?.trajectory(times)
}

/// Eigenvalues of −G from a complex Schur decomposition, sorted by
/// descending real part.
pub fn generator_eigenvalues(params: &SystemParams) -> Result<[C64; 4]> {
    let minus_g = -Generator4::new(params).matrix;
    let eig = minus_g.schur().eigenvalues().ok_or(Error::NoConvergence)?;
    let mut out = [eig[0], eig[1], eig[2], eig[3]];
    let scale = out.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    sort_descending(&mut out, 1e-12 * scale);
    Ok(out)
}

/// Eigenvalues of −G relabelled to pair with `mu`, and the largest pairing
/// distance.
pub fn matched_generator_eigenvalues(params: &SystemParams, mu: &[C64; 4]) -> Result<([C64; 4], f64)> {
    let eig = generator_eigenvalues(params)?;
    let (perm, dist) = match_nearest(mu, &eig);
    Ok((perm.map(|j| eig[j]), dist))
}

/// Parameter regime a limiting formula assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// |Δω| ≫ g ≫ γ_p, κ.
    DetunedWeak,
    /// κ ≫ g ≫ γ_p and κ ≫ |Δω|.
    BadCavity,
    /// γ_p ≫ g ≫ κ.
    IncoherentHopping,
    /// Δω = 0 and g ≫ γ_p, κ.
    ResonantWeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitingPurity {
    pub label: &'static str,
    pub value: f64,
    pub regime: Regime,
    pub validity: &'static str,
    /// Whether every inequality of the regime holds by a factor ≥ 30.
    pub applies: bool,
}

/// Margin by which a "≫" must hold before a formula is marked applicable.
pub const REGIME_MARGIN: f64 = 30.0;

fn much_greater(a: f64, b: f64) -> bool {
    a >= REGIME_MARGIN * b
}

/// All limiting-case purity formulas, evaluated verbatim at `params`.
///
/// Formulas that need ε = g²/Δω² report NaN on resonance.
pub fn asymptotic_purities(params: &SystemParams) -> Vec<LimitingPurity> {
    let g = params.g();
    let kappa = params.kappa();
    let gp = params.gamma_p();
    let dw = params.detuning();
    let eps = g * g / (dw * dw);
    let gamma_prime = 2.0 * g * g / gp;

    let detuned_weak = much_greater(dw.abs(), g) && much_greater(g, gp) && much_greater(g, kappa);
    let bad_cavity = much_greater(kappa, g) && much_greater(g, gp) && much_greater(kappa, dw.abs());
    let hopping = much_greater(gp, g) && much_greater(g, kappa) && much_greater(gp, dw.abs());
    let resonant_weak = dw == 0.0 && much_greater(g, gp) && much_greater(g, kappa);

    vec![
        LimitingPurity {
            label: "P_dot",
            value: kappa / (2.0 * gp + kappa) * kappa * eps / (2.0 * gp + kappa * eps),
            regime: Regime::DetunedWeak,
            validity: "|dw| >> g >> gamma_p, kappa",
            applies: detuned_weak,
        },
        LimitingPurity {
            label: "P_dot (bad cavity)",
            value: 2.0 * g * g / (2.0 * g * g + gp * kappa),
            regime: Regime::BadCavity,
            validity: "kappa >> g >> gamma_p, kappa >> |dw|",
            applies: bad_cavity,
        },
        LimitingPurity {
            label: "P_cav",
            value: 2.0 * gp * eps * kappa / ((kappa + 2.0 * gp * eps) * (kappa + 4.0 * gp * eps)),
            regime: Regime::DetunedWeak,
            validity: "|dw| >> g >> gamma_p >> kappa",
            applies: detuned_weak && much_greater(gp, kappa),
        },
        LimitingPurity {
            label: "P_cav (rate equation)",
            value: kappa * gamma_prime / ((kappa + 2.0 * gamma_prime) * (kappa + gamma_prime)),
            regime: Regime::IncoherentHopping,
            validity: "gamma_p >> g >> kappa, gamma_p >> |dw|",
            applies: hopping,
        },
        LimitingPurity {
            label: "P_resonant",
            value: kappa * (2.0 * kappa + gp) / (2.0 * (kappa + gp) * (kappa + 2.0 * gp)),
            regime: Regime::ResonantWeak,
            validity: "dw = 0, g >> gamma_p, kappa",
            applies: resonant_weak,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_state_is_constant() {
        let p = SystemParams::resonant(0.0, 0.0, 0.0, 0.0).unwrap();
        let traj = integrate_master(&p, &[0.0, 1.0, 10.0], Some(0.01)).unwrap();
        for s in traj {
            assert_eq!(s.rho_ss, C64::new(1.0, 0.0));
            assert_eq!(s.rho_aa, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn conjugacy_and_outflow() {
        let p = SystemParams::detuned(600.0, 25.0, 150.0, 3.0, 200.0).unwrap();
        let times: Vec<f64> = (0..40).map(|k| 0.002 * k as f64).collect();
        let traj = integrate_master(&p, &times, None).unwrap();
        let mut last = f64::INFINITY;
        for s in &traj {
            assert!((s.rho_as - s.rho_sa.conj()).norm() < 1e-12);
            let total = s.rho_ss.re + s.rho_aa.re;
            assert!(total <= last + 1e-15);
            last = total;
        }
    }

    #[test]
    fn rejects_large_steps_and_bad_times() {
        let p = SystemParams::resonant(25.0, 150.0, 0.0, 200.0).unwrap();
        assert!(MasterOracle::new(&p, Some(1.0)).is_err());
        assert!(integrate_master(&p, &[0.2, 0.1], None).is_err());
    }

    #[test]
    fn free_eigenvalues_are_pair_sums() {
        let p = SystemParams::detuned(30.0, 25.0, 150.0, 0.0, 0.0).unwrap();
        let es = crate::dynamics::EigenSystem::new(&p).unwrap();
        let nu = es.pair_sums();
        let (_, dist) = matched_generator_eigenvalues(&p, &nu).unwrap();
        assert!(dist < 1e-10 * 300.0);
    }

    #[test]
    fn limiting_formula_landmarks() {
        let (g, kappa) = (1.0, 100.0);
        let p = SystemParams::resonant(g, kappa, 0.0, 2.0 * g * g / kappa).unwrap();
        let bad = asymptotic_purities(&p)[1];
        assert!((bad.value - 0.5).abs() < 1e-15);

        let kappa = 0.01;
        let p = SystemParams::resonant(g, kappa, 0.0, 2.0 * 2f64.sqrt() * g * g / kappa).unwrap();
        let rate = asymptotic_purities(&p)[3];
        assert!((rate.value - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert!(rate.applies);

        for (kappa, gp, above) in [(2.8, 1.0, true), (2.7, 1.0, false)] {
            let p = SystemParams::resonant(100.0, kappa, 0.0, gp).unwrap();
            let res = asymptotic_purities(&p)[4];
            assert_eq!(res.value >= 0.5, above);
        }
    }
}
