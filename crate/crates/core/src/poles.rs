//! Poles of the dephasing resolvent and the residue tables built on them.
//!
//! Dephasing enters every asymptotic quantity through the factor
//! 1 / (1 − 2γ_p L(z)), where L is the Laplace transform of |α₀|². Clearing
//! denominators turns 1 − 2γ_p L(z) = 0 into a monic quartic
//!
//!   Q(z) = Π_mn (z − ν_mn) − 2γ_p Σ_mn A_m A_n* Π_{m'n' ≠ mn} (z − ν_m'n'),
//!
//! with ν_mn = λ_m + λ_n*. Its roots μ_j carry every decay, pulse and
//! density-matrix residue:
//!
//! * `E_j`: survival probability P(t) = Σ E_j e^{μ_j t}
//! * `f_j`: pulse shape f(τ) = Σ f_j e^{μ_j τ}
//! * `ρ_jm`: density matrix ρ(u, u') = Σ ρ_jm e^{λ_m (u − u') + μ_j u'}, u ≥ u'
//!
//! The pulse and density tables include the escape rate κ, so ∫f = Tr ρ.

use num_complex::Complex64 as C64;

use crate::dynamics::{EigenSystem, PAIRS};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::roots::{match_nearest, newton_polish, polynomial_roots, sort_descending};

/// Dephasing below this fraction of max(g, κ) uses the γ_p = 0 residues.
pub const BYPASS_FRACTION: f64 = 1e-6;

/// Relative gap below which two poles count as repeated.
pub const REPEATED_POLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PoleSystem {
    params: SystemParams,
    eigen: EigenSystem,
    mu: [C64; 4],
    e: [C64; 4],
    f: [C64; 4],
    rho: [[C64; 2]; 4],
    bypass: bool,
}

impl PoleSystem {
    /// Builds the eigen-structure and the poles in one go.
    pub fn from_params(params: &SystemParams) -> Result<Self> {
        let es = EigenSystem::new(params)?;
        Self::new(&es, params)
    }

    /// Solves for the four poles and assembles every residue table.
    ///
    /// Poles are ordered by descending real part, then descending imaginary
    /// part, except in the γ_p ≈ 0 bypass where they follow the pair order
    /// λ₁+λ₁*, λ₁+λ₂*, λ₂+λ₁*, λ₂+λ₂*.
    pub fn new(es: &EigenSystem, params: &SystemParams) -> Result<Self> {
        if params.gamma_p() < BYPASS_FRACTION * params.g().max(params.kappa()) {
            return Ok(Self::bypass(es, params));
        }
        if es.is_decoupled() {
            return Ok(Self::decoupled(es, params));
        }
        let twin = coincident_pair_sums(es);
        let mut mu = solve_quartic(es, params.gamma_p(), twin)?;
        let scale = pole_scale(&mu);
        sort_descending(&mut mu, 1e-12 * scale);
        Self::assemble(es, params, mu, twin)
    }

    /// Like [`PoleSystem::new`] but labels the poles by nearest-neighbour
    /// continuation from `previous` (the poles at a nearby sweep point).
    pub fn continued(es: &EigenSystem, params: &SystemParams, previous: &[C64; 4]) -> Result<Self> {
        let fresh = Self::new(es, params)?;
        let (perm, _) = match_nearest(previous, &fresh.mu);
        Ok(fresh.permuted(perm))
    }

    fn permuted(&self, perm: [usize; 4]) -> Self {
        Self {
            mu: perm.map(|j| self.mu[j]),
            e: perm.map(|j| self.e[j]),
            f: perm.map(|j| self.f[j]),
            rho: perm.map(|j| self.rho[j]),
            ..self.clone()
        }
    }

    fn bypass(es: &EigenSystem, params: &SystemParams) -> Self {
        let kappa = params.kappa();
        let (a, b) = (es.a(), es.b());
        let mu = es.pair_sums();
        let e = PAIRS.map(|(m, n)| a[m] * a[n].conj());
        let f = PAIRS.map(|(m, n)| kappa * b[m] * b[n].conj());
        let zero = C64::new(0.0, 0.0);
        let rho = PAIRS.map(|(m, n)| {
            let mut row = [zero; 2];
            row[m] = kappa * b[m] * b[n].conj();
            row
        });
        Self { params: *params, eigen: *es, mu, e, f, rho, bypass: true }
    }

    /// g = 0 with dephasing: Q factorises into (z − ν₁₁ − 2γ_p) times the
    /// three remaining pair factors, and only the first root carries weight.
    fn decoupled(es: &EigenSystem, params: &SystemParams) -> Self {
        let zero = C64::new(0.0, 0.0);
        let mut mu = es.pair_sums();
        mu[0] += 2.0 * params.gamma_p();
        let e = [C64::new(1.0, 0.0), zero, zero, zero];
        Self { params: *params, eigen: *es, mu, e, f: [zero; 4], rho: [[zero; 2]; 4], bypass: false }
    }

    fn assemble(es: &EigenSystem, params: &SystemParams, mu: [C64; 4], twin: Option<Twin>) -> Result<Self> {
        let nu = es.pair_sums();
        // with coincident pair sums, that common value is an exact root of Q
        // carrying no residue; its factor cancels from every formula
        let spurious = twin.and_then(|t| {
            (0..4).min_by(|&a, &b| (mu[a] - nu[t.keep]).norm().total_cmp(&(mu[b] - nu[t.keep]).norm()))
        });
        let genuine: Vec<usize> = (0..4).filter(|&j| Some(j) != spurious).collect();

        let scale = pole_scale(&mu);
        let mut min_gap = f64::INFINITY;
        for (x, &i) in genuine.iter().enumerate() {
            for &j in &genuine[x + 1..] {
                min_gap = min_gap.min((mu[i] - mu[j]).norm());
            }
        }
        if min_gap <= REPEATED_POLE_TOL * scale {
            return Err(Error::RepeatedPoles { gap: min_gap });
        }

        let kappa = params.kappa();
        let (a, b) = (es.a(), es.b());
        let zero = C64::new(0.0, 0.0);
        let mut e = [zero; 4];
        let mut f = [zero; 4];
        let mut rho = [[zero; 2]; 4];
        for &j in &genuine {
            let mut denom = C64::new(1.0, 0.0);
            for &i in &genuine {
                if i != j {
                    denom *= mu[j] - mu[i];
                }
            }
            for (k, &(m, n)) in PAIRS.iter().enumerate() {
                // Π_{m'n'} (μ − ν_m'n') / (μ − ν_mn), evaluated without dividing
                let mut cof = C64::new(1.0, 0.0);
                for (i, &nu_i) in nu.iter().enumerate() {
                    if i != k && Some(i) != twin.map(|t| t.removed_from(k)) {
                        cof *= mu[j] - nu_i;
                    }
                }
                let cof = cof / denom;
                e[j] += a[m] * a[n].conj() * cof;
                rho[j][m] += kappa * b[m] * b[n].conj() * cof;
            }
            f[j] = rho[j][0] + rho[j][1];
        }
        Ok(Self { params: *params, eigen: *es, mu, e, f, rho, bypass: false })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eigen
    }

    pub fn mu(&self) -> [C64; 4] {
        self.mu
    }

    /// Residues E_j of the survival probability.
    pub fn survival_residues(&self) -> [C64; 4] {
        self.e
    }

    /// Residues f_j of the pulse shape (κ included).
    pub fn pulse_residues(&self) -> [C64; 4] {
        self.f
    }

    /// Residue table ρ_jm of the density matrix (κ included).
    pub fn dm_residues(&self) -> [[C64; 2]; 4] {
        self.rho
    }

    pub fn is_bypass(&self) -> bool {
        self.bypass
    }

    /// Characteristic magnitude of the pole set (never below 1e-300).
    pub fn scale(&self) -> f64 {
        pole_scale(&self.mu)
    }

    /// Relative residual |Q(μ_j)| / (|D(μ_j)| + 2γ_p |N(μ_j)|) of each pole,
    /// where Q = D − 2γ_p N. Away from the pair sums this bounds
    /// |1 − 2γ_p L(μ_j)| up to a factor of two; it stays finite when a pole
    /// coincides with a pair sum (resonant symmetric cases). Zero in the bypass.
    pub fn root_residuals(&self) -> [f64; 4] {
        if self.bypass {
            return [0.0; 4];
        }
        let gp = self.params.gamma_p();
        self.mu.map(|z| {
            let (q, d, n) = quartic_parts(&self.eigen, gp, z);
            let size = d.norm() + 2.0 * gp * n.norm();
            if size == 0.0 {
                // Q, D and N vanish together: an exact root on a pair sum
                q.norm()
            } else {
                q.norm() / size
            }
        })
    }

    /// Replaces the density-matrix table. Exists so that validation can be
    /// exercised against a deliberately corrupted pipeline.
    #[doc(hidden)]
    pub fn with_dm_residues(mut self, rho: [[C64; 2]; 4]) -> Self {
        self.rho = rho;
        self
    }
}

fn pole_scale(mu: &[C64; 4]) -> f64 {
    mu.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max)
}

/// Two pair sums that coincide exactly (resonant symmetric cases):
/// ν₁₁ = ν₂₂ when Re λ₁ = Re λ₂, or ν₁₂ = ν₂₁ when Im λ₁ = Im λ₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Twin {
    keep: usize,
    drop: usize,
}

impl Twin {
    /// The factor to leave out of term `k` once (z − ν_drop) is divided out.
    fn removed_from(self, k: usize) -> usize {
        if k == self.drop {
            self.keep
        } else {
            self.drop
        }
    }
}

fn coincident_pair_sums(es: &EigenSystem) -> Option<Twin> {
    let nu = es.pair_sums();
    let scale = nu.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    [(0, 3), (1, 2)]
        .into_iter()
        .find(|&(k, l)| (nu[k] - nu[l]).norm() <= 1e-13 * scale)
        .map(|(keep, drop)| Twin { keep, drop })
}

/// Q(z), D(z) = Π (z − ν) and N(z), all in product form.
fn quartic_parts(es: &EigenSystem, gamma_p: f64, z: C64) -> (C64, C64, C64) {
    let (q, _, d, n) = reduced_eval(es, gamma_p, z, None);
    (q, d, n)
}

/// Returns (Q, Q', D, N) at z from the factored pair sums; with a twin,
/// every product has one factor (z − ν_twin) divided out.
fn reduced_eval(es: &EigenSystem, gamma_p: f64, z: C64, twin: Option<Twin>) -> (C64, C64, C64, C64) {
    let nu = es.pair_sums();
    let w = es.pair_weights();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let diff = nu.map(|n| z - n);

    // product over the factors not in `skip` (and its derivative)
    let prod_except = |skip: [Option<usize>; 2]| -> (C64, C64) {
        let mut p = one;
        let mut dp = zero;
        for (k, &dk) in diff.iter().enumerate() {
            if skip.contains(&Some(k)) {
                continue;
            }
            dp = dp * dk + p;
            p *= dk;
        }
        (p, dp)
    };
    let (d, dd) = prod_except([None, twin.map(|t| t.drop)]);
    let mut n = zero;
    let mut dn = zero;
    for k in 0..4 {
        let (p, dp) = prod_except([Some(k), twin.map(|t| t.removed_from(k))]);
        n += w[k] * p;
        dn += w[k] * dp;
    }
    let two_gp = 2.0 * gamma_p;
    (d - two_gp * n, dd - two_gp * dn, d, n)
}

/// Monic coefficients (index k multiplies z^k) of Q, or of Q/(z − ν_twin).
fn reduced_coefficients(es: &EigenSystem, gamma_p: f64, twin: Option<Twin>) -> Vec<C64> {
    let nu = es.pair_sums();
    let w = es.pair_weights();
    let zero = C64::new(0.0, 0.0);
    let expand = |skip: [Option<usize>; 2]| -> Vec<C64> {
        let mut c = vec![C64::new(1.0, 0.0)];
        for (i, &r) in nu.iter().enumerate() {
            if skip.contains(&Some(i)) {
                continue;
            }
            let mut next = vec![zero; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        c
    };
    let mut q = expand([None, twin.map(|t| t.drop)]);
    for k in 0..4 {
        for (i, v) in expand([Some(k), twin.map(|t| t.removed_from(k))]).into_iter().enumerate() {
            q[i] -= 2.0 * gamma_p * w[k] * v;
        }
    }
    q
}

fn solve_quartic(es: &EigenSystem, gamma_p: f64, twin: Option<Twin>) -> Result<[C64; 4]> {
    let coeffs = reduced_coefficients(es, gamma_p, twin);
    let roots = polynomial_roots(&coeffs)?;
    let mut mu = [C64::new(0.0, 0.0); 4];
    for (slot, z) in mu.iter_mut().zip(roots) {
        *slot = newton_polish(
            |w| {
                let (q, dq, _, _) = reduced_eval(es, gamma_p, w, twin);
                (q, dq)
            },
            z,
            1e-16,
            40,
        );
    }
    if let Some(t) = twin {
        mu[3] = es.pair_sums()[t.keep];
    }
    Ok(mu)
}
