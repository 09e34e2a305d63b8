//! The built-in validation battery: oracle agreement, conservation laws,
//! published numbers and limiting formulas over the standard scenarios.

use std::f64::consts::SQRT_2;

use serde::Serialize;

use crate::error::Result;
use crate::observables::{
    decay_rate, mean_energies, normalized_decay_rate, pulse_integral_numeric, pulse_shape, survival_probability,
    Spectrum,
};
use crate::oracle::{asymptotic_purities, matched_generator_eigenvalues, MasterOracle};
use crate::params::SystemParams;
use crate::photon_state::{coincidence_probability, purity_max_line, PhotonDensityMatrix};
use crate::poles::PoleSystem;
use crate::sweep::{self, Axis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    /// |got − expected| ≤ tolerance
    Within,
    /// |got − expected| ≤ tolerance · |expected|
    Relative,
    /// got ≤ expected + tolerance
    AtMost,
    /// got ≥ expected − tolerance
    AtLeast,
    /// got > expected
    Above,
    /// got < expected
    Below,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub relation: Relation,
    pub expected: f64,
    pub got: f64,
    pub tolerance: f64,
    pub residual: f64,
    pub passed: bool,
    /// Non-gating checks are reported but do not fail the battery.
    pub gating: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(criterion: u8, name: impl Into<String>, relation: Relation, expected: f64, got: f64, tolerance: f64) -> Self {
        let residual = match relation {
            Relation::Relative => ((got - expected) / expected).abs(),
            _ => (got - expected).abs(),
        };
        let passed = match relation {
            Relation::Within | Relation::Relative => residual <= tolerance,
            Relation::AtMost => got <= expected + tolerance,
            Relation::AtLeast => got >= expected - tolerance,
            Relation::Above => got > expected,
            Relation::Below => got < expected,
        };
        Self { criterion, name: name.into(), relation, expected, got, tolerance, residual, passed, gating: true, note: None }
    }

    fn failed(criterion: u8, name: impl Into<String>, expected: f64, err: impl std::fmt::Display) -> Self {
        Self {
            criterion,
            name: name.into(),
            relation: Relation::Within,
            expected,
            got: f64::NAN,
            tolerance: 0.0,
            residual: f64::NAN,
            passed: false,
            gating: true,
            note: Some(err.to_string()),
        }
    }

    fn non_gating(mut self, note: &str) -> Self {
        self.gating = false;
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationOptions {
    /// Flips the sign of ρ_j2 before the density-matrix comparison.
    pub inject_dm_sign_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// All gating checks passed.
    pub passed: bool,
}

impl ValidationReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed || !c.gating);
        Self { checks, passed }
    }

    pub fn for_criterion(&self, criterion: u8) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.criterion == criterion)
    }
}

/// Criteria covered by [`run_battery`]; the remaining one concerns the CLI.
pub const BATTERY_CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Runs every check group, in parallel when enabled, in a fixed order.
pub fn run_battery(options: ValidationOptions) -> ValidationReport {
    let groups = sweep::map(&BATTERY_CRITERIA, |&c| run_criterion(c, options));
    ValidationReport::from_checks(groups.into_iter().flatten().collect())
}

pub fn run_criterion(criterion: u8, options: ValidationOptions) -> Vec<Check> {
    match criterion {
        1 => pole_correspondence(),
        2 => oracle_equivalence(options),
        3 => conservation(),
        4 => filtered_resonant(),
        5 => filtered_detuned(),
        6 => purity_ridge(),
        7 => zeno(),
        8 => state_properties(),
        9 => limiting_regimes(),
        _ => Vec::new(),
    }
}

/// g = 25, κ = 150 μeV with γ_p ∈ {0, 50, 200, 3200} and Δω ∈ {0, 600}.
pub fn standard_battery() -> Vec<SystemParams> {
    let mut out = Vec::new();
    for det in [0.0, 600.0] {
        for gp in [0.0, 50.0, 200.0, 3200.0] {
            out.push(SystemParams::detuned(det, 25.0, 150.0, 0.0, gp).expect("valid battery parameters"));
        }
    }
    out
}

fn label(p: &SystemParams) -> String {
    format!("dw={},gamma_p={}", p.detuning(), p.gamma_p())
}

fn pole_correspondence() -> Vec<Check> {
    let g = 25.0;
    let axis = Axis::log(0.1 * g, 100.0 * g, 10).expect("fixed axis").values();
    let mut checks = Vec::new();
    for det in [0.0, 600.0] {
        let grid: Vec<(f64, f64)> = axis.iter().flat_map(|&k| axis.iter().map(move |&gp| (k, gp))).collect();
        let results = sweep::map(&grid, |&(kappa, gp)| -> Result<(f64, bool)> {
            let p = SystemParams::detuned(det, g, kappa, 0.0, gp)?;
            let ps = PoleSystem::from_params(&p)?;
            let (eig, dist) = matched_generator_eigenvalues(&p, &ps.mu())?;
            Ok((dist / ps.scale(), eig.iter().chain(ps.mu().iter()).all(|z| z.re < 0.0)))
        });
        let name = format!("pole-generator-match[dw={det}]");
        match results.into_iter().collect::<Result<Vec<_>>>() {
            Ok(rs) => {
                let worst = rs.iter().map(|r| r.0).fold(0.0, f64::max);
                checks.push(Check::new(1, name, Relation::AtMost, 0.0, worst, 1e-10));
                let negative = rs.iter().filter(|r| r.1).count() as f64;
                checks.push(Check::new(
                    1,
                    format!("negative-real-parts[dw={det}]"),
                    Relation::Within,
                    grid.len() as f64,
                    negative,
                    0.0,
                ));
            }
            Err(e) => checks.push(Check::failed(1, name, 0.0, e)),
        }
    }
    checks
}

fn flip_second_column(ps: PoleSystem) -> PoleSystem {
    let rho = ps.dm_residues().map(|row| [row[0], -row[1]]);
    ps.with_dm_residues(rho)
}

fn oracle_group(p: &SystemParams, options: ValidationOptions) -> Result<Vec<Check>> {
    let ps = PoleSystem::from_params(p)?;
    let oracle = MasterOracle::new(p, None)?;
    let t_end = 10.0 / decay_rate(&ps);
    let times: Vec<f64> = (0..50).map(|k| t_end * k as f64 / 49.0).collect();
    let traj = oracle.trajectory(&times)?;
    let mut dp = 0.0_f64;
    let mut df = 0.0_f64;
    for (t, s) in times.iter().zip(&traj) {
        dp = dp.max((survival_probability(&ps, *t) - s.rho_ss.re).abs());
        df = df.max((pulse_shape(&ps, *t) - p.kappa() * s.rho_aa.re).abs());
    }

    let ps_dm = if options.inject_dm_sign_error { flip_second_column(ps.clone()) } else { ps.clone() };
    let dm = PhotonDensityMatrix::new(&ps_dm);
    let grid: Vec<f64> = (0..20).map(|k| t_end * k as f64 / 19.0).collect();
    let points: Vec<(f64, f64)> = grid.iter().flat_map(|&u| grid.iter().map(move |&v| (u, v))).collect();
    let rebuilt = oracle.reconstruct_dm(&points)?;
    let drho = points.iter().zip(&rebuilt).map(|(&(u, v), r)| (dm.eval(u, v) - r).norm()).fold(0.0, f64::max);

    let l = label(p);
    Ok(vec![
        Check::new(2, format!("oracle-survival[{l}]"), Relation::AtMost, 0.0, dp, 1e-8),
        Check::new(2, format!("oracle-pulse[{l}]"), Relation::AtMost, 0.0, df, 1e-8),
        Check::new(2, format!("oracle-density-matrix[{l}]"), Relation::AtMost, 0.0, drho, 1e-8),
    ])
}

fn oracle_equivalence(options: ValidationOptions) -> Vec<Check> {
    let battery = standard_battery();
    sweep::map(&battery, |p| {
        oracle_group(p, options).unwrap_or_else(|e| vec![Check::failed(2, format!("oracle[{}]", label(p)), 0.0, e)])
    })
    .into_iter()
    .flatten()
    .collect()
}

fn conservation_group(p: &SystemParams) -> Result<Vec<Check>> {
    let l = label(p);
    let dm = PhotonDensityMatrix::from_params(p)?;
    let ps = dm.poles();
    let trace = dm.trace();
    let pulse = pulse_integral_numeric(ps, 30.0 / decay_rate(ps));
    let moments = Spectrum::new(p)?.moments();
    let energies = mean_energies(p)?;
    let omega_scale = p.omega_d().abs().max(p.omega_c().abs());
    let mut checks = vec![
        Check::new(3, format!("trace[{l}]"), Relation::Within, 1.0, trace, 1e-10),
        Check::new(3, format!("pulse-integral[{l}]"), Relation::Within, trace, pulse, 1e-6),
        Check::new(3, format!("spectrum-integral[{l}]"), Relation::Within, trace, moments.norm, 1e-6),
        Check::new(
            3,
            format!("energy-sum[{l}]"),
            Relation::Within,
            p.omega_d(),
            energies.photon + energies.environment,
            4.0 * f64::EPSILON * omega_scale,
        ),
    ];
    if energies.photon != 0.0 {
        checks.push(Check::new(3, format!("first-moment[{l}]"), Relation::Relative, energies.photon, moments.first, 1e-5));
    }
    Ok(checks)
}

fn conservation() -> Vec<Check> {
    let mut battery = standard_battery();
    // same physics in a frame where both frequencies are non-zero
    battery.push(SystemParams::new(1600.0, 1000.0, 25.0, 150.0, 0.0, 200.0).expect("valid"));
    sweep::map(&battery, |p| {
        conservation_group(p).unwrap_or_else(|e| vec![Check::failed(3, format!("conservation[{}]", label(p)), 0.0, e)])
    })
    .into_iter()
    .flatten()
    .collect()
}

fn filtered_resonant() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let p = SystemParams::resonant(1.0, 2.0, 0.0, 0.5)?;
        let dm = PhotonDensityMatrix::from_params(&p)?;
        let t_half = dm.half_efficiency_time()?;
        let at_two = dm.time_filter(2.0)?;
        let at_half = dm.time_filter(t_half)?;
        Ok(vec![
            Check::new(4, "resonant-filter-unfiltered-purity", Relation::Within, 0.61, dm.purity(), 0.01),
            Check::new(4, "resonant-filter-half-efficiency-time", Relation::Within, 2.0, t_half, 0.1),
            Check::new(4, "resonant-filter-efficiency-at-2tau_g", Relation::Within, 0.5, at_two.efficiency_sq, 0.02),
            Check::new(4, "resonant-filter-purity-at-2tau_g", Relation::Within, 0.85, at_two.purity, 0.02),
            Check::new(4, "resonant-filter-purity-at-T_half", Relation::Within, 0.85, at_half.purity, 0.02),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::failed(4, "resonant-filter", 0.85, e)])
}

fn filtered_detuned() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let p = SystemParams::detuned(8.0, 1.0, SQRT_2 / 50.0, 0.0, 100.0)?;
        let dm = PhotonDensityMatrix::from_params(&p)?;
        let at_half = dm.time_filter(dm.half_efficiency_time()?)?;
        Ok(vec![
            Check::new(5, "detuned-filter-unfiltered-purity", Relation::Within, 0.17, dm.purity(), 0.01),
            Check::new(5, "detuned-filter-efficiency-at-T_half", Relation::Within, 0.5, at_half.efficiency_sq, 1e-9),
            Check::new(5, "detuned-filter-purity-at-T_half", Relation::Within, 0.28, at_half.purity, 0.02),
        ])
    };
    run().unwrap_or_else(|e| vec![Check::failed(5, "detuned-filter", 0.28, e)])
}

/// P_max = 3 − 2√2.
pub const RIDGE_PURITY: f64 = 3.0 - 2.0 * SQRT_2;

fn ridge_checks(name: &str, p: &SystemParams, lo: f64, hi: f64, location: Option<f64>) -> Vec<Check> {
    match purity_max_line(p, lo, hi) {
        Ok(m) => {
            let mut out = vec![Check::new(6, format!("{name}-value"), Relation::Relative, RIDGE_PURITY, m.purity, 0.05)];
            if let Some(at) = location {
                out.push(Check::new(6, format!("{name}-location"), Relation::Relative, at, m.gamma_p, 0.05));
            }
            out
        }
        Err(e) => {
            let mut out = vec![Check::failed(6, format!("{name}-value"), RIDGE_PURITY, &e)];
            if let Some(at) = location {
                out.push(Check::failed(6, format!("{name}-location"), at, &e));
            }
            out
        }
    }
}

fn purity_ridge() -> Vec<Check> {
    let g = 1.0;
    let upper = |kappa: f64| 2.0 * SQRT_2 * g * g / kappa;
    type Case = (&'static str, f64, f64, f64, f64, Option<f64>, bool);
    let cases: Vec<Case> = vec![
        // (name, detuning, κ, scan lo, scan hi, expected location, gating)
        ("ridge-resonant-kappa=2g", 0.0, 2.0, 1e-2, 1e3, Some(upper(2.0)), false),
        ("ridge-resonant-kappa=0.01g", 0.0, 0.01, 1.0, 1e5, Some(upper(0.01)), true),
        ("ridge-detuned-lower", 8.0, 5e-4, 1e-3, 1e-1, None, true),
        ("ridge-detuned-upper", 8.0, 5e-4, 1e3, 1e5, Some(upper(5e-4)), true),
    ];
    let groups = sweep::map(&cases, |&(name, det, kappa, lo, hi, at, gating)| {
        let checks = match SystemParams::detuned(det, g, kappa, 0.0, 1.0) {
            Ok(p) => ridge_checks(name, &p, lo, hi, at),
            Err(e) => vec![Check::failed(6, name, RIDGE_PURITY, e)],
        };
        if gating {
            checks
        } else {
            checks
                .into_iter()
                .map(|c| c.non_gating("purity is monotone in gamma_p at kappa = 2g on resonance; no interior maximum exists"))
                .collect()
        }
    });
    groups.into_iter().flatten().collect()
}

fn zeno() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let detuned = SystemParams::detuned(600.0, 25.0, 150.0, 0.0, 1.0)?;
        let mut out = vec![
            Check::new(7, "anti-zeno[dw=600,gamma_p=200]", Relation::Above, 1.0, normalized_decay_rate(&detuned.with_gamma_p(200.0)?)?, 0.0),
            Check::new(7, "zeno[dw=600,gamma_p=12800]", Relation::Below, 1.0, normalized_decay_rate(&detuned.with_gamma_p(12800.0)?)?, 0.0),
        ];
        let resonant = SystemParams::resonant(25.0, 150.0, 0.0, 1.0)?;
        let grid = Axis::log(1.0, 1e4, 17)?.values();
        let ratios = sweep::map(&grid, |&gp| normalized_decay_rate(&resonant.with_gamma_p(gp)?));
        let worst = ratios.into_iter().collect::<Result<Vec<_>>>()?.into_iter().fold(f64::NEG_INFINITY, f64::max);
        out.push(Check::new(7, "no-anti-zeno-on-resonance", Relation::AtMost, 1.0, worst, 1e-12));
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::failed(7, "zeno", 1.0, e)])
}

fn property_group(p: &SystemParams) -> Result<Vec<Check>> {
    let l = label(p);
    let dm = PhotonDensityMatrix::from_params(p)?;
    let t_end = 10.0 / decay_rate(dm.poles());
    let grid: Vec<f64> = (0..24).map(|k| t_end * k as f64 / 23.0).collect();
    let mut hermitian = 0.0_f64;
    let mut diagonal = f64::INFINITY;
    for &u in &grid {
        diagonal = diagonal.min(dm.eval(u, u).re);
        for &v in &grid {
            hermitian = hermitian.max((dm.eval(u, v) - dm.eval(v, u).conj()).norm());
        }
    }
    let psd = dm.psd_check();
    let trace = dm.trace();
    let purity = dm.purity();
    let efficiencies: Vec<f64> =
        (1..=40).map(|k| dm.time_filter(t_end * k as f64 / 40.0).map(|r| r.efficiency_sq)).collect::<Result<_>>()?;
    let worst_drop = efficiencies.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    let mut out = vec![
        Check::new(8, format!("hermiticity[{l}]"), Relation::AtMost, 0.0, hermitian, 0.0),
        Check::new(8, format!("diagonal-nonnegative[{l}]"), Relation::AtLeast, 0.0, diagonal, 1e-10),
        Check::new(8, format!("kernel-psd[{l}]"), Relation::AtLeast, 0.0, psd.min_eigenvalue, 1e-8 * psd.max_eigenvalue.abs()),
        Check::new(8, format!("purity-below-trace-squared[{l}]"), Relation::AtMost, trace * trace, purity, 1e-12),
        Check::new(8, format!("efficiency-monotone[{l}]"), Relation::AtMost, 0.0, worst_drop, 0.0),
    ];
    if p.gamma_p() == 0.0 {
        out.push(Check::new(8, format!("pure-without-dephasing[{l}]"), Relation::Within, 1.0, purity, 1e-10));
        out.push(Check::new(8, format!("no-coincidences[{l}]"), Relation::Within, 0.0, dm.coincidence_probability(), 1e-10));
    }
    Ok(out)
}

fn state_properties() -> Vec<Check> {
    let mut battery = standard_battery();
    battery.push(SystemParams::detuned(30.0, 25.0, 150.0, 10.0, 80.0).expect("valid"));
    let mut checks: Vec<Check> = sweep::map(&battery, |p| {
        property_group(p).unwrap_or_else(|e| vec![Check::failed(8, format!("properties[{}]", label(p)), 0.0, e)])
    })
    .into_iter()
    .flatten()
    .collect();
    for purity in [1.0, 0.61, RIDGE_PURITY] {
        checks.push(Check::new(
            8,
            format!("coincidence-arithmetic[P={purity:.6}]"),
            Relation::Within,
            (1.0 - purity) / 2.0,
            coincidence_probability(purity),
            1e-15,
        ));
    }
    checks
}

fn limiting_regimes() -> Vec<Check> {
    // (name, detuning, κ, γ_p, formula labels summed) with g = 1
    let cases: Vec<(&str, f64, f64, f64, &[&str])> = vec![
        ("detuned-dot-line", 100.0, 1e-2, 1e-4, &["P_dot", "P_cav"]),
        ("detuned-cavity-line", 100.0, 1e-4, 1e-2, &["P_dot", "P_cav"]),
        ("detuned-line2-lower", 100.0, 1e-6, 1e-6 / (2.0 * SQRT_2 * 1e-4), &["P_dot", "P_cav"]),
        ("bad-cavity", 0.0, 100.0, 1e-2, &["P_dot (bad cavity)"]),
        ("incoherent-hopping", 0.0, 1e-3, 100.0, &["P_cav (rate equation)"]),
        ("resonant-weak-a", 0.0, 1e-2, 1e-2, &["P_resonant"]),
        ("resonant-weak-b", 0.0, 3e-2, 1e-2, &["P_resonant"]),
        ("resonant-weak-c", 0.0, 1e-2, 3e-2, &["P_resonant"]),
    ];
    let mut checks: Vec<Check> = sweep::map(&cases, |&(name, det, kappa, gp, labels)| {
        let run = || -> Result<Check> {
            let p = SystemParams::detuned(det, 1.0, kappa, 0.0, gp)?;
            let formulas = asymptotic_purities(&p);
            let used: Vec<_> = formulas.iter().filter(|f| labels.contains(&f.label)).collect();
            let limit: f64 = used.iter().map(|f| f.value).sum();
            let exact = PhotonDensityMatrix::from_params(&p)?.purity();
            let mut c = Check::new(9, format!("limit-{name}"), Relation::Relative, limit, exact, 0.10);
            if !used.iter().any(|f| f.applies) {
                c.passed = false;
                c.note = Some("no formula's regime applies at this point".into());
            }
            Ok(c)
        };
        run().unwrap_or_else(|e| Check::failed(9, format!("limit-{name}"), 0.0, e))
    });
    let half = || -> Result<Check> {
        let (g, kappa) = (1.0, 100.0);
        let p = SystemParams::resonant(g, kappa, 0.0, 2.0 * g * g / kappa)?;
        let exact = PhotonDensityMatrix::from_params(&p)?.purity();
        Ok(Check::new(9, "bad-cavity-half-purity", Relation::Relative, 0.5, exact, 0.02))
    };
    checks.push(half().unwrap_or_else(|e| Check::failed(9, "bad-cavity-half-purity", 0.5, e)));
    checks
}
