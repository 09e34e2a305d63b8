use proptest::prelude::*;
use qdcav_core::observables::{mean_energies, Spectrum};
use qdcav_core::params::SystemParams;
use qdcav_core::photon_state::{coincidence_probability, PhotonDensityMatrix};

fn params() -> impl Strategy<Value = SystemParams> {
    (-800.0..800.0f64, 1.0..60.0f64, 1.0..400.0f64, 0.0..400.0f64)
        .prop_map(|(dw, g, kappa, gp)| SystemParams::detuned(dw, g, kappa, 0.0, gp).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_is_one_without_dot_loss(p in params()) {
        let dm = PhotonDensityMatrix::from_params(&p).unwrap();
        prop_assert!((dm.trace() - 1.0).abs() < 1e-9, "trace {}", dm.trace());
    }

    #[test]
    fn purity_bounds(p in params()) {
        let dm = PhotonDensityMatrix::from_params(&p).unwrap();
        let (purity, tr) = (dm.purity(), dm.trace());
        prop_assert!(purity > 0.0 && purity <= tr * tr + 1e-10);
        prop_assert!((dm.coincidence_probability() - coincidence_probability(purity)).abs() < 1e-15);
    }

    #[test]
    fn energies_add_to_dot_frequency(p in params(), wc in -1e4..1e4f64) {
        let p = SystemParams::new(p.detuning() + wc, wc, p.g(), p.kappa(), 0.0, p.gamma_p()).unwrap();
        let e = mean_energies(&p).unwrap();
        prop_assert!((e.photon + e.environment - p.omega_d()).abs() <= 4.0 * f64::EPSILON * p.omega_d().abs().max(1.0));
    }

    #[test]
    fn density_matrix_is_hermitian(p in params(), u in 0.0..0.2f64, v in 0.0..0.2f64) {
        let dm = PhotonDensityMatrix::from_params(&p).unwrap();
        let (a, b) = (dm.eval(u, v), dm.eval(v, u).conj());
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1e-300));
        prop_assert!(dm.eval(u, u).re >= -1e-12);
    }

    #[test]
    fn width_scales_linearly(p in params(), s in 0.1..10.0f64) {
        let w = Spectrum::new(&p).unwrap().moments().width;
        let ws = Spectrum::new(&p.scaled(s).unwrap()).unwrap().moments().width;
        prop_assert!((ws - s * w).abs() < 1e-6 * s * w, "{} vs {}", ws, s * w);
    }
}
