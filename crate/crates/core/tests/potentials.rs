use fkgap_core::model::{
    energy_window, CosineFactor, FourierMode, FrequencyModule, InteractionPotential, Lagrangian, OnSite, Potential,
    QuasiPeriodicPotential, TrigProduct, WellPotential,
};
use fkgap_core::{Boundary, Configuration};
use proptest::prelude::*;

const STEP: f64 = 1e-5;

fn golden() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

fn coupled_well() -> WellPotential {
    let f = |w: [f64; 2], phase| CosineFactor { wave: w.to_vec(), phase };
    WellPotential::new(
        2,
        0.3,
        vec![
            TrigProduct { amplitude: -0.4, factors: vec![f([6.0, 0.0], 0.1)] },
            TrigProduct { amplitude: 0.25, factors: vec![f([1.0, 2.0], 0.0), f([0.0, 3.0], 0.7)] },
            TrigProduct { amplitude: 0.1, factors: vec![f([2.0, -1.0], 0.3), f([1.0, 1.0], 0.0), f([0.5, 0.0], 1.1)] },
        ],
    )
    .unwrap()
}

fn quasi() -> QuasiPeriodicPotential {
    QuasiPeriodicPotential::new(
        FrequencyModule::new(vec![1.0, golden()]).unwrap(),
        vec![
            FourierMode { k: vec![1, 0], amplitude: 0.2, phase: 0.3 },
            FourierMode { k: vec![2, -1], amplitude: 0.05, phase: 0.0 },
            FourierMode { k: vec![0, 3], amplitude: 0.1, phase: 1.3 },
        ],
    )
    .unwrap()
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central-difference gradient and Hessian against the closed forms.
fn check_derivatives(p: &dyn Potential, x: &[f64]) -> Result<(), TestCaseError> {
    let d = x.len();
    let g = p.gradient(x);
    let h = p.hessian(x);
    for a in 0..d {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += STEP;
        xm[a] -= STEP;
        let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * STEP);
        prop_assert!(relative(fd, g[a]) <= 1e-6, "gradient {a}: {fd} vs {}", g[a]);
        let gp = p.gradient(&xp);
        let gm = p.gradient(&xm);
        for b in 0..d {
            let fd = (gp[b] - gm[b]) / (2.0 * STEP);
            prop_assert!(relative(fd, h[(b, a)]) <= 1e-6, "hessian ({b},{a}): {fd} vs {}", h[(b, a)]);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn well_derivatives_match_differences(x in -3.0..3.0f64, y in -3.0..3.0f64) {
        check_derivatives(&coupled_well(), &[x, y])?;
        check_derivatives(&WellPotential::cosine_well(1), &[x])?;
    }

    #[test]
    fn quasi_periodic_derivatives_match_differences(t in -50.0..50.0f64) {
        check_derivatives(&quasi(), &[t])?;
    }

    #[test]
    fn interaction_derivatives_match_differences(x in -2.0..2.0f64, y in -2.0..2.0f64) {
        check_derivatives(&InteractionPotential::QuadraticQuartic { dim: 2, quartic: 0.7 }, &[x, y])?;
        check_derivatives(&InteractionPotential::quadratic(2), &[x, y])?;
    }

    #[test]
    fn potential_agrees_with_torus_lift(t in -200.0..200.0f64) {
        let v = quasi();
        let sigma = [t, t * golden()];
        prop_assert!((v.value(t) - v.hat(&sigma)).abs() <= 1e-12);
        for order in 1..=2 {
            prop_assert!((v.derivative(t, order) - v.hat_derivative(&sigma, order)).abs() <= 1e-12);
        }
    }

    #[test]
    fn energy_is_additive_over_splits(
        values in proptest::collection::vec(-2.0..2.0f64, 6..30),
        cut in 2usize..100,
    ) {
        let n = values.len();
        let cut = 2 + cut % (n - 4);
        let lag = Lagrangian::new(
            InteractionPotential::QuadraticQuartic { dim: 1, quartic: 0.5 },
            OnSite::Well(WellPotential::cosine_well(1)),
            3.0,
        ).unwrap();
        let whole = Configuration::scalar(-4, values.clone(), 1.0, Boundary::Free).unwrap();
        let left = Configuration::scalar(-4, values[..=cut].to_vec(), 1.0, Boundary::Free).unwrap();
        let right = Configuration::scalar(-4 + cut as i64, values[cut..].to_vec(), 1.0, Boundary::Free).unwrap();
        let total = energy_window(&lag, &whole).unwrap();
        let parts = energy_window(&lag, &left).unwrap() + energy_window(&lag, &right).unwrap();
        prop_assert!((total - parts).abs() <= 1e-12 * total.abs().max(1.0));
    }
}

#[test]
fn sampled_sup_is_monotone_in_resolution() {
    let v = quasi();
    let coarse = v.sampled_sup(2, 16, f64::abs);
    let fine = v.sampled_sup(2, 32, f64::abs);
    assert!(fine >= coarse);
    assert!(fine <= v.sup_bound(2) + 1e-12);
}
