use proptest::prelude::*;

use sphere_casimir::prelude::*;

fn al() -> DrudeMaterial {
    DrudeMaterial::aluminum()
}

fn sapphire() -> SubstrateMaterial {
    SubstrateMaterial::sapphire()
}

fn energy(x: f64, t: &Truncation) -> f64 {
    interaction_energy(&Geometry::from_ratio(x).unwrap(), &al(), &sapphire(), t).unwrap().energy
}

#[test]
fn dipole_regime_converges_early() {
    let g = Geometry::from_ratio(10.0).unwrap();
    let reference = interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed(64)).unwrap().energy;
    let e4 = interaction_energy(&g, &al(), &sapphire(), &Truncation::fixed(4)).unwrap().energy;
    assert!(((e4 - reference) / reference).abs() < 1e-6);

    let report = convergence_study(&g, &al(), &sapphire(), 1e-6, 64).unwrap();
    assert!(report.result.converged);
    // The L = 4 energy is already good, but doubling only confirms it at 8.
    assert_eq!(report.result.l_used, 8);
    assert!(((report.result.energy - reference) / reference).abs() < 1e-6);
}

#[test]
fn doubling_deltas_shrink_at_small_gap() {
    let report = convergence_study(&Geometry::from_ratio(0.05).unwrap(), &al(), &sapphire(), 1e-6, 512).unwrap();
    assert!(report.result.converged);
    let changes: Vec<f64> = report.steps.iter().filter_map(|s| s.relative_change).collect();
    let tail = &changes[changes.len().saturating_sub(4)..];
    assert!(tail.windows(2).all(|w| w[1] < w[0]), "{changes:?}");
}

#[test]
fn truncation_ordering() {
    for x in [0.05, 0.2, 1.0, 4.0, 20.0] {
        let d = energy(x, &Truncation::fixed(1));
        let q = energy(x, &Truncation::fixed(2));
        let f = energy(x, &Truncation::fixed(48));
        assert!(d < 0.0);
        assert!(d.abs() <= q.abs() && q.abs() <= f.abs(), "z/R = {x}: {d} {q} {f}");
    }
}

#[test]
fn converged_force_is_attractive_and_scales_with_radius() {
    let a = converged_force(&Geometry::new(10.0, 5.0).unwrap(), &al(), &sapphire(), 1e-6, 256, ForceMethod::HellmannFeynman)
        .unwrap();
    let b = converged_force(&Geometry::new(40.0, 20.0).unwrap(), &al(), &sapphire(), 1e-6, 256, ForceMethod::HellmannFeynman)
        .unwrap();
    assert!(a.converged && b.converged);
    assert!(a.force < 0.0);
    assert_eq!(a.force, b.force);
    assert!((a.force_ev_per_nm / b.force_ev_per_nm - 4.0).abs() < 1e-12);
}

#[test]
fn dipole_force_power_law_far_away() {
    // F ∝ (z + R)^-4 once only the ξ³ term matters.
    let xs: Vec<f64> = (0..8).map(|i| 100.0 * 1.3f64.powi(i)).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            force(&Geometry::from_ratio(x).unwrap(), &al(), &sapphire(), &Truncation::fixed(1), ForceMethod::HellmannFeynman)
                .unwrap()
                .force
        })
        .collect();
    let shifted: Vec<f64> = xs.iter().map(|x| x + 1.0).collect();
    let fit = fit_slope(&SweepCurve::from_xy(&shifted, &ys).unwrap(), (100.0, 1e4)).unwrap();
    assert!((fit.exponent + 4.0).abs() < 0.05, "{}", fit.exponent);
}

#[test]
fn damping_only_shifts_slightly() {
    let g = Geometry::from_ratio(0.5).unwrap();
    let t = Truncation::fixed(16);
    let damped = interaction_energy(&g, &al(), &sapphire(), &t).unwrap();
    let undamped = interaction_energy(&g, &al().undamped(), &sapphire(), &t).unwrap();
    assert_eq!(damped.overdamped_count, 0);
    assert!(((damped.energy - undamped.energy) / undamped.energy).abs() < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_monotone_in_xi(x in 0.02f64..20.0, l in 1usize..24) {
        let t = Truncation::fixed(l);
        let near = energy(x, &t);
        let far = energy(x * 1.05, &t);
        prop_assert!(near < 0.0 && far < 0.0);
        prop_assert!(near.abs() > far.abs());
    }

    #[test]
    fn stronger_contrast_attracts_more(x in 0.05f64..10.0, eps in 1.5f64..20.0) {
        let g = Geometry::from_ratio(x).unwrap();
        let t = Truncation::fixed(8);
        let weak = interaction_energy(&g, &al(), &SubstrateMaterial::new(eps).unwrap(), &t).unwrap().energy;
        let strong = interaction_energy(&g, &al(), &SubstrateMaterial::new(eps * 2.0).unwrap(), &t).unwrap().energy;
        prop_assert!(strong < weak && weak < 0.0);
    }
}
