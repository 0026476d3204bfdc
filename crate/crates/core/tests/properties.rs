use std::f64::consts::PI;

use proptest::prelude::*;
use sixfilm_core::*;

fn trig_field(g: PeriodicGrid, coeffs: &[(f64, f64)]) -> GridField {
    g.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| {
                let k = 2.0 * PI * (m + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
}

#[test]
fn flux_matches_expanded_product() {
    // h = 1 + 0.2 s, p = cos(2 pi x), Phi = 0:
    // G = -(pi/6)(1 + 0.2 s)^3 s
    //   = -(pi/6)(0.303 + 1.09 s - 0.304 cos 2t - 0.03 sin 3t + 0.001 cos 4t)
    let g = PeriodicGrid::new(128).unwrap();
    let h = g.sample(|x| 1.0 + 0.2 * (2.0 * PI * x).sin());
    let p = g.sample(|x| (2.0 * PI * x).cos());
    let flux = flux_of(&h, &p, &g.zeros());
    let oracle = g.sample(|x| {
        let t = 2.0 * PI * x;
        -PI / 6.0
            * (0.303 + 1.09 * t.sin() - 0.304 * (2.0 * t).cos() - 0.03 * (3.0 * t).sin()
                + 0.001 * (4.0 * t).cos())
    });
    assert!(flux.sub(&oracle).max_abs() < 1e-10);
}

#[test]
fn unit_systems_agree() {
    let si = PhysicalParams {
        rho_f: 1260.0,
        rho_s: 970.0,
        mu: 1.4,
        V: 1e-3,
        L: 1e-2,
        H: 1e-4,
        E: 1e6,
        b: 1e-4,
        nu: 0.49,
        D: 1.4e2,
    };
    // g, cm, s: kg/m^3 -> 1e-3 g/cm^3, Pa s -> 10 P, Pa -> 10 Ba, Pa s m -> 1e3 P cm
    let cgs = PhysicalParams {
        rho_f: 1.26,
        rho_s: 0.97,
        mu: 14.0,
        V: 0.1,
        L: 1.0,
        H: 1e-2,
        E: 1e7,
        b: 1e-2,
        nu: 0.49,
        D: 1.4e5,
    };
    let a = dimensionless_numbers(&si).unwrap();
    let b = dimensionless_numbers(&cgs).unwrap();
    for (x, y) in [
        (a.reynolds, b.reynolds),
        (a.rho, b.rho),
        (a.delta, b.delta),
        (a.beta, b.beta),
        (a.eps, b.eps),
        (a.r_fit, b.r_fit),
    ] {
        assert!((x / y - 1.0).abs() < 1e-12, "{x} vs {y}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divergence_has_zero_mean(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6), c in -5.0..5.0f64) {
        let g = PeriodicGrid::new(32).unwrap();
        let f = trig_field(g, &coeffs).map(|v| v + c);
        let d = flux_divergence(&f);
        prop_assert!(mean_integral(&d).abs() < 1e-12);
    }

    #[test]
    fn derivative_is_linear(a in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5),
                            b in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5),
                            s in -3.0..3.0f64, order in 1u32..=4) {
        let g = PeriodicGrid::new(32).unwrap();
        let (fa, fb) = (trig_field(g, &a), trig_field(g, &b));
        let lhs = deriv_x(&fa.lincomb(1.0, &fb, s), order).unwrap();
        let rhs = deriv_x(&fa, order).unwrap().lincomb(1.0, &deriv_x(&fb, order).unwrap(), s);
        let scale = (2.0 * PI * 5.0).powi(order as i32);
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12 * scale);
    }

    #[test]
    fn dispersion_is_damping(k in 0.1..100.0f64, hbar in 0.1..3.0f64, delta in 0.0..50.0f64) {
        let p = validate_params(RawParams::new(12.0, delta.max(1e-3), 3.0)).unwrap();
        let sigma = dispersion_rate(k, hbar, &p);
        prop_assert!(sigma < 0.0);
        let plain = dispersion_rate(k, hbar, &validate_params(RawParams::new(12.0, delta, 1.0)).unwrap());
        prop_assert!(sigma >= plain);
    }

    #[test]
    fn groups_are_unit_free(lm in -3.0..3.0f64, ll in -3.0..3.0f64, lt in -3.0..3.0f64) {
        let (m, l, t) = (10f64.powf(lm), 10f64.powf(ll), 10f64.powf(lt));
        let base = PhysicalParams {
            rho_f: 1000.0, rho_s: 1200.0, mu: 1e-3, V: 1e-2, L: 1e-2, H: 1e-4,
            E: 2e6, b: 5e-4, nu: 0.3, D: 5.0,
        };
        // density M/L^3, viscosity M/(L T), velocity L/T, modulus M/(L T^2), wall viscosity M/T
        let scaled = PhysicalParams {
            rho_f: base.rho_f * m / l.powi(3),
            rho_s: base.rho_s * m / l.powi(3),
            mu: base.mu * m / (l * t),
            V: base.V * l / t,
            L: base.L * l,
            H: base.H * l,
            E: base.E * m / (l * t * t),
            b: base.b * l,
            nu: base.nu,
            D: base.D * m / t,
        };
        let a = dimensionless_numbers(&base).unwrap();
        let b = dimensionless_numbers(&scaled).unwrap();
        for (x, y) in [(a.reynolds, b.reynolds), (a.rho, b.rho), (a.delta, b.delta), (a.beta, b.beta), (a.eps, b.eps)] {
            prop_assert!((x / y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_step_conserves_mass(amp in 0.0..0.4f64, phase in 0.0..1.0f64, chi in any::<bool>()) {
        let g = PeriodicGrid::new(32).unwrap();
        let p = if chi {
            validate_params(RawParams::new(12.0, 12.0, 3.0)).unwrap()
        } else {
            validate_params(RawParams::new(12.0, 0.0, 1.0)).unwrap()
        };
        let h = g.sample(|x| 1.0 + amp * (2.0 * PI * (x + phase)).sin());
        let next = solver::step(&FilmState::new(0.0, h.clone()), 1e-6, &p, Scheme::Be).unwrap();
        prop_assert!((mean_integral(&next.h) - mean_integral(&h)).abs() < 1e-13);
    }
}
