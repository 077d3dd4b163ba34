mod common;

use common::*;
use nls_spectral::model::Nonlinearity;
use nls_spectral::soliton::*;

/// Radial shooting: RK4 on `R'' = -(2/r) R' + omega R - f(R^2) R`, bisecting
/// the central amplitude between undershoot (R' turns positive) and
/// overshoot (R crosses zero).
fn shooting_amplitude(nl: Nonlinearity, mut lo: f64, mut hi: f64) -> f64 {
    let f = |s: f64| match nl {
        Nonlinearity::Power { sigma } => s.powf(sigma),
        Nonlinearity::CubicQuintic { gamma } => s - gamma * s * s,
    };
    let rhs = |r: f64, y: [f64; 2]| [y[1], -2.0 / r * y[1] + y[0] - f(y[0] * y[0]) * y[0]];
    let overshoots = |a: f64| -> bool {
        let r0 = 1e-4;
        let c = (a - f(a * a) * a) / 6.0;
        let mut y = [a + c * r0 * r0, 2.0 * c * r0];
        let h = 1e-3;
        let mut r = r0;
        while r < 30.0 {
            let k1 = rhs(r, y);
            let k2 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            r += h;
            if y[0] < 0.0 {
                return true;
            }
            if y[1] > 0.0 {
                return false;
            }
        }
        y[0] < 0.0
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if overshoots(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn one_d_matches_closed_form() {
    for sigma in [2.5, 3.0, 6.0] {
        let s = soliton(nls1d(sigma));
        let err = s
            .mesh()
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| (s.profile.value_at_node(i, 0) - closed_form_1d_value(sigma, 1.0, x).0).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "sigma {sigma}: sup error {err:e}");
        assert!(s.positivity_ok);
    }
}

#[test]
fn one_d_quartic_amplitude() {
    let s = soliton(nls1d(2.0));
    assert!((s.amplitude() - 3f64.powf(0.25)).abs() < 1e-8);
    // dR/domega(0) = (1/2)(1/sigma) R(0) since R'(0) = 0.
    assert!((s.domega.eval(0, 0.0) - 0.25 * 3f64.powf(0.25)).abs() < 1e-8);
}

#[test]
fn three_d_cubic_amplitude_against_shooting() {
    let spec = nls3d(1.0);
    let s = soliton(spec);
    let oracle = shooting_amplitude(spec.nonlinearity, 4.0, 5.0);
    assert!(s.amplitude() > 4.3 && s.amplitude() < 4.4);
    assert!((s.amplitude() - oracle).abs() < 1e-6, "{} vs {oracle}", s.amplitude());
}

#[test]
fn cubic_quintic_amplitude_against_shooting() {
    let spec = cqnls(0.01);
    let s = soliton(spec);
    let oracle = shooting_amplitude(spec.nonlinearity, 2.0, 6.0);
    assert!((s.amplitude() - oracle).abs() < 1e-6, "{} vs {oracle}", s.amplitude());
}

#[test]
fn gamma_zero_is_the_cubic_problem() {
    let a = soliton(nls3d(1.0));
    let b = soliton(cqnls(0.0));
    assert!(a.profile.sup_distance(&b.profile) <= 1e-10);
    // The cubic-quintic dR/domega comes from the linear solve, the power one
    // from the scaling combination.
    let gap = a
        .mesh()
        .nodes()
        .iter()
        .map(|&r| (a.domega.eval(0, r) - b.domega.eval(0, r)).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-6, "{gap:e}");
}

#[test]
fn domega_scaling_identity() {
    for spec in [nls3d(0.8), nls3d(1.0), nls3d(1.2), nls1d(2.5), nls1d(3.0), nls1d(6.0)] {
        let s = soliton(spec);
        let gap = s.domega_crosscheck.unwrap();
        assert!(gap <= 1e-6, "{}: {gap:e}", spec.label());
    }
    assert!(soliton(cqnls(0.01)).domega_crosscheck.is_none());
}

#[test]
fn slope_scaling_identity_and_signs() {
    let s = soliton(nls3d(1.0));
    let report = slope_condition(&s, DEFAULT_DELTA_OMEGA).unwrap();
    assert!((report.normalized + 0.5).abs() <= 1e-4, "{}", report.normalized);
    assert!(report.consistent);
    // Subcritical 1D power law: positive slope.
    let s = soliton(nls1d(1.5));
    assert!(slope_value(&s).unwrap() > 0.0);
    // Supercritical 1D: 1/sigma - 1/2 < 0.
    let s = soliton(nls1d(3.0));
    let n = slope_value(&s).unwrap() / l2_norm_squared(&s).unwrap();
    assert!((n - (1.0 / 3.0 - 0.5)).abs() <= 1e-4, "{n}");
}

#[test]
fn frequency_scaling() {
    let sigma = 1.0;
    let one = soliton(nls3d(sigma));
    let spec4 = nls3d(sigma).with_omega(4.0).unwrap();
    let four = soliton(spec4);
    let scale = 4f64.powf(1.0 / (2.0 * sigma));
    let err = four
        .mesh()
        .nodes()
        .iter()
        .filter(|&&x| x <= 40.0)
        .map(|&x| (four.value(x) - scale * one.value(2.0 * x)).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err:e}");
}

#[test]
fn doubling_the_domain() {
    for spec in [nls3d(1.0), nls1d(3.0), cqnls(0.01)] {
        let a = soliton(spec);
        let b = solve_soliton(&spec, &SolitonOptions::for_spec(&spec).with_r_max(200.0)).unwrap();
        let d = (a.amplitude() - b.amplitude()).abs();
        assert!(d <= 1e-8, "{}: {d:e}", spec.label());
    }
}

#[test]
fn short_domain_is_flagged() {
    let spec = nls3d(1.0);
    let good = soliton(spec);
    assert!(abc_ok(&good.abc_residuals, 1e-6));
    let short = solve_soliton(&spec, &SolitonOptions::for_spec(&spec).with_r_max(10.0)).unwrap();
    assert!(!abc_ok(&short.abc_residuals, 1e-6), "{:?}", short.abc_residuals);
}

#[test]
fn closed_form_satisfies_far_field_condition() {
    let (r, dr, _) = closed_form_1d_value(3.0, 1.0, 100.0);
    assert!((r + abc_coefficient(&nls1d(3.0), 100.0) * dr).abs() <= 1e-12);
}

#[test]
fn profile_residual_is_small() {
    for spec in [nls3d(1.0), cqnls(0.01), nls1d(3.0)] {
        let s = soliton(spec);
        assert!(profile_residual(&spec, &s.profile) < 1e-6, "{}", spec.label());
    }
}
