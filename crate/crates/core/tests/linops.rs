mod common;

use common::*;
use nls_spectral::linops::*;
use nls_spectral::model::{Dimension, Nonlinearity};
use nls_spectral::odecore::{integrate_pieces, Mesh};
use proptest::prelude::*;

fn l_operator(s: &nls_spectral::soliton::SolitonData, sign: Sign, sector: Sector) -> LinearOperator {
    LinearOperator::for_soliton(s, sign, Family::L, sector, 0.0).unwrap()
}

fn radial(dimension: Dimension, k: u32) -> Sector {
    match (dimension, k) {
        (Dimension::Three, k) => Sector::Harmonic(k),
        (Dimension::One, 0) => Sector::Even,
        (Dimension::One, _) => Sector::Odd,
    }
}

#[test]
fn kernel_relations() {
    for spec in [nls3d(1.0), cqnls(0.01), nls1d(3.0)] {
        let s = soliton(spec);
        let d = spec.dimension;
        let r_norm = norm(d, &s.profile);

        let lm = l_operator(&s, Sign::Minus, radial(d, 0));
        let res = residual_norm(&lm, &s.profile, |_| 0.0);
        assert!(res <= 1e-6 * r_norm, "{} L-R: {res:e}", spec.label());

        let dr = s.derivative_profile();
        let lp1 = l_operator(&s, Sign::Plus, radial(d, 1));
        let res = residual_norm(&lp1, &dr, |_| 0.0);
        assert!(res <= 1e-6 * norm(d, &dr), "{} L+R': {res:e}", spec.label());

        let lp0 = l_operator(&s, Sign::Plus, radial(d, 0));
        let res = residual_norm(&lp0, &s.domega, |r| -s.value(r));
        assert!(res <= 1e-6 * r_norm, "{} L+dR + R: {res:e}", spec.label());
    }
}

#[test]
fn cubic_potentials() {
    let s = soliton(nls3d(1.0));
    let (vp, vm) = build_linearized_potentials(&s.spec, &s);
    let (cp, cm) = build_distorted_potentials(&s.spec, &s);
    for (i, &r) in s.mesh().nodes().iter().enumerate() {
        let (u, du) = (s.profile.value_at_node(i, 0), s.profile.value_at_node(i, 1));
        let scale = u * u + 1e-300;
        assert!((vp.value_at_node(i, 0) + 3.0 * u * u).abs() <= 1e-14 * scale);
        assert!((vm.value_at_node(i, 0) + u * u).abs() <= 1e-14 * scale);
        let x = r * u * du;
        assert!((cp.value_at_node(i, 0) - 3.0 * x).abs() <= 1e-14 * x.abs().max(1e-300));
        assert!((cm.value_at_node(i, 0) - x).abs() <= 1e-14 * x.abs().max(1e-300));
    }
}

#[test]
fn cubic_quintic_potentials() {
    let gamma = 0.01;
    let s = soliton(cqnls(gamma));
    let (vp, vm) = build_linearized_potentials(&s.spec, &s);
    let (cp, cm) = build_distorted_potentials(&s.spec, &s);
    for (i, &r) in s.mesh().nodes().iter().enumerate() {
        let (u, du) = (s.profile.value_at_node(i, 0), s.profile.value_at_node(i, 1));
        let u2 = u * u;
        let tol = 1e-12 * (u2 + u2 * u2).max(1e-300);
        assert!((vp.value_at_node(i, 0) - (-3.0 * u2 + 5.0 * gamma * u2 * u2)).abs() <= tol);
        assert!((vm.value_at_node(i, 0) - (-u2 + gamma * u2 * u2)).abs() <= tol);
        let want_p = r * (3.0 * u - 10.0 * gamma * u * u2) * du;
        let want_m = r * (u - 2.0 * gamma * u * u2) * du;
        assert!((cp.value_at_node(i, 0) - want_p).abs() <= 1e-12 * want_p.abs().max(1e-300));
        assert!((cm.value_at_node(i, 0) - want_m).abs() <= 1e-12 * want_m.abs().max(1e-300));
        // R > 0 and R' <= 0: both distorted potentials are nonpositive.
        assert!(cp.value_at_node(i, 0) <= 0.0 && cm.value_at_node(i, 0) <= 0.0);
    }
    let n = cp.mesh().len() - 1;
    assert!(cp.value_at_node(n, 0).abs() < 1e-30 && vp.value_at_node(n, 0).abs() < 1e-30);
}

#[test]
fn distorted_potential_decay_rates() {
    for spec in [nls3d(0.8), nls3d(1.0), nls3d(1.2), cqnls(0.01), nls1d(3.0)] {
        let s = soliton(spec);
        let two_sigma = match spec.nonlinearity {
            Nonlinearity::Power { sigma } => 2.0 * sigma,
            Nonlinearity::CubicQuintic { .. } => 2.0,
        };
        let (cp, cm) = build_distorted_potentials(&spec, &s);
        for v in [cp, cm] {
            let (_, kappa) = potential_decay_fit(&v).unwrap();
            assert!(kappa >= two_sigma - 0.05, "{}: kappa {kappa}", spec.label());
        }
    }
}

/// `r^k (1 + b r^2) exp(-a r^2)` and its first two derivatives.
fn test_jet(k: u32, a: f64, b: f64, r: f64) -> (f64, f64, f64) {
    let kf = k as f64;
    let pw = |e: i32| if e < 0 { 0.0 } else { r.powi(e) };
    let ki = k as i32;
    let p = pw(ki) + b * pw(ki + 2);
    let dp = kf * pw(ki - 1) + b * (kf + 2.0) * pw(ki + 1);
    let d2p = kf * (kf - 1.0) * pw(ki - 2) + b * (kf + 2.0) * (kf + 1.0) * pw(ki);
    let e = (-a * r * r).exp();
    let de = -2.0 * a * r * e;
    let d2e = (4.0 * a * a * r * r - 2.0 * a) * e;
    (p * e, dp * e + p * de, d2p * e + 2.0 * dp * de + p * d2e)
}

fn cubic_op(k: u32) -> LinearOperator {
    use std::sync::OnceLock;
    static SOL: OnceLock<nls_spectral::soliton::SolitonData> = OnceLock::new();
    let s = SOL.get_or_init(|| soliton(nls3d(1.0)));
    LinearOperator::for_soliton(s, Sign::Plus, Family::DistortedL, Sector::Harmonic(k), 1e-4).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn point_transformation_agrees(k in 0u32..4, a in 0.1f64..2.0, b in -1.0f64..1.0, r in 0.01f64..15.0) {
        let op = cubic_op(k);
        let (w, dw, d2w) = test_jet(0, a, b, r);
        let (u, du, d2u) = test_jet(k, a, b, r);
        let direct = op.apply_jet(r, u, du, d2u);
        let transformed = r.powi(k as i32) * op.apply_transformed_jet(r, w, dw, d2w);
        let scale = (d2u.abs() + du.abs() / r + u.abs() / (r * r) + u.abs()) * (1.0 + op.coefficient(r).abs());
        prop_assert!((direct - transformed).abs() <= 1e-10 * scale.max(1e-300));
    }

    #[test]
    fn induced_form_is_symmetric(
        k in 0u32..3,
        a1 in 0.2f64..2.0, b1 in -1.0f64..1.0,
        a2 in 0.2f64..2.0, b2 in -1.0f64..1.0,
    ) {
        let op = cubic_op(k);
        let mesh = Mesh::uniform(30.0, 6001).unwrap();
        let pair = |fa: (f64, f64), fb: (f64, f64)| {
            integrate_pieces(mesh.nodes(), |r| {
                let (u, du, d2u) = test_jet(k, fa.0, fa.1, r);
                let v = test_jet(k, fb.0, fb.1, r).0;
                r * r * op.apply_jet(r, u, du, d2u) * v
            })
        };
        let uv = pair((a1, b1), (a2, b2));
        let vu = pair((a2, b2), (a1, b1));
        let scale = pair((a1, b1), (a1, b1)).abs() + pair((a2, b2), (a2, b2)).abs();
        prop_assert!((uv - vu).abs() <= 1e-9 * scale, "{} vs {}", uv, vu);
    }
}

#[test]
fn one_d_form_is_symmetric() {
    let s = soliton(nls1d(3.0));
    let mesh = Mesh::uniform(20.0, 8001).unwrap();
    for (sector, k) in [(Sector::Even, 0), (Sector::Odd, 1)] {
        for sign in [Sign::Plus, Sign::Minus] {
            let op = LinearOperator::for_soliton(&s, sign, Family::DistortedL, sector, 0.0).unwrap();
            let pair = |a: f64, b: f64, c: f64, d: f64| {
                integrate_pieces(mesh.nodes(), |r| {
                    let (u, du, d2u) = test_jet(k, a, b, r);
                    op.apply_jet(r, u, du, d2u) * test_jet(k, c, d, r).0
                })
            };
            let (uv, vu) = (pair(0.7, 0.3, 1.3, -0.4), pair(1.3, -0.4, 0.7, 0.3));
            assert!((uv - vu).abs() <= 1e-9 * (uv.abs() + vu.abs()), "{uv} {vu}");
        }
    }
}

#[test]
fn delta0_only_shifts_the_coefficient() {
    let op = cubic_op(0);
    let plain = op.with_delta0(0.0).unwrap();
    for r in [0.0, 0.3, 2.0, 9.0] {
        let d = plain.coefficient(r) - op.coefficient(r);
        assert!((d - 1e-4 * (-r).exp()).abs() <= 1e-15);
    }
    assert!(op.with_delta0(-1.0).is_err());
}
