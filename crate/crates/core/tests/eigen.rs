mod common;

use common::*;
use nls_spectral::eigen::*;
use nls_spectral::model::{Dimension, ProblemSpec};
use nls_spectral::odecore::{integrate_pieces, Mesh};
use nls_spectral::soliton::{solve_soliton, SolitonData, SolitonOptions};
use proptest::prelude::*;
use std::sync::OnceLock;

/// Banded matrix with LAPACK-style storage and room for pivoting fill-in.
struct Band {
    n: usize,
    kl: usize,
    ku: usize,
    ld: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ld = 2 * kl + ku + 1;
        Band { n, kl, ku, ld, data: vec![0.0; n * ld] }
    }
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[j * self.ld + self.kl + self.ku + i - j]
    }
    /// Sign of the determinant by Gaussian elimination with partial pivoting.
    fn det_sign(mut self) -> f64 {
        let mut sign = 1.0;
        for j in 0..self.n {
            let last = (j + self.kl).min(self.n - 1);
            let p = (j..=last).max_by(|&a, &b| self.at(a, j).abs().total_cmp(&self.at(b, j).abs())).unwrap();
            let piv = *self.at(p, j);
            if piv == 0.0 {
                return 0.0;
            }
            let right = (j + self.kl + self.ku).min(self.n - 1);
            if p != j {
                sign = -sign;
                for c in j..=right {
                    let t = *self.at(p, c);
                    *self.at(p, c) = *self.at(j, c);
                    *self.at(j, c) = t;
                }
            }
            for i in j + 1..=last {
                let f = *self.at(i, j) / piv;
                if f == 0.0 {
                    continue;
                }
                for c in j + 1..=right {
                    let v = *self.at(j, c);
                    *self.at(i, c) -= f * v;
                }
            }
            sign *= piv.signum();
        }
        sign
    }
}

/// Fourth-order finite-difference discretization of `L- L+` on `[0, 100]`
/// with 4000 points: `u = r phi` (odd reflection) in 3D, even reflection in
/// 1D, Dirichlet at the far end.
struct FdOracle {
    m: Vec<[f64; 9]>,
}

impl FdOracle {
    fn new(s: &SolitonData) -> Self {
        let spec = s.spec;
        let npts = 4000;
        let h = 100.0 / npts as f64;
        let three = spec.dimension == Dimension::Three;
        let first = if three { 1 } else { 0 };
        let n = npts - first;
        let stencil = [1.0, -16.0, 30.0, -16.0, 1.0];
        let build = |plus: bool| -> Vec<[f64; 5]> {
            (0..n)
                .map(|l| {
                    let i = (l + first) as i64;
                    let r = i as f64 * h;
                    let v = spec.nonlinearity.linearized_potentials(s.value(r.min(100.0)));
                    let mut row = [0.0; 5];
                    row[2] = spec.omega + if plus { v.plus } else { v.minus };
                    for (o, c) in (-2i64..=2).zip(stencil) {
                        let (mut m, mut sg) = (i + o, 1.0);
                        if m < 0 {
                            m = -m;
                            sg = if three { -1.0 } else { 1.0 };
                        }
                        if (three && m == 0) || m >= npts as i64 {
                            continue;
                        }
                        let col = m - first as i64 - l as i64;
                        row[(col + 2) as usize] += sg * c / (12.0 * h * h);
                    }
                    row
                })
                .collect()
        };
        let (ap, am) = (build(true), build(false));
        let m = (0..n)
            .map(|i| {
                let mut row = [0.0; 9];
                for a in 0..5 {
                    let k = i as i64 + a as i64 - 2;
                    if k < 0 || k >= n as i64 {
                        continue;
                    }
                    for b in 0..5 {
                        let j = k + b as i64 - 2;
                        if j < 0 || j >= n as i64 {
                            continue;
                        }
                        row[(j - i as i64 + 4) as usize] += am[i][a] * ap[k as usize][b];
                    }
                }
                row
            })
            .collect();
        FdOracle { m }
    }

    fn det_sign(&self, lambda: f64) -> f64 {
        let n = self.m.len();
        let mut b = Band::new(n, 4, 4);
        for (i, row) in self.m.iter().enumerate() {
            for (o, &v) in row.iter().enumerate() {
                let j = i as i64 + o as i64 - 4;
                if j >= 0 && (j as usize) < n {
                    *b.at(i, j as usize) += v;
                }
            }
            *b.at(i, i) -= lambda;
        }
        b.det_sign()
    }

    /// Eigenvalue in `(lo, hi)` by bisection on the determinant sign.
    fn eigenvalue_in(&self, mut lo: f64, mut hi: f64) -> f64 {
        let s_lo = self.det_sign(lo);
        assert!(s_lo * self.det_sign(hi) < 0.0, "no eigenvalue in ({lo}, {hi})");
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.det_sign(mid) == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn pair_for(spec: ProblemSpec) -> (SolitonData, Eigenpair) {
    let s = soliton(spec);
    let e = solve_unstable_eigenpair(&s, 1.0, &EigenOptions::default()).unwrap();
    (s, e)
}

#[test]
fn matrix_oracle_agrees() {
    for spec in [nls3d(1.0), cqnls(0.01), nls1d(3.0)] {
        let (s, e) = pair_for(spec);
        let oracle = FdOracle::new(&s);
        let mu2 = e.mu_star * e.mu_star;
        // det(M - lambda) > 0 far to the left: no eigenvalue below -mu^2 ...
        for f in [50.0, 10.0, 3.0, 1.5] {
            assert!(oracle.det_sign(-f * mu2) > 0.0, "{}: sign at -{f} mu^2", spec.label());
        }
        // ... and exactly one crossing near it.
        let lambda = oracle.eigenvalue_in(-1.5 * mu2, -0.5 * mu2);
        let mu_fd = (-lambda).sqrt();
        assert!(rel(e.mu_star, mu_fd) <= 1e-4, "{}: {} vs {mu_fd}", spec.label(), e.mu_star);
    }
}

#[test]
fn residuals_and_normalization() {
    for spec in [nls3d(1.0), cqnls(0.01), nls1d(3.0)] {
        let (s, e) = pair_for(spec);
        assert!(e.mu_star > 0.0);
        assert_eq!(e.normalization, 1.0);
        assert_eq!(e.phi1.value_at_node(0, 0), 1.0);
        assert!(e.phi1.value_at_node(0, 1).abs() <= 1e-14);
        assert!(e.phi2.value_at_node(0, 1).abs() <= 1e-14);
        let bound = 1e-8 * (e.phi1_norm(&spec) + e.phi2_norm(&spec));
        assert!(e.residual1 <= bound && e.residual2 <= bound, "{}: {} {}", spec.label(), e.residual1, e.residual2);
        assert!(e.tail_magnitude <= 1e-6);
        let (r1, r2) = eigen_residuals(&spec, &s, &e);
        assert_eq!((r1, r2), (e.residual1, e.residual2));
    }
}

#[test]
fn gamma_zero_matches_cubic() {
    let (_, a) = pair_for(nls3d(1.0));
    let (_, b) = pair_for(cqnls(0.0));
    assert!(rel(b.mu_star, a.mu_star) <= 1e-6);
}

#[test]
fn adjoint_algebra() {
    for spec in [nls3d(1.0), cqnls(0.01), nls1d(3.0)] {
        let (s, e) = pair_for(spec);
        let rep = check_adjoint_algebra(&e, &s);
        assert!(rep.all_finite());
        assert!(rep.swapped_residual <= 1e-6, "{}: {}", spec.label(), rep.swapped_residual);
        // (phi2, phi1) belongs to +mu, so its residual is 2 mu ||(phi2, phi1)||.
        let n = (e.phi1_norm(&spec).powi(2) + e.phi2_norm(&spec).powi(2)).sqrt();
        assert!(rel(rep.unsigned_swap_residual, 2.0 * e.mu_star * n) <= 1e-6);
        // phi is orthogonal to the generalized kernel directions it pairs against.
        assert!(rep.phi1_dot_r.abs() <= 1e-8 * n);
        assert!(rep.phi2_dot_domega.abs() <= 1e-8 * n);

        let doubled = check_adjoint_algebra(&e.scaled(2.0), &s);
        assert!(rel(doubled.relative_residual1, rep.relative_residual1) <= 1e-12);
        assert!(rel(doubled.relative_residual2, rep.relative_residual2) <= 1e-12);
        assert!(rel(doubled.swapped_residual, 2.0 * rep.swapped_residual) <= 1e-9);
    }
}

#[test]
fn doubling_the_domain() {
    for spec in [nls3d(1.0), nls1d(3.0)] {
        let (_, a) = pair_for(spec);
        let s = solve_soliton(&spec, &SolitonOptions::for_spec(&spec).with_r_max(200.0)).unwrap();
        let b = solve_unstable_eigenpair(&s, 1.0, &EigenOptions::default()).unwrap();
        assert!(rel(b.mu_star, a.mu_star) <= 1e-6, "{}: {} {}", spec.label(), a.mu_star, b.mu_star);
    }
}

#[test]
fn nonpositive_guess_rejected() {
    let s = soliton(nls1d(3.0));
    assert!(solve_unstable_eigenpair(&s, 0.0, &EigenOptions::default()).is_err());
}

fn cubic_pair() -> &'static (SolitonData, Eigenpair) {
    static PAIR: OnceLock<(SolitonData, Eigenpair)> = OnceLock::new();
    PAIR.get_or_init(|| pair_for(nls3d(1.0)))
}

/// `L u` for radial `u` given its jet, with the potential of the given sign.
fn apply_l(s: &SolitonData, plus: bool, r: f64, u: f64, du: f64, d2u: f64) -> f64 {
    let v = s.spec.nonlinearity.linearized_potentials(s.value(r));
    let pot = s.spec.omega + if plus { v.plus } else { v.minus };
    -d2u - 2.0 / r * du + pot * u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `L- L+ phi1 + mu^2 phi1` tested weakly against smooth radial
    /// functions `v`: `<L+ phi1, L- v> + mu^2 <phi1, v>`.
    #[test]
    fn composition_identity(a in 0.3f64..3.0, c in 0.0f64..4.0) {
        let (s, e) = cubic_pair();
        let mu = e.mu_star;
        let v = |r: f64| {
            let g = (-a * (r - c).powi(2)).exp();
            let d = -2.0 * a * (r - c);
            (g, d * g, (d * d - 2.0 * a) * g)
        };
        let mesh = Mesh::new(e.phi1.mesh().nodes().iter().copied().filter(|&r| r <= 30.0).collect()).unwrap();
        let weak = integrate_pieces(mesh.nodes(), |r| {
            let (p, dp, d2p) = e.phi1.function_jet(r);
            let lp = apply_l(s, true, r, p, dp, d2p);
            let (g, dg, d2g) = v(r);
            r * r * (lp * apply_l(s, false, r, g, dg, d2g) + mu * mu * p * g)
        });
        let vn = integrate_pieces(mesh.nodes(), |r| r * r * v(r).0.powi(2)).sqrt();
        let pn = e.phi1_norm(&s.spec);
        prop_assert!(weak.abs() <= 1e-6 * pn * vn, "{weak:e} vs {:e}", pn * vn);
    }
}
