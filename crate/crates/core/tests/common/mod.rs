#![allow(dead_code)]

use nls_spectral::linops::LinearOperator;
use nls_spectral::model::{Dimension, ProblemSpec};
use nls_spectral::odecore::{integrate_pieces, Profile};
use nls_spectral::soliton::{solve_soliton, SolitonData, SolitonOptions};

pub fn density(dimension: Dimension, r: f64) -> f64 {
    match dimension {
        Dimension::One => 2.0,
        Dimension::Three => r * r,
    }
}

/// Weighted L2 norm of a scalar function over the breakpoints of `on`.
pub fn norm_of(dimension: Dimension, on: &Profile, f: impl Fn(f64) -> f64) -> f64 {
    integrate_pieces(on.mesh().nodes(), |r| density(dimension, r) * f(r).powi(2)).sqrt()
}

pub fn norm(dimension: Dimension, p: &Profile) -> f64 {
    norm_of(dimension, p, |r| p.eval(0, r))
}

/// Weighted L2 norm of `op u - target` over `u`'s mesh.
pub fn residual_norm(op: &LinearOperator, u: &Profile, target: impl Fn(f64) -> f64) -> f64 {
    norm_of(op.dimension, u, |r| {
        let (a, b, c) = u.function_jet(r);
        op.apply_jet(r, a, b, c) - target(r)
    })
}

pub fn soliton(spec: ProblemSpec) -> SolitonData {
    solve_soliton(&spec, &SolitonOptions::for_spec(&spec)).unwrap()
}

pub fn nls1d(sigma: f64) -> ProblemSpec {
    ProblemSpec::nls1d(sigma).unwrap()
}

pub fn nls3d(sigma: f64) -> ProblemSpec {
    ProblemSpec::nls3d(sigma).unwrap()
}

pub fn cqnls(gamma: f64) -> ProblemSpec {
    ProblemSpec::cqnls(gamma).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
