//! The unstable eigenpair `JL phi = mu phi`, `mu > 0`, of the Hamiltonian
//! linearization, found by collocation with `mu` as an unknown parameter.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Dimension, ProblemSpec};
use crate::odecore::{
    integrate_pieces, solve_bvp, BandMatrix, BvpOptions, BvpSystem, Profile,
};
use crate::soliton::SolitonData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_nodes: usize,
    /// Grid used for the finite-difference initializer.
    pub coarse_points: usize,
    /// Right end of the initializer grid (capped by the soliton span).
    pub coarse_span: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-12,
            max_nodes: 20000,
            coarse_points: 1200,
            coarse_span: 40.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub mu_star: f64,
    /// `(phi1, phi1')`.
    pub phi1: Profile,
    /// `(phi2, phi2')`.
    pub phi2: Profile,
    /// `||L- phi2 - mu phi1||`.
    pub residual1: f64,
    /// `||L+ phi1 + mu phi2||`.
    pub residual2: f64,
    /// `phi1(0)`.
    pub normalization: f64,
    /// `max |phi_i(0.9 r_max)|`.
    pub tail_magnitude: f64,
    /// `mu` from the finite-difference initializer.
    pub coarse_mu: f64,
}

impl Eigenpair {
    pub fn phi1_norm(&self, spec: &ProblemSpec) -> f64 {
        weighted_norm(spec.dimension, &self.phi1, |r| self.phi1.eval(0, r))
    }

    pub fn phi2_norm(&self, spec: &ProblemSpec) -> f64 {
        weighted_norm(spec.dimension, &self.phi2, |r| self.phi2.eval(0, r))
    }

    /// `(c phi1, c phi2)`; still an eigenpair, no longer normalized.
    pub fn scaled(&self, c: f64) -> Eigenpair {
        Eigenpair {
            phi1: self.phi1.scaled(c),
            phi2: self.phi2.scaled(c),
            residual1: self.residual1 * c.abs(),
            residual2: self.residual2 * c.abs(),
            normalization: self.normalization * c,
            ..self.clone()
        }
    }
}

/// `L- phi2 = mu phi1`, `-L+ phi1 = mu phi2` as a first-order system in
/// `(phi1, phi1', phi2, phi2')` with parameter `mu`.
struct EigenSystem<'a> {
    spec: ProblemSpec,
    soliton: &'a Profile,
    dm1: f64,
}

impl EigenSystem<'_> {
    fn shifted_potentials(&self, r: f64) -> (f64, f64) {
        let u = if r <= self.soliton.r_max() { self.soliton.eval(0, r) } else { 0.0 };
        let v = self.spec.nonlinearity.linearized_potentials(u);
        (self.spec.omega + v.plus, self.spec.omega + v.minus)
    }
}

impl BvpSystem for EigenSystem<'_> {
    fn order(&self) -> usize {
        4
    }
    fn num_params(&self) -> usize {
        1
    }
    fn singular_term(&self) -> Option<Vec<f64>> {
        (self.dm1 != 0.0).then(|| {
            let mut s = vec![0.0; 16];
            s[5] = -self.dm1;
            s[15] = -self.dm1;
            s
        })
    }
    fn rhs(&self, r: f64, y: &[f64], p: &[f64], f: &mut [f64]) {
        let (ap, am) = self.shifted_potentials(r);
        let mu = p[0];
        f[0] = y[1];
        f[1] = ap * y[0] + mu * y[2];
        f[2] = y[3];
        f[3] = am * y[2] - mu * y[0];
    }
    fn jacobian(&self, r: f64, y: &[f64], p: &[f64], dfdy: &mut [f64], dfdp: &mut [f64]) {
        let (ap, am) = self.shifted_potentials(r);
        let mu = p[0];
        dfdy.fill(0.0);
        dfdy[1] = 1.0;
        dfdy[4] = ap;
        dfdy[6] = mu;
        dfdy[11] = 1.0;
        dfdy[12] = -mu;
        dfdy[14] = am;
        dfdp.copy_from_slice(&[0.0, y[2], 0.0, -y[0]]);
    }
    fn left_bc_count(&self) -> usize {
        3
    }
    fn left_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[1];
        res[1] = y[3];
        res[2] = y[0] - 1.0;
    }
    fn right_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[0];
        res[1] = y[2];
    }
}

/// Coarse finite-difference estimate of the unstable mode: inverse iteration
/// on `A- A+` with a shift below its single negative eigenvalue. Returns
/// `(mu, r, phi1, phi2)` on a uniform grid, `phi1(0) = 1`.
fn coarse_estimate(
    soliton: &SolitonData,
    mu_guess: f64,
    opts: &EigenOptions,
) -> Result<(f64, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let spec = &soliton.spec;
    let span = opts.coarse_span.min(soliton.r_max());
    let n = opts.coarse_points;
    let h = span / n as f64;
    let three_d = spec.dimension == Dimension::Three;
    // Unknowns: u_i at r_i = i h (1D, Neumann at 0) or r_i = (i + 1) h
    // (3D, u = r phi with u(0) = 0); Dirichlet at `span`.
    let r: Vec<f64> = (0..n).map(|i| if three_d { (i + 1) as f64 * h } else { i as f64 * h }).collect();
    let tri = |plus: bool| -> Vec<[f64; 3]> {
        r.iter()
            .enumerate()
            .map(|(i, &ri)| {
                let v = spec.nonlinearity.linearized_potentials(soliton.value(ri));
                let diag = 2.0 / (h * h) + spec.omega + if plus { v.plus } else { v.minus };
                let lower = if i == 0 { 0.0 } else { -1.0 / (h * h) };
                let upper = if i + 1 == n {
                    0.0
                } else if i == 0 && !three_d {
                    -2.0 / (h * h)
                } else {
                    -1.0 / (h * h)
                };
                [lower, diag, upper]
            })
            .collect()
    };
    let (ap, am) = (tri(true), tri(false));
    let apply = |t: &[[f64; 3]], x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut s = t[i][1] * x[i];
                if i > 0 {
                    s += t[i][0] * x[i - 1];
                }
                if i + 1 < n {
                    s += t[i][2] * x[i + 1];
                }
                s
            })
            .collect()
    };
    // The discrete A- A+ has a near-zero eigenvalue (right vector
    // ~ dR/domega, left vector ~ R) whose sign depends on the grid. Moving it
    // to `DEFLATION` with a rank-one update leaves -mu^2 as the only negative
    // eigenvalue.
    const DEFLATION: f64 = 10.0;
    let jac = |ri: f64| if three_d { ri } else { 1.0 };
    let right: Vec<f64> = r.iter().map(|&ri| jac(ri) * soliton.domega.eval(0, ri)).collect();
    let mut left: Vec<f64> = r.iter().map(|&ri| jac(ri) * soliton.value(ri)).collect();
    if !three_d {
        left[0] *= 0.5;
    }
    let lr: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    for v in left.iter_mut() {
        *v /= lr;
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut shift = -2.0 * mu_guess * mu_guess;
    let mut lambda = f64::NAN;
    let start: Vec<f64> = r.iter().map(|&ri| (-ri).exp() * jac(ri)).collect();
    let mut x = start.clone();
    for _ in 0..8 {
        // Restart each shift: the previous iterate has almost no component
        // along the wanted vector and would stall the convergence test.
        x.clone_from(&start);
        let mut m = BandMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(1)..=(i + 1).min(n - 1) {
                let a_ij = am[i][1 + j - i];
                for k in j.saturating_sub(1)..=(j + 1).min(n - 1) {
                    m.add(i, k, a_ij * ap[j][1 + k - j]);
                }
            }
            m.add(i, i, -shift);
        }
        let lu = m.factorize()?;
        let mut w = right.clone();
        lu.solve_in_place(&mut w);
        let denom = 1.0 + DEFLATION * dot(&left, &w);
        let mut prev = f64::NAN;
        for _ in 0..500 {
            let mut y = x.clone();
            lu.solve_in_place(&mut y);
            let c = DEFLATION * dot(&left, &y) / denom;
            for (yi, wi) in y.iter_mut().zip(&w) {
                *yi -= c * wi;
            }
            lambda = shift + dot(&x, &x) / dot(&x, &y);
            let norm = dot(&y, &y).sqrt();
            x = y.iter().map(|a| a / norm).collect();
            if (lambda - prev).abs() <= 1e-13 * lambda.abs().max(1e-8) {
                break;
            }
            prev = lambda;
        }
        if lambda < 0.0 {
            break;
        }
        // Nearest eigenvalue was positive: move the shift further down.
        shift *= 4.0;
    }
    if !(lambda < 0.0) {
        return Err(Error::WrongBranch {
            mu: f64::NAN,
            detail: format!("no negative eigenvalue of L-L+ (estimate {lambda:.3e})"),
        });
    }
    let mu = (-lambda).sqrt();
    let y = apply(&ap, &x);
    let mut phi1: Vec<f64> = Vec::with_capacity(n + 2);
    let mut phi2: Vec<f64> = Vec::with_capacity(n + 2);
    let mut grid: Vec<f64> = Vec::with_capacity(n + 2);
    if three_d {
        // phi(0) from the even extension u/r ~ phi(0) + O(r^2)
        grid.push(0.0);
        phi1.push((4.0 * x[0] / r[0] - x[1] / r[1]) / 3.0);
        phi2.push((4.0 * (-y[0] / mu) / r[0] - (-y[1] / mu) / r[1]) / 3.0);
        for i in 0..n {
            grid.push(r[i]);
            phi1.push(x[i] / r[i]);
            phi2.push(-y[i] / mu / r[i]);
        }
    } else {
        for i in 0..n {
            grid.push(r[i]);
            phi1.push(x[i]);
            phi2.push(-y[i] / mu);
        }
    }
    grid.push(span);
    phi1.push(0.0);
    phi2.push(0.0);
    let s = phi1[0];
    if s == 0.0 {
        return Err(Error::WrongBranch { mu, detail: "initializer vanishes at the origin".into() });
    }
    for v in phi1.iter_mut().chain(phi2.iter_mut()) {
        *v /= s;
    }
    Ok((mu, grid, phi1, phi2))
}

/// `mu` from the finite-difference matrix on `points` and `2 points` nodes of
/// `[0, span]`, Richardson-extrapolated. Independent of the collocation
/// solve, used as a cross-check.
pub fn matrix_estimate_mu(soliton: &SolitonData, mu_guess: f64, points: usize, span: f64) -> Result<f64> {
    let coarse = EigenOptions {
        coarse_points: points,
        coarse_span: span,
        ..Default::default()
    };
    let fine = EigenOptions {
        coarse_points: 2 * points,
        ..coarse
    };
    let (a, ..) = coarse_estimate(soliton, mu_guess, &coarse)?;
    let (b, ..) = coarse_estimate(soliton, mu_guess, &fine)?;
    Ok((4.0 * b - a) / 3.0)
}

fn linear_interp(grid: &[f64], vals: &[f64], r: f64) -> f64 {
    if r >= *grid.last().unwrap() {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= r).clamp(1, grid.len() - 1);
    let t = (r - grid[i - 1]) / (grid[i] - grid[i - 1]);
    vals[i - 1] * (1.0 - t) + vals[i] * t
}

fn slope(grid: &[f64], vals: &[f64], r: f64) -> f64 {
    if r >= *grid.last().unwrap() {
        return 0.0;
    }
    let i = grid.partition_point(|&g| g <= r).clamp(1, grid.len() - 1);
    (vals[i] - vals[i - 1]) / (grid[i] - grid[i - 1])
}

/// Computes the unstable eigenpair with `phi1(0) = 1`. `mu_guess` seeds
/// the shift of the finite-difference initializer.
pub fn solve_unstable_eigenpair(
    soliton: &SolitonData,
    mu_guess: f64,
    opts: &EigenOptions,
) -> Result<Eigenpair> {
    if !(mu_guess > 0.0) {
        return Err(Error::InvalidInput(format!("mu_guess must be positive, got {mu_guess}")));
    }
    let spec = soliton.spec;
    let (coarse_mu, grid, g1, g2) = coarse_estimate(soliton, mu_guess, opts)?;
    let mesh = soliton.mesh().clone();
    let mut values = Vec::with_capacity(4 * mesh.len());
    for &r in mesh.nodes() {
        let (p1, p2) = (linear_interp(&grid, &g1, r), linear_interp(&grid, &g2, r));
        let (d1, d2) = if r == 0.0 { (0.0, 0.0) } else { (slope(&grid, &g1, r), slope(&grid, &g2, r)) };
        values.extend_from_slice(&[p1, d1, p2, d2]);
    }
    let sys = EigenSystem {
        spec,
        soliton: &soliton.profile,
        dm1: spec.d() as f64 - 1.0,
    };
    // Derivative data consistent with the equations keeps the first
    // Newton step well scaled.
    let mut derivs = vec![0.0; values.len()];
    for (i, &r) in mesh.nodes().iter().enumerate() {
        let y = &values[4 * i..4 * i + 4];
        let mut f = [0.0; 4];
        sys.rhs(r, y, &[coarse_mu], &mut f);
        if r > 0.0 {
            f[1] -= sys.dm1 / r * y[1];
            f[3] -= sys.dm1 / r * y[3];
        } else {
            f[1] /= 1.0 + sys.dm1;
            f[3] /= 1.0 + sys.dm1;
        }
        derivs[4 * i..4 * i + 4].copy_from_slice(&f);
    }
    let guess = Profile::new(mesh, 4, values, derivs)?;
    let bvp_opts = BvpOptions {
        tol: opts.tol,
        max_nodes: opts.max_nodes,
        ..BvpOptions::with_tol(opts.tol)
    };
    let sol = solve_bvp(&sys, &guess, &[coarse_mu], &bvp_opts)?;
    let mu = sol.params[0];
    if !(mu > 0.0) || (mu - coarse_mu).abs() > 0.2 * coarse_mu {
        return Err(Error::WrongBranch {
            mu,
            detail: format!("collocation converged to mu = {mu:.6e}, initializer gave {coarse_mu:.6e}"),
        });
    }
    // Rescale so that phi1(0) = 1 holds exactly rather than to solver tolerance.
    let s = sol.profile.value_at_node(0, 0);
    let phi1 = split_pair(&sol.profile, 0, s);
    let phi2 = split_pair(&sol.profile, 2, s);
    let r_max = phi1.r_max();
    let tail = phi1.eval(0, 0.9 * r_max).abs().max(phi2.eval(0, 0.9 * r_max).abs());
    let mut pair = Eigenpair {
        mu_star: mu,
        normalization: phi1.value_at_node(0, 0),
        phi1,
        phi2,
        residual1: 0.0,
        residual2: 0.0,
        tail_magnitude: tail,
        coarse_mu,
    };
    let (r1, r2) = eigen_residuals(&spec, soliton, &pair);
    pair.residual1 = r1;
    pair.residual2 = r2;
    Ok(pair)
}

fn split_pair(p: &Profile, first: usize, divisor: f64) -> Profile {
    let mesh = p.mesh().clone();
    let mut values = Vec::with_capacity(2 * mesh.len());
    let mut derivs = Vec::with_capacity(2 * mesh.len());
    for i in 0..mesh.len() {
        for c in first..first + 2 {
            values.push(p.value_at_node(i, c) / divisor);
            derivs.push(p.deriv_at_node(i, c) / divisor);
        }
    }
    Profile::new(mesh, 2, values, derivs).expect("sizes match")
}

fn density(dimension: Dimension, r: f64) -> f64 {
    match dimension {
        Dimension::One => 2.0,
        Dimension::Three => r * r,
    }
}

fn weighted_norm(dimension: Dimension, on: &Profile, f: impl Fn(f64) -> f64) -> f64 {
    integrate_pieces(on.mesh().nodes(), |r| density(dimension, r) * f(r).powi(2)).sqrt()
}

/// `L u` for a `(u, u')` profile, with `u''` from the derivative of the
/// second component.
fn apply_pair(spec: &ProblemSpec, soliton: &SolitonData, plus: bool, u: &Profile, r: f64) -> f64 {
    let dm1 = spec.d() as f64 - 1.0;
    let v = spec.nonlinearity.linearized_potentials(soliton.value(r.min(soliton.r_max())));
    let pot = spec.omega + if plus { v.plus } else { v.minus };
    let (a, b, c) = (u.eval(0, r), u.eval(1, r), u.eval_deriv(1, r));
    let drift = if r == 0.0 { dm1 * c } else { dm1 / r * b };
    -c - drift + pot * a
}

/// Weighted L2 norms of `L- phi2 - mu phi1` and `L+ phi1 + mu phi2`.
pub fn eigen_residuals(spec: &ProblemSpec, soliton: &SolitonData, pair: &Eigenpair) -> (f64, f64) {
    let mu = pair.mu_star;
    let r1 = weighted_norm(spec.dimension, &pair.phi1, |r| {
        apply_pair(spec, soliton, false, &pair.phi2, r) - mu * pair.phi1.eval(0, r)
    });
    let r2 = weighted_norm(spec.dimension, &pair.phi1, |r| {
        apply_pair(spec, soliton, true, &pair.phi1, r) + mu * pair.phi2.eval(0, r)
    });
    (r1, r2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjointReport {
    /// `||(JL)^* (phi2, -phi1) + mu (phi2, -phi1)||`.
    pub swapped_residual: f64,
    /// Same with `(phi2, phi1)`; equals `2 mu ||(phi2, phi1)||` up to
    /// discretization error, since that pair belongs to `+mu`.
    pub unsigned_swap_residual: f64,
    /// Residual ratios relative to `||phi1|| + ||phi2||`.
    pub relative_residual1: f64,
    pub relative_residual2: f64,
    pub phi1_dot_r: f64,
    pub phi2_dot_r: f64,
    pub phi1_dot_domega: f64,
    pub phi2_dot_domega: f64,
}

impl AdjointReport {
    pub fn all_finite(&self) -> bool {
        [
            self.swapped_residual,
            self.unsigned_swap_residual,
            self.relative_residual1,
            self.relative_residual2,
            self.phi1_dot_r,
            self.phi2_dot_r,
            self.phi1_dot_domega,
            self.phi2_dot_domega,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Checks the adjoint eigenvector relation blockwise and records the
/// pairings of `phi` against `R` and `dR/domega`.
pub fn check_adjoint_algebra(pair: &Eigenpair, soliton: &SolitonData) -> AdjointReport {
    let spec = soliton.spec;
    let mu = pair.mu_star;
    let (p1, p2) = (&pair.phi1, &pair.phi2);
    // (JL)^* = [[0, -L+], [L-, 0]]
    let residual_for = |s: f64| {
        let first = weighted_norm(spec.dimension, p1, |r| {
            -apply_pair(&spec, soliton, true, p1, r) * s + mu * p2.eval(0, r)
        });
        let second = weighted_norm(spec.dimension, p1, |r| {
            apply_pair(&spec, soliton, false, p2, r) + mu * s * p1.eval(0, r)
        });
        (first * first + second * second).sqrt()
    };
    let pairing = |f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64| {
        integrate_pieces(p1.mesh().nodes(), |r| density(spec.dimension, r) * f(r) * g(r))
    };
    let norms = pair.phi1_norm(&spec) + pair.phi2_norm(&spec);
    let phi1 = |r: f64| p1.eval(0, r);
    let phi2 = |r: f64| p2.eval(0, r);
    let big_r = |r: f64| soliton.value(r);
    let dw = |r: f64| soliton.domega.eval(0, r);
    AdjointReport {
        swapped_residual: residual_for(-1.0),
        unsigned_swap_residual: residual_for(1.0),
        relative_residual1: pair.residual1 / norms,
        relative_residual2: pair.residual2 / norms,
        phi1_dot_r: pairing(&phi1, &big_r),
        phi2_dot_r: pairing(&phi2, &big_r),
        phi1_dot_domega: pairing(&phi1, &dw),
        phi2_dot_domega: pairing(&phi2, &dw),
    }
}

/// Eigenfunction samples at the mesh nodes for export: `(r, phi1, phi2)`.
pub fn eigenpair_samples(pair: &Eigenpair) -> Vec<(f64, f64, f64)> {
    pair.phi1
        .mesh()
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, pair.phi1.value_at_node(i, 0), pair.phi2.value_at_node(i, 0)))
        .collect()
}
