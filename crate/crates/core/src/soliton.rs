//! Ground-state profiles `R(r; omega)` of `-omega R + lap R + f(R^2) R = 0`,
//! their frequency derivative, and the slope of the L2 norm in `omega`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Dimension, Nonlinearity, ProblemSpec};
use crate::odecore::{
    brent_root, inner_product, solve_bvp, BrentResult, BvpOptions, BvpSystem, Mesh, OdeError,
    Profile, Weight, BRENT_MAX_EVALUATIONS,
};

/// Default half-width of the domain for every problem.
pub const DEFAULT_R_MAX: f64 = 100.0;
/// Default frequency step of the finite-difference slope check.
pub const DEFAULT_DELTA_OMEGA: f64 = 1e-3;
/// Largest parameter step taken during continuation.
const CONTINUATION_STEP: f64 = 0.05;
/// Number of steps used when continuing a profile from one to three dimensions.
const DIMENSION_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonOptions {
    pub r_max: f64,
    pub tol: f64,
    pub abs_tol: f64,
    pub initial_nodes: usize,
    pub max_nodes: usize,
}

impl SolitonOptions {
    /// Defaults for the dimension of `spec`: relative tolerance 1e-12 in 3D,
    /// 1e-10 in 1D, on `[0, 100]` starting from 200 nodes.
    pub fn for_spec(spec: &ProblemSpec) -> Self {
        let tol = match spec.dimension {
            Dimension::Three => 1e-12,
            Dimension::One => 1e-10,
        };
        SolitonOptions {
            r_max: DEFAULT_R_MAX,
            tol,
            abs_tol: 0.0,
            initial_nodes: 200,
            max_nodes: 20_000,
        }
    }

    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn bvp_options(&self) -> BvpOptions {
        BvpOptions {
            tol: self.tol,
            abs_tol: self.abs_tol,
            max_nodes: self.max_nodes,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolitonData {
    pub spec: ProblemSpec,
    pub options: SolitonOptions,
    /// `(R, R')` with derivative data `(R', R'')`.
    pub profile: Profile,
    /// `(dR/domega, its r-derivative)`.
    pub domega: Profile,
    /// Largest scaled local error estimate of the soliton solve.
    pub residual_norm: f64,
    pub abc_residuals: BTreeMap<String, f64>,
    pub positivity_ok: bool,
    /// Power family only: sup-norm gap between the analytic `dR/domega` and
    /// the boundary-value solve.
    pub domega_crosscheck: Option<f64>,
}

impl SolitonData {
    pub fn r_max(&self) -> f64 {
        self.profile.r_max()
    }

    pub fn mesh(&self) -> &Mesh {
        self.profile.mesh()
    }

    /// `R(r)`.
    pub fn value(&self, r: f64) -> f64 {
        self.profile.eval(0, r)
    }

    /// `R'(r)`.
    pub fn derivative(&self, r: f64) -> f64 {
        self.profile.eval(1, r)
    }

    pub fn amplitude(&self) -> f64 {
        self.profile.value_at_node(0, 0)
    }

    pub fn weight(&self) -> Weight {
        weight_for(self.spec.dimension)
    }

    /// `R'` as a `(R', R'')` profile.
    pub fn derivative_profile(&self) -> Profile {
        let mesh = self.profile.mesh().clone();
        let mut values = Vec::with_capacity(2 * mesh.len());
        let mut derivs = Vec::with_capacity(2 * mesh.len());
        for (i, &r) in mesh.nodes().iter().enumerate() {
            let (u, du) = (self.profile.value_at_node(i, 0), self.profile.value_at_node(i, 1));
            let d2u = self.profile.deriv_at_node(i, 1);
            values.extend_from_slice(&[du, d2u]);
            derivs.extend_from_slice(&[d2u, third_derivative(&self.spec, r, u, du, d2u)]);
        }
        Profile::new(mesh, 2, values, derivs).expect("sizes match")
    }

    /// `r^k R`-type products `x R` as `(x R, (x R)')` profiles.
    pub fn times_r(&self) -> Profile {
        let mesh = self.profile.mesh().clone();
        let mut values = Vec::with_capacity(2 * mesh.len());
        let mut derivs = Vec::with_capacity(2 * mesh.len());
        for (i, &r) in mesh.nodes().iter().enumerate() {
            let (u, du) = (self.profile.value_at_node(i, 0), self.profile.value_at_node(i, 1));
            let d2u = self.profile.deriv_at_node(i, 1);
            values.extend_from_slice(&[r * u, u + r * du]);
            derivs.extend_from_slice(&[u + r * du, 2.0 * du + r * d2u]);
        }
        Profile::new(mesh, 2, values, derivs).expect("sizes match")
    }
}

pub fn weight_for(dimension: Dimension) -> Weight {
    match dimension {
        Dimension::One => Weight::Line,
        Dimension::Three => Weight::Radial3D,
    }
}

/// `R'''` from differentiating the profile equation once.
pub fn third_derivative(spec: &ProblemSpec, r: f64, u: f64, du: f64, d2u: f64) -> f64 {
    let dm1 = spec.d() as f64 - 1.0;
    let (_, dg) = spec.nonlinearity.cubic_term(u);
    let radial = if dm1 == 0.0 || r == 0.0 {
        0.0
    } else {
        dm1 * (du / (r * r) - d2u / r)
    };
    radial + spec.omega * du - dg * du
}

/// Coefficient `c` of the artificial condition `R + c R' = 0` at `r_max`.
///
/// In 3D the far field behaves like `exp(-sqrt(omega) r) / r`, giving
/// `c = r / (1 + sqrt(omega) r)`; in 1D it is `exp(-sqrt(omega) x)`.
pub fn abc_coefficient(spec: &ProblemSpec, r_max: f64) -> f64 {
    let k = spec.omega.sqrt();
    match spec.dimension {
        Dimension::Three => r_max / (1.0 + k * r_max),
        Dimension::One => 1.0 / k,
    }
}

struct SolitonSystem {
    nonlinearity: Nonlinearity,
    dm1: f64,
    omega: f64,
    abc: f64,
}

impl BvpSystem for SolitonSystem {
    fn order(&self) -> usize {
        2
    }
    fn singular_term(&self) -> Option<Vec<f64>> {
        (self.dm1 != 0.0).then(|| vec![0.0, 0.0, 0.0, -self.dm1])
    }
    fn rhs(&self, _r: f64, y: &[f64], _p: &[f64], f: &mut [f64]) {
        let (g, _) = self.nonlinearity.cubic_term(y[0]);
        f[0] = y[1];
        f[1] = self.omega * y[0] - g;
    }
    fn jacobian(&self, _r: f64, y: &[f64], _p: &[f64], dfdy: &mut [f64], _dfdp: &mut [f64]) {
        let (_, dg) = self.nonlinearity.cubic_term(y[0]);
        dfdy.copy_from_slice(&[0.0, 1.0, self.omega - dg, 0.0]);
    }
    fn left_bc_count(&self) -> usize {
        1
    }
    fn left_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[1];
    }
    fn right_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[0] + self.abc * y[1];
    }
}

/// `L+ w = -R`, i.e. `w'' = -(d-1)/r w' + (omega + V+) w + R`.
struct DomegaSystem<'a> {
    spec: ProblemSpec,
    soliton: &'a Profile,
    dm1: f64,
    abc: f64,
}

impl DomegaSystem<'_> {
    fn coefficients(&self, r: f64) -> (f64, f64) {
        let u = self.soliton.eval(0, r);
        let v = self.spec.nonlinearity.linearized_potentials(u);
        (self.spec.omega + v.plus, u)
    }
}

impl BvpSystem for DomegaSystem<'_> {
    fn order(&self) -> usize {
        2
    }
    fn singular_term(&self) -> Option<Vec<f64>> {
        (self.dm1 != 0.0).then(|| vec![0.0, 0.0, 0.0, -self.dm1])
    }
    fn rhs(&self, r: f64, y: &[f64], _p: &[f64], f: &mut [f64]) {
        let (a, u) = self.coefficients(r);
        f[0] = y[1];
        f[1] = a * y[0] + u;
    }
    fn jacobian(&self, r: f64, _y: &[f64], _p: &[f64], dfdy: &mut [f64], _dfdp: &mut [f64]) {
        let (a, _) = self.coefficients(r);
        dfdy.copy_from_slice(&[0.0, 1.0, a, 0.0]);
    }
    fn left_bc_count(&self) -> usize {
        1
    }
    fn left_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[1];
    }
    fn right_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = y[0] + self.abc * y[1];
    }
}

/// Closed-form 1D ground state
/// `R(x) = ((sigma + 1) omega sech^2(sigma sqrt(omega) x))^{1/(2 sigma)}`,
/// returned as `(R, R', R'')`.
pub fn closed_form_1d_value(sigma: f64, omega: f64, x: f64) -> (f64, f64, f64) {
    let k = omega.sqrt();
    let y = sigma * k * x.abs();
    // ln sech y, stable for large y
    let ln_sech = -y + std::f64::consts::LN_2 - (-2.0 * y).exp().ln_1p();
    let amp = ((sigma + 1.0) * omega).powf(0.5 / sigma);
    let r = amp * (ln_sech / sigma).exp();
    let t = y.tanh() * x.signum();
    let dr = -k * t * r;
    let d2r = omega * r - r.abs().powf(2.0 * sigma) * r;
    (r, dr, d2r)
}

/// The closed-form 1D ground state sampled as an `(R, R')` profile.
pub fn closed_form_soliton_1d(sigma: f64, omega: f64, mesh: &Mesh) -> Profile {
    Profile::second_order_from_fn(mesh.clone(), |x| closed_form_1d_value(sigma, omega, x))
}

/// Starting profile `c ((sigma+1) omega)^{1/(2 sigma)} sech^{1/sigma}(sigma sqrt(omega) r)`
/// with `c = 3` in 3D and `c = 1` in 1D; the cubic-quintic family uses
/// `sigma = 1`.
pub fn initial_guess(spec: &ProblemSpec, mesh: &Mesh) -> Profile {
    let sigma = match spec.nonlinearity {
        Nonlinearity::Power { sigma } => sigma,
        Nonlinearity::CubicQuintic { .. } => 1.0,
    };
    let c = match spec.dimension {
        Dimension::Three => 3.0,
        Dimension::One => 1.0,
    };
    let base = closed_form_soliton_1d(sigma, spec.omega, mesh);
    base.scaled(c)
}

fn check_ground_state(profile: &Profile) -> Result<()> {
    let amp = profile.value_at_node(0, 0);
    if !(amp > 1e-6) {
        return Err(Error::NotGroundState { r: 0.0 });
    }
    let floor = 1e-12 * amp;
    for (i, v) in profile.node_values(0).enumerate() {
        if v < -floor {
            return Err(Error::NotGroundState {
                r: profile.mesh().nodes()[i],
            });
        }
    }
    Ok(())
}

fn solve_profile(spec: &ProblemSpec, opts: &SolitonOptions, guess: &Profile) -> Result<(Profile, f64)> {
    solve_profile_in(spec, spec.d() as f64 - 1.0, opts, guess)
}

/// Solves with the radial coefficient `(d - 1)` given explicitly, so that the
/// dimension can be used as a continuation parameter.
fn solve_profile_in(
    spec: &ProblemSpec,
    dm1: f64,
    opts: &SolitonOptions,
    guess: &Profile,
) -> Result<(Profile, f64)> {
    let abc = if dm1 == spec.d() as f64 - 1.0 {
        abc_coefficient(spec, opts.r_max)
    } else {
        // far field exp(-sqrt(omega) r) / r^{(d-1)/2}
        opts.r_max / (spec.omega.sqrt() * opts.r_max + 0.5 * dm1)
    };
    let sys = SolitonSystem {
        nonlinearity: spec.nonlinearity,
        dm1,
        omega: spec.omega,
        abc,
    };
    let guess = if (guess.r_max() - opts.r_max).abs() > 1e-12 * opts.r_max {
        let mesh = Mesh::stretched(opts.r_max, opts.initial_nodes)?;
        // Beyond the old span the guess is unreliable; cut it to zero.
        let old = guess.r_max();
        let values: Vec<f64> = mesh
            .nodes()
            .iter()
            .flat_map(|&r| {
                if r <= old {
                    [guess.eval(0, r), guess.eval(1, r)]
                } else {
                    [0.0, 0.0]
                }
            })
            .collect();
        let n = values.len();
        Profile::new(mesh, 2, values, vec![0.0; n])?
    } else {
        guess.clone()
    };
    let sol = solve_bvp(&sys, &guess, &[], &opts.bvp_options())?;
    check_ground_state(&sol.profile)?;
    Ok((sol.profile, sol.max_error))
}

/// Solves for the ground state from the scaled closed-form guess. If Newton
/// fails, the profile is continued in the dimension from the exact 1D
/// solution, and failing that in the family parameter from its cubic member.
pub fn solve_soliton(spec: &ProblemSpec, opts: &SolitonOptions) -> Result<SolitonData> {
    spec.validate()?;
    let profile = match direct_or_dimension(spec, opts) {
        Ok(p) => p,
        Err(first) => parameter_continuation(spec, opts).map_err(|_| first)?,
    };
    finish(spec, opts, profile)
}

/// Solves starting from a given `(R, R')` guess (e.g. a nearby parameter).
pub fn solve_soliton_with_guess(
    spec: &ProblemSpec,
    opts: &SolitonOptions,
    guess: &Profile,
) -> Result<SolitonData> {
    spec.validate()?;
    let (profile, _) = solve_profile(spec, opts, guess)?;
    finish(spec, opts, profile)
}

fn direct_or_dimension(spec: &ProblemSpec, opts: &SolitonOptions) -> Result<Profile> {
    let mesh = Mesh::stretched(opts.r_max, opts.initial_nodes)?;
    let first = match solve_profile(spec, opts, &initial_guess(spec, &mesh)) {
        Ok((p, _)) => return Ok(p),
        Err(e) => e,
    };
    if spec.dimension == Dimension::One {
        return Err(first);
    }
    dimension_continuation(spec, opts).map_err(|_| first)
}

fn dimension_continuation(spec: &ProblemSpec, opts: &SolitonOptions) -> Result<Profile> {
    let mesh = Mesh::stretched(opts.r_max, opts.initial_nodes)?;
    let flat = spec.with_dimension(Dimension::One);
    let mut current = initial_guess(&flat, &mesh);
    let loose = SolitonOptions {
        tol: opts.tol.max(1e-6),
        ..*opts
    };
    for i in 0..=DIMENSION_STEPS {
        let dm1 = 2.0 * i as f64 / DIMENSION_STEPS as f64;
        let o = if i == DIMENSION_STEPS { opts } else { &loose };
        current = solve_profile_in(spec, dm1, o, &current)?.0;
    }
    Ok(current)
}

fn parameter_continuation(spec: &ProblemSpec, opts: &SolitonOptions) -> Result<Profile> {
    let target = spec.nonlinearity.parameter();
    let start = match spec.nonlinearity {
        Nonlinearity::Power { .. } => 1.0,
        Nonlinearity::CubicQuintic { .. } => 0.0,
    };
    let steps = ((target - start).abs() / CONTINUATION_STEP).ceil().max(1.0) as usize;
    let base = spec.with_parameter(start)?;
    let mut current = direct_or_dimension(&base, opts)?;
    for i in 1..=steps {
        let p = start + (target - start) * i as f64 / steps as f64;
        let (next, _) = solve_profile(&spec.with_parameter(p)?, opts, &current)?;
        current = next;
    }
    Ok(current)
}

fn finish(spec: &ProblemSpec, opts: &SolitonOptions, profile: Profile) -> Result<SolitonData> {
    let residual_norm = profile_residual(spec, &profile);
    let (domega, crosscheck) = solve_domega_r(spec, &profile, opts)?;
    let mut data = SolitonData {
        spec: *spec,
        options: *opts,
        profile,
        domega,
        residual_norm,
        abc_residuals: BTreeMap::new(),
        positivity_ok: true,
        domega_crosscheck: crosscheck,
    };
    data.abc_residuals = check_abc_residuals(&data);
    Ok(data)
}

/// Largest pointwise residual of the profile equation, scaled by `R(0)`,
/// sampled at interval midpoints where the interpolant is not pinned.
pub fn profile_residual(spec: &ProblemSpec, profile: &Profile) -> f64 {
    let dm1 = spec.d() as f64 - 1.0;
    let amp = profile.value_at_node(0, 0).abs().max(1e-300);
    let mut worst: f64 = 0.0;
    for w in profile.mesh().nodes().windows(2) {
        let r = 0.5 * (w[0] + w[1]);
        let (u, du, d2u) = profile.function_jet(r);
        let (g, _) = spec.nonlinearity.cubic_term(u);
        let res = -spec.omega * u + d2u + dm1 / r * du + g;
        worst = worst.max(res.abs());
    }
    worst / amp
}

/// `dR/domega` from the linear problem `L+ w = -R`; for the power family the
/// analytic combination `(R / sigma + r R') / 2` is returned and the solve is
/// kept as a cross-check.
pub fn solve_domega_r(
    spec: &ProblemSpec,
    profile: &Profile,
    opts: &SolitonOptions,
) -> Result<(Profile, Option<f64>)> {
    let sys = DomegaSystem {
        spec: *spec,
        soliton: profile,
        dm1: spec.d() as f64 - 1.0,
        abc: abc_coefficient(spec, profile.r_max()),
    };
    let guess = Profile::zero(profile.mesh().clone());
    let bvp = solve_bvp(&sys, &guess, &[], &opts.bvp_options())?.profile;
    match spec.nonlinearity {
        Nonlinearity::Power { sigma } => {
            let analytic = analytic_domega(spec, sigma, profile);
            let gap = analytic.sup_distance(&bvp);
            Ok((analytic, Some(gap)))
        }
        Nonlinearity::CubicQuintic { .. } => Ok((bvp, None)),
    }
}

fn analytic_domega(spec: &ProblemSpec, sigma: f64, profile: &Profile) -> Profile {
    let mesh = profile.mesh().clone();
    let mut values = Vec::with_capacity(2 * mesh.len());
    let mut derivs = Vec::with_capacity(2 * mesh.len());
    for (i, &r) in mesh.nodes().iter().enumerate() {
        let u = profile.value_at_node(i, 0);
        let du = profile.value_at_node(i, 1);
        let d2u = profile.deriv_at_node(i, 1);
        let d3u = third_derivative(spec, r, u, du, d2u);
        let w = 0.5 * (u / sigma + r * du);
        let dw = 0.5 * (du / sigma + du + r * d2u);
        let d2w = 0.5 * (d2u / sigma + 2.0 * d2u + r * d3u);
        values.extend_from_slice(&[w, dw]);
        derivs.extend_from_slice(&[dw, d2w]);
    }
    Profile::new(mesh, 2, values, derivs).expect("sizes match")
}

/// Residuals of the artificial boundary conditions for `R` and `dR/domega`,
/// plus the tail magnitude `|R(r_max)|`, which exposes domains that are too
/// short for the exponential decay to have set in.
pub fn check_abc_residuals(data: &SolitonData) -> BTreeMap<String, f64> {
    let r_max = data.r_max();
    let c = abc_coefficient(&data.spec, r_max);
    let n = data.profile.mesh().len() - 1;
    let mut out = BTreeMap::new();
    let (u, du) = (data.profile.value_at_node(n, 0), data.profile.value_at_node(n, 1));
    out.insert("R".to_string(), (u + c * du).abs());
    out.insert("R_tail".to_string(), u.abs());
    let dn = data.domega.mesh().len() - 1;
    let (w, dw) = (data.domega.value_at_node(dn, 0), data.domega.value_at_node(dn, 1));
    out.insert("dOmegaR".to_string(), (w + c * dw).abs());
    out
}

/// Whether every artificial-boundary diagnostic is below `threshold`.
pub fn abc_ok(residuals: &BTreeMap<String, f64>, threshold: f64) -> bool {
    residuals.values().all(|&v| v <= threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeReport {
    /// `2 <R, dR/domega>`.
    pub value: f64,
    /// Central difference of the squared L2 norm in `omega`.
    pub finite_difference: f64,
    pub relative_difference: f64,
    /// Whether the two routes agree within 1e-3 relative.
    pub consistent: bool,
    /// `value / ||R||^2`.
    pub normalized: f64,
}

pub fn l2_norm_squared(data: &SolitonData) -> Result<f64> {
    Ok(inner_product(&data.profile, &data.profile, data.weight())?)
}

/// `d/domega ||R||^2` by both routes; the returned value is the inner-product one.
pub fn slope_condition(data: &SolitonData, delta_omega: f64) -> Result<SlopeReport> {
    let spec = data.spec;
    let value = 2.0 * inner_product(&data.profile, &data.domega, data.weight())?;
    let norm = l2_norm_squared(data)?;
    let mut masses = [0.0; 2];
    for (slot, sign) in masses.iter_mut().zip([1.0, -1.0]) {
        let shifted = spec.with_omega(spec.omega + sign * delta_omega)?;
        let (p, _) = solve_profile(&shifted, &data.options, &data.profile)?;
        *slot = inner_product(&p, &p, data.weight())?;
    }
    let finite_difference = (masses[0] - masses[1]) / (2.0 * delta_omega);
    let relative_difference =
        (value - finite_difference).abs() / value.abs().max(finite_difference.abs()).max(1e-300);
    Ok(SlopeReport {
        value,
        finite_difference,
        relative_difference,
        consistent: relative_difference <= 1e-3,
        normalized: value / norm,
    })
}

/// `2 <R, dR/domega>` only, without the finite-difference check.
pub fn slope_value(data: &SolitonData) -> Result<f64> {
    Ok(2.0 * inner_product(&data.profile, &data.domega, data.weight())?)
}

/// Locates the family parameter in `(lo, hi)` at which the slope changes sign.
pub fn slope_root(
    spec: &ProblemSpec,
    opts: &SolitonOptions,
    lo: f64,
    hi: f64,
    x_tol: f64,
) -> Result<BrentResult> {
    let mut failure: Option<Error> = None;
    let result = brent_root(
        |p| {
            let eval = spec
                .with_parameter(p)
                .map_err(Error::from)
                .and_then(|s| solve_soliton(&s, opts))
                .and_then(|d| slope_value(&d));
            match eval {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        lo,
        hi,
        x_tol,
        BRENT_MAX_EVALUATIONS,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    result.map_err(|e: OdeError| e.into())
}
