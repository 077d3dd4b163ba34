//! Fourth-order mono-implicit Runge-Kutta (3-stage Lobatto IIIA) collocation
//! for `y' = S y / r + F(r, y, p)` with two-point boundary conditions.
//!
//! Unknown parameters are carried as extra constant components. The global
//! Jacobian is almost block diagonal; rows are ordered left BCs, interval
//! blocks, right BCs so that it fits in a band and is factored with
//! [`BandMatrix`].

use super::{BandMatrix, Mesh, OdeError, Profile};

/// A first-order system `y' = S y / r + F(r, y, p)` with separated boundary
/// conditions. `S` is constant; at `r = 0` the solver uses
/// `y'(0) = (I - S)^{-1} F(0, y, p)`, which requires the boundary conditions
/// to enforce `S y(0) = 0`.
pub trait BvpSystem {
    fn order(&self) -> usize;

    fn num_params(&self) -> usize {
        0
    }

    /// Row-major `order x order` matrix `S`, if the system has a `1/r` term.
    fn singular_term(&self) -> Option<Vec<f64>> {
        None
    }

    /// The smooth part `F(r, y, p)`.
    fn rhs(&self, r: f64, y: &[f64], p: &[f64], f: &mut [f64]);

    /// `dF/dy` (row-major `order x order`) and `dF/dp` (`order x num_params`).
    /// Defaults to central differences.
    fn jacobian(&self, r: f64, y: &[f64], p: &[f64], dfdy: &mut [f64], dfdp: &mut [f64]) {
        let n = self.order();
        let np = self.num_params();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        let mut yy = y.to_vec();
        for j in 0..n {
            let h = 1e-6 * y[j].abs().max(1.0);
            yy[j] = y[j] + h;
            self.rhs(r, &yy, p, &mut fp);
            yy[j] = y[j] - h;
            self.rhs(r, &yy, p, &mut fm);
            yy[j] = y[j];
            for i in 0..n {
                dfdy[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let mut pp = p.to_vec();
        for k in 0..np {
            let h = 1e-6 * p[k].abs().max(1.0);
            pp[k] = p[k] + h;
            self.rhs(r, y, &pp, &mut fp);
            pp[k] = p[k] - h;
            self.rhs(r, y, &pp, &mut fm);
            pp[k] = p[k];
            for i in 0..n {
                dfdp[i * np + k] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
    }

    /// Number of conditions imposed at `r = 0`; the remaining
    /// `order + num_params - left_bc_count` are imposed at `r_max`.
    fn left_bc_count(&self) -> usize;

    fn left_bc(&self, y: &[f64], p: &[f64], res: &mut [f64]);

    fn right_bc(&self, y: &[f64], p: &[f64], res: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvpOptions {
    /// Relative tolerance on the local error estimate, measured against the
    /// largest nodal magnitude of each component.
    pub tol: f64,
    /// Absolute floor added to the relative tolerance.
    pub abs_tol: f64,
    pub max_nodes: usize,
    pub max_newton: usize,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            tol: 1e-8,
            abs_tol: 0.0,
            max_nodes: 20_000,
            max_newton: 60,
        }
    }
}

impl BvpOptions {
    pub fn with_tol(tol: f64) -> Self {
        BvpOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct BvpSolution {
    /// Solution components (parameters excluded) with their derivatives.
    pub profile: Profile,
    pub params: Vec<f64>,
    /// Largest scaled local error estimate `h |defect| / scale` over the mesh.
    pub max_error: f64,
    /// Largest boundary-condition residual.
    pub bc_residual: f64,
    pub newton_iterations: usize,
    pub refinements: usize,
}

/// Interior Lobatto points used to sample the defect.
const DEFECT_POINTS: [f64; 2] = [
    0.5 - 0.327_326_835_353_988_6, // 1/2 - sqrt(21)/14
    0.5 + 0.327_326_835_353_988_6,
];

struct Extended<'a, S: BvpSystem + ?Sized> {
    sys: &'a S,
    n: usize,
    np: usize,
    m: usize,
    nl: usize,
    s: Option<Vec<f64>>,
    origin: Option<Vec<f64>>,
}

impl<'a, S: BvpSystem + ?Sized> Extended<'a, S> {
    fn new(sys: &'a S) -> Result<Self, OdeError> {
        let n = sys.order();
        let np = sys.num_params();
        let m = n + np;
        let nl = sys.left_bc_count();
        if n == 0 || nl > m {
            return Err(OdeError::InvalidInput(format!(
                "system of order {n} with {np} parameters cannot take {nl} left conditions"
            )));
        }
        let s = sys.singular_term();
        let origin = match &s {
            Some(s) => {
                if s.len() != n * n {
                    return Err(OdeError::InvalidInput("singular term has wrong size".into()));
                }
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = if i == j { 1.0 } else { 0.0 } - s[i * n + j];
                    }
                }
                Some(dense_inverse(n, &a).ok_or_else(|| {
                    OdeError::InvalidInput("I - S is singular; origin limit undefined".into())
                })?)
            }
            None => None,
        };
        Ok(Extended {
            sys,
            n,
            np,
            m,
            nl,
            s,
            origin,
        })
    }

    fn f(&self, r: f64, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let (yy, p) = y.split_at(n);
        self.sys.rhs(r, yy, p, &mut out[..n]);
        if let Some(s) = &self.s {
            if r > 0.0 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += s[i * n + j] * yy[j];
                    }
                    out[i] += acc / r;
                }
            } else {
                let w = self.origin.as_ref().unwrap();
                let base: Vec<f64> = out[..n].to_vec();
                for i in 0..n {
                    out[i] = (0..n).map(|j| w[i * n + j] * base[j]).sum();
                }
            }
        }
        out[n..].fill(0.0);
    }

    fn jac(&self, r: f64, y: &[f64], out: &mut [f64]) {
        let (n, np, m) = (self.n, self.np, self.m);
        let (yy, p) = y.split_at(n);
        let mut dfdy = vec![0.0; n * n];
        let mut dfdp = vec![0.0; n * np];
        self.sys.jacobian(r, yy, p, &mut dfdy, &mut dfdp);
        out.fill(0.0);
        let origin = r == 0.0 && self.origin.is_some();
        for i in 0..n {
            for j in 0..n {
                let mut v = dfdy[i * n + j];
                if let (Some(s), false) = (&self.s, origin) {
                    v += s[i * n + j] / r;
                }
                out[i * m + j] = v;
            }
            for k in 0..np {
                out[i * m + n + k] = dfdp[i * np + k];
            }
        }
        if origin {
            let w = self.origin.as_ref().unwrap();
            let base: Vec<f64> = out[..n * m].to_vec();
            for i in 0..n {
                for j in 0..m {
                    out[i * m + j] = (0..n).map(|k| w[i * n + k] * base[k * m + j]).sum();
                }
            }
        }
    }

    fn bc(&self, left: bool, y: &[f64], out: &mut [f64]) {
        let (yy, p) = y.split_at(self.n);
        if left {
            self.sys.left_bc(yy, p, out)
        } else {
            self.sys.right_bc(yy, p, out)
        }
    }

    /// Central-difference Jacobian of a boundary residual, `rows x m`.
    fn bc_jac(&self, left: bool, y: &[f64], rows: usize) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; rows * m];
        let mut rp = vec![0.0; rows];
        let mut rm = vec![0.0; rows];
        let mut yy = y.to_vec();
        for j in 0..m {
            let h = 1e-6 * y[j].abs().max(1.0);
            yy[j] = y[j] + h;
            self.bc(left, &yy, &mut rp);
            yy[j] = y[j] - h;
            self.bc(left, &yy, &mut rm);
            yy[j] = y[j];
            for i in 0..rows {
                out[i * m + j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        out
    }
}

fn dense_inverse(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut inv: Vec<f64> = (0..n * n)
        .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        for j in 0..n {
            a.swap(col * n + j, piv * n + j);
            inv.swap(col * n + j, piv * n + j);
        }
        let d = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i * n + col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i * n + j] -= f * a[col * n + j];
                        inv[i * n + j] -= f * inv[col * n + j];
                    }
                }
            }
        }
    }
    Some(inv)
}

struct Discretization<'e, 'a, S: BvpSystem + ?Sized> {
    ext: &'e Extended<'a, S>,
    nodes: Vec<f64>,
}

impl<S: BvpSystem + ?Sized> Discretization<'_, '_, S> {
    fn unknowns(&self) -> usize {
        self.nodes.len() * self.ext.m
    }

    fn node_f(&self, x: &[f64]) -> Vec<f64> {
        let m = self.ext.m;
        let mut f = vec![0.0; x.len()];
        for (i, &r) in self.nodes.iter().enumerate() {
            self.ext.f(r, &x[i * m..(i + 1) * m], &mut f[i * m..(i + 1) * m]);
        }
        f
    }

    /// Residual vector, and the banded Jacobian when requested.
    fn assemble(&self, x: &[f64], want_jac: bool) -> (Vec<f64>, Option<BandMatrix>) {
        let ext = self.ext;
        let (m, nl) = (ext.m, ext.nl);
        let nr = m - nl;
        let nn = self.nodes.len();
        let total = self.unknowns();
        let mut phi = vec![0.0; total];
        let f = self.node_f(x);
        let mut jn = Vec::new();
        if want_jac {
            jn = vec![0.0; nn * m * m];
            for (i, &r) in self.nodes.iter().enumerate() {
                ext.jac(r, &x[i * m..(i + 1) * m], &mut jn[i * m * m..(i + 1) * m * m]);
            }
        }
        let mut band = want_jac.then(|| BandMatrix::zeros(total, m + nl - 1, 2 * m - 1 - nl));

        ext.bc(true, &x[..m], &mut phi[..nl]);
        ext.bc(false, &x[(nn - 1) * m..], &mut phi[total - nr..]);
        if let Some(b) = band.as_mut() {
            let jl = ext.bc_jac(true, &x[..m], nl);
            for i in 0..nl {
                for j in 0..m {
                    b.set(i, j, jl[i * m + j]);
                }
            }
            let jr = ext.bc_jac(false, &x[(nn - 1) * m..], nr);
            for i in 0..nr {
                for j in 0..m {
                    b.set(total - nr + i, (nn - 1) * m + j, jr[i * m + j]);
                }
            }
        }

        let mut ymid = vec![0.0; m];
        let mut fmid = vec![0.0; m];
        let mut jmid = vec![0.0; m * m];
        for k in 0..nn - 1 {
            let h = self.nodes[k + 1] - self.nodes[k];
            let rm = self.nodes[k] + 0.5 * h;
            let (y0, y1) = (&x[k * m..(k + 1) * m], &x[(k + 1) * m..(k + 2) * m]);
            let (f0, f1) = (&f[k * m..(k + 1) * m], &f[(k + 1) * m..(k + 2) * m]);
            for c in 0..m {
                ymid[c] = 0.5 * (y0[c] + y1[c]) - h / 8.0 * (f1[c] - f0[c]);
            }
            ext.f(rm, &ymid, &mut fmid);
            let row0 = nl + k * m;
            for c in 0..m {
                phi[row0 + c] = y1[c] - y0[c] - h / 6.0 * (f0[c] + 4.0 * fmid[c] + f1[c]);
            }
            if let Some(b) = band.as_mut() {
                ext.jac(rm, &ymid, &mut jmid);
                let j0 = &jn[k * m * m..(k + 1) * m * m];
                let j1 = &jn[(k + 1) * m * m..(k + 2) * m * m];
                for i in 0..m {
                    for j in 0..m {
                        // (J_mid (I/2 + h/8 J0))_{ij} and (J_mid (I/2 - h/8 J1))_{ij}
                        let mut a0 = 0.5 * jmid[i * m + j];
                        let mut a1 = a0;
                        for l in 0..m {
                            let jm = jmid[i * m + l];
                            a0 += jm * h / 8.0 * j0[l * m + j];
                            a1 -= jm * h / 8.0 * j1[l * m + j];
                        }
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let left = -delta - h / 6.0 * (j0[i * m + j] + 4.0 * a0);
                        let right = delta - h / 6.0 * (j1[i * m + j] + 4.0 * a1);
                        b.set(row0 + i, k * m + j, left);
                        b.set(row0 + i, (k + 1) * m + j, right);
                    }
                }
            }
        }
        (phi, band)
    }

    fn component_scales(&self, x: &[f64]) -> Vec<f64> {
        let m = self.ext.m;
        let mut s = vec![0.0f64; m];
        for node in x.chunks(m) {
            for (c, v) in node.iter().enumerate() {
                s[c] = s[c].max(v.abs());
            }
        }
        s
    }

    /// Scaled local error estimate `h |defect|` per interval, divided by the
    /// tolerance allowance of each component.
    fn defect_ratios(&self, x: &[f64], f: &[f64], opts: &BvpOptions) -> (Vec<f64>, f64) {
        let ext = self.ext;
        let (n, m) = (ext.n, ext.m);
        let scales = self.component_scales(x);
        let mut ratios = Vec::with_capacity(self.nodes.len() - 1);
        let mut worst_scaled: f64 = 0.0;
        let mut s = vec![0.0; m];
        let mut ds = vec![0.0; m];
        let mut fs = vec![0.0; m];
        for k in 0..self.nodes.len() - 1 {
            let h = self.nodes[k + 1] - self.nodes[k];
            let mut ratio: f64 = 0.0;
            for &t in &DEFECT_POINTS {
                let t2 = t * t;
                let t3 = t2 * t;
                for c in 0..m {
                    let (y0, d0) = (x[k * m + c], f[k * m + c]);
                    let (y1, d1) = (x[(k + 1) * m + c], f[(k + 1) * m + c]);
                    s[c] = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                        + (t3 - 2.0 * t2 + t) * h * d0
                        + (3.0 * t2 - 2.0 * t3) * y1
                        + (t3 - t2) * h * d1;
                    ds[c] = 6.0 * (t2 - t) / h * (y0 - y1)
                        + (3.0 * t2 - 4.0 * t + 1.0) * d0
                        + (3.0 * t2 - 2.0 * t) * d1;
                }
                ext.f(self.nodes[k] + t * h, &s, &mut fs);
                for c in 0..n {
                    let err = h * (ds[c] - fs[c]).abs();
                    let allowance = opts.abs_tol + opts.tol * scales[c];
                    if scales[c] > 0.0 {
                        worst_scaled = worst_scaled.max(err / scales[c]);
                    }
                    if allowance > 0.0 {
                        ratio = ratio.max(err / allowance);
                    } else if err > 0.0 {
                        ratio = f64::INFINITY;
                    }
                }
            }
            ratios.push(ratio);
        }
        (ratios, worst_scaled)
    }
}

fn scaled_norm(dx: &[f64], weights: &[f64]) -> f64 {
    let m = weights.len();
    dx.iter()
        .enumerate()
        .fold(0.0f64, |acc, (k, v)| acc.max(v.abs() / weights[k % m]))
}

/// Damped Newton iteration with the natural monotonicity test. Returns the
/// number of iterations used.
fn newton<S: BvpSystem + ?Sized>(
    disc: &Discretization<'_, '_, S>,
    x: &mut [f64],
    opts: &BvpOptions,
) -> Result<usize, OdeError> {
    let conv_tol = (1e-3 * opts.tol).clamp(1e-13, 1e-9);
    let mut lambda: f64 = 1.0;
    let mut prev_norm = f64::INFINITY;
    for it in 1..=opts.max_newton {
        let (phi, band) = disc.assemble(x, true);
        let lu = band.unwrap().factorize()?;
        let mut dx: Vec<f64> = phi.iter().map(|v| -v).collect();
        lu.solve_in_place(&mut dx);
        // Scale by the larger of the current and the full-step iterate, so a
        // zero starting profile does not inflate the correction norm.
        let full: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let weights: Vec<f64> = disc
            .component_scales(x)
            .iter()
            .zip(disc.component_scales(&full))
            .map(|(a, b)| a.max(b).max(1e-10))
            .collect();
        let ndx = scaled_norm(&dx, &weights);
        if !ndx.is_finite() {
            return Err(OdeError::NonConvergence {
                residual: f64::NAN,
                detail: "non-finite Newton correction".into(),
            });
        }
        // Converged, or stalled at round-off level.
        if ndx <= conv_tol || (ndx <= 1e-8 && ndx >= 0.5 * prev_norm) {
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            return Ok(it);
        }
        prev_norm = ndx;
        // Restrict the relative size of a single update (trust-region-like
        // guard for crude starting profiles).
        lambda = (4.0 * lambda).min(1.0).min(0.5 / ndx);
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + lambda * d).collect();
            let (phi_t, _) = disc.assemble(&trial, false);
            let mut dbar: Vec<f64> = phi_t.iter().map(|v| -v).collect();
            lu.solve_in_place(&mut dbar);
            let nbar = scaled_norm(&dbar, &weights);
            if nbar.is_finite() && nbar <= (1.0 - 0.25 * lambda) * ndx {
                x.copy_from_slice(&trial);
                break;
            }
            lambda *= 0.5;
            if lambda < 1.0 / 4096.0 {
                let res = phi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                return Err(OdeError::NonConvergence {
                    residual: res,
                    detail: format!("damping failed after {it} iterations"),
                });
            }
        }
    }
    let (phi, _) = disc.assemble(x, false);
    Err(OdeError::NonConvergence {
        residual: phi.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        detail: format!("no convergence in {} iterations", opts.max_newton),
    })
}

/// Hermite interpolation of a nodal state onto new nodes.
fn transfer(old_nodes: &[f64], x: &[f64], f: &[f64], m: usize, new_nodes: &[f64]) -> Vec<f64> {
    let mesh = Mesh::new(old_nodes.to_vec()).expect("solver meshes are valid");
    let mut out = Vec::with_capacity(new_nodes.len() * m);
    for &r in new_nodes {
        let k = mesh.locate(r);
        let h = old_nodes[k + 1] - old_nodes[k];
        let t = (r - old_nodes[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        for c in 0..m {
            let (y0, d0) = (x[k * m + c], f[k * m + c]);
            let (y1, d1) = (x[(k + 1) * m + c], f[(k + 1) * m + c]);
            out.push(
                (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * h * d0
                    + (3.0 * t2 - 2.0 * t3) * y1
                    + (t3 - t2) * h * d1,
            );
        }
    }
    out
}

/// Solves the boundary value problem starting from `guess` (whose mesh is
/// used as the initial mesh) and parameter guesses `params`.
pub fn solve_bvp<S: BvpSystem + ?Sized>(
    sys: &S,
    guess: &Profile,
    params: &[f64],
    opts: &BvpOptions,
) -> Result<BvpSolution, OdeError> {
    let ext = Extended::new(sys)?;
    let (n, np, m) = (ext.n, ext.np, ext.m);
    if guess.ncomp() != n || params.len() != np {
        return Err(OdeError::InvalidInput(format!(
            "guess has {} components and {} parameters, system needs {n} and {np}",
            guess.ncomp(),
            params.len()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(OdeError::InvalidInput("tolerance must be positive".into()));
    }
    let mut nodes = guess.mesh().nodes().to_vec();
    let mut x = Vec::with_capacity(nodes.len() * m);
    for i in 0..nodes.len() {
        for c in 0..n {
            x.push(guess.value_at_node(i, c));
        }
        x.extend_from_slice(params);
    }
    let initial_x = x.clone();
    let initial_nodes = nodes.clone();

    let mut total_iterations = 0;
    let mut refinements = 0;
    let mut retries = 0;
    loop {
        let disc = Discretization {
            ext: &ext,
            nodes: nodes.clone(),
        };
        match newton(&disc, &mut x, opts) {
            Ok(it) => total_iterations += it,
            Err(e) => {
                // A coarse mesh can defeat Newton; retry from the original
                // guess on a uniformly refined mesh.
                if refinements == 0 && retries < 3 && 2 * nodes.len() <= opts.max_nodes {
                    retries += 1;
                    let mesh = Mesh::new(nodes.clone())?.bisected();
                    let base = Mesh::new(initial_nodes.clone())?;
                    x.clear();
                    for &r in mesh.nodes() {
                        let k = base.locate(r);
                        let (a, b) = (initial_nodes[k], initial_nodes[k + 1]);
                        let t = (r - a) / (b - a);
                        for c in 0..m {
                            let v0 = initial_x[k * m + c];
                            let v1 = initial_x[(k + 1) * m + c];
                            x.push(if c < n { guess.eval(c, r) } else { v0 + t * (v1 - v0) });
                        }
                    }
                    nodes = mesh.nodes().to_vec();
                    continue;
                }
                return Err(e);
            }
        }
        let f = disc.node_f(&x);
        let (ratios, worst) = disc.defect_ratios(&x, &f, opts);
        let max_ratio = ratios.iter().fold(0.0f64, |a, &b| a.max(b));
        if max_ratio <= 1.0 {
            let nn = nodes.len();
            let mut values = Vec::with_capacity(nn * n);
            let mut derivs = Vec::with_capacity(nn * n);
            for i in 0..nn {
                values.extend_from_slice(&x[i * m..i * m + n]);
                derivs.extend_from_slice(&f[i * m..i * m + n]);
            }
            let params = x[n..m].to_vec();
            let mut res = vec![0.0; m];
            ext.bc(true, &x[..m], &mut res[..ext.nl]);
            ext.bc(false, &x[(nn - 1) * m..], &mut res[ext.nl..]);
            let bc_residual = res.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            return Ok(BvpSolution {
                profile: Profile::new(Mesh::new(nodes)?, n, values, derivs)?,
                params,
                max_error: worst,
                bc_residual,
                newton_iterations: total_iterations,
                refinements,
            });
        }
        let mut new_nodes = Vec::with_capacity(nodes.len() * 2);
        for (k, &rho) in ratios.iter().enumerate() {
            let (a, b) = (nodes[k], nodes[k + 1]);
            new_nodes.push(a);
            if rho > 1.0 {
                let pieces = ((1.3 * rho.powf(0.25)).ceil() as usize).clamp(2, 10);
                for j in 1..pieces {
                    new_nodes.push(a + (b - a) * j as f64 / pieces as f64);
                }
            }
        }
        new_nodes.push(*nodes.last().unwrap());
        if new_nodes.len() > opts.max_nodes {
            return Err(OdeError::MeshOverflow {
                nodes: new_nodes.len(),
                cap: opts.max_nodes,
            });
        }
        x = transfer(&nodes, &x, &f, m, &new_nodes);
        nodes = new_nodes;
        refinements += 1;
    }
}
