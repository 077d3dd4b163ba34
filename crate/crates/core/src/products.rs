//! Linear potential problems `calL u = rhs` and the Gram matrices of the
//! projection directions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::eigen::Eigenpair;
use crate::error::{Error, Result};
use crate::linops::{LinearOperator, Sector, Sign};
use crate::model::{Dimension, Nonlinearity};
use crate::odecore::{
    inner_product, integrate_pieces, solve_bvp, BvpOptions, BvpSystem, OdeError, Profile, Weight,
};
use crate::soliton::{weight_for, SolitonData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductOptions {
    pub tol: f64,
    pub abs_tol: f64,
    pub max_nodes: usize,
}

impl ProductOptions {
    pub fn for_dimension(dimension: Dimension) -> Self {
        match dimension {
            Dimension::Three => ProductOptions {
                tol: 1e-12,
                abs_tol: 0.0,
                max_nodes: 40_000,
            },
            Dimension::One => ProductOptions {
                tol: 1e-10,
                abs_tol: 1e-8,
                max_nodes: 40_000,
            },
        }
    }

    fn bvp(&self) -> BvpOptions {
        BvpOptions {
            tol: self.tol,
            abs_tol: self.abs_tol,
            max_nodes: self.max_nodes,
            ..Default::default()
        }
    }
}

/// The point-transformed problem for `W = u / r^k`:
/// `W'' = -(drift / r) W' + c(r) W - rhs(r) / r^k`.
struct PotentialSystem<'a> {
    op: &'a LinearOperator,
    rhs: &'a Profile,
    k: i32,
    drift: f64,
    odd: bool,
    far: FarField,
}

#[derive(Clone, Copy)]
enum FarField {
    /// `W' + (alpha / r_max) W = 0`.
    Robin(f64),
    /// `u'(x_max) = 0`.
    Neumann,
}

impl PotentialSystem<'_> {
    fn reduced_rhs(&self, r: f64) -> f64 {
        let end = self.rhs.r_max();
        match self.k {
            0 => {
                if r <= end {
                    self.rhs.eval(0, r)
                } else {
                    0.0
                }
            }
            1 if r == 0.0 => self.rhs.eval_deriv(0, 0.0),
            k => {
                if r > end {
                    return 0.0;
                }
                let s = r.max(1e-6);
                self.rhs.eval(0, s) / s.powi(k)
            }
        }
    }
}

impl BvpSystem for PotentialSystem<'_> {
    fn order(&self) -> usize {
        2
    }
    fn singular_term(&self) -> Option<Vec<f64>> {
        (self.drift != 0.0).then(|| vec![0.0, 0.0, 0.0, -self.drift])
    }
    fn rhs(&self, r: f64, y: &[f64], _p: &[f64], f: &mut [f64]) {
        f[0] = y[1];
        f[1] = self.op.coefficient(r) * y[0] - self.reduced_rhs(r);
    }
    fn jacobian(&self, r: f64, _y: &[f64], _p: &[f64], dfdy: &mut [f64], _dfdp: &mut [f64]) {
        dfdy.copy_from_slice(&[0.0, 1.0, self.op.coefficient(r), 0.0]);
    }
    fn left_bc_count(&self) -> usize {
        1
    }
    fn left_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = if self.odd { y[0] } else { y[1] };
    }
    fn right_bc(&self, y: &[f64], _p: &[f64], res: &mut [f64]) {
        res[0] = match self.far {
            FarField::Robin(alpha) => y[1] + alpha * y[0],
            FarField::Neumann => y[1],
        };
    }
}

/// Solves `op u = rhs` on the mesh of `op`'s potential and returns `(u, u')`.
///
/// Origin: `u'(0) = 0` (even, `k = 0`), `u(0) = 0` (odd) or `W'(0) = 0` for
/// `u = r^k W`. Far field: `u' + ((k+1)/r) u = 0` (3D), `u' = 0` (1D).
pub fn solve_potential_bvp(op: &LinearOperator, rhs: &Profile, opts: &ProductOptions) -> Result<Profile> {
    let mesh = op.potential.mesh().clone();
    let r_max = mesh.r_max();
    let k = op.sector.degree() as i32;
    let (drift, far) = match op.dimension {
        Dimension::Three => {
            let drift = op.transformed_drift();
            (drift, FarField::Robin((2 * k + 1) as f64 / r_max))
        }
        Dimension::One => (0.0, FarField::Neumann),
    };
    let sys = PotentialSystem {
        op,
        rhs,
        k,
        drift,
        odd: op.sector == Sector::Odd,
        far,
    };
    let guess = Profile::zero(mesh);
    let sol = solve_bvp(&sys, &guess, &[], &opts.bvp()).map_err(|e| match e {
        OdeError::SingularMatrix { pivot_ratio } => Error::NearSingularOperator { pivot_ratio },
        other => Error::Ode(other),
    })?;
    let w = sol.profile;
    if k == 0 {
        return Ok(w);
    }
    let mesh = w.mesh().clone();
    let kf = k as f64;
    let mut values = Vec::with_capacity(2 * mesh.len());
    let mut derivs = Vec::with_capacity(2 * mesh.len());
    for (i, &r) in mesh.nodes().iter().enumerate() {
        let (a, b) = (w.value_at_node(i, 0), w.value_at_node(i, 1));
        let c = w.deriv_at_node(i, 1);
        let p = |j: i32| if j < 0 { 0.0 } else { r.powi(j) };
        let u = p(k) * a;
        let du = kf * p(k - 1) * a + p(k) * b;
        let d2u = kf * (kf - 1.0) * p(k - 2) * a + 2.0 * kf * p(k - 1) * b + p(k) * c;
        values.extend_from_slice(&[u, du]);
        derivs.extend_from_slice(&[du, d2u]);
    }
    Ok(Profile::new(mesh, 2, values, derivs)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct GramData {
    pub tag: String,
    pub rhs_labels: Vec<String>,
    #[serde(skip)]
    pub solutions: Vec<Profile>,
    /// `gram[i][j] = <rhs_i, u_j>`.
    pub gram: Vec<Vec<f64>>,
    pub consistency_error: f64,
    /// Relative gap between `<op u_j, u_j>` by direct application and
    /// `<rhs_j, u_j>`.
    pub two_way_error: f64,
    pub ratios: BTreeMap<String, f64>,
    /// Two directions that are numerically dependent.
    pub degenerate: bool,
}

impl GramData {
    pub fn ratio(&self, name: &str) -> Option<f64> {
        self.ratios.get(name).copied()
    }
}

/// Solves every BVP of the sector and assembles the Gram matrix and its
/// ratio quantities.
pub fn gram_matrix(
    op: &LinearOperator,
    rhs_list: &[(String, Profile)],
    opts: &ProductOptions,
) -> Result<GramData> {
    let weight = weight_for(op.dimension);
    let solutions: Vec<Profile> = rhs_list
        .iter()
        .map(|(_, rhs)| solve_potential_bvp(op, rhs, opts))
        .collect::<Result<_>>()?;
    let n = rhs_list.len();
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (j, u) in solutions.iter().enumerate() {
            gram[i][j] = inner_product(&rhs_list[i].1, &u.component(0), weight)?;
        }
    }
    let mut consistency_error: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            consistency_error = consistency_error.max((gram[i][j] - gram[j][i]).abs());
        }
    }
    let mut two_way_error: f64 = 0.0;
    for (j, u) in solutions.iter().enumerate() {
        let direct = operator_pairing(op, u, weight);
        let reference = gram[j][j];
        two_way_error = two_way_error.max((direct - reference).abs() / reference.abs().max(1e-300));
    }
    let (ratios, degenerate) = gram_ratios(&gram);
    Ok(GramData {
        tag: op.tag(),
        rhs_labels: rhs_list.iter().map(|(l, _)| l.clone()).collect(),
        solutions,
        gram,
        consistency_error,
        two_way_error,
        ratios,
        degenerate,
    })
}

/// `<op u, u>` with `op u` applied pointwise to the `(u, u')` profile.
pub fn operator_pairing(op: &LinearOperator, u: &Profile, weight: Weight) -> f64 {
    integrate_pieces(u.mesh().nodes(), |r| {
        let (a, b, c) = (u.eval(0, r), u.eval(1, r), u.eval_deriv(1, r));
        weight.density(r) * op.apply_jet(r, a, b, c) * a
    })
}

/// Ratio quantities of a symmetric 1x1 or 2x2 Gram matrix (the off-diagonal
/// entry is symmetrized).
pub fn gram_ratios(gram: &[Vec<f64>]) -> (BTreeMap<String, f64>, bool) {
    let mut out = BTreeMap::new();
    let mut degenerate = false;
    match gram.len() {
        1 => {
            out.insert("g11".to_string(), gram[0][0]);
        }
        2 => {
            let (g11, g22) = (gram[0][0], gram[1][1]);
            let g12 = 0.5 * (gram[0][1] + gram[1][0]);
            let det = g11 * g22 - g12 * g12;
            let scale = (g11 * g22).abs().max(g12 * g12);
            if det.abs() <= 1e-12 * scale {
                degenerate = true;
            }
            let tr = g11 + g22;
            let disc = ((g11 - g22).powi(2) + 4.0 * g12 * g12).sqrt();
            out.insert("g11".to_string(), g11);
            out.insert("g22".to_string(), g22);
            out.insert("g12".to_string(), g12);
            out.insert("det".to_string(), det);
            out.insert("det_over_g22".to_string(), det / g22);
            out.insert("det_over_g11".to_string(), det / g11);
            out.insert("eig_min".to_string(), 0.5 * (tr - disc));
            out.insert("eig_max".to_string(), 0.5 * (tr + disc));
        }
        _ => {}
    }
    (out, degenerate)
}

fn scalar_profile(soliton: &SolitonData, f: impl Fn(f64, f64, f64, f64) -> (f64, f64)) -> Profile {
    let p = &soliton.profile;
    let mesh = p.mesh().clone();
    let mut values = Vec::with_capacity(mesh.len());
    let mut derivs = Vec::with_capacity(mesh.len());
    for (i, &r) in mesh.nodes().iter().enumerate() {
        let (v, d) = f(r, p.value_at_node(i, 0), p.value_at_node(i, 1), p.deriv_at_node(i, 1));
        values.push(v);
        derivs.push(d);
    }
    Profile::new(mesh, 1, values, derivs).expect("sizes match")
}

/// Projection directions of the sector, labelled. Sectors whose index is 0
/// get an empty set.
pub fn sector_rhs_set(
    soliton: &SolitonData,
    eigenpair: Option<&Eigenpair>,
    sign: Sign,
    sector: Sector,
) -> Result<Vec<(String, Profile)>> {
    let spec = &soliton.spec;
    sector.check(spec.dimension)?;
    let need_phi = || {
        eigenpair.ok_or_else(|| Error::InvalidInput(format!("sector {} needs the eigenpair", sector.label())))
    };
    let big_r = || scalar_profile(soliton, |_, u, du, _| (u, du));
    let x_r = || scalar_profile(soliton, |r, u, du, _| (r * u, u + r * du));
    let domega = || -> Profile {
        match spec.nonlinearity {
            // (1/sigma) R + r R'
            Nonlinearity::Power { sigma } => {
                scalar_profile(soliton, |r, u, du, d2u| (u / sigma + r * du, du / sigma + du + r * d2u))
            }
            Nonlinearity::CubicQuintic { .. } => soliton.domega.component(0),
        }
    };
    Ok(match (sign, sector) {
        (Sign::Plus, Sector::Harmonic(0)) | (Sign::Plus, Sector::Even) => {
            vec![("R".into(), big_r()), ("phi2".into(), need_phi()?.phi2.component(0))]
        }
        (Sign::Minus, Sector::Harmonic(0)) | (Sign::Minus, Sector::Even) => {
            vec![("dOmegaR".into(), domega()), ("phi1".into(), need_phi()?.phi1.component(0))]
        }
        (Sign::Plus, Sector::Harmonic(1)) => vec![("rR".into(), x_r())],
        (Sign::Plus, Sector::Odd) => vec![("xR".into(), x_r())],
        _ => Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_of_known_matrix() {
        let (r, deg) = gram_ratios(&[vec![2.0, 1.0], vec![1.0, -3.0]]);
        assert!(!deg);
        assert_eq!(r["det"], -7.0);
        assert_eq!(r["det_over_g22"], 7.0 / 3.0);
        assert_eq!(r["det_over_g11"], -3.5);
        let tr = r["eig_min"] + r["eig_max"];
        assert!((tr + 1.0).abs() < 1e-14);
        assert!((r["eig_min"] * r["eig_max"] + 7.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_direction_is_degenerate() {
        let (r, deg) = gram_ratios(&[vec![1.5, 1.5], vec![1.5, 1.5]]);
        assert!(deg);
        assert_eq!(r["det"], 0.0);
    }
}
