//! Scalar linearized operators `L+-` and their dilation-distorted
//! counterparts, restricted to a harmonic (3D) or parity (1D) sector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dimension, ProblemSpec};
use crate::odecore::{integrate_pieces, Mesh, Profile};
use crate::soliton::{weight_for, SolitonData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

/// `L` is `-lap + omega + V`; `DistortedL` is `-lap + calV` with the
/// potentials generated by the dilation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    L,
    DistortedL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sector {
    /// Spherical-harmonic degree `k` (3D).
    Harmonic(u32),
    /// Even functions on the line (1D).
    Even,
    /// Odd functions on the line (1D).
    Odd,
}

impl Sector {
    pub fn label(self) -> String {
        match self {
            Sector::Harmonic(k) => format!("k{k}"),
            Sector::Even => "even".to_string(),
            Sector::Odd => "odd".to_string(),
        }
    }

    /// Exponent `k` of the point transformation `u = r^k W` (0 in 1D).
    pub fn degree(self) -> u32 {
        match self {
            Sector::Harmonic(k) => k,
            Sector::Even | Sector::Odd => 0,
        }
    }

    pub fn check(self, dimension: Dimension) -> Result<()> {
        let ok = matches!(
            (self, dimension),
            (Sector::Harmonic(_), Dimension::Three) | (Sector::Even | Sector::Odd, Dimension::One)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::SectorMismatch {
                dimension: dimension.value(),
                sector: self.label(),
            })
        }
    }
}

/// Linearized potentials `V+ = -f - 2 f' R^2`, `V- = -f` as `(V, V')` profiles
/// (one component, derivative data included) on the soliton mesh.
pub fn build_linearized_potentials(spec: &ProblemSpec, soliton: &SolitonData) -> (Profile, Profile) {
    let mesh = soliton.mesh().clone();
    let n = mesh.len();
    let (mut vp, mut dvp, mut vm, mut dvm) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let u = soliton.profile.value_at_node(i, 0);
        let du = soliton.profile.value_at_node(i, 1);
        let lp = spec.nonlinearity.linearized_potentials(u);
        vp.push(lp.plus);
        dvp.push(lp.dplus * du);
        vm.push(lp.minus);
        dvm.push(lp.dminus * du);
    }
    (
        Profile::new(mesh.clone(), 1, vp, dvp).expect("sizes match"),
        Profile::new(mesh, 1, vm, dvm).expect("sizes match"),
    )
}

/// Distorted potentials `calV+ = r (3 f' + 2 f'' R^2) R R'` and
/// `calV- = r f' R R'`, with derivative data, on the soliton mesh.
pub fn build_distorted_potentials(spec: &ProblemSpec, soliton: &SolitonData) -> (Profile, Profile) {
    let mesh = soliton.mesh().clone();
    let n = mesh.len();
    let (mut vp, mut dvp, mut vm, mut dvm) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for (i, &r) in mesh.nodes().iter().enumerate() {
        let u = soliton.profile.value_at_node(i, 0);
        let du = soliton.profile.value_at_node(i, 1);
        let d2u = soliton.profile.deriv_at_node(i, 1);
        let q = spec.nonlinearity.distorted_factors(u);
        vp.push(r * q.plus * du);
        dvp.push(q.plus * du + r * q.dplus * du * du + r * q.plus * d2u);
        vm.push(r * q.minus * du);
        dvm.push(q.minus * du + r * q.dminus * du * du + r * q.minus * d2u);
    }
    (
        Profile::new(mesh.clone(), 1, vp, dvp).expect("sizes match"),
        Profile::new(mesh, 1, vm, dvm).expect("sizes match"),
    )
}

/// Fits `|V(r)| <= C exp(-kappa r)` by least squares on `log |V|` over the
/// last third of the region where `V` is representable. Returns `(C, kappa)`.
pub fn potential_decay_fit(potential: &Profile) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = potential
        .mesh()
        .nodes()
        .iter()
        .zip(potential.node_values(0))
        .filter(|(_, v)| v.abs() > 1e-250)
        .map(|(&r, v)| (r, v.abs().ln()))
        .collect();
    let last_r = pts.last()?.0;
    let tail: Vec<(f64, f64)> = pts.into_iter().filter(|(r, _)| *r >= 2.0 * last_r / 3.0).collect();
    if tail.len() < 3 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    // Shift the intercept so the fitted envelope bounds every tail sample.
    let lift = tail
        .iter()
        .map(|p| p.1 - (my + slope * (p.0 - mx)))
        .fold(f64::NEG_INFINITY, f64::max);
    let c = (my - slope * mx + lift).exp();
    Some((c, -slope))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    pub sign: Sign,
    pub family: Family,
    pub sector: Sector,
    pub dimension: Dimension,
    /// `V` (family L) or `calV` (family DistortedL), one component.
    pub potential: Profile,
    /// Strength of the `-delta0 exp(-|x|)` perturbation.
    pub delta0: f64,
    /// `omega` for family L, 0 for DistortedL.
    pub omega_shift: f64,
}

impl LinearOperator {
    pub fn new(
        potential: Profile,
        sign: Sign,
        family: Family,
        sector: Sector,
        dimension: Dimension,
        omega_shift: f64,
        delta0: f64,
    ) -> Result<Self> {
        sector.check(dimension)?;
        if !(delta0 >= 0.0) {
            return Err(Error::InvalidInput(format!("delta0 must be >= 0, got {delta0}")));
        }
        if potential.ncomp() != 1 {
            return Err(Error::InvalidInput("potential profiles have one component".into()));
        }
        Ok(LinearOperator {
            sign,
            family,
            sector,
            dimension,
            potential,
            delta0,
            omega_shift,
        })
    }

    /// Builds the operator of the given kind for a computed soliton.
    pub fn for_soliton(
        soliton: &SolitonData,
        sign: Sign,
        family: Family,
        sector: Sector,
        delta0: f64,
    ) -> Result<Self> {
        let spec = &soliton.spec;
        let ((plus, minus), shift) = match family {
            Family::L => (build_linearized_potentials(spec, soliton), spec.omega),
            Family::DistortedL => (build_distorted_potentials(spec, soliton), 0.0),
        };
        let potential = match sign {
            Sign::Plus => plus,
            Sign::Minus => minus,
        };
        LinearOperator::new(potential, sign, family, sector, spec.dimension, shift, delta0)
    }

    /// Short tag such as `calL_plus_k0` or `L_minus_even`.
    pub fn tag(&self) -> String {
        let fam = match self.family {
            Family::L => "L",
            Family::DistortedL => "calL",
        };
        format!("{fam}_{}_{}", self.sign.label(), self.sector.label())
    }

    pub fn with_delta0(&self, delta0: f64) -> Result<Self> {
        LinearOperator::new(
            self.potential.clone(),
            self.sign,
            self.family,
            self.sector,
            self.dimension,
            self.omega_shift,
            delta0,
        )
    }

    pub fn d(&self) -> usize {
        self.dimension.value()
    }

    /// Potential value, extended by zero past the sampled span (the
    /// potentials are negligible there).
    pub fn potential_at(&self, r: f64) -> f64 {
        if r <= self.potential.r_max() {
            self.potential.eval(0, r)
        } else {
            0.0
        }
    }

    /// Zero-order coefficient `potential - delta0 e^{-r} + omega_shift`
    /// (centrifugal term excluded).
    pub fn coefficient(&self, r: f64) -> f64 {
        self.potential_at(r) - self.delta0 * (-r.abs()).exp() + self.omega_shift
    }

    /// Centrifugal coefficient `k (k + d - 2)`.
    pub fn centrifugal(&self) -> f64 {
        let k = self.sector.degree() as f64;
        k * (k + self.d() as f64 - 2.0)
    }

    /// `(d - 1 + 2k)`, the first-order coefficient of the point-transformed form.
    pub fn transformed_drift(&self) -> f64 {
        self.d() as f64 - 1.0 + 2.0 * self.sector.degree() as f64
    }

    /// Direct action on a function with jet `(u, u', u'')` at `r`.
    pub fn apply_jet(&self, r: f64, u: f64, du: f64, d2u: f64) -> f64 {
        let dm1 = self.d() as f64 - 1.0;
        let c = self.coefficient(r);
        if r == 0.0 {
            return match (self.dimension, self.sector.degree()) {
                // u'/r -> u''(0) for regular radial functions
                (Dimension::Three, 0) => -(1.0 + dm1) * d2u + c * u,
                (Dimension::Three, _) => 0.0,
                (Dimension::One, _) => -d2u + c * u,
            };
        }
        -d2u - dm1 / r * du + self.centrifugal() / (r * r) * u + c * u
    }

    /// Action of the point-transformed operator on `W` where `u = r^k W`.
    pub fn apply_transformed_jet(&self, r: f64, w: f64, dw: f64, d2w: f64) -> f64 {
        let c = self.coefficient(r);
        if r == 0.0 {
            return -(1.0 + self.transformed_drift()) * d2w + c * w;
        }
        -d2w - self.transformed_drift() / r * dw + c * w
    }

    /// Applies the operator to `u`, sampling on the nodes and midpoints of
    /// `u`'s mesh. Derivative data of the result come from central
    /// differences, so it is meant for residual diagnostics.
    pub fn apply(&self, u: &Profile) -> Profile {
        let mesh = u.mesh().bisected();
        let vals: Vec<f64> = mesh
            .nodes()
            .iter()
            .map(|&r| {
                let (a, b, c) = u.function_jet(r);
                self.apply_jet(r, a, b, c)
            })
            .collect();
        let nodes = mesh.nodes();
        let n = nodes.len();
        let derivs: Vec<f64> = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (vals[b] - vals[a]) / (nodes[b] - nodes[a])
            })
            .collect();
        Profile::new(mesh, 1, vals, derivs).expect("sizes match")
    }

    /// Weighted L2 norm of `op u - target` over the pieces of `u`'s mesh.
    pub fn residual_l2(&self, u: &Profile, target: impl Fn(f64) -> f64) -> f64 {
        let weight = weight_for(self.dimension);
        integrate_pieces(u.mesh().nodes(), |r| {
            let (a, b, c) = u.function_jet(r);
            weight.density(r) * (self.apply_jet(r, a, b, c) - target(r)).powi(2)
        })
        .sqrt()
    }

    /// Largest `|op u - target|` over the nodes and midpoints of `u`'s mesh,
    /// restricted to `r <= r_end`.
    pub fn residual_against(
        &self,
        u: &Profile,
        target: impl Fn(f64) -> f64,
        r_end: f64,
    ) -> f64 {
        let mesh: Mesh = u.mesh().bisected();
        mesh.nodes()
            .iter()
            .filter(|&&r| r <= r_end)
            .map(|&r| {
                let (a, b, c) = u.function_jet(r);
                (self.apply_jet(r, a, b, c) - target(r)).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odecore::Mesh;

    fn zero_op(sector: Sector, dimension: Dimension, delta0: f64) -> LinearOperator {
        let mesh = Mesh::uniform(50.0, 101).unwrap();
        let pot = Profile::scalar_from_fn(mesh, |_| (0.0, 0.0));
        LinearOperator::new(pot, Sign::Plus, Family::DistortedL, sector, dimension, 0.0, delta0)
            .unwrap()
    }

    #[test]
    fn spherical_bessel_is_eigenfunction() {
        let op = zero_op(Sector::Harmonic(0), Dimension::Three, 0.0);
        for &r in &[0.0f64, 0.5, 2.0, 7.3] {
            let (u, du, d2u) = if r == 0.0 {
                (1.0, 0.0, -1.0 / 3.0)
            } else {
                let (s, c) = r.sin_cos();
                (
                    s / r,
                    c / r - s / (r * r),
                    -s / r - 2.0 * c / (r * r) + 2.0 * s / (r * r * r),
                )
            };
            assert!((op.apply_jet(r, u, du, d2u) - u).abs() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn cosine_in_even_sector() {
        let op = zero_op(Sector::Even, Dimension::One, 0.0);
        for &x in &[0.0f64, 1.0, 4.0] {
            assert!((op.apply_jet(x, x.cos(), -x.sin(), -x.cos()) - x.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn sector_mismatch() {
        let mesh = Mesh::uniform(1.0, 3).unwrap();
        let pot = Profile::scalar_from_fn(mesh, |_| (0.0, 0.0));
        let err = LinearOperator::new(
            pot,
            Sign::Minus,
            Family::L,
            Sector::Even,
            Dimension::Three,
            1.0,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SectorMismatch { .. }));
    }

    #[test]
    fn zero_delta0_is_bitwise_unperturbed() {
        let perturbed = zero_op(Sector::Harmonic(1), Dimension::Three, 1e-4);
        let mesh = Mesh::uniform(50.0, 101).unwrap();
        let pot = Profile::scalar_from_fn(mesh, |r| (-(-r).exp() / 3.0, (-r).exp() / 3.0));
        let a = LinearOperator { potential: pot, omega_shift: 0.7, ..perturbed.clone() }
            .with_delta0(0.0)
            .unwrap();
        for &r in &[0.1, 1.0, 10.0, 60.0] {
            let bare = a.potential_at(r) + 0.7;
            assert_eq!(a.coefficient(r).to_bits(), bare.to_bits());
        }
        assert!(perturbed.coefficient(1.0) < 0.0);
    }

    #[test]
    fn point_transformation_matches_direct_form() {
        let mesh = Mesh::uniform(20.0, 201).unwrap();
        let pot = Profile::scalar_from_fn(mesh, |r| ((-r * r).exp() - 0.3, -2.0 * r * (-r * r).exp()));
        for k in 0..4u32 {
            let op = LinearOperator::new(
                pot.clone(),
                Sign::Plus,
                Family::DistortedL,
                Sector::Harmonic(k),
                Dimension::Three,
                0.0,
                1e-4,
            )
            .unwrap();
            let kf = k as f64;
            for &r in &[0.3f64, 1.1, 2.5] {
                // W = (1 + r^2) exp(-r^2 / 2)
                let g = (-0.5 * r * r).exp();
                let w = (1.0 + r * r) * g;
                let dw = (2.0 * r - r * (1.0 + r * r)) * g;
                let d2w = (2.0 - 1.0 - 3.0 * r * r - r * (2.0 * r - r * (1.0 + r * r))) * g;
                let rk = r.powf(kf);
                let u = rk * w;
                let du = kf * r.powf(kf - 1.0) * w + rk * dw;
                let d2u = kf * (kf - 1.0) * r.powf(kf - 2.0) * w
                    + 2.0 * kf * r.powf(kf - 1.0) * dw
                    + rk * d2w;
                let direct = op.apply_jet(r, u, du, d2u);
                let transformed = rk * op.apply_transformed_jet(r, w, dw, d2w);
                assert!(
                    (direct - transformed).abs() < 1e-10 * direct.abs().max(1.0),
                    "k={k} r={r}: {direct} vs {transformed}"
                );
            }
        }
    }
}
