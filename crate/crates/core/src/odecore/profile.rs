use super::{Mesh, OdeError};

/// Piecewise cubic Hermite representation of one or more solution
/// components on a mesh.
///
/// Values and first derivatives are stored at every node (node-major).
/// Scalar second-order quantities are conventionally stored as two
/// components `(u, u')`, so that the interpolant of component 1 carries
/// `u''` as its derivative data.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    mesh: Mesh,
    ncomp: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// Interpolation order of [`Profile`] (cubic Hermite).
pub const PROFILE_ORDER: usize = 4;

impl Profile {
    pub fn new(
        mesh: Mesh,
        ncomp: usize,
        values: Vec<f64>,
        derivs: Vec<f64>,
    ) -> Result<Self, OdeError> {
        let expected = mesh.len() * ncomp;
        if ncomp == 0 || values.len() != expected || derivs.len() != expected {
            return Err(OdeError::InvalidInput(format!(
                "profile with {} nodes and {} components needs {} values and derivatives, got {} and {}",
                mesh.len(),
                ncomp,
                expected,
                values.len(),
                derivs.len()
            )));
        }
        Ok(Profile {
            mesh,
            ncomp,
            values,
            derivs,
        })
    }

    /// Single-component profile sampled from a function returning `(u, u')`.
    pub fn scalar_from_fn(mesh: Mesh, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (values, derivs) = mesh.nodes().iter().map(|&r| f(r)).unzip();
        Profile {
            mesh,
            ncomp: 1,
            values,
            derivs,
        }
    }

    /// Two-component `(u, u')` profile sampled from a function returning
    /// `(u, u', u'')`.
    pub fn second_order_from_fn(mesh: Mesh, f: impl Fn(f64) -> (f64, f64, f64)) -> Self {
        let mut values = Vec::with_capacity(2 * mesh.len());
        let mut derivs = Vec::with_capacity(2 * mesh.len());
        for &r in mesh.nodes() {
            let (u, du, d2u) = f(r);
            values.extend_from_slice(&[u, du]);
            derivs.extend_from_slice(&[du, d2u]);
        }
        Profile {
            mesh,
            ncomp: 2,
            values,
            derivs,
        }
    }

    /// The zero function as a `(u, u')` profile.
    pub fn zero(mesh: Mesh) -> Self {
        let n = 2 * mesh.len();
        Profile {
            mesh,
            ncomp: 2,
            values: vec![0.0; n],
            derivs: vec![0.0; n],
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    pub fn r_max(&self) -> f64 {
        self.mesh.r_max()
    }

    pub fn value_at_node(&self, node: usize, comp: usize) -> f64 {
        self.values[node * self.ncomp + comp]
    }

    pub fn deriv_at_node(&self, node: usize, comp: usize) -> f64 {
        self.derivs[node * self.ncomp + comp]
    }

    pub fn node_values(&self, comp: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(comp).step_by(self.ncomp).copied()
    }

    pub fn node_derivs(&self, comp: usize) -> impl Iterator<Item = f64> + '_ {
        self.derivs.iter().skip(comp).step_by(self.ncomp).copied()
    }

    fn coefficients(&self, comp: usize, r: f64) -> (f64, f64, f64, f64, f64, f64) {
        let i = self.mesh.locate(r);
        let nodes = self.mesh.nodes();
        let (a, b) = (nodes[i], nodes[i + 1]);
        let h = b - a;
        let t = (r - a) / h;
        let k0 = i * self.ncomp + comp;
        let k1 = k0 + self.ncomp;
        (
            t,
            h,
            self.values[k0],
            self.derivs[k0],
            self.values[k1],
            self.derivs[k1],
        )
    }

    /// Interpolated value of component `comp` at `r`. Outside the span the end
    /// cubic is extrapolated; callers decide what is meaningful there.
    pub fn eval(&self, comp: usize, r: f64) -> f64 {
        let (t, h, y0, d0, y1, d1) = self.coefficients(comp, r);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (3.0 * t2 - 2.0 * t3) * y1
            + (t3 - t2) * h * d1
    }

    /// Derivative of the interpolant of component `comp`.
    pub fn eval_deriv(&self, comp: usize, r: f64) -> f64 {
        let (t, h, y0, d0, y1, d1) = self.coefficients(comp, r);
        let t2 = t * t;
        6.0 * (t2 - t) / h * (y0 - y1) + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1
    }

    /// Second derivative of the cubic interpolant of component `comp`.
    pub fn eval_second_deriv(&self, comp: usize, r: f64) -> f64 {
        let (t, h, y0, d0, y1, d1) = self.coefficients(comp, r);
        (12.0 * t - 6.0) / (h * h) * (y0 - y1) + ((6.0 * t - 4.0) * d0 + (6.0 * t - 2.0) * d1) / h
    }

    /// `(u, u', u'')` of the scalar function this profile represents: for
    /// `(u, u')` profiles `u''` comes from the interpolant of `u'`.
    pub fn function_jet(&self, r: f64) -> (f64, f64, f64) {
        if self.ncomp >= 2 {
            (self.eval(0, r), self.eval(1, r), self.eval_deriv(1, r))
        } else {
            (self.eval(0, r), self.eval_deriv(0, r), self.eval_second_deriv(0, r))
        }
    }

    /// Single-component view of component `comp`.
    pub fn component(&self, comp: usize) -> Profile {
        Profile {
            mesh: self.mesh.clone(),
            ncomp: 1,
            values: self.node_values(comp).collect(),
            derivs: self.node_derivs(comp).collect(),
        }
    }

    /// Re-samples the interpolant on another mesh.
    pub fn resample(&self, mesh: &Mesh) -> Profile {
        let mut values = Vec::with_capacity(mesh.len() * self.ncomp);
        let mut derivs = Vec::with_capacity(mesh.len() * self.ncomp);
        for &r in mesh.nodes() {
            for c in 0..self.ncomp {
                values.push(self.eval(c, r));
                derivs.push(self.eval_deriv(c, r));
            }
        }
        Profile {
            mesh: mesh.clone(),
            ncomp: self.ncomp,
            values,
            derivs,
        }
    }

    /// `a * self + b * other`, both on the same mesh.
    pub fn linear_combination(&self, a: f64, other: &Profile, b: f64) -> Result<Profile, OdeError> {
        if self.mesh != other.mesh || self.ncomp != other.ncomp {
            return Err(OdeError::SpanMismatch {
                left: self.r_max(),
                right: other.r_max(),
            });
        }
        let combine = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
        };
        Ok(Profile {
            mesh: self.mesh.clone(),
            ncomp: self.ncomp,
            values: combine(&self.values, &other.values),
            derivs: combine(&self.derivs, &other.derivs),
        })
    }

    pub fn scaled(&self, c: f64) -> Profile {
        Profile {
            mesh: self.mesh.clone(),
            ncomp: self.ncomp,
            values: self.values.iter().map(|v| c * v).collect(),
            derivs: self.derivs.iter().map(|v| c * v).collect(),
        }
    }

    /// Largest nodal magnitude of component `comp`.
    pub fn max_abs(&self, comp: usize) -> f64 {
        self.node_values(comp).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance between component 0 of two profiles, sampled on the
    /// union of both meshes plus interval midpoints.
    pub fn sup_distance(&self, other: &Profile) -> f64 {
        let pts = self.mesh.union(&other.mesh);
        let mut worst: f64 = 0.0;
        for w in pts.windows(2) {
            for r in [w[0], 0.5 * (w[0] + w[1])] {
                worst = worst.max((self.eval(0, r) - other.eval(0, r)).abs());
            }
        }
        let r = *pts.last().unwrap();
        worst.max((self.eval(0, r) - other.eval(0, r)).abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduced_exactly() {
        let mesh = Mesh::uniform(2.0, 5).unwrap();
        let p = Profile::scalar_from_fn(mesh, |r| (r * r * r - r, 3.0 * r * r - 1.0));
        for &r in &[0.1, 0.77, 1.3, 1.99] {
            assert!((p.eval(0, r) - (r * r * r - r)).abs() < 1e-13);
            assert!((p.eval_deriv(0, r) - (3.0 * r * r - 1.0)).abs() < 1e-12);
            assert!((p.eval_second_deriv(0, r) - 6.0 * r).abs() < 1e-11);
        }
    }

    #[test]
    fn second_order_jet_uses_derivative_component() {
        let mesh = Mesh::uniform(3.0, 301).unwrap();
        let p = Profile::second_order_from_fn(mesh, |r| (r.sin(), r.cos(), -r.sin()));
        let (u, du, d2u) = p.function_jet(1.234);
        assert!((u - 1.234f64.sin()).abs() < 1e-9);
        assert!((du - 1.234f64.cos()).abs() < 1e-9);
        assert!((d2u + 1.234f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn rejects_inconsistent_lengths() {
        let mesh = Mesh::uniform(1.0, 3).unwrap();
        assert!(Profile::new(mesh, 2, vec![0.0; 6], vec![0.0; 5]).is_err());
    }
}
