use super::{merge_breakpoints, IvpTrajectory, OdeError, Profile};

/// 7-point Gauss-Legendre rule on `[-1, 1]` as `(node, weight)` pairs.
pub const GAUSS7: [(f64, f64); 7] = [
    (-0.949_107_912_342_758_5, 0.129_484_966_168_869_7),
    (-0.741_531_185_599_394_4, 0.279_705_391_489_276_7),
    (-0.405_845_151_377_397_2, 0.381_830_050_505_118_9),
    (0.0, 0.417_959_183_673_469_4),
    (0.405_845_151_377_397_2, 0.381_830_050_505_118_9),
    (0.741_531_185_599_394_4, 0.279_705_391_489_276_7),
    (0.949_107_912_342_758_5, 0.129_484_966_168_869_7),
];

/// Measure used for radial inner products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Weight {
    /// `dx` on the half line, doubled to stand for the whole line.
    Line,
    /// `r^2 dr` (angular factor omitted).
    Radial3D,
}

impl Weight {
    pub fn density(self, r: f64) -> f64 {
        match self {
            Weight::Line => 2.0,
            Weight::Radial3D => r * r,
        }
    }
}

/// A scalar function with a piecewise-smooth representation on `[0, r_end]`.
pub trait Interpolant {
    fn breakpoints(&self) -> &[f64];
    fn value(&self, r: f64) -> f64;

    fn span_end(&self) -> f64 {
        *self.breakpoints().last().unwrap()
    }
}

impl Interpolant for Profile {
    fn breakpoints(&self) -> &[f64] {
        self.mesh().nodes()
    }
    fn value(&self, r: f64) -> f64 {
        self.eval(0, r)
    }
}

impl Interpolant for IvpTrajectory {
    fn breakpoints(&self) -> &[f64] {
        self.samples()
    }
    fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }
}

/// Sum of 7-point Gauss-Legendre rules over consecutive breakpoints.
pub fn integrate_pieces(breakpoints: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        let mid = 0.5 * (w[1] + w[0]);
        let mut piece = 0.0;
        for &(x, wt) in &GAUSS7 {
            piece += wt * f(mid + half * x);
        }
        total += half * piece;
    }
    total
}

/// Weighted `<a, b>` over the common span, integrating the interpolants on
/// the merged breakpoints so each piece is polynomial.
pub fn inner_product(
    a: &(impl Interpolant + ?Sized),
    b: &(impl Interpolant + ?Sized),
    weight: Weight,
) -> Result<f64, OdeError> {
    let (ea, eb) = (a.span_end(), b.span_end());
    if (ea - eb).abs() > 1e-9 * ea.abs().max(eb.abs()).max(1.0)
        || a.breakpoints()[0] != b.breakpoints()[0]
    {
        return Err(OdeError::SpanMismatch { left: ea, right: eb });
    }
    let pts = merge_breakpoints(a.breakpoints(), b.breakpoints());
    Ok(integrate_pieces(&pts, |r| {
        weight.density(r) * (a.value(r) * b.value(r))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::odecore::Mesh;

    #[test]
    fn radial_exponential() {
        let mesh = Mesh::uniform(60.0, 6001).unwrap();
        let p = Profile::scalar_from_fn(mesh, |r| ((-r).exp(), -(-r).exp()));
        let v = inner_product(&p, &p, Weight::Radial3D).unwrap();
        assert!((v - 0.25).abs() < 1e-10, "{v}");
    }

    #[test]
    fn line_sech() {
        let mesh = Mesh::uniform(40.0, 20001).unwrap();
        let p = Profile::scalar_from_fn(mesh, |x| {
            let s = 1.0 / x.cosh();
            (s, -s * x.tanh())
        });
        let v = inner_product(&p, &p, Weight::Line).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_factor_and_span_mismatch() {
        let one = Profile::scalar_from_fn(Mesh::uniform(5.0, 11).unwrap(), |_| (1.0, 0.0));
        let zero = Profile::scalar_from_fn(Mesh::uniform(5.0, 7).unwrap(), |_| (0.0, 0.0));
        assert_eq!(inner_product(&one, &zero, Weight::Line).unwrap(), 0.0);
        let short = Profile::scalar_from_fn(Mesh::uniform(4.0, 7).unwrap(), |_| (1.0, 0.0));
        assert!(matches!(
            inner_product(&one, &short, Weight::Radial3D),
            Err(OdeError::SpanMismatch { .. })
        ));
    }
}
