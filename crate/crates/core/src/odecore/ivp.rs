//! Adaptive Dormand-Prince 5(4) integration of scalar second-order equations
//! `u'' = g(r, u, u')`, with quintic Hermite dense output built from
//! `(u, u', u'')` at the accepted steps.

use super::OdeError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvpOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step; keeps the sample spacing fine enough for root scans.
    pub max_step: f64,
    /// Initial step; 0 picks one from the starting point.
    pub initial_step: f64,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.5,
            initial_step: 0.0,
        }
    }
}

impl IvpOptions {
    pub fn with_tol(tol: f64) -> Self {
        IvpOptions {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }
}

/// Accepted samples of an integrated scalar solution with dense output.
#[derive(Debug, Clone, PartialEq)]
pub struct IvpTrajectory {
    r: Vec<f64>,
    u: Vec<f64>,
    du: Vec<f64>,
    d2u: Vec<f64>,
}

impl IvpTrajectory {
    /// Builds a trajectory from samples `(r, u, u', u'')`.
    pub fn from_samples(
        r: Vec<f64>,
        u: Vec<f64>,
        du: Vec<f64>,
        d2u: Vec<f64>,
    ) -> Result<Self, OdeError> {
        let n = r.len();
        if n < 2 || u.len() != n || du.len() != n || d2u.len() != n {
            return Err(OdeError::InvalidInput("trajectory needs matching samples".into()));
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OdeError::InvalidInput("sample points must increase".into()));
        }
        Ok(IvpTrajectory { r, u, du, d2u })
    }

    pub fn has_dense_output(&self) -> bool {
        true
    }

    pub fn samples(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.du
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.d2u
    }

    pub fn r_start(&self) -> f64 {
        self.r[0]
    }

    pub fn r_end(&self) -> f64 {
        *self.r.last().unwrap()
    }

    fn locate(&self, r: f64) -> usize {
        let i = self.r.partition_point(|&x| x <= r);
        i.saturating_sub(1).min(self.r.len() - 2)
    }

    /// Dense `(u, u')` at `r`; exact at the samples.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let i = self.locate(r);
        if r == self.r[i] {
            return (self.u[i], self.du[i]);
        }
        if r == self.r[i + 1] {
            return (self.u[i + 1], self.du[i + 1]);
        }
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let (t4, t5) = (t3 * t, t3 * t2);
        let (u0, v0, a0) = (self.u[i], h * self.du[i], h * h * self.d2u[i]);
        let (u1, v1, a1) = (self.u[i + 1], h * self.du[i + 1], h * h * self.d2u[i + 1]);
        let u = (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5) * u0
            + (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5) * v0
            + (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) * a0
            + (10.0 * t3 - 15.0 * t4 + 6.0 * t5) * u1
            + (-4.0 * t3 + 7.0 * t4 - 3.0 * t5) * v1
            + (0.5 * t3 - t4 + 0.5 * t5) * a1;
        let du = ((-30.0 * t2 + 60.0 * t3 - 30.0 * t4) * (u0 - u1)
            + (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4) * v0
            + (t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4) * a0
            + (-12.0 * t2 + 28.0 * t3 - 15.0 * t4) * v1
            + (1.5 * t2 - 4.0 * t3 + 2.5 * t4) * a1)
            / h;
        (u, du)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Applies `u -> c(r) u` style transformations sample by sample.
    pub fn map_samples(&self, f: impl Fn(f64, f64, f64, f64) -> (f64, f64, f64)) -> IvpTrajectory {
        let mut out = self.clone();
        for i in 0..self.r.len() {
            let (u, du, d2u) = f(self.r[i], self.u[i], self.du[i], self.d2u[i]);
            out.u[i] = u;
            out.du[i] = du;
            out.d2u[i] = d2u;
        }
        out
    }

    /// Prepends a sample at a smaller `r` (used to attach an origin value).
    pub fn prepend(&mut self, r: f64, u: f64, du: f64, d2u: f64) -> Result<(), OdeError> {
        if !(r < self.r[0]) {
            return Err(OdeError::InvalidInput("prepended sample must precede the start".into()));
        }
        self.r.insert(0, r);
        self.u.insert(0, u);
        self.du.insert(0, du);
        self.d2u.insert(0, d2u);
        Ok(())
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `u'' = g(r, u, u')` from `(r0, u0, du0)` to `r_max`.
pub fn integrate_ivp(
    g: impl Fn(f64, f64, f64) -> f64,
    r0: f64,
    u0: f64,
    du0: f64,
    r_max: f64,
    opts: &IvpOptions,
) -> Result<IvpTrajectory, OdeError> {
    if !(r_max > r0) || r0 < 0.0 {
        return Err(OdeError::InvalidInput(format!(
            "integration span [{r0}, {r_max}] is empty or starts below 0"
        )));
    }
    let rhs = |r: f64, y: [f64; 2]| [y[1], g(r, y[0], y[1])];
    let mut r = r0;
    let mut y = [u0, du0];
    let mut k1 = rhs(r, y);
    let mut traj = IvpTrajectory {
        r: vec![r],
        u: vec![y[0]],
        du: vec![y[1]],
        d2u: vec![k1[1]],
    };
    let span = r_max - r0;
    let mut h = if opts.initial_step > 0.0 {
        opts.initial_step
    } else if r0 > 0.0 {
        0.01 * r0
    } else {
        1e-6
    }
    .min(opts.max_step)
    .min(span);
    let mut prev_err: f64 = 1e-4;
    let mut rejected_last = false;
    while r < r_max {
        let last = r + h >= r_max - 1e-14 * r_max.abs().max(1.0);
        if last {
            h = r_max - r;
        }
        if h <= 1e-14 * r.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { r });
        }
        let mut k = [[0.0f64; 2]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    ys[0] += h * a * kj[0];
                    ys[1] += h * a * kj[1];
                }
            }
            k[s] = rhs(r + C[s] * h, ys);
        }
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            y_new[0] += h * A[6][j] * kj[0];
            y_new[1] += h * A[6][j] * kj[1];
        }
        let mut err_sq = 0.0;
        for c in 0..2 {
            let e: f64 = h * (0..7).map(|j| E[j] * k[j][c]).sum::<f64>();
            let sc = opts.atol + opts.rtol * y[c].abs().max(y_new[c].abs());
            err_sq += (e / sc).powi(2);
        }
        let err = (0.5 * err_sq).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            rejected_last = true;
            continue;
        }
        if err <= 1.0 {
            r = if last { r_max } else { r + h };
            y = y_new;
            k1 = k[6];
            traj.r.push(r);
            traj.u.push(y[0]);
            traj.du.push(y[1]);
            traj.d2u.push(k1[1]);
            // PI step control (Gustafsson).
            let mut fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * prev_err.powf(0.4 / 5.0);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            prev_err = err.max(1e-4);
            rejected_last = false;
            h = (h * fac).min(opts.max_step);
        } else {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected_last = true;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_solution() {
        let t = integrate_ivp(|_, _, _| 0.0, 0.0, 1.0, 0.0, 10.0, &IvpOptions::default()).unwrap();
        assert!(t.values().iter().all(|&u| u == 1.0));
        assert_eq!(t.r_end(), 10.0);
    }

    #[test]
    fn decaying_exponential() {
        let opts = IvpOptions::with_tol(1e-13);
        let t = integrate_ivp(|_, u, _| u, 0.0, 1.0, -1.0, 5.0, &opts).unwrap();
        let u5 = t.value(5.0);
        assert!((u5 - (-5.0f64).exp()).abs() < 1e-10 * 5.0f64.exp());
    }

    #[test]
    fn dense_output_matches_samples_and_sine() {
        let t = integrate_ivp(|_, u, _| -u, 0.0, 0.0, 1.0, 10.0 * PI, &IvpOptions::with_tol(1e-12))
            .unwrap();
        for (i, &r) in t.samples().iter().enumerate() {
            assert_eq!(t.eval(r).0, t.values()[i]);
        }
        for &r in &[0.123, 1.7, 5.55, 20.02] {
            let (u, du) = t.eval(r);
            assert!((u - r.sin()).abs() < 1e-9);
            assert!((du - r.cos()).abs() < 1e-8);
        }
    }
}
