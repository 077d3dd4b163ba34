//! Sturm-type index functions: the number of positive roots of the
//! zero-energy solution equals the number of negative eigenvalues of the
//! sector operator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{LinearOperator, Sector};
use crate::model::Dimension;
use crate::odecore::{bisect, integrate_ivp, IvpOptions, IvpTrajectory};

/// Roots closer than this to the start of the span are the initial zero of
/// an odd solution, not sign changes.
const ORIGIN_EXCLUSION: f64 = 1e-8;
const ROOT_TOL: f64 = 1e-10;
const TANGENTIAL: f64 = 1e-9;
/// Largest acceptable condition number of the column-scaled fit basis.
const FIT_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexOptions {
    pub tol: f64,
    /// Integration span; `None` picks 200 (3D) or 100 (1D).
    pub span: Option<f64>,
    /// Starting radius of the 3D series start.
    pub epsilon: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            tol: 1e-13,
            span: None,
            epsilon: 1e-6,
        }
    }
}

impl IndexOptions {
    pub fn span_for(&self, dimension: Dimension) -> f64 {
        self.span.unwrap_or(match dimension {
            Dimension::Three => 200.0,
            Dimension::One => 100.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub c0: f64,
    pub c1: f64,
    /// Root of the fitted asymptote, if it has one (may be negative).
    pub asymptote_root: Option<f64>,
    pub farfield_clear: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootScan {
    pub locations: Vec<f64>,
    /// Near-zeros of `|U|` without a sign change.
    pub tangential: Vec<f64>,
}

impl RootScan {
    pub fn count(&self) -> usize {
        self.locations.len()
    }
}

#[derive(Debug, Clone)]
pub struct IndexReport {
    pub tag: String,
    pub sector: Sector,
    pub trajectory: IvpTrajectory,
    pub root_count: usize,
    pub root_locations: Vec<f64>,
    pub c0: f64,
    pub c1: f64,
    pub asymptote_root: Option<f64>,
    pub farfield_clear: bool,
    pub delta0_used: f64,
    pub warnings: Vec<String>,
}

impl IndexReport {
    /// The report, or `Uncertified` if the far-field fit admits a root
    /// beyond the integration window.
    pub fn certified(self) -> Result<Self> {
        if self.farfield_clear {
            Ok(self)
        } else {
            Err(Error::Uncertified {
                sector: self.tag.clone(),
                root: self.asymptote_root.unwrap_or(f64::NAN),
            })
        }
    }
}

/// Integrates the zero-energy equation of `op` from the origin.
///
/// 1D: `U'' = c(x) U` with even `(1, 0)` or odd `(0, 1)` data at 0.
/// 3D: the point-transformed `W'' = -((2 + 2k)/r) W' + c(r) W` from
/// `W(eps) = 1`, `W'(eps) = 0`, reported as `U = r^k W` with an origin sample
/// attached.
pub fn compute_index_function(op: &LinearOperator, opts: &IndexOptions) -> Result<IvpTrajectory> {
    let span = opts.span_for(op.dimension);
    let ivp = IvpOptions::with_tol(opts.tol);
    match op.dimension {
        Dimension::One => {
            let (u0, du0) = match op.sector {
                Sector::Odd => (0.0, 1.0),
                _ => (1.0, 0.0),
            };
            Ok(integrate_ivp(|x, u, _| op.coefficient(x) * u, 0.0, u0, du0, span, &ivp)?)
        }
        Dimension::Three => {
            let k = op.sector.degree() as i32;
            let drift = op.transformed_drift();
            let eps = opts.epsilon;
            let w = integrate_ivp(
                |r, w, dw| -drift / r * dw + op.coefficient(r) * w,
                eps,
                1.0,
                0.0,
                span,
                &ivp,
            )?;
            let kf = k as f64;
            let mut u = w.map_samples(|r, w, dw, d2w| {
                if k == 0 {
                    return (w, dw, d2w);
                }
                let rk = r.powi(k);
                let rk1 = r.powi(k - 1);
                let rk2 = if k >= 2 { r.powi(k - 2) } else { 0.0 };
                (
                    rk * w,
                    kf * rk1 * w + rk * dw,
                    kf * (kf - 1.0) * rk2 * w + 2.0 * kf * rk1 * dw + rk * d2w,
                )
            });
            // Series at the origin: W = 1 + c(0) r^2 / (2 (1 + drift)) + ...
            let w2 = op.coefficient(0.0) / (1.0 + drift);
            let origin = match k {
                0 => (1.0, 0.0, w2),
                1 => (0.0, 1.0, 0.0),
                2 => (0.0, 0.0, 2.0),
                _ => (0.0, 0.0, 0.0),
            };
            u.prepend(0.0, origin.0, origin.1, origin.2)?;
            Ok(u)
        }
    }
}

/// Locates every sign change of the dense output on `(0, r_end)`, polished
/// by bisection; near-zeros without a sign change become warnings.
pub fn count_positive_roots(traj: &IvpTrajectory) -> RootScan {
    const SUB: usize = 4;
    let r = traj.samples();
    let mut locations = Vec::new();
    let mut tangential = Vec::new();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(r.len() * SUB);
    for w in r.windows(2) {
        for j in 0..SUB {
            let x = w[0] + (w[1] - w[0]) * j as f64 / SUB as f64;
            pts.push((x, traj.value(x)));
        }
    }
    let last = *r.last().unwrap();
    pts.push((last, traj.value(last)));
    let start = r[0];
    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 > start + ORIGIN_EXCLUSION).collect();
    let mut prev: Option<(f64, f64)> = None;
    for (i, &(x, u)) in pts.iter().enumerate() {
        if i > 0 && i + 1 < pts.len() {
            let (a, b) = (pts[i - 1].1, pts[i + 1].1);
            if u.abs() < TANGENTIAL && u.abs() <= a.abs() && u.abs() <= b.abs() && a * b > 0.0 {
                tangential.push(x);
            }
        }
        // Exact zeros on a sample are counted at the next nonzero sample.
        if u == 0.0 {
            continue;
        }
        if let Some((xp, up)) = prev {
            if up * u < 0.0 {
                let root = bisect(|s| traj.value(s), xp, x, ROOT_TOL).unwrap_or(0.5 * (xp + x));
                locations.push(root);
            }
        }
        prev = Some((x, u));
    }
    RootScan { locations, tangential }
}

/// Largest over smallest singular value of a 2x2 matrix.
fn condition_2x2(m: [[f64; 2]; 2]) -> f64 {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let s = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let smax = ((s + disc) / 2.0).sqrt();
    let smin = det / smax.max(f64::MIN_POSITIVE);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Matches `U` at `0.8 r_end` and `r_end` to `C0 r^k + C1 r^{-(k+1)}` (3D) or
/// `C0 + C1 x` (1D).
pub fn fit_asymptotic_constants(traj: &IvpTrajectory, dimension: Dimension, k: u32) -> Result<AsymptoticFit> {
    let r2 = traj.r_end();
    let r1 = 0.8 * r2;
    let basis = |r: f64| -> (f64, f64) {
        match dimension {
            Dimension::Three => (r.powi(k as i32), r.powi(-(k as i32) - 1)),
            Dimension::One => (1.0, r),
        }
    };
    let ((a, b), (c, d)) = (basis(r1), basis(r2));
    let (s0, s1) = (a.abs().max(c.abs()), b.abs().max(d.abs()));
    if !(s0 > 0.0 && s1 > 0.0 && r1 > 0.0) {
        return Err(Error::IllConditionedFit { condition: f64::INFINITY });
    }
    let cond = condition_2x2([[a / s0, b / s1], [c / s0, d / s1]]);
    if !(cond <= FIT_CONDITION_LIMIT) {
        return Err(Error::IllConditionedFit { condition: cond });
    }
    let (u1, u2) = (traj.value(r1), traj.value(r2));
    let det = a * d - b * c;
    let c0 = (u1 * d - b * u2) / det;
    let c1 = (a * u2 - c * u1) / det;
    let asymptote_root = match dimension {
        Dimension::Three => {
            if c0 == 0.0 {
                None
            } else {
                let x = -c1 / c0;
                let p = 1.0 / (2 * k + 1) as f64;
                Some(x.signum() * x.abs().powf(p))
            }
        }
        Dimension::One => (c1 != 0.0).then(|| -c0 / c1),
    };
    let farfield_clear = (c0 != 0.0 || c1 != 0.0) && asymptote_root.is_none_or(|x| x < r1);
    Ok(AsymptoticFit {
        c0,
        c1,
        asymptote_root,
        farfield_clear,
    })
}

/// Index function, root count and far-field certificate for one sector.
pub fn index_of_sector(op: &LinearOperator, opts: &IndexOptions) -> Result<IndexReport> {
    let trajectory = compute_index_function(op, opts)?;
    let scan = count_positive_roots(&trajectory);
    let fit = fit_asymptotic_constants(&trajectory, op.dimension, op.sector.degree())?;
    let mut warnings: Vec<String> = scan
        .tangential
        .iter()
        .map(|r| format!("near-zero of the index function without sign change at r = {r:.6}"))
        .collect();
    if !fit.farfield_clear {
        warnings.push(format!(
            "far-field asymptote has a root at r = {:.4} beyond the fit window",
            fit.asymptote_root.unwrap_or(f64::NAN)
        ));
    }
    Ok(IndexReport {
        tag: op.tag(),
        sector: op.sector,
        root_count: scan.count(),
        root_locations: scan.locations,
        trajectory,
        c0: fit.c0,
        c1: fit.c1,
        asymptote_root: fit.asymptote_root,
        farfield_clear: fit.farfield_clear,
        delta0_used: op.delta0,
        warnings,
    })
}

/// `Ok(true)` if the indexes do not increase with `k`.
pub fn check_monotonicity(indexes_by_k: &[usize]) -> Result<bool> {
    if indexes_by_k.windows(2).any(|w| w[1] > w[0]) {
        Err(Error::MonotonicityViolated {
            indexes: indexes_by_k.to_vec(),
        })
    } else {
        Ok(true)
    }
}
