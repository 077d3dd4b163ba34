//! Per-sector positivity decisions, the global spectral-property verdict,
//! parameter thresholds and sweeps.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{solve_unstable_eigenpair, EigenOptions, Eigenpair};
use crate::index::{check_monotonicity, index_of_sector, IndexOptions, IndexReport};
use crate::linops::{build_distorted_potentials, potential_decay_fit, Family, LinearOperator, Sector, Sign};
use crate::model::{Dimension, Nonlinearity, ProblemSpec};
use crate::odecore::{brent_root, BRENT_MAX_EVALUATIONS};
use crate::products::{gram_matrix, sector_rhs_set, GramData, ProductOptions};
use crate::soliton::{slope_value, solve_soliton, SolitonData, SolitonOptions};
use crate::{Error, Result};

pub const DEFAULT_DEGENERACY_REL: f64 = 1e-8;
/// Highest harmonic degree the 3D scan will visit before giving up.
pub const MAX_HARMONIC: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Overrides the soliton domain (default `[0, 100]`).
    pub r_max: Option<f64>,
    /// Overrides the soliton BVP tolerance.
    pub soliton_tol: Option<f64>,
    pub eigen: EigenOptions,
    pub mu_guess: f64,
    pub index: IndexOptions,
    pub products: Option<ProductOptions>,
    pub degeneracy_rel: f64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            r_max: None,
            soliton_tol: None,
            eigen: EigenOptions::default(),
            mu_guess: 1.0,
            index: IndexOptions::default(),
            products: None,
            degeneracy_rel: DEFAULT_DEGENERACY_REL,
        }
    }
}

impl PipelineOptions {
    pub fn soliton_options(&self, spec: &ProblemSpec) -> SolitonOptions {
        let mut o = SolitonOptions::for_spec(spec);
        if let Some(r) = self.r_max {
            o = o.with_r_max(r);
        }
        if let Some(t) = self.soliton_tol {
            o = o.with_tol(t);
        }
        o
    }

    pub fn product_options(&self, spec: &ProblemSpec) -> ProductOptions {
        self.products.unwrap_or_else(|| ProductOptions::for_dimension(spec.dimension))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisiveQuantity {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicVerdict {
    pub tag: String,
    pub sign: Sign,
    pub sector: Sector,
    pub index: usize,
    pub directions: usize,
    pub negative_directions_found: usize,
    pub decisive_quantity: Option<DecisiveQuantity>,
    pub eig_min: Option<f64>,
    pub positive_on_complement: bool,
    pub degenerate: bool,
    pub farfield_clear: bool,
    /// Whether the smallest-eigenvalue test and the ratio test agree; only
    /// defined for two directions with a positive ratio denominator.
    pub ratio_test_agrees: Option<bool>,
    pub reason: Option<String>,
}

/// Gram entry whose sign the classical argument inspects in each sector.
pub fn decisive_name(spec: &ProblemSpec, sign: Sign, sector: Sector) -> Option<&'static str> {
    match (sign, sector) {
        (Sign::Plus, Sector::Harmonic(0)) => Some(match spec.nonlinearity {
            Nonlinearity::Power { .. } => "det_over_g22",
            Nonlinearity::CubicQuintic { .. } => "det_over_g11",
        }),
        (Sign::Minus, Sector::Harmonic(0)) | (Sign::Minus, Sector::Even) => Some("det_over_g22"),
        (Sign::Plus, Sector::Harmonic(1)) | (Sign::Plus, Sector::Odd) => Some("g11"),
        (Sign::Plus, Sector::Even) => Some("g22"),
        _ => None,
    }
}

fn eigenvalues(gram: &[Vec<f64>]) -> Vec<f64> {
    match gram.len() {
        0 => Vec::new(),
        1 => vec![gram[0][0]],
        _ => {
            let (a, d) = (gram[0][0], gram[1][1]);
            let b = 0.5 * (gram[0][1] + gram[1][0]);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
            vec![mean - rad, mean + rad]
        }
    }
}

/// Decides positivity of one sector on the orthogonal complement of its
/// projection directions. `decisive` names the ratio reported alongside the
/// eigenvalue criterion; `None` picks `g11` or `eig_min`.
pub fn harmonic_verdict(
    report: &IndexReport,
    gram: Option<&GramData>,
    decisive: Option<&str>,
    degeneracy_rel: f64,
) -> Result<HarmonicVerdict> {
    let sign = if report.tag.contains("minus") { Sign::Minus } else { Sign::Plus };
    let mut v = HarmonicVerdict {
        tag: report.tag.clone(),
        sign,
        sector: report.sector,
        index: report.root_count,
        directions: gram.map_or(0, |g| g.gram.len()),
        negative_directions_found: 0,
        decisive_quantity: None,
        eig_min: None,
        positive_on_complement: false,
        degenerate: false,
        farfield_clear: report.farfield_clear,
        ratio_test_agrees: None,
        reason: None,
    };
    if v.index == 0 {
        v.positive_on_complement = v.farfield_clear;
        if !v.farfield_clear {
            v.reason = Some(uncertified_reason(report));
        }
        return Ok(v);
    }
    let gram = match gram {
        Some(g) if g.gram.len() >= v.index => g,
        _ => {
            return Err(Error::IndexExceedsDirections {
                sector: report.tag.clone(),
                index: v.index,
                directions: v.directions,
            })
        }
    };
    let scale = gram.gram.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    let tol = degeneracy_rel * scale;
    let eigs = eigenvalues(&gram.gram);
    v.eig_min = eigs.first().copied();
    v.negative_directions_found = eigs.iter().filter(|&&e| e < -tol).count();
    let name = decisive
        .filter(|n| gram.ratios.contains_key(*n))
        .unwrap_or(if gram.gram.len() == 1 { "g11" } else { "eig_min" });
    let value = gram.ratios[name];
    v.degenerate = value.abs() <= tol || !value.is_finite();
    v.decisive_quantity = Some(DecisiveQuantity { name: name.to_string(), value });
    if gram.gram.len() == 2 {
        let denominator = match name {
            "det_over_g22" => Some(gram.gram[1][1]),
            "det_over_g11" => Some(gram.gram[0][0]),
            _ => None,
        };
        if denominator.is_some_and(|d| d > tol) {
            v.ratio_test_agrees = Some((value < -tol) == (eigs[0] < -tol));
        }
    }
    v.positive_on_complement = v.farfield_clear && !v.degenerate && v.negative_directions_found == v.index;
    if !v.farfield_clear {
        v.reason = Some(uncertified_reason(report));
    } else if v.degenerate {
        v.reason = Some(format!("{name} = {value:.3e} is within the degeneracy tolerance {tol:.1e}"));
    } else if !v.positive_on_complement {
        v.reason = Some(format!(
            "{name} = {value:.6e}; Gram matrix has {} negative direction(s) for index {}",
            v.negative_directions_found, v.index
        ));
    }
    Ok(v)
}

fn uncertified_reason(report: &IndexReport) -> String {
    format!(
        "index uncertified: far-field asymptote root at r = {:.4}",
        report.asymptote_root.unwrap_or(f64::NAN)
    )
}

/// Everything computed for one sector.
#[derive(Debug, Clone)]
pub struct SectorRun {
    pub operator: LinearOperator,
    pub index: IndexReport,
    pub gram: Option<GramData>,
    pub verdict: HarmonicVerdict,
}

/// Output of the full solve chain at one parameter.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub soliton: SolitonData,
    pub eigenpair: Eigenpair,
    pub sectors: Vec<SectorRun>,
    pub verdict: SpectralVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralVerdict {
    pub spec: ProblemSpec,
    pub sector_verdicts: Vec<HarmonicVerdict>,
    pub established: bool,
    /// Tags of the sectors that block the conclusion.
    pub failing: Vec<String>,
    pub coercivity_note: String,
    pub delta0: f64,
}

impl SpectralVerdict {
    pub fn sector(&self, tag: &str) -> Option<&HarmonicVerdict> {
        self.sector_verdicts.iter().find(|v| v.tag == tag)
    }
}

fn run_sector(
    soliton: &SolitonData,
    eigenpair: &Eigenpair,
    sign: Sign,
    sector: Sector,
    delta0: f64,
    opts: &PipelineOptions,
) -> Result<SectorRun> {
    let spec = soliton.spec;
    let operator = LinearOperator::for_soliton(soliton, sign, Family::DistortedL, sector, delta0)?;
    let index = index_of_sector(&operator, &opts.index)?;
    let gram = if index.root_count > 0 {
        let rhs = sector_rhs_set(soliton, Some(eigenpair), sign, sector)?;
        Some(gram_matrix(&operator, &rhs, &opts.product_options(&spec))?)
    } else {
        None
    };
    let verdict = harmonic_verdict(&index, gram.as_ref(), decisive_name(&spec, sign, sector), opts.degeneracy_rel)?;
    Ok(SectorRun {
        operator,
        index,
        gram,
        verdict,
    })
}

fn coercivity_note(soliton: &SolitonData) -> String {
    let (plus, minus) = build_distorted_potentials(&soliton.spec, soliton);
    match (potential_decay_fit(&plus), potential_decay_fit(&minus)) {
        (Some((_, kp)), Some((_, km))) => {
            let fast = kp > 1.0 && km > 1.0;
            format!(
                "distorted potentials decay like exp(-{kp:.3} r) and exp(-{km:.3} r); {}",
                if fast {
                    "both beat the exp(-r) weight, so the weighted lower bound upgrades to gradient-plus-weighted coercivity"
                } else {
                    "decay is not faster than exp(-r); the coercivity upgrade is not supported by the fit"
                }
            )
        }
        _ => "tail of the distorted potentials underflows; no decay fit available".to_string(),
    }
}

/// Visits the sectors of one sign in order: even/odd in 1D, k = 0, 1, ...
/// in 3D until two consecutive sectors have index 0. Returns a note when
/// the 3D scan hits `MAX_HARMONIC` first.
fn scan_sectors(
    dimension: Dimension,
    sign: Sign,
    mut visit: impl FnMut(Sector) -> Result<usize>,
) -> Result<Option<String>> {
    match dimension {
        Dimension::One => {
            for sector in [Sector::Even, Sector::Odd] {
                visit(sector)?;
            }
            Ok(None)
        }
        Dimension::Three => {
            let mut indexes = Vec::new();
            let mut note = None;
            for k in 0..=MAX_HARMONIC {
                indexes.push(visit(Sector::Harmonic(k))?);
                let n = indexes.len();
                if n >= 2 && indexes[n - 1] == 0 && indexes[n - 2] == 0 {
                    break;
                }
                if k == MAX_HARMONIC {
                    note = Some(format!("{}: harmonic scan did not terminate by k = {k}", sign.label()));
                }
            }
            check_monotonicity(&indexes)?;
            Ok(note)
        }
    }
}

/// Index reports of every sector the verdict visits, without the eigenpair
/// or Gram data.
pub fn index_scan(soliton: &SolitonData, delta0: f64, opts: &IndexOptions) -> Result<Vec<IndexReport>> {
    let mut out = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        scan_sectors(soliton.spec.dimension, sign, |sector| {
            let op = LinearOperator::for_soliton(soliton, sign, Family::DistortedL, sector, delta0)?;
            let report = index_of_sector(&op, opts)?;
            let index = report.root_count;
            out.push(report);
            Ok(index)
        })?;
    }
    Ok(out)
}

/// Soliton, eigenpair, every required sector and the combined verdict.
pub fn run_pipeline(spec: &ProblemSpec, delta0: f64, opts: &PipelineOptions) -> Result<PipelineRun> {
    spec.validate()?;
    let soliton = solve_soliton(spec, &opts.soliton_options(spec))?;
    run_pipeline_on(soliton, delta0, opts)
}

/// Same as [`run_pipeline`] on an already computed soliton.
pub fn run_pipeline_on(soliton: SolitonData, delta0: f64, opts: &PipelineOptions) -> Result<PipelineRun> {
    let spec = soliton.spec;
    let eigenpair = solve_unstable_eigenpair(&soliton, opts.mu_guess, &opts.eigen)?;
    let mut sectors = Vec::new();
    let mut failing = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let note = scan_sectors(spec.dimension, sign, |sector| {
            let run = run_sector(&soliton, &eigenpair, sign, sector, delta0, opts)?;
            let index = run.index.root_count;
            sectors.push(run);
            Ok(index)
        })?;
        failing.extend(note);
    }
    for s in &sectors {
        if !s.verdict.positive_on_complement {
            failing.push(s.verdict.tag.clone());
        }
    }
    let verdict = SpectralVerdict {
        spec,
        sector_verdicts: sectors.iter().map(|s| s.verdict.clone()).collect(),
        established: failing.is_empty(),
        failing,
        coercivity_note: coercivity_note(&soliton),
        delta0,
    };
    Ok(PipelineRun {
        soliton,
        eigenpair,
        sectors,
        verdict,
    })
}

/// Global verdict only.
pub fn spectral_verdict(spec: &ProblemSpec, delta0: f64, opts: &PipelineOptions) -> Result<SpectralVerdict> {
    Ok(run_pipeline(spec, delta0, opts)?.verdict)
}

/// Scalar quantities whose sign changes define the parameter thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Quantity {
    /// First k = 0 plus entry, `<R, U1>`.
    K1_0,
    /// k = 0 plus ratio; denominator `K2` for power laws, `K1` for cubic-quintic.
    Kratio0,
    /// First k = 0 minus entry.
    J1_0,
    /// `(J1 J2 - J3^2) / J2` in the k = 0 minus sector.
    Jratio0,
    /// k = 1 plus entry, `<rR, U>`.
    K1_1,
    K1e,
    K2e,
    J1e,
    Jratioe,
    K1o,
    /// `d/domega ||R||^2`.
    Slope,
}

impl Quantity {
    pub const ALL: [Quantity; 11] = [
        Quantity::K1_0,
        Quantity::Kratio0,
        Quantity::J1_0,
        Quantity::Jratio0,
        Quantity::K1_1,
        Quantity::K1e,
        Quantity::K2e,
        Quantity::J1e,
        Quantity::Jratioe,
        Quantity::K1o,
        Quantity::Slope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::K1_0 => "K1_0",
            Quantity::Kratio0 => "Kratio0",
            Quantity::J1_0 => "J1_0",
            Quantity::Jratio0 => "Jratio0",
            Quantity::K1_1 => "K1_1",
            Quantity::K1e => "K1_e",
            Quantity::K2e => "K2_e",
            Quantity::J1e => "J1_e",
            Quantity::Jratioe => "Jratio_e",
            Quantity::K1o => "K1_o",
            Quantity::Slope => "slope",
        }
    }

    /// Sector and Gram ratio that hold the quantity, if it is a Gram quantity.
    pub fn location(self, spec: &ProblemSpec) -> Option<(Sign, Sector, &'static str)> {
        let three = spec.dimension == Dimension::Three;
        let loc = match self {
            Quantity::K1_0 => (Sign::Plus, Sector::Harmonic(0), "g11"),
            Quantity::Kratio0 => (Sign::Plus, Sector::Harmonic(0), decisive_name(spec, Sign::Plus, Sector::Harmonic(0))?),
            Quantity::J1_0 => (Sign::Minus, Sector::Harmonic(0), "g11"),
            Quantity::Jratio0 => (Sign::Minus, Sector::Harmonic(0), "det_over_g22"),
            Quantity::K1_1 => (Sign::Plus, Sector::Harmonic(1), "g11"),
            Quantity::K1e => (Sign::Plus, Sector::Even, "g11"),
            Quantity::K2e => (Sign::Plus, Sector::Even, "g22"),
            Quantity::J1e => (Sign::Minus, Sector::Even, "g11"),
            Quantity::Jratioe => (Sign::Minus, Sector::Even, "det_over_g22"),
            Quantity::K1o => (Sign::Plus, Sector::Odd, "g11"),
            Quantity::Slope => return None,
        };
        let harmonic = matches!(loc.1, Sector::Harmonic(_));
        (harmonic == three).then_some(loc)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown quantity {s:?}")))
    }
}

/// Named Gram quantities available from a pipeline run.
pub fn named_quantities(run: &PipelineRun) -> BTreeMap<String, f64> {
    let spec = run.soliton.spec;
    let mut out = BTreeMap::new();
    for q in Quantity::ALL {
        let Some((sign, sector, entry)) = q.location(&spec) else { continue };
        let found = run
            .sectors
            .iter()
            .find(|s| s.operator.sign == sign && s.operator.sector == sector)
            .and_then(|s| s.gram.as_ref())
            .and_then(|g| g.ratio(entry));
        if let Some(v) = found {
            out.insert(q.name().to_string(), v);
        }
    }
    out
}

/// Evaluates one quantity at `spec`, solving only what it needs.
pub fn evaluate_quantity(spec: &ProblemSpec, quantity: Quantity, opts: &PipelineOptions) -> Result<f64> {
    let soliton = solve_soliton(spec, &opts.soliton_options(spec))?;
    if quantity == Quantity::Slope {
        return slope_value(&soliton);
    }
    let (sign, sector, entry) = quantity.location(spec).ok_or_else(|| {
        Error::InvalidInput(format!("quantity {quantity} is not defined for {}", spec.label()))
    })?;
    let eigenpair = solve_unstable_eigenpair(&soliton, opts.mu_guess, &opts.eigen)?;
    let op = LinearOperator::for_soliton(&soliton, sign, Family::DistortedL, sector, 0.0)?;
    let mut rhs = sector_rhs_set(&soliton, Some(&eigenpair), sign, sector)?;
    if entry == "g11" {
        rhs.truncate(1);
    }
    let gram = gram_matrix(&op, &rhs, &opts.product_options(spec))?;
    gram.ratio(entry)
        .ok_or_else(|| Error::InvalidInput(format!("Gram data of {} lacks {entry}", gram.tag)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub quantity: String,
    pub parameter: String,
    pub value: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

pub fn parameter_name(spec: &ProblemSpec) -> &'static str {
    match spec.nonlinearity {
        Nonlinearity::Power { .. } => "sigma",
        Nonlinearity::CubicQuintic { .. } => "gamma",
    }
}

/// Brent root of `parameter -> quantity` on `bracket`, every evaluation
/// running the solve chain afresh.
pub fn find_threshold(
    base: &ProblemSpec,
    quantity: Quantity,
    bracket: (f64, f64),
    x_tol: f64,
    opts: &PipelineOptions,
) -> Result<ThresholdResult> {
    let mut failure: Option<Error> = None;
    let result = brent_root(
        |p| match base
            .with_parameter(p)
            .map_err(Error::from)
            .and_then(|s| evaluate_quantity(&s, quantity, opts))
        {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        bracket.0,
        bracket.1,
        x_tol,
        BRENT_MAX_EVALUATIONS,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let found = result?;
    Ok(ThresholdResult {
        quantity: quantity.name().to_string(),
        parameter: parameter_name(base).to_string(),
        value: found.root,
        bracket,
        evaluations: found.evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub error: Option<String>,
    pub established: Option<bool>,
    /// Index per sector tag.
    pub indexes: BTreeMap<String, usize>,
    /// Gram ratios keyed `tag.ratio`, plus the named quantities.
    pub values: BTreeMap<String, f64>,
    pub failing: Vec<String>,
}

fn sweep_point(base: &ProblemSpec, p: f64, delta0: f64, opts: &PipelineOptions) -> SweepRow {
    let mut row = SweepRow {
        parameter: p,
        error: None,
        established: None,
        indexes: BTreeMap::new(),
        values: BTreeMap::new(),
        failing: Vec::new(),
    };
    let run = base
        .with_parameter(p)
        .map_err(Error::from)
        .and_then(|s| run_pipeline(&s, delta0, opts));
    match run {
        Err(e) => row.error = Some(e.to_string()),
        Ok(run) => {
            for s in &run.sectors {
                row.indexes.insert(s.verdict.tag.clone(), s.verdict.index);
                if let Some(g) = &s.gram {
                    for (k, v) in &g.ratios {
                        row.values.insert(format!("{}.{k}", g.tag), *v);
                    }
                }
            }
            row.values.extend(named_quantities(&run));
            row.values.insert("mu_star".into(), run.eigenpair.mu_star);
            row.established = Some(run.verdict.established);
            row.failing = run.verdict.failing;
        }
    }
    row
}

/// Runs the pipeline on every grid point concurrently; rows come back in
/// grid order and failures are recorded in-row.
pub fn sweep(base: &ProblemSpec, grid: &[f64], delta0: f64, opts: &PipelineOptions) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("sweep grid is empty".into()));
    }
    Ok(grid.par_iter().map(|&p| sweep_point(base, p, delta0, opts)).collect())
}

/// `n` uniformly spaced points on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(tag: &str, sector: Sector, index: usize, clear: bool) -> IndexReport {
        use crate::odecore::IvpTrajectory;
        IndexReport {
            tag: tag.into(),
            sector,
            trajectory: IvpTrajectory::from_samples(vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0])
                .unwrap(),
            root_count: index,
            root_locations: vec![0.5; index],
            c0: 1.0,
            c1: 0.0,
            asymptote_root: if clear { None } else { Some(50.0) },
            farfield_clear: clear,
            delta0_used: 0.0,
            warnings: Vec::new(),
        }
    }

    fn gram(g: Vec<Vec<f64>>) -> GramData {
        let (ratios, degenerate) = crate::products::gram_ratios(&g);
        GramData {
            tag: "t".into(),
            rhs_labels: vec![],
            solutions: vec![],
            gram: g,
            consistency_error: 0.0,
            two_way_error: 0.0,
            ratios,
            degenerate,
        }
    }

    #[test]
    fn index_zero_needs_nothing() {
        let v = harmonic_verdict(&report("calL_plus_k2", Sector::Harmonic(2), 0, true), None, None, 1e-8).unwrap();
        assert!(v.positive_on_complement);
        assert_eq!(v.directions, 0);
    }

    #[test]
    fn single_direction_sign_decides() {
        let r = report("calL_plus_k1", Sector::Harmonic(1), 1, true);
        assert!(harmonic_verdict(&r, Some(&gram(vec![vec![-0.5]])), Some("g11"), 1e-8).unwrap().positive_on_complement);
        let v = harmonic_verdict(&r, Some(&gram(vec![vec![0.07]])), Some("g11"), 1e-8).unwrap();
        assert!(!v.positive_on_complement);
        assert!(v.reason.is_some());
        let v = harmonic_verdict(&r, Some(&gram(vec![vec![0.0]])), Some("g11"), 1e-8).unwrap();
        assert!(v.degenerate && !v.positive_on_complement);
    }

    #[test]
    fn two_directions_use_smallest_eigenvalue() {
        let r = report("calL_minus_k0", Sector::Harmonic(0), 1, true);
        // det < 0 with positive g22: ratio and eigenvalue tests agree.
        let v = harmonic_verdict(&r, Some(&gram(vec![vec![1.0, 2.0], vec![2.0, 1.0]])), Some("det_over_g22"), 1e-8)
            .unwrap();
        assert!(v.positive_on_complement);
        assert_eq!(v.ratio_test_agrees, Some(true));
        let v = harmonic_verdict(&r, Some(&gram(vec![vec![1.0, 0.1], vec![0.1, 1.0]])), Some("det_over_g22"), 1e-8)
            .unwrap();
        assert!(!v.positive_on_complement);
        assert_eq!(v.negative_directions_found, 0);
    }

    #[test]
    fn index_beyond_directions_is_an_error() {
        let r = report("calL_plus_k0", Sector::Harmonic(0), 2, true);
        let e = harmonic_verdict(&r, Some(&gram(vec![vec![-1.0]])), None, 1e-8).unwrap_err();
        assert!(matches!(e, Error::IndexExceedsDirections { index: 2, directions: 1, .. }));
    }

    #[test]
    fn uncertified_sector_is_not_positive() {
        let r = report("calL_plus_k2", Sector::Harmonic(2), 0, false);
        let v = harmonic_verdict(&r, None, None, 1e-8).unwrap();
        assert!(!v.positive_on_complement);
    }

    #[test]
    fn quantity_names_round_trip() {
        for q in Quantity::ALL {
            assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        }
        assert!("nope".parse::<Quantity>().is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = uniform_grid(0.8, 1.2, 41);
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 0.8);
        assert_eq!(g[40], 1.2);
        assert!((g[20] - 1.0).abs() < 1e-15);
    }
}
