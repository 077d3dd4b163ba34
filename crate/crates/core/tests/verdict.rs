mod common;

use common::*;
use nls_spectral::export::sweep_csv;
use nls_spectral::linops::Sector;
use nls_spectral::model::ProblemSpec;
use nls_spectral::verdict::*;

fn verdict(spec: ProblemSpec, delta0: f64) -> SpectralVerdict {
    spectral_verdict(&spec, delta0, &PipelineOptions::default()).unwrap()
}

#[test]
fn established_inside_the_windows() {
    for spec in [nls3d(1.0), cqnls(0.005), nls1d(3.0)] {
        let v = verdict(spec, 0.0);
        assert!(v.established, "{}: {:?}", spec.label(), v.failing);
        assert!(v.failing.is_empty());
        for s in &v.sector_verdicts {
            assert!(s.positive_on_complement && s.farfield_clear && !s.degenerate, "{}", s.tag);
            assert_eq!(s.negative_directions_found, s.index, "{}", s.tag);
        }
    }
}

#[test]
fn fails_outside_the_windows() {
    let low = verdict(nls3d(0.79), 0.0);
    assert!(!low.established);
    assert!(low.failing.iter().any(|t| t == "calL_minus_k0"), "{:?}", low.failing);
    let high = verdict(nls3d(1.15), 0.0);
    assert!(!high.established);
    assert_eq!(high.failing, ["calL_plus_k1"]);
    let k1 = high.sector("calL_plus_k1").unwrap();
    assert!(k1.decisive_quantity.as_ref().unwrap().value > 0.0);
}

#[test]
fn established_survives_small_delta0() {
    for spec in [nls3d(0.9), nls3d(1.0), nls3d(1.1), cqnls(0.0), cqnls(0.006), cqnls(0.01), nls1d(3.0), nls1d(5.3)] {
        let a = verdict(spec, 0.0);
        let b = verdict(spec, 1e-4);
        assert_eq!(b.delta0, 1e-4);
        if a.established {
            assert!(b.established, "{}: {:?}", spec.label(), b.failing);
        }
    }
}

#[test]
fn ratio_test_never_disagrees() {
    for spec in [nls3d(0.79), nls3d(1.0), nls3d(1.15), cqnls(0.0), cqnls(0.011), nls1d(2.4), nls1d(4.0), nls1d(6.2)] {
        let v = verdict(spec, 0.0);
        for s in &v.sector_verdicts {
            assert_ne!(s.ratio_test_agrees, Some(false), "{} {}", spec.label(), s.tag);
        }
    }
}

#[test]
fn harmonic_scan_stops_early() {
    for spec in [nls3d(0.8), nls3d(1.0), nls3d(1.2), cqnls(0.0), cqnls(0.012)] {
        let v = verdict(spec, 0.0);
        for s in &v.sector_verdicts {
            if let Sector::Harmonic(k) = s.sector {
                assert!(k <= 3, "{} {}", spec.label(), s.tag);
            }
        }
        assert!(v.sector("calL_plus_k2").is_some_and(|s| s.index == 0 && s.positive_on_complement));
        assert!(v.sector("calL_minus_k1").is_some_and(|s| s.index == 0 && s.positive_on_complement));
    }
}

#[test]
fn sweep_records_failures_in_row() {
    let rows = sweep(&cqnls(0.01), &[0.005, 0.2], 0.0, &PipelineOptions::default()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].established, Some(true));
    assert!(rows[0].values.contains_key("Kratio0"));
    assert!(rows[1].error.is_some());
    assert!(rows[1].established.is_none());
    assert!(sweep(&cqnls(0.01), &[], 0.0, &PipelineOptions::default()).is_err());
}

#[test]
fn sweep_output_is_deterministic() {
    let grid = uniform_grid(0.9, 1.1, 3);
    let opts = PipelineOptions::default();
    let a = sweep_csv(&sweep(&nls3d(1.0), &grid, 0.0, &opts).unwrap());
    let b = sweep_csv(&sweep(&nls3d(1.0), &grid, 0.0, &opts).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 4);
}

#[test]
fn threshold_reports_bracket_and_evaluations() {
    let t = find_threshold(&nls3d(1.0), Quantity::K1_1, (1.05, 1.2), 1e-9, &PipelineOptions::default()).unwrap();
    assert_eq!(t.parameter, "sigma");
    assert_eq!(t.bracket, (1.05, 1.2));
    assert!(t.evaluations > 2);
    assert!(rel(t.value, 1.12092) <= 1e-3, "{}", t.value);
    let same_sign = find_threshold(&nls3d(1.0), Quantity::K1_1, (0.9, 1.0), 1e-9, &PipelineOptions::default());
    assert!(same_sign.is_err());
}

#[test]
fn quantity_names_round_trip() {
    for q in Quantity::ALL {
        assert_eq!(q.name().parse::<Quantity>().unwrap(), q);
        assert_eq!(q.name().to_uppercase().parse::<Quantity>().unwrap(), q);
    }
    assert!("K9".parse::<Quantity>().is_err());
    assert!(Quantity::K1e.location(&nls3d(1.0)).is_none());
    assert!(Quantity::K1_1.location(&nls1d(3.0)).is_none());
}
