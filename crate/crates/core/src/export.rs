//! CSV emission. Numbers use 17 significant digits in lowercase scientific
//! notation so files round-trip exactly and diff byte-for-byte.

use std::fmt::Write;

use crate::eigen::{eigenpair_samples, Eigenpair};
use crate::linops::{build_distorted_potentials, build_linearized_potentials};
use crate::soliton::SolitonData;
use crate::index::IndexReport;
use crate::verdict::{SectorRun, SweepRow};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// `r, R, R', dOmegaR` at the mesh nodes.
pub fn soliton_csv(s: &SolitonData) -> String {
    let mut out = String::from("r,R,dR,dOmegaR\n");
    let p = &s.profile;
    for (i, &r) in p.mesh().nodes().iter().enumerate() {
        let dw = s.domega.eval(0, r);
        writeln!(out, "{},{},{},{}", num(r), num(p.value_at_node(i, 0)), num(p.value_at_node(i, 1)), num(dw)).unwrap();
    }
    out
}

/// `r, V+, V-, calV+, calV-` at the mesh nodes.
pub fn potentials_csv(s: &SolitonData) -> String {
    let (vp, vm) = build_linearized_potentials(&s.spec, s);
    let (cp, cm) = build_distorted_potentials(&s.spec, s);
    let mut out = String::from("r,V_plus,V_minus,calV_plus,calV_minus\n");
    for &r in vp.mesh().nodes() {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(r),
            num(vp.eval(0, r)),
            num(vm.eval(0, r)),
            num(cp.eval(0, r)),
            num(cm.eval(0, r))
        )
        .unwrap();
    }
    out
}

pub fn eigen_csv(pair: &Eigenpair) -> String {
    let mut out = String::from("r,phi1,phi2\n");
    for (r, a, b) in eigenpair_samples(pair) {
        writeln!(out, "{},{},{}", num(r), num(a), num(b)).unwrap();
    }
    out
}

/// Index-function samples of every sector followed by one summary row each.
pub fn index_csv(reports: &[&IndexReport]) -> String {
    let mut out = String::from("sector,kind,r,U,root_count,C0,C1,clear\n");
    for i in reports {
        let t = &i.trajectory;
        for (r, u) in t.samples().iter().zip(t.values()) {
            writeln!(out, "{},sample,{},{},,,,", i.tag, num(*r), num(*u)).unwrap();
        }
    }
    for i in reports {
        writeln!(
            out,
            "{},summary,,,{},{},{},{}",
            i.tag,
            i.root_count,
            num(i.c0),
            num(i.c1),
            i.farfield_clear
        )
        .unwrap();
    }
    out
}

const RATIO_COLUMNS: [&str; 8] = ["g11", "g22", "g12", "det", "det_over_g22", "det_over_g11", "eig_min", "eig_max"];

/// One row per sector that carries Gram data.
pub fn products_csv(parameter: f64, sectors: &[SectorRun]) -> String {
    let mut out = String::from("parameter,sector,directions");
    for c in RATIO_COLUMNS {
        write!(out, ",{c}").unwrap();
    }
    out.push_str(",consistency_error,two_way_error,degenerate\n");
    for s in sectors {
        let Some(g) = &s.gram else { continue };
        write!(out, "{},{},{}", num(parameter), g.tag, g.rhs_labels.join(" ")).unwrap();
        for c in RATIO_COLUMNS {
            write!(out, ",{}", opt_num(g.ratio(c))).unwrap();
        }
        writeln!(out, ",{},{},{}", num(g.consistency_error), num(g.two_way_error), g.degenerate).unwrap();
    }
    out
}

/// Wide table: fixed leading columns, then the sorted union of index and
/// value keys over all rows. Missing entries are left blank.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut index_keys: Vec<&String> = rows.iter().flat_map(|r| r.indexes.keys()).collect();
    index_keys.sort();
    index_keys.dedup();
    let mut value_keys: Vec<&String> = rows.iter().flat_map(|r| r.values.keys()).collect();
    value_keys.sort();
    value_keys.dedup();
    let mut out = String::from("parameter,established,failing,error");
    for k in &index_keys {
        write!(out, ",index.{k}").unwrap();
    }
    for k in &value_keys {
        write!(out, ",{k}").unwrap();
    }
    out.push('\n');
    for row in rows {
        let established = row.established.map(|b| b.to_string()).unwrap_or_default();
        let error = row.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        write!(out, "{},{},{},{}", num(row.parameter), established, row.failing.join(" "), error).unwrap();
        for k in &index_keys {
            write!(out, ",{}", row.indexes.get(*k).map(|i| i.to_string()).unwrap_or_default()).unwrap();
        }
        for k in &value_keys {
            write!(out, ",{}", opt_num(row.values.get(*k).copied())).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s, s.to_lowercase());
        }
        assert_eq!(num(1.5), "1.5000000000000000e0");
    }

    #[test]
    fn sweep_columns_are_union_of_keys() {
        let a = SweepRow {
            parameter: 1.0,
            error: None,
            established: Some(true),
            indexes: BTreeMap::from([("calL_plus_k0".to_string(), 1)]),
            values: BTreeMap::from([("K1_1".to_string(), -0.5)]),
            failing: vec![],
        };
        let b = SweepRow {
            parameter: 2.0,
            error: Some("bad, very".into()),
            established: None,
            indexes: BTreeMap::new(),
            values: BTreeMap::new(),
            failing: vec![],
        };
        let csv = sweep_csv(&[a, b]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "parameter,established,failing,error,index.calL_plus_k0,K1_1");
        assert_eq!(lines[2].split(',').count(), 6);
        assert!(lines[2].contains("bad; very"));
    }
}
