//! CSV and legacy VTK writers. Numbers use Rust's shortest round-trip
//! formatting, so identical runs give byte-identical files.

use std::fmt::Write as _;

use crate::diagnostics::DiagnosticsRow;
use crate::flow::{embed_point, GeomFields, GraphState};
use crate::geometry::Layout;
use crate::mms::ConvergenceReport;

/// Comment line that starts every output file.
pub fn header_line(hash: &str) -> String {
    format!("# torusflow {} config {hash}\n", env!("CARGO_PKG_VERSION"))
}

pub fn diagnostics_header(levels: &[f64]) -> String {
    let mut h = String::from(
        "step,t,area,u_min,u_max,osc,vtilde_max,q_max,h2v2_max,flux_hr,flux_abs_hr,tau_top,kappa,h2_integral,energy_accum",
    );
    for k in levels {
        let _ = write!(h, ",level_{k:?}");
    }
    h.push('\n');
    h
}

pub fn diagnostics_line(row: &DiagnosticsRow) -> String {
    let mut s = format!(
        "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
        row.step,
        row.t,
        row.area,
        row.u_min,
        row.u_max,
        row.oscillation(),
        row.vtilde_max,
        row.q_max,
        row.h2v2_max,
        row.flux_hr,
        row.flux_abs_hr,
        row.tau_top,
        row.kappa,
        row.h2_integral,
        row.energy_accum
    );
    for (_, m) in &row.level_measures {
        let _ = write!(s, ",{m:?}");
    }
    s.push('\n');
    s
}

pub fn diagnostics_csv(hash: &str, levels: &[f64], rows: &[DiagnosticsRow]) -> String {
    let mut out = header_line(hash);
    out.push_str(&diagnostics_header(levels));
    for r in rows {
        out.push_str(&diagnostics_line(r));
    }
    out
}

/// 1D snapshot: one row per node with the embedded planar point.
pub fn snapshot_csv(hash: &str, state: &GraphState, fields: &GeomFields) -> String {
    let mut out = header_line(hash);
    let _ = writeln!(out, "# t = {:?}", state.t);
    out.push_str("r,u,vtilde,H,x,y\n");
    for (i, n) in state.grid().nodes().iter().enumerate() {
        let p = embed_point(1, n.pos, state.u[i]);
        let xy = p.as_slice();
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?}",
            n.r, state.u[i], fields.vtilde[i], fields.h[i], xy[0], xy[1]
        );
    }
    out
}

/// 2D snapshot as a legacy ASCII structured grid over `(φ, s)`, with the
/// seam column repeated so the surface closes. Points are the embedded
/// positions in ℝ³.
pub fn snapshot_vtk(hash: &str, state: &GraphState, fields: &GeomFields) -> String {
    let grid = state.grid();
    let Layout::Polar { ns, nphi, .. } = grid.layout() else {
        panic!("snapshot_vtk needs a polar grid");
    };
    let cols = nphi + 1;
    let idx = |j: usize, k: usize| j * nphi + (k % nphi);
    let mut out = String::from("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "torusflow {} config {hash} t={:?}", env!("CARGO_PKG_VERSION"), state.t);
    out.push_str("ASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(out, "DIMENSIONS {cols} {ns} 1");
    let _ = writeln!(out, "POINTS {} double", cols * ns);
    for j in 0..ns {
        for k in 0..cols {
            let i = idx(j, k);
            let p = embed_point(2, grid.node(i).pos, state.u[i]);
            let c = p.as_slice();
            let _ = writeln!(out, "{:?} {:?} {:?}", c[0], c[1], c[2]);
        }
    }
    let _ = writeln!(out, "POINT_DATA {}", cols * ns);
    for (name, data) in [("u", &state.u), ("vtilde", &fields.vtilde), ("H", &fields.h)] {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for j in 0..ns {
            for k in 0..cols {
                let _ = writeln!(out, "{:?}", data[idx(j, k)]);
            }
        }
    }
    out
}

pub fn mms_csv(hash: &str, report: &ConvergenceReport) -> String {
    let mut out = header_line(hash);
    out.push_str("level,resolution,h_min,steps,error,order\n");
    for (i, l) in report.levels.iter().enumerate() {
        let res = match l.resolution {
            crate::geometry::Resolution::Interval(n) => n.to_string(),
            crate::geometry::Resolution::Polar { ns, nphi } => format!("{ns}x{nphi}"),
        };
        let order = l.order.map_or(String::new(), |o| o.to_string());
        let _ = writeln!(out, "{i},{res},{:?},{},{:?},{order}", l.h_min, l.steps, l.error);
    }
    out
}
