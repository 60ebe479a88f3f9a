//! Deterministic CSV formatting and atomic file output.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use crate::dynamics::TrajectoryRecord;
use crate::variational::{EffectiveTable, SelfConsistentPoint};

/// 17 significant digits: every finite `f64` survives a parse-and-print
/// round trip unchanged.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(number).unwrap_or_default()
}

pub const TABLE_HEADER: &str = "x,omega,Omega,a2,V,W,m_eff,valid";
pub const TRAJECTORY_HEADER: &str = "t,x,v,E,r";
pub const POINT_HEADER: &str = "x,Omega,a2,W,iterations,residual,converged,method";

pub fn table(t: &EffectiveTable) -> String {
    let mut out = String::with_capacity(t.rows.len() * 160);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for r in &t.rows {
        let s = r.solved.as_ref();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            number(r.x),
            opt(r.omega),
            opt(s.map(|s| s.omega_trial)),
            opt(s.map(|s| s.a2)),
            number(r.v),
            opt(s.map(|s| s.w)),
            opt(s.map(|s| s.m_eff)),
            u8::from(r.valid()),
        );
    }
    out
}

pub fn trajectory(rec: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(rec.samples.len() * 120);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &rec.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            number(s.t),
            number(s.x),
            number(s.v),
            number(s.e),
            opt(s.r)
        );
    }
    out
}

pub fn point(p: &SelfConsistentPoint) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        number(p.x),
        number(p.omega_trial),
        number(p.a2),
        number(p.w),
        p.report.iterations,
        number(p.report.final_residual),
        u8::from(p.report.converged),
        p.report.method.name()
    )
}

/// Write to a sibling temporary file, then rename over the target.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| {
        io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name")
    })?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
