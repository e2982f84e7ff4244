use std::io::Write;

use crate::experiment::{PmfInfo, ResultRow};

/// Bumped whenever a column is added, removed or reinterpreted.
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 26] = [
    "point",
    "model",
    "rate_mbps",
    "lambda_b",
    "lambda_a",
    "cov",
    "cov_convention",
    "beta_a",
    "mu",
    "servers",
    "prbs",
    "method",
    "status",
    "loss_prob",
    "utilization",
    "loss_half_width",
    "utilization_half_width",
    "residual",
    "solver",
    "mean_demand",
    "spp_lambda1",
    "spp_lambda2",
    "spp_r1",
    "spp_r2",
    "wall_time_ms",
    "error",
];

// Shortest representation that parses back to the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_rows<W: Write>(rows: &[ResultRow], mut w: W) -> csv::Result<()> {
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COLUMNS)?;
    for r in rows {
        let p = &r.point;
        let spp = |f: fn(&relq_core::SppParamsF64) -> f64| opt(r.spp.as_ref().map(f));
        out.write_record([
            p.index.to_string(),
            p.model.name().to_string(),
            num(p.rate_mbps),
            num(p.lambda_b),
            num(p.lambda_a),
            num(p.cov),
            r.cov_convention.name().to_string(),
            num(p.beta_a),
            num(p.mu),
            r.servers.to_string(),
            r.prbs.to_string(),
            r.method.name().to_string(),
            if r.is_ok() { "ok" } else { "error" }.to_string(),
            opt(r.loss_prob),
            opt(r.utilization),
            opt(r.loss_half_width),
            opt(r.utilization_half_width),
            opt(r.residual),
            r.solver.clone().unwrap_or_default(),
            opt(r.mean_demand),
            spp(|s| s.lambda1),
            spp(|s| s.lambda2),
            spp(|s| s.r1),
            spp(|s| s.r2),
            opt(r.wall_time_ms),
            r.status.as_ref().err().map(|e| e.message.clone()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Summary comments followed by one `j,p_j` row per atom with positive mass.
pub fn write_pmf<W: Write>(info: &PmfInfo, rate_mbps: f64, mut w: W) -> csv::Result<()> {
    let pmf = &info.pmf;
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    writeln!(w, "# rate_mbps={}", num(rate_mbps))?;
    writeln!(w, "# outage_mass={}", num(pmf.outage_mass()))?;
    writeln!(w, "# mean={}", num(pmf.mean()))?;
    writeln!(w, "# variance={}", num(pmf.variance()))?;
    if let Some(r) = info.coverage_radius {
        writeln!(w, "# coverage_radius_m={}", num(r))?;
    }
    if let Some(b) = info.mean_blockage {
        writeln!(w, "# mean_blockage={}", num(b))?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["j", "p_j"])?;
    for (j, p) in pmf.support() {
        out.write_record([j.to_string(), num(p)])?;
    }
    out.flush()?;
    Ok(())
}
