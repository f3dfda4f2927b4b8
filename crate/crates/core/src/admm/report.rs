//! Run reports and their CSV serialization.

use std::io::{self, Write};

#[derive(Debug, Clone)]
pub struct IterationRow {
    pub k: usize,
    pub norm_u: f64,
    pub norm_v: f64,
    pub norm_w: f64,
    pub stop_metric: f64,
    pub inner: usize,
    // structural-identity relative errors (structural monitor)
    pub pq_rel: Option<f64>,
    pub m_identity_rel: Option<f64>,
    pub w_direct_rel: Option<f64>,
    pub y_opt_residual: Option<f64>,
    // certificate trace (certificate monitor)
    pub eta: Option<f64>,
    pub hpe_lhs: Option<f64>,
    pub hpe_rhs: Option<f64>,
    pub fejer: Option<f64>,
    pub pointwise_min_max: Option<f64>,
    // ergodic trace
    pub eps_erg: Option<f64>,
    pub zeta_erg: Option<f64>,
    pub erg_resid_max: Option<f64>,
}

impl IterationRow {
    pub fn empty(k: usize) -> Self {
        IterationRow {
            k,
            norm_u: 0.0,
            norm_v: 0.0,
            norm_w: 0.0,
            stop_metric: 0.0,
            inner: 0,
            pq_rel: None,
            m_identity_rel: None,
            w_direct_rel: None,
            y_opt_residual: None,
            eta: None,
            hpe_lhs: None,
            hpe_rhs: None,
            fejer: None,
            pointwise_min_max: None,
            eps_erg: None,
            zeta_erg: None,
            erg_resid_max: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out: usize,
    pub inner: usize,
    pub time_s: f64,
    pub converged: bool,
    pub tau: f64,
    pub theta: f64,
    pub sigma_tilde: f64,
    pub sigma_hat: f64,
    pub beta: f64,
    pub psnr_db: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<IterationRow>,
    pub summary: RunSummary,
    pub final_x: Vec<f64>,
    pub final_y: Vec<f64>,
    pub final_gamma: Vec<f64>,
    pub z0: Vec<f64>,
}

pub const CSV_HEADER: &str =
    "k,norm_u,norm_v,norm_w,stop_metric,inner,hpe_lhs,hpe_rhs,fejer,eps_erg,zeta_erg";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per outer iteration, with the summary as a commented footer.
/// Everything except the time field is deterministic for a fixed
/// configuration and seed.
pub fn write_csv<W: Write>(report: &RunReport, mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.norm_u,
            r.norm_v,
            r.norm_w,
            r.stop_metric,
            r.inner,
            opt(r.hpe_lhs),
            opt(r.hpe_rhs),
            opt(r.fejer),
            opt(r.eps_erg),
            opt(r.zeta_erg),
        )?;
    }
    let s = &report.summary;
    let psnr = s
        .psnr_db
        .map(|v| format!(" psnr_db={v}"))
        .unwrap_or_default();
    writeln!(
        w,
        "# out={} inner={} converged={} tau={} theta={} sigma_tilde={} sigma_hat={} beta={}{} time_s={:.3}",
        s.out, s.inner, s.converged, s.tau, s.theta, s.sigma_tilde, s.sigma_hat, s.beta, psnr, s.time_s
    )?;
    Ok(())
}

pub fn csv_string(report: &RunReport) -> String {
    let mut buf = Vec::new();
    write_csv(report, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}

/// The CSV with the (wall-clock) time field removed, for byte-for-byte
/// determinism comparisons.
pub fn csv_without_time(report: &RunReport) -> String {
    let full = csv_string(report);
    full.lines()
        .map(|line| {
            if let Some(pos) = line.find(" time_s=") {
                &line[..pos]
            } else {
                line
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
