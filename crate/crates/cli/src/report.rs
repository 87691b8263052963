//! CSV emission for diagnostics and analysis reports.

use std::io::Write;

use geofem_core::analysis::{ConvergenceReport, InfSupReport, SpectrumReport};
use geofem_core::model::StepRecord;

pub const DIAGNOSTICS_HEADER: [&str; 6] = ["step", "time", "energy", "div_inf", "eta_drift", "u_drift"];

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Streams one diagnostics row per step.
pub struct DiagnosticsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(DIAGNOSTICS_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, r: &StepRecord) -> csv::Result<()> {
        self.inner.write_record([
            r.step.to_string(),
            num(r.time),
            num(r.energy),
            num(r.div_inf),
            num(r.eta_drift),
            num(r.u_drift),
        ])
    }

    pub fn finish(mut self) -> csv::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error().into())
    }
}

pub fn write_infsup(r: &InfSupReport, sizes: &[usize], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "n", "h", "beta", "lambda_min", "sqrt_lambda_min"])?;
    for (k, n) in sizes.iter().enumerate() {
        w.write_record([
            r.pair.clone(),
            n.to_string(),
            num(r.h[k]),
            num(r.beta[k]),
            num(r.lambda_min[k]),
            num(r.lambda_min[k].sqrt()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence(r: &ConvergenceReport, sizes: &[usize], out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "n", "h", "dt", "err_eta", "err_u", "initial_err_eta"])?;
    for (k, n) in sizes.iter().enumerate() {
        w.write_record([
            r.pair.clone(),
            n.to_string(),
            num(r.h[k]),
            num(r.dt[k]),
            num(r.err_eta[k]),
            num(r.err_u[k]),
            num(r.initial_err_eta[k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum(r: &SpectrumReport, out: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "omega"])?;
    for (i, o) in r.omegas.iter().enumerate() {
        w.write_record([i.to_string(), num(*o)])?;
    }
    w.flush()?;
    Ok(())
}
