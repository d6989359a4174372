//! CSV results: one row per trial, then `#summary` lines per configuration.

use std::io::{Read, Write};

use super::{ExperimentOutput, ResultRow};
use crate::Result;

pub const CSV_HEADER: [&str; 18] = [
    "suite",
    "config_id",
    "n_i",
    "n_g",
    "grouping",
    "discretization",
    "bits_total",
    "trial",
    "seed",
    "power",
    "bound_single",
    "bound_group",
    "bound_fully",
    "rho",
    "eta",
    "iterations",
    "search_evals",
    "wall_ms",
];

/// Writes all trial rows, then `#summary,config_id,metric,n,mean,std_err` lines.
pub fn write_csv<W: Write>(w: W, outputs: &[ExperimentOutput]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).flexible(true).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for o in outputs {
        for r in &o.rows {
            out.serialize(r)?;
        }
    }
    for o in outputs {
        let id = o.config.config_id();
        for (metric, s) in o.summary() {
            out.write_record([
                "#summary".to_string(),
                id.clone(),
                metric.to_string(),
                s.n.to_string(),
                s.mean.to_string(),
                s.std_err.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads trial rows back, skipping summary lines.
pub fn read_rows<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(true).from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{ChannelModel, ChannelModelConfig, Polarization};
    use crate::harness::{run_experiment_with, Architecture, Discretization, RunOptions, SimConfig};

    #[test]
    fn rows_round_trip() {
        let mut c = SimConfig::new(
            ChannelModelConfig::new(4, ChannelModel::IidRayleigh, Polarization::Uni),
            Architecture::Single,
            1,
            Discretization::Phase(2),
        );
        c.trials = 5;
        let out = run_experiment_with(&c, None, &RunOptions { record_timing: false }).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, std::slice::from_ref(&out)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(text.lines().filter(|l| l.starts_with("#summary")).count(), 8);
        assert_eq!(read_rows(&buf[..]).unwrap(), out.rows);
    }
}
