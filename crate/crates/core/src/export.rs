//! CSV tables for trajectories, profiles, time-map scans and FD solutions.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::FdSolution;
use crate::flow::FlowResult;
use crate::potential::Potential;
use crate::shooting::Profile;
use crate::timemap::MonotonicityReport;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub x: f64,
    pub u: f64,
    pub v: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub u: f64,
    pub u_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "dTdE")]
    pub dt_de: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdRow {
    pub x: f64,
    pub u: f64,
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Writes any serializable rows with a header line.
pub fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(io)?;
    }
    wr.flush().map_err(io)
}

pub fn read_rows<R: Read, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(io)
}

pub fn trajectory_rows(pot: &Potential, flow: &FlowResult) -> Vec<TrajectoryRow> {
    flow.trajectory
        .iter()
        .map(|s| TrajectoryRow {
            x: s.x,
            u: s.u,
            v: s.v,
            h: 0.5 * s.v * s.v + pot.value(s.u.max(0.0)).unwrap_or(f64::NAN),
        })
        .collect()
}

pub fn profile_rows(profile: &Profile) -> Vec<ProfileRow> {
    profile
        .points()
        .map(|p| ProfileRow { x: p.x, u: p.u, u_x: p.u_x })
        .collect()
}

pub fn scan_rows(report: &MonotonicityReport) -> Vec<ScanRow> {
    report
        .samples
        .iter()
        .map(|s| ScanRow { e: s.energy, t: s.time, dt_de: s.slope })
        .collect()
}

pub fn fd_rows(fd: &FdSolution) -> Vec<FdRow> {
    fd.x.iter().zip(&fd.u).map(|(&x, &u)| FdRow { x, u }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            ScanRow { e: 0.25, t: 1.0 / 3.0, dt_de: 1e-17 },
            ScanRow { e: -0.0, t: 2.5e300, dt_de: 7.0 },
        ];
        let mut buf = Vec::new();
        write_rows(&mut buf, rows.iter()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("E,T,dTdE\n"));
        let back: Vec<ScanRow> = read_rows(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn bad_tables_are_reported() {
        let r: Result<Vec<FdRow>> = read_rows("x,u\n1,abc\n".as_bytes());
        assert!(matches!(r, Err(Error::Io(_))));
    }
}
