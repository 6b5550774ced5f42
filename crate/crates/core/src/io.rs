//! CSV import and export of instances, solutions and diagnostics.
//!
//! Instances and solutions are split into a per-device table and a
//! one-row sidecar `<stem>.scalars.csv` holding the scalar fields.

use crate::error::{Error, Result};
use crate::problem::{mse_ota, KktReport};
use crate::scenario::{Scenario, Solution, Status};
use crate::solver::TraceRow;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
struct DeviceRow {
    k: usize,
    h: f64,
    b: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioScalars {
    noise_power: f64,
    detection_threshold: f64,
    p_max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct PowerRow {
    k: usize,
    x: f64,
    p: f64,
    active: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct SolutionScalars {
    alpha: f64,
    lambda: f64,
    objective: f64,
    mse: f64,
    status: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceCsvRow {
    n: usize,
    i: usize,
    d_ni: f64,
    root_found: bool,
    alpha_hat: Option<f64>,
    accepted: bool,
}

/// `dir/name.csv` -> `dir/name.scalars.csv`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.scalars.csv"))
}

fn one_row<T: for<'de> Deserialize<'de>, R: Read>(r: R, what: &str) -> Result<T> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = rd.deserialize::<T>();
    let row = rows
        .next()
        .ok_or_else(|| Error::Csv(format!("{what}: missing data row")))??;
    if rows.next().is_some() {
        return Err(Error::Csv(format!("{what}: expected exactly one data row")));
    }
    Ok(row)
}

fn rows<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(Error::from)
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Csv(format!("{}: {e}", path.display())))
}

fn finish<W: Write>(wr: csv::Writer<W>) -> Result<()> {
    wr.into_inner().map_err(|e| Error::Csv(e.to_string()))?.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn write_scenario_to<W: Write, V: Write>(s: &Scenario, devices: W, scalars: V) -> Result<()> {
    let mut wr = csv::Writer::from_writer(devices);
    for (k, (&h, &b)) in s.h.iter().zip(&s.b).enumerate() {
        wr.serialize(DeviceRow { k, h, b })?;
    }
    finish(wr)?;
    let mut wr = csv::Writer::from_writer(scalars);
    wr.serialize(ScenarioScalars {
        noise_power: s.noise_power,
        detection_threshold: s.eta_d,
        p_max: s.p_max,
    })?;
    finish(wr)
}

pub fn read_scenario_from<R: Read, Q: Read>(devices: R, scalars: Q) -> Result<Scenario> {
    let mut dev: Vec<DeviceRow> = rows(devices)?;
    dev.sort_by_key(|r| r.k);
    if dev.iter().enumerate().any(|(j, r)| r.k != j) {
        return Err(Error::Csv("device indices must be 0..K-1 without gaps".into()));
    }
    let sc: ScenarioScalars = one_row(scalars, "scenario scalars")?;
    Scenario::new(
        dev.iter().map(|r| r.h).collect(),
        dev.iter().map(|r| r.b).collect(),
        sc.noise_power,
        sc.detection_threshold,
        sc.p_max,
    )
}

pub fn write_scenario(path: &Path, s: &Scenario) -> Result<()> {
    write_scenario_to(s, create(path)?, create(&sidecar_path(path))?)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    read_scenario_from(open(path)?, open(&sidecar_path(path))?)
}

/// Writes a solution; the sidecar `mse` uses unit gradient spread and
/// model dimension one.
pub fn write_solution_to<W: Write, V: Write>(sol: &Solution, s: &Scenario, powers: W, scalars: V) -> Result<()> {
    let mut wr = csv::Writer::from_writer(powers);
    for k in 0..sol.x.len() {
        wr.serialize(PowerRow {
            k,
            x: sol.x[k],
            p: sol.p[k],
            active: sol.active_set.contains(&k),
        })?;
    }
    finish(wr)?;
    let mut wr = csv::Writer::from_writer(scalars);
    wr.serialize(SolutionScalars {
        alpha: sol.alpha,
        lambda: sol.lambda,
        objective: sol.objective,
        mse: mse_ota(&sol.p, sol.alpha, s, 1.0, 1),
        status: sol.status.as_str().to_string(),
    })?;
    finish(wr)
}

pub fn write_solution(path: &Path, sol: &Solution, s: &Scenario) -> Result<()> {
    write_solution_to(sol, s, create(path)?, create(&sidecar_path(path))?)
}

pub fn read_solution_from<R: Read, Q: Read>(powers: R, scalars: Q) -> Result<Solution> {
    let mut pw: Vec<PowerRow> = rows(powers)?;
    pw.sort_by_key(|r| r.k);
    let sc: SolutionScalars = one_row(scalars, "solution scalars")?;
    Ok(Solution {
        x: pw.iter().map(|r| r.x).collect(),
        p: pw.iter().map(|r| r.p).collect(),
        active_set: pw.iter().filter(|r| r.active).map(|r| r.k).collect(),
        alpha: sc.alpha,
        lambda: sc.lambda,
        objective: sc.objective,
        status: sc.status.parse::<Status>()?,
    })
}

pub fn read_solution(path: &Path) -> Result<Solution> {
    read_solution_from(open(path)?, open(&sidecar_path(path))?)
}

pub fn write_kkt_to<W: Write>(kkt: &KktReport, out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["name", "value"])?;
    for (name, v) in kkt.named_residuals() {
        wr.write_record([name, v.to_string()])?;
    }
    finish(wr)
}

pub fn write_kkt(path: &Path, kkt: &KktReport) -> Result<()> {
    write_kkt_to(kkt, create(path)?)
}

pub fn write_trace_to<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for r in trace {
        wr.serialize(TraceCsvRow {
            n: r.n,
            i: r.i,
            d_ni: r.d_ni,
            root_found: r.root_found,
            alpha_hat: r.alpha_hat,
            accepted: r.accepted,
        })?;
    }
    if trace.is_empty() {
        wr.write_record(["n", "i", "d_ni", "root_found", "alpha_hat", "accepted"])?;
    }
    finish(wr)
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    write_trace_to(trace, create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{kkt_residuals, solve_no_sensing};

    fn inst() -> Scenario {
        Scenario::new(vec![1.5e-5, 3.25e-6, 0.0], vec![2e-13, 0.0, 7.5e-14], 1e-11, 1.69e-12, 0.1995).unwrap()
    }

    #[test]
    fn scenario_round_trip() {
        let s = inst();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_scenario_to(&s, &mut a, &mut b).unwrap();
        assert!(String::from_utf8(a.clone()).unwrap().starts_with("k,h,b\n"));
        assert!(String::from_utf8(b.clone()).unwrap().starts_with("noise_power,detection_threshold,p_max\n"));
        assert_eq!(read_scenario_from(&a[..], &b[..]).unwrap(), s);
    }

    #[test]
    fn solution_round_trip_on_disk() {
        let s = inst();
        let sol = solve_no_sensing(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("solution.csv");
        write_solution(&path, &sol, &s).unwrap();
        assert!(dir.path().join("solution.scalars.csv").exists());
        let back = read_solution(&path).unwrap();
        assert_eq!(back, sol);
        let head = std::fs::read_to_string(&path).unwrap();
        assert!(head.starts_with("k,x,p,active\n"));
        let side = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(side.starts_with("alpha,lambda,objective,mse,status\n"));
        assert!(side.contains(",sensing_inactive") || side.contains(",relaxed"));
    }

    #[test]
    fn kkt_and_trace_headers() {
        let s = inst();
        let sol = solve_no_sensing(&s).unwrap();
        let mut out = Vec::new();
        write_kkt_to(&kkt_residuals(&sol, &s).unwrap(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("name,value\nstationarity_x[0],"));
        assert!(text.contains("\nmax_residual,"));
        let mut out = Vec::new();
        write_trace_to(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "n,i,d_ni,root_found,alpha_hat,accepted\n");
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_scenario_from("k,h,b\n0,1,1\n2,1,1\n".as_bytes(), "noise_power,detection_threshold,p_max\n1,1,1\n".as_bytes()).is_err());
        assert!(read_scenario_from("k,h,b\n0,1,x\n".as_bytes(), "noise_power,detection_threshold,p_max\n1,1,1\n".as_bytes()).is_err());
        assert!(read_scenario_from("k,h,b\n0,1,1\n".as_bytes(), "noise_power,detection_threshold,p_max\n".as_bytes()).is_err());
    }
}
