//! CSV formats for increments, ECF values and plot data.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::charfn::{EcfEstimate, IncrementSeries};
use crate::error::{Error, Result};

/// Writes `# dt=<dt>`, a `dx,dy` header and one row per increment.
pub fn write_increments<W: Write>(series: &IncrementSeries, mut out: W) -> Result<()> {
    writeln!(out, "# dt={}", series.dt)?;
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["dx", "dy"])?;
    for x in &series.increments {
        wtr.serialize((x[0], x[1]))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_increments<R: Read>(input: R) -> Result<IncrementSeries> {
    let mut buf = BufReader::new(input);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    let dt = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("dt="))
        .ok_or_else(|| Error::data("line 1: expected `# dt=<value>`"))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::data(format!("line 1: bad time step: {e}")))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(buf);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "dx" || &header[1] != "dy" {
        return Err(Error::data("line 2: expected header dx,dy"));
    }
    let mut increments = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = k + 3;
        let parse = |i: usize, name: &str| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| Error::data(format!("line {line}: missing {name}")))?
                .parse()
                .map_err(|_| Error::data(format!("line {line}, column {name}: not a number")))
        };
        increments.push([parse(0, "dx")?, parse(1, "dy")?]);
    }
    IncrementSeries::new(dt, increments)
}

pub fn load_increments<P: AsRef<Path>>(path: P) -> Result<IncrementSeries> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.as_ref().display())))?;
    read_increments(file)
}

pub fn save_increments<P: AsRef<Path>>(series: &IncrementSeries, path: P) -> Result<()> {
    write_increments(series, std::fs::File::create(path)?)
}

/// `xi_x,xi_y,re,im`.
pub fn write_ecf<W: Write>(est: &EcfEstimate, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["xi_x", "xi_y", "re", "im"])?;
    for (p, v) in est.points.iter().zip(&est.values) {
        wtr.serialize((p[0], p[1], v.re, v.im))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_ecf<R: Read>(input: R) -> Result<EcfEstimate> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (k, rec) in rdr.deserialize::<(f64, f64, f64, f64)>().enumerate() {
        let (x, y, re, im) = rec.map_err(|e| Error::data(format!("line {}: {e}", k + 2)))?;
        points.push([x, y]);
        values.push(Complex64::new(re, im));
    }
    if points.is_empty() {
        return Err(Error::data("ECF file has no rows"));
    }
    Ok(EcfEstimate { points, values, n: 0 })
}

/// `angle,gamma`.
pub fn write_gamma_curve<W: Write>(curve: &[(f64, f64)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["angle", "gamma"])?;
    for row in curve {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `x,y,nu`.
pub fn write_nu_grid<W: Write>(grid: &[(f64, f64, f64)], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["x", "y", "nu"])?;
    for row in grid {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
