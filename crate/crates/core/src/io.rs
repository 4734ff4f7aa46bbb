//! Plain-text formats: edge lists, coordinate/sample/plan CSVs, and CSV
//! dumps of bases and dense operators.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so output
//! is byte-stable for identical values.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::estimation::SamplePlan;
use crate::graph::Graph;
use crate::spectral::{GeneralizedSignal, SpectralBasis};
use crate::wiener::{ObservationMask, PartialSignal};
use crate::{Error, Result, Scalar};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: Scalar>(field: &str, line: usize) -> Result<T> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {field:?}")))?;
    Ok(T::lit(v))
}

fn index(field: &str, line: usize) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("not an index: {field:?}")))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => parse_err(line, format!("{other:?}")),
    }
}

/// Header `n=<count>`, then one `i j w` line per edge. Blank lines and lines
/// starting with `#` are skipped.
pub fn write_edge_list<T: Scalar, W: Write>(g: &Graph<T>, mut w: W) -> Result<()> {
    writeln!(w, "n={}", g.vertex_count())?;
    for e in g.edges() {
        writeln!(w, "{} {} {}", e.i, e.j, e.weight.as_f64())?;
    }
    Ok(())
}

pub fn read_edge_list<T: Scalar, R: BufRead>(r: R) -> Result<Graph<T>> {
    let mut n = None;
    let mut edges = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        match n {
            None => {
                let count = text
                    .strip_prefix("n=")
                    .ok_or_else(|| parse_err(lineno, "expected header n=<count>"))?;
                n = Some(index(count, lineno)?);
            }
            Some(_) => {
                let parts: Vec<&str> = text.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(parse_err(lineno, "expected `i j w`"));
                }
                edges.push((index(parts[0], lineno)?, index(parts[1], lineno)?, num::<T>(parts[2], lineno)?));
            }
        }
    }
    let n = n.ok_or_else(|| parse_err(0, "missing header n=<count>"))?;
    Graph::new(n, edges)
}

/// CSV with header `id,x,y`. Rows may come in any order but ids must be
/// exactly `0..count`.
pub fn read_coordinates<T: Scalar, R: Read>(r: R) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "x", "y"] {
        return Err(parse_err(1, "expected header id,x,y"));
    }
    let mut rows = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let id = index(&rec[0], line)?;
        let point = vec![num::<T>(&rec[1], line)?, num::<T>(&rec[2], line)?];
        if rows.insert(id, point).is_some() {
            return Err(parse_err(line, format!("duplicate id {id}")));
        }
    }
    if rows.keys().enumerate().any(|(i, &id)| i != id) {
        return Err(parse_err(0, "ids must be 0..count"));
    }
    Ok(rows.into_values().collect())
}

/// First row holds the eigenvalues; row `i + 1` holds entry `i` of every
/// eigenvector, so column `j` is eigenvector `j`.
pub fn write_basis<T: Scalar, W: Write>(b: &SpectralBasis<T>, w: W) -> Result<()> {
    let m = b.dim();
    let mut out = DMatrix::zeros(m + 1, m);
    out.row_mut(0).copy_from(&b.eigenvalues().transpose());
    out.rows_mut(1, m).copy_from(b.eigenvectors());
    write_matrix(&out, None, w)
}

pub fn read_basis<T: Scalar, R: Read>(r: R) -> Result<SpectralBasis<T>> {
    let m = read_matrix::<T, R>(r, false)?;
    let dim = m.ncols();
    if m.nrows() != dim + 1 {
        return Err(Error::shape(format!("{} rows", dim + 1), m.nrows()));
    }
    let vals = DVector::from_iterator(dim, m.row(0).iter().copied());
    SpectralBasis::from_parts(vals, m.rows(1, dim).clone_owned())
}

/// Dense matrix as headerless CSV, or with the given header row.
pub fn write_matrix<T: Scalar, W: Write>(m: &DMatrix<T>, header: Option<&[&str]>, w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    if let Some(h) = header {
        wtr.write_record(h).map_err(csv_err)?;
    }
    for row in m.row_iter() {
        wtr.write_record(row.iter().map(|v| v.as_f64().to_string())).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a rectangular numeric CSV, optionally skipping a header row.
pub fn read_matrix<T: Scalar, R: Read>(r: R, has_header: bool) -> Result<DMatrix<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut rows: Vec<Vec<T>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        rows.push(rec.iter().map(|f| num(f, line)).collect::<Result<_>>()?);
    }
    let cols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Long format `sample,vertex,coord,value`, one line per entry.
pub fn write_samples<T: Scalar, W: Write>(samples: &[GeneralizedSignal<T>], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["sample", "vertex", "coord", "value"]).map_err(csv_err)?;
    for (i, s) in samples.iter().enumerate() {
        for v in 0..s.n() {
            for t in 0..s.d() {
                wtr.write_record([
                    i.to_string(),
                    v.to_string(),
                    t.to_string(),
                    s.values()[(v, t)].as_f64().to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads the long format. Sample ids must be `0..m`. Each sample's grid size
/// is the largest vertex and coordinate index among its lines (empty-valued
/// lines included), and all samples must agree. Entries that do not appear
/// are marked missing; an empty `value` cell counts as missing too.
pub fn read_samples<T: Scalar, R: Read>(r: R) -> Result<Vec<PartialSignal<T>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["sample", "vertex", "coord", "value"] {
        return Err(parse_err(1, "expected header sample,vertex,coord,value"));
    }
    let mut cells: BTreeMap<(usize, usize, usize), T> = BTreeMap::new();
    let mut extents: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let (s, v, t) = (index(&rec[0], line)?, index(&rec[1], line)?, index(&rec[2], line)?);
        let e = extents.entry(s).or_insert((0, 0));
        *e = (e.0.max(v + 1), e.1.max(t + 1));
        if rec[3].is_empty() {
            continue;
        }
        let value = num::<T>(&rec[3], line)?;
        if cells.insert((s, v, t), value).is_some() {
            return Err(parse_err(line, format!("duplicate entry ({s}, {v}, {t})")));
        }
    }
    let m = extents.keys().next_back().map_or(0, |s| s + 1);
    let (n, d) = extents.values().next().copied().unwrap_or((0, 0));
    for s in 0..m {
        match extents.get(&s) {
            None => return Err(Error::shape(format!("sample ids 0..{m}"), format!("no lines for sample {s}"))),
            Some(&e) if e != (n, d) => {
                return Err(Error::shape(format!("{n}x{d} samples"), format!("{}x{} for sample {s}", e.0, e.1)));
            }
            Some(_) => {}
        }
    }
    let mut out = Vec::with_capacity(m);
    for s in 0..m {
        let mut values = DMatrix::zeros(n, d);
        let mut mask = ObservationMask::none_observed(n, d);
        for v in 0..n {
            for t in 0..d {
                if let Some(&x) = cells.get(&(s, v, t)) {
                    values[(v, t)] = x;
                    mask.set(v, t, true);
                }
            }
        }
        out.push(PartialSignal::new(values, mask)?);
    }
    Ok(out)
}

/// Wide format: header `sample,vertex,c0,...`, one line per (sample,
/// vertex) with one column per coordinate. Empty cells are missing. Every
/// line must carry the same number of coordinates.
pub fn read_samples_wide<T: Scalar, R: Read>(r: R) -> Result<Vec<PartialSignal<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "sample" || &header[1] != "vertex" {
        return Err(parse_err(1, "expected header sample,vertex,<coords...>"));
    }
    let d = header.len() - 2;
    let mut rows: BTreeMap<(usize, usize), Vec<Option<T>>> = BTreeMap::new();
    let (mut m, mut n) = (0, 0);
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != d + 2 {
            return Err(Error::shape(format!("{d} coordinates"), format!("{} at line {line}", rec.len().saturating_sub(2))));
        }
        let (s, v) = (index(&rec[0], line)?, index(&rec[1], line)?);
        m = m.max(s + 1);
        n = n.max(v + 1);
        let vals = (2..rec.len())
            .map(|i| if rec[i].is_empty() { Ok(None) } else { num(&rec[i], line).map(Some) })
            .collect::<Result<Vec<_>>>()?;
        if rows.insert((s, v), vals).is_some() {
            return Err(parse_err(line, format!("duplicate row ({s}, {v})")));
        }
    }
    (0..m)
        .map(|s| {
            let mut values = DMatrix::zeros(n, d);
            let mut mask = ObservationMask::none_observed(n, d);
            for v in 0..n {
                if let Some(row) = rows.get(&(s, v)) {
                    for (t, x) in row.iter().enumerate() {
                        if let Some(x) = x {
                            values[(v, t)] = *x;
                            mask.set(v, t, true);
                        }
                    }
                }
            }
            PartialSignal::new(values, mask)
        })
        .collect()
}

/// Plan with observed values, `vertex,t,value` per line.
pub fn write_plan<T: Scalar, W: Write>(plan: &SamplePlan<T>, values: &[T], w: W) -> Result<()> {
    if values.len() != plan.total() {
        return Err(Error::shape(format!("{} values", plan.total()), values.len()));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["vertex", "t", "value"]).map_err(csv_err)?;
    for ((v, t), y) in plan.rows().zip(values) {
        wtr.write_record([v.to_string(), t.as_f64().to_string(), y.as_f64().to_string()])
            .map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `vertex,t,value` lines into a plan over `n` vertices and the values
/// in design-row order.
pub fn read_plan<T: Scalar, R: Read>(r: R, n: usize) -> Result<(SamplePlan<T>, Vec<T>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != ["vertex", "t", "value"] {
        return Err(parse_err(1, "expected header vertex,t,value"));
    }
    let mut per_vertex: Vec<Vec<(T, T)>> = vec![Vec::new(); n];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let v = index(&rec[0], line)?;
        if v >= n {
            return Err(Error::IndexOutOfRange { index: v, n });
        }
        per_vertex[v].push((num(&rec[1], line)?, num(&rec[2], line)?));
    }
    let points = per_vertex.iter().map(|ps| ps.iter().map(|p| p.0).collect()).collect();
    let values = per_vertex.iter().flat_map(|ps| ps.iter().map(|p| p.1)).collect();
    Ok((SamplePlan::new(points)?, values))
}
