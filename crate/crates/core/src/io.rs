//! CSV and JSON serialization of point sets, rules, spectral vectors,
//! eignets and experiment rows.
//!
//! Coordinates are intrinsic: `theta` on the circle, `colat,lon` on the
//! sphere. Floats are written in shortest round-trip form, so identical
//! values always produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::eignet::Eignet;
use crate::geometry::{GeometryError, PointSet};
use crate::harness::Row;
use crate::manifold::{Manifold, ManifoldKind, Point};
use crate::quadrature::QuadratureRule;
use crate::spectral::{SpectralError, SpectralVector};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("record {record}: {message}")]
    Format { record: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn coord_header(kind: ManifoldKind) -> &'static [&'static str] {
    match kind {
        ManifoldKind::Circle => &["theta"],
        ManifoldKind::Sphere => &["colat", "lon"],
    }
}

fn kind_from_header(cols: &[&str]) -> Option<ManifoldKind> {
    match cols {
        ["theta", ..] => Some(ManifoldKind::Circle),
        ["colat", "lon", ..] => Some(ManifoldKind::Sphere),
        _ => None,
    }
}

fn fmt(x: f64) -> String {
    x.to_string()
}

fn write_table<W: Write>(
    w: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), IoError> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

fn point_fields(p: &Point) -> Vec<String> {
    p.coords().into_iter().map(fmt).collect()
}

pub fn write_points<W: Write>(w: W, set: &PointSet) -> Result<(), IoError> {
    write_table(w, coord_header(set.kind()), set.points().iter().map(point_fields))
}

/// Coordinates and trailing value columns of a point table.
struct PointTable {
    kind: ManifoldKind,
    points: Vec<Point>,
    extra: Vec<Vec<f64>>,
}

fn parse_f64(s: &str, record: usize) -> Result<f64, IoError> {
    s.trim().parse().map_err(|_| IoError::Format {
        record,
        message: format!("`{s}` is not a number"),
    })
}

fn read_point_table<R: Read>(r: R, extra: &[&str]) -> Result<PointTable, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    let kind = kind_from_header(&cols).ok_or_else(|| IoError::Format {
        record: 0,
        message: format!("header {cols:?} names no manifold coordinates"),
    })?;
    let d = coord_header(kind).len();
    if cols[d..] != *extra {
        return Err(IoError::Format {
            record: 0,
            message: format!("expected columns {:?} after coordinates, found {:?}", extra, &cols[d..]),
        });
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let nums = rec.iter().map(|s| parse_f64(s, i + 1)).collect::<Result<Vec<_>, _>>()?;
        if nums.len() != d + extra.len() {
            return Err(IoError::Format {
                record: i + 1,
                message: format!("expected {} fields, found {}", d + extra.len(), nums.len()),
            });
        }
        points.push(Point::from_coords(kind, &nums[..d]).expect("arity checked"));
        values.push(nums[d..].to_vec());
    }
    Ok(PointTable {
        kind,
        points,
        extra: values,
    })
}

pub fn read_points<R: Read>(r: R) -> Result<PointSet, IoError> {
    let t = read_point_table(r, &[])?;
    Ok(PointSet::new(t.kind, t.points)?)
}

/// Point set with one value per point (`coords..., value`).
pub fn read_samples<R: Read>(r: R) -> Result<(PointSet, Vec<f64>), IoError> {
    let t = read_point_table(r, &["value"])?;
    let values = t.extra.iter().map(|v| v[0]).collect();
    Ok((PointSet::new(t.kind, t.points)?, values))
}

pub fn write_samples<W: Write>(w: W, set: &PointSet, values: &[f64]) -> Result<(), IoError> {
    let mut header = coord_header(set.kind()).to_vec();
    header.push("value");
    write_table(
        w,
        &header,
        set.points().iter().zip(values).map(|(p, &v)| {
            let mut f = point_fields(p);
            f.push(fmt(v));
            f
        }),
    )
}

pub fn write_rule<W: Write>(w: W, rule: &QuadratureRule) -> Result<(), IoError> {
    let mut header = coord_header(rule.centers.kind()).to_vec();
    header.push("weight");
    write_table(
        w,
        &header,
        rule.centers.points().iter().zip(&rule.weights).map(|(p, &wt)| {
            let mut f = point_fields(p);
            f.push(fmt(wt));
            f
        }),
    )
}

pub fn write_eignet<W: Write>(w: W, net: &Eignet) -> Result<(), IoError> {
    let mut header = coord_header(net.centers().kind()).to_vec();
    header.push("coefficient");
    write_table(
        w,
        &header,
        net.centers().points().iter().zip(net.coeffs()).map(|(p, &a)| {
            let mut f = point_fields(p);
            f.push(fmt(a));
            f
        }),
    )
}

/// Centers and coefficients of an eignet CSV; the kernel comes from the
/// JSON header.
pub fn read_eignet_table<R: Read>(r: R) -> Result<(PointSet, Vec<f64>), IoError> {
    let t = read_point_table(r, &["coefficient"])?;
    let coeffs = t.extra.iter().map(|v| v[0]).collect();
    Ok((PointSet::new(t.kind, t.points)?, coeffs))
}

pub fn write_spectral<W: Write>(w: W, v: &SpectralVector) -> Result<(), IoError> {
    let m = Manifold::new(v.kind(), v.max_level());
    write_table(
        w,
        &["index", "level", "coefficient"],
        v.coeffs()
            .iter()
            .enumerate()
            .map(|(j, &c)| vec![j.to_string(), m.level_of(j).to_string(), fmt(c)]),
    )
}

/// Reads `index, level, coefficient` rows; indices may be sparse and the
/// level column must agree with the index.
pub fn read_spectral<R: Read>(r: R, kind: ManifoldKind) -> Result<SpectralVector, IoError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["index", "level", "coefficient"] {
        return Err(IoError::Format {
            record: 0,
            message: format!("expected header index,level,coefficient, found {header:?}"),
        });
    }
    let mut entries = Vec::new();
    let mut top = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |message: String| IoError::Format { record: i + 1, message };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", rec.len())));
        }
        let j: usize = rec[0].trim().parse().map_err(|_| bad(format!("bad index `{}`", &rec[0])))?;
        let l: usize = rec[1].trim().parse().map_err(|_| bad(format!("bad level `{}`", &rec[1])))?;
        let c = parse_f64(&rec[2], i + 1)?;
        let expected = Manifold::new(kind, 0).level_of(j);
        if l != expected {
            return Err(bad(format!("index {j} has level {expected}, not {l}")));
        }
        top = top.max(l);
        entries.push((j, c));
    }
    let mut v = SpectralVector::zeros(kind, top);
    for (j, c) in entries {
        v.coeffs_mut()[j] = c;
    }
    Ok(v)
}

pub fn write_rows<W: Write>(w: W, rows: &[Row]) -> Result<(), IoError> {
    write_table(
        w,
        &["scale", "error", "constant"],
        rows.iter().map(|r| vec![fmt(r.scale), fmt(r.error), fmt(r.constant)]),
    )
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn to_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), IoError>) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
