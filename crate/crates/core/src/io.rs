//! CSV table formats shared by the library and the command-line tool.
//!
//! | table | columns |
//! |---|---|
//! | distribution | `point,mass` |
//! | single-round e-variable | `point,value` |
//! | two-round e-variable | `x1,x2,value` |
//! | e-process | `depth,path,value` (`path` comma-joined, empty at depth 0) |
//! | ledger | `t,x,lambda,e_value,log_wealth,rejected` |
//! | confidence sequence | `t,lower,upper,alive` |
//! | membership | `t,mu,log_wealth,in_set` |
//! | comparison | `t,logW_hoeffding,logW_coinbet,gap` |
//!
//! Floats are written in shortest round-trip form, so re-reading a written
//! table reproduces the same values bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::domain::{DiscreteDistribution, SampleSpace};
use crate::error::{Error, Result};
use crate::evariables::TabulatedEVariable;
use crate::multiround::{EProcess, PairTable, TabulatedProcess};

pub fn bool_as_int<S: Serializer>(b: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*b))
}

pub fn int_as_bool<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    match u8::deserialize(d)? {
        0 => Ok(false),
        1 => Ok(true),
        n => Err(serde::de::Error::custom(format!("expected 0 or 1, got {n}"))),
    }
}

/// Writes `rows` as CSV with a header derived from the row type.
pub fn write_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    Ok(rdr.deserialize().collect::<std::result::Result<Vec<T>, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct MassRow {
    point: f64,
    mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ValueRow {
    point: f64,
    value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct PairRow {
    x1: f64,
    x2: f64,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ProcessRow {
    depth: usize,
    path: String,
    value: f64,
}

pub fn read_distribution<R: Read>(r: R) -> Result<DiscreteDistribution> {
    let rows: Vec<MassRow> = read_csv(r)?;
    DiscreteDistribution::new(rows.into_iter().map(|r| (r.point, r.mass)).collect())
}

pub fn write_distribution<W: Write>(w: W, d: &DiscreteDistribution) -> Result<()> {
    let rows: Vec<_> = d.atoms().iter().map(|&(point, mass)| MassRow { point, mass }).collect();
    write_csv(w, &rows)
}

/// Parses `bernoulli:p`, `point:v`, `uniform-grid:k` or `table:path.csv`.
pub fn parse_distribution(lit: &str) -> Result<DiscreteDistribution> {
    let (kind, arg) = lit
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("distribution literal {lit:?} has no ':'")))?;
    let num = |a: &str| a.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {a:?}")));
    match kind {
        "bernoulli" => DiscreteDistribution::bernoulli(num(arg)?),
        "point" => DiscreteDistribution::point(num(arg)?),
        "uniform-grid" => {
            let k = arg.trim().parse().map_err(|_| Error::Parse(format!("bad grid size {arg:?}")))?;
            DiscreteDistribution::uniform_grid(k)
        }
        "table" => read_distribution(std::fs::File::open(Path::new(arg))?),
        _ => Err(Error::Parse(format!("unknown distribution kind {kind:?}"))),
    }
}

fn sorted_grid(mut pts: Vec<f64>) -> Vec<f64> {
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Reads a `point,value` table; the listed points form the grid.
pub fn read_evariable<R: Read>(r: R, mu: f64) -> Result<TabulatedEVariable> {
    let mut rows: Vec<ValueRow> = read_csv(r)?;
    rows.sort_by(|a, b| a.point.total_cmp(&b.point));
    if rows.windows(2).any(|w| w[0].point == w[1].point) {
        return Err(Error::Parse("duplicate point in e-variable table".into()));
    }
    let space = SampleSpace::new(rows.iter().map(|r| r.point).collect(), mu)?;
    TabulatedEVariable::new(space, rows.iter().map(|r| r.value).collect())
}

pub fn write_evariable<W: Write>(w: W, e: &TabulatedEVariable) -> Result<()> {
    let rows: Vec<_> = e
        .space()
        .points()
        .iter()
        .zip(e.values())
        .map(|(&point, &value)| ValueRow { point, value })
        .collect();
    write_csv(w, &rows)
}

/// Reads an `x1,x2,value` table covering every cell of the grid formed by
/// the listed coordinates.
pub fn read_pair_table<R: Read>(r: R, mu: f64) -> Result<PairTable> {
    let rows: Vec<PairRow> = read_csv(r)?;
    let grid = sorted_grid(rows.iter().flat_map(|r| [r.x1, r.x2]).collect());
    let space = SampleSpace::new(grid, mu)?;
    let g = space.len();
    let mut values = vec![f64::NAN; g * g];
    for r in &rows {
        let i = space.index_of(r.x1).ok_or(Error::OffGrid(r.x1))?;
        let j = space.index_of(r.x2).ok_or(Error::OffGrid(r.x2))?;
        if !values[i * g + j].is_nan() {
            return Err(Error::Parse(format!("duplicate cell ({}, {})", r.x1, r.x2)));
        }
        values[i * g + j] = r.value;
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Shape(format!("table must list all {} cells", g * g)));
    }
    PairTable::new(space, values)
}

pub fn write_pair_table<W: Write>(w: W, e: &PairTable) -> Result<()> {
    let pts = e.space().points();
    let g = pts.len();
    let rows: Vec<_> = e
        .values()
        .iter()
        .enumerate()
        .map(|(k, &value)| PairRow { x1: pts[k / g], x2: pts[k % g], value })
        .collect();
    write_csv(w, &rows)
}

fn join_path(path: &[f64]) -> String {
    path.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn split_path(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad path entry {p:?}"))))
        .collect()
}

/// Reads a `depth,path,value` table listing every grid path up to the
/// maximum depth; the grid is the set of points used in the paths.
pub fn read_process<R: Read>(r: R, mu: f64) -> Result<TabulatedProcess> {
    let rows: Vec<ProcessRow> = read_csv(r)?;
    let parsed = rows
        .iter()
        .map(|r| {
            let p = split_path(&r.path)?;
            if p.len() != r.depth {
                return Err(Error::Parse(format!("path {:?} does not have depth {}", r.path, r.depth)));
            }
            Ok((p, r.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = sorted_grid(parsed.iter().flat_map(|(p, _)| p.iter().copied()).collect());
    let space = SampleSpace::new(grid, mu)?;
    let g = space.len();
    let depth = rows.iter().map(|r| r.depth).max().unwrap_or(0);
    let mut values: Vec<Vec<f64>> = (0..=depth).map(|t| vec![f64::NAN; g.pow(t as u32)]).collect();
    for (path, v) in parsed {
        let idx = path
            .iter()
            .try_fold(0usize, |acc, &x| space.index_of(x).map(|i| acc * g + i))
            .ok_or_else(|| Error::OffGrid(path[0]))?;
        let slot = &mut values[path.len()][idx];
        if !slot.is_nan() {
            return Err(Error::Parse(format!("duplicate path {}", join_path(&path))));
        }
        *slot = v;
    }
    if values.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Shape("process table must list every grid path up to its depth".into()));
    }
    TabulatedProcess::new(space, values)
}

pub fn write_process<W: Write>(w: W, p: &TabulatedProcess) -> Result<()> {
    let rows: Vec<_> = p
        .entries()
        .into_iter()
        .map(|(depth, path, value)| ProcessRow { depth, path: join_path(&path), value })
        .collect();
    write_csv(w, &rows)
}

/// Tabulates any process on `space` up to `depth` and writes it.
pub fn write_process_from<W: Write, P: EProcess + ?Sized>(w: W, p: &P, space: SampleSpace, depth: usize) -> Result<()> {
    write_process(w, &TabulatedProcess::from_process(p, space, depth)?)
}

pub fn read_alphas<R: Read>(r: R) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        alpha: f64,
    }
    Ok(read_csv::<_, Row>(r)?.into_iter().map(|r| r.alpha).collect())
}
