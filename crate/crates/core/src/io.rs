//! CSV and JSON readers and writers for every file the tools exchange.
//!
//! All vertex and frequency indices in files are 1-based. Floats are written
//! in Rust's shortest round-trip form, so writing then reading is lossless
//! and repeated runs produce identical bytes.

use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::FrequencyResponse;
use crate::csice::{ChannelEstimate, Component};
use crate::dataset::RawDataset;
use crate::error::{Error, Result};
use crate::graph::{Graph, Station};
use crate::montecarlo::BoundReport;
use crate::spectral::{Domain, SignalEnsemble, SpectralBasis};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Error::Io {
                path: path.to_path_buf(),
                source,
            },
            _ => unreachable!("checked is_io_error"),
        }
    } else {
        parse_err(path, e.to_string())
    }
}

fn reader(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file))
}

fn write_row<I, S>(w: &mut csv::Writer<File>, path: &Path, row: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row).map_err(|e| csv_err(path, e))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(io_err(path))
}

fn check_header(r: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let got = r.headers().map_err(|e| csv_err(path, e))?;
    let got: Vec<&str> = got.iter().collect();
    if got != expected {
        return Err(parse_err(
            path,
            format!("expected header {expected:?}, found {got:?}"),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    path: &Path,
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec
        .get(i)
        .ok_or_else(|| parse_err(path, format!("line {line}: missing column {name}")))?;
    raw.parse().map_err(|_| {
        parse_err(
            path,
            format!("line {line}: cannot parse {name} from {raw:?}"),
        )
    })
}

fn one_based(path: &Path, v: usize, name: &str) -> Result<usize> {
    v.checked_sub(1)
        .ok_or_else(|| parse_err(path, format!("{name} indices are 1-based, found 0")))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Reads `id,x,y` station coordinates.
pub fn read_stations(path: &Path) -> Result<Vec<Station>> {
    let mut r = reader(path, true)?;
    check_header(&mut r, path, &["id", "x", "y"])?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        out.push(Station {
            id: field(path, &rec, 0, "id")?,
            x: field(path, &rec, 1, "x")?,
            y: field(path, &rec, 2, "y")?,
        });
    }
    Ok(out)
}

pub fn write_stations(path: &Path, stations: &[Station]) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["id", "x", "y"])?;
    for s in stations {
        write_row(&mut w, path, [s.id.clone(), fmt(s.x), fmt(s.y)])?;
    }
    finish(w, path)
}

/// Reads a 1-based `i,j` edge list. The vertex count is `n_vertices` when
/// given, otherwise the largest index that appears.
pub fn read_edges(path: &Path, n_vertices: Option<usize>) -> Result<Graph> {
    let mut r = reader(path, true)?;
    check_header(&mut r, path, &["i", "j"])?;
    let mut edges = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let i = one_based(path, field(path, &rec, 0, "i")?, "vertex")?;
        let j = one_based(path, field(path, &rec, 1, "j")?, "vertex")?;
        edges.push((i, j));
    }
    let n =
        n_vertices.unwrap_or_else(|| edges.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0));
    Graph::new(n, edges)
}

pub fn write_edges(path: &Path, graph: &Graph) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["i", "j"])?;
    for (i, j) in graph.edges() {
        write_row(&mut w, path, [(i + 1).to_string(), (j + 1).to_string()])?;
    }
    finish(w, path)
}

/// Writes `n,lambda`.
pub fn write_spectrum(path: &Path, basis: &SpectralBasis) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["n", "lambda"])?;
    for (n, l) in basis.eigenvalues().iter().enumerate() {
        write_row(&mut w, path, [(n + 1).to_string(), fmt(*l)])?;
    }
    finish(w, path)
}

/// Reads a headerless rectangular CSV of floats.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = reader(path, false)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = (0..rec.len())
            .map(|i| field(path, &rec, i, "entry"))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(parse_err(path, "empty matrix"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = writer(path)?;
    for row in m.row_iter() {
        write_row(&mut w, path, row.iter().map(|v| fmt(*v)))?;
    }
    finish(w, path)
}

/// Reads signals laid out one sample per row under a `v1,…,vN` header.
pub fn read_signals(path: &Path, domain: Domain) -> Result<SignalEnsemble> {
    let mut r = reader(path, true)?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    for (k, h) in headers.iter().enumerate() {
        if h != format!("v{}", k + 1) {
            return Err(parse_err(
                path,
                format!("column {} should be named v{}, found {h:?}", k + 1, k + 1),
            ));
        }
    }
    let mut samples: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = (0..rec.len())
            .map(|i| field(path, &rec, i, "value"))
            .collect::<Result<Vec<f64>>>()?;
        samples.push(row);
    }
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    SignalEnsemble::from_signals(&samples, domain)
}

pub fn write_signals(path: &Path, e: &SignalEnsemble) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, (1..=e.dim()).map(|k| format!("v{k}")))?;
    for m in 0..e.len() {
        write_row(&mut w, path, e.signal(m).iter().map(|v| fmt(*v)))?;
    }
    finish(w, path)
}

/// Reads `n,gamma` with rows in order `1..N`.
pub fn read_frequency_response(path: &Path) -> Result<FrequencyResponse> {
    let mut r = reader(path, true)?;
    check_header(&mut r, path, &["n", "gamma"])?;
    let mut gamma = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let n: usize = field(path, &rec, 0, "n")?;
        if n != gamma.len() + 1 {
            return Err(parse_err(
                path,
                format!("expected row n = {}, found {n}", gamma.len() + 1),
            ));
        }
        gamma.push(field(path, &rec, 1, "gamma")?);
    }
    FrequencyResponse::new(gamma)
}

pub fn write_frequency_response(path: &Path, gamma: &FrequencyResponse) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["n", "gamma"])?;
    for (n, g) in gamma.as_slice().iter().enumerate() {
        write_row(&mut w, path, [(n + 1).to_string(), fmt(*g)])?;
    }
    finish(w, path)
}

/// Writes `n,gamma_m,in_support,component,is_anchor`. `component` is the
/// 1-based component number, or 0 outside the support.
pub fn write_channel_estimate(path: &Path, est: &ChannelEstimate) -> Result<()> {
    let mut w = writer(path)?;
    write_row(
        &mut w,
        path,
        ["n", "gamma_m", "in_support", "component", "is_anchor"],
    )?;
    for (n, g) in est.gamma_m.as_slice().iter().enumerate() {
        let comp = est.component_of(n).map_or(0, |k| k + 1);
        write_row(
            &mut w,
            path,
            [
                (n + 1).to_string(),
                fmt(*g),
                est.support[n].to_string(),
                comp.to_string(),
                est.is_anchor(n).to_string(),
            ],
        )?;
    }
    finish(w, path)
}

/// Reads a channel estimate back. Spanning trees are not part of the CSV,
/// so components come back with empty trees.
pub fn read_channel_estimate(path: &Path) -> Result<ChannelEstimate> {
    let mut r = reader(path, true)?;
    check_header(
        &mut r,
        path,
        &["n", "gamma_m", "in_support", "component", "is_anchor"],
    )?;
    let mut gamma = Vec::new();
    let mut support = Vec::new();
    let mut components: Vec<Component> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let n: usize = field(path, &rec, 0, "n")?;
        if n != gamma.len() + 1 {
            return Err(parse_err(
                path,
                format!("expected row n = {}, found {n}", gamma.len() + 1),
            ));
        }
        let g: f64 = field(path, &rec, 1, "gamma_m")?;
        let inside: bool = field(path, &rec, 2, "in_support")?;
        let comp: usize = field(path, &rec, 3, "component")?;
        let anchor: bool = field(path, &rec, 4, "is_anchor")?;
        let v = n - 1;
        if comp > 0 {
            if !inside {
                return Err(parse_err(
                    path,
                    format!("n = {n} has a component but is outside the support"),
                ));
            }
            while components.len() < comp {
                components.push(Component {
                    vertices: Vec::new(),
                    anchor: usize::MAX,
                    anchor_sign: 1.0,
                    tree: Vec::new(),
                });
            }
            let c = &mut components[comp - 1];
            c.vertices.push(v);
            if anchor {
                c.anchor = v;
                c.anchor_sign = if g < 0.0 { -1.0 } else { 1.0 };
            }
        }
        gamma.push(g);
        support.push(inside);
    }
    for (k, c) in components.iter().enumerate() {
        if c.vertices.is_empty() {
            return Err(Error::EmptyComponent(k + 1));
        }
        if c.anchor == usize::MAX {
            return Err(parse_err(
                path,
                format!("component {} has no anchor", k + 1),
            ));
        }
    }
    Ok(ChannelEstimate {
        gamma_m: FrequencyResponse::new(gamma)?,
        support,
        components,
        clamped_radicands: 0,
    })
}

#[derive(Serialize)]
struct ComponentJson {
    component: usize,
    vertices: Vec<usize>,
    anchor: usize,
    anchor_sign: f64,
    /// `[vertex, parent]` pairs in breadth-first order.
    tree: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct EstimateJson {
    n_vertices: usize,
    support_size: usize,
    clamped_radicands: usize,
    components: Vec<ComponentJson>,
}

/// Component metadata (anchors and spanning-tree parent maps) as JSON.
pub fn write_components_json(path: &Path, est: &ChannelEstimate) -> Result<()> {
    let doc = EstimateJson {
        n_vertices: est.n_vertices(),
        support_size: est.support.iter().filter(|w| **w).count(),
        clamped_radicands: est.clamped_radicands,
        components: est
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| ComponentJson {
                component: k + 1,
                vertices: c.vertices.iter().map(|v| v + 1).collect(),
                anchor: c.anchor + 1,
                anchor_sign: c.anchor_sign,
                tree: c.tree.iter().map(|&(v, p)| [v + 1, p + 1]).collect(),
            })
            .collect(),
    };
    write_json(path, &doc)
}

/// Writes `n,nprime,eps,empirical,bound,flag`.
pub fn write_bound_report(path: &Path, report: &BoundReport) -> Result<()> {
    let mut w = writer(path)?;
    write_row(
        &mut w,
        path,
        ["n", "nprime", "eps", "empirical", "bound", "flag"],
    )?;
    for c in &report.checks {
        write_row(
            &mut w,
            path,
            [
                (c.probe_n + 1).to_string(),
                (c.probe_n_prime + 1).to_string(),
                fmt(c.eps),
                fmt(c.empirical),
                fmt(c.bound),
                c.flag.to_string(),
            ],
        )?;
    }
    finish(w, path)
}

/// Reads `station,day,hour,value` records: stations and days 1-based, hours
/// 0-based. Every (station, day, hour) combination must appear exactly once.
pub fn read_raw_dataset(path: &Path) -> Result<RawDataset> {
    let mut r = reader(path, true)?;
    check_header(&mut r, path, &["station", "day", "hour", "value"])?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let s = one_based(path, field(path, &rec, 0, "station")?, "station")?;
        let d = one_based(path, field(path, &rec, 1, "day")?, "day")?;
        let h: usize = field(path, &rec, 2, "hour")?;
        let v: f64 = field(path, &rec, 3, "value")?;
        rows.push((s, d, h, v));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ns = rows.iter().map(|r| r.0).max().unwrap() + 1;
    let nd = rows.iter().map(|r| r.1).max().unwrap() + 1;
    let nh = rows.iter().map(|r| r.2).max().unwrap() + 1;
    let mut grid = vec![f64::NAN; ns * nh * nd];
    for (s, d, h, v) in rows {
        let slot = &mut grid[(s * nh + h) * nd + d];
        if !slot.is_nan() {
            return Err(parse_err(
                path,
                format!(
                    "duplicate reading for station {}, day {}, hour {h}",
                    s + 1,
                    d + 1
                ),
            ));
        }
        *slot = v;
    }
    RawDataset::from_fn(ns, nh, nd, |s, h, d| grid[(s * nh + h) * nd + d])
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e.to_string()))?;
    text.push('\n');
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}
