//! CSV and text file formats.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use tomocume_core::cumulants::SampleBatch;
use tomocume_core::solvers::RateEstimate;
use tomocume_core::supernet::SuperNetMap;
use tomocume_core::system::ReducedSystem;
use tomocume_core::topology::{parse_topology, PathSet, RoutingMatrix, Topology};
use tomocume_core::DenseMatrix;

use crate::table::MetricTable;

pub fn read_topology(path: &Path) -> Result<Topology> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_topology(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One sample per row, one component per column.
pub fn write_batch<W: Write>(out: W, batch: &SampleBatch, labels: &[String]) -> Result<()> {
    if labels.len() != batch.dim() {
        bail!("{} labels for {} columns", labels.len(), batch.dim());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(labels)?;
    for s in batch.samples() {
        w.write_record(s.iter().map(u32::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch<R: Read>(input: R) -> Result<(Vec<String>, SampleBatch)> {
    let mut r = csv::Reader::from_reader(input);
    let labels: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut data = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != labels.len() {
            bail!(
                "sample {} has {} fields, expected {}",
                line + 1,
                rec.len(),
                labels.len()
            );
        }
        for field in rec.iter() {
            let v: u32 = field
                .trim()
                .parse()
                .with_context(|| format!("sample {}: bad count {field:?}", line + 1))?;
            data.push(v);
        }
    }
    Ok((labels.clone(), SampleBatch::new(labels.len(), data)?))
}

/// Rows are links, columns are paths, headed by the path labels.
pub fn write_routing_matrix<W: Write>(
    out: W,
    a: &RoutingMatrix,
    link_labels: &[String],
    path_labels: &[String],
) -> Result<()> {
    if link_labels.len() != a.links() || path_labels.len() != a.paths() {
        bail!(
            "label counts do not match a {}x{} matrix",
            a.links(),
            a.paths()
        );
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("link").chain(path_labels.iter().map(String::as_str)))?;
    for (i, label) in link_labels.iter().enumerate() {
        let row = a
            .matrix()
            .row(i)
            .iter()
            .map(|&v| if v == 0.0 { "0" } else { "1" });
        w.write_record(std::iter::once(label.as_str()).chain(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Returns the link labels, path labels and matrix.
pub fn read_routing_matrix<R: Read>(input: R) -> Result<(Vec<String>, Vec<String>, RoutingMatrix)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 2 {
        bail!("routing matrix needs at least one path column");
    }
    let paths: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut links = Vec::new();
    let mut data = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            bail!("link row {} has {} fields", links.len() + 1, rec.len());
        }
        links.push(rec[0].to_owned());
        for field in rec.iter().skip(1) {
            data.push(match field.trim() {
                "0" => 0.0,
                "1" => 1.0,
                other => bail!("non-binary routing entry {other:?}"),
            });
        }
    }
    let m = DenseMatrix::new(links.len(), paths.len(), data)?;
    Ok((links, paths, RoutingMatrix::new(m)?))
}

pub fn write_path_set<W: Write>(out: W, p: &PathSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["column", "label", "weight", "nodes", "links"])?;
    for (j, ((path, label), nodes)) in p
        .paths()
        .zip(p.labels())
        .zip(p.node_sequences())
        .enumerate()
    {
        let links: Vec<String> = path.links.iter().map(usize::to_string).collect();
        w.write_record([
            j.to_string(),
            label,
            path.weight.to_string(),
            nodes,
            links.join(" "),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Row metadata followed by the weighted row entries.
pub fn write_reduced_system<W: Write>(
    out: W,
    s: &ReducedSystem,
    path_labels: &[String],
) -> Result<()> {
    if path_labels.len() != s.paths() {
        bail!("{} labels for {} columns", path_labels.len(), s.paths());
    }
    let mut w = csv::Writer::from_writer(out);
    let head = ["order", "tuple", "weight"];
    w.write_record(
        head.iter()
            .copied()
            .chain(path_labels.iter().map(String::as_str)),
    )?;
    for (i, meta) in s.row_meta().iter().enumerate() {
        let mut rec = vec![
            meta.order().to_string(),
            meta.tuple.to_string(),
            meta.weight.to_string(),
        ];
        rec.extend(s.matrix().row(i).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rate_estimate<W: Write>(out: W, est: &RateEstimate, labels: &[String]) -> Result<()> {
    if labels.len() != est.rates.len() {
        bail!("{} labels for {} rates", labels.len(), est.rates.len());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "lambda_hat", "clamped"])?;
    for ((label, rate), c) in labels.iter().zip(&est.rates).zip(&est.clamped) {
        w.write_record([label.clone(), rate.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pair_map<W: Write>(out: W, map: &SuperNetMap) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "columns"])?;
    for (label, cols) in map.pair_labels.iter().zip(&map.pair_columns) {
        let cols: Vec<String> = cols.iter().map(usize::to_string).collect();
        w.write_record([label.as_str(), cols.join(" ").as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table<W: Write>(out: W, t: &MetricTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once(t.corner.as_str()).chain(t.columns.iter().map(String::as_str)))?;
    for (label, row) in t.rows.iter().zip(&t.values) {
        let cells = row
            .iter()
            .map(|v| v.map(|x| x.to_string()).unwrap_or_default());
        w.write_record(std::iter::once(label.clone()).chain(cells))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, t: &MetricTable) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_table(std::io::BufWriter::new(file), t)
}
