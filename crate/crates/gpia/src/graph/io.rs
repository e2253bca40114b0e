//! Edge-list and feature-CSV readers and writers.
//!
//! Edge file: one `u<TAB>v` pair per line, 0-based ids, `#` comments.
//! Feature file: CSV with header `node_id,f0,...,f{d-1},label`, one row
//! per node sorted by `node_id`.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::Graph;
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path)?;
    let mut edges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(path, i + 1, format!("expected 'u<TAB>v', got '{line}'")));
        };
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, format!("invalid node id '{s}'")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    Ok(edges)
}

fn read_features(path: &Path) -> Result<(Array2<f64>, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    let cols = header.len();
    let well_formed = cols >= 3
        && &header[0] == "node_id"
        && &header[cols - 1] == "label"
        && (1..cols - 1).all(|c| header[c] == format!("f{}", c - 1));
    if !well_formed {
        return Err(parse_err(path, 1, "header must be node_id,f0,...,f{d-1},label"));
    }
    let d = cols - 2;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        if record.len() != cols {
            return Err(parse_err(path, line, format!("expected {cols} fields, got {}", record.len())));
        }
        let id: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid node id '{}'", &record[0])))?;
        if id != row {
            return Err(parse_err(path, line, format!("expected node_id {row}, got {id}")));
        }
        for c in 1..=d {
            let v: f64 = record[c]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("invalid number '{}'", &record[c])))?;
            data.push(v);
        }
        labels.push(
            record[cols - 1]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, line, format!("invalid label '{}'", &record[cols - 1])))?,
        );
    }
    let n = labels.len();
    let x = Array2::from_shape_vec((n, d), data).expect("row lengths checked");
    Ok((x, labels))
}

/// Reads a graph from an edge file and a feature file.
pub fn load_graph(edge_path: impl AsRef<Path>, feature_path: impl AsRef<Path>, property_col: usize) -> Result<Graph> {
    let (edge_path, feature_path) = (edge_path.as_ref(), feature_path.as_ref());
    let (x, labels) = read_features(feature_path)?;
    let n = x.nrows();
    let edges = read_edges(edge_path)?;
    if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(Error::NodeRange { id: if u >= n { u } else { v }, n });
    }
    Graph::new(x, labels, edges, property_col)
}

pub fn write_edges(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# {} nodes, {} undirected edges", g.n(), g.num_edges())?;
    for &(u, v) in g.edges() {
        writeln!(out, "{u}\t{v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_features(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = g.feature_dim();
    let mut header = vec!["node_id".to_string()];
    header.extend((0..d).map(|c| format!("f{c}")));
    header.push("label".into());
    w.write_record(&header)?;
    for i in 0..g.n() {
        let mut row = vec![i.to_string()];
        row.extend(g.features().row(i).iter().map(|v| format!("{v}")));
        row.push(g.labels()[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `edges.tsv` and `features.csv` into `dir`.
pub fn write_graph(g: &Graph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_edges(g, dir.join("edges.tsv"))?;
    write_features(g, dir.join("features.csv"))
}

/// Reads `edges.tsv` and `features.csv` from `dir`.
pub fn load_graph_dir(dir: impl AsRef<Path>, property_col: usize) -> Result<Graph> {
    let dir = dir.as_ref();
    load_graph(dir.join("edges.tsv"), dir.join("features.csv"), property_col)
}
