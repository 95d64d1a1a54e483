//! File formats: networks, covariate tables, community labels and reports.
//!
//! All indices in files are one-based. Loaders reject malformed input and
//! name the offending line (and column where one applies); nothing is
//! repaired silently.
//!
//! * Edge list: CSV rows `node_i,layer_i,node_j,layer_j,weight`, with an
//!   optional header row. For an undirected network each pair may appear in
//!   either orientation; repeating a pair with a different weight is an error.
//! * Dense grid: headerless CSV of numbers, one matrix row per line.
//! * Tables: CSV with a header row. A column named `node` holds one-based
//!   node ids and fixes the row order; every other column is numeric unless
//!   it is the grouping column passed to [`load_table`].
//! * Communities: a table with a `community` column of one-based labels.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::centrality::CommunityStructure;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::simulation::{SigmaMinRow, SimulationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NetworkFormat {
    EdgeList,
    DenseSupra,
}

impl FromStr for NetworkFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edgelist" | "edges" => Ok(NetworkFormat::EdgeList),
            "dense" | "dense-supra" => Ok(NetworkFormat::DenseSupra),
            _ => Err(Error::InvalidArgument(format!(
                "unknown network format '{s}'; expected edge-list or dense"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedNetwork {
    pub supra: DenseMatrix,
    pub n_nodes: usize,
    pub n_layers: usize,
}

fn parse_error(source: &Path, line: usize, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: source.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// Non-empty CSV records with their one-based starting line.
fn records(text: &str, source: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_error(source, line, None, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn parse_f64(field: &str, source: &Path, line: usize, column: usize) -> Result<f64> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(parse_error(source, line, Some(column), format!("non-finite value {v}"))),
        Err(_) => Err(parse_error(source, line, Some(column), format!("expected a number, found '{field}'"))),
    }
}

fn parse_index(field: &str, source: &Path, line: usize, column: usize) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i - 1),
        _ => Err(parse_error(
            source,
            line,
            Some(column),
            format!("expected a one-based index, found '{field}'"),
        )),
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    line: usize,
    node_i: usize,
    layer_i: usize,
    node_j: usize,
    layer_j: usize,
    weight: f64,
}

fn parse_edges(text: &str, source: &Path) -> Result<Vec<Edge>> {
    let mut rows = records(text, source)?;
    if let Some((_, first)) = rows.first() {
        if first.first().is_some_and(|f| f.parse::<f64>().is_err()) {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(parse_error(source, 1, None, "no edges"));
    }
    rows.into_iter()
        .map(|(line, f)| {
            if f.len() != 5 {
                return Err(parse_error(
                    source,
                    line,
                    None,
                    format!("expected 5 fields (node_i, layer_i, node_j, layer_j, weight), found {}", f.len()),
                ));
            }
            Ok(Edge {
                line,
                node_i: parse_index(&f[0], source, line, 1)?,
                layer_i: parse_index(&f[1], source, line, 2)?,
                node_j: parse_index(&f[2], source, line, 3)?,
                layer_j: parse_index(&f[3], source, line, 4)?,
                weight: parse_f64(&f[4], source, line, 5)?,
            })
        })
        .collect()
}

fn resolve_dims(edges: &[Edge], n: Option<usize>, l: Option<usize>) -> Result<(usize, usize)> {
    let max_node = edges.iter().map(|e| e.node_i.max(e.node_j)).max().unwrap_or(0) + 1;
    let max_layer = edges.iter().map(|e| e.layer_i.max(e.layer_j)).max().unwrap_or(0) + 1;
    let (n, l) = (n.unwrap_or(max_node), l.unwrap_or(max_layer));
    if n == 0 || l == 0 {
        return Err(Error::InvalidArgument("N and L must be positive".into()));
    }
    for e in edges {
        if e.node_i >= n || e.node_j >= n {
            return Err(Error::IndexOutOfRange(format!(
                "line {}: node {} exceeds N = {n}",
                e.line,
                e.node_i.max(e.node_j) + 1
            )));
        }
        if e.layer_i >= l || e.layer_j >= l {
            return Err(Error::IndexOutOfRange(format!(
                "line {}: layer {} exceeds L = {l}",
                e.line,
                e.layer_i.max(e.layer_j) + 1
            )));
        }
    }
    Ok((n, l))
}

/// Places edges into an `NL x NL` matrix. Undirected edges fill both
/// orientations; a pair given twice must carry the same weight.
fn assemble_edges(edges: &[Edge], n: usize, l: usize, symmetric: bool, source: &Path) -> Result<DenseMatrix> {
    let mut seen: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut m = DenseMatrix::zeros(n * l, n * l);
    for e in edges {
        let a = e.layer_i * n + e.node_i;
        let b = e.layer_j * n + e.node_j;
        let key = if symmetric { (a.min(b), a.max(b)) } else { (a, b) };
        if let Some(&(w, first)) = seen.get(&key) {
            if w != e.weight {
                return Err(parse_error(
                    source,
                    e.line,
                    Some(5),
                    format!("weight {} conflicts with weight {w} given on line {first}", e.weight),
                ));
            }
            continue;
        }
        seen.insert(key, (e.weight, e.line));
        m[(a, b)] = e.weight;
        if symmetric {
            m[(b, a)] = e.weight;
        }
    }
    Ok(m)
}

fn parse_grid(text: &str, source: &Path) -> Result<DenseMatrix> {
    let rows = records(text, source)?;
    let Some((_, first)) = rows.first() else {
        return Err(parse_error(source, 1, None, "no matrix rows"));
    };
    let cols = first.len();
    let mut data = Vec::with_capacity(rows.len() * cols);
    for (line, fields) in &rows {
        if fields.len() != cols {
            return Err(parse_error(
                source,
                *line,
                None,
                format!("expected {cols} values, found {}", fields.len()),
            ));
        }
        for (c, f) in fields.iter().enumerate() {
            data.push(parse_f64(f, source, *line, c + 1)?);
        }
    }
    DenseMatrix::new(rows.len(), cols, data)
}

fn square_grid(text: &str, source: &Path) -> Result<DenseMatrix> {
    let m = parse_grid(text, source)?;
    if !m.is_square() {
        return Err(Error::dims(format!(
            "{}: grid is {}x{}, expected a square matrix",
            source.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}

fn split_dims(dim: usize, n: Option<usize>, l: Option<usize>) -> Result<(usize, usize)> {
    let (n, l) = match (n, l) {
        (Some(n), Some(l)) => (n, l),
        (Some(n), None) if n > 0 && dim % n == 0 => (n, dim / n),
        (None, Some(l)) if l > 0 && dim % l == 0 => (dim / l, l),
        (None, None) => {
            return Err(Error::InvalidArgument(
                "a dense supra matrix needs the number of nodes or layers declared".into(),
            ))
        }
        _ => (0, 0),
    };
    if n == 0 || l == 0 || n * l != dim {
        return Err(Error::dims(format!("{dim}x{dim} matrix does not split into N x L blocks")));
    }
    Ok((n, l))
}

/// Parses an undirected network from text; `source` only labels errors.
/// Undeclared `n`/`l` are inferred from the largest indices of an edge list
/// or from one declared dimension of a dense grid.
pub fn parse_network(
    text: &str,
    source: &Path,
    format: NetworkFormat,
    n: Option<usize>,
    l: Option<usize>,
) -> Result<LoadedNetwork> {
    let (supra, n_nodes, n_layers) = match format {
        NetworkFormat::EdgeList => {
            let edges = parse_edges(text, source)?;
            let (n, l) = resolve_dims(&edges, n, l)?;
            (assemble_edges(&edges, n, l, true, source)?, n, l)
        }
        NetworkFormat::DenseSupra => {
            let m = square_grid(text, source)?;
            let (n, l) = split_dims(m.rows(), n, l)?;
            m.check_symmetric()?;
            (m, n, l)
        }
    };
    Ok(LoadedNetwork {
        supra,
        n_nodes,
        n_layers,
    })
}

pub fn load_network(path: &Path, format: NetworkFormat, n: Option<usize>, l: Option<usize>) -> Result<LoadedNetwork> {
    parse_network(&read_text(path)?, path, format, n, l)
}

/// Directed flows (`row → column`), not necessarily symmetric. Edge lists
/// give each ordered pair at most once.
pub fn parse_flows(
    text: &str,
    source: &Path,
    format: NetworkFormat,
    n: Option<usize>,
    l: Option<usize>,
) -> Result<LoadedNetwork> {
    let (supra, n_nodes, n_layers) = match format {
        NetworkFormat::EdgeList => {
            let edges = parse_edges(text, source)?;
            let (n, l) = resolve_dims(&edges, n, l)?;
            (assemble_edges(&edges, n, l, false, source)?, n, l)
        }
        NetworkFormat::DenseSupra => {
            let m = square_grid(text, source)?;
            let (n, l) = split_dims(m.rows(), n, l)?;
            (m, n, l)
        }
    };
    Ok(LoadedNetwork {
        supra,
        n_nodes,
        n_layers,
    })
}

pub fn load_flows(path: &Path, format: NetworkFormat, n: Option<usize>, l: Option<usize>) -> Result<LoadedNetwork> {
    parse_flows(&read_text(path)?, path, format, n, l)
}

/// Dense grid text. Values use the shortest representation that parses back
/// to the same `f64`, so a round trip is exact.
pub fn supra_to_string(m: &DenseMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_supra(path: &Path, m: &DenseMatrix) -> Result<()> {
    Ok(fs::write(path, supra_to_string(m))?)
}

/// Undirected edge list with one line per nonzero pair (upper triangle).
pub fn edge_list_to_string(m: &DenseMatrix, n: usize) -> String {
    let mut out = String::from("node_i,layer_i,node_j,layer_j,weight\n");
    for a in 0..m.rows() {
        for b in a..m.cols() {
            let w = m[(a, b)];
            if w != 0.0 {
                out.push_str(&format!("{},{},{},{},{w}\n", a % n + 1, a / n + 1, b % n + 1, b / n + 1));
            }
        }
    }
    out
}

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub values: DenseMatrix,
    /// Group names when rows were averaged by a label column.
    pub row_labels: Option<Vec<String>>,
    /// Source line of each row (first line of its group when grouped).
    pub lines: Vec<usize>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.values.rows()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.values.column(j))
    }

    /// The table restricted to `keep`, in that order.
    pub fn select(&self, keep: &[&str]) -> Result<Table> {
        let idx = keep
            .iter()
            .map(|k| {
                self.column_index(k)
                    .ok_or_else(|| Error::InvalidArgument(format!("no column named '{k}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            names: keep.iter().map(|s| s.to_string()).collect(),
            values: self.values.select_columns(&idx),
            row_labels: self.row_labels.clone(),
            lines: self.lines.clone(),
        })
    }
}

pub fn parse_table(text: &str, source: &Path, group_by: Option<&str>) -> Result<Table> {
    let mut rows = records(text, source)?;
    if rows.is_empty() {
        return Err(parse_error(source, 1, None, "missing header row"));
    }
    let (header_line, header) = rows.remove(0);
    if let Some(c) = header.iter().position(String::is_empty) {
        return Err(parse_error(source, header_line, Some(c + 1), "empty column name"));
    }
    for (c, name) in header.iter().enumerate() {
        if header[..c].contains(name) {
            return Err(parse_error(source, header_line, Some(c + 1), format!("duplicate column '{name}'")));
        }
    }
    if rows.is_empty() {
        return Err(parse_error(source, header_line, None, "no data rows"));
    }
    let node_col = header.iter().position(|h| h.eq_ignore_ascii_case("node"));
    let group_col = match group_by {
        Some(g) => Some(header.iter().position(|h| h == g).ok_or_else(|| {
            parse_error(source, header_line, None, format!("no column named '{g}' to group by"))
        })?),
        None => None,
    };
    if group_col.is_some() && node_col.is_some() {
        return Err(parse_error(
            source,
            header_line,
            None,
            "a node column cannot be combined with grouping",
        ));
    }
    let value_cols: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != node_col && Some(c) != group_col)
        .collect();

    let mut parsed = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        if fields.len() != header.len() {
            return Err(parse_error(
                source,
                *line,
                None,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let vals = value_cols
            .iter()
            .map(|&c| parse_f64(&fields[c], source, *line, c + 1))
            .collect::<Result<Vec<_>>>()?;
        parsed.push((*line, vals));
    }

    let names: Vec<String> = value_cols.iter().map(|&c| header[c].clone()).collect();
    let p = names.len();
    if let Some(nc) = node_col {
        let n = rows.len();
        let mut order: Vec<Option<usize>> = vec![None; n];
        for (r, (line, fields)) in rows.iter().enumerate() {
            let id = parse_index(&fields[nc], source, *line, nc + 1)?;
            if id >= n {
                return Err(Error::IndexOutOfRange(format!(
                    "{}:{line}: node {} exceeds the {n} rows",
                    source.display(),
                    id + 1
                )));
            }
            if order[id].is_some() {
                return Err(parse_error(source, *line, Some(nc + 1), format!("node {} listed twice", id + 1)));
            }
            order[id] = Some(r);
        }
        let order: Vec<usize> = order.into_iter().map(|o| o.expect("ids form a permutation")).collect();
        let data = order.iter().flat_map(|&r| parsed[r].1.clone()).collect();
        return Ok(Table {
            names,
            values: DenseMatrix::new(n, p, data)?,
            row_labels: None,
            lines: order.iter().map(|&r| parsed[r].0).collect(),
        });
    }
    if let Some(gc) = group_col {
        let mut groups: Vec<(String, usize, Vec<f64>, usize)> = Vec::new();
        for ((line, fields), (_, vals)) in rows.iter().zip(&parsed) {
            let key = &fields[gc];
            match groups.iter_mut().find(|g| &g.0 == key) {
                Some(g) => {
                    g.2.iter_mut().zip(vals).for_each(|(s, v)| *s += v);
                    g.3 += 1;
                }
                None => groups.push((key.clone(), *line, vals.clone(), 1)),
            }
        }
        let data = groups
            .iter()
            .flat_map(|(_, _, sums, count)| sums.iter().map(move |s| s / *count as f64))
            .collect();
        return Ok(Table {
            names,
            values: DenseMatrix::new(groups.len(), p, data)?,
            row_labels: Some(groups.iter().map(|g| g.0.clone()).collect()),
            lines: groups.iter().map(|g| g.1).collect(),
        });
    }
    let n = parsed.len();
    Ok(Table {
        names,
        values: DenseMatrix::new(n, p, parsed.iter().flat_map(|(_, v)| v.clone()).collect())?,
        row_labels: None,
        lines: parsed.iter().map(|(l, _)| *l).collect(),
    })
}

/// Loads a headered numeric table; `group_by` names a label column whose
/// groups are averaged (groups keep their order of first appearance).
pub fn load_table(path: &Path, group_by: Option<&str>) -> Result<Table> {
    parse_table(&read_text(path)?, path, group_by)
}

/// A single response column: `column` if given, otherwise the table's only
/// value column.
pub fn response_column(table: &Table, column: Option<&str>, source: &Path) -> Result<(String, Vec<f64>)> {
    match column {
        Some(c) => table
            .column(c)
            .map(|v| (c.to_string(), v))
            .ok_or_else(|| parse_error(source, 1, None, format!("no column named '{c}'"))),
        None if table.names.len() == 1 => Ok((table.names[0].clone(), table.values.column(0))),
        None => Err(parse_error(
            source,
            1,
            None,
            format!("{} value columns; name the response column", table.names.len()),
        )),
    }
}

pub fn parse_communities(text: &str, source: &Path) -> Result<CommunityStructure> {
    let table = parse_table(text, source, None)?;
    let col = match table.column_index("community") {
        Some(c) => c,
        None if table.names.len() == 1 => 0,
        None => return Err(parse_error(source, 1, None, "expected a 'community' column")),
    };
    let labels = table
        .values
        .column(col)
        .into_iter()
        .zip(&table.lines)
        .map(|(v, &line)| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(parse_error(
                    source,
                    line,
                    None,
                    format!("community label {v} is not a positive integer"),
                ))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CommunityStructure::from_labels(labels)
}

pub fn load_communities(path: &Path) -> Result<CommunityStructure> {
    parse_communities(&read_text(path)?, path)
}

pub fn communities_to_string(comm: &CommunityStructure) -> String {
    let mut out = String::from("node,community\n");
    for (i, c) in comm.labels().iter().enumerate() {
        out.push_str(&format!("{},{c}\n", i + 1));
    }
    out
}

/// Pretty JSON with object keys in sorted order and a trailing newline.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's Map is a BTreeMap, so going through Value sorts every object
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(fs::write(path, to_sorted_json(value)?)?)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(&r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per (node, layer): `V`, `C` and, with communities, the label and `Z`.
pub fn centrality_csv(
    v: &DenseMatrix,
    c: &DenseMatrix,
    communities: Option<(&CommunityStructure, &[f64])>,
) -> Result<String> {
    let mut header = vec!["node", "layer", "v", "c"];
    if communities.is_some() {
        header.extend(["community", "z"]);
    }
    let rows = (0..v.rows()).flat_map(|i| {
        (0..v.cols()).map(move |l| {
            let mut r = vec![(i + 1).to_string(), (l + 1).to_string(), v[(i, l)].to_string(), c[(i, l)].to_string()];
            if let Some((comm, z)) = communities {
                r.push(comm.labels()[i].to_string());
                r.push(z[i].to_string());
            }
            r
        })
    });
    csv_string(&header, rows)
}

/// Per-cell coefficient summaries: the data behind MSE-versus-N curves.
pub fn summary_csv(report: &SimulationReport) -> Result<String> {
    let rows = report.cells.iter().flat_map(|cell| {
        cell.coefficients.iter().map(move |coef| {
            vec![
                cell.n.to_string(),
                cell.a_n_rule.to_string(),
                cell.model.label().to_string(),
                coef.name.clone(),
                coef.truth.to_string(),
                coef.mean.to_string(),
                coef.sd.to_string(),
                coef.bias.to_string(),
                coef.mse.to_string(),
                cell.mean_a_n_over_gap.to_string(),
                cell.n_success.to_string(),
                cell.n_failed.to_string(),
            ]
        })
    });
    csv_string(
        &[
            "n", "a_n_rule", "model", "coefficient", "truth", "mean", "sd", "bias", "mse", "a_n_over_gap",
            "n_success", "n_failed",
        ],
        rows,
    )
}

/// Standardized estimates against normal quantiles, for QQ plots.
pub fn qq_csv(report: &SimulationReport) -> Result<String> {
    let rows = report.cells.iter().flat_map(|cell| {
        cell.coefficients.iter().flat_map(move |coef| {
            coef.qq.iter().enumerate().map(move |(k, p)| {
                vec![
                    cell.n.to_string(),
                    cell.a_n_rule.to_string(),
                    cell.model.label().to_string(),
                    coef.name.clone(),
                    (k + 1).to_string(),
                    p.sample.to_string(),
                    p.theoretical.to_string(),
                ]
            })
        })
    });
    csv_string(&["n", "a_n_rule", "model", "coefficient", "rank", "sample", "theoretical"], rows)
}

pub fn sigma_min_csv(rows: &[SigmaMinRow]) -> Result<String> {
    let variant = |r: &SigmaMinRow| {
        serde_json::to_value(r.variant)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    };
    csv_string(
        &["n", "variant", "sigma_min", "sigma_min_sqrt_n"],
        rows.iter()
            .map(|r| vec![r.n.to_string(), variant(r), r.sigma_min.to_string(), r.scaled.to_string()]),
    )
}
