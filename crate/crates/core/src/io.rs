//! Text formats: edge-list graphs, JSONL batches, label and ground-truth
//! CSVs, feature CSVs and component dumps.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::builder::FeatureMatrix;
use crate::components::ComponentLabeling;
use crate::error::{Error, Result};
use crate::graph::{BatchUpdate, DynamicGraph, InsertRecord, VertexId, WeightedEdge};
use crate::labels::{Class, LabelState};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// A graph file: `N M`, then `M` lines `u v w` with `u < v`. Vertices are
/// `0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<WeightedEdge>,
}

impl GraphFile {
    pub fn vertices(&self) -> Vec<VertexId> {
        (0..self.n).map(VertexId::from_index).collect()
    }

    pub fn to_graph(&self) -> Result<DynamicGraph> {
        DynamicGraph::from_edges(self.vertices(), &self.edges)
    }
}

pub fn read_graph(reader: impl BufRead) -> Result<GraphFile> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match header {
            None => {
                let [n, m] = fields[..] else {
                    return Err(parse_err(lineno, "header must be 'N M'"));
                };
                let n = n.parse().map_err(|_| parse_err(lineno, format!("bad vertex count '{n}'")))?;
                let m = m.parse().map_err(|_| parse_err(lineno, format!("bad edge count '{m}'")))?;
                header = Some((n, m));
            }
            Some((n, _)) => {
                let [u, v, w] = fields[..] else {
                    return Err(parse_err(lineno, "edge line must be 'u v w'"));
                };
                let u: u32 = u.parse().map_err(|_| parse_err(lineno, format!("bad vertex '{u}'")))?;
                let v: u32 = v.parse().map_err(|_| parse_err(lineno, format!("bad vertex '{v}'")))?;
                let w: f64 = w.parse().map_err(|_| parse_err(lineno, format!("bad weight '{w}'")))?;
                if u as usize >= n || v as usize >= n {
                    return Err(parse_err(lineno, format!("vertex out of range 0..{n}")));
                }
                if u >= v {
                    return Err(parse_err(lineno, "edges must be written with u < v"));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(parse_err(lineno, format!("weight must be finite and >= 0, got {w}")));
                }
                edges.push(WeightedEdge::new(u, v, w));
            }
        }
    }
    let Some((n, m)) = header else {
        return Err(parse_err(0, "missing 'N M' header"));
    };
    if edges.len() != m {
        return Err(parse_err(0, format!("header announces {m} edges, found {}", edges.len())));
    }
    Ok(GraphFile { n, edges })
}

pub fn write_graph(mut w: impl Write, n: usize, edges: &[WeightedEdge]) -> Result<()> {
    writeln!(w, "{n} {}", edges.len())?;
    for e in edges {
        let e = e.normalized();
        writeln!(w, "{} {} {}", e.u, e.v, e.w)?;
    }
    Ok(())
}

/// Writes the alive part of a graph with ids remapped to `0..N` in ascending
/// order; returns the id behind each new index.
pub fn write_dynamic_graph(w: impl Write, graph: &DynamicGraph) -> Result<Vec<VertexId>> {
    let alive: Vec<VertexId> = graph.alive_vertices().collect();
    let edges: Vec<WeightedEdge> = graph
        .edge_list()
        .into_iter()
        .map(|e| WeightedEdge {
            u: VertexId::from_index(alive.binary_search(&e.u).expect("alive endpoint")),
            v: VertexId::from_index(alive.binary_search(&e.v).expect("alive endpoint")),
            w: e.w,
        })
        .collect();
    write_graph(w, alive.len(), &edges)?;
    Ok(alive)
}

#[derive(Serialize, Deserialize)]
struct InsertLine {
    id: u32,
    gt: Option<u8>,
    edges: Vec<(u32, f64)>,
}

#[derive(Serialize, Deserialize)]
struct BatchLine {
    t: u64,
    inserts: Vec<InsertLine>,
    deletes: Vec<u32>,
}

pub fn batch_to_json(b: &BatchUpdate) -> Result<String> {
    let line = BatchLine {
        t: b.t,
        inserts: b
            .inserts
            .iter()
            .map(|r| InsertLine {
                id: r.id.0,
                gt: r.ground_truth.map(Class::bit),
                edges: r.edges.iter().map(|&(v, w)| (v.0, w)).collect(),
            })
            .collect(),
        deletes: b.deletes.iter().map(|d| d.0).collect(),
    };
    Ok(serde_json::to_string(&line)?)
}

pub fn batch_from_json(s: &str) -> Result<BatchUpdate> {
    let line: BatchLine = serde_json::from_str(s)?;
    let mut inserts = Vec::with_capacity(line.inserts.len());
    for r in line.inserts {
        let ground_truth = match r.gt {
            None => None,
            Some(bit) => Some(Class::from_bit(bit).ok_or_else(|| {
                Error::validation(format!("ground truth of vertex {} must be 0, 1 or null, got {bit}", r.id))
            })?),
        };
        inserts.push(InsertRecord {
            id: VertexId(r.id),
            ground_truth,
            edges: r.edges.into_iter().map(|(v, w)| (VertexId(v), w)).collect(),
        });
    }
    Ok(BatchUpdate {
        t: line.t,
        inserts,
        deletes: line.deletes.into_iter().map(VertexId).collect(),
    })
}

pub fn write_batches(mut w: impl Write, batches: &[BatchUpdate]) -> Result<()> {
    for b in batches {
        writeln!(w, "{}", batch_to_json(b)?)?;
    }
    Ok(())
}

pub fn read_batches(reader: impl BufRead) -> Result<Vec<BatchUpdate>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(batch_from_json(&line).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    Ok(out)
}

/// `vertex,fractional_label,binary_label,is_ground_truth` for every alive
/// vertex, ascending.
pub fn write_labels(mut w: impl Write, graph: &DynamicGraph, labels: &LabelState) -> Result<()> {
    writeln!(w, "vertex,fractional_label,binary_label,is_ground_truth")?;
    for v in graph.alive_vertices() {
        let f = labels.value(v);
        writeln!(
            w,
            "{v},{f},{},{}",
            Class::of_fraction(f).bit(),
            u8::from(labels.is_labeled(v))
        )?;
    }
    Ok(())
}

/// Rows of a labels CSV: `(vertex, fractional, binary, is_ground_truth)`.
pub fn read_labels(reader: impl BufRead) -> Result<Vec<(VertexId, f64, u8, bool)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        let [v, frac, bin, gt] = f[..] else {
            return Err(parse_err(i + 1, "expected 4 columns"));
        };
        let bad = |what: &str| parse_err(i + 1, format!("bad {what}"));
        out.push((
            VertexId(v.parse().map_err(|_| bad("vertex"))?),
            frac.parse().map_err(|_| bad("label"))?,
            bin.parse().map_err(|_| bad("binary label"))?,
            gt == "1",
        ));
    }
    Ok(out)
}

pub fn write_ground_truth(mut w: impl Write, truth: &[(VertexId, Class)]) -> Result<()> {
    writeln!(w, "vertex,class")?;
    for (v, c) in truth {
        writeln!(w, "{v},{}", c.bit())?;
    }
    Ok(())
}

pub fn read_ground_truth(reader: impl BufRead) -> Result<Vec<(VertexId, Class)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (i == 0 && t.starts_with("vertex")) {
            continue;
        }
        let Some((v, c)) = t.split_once(',') else {
            return Err(parse_err(i + 1, "expected 'vertex,class'"));
        };
        let v: u32 = v.trim().parse().map_err(|_| parse_err(i + 1, format!("bad vertex '{v}'")))?;
        let c = c
            .trim()
            .parse::<u8>()
            .ok()
            .and_then(Class::from_bit)
            .ok_or_else(|| parse_err(i + 1, format!("class must be 0 or 1, got '{c}'")))?;
        out.push((VertexId(v), c));
    }
    Ok(out)
}

/// Feature CSV: first column id, then (when `with_label`) a 0/1 label
/// column, then the feature values. A first line that does not parse as a
/// number in the id column is treated as a header.
pub fn read_features(reader: impl BufRead, with_label: bool) -> Result<FeatureMatrix> {
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut fields = t.split(',').map(str::trim);
        let id = fields.next().unwrap_or_default();
        let Ok(id) = id.parse::<u32>() else {
            if i == 0 {
                continue;
            }
            return Err(parse_err(i + 1, format!("bad id '{id}'")));
        };
        if with_label {
            let l = fields.next().unwrap_or_default();
            let c = l
                .parse::<u8>()
                .ok()
                .and_then(Class::from_bit)
                .ok_or_else(|| parse_err(i + 1, format!("label must be 0 or 1, got '{l}'")))?;
            labels.push(c);
        }
        let row: Vec<f64> = fields
            .map(|x| x.parse::<f64>().map_err(|_| parse_err(i + 1, format!("bad feature value '{x}'"))))
            .collect::<Result<_>>()?;
        ids.push(VertexId(id));
        rows.push(row);
    }
    FeatureMatrix::new(ids, rows, with_label.then_some(labels))
}

pub fn write_components(mut w: impl Write, c: &ComponentLabeling) -> Result<()> {
    writeln!(w, "vertex,component")?;
    for (v, id) in c.vertices.iter().zip(&c.component_id) {
        writeln!(w, "{v},{id}")?;
    }
    Ok(())
}
