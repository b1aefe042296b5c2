//! CSV loading of a labeled graph from an edge list and a label file.
//!
//! The label file (headers `vertex,label`) fixes vertex order by row
//! order and numbers the blocks by first appearance of each label
//! name. The edge file (headers `u,v,weight`) may list a pair any
//! number of times; rows are merged, self-loops are dropped with a
//! warning, and endpoints must appear in the label file.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::graph::LabeledGraph;

/// How edge weights are interpreted. Connectome edge lists carry
/// synapse counts; any nonzero (finite) weight counts as an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightRule {
    NonzeroIsEdge,
}

/// A graph together with the identifier and label-name tables that
/// map it back to the input files. `edge_rows` counts the data rows
/// read from the edge file, before merging or self-loop dropping.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: LabeledGraph,
    pub vertex_ids: Vec<String>,
    pub label_names: Vec<String>,
    pub warnings: Vec<String>,
    pub edge_rows: usize,
}

fn parse_error(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => parse_error(path, line, format!("{other:?}")),
    }
}

fn open_with_headers(path: &Path, expect: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = rdr.headers().map_err(|e| csv_error(path, e))?;
    let ok = headers.len() == expect.len()
        && headers
            .iter()
            .zip(expect)
            .all(|(got, want)| got.eq_ignore_ascii_case(want));
    if !ok {
        return Err(parse_error(
            path,
            1,
            format!("expected headers {expect:?}, found {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }
    Ok(rdr)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Loads a labeled graph from CSV files.
pub fn load_graph(edge_path: &Path, labels_path: &Path, rule: WeightRule) -> Result<LoadedGraph> {
    let WeightRule::NonzeroIsEdge = rule;

    let mut vertex_ids: Vec<String> = Vec::new();
    let mut vertex_index: HashMap<String, usize> = HashMap::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut label_index: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<usize> = Vec::new();

    let mut rdr = open_with_headers(labels_path, &["vertex", "label"])?;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(labels_path, e))?;
        let line = record_line(&record);
        let id = record.get(0).unwrap_or("");
        let name = record.get(1).unwrap_or("");
        if id.is_empty() || name.is_empty() {
            return Err(parse_error(labels_path, line, "empty vertex id or label"));
        }
        if vertex_index.contains_key(id) {
            return Err(parse_error(
                labels_path,
                line,
                format!("duplicate vertex id {id:?}"),
            ));
        }
        vertex_index.insert(id.to_string(), vertex_ids.len());
        vertex_ids.push(id.to_string());
        let block = *label_index.entry(name.to_string()).or_insert_with(|| {
            label_names.push(name.to_string());
            label_names.len() - 1
        });
        labels.push(block);
    }

    let mut graph = LabeledGraph::new(label_names.len(), labels)?;
    let mut warnings = Vec::new();
    let mut edge_rows = 0usize;

    let mut rdr = open_with_headers(edge_path, &["u", "v", "weight"])?;
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(edge_path, e))?;
        let line = record_line(&record);
        edge_rows += 1;
        let lookup = |id: &str| -> Result<usize> {
            vertex_index.get(id).copied().ok_or_else(|| {
                parse_error(
                    edge_path,
                    line,
                    format!("vertex {id:?} is not in the label file"),
                )
            })
        };
        let u = lookup(record.get(0).unwrap_or(""))?;
        let v = lookup(record.get(1).unwrap_or(""))?;
        let raw = record.get(2).unwrap_or("");
        let weight: f64 = raw.parse().map_err(|_| {
            parse_error(edge_path, line, format!("weight {raw:?} is not a number"))
        })?;
        if !weight.is_finite() {
            return Err(parse_error(edge_path, line, format!("weight {weight} is not finite")));
        }
        if u == v {
            warnings.push(format!(
                "{}:{line}: self-loop on {:?} ignored",
                edge_path.display(),
                vertex_ids[u]
            ));
            continue;
        }
        if weight != 0.0 {
            graph.set_edge(u, v, true)?;
        }
    }

    Ok(LoadedGraph {
        graph,
        vertex_ids,
        label_names,
        warnings,
        edge_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_a_small_graph_with_merging_and_zero_weights() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(
            &dir,
            "labels.csv",
            "vertex,label\nA,motor\nB,sensory\nC,motor\n",
        );
        let edges = write_file(
            &dir,
            "edges.csv",
            "u,v,weight\nA,B,2.5\nB,A,1\nA,C,0\nB,C,3\n",
        );
        let loaded = load_graph(&edges, &labels, WeightRule::NonzeroIsEdge).unwrap();
        assert_eq!(loaded.vertex_ids, vec!["A", "B", "C"]);
        assert_eq!(loaded.label_names, vec!["motor", "sensory"]);
        assert_eq!(loaded.graph.labels(), &[0, 1, 0]);
        // A-B listed twice merges to one edge; A-C has weight 0.
        assert_eq!(loaded.graph.edge_count(), 2);
        assert!(loaded.graph.has_edge(0, 1));
        assert!(!loaded.graph.has_edge(0, 2));
        assert!(loaded.graph.has_edge(1, 2));
        assert_eq!(loaded.edge_rows, 4);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn empty_edge_file_gives_an_edgeless_graph() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(&dir, "labels.csv", "vertex,label\nA,x\nB,y\nC,x\n");
        let edges = write_file(&dir, "edges.csv", "u,v,weight\n");
        let loaded = load_graph(&edges, &labels, WeightRule::NonzeroIsEdge).unwrap();
        assert_eq!(loaded.graph.edge_count(), 0);
        assert_eq!(loaded.edge_rows, 0);
    }

    #[test]
    fn self_loops_warn_and_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(&dir, "labels.csv", "vertex,label\nA,x\nB,x\n");
        let edges = write_file(&dir, "edges.csv", "u,v,weight\nA,A,4\nA,B,1\n");
        let loaded = load_graph(&edges, &labels, WeightRule::NonzeroIsEdge).unwrap();
        assert_eq!(loaded.graph.edge_count(), 1);
        assert_eq!(loaded.warnings.len(), 1);
        assert!(loaded.warnings[0].contains("self-loop"));
        assert!(loaded.warnings[0].contains(":2:"));
    }

    #[test]
    fn parse_errors_carry_path_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let labels = write_file(&dir, "labels.csv", "vertex,label\nA,x\nB,x\n");

        let bad_weight = write_file(&dir, "edges.csv", "u,v,weight\nA,B,heavy\n");
        let err = load_graph(&bad_weight, &labels, WeightRule::NonzeroIsEdge).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edges.csv:2"), "{msg}");
        assert!(msg.contains("heavy"), "{msg}");

        let unknown = write_file(&dir, "edges2.csv", "u,v,weight\nA,Z,1\n");
        let err = load_graph(&unknown, &labels, WeightRule::NonzeroIsEdge).unwrap_err();
        assert!(err.to_string().contains("\"Z\""), "{err}");

        let dup = write_file(&dir, "labels2.csv", "vertex,label\nA,x\nA,y\n");
        let edges = write_file(&dir, "edges3.csv", "u,v,weight\n");
        let err = load_graph(&edges, &dup, WeightRule::NonzeroIsEdge).unwrap_err();
        assert!(err.to_string().contains("duplicate vertex id"), "{err}");

        let bad_headers = write_file(&dir, "labels3.csv", "id,class\nA,x\n");
        let err = load_graph(&edges, &bad_headers, WeightRule::NonzeroIsEdge).unwrap_err();
        assert!(err.to_string().contains("expected headers"), "{err}");
    }
}
