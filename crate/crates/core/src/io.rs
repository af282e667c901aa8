//! Dataset files: tab-separated edges, attributes (sparse `node\tdim` pairs or
//! a dense 0/1 CSV), labels and split tags. Ids are 0-based; blank lines and
//! lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitTag};

/// Paths of a dataset; sizes not given explicitly are inferred from the
/// largest id present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub attributes: PathBuf,
    pub labels: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub num_nodes: Option<usize>,
    pub num_features: Option<usize>,
    pub num_classes: Option<usize>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        msg: e.to_string(),
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

fn fields<'a>(path: &Path, line: usize, text: &'a str, expected: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = text.split('\t').map(str::trim).collect();
    if parts.len() != expected {
        return Err(parse_err(
            path,
            line,
            format!("expected {expected} tab-separated fields, found {}", parts.len()),
        ));
    }
    Ok(parts)
}

fn id(path: &Path, line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| parse_err(path, line, format!("`{s}` is not a non-negative integer")))
}

pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(ln, l)| {
            let f = fields(path, ln, l, 2)?;
            Ok((id(path, ln, f[0])?, id(path, ln, f[1])?))
        })
        .collect()
}

/// Positions of the 1-entries. `.csv` files are dense rows of `0`/`1`
/// values (one row per node); anything else holds `node\tdim` pairs, with
/// an optional third column that must be `1`.
pub fn read_attributes(path: &Path) -> Result<(Vec<(usize, usize)>, Option<(usize, usize)>)> {
    let text = read(path)?;
    let dense = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let mut ones = Vec::new();
    if dense {
        let mut width = None;
        let mut rows = 0;
        for (ln, l) in content_lines(&text) {
            let vals: Vec<&str> = l.split(',').map(str::trim).collect();
            match width {
                None => width = Some(vals.len()),
                Some(w) if w != vals.len() => {
                    return Err(parse_err(path, ln, format!("row has {} values, expected {w}", vals.len())))
                }
                _ => {}
            }
            for (d, v) in vals.iter().enumerate() {
                match *v {
                    "0" => {}
                    "1" => ones.push((rows, d)),
                    other => return Err(parse_err(path, ln, format!("attribute value `{other}` is not binary"))),
                }
            }
            rows += 1;
        }
        return Ok((ones, width.map(|w| (rows, w))));
    }
    for (ln, l) in content_lines(&text) {
        let parts: Vec<&str> = l.split('\t').map(str::trim).collect();
        match parts.len() {
            2 => {}
            3 => match parts[2] {
                "1" | "1.0" => {}
                "0" | "0.0" => continue,
                other => return Err(parse_err(path, ln, format!("attribute value `{other}` is not binary"))),
            },
            n => return Err(parse_err(path, ln, format!("expected 2 tab-separated fields, found {n}"))),
        }
        ones.push((id(path, ln, parts[0])?, id(path, ln, parts[1])?));
    }
    Ok((ones, None))
}

pub fn read_labels(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(ln, l)| {
            let f = fields(path, ln, l, 2)?;
            Ok((id(path, ln, f[0])?, id(path, ln, f[1])?))
        })
        .collect()
}

pub fn read_split(path: &Path) -> Result<Vec<(usize, SplitTag)>> {
    let text = read(path)?;
    content_lines(&text)
        .map(|(ln, l)| {
            let f = fields(path, ln, l, 2)?;
            let tag = match f[1] {
                "labeled" => SplitTag::Labeled,
                "unlabeled" => SplitTag::Unlabeled,
                other => return Err(parse_err(path, ln, format!("unknown split tag `{other}`"))),
            };
            Ok((id(path, ln, f[0])?, tag))
        })
        .collect()
}

/// Loads and validates a dataset.
pub fn load_dataset(paths: &DatasetPaths) -> Result<Graph> {
    let edges = read_edges(&paths.edges)?;
    let (ones, dense_shape) = read_attributes(&paths.attributes)?;
    let labels = paths.labels.as_deref().map(read_labels).transpose()?;
    let split = paths.split.as_deref().map(read_split).transpose()?;
    let max_id = edges
        .iter()
        .flat_map(|&(u, v)| [u, v])
        .chain(ones.iter().map(|&(n, _)| n))
        .chain(labels.iter().flatten().map(|&(n, _)| n))
        .chain(split.iter().flatten().map(|&(n, _)| n))
        .max();
    let num_nodes = paths
        .num_nodes
        .or(dense_shape.map(|(r, _)| r))
        .unwrap_or(max_id.map_or(0, |m| m + 1));
    let num_features = paths
        .num_features
        .or(dense_shape.map(|(_, c)| c))
        .unwrap_or(ones.iter().map(|&(_, d)| d + 1).max().unwrap_or(0));
    let num_classes = paths
        .num_classes
        .unwrap_or(labels.iter().flatten().map(|&(_, y)| y + 1).max().unwrap_or(0));
    let mut graph = Graph::new(num_nodes, num_features, num_classes, &edges, &ones)?;
    if let Some(labels) = labels {
        let mut per_node = vec![None; num_nodes];
        for (n, y) in labels {
            if n >= num_nodes {
                return Err(Error::Graph(format!("label for node {n} outside [0, {num_nodes})")));
            }
            per_node[n] = Some(y);
        }
        graph = graph.with_labels(per_node)?;
    }
    if let Some(split) = split {
        let mut per_node = vec![None; num_nodes];
        for (n, t) in split {
            if n >= num_nodes {
                return Err(Error::Graph(format!("split tag for node {n} outside [0, {num_nodes})")));
            }
            per_node[n] = Some(t);
        }
        graph = graph.with_split(per_node)?;
    }
    Ok(graph)
}

/// Writes `graph` as `edges.tsv`, `attributes.tsv`, `labels.tsv` and
/// `split.tsv` in `dir`, returning the matching paths.
pub fn save_dataset(graph: &Graph, dir: &Path) -> Result<DatasetPaths> {
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    for (u, v) in graph.edges() {
        let _ = writeln!(edges, "{u}\t{v}");
    }
    let mut attrs = String::new();
    let mut labels = String::new();
    let mut split = String::new();
    for n in 0..graph.num_nodes() {
        for &d in graph.attributes(n) {
            let _ = writeln!(attrs, "{n}\t{d}");
        }
        if let Some(y) = graph.label(n) {
            let _ = writeln!(labels, "{n}\t{y}");
        }
        if let Some(t) = graph.split(n) {
            let _ = writeln!(split, "{n}\t{}", t.as_str());
        }
    }
    let paths = DatasetPaths {
        edges: dir.join("edges.tsv"),
        attributes: dir.join("attributes.tsv"),
        labels: Some(dir.join("labels.tsv")),
        split: Some(dir.join("split.tsv")),
        num_nodes: Some(graph.num_nodes()),
        num_features: Some(graph.num_features()),
        num_classes: Some(graph.num_classes()),
    };
    fs::write(&paths.edges, edges)?;
    fs::write(&paths.attributes, attrs)?;
    fs::write(paths.labels.as_ref().unwrap(), labels)?;
    fs::write(paths.split.as_ref().unwrap(), split)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn edges_are_mirrored_and_deduplicated() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            edges: write(dir.path(), "e.tsv", "0\t1\n1\t0\n0\t1\n"),
            attributes: write(dir.path(), "a.tsv", ""),
            num_nodes: Some(2),
            num_features: Some(1),
            num_classes: Some(2),
            ..Default::default()
        };
        let g = load_dataset(&paths).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn sparse_attribute_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            edges: write(dir.path(), "e.tsv", ""),
            attributes: write(dir.path(), "a.tsv", "3\t7\n"),
            num_nodes: Some(4),
            num_features: Some(10),
            num_classes: Some(2),
            ..Default::default()
        };
        let g = load_dataset(&paths).unwrap();
        assert!(g.attribute(3, 7));
        assert_eq!(g.attributes(3), &[7]);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "e.tsv", "0\t1\n# comment\n2 3\n");
        match read_edges(&p).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn non_binary_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(read_attributes(&write(dir.path(), "a.csv", "0,1\n2,0\n")).is_err());
        assert!(read_attributes(&write(dir.path(), "a.tsv", "0\t1\t0.5\n")).is_err());
        let (ones, shape) = read_attributes(&write(dir.path(), "b.csv", "0,1\n1,0\n")).unwrap();
        assert_eq!(ones, vec![(0, 1), (1, 0)]);
        assert_eq!(shape, Some((2, 2)));
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let paths = DatasetPaths {
            edges: write(dir.path(), "e.tsv", "0\t5\n"),
            attributes: write(dir.path(), "a.tsv", ""),
            num_nodes: Some(2),
            num_features: Some(1),
            ..Default::default()
        };
        assert!(load_dataset(&paths).is_err());
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = Graph::new(4, 3, 2, &[(0, 1), (2, 3)], &[(0, 2), (3, 0), (3, 1)])
            .unwrap()
            .with_labels(vec![Some(0), Some(1), None, Some(1)])
            .unwrap()
            .with_split(vec![Some(SplitTag::Labeled), Some(SplitTag::Unlabeled), None, Some(SplitTag::Unlabeled)])
            .unwrap();
        let paths = save_dataset(&g, dir.path()).unwrap();
        assert_eq!(load_dataset(&paths).unwrap(), g);
    }
}
