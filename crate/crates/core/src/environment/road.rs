//! Road-network edge list in CSV form.
//!
//! ```text
//! #nodes,a,b,c
//! edge_id,from_node,to_node,length_m,speed_limit,mean_h8,var_h8,mean_h18,var_h18
//! e0,a,b,120.5,13.9,11.2,2.5,7.9,3.1
//! ```
//!
//! The optional `#nodes` line declares the node set; when present, edges may
//! only reference declared nodes. Without it nodes are taken from the edges in
//! order of first appearance. Other lines starting with `#` are comments. The
//! context dimension is the number of `mean_h*`/`var_h*` column pairs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::Vector;
use crate::graph::{DirectedGraph, NodeId};

const FIXED_COLUMNS: [&str; 5] = ["edge_id", "from_node", "to_node", "length_m", "speed_limit"];
const NODES_DIRECTIVE: &str = "#nodes";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Inconsistency { line: u64, message: String },
}

fn parse_err(line: u64, message: impl Into<String>) -> LoadError {
    LoadError::Parse { line, message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub graph: DirectedGraph,
    pub node_labels: Vec<String>,
    pub edge_labels: Vec<String>,
    pub speed_limits: Vec<f64>,
    /// Suffixes of the `mean_h*` columns, e.g. `["8", "18"]`.
    pub hour_labels: Vec<String>,
    pub context_means: Vec<Vector>,
    pub context_vars: Vec<Vector>,
    pub d: usize,
    pub declared_nodes: bool,
}

struct NodeTable {
    index: HashMap<String, NodeId>,
    labels: Vec<String>,
    declared: bool,
}

impl NodeTable {
    fn resolve(&mut self, label: &str, line: u64) -> Result<NodeId, LoadError> {
        if let Some(&id) = self.index.get(label) {
            return Ok(id);
        }
        if self.declared {
            return Err(LoadError::Inconsistency {
                line,
                message: format!("edge references undeclared node `{label}`"),
            });
        }
        let id = NodeId(self.labels.len());
        self.index.insert(label.to_string(), id);
        self.labels.push(label.to_string());
        Ok(id)
    }
}

fn parse_hour_columns(header: &csv::StringRecord, line: u64) -> Result<Vec<String>, LoadError> {
    let fields: Vec<&str> = header.iter().map(str::trim).collect();
    if fields.len() < FIXED_COLUMNS.len() || fields[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(parse_err(line, format!("header must start with {}", FIXED_COLUMNS.join(","))));
    }
    let rest = &fields[FIXED_COLUMNS.len()..];
    if rest.is_empty() || !rest.len().is_multiple_of(2) {
        return Err(parse_err(line, "header needs one or more mean_h*,var_h* column pairs"));
    }
    rest.chunks(2)
        .map(|pair| {
            let hour = pair[0]
                .strip_prefix("mean_h")
                .ok_or_else(|| parse_err(line, format!("expected a mean_h* column, found `{}`", pair[0])))?;
            if pair[1].strip_prefix("var_h") != Some(hour) {
                return Err(parse_err(line, format!("expected var_h{hour} after mean_h{hour}, found `{}`", pair[1])));
            }
            Ok(hour.to_string())
        })
        .collect()
}

fn parse_float(field: &str, column: &str, line: u64) -> Result<f64, LoadError> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("column {column}: `{field}` is not a number")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("column {column}: value must be finite")));
    }
    Ok(value)
}

impl RoadNetwork {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());

        let mut nodes = NodeTable { index: HashMap::new(), labels: Vec::new(), declared: false };
        let mut hours: Option<Vec<String>> = None;
        let mut graph_edges = Vec::new();
        let mut edge_labels: Vec<String> = Vec::new();
        let mut edge_index: HashMap<String, u64> = HashMap::new();
        let mut speed_limits = Vec::new();
        let mut context_means = Vec::new();
        let mut context_vars = Vec::new();

        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let first = record.get(0).unwrap_or("").trim();

            if first == NODES_DIRECTIVE {
                if hours.is_some() || nodes.declared {
                    return Err(parse_err(line, "#nodes must appear once, before the header"));
                }
                nodes.declared = true;
                for label in record.iter().skip(1) {
                    let label = label.trim();
                    if nodes.index.contains_key(label) {
                        return Err(LoadError::Inconsistency {
                            line,
                            message: format!("node `{label}` declared twice"),
                        });
                    }
                    nodes.index.insert(label.to_string(), NodeId(nodes.labels.len()));
                    nodes.labels.push(label.to_string());
                }
                continue;
            }
            if first.starts_with('#') || (record.len() == 1 && first.is_empty()) {
                continue;
            }

            let Some(hour_labels) = &hours else {
                hours = Some(parse_hour_columns(&record, line)?);
                continue;
            };
            let d = hour_labels.len();
            let expected = FIXED_COLUMNS.len() + 2 * d;
            if record.len() != expected {
                return Err(parse_err(line, format!("expected {expected} fields, found {}", record.len())));
            }

            let label = record[0].trim().to_string();
            if let Some(prev) = edge_index.insert(label.clone(), line) {
                return Err(LoadError::Inconsistency {
                    line,
                    message: format!("edge id `{label}` already used on line {prev}"),
                });
            }
            let from = nodes.resolve(record[1].trim(), line)?;
            let to = nodes.resolve(record[2].trim(), line)?;
            let length = parse_float(&record[3], "length_m", line)?;
            if length <= 0.0 {
                return Err(parse_err(line, "length_m must be positive"));
            }
            speed_limits.push(parse_float(&record[4], "speed_limit", line)?);

            let mut means = Vector::zeros(d);
            let mut vars = Vector::zeros(d);
            for (i, hour) in hour_labels.iter().enumerate() {
                means[i] = parse_float(&record[5 + 2 * i], &format!("mean_h{hour}"), line)?;
                vars[i] = parse_float(&record[6 + 2 * i], &format!("var_h{hour}"), line)?;
                if vars[i] < 0.0 {
                    return Err(parse_err(line, format!("var_h{hour} must be non-negative")));
                }
            }
            context_means.push(means);
            context_vars.push(vars);
            edge_labels.push(label);
            graph_edges.push((from, to, length));
        }

        let hour_labels = hours.ok_or_else(|| parse_err(1, "missing header line"))?;
        let mut graph = DirectedGraph::new(nodes.labels.len());
        for (from, to, length) in graph_edges {
            graph.add_edge(from, to, length).expect("endpoints and length validated");
        }
        Ok(Self {
            graph,
            node_labels: nodes.labels,
            edge_labels,
            speed_limits,
            d: hour_labels.len(),
            hour_labels,
            context_means,
            context_vars,
            declared_nodes: nodes.declared,
        })
    }

    /// Serializes back to the CSV schema. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let io = "writing to memory cannot fail";
        if self.declared_nodes {
            let mut row = vec![NODES_DIRECTIVE.to_string()];
            row.extend(self.node_labels.iter().cloned());
            writer.write_record(&row).expect(io);
        }
        let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
        for hour in &self.hour_labels {
            header.push(format!("mean_h{hour}"));
            header.push(format!("var_h{hour}"));
        }
        writer.write_record(&header).expect(io);
        for edge in self.graph.edges() {
            let i = edge.id.0;
            let mut row = vec![
                self.edge_labels[i].clone(),
                self.node_labels[edge.from.0].clone(),
                self.node_labels[edge.to.0].clone(),
                edge.length_m.to_string(),
                self.speed_limits[i].to_string(),
            ];
            for k in 0..self.d {
                row.push(self.context_means[i][k].to_string());
                row.push(self.context_vars[i][k].to_string());
            }
            writer.write_record(&row).expect(io);
        }
        String::from_utf8(writer.into_inner().expect(io)).expect("csv output is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), LoadError> {
        fs::write(path, self.to_csv()).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.node_labels.iter().position(|l| l == label).map(NodeId)
    }
}

pub fn load_road_network(path: &Path) -> Result<RoadNetwork, LoadError> {
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    RoadNetwork::parse(&text)
}
