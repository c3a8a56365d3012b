//! Dataset schemas, CSV loading with validation, deterministic stratified
//! splitting, and a seeded synthetic generator that stands in for the real
//! county data.
//!
//! File formats (UTF-8, header row mandatory, comma delimiter):
//!
//! ```csv
//! nodes.csv:  node_id,population_density,icu_beds_per_1000,death_rate,
//!             temperature_c,unemployment_rate,mobility_mean,confirmed_14d[,label]
//! edges.csv:  src_id,dst_id,kind,weight          (kind: adjacent | flight)
//! t_<date>.csv: node_id,confirmed_14d,mobility_mean,temperature_c
//! ```
//!
//! When the optional `label` column is absent, labels derive from
//! `confirmed_14d` through the risk thresholds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::RawAttributes;
use crate::graph::{build_graph, EdgeKind, EdgeSpec, Graph};
use crate::model::{assign_risk_label, RiskLevel};

/// Attributes that vary per timestamp in the dynamic setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeVaryingAttrs {
    pub confirmed_14d: u64,
    pub mobility_mean: f64,
    pub temperature_c: f64,
}

/// One timestamp: a date tag, per-node varying attributes, and an optional
/// edge overlay replacing the static edge set for that frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrame {
    pub date: String,
    pub attrs: Vec<TimeVaryingAttrs>,
    pub edge_overlay: Option<Vec<EdgeSpec>>,
}

/// A loaded, validated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub attributes: Vec<RawAttributes>,
    pub labels: Vec<RiskLevel>,
    pub timestamps: Vec<TimeFrame>,
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Class indices of the labels.
    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    /// Sum of incident flight-edge weights per node, the transport
    /// frequency column of the structural tensor.
    pub fn transport_freq(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|v| self.graph.flight_weight(v))
            .collect()
    }
}

fn schema_err(path: &Path, line: usize, column: &str, reason: impl Into<String>) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        line,
        column: column.to_string(),
        reason: reason.into(),
    }
}

struct CsvTable {
    headers: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_csv(path: &Path) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path.display().to_string(), e))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::csv(path.display().to_string(), e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path.display().to_string(), e))?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(CsvTable { headers, rows })
}

impl CsvTable {
    fn column(&self, path: &Path, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| schema_err(path, 1, name, "missing required column"))
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

fn parse_f64(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| schema_err(path, line, column, format!("not a number: `{raw}`")))?;
    if !v.is_finite() {
        return Err(schema_err(path, line, column, "value must be finite"));
    }
    Ok(v)
}

fn parse_u64(path: &Path, line: usize, column: &str, raw: &str) -> Result<u64> {
    raw.parse().map_err(|_| {
        schema_err(
            path,
            line,
            column,
            format!("not a non-negative integer: `{raw}`"),
        )
    })
}

fn parse_rate(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    let v = parse_f64(path, line, column, raw)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(schema_err(path, line, column, format!("rate {v} outside [0, 1]")));
    }
    Ok(v)
}

/// Load and validate a dataset from its node and edge files, plus an
/// optional directory of per-timestamp `t_<date>.csv` files.
pub fn load_dataset(
    nodes_path: &Path,
    edges_path: &Path,
    timeseries_dir: Option<&Path>,
) -> Result<Dataset> {
    let table = read_csv(nodes_path)?;
    let id_col = table.column(nodes_path, "node_id")?;
    let density_col = table.column(nodes_path, "population_density")?;
    let icu_col = table.column(nodes_path, "icu_beds_per_1000")?;
    let death_col = table.column(nodes_path, "death_rate")?;
    let temp_col = table.column(nodes_path, "temperature_c")?;
    let unemp_col = table.column(nodes_path, "unemployment_rate")?;
    let mobility_col = table.column(nodes_path, "mobility_mean")?;
    let confirmed_col = table.column(nodes_path, "confirmed_14d")?;
    let label_col = table.optional_column("label");

    let mut node_ids = Vec::new();
    let mut attributes = Vec::new();
    let mut labels = Vec::new();
    for (line, row) in &table.rows {
        let id = row[id_col].clone();
        if id.is_empty() {
            return Err(schema_err(nodes_path, *line, "node_id", "empty node id"));
        }
        if node_ids.contains(&id) {
            return Err(schema_err(
                nodes_path,
                *line,
                "node_id",
                format!("duplicate node id `{id}`"),
            ));
        }
        let confirmed = parse_u64(nodes_path, *line, "confirmed_14d", &row[confirmed_col])?;
        attributes.push(RawAttributes {
            population_density: parse_f64(
                nodes_path,
                *line,
                "population_density",
                &row[density_col],
            )?,
            icu_beds_per_1000: parse_f64(nodes_path, *line, "icu_beds_per_1000", &row[icu_col])?,
            death_rate: parse_rate(nodes_path, *line, "death_rate", &row[death_col])?,
            temperature_c: parse_f64(nodes_path, *line, "temperature_c", &row[temp_col])?,
            unemployment_rate: parse_rate(
                nodes_path,
                *line,
                "unemployment_rate",
                &row[unemp_col],
            )?,
            mobility_mean: parse_f64(nodes_path, *line, "mobility_mean", &row[mobility_col])?,
            confirmed_14d: confirmed,
        });
        let label = match label_col {
            Some(col) if !row[col].is_empty() => {
                RiskLevel::from_name(&row[col]).ok_or_else(|| {
                    schema_err(
                        nodes_path,
                        *line,
                        "label",
                        format!("unknown risk level `{}`", row[col]),
                    )
                })?
            }
            _ => assign_risk_label(confirmed as i64)?,
        };
        labels.push(label);
        node_ids.push(id);
    }

    let table = read_csv(edges_path)?;
    let src_col = table.column(edges_path, "src_id")?;
    let dst_col = table.column(edges_path, "dst_id")?;
    let kind_col = table.column(edges_path, "kind")?;
    let weight_col = table.column(edges_path, "weight")?;
    let mut edges = Vec::new();
    for (line, row) in &table.rows {
        let kind = match row[kind_col].as_str() {
            "adjacent" => EdgeKind::Adjacent,
            "flight" => EdgeKind::Flight,
            other => {
                return Err(schema_err(
                    edges_path,
                    *line,
                    "kind",
                    format!("expected adjacent or flight, got `{other}`"),
                ))
            }
        };
        let weight = parse_f64(edges_path, *line, "weight", &row[weight_col])?;
        edges.push(EdgeSpec {
            src: row[src_col].clone(),
            dst: row[dst_col].clone(),
            kind,
            weight,
        });
    }
    let graph = build_graph(&node_ids, &edges)?;

    let mut timestamps = Vec::new();
    if let Some(dir) = timeseries_dir {
        let mut paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir.display().to_string(), e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .map(|n| n.starts_with("t_") && n.ends_with(".csv"))
                    .unwrap_or(false)
            })
            .collect();
        paths.sort();
        for path in paths {
            let date = path
                .file_stem()
                .and_then(|n| n.to_str())
                .map(|n| n.trim_start_matches("t_").to_string())
                .unwrap_or_default();
            if let Some(last) = timestamps.last() {
                let last: &TimeFrame = last;
                if last.date >= date {
                    return Err(schema_err(
                        &path,
                        1,
                        "date",
                        format!("timestamps not strictly increasing: {} then {date}", last.date),
                    ));
                }
            }
            timestamps.push(load_timeframe(&path, date, &node_ids)?);
        }
    }

    Ok(Dataset {
        graph,
        attributes,
        labels,
        timestamps,
    })
}

fn load_timeframe(path: &Path, date: String, node_ids: &[String]) -> Result<TimeFrame> {
    let table = read_csv(path)?;
    let id_col = table.column(path, "node_id")?;
    let confirmed_col = table.column(path, "confirmed_14d")?;
    let mobility_col = table.column(path, "mobility_mean")?;
    let temp_col = table.column(path, "temperature_c")?;

    let index: BTreeMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut attrs = vec![None; node_ids.len()];
    for (line, row) in &table.rows {
        let node = *index.get(row[id_col].as_str()).ok_or_else(|| {
            schema_err(
                path,
                *line,
                "node_id",
                format!("unknown node id `{}`", row[id_col]),
            )
        })?;
        if attrs[node].is_some() {
            return Err(schema_err(
                path,
                *line,
                "node_id",
                format!("duplicate row for node `{}`", row[id_col]),
            ));
        }
        attrs[node] = Some(TimeVaryingAttrs {
            confirmed_14d: parse_u64(path, *line, "confirmed_14d", &row[confirmed_col])?,
            mobility_mean: parse_f64(path, *line, "mobility_mean", &row[mobility_col])?,
            temperature_c: parse_f64(path, *line, "temperature_c", &row[temp_col])?,
        });
    }
    let attrs: Vec<TimeVaryingAttrs> = attrs
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            a.ok_or_else(|| {
                schema_err(
                    path,
                    0,
                    "node_id",
                    format!("node `{}` missing from timestamp", node_ids[i]),
                )
            })
        })
        .collect::<Result<_>>()?;
    Ok(TimeFrame {
        date,
        attrs,
        edge_overlay: None,
    })
}

/// Serialize a dataset back to `nodes.csv` / `edges.csv` (and `t_*.csv`
/// files when timestamps exist). Loading the written files reproduces the
/// dataset exactly.
pub fn write_dataset(dataset: &Dataset, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let mut nodes = String::from(
        "node_id,population_density,icu_beds_per_1000,death_rate,temperature_c,unemployment_rate,mobility_mean,confirmed_14d,label\n",
    );
    for (v, attrs) in dataset.attributes.iter().enumerate() {
        writeln!(
            nodes,
            "{},{},{},{},{},{},{},{},{}",
            dataset.graph.node_id(v),
            attrs.population_density,
            attrs.icu_beds_per_1000,
            attrs.death_rate,
            attrs.temperature_c,
            attrs.unemployment_rate,
            attrs.mobility_mean,
            attrs.confirmed_14d,
            dataset.labels[v].name(),
        )
        .expect("string write");
    }
    crate::artifacts::atomic_write(nodes_path, nodes.as_bytes())?;

    let mut edges = String::from("src_id,dst_id,kind,weight\n");
    for (u, v, attr) in dataset.graph.edges() {
        let (src, dst) = (dataset.graph.node_id(u), dataset.graph.node_id(v));
        if attr.kinds.flight {
            writeln!(edges, "{src},{dst},flight,{}", attr.weight).expect("string write");
            if attr.kinds.adjacent {
                writeln!(edges, "{src},{dst},adjacent,0").expect("string write");
            }
        } else {
            writeln!(edges, "{src},{dst},adjacent,{}", attr.weight).expect("string write");
        }
    }
    crate::artifacts::atomic_write(edges_path, edges.as_bytes())?;
    Ok(())
}

/// Write the per-timestamp tables as `t_<date>.csv` under `dir`.
pub fn write_timeframes(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for frame in &dataset.timestamps {
        let mut text = String::from("node_id,confirmed_14d,mobility_mean,temperature_c\n");
        for (v, attrs) in frame.attrs.iter().enumerate() {
            writeln!(
                text,
                "{},{},{},{}",
                dataset.graph.node_id(v),
                attrs.confirmed_14d,
                attrs.mobility_mean,
                attrs.temperature_c,
            )
            .expect("string write");
        }
        let path = dir.join(format!("t_{}.csv", frame.date));
        crate::artifacts::atomic_write(&path, text.as_bytes())?;
    }
    Ok(())
}

/// How the synthetic generator assigns labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Label is the community index modulo four.
    Community,
    /// Label derives from the planted infection counts via the risk
    /// thresholds (coincides with `Community` for up to four communities).
    Confirmed,
}

/// Synthetic dataset configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub nodes: usize,
    pub communities: usize,
    /// Within-community edge probability of the block model.
    pub edge_prob_in: f64,
    /// Across-community edge probability.
    pub edge_prob_out: f64,
    pub label_rule: LabelRule,
    /// Relative attribute noise; at the default the attribute centroids
    /// stay separable.
    pub attr_noise: f64,
    /// Fraction of the last two communities' nodes whose attribute
    /// profile collapses to those communities' shared midpoint. The
    /// collapsed nodes form a contiguous arc of each community's flight
    /// ring, so their neighborhoods offer no attribute signal either;
    /// they are distinguishable only through flight weights — the signal
    /// the structural branch adds over attributes alone.
    pub attr_overlap: f64,
    /// Structural ambiguity of the collapsed arc: for edges between the
    /// last two communities with a collapsed endpoint, the within- and
    /// cross-community probabilities interpolate toward their midpoint.
    /// At 1 a collapsed node's adjacency is identically distributed over
    /// both communities, so the arc cannot be told apart from adjacency
    /// alone.
    pub block_blend: f64,
    /// Half-width of the flight rings: each flying node links to this many
    /// nearest ring neighbors on each side.
    pub ring_width: usize,
    /// Probability that a collapsed-arc node draws its infection count
    /// from the other paired class's band. Under the `confirmed` label
    /// rule this plants label noise that no feature resolves, modeling
    /// regions whose case counts cross a risk threshold independently of
    /// their transport profile.
    pub arc_confirmed_mix: f64,
    /// Number of dynamic frames to generate (0 = static only).
    pub timestamps: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nodes: 200,
            communities: 4,
            edge_prob_in: 0.05,
            edge_prob_out: 0.005,
            label_rule: LabelRule::Community,
            attr_noise: 1.0,
            attr_overlap: 0.0,
            block_blend: 0.0,
            ring_width: 3,
            arc_confirmed_mix: 0.0,
            timestamps: 0,
            seed: 0,
        }
    }
}

fn community_of(node: usize, communities: usize) -> usize {
    node % communities
}

/// Confirmed-count range planted for each risk class.
fn confirmed_range(class: usize) -> (u64, u64) {
    match class {
        0 => (0, 0),
        1 => (1, 150),
        2 => (151, 750),
        _ => (751, 2500),
    }
}

/// Generate a stochastic-block-model dataset with community-dependent
/// attributes, a flight overlay whose strength grows with the community
/// index, and labels planted by the configured rule. Deterministic for a
/// fixed seed.
pub fn synth_dataset(config: &SynthConfig) -> Result<Dataset> {
    if config.communities == 0 || config.nodes < config.communities {
        return Err(Error::BadSynthConfig {
            reason: format!(
                "need nodes >= communities >= 1, got {} nodes and {} communities",
                config.nodes, config.communities
            ),
        });
    }
    for (name, p) in [
        ("edge_prob_in", config.edge_prob_in),
        ("edge_prob_out", config.edge_prob_out),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadSynthConfig {
                reason: format!("{name} = {p} outside [0, 1]"),
            });
        }
    }

    let n = config.nodes;
    let node_ids: Vec<String> = (0..n).map(|i| format!("s{i:05}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Block-model adjacency. Edges inside the last two communities blend
    // toward the midpoint probability when they touch the collapsed arc.
    let last_pair = |c: usize| config.communities >= 2 && c + 2 >= config.communities;
    let in_arc = |u: usize| {
        let c = community_of(u, config.communities);
        if !last_pair(c) {
            return false;
        }
        let members = (n - c).div_ceil(config.communities);
        let rank = u / config.communities;
        (rank as f64) < config.attr_overlap * members as f64
    };
    let p_mid = (config.edge_prob_in + config.edge_prob_out) / 2.0;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let cu = community_of(u, config.communities);
            let cv = community_of(v, config.communities);
            let base = if cu == cv {
                config.edge_prob_in
            } else {
                config.edge_prob_out
            };
            let p = if last_pair(cu) && last_pair(cv) && (in_arc(u) || in_arc(v)) {
                base + config.block_blend * (p_mid - base)
            } else {
                base
            };
            if rng.random::<f64>() < p {
                edges.push(EdgeSpec::new(
                    node_ids[u].clone(),
                    node_ids[v].clone(),
                    EdgeKind::Adjacent,
                    1.0,
                ));
            }
        }
    }

    // Flight overlay: ring lattices through every community except the
    // first (each flying node links to its three nearest ring neighbors
    // on both sides). Every flying class gets the same overlay topology,
    // so binary propagation cannot tell them apart; the class lives in
    // the edge weights, which reach the model only through the structural
    // tensor's transport column. The rings also give every flying node a
    // same-community majority among its neighbors, which is what lets
    // propagation preserve the transport signal.
    for c in 0..config.communities {
        let class = c % 4;
        if class == 0 {
            continue;
        }
        let members: Vec<usize> = (0..n)
            .filter(|&u| community_of(u, config.communities) == c)
            .collect();
        for (i, &u) in members.iter().enumerate() {
            for offset in 1..=config.ring_width {
                if offset >= members.len() {
                    break;
                }
                let v = members[(i + offset) % members.len()];
                if u == v {
                    continue;
                }
                let weight = 2.0 * (1.0 + class as f64) + 0.5 * rng.random::<f64>();
                edges.push(EdgeSpec::new(
                    node_ids[u].clone(),
                    node_ids[v].clone(),
                    EdgeKind::Flight,
                    weight,
                ));
            }
        }
    }

    let graph = build_graph(&node_ids, &edges)?;

    let mut attributes = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for u in 0..n {
        let c = community_of(u, config.communities);
        let class = c % 4;
        let spread = (config.communities.max(2) - 1) as f64;
        // collapsed arc nodes share the exact midpoint profile, noise-free:
        // with identical attributes there is nothing for a neighborhood
        // fingerprint to memorize
        let (c_eff, noise_level) = if in_arc(u) {
            ((config.communities as f64 * 2.0 - 3.0) / 2.0, 0.0)
        } else {
            (c as f64, config.attr_noise)
        };
        let t = c_eff / spread;
        let noise = |rng: &mut ChaCha8Rng, scale: f64| (rng.random::<f64>() - 0.5) * scale * noise_level;

        let confirmed_class = if in_arc(u) && rng.random::<f64>() < config.arc_confirmed_mix {
            // the paired class differs in the lowest community bit
            if community_of(u, config.communities) + 1 == config.communities {
                (class + 3) % 4
            } else {
                (class + 1) % 4
            }
        } else {
            class
        };
        let (lo, hi) = confirmed_range(confirmed_class);
        let confirmed = if lo == hi {
            lo
        } else {
            rng.random_range(lo..=hi)
        };
        let attrs = RawAttributes {
            population_density: (80.0 + 400.0 * t + noise(&mut rng, 260.0)).max(1.0),
            icu_beds_per_1000: (0.5 + 3.0 * t + noise(&mut rng, 2.2)).max(0.0),
            death_rate: (0.02 + 0.10 * t + noise(&mut rng, 0.08)).clamp(0.0, 1.0),
            temperature_c: 4.0 + 18.0 * t + noise(&mut rng, 12.0),
            unemployment_rate: (0.03 + 0.12 * t + noise(&mut rng, 0.09)).clamp(0.0, 1.0),
            mobility_mean: -30.0 + 55.0 * t + noise(&mut rng, 36.0),
            confirmed_14d: confirmed,
        };
        let label = match config.label_rule {
            LabelRule::Community => RiskLevel::from_index(class).expect("class below four"),
            LabelRule::Confirmed => assign_risk_label(confirmed as i64)?,
        };
        attributes.push(attrs);
        labels.push(label);
    }

    let mut timestamps = Vec::with_capacity(config.timestamps);
    for t in 0..config.timestamps {
        let attrs = (0..n)
            .map(|u| {
                let base = &attributes[u];
                let drift = 1.0 + 0.08 * t as f64;
                TimeVaryingAttrs {
                    confirmed_14d: ((base.confirmed_14d as f64 * drift)
                        + rng.random_range(0.0..4.0))
                        as u64,
                    mobility_mean: base.mobility_mean + (rng.random::<f64>() - 0.5) * 4.0,
                    temperature_c: base.temperature_c + (rng.random::<f64>() - 0.5) * 2.0,
                }
            })
            .collect();
        timestamps.push(TimeFrame {
            date: format!("2020-03-{:02}", t + 1),
            attrs,
            edge_overlay: None,
        });
    }

    Ok(Dataset {
        graph,
        attributes,
        labels,
        timestamps,
    })
}

/// Accuracy of a nearest-centroid rule on the standardized attribute
/// columns; a quick learnability check for planted labels.
pub fn nearest_centroid_accuracy(dataset: &Dataset) -> f64 {
    use crate::features::AttrKind;
    let n = dataset.node_count();
    let dims = AttrKind::ALL.len();
    let mut columns = vec![vec![0.0f64; n]; dims];
    for (a, kind) in AttrKind::ALL.into_iter().enumerate() {
        for (slot, attrs) in columns[a].iter_mut().zip(&dataset.attributes) {
            *slot = attrs.value(kind);
        }
        let mean = columns[a].iter().sum::<f64>() / n as f64;
        let var = columns[a].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt().max(1e-12);
        for x in &mut columns[a] {
            *x = (*x - mean) / std;
        }
    }
    let labels = dataset.label_indices();
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut centroids = vec![vec![0.0f64; dims]; classes];
    let mut counts = vec![0usize; classes];
    for v in 0..n {
        counts[labels[v]] += 1;
        for a in 0..dims {
            centroids[labels[v]][a] += columns[a][v];
        }
    }
    for (centroid, count) in centroids.iter_mut().zip(&counts) {
        for x in centroid.iter_mut() {
            *x /= (*count).max(1) as f64;
        }
    }
    let mut hits = 0usize;
    for v in 0..n {
        let best = (0..classes)
            .filter(|&c| counts[c] > 0)
            .min_by(|&a, &b| {
                let da: f64 = (0..dims).map(|d| (columns[d][v] - centroids[a][d]).powi(2)).sum();
                let db: f64 = (0..dims).map(|d| (columns[d][v] - centroids[b][d]).powi(2)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .unwrap();
        if best == labels[v] {
            hits += 1;
        }
    }
    hits as f64 / n as f64
}

/// Which split a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// Exhaustive, disjoint node partition into train/validation/test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub assignment: Vec<Split>,
}

impl SplitAssignment {
    pub fn rows(&self, split: Split) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == split).then_some(i))
            .collect()
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut out = [0; 3];
        for s in &self.assignment {
            out[*s as usize] += 1;
        }
        out
    }
}

/// Largest-remainder quotas for one group of `n` nodes.
fn quotas(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut base: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = base.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - base[a] as f64;
        let fb = exact[b] - base[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for k in 0..n - assigned {
        base[order[k % 3]] += 1;
    }
    [base[0], base[1], base[2]]
}

/// Deterministic stratified split.
///
/// Each class is shuffled with a seed-derived generator and cut at
/// largest-remainder quotas; classes with fewer than three members are
/// pooled and split without stratification (with a warning).
pub fn split_dataset(
    dataset: &Dataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitAssignment> {
    let ratios = [ratios.0, ratios.1, ratios.2];
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|&r| r < 0.0) {
        return Err(Error::BadSplitRatios(ratios));
    }
    let labels = dataset.label_indices();
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (node, &label) in labels.iter().enumerate() {
        groups[label].push(node);
    }

    let mut pooled: Vec<usize> = Vec::new();
    let mut stratified: Vec<(usize, Vec<usize>)> = Vec::new();
    for (class, members) in groups.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 3 {
            log::warn!(
                "class {class} has only {} member(s); splitting it unstratified",
                members.len()
            );
            pooled.extend(members);
        } else {
            stratified.push((class, members));
        }
    }

    let mut assignment = vec![Split::Train; labels.len()];
    let mut apply = |members: &mut Vec<usize>, group_key: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ group_key.wrapping_mul(0x9E3779B97F4A7C15));
        members.shuffle(&mut rng);
        let q = quotas(members.len(), ratios);
        for (rank, &node) in members.iter().enumerate() {
            assignment[node] = if rank < q[0] {
                Split::Train
            } else if rank < q[0] + q[1] {
                Split::Validation
            } else {
                Split::Test
            };
        }
    };
    for (class, mut members) in stratified {
        apply(&mut members, class as u64 + 1);
    }
    if !pooled.is_empty() {
        apply(&mut pooled, 0);
    }

    Ok(SplitAssignment { assignment })
}
