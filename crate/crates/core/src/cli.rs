//! Configuration files and the command implementations behind the binary.
//!
//! Configuration is flat `key = value` text; `#` starts a comment. Every
//! command accepts the same key set and unknown keys are rejected.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::attack;
use crate::bounds::Budget;
use crate::dual::{CertifyMode, PgaConfig};
use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::grad::check::finite_difference_check;
use crate::graph::{Graph, MessagePassing, SplitTag};
use crate::io::{load_dataset, save_dataset, DatasetPaths};
use crate::oracle::{self, fixtures};
use crate::report::{self, LabelSource, StatusCounts};
use crate::synth::PlantedPartition;
use crate::train::{self, TrainConfig, TrainMode};

/// Every accepted configuration key.
pub const VALID_KEYS: &[&str] = &[
    // dataset
    "edges",
    "attributes",
    "labels",
    "split",
    "num_nodes",
    "num_features",
    "num_classes",
    // model and training
    "mode",
    "q",
    "Q",
    "margin_labeled",
    "margin_unlabeled",
    "learning_rate",
    "l2_strength",
    "batch_size",
    "dropout",
    "dropout_rate",
    "max_epochs",
    "patience",
    "seed",
    "hidden",
    "layers",
    "log_margins",
    // files
    "checkpoint",
    "log",
    "output",
    "lp_dump",
    // certification
    "nodes",
    "node",
    "omega",
    "pga_steps",
    "pga_step_size",
    "pga_decay",
    "label_source",
    "Q_max",
    "workers",
    // oracle and gradient checks
    "fixtures",
    "fixture_seed",
    "tolerance",
    "draws",
    "fd_step",
    // synthetic data
    "synth_nodes",
    "synth_classes",
    "synth_features",
    "synth_p_in",
    "synth_p_out",
    "synth_attr_in",
    "synth_attr_out",
    "synth_labeled_fraction",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn unknown_key(key: &str) -> Error {
    Error::Config(format!("unknown key `{key}`; valid keys: {}", VALID_KEYS.join(", ")))
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_owned(),
                    line: i + 1,
                    msg: format!("expected `key = value`, found `{line}`"),
                });
            };
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            msg: e.to_string(),
        })?;
        Config::parse(&text, path)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !VALID_KEYS.contains(&key) {
            return Err(unknown_key(key));
        }
        self.values.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{pair}` is not of the form key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        debug_assert!(VALID_KEYS.contains(&key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("`{key} = {v}` has the wrong type")))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parsed(key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parsed(key)
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|v| match v {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(Error::Config(format!("`{key} = {v}` is not a boolean"))),
            })
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }
}

/// Runs `f` on a worker pool sized by `workers` (default: available
/// parallelism).
pub fn with_workers<T: Send>(cfg: &Config, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.usize("workers")? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn dataset_paths(cfg: &Config) -> Result<DatasetPaths> {
    Ok(DatasetPaths {
        edges: PathBuf::from(cfg.require("edges")?),
        attributes: PathBuf::from(cfg.require("attributes")?),
        labels: cfg.path("labels"),
        split: cfg.path("split"),
        num_nodes: cfg.usize("num_nodes")?,
        num_features: cfg.usize("num_features")?,
        num_classes: cfg.usize("num_classes")?,
    })
}

pub fn load_graph(cfg: &Config) -> Result<Graph> {
    load_dataset(&dataset_paths(cfg)?)
}

pub fn train_config(cfg: &Config, num_features: usize) -> Result<TrainConfig> {
    let mode: TrainMode = cfg.get("mode").unwrap_or("CE").parse()?;
    let mut tc = TrainConfig::new(mode, num_features);
    let local = cfg.usize("q")?.unwrap_or(tc.budget.local);
    let global = cfg.usize("Q")?.unwrap_or(tc.budget.global);
    tc.budget = Budget::new(local, global);
    macro_rules! override_field {
        ($field:ident, $key:literal, $get:ident) => {
            if let Some(v) = cfg.$get($key)? {
                tc.$field = v;
            }
        };
    }
    override_field!(margin_labeled, "margin_labeled", f64);
    override_field!(margin_unlabeled, "margin_unlabeled", f64);
    override_field!(learning_rate, "learning_rate", f64);
    override_field!(l2_strength, "l2_strength", f64);
    override_field!(batch_size, "batch_size", usize);
    override_field!(dropout, "dropout", bool);
    override_field!(dropout_rate, "dropout_rate", f64);
    override_field!(max_epochs, "max_epochs", usize);
    override_field!(patience, "patience", usize);
    override_field!(hidden, "hidden", usize);
    override_field!(layer_count, "layers", usize);
    override_field!(log_margins, "log_margins", bool);
    if let Some(seed) = cfg.parsed::<u64>("seed")? {
        tc.seed = seed;
    }
    tc.validate()?;
    Ok(tc)
}

pub fn certify_mode(cfg: &Config) -> Result<CertifyMode> {
    match cfg.get("omega").unwrap_or("default") {
        "default" => Ok(CertifyMode::Default),
        "optimized" => {
            let d = PgaConfig::default();
            Ok(CertifyMode::Optimized(PgaConfig {
                steps: cfg.usize("pga_steps")?.unwrap_or(d.steps),
                step_size: cfg.f64("pga_step_size")?.unwrap_or(d.step_size),
                decay: cfg.f64("pga_decay")?.unwrap_or(d.decay),
            }))
        }
        other => Err(Error::Config(format!("omega must be `default` or `optimized`, got `{other}`"))),
    }
}

pub fn label_source(cfg: &Config) -> Result<LabelSource> {
    match cfg.get("label_source").unwrap_or("predicted") {
        "predicted" => Ok(LabelSource::Predicted),
        "ground_truth" => Ok(LabelSource::GroundTruth),
        other => Err(Error::Config(format!(
            "label_source must be `predicted` or `ground_truth`, got `{other}`"
        ))),
    }
}

/// `all`, `labeled`, `unlabeled`, or a comma-separated list of node ids.
pub fn select_nodes(graph: &Graph, selector: &str) -> Result<Vec<usize>> {
    let nodes = match selector {
        "all" => (0..graph.num_nodes()).collect(),
        "labeled" => graph.nodes_with_split(SplitTag::Labeled),
        "unlabeled" => graph.nodes_with_split(SplitTag::Unlabeled),
        list => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("`{s}` is not a node id")))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    if let Some(&bad) = nodes.iter().find(|&&n| n >= graph.num_nodes()) {
        return Err(Error::Graph(format!("node {bad} outside [0, {})", graph.num_nodes())));
    }
    Ok(nodes)
}

pub fn load_checkpoint(cfg: &Config, graph: &Graph) -> Result<GcnParams> {
    let path = cfg.require("checkpoint")?;
    let params = GcnParams::from_json(&fs::read_to_string(path)?)?;
    params.check_input(graph.num_features(), graph.num_classes())?;
    Ok(params)
}

fn budget(cfg: &Config, graph: &Graph) -> Result<Budget> {
    Ok(Budget::new(
        cfg.usize("q")?.unwrap_or(Budget::default_local(graph.num_features())),
        cfg.usize("Q")?.unwrap_or(12),
    ))
}

/// Writes to the `output` path if configured, else to `fallback`.
fn emit(cfg: &Config, fallback: &mut dyn Write, text: &str) -> Result<()> {
    match cfg.path("output") {
        Some(p) => fs::write(p, text)?,
        None => fallback.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Trains, then writes the checkpoint (`checkpoint`) and the CSV log
/// (`log`). On divergence the last finite parameters are written before the
/// error is returned.
pub fn cmd_train(cfg: &Config, out: &mut dyn Write) -> Result<train::TrainResult> {
    let graph = load_graph(cfg)?;
    let tc = train_config(cfg, graph.num_features())?;
    let checkpoint = PathBuf::from(cfg.require("checkpoint")?);
    let result = with_workers(cfg, || train::train(&graph, &tc))?;
    let result = match result {
        Err(Error::Diverged { epoch, last_finite }) => {
            fs::write(&checkpoint, last_finite.to_json())?;
            return Err(Error::Diverged { epoch, last_finite });
        }
        r => r?,
    };
    fs::write(&checkpoint, result.params.to_json())?;
    if let Some(log) = cfg.path("log") {
        fs::write(log, train::log_csv(&result.log))?;
    }
    let phases = result.log.last().map_or(0, |r| r.phase);
    writeln!(
        out,
        "trained {} for {} epochs ({} phase{}), final loss {}",
        tc.mode,
        result.log.len(),
        phases,
        if phases == 1 { "" } else { "s" },
        result.log.last().map_or(f64::NAN, |r| r.loss)
    )?;
    Ok(result)
}

/// Certificates as JSON lines (to `output` or `out`); a summary goes to `summary`.
pub fn cmd_certify(cfg: &Config, out: &mut dyn Write, summary: &mut dyn Write) -> Result<StatusCounts> {
    let graph = load_graph(cfg)?;
    let params = load_checkpoint(cfg, &graph)?;
    let nodes = select_nodes(&graph, cfg.get("nodes").unwrap_or("all"))?;
    let b = budget(cfg, &graph)?;
    let mode = certify_mode(cfg)?;
    let labels = label_source(cfg)?;
    let mp = MessagePassing::gcn(&graph);
    let certs = with_workers(cfg, || report::certify_nodes(&graph, &mp, &params, &nodes, b, mode, labels))??;
    let mut text = String::new();
    for c in &certs {
        text.push_str(&c.to_json_line());
        text.push('\n');
    }
    emit(cfg, out, &text)?;
    let counts = StatusCounts::of(&certs);
    writeln!(
        summary,
        "q={} Q={}: {} nodes, {} robust, {} non_robust, {} undecided",
        b.local,
        b.global,
        counts.total(),
        counts.robust,
        counts.non_robust,
        counts.undecided
    )?;
    Ok(counts)
}

/// Certification curve CSV for `Q = 0..=Q_max`.
pub fn cmd_curve(cfg: &Config, out: &mut dyn Write) -> Result<Vec<report::CurveRow>> {
    let graph = load_graph(cfg)?;
    let params = load_checkpoint(cfg, &graph)?;
    let local = cfg.usize("q")?.unwrap_or(Budget::default_local(graph.num_features()));
    let q_max = cfg.usize("Q_max")?.unwrap_or(12);
    let mode = certify_mode(cfg)?;
    let labels = label_source(cfg)?;
    let mp = MessagePassing::gcn(&graph);
    let rows = with_workers(cfg, || {
        report::certification_curve(&graph, &mp, &params, local, q_max, mode, labels)
    })??;
    emit(cfg, out, &report::curve_csv(&rows))?;
    Ok(rows)
}

/// Dumps the dual-guided perturbation of one node (`node`) as TSV, with a
/// JSON summary line. `lp_dump`, if set, receives the relaxed LP of the most
/// damaging class.
pub fn cmd_attack(cfg: &Config, out: &mut dyn Write) -> Result<attack::AttackSummary> {
    let graph = load_graph(cfg)?;
    let params = load_checkpoint(cfg, &graph)?;
    let node = select_nodes(&graph, cfg.require("node")?)?;
    let &[node] = node.as_slice() else {
        return Err(Error::Config("`node` must name exactly one node".into()));
    };
    let b = budget(cfg, &graph)?;
    let mode = certify_mode(cfg)?;
    let mp = MessagePassing::gcn(&graph);
    let (sp, cert) = report::certify_node(&graph, &mp, &params, node, b, mode, label_source(cfg)?)?;
    let summary = attack::attack_summary(&cert);
    let mut text = String::new();
    if b.is_empty() {
        text.push_str("no admissible perturbation\n");
    } else {
        match attack::attack_tsv(&sp, &cert) {
            Some(tsv) => text.push_str(&tsv),
            None => text.push_str("no perturbation found that changes the prediction\n"),
        }
    }
    text.push_str(&serde_json::to_string(&summary)?);
    text.push('\n');
    emit(cfg, out, &text)?;
    if let Some(path) = cfg.path("lp_dump") {
        let k = params.num_classes();
        let other = cert.flipping_classes().first().copied().unwrap_or((cert.y_star + 1) % k);
        let bounds = crate::bounds::compute_bounds(&sp, &params, b);
        let c = crate::dual::class_difference(k, cert.y_star, other);
        fs::write(path, oracle::build_primal_lp(&sp, &params, &bounds, b, &c).to_lp_format())?;
    }
    Ok(summary)
}

/// Runs the bound chain on the generated fixture set; returns `false` if any
/// inequality is violated.
pub fn cmd_oracle_verify(cfg: &Config, out: &mut dyn Write) -> Result<bool> {
    let count = cfg.usize("fixtures")?.unwrap_or(100);
    let seed = cfg.parsed::<u64>("fixture_seed")?.unwrap_or(0);
    let tol = cfg.f64("tolerance")?.unwrap_or(1e-6);
    let pga = match certify_mode(cfg)? {
        CertifyMode::Optimized(p) => p,
        CertifyMode::Default => PgaConfig::default(),
    };
    let suite = fixtures::tiny_suite(count, seed);
    let results: Vec<Result<Vec<oracle::Sandwich>>> = with_workers(cfg, || {
        use rayon::prelude::*;
        suite
            .par_iter()
            .map(|inst| oracle::sandwich(&inst.sp, &inst.params, inst.budget, pga))
            .collect()
    })?;
    let mut violations = 0;
    let mut links = 0;
    for (inst, r) in suite.iter().zip(results) {
        for s in r? {
            links += 1;
            for v in s.violations(tol) {
                violations += 1;
                writeln!(out, "fixture {}: {v}", inst.seed)?;
            }
        }
    }
    writeln!(
        out,
        "{count} fixtures, {links} class pairs, {violations} violation{} (tolerance {tol:e})",
        if violations == 1 { "" } else { "s" }
    )?;
    Ok(violations == 0)
}

/// Finite-difference check of every training loss; returns `false` if any
/// relative error exceeds the tolerance.
pub fn cmd_grad_check(cfg: &Config, out: &mut dyn Write) -> Result<bool> {
    let draws = cfg.usize("draws")?.unwrap_or(10);
    let seed = cfg.parsed::<u64>("seed")?.unwrap_or(0);
    let step = cfg.f64("fd_step")?.unwrap_or(1e-5);
    let tol = cfg.f64("tolerance")?.unwrap_or(1e-4);
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for mode in [TrainMode::Ce, TrainMode::Rce, TrainMode::Rh, TrainMode::RhU] {
        let r = with_workers(cfg, || finite_difference_check(mode, draws, seed, step))??;
        let pass = r.accepted == draws && r.max_rel_error <= tol;
        ok &= pass;
        worst = worst.max(r.max_rel_error);
        writeln!(
            out,
            "{:5} accepted {:3} rejected {:3} max relative error {:.3e} {}",
            mode.as_str(),
            r.accepted,
            r.rejected,
            r.max_rel_error,
            if pass { "ok" } else { "FAIL" }
        )?;
    }
    writeln!(out, "max relative error {worst:.3e}")?;
    Ok(ok)
}

/// Writes a planted-partition dataset into the `output` directory.
pub fn cmd_generate(cfg: &Config, out: &mut dyn Write) -> Result<DatasetPaths> {
    let d = PlantedPartition::default();
    let pp = PlantedPartition {
        nodes: cfg.usize("synth_nodes")?.unwrap_or(d.nodes),
        classes: cfg.usize("synth_classes")?.unwrap_or(d.classes),
        features: cfg.usize("synth_features")?.unwrap_or(d.features),
        p_in: cfg.f64("synth_p_in")?.unwrap_or(d.p_in),
        p_out: cfg.f64("synth_p_out")?.unwrap_or(d.p_out),
        attr_in: cfg.f64("synth_attr_in")?.unwrap_or(d.attr_in),
        attr_out: cfg.f64("synth_attr_out")?.unwrap_or(d.attr_out),
        labeled_fraction: cfg.f64("synth_labeled_fraction")?.unwrap_or(d.labeled_fraction),
        seed: cfg.parsed::<u64>("seed")?.unwrap_or(d.seed),
    };
    let graph = pp.generate()?;
    let dir = PathBuf::from(cfg.require("output")?);
    let paths = save_dataset(&graph, &dir)?;
    writeln!(
        out,
        "wrote {} nodes, {} edges, {} features to {}",
        graph.num_nodes(),
        graph.num_edges(),
        graph.num_features(),
        dir.display()
    )?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_config_with_comments() {
        let cfg = Config::parse("mode = RH_U  # robust\n\nQ=12\nq = 1\n", Path::new("x.cfg")).unwrap();
        assert_eq!(cfg.get("mode"), Some("RH_U"));
        assert_eq!(cfg.usize("Q").unwrap(), Some(12));
        let tc = train_config(&cfg, 20).unwrap();
        assert_eq!(tc.mode, TrainMode::RhU);
        assert_eq!(tc.budget, Budget::new(1, 12));
    }

    #[test]
    fn unknown_keys_list_the_valid_ones() {
        let err = Config::parse("lr = 0.1\n", Path::new("x.cfg")).unwrap_err().to_string();
        assert!(err.contains("unknown key `lr`") && err.contains("learning_rate"), "{err}");
    }

    #[test]
    fn malformed_line_reports_position() {
        match Config::parse("mode = CE\nbatch_size\n", Path::new("c.cfg")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn wrong_value_types_are_errors() {
        let cfg = Config::parse("batch_size = many\n", Path::new("c.cfg")).unwrap();
        assert!(train_config(&cfg, 10).is_err());
    }

    #[test]
    fn node_selection() {
        let g = PlantedPartition { nodes: 10, ..Default::default() }.generate().unwrap();
        assert_eq!(select_nodes(&g, "all").unwrap().len(), 10);
        assert_eq!(select_nodes(&g, "1, 4").unwrap(), vec![1, 4]);
        assert!(select_nodes(&g, "10").is_err());
        assert_eq!(select_nodes(&g, "labeled").unwrap().len(), 2);
    }
}
