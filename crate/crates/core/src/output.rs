//! Result files: numeric CSV tables, JSON documents and their schema.
//!
//! CSVs hold numbers only so they load back through the dataset reader;
//! undefined values (HHI at zero welfare, the mover of an initialization
//! row) are written as documented sentinels. Config echo, seed and version
//! live in the JSON files written next to them.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::analytic::AnalyticTrajectory;
use crate::dynamics::studies::{AsymStudy, CapacityRun, OrderStudy, SweepRow};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// A CSV table assembled in memory.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Shortest round-trip formatting; infinities as `inf` / `-inf`.
pub fn num(x: f64) -> String {
    x.to_string()
}

fn opt_num(x: Option<f64>, missing: f64) -> String {
    num(x.unwrap_or(missing))
}

fn mu_columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn trajectory_table(t: &Trajectory, seed: u64) -> Table {
    let mut header = vec!["seed".to_string(), "round".into(), "mover".into()];
    header.extend(mu_columns("mu_", t.n));
    header.extend(["welfare", "hhi", "potential"].map(String::from));
    let mut table = Table::new(header);
    for s in &t.steps {
        let mut row = vec![
            seed.to_string(),
            s.round.to_string(),
            s.mover.map_or("-1".to_string(), |i| i.to_string()),
        ];
        row.extend(s.shares.iter().map(|&x| num(x)));
        row.push(num(s.welfare));
        row.push(opt_num(s.hhi, 0.0));
        row.push(num(s.potential));
        table.push(row);
    }
    table
}

pub fn analytic_trajectory_table(t: &AnalyticTrajectory, seed: u64) -> Table {
    let mut header = vec!["seed".to_string(), "round".into(), "mover".into()];
    header.extend(mu_columns("mu_", 2));
    header.extend(["welfare", "tau_0", "tau_1"].map(String::from));
    let mut table = Table::new(header);
    for s in &t.steps {
        let mut row = vec![
            seed.to_string(),
            s.round.to_string(),
            s.mover.map_or("-1".to_string(), |i| i.to_string()),
        ];
        row.extend(s.shares.iter().map(|&x| num(x)));
        row.push(num(s.welfare));
        row.extend(s.taus.iter().map(|&x| num(x)));
        table.push(row);
    }
    table
}

pub fn sweep_table(rows: &[SweepRow], seed: u64) -> Table {
    let header = [
        "seed", "index", "a", "sigma_neg", "sigma_pos", "prior", "h_opt", "tau1", "tau2", "accuracy1",
        "accuracy2", "share1", "share2", "welfare", "hhi", "converged", "rounds", "low_level_exists",
        "high_level_exists", "boundary_hit",
    ];
    let mut table = Table::new(header.map(String::from).to_vec());
    let b = |x: bool| (x as u8).to_string();
    for r in rows {
        table.push(vec![
            seed.to_string(),
            r.index.to_string(),
            num(r.a),
            num(r.sigma_neg),
            num(r.sigma_pos),
            num(r.prior),
            num(r.h_opt),
            num(r.tau1),
            num(r.tau2),
            num(r.accuracy1),
            num(r.accuracy2),
            num(r.share1),
            num(r.share2),
            num(r.welfare),
            opt_num(r.hhi, 0.0),
            b(r.converged),
            r.rounds.to_string(),
            b(r.low_level_exists),
            b(r.high_level_exists),
            b(r.boundary_hit),
        ]);
    }
    table
}

pub fn order_runs_table(s: &OrderStudy) -> Table {
    let n = s.runs.first().map_or(0, |r| r.shares_by_position.len());
    let mut header = vec!["seed".to_string()];
    header.extend(mu_columns("mu_pos", n));
    header.extend(["converged", "rounds"].map(String::from));
    let mut table = Table::new(header);
    for r in &s.runs {
        let mut row = vec![r.seed.to_string()];
        row.extend(r.shares_by_position.iter().map(|&x| num(x)));
        row.push((r.converged as u8).to_string());
        row.push(r.rounds.to_string());
        table.push(row);
    }
    table
}

pub fn order_summary_table(s: &OrderStudy, seed: u64) -> Table {
    let header = [
        "seed", "later", "earlier", "count", "mean", "std_error", "min", "q1", "median", "q3", "max",
    ];
    let mut table = Table::new(header.map(String::from).to_vec());
    for p in &s.pairs {
        if let Some(x) = &p.summary {
            table.push(vec![
                seed.to_string(),
                p.later.to_string(),
                p.earlier.to_string(),
                x.count.to_string(),
                num(x.mean),
                num(x.std_error),
                num(x.min),
                num(x.q1),
                num(x.median),
                num(x.q3),
                num(x.max),
            ]);
        }
    }
    table
}

pub fn capacity_table(runs: &[CapacityRun]) -> Table {
    let header = ["seed", "k", "round", "welfare_train", "welfare_test"];
    let mut table = Table::new(header.map(String::from).to_vec());
    for r in runs {
        for round in &r.rounds {
            table.push(vec![
                r.seed.to_string(),
                r.k.to_string(),
                round.round.to_string(),
                num(round.welfare_train),
                opt_num(round.welfare_test, -1.0),
            ]);
        }
    }
    table
}

pub fn asym_table(s: &AsymStudy) -> Table {
    let n = s.runs.first().map_or(0, |r| r.advantaged_shares.len());
    let mut header = vec!["seed".to_string(), "delta_self".into(), "delta_next_best".into()];
    header.extend(mu_columns("adv_mu_", n));
    header.extend(mu_columns("base_mu_", n));
    let mut table = Table::new(header);
    for r in &s.runs {
        let mut row = vec![r.seed.to_string(), num(r.delta_self), num(r.delta_next_best)];
        row.extend(r.advantaged_shares.iter().map(|&x| num(x)));
        row.extend(r.baseline_shares.iter().map(|&x| num(x)));
        table.push(row);
    }
    table
}

/// Column descriptions for every CSV a command can write.
pub fn column_doc(column: &str) -> &'static str {
    let exact = describe(column);
    if !exact.is_empty() {
        return exact;
    }
    describe(column.trim_end_matches(|c: char| c.is_ascii_digit()))
}

fn describe(column: &str) -> &'static str {
    match column {
        "seed" => "base seed of the run (data draws use seed, seed+1, ...)",
        "round" => "round of play; 0 is the initialization",
        "mover" => "provider whose move was adopted; -1 on the initialization row",
        "mu_" => "market share of provider i",
        "mu_pos" => "final market share of the provider at order position i",
        "adv_mu_" => "final share of provider i in the advantaged run",
        "base_mu_" => "final share of provider i in the symmetric baseline run",
        "welfare" => "fraction of users served by at least one correct provider",
        "hhi" => "Herfindahl index of shares of the served market; 0 when welfare is 0",
        "potential" => "congestion potential: minus the sum over examples of H(number of correct providers)",
        "tau_" => "threshold of provider i",
        "index" => "position of the market in the sweep",
        "a" => "class mean offset",
        "sigma_neg" | "sigma_pos" => "class standard deviation",
        "prior" => "probability of the positive class",
        "h_opt" => "accuracy-maximizing threshold",
        "tau" => "final threshold of provider 1 or 2",
        "accuracy" => "final accuracy of provider 1 or 2",
        "share" => "final market share of provider 1 or 2",
        "converged" => "1 when a full round adopted no move",
        "rounds" => "rounds played",
        "low_level_exists" => "the lower response level has an increasing-ratio crossing in the interval",
        "high_level_exists" => "the upper response level has an increasing-ratio crossing in the interval",
        "boundary_hit" => "1 when a final threshold lies on an interval end",
        "later" | "earlier" => "order positions compared (difference is mu[later] - mu[earlier])",
        "count" => "number of runs",
        "mean" | "std_error" | "min" | "q1" | "median" | "q3" | "max" => "statistic of the share difference",
        "k" => "leading feature columns visible to every provider",
        "welfare_train" => "welfare on the train split",
        "welfare_test" => "welfare on the test split; -1 without a split",
        "delta_self" => "provider's share with extra features minus its share without",
        "delta_next_best" => "change in the provider's lead over the best other provider",
        _ => "",
    }
}

/// `schema.json`: per-file column descriptions plus run metadata.
pub fn schema(files: &[(&str, &Table)], seed: u64) -> Value {
    let mut map = serde_json::Map::new();
    for (name, t) in files {
        let cols: Vec<Value> = t
            .header()
            .iter()
            .map(|c| json!({ "name": c, "description": column_doc(c) }))
            .collect();
        map.insert(name.to_string(), Value::Array(cols));
    }
    json!({ "version": VERSION, "seed": seed, "files": map })
}

/// Output directory writer.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(OutDir { dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn table(&self, name: &str, t: &Table) -> Result<()> {
        write_atomic(&self.path(name), &t.to_bytes()?)
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        bytes.push(b'\n');
        write_atomic(&self.path(name), &bytes)
    }
}

/// Wraps a result document with the metadata every JSON output carries.
pub fn document(kind: &str, seed: u64, config_text: &str, result: impl Serialize) -> Value {
    json!({
        "kind": kind,
        "version": VERSION,
        "seed": seed,
        "config": config_text,
        "result": result,
    })
}

/// Legend for decomposition keys.
pub fn decomposition_legend(n: usize) -> Value {
    let providers: serde_json::Map<String, Value> =
        (0..n).map(|i| (format!("provider_{i}"), json!(1u64 << i))).collect();
    json!({
        "key": "integer bitmask of the providers correct on an example (bit i = provider i)",
        "providers": providers,
        "omitted_keys": "subsets with no examples have mass 0",
    })
}
