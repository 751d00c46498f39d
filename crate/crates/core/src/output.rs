//! Byte-deterministic JSON and CSV output.
//!
//! JSON objects have sorted keys and every float is written with 17
//! significant digits, so output round-trips exactly and two identical
//! results produce identical bytes. CSV uses commas and LF line endings.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;
use thiserror::Error;

use crate::bounds;
use crate::harness::{ExperimentResult, LemmaReport};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Formats a float with 17 significant digits in exponent form.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as JSON with sorted keys and fixed float formatting,
/// followed by a newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, OutputError> {
    // Going through `Value` sorts object keys.
    let tree = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    tree.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        CsvTable {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, OutputError> {
        let mut wtr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        wtr.write_record(&self.header)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.into_inner()
            .map_err(|e| OutputError::Csv(csv::Error::from(e.into_error())))
    }
}

fn s<T: ToString>(v: T) -> String {
    v.to_string()
}

/// Per-seed summary, walk histogram, component census, component-count
/// bounds, and probe buckets. Rows are ordered by seed, then index.
pub fn experiment_tables(result: &ExperimentResult) -> Vec<CsvTable> {
    let mut runs: Vec<_> = result.per_seed.iter().collect();
    runs.sort_by_key(|r| r.seed);

    let mut seeds = CsvTable::new(
        "seeds",
        &[
            "seed",
            "insertions",
            "mean_steps",
            "max_steps",
            "walk_fraction",
            "conditional_mean_steps",
            "a_size",
            "s_size",
            "components",
            "max_component",
            "multi_cycle_components",
            "ell_bound_flags",
            "sampled_insertion_cost",
            "component_accounting",
            "hard_verdicts_pass",
        ],
    );
    let mut hist = CsvTable::new("walk_histogram", &["seed", "steps", "count"]);
    let mut census = CsvTable::new(
        "census",
        &["seed", "component_id", "k", "e", "ell", "cycle_count"],
    );
    let mut comp_bounds = CsvTable::new("component_bounds", &["seed", "k", "observed", "bound"]);
    let mut probes = CsvTable::new(
        "probes",
        &[
            "seed",
            "k",
            "samples",
            "tree_samples",
            "mean_steps",
            "mean_within",
            "max_within",
            "walk_bound",
        ],
    );
    for r in runs {
        seeds.push(vec![
            s(r.seed),
            s(r.walks.insertions),
            fmt_f64(r.walks.mean),
            s(r.walks.max_steps),
            fmt_f64(r.walks.walk_fraction),
            fmt_f64(r.walks.conditional_mean),
            s(r.census.a_size),
            s(r.census.s_size),
            s(r.census.component_count),
            s(r.census.max_size),
            s(r.census.multi_cycle_count),
            s(r.census.flags.ell_bound.len()),
            fmt_f64(r.probes.insertion_cost.sampled_mean),
            fmt_f64(r.probes.insertion_cost.component_accounting),
            s(r.verdicts.all_hold()),
        ]);
        for (&steps, &count) in &r.walks.histogram {
            hist.push(vec![s(r.seed), s(steps), s(count)]);
        }
        for c in &r.components {
            census.push(vec![
                s(r.seed),
                s(c.id),
                s(c.size),
                s(c.edge_count),
                s(c.ell),
                s(c.cycle_count),
            ]);
        }
        for row in &r.census.bound_rows {
            comp_bounds.push(vec![
                s(r.seed),
                s(row.k),
                s(row.observed),
                fmt_f64(row.bound),
            ]);
        }
        for b in r.probes.buckets.values() {
            probes.push(vec![
                s(r.seed),
                s(b.k),
                s(b.samples),
                s(b.tree_samples),
                fmt_f64(b.mean_steps),
                fmt_f64(b.mean_within),
                s(b.max_within),
                fmt_f64(b.walk_bound),
            ]);
        }
    }
    vec![seeds, hist, census, comp_bounds, probes]
}

pub fn lemma_table(reports: &[LemmaReport]) -> CsvTable {
    let mut t = CsvTable::new(
        "verify",
        &[
            "seed",
            "requested",
            "inserted",
            "stopped_by_cap",
            "occupancy",
            "conservation",
            "residency",
            "in_degree_matches_load",
            "degree_agreement",
            "flip_audit",
            "walk_trigger_consistency",
            "saturated_in_s",
            "s_oracle_match",
            "census_oracle_match",
            "all_hold",
        ],
    );
    let opt = |v: Option<bool>| v.map_or_else(|| "skipped".to_string(), s);
    let mut sorted: Vec<_> = reports.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    for r in sorted {
        let v = &r.verdicts;
        t.push(vec![
            s(r.seed),
            s(r.requested),
            s(r.inserted),
            s(r.stopped_by_cap),
            s(v.occupancy),
            s(v.conservation),
            s(v.residency),
            s(v.in_degree_matches_load),
            s(v.degree_agreement),
            s(v.flip_audit),
            s(v.walk_trigger_consistency),
            s(v.saturated_in_s.holds),
            opt(v.s_oracle_match),
            opt(v.census_oracle_match),
            s(v.all_hold()),
        ]);
    }
    t
}

/// One row of the bound table printed by `bounds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub epsilon: f64,
    pub in_theorem_regime: bool,
    pub theorem_bound: f64,
    pub k0_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub d: usize,
    pub n: Option<usize>,
    pub m_const: f64,
    pub epsilon_threshold: f64,
    pub rows: Vec<BoundRow>,
}

/// Threshold for `d`, then `4M/ε²` (and `k0` when `n` is known) for the
/// given `ε` values.
pub fn bound_report(d: usize, n: Option<usize>, m_const: f64, epsilons: &[f64]) -> BoundReport {
    BoundReport {
        d,
        n,
        m_const,
        epsilon_threshold: bounds::epsilon_threshold(d, m_const),
        rows: epsilons
            .iter()
            .map(|&eps| BoundRow {
                epsilon: eps,
                in_theorem_regime: bounds::in_theorem_regime(eps, d, m_const),
                theorem_bound: bounds::theorem_bound(eps, m_const),
                k0_bound: n.map(|n| bounds::k0_bound(n, eps, d, m_const)),
            })
            .collect(),
    }
}

pub fn bound_table(report: &BoundReport) -> CsvTable {
    let mut t = CsvTable::new(
        "bounds",
        &[
            "d",
            "epsilon_threshold",
            "epsilon",
            "in_theorem_regime",
            "theorem_bound",
            "k0_bound",
        ],
    );
    for r in &report.rows {
        t.push(vec![
            s(report.d),
            fmt_f64(report.epsilon_threshold),
            fmt_f64(r.epsilon),
            s(r.in_theorem_regime),
            fmt_f64(r.theorem_bound),
            r.k0_bound.map_or_else(String::new, fmt_f64),
        ]);
    }
    t
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    fs::write(path, bytes).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes JSON to `path`, or to `stdout` when no path is given.
pub fn emit_json<T: Serialize, W: Write>(
    value: &T,
    path: Option<&Path>,
    stdout: &mut W,
) -> Result<(), OutputError> {
    let bytes = to_json_bytes(value)?;
    match path {
        Some(p) => write_file(p, &bytes),
        None => stdout.write_all(&bytes).map_err(|source| OutputError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

/// Writes each table to `<dir>/<name>.csv`, creating `dir` if needed. With
/// no path the tables go to `stdout`, each preceded by a `# <name>` line
/// and separated by a blank line.
pub fn emit_csv<W: Write>(
    tables: &[CsvTable],
    dir: Option<&Path>,
    stdout: &mut W,
) -> Result<(), OutputError> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|source| OutputError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            for t in tables {
                write_file(&dir.join(format!("{}.csv", t.name)), &t.to_bytes()?)?;
            }
            Ok(())
        }
        None => {
            let mut buf = Vec::new();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    buf.push(b'\n');
                }
                buf.extend_from_slice(format!("# {}\n", t.name).as_bytes());
                buf.extend_from_slice(&t.to_bytes()?);
            }
            stdout.write_all(&buf).map_err(|source| OutputError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}
