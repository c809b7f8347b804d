//! Tables and headers. Every table starts with a header block carrying the
//! tool version, the config hash, the base seed and the full config, which is
//! enough to replay the run exactly.
//!
//! CSV: header lines start with `# `, then one column row, then data rows.
//! JSONL: the first line is `{"header": {...}}`, then one object per row.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

pub const TOOL: &str = "aklt-mite";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub schema_version: u32,
    pub config_sha256: String,
    pub base_seed: u64,
    pub config: ExperimentConfig,
}

impl Header {
    pub fn new(config: &ExperimentConfig) -> Self {
        Header {
            tool: TOOL,
            version: VERSION,
            experiment: config.experiment.name(),
            schema_version: config.schema_version,
            config_sha256: config.hash(),
            base_seed: config.seed,
            config: config.replay_view(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(header),
            Format::Jsonl => self.render_jsonl(header),
        }
    }

    fn render_csv(&self, header: &Header) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool={} version={}\n", header.tool, header.version));
        out.push_str(&format!("# experiment={}\n", header.experiment));
        out.push_str(&format!("# schema_version={}\n", header.schema_version));
        out.push_str(&format!("# config_sha256={}\n", header.config_sha256));
        out.push_str(&format!("# base_seed={}\n", header.base_seed));
        out.push_str(&format!(
            "# config={}\n",
            serde_json::to_string(&header.config).expect("config serializes")
        ));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_jsonl(&self, header: &Header) -> String {
        let mut out = serde_json::to_string(&serde_json::json!({ "header": header })).expect("header serializes");
        out.push('\n');
        for row in &self.rows {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .zip(row)
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect();
            out.push_str(&serde_json::to_string(&obj).expect("row serializes"));
            out.push('\n');
        }
        out
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Path of the summary that accompanies `table_path`.
pub fn summary_path(table_path: &Path) -> PathBuf {
    let mut name = table_path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".summary.json");
    table_path.with_file_name(name)
}

/// Summary document: the header plus an experiment-specific body.
pub fn render_summary<S: Serialize>(header: &Header, body: &S) -> String {
    let mut text = serde_json::to_string_pretty(&serde_json::json!({
        "header": header,
        "summary": body,
    }))
    .expect("summary serializes");
    text.push('\n');
    text
}

/// Writes the table (and its summary) to `out`, or the table to stdout and
/// the summary to stderr when no path is given.
pub fn emit(out: Option<&Path>, table: &str, summary: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, table)?;
            std::fs::write(summary_path(path), summary)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(table.as_bytes())?;
            lock.flush()?;
            eprint!("{summary}");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> (Table, Header) {
        let mut t = Table::new(vec!["run_id", "r", "F_tot"]);
        t.push(vec![json!(0), json!(0), json!(0.25)]);
        t.push(vec![json!(0), json!(1), json!(1.0)]);
        (t, Header::new(&ExperimentConfig::default()))
    }

    #[test]
    fn csv_has_header_block_then_columns() {
        let (t, h) = sample();
        let text = t.render(&h, Format::Csv);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool=aklt-mite"));
        assert!(lines.iter().any(|l| l.starts_with("# config_sha256=")));
        let first_data = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[first_data], "run_id,r,F_tot");
        assert_eq!(lines[first_data + 1], "0,0,0.25");
        assert_eq!(lines[first_data + 2], "0,1,1.0");
    }

    #[test]
    fn jsonl_rows_are_objects() {
        let (t, h) = sample();
        let text = t.render(&h, Format::Jsonl);
        let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["header"]["base_seed"], json!(0));
        assert_eq!(lines[2]["F_tot"], json!(1.0));
    }

    #[test]
    fn summary_sits_next_to_table() {
        assert_eq!(summary_path(Path::new("out/run.csv")), PathBuf::from("out/run.csv.summary.json"));
    }
}
