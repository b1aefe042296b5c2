//! Output directory handling: every artifact is stamped with the
//! config digest and seed (a `#` comment line in CSV, top-level fields
//! in JSON) and written atomically enough for a single-invocation
//! tool: full content assembled in memory, one write per file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub struct OutDir {
    dir: PathBuf,
    digest: String,
    seed: u64,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path, digest: String, seed: u64) -> anyhow::Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            digest,
            seed,
            written: Vec::new(),
        })
    }

    /// Writes a CSV with the provenance comment line, a header row,
    /// and one row per record.
    pub fn write_csv<R: AsRef<str>>(
        &mut self,
        name: &str,
        header: &str,
        rows: impl IntoIterator<Item = R>,
    ) -> anyhow::Result<()> {
        let mut text = format!(
            "# config_digest={} seed={}\n{header}\n",
            self.digest, self.seed
        );
        for row in rows {
            text.push_str(row.as_ref());
            text.push('\n');
        }
        self.write(name, &text)
    }

    /// Writes pretty-printed JSON with `config_digest` and `seed`
    /// injected as top-level fields. The value must serialize to an
    /// object. Key order is alphabetic (serde_json's map ordering), so
    /// reruns are byte-identical.
    pub fn write_json(&mut self, name: &str, value: serde_json::Value) -> anyhow::Result<()> {
        let mut value = value;
        let obj = value
            .as_object_mut()
            .expect("JSON artifacts are objects at the top level");
        obj.insert("config_digest".into(), self.digest.clone().into());
        obj.insert("seed".into(), self.seed.into());
        let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn write(&mut self, name: &str, content: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(name.to_string());
        eprintln!("wrote {}", path.display());
        Ok(())
    }

    /// One-line machine-readable run summary for standard output.
    pub fn summary(&self, command: &str) -> String {
        let mut line = String::new();
        write!(
            line,
            "{}",
            serde_json::json!({
                "command": command,
                "config_digest": self.digest,
                "seed": self.seed,
                "outputs": self.written,
            })
        )
        .expect("summary serializes");
        line
    }
}

/// Formats one CSV row from float cells using the shortest
/// round-trippable representation (deterministic across runs and
/// platforms).
pub fn csv_row(cells: &[f64]) -> String {
    let mut row = String::new();
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            row.push(',');
        }
        write!(row, "{cell}").expect("formatting float");
    }
    row
}
