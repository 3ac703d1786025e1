//! Output files: CSV tables and JSON reports, each stamped with the
//! version, seed and config hash.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

/// Provenance stamped on every output.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub version: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl Stamp {
    pub fn new(seed: u64, config_sha256: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config_sha256: config_sha256.to_string(),
        }
    }
}

/// Floats with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Outputs {
    pub dir: PathBuf,
    pub stamp: Stamp,
}

impl Outputs {
    pub fn new(dir: &Path, stamp: Stamp) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            stamp,
        })
    }

    /// Writes a CSV file preceded by a `#` comment block.
    pub fn csv(
        &self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "# anosov {}", self.stamp.version)?;
        writeln!(f, "# seed: {}", self.stamp.seed)?;
        writeln!(f, "# config-sha256: {}", self.stamp.config_sha256)?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Writes `{"stamp": .., "report": ..}` as pretty JSON.
    pub fn json<T: Serialize>(&self, name: &str, report: &T) -> std::io::Result<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            stamp: &'a Stamp,
            report: &'a T,
        }
        let path = self.dir.join(name);
        let text = serde_json::to_string_pretty(&Doc {
            stamp: &self.stamp,
            report,
        })?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut s = format!(
            "# anosov {}\n# seed: {}\n# config-sha256: {}\n",
            self.stamp.version, self.stamp.seed, self.stamp.config_sha256
        );
        s.push_str(body);
        std::fs::write(&path, s)?;
        Ok(path)
    }
}
