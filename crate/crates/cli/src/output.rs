//! Writes CSV tables and companion gnuplot scripts into the output directory.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use fronthaul::table::Table;
use std::fs;
use std::path::PathBuf;

pub const VERSION: &str = env!("FRONTHAUL_VERSION");

pub struct Emitter {
    dir: PathBuf,
    command: String,
    digest: String,
    seed: u64,
    written: Vec<PathBuf>,
}

fn io(context: String) -> impl FnOnce(std::io::Error) -> CliError {
    move |source| CliError::Io { context, source }
}

impl Emitter {
    pub fn new(cfg: &ExperimentConfig, command: &str) -> Result<Self, CliError> {
        let dir = PathBuf::from(&cfg.output.dir);
        fs::create_dir_all(&dir).map_err(io(format!("creating {}", dir.display())))?;
        Ok(Self {
            dir,
            command: command.into(),
            digest: cfg.digest(),
            seed: cfg.simulation.seed,
            written: Vec::new(),
        })
    }

    /// Prepends the standard metadata rows and writes `name` under the output directory.
    pub fn table(&mut self, name: &str, table: Table) -> Result<(), CliError> {
        let mut t = Table::new(&[])
            .meta("generator", format!("fronthaul {VERSION}"))
            .meta("command", &self.command)
            .meta("config_digest", &self.digest)
            .meta("seed", self.seed);
        t.meta.extend(table.meta);
        t.columns = table.columns;
        t.rows = table.rows;
        self.write(name, t.to_string())
    }

    pub fn script(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!(
            "# gnuplot script generated by fronthaul {VERSION}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset grid\n{body}"
        );
        self.write(name, text)
    }

    /// Writes raw bytes under the output directory.
    pub fn write(&mut self, name: &str, text: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io(format!("creating {}", parent.display())))?;
        }
        fs::write(&path, text).map_err(io(format!("writing {}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}
