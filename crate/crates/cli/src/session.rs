use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flowrisk::dataset::{
    ingest_csv, parse_index_list, FeatureTable, IngestConfig, Ingested, SplitIndices, SplitManifest,
};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Split {
    Train,
    Validation,
}

/// State shared by the stages of one invocation: the config, the ingested
/// table and split once loaded, and the test-split guard.
pub struct Session {
    pub(crate) config: PipelineConfig,
    pub(crate) fingerprint: String,
    data: Option<Ingested>,
    pub(crate) split: Option<SplitIndices>,
    current: Option<Command>,
    test_reads: usize,
}

impl Session {
    pub fn new(config: PipelineConfig) -> Self {
        let fingerprint = config.fingerprint();
        Self {
            config,
            fingerprint,
            data: None,
            split: None,
            current: None,
            test_reads: 0,
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// How many times the test split has been materialized.
    pub fn test_reads(&self) -> usize {
        self.test_reads
    }

    pub fn run(&mut self, command: Command) -> Result<(), CliError> {
        if command == Command::RunAll {
            for stage in [
                Command::Prepare,
                Command::Screen,
                Command::TrainBaseline,
                Command::Engineer,
                Command::Select,
                Command::Evaluate,
                Command::Importance,
                Command::Export,
            ] {
                self.run(stage)?;
            }
            return Ok(());
        }
        if command != Command::Synth && !self.config.input.is_file() {
            return Err(CliError::input_missing(format!(
                "input table {}",
                self.config.input.display()
            )));
        }
        self.current = Some(command);
        log::info!("stage {}", stage_name(command));
        let result = crate::stages::run_stage(self, command);
        self.current = None;
        result
    }

    pub(crate) fn out(&self, rel: &str) -> PathBuf {
        self.config.output_dir.join(rel)
    }

    pub(crate) fn table(&mut self) -> Result<&FeatureTable, CliError> {
        if self.data.is_none() {
            let cfg = IngestConfig {
                label: Some(self.config.label.clone()),
            };
            let ingested = ingest_csv(&self.config.input, &cfg)?;
            if ingested.rejected_rows > 0 {
                log::warn!("{} row(s) with missing values were dropped", ingested.rejected_rows);
            }
            self.data = Some(ingested);
        }
        Ok(&self.data.as_ref().expect("just loaded").table)
    }

    pub(crate) fn rejected_rows(&self) -> usize {
        self.data.as_ref().map_or(0, |d| d.rejected_rows)
    }

    /// Output of an earlier stage; missing means the stages ran out of order.
    pub(crate) fn read_output(&self, rel: &str, producer: Command) -> Result<String, CliError> {
        let path = self.out(rel);
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::stage_order(format!(
                "{} not found; run `{}` first",
                path.display(),
                stage_name(producer)
            )),
            _ => CliError::io(format!("{}: {e}", path.display())),
        })
    }

    fn load_split(&mut self) -> Result<(), CliError> {
        if self.split.is_some() {
            return Ok(());
        }
        let manifest = SplitManifest::from_toml(&self.read_output("prepare/manifest.toml", Command::Prepare)?)?;
        let n_rows = self.table()?.n_rows();
        if manifest.n_rows != n_rows {
            return Err(CliError::new(
                "input-invalid",
                format!(
                    "split was prepared for {} rows but the input has {n_rows}",
                    manifest.n_rows
                ),
            ));
        }
        let read = |s: &Self, file: &str| -> Result<Vec<usize>, CliError> {
            Ok(parse_index_list(
                &s.read_output(&format!("prepare/{file}"), Command::Prepare)?,
            )?)
        };
        let train = read(self, &manifest.train.file)?;
        let validation = read(self, &manifest.validation.file)?;
        // The test indices stay on disk until evaluate asks for them.
        self.split = Some(SplitIndices {
            seed: manifest.seed,
            test: Vec::new(),
            train,
            validation,
        });
        Ok(())
    }

    pub(crate) fn rows(&mut self, which: Split) -> Result<FeatureTable, CliError> {
        self.load_split()?;
        let split = self.split.as_ref().expect("loaded");
        let idx = match which {
            Split::Train => split.train.clone(),
            Split::Validation => split.validation.clone(),
        };
        Ok(self.table()?.select_rows(&idx))
    }

    /// Held-out rows. Only `evaluate` may read them.
    pub(crate) fn test_rows(&mut self) -> Result<FeatureTable, CliError> {
        if self.current != Some(Command::Evaluate) {
            return Err(CliError::test_guard(format!(
                "stage {} tried to read the test split",
                self.current.map_or("<none>", stage_name)
            )));
        }
        self.load_split()?;
        let manifest = SplitManifest::from_toml(&self.read_output("prepare/manifest.toml", Command::Prepare)?)?;
        let test = parse_index_list(&self.read_output(&format!("prepare/{}", manifest.test.file), Command::Prepare)?)?;
        self.test_reads += 1;
        Ok(self.table()?.select_rows(&test))
    }

    /// Writes every file of a stage, each through a temporary file renamed
    /// into place, then the stage log.
    pub(crate) fn commit(
        &self,
        stage: Command,
        files: Vec<(String, Vec<u8>)>,
        notes: &[(&str, String)],
    ) -> Result<(), CliError> {
        for (rel, bytes) in &files {
            write_atomic(&self.out(rel), bytes)?;
        }
        let mut log = format!(
            "stage = \"{}\"\nconfig_fingerprint = \"{}\"\ntool = \"flowrisk {}\"\n",
            stage_name(stage),
            self.fingerprint,
            env!("CARGO_PKG_VERSION")
        );
        for (key, value) in notes {
            log.push_str(&format!("{key} = {value}\n"));
        }
        let outputs: Vec<String> = files.iter().map(|(rel, _)| format!("\"{rel}\"")).collect();
        log.push_str(&format!("outputs = [{}]\n", outputs.join(", ")));
        write_atomic(&self.out(&format!("logs/{}.log", stage_name(stage))), log.as_bytes())
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let fail = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let mut file = fs::File::create(&tmp).map_err(fail)?;
    file.write_all(bytes).map_err(fail)?;
    file.sync_all().map_err(fail)?;
    fs::rename(&tmp, path).map_err(fail)
}

pub(crate) fn stage_name(c: Command) -> &'static str {
    match c {
        Command::Synth => "synth",
        Command::Prepare => "prepare",
        Command::Screen => "screen",
        Command::TrainBaseline => "train-baseline",
        Command::Engineer => "engineer",
        Command::Select => "select",
        Command::Evaluate => "evaluate",
        Command::Importance => "importance",
        Command::Export => "export",
        Command::RunAll => "run-all",
    }
}
