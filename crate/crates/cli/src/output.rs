use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let wrap = |source| CliError::Write {
        path: path.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(wrap)?;
    let file = File::create(&path).map_err(wrap)?;
    Ok((path, BufWriter::new(file)))
}

fn finish(path: PathBuf, mut w: BufWriter<File>) -> CliResult<PathBuf> {
    w.flush().map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Pretty JSON document followed by a newline.
pub fn write_json(config: &RunConfig, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
    let (path, mut w) = create(Path::new(&config.out), name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    finish(path, w)
}

/// JSON lines: a `{"config": …}` header, then one record per line.
pub fn write_jsonl<T: Serialize>(config: &RunConfig, name: &str, records: &[T]) -> CliResult<PathBuf> {
    let (path, mut w) = create(Path::new(&config.out), name)?;
    let io = |source| CliError::Write {
        path: path.clone(),
        source,
    };
    serde_json::to_writer(&mut w, &json!({ "config": config }))?;
    writeln!(w).map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w).map_err(io)?;
    }
    finish(path, w)
}

/// Runs `body` against a buffered file in the output directory.
pub fn write_with(
    config: &RunConfig,
    name: &str,
    body: impl FnOnce(&mut BufWriter<File>) -> lamplighter::Result<()>,
) -> CliResult<PathBuf> {
    let (path, mut w) = create(Path::new(&config.out), name)?;
    body(&mut w)?;
    finish(path, w)
}

pub fn print_json(value: &impl Serialize) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
