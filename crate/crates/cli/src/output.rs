use std::io::Write;
use std::path::Path;

use clap::{ArgMatches, CommandFactory};
use weakval_core::io::{Meta, Table};

use crate::args::{Cli, Format};
use crate::Failure;

/// Every argument of the invoked subcommand with its resolved value, in
/// definition order. Output paths are left out so that runs differing only
/// in destination produce identical bytes.
pub fn resolved_config(matches: &ArgMatches) -> Meta {
    let mut meta = vec![("version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
    let Some((name, sub)) = matches.subcommand() else {
        return meta;
    };
    meta.push(("command".into(), name.into()));
    let cmd = Cli::command();
    let Some(def) = cmd.find_subcommand(name) else {
        return meta;
    };
    for arg in def.get_arguments() {
        let id = arg.get_id().as_str();
        if matches!(
            id,
            "help" | "version" | "output" | "slices_output" | "ensemble_output"
        ) {
            continue;
        }
        let value = match sub.try_get_raw(id) {
            Ok(Some(values)) => values
                .map(|v| v.to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join(","),
            _ => "none".into(),
        };
        meta.push((id.into(), value));
    }
    meta
}

pub fn render_table(table: &Table, format: Format) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Csv => Ok(table.to_csv().into_bytes()),
        Format::Json => Ok(table.to_json().into_bytes()),
        Format::Binary => Err(Failure::config(
            "binary output is only available for two-dimensional data",
        )),
    }
}

pub fn is_stdout(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

/// Writes to a temporary file beside the target and renames it into place.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let io_failure = |e: std::io::Error| Failure {
        code: 2,
        message: format!("writing output: {e}"),
    };
    match path.filter(|_| !is_stdout(path)) {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|()| stdout.flush())
                .map_err(io_failure)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_failure)?;
            tmp.write_all(bytes)
                .and_then(|()| tmp.flush())
                .map_err(io_failure)?;
            tmp.persist(path).map_err(|e| io_failure(e.error))?;
            Ok(())
        }
    }
}

/// Summary lines go to stdout unless the data itself is going there.
pub fn report(data_on_stdout: bool, line: &str) {
    if data_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}
