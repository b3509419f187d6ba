//! Command settings from a TOML section, with command-line values on top.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Value;

use crate::CliError;

pub const DATA_DIR_ENV: &str = "DIALAB_DATA_DIR";

/// Default data directory: `$DIALAB_DATA_DIR`, else `data`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

/// Overlays `over` onto `base`. `false` flags are treated as not given.
fn overlay(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (_, Value::Boolean(false)) => {}
            (Some(Value::Table(b)), Value::Table(o)) => overlay(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Keys a section may hold: the command's flags, with `input` spelled `in`,
/// plus its config-only tables.
fn known_keys<T: clap::Args>(tables: &[&str]) -> Vec<String> {
    let cmd = T::augment_args(clap::Command::new("x"));
    cmd.get_arguments()
        .map(|a| match a.get_id().as_str() {
            "input" => "in".to_string(),
            id => id.to_string(),
        })
        .chain(tables.iter().map(|t| t.to_string()))
        .collect()
}

/// Reads section `[command]` of `file` (if any) and applies `cli` over it.
/// `tables` names the nested settings only a config file can supply.
pub fn resolve<T: Serialize + DeserializeOwned + clap::Args>(
    command: &str,
    file: Option<&Path>,
    cli: &T,
    tables: &[&str],
) -> Result<T, CliError> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let mut doc: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            match doc.remove(command) {
                Some(Value::Table(t)) => t,
                Some(_) => return Err(CliError::Usage(format!("config section [{command}] is not a table"))),
                None => toml::Table::new(),
            }
        }
        None => toml::Table::new(),
    };
    let known = known_keys::<T>(tables);
    if let Some(k) = table.keys().find(|k| !known.contains(k)) {
        return Err(CliError::Usage(format!("unknown key {k:?} in config section [{command}]")));
    }
    let over = toml::Table::try_from(cli).map_err(|e| CliError::Usage(e.to_string()))?;
    overlay(&mut table, over);
    table.try_into().map_err(|e: toml::de::Error| CliError::Usage(format!("[{command}]: {e}")))
}
