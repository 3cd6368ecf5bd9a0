//! The `report` subcommand: collect the JSON artifacts of a finished run
//! directory into one human-readable digest on stdout.

use std::path::Path;

use gapsim::{Error, Result};

fn load(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Param(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Param(format!("bad json {}: {e}", path.display())))
}

pub fn report(out_dir: &Path) -> Result<String> {
    let manifest = out_dir.join("manifest.json");
    if !manifest.exists() {
        return Err(Error::Param(format!(
            "no manifest.json in {}; not a run directory",
            out_dir.display()
        )));
    }
    let m = load(&manifest)?;
    let mut out = String::new();
    out.push_str(&format!("run directory: {}\n", out_dir.display()));
    if let Some(cfg) = m.get("config") {
        out.push_str(&format!(
            "experiment: {}  kernel: {}  seed: {}\n",
            cfg.get("experiment").and_then(|v| v.as_str()).unwrap_or("?"),
            cfg.get("kernel").and_then(|v| v.as_str()).unwrap_or("?"),
            cfg.get("seed").map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    if let Some(w) = m.get("wall_time_s").and_then(|v| v.as_f64()) {
        out.push_str(&format!("wall time: {w:.2}s\n"));
    }
    for name in [
        "rice_summary.json",
        "scaling_summary.json",
        "poisson_summary.json",
        "splitting_summary.json",
        "clustering_summary.json",
    ] {
        let path = out_dir.join(name);
        if path.exists() {
            out.push_str(&format!("\n== {name}\n"));
            out.push_str(&serde_json::to_string_pretty(&load(&path)?).unwrap_or_default());
            out.push('\n');
        }
    }
    let mut csvs: Vec<_> = std::fs::read_dir(out_dir)
        .map_err(|e| Error::Param(format!("cannot list {}: {e}", out_dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    if !csvs.is_empty() {
        out.push_str("\ncsv artifacts:\n");
        for p in csvs {
            out.push_str(&format!("  {}\n", p.display()));
        }
    }
    Ok(out)
}
