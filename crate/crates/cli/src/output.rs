//! Artifact emission: summary JSON, monitor CSVs, gnuplot script, state dumps.

use sigmakflow_core::diagnostics::MonitorSeries;
use sigmakflow_core::flow::FlowState;
use sigmakflow_core::report::json_to_string;
use sigmakflow_core::snapshot;
use serde_json::Value;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub fn ensure_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)
}

pub fn write_summary(dir: &Path, summary: &Value) -> io::Result<PathBuf> {
    let path = dir.join("summary.json");
    fs::write(&path, json_to_string(summary) + "\n")?;
    Ok(path)
}

pub fn write_state(dir: &Path, name: &str, state: &FlowState) -> io::Result<PathBuf> {
    let path = dir.join(format!("{name}.snap"));
    fs::write(&path, snapshot::write_snapshot(state))?;
    Ok(path)
}

/// One CSV per series plus a gnuplot script referencing them all.
/// Deterministic naming: `<index>_<slug>.csv`.
pub fn emit_plot_data(series: &[MonitorSeries], dir: &Path) -> io::Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let mut script = String::from("# gnuplot script generated by sigmakflow\nset datafile separator ','\nset key outside\n");
    if series.is_empty() {
        eprintln!("warning: no monitor series to plot");
        script.push_str("# no series were produced by this experiment\n");
    } else {
        script.push_str("plot ");
        for (i, s) in series.iter().enumerate() {
            let slug: String = s
                .name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            let fname = format!("{i:02}_{slug}.csv");
            fs::write(dir.join(&fname), s.csv())?;
            if i > 0 {
                script.push_str(", ");
            }
            script.push_str(&format!("'{fname}' using 1:2 with lines title '{}'", s.name));
            written.push(dir.join(fname));
        }
        script.push('\n');
    }
    let script_path = dir.join("plot.gp");
    fs::write(&script_path, script)?;
    written.push(script_path);
    Ok(written)
}
