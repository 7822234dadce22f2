//! Output files: CSV with `#` metadata lines and the JSON report.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Config;

pub const HISTOGRAM_HEADER: &str = "k,count,empirical_p,reference_p,std_err";
pub const SPECTRAL_HEADER: &str = "n,mu_An,s,lambda,ratio,grid,residual";
pub const HITTING_HEADER: &str = "trial,tau,scaled_tau,censored";

/// Shortest round-trip form, in exponent notation for very small or large values.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

/// A named output with its bytes.
pub struct Artifact {
    pub name: &'static str,
    pub body: String,
}

/// Config block shared by every output.
pub fn meta(cfg: &Config) -> Value {
    let mut settings = cfg.to_json();
    if let Some(m) = settings.as_object_mut() {
        m.remove("seed");
    }
    json!({
        "version": cfpoisson::VERSION,
        "experiment": cfg.command.tag(),
        "seed": cfg.has("seed").then(|| cfg.seed()),
        "settings": settings,
    })
}

pub fn csv(cfg: &Config, header: &str, rows: &[String]) -> String {
    let mut s = String::new();
    s.push_str(&format!("# cfpoisson {}\n", cfpoisson::VERSION));
    s.push_str(&format!("# experiment: {}\n", cfg.command.tag()));
    if cfg.has("seed") {
        s.push_str(&format!("# seed: {}\n", cfg.seed()));
    }
    s.push_str(&format!("# config: {}\n", cfg.to_json()));
    s.push_str(header);
    s.push('\n');
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

pub fn report(cfg: &Config, results: Value, witnesses: Value, runtime_seconds: f64) -> String {
    let v = json!({
        "config": meta(cfg),
        "results": results,
        "witnesses": witnesses,
        "runtime_seconds": runtime_seconds,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

/// Writes every artifact into `dir`, or none of them.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(artifacts.len());
    let result = (|| {
        for a in artifacts {
            let tmp = dir.join(format!(".{}.partial", a.name));
            staged.push((tmp.clone(), dir.join(a.name)));
            let mut f = fs::File::create(&tmp)?;
            f.write_all(a.body.as_bytes())?;
            f.sync_all()?;
        }
        for (tmp, dest) in &staged {
            fs::rename(tmp, dest)?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}
