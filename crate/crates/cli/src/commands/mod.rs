pub mod analyze;
pub mod fit_anticrossing;
pub mod scan_detuning;
pub mod scan_filter;
pub mod simulate;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{resolve, ConfigFile};
use crate::error::{CliError, CliResult};
use crate::output::{pretty, Format, Provenance, Writer, TOOL, VERSION};

pub struct Context {
    pub seed: u64,
    pub writer: Writer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// Outputs were written but a numeric step failed (exit 3).
    Numeric(String),
    /// Outputs were written but a fit or tracker did not converge (exit 4).
    NotConverged(String),
}

impl Status {
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Numeric(_) => 3,
            Status::NotConverged(_) => 4,
        }
    }

    fn label(&self) -> Value {
        match self {
            Status::Ok => json!("ok"),
            Status::Numeric(m) => json!({"numeric_failure": m}),
            Status::NotConverged(m) => json!({"not_converged": m}),
        }
    }
}

pub struct Outcome {
    pub summary: Value,
    pub status: Status,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn ok(summary: Value) -> Self {
        Self { summary, status: Status::Ok, warnings: Vec::new() }
    }
}

/// A subcommand: its config section, presets and body.
pub struct Spec<S> {
    /// Name on the command line.
    pub name: &'static str,
    /// Config section key.
    pub key: &'static str,
    pub default_preset: &'static str,
    pub presets: &'static [(&'static str, &'static str)],
    pub preset: fn(&str) -> CliResult<Option<S>>,
    pub run: fn(&S, &mut Context) -> CliResult<Outcome>,
}

pub struct Invocation<'a> {
    pub config: &'a ConfigFile,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: &'a std::path::Path,
    /// Applied over the config section, e.g. positional input files.
    pub overrides: Option<Value>,
}

impl<S: Serialize + DeserializeOwned> Spec<S> {
    /// Resolves the section, runs the command and writes `manifest.json`.
    /// Returns the process exit code.
    pub fn execute(&self, inv: Invocation<'_>) -> CliResult<i32> {
        if let Some(cmd) = inv.config.command()? {
            if cmd != self.name {
                return Err(CliError::Config(format!("config was written by `{cmd}`, not `{}`", self.name)));
            }
        }
        let preset_name = match inv.preset {
            Some(p) => p,
            None => inv.config.preset()?.unwrap_or_else(|| self.default_preset.to_string()),
        };
        let preset = (self.preset)(&preset_name)?.ok_or_else(|| {
            let known: Vec<&str> = self.presets.iter().map(|p| p.0).collect();
            CliError::Config(format!("unknown preset `{preset_name}` for {} (known: {})", self.name, known.join(", ")))
        })?;
        let section: S = resolve(self.key, &preset, &[inv.config.section(self.key), inv.overrides.as_ref()])?;
        let seed = match inv.seed {
            Some(s) => s,
            None => inv.config.seed()?.unwrap_or(1),
        };
        let format = match inv.format {
            Some(f) => f,
            None => inv.config.format()?.unwrap_or(Format::Csv),
        };
        let parameters = serde_json::to_value(&section).expect("sections serialize");
        let provenance = Provenance {
            command: self.name.to_string(),
            preset: preset_name.clone(),
            seed,
            parameters: parameters.clone(),
        };
        let mut ctx = Context { seed, writer: Writer::new(inv.out, format, provenance)? };
        let outcome = (self.run)(&section, &mut ctx)?;
        let out_dir = ctx.writer.dir().to_path_buf();
        let outputs = ctx.writer.into_written();
        let mut manifest = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.name,
            "preset": preset_name,
            "seed": seed,
            "format": format,
            "status": outcome.status.label(),
            "warnings": outcome.warnings,
            "outputs": outputs,
            "summary": outcome.summary,
        });
        manifest[self.key] = parameters;
        let path = out_dir.join("manifest.json");
        std::fs::write(&path, pretty(&manifest)).map_err(|e| CliError::io(&path, e))?;
        for w in &outcome.warnings {
            eprintln!("warning: {w}");
        }
        match &outcome.status {
            Status::Ok => {}
            Status::Numeric(m) => eprintln!("error: numeric failure: {m}"),
            Status::NotConverged(m) => eprintln!("error: not converged: {m}"),
        }
        println!("{}", pretty(&json!({"out": out_dir, "outputs": manifest["outputs"], "summary": manifest["summary"]})).trim_end());
        Ok(outcome.status.exit_code())
    }
}

pub const SCAN_FILTER: Spec<scan_filter::Section> = Spec {
    name: "scan-filter",
    key: "scan_filter",
    default_preset: "fig2d",
    presets: &scan_filter::PRESETS,
    preset: scan_filter::preset,
    run: scan_filter::run,
};

pub const SCAN_DETUNING: Spec<scan_detuning::Section> = Spec {
    name: "scan-detuning",
    key: "scan_detuning",
    default_preset: "fig3",
    presets: &scan_detuning::PRESETS,
    preset: scan_detuning::preset,
    run: scan_detuning::run,
};

pub const SIMULATE: Spec<simulate::Section> = Spec {
    name: "simulate",
    key: "simulate",
    default_preset: "figS12",
    presets: &simulate::PRESETS,
    preset: simulate::preset,
    run: simulate::run,
};

pub const ANALYZE: Spec<analyze::Section> = Spec {
    name: "analyze",
    key: "analyze",
    default_preset: "synthetic",
    presets: &analyze::PRESETS,
    preset: analyze::preset,
    run: analyze::run,
};

pub const FIT_ANTICROSSING: Spec<fit_anticrossing::Section> = Spec {
    name: "fit-anticrossing",
    key: "fit_anticrossing",
    default_preset: "synthetic",
    presets: &fit_anticrossing::PRESETS,
    preset: fit_anticrossing::preset,
    run: fit_anticrossing::run,
};

/// `(command, preset, description)` for every built-in preset.
pub fn all_presets() -> Vec<(&'static str, &'static str, &'static str)> {
    let groups: [(&str, &[(&str, &str)]); 5] = [
        (SCAN_FILTER.name, SCAN_FILTER.presets),
        (SCAN_DETUNING.name, SCAN_DETUNING.presets),
        (SIMULATE.name, SIMULATE.presets),
        (ANALYZE.name, ANALYZE.presets),
        (FIT_ANTICROSSING.name, FIT_ANTICROSSING.presets),
    ];
    groups.iter().flat_map(|(cmd, list)| list.iter().map(move |(p, d)| (*cmd, *p, *d))).collect()
}
