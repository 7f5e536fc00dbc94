//! Flat key-value run configuration: defaults, config-file merge, flag
//! overrides, and the manifest echo that makes runs reproducible.
//!
//! The config file is flat TOML (`key = value` lines, no tables). Flags
//! mirror keys one-to-one; a flag always wins over a file value. The
//! manifest written next to the outputs is itself a valid config file, so
//! `fput --config <manifest>` replays the run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Every tunable of every subcommand, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: String,
    // model
    pub n: usize,
    pub alpha: f64,
    pub tau: f64,
    pub variant: String,    // auto | homogeneous | disordered
    pub integrator: String, // auto | yoshida | rk8
    // integration
    pub dt: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub t_final: f64,
    pub stride: f64,
    pub escape_radius: f64,
    pub initial_step: f64,
    /// 0 = full system; m > 0 integrates the m-mode truncation.
    pub modes: usize,
    // ensembles
    pub realizations: usize,
    pub tau_grid: String, // "start:stop:step" or comma list
    pub n_list: String,   // comma list
    pub horizon: f64,
    pub renorm_interval: f64,
    pub export_series: bool,
    // two-mode / bifurcation
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub c: f64, // NaN = derive from the canonical initial condition
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_steps: usize,
    pub theta_steps: usize,
    pub slow_span: f64,
    pub handoff: f64,
    pub direction: f64,
    // run plumbing
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            n: 64,
            alpha: 0.25,
            tau: 0.0,
            variant: "auto".into(),
            integrator: "auto".into(),
            dt: 0.01,
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            t_final: 1e4,
            stride: 10.0,
            escape_radius: 1e6,
            initial_step: 1e-3,
            modes: 0,
            realizations: 100,
            tau_grid: "0:12:1".into(),
            n_list: "4,8,16,32,64".into(),
            horizon: 1e6,
            renorm_interval: 1.0,
            export_series: false,
            a_tilde: f64::NAN,
            b_tilde: f64::NAN,
            c: f64::NAN,
            delta_min: -10.0,
            delta_max: 20.0,
            delta_steps: 121,
            theta_steps: 32,
            slow_span: 50.0,
            handoff: 1e-3,
            direction: -1.0,
            seed: 12345,
            workers: 0,
            out: PathBuf::new(),
        }
    }
}

macro_rules! config_keys {
    ($($key:literal => $field:ident : $kind:ident),+ $(,)?) => {
        impl RunConfig {
            /// Applies one `key = value` pair from a config file.
            fn apply_entry(&mut self, key: &str, value: &toml::Value) -> Result<()> {
                match key {
                    $($key => self.$field = parse_value!($kind, key, value)?,)+
                    _ => bail!("unknown config key `{key}`"),
                }
                Ok(())
            }

            /// Serializes every key in declaration order.
            pub fn to_manifest_body(&self) -> String {
                let mut s = String::new();
                $(emit_value!($kind, s, $key, &self.$field);)+
                s
            }
        }
    };
}

macro_rules! parse_value {
    (string, $key:expr, $v:expr) => {
        $v.as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| anyhow!("config key `{}` must be a string", $key))
    };
    (float, $key:expr, $v:expr) => {
        match $v {
            toml::Value::Float(f) => Ok(*f),
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::String(s) if s == "nan" => Ok(f64::NAN),
            _ => Err(anyhow!("config key `{}` must be a number", $key)),
        }
    };
    (unsigned, $key:expr, $v:expr) => {
        $v.as_integer()
            .filter(|i| *i >= 0)
            .map(|i| i as _)
            .ok_or_else(|| anyhow!("config key `{}` must be a non-negative integer", $key))
    };
    (boolean, $key:expr, $v:expr) => {
        $v.as_bool()
            .ok_or_else(|| anyhow!("config key `{}` must be a boolean", $key))
    };
    (path, $key:expr, $v:expr) => {
        $v.as_str()
            .map(PathBuf::from)
            .ok_or_else(|| anyhow!("config key `{}` must be a string path", $key))
    };
}

macro_rules! emit_value {
    (string, $s:expr, $key:expr, $v:expr) => {
        let _ = writeln!($s, "{} = {:?}", $key, $v);
    };
    (float, $s:expr, $key:expr, $v:expr) => {
        let v: &f64 = $v;
        if v.is_nan() {
            let _ = writeln!($s, "{} = \"nan\"", $key);
        } else if v.fract() == 0.0 && v.abs() < 1e15 {
            let _ = writeln!($s, "{} = {:.1}", $key, v);
        } else {
            let _ = writeln!($s, "{} = {}", $key, v);
        }
    };
    (unsigned, $s:expr, $key:expr, $v:expr) => {
        let _ = writeln!($s, "{} = {}", $key, $v);
    };
    (boolean, $s:expr, $key:expr, $v:expr) => {
        let _ = writeln!($s, "{} = {}", $key, $v);
    };
    (path, $s:expr, $key:expr, $v:expr) => {
        let p: &PathBuf = $v;
        let _ = writeln!($s, "{} = {:?}", $key, p.display().to_string());
    };
}

config_keys! {
    "command" => command: string,
    "n" => n: unsigned,
    "alpha" => alpha: float,
    "tau" => tau: float,
    "variant" => variant: string,
    "integrator" => integrator: string,
    "dt" => dt: float,
    "abs_tol" => abs_tol: float,
    "rel_tol" => rel_tol: float,
    "t_final" => t_final: float,
    "stride" => stride: float,
    "escape_radius" => escape_radius: float,
    "initial_step" => initial_step: float,
    "modes" => modes: unsigned,
    "realizations" => realizations: unsigned,
    "tau_grid" => tau_grid: string,
    "n_list" => n_list: string,
    "horizon" => horizon: float,
    "renorm_interval" => renorm_interval: float,
    "export_series" => export_series: boolean,
    "a_tilde" => a_tilde: float,
    "b_tilde" => b_tilde: float,
    "c" => c: float,
    "delta_min" => delta_min: float,
    "delta_max" => delta_max: float,
    "delta_steps" => delta_steps: unsigned,
    "theta_steps" => theta_steps: unsigned,
    "slow_span" => slow_span: float,
    "handoff" => handoff: float,
    "direction" => direction: float,
    "seed" => seed: unsigned,
    "workers" => workers: unsigned,
    "out" => out: path,
}

impl RunConfig {
    /// Loads and applies a flat TOML config file. Unknown keys are errors.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let table: toml::Table = text
            .parse()
            .with_context(|| format!("invalid TOML in {}", path.display()))?;
        for (key, value) in &table {
            if value.is_table() {
                bail!("config must be flat: `{key}` is a table");
            }
            self.apply_entry(key, value)
                .with_context(|| format!("in config file {}", path.display()))?;
        }
        Ok(())
    }

    /// Full manifest: resolved keys plus commented run metadata.
    pub fn manifest_text(&self, wall_time_s: f64) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# fput run manifest (valid config file; replay with `fput --config <this file>`)"
        );
        let _ = writeln!(s, "# version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# wall_time_s = {wall_time_s}");
        s.push_str(&self.to_manifest_body());
        s
    }
}

/// Parses `"start:stop:step"` ranges or comma-separated lists of reals.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            bail!("grid range must be start:stop:step, got `{text}`");
        }
        let start: f64 = parts[0].trim().parse()?;
        let stop: f64 = parts[1].trim().parse()?;
        let step: f64 = parts[2].trim().parse()?;
        if step.is_nan() || step <= 0.0 || stop < start {
            bail!("grid range needs step > 0 and stop >= start");
        }
        let count = ((stop - start) / step).round() as usize;
        return Ok((0..=count).map(|k| start + k as f64 * step).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(Into::into))
        .collect()
}

/// Parses a comma-separated list of chain sizes.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(Into::into))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips_through_parser() {
        let mut cfg = RunConfig {
            command: "simulate".into(),
            tau: 7.5,
            t_final: 12345.678,
            out: PathBuf::from("/tmp/x"),
            ..Default::default()
        };
        let text = cfg.manifest_text(1.25);
        let dir = std::env::temp_dir().join("fput_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.toml");
        std::fs::write(&path, &text).unwrap();
        let mut cfg2 = RunConfig::default();
        cfg2.apply_file(&path).unwrap();
        assert_eq!(cfg2.command, "simulate");
        assert_eq!(cfg2.tau, 7.5);
        assert_eq!(cfg2.t_final, 12345.678);
        assert_eq!(cfg2.out, PathBuf::from("/tmp/x"));
        // NaN sentinel survives
        cfg.a_tilde = f64::NAN;
        std::fs::write(&path, cfg.manifest_text(0.0)).unwrap();
        let mut cfg3 = RunConfig::default();
        cfg3.apply_file(&path).unwrap();
        assert!(cfg3.a_tilde.is_nan());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = std::env::temp_dir().join("fput_cfg_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "no_such_key = 1\n").unwrap();
        assert!(RunConfig::default().apply_file(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn grid_syntaxes() {
        assert_eq!(parse_grid("0:3:1").unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(parse_grid("1.5, 2.5").unwrap(), vec![1.5, 2.5]);
        assert!(parse_grid("5:1:1").is_err());
        assert_eq!(parse_n_list("4, 8,16").unwrap(), vec![4, 8, 16]);
    }
}
