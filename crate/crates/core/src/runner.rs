//! Batch experiment runner: TOML configs in, manifest + JSON results + CSV
//! series out, byte-reproducible for a fixed config and seed.
//!
//! Alphabets and potentials are selected by name through small registries so
//! configs stay declarative. Every run directory contains a `manifest.json`
//! listing all files the run produced.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alphabet::{
    make_chain_window_alphabet_with_budget, make_circle_alphabet, make_finite_alphabet,
    make_sphere_alphabet, Alphabet, DEFAULT_WINDOW_BUDGET,
};
use crate::error::{Error, Result};
use crate::heisenberg::{self, langevin, LadderParams};
use crate::potential::{heisenberg_potential, Potential};
use crate::transfer::TransferOperator;
use crate::{calculus, correlation, thermo};

/// Environment variable naming the root directory for run outputs.
pub const OUTPUT_ROOT_ENV: &str = "RUELLE_OUTPUT_ROOT";

/// Alphabet selector. `kind` is one of finite | circle | sphere |
/// chain-window; chain-window wraps a base sphere rule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphabetSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_polar: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_azimuth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

/// Potential selector. `kind` is one of constant | coordinate-coupling |
/// xy-nn | sphere-nn | heisenberg-ladder | custom-table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_const: Option<f64>,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    100_000
}

fn default_n_max() -> usize {
    30
}

/// Numeric parameters shared across experiment kinds; unused fields are
/// ignored by kinds that do not need them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Params {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_decay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Sample sizes n for finite-n deviation / Birkhoff series; defaults to
    /// powers of two up to n_max.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_ns: Option<Vec<usize>>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            tol: default_tol(),
            max_iter: default_max_iter(),
            n_max: default_n_max(),
            beta: None,
            alpha_decay: None,
            window_radius: None,
            rows: None,
            chains: None,
            burn_in_sweeps: None,
            measure_sweeps: None,
            measure_every: None,
            budget: None,
            series_ns: None,
        }
    }
}

/// One experiment, parsed from a TOML file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// spectrum | pressure | deriv-check | correlations | chain | ladder |
    /// crosscheck
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<AlphabetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    /// Direction potential for deriv-check; observable phi for
    /// correlations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PotentialSpec>,
    /// Second observable for correlations; defaults to phi.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PotentialSpec>,
    #[serde(default)]
    pub params: Params,
}

pub const EXPERIMENT_KINDS: [&str; 7] = [
    "spectrum",
    "pressure",
    "deriv-check",
    "correlations",
    "chain",
    "ladder",
    "crosscheck",
];

const POTENTIAL_KINDS: [&str; 6] = [
    "constant",
    "coordinate-coupling",
    "xy-nn",
    "sphere-nn",
    "heisenberg-ladder",
    "custom-table",
];

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config parse error: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = fs::read_to_string(path)?;
        ExperimentConfig::from_toml(&text)
    }

    /// Collect every violated field; empty means valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !EXPERIMENT_KINDS.contains(&self.kind.as_str()) {
            v.push(format!("kind: unknown experiment kind '{}'", self.kind));
        }
        if !(self.params.tol > 0.0) {
            v.push(format!("params.tol: must be positive, got {}", self.params.tol));
        }
        if self.params.max_iter == 0 {
            v.push("params.max_iter: must be positive".into());
        }
        if let Some(a) = &self.alphabet {
            v.extend(a.violations("alphabet"));
        }
        for (spec, field) in [
            (&self.potential, "potential"),
            (&self.phi, "phi"),
            (&self.psi, "psi"),
        ] {
            if let Some(p) = spec {
                if !POTENTIAL_KINDS.contains(&p.kind.as_str()) {
                    v.push(format!("{field}.kind: unknown potential kind '{}'", p.kind));
                }
            }
        }
        let needs_operator = matches!(
            self.kind.as_str(),
            "spectrum" | "pressure" | "deriv-check" | "correlations"
        );
        if needs_operator {
            if self.alphabet.is_none() {
                v.push("alphabet: required for this experiment kind".into());
            }
            if self.potential.is_none() {
                v.push("potential: required for this experiment kind".into());
            }
        }
        if matches!(self.kind.as_str(), "deriv-check" | "correlations") && self.phi.is_none() {
            v.push("phi: required for this experiment kind".into());
        }
        if matches!(self.kind.as_str(), "chain" | "ladder" | "crosscheck") {
            match self.params.beta {
                None => v.push("params.beta: required for this experiment kind".into()),
                Some(b) if b < 0.0 => {
                    v.push(format!("params.beta: must be nonnegative, got {b}"))
                }
                _ => {}
            }
        }
        if matches!(self.kind.as_str(), "ladder" | "crosscheck")
            && self.params.alpha_decay.map_or(true, |a| a <= 0.0)
        {
            v.push("params.alpha_decay: required and must be positive".into());
        }
        if self.kind == "crosscheck" && self.alphabet.is_none() {
            v.push("alphabet: base rule required for crosscheck".into());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    /// Stable hash of the resolved config (seed included, output paths
    /// excluded) used as the run key in reports.
    pub fn config_hash(&self) -> String {
        let mut hashed = self.clone();
        hashed.output_dir = None;
        let text = serde_json::to_string(&hashed).unwrap_or_default();
        // FNV-1a, 64 bit
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

impl AlphabetSpec {
    fn violations(&self, field: &str) -> Vec<String> {
        let mut v = Vec::new();
        match self.kind.as_str() {
            "finite" => {
                if self.symbols.map_or(true, |n| n == 0) {
                    v.push(format!("{field}.symbols: required and must be positive"));
                }
            }
            "circle" => {
                if self.nodes.map_or(true, |n| n < 2) {
                    v.push(format!("{field}.nodes: required and must be at least 2"));
                }
            }
            "sphere" => {
                if self.n_polar.map_or(true, |n| n == 0) {
                    v.push(format!("{field}.n_polar: required and must be positive"));
                }
                if self.n_azimuth.map_or(true, |n| n < 2) {
                    v.push(format!("{field}.n_azimuth: required and must be at least 2"));
                }
            }
            "chain-window" => {
                if self.n_polar.map_or(true, |n| n == 0)
                    || self.n_azimuth.map_or(true, |n| n < 2)
                {
                    v.push(format!(
                        "{field}: chain-window needs n_polar and n_azimuth for the base sphere rule"
                    ));
                }
                if self.window_radius.is_none() {
                    v.push(format!("{field}.window_radius: required"));
                }
                if self.beta.map_or(true, |b| b < 0.0) {
                    v.push(format!("{field}.beta: required and must be nonnegative"));
                }
            }
            other => v.push(format!("{field}.kind: unknown alphabet kind '{other}'")),
        }
        v
    }
}

/// Alphabet registry: resolve a spec into a concrete rule.
pub fn build_alphabet(spec: &AlphabetSpec) -> Result<Alphabet> {
    match spec.kind.as_str() {
        "finite" => make_finite_alphabet(spec.symbols.unwrap_or(0)),
        "circle" => make_circle_alphabet(spec.nodes.unwrap_or(0)),
        "sphere" => make_sphere_alphabet(spec.n_polar.unwrap_or(0), spec.n_azimuth.unwrap_or(0)),
        "chain-window" => {
            let base =
                make_sphere_alphabet(spec.n_polar.unwrap_or(0), spec.n_azimuth.unwrap_or(0))?;
            let window = make_chain_window_alphabet_with_budget(
                &base,
                spec.window_radius.unwrap_or(0),
                spec.beta.unwrap_or(0.0),
                spec.budget.unwrap_or(DEFAULT_WINDOW_BUDGET),
            )?;
            Ok(window.as_alphabet())
        }
        other => Err(Error::Config(format!("unknown alphabet kind '{other}'"))),
    }
}

fn coupling_potential(beta: f64, name: &str, diameter: f64) -> Potential {
    // f(x, y) = beta <x_1, y_1> on coordinate vectors; Lipschitz in each
    // symbol with constant |beta| * diameter, and the sequence metric scales
    // the second coordinate by 1/2, hence the closure constant below.
    let b = beta;
    // Lipschitz, certified at exponent 0.99 (the exponent must stay below
    // 1); the constant absorbs diam^{0.01} of the sequence space.
    Potential::new(
        2,
        0.99,
        2.0 * b.abs() * diameter * (2.0 * diameter).powf(0.01),
        name,
        move |x: &[&[f64]]| b * x[0].iter().zip(x[1]).map(|(p, q)| p * q).sum::<f64>(),
    )
}

/// Potential registry: resolve a spec into a concrete potential on the
/// given alphabet.
pub fn build_potential(spec: &PotentialSpec, alphabet: &Alphabet) -> Result<Potential> {
    match spec.kind.as_str() {
        "constant" => Ok(Potential::constant(spec.value.unwrap_or(0.0))),
        "coordinate-coupling" | "xy-nn" | "sphere-nn" => {
            let beta = spec.beta.ok_or_else(|| {
                Error::Config(format!("{}.beta: required", spec.kind))
            })?;
            Ok(coupling_potential(beta, &spec.kind, alphabet.diameter))
        }
        "heisenberg-ladder" => {
            let alpha = spec.alpha_decay.ok_or_else(|| {
                Error::Config("heisenberg-ladder.alpha_decay: required".into())
            })?;
            let w = spec.window_radius.ok_or_else(|| {
                Error::Config("heisenberg-ladder.window_radius: required".into())
            })?;
            let f = heisenberg_potential(alpha, w);
            Ok(match spec.beta {
                Some(b) => f.scaled(b),
                None => f,
            })
        }
        "custom-table" => {
            let depth = spec
                .depth
                .ok_or_else(|| Error::Config("custom-table.depth: required".into()))?;
            let path = spec
                .table_path
                .clone()
                .ok_or_else(|| Error::Config("custom-table.table_path: required".into()))?;
            let table = read_table_csv(Path::new(&path), alphabet.len().pow(depth as u32))?;
            let nodes: Vec<Vec<f64>> = alphabet.rule.nodes.clone();
            let n = nodes.len();
            let eval = move |x: &[&[f64]]| {
                let mut index = 0usize;
                for sym in x {
                    let (best, _) = nodes
                        .iter()
                        .enumerate()
                        .map(|(i, node)| {
                            let d: f64 = node
                                .iter()
                                .zip(sym.iter())
                                .map(|(a, b)| (a - b) * (a - b))
                                .sum();
                            (i, d)
                        })
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap();
                    index = index * n + best;
                }
                table[index]
            };
            Ok(Potential::new(
                depth,
                spec.holder_alpha.unwrap_or(0.5),
                spec.holder_const.unwrap_or(f64::INFINITY),
                "custom-table",
                eval,
            ))
        }
        other => Err(Error::Config(format!("unknown potential kind '{other}'"))),
    }
}

fn read_table_csv(path: &Path, expected: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut values = vec![f64::NAN; expected];
    let mut seen = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("index") {
            continue;
        }
        let mut parts = line.split(',');
        let bad = || Error::Config(format!("{}:{}: expected 'index,value'", path.display(), lineno + 1));
        let index: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        let value: f64 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(bad)?;
        if index >= expected {
            return Err(Error::Config(format!(
                "{}: index {index} out of range (grid size {expected})",
                path.display()
            )));
        }
        values[index] = value;
        seen += 1;
    }
    if seen != expected || values.iter().any(|v| v.is_nan()) {
        return Err(Error::Config(format!(
            "{}: table covers {seen} of {expected} grid entries",
            path.display()
        )));
    }
    Ok(values)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn series_ns(params: &Params) -> Vec<usize> {
    params.series_ns.clone().unwrap_or_else(|| {
        let mut ns = Vec::new();
        let mut n = 1usize;
        while n <= params.n_max {
            ns.push(n);
            n *= 2;
        }
        if ns.last() != Some(&params.n_max) {
            ns.push(params.n_max);
        }
        ns
    })
}

struct RunDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl RunDir {
    fn create(dir: &Path) -> Result<RunDir> {
        fs::create_dir_all(dir)?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// Resolve the run directory: `$RUELLE_OUTPUT_ROOT` (default `.`) joined
/// with the config's `output_dir` (default `run-<hash>`).
pub fn resolve_output_dir(config: &ExperimentConfig) -> PathBuf {
    let root = std::env::var(OUTPUT_ROOT_ENV).unwrap_or_else(|_| ".".to_string());
    let leaf = config
        .output_dir
        .clone()
        .unwrap_or_else(|| format!("run-{}", config.config_hash()));
    Path::new(&root).join(leaf)
}

/// Execute one experiment, writing all artifacts into `dir`. Returns the
/// run directory path.
pub fn run(config: &ExperimentConfig, dir: &Path) -> Result<PathBuf> {
    config.validate()?;
    let started = Instant::now();
    let mut out = RunDir::create(dir)?;
    let result = match config.kind.as_str() {
        "spectrum" => run_spectrum(config, &mut out)?,
        "pressure" => run_pressure(config, &mut out)?,
        "deriv-check" => run_deriv_check(config, &mut out)?,
        "correlations" => run_correlations(config, &mut out)?,
        "chain" => run_chain(config, &mut out)?,
        "ladder" => run_ladder_experiment(config, &mut out)?,
        "crosscheck" => run_crosscheck(config)?,
        other => return Err(Error::Config(format!("unknown experiment kind '{other}'"))),
    };
    out.write_json("result.json", &result)?;

    let manifest = serde_json::json!({
        "config": config,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "kind": config.kind,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "outputs": out.files,
    });
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(out.dir.join("manifest.json"), text)?;
    Ok(out.dir)
}

fn build_operator(config: &ExperimentConfig) -> Result<(TransferOperator, Alphabet)> {
    let spec = config
        .alphabet
        .as_ref()
        .ok_or_else(|| Error::Config("alphabet: required".into()))?;
    let alphabet = build_alphabet(spec)?;
    let pot_spec = config
        .potential
        .as_ref()
        .ok_or_else(|| Error::Config("potential: required".into()))?;
    let f = build_potential(pot_spec, &alphabet)?;
    let op = TransferOperator::new(&alphabet, &f)?;
    Ok((op, alphabet))
}

fn eigen_csv(op: &TransferOperator, eig: &crate::transfer::EigenData) -> String {
    let dim = op.grid.alphabet.rule.nodes[0].len();
    let mut csv = String::from("index");
    for d in 0..op.grid.depth {
        for c in 0..dim {
            let _ = write!(csv, ",x{}_{}", d + 1, c);
        }
    }
    csv.push_str(",h,nu\n");
    for i in 0..op.grid.size {
        let tuple = op.grid.index_to_tuple(i);
        let _ = write!(csv, "{i}");
        for coords in op.grid.tuple_coords(&tuple) {
            for c in coords {
                let _ = write!(csv, ",{}", fmt_f(*c));
            }
        }
        let _ = writeln!(csv, ",{},{}", fmt_f(eig.h.values[i]), fmt_f(eig.nu[i]));
    }
    csv
}

fn run_spectrum(config: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    let (op, _) = build_operator(config)?;
    let eig = op.power_iteration(config.params.tol, config.params.max_iter)?;
    out.write("eigen.csv", &eigen_csv(&op, &eig))?;
    Ok(serde_json::json!({
        "lambda": eig.lambda,
        "log_lambda": eig.log_lambda,
        "gap_ratio": eig.gap_ratio,
        "iterations": eig.iterations,
        "residual_right": eig.residual_right,
        "residual_left": eig.residual_left,
        "grid_size": op.grid.size,
    }))
}

fn run_pressure(config: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    let (op, _) = build_operator(config)?;
    let eig = op.power_iteration(config.params.tol, config.params.max_iter)?;
    let report = thermo::pressure_report(&op, &eig, &series_ns(&config.params))?;
    let mut csv = String::from("n,sup_dev\n");
    for (n, dev) in &report.finite_n_sup_dev {
        let _ = writeln!(csv, "{n},{}", fmt_f(*dev));
    }
    out.write("deviation.csv", &csv)?;
    Ok(serde_json::json!({
        "pressure": report.pressure,
        "entropy": report.entropy,
        "energy": report.energy,
        "lambda": eig.lambda,
        "gap_ratio": eig.gap_ratio,
    }))
}

fn run_deriv_check(config: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    let (op, alphabet) = build_operator(config)?;
    let eig = op.power_iteration(config.params.tol, config.params.max_iter)?;
    let phi_spec = config
        .phi
        .as_ref()
        .ok_or_else(|| Error::Config("phi: required".into()))?;
    let phi = build_potential(phi_spec, &alphabet)?;
    let report = calculus::derivative_report(
        &op,
        &eig,
        &phi,
        &calculus::DEFAULT_FD_STEPS,
        &series_ns(&config.params),
        config.params.tol,
        config.params.max_iter,
    )?;
    let mut csv = String::from("n,sup_deviation\n");
    for (n, dev) in &report.birkhoff {
        let _ = writeln!(csv, "{n},{}", fmt_f(*dev));
    }
    out.write("birkhoff.csv", &csv)?;
    let mut fd_csv = String::from("step,value\n");
    for (t, v) in &report.fd {
        let _ = writeln!(fd_csv, "{},{}", fmt_f(*t), fmt_f(*v));
    }
    out.write("fd.csv", &fd_csv)?;
    Ok(serde_json::json!({
        "analytic": report.analytic,
        "richardson": report.richardson,
        "richardson_order": report.richardson_order,
        "abs_error": (report.analytic - report.richardson).abs(),
    }))
}

fn run_correlations(config: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    let (op, alphabet) = build_operator(config)?;
    let eig = op.power_iteration(config.params.tol, config.params.max_iter)?;
    let phi_spec = config
        .phi
        .as_ref()
        .ok_or_else(|| Error::Config("phi: required".into()))?;
    let phi = build_potential(phi_spec, &alphabet)?;
    let psi = match &config.psi {
        Some(spec) => build_potential(spec, &alphabet)?,
        None => phi.clone(),
    };
    let series = correlation::correlation_series(&op, &eig, &phi, &psi, config.params.n_max)?;
    let mut csv = String::from("n,c,abs_c,bound\n");
    for (n, c) in series.values.iter().enumerate() {
        let bound = series.fitted_k * series.fitted_tau.powi(n as i32);
        let _ = writeln!(csv, "{n},{},{},{}", fmt_f(*c), fmt_f(c.abs()), fmt_f(bound));
    }
    out.write("correlations.csv", &csv)?;
    Ok(serde_json::json!({
        "fitted_k": series.fitted_k,
        "fitted_tau": series.fitted_tau,
        "fit_residual": series.fit_residual,
        "gap_tau": series.gap_tau,
    }))
}

fn run_chain(config: &ExperimentConfig, out: &mut RunDir) -> Result<serde_json::Value> {
    use rand_chacha::rand_core::SeedableRng;
    let beta = config.params.beta.unwrap_or(0.0);
    let w = config.params.window_radius.unwrap_or(3);
    let n_max = config.params.n_max.min(2 * w);
    let chains = config.params.chains.unwrap_or(100_000);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut sums = vec![0.0f64; n_max];
    let mut sq_sums = vec![0.0f64; n_max];
    for _ in 0..chains {
        let chain = heisenberg::sample_chain(beta, w, &mut rng)?;
        let left = -(w as i64);
        for n in 1..=n_max {
            let g = chain.spin(left)[0] * chain.spin(left + n as i64)[0]
                + chain.spin(left)[1] * chain.spin(left + n as i64)[1]
                + chain.spin(left)[2] * chain.spin(left + n as i64)[2];
            sums[n - 1] += g;
            sq_sums[n - 1] += g * g;
        }
    }
    let m = chains as f64;
    let mut csv = String::from("n,estimate,std_error,exact\n");
    let mut worst_sigmas = 0.0f64;
    for n in 1..=n_max {
        let mean = sums[n - 1] / m;
        let var = (sq_sums[n - 1] / m - mean * mean).max(0.0);
        let err = (var / m).sqrt();
        let exact = langevin(beta).powi(n as i32);
        if err > 0.0 {
            worst_sigmas = worst_sigmas.max((mean - exact).abs() / err);
        }
        let _ = writeln!(csv, "{n},{},{},{}", fmt_f(mean), fmt_f(err), fmt_f(exact));
    }
    out.write("chain.csv", &csv)?;
    Ok(serde_json::json!({
        "beta": beta,
        "window_radius": w,
        "chains": chains,
        "langevin": langevin(beta),
        "worst_sigmas": worst_sigmas,
    }))
}

fn ladder_params(config: &ExperimentConfig) -> LadderParams {
    let p = &config.params;
    let defaults = LadderParams::desk_scale(
        p.beta.unwrap_or(0.5),
        p.alpha_decay.unwrap_or(1.0),
        config.seed,
    );
    LadderParams {
        rows: p.rows.unwrap_or(defaults.rows),
        window_radius: p.window_radius.unwrap_or(defaults.window_radius),
        burn_in_sweeps: p.burn_in_sweeps.unwrap_or(defaults.burn_in_sweeps),
        measure_sweeps: p.measure_sweeps.unwrap_or(defaults.measure_sweeps),
        measure_every: p.measure_every.unwrap_or(defaults.measure_every),
        n_max: p.n_max.min(p.rows.unwrap_or(defaults.rows) - 1),
        ..defaults
    }
}

fn run_ladder_experiment(
    config: &ExperimentConfig,
    out: &mut RunDir,
) -> Result<serde_json::Value> {
    let params = ladder_params(config);
    let run = heisenberg::run_ladder(&params)?;
    let mut samples = String::from("measurement,energy_per_site,overlap_1\n");
    for (i, (e, overlaps)) in run
        .energy_samples
        .iter()
        .zip(&run.overlap_samples)
        .enumerate()
    {
        let _ = writeln!(samples, "{i},{},{}", fmt_f(*e), fmt_f(overlaps[0]));
    }
    out.write("samples.csv", &samples)?;
    let report = heisenberg::two_point(&[run])?;
    let mut csv = String::from("n,estimate,std_error,envelope\n");
    for ((n, g), err) in report
        .distances
        .iter()
        .zip(&report.estimates)
        .zip(&report.std_errors)
    {
        let bound = report.fitted_k * (-report.fitted_c * *n as f64).exp();
        let _ = writeln!(csv, "{n},{},{},{}", fmt_f(*g), fmt_f(*err), fmt_f(bound));
    }
    out.write("ladder.csv", &csv)?;
    Ok(serde_json::json!({
        "beta": params.beta,
        "alpha_decay": params.alpha_decay,
        "window_radius": params.window_radius,
        "rows": params.rows,
        "fitted_k": report.fitted_k,
        "fitted_c": report.fitted_c,
        "fitted_c_std_error": report.fitted_c_std_error,
        "one_point": report.one_point,
        "one_point_std_error": report.one_point_std_error,
        "effective_sample_size": report.effective_sample_size,
    }))
}

fn run_crosscheck(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let spec = config
        .alphabet
        .as_ref()
        .ok_or_else(|| Error::Config("alphabet: required".into()))?;
    let base = build_alphabet(spec)?;
    let report = heisenberg::ladder_operator_crosscheck(
        &base,
        config.params.beta.unwrap_or(0.0),
        config.params.alpha_decay.unwrap_or(1.0),
        config.params.window_radius.unwrap_or(0),
        config.params.budget.unwrap_or(DEFAULT_WINDOW_BUDGET),
        config.params.tol,
        config.params.max_iter,
    )?;
    Ok(serde_json::json!({
        "lambda": report.lambda,
        "pressure": report.pressure,
        "gap_ratio": report.gap_ratio,
        "window_radius": report.window_radius,
    }))
}

/// Consolidated view over completed run directories.
#[derive(Clone, Debug, Serialize)]
pub struct ReportTable {
    pub columns: Vec<String>,
    /// One row per run: config hash, kind, then result fields in column
    /// order; missing fields are nulls.
    pub rows: Vec<Vec<serde_json::Value>>,
}

impl ReportTable {
    /// Plot-ready CSV rendering with empty cells for nulls.
    pub fn to_csv(&self) -> String {
        let mut csv = self.columns.join(",");
        csv.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|v| match v {
                    serde_json::Value::Null => String::new(),
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => match n.as_f64() {
                        Some(x) if n.as_u64().is_none() && n.as_i64().is_none() => fmt_f(x),
                        _ => n.to_string(),
                    },
                    other => other.to_string(),
                })
                .collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
        }
        csv
    }
}

/// Merge manifests and results from completed run directories into one
/// table keyed by config hash, with the union of result fields as columns.
pub fn report(dirs: &[PathBuf]) -> Result<ReportTable> {
    let mut runs = Vec::new();
    for dir in dirs {
        let manifest_path = dir.join("manifest.json");
        let result_path = dir.join("result.json");
        let manifest: serde_json::Value = match fs::read_to_string(&manifest_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
        {
            Some(v) => v,
            None => continue,
        };
        let result: serde_json::Value = match fs::read_to_string(&result_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
        {
            Some(v) => v,
            None => continue,
        };
        runs.push((manifest, result));
    }
    if runs.is_empty() {
        return Err(Error::InsufficientData(
            "no valid run directories (need manifest.json + result.json)".into(),
        ));
    }
    let mut fields = BTreeSet::new();
    for (_, result) in &runs {
        if let Some(map) = result.as_object() {
            fields.extend(map.keys().cloned());
        }
    }
    let mut columns = vec!["config_hash".to_string(), "kind".to_string(), "seed".to_string()];
    columns.extend(fields.iter().cloned());
    let mut rows = Vec::with_capacity(runs.len());
    for (manifest, result) in &runs {
        let mut row = vec![
            manifest.get("config_hash").cloned().unwrap_or(serde_json::Value::Null),
            manifest.get("kind").cloned().unwrap_or(serde_json::Value::Null),
            manifest.get("seed").cloned().unwrap_or(serde_json::Value::Null),
        ];
        for field in &fields {
            row.push(result.get(field).cloned().unwrap_or(serde_json::Value::Null));
        }
        rows.push(row);
    }
    Ok(ReportTable { columns, rows })
}

/// Debug dump of an alphabet's quadrature rule as CSV: index, coordinate
/// columns, weight.
pub fn dump_alphabet_csv(alphabet: &Alphabet) -> String {
    let dim = alphabet.rule.nodes[0].len();
    let mut csv = String::from("index");
    for c in 0..dim {
        let _ = write!(csv, ",x{c}");
    }
    csv.push_str(",weight\n");
    for (i, (node, w)) in alphabet
        .rule
        .nodes
        .iter()
        .zip(&alphabet.rule.weights)
        .enumerate()
    {
        let _ = write!(csv, "{i}");
        for c in node {
            let _ = write!(csv, ",{}", fmt_f(*c));
        }
        let _ = writeln!(csv, ",{}", fmt_f(*w));
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum_config() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
            kind = "spectrum"
            seed = 7

            [alphabet]
            kind = "circle"
            nodes = 16

            [potential]
            kind = "xy-nn"
            beta = 1.0
            "#,
        )
        .unwrap()
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let config = spectrum_config();
        assert!(config.violations().is_empty());
        assert_eq!(config.kind, "spectrum");
        assert_eq!(config.seed, 7);
    }

    #[test]
    fn violations_are_exhaustive() {
        let config = ExperimentConfig::from_toml(
            r#"
            kind = "nonsense"
            [params]
            tol = -1.0
            "#,
        )
        .unwrap();
        let v = config.violations();
        assert!(v.iter().any(|m| m.contains("kind")));
        assert!(v.iter().any(|m| m.contains("params.tol")));
    }

    #[test]
    fn zero_potential_spectrum_run() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::from_toml(
            r#"
            kind = "spectrum"
            seed = 1
            [alphabet]
            kind = "finite"
            symbols = 3
            [potential]
            kind = "constant"
            value = 0.0
            "#,
        )
        .unwrap();
        let out = run(&config, dir.path()).unwrap();
        let result: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        assert!((result["lambda"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pressure_run_matches_circle_oracle() {
        // log I_0(1) from the modified Bessel power series
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig::from_toml(
            r#"
            kind = "pressure"
            seed = 1
            [alphabet]
            kind = "circle"
            nodes = 64
            [potential]
            kind = "xy-nn"
            beta = 1.0
            [params]
            n_max = 16
            "#,
        )
        .unwrap();
        let out = run(&config, dir.path()).unwrap();
        let result: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        let p = result["pressure"].as_f64().unwrap();
        assert!((p - 0.23591435850717865).abs() < 1e-10, "pressure {p}");
    }

    #[test]
    fn run_is_byte_deterministic() {
        let config = spectrum_config();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run(&config, d1.path()).unwrap();
        run(&config, d2.path()).unwrap();
        for name in ["result.json", "eigen.csv"] {
            let a = fs::read(d1.path().join(name)).unwrap();
            let b = fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn manifest_references_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&spectrum_config(), dir.path()).unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        let mut listed: Vec<String> = manifest["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect();
        listed.push("result.json".into());
        listed.push("manifest.json".into());
        for entry in fs::read_dir(&out).unwrap() {
            let name = entry.unwrap().file_name().into_string().unwrap();
            assert!(listed.contains(&name), "orphan file {name}");
        }
    }

    #[test]
    fn report_single_run_has_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&spectrum_config(), dir.path()).unwrap();
        let table = report(&[out]).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.columns.contains(&"lambda".to_string()));
    }

    #[test]
    fn report_mixed_kinds_union_with_nulls() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let out1 = run(&spectrum_config(), d1.path()).unwrap();
        let chain = ExperimentConfig::from_toml(
            r#"
            kind = "chain"
            seed = 3
            [params]
            beta = 1.0
            window_radius = 2
            n_max = 3
            chains = 2000
            "#,
        )
        .unwrap();
        let out2 = run(&chain, d2.path()).unwrap();
        let table = report(&[out1, out2]).unwrap();
        assert_eq!(table.rows.len(), 2);
        let lambda_col = table.columns.iter().position(|c| c == "lambda").unwrap();
        let chain_row = table
            .rows
            .iter()
            .find(|r| r[1] == serde_json::Value::String("chain".into()))
            .unwrap();
        assert!(chain_row[lambda_col].is_null());
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn report_no_valid_runs_is_insufficient_data() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            report(&[dir.path().to_path_buf()]),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn dump_alphabet_weights_sum_to_one() {
        let a = build_alphabet(&AlphabetSpec {
            kind: "sphere".into(),
            symbols: None,
            nodes: None,
            n_polar: Some(4),
            n_azimuth: Some(8),
            window_radius: None,
            beta: None,
            budget: None,
        })
        .unwrap();
        let csv = dump_alphabet_csv(&a);
        let total: f64 = csv
            .lines()
            .skip(1)
            .map(|line| line.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn custom_table_potential_runs() {
        let dir = tempfile::tempdir().unwrap();
        let table_path = dir.path().join("table.csv");
        let mut text = String::from("index,value\n");
        for i in 0..4 {
            text.push_str(&format!("{i},{}\n", 0.1 * i as f64));
        }
        fs::write(&table_path, text).unwrap();
        let config = ExperimentConfig {
            kind: "spectrum".into(),
            seed: 5,
            output_dir: None,
            alphabet: Some(AlphabetSpec {
                kind: "finite".into(),
                symbols: Some(2),
                nodes: None,
                n_polar: None,
                n_azimuth: None,
                window_radius: None,
                beta: None,
                budget: None,
            }),
            potential: Some(PotentialSpec {
                kind: "custom-table".into(),
                value: None,
                beta: None,
                alpha_decay: None,
                window_radius: None,
                depth: Some(2),
                table_path: Some(table_path.to_string_lossy().into_owned()),
                holder_alpha: None,
                holder_const: None,
            }),
            phi: None,
            psi: None,
            params: Params::default(),
        };
        let run_dir = dir.path().join("out");
        run(&config, &run_dir).unwrap();
        let result: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(run_dir.join("result.json")).unwrap())
                .unwrap();
        assert!(result["lambda"].as_f64().unwrap() > 1.0);
    }
}
