//! Command-line front end: configuration, orchestration, and report
//! emission for the geometry, Lieb–Robinson, factorization, and entropy
//! experiments. JSON reports carry full diagnostics with sorted keys;
//! CSV tables are byte-deterministic for a fixed config and seed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use hastings_lab::entropy;
use hastings_lab::error::Error;
use hastings_lab::geometry::{self, FFunction, Lattice, Region};
use hastings_lab::hastings::{self, FactorizationConfig, FactorizationResult};
use hastings_lab::lrbound;
use hastings_lab::model::{self, Couplings};
use hastings_lab::opspace;
use hastings_lab::spectral;

const SLACK: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "hastings-lab", version, about = "Finite-volume laboratory for Lieb-Robinson bounds, projector factorization, and area laws")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Region calculus: boundaries, interiors, thickenings, interaction boundaries.
    Geometry(GeometryArgs),
    /// Lieb-Robinson bounds against measured commutators.
    Lr(LrArgs),
    /// Full ground-state projector factorization pipeline.
    Factorize(FactorizeArgs),
    /// Single-cut entanglement report.
    Entropy(EntropyArgs),
    /// Entropy sweep over nested left cuts.
    Arealaw(ArealawArgs),
    /// Run a list of factorization cells from a config file.
    Sweep(SweepArgs),
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct CommonArgs {
    /// JSON config file; values fill in flags that were not given.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Output directory for report files (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized diagnostics.
    #[arg(long)]
    seed: Option<u64>,
    /// BLAS thread count (advisory; set before first use).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct GeometryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Chain length.
    #[arg(long)]
    chain: Option<usize>,
    /// Region as a half-open range a:b.
    #[arg(long = "X")]
    x: Option<String>,
    /// Radius for boundary/interior/thickening.
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct LrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Site of the evolved observable A = Z@a.
    #[arg(long = "A")]
    site_a: Option<usize>,
    /// Site of the probe observable B = Z@b.
    #[arg(long = "B")]
    site_b: Option<usize>,
    /// Truncation region as a half-open range a:b.
    #[arg(long = "Y")]
    y: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    /// F-function power-law exponent.
    #[arg(long)]
    nu: Option<f64>,
    /// Comma-separated evolution times.
    #[arg(long)]
    t: Option<String>,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct FactorizeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Region X as a half-open range a:b.
    #[arg(long = "X")]
    x: Option<String>,
    /// Comma-separated localization scales.
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    /// F-function power-law exponent.
    #[arg(long)]
    nu: Option<f64>,
    /// Filter strength; defaults to 1/ell.
    #[arg(long)]
    alpha: Option<f64>,
    /// Gauss-Hermite node count.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Region X as a half-open range a:b.
    #[arg(long = "X")]
    x: Option<String>,
    /// Optional bound constants; the bound is reported when all are given.
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Growth exponent of the bound assembly.
    #[arg(long = "nu-pow")]
    nu_pow: Option<f64>,
    #[arg(long = "d-inf")]
    d_inf: Option<f64>,
    /// Localization scale entering the boundary size of the bound.
    #[arg(long)]
    ell: Option<f64>,
}

#[derive(Args, Clone, serde::Deserialize, Default)]
#[serde(default)]
struct ArealawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long = "J")]
    j: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated cut positions (default: 1..L-1).
    #[arg(long)]
    cuts: Option<String>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(serde::Deserialize)]
struct SweepConfig {
    cells: Vec<FactorizeArgs>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let outcome = match cli.cmd {
        Cmd::Geometry(a) => run_geometry(merge(a)),
        Cmd::Lr(a) => run_lr(merge(a)),
        Cmd::Factorize(a) => run_factorize_cmd(merge(a)),
        Cmd::Entropy(a) => run_entropy(merge(a)),
        Cmd::Arealaw(a) => run_arealaw(merge(a)),
        Cmd::Sweep(a) => run_sweep(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more asserted inequalities failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Fill unset flags from the JSON config file, if one was given.
fn merge<T: serde::de::DeserializeOwned + Merge>(mut args: T) -> Result<T, Error>
where
    T: HasCommon,
{
    if let Some(path) = args.common().config.clone() {
        let text = std::fs::read_to_string(&path)?;
        let from_file: T = serde_json::from_str(&text)
            .map_err(|e| Error::ConfigInvalid(format!("config {}: {e}", path.display())))?;
        args.fill_from(from_file);
    }
    Ok(args)
}

trait HasCommon {
    fn common(&mut self) -> &mut CommonArgs;
}

trait Merge: Sized {
    fn fill_from(&mut self, other: Self);
}

macro_rules! impl_common {
    ($t:ty) => {
        impl HasCommon for $t {
            fn common(&mut self) -> &mut CommonArgs {
                &mut self.common
            }
        }
    };
}
impl_common!(GeometryArgs);
impl_common!(LrArgs);
impl_common!(FactorizeArgs);
impl_common!(EntropyArgs);
impl_common!(ArealawArgs);

macro_rules! fill {
    ($self:ident, $other:ident, $($f:ident),*) => {
        $( if $self.$f.is_none() { $self.$f = $other.$f; } )*
    };
}

impl Merge for CommonArgs {
    fn fill_from(&mut self, other: Self) {
        fill!(self, other, out, seed, threads);
    }
}
impl Merge for GeometryArgs {
    fn fill_from(&mut self, other: Self) {
        self.common.fill_from(other.common);
        fill!(self, other, chain, x, r);
    }
}
impl Merge for LrArgs {
    fn fill_from(&mut self, other: Self) {
        self.common.fill_from(other.common);
        fill!(self, other, model, length, g, j, delta, site_a, site_b, y, mu, nu, t);
    }
}
impl Merge for FactorizeArgs {
    fn fill_from(&mut self, other: Self) {
        self.common.fill_from(other.common);
        fill!(self, other, model, length, g, j, delta, x, ell, mu, nu, alpha, nodes);
    }
}
impl Merge for EntropyArgs {
    fn fill_from(&mut self, other: Self) {
        self.common.fill_from(other.common);
        fill!(self, other, model, length, g, j, delta, x, c1, c2, kappa, nu_pow, d_inf, ell);
    }
}
impl Merge for ArealawArgs {
    fn fill_from(&mut self, other: Self) {
        self.common.fill_from(other.common);
        fill!(self, other, model, length, g, j, delta, cuts);
    }
}

fn parse_range(s: &str) -> Result<Region, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::ConfigInvalid(format!("range '{s}' must be a:b (half-open)")));
    }
    let a: usize = parts[0].parse().map_err(|_| Error::ConfigInvalid(format!("bad range start '{}'", parts[0])))?;
    let b: usize = parts[1].parse().map_err(|_| Error::ConfigInvalid(format!("bad range end '{}'", parts[1])))?;
    if b <= a {
        return Err(Error::ConfigInvalid(format!("range '{s}' is empty")));
    }
    Ok(Region::new((a..b).collect()))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::ConfigInvalid(format!("bad number '{p}'"))))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::ConfigInvalid(format!("bad index '{p}'"))))
        .collect()
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::ConfigInvalid(format!("missing required flag {flag}")))
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(dir.join(name), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn apply_threads(common: &CommonArgs) {
    if let Some(n) = common.threads {
        std::env::set_var("OPENBLAS_NUM_THREADS", n.to_string());
        std::env::set_var("OMP_NUM_THREADS", n.to_string());
    }
}

fn build_model(
    model: &Option<String>,
    length: Option<usize>,
    g: Option<f64>,
    j: Option<f64>,
    delta: Option<f64>,
) -> Result<(Lattice, Region, model::Interaction), Error> {
    let name = require(model.clone(), "--model")?;
    let length = length.unwrap_or(10);
    let lat = Lattice::chain(length, 2);
    let vol = lat.full_region();
    let couplings = Couplings { g: g.unwrap_or(1.0), j: j.unwrap_or(1.0), delta: delta.unwrap_or(1.0) };
    let phi = model::preset(&lat, &name, &couplings, &vol)?;
    Ok((lat, vol, phi))
}

fn ineq_json(i: &hastings::Inequality) -> Value {
    json!({
        "name": i.name,
        "lhs": i.lhs,
        "rhs": i.rhs,
        "margin": i.margin,
        "ref": i.reference,
    })
}

fn run_geometry(args: Result<GeometryArgs, Error>) -> Result<bool, Error> {
    let args = args?;
    apply_threads(&args.common);
    let n = require(args.chain, "--chain")?;
    let x = parse_range(&require(args.x.clone(), "--X")?)?;
    let r = require(args.r, "--r")?;
    let lat = Lattice::chain(n, 2);
    if !x.is_subset_of(&lat.full_region()) {
        return Err(Error::ConfigInvalid("region X leaves the chain".into()));
    }
    let boundary = geometry::r_boundary(&lat, &x, r)?;
    let interior = geometry::interior(&lat, &x, r);
    let thick = geometry::thicken(&lat, &x, r);
    let report = json!({
        "chain": n,
        "r": r,
        "x": x.sites(),
        "boundary": boundary.sites(),
        "boundary_size": boundary.len(),
        "interior": interior.sites(),
        "interior_size": interior.len(),
        "thickened": thick.sites(),
        "thickened_size": thick.len(),
    });
    write_json(&out_dir(&args.common), "geometry.json", &report)?;
    Ok(true)
}

fn run_lr(args: Result<LrArgs, Error>) -> Result<bool, Error> {
    let args = args?;
    apply_threads(&args.common);
    let (lat, vol, phi) = build_model(&args.model, args.length, args.g, args.j, args.delta)?;
    let len = vol.len();
    let site_a = args.site_a.unwrap_or(1);
    let site_b = args.site_b.unwrap_or(len.saturating_sub(2));
    let y = match &args.y {
        Some(s) => parse_range(s)?,
        None => Region::new((0..=len * 3 / 4).collect()),
    };
    let mu = args.mu.unwrap_or(1.0);
    let nu = args.nu.unwrap_or(1.0);
    let times = match &args.t {
        Some(s) => parse_f64_list(s)?,
        None => (1..=8).map(|k| 0.25 * k as f64).collect(),
    };
    let f = FFunction::power_law(nu);
    let consts = lrbound::lr_constants(&lat, &phi, &f, mu)?;
    let h = model::local_hamiltonian(&lat, &phi, &vol)?;
    let spec = spectral::diagonalize_ungapped(&lat, &h)?;
    let a = opspace::Observable::new(Region::new(vec![site_a]), model::pauli_z(), &lat)?;
    let b = opspace::Observable::new(Region::new(vec![site_b]), model::pauli_z(), &lat)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut ok = true;
    for &t in &times {
        let (measured, thm_margin, cor_margin) =
            lrbound::lr_empirical(&lat, &a, &b, &y, t, &phi, &f, &consts, &spec)?;
        ok &= thm_margin >= -1e-9 && cor_margin >= -1e-9;
        rows.push(format!("{t:.12e},{measured:.12e},{thm_margin:.12e},{cor_margin:.12e}"));
        entries.push(json!({
            "t": t,
            "measured": measured,
            "thm_margin": thm_margin,
            "cor_margin": cor_margin,
        }));
    }
    let report = json!({
        "mu": mu,
        "nu": nu,
        "site_a": site_a,
        "site_b": site_b,
        "y": y.sites(),
        "c_mu": consts.c_mu,
        "v_mu": consts.v_mu,
        "rows": entries,
        "all_passed": ok,
    });
    let dir = out_dir(&args.common);
    write_json(&dir, "lr.json", &report)?;
    write_csv(&dir, "lr.csv", "t,measured,thm_margin,cor_margin", &rows)?;
    Ok(ok)
}

struct PipelineCell {
    ell: f64,
    result: FactorizationResult,
}

fn run_pipeline_cells(args: &FactorizeArgs) -> Result<(Vec<PipelineCell>, Value), Error> {
    let (lat, vol, phi) = build_model(&args.model, args.length, args.g, args.j, args.delta)?;
    let x = parse_range(&require(args.x.clone(), "--X")?)?;
    let ells = parse_f64_list(&args.ell.clone().unwrap_or_else(|| "1".into()))?;
    let mu = args.mu.unwrap_or(1.0);
    let nu = args.nu.unwrap_or(1.0);
    let f = FFunction::power_law(nu);
    let ic = model::constants(&lat, &phi, &f);
    let lr = lrbound::lr_constants(&lat, &phi, &f, mu)?;
    let h = model::local_hamiltonian(&lat, &phi, &vol)?;
    let spec = spectral::diagonalize(&lat, &h, 1e-8)?;
    let mut cells = Vec::new();
    for &ell in &ells {
        let mut cfg = FactorizationConfig::new(x.clone(), vol.clone(), ell);
        cfg.mu = mu;
        cfg.alpha = args.alpha;
        cfg.quad_nodes = args.nodes.unwrap_or(64);
        cfg.seed = args.common.seed.unwrap_or(0);
        let res = hastings::factorize(&lat, &cfg, &phi, &spec, &ic, &lr)?;
        let res = hastings::positivize(&lat, &spec, res)?;
        cells.push(PipelineCell { ell, result: res });
    }
    let meta = json!({
        "model": args.model,
        "length": vol.len(),
        "x": x.sites(),
        "mu": mu,
        "nu": nu,
        "gap": spec.gap,
    });
    Ok((cells, meta))
}

fn cell_json(c: &PipelineCell) -> Value {
    let r = &c.result;
    json!({
        "ell": c.ell,
        "alpha": r.alpha,
        "gamma": r.gamma,
        "xi": r.xi,
        "eta": r.eta,
        "defect": r.defect,
        "defect_pos": r.defect_pos,
        "diagnostics": r.diagnostics.iter().map(ineq_json).collect::<Vec<_>>(),
        "extras": r.extras,
        "all_passed": r.all_passed(SLACK),
    })
}

fn cell_csv_row(c: &PipelineCell) -> String {
    let r = &c.result;
    let min_margin = r.diagnostics.iter().map(|d| d.margin).fold(f64::INFINITY, f64::min);
    format!(
        "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
        c.ell,
        r.alpha,
        r.gamma,
        r.xi,
        r.eta,
        r.defect,
        r.defect_pos.unwrap_or(f64::NAN),
        min_margin
    )
}

const CELL_CSV_HEADER: &str = "ell,alpha,gamma,xi,eta,defect,defect_pos,min_margin";

fn run_factorize_cmd(args: Result<FactorizeArgs, Error>) -> Result<bool, Error> {
    let args = args?;
    apply_threads(&args.common);
    let (cells, meta) = run_pipeline_cells(&args)?;
    let ok = cells.iter().all(|c| c.result.all_passed(SLACK));
    let report = json!({
        "meta": meta,
        "cells": cells.iter().map(cell_json).collect::<Vec<_>>(),
        "all_passed": ok,
    });
    let dir = out_dir(&args.common);
    write_json(&dir, "factorize.json", &report)?;
    let rows: Vec<String> = cells.iter().map(cell_csv_row).collect();
    write_csv(&dir, "factorize.csv", CELL_CSV_HEADER, &rows)?;
    Ok(ok)
}

fn run_entropy(args: Result<EntropyArgs, Error>) -> Result<bool, Error> {
    let args = args?;
    apply_threads(&args.common);
    let (lat, vol, phi) = build_model(&args.model, args.length, args.g, args.j, args.delta)?;
    let x = parse_range(&require(args.x.clone(), "--X")?)?;
    let h = model::local_hamiltonian(&lat, &phi, &vol)?;
    let spec = spectral::diagonalize(&lat, &h, 1e-8)?;
    let spectrum = entropy::schmidt(&lat, &spec.ground, &x)?;
    let s = entropy::entropy(&spectrum);
    let (p_x, cross) = entropy::fidelity(&lat, &spec.ground, &x)?;
    let mut ok = (p_x - cross).abs() <= 1e-10;
    let bound = match (args.c1, args.c2, args.kappa, args.nu_pow, args.d_inf) {
        (Some(c1), Some(c2), Some(kappa), Some(nu_pow), Some(d_inf)) => {
            let r = phi.range();
            let boundary = geometry::r_boundary(&lat, &x, r)?.intersection(&vol);
            let b = entropy::entropy_bound(boundary.len(), p_x, c2, kappa, nu_pow, d_inf, c1)?;
            ok &= s <= b;
            Some(b)
        }
        _ => None,
    };
    let top: Vec<f64> = spectrum.lambdas().iter().take(8).copied().collect();
    let report = json!({
        "x": x.sites(),
        "s": s,
        "p_x": p_x,
        "p_x_cross_check": cross,
        "schmidt_top8": top,
        "bound_rhs": bound,
        "all_passed": ok,
    });
    write_json(&out_dir(&args.common), "entropy.json", &report)?;
    Ok(ok)
}

fn run_arealaw(args: Result<ArealawArgs, Error>) -> Result<bool, Error> {
    let args = args?;
    apply_threads(&args.common);
    let (lat, vol, phi) = build_model(&args.model, args.length, args.g, args.j, args.delta)?;
    let h = model::local_hamiltonian(&lat, &phi, &vol)?;
    let spec = spectral::diagonalize(&lat, &h, 1e-8)?;
    let cuts = match &args.cuts {
        Some(s) => parse_usize_list(s)?,
        None => (1..vol.len()).collect(),
    };
    let reports = entropy::area_sweep(&lat, &spec, &cuts)?;
    let mut rows = Vec::new();
    for (m, r) in cuts.iter().zip(reports.iter()) {
        let mut row = format!("{m},{:.12e},{:.12e}", r.s, r.p_x);
        for k in 0..8 {
            let l = r.schmidt.lambdas().get(k).copied().unwrap_or(0.0);
            row.push_str(&format!(",{l:.12e}"));
        }
        rows.push(row);
    }
    let dir = out_dir(&args.common);
    write_csv(&dir, "arealaw.csv", "m,s,p_x,l1,l2,l3,l4,l5,l6,l7,l8", &rows)?;
    let report = json!({
        "cuts": cuts,
        "s": reports.iter().map(|r| r.s).collect::<Vec<_>>(),
        "p_x": reports.iter().map(|r| r.p_x).collect::<Vec<_>>(),
    });
    write_json(&dir, "arealaw.json", &report)?;
    Ok(true)
}

fn run_sweep(args: SweepArgs) -> Result<bool, Error> {
    apply_threads(&args.common);
    let path = require(args.common.config.clone(), "--config")?;
    let text = std::fs::read_to_string(&path)?;
    let cfg: SweepConfig = serde_json::from_str(&text)
        .map_err(|e| Error::ConfigInvalid(format!("config {}: {e}", path.display())))?;
    if cfg.cells.is_empty() {
        return Err(Error::ConfigInvalid("sweep config has no cells".into()));
    }
    let mut ok = true;
    let mut rows = Vec::new();
    let mut cell_reports = Vec::new();
    for (idx, cell_args) in cfg.cells.iter().enumerate() {
        let (cells, meta) = run_pipeline_cells(cell_args)?;
        for c in &cells {
            ok &= c.result.all_passed(SLACK);
            rows.push(format!("{idx},{}", cell_csv_row(c)));
        }
        cell_reports.push(json!({
            "meta": meta,
            "cells": cells.iter().map(cell_json).collect::<Vec<_>>(),
        }));
    }
    let dir = out_dir(&args.common);
    let header = format!("cell,{CELL_CSV_HEADER}");
    write_csv(&dir, "sweep.csv", &header, &rows)?;
    write_json(&dir, "sweep.json", &json!({ "cells": cell_reports, "all_passed": ok }))?;
    Ok(ok)
}
