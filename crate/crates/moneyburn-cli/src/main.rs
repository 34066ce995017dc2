//! Command-line front end: each subcommand evaluates one family of
//! curves or mechanisms and writes CSV/JSON data files. Every output
//! file gets a `<name>.manifest.json` sidecar recording the command,
//! its parameters, the seed (when any), the package version, and
//! SHA-256 checksums of all files the invocation produced, so a rerun
//! with the same parameters reproduces the bytes exactly.
//!
//! Exit codes: 0 on success, 2 on invalid input (parse errors, domain
//! violations, infeasible problems), 3 on numerical or I/O failure.
//! Outputs are computed fully in memory and written through a
//! temporary file plus rename, so a failing run never leaves a
//! partially written data file behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use moneyburn::benchmarks::{rf_exponential, sd_vcg_curve};
use moneyburn::distributions::{reduced, Dist, Marginal};
use moneyburn::extreme_value::{classify_domain, limit_cdf, LimitFamily};
use moneyburn::finite_market::{mc_ratio, MarketConfig};
use moneyburn::lp_design::{
    build_grid, build_lp, mechanism_heatmap, solve_lp, solve_lp_with, SolveMode,
};
use moneyburn::parsing::{
    parse_capacities, parse_correlation, parse_count_expr, parse_f64_list, parse_grid_spec,
    parse_joint_spec, parse_u32_list,
};
use moneyburn::reduced_design::{
    efficient_reduced_mechanism, frechet_wdstar, frechet_wstar, hazard_derivative,
    residual_surplus,
};
use moneyburn::{Error, Result};
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(
    name = "moneyburn",
    version,
    about = "Numerical toolkit for residual-surplus-maximizing (money-burning) mechanisms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density and hazard-rate derivative of the reduced (max-of-K)
    /// distribution on a value grid. CSV: `k,w,density,hazard_derivative`.
    Hazard {
        /// Marginal spec, e.g. `exp:1`, `weibull:0.9`, `spareto:2`,
        /// `frechet:3`, `uniform:1`, `gumbel`.
        #[arg(long)]
        marginal: String,
        /// Comma-separated list of variety counts K.
        #[arg(long, default_value = "1,2,4,16")]
        k: String,
        /// Evaluation grid `lo:hi:steps` (steps+1 points, inclusive).
        #[arg(long, default_value = "0:4:200")]
        grid: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Residual surplus of no-screening vs full-screening posted
    /// prices as K grows. CSV: `k,rs_sd,rs_vcg`. Optionally dumps the
    /// surplus-maximizing reduced mechanism at one K as JSON.
    Compare {
        /// Marginal spec.
        #[arg(long)]
        marginal: String,
        /// Per-capita supply, in (0, 1).
        #[arg(long)]
        supply: f64,
        /// Largest K on the curve.
        #[arg(long, default_value_t = 20)]
        k_max: u32,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// K at which to dump the ironed mechanism (with --design-out).
        #[arg(long, requires = "design_out")]
        design_k: Option<u32>,
        /// JSON path for the mechanism dump:
        /// `{"segments":[{"v_lo","v_hi","x","p"},..],"m_bar","rs"}`.
        #[arg(long, requires = "design_k")]
        design_out: Option<PathBuf>,
    },
    /// Normalized ironing thresholds of the Fréchet limit: c.d.f.
    /// values at the flat-region start w* and the no-sale cutoff w**.
    /// CSV: `alpha,phi_wstar,phi_wdstar`.
    FrechetThresholds {
        /// Comma-separated tail shapes, each > 1.
        #[arg(long, default_value = "1.5,2,3,5,8")]
        alphas: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Random-favorites gain over no-screening for two exponential
    /// varieties, on the feasible supply grid m1 >= m2, m1 + m2 <= 1.
    /// CSV: `m1,m2,pct_diff`.
    Rf {
        /// Smallest supply on each axis.
        #[arg(long, default_value_t = 0.1)]
        lo: f64,
        /// Largest supply on each axis.
        #[arg(long, default_value_t = 0.5)]
        hi: f64,
        /// Grid points per axis (inclusive endpoints).
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Surplus-maximizing mechanism on a discretized value grid via
    /// linear programming, with a burning-minimal tie-break. Writes
    /// the mechanism as JSON and optionally a K=2 heatmap CSV
    /// (`v1,v2,x1,x2,p`).
    Lp {
        /// Comma-separated marginal specs, one per object dimension.
        #[arg(long)]
        marginals: String,
        /// Quantile cells per dimension.
        #[arg(long)]
        n: usize,
        /// Comma-separated per-object supplies (each > 0, sum < 1).
        #[arg(long)]
        capacities: String,
        /// Joint structure: `product` or `diagonal:<weight>`.
        #[arg(long, default_value = "product")]
        joint: String,
        /// Constraint handling.
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
        /// Output JSON path for the solved mechanism.
        #[arg(long)]
        out_mechanism: PathBuf,
        /// Optional CSV heatmap path (2-dimensional grids only).
        #[arg(long)]
        out_heatmap: Option<PathBuf>,
    },
    /// Monte-Carlo ratio of no-screening to full-screening residual
    /// surplus in finite replica markets. CSV: `alpha,m,ratio,stderr`.
    Simulate {
        /// Single marginal spec (Weibull family: `weibull:<shape>` or
        /// `exp:<rate>`). Mutually exclusive with --alphas.
        #[arg(long, conflicts_with = "alphas")]
        marginal: Option<String>,
        /// Comma-separated Weibull shapes to sweep.
        #[arg(long)]
        alphas: Option<String>,
        /// Agent count expression in the scale `m`, e.g. `4m` or `12`.
        #[arg(long, default_value = "4m")]
        agents: String,
        /// Comma-separated per-object capacity count expressions in `m`.
        #[arg(long, default_value = "m,m")]
        capacities: String,
        /// Comma-separated market scales m.
        #[arg(long, default_value = "1")]
        m: String,
        /// Trial count expression, e.g. `1e5`.
        #[arg(long, default_value = "1e5")]
        trials: String,
        /// Base RNG seed (per-trial streams derive from it).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Value correlation: `iid`, `within`, or `between`.
        #[arg(long, default_value = "iid")]
        correlation: String,
        /// Weight of the perfectly-correlated component for `within`
        /// and `between`.
        #[arg(long, default_value_t = 0.5)]
        mix_prob: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extreme-value domain of attraction of a marginal. JSON:
    /// `{"family": "...", "shape": <number or null>}`.
    Classify {
        /// Marginal spec.
        #[arg(long)]
        marginal: String,
        /// Optional JSON output path (prints to stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Materialize all IC rows when few, otherwise cutting-plane.
    Auto,
    /// Materialize every ordered-pair IC row.
    Full,
    /// Row generation from the adjacent-pair seed.
    Cutting,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 = the request itself is invalid; 3 = the computation or the
/// output write failed.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. }
        | Error::DomainViolation(_)
        | Error::DivergentMoment(_)
        | Error::Infeasible(_)
        | Error::OutOfSupport { .. } => 2,
        _ => 3,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Hazard {
            marginal,
            k,
            grid,
            out,
        } => cmd_hazard(&marginal, &k, &grid, &out),
        Command::Compare {
            marginal,
            supply,
            k_max,
            out,
            design_k,
            design_out,
        } => cmd_compare(&marginal, supply, k_max, &out, design_k, design_out.as_deref()),
        Command::FrechetThresholds { alphas, out } => cmd_frechet_thresholds(&alphas, &out),
        Command::Rf {
            lo,
            hi,
            steps,
            out,
        } => cmd_rf(lo, hi, steps, &out),
        Command::Lp {
            marginals,
            n,
            capacities,
            joint,
            mode,
            out_mechanism,
            out_heatmap,
        } => cmd_lp(
            &marginals,
            n,
            &capacities,
            &joint,
            mode,
            &out_mechanism,
            out_heatmap.as_deref(),
        ),
        Command::Simulate {
            marginal,
            alphas,
            agents,
            capacities,
            m,
            trials,
            seed,
            correlation,
            mix_prob,
            out,
        } => cmd_simulate(
            marginal.as_deref(),
            alphas.as_deref(),
            &agents,
            &capacities,
            &m,
            &trials,
            seed,
            &correlation,
            mix_prob,
            &out,
        ),
        Command::Classify { marginal, out } => cmd_classify(&marginal, out.as_deref()),
    }
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)
        .map_err(|e| Error::Io(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| Error::Io(format!("renaming to {}: {e}", path.display())))
}

fn file_name(path: &Path) -> Result<String> {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))
}

/// Writes every produced file atomically, then a manifest sidecar
/// `<path>.manifest.json` next to each one. All sidecars of one
/// invocation carry the same manifest, whose `outputs` map covers
/// every file by name with its `sha256:` checksum. serde_json keeps
/// object keys sorted, and no timestamp is recorded, so reruns with
/// identical parameters yield byte-identical files and sidecars.
fn emit(
    command: &str,
    params: serde_json::Value,
    seed: Option<u64>,
    files: &[(PathBuf, Vec<u8>)],
) -> Result<()> {
    let mut outputs = serde_json::Map::new();
    for (path, bytes) in files {
        outputs.insert(file_name(path)?, json!(format!("sha256:{}", sha256_hex(bytes))));
    }
    let manifest = json!({
        "command": command,
        "params": params,
        "seed": seed,
        "version": env!("CARGO_PKG_VERSION"),
        "outputs": outputs,
    });
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Io(format!("encoding manifest: {e}")))?;
    manifest_bytes.push(b'\n');
    for (path, bytes) in files {
        write_atomic(path, bytes)?;
    }
    for (path, _) in files {
        let mut side = path.as_os_str().to_owned();
        side.push(".manifest.json");
        write_atomic(&PathBuf::from(side), &manifest_bytes)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_hazard(marginal: &str, k_list: &str, grid: &str, out: &Path) -> Result<()> {
    let g: Marginal = marginal.parse()?;
    let ks = parse_u32_list(k_list)?;
    let (lo, hi, steps) = parse_grid_spec(grid)?;
    let mut csv = String::from("k,w,density,hazard_derivative\n");
    for &k in &ks {
        let red = reduced(g, k)?;
        for i in 0..=steps {
            let w = lo + (hi - lo) * i as f64 / steps as f64;
            let density = red.pdf(w)?;
            let hd = hazard_derivative(&red, w)?;
            let _ = writeln!(csv, "{k},{w},{density},{hd}");
        }
    }
    emit(
        "hazard",
        json!({"marginal": marginal, "k": k_list, "grid": grid, "out": out}),
        None,
        &[(out.to_path_buf(), csv.into_bytes())],
    )
}

fn cmd_compare(
    marginal: &str,
    supply: f64,
    k_max: u32,
    out: &Path,
    design_k: Option<u32>,
    design_out: Option<&Path>,
) -> Result<()> {
    let g: Marginal = marginal.parse()?;
    let curve = sd_vcg_curve(g, supply, k_max)?;
    let mut csv = String::from("k,rs_sd,rs_vcg\n");
    for (k, sd, vcg) in curve {
        let _ = writeln!(csv, "{k},{sd},{vcg}");
    }
    let mut files = vec![(out.to_path_buf(), csv.into_bytes())];
    if let (Some(dk), Some(dout)) = (design_k, design_out) {
        let red = reduced(g, dk)?;
        let mech = efficient_reduced_mechanism(&red, supply)?;
        let rs = residual_surplus(&red, &mech)?;
        let dump = json!({
            "segments": mech.segments,
            "m_bar": mech.m_bar,
            "rs": rs,
        });
        let mut bytes = serde_json::to_vec_pretty(&dump)
            .map_err(|e| Error::Io(format!("encoding mechanism: {e}")))?;
        bytes.push(b'\n');
        files.push((dout.to_path_buf(), bytes));
    }
    emit(
        "compare",
        json!({
            "marginal": marginal,
            "supply": supply,
            "k_max": k_max,
            "out": out,
            "design_k": design_k,
            "design_out": design_out,
        }),
        None,
        &files,
    )
}

fn cmd_frechet_thresholds(alphas: &str, out: &Path) -> Result<()> {
    let shapes = parse_f64_list(alphas)?;
    let mut csv = String::from("alpha,phi_wstar,phi_wdstar\n");
    for &a in &shapes {
        let wstar = frechet_wstar(a)?;
        let wdstar = frechet_wdstar(a)?;
        let fam = LimitFamily::Frechet { shape: a };
        let _ = writeln!(
            csv,
            "{a},{},{}",
            limit_cdf(fam, wstar),
            limit_cdf(fam, wdstar)
        );
    }
    emit(
        "frechet-thresholds",
        json!({"alphas": alphas, "out": out}),
        None,
        &[(out.to_path_buf(), csv.into_bytes())],
    )
}

fn cmd_rf(lo: f64, hi: f64, steps: usize, out: &Path) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
        return Err(Error::DomainViolation(format!(
            "supply grid needs 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    if steps < 2 || steps > 2_000 {
        return Err(Error::DomainViolation(format!(
            "grid points per axis must lie in 2..=2000, got {steps}"
        )));
    }
    // Endpoint-exact linspace, so the corners land on lo and hi
    // rather than on `lo + (hi - lo)` rounding noise.
    let coord =
        |i: usize| (lo * (steps - 1 - i) as f64 + hi * i as f64) / (steps - 1) as f64;
    let mut csv = String::from("m1,m2,pct_diff\n");
    for i in 0..steps {
        let m1 = coord(i);
        for j in 0..=i {
            let m2 = coord(j);
            if m1 + m2 > 1.0 {
                continue;
            }
            let rf = rf_exponential(m1, m2)?;
            let _ = writeln!(csv, "{m1},{m2},{}", rf.pct_diff);
        }
    }
    emit(
        "rf",
        json!({"lo": lo, "hi": hi, "steps": steps, "out": out}),
        None,
        &[(out.to_path_buf(), csv.into_bytes())],
    )
}

fn cmd_lp(
    marginals: &str,
    n: usize,
    capacities: &str,
    joint: &str,
    mode: ModeArg,
    out_mechanism: &Path,
    out_heatmap: Option<&Path>,
) -> Result<()> {
    let dists: Vec<Marginal> = marginals
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_>>()?;
    let caps = parse_f64_list(capacities)?;
    let joint_spec = parse_joint_spec(joint)?;
    let env = build_grid(&dists, n, joint_spec, &caps)?;
    let lp = build_lp(&env);
    let gm = match mode {
        ModeArg::Auto => solve_lp(&lp)?,
        ModeArg::Full => solve_lp_with(&lp, SolveMode::Full)?,
        ModeArg::Cutting => solve_lp_with(&lp, SolveMode::CuttingPlane)?,
    };
    let points = lp.num_points();
    let k = env.k;
    let allocation: Vec<Vec<f64>> = (0..points)
        .map(|i| gm.allocation[i * k..(i + 1) * k].to_vec())
        .collect();
    let dump = json!({
        "n": env.n,
        "dimensions": k,
        "marginals": dists.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "joint": joint,
        "capacities": env.capacities,
        "levels": env.levels,
        "weights": env.weights,
        "allocation": allocation,
        "payments": gm.payments,
        "rs": gm.rs,
    });
    let mut mech_bytes = serde_json::to_vec_pretty(&dump)
        .map_err(|e| Error::Io(format!("encoding mechanism: {e}")))?;
    mech_bytes.push(b'\n');
    let mut files = vec![(out_mechanism.to_path_buf(), mech_bytes)];
    if let Some(hpath) = out_heatmap {
        let heat = mechanism_heatmap(&gm, &lp)?;
        files.push((hpath.to_path_buf(), heat.into_bytes()));
    }
    emit(
        "lp",
        json!({
            "marginals": marginals,
            "n": n,
            "capacities": capacities,
            "joint": joint,
            "mode": match mode {
                ModeArg::Auto => "auto",
                ModeArg::Full => "full",
                ModeArg::Cutting => "cutting",
            },
            "out_mechanism": out_mechanism,
            "out_heatmap": out_heatmap,
        }),
        None,
        &files,
    )
}

/// The sweep's first CSV column is the Weibull tail shape, so the
/// single-marginal form accepts only that family (`exp` is shape 1).
fn weibull_shape_of(g: Marginal) -> Result<f64> {
    match g {
        Marginal::Weibull { shape } => Ok(shape),
        Marginal::Exponential { .. } => Ok(1.0),
        other => Err(Error::DomainViolation(format!(
            "the sweep column is the Weibull shape; use weibull:<shape> or exp:<rate>, got {other}"
        ))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    marginal: Option<&str>,
    alphas: Option<&str>,
    agents_expr: &str,
    caps_expr: &str,
    m_list: &str,
    trials_expr: &str,
    seed: u64,
    correlation: &str,
    mix_prob: f64,
    out: &Path,
) -> Result<()> {
    let corr = parse_correlation(correlation)?;
    let scales = parse_u32_list(m_list)?;
    // (alpha column value, marginal) pairs, sweep order preserved.
    let sweep: Vec<(f64, Marginal)> = match (marginal, alphas) {
        (Some(spec), None) => {
            let g: Marginal = spec.parse()?;
            vec![(weibull_shape_of(g)?, g)]
        }
        (None, Some(list)) => parse_f64_list(list)?
            .into_iter()
            .map(|a| (a, Marginal::Weibull { shape: a }))
            .collect(),
        _ => {
            return Err(Error::DomainViolation(
                "pass exactly one of --marginal or --alphas".into(),
            ))
        }
    };
    let mut csv = String::from("alpha,m,ratio,stderr\n");
    for &m in &scales {
        let m = u64::from(m);
        let agents = parse_count_expr(agents_expr, m)? as usize;
        let caps: Vec<u32> = parse_capacities(caps_expr, m)?
            .into_iter()
            .map(|c| c as u32)
            .collect();
        let trials = parse_count_expr(trials_expr, m)? as usize;
        for &(alpha, g) in &sweep {
            let cfg = MarketConfig {
                agents,
                capacities: caps.clone(),
                marginal: g,
                correlation: corr,
                mix_prob,
                seed,
            };
            let res = mc_ratio(&cfg, trials)?;
            let _ = writeln!(csv, "{alpha},{m},{},{}", res.ratio, res.stderr);
        }
    }
    emit(
        "simulate",
        json!({
            "marginal": marginal,
            "alphas": alphas,
            "agents": agents_expr,
            "capacities": caps_expr,
            "m": m_list,
            "trials": trials_expr,
            "seed": seed,
            "correlation": correlation,
            "mix_prob": mix_prob,
            "out": out,
        }),
        Some(seed),
        &[(out.to_path_buf(), csv.into_bytes())],
    )
}

fn cmd_classify(marginal: &str, out: Option<&Path>) -> Result<()> {
    let g: Marginal = marginal.parse()?;
    let fam = classify_domain(g)?;
    let (name, shape) = match fam {
        LimitFamily::Gumbel => ("gumbel", None),
        LimitFamily::Frechet { shape } => ("frechet", Some(shape)),
        LimitFamily::ReverseWeibull { shape } => ("reverse_weibull", Some(shape)),
    };
    let dump = json!({"family": name, "shape": shape});
    let mut bytes = serde_json::to_vec_pretty(&dump)
        .map_err(|e| Error::Io(format!("encoding classification: {e}")))?;
    bytes.push(b'\n');
    match out {
        Some(path) => emit(
            "classify",
            json!({"marginal": marginal, "out": path}),
            None,
            &[(path.to_path_buf(), bytes)],
        ),
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}
