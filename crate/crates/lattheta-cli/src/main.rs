use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use lattheta::applications::{
    born_energy, born_interaction_energy, epsilon_opt_hexagonal, epstein_min_over_cell, epstein_zeta_quadrature,
    epstein_zeta_shifted, gabor_frame_bounds, heat_kernel_torus_routes, landau_constants, strohmer_beaver_sweep,
    temperature_extremes, ChargeDistribution, CMPotential,
};
use lattheta::lattice::{lattice_from_tau, reduce_to_fundamental, special_point_b, Generator, Lattice, SQRT3_2};
use lattheta::optimize::{minimize_over_cell_with, stability_sweep, sweep_with, StabilityRule, SweepRecord};
use lattheta::proofcheck::{default_suite, extended_suite};
use lattheta::theta::{theta_charged, theta_shifted};
use lattheta::{Error, PhasePoint, TruncationPolicy};

/// Lattice parameters `(x, y)` as given on the command line.
#[derive(Debug, Clone, Copy)]
struct Tau(f64, f64);

#[derive(Parser)]
#[command(name = "lattheta", version, about = "Lattice Gaussian sums, sweeps and applications")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Args, Debug)]
struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Shorthand for --format csv.
    #[arg(long, conflicts_with_all = ["json", "human"])]
    csv: bool,
    /// Shorthand for --format json.
    #[arg(long, conflicts_with = "human")]
    json: bool,
    /// Shorthand for --format human.
    #[arg(long)]
    human: bool,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn format(&self) -> Format {
        if self.csv {
            Format::Csv
        } else if self.json {
            Format::Json
        } else if self.human {
            Format::Human
        } else {
            self.format
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Shifted or charged theta value at one point.
    Theta {
        /// Lattice parameters x,y.
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
        /// Shift u,v in lattice coordinates (default: point b).
        #[arg(long, allow_hyphen_values = true)]
        shift: Option<String>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
        /// Evaluate the charged sum instead of the shifted one.
        #[arg(long)]
        charged: bool,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Minimum of E_L(.; alpha) over the torus.
    Minimize {
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
        /// Coarse grid resolution per axis.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Minimum over the torus on a grid of lattices.
    Sweep {
        /// Comma list or start:stop:count.
        #[arg(long, default_value = "1", allow_hyphen_values = true)]
        alpha: String,
        /// start:stop:count or comma list.
        #[arg(long, default_value = "0:0.5:11", allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value = "0.8660254037844386:2:11", allow_hyphen_values = true)]
        y: String,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        /// Skip grid points outside the half fundamental domain.
        #[arg(long)]
        d_plus_only: bool,
        /// Exploratory: report theta_hex(a) - theta_L(a + s (b - a)) for these s instead.
        #[arg(long, allow_hyphen_values = true)]
        stability_rules: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Gaussian Gabor frame bounds at even density.
    FrameBounds {
        /// Shape x,y.
        #[arg(long, allow_hyphen_values = true)]
        shape: Option<String>,
        #[arg(long, default_value_t = 2)]
        density: u32,
        /// With --y, sweep the ratio over a grid of shapes in D_+.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Heat kernel on the flat torus.
    Heat {
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
        /// Point u,v in lattice coordinates.
        #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// Report min and max over the torus instead.
        #[arg(long)]
        extremes: bool,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Shifted Epstein zeta sum_lambda |lambda + z|^{-2s}.
    Zeta {
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
        #[arg(long, default_value = "0.3333333333333333,0.3333333333333333", allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_negative_numbers = true)]
        s: f64,
        #[arg(long, value_enum, default_value = "quadrature")]
        route: Route,
        /// Minimize over z instead.
        #[arg(long)]
        min: bool,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Born charge energy with a single Gaussian node.
    Born {
        #[arg(long, allow_hyphen_values = true)]
        lattice: Option<String>,
        /// Period N.
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
        /// N*N comma-separated charges, row m1 major (default: the honeycomb optimum).
        #[arg(long, allow_hyphen_values = true)]
        weights: Option<String>,
        #[arg(long, default_value_t = 1e-10, allow_negative_numbers = true)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Landau constants and the product identity.
    Landau {
        #[command(flatten)]
        output: Output,
    },
    /// Run the lemma suite; exits 4 if any report fails.
    VerifyLemmas {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        output: Output,
    },
    /// Reduce tau into the fundamental domain.
    Reduce {
        /// tau as x,y.
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Route {
    Quadrature,
    Direct,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Suite {
    /// The default suite.
    All,
    /// Checks whose stated range is not fully reproduced.
    Extended,
}

enum Failure {
    Usage(String),
    Numeric(String),
    Lemmas,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TailNotMet { .. } | Error::NoConvergence(_) => Failure::Numeric(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn pair(flag: &str, s: &str) -> Res<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(usage(format!("--{flag} expects two comma-separated numbers, got {s:?}")));
    }
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("--{flag}: cannot parse {t:?} as a number")))
    };
    Ok((p(parts[0])?, p(parts[1])?))
}

fn list(flag: &str, s: &str) -> Res<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("--{flag}: cannot parse {t:?} as a number")))
    };
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| usage(format!("--{flag}: count {:?} is not an integer", parts[2])))?;
            if n == 0 {
                return Err(usage(format!("--{flag}: count must be positive")));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(usage(format!("--{flag} expects start:stop:count or a comma list, got {s:?}"))),
    }
}

fn lattice(flag: &str, s: &Option<String>) -> Res<(Lattice, Tau)> {
    let (x, y) = match s {
        Some(s) => pair(flag, s)?,
        None => (0.5, SQRT3_2),
    };
    if !(y > 0.0) {
        return Err(usage(format!("--{flag}: y must be positive, got {y}")));
    }
    Ok((lattice_from_tau(x, y)?, Tau(x, y)))
}

fn positive(flag: &str, v: f64) -> Res<f64> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(usage(format!("--{flag} must be positive, got {v}")));
    }
    Ok(v)
}

fn policy(tol: f64) -> Res<TruncationPolicy> {
    Ok(TruncationPolicy::with_tol(positive("tol", tol)?))
}

fn human_value(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn emit<T: Serialize>(rows: &[T], single: bool, out: &Output) -> Res<()> {
    let mut buf: Vec<u8> = Vec::new();
    match out.format() {
        Format::Json => {
            let s = if single && rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0])
            } else {
                serde_json::to_string_pretty(rows)
            }
            .map_err(|e| Failure::Numeric(e.to_string()))?;
            buf.extend_from_slice(s.as_bytes());
            buf.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r).map_err(|e| Failure::Numeric(e.to_string()))?;
            }
            w.flush().map_err(|e| Failure::Numeric(e.to_string()))?;
        }
        Format::Human => {
            for (i, r) in rows.iter().enumerate() {
                if i > 0 {
                    buf.push(b'\n');
                }
                let v = serde_json::to_value(r).map_err(|e| Failure::Numeric(e.to_string()))?;
                if let serde_json::Value::Object(m) = v {
                    let width = m.keys().map(String::len).max().unwrap_or(0);
                    for (k, v) in m {
                        buf.extend_from_slice(format!("{k:width$}  {}\n", human_value(&v)).as_bytes());
                    }
                }
            }
        }
    }
    match &out.out {
        Some(p) => File::create(p)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| usage(format!("--out {}: {e}", p.display()))),
        None => io::stdout().write_all(&buf).map_err(|e| Failure::Numeric(e.to_string())),
    }
}

#[derive(Serialize, Deserialize)]
struct ThetaRow {
    value: f64,
    tail_bound: f64,
    terms_used: usize,
}

#[derive(Serialize, Deserialize)]
struct FrameRow {
    x: f64,
    y: f64,
    density: u32,
    lower_a: f64,
    upper_b: f64,
    ratio: f64,
    argmin_u: f64,
    argmin_v: f64,
}

#[derive(Serialize, Deserialize)]
struct HeatRow {
    t: f64,
    u: f64,
    v: f64,
    value: f64,
    tail_bound: f64,
    spectral_value: f64,
    spectral_tail_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct TemperatureRow {
    t: f64,
    a_t: f64,
    b_t: f64,
}

#[derive(Serialize, Deserialize)]
struct ZetaRow {
    s: f64,
    u: f64,
    v: f64,
    value: f64,
    tail_bound: f64,
    terms_used: usize,
}

#[derive(Serialize, Deserialize)]
struct ZetaMinRow {
    s: f64,
    argmin_u: f64,
    argmin_v: f64,
    min_value: f64,
}

#[derive(Serialize, Deserialize)]
struct BornRow {
    n: usize,
    alpha: f64,
    energy: f64,
    interaction_energy: f64,
    tail_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct ReduceRow {
    tau_in_re: f64,
    tau_in_im: f64,
    tau_out_re: f64,
    tau_out_im: f64,
    word: String,
}

fn run(cli: Cli) -> Res<()> {
    match cli.cmd {
        Cmd::Theta {
            lattice: lat,
            shift,
            alpha,
            charged,
            tol,
            output,
        } => {
            let (l, Tau(x, y)) = lattice("lattice", &lat)?;
            let alpha = positive("alpha", alpha)?;
            let pol = policy(tol)?;
            let b = match shift {
                Some(s) => {
                    let (u, v) = pair("shift", &s)?;
                    PhasePoint::lattice(u, v)
                }
                None => special_point_b(x, y)?,
            };
            let r = if charged {
                theta_charged(&l, &b, alpha, &pol)?
            } else {
                theta_shifted(&l, &b, alpha, &pol)?
            };
            emit(
                &[ThetaRow {
                    value: r.value,
                    tail_bound: r.tail_bound,
                    terms_used: r.terms_used,
                }],
                true,
                &output,
            )
        }
        Cmd::Minimize {
            lattice: lat,
            alpha,
            grid,
            tol,
            output,
        } => {
            let (l, Tau(x, y)) = lattice("lattice", &lat)?;
            let alpha = positive("alpha", alpha)?;
            let m = minimize_over_cell_with(&l, alpha, grid, &policy(tol)?)?;
            emit(
                &[SweepRecord {
                    x,
                    y,
                    alpha,
                    min_value: m.value.value,
                    argmin_u: m.argmin.u,
                    argmin_v: m.argmin.v,
                    tail_bound: m.value.tail_bound,
                }],
                true,
                &output,
            )
        }
        Cmd::Sweep {
            alpha,
            x,
            y,
            grid,
            tol,
            d_plus_only,
            stability_rules,
            output,
        } => {
            let alphas = list("alpha", &alpha)?;
            for &a in &alphas {
                positive("alpha", a)?;
            }
            let xs = list("x", &x)?;
            let ys = list("y", &y)?;
            for &v in &ys {
                positive("y", v)?;
            }
            let pol = policy(tol)?;
            if let Some(rules) = stability_rules {
                let rules: Vec<StabilityRule> = list("stability-rules", &rules)?.into_iter().map(|s| StabilityRule { s }).collect();
                return emit(&stability_sweep(&alphas, &xs, &ys, &rules)?, false, &output);
            }
            let rows = sweep_with(&alphas, &xs, &ys, grid, d_plus_only, &pol)?;
            emit(&rows, false, &output)
        }
        Cmd::FrameBounds {
            shape,
            density,
            x,
            y,
            tol,
            output,
        } => {
            let pol = policy(tol)?;
            if x.is_some() || y.is_some() {
                let xs = list("x", x.as_deref().unwrap_or("0:0.5:9"))?;
                let ys = list("y", y.as_deref().unwrap_or("0.8660254037844386:2:9"))?;
                return emit(&strohmer_beaver_sweep(density, &xs, &ys)?, false, &output);
            }
            let (l, Tau(sx, sy)) = lattice("shape", &shape)?;
            let f = gabor_frame_bounds(&l, density, &pol)?;
            emit(
                &[FrameRow {
                    x: sx,
                    y: sy,
                    density,
                    lower_a: f.lower_a,
                    upper_b: f.upper_b,
                    ratio: f.ratio,
                    argmin_u: f.argmin_z.u,
                    argmin_v: f.argmin_z.v,
                }],
                true,
                &output,
            )
        }
        Cmd::Heat {
            lattice: lat,
            z,
            t,
            extremes,
            tol,
            output,
        } => {
            let (l, _) = lattice("lattice", &lat)?;
            let t = positive("t", t)?;
            if extremes {
                let (a_t, b_t) = temperature_extremes(&l, t)?;
                return emit(&[TemperatureRow { t, a_t, b_t }], true, &output);
            }
            let (u, v) = pair("z", &z)?;
            let (g, s) = heat_kernel_torus_routes(&l, &PhasePoint::lattice(u, v), t, &policy(tol)?)?;
            emit(
                &[HeatRow {
                    t,
                    u,
                    v,
                    value: g.value,
                    tail_bound: g.tail_bound,
                    spectral_value: s.value,
                    spectral_tail_bound: s.tail_bound,
                }],
                true,
                &output,
            )
        }
        Cmd::Zeta {
            lattice: lat,
            z,
            s,
            route,
            min,
            tol,
            output,
        } => {
            let (l, _) = lattice("lattice", &lat)?;
            if !(s > 1.0) {
                return Err(usage(format!("--s must exceed 1, got {s}")));
            }
            let pol = policy(tol)?;
            if min {
                let (p, v) = epstein_min_over_cell(&l, s, 16)?;
                return emit(
                    &[ZetaMinRow {
                        s,
                        argmin_u: p.u,
                        argmin_v: p.v,
                        min_value: v,
                    }],
                    true,
                    &output,
                );
            }
            let (u, v) = pair("z", &z)?;
            let zp = PhasePoint::lattice(u, v);
            let r = match route {
                Route::Quadrature => epstein_zeta_quadrature(&l, &zp, s, &pol)?,
                Route::Direct => epstein_zeta_shifted(&l, &zp, s, &pol)?,
            };
            emit(
                &[ZetaRow {
                    s,
                    u,
                    v,
                    value: r.value,
                    tail_bound: r.tail_bound,
                    terms_used: r.terms_used,
                }],
                true,
                &output,
            )
        }
        Cmd::Born {
            lattice: lat,
            n,
            alpha,
            weights,
            tol,
            output,
        } => {
            let (l, _) = lattice("lattice", &lat)?;
            let alpha = positive("alpha", alpha)?;
            let eps = match weights {
                Some(w) => ChargeDistribution::new(n, list("weights", &w)?)?,
                None => epsilon_opt_hexagonal(n)?,
            };
            let p = CMPotential::gaussian(alpha);
            let pol = policy(tol)?;
            let e = born_energy(&l, &eps, &p, &pol)?;
            let i = born_interaction_energy(&l, &eps, &p, &pol)?;
            emit(
                &[BornRow {
                    n,
                    alpha,
                    energy: e.value,
                    interaction_energy: i.value,
                    tail_bound: e.tail_bound,
                }],
                true,
                &output,
            )
        }
        Cmd::Landau { output } => emit(&[landau_constants()?], true, &output),
        Cmd::VerifyLemmas { suite, output } => {
            let reports = match suite {
                Suite::All => default_suite()?,
                Suite::Extended => extended_suite(),
            };
            emit(&reports, false, &output)?;
            if reports.iter().all(|r| r.pass) {
                Ok(())
            } else {
                Err(Failure::Lemmas)
            }
        }
        Cmd::Reduce { tau, output } => {
            let (x, y) = pair("tau", &tau)?;
            if !(y > 0.0) {
                return Err(usage(format!("--tau: imaginary part must be positive, got {y}")));
            }
            let t = reduce_to_fundamental(num_complex::Complex64::new(x, y))?;
            let word = t
                .word
                .iter()
                .map(|g| match g {
                    Generator::J => "J",
                    Generator::T => "T",
                    Generator::Tinv => "Tinv",
                    Generator::Mirror => "Mirror",
                })
                .collect::<Vec<_>>()
                .join(" ");
            emit(
                &[ReduceRow {
                    tau_in_re: x,
                    tau_in_im: y,
                    tau_out_re: t.tau_out.re,
                    tau_out_im: t.tau_out.im,
                    word,
                }],
                true,
                &output,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Lemmas) => {
            eprintln!("error: at least one lemma check failed");
            ExitCode::from(4)
        }
    }
}
