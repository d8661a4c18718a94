//! `boselab`: command-line front end for the weighted balls-in-boxes
//! laboratory — solvers, exact weights, samplers, saddle-point checks, and
//! batch experiments with JSON/CSV reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use boselab::experiment::{self, RunOptions};
use boselab_core::equilibrium::{self, Chi};
use boselab_core::exact::{self, Arithmetic, Ensemble, TableMode, Weight};
use boselab_core::sampler;
use boselab_core::statistic::FChoice;
use boselab_core::{saddle, sums, MultiplicitySpec, DEFAULT_TOL};

#[derive(Parser)]
#[command(
    name = "boselab",
    about = "Equilibrium profiles, exact counting/sampling, and condensation experiments \
             for weighted balls-in-boxes occupancy models"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SpecArg {
    /// Multiplicity spec, e.g. "power:d=3,Q=1,q0=1", "osc:d=3",
    /// "table:[1.5,2,3];power:d=2,Q=1"
    #[arg(long)]
    spec: String,
}

impl SpecArg {
    fn parse(&self) -> Result<MultiplicitySpec, boselab_core::Error> {
        MultiplicitySpec::parse(&self.spec)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the mean-energy equation for b; prints {b, Nbar, residual, j_cut}.
    Solve {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M")]
        m: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Condensation threshold Nbar(M), optionally with K-colored levels.
    Threshold {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M")]
        m: f64,
        #[arg(long = "K")]
        k: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Grand-canonical pair (beta, mu) for the normal regime.
    BetaMu {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M")]
        m: f64,
        #[arg(long = "N")]
        n: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Special sums and integrals.
    Sums {
        #[command(subcommand)]
        sub: SumsCmd,
    },
    /// Exact weights w(energy = M), w(energy <= M), or the fixed-N weight.
    Weights {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M", value_parser = parse_count)]
        m: u64,
        #[arg(long = "N", value_parser = parse_count)]
        n: Option<u64>,
        /// Force exact big-integer arithmetic.
        #[arg(long = "exact-int")]
        exact_int: bool,
    },
    /// Generating-function coefficients through z^Mmax.
    Coeffs {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "Mmax", value_parser = parse_count)]
        m_max: u64,
    },
    /// Exhaustively enumerate a small instance.
    Enumerate {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M", value_parser = parse_count)]
        m: u64,
        #[arg(long = "N", value_parser = parse_count)]
        n: Option<u64>,
        /// "csv" or "json"
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Draw seeded samples and write them as CSV.
    Sample {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M", value_parser = parse_count)]
        m: u64,
        #[arg(long = "N", value_parser = parse_count)]
        n: Option<u64>,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// "exact" or "boltzmann"
        #[arg(long, default_value = "exact")]
        scheme: String,
        #[arg(long)]
        out: PathBuf,
        /// Levels 0..=width get dense CSV columns; higher ones go to the
        /// sparse column as "j:count" pairs.
        #[arg(long, default_value_t = 16)]
        width: u32,
    },
    /// Contour-integral evaluation of ln w(energy = M) with diagnostics.
    Saddle {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long = "M", value_parser = parse_count)]
        m: u64,
        /// Comma-separated energies for the bound checks.
        #[arg(long = "check-bounds")]
        check_bounds: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Batch experiments with JSON reports (exit code 2 on a failed bar).
    Experiment {
        #[command(subcommand)]
        sub: ExperimentCmd,
    },
}

#[derive(Subcommand)]
enum SumsCmd {
    /// sum_{j>=l} j^s / (e^(bj) - 1) with a tail bound.
    Bose {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1)]
        l: u64,
    },
    /// int_x^inf y^(d-1) / (e^y - 1) dy.
    Integral {
        #[arg(long)]
        d: f64,
        #[arg(long)]
        x: f64,
    },
}

#[derive(Args)]
struct ExperimentCommon {
    #[command(flatten)]
    spec: SpecArg,
    #[arg(long = "M", value_parser = parse_count)]
    m: u64,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Overridden by the BOSELAB_SEED environment variable when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// "loglog" or "const:<v>"
    #[arg(long, default_value = "loglog")]
    chi: String,
    /// Pass bar (defaults: 0.05 deviation/condense, 0.02 coloring, 0.5 profile).
    #[arg(long)]
    bar: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write the JSON report here (also printed to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a CSV table of per-sample or per-point values here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Tail frequency of |sum f_j (N_j - Nbar_j)| > Delta under the
    /// variable-number measure.
    Deviation {
        #[command(flatten)]
        common: ExperimentCommon,
        /// "all-ones", "tail:<l>", or "alternating"
        #[arg(long = "f", default_value = "all-ones")]
        f_choice: String,
    },
    /// Ground-level concentration above the threshold.
    Condense {
        #[command(flatten)]
        common: ExperimentCommon,
        #[arg(long = "N", value_parser = parse_count)]
        n: u64,
    },
    /// Threshold scaling under K-coloring (pure numeric).
    Coloring {
        #[command(flatten)]
        common: ExperimentCommon,
        /// Comma-separated color counts, e.g. "2,4,16".
        #[arg(long = "K", default_value = "2,4,16")]
        k_list: String,
    },
    /// Scaled occupation tails against the limit shape on an x-grid.
    Profile {
        #[command(flatten)]
        common: ExperimentCommon,
        #[arg(long, default_value_t = 0.5)]
        x1: f64,
        #[arg(long, default_value_t = 3.0)]
        x2: f64,
        #[arg(long = "grid", default_value_t = 12)]
        grid_points: usize,
    },
}

fn main() -> ExitCode {
    // Exit-code contract: 0 pass, 2 threshold breach, 1 any error — so
    // usage errors must not reuse clap's default code 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

/// Accepts `120`, `1e8`, or `2.5e3` for integer energies and counts.
fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| format!("'{s}' is not a nonnegative integer"))?;
    if f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f <= 9.0e15 {
        Ok(f as u64)
    } else {
        Err(format!("'{s}' is not a nonnegative integer"))
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Solve { spec, m, tol } => {
            let sol = equilibrium::solve_b(&spec.parse()?, m, tol)?;
            print_json(&json!({
                "M": sol.m,
                "b": sol.b,
                "Nbar": sol.nbar,
                "residual": sol.residual,
                "j_cut": sol.j_cut,
            }));
        }
        Cmd::Threshold { spec, m, k, tol } => {
            let spec = spec.parse()?;
            let base = equilibrium::threshold(&spec, m, tol)?;
            match k {
                None => print_json(&json!({ "M": m, "threshold": base })),
                Some(k) => {
                    let colored = equilibrium::coloring_threshold(&spec, m, k, tol)?;
                    print_json(&json!({
                        "M": m,
                        "threshold": base,
                        "K": k,
                        "colored_threshold": colored,
                        "ratio": colored / base,
                    }));
                }
            }
        }
        Cmd::BetaMu { spec, m, n, tol } => {
            let gc = equilibrium::solve_beta_mu(&spec.parse()?, m, n, tol)?;
            print_json(&json!({
                "M": m,
                "N": n,
                "beta": gc.beta,
                "mu": gc.mu,
                "residual_N": gc.residual_n,
                "residual_M": gc.residual_m,
            }));
        }
        Cmd::Sums { sub } => match sub {
            SumsCmd::Bose { s, b, l } => {
                let r = sums::bose_sum(s, b, l)?;
                print_json(&json!({
                    "s": s, "b": b, "l": l,
                    "value": r.value,
                    "remainder_bound": r.remainder_bound,
                    "method": "direct",
                }));
            }
            SumsCmd::Integral { d, x } => {
                let v = sums::bose_integral(d, x)?;
                print_json(&json!({ "d": d, "x": x, "value": v }));
            }
        },
        Cmd::Weights {
            spec,
            m,
            n,
            exact_int,
        } => {
            let spec = spec.parse()?;
            let arithmetic = if exact_int {
                Arithmetic::Exact
            } else {
                Arithmetic::Auto
            };
            match n {
                None => {
                    let table =
                        exact::build_table(&spec, m, TableMode::Variable, None, arithmetic, None)?;
                    let we = table.exact_energy_weight(m)?;
                    let wc = table.cumulative_weight(m)?;
                    print_json(&json!({
                        "M": m,
                        "arithmetic": if table.is_exact() { "exact" } else { "log" },
                        "ln_weight_exact_energy": we.ln(),
                        "ln_weight_cumulative": wc.ln(),
                        "weight_exact_energy": weight_value(&we),
                        "weight_cumulative": weight_value(&wc),
                    }));
                }
                Some(n) => {
                    let table = exact::build_table(
                        &spec,
                        m,
                        TableMode::Fixed {
                            n_max: n.min(m.max(1)),
                        },
                        None,
                        arithmetic,
                        None,
                    )?;
                    let w = table.fixed_weight(n)?;
                    print_json(&json!({
                        "M": m,
                        "N": n,
                        "arithmetic": if table.is_exact() { "exact" } else { "log" },
                        "ln_weight": w.ln(),
                        "weight": weight_value(&w),
                    }));
                }
            }
        }
        Cmd::Coeffs { spec, m_max } => {
            let coeffs = exact::gen_function_coeffs(&spec.parse()?, m_max)?;
            let ln: Vec<f64> = coeffs.iter().map(Weight::ln).collect();
            let exact_strings: Option<Vec<String>> = coeffs
                .iter()
                .map(|w| w.as_exact().map(|x| x.to_string()))
                .collect();
            print_json(&json!({
                "Mmax": m_max,
                "ln_coeffs": ln,
                "coeffs": exact_strings,
            }));
        }
        Cmd::Enumerate {
            spec,
            m,
            n,
            format,
            cap,
        } => {
            let spec = spec.parse()?;
            let ensemble = match n {
                None => Ensemble::VariableN,
                Some(n) => Ensemble::FixedN { n },
            };
            let configs = exact::enumerate(&spec, m, ensemble, cap)?;
            match format.as_str() {
                "json" => {
                    let rows: Vec<_> = configs
                        .iter()
                        .map(|(c, w)| {
                            json!({
                                "energy": c.energy(),
                                "particles": c.particles(),
                                "occupations": sparse_string(c, 0),
                                "ln_weight": w.ln(),
                                "weight": weight_value(w),
                            })
                        })
                        .collect();
                    print_json(&json!({ "M": m, "count": configs.len(), "configurations": rows }));
                }
                "csv" => {
                    let mut out = String::from("config_id,energy,particles,occupations,ln_weight\n");
                    for (i, (c, w)) in configs.iter().enumerate() {
                        out.push_str(&format!(
                            "{i},{},{},\"{}\",{}\n",
                            c.energy(),
                            c.particles(),
                            sparse_string(c, 0),
                            w.ln()
                        ));
                    }
                    print!("{out}");
                }
                other => return Err(format!("unknown format '{other}'").into()),
            }
        }
        Cmd::Sample {
            spec,
            m,
            n,
            count,
            seed,
            scheme,
            out,
            width,
        } => {
            let spec = spec.parse()?;
            let batch = match (scheme.as_str(), n) {
                ("exact", None) => {
                    let table = exact::WeightTable::variable(&spec, m)?;
                    sampler::sample_variable(&table, seed, count)?
                }
                ("exact", Some(n)) => {
                    let table = exact::WeightTable::fixed(&spec, m, n)?;
                    sampler::sample_fixed(&table, n, seed, count)?
                }
                ("boltzmann", None) => {
                    let sol = equilibrium::solve_b(&spec, m as f64, DEFAULT_TOL)?;
                    sampler::sample_boltzmann(&spec, sol.b, m, seed, count)?
                }
                ("boltzmann", Some(_)) => {
                    return Err("the boltzmann scheme samples the variable-N family only".into())
                }
                (other, _) => return Err(format!("unknown scheme '{other}'").into()),
            };
            write_sample_csv(&out, &batch, width)?;
            eprintln!(
                "wrote {} samples to {} ({} requested)",
                batch.len(),
                out.display(),
                count
            );
        }
        Cmd::Saddle {
            spec,
            m,
            check_bounds,
            tol,
        } => {
            let spec = spec.parse()?;
            let cw = saddle::contour_weight(&spec, m, tol)?;
            let ln_exact = exact::weight_exact_energy(&spec, m)?.ln();
            let profile = saddle::action(&spec, m as f64, tol)?;
            let rel_err = ((cw.ln_weight - ln_exact).exp() - 1.0).abs();
            let mut report = json!({
                "M": m,
                "log_weight_contour": cw.ln_weight,
                "log_weight_exact": ln_exact,
                "rel_err": rel_err,
                "S_M": profile.s_m,
                "S2": profile.s2,
                "K": profile.k,
                "zone_re": cw.zone_re,
                "imag_rel": cw.imag_rel,
            });
            if let Some(grid) = check_bounds {
                let grid: Vec<u64> = grid
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<u64>())
                    .collect::<Result<_, _>>()?;
                let bounds = saddle::check_bounds(&spec, &grid, tol)?;
                report["bounds"] = json!({
                    "scaled_min": bounds.scaled_min,
                    "scaled_max": bounds.scaled_max,
                    "all_tilt_ok": bounds.all_tilt_ok,
                    "entries": bounds.entries.iter().map(|e| json!({
                        "M": e.m,
                        "b": e.b,
                        "scaled_cumulative": e.scaled_cumulative,
                        "delta": e.delta,
                        "tilt": e.tilt.iter().map(|p| json!({
                            "c": p.c, "ln_lhs": p.ln_lhs, "ln_rhs": p.ln_rhs, "ok": p.ok,
                        })).collect::<Vec<_>>(),
                    })).collect::<Vec<_>>(),
                });
            }
            print_json(&report);
        }
        Cmd::Experiment { sub } => return run_experiment(sub),
    }
    Ok(ExitCode::SUCCESS)
}

fn env_seed(cli_seed: u64) -> u64 {
    match std::env::var("BOSELAB_SEED") {
        Ok(s) => s.parse().unwrap_or(cli_seed),
        Err(_) => cli_seed,
    }
}

fn parse_chi(s: &str) -> Result<Chi, String> {
    if s == "loglog" {
        return Ok(Chi::LogLog);
    }
    if let Some(v) = s.strip_prefix("const:") {
        return v
            .parse::<f64>()
            .map(Chi::Const)
            .map_err(|_| format!("bad chi constant '{v}'"));
    }
    Err(format!("unknown chi '{s}' (expected loglog or const:<v>)"))
}

fn parse_f_choice(s: &str) -> Result<FChoice, String> {
    match s {
        "all-ones" | "all_ones" | "ones" => Ok(FChoice::AllOnes),
        "alternating" => Ok(FChoice::Alternating),
        other => {
            if let Some(l) = other.strip_prefix("tail:") {
                l.parse::<u32>()
                    .map(FChoice::TailFrom)
                    .map_err(|_| format!("bad tail level '{l}'"))
            } else {
                Err(format!(
                    "unknown f choice '{other}' (expected all-ones, tail:<l>, alternating)"
                ))
            }
        }
    }
}

fn run_experiment(sub: ExperimentCmd) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let (common, report) = match sub {
        ExperimentCmd::Deviation { common, f_choice } => {
            let spec = common.spec.parse()?;
            let chi = parse_chi(&common.chi)?;
            let f = parse_f_choice(&f_choice)?;
            let opts = RunOptions {
                tol: common.tol,
                bar: common.bar,
                ..RunOptions::default()
            };
            let report = experiment::run_deviation(
                &spec,
                common.m,
                &f,
                common.count,
                env_seed(common.seed),
                chi,
                &opts,
            )?;
            (common, report)
        }
        ExperimentCmd::Condense { common, n } => {
            let spec = common.spec.parse()?;
            let chi = parse_chi(&common.chi)?;
            let opts = RunOptions {
                tol: common.tol,
                bar: common.bar,
                ..RunOptions::default()
            };
            let report = experiment::run_condensation(
                &spec,
                common.m,
                n,
                common.count,
                env_seed(common.seed),
                chi,
                &opts,
            )?;
            (common, report)
        }
        ExperimentCmd::Coloring { common, k_list } => {
            let spec = common.spec.parse()?;
            let ks: Vec<u32> = k_list
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<u32>())
                .collect::<Result<_, _>>()?;
            let opts = RunOptions {
                tol: common.tol,
                bar: common.bar,
                ..RunOptions::default()
            };
            let report = experiment::run_coloring(&spec, common.m, &ks, &opts)?;
            (common, report)
        }
        ExperimentCmd::Profile {
            common,
            x1,
            x2,
            grid_points,
        } => {
            let spec = common.spec.parse()?;
            let opts = RunOptions {
                tol: common.tol,
                bar: common.bar,
                ..RunOptions::default()
            };
            let report = experiment::run_profile(
                &spec,
                common.m,
                x1,
                x2,
                grid_points,
                common.count,
                env_seed(common.seed),
                &opts,
            )?;
            (common, report)
        }
    };

    let rendered = serde_json::to_string_pretty(&report)?;
    println!("{rendered}");
    if let Some(path) = &common.out {
        std::fs::write(path, rendered.as_bytes())?;
    }
    if let Some(path) = &common.csv {
        write_experiment_csv(path, &report)?;
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

/// Exact weights as decimal strings, log-scale ones as their natural log.
fn weight_value(w: &Weight) -> serde_json::Value {
    match w.as_exact() {
        Some(x) => json!(x.to_string()),
        None => {
            let v = w.to_f64();
            if v.is_finite() {
                json!(v)
            } else {
                json!({ "ln": w.ln() })
            }
        }
    }
}

fn sparse_string(c: &boselab_core::exact::Configuration, from_level: u32) -> String {
    c.support()
        .filter(|(j, _)| *j >= from_level)
        .map(|(j, n)| format!("{j}:{n}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn write_sample_csv(
    path: &PathBuf,
    batch: &boselab_core::sampler::SampleBatch,
    width: u32,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = String::from("sample_id,energy,particles");
    for j in 0..=width {
        header.push_str(&format!(",N_{j}"));
    }
    header.push_str(",sparse,weight\n");
    w.write_all(header.as_bytes())?;
    for (i, (c, wt)) in batch
        .configurations
        .iter()
        .zip(&batch.weights)
        .enumerate()
    {
        let mut line = format!("{i},{},{}", c.energy(), c.particles());
        for j in 0..=width {
            line.push_str(&format!(",{}", c.count(j)));
        }
        line.push_str(&format!(",\"{}\",{}\n", sparse_string(c, width + 1), wt));
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn write_experiment_csv(
    path: &PathBuf,
    report: &experiment::ExperimentReport,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    if let Some(rows) = &report.coloring {
        w.write_all(b"K,threshold,ratio,expected_ratio,rel_dev\n")?;
        for r in rows {
            w.write_all(
                format!(
                    "{},{},{},{},{}\n",
                    r.k, r.threshold, r.ratio, r.expected_ratio, r.rel_dev
                )
                .as_bytes(),
            )?;
        }
    } else if let Some(p) = &report.profile {
        w.write_all(b"x,mean_scaled_tail,limit,mean_abs_dev\n")?;
        for r in &p.rows {
            w.write_all(
                format!("{},{},{},{}\n", r.x, r.mean_scaled_tail, r.limit, r.mean_abs_dev)
                    .as_bytes(),
            )?;
        }
    } else {
        w.write_all(b"sample_id,statistic\n")?;
        for (i, v) in report.samples.iter().enumerate() {
            w.write_all(format!("{i},{v}\n").as_bytes())?;
        }
    }
    Ok(())
}
