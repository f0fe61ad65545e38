//! Batch front door: JSON module files in, deterministic reports out.

use clap::{Parser, Subcommand, ValueEnum};
use iwalab::elementary::ElementaryModule;
use iwalab::error::{Error, Result};
use iwalab::finite_dual::{dual, pairing_check};
use iwalab::io::{ModuleFile, RunReport};
use iwalab::presented::{fit_growth, present_elementary, PresentedModule};
use iwalab::profile::PrecisionProfile;
use iwalab::tower::{analyze, compare_towers, simulate, TowerLevel};
use serde_json::json;
use std::fs;
use std::process::ExitCode;

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Which {
    F,
    G,
}

#[derive(Parser)]
#[command(name = "iwalab", version, about = "Exact arithmetic for modules over Z_p[[T]]")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// p-adic precision exponent M (coefficients live in Z/p^M).
    #[arg(long, global = true, default_value_t = 16)]
    prec_p: u32,
    /// T-adic truncation degree D.
    #[arg(long, global = true, default_value_t = 128)]
    prec_t: usize,
    /// Deepest tower level.
    #[arg(long, global = true, default_value_t = 4)]
    levels: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// Λ-invariants: closed form for elementary files, recovered for others.
    Invariants { file: String },
    /// Apply 𝔉 or 𝔊.
    Functor {
        which: Which,
        file: String,
        /// Cross-check the closed form against the presented-module route.
        #[arg(long)]
        verify: bool,
    },
    /// ι-twist of an elementary module.
    Twist { file: String },
    /// Functional-equation check between two elementary modules.
    CheckFunceq { file1: String, file2: String },
    /// Torsion growth table e_1..e_levels with the fitted (μ, λ, ν).
    Grow { file: String },
    /// ι-twisted dual of a finite module, with the pairing verdict.
    Dual { file: String },
    /// Synthetic control-theorem towers.
    Tower {
        #[command(subcommand)]
        cmd: TowerCmd,
    },
}

#[derive(Subcommand)]
enum TowerCmd {
    Simulate {
        /// Elementary module file for the Λ-adic limit.
        #[arg(long)]
        limit: String,
        /// Defect bound B.
        #[arg(long, default_value_t = 0)]
        noise: u32,
        /// Write the raw tower JSON here for later analyze/compare.
        #[arg(long)]
        out: Option<String>,
    },
    Analyze { file: String },
    Compare { file1: String, file2: String },
}

fn read_module(path: &str) -> Result<ModuleFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidModule(format!("{path}: {e}")))?;
    ModuleFile::parse(&text)
}

fn read_tower(path: &str) -> Result<Vec<TowerLevel>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidModule(format!("{path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidModule(format!("{path}: {e}")))
}

fn profile_for(cli: &Cli, p: u64) -> Result<PrecisionProfile> {
    PrecisionProfile::new(p, cli.prec_p, cli.prec_t, cli.levels)
}

fn load_elementary(cli: &Cli, path: &str) -> Result<(ModuleFile, ElementaryModule)> {
    let mf = read_module(path)?;
    let prof = profile_for(cli, mf.p)?;
    let e = mf.to_elementary(prof)?;
    Ok((mf, e))
}

fn fit_json(seq: &[u64], p: u64) -> Result<serde_json::Value> {
    let fit = fit_growth(seq, p)?;
    Ok(json!({
        "log_sizes": seq,
        "mu": fit.mu, "lambda": fit.lambda, "nu": fit.nu,
        "stable_from": fit.stable_from,
    }))
}

fn presented_for(cli: &Cli, mf: &ModuleFile) -> Result<PresentedModule> {
    let prof = profile_for(cli, mf.p)?;
    match mf.kind.as_str() {
        "presented" => mf.to_presented(prof),
        "elementary" => present_elementary(&mf.to_elementary(prof)?),
        _ => Err(Error::InvalidModule(
            "expected an elementary or presented module file".into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<RunReport> {
    match &cli.cmd {
        Cmd::Invariants { file } => {
            let mf = read_module(file)?;
            let prof = profile_for(cli, mf.p)?;
            let result = match mf.kind.as_str() {
                "elementary" => {
                    let e = mf.to_elementary(prof)?;
                    serde_json::to_value(e.invariants()).unwrap()
                }
                "presented" => {
                    let x = mf.to_presented(prof)?;
                    let seq = x.torsion_size_seq(cli.levels)?;
                    fit_json(&seq, mf.p)?
                }
                _ => {
                    let m = mf.to_finite()?;
                    json!({"orders": m.orders(), "log_size": m.log_size()})
                }
            };
            Ok(RunReport::new("invariants", json!({"file": mf}), prof, result))
        }
        Cmd::Functor {
            which,
            file,
            verify,
        } => {
            let mf = read_module(file)?;
            let prof = profile_for(cli, mf.p)?;
            let (name, result) = if mf.kind == "elementary" {
                let e = mf.to_elementary(prof)?;
                let out = match which {
                    Which::F => e.functor_f()?,
                    Which::G => e.functor_g(),
                };
                let inv = out.invariants();
                let mut result = json!({
                    "module": ModuleFile::from_elementary(&out)?,
                    "mu": inv.mu, "lambda": inv.lambda,
                });
                if *verify {
                    let x = present_elementary(&e)?;
                    let fitted = match which {
                        Which::F => x.colimit_f_invariants(cli.levels)?,
                        Which::G => x.limit_g_invariants(cli.levels)?,
                    };
                    result["oracle_match"] = json!(fitted == (inv.mu, inv.lambda));
                    result["oracle_invariants"] = json!({"mu": fitted.0, "lambda": fitted.1});
                }
                (which, result)
            } else {
                let x = mf.to_presented(prof)?;
                let (mu, lambda) = match which {
                    Which::F => x.colimit_f_invariants(cli.levels)?,
                    Which::G => x.limit_g_invariants(cli.levels)?,
                };
                (which, json!({"mu": mu, "lambda": lambda}))
            };
            let cmd = match name {
                Which::F => "functor-f",
                Which::G => "functor-g",
            };
            Ok(RunReport::new(cmd, json!({"file": mf}), prof, result))
        }
        Cmd::Twist { file } => {
            let (mf, e) = load_elementary(cli, file)?;
            let t = e.twist()?;
            Ok(RunReport::new(
                "twist",
                json!({"file": mf}),
                e.profile(),
                json!({"module": ModuleFile::from_elementary(&t)?}),
            ))
        }
        Cmd::CheckFunceq { file1, file2 } => {
            let (mf1, e1) = load_elementary(cli, file1)?;
            let (mf2, e2) = load_elementary(cli, file2)?;
            let ok = e1.check_funceq(&e2)?;
            Ok(RunReport::new(
                "check-funceq",
                json!({"file1": mf1, "file2": mf2}),
                e1.profile(),
                json!({"related": ok}),
            ))
        }
        Cmd::Grow { file } => {
            let mf = read_module(file)?;
            let prof = profile_for(cli, mf.p)?;
            let x = presented_for(cli, &mf)?;
            let seq = x.torsion_size_seq(cli.levels)?;
            Ok(RunReport::new(
                "grow",
                json!({"file": mf}),
                prof,
                fit_json(&seq, mf.p)?,
            ))
        }
        Cmd::Dual { file } => {
            let mf = read_module(file)?;
            let prof = profile_for(cli, mf.p)?;
            let m = mf.to_finite()?;
            let d = dual(&m)?;
            let rep = pairing_check(&m)?;
            Ok(RunReport::new(
                "dual",
                json!({"file": mf}),
                prof,
                json!({
                    "module": ModuleFile::from_finite(&d)?,
                    "perfect": rep.perfect,
                    "equivariant": rep.equivariant,
                }),
            ))
        }
        Cmd::Tower { cmd } => match cmd {
            TowerCmd::Simulate { limit, noise, out } => {
                let (mf, e) = load_elementary(cli, limit)?;
                let tower = simulate(&e, *noise, cli.levels, cli.seed)?;
                if let Some(path) = out {
                    fs::write(path, serde_json::to_string_pretty(&tower).unwrap())
                        .map_err(|er| Error::InvalidModule(format!("{path}: {er}")))?;
                }
                let sizes: Vec<u64> =
                    tower.iter().map(|l| l.finite_part.log_size()).collect();
                let coranks: Vec<u64> = tower.iter().map(|l| l.divisible_corank).collect();
                Ok(RunReport::new(
                    "tower-simulate",
                    json!({"limit": mf, "noise": noise, "seed": cli.seed}),
                    e.profile(),
                    json!({"log_sizes": sizes, "coranks": coranks, "levels": tower}),
                ))
            }
            TowerCmd::Analyze { file } => {
                let tower = read_tower(file)?;
                let rep = analyze(&tower)?;
                let prof = profile_for(cli, tower[0].finite_part.p())?;
                Ok(RunReport::new(
                    "tower-analyze",
                    json!({"file": file}),
                    prof,
                    json!({
                        "mu": rep.fit.mu, "lambda": rep.fit.lambda, "nu": rep.fit.nu,
                        "stable_from": rep.fit.stable_from,
                        "corank_stable_from": rep.corank_stable_from,
                        "class": ModuleFile::from_elementary(&rep.limit_g_class)?,
                    }),
                ))
            }
            TowerCmd::Compare { file1, file2 } => {
                let t1 = read_tower(file1)?;
                let t2 = read_tower(file2)?;
                let (bounded, witness) = compare_towers(&t1, &t2)?;
                let prof = profile_for(cli, t1[0].finite_part.p())?;
                Ok(RunReport::new(
                    "tower-compare",
                    json!({"file1": file1, "file2": file2}),
                    prof,
                    json!({"bounded": bounded, "witness": witness}),
                ))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_precision() { 2 } else { 3 })
        }
    }
}
