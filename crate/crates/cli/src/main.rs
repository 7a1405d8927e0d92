use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use llx_core::fixtures::{Fixture, CORPUS};
use llx_core::report::{
    analyze_full, compare_with_fixture, construct_spec, to_csv_report, to_latex_report,
    ConstructConstants, ConstructMode, Report, SystemSpec,
};

/// Quadratic first integrals and sl(2) Lax pairs for y'' + f(z,y) y' + g(z,y) = 0.
#[derive(Debug, Parser)]
#[command(name = "llx", version)]
struct Cli {
    /// Seed of the sampling generator; overrides the seed stored in a spec.
    #[arg(long, global = true, env = "LLX_SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify a system, build I and (L, M) and run every check.
    Analyze(SpecArgs),
    /// Analyze the six built-in systems.
    Corpus {
        /// Also run the perturbed control of each system.
        #[arg(long)]
        controls: bool,
        /// Print the reports as a JSON array instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Serialize the analysis of a system.
    Emit {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build a Liénard pair that carries a Lax pair and print its spec.
    Construct {
        /// Which coefficient is given.
        #[arg(long, value_enum)]
        mode: Mode,
        /// The given coefficient, a function of y only.
        #[arg(long = "expr")]
        expr: String,
        /// Scale of the antiderivative of f (g-from-f).
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        /// Additive constant next to the antiderivative (g-from-f).
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        /// Strength of the friction (f-from-g).
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Parameter values, `name=value`.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// Initial point `z0,y0,yp0` stored in the spec.
        #[arg(long, value_parser = parse_triple)]
        ic: Option<(f64, f64, f64)>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Latex,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    GFromF,
    FFromG,
}

/// A system given as a JSON spec file, a corpus name or inline coefficients.
#[derive(Debug, clap::Args)]
struct SpecArgs {
    /// JSON spec file, `-` for standard input.
    #[arg(conflicts_with_all = ["fixture", "f"])]
    spec: Option<PathBuf>,
    /// Name of a built-in system (ex1 .. ex6).
    #[arg(long, conflicts_with = "f")]
    fixture: Option<String>,
    /// Use the perturbed control of `--fixture`.
    #[arg(long, requires = "fixture")]
    control: bool,
    /// Friction coefficient f(z, y).
    #[arg(long, requires = "g")]
    f: Option<String>,
    /// Restoring term g(z, y).
    #[arg(long, requires = "f")]
    g: Option<String>,
    /// Parameter values, `name=value`.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Initial point `z0,y0,yp0` of the verification run.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    ic: Option<(f64, f64, f64)>,
    /// Length of the verification run; negative integrates backwards.
    #[arg(long, allow_hyphen_values = true)]
    span: Option<f64>,
    /// Relative tolerance of the verification run.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute tolerance of the verification run.
    #[arg(long)]
    atol: Option<f64>,
    /// Sampling rectangle `zmin,zmax,ymin,ymax` for the identity tests.
    #[arg(long, value_parser = parse_domain, allow_hyphen_values = true)]
    domain: Option<[f64; 4]>,
    /// Gauge of B: the value `B0` it takes at `(z0, y0)`, as `z0,y0,B0`.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    anchor: Option<(f64, f64, f64)>,
    /// Build the candidate integral even when the conditions fail.
    #[arg(long)]
    candidate: bool,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected name=value")?;
    let v = v.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((k.trim().to_string(), v))
}

fn parse_triple(s: &str) -> Result<(f64, f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

fn parse_domain(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| "expected four comma-separated numbers".to_string())
}

fn find_fixture(name: &str) -> Result<&'static Fixture> {
    llx_core::fixtures::fixture(name).ok_or_else(|| {
        let names: Vec<_> = CORPUS.iter().map(|f| f.name).collect();
        anyhow!(llx_core::Error::InvalidInput(format!(
            "unknown fixture {name}; expected one of {}",
            names.join(", ")
        )))
    })
}

impl SpecArgs {
    fn resolve(&self, seed: Option<u64>) -> Result<SystemSpec> {
        let mut spec = if let Some(path) = &self.spec {
            let text = if path.as_os_str() == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?
            };
            serde_json::from_str::<SystemSpec>(&text)
                .map_err(|e| anyhow!(llx_core::Error::InvalidInput(format!("spec: {e}"))))?
        } else if let Some(name) = &self.fixture {
            let fx = find_fixture(name)?;
            if self.control {
                SystemSpec::control_from_fixture(fx)
            } else {
                SystemSpec::from_fixture(fx)
            }
        } else if let (Some(f), Some(g)) = (&self.f, &self.g) {
            SystemSpec::new(f, g)
        } else {
            bail!(llx_core::Error::InvalidInput(
                "give a spec file, --fixture or --f/--g".into()
            ));
        };
        spec.params.extend(self.params.iter().cloned());
        if self.ic.is_some() {
            spec.ic = self.ic;
        }
        if let Some(span) = self.span {
            spec.span = span;
        }
        if let Some(rtol) = self.rtol {
            spec.tolerances.rtol = rtol;
        }
        if let Some(atol) = self.atol {
            spec.tolerances.atol = atol;
        }
        if let Some([z0, z1, y0, y1]) = self.domain {
            spec.domain.z = Some((z0, z1));
            spec.domain.y = Some((y0, y1));
        }
        if let Some((z0, y0, b0)) = self.anchor {
            spec.anchor = Some(llx_core::field::Anchor::new(z0, y0, b0));
        }
        spec.candidate |= self.candidate;
        if seed.is_some() {
            spec.seed = seed;
        }
        Ok(spec)
    }
}

fn summary_line(r: &Report) -> String {
    let name = r.spec.name.as_deref().unwrap_or("-");
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2e}"));
    format!(
        "{name:<12} {:<20} {:<5} cond {:>9}  rel {:>9}  lax {:>9}  drift {:>9}",
        r.case.to_string(),
        if r.pass { "pass" } else { "fail" },
        format!("{:.2e}", r.max_condition_residual()),
        fmt(r.relations.as_ref().map(|x| x.max_relation())),
        fmt(r.lax.as_ref().map(|x| x.max)),
        fmt(r.drift.as_ref().map(|x| x.relative)),
    )
}

fn cmd_corpus(seed: Option<u64>, controls: bool, json: bool) -> Result<i32> {
    let mut specs: Vec<(&Fixture, SystemSpec, bool)> = Vec::new();
    for fx in &CORPUS {
        specs.push((fx, SystemSpec::from_fixture(fx), false));
        if controls {
            specs.push((fx, SystemSpec::control_from_fixture(fx), true));
        }
    }
    for s in &mut specs {
        s.1.seed = seed.or(s.1.seed);
    }
    let results: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|(fx, spec, control)| {
                scope.spawn(move || -> Result<(Report, Option<String>)> {
                    let an = analyze_full(spec).with_context(|| {
                        format!("fixture {}", spec.name.as_deref().unwrap_or(""))
                    })?;
                    let problem = if *control {
                        (an.report.exit_code() != 2).then(|| "control was not rejected".to_string())
                    } else {
                        let cmp = compare_with_fixture(fx, &an, 10)?;
                        if !cmp.case_matches {
                            Some(format!(
                                "case {} instead of {}",
                                an.report.case, fx.expected
                            ))
                        } else if cmp.a_residual > 1e-9 || cmp.b_residual > 1e-9 {
                            Some(format!(
                                "closed forms differ: A {:.2e}, B {:.2e}",
                                cmp.a_residual, cmp.b_residual
                            ))
                        } else if !an.report.pass {
                            Some("a check failed".to_string())
                        } else {
                            None
                        }
                    };
                    Ok((an.report, problem))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        let (report, problem) = r?;
        if let Some(p) = problem {
            failed.push(format!(
                "{}: {p}",
                report.spec.name.as_deref().unwrap_or("-")
            ));
        }
        reports.push(report);
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&reports)?);
    } else {
        for r in &reports {
            println!("{}", summary_line(r));
        }
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        for f in failed {
            eprintln!("error: {f}");
        }
        Ok(70)
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze(args) => {
            let spec = args.resolve(cli.seed)?;
            let an = analyze_full(&spec)?;
            println!("{}", an.report.to_json());
            Ok(an.report.exit_code())
        }
        Command::Corpus { controls, json } => cmd_corpus(cli.seed, controls, json),
        Command::Emit { spec, format } => {
            let spec = spec.resolve(cli.seed)?;
            let an = analyze_full(&spec)?;
            match format {
                Format::Json => println!("{}", an.report.to_json()),
                Format::Latex => print!("{}", to_latex_report(&an)),
                Format::Csv => print!("{}", to_csv_report(&an)?),
            }
            Ok(an.report.exit_code())
        }
        Command::Construct {
            mode,
            expr,
            kappa,
            mu,
            nu,
            params,
            ic,
        } => {
            let mode = match mode {
                Mode::GFromF => ConstructMode::GFromF,
                Mode::FFromG => ConstructMode::FFromG,
            };
            let k = ConstructConstants { kappa, mu, nu };
            let mut spec = construct_spec(mode, &expr, k, params.into_iter().collect())?;
            spec.ic = ic;
            println!("{}", serde_json::to_string_pretty(&spec)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            // Error variants that wrap a source repeat its message.
            let mut msg = String::new();
            for cause in err.chain() {
                let s = cause.to_string();
                if !msg.contains(&s) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&s);
                }
            }
            eprintln!("error: {msg}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<llx_core::Error>())
                .map_or(64, llx_core::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
