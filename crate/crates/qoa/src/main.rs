use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use qoa::cache::Cache;
use qoa::catalog::{algebra, module, Momentum};
use qoa::commands::{cmd_bv_audit, cmd_cohomology, cmd_monster_dims, cmd_ope, ope_algebra, CohomologyConfig};
use qoa::core::algebra::LatticeSpec;
use qoa::core::bv::{BvOptions, Product};
use qoa::core::Rational;

#[derive(Parser)]
#[command(name = "qoa", version, about = "Exact operator algebras, BRST cohomology and q-series")]
struct Cli {
    /// Cache directory (overrides QOA_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Do not read or write the cache.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Worker threads for slice computations (default: all cores).
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Polar part u∘ₙv (n ≥ 0) and the Wick product of two expressions.
    Ope {
        /// Algebra: bc, bc:λ, vir:κ, heis:k,l or a .json/.toml file; `+` tensors.
        #[arg(long)]
        algebra: String,
        /// Matter algebra tensored after --algebra; enables `J` (BRST current).
        #[arg(long)]
        matter: Option<String>,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Per-slice BRST cohomology of ghosts ⊗ matter module.
    Cohomology {
        /// Matter module: fock:k,l, vac:κ, ghost; `+` tensors.
        #[arg(long)]
        matter: String,
        /// Momentum components `a1,a2,…` (or `0`) of the fock factor.
        #[arg(long, conflicts_with = "half_norm")]
        momentum: Option<String>,
        /// Use the momentum (n, 1, 0, …, 0, n−1), whose α·α/2 is n.
        #[arg(long, allow_hyphen_values = true)]
        half_norm: Option<i64>,
        /// Weights: a list `0,1` or a range `-1..2`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        weights: String,
        /// Fermion degrees `lo..hi` (default: every nonempty degree).
        #[arg(long, allow_hyphen_values = true)]
        fermions: Option<String>,
        /// Relative complex (ker b(1) at weight 0).
        #[arg(long)]
        relative: bool,
        /// Compute even when the matter central charge is not 26.
        #[arg(long)]
        allow_anomaly: bool,
        /// Include cohomology representatives (JSON output).
        #[arg(long)]
        representatives: bool,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
    /// Root multiplicities coef_{q^{−α·α/2}}(j − 744) on a rank-2 lattice.
    MonsterDims {
        /// Gram matrix `a,b;b,c`.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "ii11")]
        gram: Option<String>,
        /// The lattice II_{1,1} with Gram [[0,−1],[−1,0]].
        #[arg(long)]
        ii11: bool,
        #[arg(long, default_value = "-3..3", allow_hyphen_values = true)]
        m: String,
        #[arg(long, default_value = "-3..3", allow_hyphen_values = true)]
        n: String,
        /// Truncation order of the j expansions.
        #[arg(long, default_value_t = 64)]
        order: i64,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
    /// Randomized BV axiom suite on the operator BRST complex (JSON report).
    BvAudit {
        /// Matter algebra, e.g. vir:26 or heis:25,1.
        #[arg(long)]
        matter: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        /// Largest |weight| for the ∘ₙ triviality checks.
        #[arg(long, default_value_t = 4)]
        max_weight: i64,
        /// Product to audit: `wick` or `circle:n` (a negative control).
        #[arg(long, default_value = "wick")]
        product: String,
    },
}

fn range(s: &str) -> anyhow::Result<(i64, i64)> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("expected `lo..hi`, got `{s}`"))?;
    let a: i64 = a.trim().parse().with_context(|| format!("bad range `{s}`"))?;
    let b: i64 = b.trim().parse().with_context(|| format!("bad range `{s}`"))?;
    if a > b {
        bail!("empty range `{s}`");
    }
    Ok((a, b))
}

fn weights(s: &str) -> anyhow::Result<Vec<Rational>> {
    if s.contains("..") {
        let (a, b) = range(s)?;
        return Ok((a..=b).map(Rational::from_integer).collect());
    }
    s.split(',')
        .map(|w| w.trim().parse::<Rational>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn gram(s: &str) -> anyhow::Result<Vec<Vec<i64>>> {
    s.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| x.trim().parse::<i64>().with_context(|| format!("bad Gram entry `{x}`")))
                .collect()
        })
        .collect()
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(s: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|_| out.flush());
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().ok();
    }
    let cache = if cli.no_cache {
        Cache::disabled()
    } else {
        Cache::from_env(cli.cache_dir.as_deref())
    };
    match cli.command {
        Command::Ope {
            algebra: a,
            matter,
            left,
            right,
            format,
        } => {
            let base = algebra(&a)?;
            let matter = matter.map(|m| algebra(&m)).transpose()?;
            let alg = ope_algebra(&base, matter.as_ref());
            let t = cmd_ope(&alg, &left, &right)?;
            match format {
                Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&t)?)),
                Format::Text | Format::Tsv => {
                    let mut s = String::from("n\tproduct\n");
                    for r in t.poles.iter().chain([&t.wick]) {
                        s.push_str(&format!("{}\t{}\n", r.n, r.rendered));
                    }
                    emit(&s);
                }
            }
            Ok(true)
        }
        Command::Cohomology {
            matter,
            momentum,
            half_norm,
            weights: ws,
            fermions,
            relative,
            allow_anomaly,
            representatives,
            format,
        } => {
            let mom = match (momentum, half_norm) {
                (Some(m), _) => Momentum::Explicit(m),
                (None, Some(h)) => Momentum::HalfNorm(h),
                (None, None) => Momentum::Zero,
            };
            let cfg = CohomologyConfig {
                matter: module(&matter, &mom)?,
                weights: weights(&ws)?,
                fermions: fermions.as_deref().map(range).transpose()?,
                relative,
                allow_anomaly,
                representatives,
            };
            let t = cmd_cohomology(&cfg, &cache)?;
            match format {
                Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&t)?)),
                Format::Text | Format::Tsv => emit(&t.to_tsv()),
            }
            for c in t.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            Ok(t.passed())
        }
        Command::MonsterDims {
            gram: g,
            ii11,
            m,
            n,
            order,
            format,
        } => {
            let lattice = if ii11 {
                LatticeSpec::ii11()
            } else {
                LatticeSpec::new(gram(g.as_deref().unwrap_or_default())?)?
            };
            let (m0, m1) = range(&m)?;
            let (n0, n1) = range(&n)?;
            let t = cmd_monster_dims(&lattice, m0..=m1, n0..=n1, order)?;
            match format {
                Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&t)?)),
                Format::Text | Format::Tsv => emit(&t.to_tsv()),
            }
            for c in t.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            Ok(t.passed())
        }
        Command::BvAudit {
            matter,
            samples,
            seed,
            max_weight,
            product,
        } => {
            let product = match product.as_str() {
                "wick" => Product::Wick,
                p => match p.strip_prefix("circle:").and_then(|n| n.parse().ok()) {
                    Some(n) => Product::Circle(n),
                    None => bail!("--product must be `wick` or `circle:n`"),
                },
            };
            let opts = BvOptions {
                samples,
                seed,
                max_weight,
                product,
            };
            let report = cmd_bv_audit(&algebra(&matter)?, &opts)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&report)?));
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
