//! Command-line driver for recursive Koszul flattenings.
//!
//! Exit codes: 0 success (claims established), 1 failed verification or a
//! FAILED certificate, 2 usage or input error, 3 budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use koszul::certify::{
    certify_det4_rank12, certify_det_lower, certify_perm_finite_char, certify_perm_table,
    read_certificate, verify_certificate, write_certificate, Certificate, CertificateBody, Verdict,
};
use koszul::flattening::{rkf_matrix, FlatteningPlan, MatrixField, SparseMatrix};
use koszul::linalg::{det_exact, det_mod_p, draw_primes, rank_mod_p, rank_rational};
use koszul::symmetry::{connected_components, SymmetricOptions};
use koszul::tensor::{
    decomposition_from_text, det_tensor, perm_tensor, verify_decomposition, Tensor,
};
use koszul::textio::{format_factored, format_rational};
use koszul::{Error, Result};

#[derive(Parser)]
#[command(
    name = "koszul",
    version,
    about = "Recursive Koszul flattenings: exact ranks, determinants, and border-rank certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for prime draws, submatrix searches, and sampled grid points.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Work over F_p instead of the rationals.
    #[arg(long, global = true)]
    prime: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory certificates are written to
    /// (default: $KOSZUL_OUT_DIR, falling back to ./certificates).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// n = 5 determinant: full CRT determinant instead of sampled residues.
    #[arg(long, global = true)]
    exhaustive: bool,

    /// Stop long orbit sweeps after this many seconds; completed classes
    /// are still reported and checkpointed.
    #[arg(long, global = true)]
    budget_seconds: Option<u64>,

    /// Machine-readable JSON on stdout instead of prose.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a determinant or permanent tensor in text form.
    Gen {
        family: Family,
        /// Side length: the tensor lives on n copies of an n-dimensional space.
        #[arg(long)]
        n: u32,
        /// Output file (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build the recursive Koszul flattening matrix of a tensor.
    Flatten {
        #[command(flatten)]
        source: Source,
        /// Output file for the matrix (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rank of the flattening (rational, or mod p with --prime).
    Rank {
        #[command(flatten)]
        source: Source,
    },
    /// Determinant of the square flattening, exact or mod p.
    Det {
        #[command(flatten)]
        source: Source,
    },
    /// Border-rank lower bound: ceil(rank / divisor).
    Bound {
        #[command(flatten)]
        source: Source,
    },
    /// Split the flattening into its connected components.
    Decompose {
        #[command(flatten)]
        source: Source,
    },
    /// Produce a certificate and write it to the output directory.
    #[command(subcommand)]
    Certify(CertifyCommand),
    /// Replay a stored certificate and compare every recorded fact.
    VerifyCertificate { file: PathBuf },
    /// Check that a list of rank-one terms sums exactly to a tensor.
    VerifyDecomposition {
        /// Tensor family (det | perm) or a tensor text file.
        #[arg(long)]
        tensor: String,
        /// Side length when --tensor names a family.
        #[arg(long)]
        n: Option<u32>,
        /// Decomposition text file with the rank-one terms.
        #[arg(long)]
        terms: PathBuf,
    },
}

#[derive(Subcommand)]
enum CertifyCommand {
    /// Full-rank lower bound for det_n (n = 3, 4, 5); honors --prime
    /// and, for n = 5, --exhaustive.
    DetLower {
        #[arg(long)]
        n: u32,
    },
    /// The four-case analysis proving R(det_4) >= 12.
    Det4Rank12 {
        /// 0 works over the rationals; an odd prime switches the root
        /// ranks to explicit witness submatrices mod p.
        #[arg(long, default_value_t = 0)]
        characteristic: u64,
        /// Random sampling instead of full evaluation grids
        /// (verdict degrades to PROBABILISTIC).
        #[arg(long)]
        fast: bool,
    },
    /// Orbit-by-orbit rank of the perm_n flattening mod p (n = 4..7).
    PermTable {
        #[arg(long)]
        n: u32,
        /// Unlock the multi-hour n = 7 sweep.
        #[arg(long)]
        extended: bool,
        /// Orbit-class checkpoint file so interrupted sweeps resume
        /// (defaults to a per-run file under --out-dir for n >= 6).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Unit-determinant witness for perm_n valid over every field (n = 4, 5).
    PermFiniteChar {
        #[arg(long)]
        n: u32,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum Family {
    Det,
    Perm,
}

/// Where the working matrix comes from: a matrix file used as-is, a tensor
/// text file, or a named tensor family — the latter two flattened with the
/// requested plan.
#[derive(Args)]
struct Source {
    /// A .smat matrix file (used directly) or a tensor text file (flattened).
    input: Option<PathBuf>,

    /// Tensor family (det | perm) or a tensor text file.
    #[arg(long)]
    tensor: Option<String>,

    /// Side length when --tensor names a family.
    #[arg(long)]
    n: Option<u32>,

    /// Comma-separated Koszul powers p_1,...,p_k applied on modes 1..k
    /// (default: 1,2,...,d-2).
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<u32>>,

    /// Contraction mode (default: d - 1).
    #[arg(long)]
    contraction: Option<usize>,

    /// Output mode kept on the rows (default: d).
    #[arg(long)]
    output_mode: Option<usize>,
}

struct Resolved {
    matrix: SparseMatrix,
    field: MatrixField,
    /// Product of the Koszul divisors; present only when the matrix was
    /// built here from a tensor and a plan.
    divisor: Option<u64>,
    label: String,
}

fn load_tensor(spec: &str, n: Option<u32>) -> Result<Tensor> {
    match spec {
        "det" | "perm" => {
            let n = n.ok_or_else(|| {
                Error::InvalidArgument(format!("--tensor {spec} needs --n <size>"))
            })?;
            if spec == "det" {
                det_tensor(n)
            } else {
                perm_tensor(n)
            }
        }
        path => Tensor::from_text(&std::fs::read_to_string(path)?),
    }
}

fn plan_for(dims: &[u32], src: &Source) -> Result<FlatteningPlan> {
    if src.p.is_none() && src.contraction.is_none() && src.output_mode.is_none() {
        return FlatteningPlan::default_for(dims);
    }
    let d = dims.len();
    let powers: Vec<u32> = match &src.p {
        Some(p) => p.clone(),
        None => (1..=d.saturating_sub(2) as u32).collect(),
    };
    let koszul: Vec<(usize, u32)> = powers.iter().enumerate().map(|(i, &pw)| (i + 1, pw)).collect();
    let contraction = src.contraction.unwrap_or(d - 1);
    let output = src.output_mode.unwrap_or(d);
    FlatteningPlan::new(koszul, contraction, output, dims)
}

fn flatten_tensor(t: &Tensor, src: &Source, label: String) -> Result<Resolved> {
    let dims = t.dims().to_vec();
    let plan = plan_for(&dims, src)?;
    let matrix = rkf_matrix(t, &plan)?;
    let divisor = plan.divisor(&dims);
    Ok(Resolved { matrix, field: MatrixField::Rational, divisor: Some(divisor), label })
}

fn resolve_source(src: &Source) -> Result<Resolved> {
    if let Some(path) = &src.input {
        if path.extension().is_some_and(|e| e == "smat") {
            let (matrix, field) = SparseMatrix::from_smat(&std::fs::read_to_string(path)?)?;
            return Ok(Resolved { matrix, field, divisor: None, label: path.display().to_string() });
        }
        let t = Tensor::from_text(&std::fs::read_to_string(path)?)?;
        return flatten_tensor(&t, src, path.display().to_string());
    }
    if let Some(spec) = &src.tensor {
        let t = load_tensor(spec, src.n)?;
        let label = match src.n {
            Some(n) => format!("{spec}_{n}"),
            None => spec.clone(),
        };
        return flatten_tensor(&t, src, label);
    }
    Err(Error::InvalidArgument(
        "no input: pass a matrix/tensor file or --tensor det|perm --n <size>".into(),
    ))
}

/// Rank of the resolved matrix, honoring both the file's field and --prime.
fn compute_rank(res: &Resolved, prime: Option<u64>) -> Result<(u64, Option<u64>)> {
    match (&res.field, prime) {
        (MatrixField::Prime(q), Some(p)) if *q != p => Err(Error::InvalidArgument(format!(
            "matrix is stored over F_{q} but --prime {p} was requested"
        ))),
        (MatrixField::Prime(q), _) => Ok((rank_mod_p(&res.matrix, *q)? as u64, Some(*q))),
        (MatrixField::Rational, Some(p)) => Ok((rank_mod_p(&res.matrix, p)? as u64, Some(p))),
        (MatrixField::Rational, None) => Ok((rank_rational(&res.matrix)?, None)),
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os("KOSZUL_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("certificates"))
}

fn to_json(v: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Internal(format!("JSON encoding: {e}")))
}

fn write_or_print(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Persist a certificate, print its summary, and choose the exit code.
fn emit_certificate(cert: &Certificate, cli: &Cli) -> Result<u8> {
    let path = write_certificate(cert, &out_dir(cli))?;
    if cli.json {
        let mut v = serde_json::to_value(cert)
            .map_err(|e| Error::Internal(format!("JSON encoding: {e}")))?;
        v["path"] = json!(path.display().to_string());
        println!("{}", to_json(&v)?);
    } else {
        println!("{}", cert.claim);
        println!("verdict: {}", cert.verdict);
        println!("certificate: {}", path.display());
        println!("runtime: {:.2} s", cert.runtime_seconds);
    }
    let incomplete = matches!(&cert.body, CertificateBody::PermTable(b) if !b.complete);
    Ok(if cert.verdict == Verdict::Failed {
        1
    } else if incomplete {
        3
    } else {
        0
    })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Gen { family, n, output } => {
            let t = match family {
                Family::Det => det_tensor(*n)?,
                Family::Perm => perm_tensor(*n)?,
            };
            write_or_print(output, &t.to_text())?;
            Ok(0)
        }
        Command::Flatten { source, output } => {
            let res = resolve_source(source)?;
            let text = res.matrix.to_smat(res.field)?;
            if output.is_some() {
                write_or_print(output, &text)?;
                println!(
                    "{}: {} x {} matrix, {} nonzero entries{}",
                    res.label,
                    res.matrix.nrows(),
                    res.matrix.ncols(),
                    res.matrix.nnz(),
                    res.divisor.map_or(String::new(), |d| format!(", divisor {d}")),
                );
            } else {
                print!("{text}");
            }
            Ok(0)
        }
        Command::Rank { source } => {
            let res = resolve_source(source)?;
            let (rank, prime) = compute_rank(&res, cli.prime)?;
            if cli.json {
                println!(
                    "{}",
                    to_json(&json!({
                        "input": res.label,
                        "nrows": res.matrix.nrows(),
                        "ncols": res.matrix.ncols(),
                        "rank": rank,
                        "prime": prime,
                    }))?
                );
            } else {
                println!("{rank}");
            }
            Ok(0)
        }
        Command::Det { source } => {
            let res = resolve_source(source)?;
            if res.matrix.nrows() != res.matrix.ncols() {
                return Err(Error::InvalidArgument(format!(
                    "determinant needs a square matrix, got {} x {}",
                    res.matrix.nrows(),
                    res.matrix.ncols()
                )));
            }
            let prime = match (&res.field, cli.prime) {
                (MatrixField::Prime(q), Some(p)) if *q != p => {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is stored over F_{q} but --prime {p} was requested"
                    )))
                }
                (MatrixField::Prime(q), _) => Some(*q),
                (MatrixField::Rational, p) => p,
            };
            let (display, value) = match prime {
                Some(p) => {
                    let d = det_mod_p(&res.matrix, p)?;
                    (d.to_string(), json!({ "residue": d, "prime": p }))
                }
                None => {
                    let d = det_exact(&res.matrix, cli.seed)?;
                    if d.is_integer() {
                        let int = d.to_integer();
                        let s = format_factored(&int);
                        (s.clone(), json!({ "det": s, "decimal": int.to_string() }))
                    } else {
                        let s = format_rational(&d);
                        (s.clone(), json!({ "det": s }))
                    }
                }
            };
            if cli.json {
                let mut v = value;
                v["input"] = json!(res.label);
                println!("{}", to_json(&v)?);
            } else {
                println!("{display}");
            }
            Ok(0)
        }
        Command::Bound { source } => {
            let res = resolve_source(source)?;
            let divisor = res.divisor.ok_or_else(|| {
                Error::InvalidArgument(
                    "the border-rank bound needs the flattening plan: pass a tensor source, not a bare matrix file".into(),
                )
            })?;
            let (rank, prime) = compute_rank(&res, cli.prime)?;
            let bound = koszul::flattening::border_bound(rank, divisor);
            if cli.json {
                println!(
                    "{}",
                    to_json(&json!({
                        "input": res.label,
                        "rank": rank,
                        "prime": prime,
                        "divisor": divisor,
                        "bound": bound,
                    }))?
                );
            } else {
                println!("{bound}");
            }
            Ok(0)
        }
        Command::Decompose { source } => {
            let res = resolve_source(source)?;
            let decomp = connected_components(&res.matrix)?;
            if cli.json {
                let comps: Vec<_> = decomp
                    .components
                    .iter()
                    .map(|c| {
                        json!({
                            "rows": c.rows.len(),
                            "cols": c.cols.len(),
                            "nnz": c.matrix.nnz(),
                            "first_col": c.cols[0] + 1,
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    to_json(&json!({
                        "input": res.label,
                        "nrows": res.matrix.nrows(),
                        "ncols": res.matrix.ncols(),
                        "components": comps,
                        "orphan_cols": decomp.orphan_cols.iter().map(|c| c + 1).collect::<Vec<_>>(),
                        "zero_rows": decomp.zero_rows.iter().map(|r| r + 1).collect::<Vec<_>>(),
                    }))?
                );
            } else {
                println!(
                    "{}: {} x {} matrix, {} connected components",
                    res.label,
                    res.matrix.nrows(),
                    res.matrix.ncols(),
                    decomp.components.len()
                );
                for (i, c) in decomp.components.iter().enumerate() {
                    if i == 20 {
                        println!("  ... and {} more", decomp.components.len() - 20);
                        break;
                    }
                    println!(
                        "  component {}: {} rows x {} cols, nnz {}, first column {}",
                        i + 1,
                        c.rows.len(),
                        c.cols.len(),
                        c.matrix.nnz(),
                        c.cols[0] + 1
                    );
                }
                println!("orphan columns: {}", decomp.orphan_cols.len());
                println!("zero rows: {}", decomp.zero_rows.len());
            }
            Ok(0)
        }
        Command::Certify(cmd) => {
            let cert = match cmd {
                CertifyCommand::DetLower { n } => {
                    certify_det_lower(*n, cli.prime, cli.exhaustive, cli.seed)?
                }
                CertifyCommand::Det4Rank12 { characteristic, fast } => {
                    certify_det4_rank12(*characteristic, *fast, cli.seed)?
                }
                CertifyCommand::PermTable { n, extended, checkpoint } => {
                    let prime = match cli.prime {
                        Some(p) => p,
                        None => draw_primes(cli.seed, 1)?[0],
                    };
                    let checkpoint = checkpoint.clone().or_else(|| {
                        (*n >= 6).then(|| {
                            out_dir(cli)
                                .join("checkpoints")
                                .join(format!("perm-table-n{n}-p{prime}.json"))
                        })
                    });
                    if let Some(parent) = checkpoint.as_ref().and_then(|c| c.parent()) {
                        std::fs::create_dir_all(parent)?;
                    }
                    let opts = SymmetricOptions {
                        deadline: cli
                            .budget_seconds
                            .map(|s| Instant::now() + Duration::from_secs(s)),
                        checkpoint,
                    };
                    certify_perm_table(*n, prime, cli.seed, *extended, &opts)?
                }
                CertifyCommand::PermFiniteChar { n } => certify_perm_finite_char(*n, cli.seed)?,
            };
            emit_certificate(&cert, cli)
        }
        Command::VerifyCertificate { file } => {
            let cert = read_certificate(file)?;
            let report = verify_certificate(&cert)?;
            if cli.json {
                println!(
                    "{}",
                    to_json(&json!({
                        "file": file.display().to_string(),
                        "verdict": cert.verdict.to_string(),
                        "pass": report.pass,
                        "mismatches": report.mismatches,
                    }))?
                );
            } else if report.pass {
                println!("replay PASS ({}): {}", cert.verdict, cert.claim);
            } else {
                println!("replay FAIL ({} mismatches):", report.mismatches.len());
                for m in &report.mismatches {
                    println!("  {m}");
                }
            }
            Ok(if report.pass && cert.verdict != Verdict::Failed { 0 } else { 1 })
        }
        Command::VerifyDecomposition { tensor, n, terms } => {
            let t = load_tensor(tensor, *n)?;
            let parsed = decomposition_from_text(&std::fs::read_to_string(terms)?)?;
            let ok = verify_decomposition(&t, &parsed)?;
            if cli.json {
                println!(
                    "{}",
                    to_json(&json!({
                        "tensor": tensor,
                        "terms": parsed.len(),
                        "verified": ok,
                    }))?
                );
            } else if ok {
                println!("decomposition verified: {} rank-one terms sum to the tensor", parsed.len());
            } else {
                println!("decomposition REJECTED: the terms do not sum to the tensor");
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_)
        | Error::ShapeMismatch(_)
        | Error::BadPrime { .. }
        | Error::TooLarge(_)
        | Error::Parse(_)
        | Error::Io(_) => 2,
        Error::BudgetExceeded(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: could not configure {t} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
