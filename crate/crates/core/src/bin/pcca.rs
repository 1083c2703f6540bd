use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pcca::attack::{build_atoms, recover, sparsify_atoms};
use pcca::bam_check::{bam_suite, CheckMode, Outcome};
use pcca::io::{self, ImageFormat, MaterialFile, RunReport};
use pcca::{worked_example, Cipher, CipherSpec, DecryptionOracle, Error, FixtureOracle, KeySeed};
use pcca::{CipherOracle, ModImage, RoundMaterial, Schedule};

const EXIT_IO: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FORMAT: u8 = 3;
const EXIT_DIMENSION: u8 = 4;
const EXIT_MISMATCH: u8 = 5;

#[derive(Parser)]
#[command(
    name = "pcca",
    version,
    about = "Image ciphers over Z_G and a keyless chosen-ciphertext attack"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive round material from a seed and write it as JSON.
    Keygen {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encrypt an image.
    Encrypt(CryptArgs),
    /// Decrypt an image.
    Decrypt(CryptArgs),
    /// Query an oracle LL+1 times and save the atoms.
    BuildAtoms {
        #[command(flatten)]
        key: KeyArgs,
        /// Answer queries from a transcript of `cipher-csv -> plain-csv` lines instead of a local cipher.
        #[arg(long, conflicts_with = "seed")]
        fixture: Option<PathBuf>,
        /// Ciphertext dims.
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        atoms: PathBuf,
        #[arg(long)]
        sparse: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Recover a plaintext from a ciphertext and saved atoms, without any queries.
    Recover {
        #[arg(long)]
        atoms: PathBuf,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        format: Option<ImageFormat>,
    },
    /// Probe a preset's Δ-map for bijectivity, additivity and multiplicability.
    Check {
        #[command(flatten)]
        key: KeyArgs,
        #[arg(long, default_value_t = 1)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        width: usize,
        /// Modulus G of the probe (small G allows exhaustive checks).
        #[arg(long, default_value_t = 4)]
        modulus: u64,
        /// Random trials instead of exhaustive enumeration.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        trial_seed: u64,
    },
    /// Replay the nine-pixel worked example from its ten recorded oracle answers.
    Demo,
}

#[derive(Args)]
struct KeyArgs {
    #[arg(long, default_value = "basic")]
    preset: String,
    /// Key seed as lowercase hex.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value = "logistic-sine")]
    schedule: Schedule,
    /// Bit depth: 8 (G=256) or 16 (G=65536).
    #[arg(long, default_value_t = 8)]
    depth: u32,
}

#[derive(Args)]
struct CryptArgs {
    #[command(flatten)]
    key: KeyArgs,
    /// Round material from `keygen` instead of a seed.
    #[arg(long, conflicts_with = "seed")]
    material: Option<PathBuf>,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Image dims, needed for raw input.
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    format: Option<ImageFormat>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Format(_) => EXIT_FORMAT,
            Error::Dimension(_) => EXIT_DIMENSION,
            Error::Lookup(_) | Error::Seed(_) | Error::Domain(_) | Error::Scale(_) => EXIT_USAGE,
            _ => EXIT_IO,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn mismatch(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_MISMATCH,
        message: message.into(),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl KeyArgs {
    fn spec(&self) -> CliResult<CipherSpec> {
        let mut spec = pcca::preset(&self.preset)?.with_modulus(io::modulus_for_depth(self.depth)?);
        if let Some(n) = self.rounds {
            spec = spec.with_rounds(n);
        }
        Ok(spec)
    }

    fn seed(&self) -> CliResult<KeySeed> {
        let hex = self
            .seed
            .as_deref()
            .ok_or_else(|| Error::Seed("--seed is required".into()))?;
        Ok(KeySeed::from_hex(hex)?)
    }
}

fn dims_of(h: Option<usize>, w: Option<usize>) -> CliResult<Option<(usize, usize)>> {
    match (h, w) {
        (Some(h), Some(w)) => Ok(Some((h, w))),
        (None, None) => Ok(None),
        _ => Err(Error::Domain("--height and --width go together".into()).into()),
    }
}

fn format_of(path: &Path, flag: Option<ImageFormat>) -> ImageFormat {
    flag.unwrap_or_else(|| ImageFormat::from_path(path))
}

fn emit(report: &RunReport) -> CliResult<()> {
    report.emit(&mut std::io::stdout().lock())?;
    Ok(())
}

fn load_material(
    args: &CryptArgs,
    spec: &CipherSpec,
    plain_dims: (usize, usize),
) -> CliResult<(RoundMaterial, Option<String>)> {
    match &args.material {
        Some(path) => {
            let file = MaterialFile::load(path)?;
            Ok((file.to_material()?, Some(file.seed_digest)))
        }
        None => {
            let seed = args.key.seed()?;
            let m = spec.derive_material(args.key.schedule, &seed, plain_dims.0, plain_dims.1)?;
            Ok((m, Some(seed.fingerprint())))
        }
    }
}

fn crypt(args: &CryptArgs, encrypt: bool) -> CliResult<()> {
    let start = Instant::now();
    let spec = args.key.spec()?;
    let fmt = format_of(&args.input, args.format);
    let input = io::read_image(
        &args.input,
        fmt,
        dims_of(args.height, args.width)?,
        spec.modulus,
    )?;
    let plain_dims = if encrypt {
        input.dims()
    } else {
        spec.plaintext_dims(input.height(), input.width())?
    };
    let (material, digest) = load_material(args, &spec, plain_dims)?;
    let cipher = Cipher::new(&spec, &material)?;
    let out = if encrypt {
        cipher.encrypt(&input)?
    } else {
        cipher.decrypt(&input)?
    };
    io::write_image(&args.output, format_of(&args.output, args.format), &out)?;
    emit(&RunReport {
        command: if encrypt { "encrypt" } else { "decrypt" }.into(),
        preset: Some(spec.name.clone()),
        schedule: Some(args.key.schedule.name().into()),
        height: out.height(),
        width: out.width(),
        modulus: spec.modulus,
        rounds: Some(spec.rounds),
        seed_digest: digest,
        success: true,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Keygen {
            key,
            height,
            width,
            output,
        } => {
            let start = Instant::now();
            let spec = key.spec()?;
            let seed = key.seed()?;
            let material = spec.derive_material(key.schedule, &seed, height, width)?;
            MaterialFile::from_material(
                &spec.name,
                key.schedule.name(),
                &seed.fingerprint(),
                &material,
            )
            .save(&output)?;
            emit(&RunReport {
                command: "keygen".into(),
                preset: Some(spec.name),
                schedule: Some(key.schedule.name().into()),
                height,
                width,
                modulus: spec.modulus,
                rounds: Some(spec.rounds),
                seed_digest: Some(seed.fingerprint()),
                success: true,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                ..Default::default()
            })
        }
        Command::Encrypt(args) => crypt(&args, true),
        Command::Decrypt(args) => crypt(&args, false),
        Command::BuildAtoms {
            key,
            fixture,
            height,
            width,
            atoms,
            sparse,
            jobs,
        } => {
            let start = Instant::now();
            let dims = dims_of(height, width)?;
            let modulus = io::modulus_for_depth(key.depth)?;
            let (built, queries, report_base) = if let Some(path) = fixture {
                let oracle = FixtureOracle::load(&path, modulus, dims, None)?;
                let a = build_atoms(&oracle, jobs)?;
                let q = oracle.queries();
                (
                    a,
                    q,
                    RunReport {
                        preset: None,
                        ..Default::default()
                    },
                )
            } else {
                let spec = key.spec()?;
                let seed = key.seed()?;
                let (h, w) = dims.ok_or_else(|| {
                    Error::Domain("--height and --width are required for a local oracle".into())
                })?;
                let (ph, pw) = spec.plaintext_dims(h, w)?;
                let material = spec.derive_material(key.schedule, &seed, ph, pw)?;
                let oracle = CipherOracle::new(Cipher::new(&spec, &material)?);
                let a = build_atoms(&oracle, jobs)?;
                let q = oracle.queries();
                (
                    a,
                    q,
                    RunReport {
                        preset: Some(spec.name.clone()),
                        schedule: Some(key.schedule.name().into()),
                        rounds: Some(spec.rounds),
                        seed_digest: Some(seed.fingerprint()),
                        ..Default::default()
                    },
                )
            };
            let built = if sparse {
                sparsify_atoms(&built, None).0
            } else {
                built
            };
            io::save_atoms(&atoms, &built)?;
            let density = built.density();
            let (h, w) = built.ciphertext_dims();
            emit(&RunReport {
                command: "build-atoms".into(),
                height: h,
                width: w,
                modulus: built.modulus(),
                queries,
                nnz_total: Some(density.nnz_total),
                nnz_max: Some(density.nnz_max),
                success: queries == (h * w) as u64 + 1,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                ..report_base
            })
        }
        Command::Recover {
            atoms,
            input,
            output,
            format,
        } => {
            let start = Instant::now();
            let atoms = io::load_atoms(&atoms)?;
            let c = io::read_image(
                &input,
                format_of(&input, format),
                Some(atoms.ciphertext_dims()),
                atoms.modulus(),
            )?;
            let m: ModImage = recover(&atoms, &c)?;
            io::write_image(&output, format_of(&output, format), &m)?;
            let density = atoms.density();
            emit(&RunReport {
                command: "recover".into(),
                height: m.height(),
                width: m.width(),
                modulus: m.modulus(),
                queries: 0,
                nnz_total: Some(density.nnz_total),
                nnz_max: Some(density.nnz_max),
                success: true,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
                ..Default::default()
            })
        }
        Command::Check {
            key,
            height,
            width,
            modulus,
            trials,
            trial_seed,
        } => {
            let mut spec = pcca::preset(&key.preset)?.with_modulus(modulus);
            if let Some(n) = key.rounds {
                spec = spec.with_rounds(n);
            }
            let seed = match &key.seed {
                Some(_) => key.seed()?,
                None => KeySeed::from_u64(0),
            };
            let probe_spec = spec.network_only();
            let material = probe_spec.derive_material(key.schedule, &seed, height, width)?;
            let mode = match trials {
                Some(trials) => CheckMode::Sampled {
                    trials,
                    seed: trial_seed,
                },
                None => CheckMode::Exhaustive,
            };
            let verdicts = bam_suite(&probe_spec, &material, mode)?;
            let mut out = std::io::stdout().lock();
            for v in &verdicts {
                let line = serde_json::to_string(v).map_err(|e| Error::Format(e.to_string()))?;
                writeln!(out, "{line}").map_err(Error::from)?;
            }
            if verdicts.iter().any(|v| v.outcome == Outcome::Fail) {
                return Err(mismatch(format!("{}: a property check failed", spec.name)));
            }
            Ok(())
        }
        Command::Demo => {
            let t = worked_example::run()?;
            println!("{t}");
            if t.passed() {
                Ok(())
            } else {
                Err(mismatch("worked example does not reproduce"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pcca: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
