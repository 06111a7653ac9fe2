use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use judge::package::load_package;
use judge::pipeline::{score_verdict, Judge, Verdict};
use judge::replay::{replay_file, to_csv};
use judge::sandbox::SandboxConfig;
use judge::service::config::Settings;
use judge::service::http::{router, AppState};
use judge::service::Service;
use judge::toolchain::Registry;
use judge_core::facility::gen_facility;
use judge_core::model::{Bytes, SourceFile};
use judge_core::scoring::BestTable;
use judge_core::{AggregateResult, ExecutionStatus, Payload, Problem, Submission};

const EXIT_ACC: u8 = 0;
const EXIT_REJECTED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFRA: u8 = 3;

/// Online judge: local judging, the HTTP service, facility instances and
/// contest replays.
#[derive(Parser)]
#[command(name = "judge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Judge one submission against a problem package.
    Run {
        #[arg(short = 'p', long = "problem")]
        problem: PathBuf,
        #[arg(short = 's', long = "source")]
        source: PathBuf,
        /// Toolchain id, or `binary` for a prebuilt static executable.
        #[arg(short = 'l', long = "language")]
        language: String,
        /// Print the aggregate result as canonical JSON.
        #[arg(long)]
        json: bool,
        /// Toolchain registry to use instead of the built-in one.
        #[arg(long)]
        toolchains: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        /// Port to listen on (default 8080, 0 picks a free one).
        #[arg(long)]
        port: Option<u16>,
        /// Journal and snapshot directory (default ./judge-data).
        #[arg(long = "data")]
        data: Option<PathBuf>,
        /// Judging threads (default 2).
        #[arg(long)]
        workers: Option<usize>,
        /// TOML settings file, overridden by flags.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Package directories to register at startup.
        #[arg(long = "load")]
        load: Vec<PathBuf>,
        /// Directory served under /ui.
        #[arg(long = "ui")]
        ui: Option<PathBuf>,
    },
    /// Write a random facility-location instance.
    GenFacility {
        width: u32,
        height: u32,
        factories: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
    },
    /// Rebuild the daily contest series from a journal.
    Replay {
        journal: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Problem to report when the journal holds several.
        #[arg(long)]
        problem: Option<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn infra(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INFRA,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            problem,
            source,
            language,
            json,
            toolchains,
        } => run(&problem, &source, &language, json, toolchains.as_deref()),
        Command::Serve {
            port,
            data,
            workers,
            config,
            load,
            ui,
        } => {
            let flags = Settings {
                port,
                data_dir: data,
                workers,
                ui_dir: ui,
                load,
                ..Settings::default()
            };
            serve(flags, config.as_deref())
        }
        Command::GenFacility {
            width,
            height,
            factories,
            seed,
            output,
        } => gen(width, height, factories, seed, &output),
        Command::Replay {
            journal,
            output,
            plot,
            problem,
        } => replay_cmd(&journal, &output, plot.as_deref(), problem.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("judge: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_submission(source: &Path, language: &str, problem: &Problem) -> Result<Submission, Failure> {
    let data = fs::read(source).map_err(|e| usage(format!("{}: {e}", source.display())))?;
    let payload = if language == "binary" {
        Payload::StaticBinary(Bytes(data))
    } else {
        let name = source
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "main".into());
        Payload::Source {
            language_id: language.to_string(),
            files: vec![SourceFile {
                name,
                content: Bytes(data),
            }],
        }
    };
    Ok(Submission {
        id: "local".into(),
        problem_id: problem.id.clone(),
        user_id: "local".into(),
        payload,
        submitted_at: 0,
    })
}

fn run(
    problem_dir: &Path,
    source: &Path,
    language: &str,
    json: bool,
    toolchains: Option<&Path>,
) -> Result<u8, Failure> {
    let registry = match toolchains {
        Some(path) => Registry::load(path).map_err(usage)?,
        None => Registry::default(),
    };
    if language != "binary" && registry.get(language).is_none() {
        return Err(usage(format!(
            "unknown language `{language}` (known: binary, {})",
            registry.language_ids().collect::<Vec<_>>().join(", ")
        )));
    }
    let problem = load_package(problem_dir).map_err(usage)?;
    let submission = read_submission(source, language, &problem)?;
    let judge = Judge::new(SandboxConfig::default(), registry).map_err(infra)?;
    let prepared = judge.prepare(problem.clone()).map_err(infra)?;
    let verdict = judge.judge(&prepared, &submission).map_err(infra)?;
    let mut best = BestTable::for_problem(&problem);
    let result = score_verdict(&problem, &submission.id, &verdict, &mut best).map_err(infra)?;
    let mut out = std::io::stdout().lock();
    // A closed stdout must not turn a verdict into a crash.
    let _ = if json {
        writeln!(out, "{}", serde_json::to_string(&result).expect("result encodes"))
    } else {
        print_human(&mut out, &problem, &result)
    };
    drop(out);
    if let Verdict::CompileError { log } = &verdict {
        eprintln!("{log}");
    }
    Ok(if result.status == ExecutionStatus::Accepted {
        EXIT_ACC
    } else {
        EXIT_REJECTED
    })
}

fn print_human(out: &mut impl Write, problem: &Problem, result: &AggregateResult) -> std::io::Result<()> {
    let first_failure = result.per_instance.iter().find(|o| o.status == result.status && !o.status.is_accepted());
    match first_failure {
        Some(o) => writeln!(out, "{} on instance {}", result.status, o.instance_id)?,
        None => writeln!(out, "{}", result.status)?,
    }
    writeln!(out, "score {}", result.score.to_decimal())?;
    for o in &result.per_instance {
        let mut line = format!("  #{:<3} {:<4}", o.instance_id, o.status.code());
        if let Some(s) = &o.stats {
            line.push_str(&format!(
                " {:>6} ms {:>8.1} MiB",
                s.cpu_time,
                s.peak_memory as f64 / (1 << 20) as f64
            ));
        }
        if problem.shows_instance_scores() || !o.score.is_zero() {
            line.push_str(&format!("  v={}", o.score.to_decimal()));
        }
        if let Some(d) = &o.detail {
            line.push_str(&format!("  {d}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn serve(flags: Settings, config_file: Option<&Path>) -> Result<u8, Failure> {
    let mut settings = Settings::from_env().map_err(usage)?;
    if let Some(path) = config_file {
        settings = settings.overlay(Settings::from_file(path).map_err(usage)?);
    }
    let settings = settings.overlay(flags);
    let config = settings.service_config().map_err(usage)?;
    let admin_token = match settings.admin_token.clone() {
        Some(t) => t,
        None => {
            let token = random_token().map_err(infra)?;
            eprintln!("admin token: {token}");
            token
        }
    };
    let service = Arc::new(Service::start(config).map_err(infra)?);
    for dir in &settings.load {
        let (id, _) = service.register_package(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        eprintln!("loaded problem {id}");
    }
    let app = router(
        AppState {
            service: service.clone(),
            admin_token,
        },
        settings.ui_dir.clone(),
    );
    let runtime = tokio::runtime::Runtime::new().map_err(infra)?;
    let port = settings.port.unwrap_or(8080);
    let served = runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
        println!("listening on port {}", listener.local_addr()?.port());
        let _ = std::io::stdout().flush();
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    });
    service.shutdown();
    served.map_err(infra)?;
    Ok(EXIT_ACC)
}

fn random_token() -> std::io::Result<String> {
    use std::io::Read;
    let mut bytes = [0u8; 16];
    fs::File::open("/dev/urandom")?.read_exact(&mut bytes)?;
    Ok(bytes.iter().map(|b| format!("{b:02x}")).collect())
}

fn gen(width: u32, height: u32, k: usize, seed: u64, output: &Path) -> Result<u8, Failure> {
    let instance = gen_facility(width, height, k, seed).map_err(usage)?;
    fs::write(output, instance.to_input_string()).map_err(|e| infra(format!("{}: {e}", output.display())))?;
    Ok(EXIT_ACC)
}

fn replay_cmd(journal: &Path, output: &Path, plot: Option<&Path>, problem: Option<&str>) -> Result<u8, Failure> {
    if !journal.is_file() {
        return Err(usage(format!("{}: no such journal", journal.display())));
    }
    let series = replay_file(journal, problem).map_err(usage)?;
    fs::write(output, to_csv(&series)).map_err(|e| infra(format!("{}: {e}", output.display())))?;
    if let Some(path) = plot {
        fs::write(path, judge::plot::render_svg(&series)).map_err(|e| infra(format!("{}: {e}", path.display())))?;
    }
    Ok(EXIT_ACC)
}
