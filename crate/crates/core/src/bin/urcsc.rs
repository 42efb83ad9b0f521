use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use urcsc::gateway::{self, GatewayConfig, LinkView, SubmitRequest};
use urcsc::orchestrator::{load_scenario, RequestOutcome, Status};

#[derive(Parser)]
#[command(name = "urcsc", version, about = "Request-driven control loop for a semantic-communication link")]
struct Cli {
    /// Gateway config file (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP gateway.
    Serve {
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<String>,
    },
    /// Submit one request and print the outcome as JSON.
    Request {
        text: String,
        #[arg(long, default_value = "cli")]
        user: String,
        /// Run the control loop in-process instead of calling a gateway.
        #[arg(long, conflicts_with = "url")]
        embedded: bool,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
    },
    /// Replay a JSONL scenario in-process.
    Replay {
        file: PathBuf,
        /// Write the full report here instead of printing outcomes.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the links with their current metrics.
    State {
        #[arg(long, conflicts_with = "url")]
        embedded: bool,
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        url: String,
    },
    /// Validate seed, anchors and lexicon and print a summary.
    SeedCheck,
}

fn exit_code(status: Status) -> u8 {
    match status {
        Status::Applied | Status::Saturated => 0,
        Status::Unrecognized => 2,
        Status::Conflicted => 3,
        Status::Rejected => 4,
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<GatewayConfig, String> {
    match path {
        Some(p) => GatewayConfig::load(p).map_err(|e| e.to_string()),
        None => Ok(GatewayConfig::default()),
    }
}

fn print_json(v: &impl serde::Serialize) {
    use std::io::Write;
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn http_client() -> Result<reqwest::blocking::Client, String> {
    reqwest::blocking::Client::builder()
        .build()
        .map_err(|e| e.to_string())
}

fn http_error(url: &str, e: reqwest::Error) -> String {
    if e.is_connect() {
        format!("connection refused: no gateway at {url}")
    } else {
        e.to_string()
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    let mut cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Serve { listen } => {
            if let Some(l) = listen {
                cfg.listen = l;
            }
            gateway::serve(cfg).map_err(|e| e.to_string())?;
            Ok(0)
        }
        Command::Request {
            text,
            user,
            embedded,
            url,
        } => {
            let outcome: RequestOutcome = if embedded {
                let orch = gateway::build_orchestrator(&cfg).map_err(|e| e.to_string())?;
                orch.handle_request(&user, &text)
            } else {
                let endpoint = format!("{}/api/v1/requests", url.trim_end_matches('/'));
                let resp = http_client()?
                    .post(&endpoint)
                    .json(&SubmitRequest { user_id: user, text })
                    .send()
                    .map_err(|e| http_error(&url, e))?;
                if !resp.status().is_success() {
                    let status = resp.status();
                    return Err(format!("{status}: {}", resp.text().unwrap_or_default()));
                }
                resp.json().map_err(|e| e.to_string())?
            };
            print_json(&outcome);
            Ok(exit_code(outcome.status))
        }
        Command::Replay { file, report } => {
            let lines = load_scenario(&file).map_err(|e| e.to_string())?;
            let orch = gateway::build_orchestrator(&cfg).map_err(|e| e.to_string())?;
            let r = orch.replay(&lines).map_err(|e| e.to_string())?;
            match report {
                Some(path) => {
                    let text = serde_json::to_string_pretty(&r).expect("serializable");
                    std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
                    let trajectory: Vec<_> = r
                        .outcomes
                        .iter()
                        .filter_map(|o| o.after.as_ref())
                        .map(|m| json!({"depth": m.depth, "accuracy": m.accuracy, "latency_ms": m.latency_ms}))
                        .collect();
                    print_json(&json!({"report": path, "trajectory": trajectory}));
                }
                None => print_json(&r.outcomes),
            }
            Ok(0)
        }
        Command::State { embedded, url } => {
            let views: Vec<LinkView> = if embedded {
                let orch = gateway::build_orchestrator(&cfg).map_err(|e| e.to_string())?;
                orch.links()
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|link| {
                        let metrics = orch.metrics_for(&link, orch.now_ms()).map_err(|e| e.to_string())?;
                        Ok(LinkView { link, metrics })
                    })
                    .collect::<Result<_, String>>()?
            } else {
                let endpoint = format!("{}/api/v1/links", url.trim_end_matches('/'));
                http_client()?
                    .get(&endpoint)
                    .send()
                    .map_err(|e| http_error(&url, e))?
                    .json()
                    .map_err(|e| e.to_string())?
            };
            print_json(&views);
            Ok(0)
        }
        Command::SeedCheck => {
            let orch = gateway::build_orchestrator(&cfg).map_err(|e| e.to_string())?;
            let db = orch.store().snapshot();
            let tables: serde_json::Map<_, _> = db
                .tables()
                .map(|t| (t.schema.name.clone(), json!(t.rows.len())))
                .collect();
            let (lo, hi) = orch.codec().depth_bounds();
            print_json(&json!({
                "ok": true,
                "tables": tables,
                "links": orch.links().map_err(|e| e.to_string())?,
                "codec_depths": [lo, hi],
                "linked_columns": orch.linkage().columns_of("links"),
            }));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
