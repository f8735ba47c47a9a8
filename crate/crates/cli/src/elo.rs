//! `sbfl elo`: pairwise voting with a pool file that is rewritten after
//! every vote, so an interrupted session loses nothing.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};

use sbfl_core::elo::{EloError, EloParams, EloPool, Winner};

use crate::input::CliError;

#[derive(Args)]
pub struct EloArgs {
    /// Pool file
    #[arg(long)]
    pool: PathBuf,
    #[command(subcommand)]
    command: EloCommand,
}

#[derive(Subcommand)]
enum EloCommand {
    /// Create a pool from an items file (one label per line)
    Init {
        #[arg(long)]
        items: PathBuf,
        /// Seed for matchmaking
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32.0)]
        k: f64,
        #[arg(long, default_value_t = 400.0)]
        c: f64,
        /// Overwrite an existing pool file
        #[arg(long)]
        force: bool,
    },
    /// Vote on proposed pairs read from standard input: a, b, draw, or q to stop
    Vote {
        /// Stop after this many votes
        #[arg(long)]
        rounds: Option<u64>,
    },
    /// Print the current standings
    Standings,
}

pub fn run(args: EloArgs) -> Result<(), CliError> {
    match args.command {
        EloCommand::Init {
            items,
            seed,
            k,
            c,
            force,
        } => {
            if args.pool.exists() && !force {
                return Err(CliError::Usage(format!(
                    "{} already exists; pass --force to overwrite it",
                    args.pool.display()
                )));
            }
            let text =
                std::fs::read_to_string(&items).map_err(|e| CliError::Input(format!("{}: {e}", items.display())))?;
            let labels = text.lines().map(str::trim).filter(|l| !l.is_empty());
            let params = EloParams {
                k,
                c,
                seed,
                ..EloParams::default()
            };
            let pool = EloPool::new(params, labels).map_err(elo_error)?;
            save(&args.pool, &pool)?;
            println!("created {} with {} items", args.pool.display(), pool.items().len());
            Ok(())
        }
        EloCommand::Vote { rounds } => {
            let mut pool = load(&args.pool)?;
            let stdin = std::io::stdin();
            vote(&args.pool, &mut pool, stdin.lock(), rounds)
        }
        EloCommand::Standings => {
            let pool = load(&args.pool)?;
            print!("{}", standings(&pool));
            Ok(())
        }
    }
}

fn vote(path: &Path, pool: &mut EloPool, mut input: impl BufRead, limit: Option<u64>) -> Result<(), CliError> {
    let mut stdout = std::io::stdout();
    let mut recorded = 0u64;
    let mut line = String::new();
    'rounds: while limit.is_none_or(|n| recorded < n) {
        let (a, b) = pool.next_pair().map_err(elo_error)?;
        let label = |id| pool.item(id).map(|i| i.label.clone()).unwrap_or_default();
        let (label_a, label_b) = (label(a), label(b));
        let winner = loop {
            print!("a) {label_a}\nb) {label_b}\nwhich matters more? [a/b/draw/q] ");
            stdout.flush().map_err(|e| CliError::Internal(e.to_string()))?;
            line.clear();
            let read = input
                .read_line(&mut line)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            if read == 0 {
                println!();
                break 'rounds;
            }
            match line.trim().to_ascii_lowercase().as_str() {
                "a" => break Winner::A,
                "b" => break Winner::B,
                "d" | "draw" => break Winner::Draw,
                "q" | "quit" => break 'rounds,
                other => eprintln!("`{other}`: answer a, b, draw or q"),
            }
        };
        let delta = pool.record_match(a, b, winner).map_err(elo_error)?;
        save(path, pool)?;
        recorded += 1;
        println!("{label_a} {:+.1}, {label_b} {:+.1}", delta.a, delta.b);
    }
    println!("recorded {recorded} vote(s); {} in total", pool.rounds());
    Ok(())
}

fn standings(pool: &EloPool) -> String {
    let mut out = String::from("rank  rating  matches  item\n");
    for (i, row) in pool.standings().iter().enumerate() {
        out.push_str(&format!(
            "{:>4}  {:>6.1}  {:>7}  {}\n",
            i + 1,
            row.rating,
            row.matches_played,
            row.label
        ));
    }
    out
}

fn load(path: &Path) -> Result<EloPool, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    EloPool::from_text(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn save(path: &Path, pool: &EloPool) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, pool.to_text())
        .and_then(|()| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn elo_error(err: EloError) -> CliError {
    CliError::Input(err.to_string())
}
