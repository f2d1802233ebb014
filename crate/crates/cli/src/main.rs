/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($arg)*).map_err(vcodec::Error::from)?
    }};
}

mod codec_cmds;
mod output;
mod sim_cmds;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vcodec::Error;

#[derive(Parser, Debug)]
#[command(name = "vcodec", version, about = "Lossy tensor compression with an intra-only video codec pipeline")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a seeded synthetic tensor.
    Gen(codec_cmds::GenArgs),
    /// Compress a tensor file into a bitstream.
    Compress(codec_cmds::CompressArgs),
    /// Decompress a bitstream back into a tensor file.
    Decompress(codec_cmds::DecompressArgs),
    /// Rate and distortion over a list of qp values.
    Sweep(codec_cmds::SweepArgs),
    /// Bits per value of each stage combination at a target MSE.
    Ablate(codec_cmds::AblateArgs),
    /// Residual-compensated gradient compression over a step schedule.
    GradSim(codec_cmds::GradSimArgs),
    /// Distributed memory accounting and compression simulation.
    DistSim(sim_cmds::DistSimArgs),
    /// Analytical energy and speedup model.
    HwModel(sim_cmds::HwModelArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 2,
        Error::Infeasible(_) => 4,
        e if e.is_bad_input() => 3,
        _ => 1,
    }
}

fn kind(code: u8) -> &'static str {
    match code {
        2 => "usage",
        3 => "bad-input",
        4 => "infeasible",
        _ => "failed",
    }
}

fn one_line(msg: &str) -> String {
    msg.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("bad arguments");
            eprintln!("error[usage]: {}", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error[usage]: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Fails only if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let meta = output::meta(&argv);
    let result = match cli.command {
        Command::Gen(a) => codec_cmds::gen(a),
        Command::Compress(a) => codec_cmds::compress(a, &meta),
        Command::Decompress(a) => codec_cmds::decompress(a),
        Command::Sweep(a) => codec_cmds::sweep(a, &meta),
        Command::Ablate(a) => codec_cmds::ablate(a, &meta),
        Command::GradSim(a) => codec_cmds::grad_sim(a, &meta),
        Command::DistSim(a) => sim_cmds::dist_sim(a, &meta),
        Command::HwModel(a) => sim_cmds::hw_model(a, &meta),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error[{}]: {}", kind(code), one_line(&e.to_string()));
            ExitCode::from(code)
        }
    }
}
