//! Reference generator peer: answers every request on stdin with the request
//! image and a mask from `--mask` (default `full`), or listens on TCP with
//! `--listen`.

use std::io::{self, BufReader, BufWriter};
use std::net::TcpListener;
use std::process::ExitCode;

use clap::Parser;
use fsg_core::pipeline::mocks::{EchoGenerator, MaskRule};
use fsg_core::pipeline::wire::serve;

#[derive(Parser)]
#[command(name = "fsg-echo-peer", version)]
struct Args {
    /// `full` or `ellipse:cx,cy,rx,ry[,hair]`.
    #[arg(long, default_value = "full")]
    mask: String,
    /// Serve one TCP connection at this address instead of stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FSG_LOG", "warn")).init();
    let args = Args::parse();
    let rule = match MaskRule::parse(&args.mask) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("fsg-echo-peer: {e}");
            return ExitCode::from(3);
        }
    };
    let mut gen = EchoGenerator::new(rule);
    let result = match &args.listen {
        None => serve(
            &mut BufReader::new(io::stdin().lock()),
            &mut BufWriter::new(io::stdout().lock()),
            &mut gen,
        ),
        Some(addr) => (|| {
            let listener = TcpListener::bind(addr)?;
            eprintln!("listening on {}", listener.local_addr()?);
            let (stream, _) = listener.accept()?;
            let mut reader = BufReader::new(stream.try_clone()?);
            serve(&mut reader, &mut BufWriter::new(stream), &mut gen)
        })(),
    };
    match result {
        Ok(n) => {
            log::info!("served {n} requests");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fsg-echo-peer: {e}");
            ExitCode::from(5)
        }
    }
}
