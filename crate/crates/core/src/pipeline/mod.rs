//! Generator contract, wire protocol, mock generators and swap orchestration.

pub mod external;
mod generator;
pub mod mocks;
pub mod swap;
pub mod warp;
pub mod wire;

use std::time::Duration;

pub use generator::{
    Conditioning, GenRequest, GenResponse, Generator, GeneratorHandle, HandleKind, Role,
};
pub use swap::{
    densify, swap, swap_sequence, Generators, SourceFace, SwapConfig, SwapOutput, TargetFrame,
};

use crate::error::{Error, Result};
use external::ExternalGenerator;
use mocks::{ConstantGenerator, EchoGenerator, MaskRule, MeanFillGenerator, NoiseGenerator};

/// Default amplitude of `mock:noise`.
pub const NOISE_AMPLITUDE: f32 = 0.01;

/// Opens a generator from an endpoint string:
///
/// - `mock:echo[:<mask rule>]`
/// - `mock:noise:<seed>[:<amplitude>[:<mask rule>]]`
/// - `mock:constant`
/// - `mock:fill`
/// - `exec:<program> [args...]` (whitespace separated)
/// - `tcp:<host>:<port>`
///
/// Mask rules are `full` or `ellipse:cx,cy,rx,ry[,hair]`.
pub fn open_endpoint(spec: &str, timeout: Duration) -> Result<GeneratorHandle> {
    let (scheme, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::invalid(format!("endpoint {spec:?} has no scheme")))?;
    match scheme {
        "mock" => {
            let (name, args) = rest.split_once(':').unwrap_or((rest, ""));
            let handle = match name {
                "echo" => {
                    let rule = if args.is_empty() {
                        MaskRule::Full
                    } else {
                        MaskRule::parse(args)?
                    };
                    GeneratorHandle::mock(spec, EchoGenerator::new(rule))
                }
                "noise" => {
                    let mut parts = args.splitn(3, ':');
                    let seed = parts
                        .next()
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| Error::invalid("mock:noise needs a seed"))?
                        .parse::<u64>()
                        .map_err(|_| Error::invalid(format!("bad noise seed in {spec:?}")))?;
                    let amplitude = match parts.next() {
                        Some(a) => a.parse::<f32>().map_err(|_| {
                            Error::invalid(format!("bad noise amplitude in {spec:?}"))
                        })?,
                        None => NOISE_AMPLITUDE,
                    };
                    let rule = parts
                        .next()
                        .map(MaskRule::parse)
                        .transpose()?
                        .unwrap_or(MaskRule::Full);
                    GeneratorHandle::mock(spec, NoiseGenerator::new(seed, amplitude, rule))
                }
                "constant" if args.is_empty() => GeneratorHandle::mock(spec, ConstantGenerator),
                "fill" if args.is_empty() => GeneratorHandle::mock(spec, MeanFillGenerator),
                _ => return Err(Error::invalid(format!("unknown mock endpoint {spec:?}"))),
            };
            Ok(handle)
        }
        "exec" => {
            let mut words = rest.split_whitespace();
            let program = words
                .next()
                .ok_or_else(|| Error::invalid("exec endpoint needs a program"))?;
            let args: Vec<String> = words.map(str::to_string).collect();
            Ok(GeneratorHandle::new(
                HandleKind::ExternalProcess(spec.to_string()),
                ExternalGenerator::spawn(program, &args, timeout)?,
            ))
        }
        "tcp" => Ok(GeneratorHandle::new(
            HandleKind::ExternalProcess(spec.to_string()),
            ExternalGenerator::connect(rest, timeout)?,
        )),
        _ => Err(Error::invalid(format!(
            "unknown endpoint scheme {scheme:?}"
        ))),
    }
}
