use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vqsim::bench::{emit_report, run_bench, BenchSpec, Format, Task};
use vqsim::{dump, text, Error, Result};
use vqsim_core::{gradient_mixed, gradient_pure, loss_mixed, loss_pure, MixedState, PureState, ThreadConfig};

#[derive(Parser)]
#[command(name = "vqsim", version, about = "State-vector and density-matrix circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time one benchmark task and write a report.
    Bench(BenchArgs),
    /// Simulate a circuit file from |0...0>.
    Run(RunArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// single-gate, rqc, rqc-grad, noisy-grad or thread-sweep.
    task: Task,
    /// Qubit counts, comma separated. Defaults to 12, or 6 for noisy-grad.
    #[arg(long, value_delimiter = ',')]
    qubits: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    depth: usize,
    /// Thread counts, comma separated. Defaults to VQSIM_NUM_THREADS or 1.
    #[arg(long, value_delimiter = ',')]
    threads: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "noise-p", default_value_t = 0.05)]
    noise_p: f64,
    /// Report file. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Check norms or gradients against finite differences as well.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Circuit in the GATE/CHANNEL text format.
    circuit: PathBuf,
    /// Register size. Defaults to the largest qubit the circuit touches.
    #[arg(long)]
    qubits: Option<usize>,
    /// Operator in the TERM text format; prints the loss.
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Also print the gradient with respect to the active parameters.
    #[arg(long, requires = "operator")]
    gradient: bool,
    /// Binary dump of the final state.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn bench(a: BenchArgs) -> Result<()> {
    let qubits = if a.qubits.is_empty() { vec![if a.task == Task::NoisyGrad { 6 } else { 12 }] } else { a.qubits };
    let threads = if a.threads.is_empty() { vec![ThreadConfig::from_env().num_threads] } else { a.threads };
    let mut records = Vec::new();
    for n in qubits {
        let spec = BenchSpec {
            task: a.task,
            num_qubits: n,
            depth: a.depth,
            threads: threads.clone(),
            repetitions: a.reps,
            seed: a.seed,
            noise_p: a.noise_p,
            verify: a.verify,
        };
        records.extend(run_bench(&spec)?);
    }
    let mut w = output(a.out.as_ref())?;
    emit_report(&records, a.format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let circuit = text::parse_circuit(&std::fs::read_to_string(&a.circuit)?)?;
    let op = a.operator.map(std::fs::read_to_string).transpose()?.map(|s| text::parse_operator(&s)).transpose()?;
    let n = a.qubits.unwrap_or(circuit.num_qubits().max(op.as_ref().map_or(0, |o| o.max_index())).max(1));
    let cfg = a.threads.map_or_else(ThreadConfig::from_env, ThreadConfig::new);
    let mut report = serde_json::Map::new();
    report.insert("qubits".into(), n.into());
    if circuit.has_channels() {
        let dm0 = MixedState::<f64>::new(n)?;
        if let Some(op) = &op {
            if a.gradient {
                let g = gradient_mixed(op, &circuit, &dm0, &cfg)?;
                report.insert("loss".into(), g.loss.into());
                report.insert("grads".into(), g.grads.into());
            } else {
                report.insert("loss".into(), loss_mixed(op, &circuit, &dm0, &cfg)?.into());
            }
        }
        if let Some(p) = &a.dump {
            let rho = circuit.applied(&dm0, &cfg)?;
            dump::write_mixed(&mut BufWriter::new(File::create(p)?), &rho)?;
        }
    } else {
        let s0 = PureState::<f64>::new(n)?;
        if let Some(op) = &op {
            if a.gradient {
                let g = gradient_pure(op, &circuit, &s0, &cfg)?;
                report.insert("loss".into(), g.loss.into());
                report.insert("grads".into(), g.grads.into());
            } else {
                report.insert("loss".into(), loss_pure(op, &circuit, &s0, &cfg)?.into());
            }
        }
        if let Some(p) = &a.dump {
            let s = circuit.applied(&s0, &cfg)?;
            dump::write_pure(&mut BufWriter::new(File::create(p)?), &s)?;
        }
    }
    println!("{}", serde_json::Value::Object(report));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}
