//! Benchmark harness: seeded random circuits, timing runs and reports.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vqsim_core::linalg::standard_normal;
use vqsim_core::observables::heisenberg_1d;
use vqsim_core::{
    finite_difference_gradient, gradient_mixed, gradient_pure, loss_mixed, loss_pure, ChannelOp, Circuit, GateOp,
    MixedState, PureState, ThreadConfig,
};

use crate::{Error, Result};

/// Largest register for the pure-state tasks.
pub const MAX_PURE_QUBITS: usize = 24;
/// Largest register for the noisy tasks, which simulate `2n` pseudo qubits.
pub const MAX_NOISY_QUBITS: usize = 14;
/// Tolerance of the `--verify` gradient check against finite differences.
pub const VERIFY_GRAD_TOL: f64 = 1e-6;
/// Tolerance of the `--verify` norm check.
pub const VERIFY_NORM_TOL: f64 = 1e-10;
/// Largest difference allowed between final states of a thread sweep.
pub const SWEEP_AGREEMENT_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    SingleGate,
    Rqc,
    RqcGrad,
    NoisyGrad,
    ThreadSweep,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::SingleGate, Task::Rqc, Task::RqcGrad, Task::NoisyGrad, Task::ThreadSweep];

    pub fn name(self) -> &'static str {
        match self {
            Task::SingleGate => "single-gate",
            Task::Rqc => "rqc",
            Task::RqcGrad => "rqc-grad",
            Task::NoisyGrad => "noisy-grad",
            Task::ThreadSweep => "thread-sweep",
        }
    }

    fn max_qubits(self) -> usize {
        match self {
            Task::NoisyGrad => MAX_NOISY_QUBITS,
            _ => MAX_PURE_QUBITS,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| Error::Usage(format!("unknown task `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Usage(format!("unknown report format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub task: Task,
    pub num_qubits: usize,
    pub depth: usize,
    pub threads: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    /// Depolarizing strength for `noisy-grad`.
    pub noise_p: f64,
    pub verify: bool,
}

impl BenchSpec {
    pub fn new(task: Task, num_qubits: usize, depth: usize) -> Self {
        BenchSpec { task, num_qubits, depth, threads: vec![1], repetitions: 10, seed: 0, noise_p: 0.05, verify: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Usage("repetitions must be at least 1".into()));
        }
        if self.threads.is_empty() || self.threads.contains(&0) {
            return Err(Error::Usage("threads must be a nonempty list of positive counts".into()));
        }
        let min = if self.task == Task::SingleGate { 1 } else { 2 };
        if self.num_qubits < min || self.num_qubits > self.task.max_qubits() {
            return Err(Error::Usage(format!(
                "{} runs on {min} to {} qubits, got {}",
                self.task,
                self.task.max_qubits(),
                self.num_qubits
            )));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(Error::Usage(format!("noise strength {} outside [0, 1]", self.noise_p)));
        }
        Ok(())
    }
}

/// Timings of one task at one thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub task: String,
    pub num_qubits: usize,
    pub depth: usize,
    pub threads: usize,
    pub seed: u64,
    pub noise_p: Option<f64>,
    pub samples: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// Mean single-thread time over this record's mean (`thread-sweep` only).
    pub speedup: Option<f64>,
    /// Residual of the verification check, when one ran.
    pub check: Option<f64>,
}

impl BenchRecord {
    fn new(task: impl Into<String>, spec: &BenchSpec, depth: usize, threads: usize, samples: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&samples);
        BenchRecord {
            task: task.into(),
            num_qubits: spec.num_qubits,
            depth,
            threads,
            seed: spec.seed,
            noise_p: (spec.task == Task::NoisyGrad).then_some(spec.noise_p),
            samples,
            mean,
            std,
            speedup: None,
            check: None,
        }
    }
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Angle stream for one `(layer, qubit)` cell: ChaCha8 keyed by the seed,
/// with the cell selecting the stream, so cells are independent of each
/// other and of the circuit size. Angles are drawn by Box-Muller.
fn cell_rng(seed: u64, layer: usize, qubit: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((layer as u64) << 32) | qubit as u64);
    rng
}

fn rqc_layers(n: usize, depth: usize, seed: u64, noise: Option<f64>) -> Result<Circuit> {
    if n < 2 {
        return Err(vqsim_core::Error::Domain(format!("random circuits need at least 2 qubits, got {n}")).into());
    }
    let mut c = Circuit::new();
    for layer in 0..depth {
        for i in 1..n {
            c.push(GateOp::cnot(i, i + 1)?);
        }
        for i in 1..=n {
            let mut rng = cell_rng(seed, layer, i);
            let (ry, rx) = (standard_normal(&mut rng), standard_normal(&mut rng));
            c.push(GateOp::ry(i, ry, true));
            c.push(GateOp::rx(i, rx, true));
        }
        if let Some(p) = noise {
            for i in 1..=n {
                c.push(ChannelOp::depolarizing(i, p)?);
            }
        }
    }
    Ok(c)
}

/// Layers of a CNOT ladder followed by `Ry` and `Rx` on every qubit, all
/// rotations active with standard-normal angles. Reproducible for a fixed
/// `(n, depth, seed)`.
pub fn generate_rqc(n: usize, depth: usize, seed: u64) -> Result<Circuit> {
    rqc_layers(n, depth, seed, None)
}

/// [`generate_rqc`] with a depolarizing channel on each qubit after each layer.
pub fn generate_noisy_rqc(n: usize, depth: usize, seed: u64, p: f64) -> Result<Circuit> {
    rqc_layers(n, depth, seed, Some(p))
}

/// One untimed warm-up, then `reps` timed runs of `run` on fresh `setup()` input.
fn time<S, F, G>(reps: usize, mut setup: F, mut run: G) -> Result<Vec<f64>>
where
    F: FnMut() -> Result<S>,
    G: FnMut(S) -> Result<()>,
{
    run(setup()?)?;
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let input = setup()?;
        let t = Instant::now();
        run(input)?;
        samples.push(t.elapsed().as_secs_f64());
    }
    Ok(samples)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn single_gate(spec: &BenchSpec, cfg: &ThreadConfig, threads: usize) -> Result<Vec<BenchRecord>> {
    let n = spec.num_qubits;
    let cases: [(&str, Vec<GateOp>); 3] = [
        ("single-gate:H", (1..=n).map(GateOp::h).collect()),
        ("single-gate:Rx", (1..=n).map(|q| GateOp::rx(q, std::f64::consts::FRAC_PI_2, false)).collect()),
        ("single-gate:CNOT", (1..n).map(|q| GateOp::cnot(q, q + 1)).collect::<vqsim_core::Result<_>>()?),
    ];
    let mut out = Vec::new();
    for (name, gates) in cases {
        if gates.is_empty() {
            continue;
        }
        let mut state = PureState::<f64>::new(n)?;
        let samples = time(
            spec.repetitions,
            || Ok(()),
            |()| {
                for g in &gates {
                    vqsim_core::kernels::apply_gate_fast(&mut state, g, cfg)?;
                }
                Ok(())
            },
        )?;
        let per_gate = samples.into_iter().map(|s| s / gates.len() as f64).collect();
        out.push(BenchRecord::new(name, spec, 0, threads, per_gate));
    }
    Ok(out)
}

fn rqc(spec: &BenchSpec, c: &Circuit, cfg: &ThreadConfig, threads: usize) -> Result<BenchRecord> {
    let n = spec.num_qubits;
    let samples = time(spec.repetitions, || Ok(PureState::<f64>::new(n)?), |mut s| Ok(c.apply(&mut s, cfg)?))?;
    let mut rec = BenchRecord::new(Task::Rqc.name(), spec, spec.depth, threads, samples);
    if spec.verify {
        let s = c.applied(&PureState::<f64>::new(n)?, cfg)?;
        let dev = (s.norm() - 1.0).abs();
        if dev > VERIFY_NORM_TOL {
            return Err(Error::Verification(format!("final state norm is off by {dev:e}")));
        }
        rec.check = Some(dev);
    }
    Ok(rec)
}

fn rqc_grad(spec: &BenchSpec, c: &Circuit, cfg: &ThreadConfig, threads: usize) -> Result<BenchRecord> {
    let n = spec.num_qubits;
    let op = heisenberg_1d(n, 1.0, 1.0)?;
    let s0 = PureState::<f64>::new(n)?;
    let samples =
        time(spec.repetitions, || Ok(()), |()| gradient_pure(&op, c, &s0, cfg).map(drop).map_err(Into::into))?;
    let mut rec = BenchRecord::new(Task::RqcGrad.name(), spec, spec.depth, threads, samples);
    if spec.verify {
        let g = gradient_pure(&op, c, &s0, cfg)?.grads;
        let fd = finite_difference_gradient(&mut c.clone(), FD_STEP, |c| loss_pure(&op, c, &s0, cfg))?;
        rec.check = Some(check_grad(&g, &fd)?);
    }
    Ok(rec)
}

fn noisy_grad(spec: &BenchSpec, c: &Circuit, cfg: &ThreadConfig, threads: usize) -> Result<BenchRecord> {
    let n = spec.num_qubits;
    let op = heisenberg_1d(n, 1.0, 1.0)?;
    let dm0 = MixedState::<f64>::new(n)?;
    let samples =
        time(spec.repetitions, || Ok(()), |()| gradient_mixed(&op, c, &dm0, cfg).map(drop).map_err(Into::into))?;
    let mut rec = BenchRecord::new(Task::NoisyGrad.name(), spec, spec.depth, threads, samples);
    if spec.verify {
        let g = gradient_mixed(&op, c, &dm0, cfg)?.grads;
        let fd = finite_difference_gradient(&mut c.clone(), FD_STEP, |c| loss_mixed(&op, c, &dm0, cfg))?;
        rec.check = Some(check_grad(&g, &fd)?);
    }
    Ok(rec)
}

fn check_grad(g: &[f64], fd: &[f64]) -> Result<f64> {
    let err = max_abs_diff(g, fd);
    if err.is_nan() || err > VERIFY_GRAD_TOL {
        return Err(Error::Verification(format!("gradient differs from finite differences by {err:e}")));
    }
    Ok(err)
}

/// Final states of `c` under every thread count, checked against the
/// single-thread state. Returns the largest amplitude difference.
pub fn sweep_agreement(c: &Circuit, n: usize, threads: &[usize]) -> Result<f64> {
    let reference = c.applied(&PureState::<f64>::new(n)?, &ThreadConfig::serial())?;
    let mut worst = 0.0f64;
    for &t in threads {
        let s = c.applied(&PureState::<f64>::new(n)?, &ThreadConfig::new(t))?;
        worst = worst.max(s.max_abs_diff(&reference));
    }
    if worst > SWEEP_AGREEMENT_TOL {
        return Err(Error::Verification(format!("thread counts disagree by {worst:e}")));
    }
    Ok(worst)
}

fn thread_sweep(spec: &BenchSpec, c: &Circuit) -> Result<Vec<BenchRecord>> {
    let agreement = sweep_agreement(c, spec.num_qubits, &spec.threads)?;
    let run = |t: usize| -> Result<BenchRecord> {
        let mut rec = rqc(&BenchSpec { verify: false, ..spec.clone() }, c, &ThreadConfig::new(t), t)?;
        rec.task = Task::ThreadSweep.name().into();
        rec.check = Some(agreement);
        Ok(rec)
    };
    let base = run(1)?;
    let mut out = Vec::with_capacity(spec.threads.len());
    for &t in &spec.threads {
        let mut rec = if t == 1 { base.clone() } else { run(t)? };
        rec.speedup = Some(if t == 1 { 1.0 } else { base.mean / rec.mean });
        out.push(rec);
    }
    Ok(out)
}

/// Runs `spec` once per thread count. `thread-sweep` always measures the
/// single-thread baseline and reports speedups against it.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    spec.validate()?;
    let (n, depth, seed) = (spec.num_qubits, spec.depth, spec.seed);
    let circuit = match spec.task {
        Task::SingleGate => None,
        Task::NoisyGrad => Some(generate_noisy_rqc(n, depth, seed, spec.noise_p)?),
        _ => Some(generate_rqc(n, depth, seed)?),
    };
    if spec.task == Task::ThreadSweep {
        return thread_sweep(spec, circuit.as_ref().unwrap());
    }
    let mut out = Vec::new();
    for &t in &spec.threads {
        let cfg = ThreadConfig::new(t);
        match (spec.task, &circuit) {
            (Task::SingleGate, _) => out.extend(single_gate(spec, &cfg, t)?),
            (Task::Rqc, Some(c)) => out.push(rqc(spec, c, &cfg, t)?),
            (Task::RqcGrad, Some(c)) => out.push(rqc_grad(spec, c, &cfg, t)?),
            (Task::NoisyGrad, Some(c)) => out.push(noisy_grad(spec, c, &cfg, t)?),
            _ => unreachable!(),
        }
    }
    Ok(out)
}

/// Writes `records` as a JSON array or as CSV rows
/// `task,n,depth,threads,rep,seconds`, one per repetition.
pub fn emit_report<W: Write>(records: &[BenchRecord], format: Format, w: &mut W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Usage("no benchmark records to report".into()));
    }
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, records).map_err(std::io::Error::from)?;
            writeln!(w)?;
        }
        Format::Csv => {
            writeln!(w, "task,n,depth,threads,rep,seconds")?;
            for r in records {
                for (rep, s) in r.samples.iter().enumerate() {
                    writeln!(w, "{},{},{},{},{},{:?}", r.task, r.num_qubits, r.depth, r.threads, rep + 1, s)?;
                }
            }
        }
    }
    Ok(())
}
