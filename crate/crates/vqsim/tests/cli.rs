use std::process::Command;

use vqsim::dump::{read_state, DumpedState};

fn vqsim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vqsim")).args(args).output().unwrap()
}

#[test]
fn bench_writes_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = vqsim(&[
        "bench",
        "rqc",
        "--qubits",
        "3,4",
        "--depth",
        "2",
        "--reps",
        "2",
        "--verify",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    assert!(text.lines().nth(3).unwrap().starts_with("rqc,4,2,1,1,"));
}

#[test]
fn bench_writes_json_to_stdout() {
    let o = vqsim(&[
        "bench",
        "noisy-grad",
        "--qubits",
        "3",
        "--depth",
        "2",
        "--noise-p",
        "0.05",
        "--reps",
        "1",
        "--verify",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v[0]["check"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn errors_exit_nonzero() {
    for args in [
        &["bench", "rqc", "--format", "xml"][..],
        &["bench", "warp"],
        &["bench", "rqc", "--qubits", "1"],
        &["bench", "rqc", "--reps", "0"],
        &["bench", "rqc", "--qubits", "3", "--depth", "1", "--out", "/nonexistent/dir/r.json"],
        &["run", "/nonexistent/circuit.txt"],
    ] {
        let o = vqsim(args);
        assert!(!o.status.success(), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn run_evaluates_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("c.txt");
    let op = dir.path().join("op.txt");
    let dump = dir.path().join("s.bin");
    std::fs::write(&circuit, "GATE Rx 1 1.5707963267948966 1\nGATE CNOT 1,2\n").unwrap();
    std::fs::write(&op, "TERM 1 0 1:Z\n").unwrap();
    let o = vqsim(&[
        "run",
        circuit.to_str().unwrap(),
        "--operator",
        op.to_str().unwrap(),
        "--gradient",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["qubits"], 2);
    assert!(v["loss"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["grads"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    let (_, s) = read_state::<f64, _>(&mut std::fs::File::open(&dump).unwrap()).unwrap();
    let DumpedState::Pure(s) = s else { panic!("expected a pure state") };
    assert!((s.amplitudes()[3].norm() - 0.5f64.sqrt()).abs() < 1e-12);

    std::fs::write(&circuit, "GATE X 1\nCHANNEL AmplitudeDamping 1 0.25\n").unwrap();
    let o = vqsim(&[
        "run",
        circuit.to_str().unwrap(),
        "--operator",
        op.to_str().unwrap(),
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["loss"].as_f64().unwrap() + 0.5).abs() < 1e-12);
    let (_, s) = read_state::<f64, _>(&mut std::fs::File::open(&dump).unwrap()).unwrap();
    assert!(matches!(s, DumpedState::Mixed(_)));
}
