//! Line-oriented text formats for circuits and Pauli operators.
//!
//! Both formats ignore blank lines and everything after a `#`. Keywords and
//! names are case-insensitive; qubits are numbered from 1. The full grammar
//! is in `FORMATS.md` next to this crate's manifest.
//!
//! ```text
//! # circuit
//! GATE H 1
//! GATE CNOT 1,2
//! GATE Ry 2 0.25 1
//! GATE FSIM 1,2 0.1,0.2,0.3,0.4,0.5 1,0,1,0,0
//! CHANNEL Depolarizing 1 0.05
//!
//! # operator
//! TERM 1.0 0.0 1:Z
//! TERM 0.5 0.0 1:X 2:X
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use vqsim_core::{
    ChannelKind, ChannelOp, Circuit, Element, GateKind, GateOp, PauliLabel, PauliOperator, PauliTerm, C64,
};

use crate::{Error, Result};

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn content(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

fn list<T: FromStr>(line: usize, token: &str, what: &str) -> Result<Vec<T>> {
    token.split(',').map(|t| t.trim().parse().map_err(|_| perr(line, format!("bad {what} `{t}`")))).collect()
}

fn flag(line: usize, t: &str) -> Result<bool> {
    match t.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(perr(line, format!("bad parameter flag `{t}`"))),
    }
}

fn channel_kind(line: usize, name: &str, p: f64) -> Result<ChannelKind> {
    [ChannelKind::AmplitudeDamping(p), ChannelKind::PhaseDamping(p), ChannelKind::Depolarizing(p)]
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| perr(line, format!("unknown channel `{name}`")))
}

fn parse_gate(line: usize, tok: &[&str]) -> Result<GateOp> {
    if tok.len() < 3 {
        return Err(perr(line, "GATE needs a kind and positions"));
    }
    let kind = GateKind::from_name(tok[1]).ok_or_else(|| perr(line, format!("unknown gate `{}`", tok[1])))?;
    if kind == GateKind::Generic {
        return Err(perr(line, "Generic gates have no text form"));
    }
    let positions: Vec<usize> = list(line, tok[2], "position")?;
    let wrap = |e: vqsim_core::Error| perr(line, e.to_string());
    if !kind.is_parametric() {
        if tok.len() != 3 {
            return Err(perr(line, format!("{} takes no parameters", kind.name())));
        }
        return GateOp::standard(kind, &positions).map_err(wrap);
    }
    if !(4..=5).contains(&tok.len()) {
        return Err(perr(line, format!("{} needs parameters and optional flags", kind.name())));
    }
    let params: Vec<f64> = list(line, tok[3], "parameter")?;
    let active = match tok.get(4) {
        Some(t) => t.split(',').map(|f| flag(line, f)).collect::<Result<Vec<_>>>()?,
        None => vec![false; params.len()],
    };
    GateOp::parametric(kind, &positions, &params, &active).map_err(wrap)
}

fn parse_channel(line: usize, tok: &[&str]) -> Result<ChannelOp> {
    if tok.len() != 4 {
        return Err(perr(line, "CHANNEL takes a kind, one position and one parameter"));
    }
    let pos: usize = tok[2].parse().map_err(|_| perr(line, format!("bad position `{}`", tok[2])))?;
    let p: f64 = tok[3].parse().map_err(|_| perr(line, format!("bad parameter `{}`", tok[3])))?;
    ChannelOp::standard(channel_kind(line, tok[1], p)?, pos).map_err(|e| perr(line, e.to_string()))
}

pub fn parse_circuit(src: &str) -> Result<Circuit> {
    let mut c = Circuit::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let tok: Vec<&str> = content(raw).split_whitespace().collect();
        let Some(head) = tok.first() else { continue };
        match head.to_ascii_uppercase().as_str() {
            "GATE" => c.push(parse_gate(line, &tok)?),
            "CHANNEL" => c.push(parse_channel(line, &tok)?),
            _ => return Err(perr(line, format!("expected GATE or CHANNEL, found `{head}`"))),
        };
    }
    Ok(c)
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

/// Nested circuits are written flattened, which keeps the parameter order.
pub fn write_circuit(c: &Circuit) -> Result<String> {
    let mut out = String::new();
    for e in c.flatten() {
        match e {
            Element::Gate(g) => {
                if g.kind() == GateKind::Generic {
                    return Err(Error::Usage("Generic gates have no text form".into()));
                }
                write!(out, "GATE {} {}", g.kind().name(), join(g.positions(), |p| p.to_string())).unwrap();
                if g.kind().is_parametric() {
                    write!(
                        out,
                        " {} {}",
                        join(g.params(), |p| format!("{p:?}")),
                        join(g.active(), |&a| u8::from(a).to_string())
                    )
                    .unwrap();
                }
                out.push('\n');
            }
            Element::Channel(ch) => {
                let p =
                    ch.kind().parameter().ok_or_else(|| Error::Usage("Generic channels have no text form".into()))?;
                writeln!(out, "CHANNEL {} {} {p:?}", ch.kind().name(), ch.positions()[0]).unwrap();
            }
            Element::Circuit(_) => unreachable!("flatten yields leaves only"),
        }
    }
    Ok(out)
}

fn parse_term(line: usize, tok: &[&str]) -> Result<PauliTerm> {
    if tok.len() < 3 {
        return Err(perr(line, "TERM needs a real and an imaginary coefficient"));
    }
    let num = |t: &str| t.parse::<f64>().map_err(|_| perr(line, format!("bad coefficient `{t}`")));
    let coeff = C64::new(num(tok[1])?, num(tok[2])?);
    let factors = tok[3..]
        .iter()
        .map(|f| {
            let (q, l) = f.split_once(':').ok_or_else(|| perr(line, format!("expected index:label, found `{f}`")))?;
            let q: usize = q.parse().map_err(|_| perr(line, format!("bad qubit index `{q}`")))?;
            let l: PauliLabel = l.parse().map_err(|e: vqsim_core::Error| perr(line, e.to_string()))?;
            Ok((q, l))
        })
        .collect::<Result<Vec<_>>>()?;
    PauliTerm::new(factors, coeff).map_err(|e| perr(line, e.to_string()))
}

pub fn parse_operator(src: &str) -> Result<PauliOperator> {
    let mut op = PauliOperator::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let tok: Vec<&str> = content(raw).split_whitespace().collect();
        let Some(head) = tok.first() else { continue };
        if !head.eq_ignore_ascii_case("TERM") {
            return Err(perr(line, format!("expected TERM, found `{head}`")));
        }
        op.push(parse_term(line, &tok)?);
    }
    Ok(op)
}

pub fn write_operator(op: &PauliOperator) -> String {
    let mut out = String::new();
    for t in op.terms() {
        write!(out, "TERM {:?} {:?}", t.coeff().re, t.coeff().im).unwrap();
        for (q, l) in t.factors() {
            write!(out, " {q}:{l}").unwrap();
        }
        out.push('\n');
    }
    out
}
