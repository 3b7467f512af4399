use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cores::Evaluated;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{TokenString, TrajectoryModel};
use crate::structures::System;

/// State after step `k` along a trajectory `y` starting from `x_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsState {
    pub step: usize,
    /// Symbol appended at this step; the last symbol of `x_0` (or the start
    /// marker) at step 0.
    pub token: String,
    /// `⟨Λ⟩(x_k)`
    pub phi_x: Vec<f64>,
    /// `Λ(x_k) − ⟨Λ⟩(x_0)`
    pub phi_y: Vec<f64>,
    /// `Λ(y) − ⟨Λ⟩(x_k)`
    pub phi_z: Vec<f64>,
}

pub fn dynamics_trace(
    model: &TrajectoryModel,
    system: &System,
    y: &TokenString,
    x0: &TokenString,
) -> Result<Vec<DynamicsState>> {
    dynamics_trace_with(model, system, y, x0, Exec::default())
}

/// One state per prefix `x_0 = x_0, …, x_T = y`. The per-prefix cores are
/// independent and computed with `exec`.
pub fn dynamics_trace_with(
    model: &TrajectoryModel,
    system: &System,
    y: &TokenString,
    x0: &TokenString,
    exec: Exec,
) -> Result<Vec<DynamicsState>> {
    if !y.is_terminal() {
        return Err(Error::NotTerminal(model.render(y)));
    }
    if x0.is_terminal() || !x0.is_prefix_of(y) {
        return Err(Error::NotExtension { string: model.render(y), prompt: model.render(x0) });
    }
    let start = x0.len();
    let steps = y.len() - start;
    let prefixes: Vec<TokenString> = (0..=steps).map(|k| y.prefix(start + k)).collect();
    let cores = exec.try_map_slice(&prefixes, |x| {
        Ok::<_, Error>((Evaluated::new(model, x, system, Exec::Sequential)?.core_values(), system.evaluate(x)?))
    })?;
    let lambda_y = system.evaluate(y)?;
    let core_x0 = &cores[0].0;
    let alphabet = model.alphabet();
    Ok(cores
        .iter()
        .enumerate()
        .map(|(k, (core_k, lambda_k))| {
            let token = match y.symbol_at(start + k) {
                Some(next) => alphabet.symbol_name(next).to_owned(),
                None => alphabet.bos().to_owned(),
            };
            DynamicsState {
                step: k,
                token,
                phi_x: core_k.clone(),
                phi_y: lambda_k.iter().zip(core_x0).map(|(a, c)| a - c).collect(),
                phi_z: lambda_y.iter().zip(core_k).map(|(a, c)| a - c).collect(),
            }
        })
        .collect())
}

/// Columns `step`, `token`, then `<name>.phi_x`, `<name>.phi_y`,
/// `<name>.phi_z` for every structure.
pub fn write_dynamics_csv<W: Write>(out: W, names: &[String], states: &[DynamicsState]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step".to_owned(), "token".to_owned()];
    for name in names {
        for phi in ["phi_x", "phi_y", "phi_z"] {
            header.push(format!("{name}.{phi}"));
        }
    }
    w.write_record(&header)?;
    for s in states {
        let mut row = vec![s.step.to_string(), s.token.clone()];
        for i in 0..names.len() {
            row.extend([s.phi_x[i], s.phi_y[i], s.phi_z[i]].iter().map(|v| v.to_string()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures;

    #[test]
    fn m2_trace_example() {
        let m2 = fixtures::m2();
        let s1 = fixtures::s1(&m2);
        let yb = m2.parse("b <eos>").unwrap();
        let trace = dynamics_trace(&m2, &s1, &yb, &TokenString::root()).unwrap();
        let phi_x: Vec<f64> = trace.iter().map(|s| s.phi_x[0]).collect();
        let phi_z: Vec<f64> = trace.iter().map(|s| s.phi_z[0]).collect();
        assert_eq!(phi_x, vec![0.25, 0.0, 0.0]);
        assert_eq!(phi_z, vec![-0.25, 0.0, 0.0]);
        let tokens: Vec<&str> = trace.iter().map(|s| s.token.as_str()).collect();
        assert_eq!(tokens, vec!["<bos>", "b", "<eos>"]);
    }

    #[test]
    fn endpoint_identities_on_fixtures() {
        for (_, m) in fixtures::all_models() {
            let s2 = fixtures::s2(&m);
            for t in m.enumerate_trajectories(&TokenString::root()).unwrap() {
                let trace = dynamics_trace(&m, &s2, &t.string, &TokenString::root()).unwrap();
                let last = trace.last().unwrap();
                assert_eq!(last.phi_x, s2.evaluate(&t.string).unwrap().0);
                assert!(last.phi_z.iter().all(|v| *v == 0.0));
                assert_eq!(trace[0].phi_z, last.phi_y);
            }
        }
    }

    #[test]
    fn deterministic_model_has_constant_phi_x() {
        let m3 = fixtures::m3();
        let s2 = fixtures::s2(&m3);
        let yb = m3.parse("b <eos>").unwrap();
        let trace = dynamics_trace(&m3, &s2, &yb, &TokenString::root()).unwrap();
        assert!(trace.iter().all(|s| s.phi_x == vec![0.0, 1.0]));
    }

    #[test]
    fn rejects_non_extensions() {
        let m2 = fixtures::m2();
        let s1 = fixtures::s1(&m2);
        let yb = m2.parse("b <eos>").unwrap();
        assert!(dynamics_trace(&m2, &s1, &yb, &m2.parse("a").unwrap()).is_err());
        assert!(dynamics_trace(&m2, &s1, &m2.parse("b").unwrap(), &TokenString::root()).is_err());
    }

    #[test]
    fn csv_layout() {
        let m2 = fixtures::m2();
        let s1 = fixtures::s1(&m2);
        let yb = m2.parse("b <eos>").unwrap();
        let trace = dynamics_trace(&m2, &s1, &yb, &TokenString::root()).unwrap();
        let mut buf = Vec::new();
        write_dynamics_csv(&mut buf, &s1.names(), &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,token,has_a.phi_x,has_a.phi_y,has_a.phi_z");
        assert_eq!(lines[1], "0,<bos>,0.25,-0.25,-0.25");
        assert_eq!(lines[3], "2,<eos>,0,-0.25,0");
    }
}
