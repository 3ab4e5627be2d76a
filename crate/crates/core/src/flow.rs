//! Discrete modified Kähler-Ricci flow on node heights:
//! `u̇_k = log((m_k/M)/(w_k/W))`, integrated by explicit Euler with backtracking so that the
//! discrete Ding functional increases on every accepted step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::{affine_fit, Evaluation, Mode, NodeSystem, Problem};

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub dt0: f64,
    /// Final time.
    pub t_max: f64,
    /// Stop once the discrete entropy is at most this.
    pub tol: f64,
    /// Step growth factor after `grow_after` consecutive accepted steps.
    pub grow: f64,
    pub grow_after: usize,
    /// Smallest step before the run is declared stalled.
    pub min_dt: f64,
    pub max_steps: usize,
    /// Lower clamp for the log-ratio of an empty cell.
    pub log_floor: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            dt0: 0.5,
            t_max: 1e4,
            tol: 1e-10,
            grow: 1.2,
            grow_after: 3,
            min_dt: 1e-12,
            max_steps: 100_000,
            log_floor: -30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub entropy: f64,
    pub dt: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FlowStatus {
    Converged,
    TimeLimit,
    StepLimit,
    Stalled,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowRun {
    pub status: FlowStatus,
    pub trace: Vec<TraceRow>,
    pub heights: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
}

impl FlowRun {
    /// Trace CSV with header `t,G,entropy,dt,drift`.
    pub fn trace_csv(&self) -> String {
        let f = crate::io::format_f64;
        let mut out = String::from("t,G,entropy,dt,drift\n");
        for r in &self.trace {
            out.push_str(&format!("{},{},{},{},{}\n", f(r.t), f(r.g), f(r.entropy), f(r.dt), f(r.drift)));
        }
        out
    }
}

/// `Σ m_k log(m_k/q_k)`, summed as `Σ (m log(m/q) − m + q)` so that every term is
/// nonnegative.
pub fn discrete_entropy(m: &[f64], q: &[f64]) -> f64 {
    m.iter().zip(q).map(|(&mk, &qk)| if mk > 0.0 { mk * (mk / qk).ln() - mk + qk } else { qk }).sum::<f64>().max(0.0)
}

fn normalize(ns: &NodeSystem, u: &mut [f64]) -> f64 {
    let (c, v) = affine_fit(&ns.nodes, &ns.weights, u);
    for (uk, p) in u.iter_mut().zip(&ns.nodes) {
        *uk -= c + p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    }
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the flow from `u0`. The node weights must have barycenter 0, which holds for a
/// polytope with barycenter 0 and `a = 0` or for the soliton vector.
pub fn flow_run(ns: &NodeSystem, u0: &[f64], opts: &FlowOptions) -> Result<FlowRun> {
    if u0.len() != ns.len() {
        return Err(Error::Invalid(format!("initial heights have length {}, expected {}", u0.len(), ns.len())));
    }
    let b = ns.barycenter();
    if b.iter().any(|x| x.abs() > 1e-6) {
        return Err(Error::Invalid(format!("flow needs node weights with barycenter 0, got {b:?}")));
    }
    if !(opts.dt0 > 0.0) {
        return Err(Error::Invalid("initial step must be positive".into()));
    }
    let mode = if ns.a.iter().all(|x| *x == 0.0) { Mode::Ke } else { Mode::Soliton };
    let prob = Problem::new(ns, mode)?;
    let q: Vec<f64> = ns.weights.iter().map(|w| w / ns.total).collect();
    let mut u = u0.to_vec();
    let mut drift = normalize(ns, &mut u);
    let mut ev: Evaluation = prob.evaluate(&u)?;
    let mut t = 0.0;
    let mut dt = opts.dt0;
    let mut trace = vec![TraceRow { t, g: ev.value, entropy: discrete_entropy(&ev.masses, &q), dt, drift }];
    let mut steps = 0;
    let mut rejected = 0;
    let mut streak = 0;
    let finish = |status, trace, heights, steps, rejected| Ok(FlowRun { status, trace, heights, steps, rejected });
    loop {
        let entropy = discrete_entropy(&ev.masses, &q);
        if entropy <= opts.tol {
            return finish(FlowStatus::Converged, trace, u, steps, rejected);
        }
        if t >= opts.t_max {
            return finish(FlowStatus::TimeLimit, trace, u, steps, rejected);
        }
        if steps >= opts.max_steps {
            return finish(FlowStatus::StepLimit, trace, u, steps, rejected);
        }
        let d: Vec<f64> = ev
            .masses
            .iter()
            .zip(&q)
            .map(|(m, qk)| if *m > 0.0 { (m / qk).ln().max(opts.log_floor) } else { opts.log_floor })
            .collect();
        loop {
            let h = dt.min(opts.t_max - t);
            let mut un: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let dr = normalize(ns, &mut un);
            match prob.evaluate(&un) {
                Ok(en) if en.value > ev.value => {
                    t += h;
                    steps += 1;
                    streak += 1;
                    drift = dr;
                    u = un;
                    ev = en;
                    trace.push(TraceRow { t, g: ev.value, entropy: discrete_entropy(&ev.masses, &q), dt: h, drift });
                    if streak >= opts.grow_after {
                        dt *= opts.grow;
                        streak = 0;
                    }
                    break;
                }
                _ => {
                    rejected += 1;
                    streak = 0;
                    dt *= 0.5;
                    if dt < opts.min_dt {
                        return finish(FlowStatus::Stalled, trace, u, steps, rejected);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::catalog;
    use crate::solver::{assemble, solve, SolveOptions, Status};

    #[test]
    fn entropy_is_nonnegative_and_vanishes_on_equality() {
        let q = [0.25, 0.25, 0.5];
        assert_eq!(discrete_entropy(&q, &q), 0.0);
        let m = [0.5, 0.0, 0.5];
        let direct: f64 = 0.5 * (0.5f64 / 0.25).ln();
        assert!((discrete_entropy(&m, &q) - direct).abs() < 1e-15);
    }

    #[test]
    fn segment_flow_reaches_solution() {
        let ns = assemble(&catalog::segment(), &[0.0], 3).unwrap();
        let run = flow_run(&ns, &vec![0.0; ns.len()], &FlowOptions { tol: 1e-14, ..FlowOptions::default() }).unwrap();
        assert_eq!(run.status, FlowStatus::Converged);
        assert!(run.trace.windows(2).all(|w| w[1].g > w[0].g));
        let sol = solve(&ns, Mode::Ke, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, Status::Solved);
        let diff = run.heights.iter().zip(&sol.heights).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-6, "{diff}");
        // restarting at the limit takes no steps
        let again = flow_run(&ns, &sol.heights, &FlowOptions { tol: 1e-12, ..FlowOptions::default() }).unwrap();
        assert_eq!(again.steps, 0);
    }

    #[test]
    fn asymmetric_weights_rejected() {
        let ns = assemble(&catalog::uneven_segment(), &[0.0], 2).unwrap();
        assert!(flow_run(&ns, &vec![0.0; ns.len()], &FlowOptions::default()).is_err());
    }
}
