use serde::{Deserialize, Serialize};
use std::io::{self, Write};

use super::StepPolicy;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub policy: StepPolicy,
}

/// Sampled solution: strictly increasing times, one state row and one input
/// sample per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    states: Vec<f64>,
    pub inputs: Vec<f64>,
    dim: usize,
    pub names: Vec<String>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(dim: usize, names: Vec<String>, meta: TrajectoryMeta) -> Self {
        Self { times: Vec::new(), states: Vec::new(), inputs: Vec::new(), dim, names, meta }
    }

    /// Builds a trajectory from raw samples, checking the invariants.
    pub fn from_samples(times: Vec<f64>, rows: Vec<Vec<f64>>, inputs: Vec<f64>, names: Vec<String>, meta: TrajectoryMeta) -> Result<Self> {
        let dim = names.len();
        if rows.len() != times.len() || inputs.len() != times.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: rows.len().min(inputs.len()) });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("trajectory times must be strictly increasing".into()));
        }
        let mut traj = Self::new(dim, names, meta);
        for ((t, r), u) in times.into_iter().zip(rows).zip(inputs) {
            traj.push(t, &r, u);
        }
        Ok(traj)
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64], u: f64) {
        debug_assert_eq!(x.len(), self.dim);
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.inputs.push(u);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.len() - 1]
    }

    /// Component `j` over the whole grid.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.states[i * self.dim + j]).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    /// Index `i` with `times[i] <= t < times[i + 1]`, clamped to the last interval.
    pub fn locate(&self, t: f64) -> usize {
        let k = self.times.partition_point(|s| *s <= t);
        k.saturating_sub(1).min(self.len().saturating_sub(2))
    }

    /// Linear interpolation of state and input at `t`.
    pub fn interpolate_into(&self, t: f64, out: &mut [f64]) -> Result<f64> {
        let (lo, hi) = (self.t_start(), self.t_end());
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(Error::OutsideSpan { t0: t, t1: t, lo, hi });
        }
        if self.len() == 1 {
            out.copy_from_slice(self.state(0));
            return Ok(self.inputs[0]);
        }
        let i = self.locate(t);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let s = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let (a, b) = (self.state(i), self.state(i + 1));
        for j in 0..self.dim {
            out[j] = a[j] + s * (b[j] - a[j]);
        }
        Ok(self.inputs[i] + s * (self.inputs[i + 1] - self.inputs[i]))
    }

    pub fn interpolate(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.interpolate_into(t, &mut out)?;
        Ok(out)
    }

    /// Samples with times in `[t0, t1]`.
    pub fn window(&self, t0: f64, t1: f64) -> Trajectory {
        let mut out = Trajectory::new(self.dim, self.names.clone(), self.meta.clone());
        for i in 0..self.len() {
            let t = self.times[i];
            if t >= t0 && t <= t1 {
                out.push(t, self.state(i), self.inputs[i]);
            }
        }
        out
    }

    /// Same samples with every state scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Trajectory {
        let mut out = self.clone();
        for v in &mut out.states {
            *v *= factor;
        }
        out
    }

    /// Writes `t,<names>,u` in shortest round-trip decimal form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w, ",u")?;
        for i in 0..self.len() {
            write!(w, "{}", self.times[i])?;
            for v in self.state(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", self.inputs[i])?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory::from_samples(
            vec![0.0, 1.0, 3.0],
            vec![vec![0.0, 1.0], vec![2.0, 1.0], vec![4.0, 0.0]],
            vec![0.0, 0.5, 1.0],
            vec!["a".into(), "b".into()],
            TrajectoryMeta { policy: StepPolicy::Rk4 { h: 1.0 } },
        )
        .unwrap()
    }

    #[test]
    fn interpolation_is_linear() {
        let tr = sample();
        let mut x = [0.0; 2];
        let u = tr.interpolate_into(2.0, &mut x).unwrap();
        assert_eq!(x, [3.0, 0.5]);
        assert_eq!(u, 0.75);
        assert!(tr.interpolate(3.5).is_err());
    }

    #[test]
    fn csv_round_trips_values() {
        let tr = sample();
        let csv = tr.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,a,b,u"));
        assert_eq!(lines.next(), Some("0,0,1,0"));
        let v: f64 = "0.1".parse().unwrap();
        assert_eq!(format!("{v}"), "0.1");
    }

    #[test]
    fn rejects_non_increasing_times() {
        let r = Trajectory::from_samples(
            vec![0.0, 0.0],
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 0.0],
            vec!["a".into()],
            TrajectoryMeta { policy: StepPolicy::Rk4 { h: 1.0 } },
        );
        assert!(r.is_err());
    }
}
