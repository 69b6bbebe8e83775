//! Piecewise-constant controls `f(t) ∈ ℝⁿ` and the drift `h = Σ f_k σ_k` they induce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(t) = values[p]` on `[switch_times[p-1], switch_times[p])`, right-continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Control {
    pub switch_times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Default for Control {
    fn default() -> Self {
        Self::zero()
    }
}

impl Control {
    pub fn zero() -> Self {
        Self {
            switch_times: Vec::new(),
            values: vec![Vec::new()],
        }
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Self {
            switch_times: Vec::new(),
            values: vec![value],
        }
    }

    /// `value` on `[0, at)`, `-value` afterwards.
    pub fn sign_flip(value: Vec<f64>, at: f64) -> Self {
        let flipped = value.iter().map(|v| -v).collect();
        Self {
            switch_times: vec![at],
            values: vec![value, flipped],
        }
    }

    /// `{0, c, sign flip of c at horizon/2}` for every `n ≤ max_modes`, with
    /// `c = (0.5, -0.3, 0.2, ...)` truncated to `n` entries.
    pub fn suite(max_modes: usize, horizon: f64) -> Vec<Control> {
        let base = [0.5, -0.3, 0.2, -0.1];
        let mut out = vec![Control::zero()];
        for n in 1..=max_modes.min(base.len()) {
            let c = base[..n].to_vec();
            out.push(Control::constant(c.clone()));
            out.push(Control::sign_flip(c, 0.5 * horizon));
        }
        out
    }

    /// Number of modes `n` the control loads.
    pub fn modes(&self) -> usize {
        self.values.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|v| *v == 0.0)
    }

    /// `f(t)`, padded with zeros to `modes()` entries.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let p = self.switch_times.iter().take_while(|s| **s <= t).count();
        let mut out = self.values[p].clone();
        out.resize(self.modes(), 0.0);
        out
    }

    /// Switch times strictly inside `(0, horizon)`.
    pub fn switches_before(&self, horizon: f64) -> Vec<f64> {
        self.switch_times.iter().copied().filter(|s| *s > 0.0 && *s < horizon).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            switch_times: self.switch_times.clone(),
            values: self.values.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
        }
    }

    pub fn validate(&self, basis_len: usize) -> Result<()> {
        if self.values.len() != self.switch_times.len() + 1 {
            return Err(Error::InvalidConfig(format!(
                "control has {} switch times but {} pieces",
                self.switch_times.len(),
                self.values.len()
            )));
        }
        if self.switch_times.windows(2).any(|w| w[0] >= w[1]) || self.switch_times.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("control switch times must be finite and increasing".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("control values must be finite".into()));
        }
        if self.modes() > basis_len {
            return Err(Error::InvalidConfig(format!(
                "control loads {} modes but the noise basis has only {basis_len}",
                self.modes()
            )));
        }
        Ok(())
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("bad number {x:?} in control spec")))
        })
        .collect()
}

/// `zero`, `const:a,b,...` or `flip:a,b,...@t`.
impl FromStr for Control {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" || s == "0" {
            return Ok(Self::zero());
        }
        if let Some(rest) = s.strip_prefix("const:") {
            return Ok(Self::constant(parse_list(rest)?));
        }
        if let Some(rest) = s.strip_prefix("flip:") {
            let (vals, at) = rest
                .split_once('@')
                .ok_or_else(|| Error::InvalidConfig(format!("flip control {s:?} needs '@time'")))?;
            let at = at
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad switch time {at:?} in control spec")))?;
            return Ok(Self::sign_flip(parse_list(vals)?, at));
        }
        Err(Error::InvalidConfig(format!(
            "unknown control spec {s:?} (expected zero, const:..., or flip:...@t)"
        )))
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        if self.is_zero() {
            return write!(f, "zero");
        }
        match (self.switch_times.as_slice(), self.values.as_slice()) {
            ([], [v]) => write!(f, "const:{}", list(v)),
            ([at], [v, w]) if v.iter().zip(w).all(|(a, b)| *a == -b) => write!(f, "flip:{}@{at}", list(v)),
            _ => write!(f, "{}", serde_json::to_string(self).map_err(|_| fmt::Error)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_lookup_is_right_continuous() {
        let c = Control::sign_flip(vec![1.0, 2.0], 0.5);
        assert_eq!(c.at(0.0), vec![1.0, 2.0]);
        assert_eq!(c.at(0.4999), vec![1.0, 2.0]);
        assert_eq!(c.at(0.5), vec![-1.0, -2.0]);
        assert_eq!(Control::zero().at(3.0), Vec::<f64>::new());
        let ragged = Control {
            switch_times: vec![1.0],
            values: vec![vec![1.0], vec![1.0, 2.0]],
        };
        assert_eq!(ragged.at(0.0), vec![1.0, 0.0]);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in ["zero", "const:0.5,-0.3", "flip:0.5@0.05"] {
            let c: Control = s.parse().unwrap();
            assert_eq!(c.to_string(), s);
        }
        assert!("const:a".parse::<Control>().is_err());
        assert!("flip:1".parse::<Control>().is_err());
        assert!("ramp:1".parse::<Control>().is_err());
    }

    #[test]
    fn validation() {
        assert!(Control::constant(vec![1.0, 2.0, 3.0]).validate(2).is_err());
        assert!(Control::constant(vec![f64::NAN]).validate(2).is_err());
        let bad = Control {
            switch_times: vec![0.5, 0.2],
            values: vec![vec![1.0]; 3],
        };
        assert!(bad.validate(1).is_err());
        assert!(Control::sign_flip(vec![1.0], 0.1).validate(1).is_ok());
    }

    #[test]
    fn suite_covers_one_and_two_modes() {
        let s = Control::suite(2, 0.1);
        assert_eq!(s.len(), 5);
        assert!(s[0].is_zero());
        assert_eq!(s[4].switch_times, vec![0.05]);
        assert_eq!(s[4].modes(), 2);
    }
}
