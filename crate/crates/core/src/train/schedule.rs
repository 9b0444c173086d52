use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Learning-rate schedule. Rates are computed in `f64`.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    Constant,
    /// Multiply by `factor` every `period` epochs.
    Step { factor: f64, period: usize },
    /// Multiply by `decay` after every optimization step.
    Exponential { decay: f64 },
    /// `(first epoch, rate)` pairs with strictly increasing epochs; each
    /// rate applies from its epoch on. Epochs before the first boundary use
    /// the base rate.
    Piecewise(Vec<(usize, f64)>),
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("{what} must be positive, got {v}")))
            }
        };
        match self {
            Schedule::Constant => Ok(()),
            Schedule::Step { factor, period } => {
                positive(*factor, "step factor")?;
                if *period == 0 {
                    return Err(Error::config("step period must be at least 1"));
                }
                Ok(())
            }
            Schedule::Exponential { decay } => positive(*decay, "exponential decay"),
            Schedule::Piecewise(points) => {
                if points.is_empty() {
                    return Err(Error::config("piecewise schedule needs at least one boundary"));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::config(format!("piecewise boundaries not strictly increasing at epoch {}", w[1].0)));
                    }
                }
                points.iter().try_for_each(|&(_, r)| positive(r, "piecewise rate"))
            }
        }
    }

    /// Rate at a 0-based global step within a 0-based epoch.
    pub fn rate(&self, base_lr: f64, global_step: u64, epoch: usize) -> f64 {
        match self {
            Schedule::Constant => base_lr,
            Schedule::Step { factor, period } => base_lr * factor.powi((epoch / period) as i32),
            Schedule::Exponential { decay } => base_lr * decay.powf(global_step as f64),
            Schedule::Piecewise(points) => points.iter().take_while(|&&(from, _)| from <= epoch).last().map_or(base_lr, |&(_, r)| r),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant => f.write_str("constant"),
            Schedule::Step { factor, period } => write!(f, "step {factor} {period}"),
            Schedule::Exponential { decay } => write!(f, "exponential {decay}"),
            Schedule::Piecewise(points) => {
                f.write_str("piecewise ")?;
                let parts: Vec<String> = points.iter().map(|(e, r)| format!("{e}:{r}")).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// Parses `constant`, `step <factor> <period>`, `exponential [decay]`
    /// (decay defaults to 0.95) or `piecewise <epoch>:<rate>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::config(format!("schedule {s:?}: {msg}"));
        let num = |v: &str| v.parse::<f64>().map_err(|e| bad(&e.to_string()));
        let mut parts = s.split_whitespace();
        let schedule = match parts.next() {
            Some("constant") => Schedule::Constant,
            Some("step") => {
                let factor = num(parts.next().ok_or_else(|| bad("missing factor"))?)?;
                let period = parts
                    .next()
                    .ok_or_else(|| bad("missing period"))?
                    .parse()
                    .map_err(|e: std::num::ParseIntError| bad(&e.to_string()))?;
                Schedule::Step { factor, period }
            }
            Some("exponential") => Schedule::Exponential {
                decay: parts.next().map(num).transpose()?.unwrap_or(0.95),
            },
            Some("piecewise") => {
                let body: String = parts.by_ref().collect();
                let points = body
                    .split(',')
                    .map(|p| {
                        let (e, r) = p.split_once(':').ok_or_else(|| bad("expected epoch:rate"))?;
                        let e = e.trim().parse().map_err(|e: std::num::ParseIntError| bad(&e.to_string()))?;
                        Ok((e, num(r.trim())?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Schedule::Piecewise(points)
            }
            _ => return Err(bad("expected constant, step, exponential or piecewise")),
        };
        if parts.next().is_some() {
            return Err(bad("trailing input"));
        }
        schedule.validate()?;
        Ok(schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_rates() {
        assert_eq!(Schedule::Constant.rate(0.01, 12345, 7), 0.01);
        let exp = Schedule::Exponential { decay: 0.95 };
        assert!((exp.rate(0.01, 2, 0) - 0.009025).abs() < 1e-15);
        assert_eq!(exp.rate(0.01, 0, 0), 0.01);
        let pw: Schedule = "piecewise 0:0.1,10:0.01".parse().unwrap();
        assert_eq!(pw.rate(1.0, 0, 9), 0.1);
        assert_eq!(pw.rate(1.0, 0, 10), 0.01);
        let step: Schedule = "step 0.5 3".parse().unwrap();
        assert_eq!(step.rate(0.8, 0, 2), 0.8);
        assert_eq!(step.rate(0.8, 0, 3), 0.4);
        assert_eq!(step.rate(0.8, 0, 6), 0.2);
    }

    #[test]
    fn parse_round_trip() {
        for text in ["constant", "step 0.5 10", "exponential 0.95", "piecewise 0:0.1,10:0.01"] {
            assert_eq!(text.parse::<Schedule>().unwrap().to_string(), text);
        }
        assert!("piecewise 5:0.1,5:0.01".parse::<Schedule>().is_err());
        assert!("step 0.5 0".parse::<Schedule>().is_err());
        assert!("linear".parse::<Schedule>().is_err());
    }
}
