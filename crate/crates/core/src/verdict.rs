use serde::Serialize;

use crate::norms::{NuclearSandwich, SpectralBounds};

/// Outcome of a numerical check. `Inconclusive` means the certified bounds
/// were too loose to decide; it is never reported as a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    /// Pass only if every part passes; any fail dominates an inconclusive.
    pub fn all(parts: impl IntoIterator<Item = Verdict>) -> Self {
        parts.into_iter().fold(Verdict::Pass, |acc, v| match (acc, v) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        })
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A closed interval known to contain some quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn point(x: f64) -> Self {
        Self { lower: x, upper: x }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl From<&SpectralBounds> for Interval {
    fn from(b: &SpectralBounds) -> Self {
        Interval::new(b.lower, b.upper)
    }
}

impl From<&NuclearSandwich> for Interval {
    fn from(s: &NuclearSandwich) -> Self {
        Interval::new(s.lower, s.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fail_dominates() {
        use Verdict::*;
        assert_eq!(Verdict::all([Pass, Pass]), Pass);
        assert_eq!(Verdict::all([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::all([Inconclusive, Fail, Pass]), Fail);
        assert_eq!(Verdict::all([]), Pass);
    }
}
