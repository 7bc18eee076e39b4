use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An aggregation strategy: reliability-ordered early stopping or a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Invoke all agents, plurality vote.
    SimpleMV,
    /// Invoke all agents, weight each vote by historical reliability.
    WeightedMV,
    /// Random order with quorum stopping.
    RandomES,
    /// Exactly `k` random agents, no quorum check.
    FixedRandomK(usize),
    /// Exactly the `k` most reliable agents, no quorum check.
    FixedTopK(usize),
    EmsRel,
    EmsSim,
}

impl Strategy {
    pub const ALL_DEFAULT: [Strategy; 7] = [
        Strategy::SimpleMV,
        Strategy::WeightedMV,
        Strategy::RandomES,
        Strategy::FixedRandomK(5),
        Strategy::FixedTopK(5),
        Strategy::EmsSim,
        Strategy::EmsRel,
    ];

    /// Strategies that mutate the confidence state after each query.
    pub fn updates_state(self) -> bool {
        matches!(
            self,
            Strategy::WeightedMV | Strategy::FixedTopK(_) | Strategy::EmsRel | Strategy::EmsSim
        )
    }

    /// Strategies that stop on quorum.
    pub fn stops_early(self) -> bool {
        matches!(
            self,
            Strategy::RandomES | Strategy::EmsRel | Strategy::EmsSim
        )
    }

    pub fn budget(self) -> Option<usize> {
        match self {
            Strategy::FixedRandomK(k) | Strategy::FixedTopK(k) => Some(k),
            _ => None,
        }
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::SimpleMV => f.write_str("simple-mv"),
            Strategy::WeightedMV => f.write_str("weighted-mv"),
            Strategy::RandomES => f.write_str("random-es"),
            Strategy::FixedRandomK(k) => write!(f, "fixed-random-{k}"),
            Strategy::FixedTopK(k) => write!(f, "fixed-top-{k}"),
            Strategy::EmsRel => f.write_str("ems-rel"),
            Strategy::EmsSim => f.write_str("ems-sim"),
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    /// Accepts `ems-rel`, `EMS_Rel`, `fixed-random-5`, `FixedTopK(3)` and similar spellings.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        let fixed = |prefix: &str| -> Option<Result<usize, String>> {
            let rest = norm.strip_prefix(prefix)?;
            let rest = rest.strip_prefix('k').unwrap_or(rest);
            Some(
                rest.parse::<usize>()
                    .ok()
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| format!("strategy `{s}` needs a budget k >= 1")),
            )
        };
        match norm.as_str() {
            "simplemv" | "mv" | "fullmv" => return Ok(Strategy::SimpleMV),
            "weightedmv" => return Ok(Strategy::WeightedMV),
            "randomes" => return Ok(Strategy::RandomES),
            "emsrel" => return Ok(Strategy::EmsRel),
            "emssim" => return Ok(Strategy::EmsSim),
            _ => {}
        }
        if let Some(k) = fixed("fixedrandom") {
            return k.map(Strategy::FixedRandomK);
        }
        if let Some(k) = fixed("fixedtop") {
            return k.map(Strategy::FixedTopK);
        }
        Err(format!(
            "unknown strategy `{s}` (simple-mv, weighted-mv, random-es, fixed-random-K, fixed-top-K, ems-rel, ems-sim)"
        ))
    }
}

impl Serialize for Strategy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
