use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Oracles whose uses are counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Oracle {
    #[serde(rename = "U_b")]
    Ub,
    #[serde(rename = "U_B")]
    UB,
    #[serde(rename = "U_A")]
    UA,
    #[serde(rename = "P_A")]
    PA,
    #[serde(rename = "U_L")]
    UL,
    #[serde(rename = "U_v")]
    Uv,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Oracle::Ub => "U_b",
            Oracle::UB => "U_B",
            Oracle::UA => "U_A",
            Oracle::PA => "P_A",
            Oracle::UL => "U_L",
            Oracle::Uv => "U_v",
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Query counts per oracle. Counts only ever grow.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryLedger {
    counts: BTreeMap<Oracle, u64>,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(oracle: Oracle, n: u64) -> Self {
        let mut l = Self::new();
        l.add(oracle, n);
        l
    }

    pub fn add(&mut self, oracle: Oracle, n: u64) {
        *self.counts.entry(oracle).or_insert(0) += n;
    }

    pub fn get(&self, oracle: Oracle) -> u64 {
        self.counts.get(&oracle).copied().unwrap_or(0)
    }

    pub fn absorb(&mut self, other: &QueryLedger) {
        for (&o, &n) in &other.counts {
            self.add(o, n);
        }
    }

    /// Every count multiplied by `k`.
    pub fn times(&self, k: u64) -> QueryLedger {
        QueryLedger {
            counts: self.counts.iter().map(|(&o, &n)| (o, n * k)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.values().all(|&n| n == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Oracle, u64)> + '_ {
        self.counts.iter().map(|(&o, &n)| (o, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn additive_and_scaled() {
        let mut a = QueryLedger::single(Oracle::UB, 3);
        a.absorb(&QueryLedger::single(Oracle::UB, 4));
        a.add(Oracle::Ub, 1);
        assert_eq!(a.get(Oracle::UB), 7);
        let t = a.times(5);
        assert_eq!(t.get(Oracle::UB), 35);
        assert_eq!(t.get(Oracle::Ub), 5);
        assert_eq!(t.get(Oracle::PA), 0);
    }

    #[test]
    fn serializes_with_oracle_names() {
        let a = QueryLedger::single(Oracle::UB, 2);
        assert_eq!(serde_json::to_string(&a).unwrap(), r#"{"U_B":2}"#);
    }
}
