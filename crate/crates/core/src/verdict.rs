use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Outcome of a test at one time index: `+1` accepts the null hypothesis,
/// `-1` rejects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn from_accept(accept: bool) -> Self {
        if accept {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Decision::Accept => 1,
            Decision::Reject => -1,
        }
    }
}

impl From<Decision> for i8 {
    fn from(d: Decision) -> i8 {
        d.sign()
    }
}

impl TryFrom<i8> for Decision {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Decision::Accept),
            -1 => Ok(Decision::Reject),
            other => Err(format!("decision must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Accept => "+1",
            Decision::Reject => "-1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Rate,
    Threshold,
    Independence,
}

/// A decision together with the numbers that produced it.
///
/// Evidence keys:
/// * rate tests: `m{m}.estimate` and `m{m}.bound` for each tested gap, plus
///   `eps_t` and `M_t`;
/// * threshold and independence tests: `estimate`, `gamma`, `zeta_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test: TestKind,
    pub decision: Decision,
    pub evidence: BTreeMap<String, f64>,
    pub at_time: u64,
}

impl TestVerdict {
    /// Recomputes the decision from the evidence alone.
    pub fn recheck(&self) -> Option<Decision> {
        match self.test {
            TestKind::Rate => {
                let mut any = false;
                for (key, estimate) in &self.evidence {
                    let Some(prefix) = key.strip_suffix(".estimate") else {
                        continue;
                    };
                    let bound = self.evidence.get(&format!("{prefix}.bound"))?;
                    any = true;
                    if estimate > bound {
                        return Some(Decision::Reject);
                    }
                }
                any.then_some(Decision::Accept)
            }
            TestKind::Threshold | TestKind::Independence => {
                let estimate = self.evidence.get("estimate")?;
                let gamma = self.evidence.get("gamma")?;
                let zeta = self.evidence.get("zeta_t")?;
                Some(Decision::from_accept(*estimate <= gamma + zeta))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_serializes_as_sign() {
        assert_eq!(serde_json::to_string(&Decision::Reject).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Decision>("1").unwrap(), Decision::Accept);
        assert!(serde_json::from_str::<Decision>("0").is_err());
    }

    #[test]
    fn recheck_threshold() {
        let v = TestVerdict {
            test: TestKind::Threshold,
            decision: Decision::Reject,
            evidence: [("estimate", 0.3), ("gamma", 0.0), ("zeta_t", 0.2)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            at_time: 4,
        };
        assert_eq!(v.recheck(), Some(Decision::Reject));
    }
}
