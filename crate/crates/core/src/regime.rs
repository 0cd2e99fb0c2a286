//! Classification of the exponents `(p, r)` against the hypotheses under which
//! local and global existence are known.

use serde::{Deserialize, Serialize};

/// Upper limit `4p / (3(3 - p))` on the source exponent; infinite for `p >= 3`.
pub fn source_exponent_limit(p: f64) -> f64 {
    if p >= 3.0 {
        f64::INFINITY
    } else {
        4.0 * p / (3.0 * (3.0 - p))
    }
}

/// A violated hypothesis, tagged with a stable anchor name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub anchor: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub p: f64,
    pub r: f64,
    /// `2 < p < 3`.
    pub exponent_in_range: bool,
    pub source_limit: f64,
    /// `1 <= r < 4p / (3(3 - p))`.
    pub growth_assumption: bool,
    /// `r <= p / 2`: solutions extend to any horizon.
    pub global_regime: bool,
}

impl RegimeReport {
    pub fn classify(p: f64, r: f64) -> Self {
        let limit = source_exponent_limit(p);
        RegimeReport {
            p,
            r,
            exponent_in_range: p > 2.0 && p < 3.0,
            source_limit: limit,
            growth_assumption: r >= 1.0 && r < limit,
            global_regime: r >= 1.0 && r <= p / 2.0,
        }
    }

    /// Hypotheses that fail; `require_global` adds `r <= p/2`.
    pub fn violations(&self, require_global: bool) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.exponent_in_range {
            out.push(Violation {
                anchor: "p-range".into(),
                message: format!("p = {} must satisfy 2 < p < 3", self.p),
            });
        }
        if !self.growth_assumption {
            out.push(Violation {
                anchor: "source-growth-assumption".into(),
                message: format!(
                    "r = {} must satisfy 1 <= r < 4p/(3(3-p)) = {:.6}",
                    self.r, self.source_limit
                ),
            });
        }
        if require_global && !self.global_regime {
            out.push(Violation {
                anchor: "global-regime".into(),
                message: format!("r = {} must satisfy r <= p/2 = {}", self.r, self.p / 2.0),
            });
        }
        out
    }

    /// One-line human classification.
    pub fn summary(&self) -> String {
        let mut parts = vec![format!("p = {}, r = {}", self.p, self.r)];
        parts.push(if self.exponent_in_range {
            "p in (2,3)".into()
        } else {
            "p outside (2,3)".into()
        });
        parts.push(if self.growth_assumption {
            format!("growth assumption holds (r < {:.6})", self.source_limit)
        } else {
            format!(
                "growth assumption violated (need 1 <= r < {:.6})",
                self.source_limit
            )
        });
        if self.global_regime {
            parts.push("global regime (r <= p/2)".into());
        } else {
            parts.push("local regime only (r > p/2)".into());
        }
        parts.join("; ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepted_pair() {
        let rep = RegimeReport::classify(2.5, 1.5);
        assert!((rep.source_limit - 10.0 / 1.5).abs() < 1e-12);
        assert!(rep.violations(false).is_empty());
        assert!(!rep.global_regime);
    }

    #[test]
    fn rejected_pair_names_growth_assumption() {
        let v = RegimeReport::classify(2.5, 7.0).violations(false);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].anchor, "source-growth-assumption");
    }

    #[test]
    fn global_flag() {
        let rep = RegimeReport::classify(2.5, 1.25);
        assert!(rep.global_regime);
        assert!(rep.violations(true).is_empty());
        assert_eq!(
            RegimeReport::classify(2.5, 1.3).violations(true)[0].anchor,
            "global-regime"
        );
    }

    #[test]
    fn p_out_of_range() {
        let v = RegimeReport::classify(3.5, 1.0).violations(false);
        assert!(v.iter().any(|x| x.anchor == "p-range"));
    }
}
