use serde::Serialize;

use super::GlueError;

/// Named tolerances. Every check in a report quotes the key it used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// `|dω|` of the input family.
    pub closed: f64,
    /// `|dη - ω|` of a reference primitive.
    pub provider: f64,
    /// `|dτ^α - ω|` of the local primitives.
    pub local: f64,
    /// Spread of quantities that must be locally constant.
    pub constancy: f64,
    /// Cycle defect or constants-solve residual above which the family is
    /// declared not exact.
    pub exactness: f64,
    /// Intermediate identities of the higher-degree pipelines.
    pub identity: f64,
    /// `|dτ - ω|` of the glued output.
    pub residual: f64,
    /// Disagreement between overlapping branches of the output.
    pub mismatch: f64,
    /// `|δτ|` of the output cochain.
    pub delta: f64,
    /// Spread of `τ - oracle` in `y`.
    pub oracle: f64,
    /// Leafwise defect of an assembled foliated form.
    pub leafwise: f64,
    /// Growth of a difference quotient under step halving that counts as a
    /// discontinuity.
    pub jump_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            closed: 1e-9,
            provider: 1e-9,
            local: 1e-8,
            constancy: 1e-9,
            exactness: 1e-8,
            identity: 1e-7,
            residual: 1e-8,
            mismatch: 1e-8,
            delta: 1e-8,
            oracle: 1e-8,
            leafwise: 1e-8,
            jump_ratio: 10.0,
        }
    }
}

impl Tolerances {
    /// Defaults for families of `p`-forms: the higher-degree pipelines
    /// compare glued residuals at `1e-7`.
    pub fn for_degree(p: usize) -> Tolerances {
        let mut t = Tolerances::default();
        if p >= 2 {
            t.residual = 1e-7;
        }
        t
    }

    pub const KEYS: [&'static str; 12] = [
        "closed",
        "provider",
        "local",
        "constancy",
        "exactness",
        "identity",
        "residual",
        "mismatch",
        "delta",
        "oracle",
        "leafwise",
        "jump_ratio",
    ];

    fn slot(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "closed" => &mut self.closed,
            "provider" => &mut self.provider,
            "local" => &mut self.local,
            "constancy" => &mut self.constancy,
            "exactness" => &mut self.exactness,
            "identity" => &mut self.identity,
            "residual" => &mut self.residual,
            "mismatch" => &mut self.mismatch,
            "delta" => &mut self.delta,
            "oracle" => &mut self.oracle,
            "leafwise" => &mut self.leafwise,
            "jump_ratio" => &mut self.jump_ratio,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<(), GlueError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(GlueError::Config(format!("tolerance {key} must be positive and finite")));
        }
        let slot = self.slot(key).ok_or_else(|| GlueError::Config(format!("unknown tolerance `{key}`")))?;
        *slot = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_is_settable() {
        let mut t = Tolerances::default();
        for k in Tolerances::KEYS {
            t.set(k, 0.25).unwrap();
        }
        assert_eq!(t.jump_ratio, 0.25);
        assert!(t.set("bogus", 1.0).is_err());
        assert!(t.set("delta", -1.0).is_err());
        assert_eq!(Tolerances::for_degree(2).residual, 1e-7);
    }
}
