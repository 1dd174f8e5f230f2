//! The derivation-length meta-complexity bound `O(D^h)`.

use std::fmt;

use num_bigint::BigUint;

use crate::syntax::Program;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityBound {
    /// Largest number of head constraints in a rule.
    pub heads: usize,
    /// Measured derivation length, if any.
    pub derivation_length: Option<usize>,
}

impl ComplexityBound {
    pub fn symbolic(&self) -> String {
        match self.heads {
            0 | 1 => "O(D)".into(),
            h => format!("O(D^{h})"),
        }
    }

    /// `D^h` for a measured `D`.
    pub fn numeric(&self) -> Option<BigUint> {
        self.derivation_length.map(|d| BigUint::from(d).pow(self.heads.max(1) as u32))
    }
}

pub fn complexity_bound(program: &Program, derivation_length: Option<usize>) -> ComplexityBound {
    ComplexityBound { heads: program.max_heads(), derivation_length }
}

impl fmt::Display for ComplexityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "h={}", self.heads)?;
        writeln!(f, "BOUND: {}", self.symbolic())?;
        if let (Some(d), Some(n)) = (self.derivation_length, self.numeric()) {
            writeln!(f, "D={d}")?;
            writeln!(f, "D^h={n}")?;
        }
        Ok(())
    }
}
