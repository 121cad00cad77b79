//! `(M,g)`-forms: sums of `M` successive functionals, each of dual norm at
//! most `g(M)^{-1}`, with total dual norm at most 1.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::engines::{EngineError, Functional};
use crate::value::Val;

/// A certified `(M,g)`-form. `part_bound` is the certified per-part dual
/// bound actually achieved, and `g_name` records which `g` the bound was
/// checked against.
#[derive(Debug, Clone)]
pub struct MgForm {
    pub m: u64,
    pub parts: Vec<Functional>,
    pub functional: Functional,
    pub part_bound: Val,
    pub g_name: String,
}

impl MgForm {
    /// An `(M,f)`-form from `inner` functionals of dual norm at most 1:
    /// `f(M)^{-1} (g_1 + ... + g_M)`. Its dual norm is at most 1 by the
    /// lower f-estimate, and it is an `(M,g)`-form for every `g <= f`
    /// since `g(M)^{-1} >= f(M)^{-1}`.
    pub fn f_form(m: u64, inner: Vec<Functional>) -> Result<MgForm, EngineError> {
        if inner.is_empty() || inner.len() as u64 > m {
            return Err(EngineError::InvalidParams(format!(
                "an (M,f)-form carries between 1 and M = {m} parts, got {}",
                inner.len()
            )));
        }
        if !successive(&inner) {
            return Err(EngineError::InvalidParams("parts must be successive".into()));
        }
        let one = Val::one();
        for g in &inner {
            let d = g.dual_norm_upper();
            if d > one {
                return Err(EngineError::InvalidParams(format!(
                    "part dual norm not certifiable at most 1 (bound {})",
                    d.decimal()
                )));
            }
        }
        let functional = Functional::MForm { m, parts: inner.clone() };
        Ok(MgForm {
            m,
            parts: inner,
            functional,
            part_bound: one.div_f(m),
            g_name: "f".into(),
        })
    }

    /// A form from explicit parts, each certified against the bound
    /// `g(M)^{-1}` given as `part_bound`; the overall dual norm must be
    /// certifiable at most 1 from the parts (else the admissibility is not
    /// establishable at the current certification depth).
    pub fn from_parts(
        m: u64,
        parts: Vec<Functional>,
        part_bound: Val,
        g_name: &str,
    ) -> Result<MgForm, EngineError> {
        if parts.is_empty() || parts.len() as u64 > m {
            return Err(EngineError::InvalidParams(format!(
                "an (M,g)-form carries between 1 and M = {m} parts, got {}",
                parts.len()
            )));
        }
        if !successive(&parts) {
            return Err(EngineError::InvalidParams("parts must be successive".into()));
        }
        for g in &parts {
            let d = g.dual_norm_upper();
            if d > part_bound {
                return Err(EngineError::InvalidParams(format!(
                    "part dual bound {} exceeds g(M)^-1 = {}",
                    d.decimal(),
                    part_bound.decimal()
                )));
            }
        }
        let functional = Functional::Sum(parts.clone());
        let total = functional.dual_norm_upper();
        if total > Val::one() {
            return Err(EngineError::InvalidParams(format!(
                "overall dual norm not certifiable at most 1 (bound {})",
                total.decimal()
            )));
        }
        Ok(MgForm { m, parts, functional, part_bound, g_name: g_name.into() })
    }

    /// Pair against a vector.
    pub fn pair(&self, x: &crate::vec::FinVec) -> Val {
        self.functional.pair(x)
    }
}

fn successive(parts: &[Functional]) -> bool {
    parts.windows(2).all(|w| w[0].range().before(&w[1].range()))
}
