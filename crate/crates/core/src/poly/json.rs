//! JSON form `{dim, mode, terms: [{exps, num, den}]}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Coeff, Poly};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exps: Vec<u32>,
    pub num: Value,
    pub den: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    pub dim: usize,
    pub mode: String,
    pub terms: Vec<TermJson>,
}

impl<C: Coeff> Poly<C> {
    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            dim: self.dim(),
            mode: C::MODE.to_string(),
            terms: self
                .terms()
                .map(|(e, c)| {
                    let (num, den) = c.to_json_pair();
                    TermJson {
                        exps: e.clone(),
                        num,
                        den,
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &PolyJson) -> Result<Self> {
        if doc.mode != C::MODE {
            return Err(Error::Format(format!(
                "expected mode {:?}, found {:?}",
                C::MODE,
                doc.mode
            )));
        }
        let mut p = Poly::zero(doc.dim);
        for t in &doc.terms {
            if t.exps.len() != doc.dim {
                return Err(Error::Format(format!(
                    "term {:?} does not have {} exponents",
                    t.exps, doc.dim
                )));
            }
            p.add_term(t.exps.clone(), C::from_json_pair(&t.num, &t.den)?);
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{q, FPoly, RPoly};
    use super::*;

    #[test]
    fn rational_round_trip() {
        let p = &RPoly::var(2, 0).pow(3).scale(&q(-7, 12)) + &RPoly::constant(2, q(1, 3));
        let text = serde_json::to_string(&p.to_json()).unwrap();
        assert!(text.contains("\"mode\":\"rational\""));
        assert!(text.contains("\"num\":\"-7\",\"den\":\"12\""));
        let doc: PolyJson = serde_json::from_str(&text).unwrap();
        assert_eq!(RPoly::from_json(&doc).unwrap(), p);
    }

    #[test]
    fn double_round_trip_and_mode_check() {
        let p = FPoly::var(3, 1).scale(&0.25);
        let doc = p.to_json();
        assert_eq!(doc.terms[0].den, serde_json::json!(1));
        assert_eq!(FPoly::from_json(&doc).unwrap(), p);
        assert!(RPoly::from_json(&doc).is_err());
    }
}
