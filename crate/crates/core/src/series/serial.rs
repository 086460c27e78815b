//! Text records for series: coefficients as canonical strings so that a
//! parse of the output reproduces the value exactly.

use serde::{Deserialize, Serialize};

use super::{LogVar, PseudoSeries, RatFn, SeriesError, SymPoly};
use crate::poly::Poly;
use crate::scalar::{fmt_gauss, parse_gauss, Sym};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRecord {
    pub name: String,
    /// `L = scale·t + shift`.
    pub scale: String,
    pub shift: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatFnRecord {
    pub q: usize,
    /// Numerator coefficients of `t^0, t^1, ...`.
    pub num: Vec<String>,
    /// Monic denominator coefficients of `t^0, t^1, ...`.
    pub den: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub variable: VariableRecord,
    pub order: usize,
    /// Nonzero coefficients in increasing `q`.
    pub coefficients: Vec<RatFnRecord>,
}

impl VariableRecord {
    pub fn of(var: &LogVar) -> VariableRecord {
        VariableRecord { name: var.name().to_string(), scale: var.scale().to_string(), shift: var.shift().to_string() }
    }

    pub fn to_var(&self) -> Result<LogVar, SeriesError> {
        let scale = Sym::parse(&self.scale).map_err(SeriesError::Malformed)?;
        let shift = Sym::parse(&self.shift).map_err(SeriesError::Malformed)?;
        LogVar::new(scale, shift)
    }
}

impl RatFnRecord {
    pub fn of(q: usize, c: &RatFn) -> RatFnRecord {
        RatFnRecord {
            q,
            num: c.num().coeffs().iter().map(Sym::to_string).collect(),
            den: c.den().coeffs().iter().map(fmt_gauss).collect(),
        }
    }

    pub fn to_ratfn(&self) -> Result<RatFn, SeriesError> {
        let num: Vec<Sym> = self.num.iter().map(|s| Sym::parse(s)).collect::<Result<_, _>>().map_err(SeriesError::Malformed)?;
        let den: Vec<_> = self.den.iter().map(|s| parse_gauss(s)).collect::<Result<_, _>>().map_err(SeriesError::Malformed)?;
        RatFn::new(SymPoly::from_coeffs(&num), Poly::from_coeffs(den))
            .map_err(|e| SeriesError::Malformed(format!("c_{}: {e}", self.q)))
    }
}

impl SeriesRecord {
    pub fn of(s: &PseudoSeries) -> SeriesRecord {
        SeriesRecord {
            variable: VariableRecord::of(s.var()),
            order: s.order(),
            coefficients: s
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(q, c)| RatFnRecord::of(q, c))
                .collect(),
        }
    }

    pub fn to_series(&self) -> Result<PseudoSeries, SeriesError> {
        let var = self.variable.to_var()?;
        let mut terms = Vec::with_capacity(self.coefficients.len());
        for r in &self.coefficients {
            if r.q > self.order {
                return Err(SeriesError::Malformed(format!("q = {} exceeds order {}", r.q, self.order)));
            }
            terms.push((r.q, r.to_ratfn()?));
        }
        Ok(PseudoSeries::from_terms(var, self.order, terms))
    }
}

impl PseudoSeries {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SeriesRecord::of(self)).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<PseudoSeries, SeriesError> {
        let r: SeriesRecord = serde_json::from_str(text).map_err(|e| SeriesError::Malformed(e.to_string()))?;
        r.to_series()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{gq, gq_int, rat};

    #[test]
    fn json_round_trip_is_exact() {
        let ell = RatFn::var();
        let c = ell
            .mul(&RatFn::from_sym(&Sym::pi()))
            .add(&RatFn::from_sym(&Sym::gamma()))
            .div(&ell.sub(&RatFn::from_gauss(gq(rat(1, 3), rat(-2, 1)))))
            .unwrap();
        let s = PseudoSeries::from_terms(LogVar::ell(), 5, vec![(2, RatFn::from_gauss(gq_int(7))), (5, c)]);
        let text = s.to_json();
        let back = PseudoSeries::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn malformed_records_are_rejected() {
        assert!(PseudoSeries::from_json("{").is_err());
        let bad = r#"{"variable":{"name":"L","scale":"1","shift":"0"},"order":1,
            "coefficients":[{"q":3,"num":["1"],"den":["1"]}]}"#;
        assert!(matches!(PseudoSeries::from_json(bad), Err(SeriesError::Malformed(_))));
        let zero_den = r#"{"variable":{"name":"L","scale":"1","shift":"0"},"order":1,
            "coefficients":[{"q":1,"num":["1"],"den":[]}]}"#;
        assert!(PseudoSeries::from_json(zero_den).is_err());
    }
}
