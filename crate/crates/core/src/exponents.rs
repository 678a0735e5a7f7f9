//! Critical exponents `p*`, `p#`, `q#` and the elementary facts relating them.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

use crate::spectrum::SpectralData;

/// A real number or `+inf`; serialized as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(*x),
            ExtReal::PosInf => None,
        }
    }

    /// `+inf` maps to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn cmp_f64(&self, x: f64) -> Ordering {
        match self {
            ExtReal::Finite(v) => v.partial_cmp(&x).expect("finite comparison"),
            ExtReal::PosInf => Ordering::Greater,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => ser.serialize_f64(*x),
            ExtReal::PosInf => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(x) => Ok(ExtReal::Finite(x)),
            Raw::Text(t) if t == "inf" => Ok(ExtReal::PosInf),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected number or \"inf\", got {t}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub theta: f64,
    pub p_star: f64,
    pub p_sharp: ExtReal,
    pub q_sharp: ExtReal,
}

/// Computes `p* = 1 + (2s+theta)/(-tau_-)`, `p#` and `q#`.
pub fn critical_exponents(spectral: &SpectralData, theta: f64) -> CriticalExponents {
    let s = spectral.params.s;
    let n = spectral.params.dim();
    let p_star = 1.0 + (2.0 * s + theta) / (-spectral.tau_minus);
    let p_sharp = if spectral.mu < 0.0 {
        ExtReal::Finite(1.0 + (2.0 * s + theta) / (-spectral.tau_plus))
    } else {
        ExtReal::PosInf
    };
    let q_sharp =
        if spectral.mu != 0.0 { ExtReal::Finite((n + theta) / (-spectral.tau_plus) - 1.0) } else { ExtReal::PosInf };
    CriticalExponents { theta, p_star, p_sharp, q_sharp }
}

/// The common value of `p*` and `p#` at `mu = mu_0`.
pub fn degenerate_exponent(spectral: &SpectralData, theta: f64) -> f64 {
    let n = spectral.params.dim();
    let s = spectral.params.s;
    (n + 2.0 * s + 2.0 * theta) / (n - 2.0 * s)
}

/// Order relations between the exponents, each computed from the formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentFacts {
    pub p_sharp_at_least_one: bool,
    pub p_sharp_below_one: bool,
    pub p_sharp_nonpositive: bool,
    pub p_star_above_one: bool,
    pub p_star_in_unit_interval: bool,
    pub q_sharp_above_p_sharp: bool,
}

/// Evaluates the facts by direct comparison of the computed exponents.
pub fn exponent_facts(exps: &CriticalExponents, _spectral: &SpectralData) -> ExponentFacts {
    let ps = exps.p_sharp.to_f64();
    let qs = exps.q_sharp.to_f64();
    ExponentFacts {
        p_sharp_at_least_one: ps >= 1.0,
        p_sharp_below_one: ps < 1.0,
        p_sharp_nonpositive: ps <= 0.0,
        p_star_above_one: exps.p_star > 1.0,
        p_star_in_unit_interval: exps.p_star > 0.0 && exps.p_star < 1.0,
        q_sharp_above_p_sharp: qs > ps,
    }
}

/// The same facts predicted from the position of `theta` alone.
pub fn predicted_facts(spectral: &SpectralData, theta: f64) -> ExponentFacts {
    let s = spectral.params.s;
    let neg_mu = spectral.mu < 0.0;
    ExponentFacts {
        p_sharp_at_least_one: !neg_mu || theta >= -2.0 * s,
        p_sharp_below_one: neg_mu && theta < -2.0 * s,
        p_sharp_nonpositive: neg_mu && theta <= spectral.tau_plus - 2.0 * s,
        p_star_above_one: theta > -2.0 * s,
        p_star_in_unit_interval: theta > spectral.tau_minus - 2.0 * s && theta < -2.0 * s,
        // q# - p# = (N - 2s)/(-tau_+) - 2, positive exactly when tau_+ is above the vertex.
        q_sharp_above_p_sharp: neg_mu && !spectral.degenerate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::Params;
    use crate::spectrum::solve_spectrum;

    fn p3() -> Params {
        Params::new(3, 0.5).unwrap()
    }

    #[test]
    fn degenerate_example() {
        let sp = solve_spectrum(&p3(), -2.0 / std::f64::consts::PI).unwrap();
        let e = critical_exponents(&sp, 0.0);
        assert!((e.p_star - 2.0).abs() < 1e-12);
        assert!((e.p_sharp.to_f64() - 2.0).abs() < 1e-12);
        assert!((degenerate_exponent(&sp, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_mu_example() {
        let sp = solve_spectrum(&p3(), 0.0).unwrap();
        let e = critical_exponents(&sp, 0.0);
        assert_eq!(e.p_star, 1.5);
        assert_eq!(e.p_sharp, ExtReal::PosInf);
        assert_eq!(e.q_sharp, ExtReal::PosInf);
    }

    #[test]
    fn theta_minus_two_s_gives_unit_exponents() {
        for mu in [-0.6, -0.3, 0.0, 2.0] {
            let sp = solve_spectrum(&p3(), mu).unwrap();
            let e = critical_exponents(&sp, -1.0);
            assert_eq!(e.p_star, 1.0);
            if mu < 0.0 {
                assert_eq!(e.p_sharp, ExtReal::Finite(1.0));
            }
        }
        let sp = solve_spectrum(&p3(), -0.3).unwrap();
        let e = critical_exponents(&sp, sp.tau_plus - 1.0);
        assert!(e.p_sharp.to_f64().abs() < 1e-15);
    }

    #[test]
    fn ext_real_json_round_trip() {
        for v in [ExtReal::PosInf, ExtReal::Finite(-2.5)] {
            let text = serde_json::to_string(&v).unwrap();
            assert_eq!(serde_json::from_str::<ExtReal>(&text).unwrap(), v);
        }
        assert_eq!(serde_json::to_string(&ExtReal::PosInf).unwrap(), "\"inf\"");
        assert!(ExtReal::PosInf.cmp_f64(1e300).is_gt());
    }
}
