use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LtiError;

/// Magnitude below which a denominator evaluation counts as a pole hit.
pub const POLE_GUARD: f64 = 1e-300;

/// Continuous-time rational transfer function in `s`.
///
/// Coefficients are stored in descending powers of `s`; leading zeros are
/// stripped on construction so `num[0]` and `den[0]` are the true leading terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalTfRepr", into = "RationalTfRepr")]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RationalTfRepr {
    num: Vec<f64>,
    den: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<RationalTfRepr> for RationalTf {
    type Error = LtiError;

    fn try_from(r: RationalTfRepr) -> Result<Self, Self::Error> {
        let tf = RationalTf::new(r.num, r.den)?;
        Ok(match r.label {
            Some(l) => tf.with_label(l),
            None => tf,
        })
    }
}

impl From<RationalTf> for RationalTfRepr {
    fn from(tf: RationalTf) -> Self {
        RationalTfRepr {
            num: tf.num,
            den: tf.den,
            label: tf.label,
        }
    }
}

fn strip_leading_zeros(mut c: Vec<f64>) -> Vec<f64> {
    let first = c.iter().position(|&x| x != 0.0).unwrap_or(c.len());
    c.drain(..first);
    c
}

/// Horner evaluation of a real polynomial at a complex point.
pub(crate) fn polyval(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

pub(crate) fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl RationalTf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self, LtiError> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(LtiError::Invalid("non-finite coefficient".into()));
        }
        let num = strip_leading_zeros(num);
        let den = strip_leading_zeros(den);
        if den.is_empty() {
            return Err(LtiError::Invalid(
                "denominator leading coefficient must be nonzero".into(),
            ));
        }
        let num = if num.is_empty() { vec![0.0] } else { num };
        Ok(Self { num, den, label: None })
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: vec![k],
            den: vec![1.0],
            label: None,
        }
    }

    pub fn unity() -> Self {
        Self::gain(1.0)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num_degree() <= self.den_degree()
    }

    /// Evaluates the transfer function at an arbitrary complex point.
    pub fn eval_s(&self, s: Complex64) -> Result<Complex64, LtiError> {
        let d = polyval(&self.den, s);
        if d.norm() < POLE_GUARD {
            return Err(LtiError::Singular { s });
        }
        Ok(polyval(&self.num, s) / d)
    }

    /// Frequency response at `s = jω`.
    pub fn eval(&self, omega: f64) -> Result<Complex64, LtiError> {
        if !(omega >= 0.0) {
            return Err(LtiError::Invalid(format!(
                "frequency must be non-negative, got {omega}"
            )));
        }
        self.eval_s(Complex64::new(0.0, omega))
    }

    /// DC gain, `None` when the transfer function has a pole at the origin.
    pub fn dc_gain(&self) -> Option<f64> {
        let d = *self.den.last().unwrap();
        if d == 0.0 {
            None
        } else {
            Some(self.num.last().unwrap() / d)
        }
    }

    /// Series connection `self · other`.
    pub fn series(&self, other: &RationalTf) -> RationalTf {
        RationalTf {
            num: polymul(&self.num, &other.num),
            den: polymul(&self.den, &other.den),
            label: None,
        }
    }

    pub fn scale(&self, k: f64) -> RationalTf {
        RationalTf {
            num: self.num.iter().map(|c| c * k).collect(),
            den: self.den.clone(),
            label: self.label.clone(),
        }
    }
}

/// Standalone form of [`RationalTf::eval`].
pub fn eval_tf(tf: &RationalTf, omega: f64) -> Result<Complex64, LtiError> {
    tf.eval(omega)
}

/// Series chain of rational factors evaluated factor by factor.
///
/// Keeping the factors separate avoids forming high-order polynomials whose
/// coefficients span many decades, both for frequency evaluation and for the
/// cascaded discrete realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(from = "ChainRepr", into = "Vec<RationalTf>")]
pub struct TfChain {
    factors: Vec<RationalTf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ChainRepr {
    Many(Vec<RationalTf>),
    One(RationalTf),
}

impl From<ChainRepr> for TfChain {
    fn from(r: ChainRepr) -> Self {
        match r {
            ChainRepr::Many(v) => TfChain { factors: v },
            ChainRepr::One(tf) => TfChain { factors: vec![tf] },
        }
    }
}

impl From<TfChain> for Vec<RationalTf> {
    fn from(c: TfChain) -> Self {
        c.factors
    }
}

impl From<RationalTf> for TfChain {
    fn from(tf: RationalTf) -> Self {
        TfChain { factors: vec![tf] }
    }
}

impl FromIterator<RationalTf> for TfChain {
    fn from_iter<I: IntoIterator<Item = RationalTf>>(iter: I) -> Self {
        TfChain {
            factors: iter.into_iter().collect(),
        }
    }
}

impl TfChain {
    pub fn unity() -> Self {
        Self::default()
    }

    pub fn factors(&self) -> &[RationalTf] {
        &self.factors
    }

    pub fn is_unity(&self) -> bool {
        self.factors.iter().all(|f| f.num() == [1.0] && f.den() == [1.0])
    }

    pub fn then(mut self, tf: RationalTf) -> Self {
        self.factors.push(tf);
        self
    }

    pub fn chain(mut self, other: &TfChain) -> Self {
        self.factors.extend(other.factors.iter().cloned());
        self
    }

    pub fn eval_s(&self, s: Complex64) -> Result<Complex64, LtiError> {
        self.factors
            .iter()
            .try_fold(Complex64::new(1.0, 0.0), |acc, f| Ok(acc * f.eval_s(s)?))
    }

    pub fn eval(&self, omega: f64) -> Result<Complex64, LtiError> {
        self.factors
            .iter()
            .try_fold(Complex64::new(1.0, 0.0), |acc, f| Ok(acc * f.eval(omega)?))
    }

    /// Collapses the chain into one rational function.
    pub fn to_tf(&self) -> RationalTf {
        self.factors.iter().fold(RationalTf::unity(), |acc, f| acc.series(f))
    }

    pub fn is_proper(&self) -> bool {
        let (n, d) = self
            .factors
            .iter()
            .fold((0, 0), |(n, d), f| (n + f.num_degree(), d + f.den_degree()));
        n <= d
    }
}
