use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};

use super::ResetError;
use crate::lti::RationalTf;

/// Reset element: LTI state-space dynamics whose state is multiplied by the
/// diagonal reset matrix whenever the input crosses zero.
///
/// Reset coefficients lie in `(-1, 1]`; a coefficient of exactly `1` means the
/// state is never altered, which is how the base linear system is expressed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ResetElementRepr", into = "ResetElementRepr")]
pub struct ResetElement {
    a_r: DMatrix<f64>,
    b_r: DVector<f64>,
    c_r: RowDVector<f64>,
    d_r: f64,
    a_rho: DVector<f64>,
}

#[derive(Serialize, Deserialize)]
struct ResetElementRepr {
    #[serde(rename = "Ar")]
    a_r: Vec<Vec<f64>>,
    #[serde(rename = "Br")]
    b_r: Vec<f64>,
    #[serde(rename = "Cr")]
    c_r: Vec<f64>,
    #[serde(rename = "Dr")]
    d_r: f64,
    #[serde(rename = "Arho")]
    a_rho: Vec<f64>,
}

impl TryFrom<ResetElementRepr> for ResetElement {
    type Error = ResetError;

    fn try_from(r: ResetElementRepr) -> Result<Self, Self::Error> {
        let n = r.b_r.len();
        if r.a_r.len() != n || r.a_r.iter().any(|row| row.len() != n) {
            return Err(ResetError::Invalid(format!("Ar must be {n}x{n}")));
        }
        let a_r = DMatrix::from_fn(n, n, |i, j| r.a_r[i][j]);
        ResetElement::new(
            a_r,
            DVector::from_vec(r.b_r),
            RowDVector::from_vec(r.c_r),
            r.d_r,
            DVector::from_vec(r.a_rho),
        )
    }
}

impl From<ResetElement> for ResetElementRepr {
    fn from(e: ResetElement) -> Self {
        let n = e.order();
        ResetElementRepr {
            a_r: (0..n).map(|i| (0..n).map(|j| e.a_r[(i, j)]).collect()).collect(),
            b_r: e.b_r.iter().copied().collect(),
            c_r: e.c_r.iter().copied().collect(),
            d_r: e.d_r,
            a_rho: e.a_rho.iter().copied().collect(),
        }
    }
}

impl ResetElement {
    pub fn new(
        a_r: DMatrix<f64>,
        b_r: DVector<f64>,
        c_r: RowDVector<f64>,
        d_r: f64,
        a_rho: DVector<f64>,
    ) -> Result<Self, ResetError> {
        let n = b_r.len();
        if n == 0 {
            return Err(ResetError::Invalid("reset element needs at least one state".into()));
        }
        if a_r.nrows() != n || a_r.ncols() != n || c_r.len() != n || a_rho.len() != n {
            return Err(ResetError::Invalid(format!(
                "inconsistent dimensions for order-{n} reset element"
            )));
        }
        let all_finite = a_r.iter().chain(b_r.iter()).chain(c_r.iter()).all(|x| x.is_finite()) && d_r.is_finite();
        if !all_finite {
            return Err(ResetError::Invalid("non-finite state-space entry".into()));
        }
        if let Some(g) = a_rho.iter().find(|&&g| !(g > -1.0 && g <= 1.0)) {
            return Err(ResetError::Invalid(format!("reset coefficient {g} outside (-1, 1]")));
        }
        Ok(Self {
            a_r,
            b_r,
            c_r,
            d_r,
            a_rho,
        })
    }

    /// First-order element from scalar coefficients.
    pub fn first_order(a: f64, b: f64, c: f64, d: f64, a_rho: f64) -> Result<Self, ResetError> {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DVector::from_element(1, b),
            RowDVector::from_element(1, c),
            d,
            DVector::from_element(1, a_rho),
        )
    }

    /// Generalized first-order reset element `ω_r/(s + ω_r)`.
    pub fn gfore(omega_r: f64, a_rho: f64) -> Result<Self, ResetError> {
        Self::proportional_gfore(omega_r, 0.0, a_rho)
    }

    /// GFORE with a feedthrough term `D_r`.
    pub fn proportional_gfore(omega_r: f64, d_r: f64, a_rho: f64) -> Result<Self, ResetError> {
        if !(omega_r > 0.0) {
            return Err(ResetError::Invalid(format!("omega_r must be > 0, got {omega_r}")));
        }
        Self::first_order(-omega_r, 1.0, omega_r, d_r, a_rho)
    }

    /// Clegg integrator: `A_r = 0`, full reset.
    pub fn clegg() -> Self {
        Self::first_order(0.0, 1.0, 1.0, 0.0, 0.0).expect("valid constants")
    }

    /// Element with unit feedthrough and no reset action, i.e. a wire.
    pub fn passthrough() -> Self {
        Self::first_order(-1.0, 1.0, 0.0, 1.0, 1.0).expect("valid constants")
    }

    pub fn order(&self) -> usize {
        self.b_r.len()
    }

    pub fn a_r(&self) -> &DMatrix<f64> {
        &self.a_r
    }

    pub fn b_r(&self) -> &DVector<f64> {
        &self.b_r
    }

    pub fn c_r(&self) -> &RowDVector<f64> {
        &self.c_r
    }

    pub fn d_r(&self) -> f64 {
        self.d_r
    }

    pub fn a_rho(&self) -> &DVector<f64> {
        &self.a_rho
    }

    pub fn a_rho_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.a_rho)
    }

    /// True when every reset coefficient is exactly one.
    pub fn is_linear(&self) -> bool {
        self.a_rho.iter().all(|&g| g == 1.0)
    }

    /// Same dynamics with a different feedthrough term.
    pub fn with_d_r(&self, d_r: f64) -> Self {
        Self { d_r, ..self.clone() }
    }

    /// Same dynamics with every reset coefficient replaced.
    pub fn with_a_rho(&self, a_rho: f64) -> Result<Self, ResetError> {
        Self::new(
            self.a_r.clone(),
            self.b_r.clone(),
            self.c_r.clone(),
            self.d_r,
            DVector::from_element(self.order(), a_rho),
        )
    }
}

/// Transfer function of the base linear system, `C_r (sI − A_r)⁻¹ B_r + D_r`.
///
/// Uses the Faddeev–LeVerrier recursion for the characteristic polynomial and
/// the adjugate, which is exact for the small orders reset elements have.
pub fn bls_tf(el: &ResetElement) -> RationalTf {
    let n = el.order();
    let a = el.a_r();
    let mut char_poly = vec![1.0];
    let mut adj_terms = Vec::with_capacity(n);
    let mut nk = DMatrix::<f64>::identity(n, n);
    for k in 1..=n {
        adj_terms.push((el.c_r() * &nk * el.b_r())[(0, 0)]);
        let an = a * &nk;
        let ck = -an.trace() / k as f64;
        char_poly.push(ck);
        nk = an + DMatrix::identity(n, n) * ck;
    }
    // numerator = C adj(sI-A) B + D * char_poly, both in descending powers.
    let mut num = vec![0.0; n + 1];
    for (k, v) in adj_terms.iter().enumerate() {
        num[k + 1] += v;
    }
    for (k, p) in char_poly.iter().enumerate() {
        num[k] += el.d_r() * p;
    }
    RationalTf::new(num, char_poly)
        .expect("monic denominator")
        .with_label("bls")
}
