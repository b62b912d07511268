//! Explicit Runge-Kutta coefficient tableaus and their stability functions.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::DMat;
use crate::scalar::Real;

/// Explicit Runge-Kutta method (A, b, c) with strictly lower triangular A.
#[derive(Clone, Debug)]
pub struct ButcherTableau<R> {
    name: String,
    a: DMat<R>,
    b: Vec<R>,
    c: Vec<R>,
}

impl<R: Real> ButcherTableau<R> {
    pub fn new(name: impl Into<String>, a: DMat<R>, b: Vec<R>, c: Vec<R>) -> Result<Self> {
        let s = b.len();
        if a.rows() != s || a.cols() != s || c.len() != s || s == 0 {
            return Err(Error::InvalidTableau("inconsistent stage counts".into()));
        }
        for i in 0..s {
            for j in i..s {
                if a[(i, j)] != R::zero() {
                    return Err(Error::InvalidTableau(format!(
                        "A({i},{j}) nonzero; explicit methods need strictly lower triangular A"
                    )));
                }
            }
        }
        let sum_b: R = b.iter().copied().sum();
        if (sum_b - R::one()).abs() > R::of(1e-12) {
            return Err(Error::InvalidTableau(format!(
                "coefficients b must sum to 1 (got {sum_b})"
            )));
        }
        Ok(Self {
            name: name.into(),
            a,
            b,
            c,
        })
    }

    /// Forward Euler: one stage, φ(z) = 1 + z.
    pub fn explicit_euler() -> Self {
        Self::new("euler", DMat::zeros(1, 1), vec![R::one()], vec![R::zero()]).unwrap()
    }

    /// Heun's two-stage method, φ(z) = 1 + z + z²/2.
    pub fn heun() -> Self {
        let mut a = DMat::zeros(2, 2);
        a[(1, 0)] = R::one();
        Self::new(
            "heun",
            a,
            vec![R::half(), R::half()],
            vec![R::zero(), R::one()],
        )
        .unwrap()
    }

    /// Third-order strong-stability-preserving method, φ(z) = 1 + z + z²/2 + z³/6.
    pub fn ssprk3() -> Self {
        let mut a = DMat::zeros(3, 3);
        a[(1, 0)] = R::one();
        a[(2, 0)] = R::of(0.25);
        a[(2, 1)] = R::of(0.25);
        Self::new(
            "ssprk3",
            a,
            vec![R::of(1.0 / 6.0), R::of(1.0 / 6.0), R::of(2.0 / 3.0)],
            vec![R::zero(), R::one(), R::half()],
        )
        .unwrap()
    }

    /// Built-in method by name.
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "euler" | "explicit_euler" | "forward_euler" => Ok(Self::explicit_euler()),
            "heun" => Ok(Self::heun()),
            "ssprk3" => Ok(Self::ssprk3()),
            other => Err(Error::UnknownTableau(other.into())),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["euler", "heun", "ssprk3"]
    }

    /// Load from a JSON document {name, s, A, b, c}.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct TableauDoc {
            name: String,
            s: usize,
            #[serde(rename = "A")]
            a: Vec<Vec<f64>>,
            b: Vec<f64>,
            c: Vec<f64>,
        }
        let doc: TableauDoc = serde_json::from_str(text)?;
        if doc.a.len() != doc.s || doc.a.iter().any(|row| row.len() != doc.s) {
            return Err(Error::InvalidTableau("A must be s×s".into()));
        }
        let a = DMat::from_fn(doc.s, doc.s, |i, j| R::of(doc.a[i][j]));
        Self::new(
            doc.name,
            a,
            doc.b.iter().map(|&x| R::of(x)).collect(),
            doc.c.iter().map(|&x| R::of(x)).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMat<R> {
        &self.a
    }

    pub fn b(&self) -> &[R] {
        &self.b
    }

    pub fn c(&self) -> &[R] {
        &self.c
    }

    /// Stability function φ(z) = 1 + z·bᵀ(I - zA)⁻¹1, evaluated by forward
    /// substitution; (I - zA) is unit lower triangular for explicit methods.
    pub fn stability_function(&self, z: R) -> R {
        let s = self.stages();
        let mut y = vec![R::one(); s];
        for i in 0..s {
            let mut acc = R::one();
            for j in 0..i {
                acc += z * self.a[(i, j)] * y[j];
            }
            y[i] = acc;
        }
        let mut phi = R::one();
        for i in 0..s {
            phi += z * self.b[i] * y[i];
        }
        phi
    }

    /// Row vector wᵀ = μ·bᵀ(I + μA)⁻¹ obtained from the transposed
    /// (unit upper triangular) system by back substitution.
    pub fn weighted_b_row(&self, mu: R) -> Vec<R> {
        let s = self.stages();
        let mut v = vec![R::zero(); s];
        for i in (0..s).rev() {
            let mut acc = self.b[i];
            for j in i + 1..s {
                // (Aᵀ)_{ij} = a_{ji}
                acc -= mu * self.a[(j, i)] * v[j];
            }
            v[i] = acc;
        }
        for vi in &mut v {
            *vi *= mu;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_stability_is_one_plus_z() {
        let tab = ButcherTableau::<f64>::explicit_euler();
        assert_eq!(tab.stability_function(-1.0), 0.0);
        assert!((tab.stability_function(0.3) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn heun_stability_value() {
        let tab = ButcherTableau::<f64>::heun();
        // φ(-μ) = 1 - μ + μ²/2, so φ(-1) = 0.5
        assert!((tab.stability_function(-1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ssprk3_stability_matches_cubic_polynomial() {
        let tab = ButcherTableau::<f64>::ssprk3();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..50 {
            let mu = 3.0 * next();
            let poly = 1.0 - mu + mu * mu / 2.0 - mu * mu * mu / 6.0;
            let phi = tab.stability_function(-mu);
            assert!((phi - poly).abs() < 1e-13, "mu = {mu}");
        }
    }

    #[test]
    fn weighted_b_row_reproduces_stability_identity() {
        // μ·bᵀ(I + μA)⁻¹·1 = 1 - φ(-μ)
        for tab in [
            ButcherTableau::<f64>::explicit_euler(),
            ButcherTableau::heun(),
            ButcherTableau::ssprk3(),
        ] {
            for k in 1..40 {
                let mu = 0.08 * k as f64;
                let w = tab.weighted_b_row(mu);
                let sum: f64 = w.iter().sum();
                let expected = 1.0 - tab.stability_function(-mu);
                assert!((sum - expected).abs() < 1e-13, "{} mu={mu}", tab.name());
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "name": "midpoint",
            "s": 2,
            "A": [[0.0, 0.0], [0.5, 0.0]],
            "b": [0.0, 1.0],
            "c": [0.0, 0.5]
        }"#;
        let tab = ButcherTableau::<f64>::from_json(text).unwrap();
        assert_eq!(tab.stages(), 2);
        // φ(z) = 1 + z + z²/2 for the explicit midpoint rule
        assert!((tab.stability_function(-1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_explicit_tableau_is_rejected() {
        let mut a = DMat::zeros(1, 1);
        a[(0, 0)] = 1.0;
        assert!(ButcherTableau::<f64>::new("implicit", a, vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn inconsistent_weights_are_rejected() {
        let a = DMat::zeros(1, 1);
        assert!(ButcherTableau::<f64>::new("bad", a, vec![0.5], vec![0.0]).is_err());
    }
}
