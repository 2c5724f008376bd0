//! Direct solvers for tridiagonal and cyclic tridiagonal systems.

use crate::error::{Error, Result};

/// Tridiagonal matrix with sub-, main and super-diagonals of length `n`.
/// `lower[0]` and `upper[n-1]` are the cyclic corner entries and are ignored
/// by [`Tridiagonal::solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Factorization reused across right-hand sides.
#[derive(Clone, Debug)]
pub struct ThomasFactor {
    c_prime: Vec<f64>,
    denom: Vec<f64>,
    lower: Vec<f64>,
}

impl ThomasFactor {
    pub fn new(m: &Tridiagonal) -> Result<Self> {
        let n = m.diag.len();
        let mut c_prime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        for i in 0..n {
            let d = if i == 0 {
                m.diag[0]
            } else {
                m.diag[i] - m.lower[i] * c_prime[i - 1]
            };
            if !(d.abs() > 1e-300) || !d.is_finite() {
                return Err(Error::SolverFailure(format!("zero pivot at row {i}")));
            }
            denom[i] = d;
            if i + 1 < n {
                c_prime[i] = m.upper[i] / d;
            }
        }
        Ok(Self {
            c_prime,
            denom,
            lower: m.lower.clone(),
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        rhs[0] /= self.denom[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Product with the (optionally cyclic) matrix.
    pub fn apply(&self, x: &[f64], cyclic: bool) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                } else if cyclic {
                    v += self.lower[0] * x[n - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                } else if cyclic {
                    v += self.upper[n - 1] * x[0];
                }
                v
            })
            .collect()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let f = ThomasFactor::new(self)?;
        let mut x = rhs.to_vec();
        f.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Cyclic system solved by Sherman-Morrison around a Thomas factorization.
#[derive(Clone, Debug)]
pub struct CyclicFactor {
    inner: ThomasFactor,
    z: Vec<f64>,
    gamma: f64,
    beta: f64,
    v_dot_z: f64,
}

impl CyclicFactor {
    pub fn new(m: &Tridiagonal) -> Result<Self> {
        let n = m.len();
        if n < 3 {
            return Err(Error::SolverFailure("cyclic system needs n >= 3".into()));
        }
        let alpha = m.upper[n - 1];
        let beta = m.lower[0];
        let gamma = -m.diag[0];
        let mut modified = m.clone();
        modified.diag[0] -= gamma;
        modified.diag[n - 1] -= alpha * beta / gamma;
        let inner = ThomasFactor::new(&modified)?;
        let mut z = vec![0.0; n];
        z[0] = gamma;
        z[n - 1] = alpha;
        inner.solve_in_place(&mut z);
        let v_dot_z = z[0] + beta / gamma * z[n - 1];
        if !((1.0 + v_dot_z).abs() > 1e-300) {
            return Err(Error::SolverFailure("singular cyclic system".into()));
        }
        Ok(Self {
            inner,
            z,
            gamma,
            beta,
            v_dot_z,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        self.inner.solve_in_place(rhs);
        let fact = (rhs[0] + self.beta / self.gamma * rhs[n - 1]) / (1.0 + self.v_dot_z);
        for (x, z) in rhs.iter_mut().zip(&self.z) {
            *x -= fact * z;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Tridiagonal {
        Tridiagonal {
            lower: (0..n).map(|i| -1.0 - 0.1 * i as f64).collect(),
            diag: (0..n).map(|i| 4.0 + 0.05 * i as f64).collect(),
            upper: (0..n).map(|i| -0.7 + 0.01 * i as f64).collect(),
        }
    }

    #[test]
    fn thomas_inverts_apply() {
        let m = sample(17);
        let x: Vec<f64> = (0..17).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = m.apply(&x, false);
        let y = m.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn cyclic_inverts_apply() {
        let m = sample(11);
        let x: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut b = m.apply(&x, true);
        CyclicFactor::new(&m).unwrap().solve_in_place(&mut b);
        for (a, y) in x.iter().zip(&b) {
            assert!((a - y).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let m = Tridiagonal {
            lower: vec![0.0; 3],
            diag: vec![0.0, 1.0, 1.0],
            upper: vec![0.0; 3],
        };
        assert!(matches!(m.solve(&[1.0, 1.0, 1.0]), Err(Error::SolverFailure(_))));
    }
}
