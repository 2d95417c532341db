//! Thomas algorithm with a reusable factorization.

/// Factored tridiagonal matrix. Rows are `sub[i] x[i-1] + diag[i] x[i] +
/// sup[i] x[i+1]`; `sub[0]` and `sup[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    sub: Vec<f64>,
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    /// Factor the matrix. Assumes no zero pivot, which holds for the
    /// diagonally dominant systems built by the solver.
    pub fn new(sub: &[f64], diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        assert!(n > 0, "empty system");
        assert!(sub.len() == n && sup.len() == n, "band length mismatch");
        let mut c_prime = vec![0.0; n];
        let mut inv_pivot = vec![0.0; n];
        inv_pivot[0] = 1.0 / diag[0];
        c_prime[0] = sup[0] * inv_pivot[0];
        for i in 1..n {
            let pivot = diag[i] - sub[i] * c_prime[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = if i + 1 < n { sup[i] * inv_pivot[i] } else { 0.0 };
        }
        Self { sub: sub.to_vec(), c_prime, inv_pivot }
    }

    /// `I + c * T` where `T = tridiag(-1, 2, -1)` of size `n`.
    pub fn identity_plus_laplacian(n: usize, c: f64) -> Self {
        Self::new(&vec![-c; n], &vec![1.0 + 2.0 * c; n], &vec![-c; n])
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrite `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.sub[i] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c_prime[i] * rhs[i + 1];
        }
    }
}
