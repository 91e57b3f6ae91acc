//! Grounded Laplacian systems `A x = b` where `A = D - W` is restricted to the
//! free vertices of a network. Every connected component of free vertices
//! touches a grounded (Dirichlet) vertex, so `A` is symmetric positive definite.
//!
//! Small systems are factored densely (Cholesky); large ones go through
//! Jacobi-preconditioned conjugate gradients. Both stop on the same scaled
//! residual `max_i |b_i - (A x)_i| / A_ii`, which for a voltage problem is
//! exactly the harmonicity defect at vertex `i`.

use crate::error::{LabError, Result};

/// Systems at or below this size are solved by dense Cholesky.
pub const DENSE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    Dense,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct LaplacianSystem {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

/// Accumulates conductances before freezing them into a [`LaplacianSystem`].
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    diag: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

impl SystemBuilder {
    pub fn new(n: usize) -> Self {
        SystemBuilder {
            diag: vec![0.0; n],
            couplings: Vec::new(),
        }
    }

    /// Conductance `c` between free unknowns `i` and `j`.
    pub fn couple(&mut self, i: usize, j: usize, c: f64) {
        debug_assert_ne!(i, j);
        self.diag[i] += c;
        self.diag[j] += c;
        self.couplings.push((i, j, c));
    }

    /// Conductance `c` from unknown `i` to a grounded vertex.
    pub fn ground(&mut self, i: usize, c: f64) {
        self.diag[i] += c;
    }

    pub fn build(self) -> LaplacianSystem {
        let n = self.diag.len();
        let mut counts = vec![0usize; n];
        for &(i, j, _) in &self.couplings {
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + counts[i];
        }
        let mut cursor = offsets[..n].to_vec();
        let mut cols = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        for &(i, j, c) in &self.couplings {
            cols[cursor[i]] = j;
            weights[cursor[i]] = c;
            cursor[i] += 1;
            cols[cursor[j]] = i;
            weights[cursor[j]] = c;
            cursor[j] += 1;
        }
        LaplacianSystem {
            diag: self.diag,
            offsets,
            cols,
            weights,
        }
    }
}

impl LaplacianSystem {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let mut acc = self.diag[i] * x[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc -= self.weights[k] * x[self.cols[k]];
            }
            out[i] = acc;
        }
    }

    /// `max_i |b_i - (A x)_i| / A_ii`.
    pub fn scaled_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.len()];
        self.apply(x, &mut ax);
        (0..self.len())
            .map(|i| ((b[i] - ax[i]) / self.diag[i]).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, b: &[f64], tol: f64, method: SolveMethod) -> Result<Vec<f64>> {
        assert_eq!(b.len(), self.len());
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if let Some(i) = self.diag.iter().position(|&d| d <= 0.0) {
            return Err(LabError::invalid(format!("unknown {i} has no conductance")));
        }
        let dense = match method {
            SolveMethod::Dense => true,
            SolveMethod::ConjugateGradient => false,
            SolveMethod::Auto => self.len() <= DENSE_LIMIT,
        };
        if dense {
            let x = self.solve_dense(b)?;
            // One refinement sweep tightens the residual on badly scaled rows.
            let mut ax = vec![0.0; self.len()];
            self.apply(&x, &mut ax);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.solve_dense(&r)?;
            let x: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            if self.scaled_residual(&x, b) <= tol {
                return Ok(x);
            }
            // Fall through to CG polishing from the dense answer.
            self.pcg(b, x, tol)
        } else {
            self.pcg(b, vec![0.0; self.len()], tol)
        }
    }

    fn dense_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = self.diag[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                a[i * n + self.cols[k]] -= self.weights[k];
            }
        }
        a
    }

    fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        let l = cholesky(self.dense_matrix(), n)?;
        Ok(cholesky_solve(&l, n, b))
    }

    fn pcg(&self, b: &[f64], mut x: Vec<f64>, tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let max_iter = 50 * n + 2000;
        let inv_diag: Vec<f64> = self.diag.iter().map(|d| 1.0 / d).collect();
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
        let scaled = |r: &[f64]| {
            r.iter()
                .zip(&inv_diag)
                .map(|(ri, di)| (ri * di).abs())
                .fold(0.0, f64::max)
        };
        // Aim below the contract so the recomputed residual still passes.
        let target = 0.25 * tol;
        if scaled(&r) <= target {
            return Ok(x);
        }
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for iter in 1..=max_iter {
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if iter % 64 == 0 {
                self.apply(&x, &mut ax);
                for i in 0..n {
                    r[i] = b[i] - ax[i];
                }
            }
            if scaled(&r) <= target {
                self.apply(&x, &mut ax);
                for i in 0..n {
                    r[i] = b[i] - ax[i];
                }
                if scaled(&r) <= tol {
                    return Ok(x);
                }
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let residual = self.scaled_residual(&x, b);
        if residual <= tol {
            Ok(x)
        } else {
            Err(LabError::NoConvergence {
                iterations: max_iter,
                residual,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place lower Cholesky factor of a row-major SPD matrix.
fn cholesky(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LabError::invalid("grounded Laplacian is not positive definite"));
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(a)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    y
}
