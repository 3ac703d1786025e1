//! Sparse and banded linear algebra for the grid operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::Execution;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n x n` matrix, summing duplicate entries.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self
            .vals
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Copy with `d[i]` added to the diagonal.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        let mut t = self.triplets();
        t.extend(d.iter().enumerate().map(|(i, v)| (i, i, *v)));
        Self::from_triplets(self.n, t)
    }

    /// Row scaling `diag(d) * A`.
    pub fn scale_rows(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= d[i];
            }
        }
        out
    }
}

/// LU factorization of a banded matrix with partial pivoting, stored in the
/// column-major band layout with `kl` extra rows for fill-in.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &Csr, exec: Execution) -> Result<Self> {
        let n = a.n;
        let (kl, ku) = a.bandwidths();
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        for (i, j, v) in a.triplets() {
            ab[j * ldab + kv + i - j] += v;
        }
        let mut piv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for r in 1..=km {
                if ab[col + r].abs() > best {
                    best = ab[col + r].abs();
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::SingularMatrix(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(c * ldab + kv + j - c, c * ldab + kv + j + jp - c);
                }
            }
            let pivot = ab[col];
            for r in 1..=km {
                ab[col + r] /= pivot;
            }
            if km == 0 || ju == j {
                continue;
            }
            let (head, tail) = ab.split_at_mut((j + 1) * ldab);
            let l = &head[col + 1..=col + km];
            let width = ju - j;
            let update = |k: usize, column: &mut [f64]| {
                let c = j + 1 + k;
                let t = column[kv + j - c];
                if t != 0.0 {
                    let base = kv + j + 1 - c;
                    for (r, lr) in l.iter().enumerate() {
                        column[base + r] -= lr * t;
                    }
                }
            };
            let cols = &mut tail[..width * ldab];
            crate::par::for_each_chunk(exec, cols, ldab, 16, update);
        }
        Ok(Self {
            n,
            kl,
            ku,
            ldab,
            ab,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                x.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let xj = x[j];
            if xj != 0.0 {
                for r in 1..=km {
                    x[j + r] -= self.ab[j * ldab + kv + r] * xj;
                }
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.ab[j * ldab + kv];
            let xj = x[j];
            if xj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    x[i] -= self.ab[j * ldab + kv + i - j] * xj;
                }
            }
        }
    }
}

/// Eigenpairs `(value, unit vector)` of a symmetric matrix nearest `shift`,
/// from shift-invert Lanczos with full reorthogonalization. Converged pairs
/// are locked and later runs stay orthogonal to them, which keeps the
/// iteration well conditioned when the shift is itself an eigenvalue and
/// resolves repeated eigenvalues. Every returned pair satisfies
/// `|A x - value x| <= tol * max(1, |A|_inf)`.
pub fn eigs_near(
    a: &Csr,
    shift: f64,
    count: usize,
    tol: f64,
    exec: Execution,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.n;
    let count = count.min(n);
    let shifted = a.plus_diagonal(&vec![-shift; n]);
    let lu = BandLu::factor(&shifted, exec)?;
    let scale = (0..n)
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(1.0f64, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::with_capacity(count);
    let mut steps = (2 * count + 30).min(n);
    while locked.len() < count {
        let free = n - locked.len();
        let start: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (basis, alpha, beta) = lanczos(&lu, &start, steps.min(free), &locked);
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| {
            eig.eigenvalues[y]
                .abs()
                .partial_cmp(&eig.eigenvalues[x].abs())
                .unwrap()
        });
        let mut worst = 0.0f64;
        let before = locked.len();
        for &k in order.iter().take(count - before) {
            let mut x = vec![0.0; n];
            for (q, b) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(q, k)];
                for i in 0..n {
                    x[i] += c * b[i];
                }
            }
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            let ax = a.matvec(&x);
            // Rayleigh quotient; shift + 1/theta loses digits next to the shift
            let value: f64 = ax.iter().zip(&x).map(|(p, q)| p * q).sum();
            let r = ax
                .iter()
                .zip(&x)
                .map(|(p, q)| (p - value * q).powi(2))
                .sum::<f64>()
                .sqrt()
                / scale;
            if r > tol {
                worst = r;
                break;
            }
            locked.push((value, x));
        }
        if locked.len() == before {
            if steps >= free || steps >= 600 {
                return Err(Error::EigenNonConvergence(worst));
            }
            steps = (steps * 2).min(n);
        }
    }
    locked.sort_by(|p, q| {
        (p.0 - shift)
            .abs()
            .partial_cmp(&(q.0 - shift).abs())
            .unwrap()
    });
    Ok(locked)
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>], locked: &[(f64, Vec<f64>)]) {
    for _ in 0..2 {
        for b in basis.iter().chain(locked.iter().map(|(_, x)| x)) {
            let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn lanczos(
    lu: &BandLu,
    start: &[f64],
    steps: usize,
    locked: &[(f64, Vec<f64>)],
) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let n = start.len();
    let mut q = start.to_vec();
    orthogonalize(&mut q, &[], locked);
    let s = norm(&q);
    q.iter_mut().for_each(|v| *v /= s);
    let mut basis = vec![q];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(steps as u64);
    for k in 0..steps {
        let mut w = lu.solve(&basis[k]);
        let a = dot(&w, &basis[k]);
        alpha.push(a);
        orthogonalize(&mut w, &basis, locked);
        if k + 1 == steps || basis.len() + locked.len() >= n {
            break;
        }
        let mut bnorm = norm(&w);
        if bnorm < 1e-12 * a.abs().max(1e-300) {
            // invariant subspace: continue with a fresh orthogonal direction
            w = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            orthogonalize(&mut w, &basis, locked);
            let fresh = norm(&w);
            w.iter_mut().for_each(|v| *v /= fresh);
            bnorm = 0.0;
        } else {
            w.iter_mut().for_each(|v| *v /= bnorm);
        }
        beta.push(bnorm);
        basis.push(w);
    }
    basis.truncate(alpha.len());
    (basis, alpha, beta)
}
