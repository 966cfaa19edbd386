//! Banded matrices and an LU factorization without pivoting.
//!
//! Every system solved here is either symmetric positive definite (the
//! ground-state operator) or of the form `W + i·τ·K` with `W` positive
//! diagonal and `K` symmetric positive semidefinite (Crank–Nicolson), so all
//! leading minors are nonzero and pivoting is unnecessary.

use num_traits::NumAssign;

/// Square matrix with `bw` sub- and super-diagonals, stored row-wise as
/// `n × (2·bw + 1)` with the diagonal in column `bw`.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Copy + NumAssign> BandMatrix<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (2 * bw + 1)],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw, "({i},{j}) outside band");
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i.abs_diff(j) > self.bw {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `y = A·x`.
    pub fn mul_vec<V>(&self, x: &[V]) -> Vec<V>
    where
        V: Copy + NumAssign + std::ops::Mul<T, Output = V>,
    {
        assert_eq!(x.len(), self.n);
        let w = 2 * self.bw + 1;
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                let row = &self.data[i * w..(i + 1) * w];
                let mut acc = V::zero();
                for j in lo..=hi {
                    acc += x[j] * row[j + self.bw - i];
                }
                acc
            })
            .collect()
    }

    /// Builds `alpha·self + diag` as a matrix over another scalar type.
    pub fn combine<U, F>(&self, diag: &[U], map: F) -> BandMatrix<U>
    where
        U: Copy + NumAssign,
        F: Fn(T) -> U,
    {
        assert_eq!(diag.len(), self.n);
        let mut out = BandMatrix::zeros(self.n, self.bw);
        for (o, v) in out.data.iter_mut().zip(&self.data) {
            *o = map(*v);
        }
        for (i, d) in diag.iter().enumerate() {
            out.add(i, i, *d);
        }
        out
    }

    /// In-place LU factorization (Doolittle, no pivoting).
    pub fn factor(mut self) -> Option<BandLu<T>> {
        let (n, bw) = (self.n, self.bw);
        let w = 2 * bw + 1;
        for k in 0..n {
            let pivot = self.data[k * w + bw];
            if pivot == T::zero() {
                return None;
            }
            let last = (k + bw).min(n - 1);
            for i in (k + 1)..=last {
                // (i, j) lives at i*w + j + bw - i
                let ik = i * w + k + bw - i;
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                for j in (k + 1)..=last {
                    let kj = self.data[k * w + j + bw - k];
                    self.data[i * w + j + bw - i] -= l * kj;
                }
            }
        }
        Some(BandLu { m: self })
    }
}

/// Factored band matrix ready for repeated solves.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    m: BandMatrix<T>,
}

impl<T: Copy + NumAssign> BandLu<T> {
    /// Solves `A·x = b` in place.
    pub fn solve_in_place<V>(&self, b: &mut [V])
    where
        V: Copy + NumAssign + std::ops::Mul<T, Output = V> + std::ops::Div<T, Output = V>,
    {
        let (n, bw) = (self.m.n, self.m.bw);
        let w = 2 * bw + 1;
        let data = &self.m.data;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &data[i * w..(i + 1) * w];
            let mut acc = b[i];
            for j in lo..i {
                acc -= b[j] * row[j + bw - i];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let row = &data[i * w..(i + 1) * w];
            let mut acc = b[i];
            for j in (i + 1)..=hi {
                acc -= b[j] * row[j + bw - i];
            }
            b[i] = acc / row[bw];
        }
    }
}
