/// Dense LU factorization with partial pivoting, `P·A = L·U`, row-major storage.
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    /// Returns `None` when a pivot falls below `tol` relative to the largest entry.
    pub(crate) fn factor(n: usize, mut a: Vec<f64>, tol: f64) -> Option<Self> {
        debug_assert_eq!(a.len(), n * n);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tol * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..(k + 1) * n];
            for i in 0..(n - k - 1) {
                let row_i = &mut bottom[i * n..(i + 1) * n];
                let factor = row_i[k] / pivot;
                if factor == 0.0 {
                    continue;
                }
                row_i[k] = factor;
                for j in (k + 1)..n {
                    row_i[j] -= factor * row_k[j];
                }
            }
        }
        Some(Self { n, lu: a, perm })
    }

    /// Solves `A·x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `Aᵀ·y = c` in place.
    pub(crate) fn solve_transpose(&self, c: &mut [f64]) {
        let n = self.n;
        // Uᵀ z = c
        let mut z = c.to_vec();
        for i in 0..n {
            z[i] /= self.lu[i * n + i];
            let zi = z[i];
            if zi != 0.0 {
                let row = &self.lu[i * n..(i + 1) * n];
                for j in (i + 1)..n {
                    z[j] -= row[j] * zi;
                }
            }
        }
        // Lᵀ w = z
        for i in (0..n).rev() {
            let wi = z[i];
            if wi != 0.0 {
                let row = &self.lu[i * n..i * n + i];
                for j in 0..i {
                    z[j] -= row[j] * wi;
                }
            }
        }
        // y = Pᵀ w
        for (i, &p) in self.perm.iter().enumerate() {
            c[p] = z[i];
        }
    }
}
