//! Periodic grid operators on m×n images flattened column-major
//! (pixel (i, j) ↦ index i + j·m).

use super::LinearOperator;

#[inline]
fn wrap(idx: isize, len: usize) -> usize {
    let len = len as isize;
    let mut v = idx;
    if v < 0 {
        v += len;
    } else if v >= len {
        v -= len;
    }
    v as usize
}

/// First-order periodic finite differences stacked as D = (D¹; D²),
/// mapping ℝ^{mn} → ℝ^{2mn}:
///
/// * (D¹x)_{i,j} = x_{i+1,j} − x_{i,j}, wrapping x_{m+1,j} := x_{1,j};
/// * (D²x)_{i,j} = x_{i,j+1} − x_{i,j}, wrapping x_{i,n+1} := x_{i,1}.
pub struct PeriodicDiff {
    m: usize,
    n: usize,
}

impl PeriodicDiff {
    pub fn new(m: usize, n: usize) -> Self {
        assert!(m >= 1 && n >= 1);
        PeriodicDiff { m, n }
    }
}

impl LinearOperator for PeriodicDiff {
    fn in_dim(&self) -> usize {
        self.m * self.n
    }

    fn out_dim(&self) -> usize {
        2 * self.m * self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let mn = m * n;
        let (d1, d2) = out.split_at_mut(mn);
        for j in 0..n {
            let col = &x[j * m..(j + 1) * m];
            let d1col = &mut d1[j * m..(j + 1) * m];
            for i in 0..m {
                d1col[i] = col[if i + 1 == m { 0 } else { i + 1 }] - col[i];
            }
            let jnext = if j + 1 == n { 0 } else { j + 1 };
            let next_col = &x[jnext * m..(jnext + 1) * m];
            let d2col = &mut d2[j * m..(j + 1) * m];
            for i in 0..m {
                d2col[i] = next_col[i] - col[i];
            }
        }
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let mn = m * n;
        let (w1, w2) = y.split_at(mn);
        for j in 0..n {
            let w1col = &w1[j * m..(j + 1) * m];
            let w2col = &w2[j * m..(j + 1) * m];
            let jprev = if j == 0 { n - 1 } else { j - 1 };
            let w2prev = &w2[jprev * m..(jprev + 1) * m];
            let ocol = &mut out[j * m..(j + 1) * m];
            for i in 0..m {
                let iprev = if i == 0 { m - 1 } else { i - 1 };
                ocol[i] = (w1col[iprev] - w1col[i]) + (w2prev[i] - w2col[i]);
            }
        }
    }
}

/// Periodic 2-D correlation with an arbitrary odd-sized stencil,
/// out(i,j) = Σ_{a,b} w(a,b) · x(i+a, j+b) with indices wrapped.
/// The adjoint correlates with the flipped stencil; for symmetric kernels
/// (Gaussian blur) the operator is self-adjoint.
pub struct PeriodicConv2d {
    m: usize,
    n: usize,
    size: usize,
    weights: Vec<f64>, // (size × size) row-major, index (a+r)·size + (b+r)
}

impl PeriodicConv2d {
    pub fn new(m: usize, n: usize, size: usize, weights: Vec<f64>) -> Self {
        assert!(size % 2 == 1, "stencil size must be odd");
        assert_eq!(weights.len(), size * size);
        PeriodicConv2d {
            m,
            n,
            size,
            weights,
        }
    }

    fn correlate(&self, x: &[f64], out: &mut [f64], flip: bool) {
        let (m, n, s) = (self.m, self.n, self.size);
        let r = (s / 2) as isize;
        for j in 0..n {
            for i in 0..m {
                let mut acc = 0.0;
                for a in -r..=r {
                    let ii = if flip {
                        wrap(i as isize - a, m)
                    } else {
                        wrap(i as isize + a, m)
                    };
                    let wrow = &self.weights[((a + r) as usize) * s..((a + r) as usize + 1) * s];
                    for b in -r..=r {
                        let jj = if flip {
                            wrap(j as isize - b, n)
                        } else {
                            wrap(j as isize + b, n)
                        };
                        acc += wrow[(b + r) as usize] * x[ii + jj * m];
                    }
                }
                out[i + j * m] = acc;
            }
        }
    }
}

impl LinearOperator for PeriodicConv2d {
    fn in_dim(&self) -> usize {
        self.m * self.n
    }

    fn out_dim(&self) -> usize {
        self.m * self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.correlate(x, out, false);
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.correlate(y, out, true);
    }
}

/// Periodic correlation with a separable stencil w(a,b) = wv(a)·wh(b),
/// applied as a vertical pass followed by a horizontal pass.
pub struct SeparableConv2d {
    m: usize,
    n: usize,
    vertical: Vec<f64>,
    horizontal: Vec<f64>,
}

impl SeparableConv2d {
    pub fn new(m: usize, n: usize, vertical: Vec<f64>, horizontal: Vec<f64>) -> Self {
        assert!(vertical.len() % 2 == 1 && horizontal.len() % 2 == 1);
        SeparableConv2d {
            m,
            n,
            vertical,
            horizontal,
        }
    }

    pub fn dense_stencil(&self) -> (usize, Vec<f64>) {
        let s = self.vertical.len().max(self.horizontal.len());
        let r = s / 2;
        let pad = |w: &[f64]| -> Vec<f64> {
            let wr = w.len() / 2;
            let mut padded = vec![0.0; s];
            for (k, v) in w.iter().enumerate() {
                padded[k + r - wr] = *v;
            }
            padded
        };
        let (v, h) = (pad(&self.vertical), pad(&self.horizontal));
        let mut weights = vec![0.0; s * s];
        for a in 0..s {
            for b in 0..s {
                weights[a * s + b] = v[a] * h[b];
            }
        }
        (s, weights)
    }

    fn pass(&self, x: &[f64], out: &mut [f64], flip: bool) {
        let (m, n) = (self.m, self.n);
        let rv = (self.vertical.len() / 2) as isize;
        let rh = (self.horizontal.len() / 2) as isize;
        let sgn = if flip { -1isize } else { 1 };
        let mut tmp = vec![0.0; m * n];
        // vertical: within-column, stride 1
        for j in 0..n {
            let col = &x[j * m..(j + 1) * m];
            let tcol = &mut tmp[j * m..(j + 1) * m];
            for i in 0..m {
                let mut acc = 0.0;
                for (k, w) in self.vertical.iter().enumerate() {
                    let a = sgn * (k as isize - rv);
                    acc += w * col[wrap(i as isize + a, m)];
                }
                tcol[i] = acc;
            }
        }
        // horizontal: across columns
        for j in 0..n {
            let ocol = &mut out[j * m..(j + 1) * m];
            ocol.fill(0.0);
            for (k, w) in self.horizontal.iter().enumerate() {
                let b = sgn * (k as isize - rh);
                let jj = wrap(j as isize + b, n);
                let tcol = &tmp[jj * m..(jj + 1) * m];
                for i in 0..m {
                    ocol[i] += w * tcol[i];
                }
            }
        }
    }
}

impl LinearOperator for SeparableConv2d {
    fn in_dim(&self) -> usize {
        self.m * self.n
    }

    fn out_dim(&self) -> usize {
        self.m * self.n
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.pass(x, out, false);
    }

    fn adjoint_apply_into(&self, y: &[f64], out: &mut [f64]) {
        self.pass(y, out, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::{materialize, max_adjoint_rel_err};
    use crate::rng::CounterRng;
    use crate::vecops;

    #[test]
    fn diff_of_constant_is_zero() {
        let d = PeriodicDiff::new(4, 5);
        let out = d.apply(&[0.7; 20]);
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn diff_on_degenerate_grid_wraps_to_zero() {
        let d = PeriodicDiff::new(1, 1);
        assert_eq!(d.apply(&[3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn diff_matches_hand_built_dense_matrix() {
        // 3×3 grid: build the 18×9 matrix directly from the definition.
        let (m, n) = (3, 3);
        let mn = m * n;
        let idx = |i: usize, j: usize| i + j * m;
        let mut rows = vec![vec![0.0; mn]; 2 * mn];
        for j in 0..n {
            for i in 0..m {
                let r1 = idx(i, j);
                rows[r1][idx((i + 1) % m, j)] += 1.0;
                rows[r1][idx(i, j)] -= 1.0;
                let r2 = mn + idx(i, j);
                rows[r2][idx(i, (j + 1) % n)] += 1.0;
                rows[r2][idx(i, j)] -= 1.0;
            }
        }
        let d = PeriodicDiff::new(m, n);
        let dm = materialize(&d);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert_eq!(dm.get(r, c), *v, "entry ({r},{c})");
            }
        }
        let mut rng = CounterRng::new(3);
        let x = rng.normal_vec(mn);
        let via_rows: Vec<f64> = rows.iter().map(|row| vecops::dot(row, &x)).collect();
        assert!(vecops::rel_vec_gap(&d.apply(&x), &via_rows) == 0.0);
    }

    #[test]
    fn diff_adjoint_identity() {
        let d = PeriodicDiff::new(6, 4);
        let mut rng = CounterRng::new(4);
        assert!(max_adjoint_rel_err(&d, &mut rng, 100) <= 1e-10);
    }

    #[test]
    fn separable_matches_full_stencil() {
        let (m, n) = (6, 5);
        let v = vec![0.25, 0.5, 0.25];
        let h = vec![0.1, 0.3, 0.2, 0.3, 0.1];
        let sep = SeparableConv2d::new(m, n, v.clone(), h.clone());
        let (s, w) = sep.dense_stencil();
        let full = PeriodicConv2d::new(m, n, s, w);
        let mut rng = CounterRng::new(5);
        let x = rng.normal_vec(m * n);
        assert!(vecops::rel_vec_gap(&sep.apply(&x), &full.apply(&x)) <= 1e-14);
        assert!(vecops::rel_vec_gap(&sep.adjoint_apply(&x), &full.adjoint_apply(&x)) <= 1e-14);
    }

    #[test]
    fn asymmetric_stencil_adjoint_identity() {
        let conv = PeriodicConv2d::new(4, 3, 3, vec![0.0, 1.0, 0.0, -2.0, 0.5, 0.0, 0.0, 0.0, 3.0]);
        let mut rng = CounterRng::new(6);
        assert!(max_adjoint_rel_err(&conv, &mut rng, 100) <= 1e-10);
    }
}
