//! Scaling-and-squaring matrix exponential with diagonal Padé approximants.
//!
//! The driver is generic over [`PadeAlgebra`] so the same code runs on plain
//! dense matrices and on the structured block embedding used for φ-functions
//! (see [`PhiEmbedding`]), whose products cost `k + 1` dense products instead
//! of the `(k + 1)^3` a naive dense embedding would need.

use nalgebra::DMatrix;

/// Backward-error thresholds θ_m for the degree-m diagonal Padé approximant
/// in double precision (Higham 2005).
const THETA_3: f64 = 1.495_585_217_958_292e-2;
const THETA_5: f64 = 2.539_398_330_063_230e-1;
const THETA_7: f64 = 9.504_178_996_162_932e-1;
const THETA_9: f64 = 2.097_847_961_257_068;
const THETA_13: f64 = 5.371_920_351_148_152;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Operations the Padé driver needs from a matrix-like type.
pub(crate) trait PadeAlgebra: Clone {
    /// Multiplicative identity of the same shape.
    fn identity_like(&self) -> Self;
    /// Induced 1-norm of the (possibly embedded) matrix.
    fn norm1(&self) -> f64;
    fn matmul(&self, rhs: &Self) -> Self;
    fn scale(&mut self, alpha: f64);
    /// `self += alpha * other`
    fn add_scaled(&mut self, alpha: f64, other: &Self);
    /// Solves `lhs * X = rhs`; `None` when `lhs` is singular.
    fn solve(lhs: &Self, rhs: &Self) -> Option<Self>;
}

/// Returns `None` only if the Padé denominator is singular, which cannot
/// happen for finite input within the θ bounds.
pub(crate) fn expm_pade<T: PadeAlgebra>(a: &T) -> Option<T> {
    let norm = a.norm1();
    let ident = a.identity_like();
    if norm == 0.0 {
        return Some(ident);
    }

    for (theta, coeffs) in [
        (THETA_3, &B3[..]),
        (THETA_5, &B5[..]),
        (THETA_7, &B7[..]),
        (THETA_9, &B9[..]),
    ] {
        if norm <= theta {
            return pade_low(a, &ident, coeffs);
        }
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let mut scaled = a.clone();
    scaled.scale(2f64.powi(-squarings));
    let mut result = pade13(&scaled, &ident)?;
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    Some(result)
}

fn pade_low<T: PadeAlgebra>(a: &T, ident: &T, b: &[f64]) -> Option<T> {
    let a2 = a.matmul(a);
    // even powers A^0, A^2, A^4, ...
    let mut powers = vec![ident.clone(), a2.clone()];
    while 2 * powers.len() < b.len() {
        let next = powers.last().unwrap().matmul(&a2);
        powers.push(next);
    }

    let mut u_inner = ident.clone();
    u_inner.scale(b[1]);
    let mut v = ident.clone();
    v.scale(b[0]);
    for (k, p) in powers.iter().enumerate().skip(1) {
        u_inner.add_scaled(b[2 * k + 1], p);
        v.add_scaled(b[2 * k], p);
    }
    let u = a.matmul(&u_inner);
    finish(u, v)
}

fn pade13<T: PadeAlgebra>(a: &T, ident: &T) -> Option<T> {
    let b = &B13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let mut u_hi = a6.clone();
    u_hi.scale(b[13]);
    u_hi.add_scaled(b[11], &a4);
    u_hi.add_scaled(b[9], &a2);
    let mut u_inner = a6.matmul(&u_hi);
    u_inner.add_scaled(b[7], &a6);
    u_inner.add_scaled(b[5], &a4);
    u_inner.add_scaled(b[3], &a2);
    u_inner.add_scaled(b[1], ident);
    let u = a.matmul(&u_inner);

    let mut v_hi = a6.clone();
    v_hi.scale(b[12]);
    v_hi.add_scaled(b[10], &a4);
    v_hi.add_scaled(b[8], &a2);
    let mut v = a6.matmul(&v_hi);
    v.add_scaled(b[6], &a6);
    v.add_scaled(b[4], &a4);
    v.add_scaled(b[2], &a2);
    v.add_scaled(b[0], ident);

    finish(u, v)
}

/// r = (V - U)^{-1} (V + U)
fn finish<T: PadeAlgebra>(u: T, v: T) -> Option<T> {
    let mut num = v.clone();
    num.add_scaled(1.0, &u);
    let mut den = v;
    den.add_scaled(-1.0, &u);
    T::solve(&den, &num)
}

fn add_scaled(dst: &mut DMatrix<f64>, alpha: f64, src: &DMatrix<f64>) {
    dst.zip_apply(src, |x, y| *x += alpha * y);
}

fn max_col_abs_sum(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl PadeAlgebra for DMatrix<f64> {
    fn identity_like(&self) -> Self {
        DMatrix::identity(self.nrows(), self.ncols())
    }

    fn norm1(&self) -> f64 {
        max_col_abs_sum(self)
    }

    fn matmul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn scale(&mut self, alpha: f64) {
        *self *= alpha;
    }

    fn add_scaled(&mut self, alpha: f64, other: &Self) {
        add_scaled(self, alpha, other);
    }

    fn solve(lhs: &Self, rhs: &Self) -> Option<Self> {
        lhs.clone().lu().solve(rhs)
    }
}

/// Structured form of the block matrix
///
/// ```text
/// [ X  R_1 ... R_k ]
/// [ 0   P ⊗ I_n    ]
/// ```
///
/// where `P = Σ p_l N^l` is a k×k upper-triangular Toeplitz matrix in the
/// nilpotent shift `N`. These matrices form a closed algebra, and the
/// exponential of `[[M, I, 0, ..], [0, N ⊗ I]]` has first block row
/// `[e^M, φ_1(M), ..., φ_k(M)]`.
#[derive(Clone, Debug)]
pub(crate) struct PhiEmbedding {
    pub head: DMatrix<f64>,
    pub row: Vec<DMatrix<f64>>,
    pub tail: Vec<f64>,
}

impl PhiEmbedding {
    pub fn new(m: &DMatrix<f64>, k: usize) -> Self {
        let n = m.nrows();
        let mut row = vec![DMatrix::zeros(n, n); k];
        if k > 0 {
            row[0] = DMatrix::identity(n, n);
        }
        let mut tail = vec![0.0; k];
        if k > 1 {
            tail[1] = 1.0;
        }
        Self {
            head: m.clone(),
            row,
            tail,
        }
    }

    fn k(&self) -> usize {
        self.tail.len()
    }
}

/// Truncated product of two power series in the nilpotent shift.
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let k = a.len();
    (0..k)
        .map(|j| (0..=j).map(|l| a[l] * b[j - l]).sum())
        .collect()
}

/// Solves `a * x = b` for truncated power series; requires `a[0] != 0`.
fn series_div(b: &[f64], a: &[f64]) -> Option<Vec<f64>> {
    let k = a.len();
    if k == 0 {
        return Some(Vec::new());
    }
    if a[0] == 0.0 {
        return None;
    }
    let mut x = vec![0.0; k];
    for j in 0..k {
        let acc: f64 = (1..=j).map(|l| a[l] * x[j - l]).sum();
        x[j] = (b[j] - acc) / a[0];
    }
    Some(x)
}

impl PadeAlgebra for PhiEmbedding {
    fn identity_like(&self) -> Self {
        let n = self.head.nrows();
        let k = self.k();
        let mut tail = vec![0.0; k];
        if k > 0 {
            tail[0] = 1.0;
        }
        Self {
            head: DMatrix::identity(n, n),
            row: vec![DMatrix::zeros(n, n); k],
            tail,
        }
    }

    fn norm1(&self) -> f64 {
        let mut best = max_col_abs_sum(&self.head);
        let mut tail_abs = 0.0;
        for (j, r) in self.row.iter().enumerate() {
            tail_abs += self.tail[j].abs();
            best = best.max(max_col_abs_sum(r) + tail_abs);
        }
        best
    }

    fn matmul(&self, rhs: &Self) -> Self {
        let head = &self.head * &rhs.head;
        let row = (0..self.k())
            .map(|j| {
                let mut block = &self.head * &rhs.row[j];
                for i in 0..=j {
                    let p = rhs.tail[j - i];
                    if p != 0.0 {
                        add_scaled(&mut block, p, &self.row[i]);
                    }
                }
                block
            })
            .collect();
        Self {
            head,
            row,
            tail: series_mul(&self.tail, &rhs.tail),
        }
    }

    fn scale(&mut self, alpha: f64) {
        self.head *= alpha;
        for r in &mut self.row {
            *r *= alpha;
        }
        for p in &mut self.tail {
            *p *= alpha;
        }
    }

    fn add_scaled(&mut self, alpha: f64, other: &Self) {
        add_scaled(&mut self.head, alpha, &other.head);
        for (r, o) in self.row.iter_mut().zip(&other.row) {
            add_scaled(r, alpha, o);
        }
        for (p, o) in self.tail.iter_mut().zip(&other.tail) {
            *p += alpha * o;
        }
    }

    fn solve(lhs: &Self, rhs: &Self) -> Option<Self> {
        let tail = series_div(&rhs.tail, &lhs.tail)?;
        let lu = lhs.head.clone().lu();
        let head = lu.solve(&rhs.head)?;
        let mut row = Vec::with_capacity(lhs.k());
        for j in 0..lhs.k() {
            let mut r = rhs.row[j].clone();
            for i in 0..=j {
                let p = tail[j - i];
                if p != 0.0 {
                    add_scaled(&mut r, -p, &lhs.row[i]);
                }
            }
            row.push(lu.solve(&r)?);
        }
        Some(Self { head, row, tail })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(e: &PhiEmbedding) -> DMatrix<f64> {
        let n = e.head.nrows();
        let k = e.k();
        let mut out = DMatrix::zeros(n * (k + 1), n * (k + 1));
        out.view_mut((0, 0), (n, n)).copy_from(&e.head);
        for j in 0..k {
            out.view_mut((0, n * (j + 1)), (n, n)).copy_from(&e.row[j]);
            for i in 0..=j {
                for d in 0..n {
                    out[(n * (i + 1) + d, n * (j + 1) + d)] = e.tail[j - i];
                }
            }
        }
        out
    }

    fn sample(k: usize, seed: f64) -> PhiEmbedding {
        let n = 3;
        let f = |i: usize, j: usize| ((i * 7 + j * 3) as f64 * seed).sin();
        PhiEmbedding {
            head: DMatrix::from_fn(n, n, f) + DMatrix::identity(n, n) * 3.0,
            row: (0..k)
                .map(|l| DMatrix::from_fn(n, n, |i, j| f(i + l, j + 2 * l)))
                .collect(),
            tail: (0..k).map(|l| 1.0 + (l as f64 * seed).cos()).collect(),
        }
    }

    #[test]
    fn embedding_ops_match_dense_ops() {
        for k in 0..4 {
            let a = sample(k, 0.37);
            let b = sample(k, 1.91);
            let prod = dense(&a.matmul(&b));
            assert!((prod - dense(&a) * dense(&b)).amax() < 1e-12);

            let x = PhiEmbedding::solve(&a, &b).unwrap();
            assert!((dense(&a) * dense(&x) - dense(&b)).amax() < 1e-10);

            assert!((a.norm1() - dense(&a).norm1()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_exponential_is_identity() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(expm_pade(&z).unwrap(), DMatrix::identity(4, 4));
    }
}
