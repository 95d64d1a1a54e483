//! Reference implementations used only by tests. Nothing here depends on the
//! library under test: matrices are plain `Vec<Vec<f64>>` and every routine
//! is the textbook algorithm, chosen for clarity over speed.

pub type Mat = Vec<Vec<f64>>;

/// SplitMix64 generator, enough for drawing test instances.
#[derive(Debug, Clone)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Integer in `lo..hi`.
    pub fn below(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.next_u64() % (hi - lo) as u64) as usize
    }

    /// Box–Muller standard normal.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn random_symmetric(n: usize, rng: &mut SplitMix) -> Mat {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.range(-1.0, 1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn matvec(a: &Mat, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Cyclic Jacobi eigen-decomposition (row-by-row sweeps until the
/// off-diagonal mass vanishes). Returns eigenvalues in descending order and
/// the matching unit eigenvectors as columns of the second element
/// (`vectors[i][k]` is entry i of eigenvector k).
pub fn jacobi_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.len();
    let mut a = m.clone();
    let mut v: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = (0..n).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

/// `‖A‖₂` for symmetric `A`: the largest absolute eigenvalue.
pub fn symmetric_norm(a: &Mat) -> f64 {
    let (values, _) = jacobi_eigen(a);
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn eigenvector(vectors: &Mat, k: usize) -> Vec<f64> {
    vectors.iter().map(|row| row[k]).collect()
}

/// Largest singular value, as the square root of the top eigenvalue of `AᵀA`.
pub fn spectral_norm(a: &Mat) -> f64 {
    let gram = matmul(&transpose(a), a);
    jacobi_eigen(&gram).0.first().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Smallest singular value of a tall matrix via the Gram eigenvalues.
pub fn smallest_singular_value(a: &Mat) -> f64 {
    let gram = matmul(&transpose(a), a);
    jacobi_eigen(&gram).0.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Solves a square system by Gaussian elimination with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut aug: Mat = a.iter().zip(b).map(|(row, &r)| row.iter().copied().chain([r]).collect()).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        for i in col + 1..n {
            let f = aug[i][col] / aug[col][col];
            for k in col..=n {
                aug[i][k] -= f * aug[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| aug[i][k] * x[k]).sum();
        x[i] = (aug[i][n] - s) / aug[i][i];
    }
    x
}

/// OLS coefficients from `(WᵀW)β = Wᵀy`.
pub fn normal_equations(w: &Mat, y: &[f64]) -> Vec<f64> {
    let wt = transpose(w);
    solve(&matmul(&wt, w), &matvec(&wt, y))
}

/// Diagonal of `(WᵀW)⁻¹`, one solve per unit vector.
pub fn gram_inverse_diag(w: &Mat) -> Vec<f64> {
    let g = matmul(&transpose(w), w);
    let q = g.len();
    (0..q)
        .map(|k| {
            let e: Vec<f64> = (0..q).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
            solve(&g, &e)[k]
        })
        .collect()
}

pub fn relative_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn max_relative_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| relative_diff(*x, *y)).fold(0.0, f64::max)
}

/// Distance between two unit vectors up to sign.
pub fn sign_free_distance(a: &[f64], b: &[f64]) -> f64 {
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt();
    plus.min(minus)
}
