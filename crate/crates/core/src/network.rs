//! Multilayer network model and supra-adjacency assembly.
//!
//! Supra indices are layer-major: node `i` of layer `l` (both zero-based)
//! sits at row `l * N + i`. Column `l` of a centrality matrix `V` therefore
//! occupies block `l` of the supra eigenvector.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerNetwork {
    n_nodes: usize,
    intralayer: Vec<DenseMatrix>,
    /// Keyed by `(l, l2)` with `l < l2`; the `(l2, l)` block is the transpose.
    interlayer: BTreeMap<(usize, usize), DenseMatrix>,
}

impl MultilayerNetwork {
    pub fn new(
        intralayer: Vec<DenseMatrix>,
        interlayer: BTreeMap<(usize, usize), DenseMatrix>,
    ) -> Result<Self> {
        let n = intralayer
            .first()
            .map(DenseMatrix::rows)
            .ok_or_else(|| Error::InvalidArgument("a network needs at least one layer".into()))?;
        let n_layers = intralayer.len();
        for (l, a) in intralayer.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::dims(format!(
                    "layer {} is {}x{}, expected {n}x{n}",
                    l + 1,
                    a.rows(),
                    a.cols()
                )));
            }
            a.check_symmetric()?;
            if let Some(idx) = a.data().iter().position(|v| *v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "layer {} has negative weight at ({}, {})",
                    l + 1,
                    idx / n + 1,
                    idx % n + 1
                )));
            }
        }
        for (&(l, l2), d) in &interlayer {
            if l >= l2 || l2 >= n_layers {
                return Err(Error::IndexOutOfRange(format!(
                    "interlayer block ({}, {}) with {n_layers} layers; keys must satisfy l < l2",
                    l + 1,
                    l2 + 1
                )));
            }
            if d.shape() != (n, n) {
                return Err(Error::dims(format!(
                    "interlayer block ({}, {}) is {}x{}, expected {n}x{n}",
                    l + 1,
                    l2 + 1,
                    d.rows(),
                    d.cols()
                )));
            }
        }
        Ok(Self {
            n_nodes: n,
            intralayer,
            interlayer,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_layers(&self) -> usize {
        self.intralayer.len()
    }

    pub fn intralayer(&self, layer: usize) -> &DenseMatrix {
        &self.intralayer[layer]
    }

    /// Coupling block `D^(l, l2)`; blocks below the diagonal are transposes.
    pub fn interlayer(&self, l: usize, l2: usize) -> Option<DenseMatrix> {
        if l < l2 {
            self.interlayer.get(&(l, l2)).cloned()
        } else {
            self.interlayer.get(&(l2, l)).map(DenseMatrix::transpose)
        }
    }

    pub fn interlayer_blocks(&self) -> &BTreeMap<(usize, usize), DenseMatrix> {
        &self.interlayer
    }
}

/// Assembles the `NL x NL` supra-adjacency matrix.
pub fn assemble_supra(net: &MultilayerNetwork) -> Result<DenseMatrix> {
    let n = net.n_nodes();
    let size = n * net.n_layers();
    let mut supra = DenseMatrix::zeros(size, size);
    for (l, a) in net.intralayer.iter().enumerate() {
        place_block(&mut supra, a, l * n, l * n, false);
    }
    for (&(l, l2), d) in &net.interlayer {
        place_block(&mut supra, d, l * n, l2 * n, false);
        place_block(&mut supra, d, l2 * n, l * n, true);
    }
    supra.check_symmetric()?;
    Ok(supra)
}

fn place_block(target: &mut DenseMatrix, block: &DenseMatrix, row0: usize, col0: usize, transpose: bool) {
    for i in 0..block.rows() {
        for j in 0..block.cols() {
            let v = block[(i, j)];
            if transpose {
                target[(row0 + j, col0 + i)] = v;
            } else {
                target[(row0 + i, col0 + j)] = v;
            }
        }
    }
}

/// Block `(l, l2)` (zero-based layers) of a supra matrix with `n` nodes per layer.
pub fn supra_block(supra: &DenseMatrix, n: usize, l: usize, l2: usize) -> DenseMatrix {
    supra.submatrix(l * n, l2 * n, n, n)
}

/// Multiplex network: every interlayer block is the `N x N` identity.
pub fn make_multiplex(layers: Vec<DenseMatrix>) -> Result<MultilayerNetwork> {
    let n_layers = layers.len();
    let n = layers.first().map_or(0, DenseMatrix::rows);
    let mut interlayer = BTreeMap::new();
    for l in 0..n_layers {
        for l2 in (l + 1)..n_layers {
            interlayer.insert((l, l2), DenseMatrix::identity(n));
        }
    }
    MultilayerNetwork::new(layers, interlayer)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseStructure {
    /// I.i.d. entries on and above the diagonal of the whole supra matrix.
    FullSymmetric,
    /// Noise only inside the diagonal `block_size x block_size` blocks.
    BlockDiagonal { block_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_b: f64,
    pub structure: NoiseStructure,
    pub seed: u64,
}

/// Returns `(B, E0)` with `B = B0 + E0` and `E0` symmetric Gaussian noise.
pub fn perturb(b0: &DenseMatrix, spec: &NoiseSpec) -> Result<(DenseMatrix, DenseMatrix)> {
    b0.check_symmetric()?;
    if !(spec.sigma_b >= 0.0) || !spec.sigma_b.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sigma_b must be finite and nonnegative, got {}",
            spec.sigma_b
        )));
    }
    let size = b0.rows();
    if let NoiseStructure::BlockDiagonal { block_size } = spec.structure {
        if block_size == 0 || size % block_size != 0 {
            return Err(Error::dims(format!(
                "block size {block_size} does not divide supra size {size}"
            )));
        }
    }
    let mut e0 = DenseMatrix::zeros(size, size);
    if spec.sigma_b > 0.0 {
        let normal = Normal::new(0.0, spec.sigma_b).expect("validated sigma");
        let mut rng = rng::generator(spec.seed, streams::NETWORK_NOISE);
        for i in 0..size {
            let j_end = match spec.structure {
                NoiseStructure::FullSymmetric => size,
                NoiseStructure::BlockDiagonal { block_size } => (i / block_size + 1) * block_size,
            };
            for j in i..j_end {
                let v = normal.sample(&mut rng);
                e0[(i, j)] = v;
                e0[(j, i)] = v;
            }
        }
    }
    let b = b0.add(&e0)?;
    Ok((b, e0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn single_layer_supra_is_the_layer() {
        let a = layer(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let net = MultilayerNetwork::new(vec![a.clone()], BTreeMap::new()).unwrap();
        assert_eq!(assemble_supra(&net).unwrap(), a);
        assert!(make_multiplex(vec![a]).unwrap().interlayer_blocks().is_empty());
    }

    #[test]
    fn multiplex_of_zero_layers() {
        let z = DenseMatrix::zeros(1, 1);
        let supra = assemble_supra(&make_multiplex(vec![z.clone(), z]).unwrap()).unwrap();
        assert_eq!(supra, layer(&[&[0.0, 1.0], &[1.0, 0.0]]));

        let z2 = DenseMatrix::zeros(2, 2);
        let supra = assemble_supra(&make_multiplex(vec![z2.clone(), z2]).unwrap()).unwrap();
        let expected = layer(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(supra, expected);
    }

    #[test]
    fn three_layer_multiplex_has_identity_off_diagonal_blocks() {
        let a = layer(&[&[0.0, 1.5], &[1.5, 0.0]]);
        let net = make_multiplex(vec![a.clone(), a.clone(), a]).unwrap();
        let supra = assemble_supra(&net).unwrap();
        for l in 0..3 {
            for l2 in 0..3 {
                if l != l2 {
                    assert_eq!(supra_block(&supra, 2, l, l2), DenseMatrix::identity(2));
                }
            }
        }
    }

    #[test]
    fn validation_errors() {
        let asym = layer(&[&[0.0, 1.0], &[2.0, 0.0]]);
        assert!(matches!(
            MultilayerNetwork::new(vec![asym], BTreeMap::new()),
            Err(Error::AsymmetricInput { .. })
        ));
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::zeros(3, 3);
        assert!(matches!(make_multiplex(vec![a.clone(), b]), Err(Error::DimensionMismatch(_))));
        let mut inter = BTreeMap::new();
        inter.insert((1, 0), DenseMatrix::identity(2));
        assert!(MultilayerNetwork::new(vec![a.clone(), a], inter).is_err());
        let neg = layer(&[&[0.0, -1.0], &[-1.0, 0.0]]);
        assert!(matches!(
            MultilayerNetwork::new(vec![neg], BTreeMap::new()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn zero_noise_is_identity() {
        let b0 = layer(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let spec = NoiseSpec {
            sigma_b: 0.0,
            structure: NoiseStructure::FullSymmetric,
            seed: 3,
        };
        let (b, e0) = perturb(&b0, &spec).unwrap();
        assert_eq!(b, b0);
        assert_eq!(e0, DenseMatrix::zeros(2, 2));
    }

    #[test]
    fn block_diagonal_noise_stays_in_blocks() {
        let b0 = DenseMatrix::zeros(6, 6);
        let spec = NoiseSpec {
            sigma_b: 1.0,
            structure: NoiseStructure::BlockDiagonal { block_size: 3 },
            seed: 11,
        };
        let (_, e0) = perturb(&b0, &spec).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i / 3 != j / 3 {
                    assert_eq!(e0[(i, j)], 0.0);
                } else {
                    assert_ne!(e0[(i, j)], 0.0);
                }
            }
        }
        let bad = NoiseSpec {
            structure: NoiseStructure::BlockDiagonal { block_size: 4 },
            ..spec
        };
        assert!(perturb(&b0, &bad).is_err());
    }
}
