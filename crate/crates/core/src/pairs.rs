//! Pair-based dataset model: two-sided sample lists, positive/negative
//! pairs, fold assignments, and the partially projected difference
//! matrices the per-mode scatters are built from.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Left (parent) and right (child) sample lists of equal length and
/// uniform shape.
#[derive(Debug, Clone)]
pub struct Dataset {
    left: Vec<Tensor>,
    right: Vec<Tensor>,
}

impl Dataset {
    pub fn new(left: Vec<Tensor>, right: Vec<Tensor>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::ShapeMismatch(format!(
                "left/right sample counts differ: {} vs {}",
                left.len(),
                right.len()
            )));
        }
        if left.is_empty() {
            return Err(Error::InvalidArgument("dataset has no samples".into()));
        }
        let shape = left[0].shape().to_vec();
        for (i, t) in left.iter().chain(right.iter()).enumerate() {
            if t.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch(format!(
                    "sample {} has shape {:?}, expected {:?}",
                    i,
                    t.shape(),
                    shape
                )));
            }
        }
        Ok(Dataset { left, right })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        self.left[0].shape()
    }

    pub fn left(&self, i: usize) -> &Tensor {
        &self.left[i]
    }

    pub fn right(&self, i: usize) -> &Tensor {
        &self.right[i]
    }

    pub fn left_samples(&self) -> &[Tensor] {
        &self.left
    }

    pub fn right_samples(&self) -> &[Tensor] {
        &self.right
    }

    /// Order-1 view of the dataset: every sample vectorized. The linear
    /// methods run on this.
    pub fn vectorized(&self) -> Dataset {
        let flatten = |ts: &[Tensor]| {
            ts.iter()
                .map(|t| Tensor::from_vector(&t.vectorize()))
                .collect()
        };
        Dataset {
            left: flatten(&self.left),
            right: flatten(&self.right),
        }
    }
}

/// Index pair into a [`Dataset`]: `(left index, right index)`.
pub type PairIndex = (usize, usize);

/// Positive (same-class) and negative (different-class) pairs with fold
/// assignments. Pair ids are canonical: positives keep their list index,
/// negatives follow at `positives.len() + j`. Fold ids live in `1..=K`;
/// `0` marks an unassigned fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    positives: Vec<PairIndex>,
    negatives: Vec<PairIndex>,
    /// One entry per pair, positives first.
    fold_of_pair: Vec<u32>,
}

impl PairSet {
    pub fn new(
        positives: Vec<PairIndex>,
        negatives: Vec<PairIndex>,
        folds: Option<Vec<u32>>,
        n_samples: usize,
    ) -> Result<Self> {
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::EmptyPairs(
                "need at least one positive and one negative pair".into(),
            ));
        }
        for &(l, r) in positives.iter().chain(negatives.iter()) {
            if l >= n_samples || r >= n_samples {
                return Err(Error::InvalidArgument(format!(
                    "pair ({l},{r}) indexes outside the {n_samples} samples"
                )));
            }
        }
        for p in &positives {
            if negatives.contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "pair ({},{}) listed as both positive and negative",
                    p.0, p.1
                )));
            }
        }
        let total = positives.len() + negatives.len();
        let fold_of_pair = match folds {
            Some(f) => {
                if f.len() != total {
                    return Err(Error::InvalidFolds(format!(
                        "fold list has {} entries for {} pairs",
                        f.len(),
                        total
                    )));
                }
                f
            }
            None => vec![0; total],
        };
        Ok(PairSet {
            positives,
            negatives,
            fold_of_pair,
        })
    }

    pub fn positives(&self) -> &[PairIndex] {
        &self.positives
    }

    pub fn negatives(&self) -> &[PairIndex] {
        &self.negatives
    }

    pub fn n_pairs(&self) -> usize {
        self.fold_of_pair.len()
    }

    /// Fold of the pair with canonical id `pair_id`.
    pub fn fold_of(&self, pair_id: usize) -> u32 {
        self.fold_of_pair[pair_id]
    }

    pub fn folds(&self) -> &[u32] {
        &self.fold_of_pair
    }

    pub fn label_of(&self, pair_id: usize) -> bool {
        pair_id < self.positives.len()
    }

    pub fn pair(&self, pair_id: usize) -> PairIndex {
        if pair_id < self.positives.len() {
            self.positives[pair_id]
        } else {
            self.negatives[pair_id - self.positives.len()]
        }
    }

    /// Round-robin fold assignment over a seeded shuffle, separately for
    /// positives and negatives, so each fold gets equal counts per class.
    pub fn assign_folds(&mut self, k: u32, seed: u64) -> Result<()> {
        if k < 1 {
            return Err(Error::InvalidFolds("fold count must be >= 1".into()));
        }
        if self.positives.len() % k as usize != 0 || self.negatives.len() % k as usize != 0 {
            return Err(Error::InvalidFolds(format!(
                "cannot balance {} positives / {} negatives over {} folds",
                self.positives.len(),
                self.negatives.len(),
                k
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..self.positives.len()).collect();
        order.shuffle(&mut rng);
        for (slot, &i) in order.iter().enumerate() {
            self.fold_of_pair[i] = (slot % k as usize) as u32 + 1;
        }
        let mut order: Vec<usize> = (0..self.negatives.len()).collect();
        order.shuffle(&mut rng);
        let base = self.positives.len();
        for (slot, &i) in order.iter().enumerate() {
            self.fold_of_pair[base + i] = (slot % k as usize) as u32 + 1;
        }
        Ok(())
    }

    /// Checks the fold invariants against a fold count: every id in 1..=K
    /// appears and per-fold positive and negative counts agree.
    pub fn validate_folds(&self, k: u32) -> Result<()> {
        if k < 1 {
            return Err(Error::InvalidFolds("fold count must be >= 1".into()));
        }
        let mut pos_counts = vec![0usize; k as usize + 1];
        let mut neg_counts = vec![0usize; k as usize + 1];
        for (id, &f) in self.fold_of_pair.iter().enumerate() {
            if f < 1 || f > k {
                return Err(Error::InvalidFolds(format!(
                    "pair {id} has fold {f}, expected 1..={k}"
                )));
            }
            if self.label_of(id) {
                pos_counts[f as usize] += 1;
            } else {
                neg_counts[f as usize] += 1;
            }
        }
        for f in 1..=k as usize {
            if pos_counts[f] == 0 && neg_counts[f] == 0 {
                return Err(Error::InvalidFolds(format!("fold {f} is empty")));
            }
            if pos_counts[f] != neg_counts[f] {
                return Err(Error::InvalidFolds(format!(
                    "fold {f} has {} positives but {} negatives",
                    pos_counts[f], neg_counts[f]
                )));
            }
        }
        Ok(())
    }

    /// Positive and negative pairs outside the held-out fold.
    pub fn training_split(&self, held_out: u32) -> (Vec<PairIndex>, Vec<PairIndex>) {
        let pos = self
            .positives
            .iter()
            .enumerate()
            .filter(|(i, _)| self.fold_of_pair[*i] != held_out)
            .map(|(_, &p)| p)
            .collect();
        let base = self.positives.len();
        let neg = self
            .negatives
            .iter()
            .enumerate()
            .filter(|(j, _)| self.fold_of_pair[base + *j] != held_out)
            .map(|(_, &p)| p)
            .collect();
        (pos, neg)
    }
}

/// Per-mode projections in application orientation (`I'_o x I_o`); `None`
/// leaves a mode untouched.
pub type ModeProjections<'a> = [Option<&'a DMatrix<f64>>];

/// Mode-k unfolding of the pairwise difference after projecting every
/// other mode: column `p` is the partially projected mode-k fiber
/// difference. `projections[mode]` is ignored.
pub fn difference_matrix(
    ds: &Dataset,
    pair: PairIndex,
    mode: usize,
    projections: &ModeProjections,
) -> Result<DMatrix<f64>> {
    let order = ds.shape().len();
    if mode >= order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    if projections.len() != order {
        return Err(Error::ShapeMismatch(format!(
            "{} projections supplied for an order-{} tensor",
            projections.len(),
            order
        )));
    }
    let mut diff = ds.left(pair.0).sub(ds.right(pair.1))?;
    for (o, proj) in projections.iter().enumerate() {
        if o == mode {
            continue;
        }
        if let Some(w) = proj {
            diff = diff.mode_product(w, o)?;
        }
    }
    diff.unfold(mode)
}

/// Difference matrices for a whole pair list, in list order.
pub fn difference_matrices(
    ds: &Dataset,
    pairs: &[PairIndex],
    mode: usize,
    projections: &ModeProjections,
) -> Result<Vec<DMatrix<f64>>> {
    pairs
        .iter()
        .map(|&p| difference_matrix(ds, p, mode, projections))
        .collect()
}
