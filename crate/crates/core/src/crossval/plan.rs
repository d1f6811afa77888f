use rand::seq::SliceRandom;
use rand::Rng;

use super::latin::LatinSquare;
use crate::{Error, Result};

/// Assignment of every row to one of `n_folds` validation blocks.
///
/// Folds are numbered `0..n_folds`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvPlan {
    fold_of_row: Vec<usize>,
    n_folds: usize,
}

impl CvPlan {
    pub fn from_assignment(fold_of_row: Vec<usize>, n_folds: usize) -> Result<Self> {
        if n_folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {n_folds}")));
        }
        let mut count = vec![0usize; n_folds];
        for &f in &fold_of_row {
            if f >= n_folds {
                return Err(Error::InvalidParameter(format!("fold index {f} >= {n_folds}")));
            }
            count[f] += 1;
        }
        if let Some(empty) = count.iter().position(|&c| c == 0) {
            return Err(Error::InvalidParameter(format!("fold {empty} is empty")));
        }
        Ok(Self { fold_of_row, n_folds })
    }

    /// Random permutation of the rows cut into contiguous near-equal blocks.
    pub fn random<R: Rng + ?Sized>(n_rows: usize, n_folds: usize, rng: &mut R) -> Result<Self> {
        if n_folds < 2 || n_rows < n_folds {
            return Err(Error::InvalidParameter(format!(
                "cannot split {n_rows} rows into {n_folds} folds"
            )));
        }
        let mut perm: Vec<usize> = (0..n_rows).collect();
        perm.shuffle(rng);
        let (base, extra) = (n_rows / n_folds, n_rows % n_folds);
        let mut fold_of_row = vec![0; n_rows];
        let mut pos = 0;
        for f in 0..n_folds {
            let size = base + usize::from(f < extra);
            for &row in &perm[pos..pos + size] {
                fold_of_row[row] = f;
            }
            pos += size;
        }
        Self::from_assignment(fold_of_row, n_folds)
    }

    /// Blocks from a random Latin square over a `grid_side x grid_side` design.
    ///
    /// Rows are expected in cell-major order: row index
    /// `(grid_row * grid_side + grid_col) * reps_per_cell + rep`. All rows of a
    /// cell join the fold given by the square's symbol at that cell.
    pub fn latin_square<R: Rng + ?Sized>(grid_side: usize, reps_per_cell: usize, rng: &mut R) -> Result<Self> {
        Ok(Self::latin_square_with_grid(grid_side, reps_per_cell, rng)?.0)
    }

    /// As [`latin_square`](Self::latin_square), also returning the square.
    pub fn latin_square_with_grid<R: Rng + ?Sized>(
        grid_side: usize,
        reps_per_cell: usize,
        rng: &mut R,
    ) -> Result<(Self, LatinSquare)> {
        if grid_side < 2 || reps_per_cell == 0 {
            return Err(Error::InvalidParameter(format!(
                "invalid Latin-square design {grid_side}x{grid_side} with {reps_per_cell} repetitions"
            )));
        }
        let square = LatinSquare::random(grid_side, rng);
        let mut fold_of_row = Vec::with_capacity(grid_side * grid_side * reps_per_cell);
        for r in 0..grid_side {
            for c in 0..grid_side {
                fold_of_row.extend(std::iter::repeat_n(square.get(r, c), reps_per_cell));
            }
        }
        Ok((Self::from_assignment(fold_of_row, grid_side)?, square))
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn n_rows(&self) -> usize {
        self.fold_of_row.len()
    }

    pub fn fold_of_row(&self) -> &[usize] {
        &self.fold_of_row
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.fold_of_row {
            sizes[f] += 1;
        }
        sizes
    }

    /// Calibration and validation row indices of `fold`, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let (valid, calib): (Vec<usize>, Vec<usize>) =
            (0..self.fold_of_row.len()).partition(|&i| self.fold_of_row[i] == fold);
        (calib, valid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_blocks_for_divisible_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = CvPlan::random(1024, 16, &mut rng).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 64));
    }

    #[test]
    fn leave_one_out_is_a_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let plan = CvPlan::random(5, 5, &mut rng).unwrap();
        let mut f = plan.fold_of_row().to_vec();
        f.sort();
        assert_eq!(f, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn random_plan_is_deterministic() {
        let a = CvPlan::random(100, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = CvPlan::random(100, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_counts_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(CvPlan::random(3, 4, &mut rng).is_err());
        assert!(CvPlan::random(10, 1, &mut rng).is_err());
        assert!(CvPlan::latin_square(1, 5, &mut rng).is_err());
        assert!(CvPlan::latin_square(4, 0, &mut rng).is_err());
        assert!(CvPlan::from_assignment(vec![0, 0, 1], 3).is_err());
    }

    #[test]
    fn latin_grid_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let plan = CvPlan::latin_square(16, 5, &mut rng).unwrap();
        assert_eq!(plan.n_rows(), 1280);
        assert!(plan.fold_sizes().iter().all(|&s| s == 80));
    }

    #[test]
    fn split_is_disjoint_and_covering() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let plan = CvPlan::random(50, 4, &mut rng).unwrap();
        for f in 0..4 {
            let (c, v) = plan.split(f);
            assert_eq!(c.len() + v.len(), 50);
            assert!(c.iter().all(|i| !v.contains(i)));
            assert!(v.iter().all(|&i| plan.fold_of_row()[i] == f));
        }
    }

    proptest! {
        #[test]
        fn near_equal_fold_sizes(rows in 2usize..300, folds in 2usize..20, seed in any::<u64>()) {
            prop_assume!(rows >= folds);
            let plan = CvPlan::random(rows, folds, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let sizes = plan.fold_sizes();
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }

        #[test]
        fn latin_plan_once_per_grid_line(side in 2usize..10, reps in 1usize..4, seed in any::<u64>()) {
            let (plan, _) = CvPlan::latin_square_with_grid(side, reps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let cell_fold = |r: usize, c: usize| plan.fold_of_row()[(r * side + c) * reps];
            for line in 0..side {
                let mut in_row: Vec<usize> = (0..side).map(|c| cell_fold(line, c)).collect();
                let mut in_col: Vec<usize> = (0..side).map(|r| cell_fold(r, line)).collect();
                in_row.sort();
                in_col.sort();
                prop_assert_eq!(&in_row, &(0..side).collect::<Vec<_>>());
                prop_assert_eq!(&in_col, &(0..side).collect::<Vec<_>>());
            }
        }
    }
}
