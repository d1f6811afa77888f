//! Random Latin squares by the Jacobson–Matthews Markov chain.

use rand::seq::SliceRandom;
use rand::Rng;

/// An `n x n` array over symbols `0..n` with every symbol once per row and
/// once per column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatinSquare {
    n: usize,
    cells: Vec<usize>,
}

impl LatinSquare {
    /// `L[r][c] = (r + c) mod n`.
    pub fn cyclic(n: usize) -> Self {
        let cells = (0..n).flat_map(|r| (0..n).map(move |c| (r + c) % n)).collect();
        Self { n, cells }
    }

    /// Draws an (approximately uniform) random Latin square of order `n`.
    ///
    /// Starts from the cyclic square, runs the Jacobson–Matthews chain for
    /// `n^3` moves (continuing until the state is proper), then shuffles rows,
    /// columns and symbols.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut cube = IncidenceCube::from_square(&Self::cyclic(n));
        if n > 2 {
            let mut moves = 0;
            while moves < n * n * n || cube.improper.is_some() {
                cube.step(rng);
                moves += 1;
            }
        }
        let square = cube.to_square();

        let mut rows: Vec<usize> = (0..n).collect();
        let mut cols: Vec<usize> = (0..n).collect();
        let mut symbols: Vec<usize> = (0..n).collect();
        rows.shuffle(rng);
        cols.shuffle(rng);
        symbols.shuffle(rng);
        let cells = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| symbols[square.get(rows[r], cols[c])])
            .collect();
        Self { n, cells }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.n + col]
    }

    pub fn is_latin(&self) -> bool {
        let n = self.n;
        let mut seen = vec![false; n];
        let lines = |fixed_row: bool, line: usize, seen: &mut Vec<bool>| {
            seen.fill(false);
            (0..n).all(|i| {
                let v = if fixed_row {
                    self.get(line, i)
                } else {
                    self.get(i, line)
                };
                v < n && !std::mem::replace(&mut seen[v], true)
            })
        };
        (0..n).all(|l| lines(true, l, &mut seen) && lines(false, l, &mut seen))
    }
}

/// 0/1 incidence cube `M[r][c][s]`, with at most one `-1` entry while the
/// chain is in an improper state.
struct IncidenceCube {
    n: usize,
    m: Vec<i8>,
    improper: Option<(usize, usize, usize)>,
}

impl IncidenceCube {
    fn from_square(sq: &LatinSquare) -> Self {
        let n = sq.n;
        let mut m = vec![0i8; n * n * n];
        for r in 0..n {
            for c in 0..n {
                m[(r * n + c) * n + sq.get(r, c)] = 1;
            }
        }
        Self { n, m, improper: None }
    }

    fn at(&self, r: usize, c: usize, s: usize) -> i8 {
        self.m[(r * self.n + c) * self.n + s]
    }

    fn add(&mut self, r: usize, c: usize, s: usize, d: i8) {
        let n = self.n;
        self.m[(r * n + c) * n + s] += d;
    }

    fn ones<F: Fn(usize) -> i8>(&self, f: F) -> Vec<usize> {
        (0..self.n).filter(|&i| f(i) == 1).collect()
    }

    fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.n;
        let (r, c, s, r2, c2, s2) = match self.improper {
            None => {
                let (r, c, s) = loop {
                    let (r, c, s) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                    if self.at(r, c, s) == 0 {
                        break (r, c, s);
                    }
                };
                let r2 = self.ones(|i| self.at(i, c, s))[0];
                let c2 = self.ones(|i| self.at(r, i, s))[0];
                let s2 = self.ones(|i| self.at(r, c, i))[0];
                (r, c, s, r2, c2, s2)
            }
            Some((r, c, s)) => {
                let pick = |v: Vec<usize>, rng: &mut R| v[rng.gen_range(0..v.len())];
                let r2 = pick(self.ones(|i| self.at(i, c, s)), rng);
                let c2 = pick(self.ones(|i| self.at(r, i, s)), rng);
                let s2 = pick(self.ones(|i| self.at(r, c, i)), rng);
                (r, c, s, r2, c2, s2)
            }
        };
        self.add(r, c, s, 1);
        self.add(r, c2, s2, 1);
        self.add(r2, c, s2, 1);
        self.add(r2, c2, s, 1);
        self.add(r, c, s2, -1);
        self.add(r, c2, s, -1);
        self.add(r2, c, s, -1);
        self.add(r2, c2, s2, -1);
        self.improper = (self.at(r2, c2, s2) < 0).then_some((r2, c2, s2));
    }

    fn to_square(&self) -> LatinSquare {
        let n = self.n;
        let cells = (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| (0..n).find(|&s| self.at(r, c, s) == 1).expect("proper cube"))
            .collect();
        LatinSquare { n, cells }
    }
}
