//! Dense cross-check for the sparse engine.
//!
//! Every element of a circuit prefix is written as a dense matrix over all
//! declared polarized modes; the matrices are multiplied into one transfer
//! matrix, and output amplitudes come from permanents of its submatrices:
//!
//! `<out| U |in> = Perm(U[out rows, in cols]) / sqrt(prod n_in! prod n_out!)`.
//!
//! None of this goes through [`crate::elements`] or the monomial expansion,
//! so agreement between the two is a meaningful check.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuit::{Circuit, Element};
use crate::elements::{SplitterSign, SPLITTER_SIGN};
use crate::error::Result;
use crate::mode::{Polarization, PolarizedMode};
use crate::state::{factorial, Convention, Occupation, StateVector};

type Matrix = Vec<Vec<Complex64>>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Complex64::new(1.0, 0.0) } else { zero() })
                .collect()
        })
        .collect()
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] == zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Permanent by direct expansion over permutations.
pub fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    fn expand(m: &[Vec<Complex64>], row: usize, used: &mut Vec<bool>) -> Complex64 {
        if row == m.len() {
            return Complex64::new(1.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for col in 0..m.len() {
            if !used[col] && m[row][col] != Complex64::new(0.0, 0.0) {
                used[col] = true;
                acc += m[row][col] * expand(m, row + 1, used);
                used[col] = false;
            }
        }
        acc
    }
    expand(m, 0, &mut vec![false; m.len()])
}

/// Transfer matrix of a circuit prefix; `matrix[out][in]`.
pub struct DenseTransfer {
    modes: Vec<PolarizedMode>,
    index: BTreeMap<PolarizedMode, usize>,
    matrix: Matrix,
}

impl DenseTransfer {
    /// Transfer matrix of `circuit.elements()[..count]`.
    pub fn of_prefix(circuit: &Circuit, count: usize) -> Self {
        let modes: Vec<PolarizedMode> = circuit
            .modes()
            .iter()
            .flat_map(|m| Polarization::BOTH.map(|p| PolarizedMode::new(m.as_str(), p)))
            .collect();
        let index: BTreeMap<PolarizedMode, usize> = modes.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut transfer = DenseTransfer {
            matrix: identity(modes.len()),
            modes,
            index,
        };
        for el in &circuit.elements()[..count] {
            let step = transfer.element_matrix(el);
            transfer.matrix = matmul(&step, &transfer.matrix);
        }
        transfer
    }

    fn element_matrix(&self, el: &Element) -> Matrix {
        let mut m = identity(self.modes.len());
        let idx = |label: &str, pol: Polarization| self.index[&PolarizedMode::new(label, pol)];
        let set_column = |m: &mut Matrix, col: usize, entries: &[(usize, f64)]| {
            for row in m.iter_mut() {
                row[col] = zero();
            }
            for &(row, w) in entries {
                m[row][col] += Complex64::new(w, 0.0);
            }
        };
        match el {
            Element::BeamSplitter {
                theta_deg,
                inputs,
                outputs,
            } => {
                let theta = theta_deg.to_radians();
                let (c, s) = (theta.cos(), theta.sin());
                // 2x2 block [[c, -s], [s, c]] or its transpose, columns = inputs
                let (first_refl, second_refl) = match SPLITTER_SIGN {
                    SplitterSign::SecondInput => (s, -s),
                    SplitterSign::FirstInput => (-s, s),
                };
                for pol in Polarization::BOTH {
                    let (mo, no) = (idx(&outputs[0], pol), idx(&outputs[1], pol));
                    set_column(&mut m, idx(&inputs[0], pol), &[(mo, c), (no, first_refl)]);
                    set_column(&mut m, idx(&inputs[1], pol), &[(no, c), (mo, second_refl)]);
                }
            }
            Element::Pbs { inputs, outputs } => {
                use Polarization::{H, V};
                set_column(&mut m, idx(&inputs[0], H), &[(idx(&outputs[0], H), 1.0)]);
                set_column(&mut m, idx(&inputs[1], H), &[(idx(&outputs[1], H), 1.0)]);
                set_column(&mut m, idx(&inputs[0], V), &[(idx(&outputs[1], V), 1.0)]);
                set_column(&mut m, idx(&inputs[1], V), &[(idx(&outputs[0], V), 1.0)]);
            }
            Element::Mirror { input, output } => {
                for pol in Polarization::BOTH {
                    set_column(&mut m, idx(input, pol), &[(idx(output, pol), 1.0)]);
                }
            }
            Element::Polarizer { mode, orientation } => {
                // a blocked creation operator maps to zero
                set_column(&mut m, idx(mode, orientation.orthogonal()), &[]);
            }
        }
        m
    }

    /// Propagates a Fock-convention state through the transfer matrix.
    pub fn propagate(&self, input: &StateVector) -> Result<StateVector> {
        let input = input.to_fock();
        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, amp) in input.terms() {
            let cols: Vec<usize> = occ
                .iter()
                .flat_map(|(m, n)| std::iter::repeat_n(self.index[m], n as usize))
                .collect();
            let reachable: Vec<usize> = (0..self.modes.len())
                .filter(|&r| cols.iter().any(|&c| self.matrix[r][c] != zero()))
                .collect();
            let in_norm = occ.factorial_product();
            for rows in multisets(&reachable, cols.len()) {
                let sub: Matrix = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| self.matrix[r][c]).collect())
                    .collect();
                let perm = permanent(&sub);
                if perm == zero() {
                    continue;
                }
                let out_occ = Occupation::from_counts(rows.iter().map(|&r| (self.modes[r].clone(), 1)));
                let out_norm: f64 = out_occ.iter().map(|(_, n)| factorial(n)).product();
                *out.entry(out_occ).or_insert(zero()) += amp * perm / (in_norm * out_norm).sqrt();
            }
        }
        let mut state = StateVector::from_terms(Convention::Fock, out);
        state.prune(1e-14);
        Ok(state)
    }
}

/// Non-decreasing sequences of length `k` drawn from `items`.
fn multisets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], start: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, i, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, 0, k, &mut Vec::new(), &mut out);
    out
}
