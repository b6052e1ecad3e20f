//! Exact linear algebra for hitting probabilities.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::Rational;

/// Strongly connected components of a graph given by successor lists, in
/// reverse topological order (sinks first). Iterative Tarjan.
pub fn tarjan_scc(n: usize, succ: &dyn Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = Vec::new();
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, succ(root), 0));
        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            if frame.2 < frame.1.len() {
                let w = frame.1[frame.2];
                frame.2 += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, succ(w), 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(parent) = call.last() {
                    low[parent.0] = low[parent.0].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Solves `a x = b` over the integers by fraction-free (Bareiss) elimination
/// with largest-magnitude pivoting. `None` if `a` is singular.
pub fn bareiss_solve(mut a: Vec<Vec<BigInt>>, b: Vec<BigInt>) -> Option<Vec<Rational>> {
    let n = a.len();
    for (row, rhs) in a.iter_mut().zip(b) {
        debug_assert_eq!(row.len(), n);
        row.push(rhs);
    }
    let mut prev = BigInt::from(1);
    for k in 0..n {
        let pivot = (k..n).max_by(|&i, &j| a[i][k].abs().cmp(&a[j][k].abs()).then(j.cmp(&i)))?;
        if a[pivot][k].is_zero() {
            return None;
        }
        a.swap(k, pivot);
        for i in k + 1..n {
            let aik = a[i][k].clone();
            for j in k + 1..=n {
                let v = (&a[k][k] * &a[i][j] - &aik * &a[k][j]) / &prev;
                a[i][j] = v;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let mut x: Vec<Rational> = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_integer(a[i][n].clone());
        for j in i + 1..n {
            if !a[i][j].is_zero() {
                acc -= Rational::from_integer(a[i][j].clone()) * &x[j];
            }
        }
        x[i] = acc / Rational::from_integer(a[i][i].clone());
    }
    Some(x)
}

/// Solves a sparse system row by row, pivoting on the diagonal in order of
/// least fill (Markowitz). Intended for M-matrices `I - P` where diagonal
/// pivots never vanish. `None` on a zero pivot.
pub fn sparse_solve(mut rows: Vec<BTreeMap<usize, Rational>>, mut rhs: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = rows.len();
    // cols[j]: rows with a nonzero in column j
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &j in row.keys() {
            cols[j].insert(i);
        }
    }
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !done[v])
            .min_by_key(|&v| (rows[v].len().saturating_sub(1)) * (cols[v].len().saturating_sub(1)))?;
        let pivot = rows[v].get(&v)?.clone();
        if pivot.is_zero() {
            return None;
        }
        done[v] = true;
        order.push(v);
        let pivot_row = rows[v].clone();
        let users: Vec<usize> = cols[v].iter().copied().filter(|&i| i != v && !done[i]).collect();
        for i in users {
            let factor = rows[i].remove(&v).expect("column index in sync") / &pivot;
            cols[v].remove(&i);
            for (&j, a) in &pivot_row {
                if j == v {
                    continue;
                }
                let entry = rows[i].entry(j).or_insert_with(Rational::zero);
                *entry -= &factor * a;
                if entry.is_zero() {
                    rows[i].remove(&j);
                    cols[j].remove(&i);
                } else {
                    cols[j].insert(i);
                }
            }
            let delta = &factor * &rhs[v];
            rhs[i] -= delta;
        }
    }
    let mut x: Vec<Option<Rational>> = vec![None; n];
    for &v in order.iter().rev() {
        let mut acc = rhs[v].clone();
        let mut diag = Rational::zero();
        for (&j, a) in &rows[v] {
            if j == v {
                diag = a.clone();
            } else {
                acc -= a * x[j].as_ref().expect("later pivots solved first");
            }
        }
        x[v] = Some(acc / diag);
    }
    Some(x.into_iter().map(|v| v.expect("all solved")).collect())
}
