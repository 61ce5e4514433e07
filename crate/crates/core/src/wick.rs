//! Majorana operators, Wick contractions and complex Pfaffians.
//!
//! With `a_n = c†_n + c_n` and `b_n = c†_n − c_n` the spin operators become
//! `σˣ_n = a_n b_n` and `σᶻ_n σᶻ_{n+1} = b_n a_{n+1}`. Expectation values of
//! products of Majoranas in a Gaussian state are Pfaffians of the matrix of
//! pairwise contractions.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Majorana {
    A(i64),
    B(i64),
}

/// Pfaffian of a complex antisymmetric matrix given as rows; the matrix is
/// destroyed. Skew Gaussian elimination with partial pivoting.
pub fn pfaffian(a: &mut [Vec<C64>]) -> C64 {
    let n = a.len();
    if n % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    let mut pf = C64::new(1.0, 0.0);
    let mut k = 0;
    while k < n {
        let kp = (k + 1..n).max_by(|&i, &j| a[k][i].norm().total_cmp(&a[k][j].norm())).expect("non-empty pivot range");
        if kp != k + 1 {
            a.swap(k + 1, kp);
            for row in a.iter_mut() {
                row.swap(k + 1, kp);
            }
            pf = -pf;
        }
        let p = a[k][k + 1];
        if p == C64::new(0.0, 0.0) {
            return p;
        }
        pf *= p;
        if k + 2 < n {
            let w: Vec<C64> = a[k][k + 2..].to_vec();
            let v: Vec<C64> = a[k + 1][k + 2..].to_vec();
            for i in 0..w.len() {
                for j in 0..w.len() {
                    a[k + 2 + i][k + 2 + j] += (v[i] * w[j] - w[i] * v[j]) / p;
                }
            }
        }
        k += 2;
    }
    pf
}

/// `⟨ops[0] ops[1] ⋯⟩` of a Gaussian state with pairwise contractions
/// `contract(x, y) = ⟨x y⟩`.
pub fn expectation(ops: &[Majorana], contract: impl Fn(Majorana, Majorana) -> C64) -> C64 {
    let n = ops.len();
    let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
    for p in 0..n {
        for q in p + 1..n {
            let c = contract(ops[p], ops[q]);
            m[p][q] = c;
            m[q][p] = -c;
        }
    }
    pfaffian(&mut m)
}
