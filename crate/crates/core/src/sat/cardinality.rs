//! Sequential-counter encoding of `Σ lits ≤ k`.

/// A DIMACS literal: variable index (1-based) with sign.
pub type Lit = i32;

/// Clauses enforcing that at most `k` of `lits` are true. Auxiliary
/// variables are drawn from `next_var`, which is advanced past them.
///
/// `k = 0` yields one negative unit per literal; `k ≥ n` yields nothing.
/// Otherwise `s[i][j]` means "at least `j + 1` of the first `i + 1`
/// literals are true".
pub fn at_most_k(lits: &[Lit], k: usize, next_var: &mut u32) -> Vec<Vec<Lit>> {
    let n = lits.len();
    if k >= n {
        return Vec::new();
    }
    if k == 0 {
        return lits.iter().map(|&l| vec![-l]).collect();
    }
    let mut fresh = || {
        *next_var += 1;
        *next_var as Lit
    };
    let s: Vec<Vec<Lit>> = (0..n - 1).map(|_| (0..k).map(|_| fresh()).collect()).collect();
    let mut cl = Vec::with_capacity(2 * n * k + n);
    cl.push(vec![-lits[0], s[0][0]]);
    for &v in &s[0][1..] {
        cl.push(vec![-v]);
    }
    for i in 1..n - 1 {
        let x = lits[i];
        cl.push(vec![-x, s[i][0]]);
        cl.push(vec![-s[i - 1][0], s[i][0]]);
        for j in 1..k {
            cl.push(vec![-x, -s[i - 1][j - 1], s[i][j]]);
            cl.push(vec![-s[i - 1][j], s[i][j]]);
        }
        cl.push(vec![-x, -s[i - 1][k - 1]]);
    }
    cl.push(vec![-lits[n - 1], -s[n - 2][k - 1]]);
    cl
}
