//! Exact linear programming over rationals.
//!
//! Two-phase primal simplex on a dense tableau. The tableau is kept in
//! fraction-free integer form: every entry is the true rational value
//! scaled by the determinant of the current basis, so a pivot is one
//! multiply, one subtract and one exact division per cell, with no
//! rational normalization anywhere in the hot loop. Entering columns are
//! chosen greedily (most negative reduced cost); leaving rows by the
//! lexicographic ratio test, which rules out cycling. Free variables are
//! split into differences of nonnegative ones; inequality rows get slack
//! or surplus columns; artificial columns stay in the tableau (blocked
//! from entering after phase one) so dual values can be read off their
//! reduced costs.
//!
//! Conventions for the returned multipliers, one per input row:
//!
//! * `Optimal { duals, .. }` for `Minimize`: `value = sum duals[i] * rhs[i]`,
//!   `duals[i] <= 0` for `Le` rows, `>= 0` for `Ge` rows, free for `Eq`, and
//!   the combination `sum duals[i] * row_i` is coefficient-wise `<=` the
//!   objective on nonnegative variables and equal on free ones. For
//!   `Maximize` the inequalities reverse (`>= 0` on `Le` rows, combination
//!   `>=` objective).
//! * `Infeasible { farkas }`: `farkas[i] <= 0` for `Le` rows, `>= 0` for
//!   `Ge`, free for `Eq`; the combined coefficient of every nonnegative
//!   variable is `<= 0` and of every free variable is `0`, while the
//!   combined right-hand side is `> 0`. No valuation can satisfy that.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<BigRational>,
    pub cmp: Cmp,
    pub rhs: BigRational,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub num_vars: usize,
    /// Variables default to `>= 0`; marked ones are unrestricted.
    pub free: Vec<bool>,
    pub rows: Vec<Constraint>,
}

impl Problem {
    pub fn new(num_vars: usize) -> Problem {
        Problem { num_vars, free: vec![false; num_vars], rows: Vec::new() }
    }

    pub fn mark_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add(&mut self, coeffs: Vec<BigRational>, cmp: Cmp, rhs: BigRational) {
        assert_eq!(coeffs.len(), self.num_vars);
        self.rows.push(Constraint { coeffs, cmp, rhs });
    }
}

#[derive(Debug, Clone)]
pub enum Objective {
    Maximize(Vec<BigRational>),
    Minimize(Vec<BigRational>),
}

impl Objective {
    fn coeffs(&self) -> &[BigRational] {
        match self {
            Objective::Maximize(c) | Objective::Minimize(c) => c,
        }
    }

    pub fn feasibility(num_vars: usize) -> Objective {
        Objective::Minimize(vec![BigRational::zero(); num_vars])
    }
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Optimal { point: Vec<BigRational>, value: BigRational, duals: Vec<BigRational> },
    Infeasible { farkas: Vec<BigRational> },
    Unbounded,
}

impl Outcome {
    pub fn point(&self) -> Option<&[BigRational]> {
        match self {
            Outcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Optimal { .. })
    }
}

struct Tableau {
    /// m rows of ncols coefficient entries plus the right-hand side. The
    /// true tableau value of a cell is `t[i][j] / den`.
    t: Vec<Vec<BigInt>>,
    basis: Vec<usize>,
    ncols: usize,
    /// First artificial column; artificial i sits at art0 + i.
    art0: usize,
    /// Reduced-cost row of length ncols, scaled by `den` times the cost
    /// scale; both factors are positive, so sign tests need no division.
    red: Vec<BigInt>,
    /// Determinant of the current basis, kept positive by negating every
    /// row whenever a pivot flips its sign.
    den: BigInt,
}

enum PivotResult {
    Optimal,
    Unbounded,
}

impl Tableau {
    /// Prices the reduced-cost row for the given (integer-scaled) costs.
    fn price(&mut self, costs: &[BigInt]) {
        let mut red: Vec<BigInt> = costs.iter().map(|c| c * &self.den).collect();
        for i in 0..self.t.len() {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.ncols {
                if !self.t[i][j].is_zero() {
                    red[j] -= cb * &self.t[i][j];
                }
            }
        }
        self.red = red;
    }

    /// Gauss-Jordan pivot in fraction-free form: the pivot row is left
    /// untouched, every other cell becomes
    /// `(pivot * cell - col_entry * pivot_row_entry) / den`, and the
    /// divisor is exact because each entry of the scaled tableau is an
    /// entry of adj(basis) times the original matrix, an integer.
    fn pivot(&mut self, row: usize, col: usize) {
        let pr = std::mem::take(&mut self.t[row]);
        let p = pr[col].clone();
        let den = std::mem::replace(&mut self.den, p.clone());
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = std::mem::take(&mut r[col]);
            if factor.is_zero() {
                for x in r.iter_mut() {
                    if !x.is_zero() {
                        *x = &(&*x * &p) / &den;
                    }
                }
            } else {
                for (j, x) in r.iter_mut().enumerate() {
                    if j == col {
                        continue;
                    }
                    let mut v = std::mem::take(x) * &p;
                    if !pr[j].is_zero() {
                        v -= &factor * &pr[j];
                    }
                    if !v.is_zero() {
                        v /= &den;
                    }
                    *x = v;
                }
            }
        }
        let factor = std::mem::take(&mut self.red[col]);
        if factor.is_zero() {
            for x in self.red.iter_mut() {
                if !x.is_zero() {
                    *x = &(&*x * &p) / &den;
                }
            }
        } else {
            for (j, x) in self.red.iter_mut().enumerate() {
                if j == col {
                    continue;
                }
                let mut v = std::mem::take(x) * &p;
                if !pr[j].is_zero() {
                    v -= &factor * &pr[j];
                }
                if !v.is_zero() {
                    v /= &den;
                }
                *x = v;
            }
        }
        self.t[row] = pr;
        self.basis[row] = col;
        if self.den.is_negative() {
            self.den = -std::mem::take(&mut self.den);
            for r in self.t.iter_mut() {
                for x in r.iter_mut() {
                    if !x.is_zero() {
                        *x = -std::mem::take(x);
                    }
                }
            }
            for x in self.red.iter_mut() {
                if !x.is_zero() {
                    *x = -std::mem::take(x);
                }
            }
        }
    }

    /// Lexicographic comparison of two ratio-test candidates: row `a` wins
    /// when (rhs_a, row_a) / t[a][col] precedes (rhs_b, row_b) / t[b][col]
    /// in the given column order. Tableau rows are linearly independent,
    /// so the scan always finds a differing column.
    fn lex_winner(&self, a: usize, b: usize, col: usize, order: &[usize]) -> usize {
        let pa = &self.t[a][col];
        let pb = &self.t[b][col];
        let ra = &self.t[a][self.ncols] * pb;
        let rb = &self.t[b][self.ncols] * pa;
        if ra != rb {
            return if ra < rb { a } else { b };
        }
        for &j in order {
            let ta = &self.t[a][j];
            let tb = &self.t[b][j];
            if ta.is_zero() && tb.is_zero() {
                continue;
            }
            let va = ta * pb;
            let vb = tb * pa;
            if va != vb {
                return if va < vb { a } else { b };
            }
        }
        if a < b {
            a
        } else {
            b
        }
    }

    /// Runs simplex with Devex pricing and lexicographic leaving. The
    /// Devex weights live in floating point; they only steer which
    /// eligible column enters, never what counts as eligible, so the
    /// arithmetic stays exact. At entry the basis columns form a
    /// positively scaled identity, so ordering the comparison columns
    /// basis-first makes every row lexicographically positive and the run
    /// finite regardless of the entering choice.
    fn run<F: Fn(usize) -> bool>(&mut self, allowed: F) -> PivotResult {
        let mut seen = vec![false; self.ncols];
        let mut order: Vec<usize> = Vec::with_capacity(self.ncols);
        for &b in &self.basis {
            if !seen[b] {
                seen[b] = true;
                order.push(b);
            }
        }
        for j in 0..self.ncols {
            if !seen[j] {
                order.push(j);
            }
        }
        let mut w = vec![1.0f64; self.ncols];
        let mut pivots = 0usize;
        loop {
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.ncols {
                if allowed(j) && self.red[j].is_negative() {
                    let r = approx(&self.red[j]);
                    let score = r * r / w[j];
                    let better = match entering {
                        None => true,
                        Some((_, s)) => score > s,
                    };
                    if better {
                        entering = Some((j, score));
                    }
                }
            }
            let col = match entering {
                Some((c, _)) => c,
                None => return PivotResult::Optimal,
            };
            pivots += 1;
            if std::env::var_os("LP_TRACE").is_some() && pivots % 200 == 0 {
                eprintln!("    pivot {} (rows {}, cols {})", pivots, self.t.len(), self.ncols);
            }
            let mut best: Option<usize> = None;
            for i in 0..self.t.len() {
                if !self.t[i][col].is_positive() {
                    continue;
                }
                best = Some(match best {
                    None => i,
                    Some(b) => self.lex_winner(i, b, col, &order),
                });
            }
            let row = match best {
                Some(row) => row,
                None => return PivotResult::Unbounded,
            };
            let wq = w[col].max(1.0);
            let arq = approx(&self.t[row][col]);
            let mut overflow = false;
            for j in 0..self.ncols {
                if j == col || self.t[row][j].is_zero() {
                    continue;
                }
                let a = approx(&self.t[row][j]) / arq;
                let cand = a * a * wq;
                if cand.is_finite() {
                    if cand > w[j] {
                        w[j] = cand;
                    }
                    if cand > 1e14 {
                        overflow = true;
                    }
                } else {
                    overflow = true;
                }
            }
            let leaving = (wq / (arq * arq)).max(1.0);
            w[col] = if leaving.is_finite() { leaving } else { 1.0 };
            if overflow {
                for x in w.iter_mut() {
                    *x = 1.0;
                }
            }
            self.pivot(row, col);
        }
    }
}

/// Lossy magnitude of a big integer for the Devex weights; saturates far
/// outside the f64 range instead of overflowing.
fn approx(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    match x.to_f64() {
        Some(f) if f.is_finite() => f,
        _ => {
            if x.is_negative() {
                -1e300
            } else {
                1e300
            }
        }
    }
}

/// Solves the problem under the objective. See the module docs for the
/// exact meaning of the returned multipliers.
pub fn solve(p: &Problem, obj: &Objective) -> Outcome {
    let obj_coeffs = obj.coeffs();
    assert_eq!(obj_coeffs.len(), p.num_vars);
    let maximize = matches!(obj, Objective::Maximize(_));

    // Column layout: split structural columns, then slack/surplus, then
    // artificials.
    let mut pos_col = vec![0usize; p.num_vars];
    let mut neg_col = vec![None; p.num_vars];
    let mut ncols = 0usize;
    for j in 0..p.num_vars {
        pos_col[j] = ncols;
        ncols += 1;
        if p.free[j] {
            neg_col[j] = Some(ncols);
            ncols += 1;
        }
    }
    let slack0 = ncols;
    let num_slacks = p.rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
    ncols += num_slacks;
    let art0 = ncols;
    let m = p.rows.len();
    ncols += m;

    // Each row is scaled by the positive lcm of its denominators and then
    // negated if its right-hand side came out negative. The signed factor
    // is multiplied back into the returned row multipliers, which refer to
    // the rows as given.
    let mut t = vec![vec![BigInt::zero(); ncols + 1]; m];
    let mut scale: Vec<BigInt> = Vec::with_capacity(m);
    let mut slack_idx = slack0;
    for (i, row) in p.rows.iter().enumerate() {
        let mut l = BigInt::one();
        for c in row.coeffs.iter().chain(std::iter::once(&row.rhs)) {
            l = l.lcm(c.denom());
        }
        let rhs = row.rhs.numer() * (&l / row.rhs.denom());
        let s = if rhs.is_negative() { -l } else { l };
        for j in 0..p.num_vars {
            if row.coeffs[j].is_zero() {
                continue;
            }
            let v = row.coeffs[j].numer() * (&s / row.coeffs[j].denom());
            if let Some(nc) = neg_col[j] {
                t[i][nc] = -v.clone();
            }
            t[i][pos_col[j]] = v;
        }
        match row.cmp {
            Cmp::Le => {
                t[i][slack_idx] = s.signum();
                slack_idx += 1;
            }
            Cmp::Ge => {
                t[i][slack_idx] = -s.signum();
                slack_idx += 1;
            }
            Cmp::Eq => {}
        }
        t[i][ncols] = row.rhs.numer() * (&s / row.rhs.denom());
        t[i][art0 + i] = BigInt::one();
        scale.push(s);
    }

    let basis: Vec<usize> = (0..m).map(|i| art0 + i).collect();
    let mut tab =
        Tableau { t, basis, ncols, art0, red: Vec::new(), den: BigInt::one() };

    // Phase 1: minimize the sum of artificials.
    let mut costs1 = vec![BigInt::zero(); ncols];
    for i in 0..m {
        costs1[art0 + i] = BigInt::one();
    }
    tab.price(&costs1);
    match tab.run(|_| true) {
        PivotResult::Optimal => {}
        PivotResult::Unbounded => unreachable!("phase one is bounded below"),
    }
    let infeas: BigInt = (0..m)
        .filter(|&i| tab.basis[i] >= art0)
        .map(|i| tab.t[i][tab.ncols].clone())
        .sum();
    if infeas.is_positive() {
        // Dual of a column with cost c is c minus its reduced cost; the
        // artificials cost one in phase one.
        let mut farkas = Vec::with_capacity(m);
        for i in 0..m {
            let y = BigRational::one()
                - BigRational::new(tab.red[art0 + i].clone(), tab.den.clone());
            farkas.push(y * BigRational::from(scale[i].clone()));
        }
        return Outcome::Infeasible { farkas };
    }

    // Drive remaining artificials out of the basis where possible; rows
    // that stay artificial-basic are all-zero (redundant) and inert.
    for i in 0..m {
        if tab.basis[i] >= art0 {
            if let Some(col) = (0..art0).find(|&j| !tab.t[i][j].is_zero()) {
                tab.pivot(i, col);
            }
        }
    }

    // Phase 2, with costs scaled to integers by their common denominator;
    // the scale drops out again with the basis determinant when the duals
    // are extracted.
    let mut sigma = BigInt::one();
    for c in obj_coeffs {
        sigma = sigma.lcm(c.denom());
    }
    let mut costs2 = vec![BigInt::zero(); ncols];
    for j in 0..p.num_vars {
        if obj_coeffs[j].is_zero() {
            continue;
        }
        let mut c = obj_coeffs[j].numer() * (&sigma / obj_coeffs[j].denom());
        if maximize {
            c = -c;
        }
        if let Some(nc) = neg_col[j] {
            costs2[nc] = -c.clone();
        }
        costs2[pos_col[j]] = c;
    }
    tab.price(&costs2);
    let art0c = tab.art0;
    match tab.run(|j| j < art0c) {
        PivotResult::Unbounded => return Outcome::Unbounded,
        PivotResult::Optimal => {}
    }

    let mut point = vec![BigRational::zero(); p.num_vars];
    for (i, &b) in tab.basis.iter().enumerate() {
        let v = BigRational::new(tab.t[i][tab.ncols].clone(), tab.den.clone());
        for j in 0..p.num_vars {
            if b == pos_col[j] {
                point[j] += &v;
            } else if Some(b) == neg_col[j] {
                point[j] -= &v;
            }
        }
    }
    let value = obj_coeffs
        .iter()
        .zip(&point)
        .map(|(c, x)| c * x)
        .fold(BigRational::zero(), |acc, term| acc + term);
    let denom = &tab.den * &sigma;
    let mut duals = Vec::with_capacity(m);
    for i in 0..m {
        let mut y = -BigRational::new(tab.red[art0 + i].clone(), denom.clone());
        if maximize {
            y = -y;
        }
        duals.push(y * BigRational::from(scale[i].clone()));
    }
    Outcome::Optimal { point, value, duals }
}

/// Optimizes several objectives lexicographically: each stage's optimum is
/// pinned with an equality row before the next stage runs.
pub fn lexicographic(p: &Problem, objs: &[Objective]) -> Outcome {
    assert!(!objs.is_empty());
    let mut cur = p.clone();
    let mut last = None;
    for (k, obj) in objs.iter().enumerate() {
        let out = solve(&cur, obj);
        match &out {
            Outcome::Optimal { value, .. } => {
                if k + 1 < objs.len() {
                    cur.add(obj.coeffs().to_vec(), Cmp::Eq, value.clone());
                }
            }
            _ => return out,
        }
        last = Some(out);
    }
    last.unwrap()
}

/// Brute-force reference implementations used by validation tests.
pub mod reference {
    use super::*;

    /// Solves a square rational system by Gaussian elimination; None if
    /// singular.
    pub fn solve_square(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
        let n = b.len();
        let mut m: Vec<Vec<BigRational>> = a
            .iter()
            .zip(b)
            .map(|(row, rhs)| {
                let mut r = row.clone();
                r.push(rhs.clone());
                r
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
            m.swap(col, piv);
            let inv = m[col][col].clone().recip();
            for x in m[col].iter_mut() {
                *x *= &inv;
            }
            for r in 0..n {
                if r != col && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for j in col..=n {
                        let d = &f * &m[col][j];
                        m[r][j] -= d;
                    }
                }
            }
        }
        Some(m.into_iter().map(|row| row[n].clone()).collect())
    }

    fn satisfies(p: &Problem, x: &[BigRational]) -> bool {
        for (j, free) in p.free.iter().enumerate() {
            if !free && x[j].is_negative() {
                return false;
            }
        }
        p.rows.iter().all(|row| {
            let lhs: BigRational = row
                .coeffs
                .iter()
                .zip(x)
                .map(|(a, v)| a * v)
                .fold(BigRational::zero(), |acc, t| acc + t);
            match row.cmp {
                Cmp::Le => lhs <= row.rhs,
                Cmp::Ge => lhs >= row.rhs,
                Cmp::Eq => lhs == row.rhs,
            }
        })
    }

    /// Enumerates the vertices of the feasible set as intersections of
    /// `num_vars` active boundaries (rows and `x_j = 0` for nonnegative
    /// variables). Complete for pointed polyhedra.
    pub fn enumerate_vertices(p: &Problem) -> Vec<Vec<BigRational>> {
        let n = p.num_vars;
        let mut planes: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
        for row in &p.rows {
            planes.push((row.coeffs.clone(), row.rhs.clone()));
        }
        for j in 0..n {
            if !p.free[j] {
                let mut c = vec![BigRational::zero(); n];
                c[j] = BigRational::one();
                planes.push((c, BigRational::zero()));
            }
        }
        let mut out: Vec<Vec<BigRational>> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        if planes.len() < n {
            return out;
        }
        loop {
            let a: Vec<Vec<BigRational>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
            let b: Vec<BigRational> = idx.iter().map(|&i| planes[i].1.clone()).collect();
            if let Some(x) = solve_square(&a, &b) {
                if satisfies(p, &x) && !out.contains(&x) {
                    out.push(x);
                }
            }
            // next combination
            let mut k = n;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if idx[k] + (n - k) < planes.len() {
                    idx[k] += 1;
                    for j in k + 1..n {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    /// Extreme rays of the recession cone for small systems: nullspace
    /// directions of (num_vars - 1)-subsets filtered by the cone
    /// conditions.
    pub fn enumerate_rays(p: &Problem) -> Vec<Vec<BigRational>> {
        let n = p.num_vars;
        if n == 0 {
            return Vec::new();
        }
        let mut planes: Vec<Vec<BigRational>> = Vec::new();
        for row in &p.rows {
            planes.push(row.coeffs.clone());
        }
        for j in 0..n {
            if !p.free[j] {
                let mut c = vec![BigRational::zero(); n];
                c[j] = BigRational::one();
                planes.push(c);
            }
        }
        let in_cone = |d: &[BigRational]| -> bool {
            for (j, free) in p.free.iter().enumerate() {
                if !free && d[j].is_negative() {
                    return false;
                }
            }
            p.rows.iter().all(|row| {
                let v: BigRational = row
                    .coeffs
                    .iter()
                    .zip(d)
                    .map(|(a, x)| a * x)
                    .fold(BigRational::zero(), |acc, t| acc + t);
                match row.cmp {
                    Cmp::Le => !v.is_positive(),
                    Cmp::Ge => !v.is_negative(),
                    Cmp::Eq => v.is_zero(),
                }
            })
        };
        let mut out: Vec<Vec<BigRational>> = Vec::new();
        let k = n - 1;
        let push_dir = |d: Vec<BigRational>, out: &mut Vec<Vec<BigRational>>| {
            for cand in [d.clone(), d.iter().map(|x| -x.clone()).collect::<Vec<_>>()] {
                if in_cone(&cand) && !out.contains(&cand) {
                    out.push(cand);
                }
            }
        };
        if k == 0 {
            // rays are the coordinate directions that satisfy the cone
            for j in 0..n {
                let mut d = vec![BigRational::zero(); n];
                d[j] = BigRational::one();
                push_dir(d, &mut out);
            }
            return out;
        }
        if planes.len() < k {
            return out;
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            // nullspace of the k chosen rows (dimension >= 1)
            let a: Vec<Vec<BigRational>> = idx.iter().map(|&i| planes[i].clone()).collect();
            if let Some(d) = nullspace_direction(&a, n) {
                push_dir(d, &mut out);
            }
            let mut t = k;
            loop {
                if t == 0 {
                    return out;
                }
                t -= 1;
                if idx[t] + (k - t) < planes.len() {
                    idx[t] += 1;
                    for j in t + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn nullspace_direction(a: &[Vec<BigRational>], n: usize) -> Option<Vec<BigRational>> {
        let mut m: Vec<Vec<BigRational>> = a.to_vec();
        let rows = m.len();
        let mut pivots: Vec<Option<usize>> = vec![None; rows];
        let mut used = vec![false; n];
        let mut r = 0;
        for col in 0..n {
            if r >= rows {
                break;
            }
            if let Some(pr) = (r..rows).find(|&i| !m[i][col].is_zero()) {
                m.swap(r, pr);
                let inv = m[r][col].clone().recip();
                for x in m[r].iter_mut() {
                    *x *= &inv;
                }
                for i in 0..rows {
                    if i != r && !m[i][col].is_zero() {
                        let f = m[i][col].clone();
                        for j in 0..n {
                            let d = &f * &m[r][j];
                            m[i][j] -= d;
                        }
                    }
                }
                pivots[r] = Some(col);
                used[col] = true;
                r += 1;
            }
        }
        let free_col = (0..n).find(|&c| !used[c])?;
        let mut d = vec![BigRational::zero(); n];
        d[free_col] = BigRational::one();
        for (i, piv) in pivots.iter().enumerate() {
            if let Some(pc) = piv {
                d[*pc] = -m[i][free_col].clone();
            }
        }
        Some(d)
    }

    /// Exhaustive optimum over enumerated vertices; None means no vertex
    /// (infeasible, for systems guaranteed pointed and bounded).
    pub fn brute_force_optimum(p: &Problem, obj: &Objective) -> Option<(Vec<BigRational>, BigRational)> {
        let verts = enumerate_vertices(p);
        let maximize = matches!(obj, Objective::Maximize(_));
        let c = obj.coeffs();
        let mut best: Option<(Vec<BigRational>, BigRational)> = None;
        for v in verts {
            let val: BigRational =
                c.iter().zip(&v).map(|(a, x)| a * x).fold(BigRational::zero(), |acc, t| acc + t);
            let better = match &best {
                None => true,
                Some((_, bv)) => {
                    if maximize {
                        val > *bv
                    } else {
                        val < *bv
                    }
                }
            };
            if better {
                best = Some((v, val));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_i64};

    fn r(n: i64) -> BigRational {
        rat_i64(n)
    }

    #[test]
    fn simple_max() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, x,y >= 0  => (8/5, 6/5), 14/5
        let mut p = Problem::new(2);
        p.add(vec![r(1), r(2)], Cmp::Le, r(4));
        p.add(vec![r(3), r(1)], Cmp::Le, r(6));
        match solve(&p, &Objective::Maximize(vec![r(1), r(1)])) {
            Outcome::Optimal { point, value, duals } => {
                assert_eq!(value, rat(14, 5));
                assert_eq!(point, vec![rat(8, 5), rat(6, 5)]);
                // strong duality: y . b = value, y >= 0 for Le under max
                let yb = &duals[0] * r(4) + &duals[1] * r(6);
                assert_eq!(yb, rat(14, 5));
                assert!(!duals[0].is_negative() && !duals[1].is_negative());
                // y^T A >= c componentwise
                let c0 = &duals[0] * r(1) + &duals[1] * r(3);
                let c1 = &duals[0] * r(2) + &duals[1] * r(1);
                assert!(c0 >= r(1) && c1 >= r(1));
            }
            other => panic!("expected optimal, got {:?}", other),
        }
    }

    #[test]
    fn equality_and_free_variable() {
        // min x - y s.t. x + y = 3, x - y >= -1, y >= 0, x free
        // optimum at x = 1, y = 2 (x - y = -1)
        let mut p = Problem::new(2);
        p.mark_free(0);
        p.add(vec![r(1), r(1)], Cmp::Eq, r(3));
        p.add(vec![r(1), r(-1)], Cmp::Ge, r(-1));
        match solve(&p, &Objective::Minimize(vec![r(1), r(-1)])) {
            Outcome::Optimal { point, value, .. } => {
                assert_eq!(value, r(-1));
                assert_eq!(point, vec![r(1), r(2)]);
            }
            other => panic!("expected optimal, got {:?}", other),
        }
    }

    #[test]
    fn unbounded_detected() {
        let mut p = Problem::new(1);
        p.add(vec![r(1)], Cmp::Ge, r(1));
        assert!(matches!(
            solve(&p, &Objective::Maximize(vec![r(1)])),
            Outcome::Unbounded
        ));
    }

    #[test]
    fn infeasible_with_valid_certificate() {
        // x >= 3 and x <= 1
        let mut p = Problem::new(1);
        p.add(vec![r(1)], Cmp::Ge, r(3));
        p.add(vec![r(1)], Cmp::Le, r(1));
        match solve(&p, &Objective::feasibility(1)) {
            Outcome::Infeasible { farkas } => {
                assert!(!farkas[0].is_negative());
                assert!(!farkas[1].is_positive());
                let combined = &farkas[0] * r(1) + &farkas[1] * r(1);
                let rhs = &farkas[0] * r(3) + &farkas[1] * r(1);
                assert!(!combined.is_positive());
                assert!(rhs.is_positive());
            }
            other => panic!("expected infeasible, got {:?}", other),
        }
    }

    #[test]
    fn degenerate_equalities() {
        // redundant rows: x + y = 2 twice, minimize x
        let mut p = Problem::new(2);
        p.add(vec![r(1), r(1)], Cmp::Eq, r(2));
        p.add(vec![r(1), r(1)], Cmp::Eq, r(2));
        match solve(&p, &Objective::Minimize(vec![r(1), r(0)])) {
            Outcome::Optimal { value, .. } => assert_eq!(value, r(0)),
            other => panic!("expected optimal, got {:?}", other),
        }
    }

    #[test]
    fn lexicographic_two_stage() {
        // max x, then max y, s.t. x + y <= 4, x <= 3
        let mut p = Problem::new(2);
        p.add(vec![r(1), r(1)], Cmp::Le, r(4));
        p.add(vec![r(1), r(0)], Cmp::Le, r(3));
        let objs = [
            Objective::Maximize(vec![r(1), r(0)]),
            Objective::Maximize(vec![r(0), r(1)]),
        ];
        match lexicographic(&p, &objs) {
            Outcome::Optimal { point, value, .. } => {
                assert_eq!(point, vec![r(3), r(1)]);
                assert_eq!(value, r(1));
            }
            other => panic!("expected optimal, got {:?}", other),
        }
    }

    #[test]
    fn matches_vertex_oracle_on_fixed_instances() {
        // a few handpicked bounded systems
        let cases: Vec<(Problem, Objective)> = vec![
            {
                let mut p = Problem::new(2);
                p.add(vec![r(2), r(1)], Cmp::Le, r(10));
                p.add(vec![r(1), r(3)], Cmp::Le, r(15));
                p.add(vec![r(1), r(0)], Cmp::Le, r(4));
                (p, Objective::Maximize(vec![r(3), r(2)]))
            },
            {
                let mut p = Problem::new(3);
                p.add(vec![r(1), r(1), r(1)], Cmp::Le, r(6));
                p.add(vec![r(1), r(-1), r(0)], Cmp::Ge, r(-2));
                p.add(vec![r(0), r(1), r(2)], Cmp::Le, r(5));
                (p, Objective::Maximize(vec![r(1), r(2), r(1)]))
            },
        ];
        for (p, obj) in cases {
            let brute = reference::brute_force_optimum(&p, &obj).expect("bounded nonempty");
            match solve(&p, &obj) {
                Outcome::Optimal { value, .. } => assert_eq!(value, brute.1),
                other => panic!("expected optimal, got {:?}", other),
            }
        }
    }

    #[test]
    fn zero_variable_problem() {
        let mut p = Problem::new(0);
        p.add(vec![], Cmp::Le, r(1));
        assert!(solve(&p, &Objective::feasibility(0)).is_feasible());
        let mut q = Problem::new(0);
        q.add(vec![], Cmp::Ge, r(1));
        assert!(!solve(&q, &Objective::feasibility(0)).is_feasible());
    }

    #[test]
    fn minimize_duals_signs() {
        // min 2x + 3y s.t. x + y >= 2, x <= 5, x,y >= 0: optimum (2,0) value 4
        let mut p = Problem::new(2);
        p.add(vec![r(1), r(1)], Cmp::Ge, r(2));
        p.add(vec![r(1), r(0)], Cmp::Le, r(5));
        match solve(&p, &Objective::Minimize(vec![r(2), r(3)])) {
            Outcome::Optimal { value, duals, .. } => {
                assert_eq!(value, r(4));
                assert!(!duals[0].is_negative());
                assert!(!duals[1].is_positive());
                let yb = &duals[0] * r(2) + &duals[1] * r(5);
                assert_eq!(yb, r(4));
            }
            other => panic!("expected optimal, got {:?}", other),
        }
    }
}
