//! Exact linear programming over rationals: a dense two-phase simplex
//! with Bland's rule, so every optimum is a true vertex value with no
//! rounding. Solves run on machine-word rationals first and repeat with
//! arbitrary precision only if an intermediate value overflows.

use crate::rat::Rat;
use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<Rat>,
    pub rel: Rel,
    pub rhs: Rat,
}

impl LpRow {
    pub fn new(coeffs: Vec<Rat>, rel: Rel, rhs: Rat) -> Self {
        LpRow { coeffs, rel, rhs }
    }
}

/// Maximize `objective . x` subject to the rows and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LpSpec {
    pub num_vars: usize,
    pub objective: Vec<Rat>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpError {
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::Infeasible => write!(f, "infeasible program"),
            LpError::Unbounded => write!(f, "unbounded objective"),
        }
    }
}

impl std::error::Error for LpError {}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: Rat,
    pub x: Vec<Rat>,
}

/// Tableau scalar. Arithmetic returns `None` on overflow, which aborts
/// the narrow run and triggers the wide one.
trait Scalar: Clone {
    fn from_rat(r: &Rat) -> Option<Self>;
    fn to_rat(&self) -> Rat;
    fn zero() -> Self;
    fn one() -> Self;
    fn add_c(&self, o: &Self) -> Option<Self>;
    fn sub_c(&self, o: &Self) -> Option<Self>;
    fn mul_c(&self, o: &Self) -> Option<Self>;
    fn div_c(&self, o: &Self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
}

impl Scalar for Rat {
    fn from_rat(r: &Rat) -> Option<Self> {
        Some(r.clone())
    }
    fn to_rat(&self) -> Rat {
        self.clone()
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add_c(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub_c(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul_c(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div_c(&self, o: &Self) -> Option<Self> {
        Some(self / o)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
}

/// Reduced fraction of two i128s, denominator positive. GCD reduction
/// happens before every product to keep magnitudes small.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Q128 {
    n: i128,
    d: i128,
}

fn gcd_u(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Q128 {
    fn make(n: i128, d: i128) -> Option<Q128> {
        if d == 0 || n == i128::MIN || d == i128::MIN {
            return None;
        }
        let (n, d) = if d < 0 { (-n, -d) } else { (n, d) };
        if n == 0 {
            return Some(Q128 { n: 0, d: 1 });
        }
        let g = gcd_u(n.unsigned_abs(), d.unsigned_abs()) as i128;
        Some(Q128 { n: n / g, d: d / g })
    }
}

impl Scalar for Q128 {
    fn from_rat(r: &Rat) -> Option<Self> {
        Q128::make(r.numer().to_i128()?, r.denom().to_i128()?)
    }
    fn to_rat(&self) -> Rat {
        Rat::new(BigInt::from(self.n), BigInt::from(self.d))
    }
    fn zero() -> Self {
        Q128 { n: 0, d: 1 }
    }
    fn one() -> Self {
        Q128 { n: 1, d: 1 }
    }
    fn add_c(&self, o: &Self) -> Option<Self> {
        let g = gcd_u(self.d.unsigned_abs(), o.d.unsigned_abs()) as i128;
        let (da, db) = (self.d / g, o.d / g);
        let num = self.n.checked_mul(db)?.checked_add(o.n.checked_mul(da)?)?;
        Q128::make(num, self.d.checked_mul(db)?)
    }
    fn sub_c(&self, o: &Self) -> Option<Self> {
        self.add_c(&Q128 { n: o.n.checked_neg()?, d: o.d })
    }
    fn mul_c(&self, o: &Self) -> Option<Self> {
        let g1 = gcd_u(self.n.unsigned_abs(), o.d.unsigned_abs()).max(1) as i128;
        let g2 = gcd_u(o.n.unsigned_abs(), self.d.unsigned_abs()).max(1) as i128;
        let num = (self.n / g1).checked_mul(o.n / g2)?;
        let den = (self.d / g2).checked_mul(o.d / g1)?;
        Q128::make(num, den)
    }
    fn div_c(&self, o: &Self) -> Option<Self> {
        if o.n == 0 {
            return None;
        }
        self.mul_c(&Q128 { n: o.d, d: o.n })
    }
    fn is_zero(&self) -> bool {
        self.n == 0
    }
    fn is_positive(&self) -> bool {
        self.n > 0
    }
}

struct Tableau<S> {
    a: Vec<Vec<S>>,
    rhs: Vec<S>,
    basis: Vec<usize>,
    cost: Vec<S>,
    obj: S,
}

impl<S: Scalar> Tableau<S> {
    fn pivot(&mut self, pr: usize, pc: usize) -> Option<()> {
        let p = self.a[pr][pc].clone();
        for v in self.a[pr].iter_mut() {
            *v = v.div_c(&p)?;
        }
        self.rhs[pr] = self.rhs[pr].div_c(&p)?;
        let piv_row = self.a[pr].clone();
        let piv_rhs = self.rhs[pr].clone();
        for r in 0..self.a.len() {
            if r == pr || self.a[r][pc].is_zero() {
                continue;
            }
            let f = self.a[r][pc].clone();
            for (v, pv) in self.a[r].iter_mut().zip(&piv_row) {
                *v = v.sub_c(&f.mul_c(pv)?)?;
            }
            self.rhs[r] = self.rhs[r].sub_c(&f.mul_c(&piv_rhs)?)?;
        }
        if !self.cost[pc].is_zero() {
            let f = self.cost[pc].clone();
            self.obj = self.obj.add_c(&f.mul_c(&piv_rhs)?)?;
            for (v, pv) in self.cost.iter_mut().zip(&piv_row) {
                *v = v.sub_c(&f.mul_c(pv)?)?;
            }
        }
        self.basis[pr] = pc;
        Some(())
    }

    /// Bland's rule iteration until no reduced cost is positive.
    /// Outer Option is overflow (retry wider); inner is unboundedness.
    fn optimize(&mut self, max_col: usize) -> Option<Result<(), LpError>> {
        loop {
            let Some(pc) = (0..max_col).find(|&j| self.cost[j].is_positive()) else {
                return Some(Ok(()));
            };
            let mut best: Option<(S, usize)> = None;
            for r in 0..self.a.len() {
                if !self.a[r][pc].is_positive() {
                    continue;
                }
                let ratio = self.rhs[r].div_c(&self.a[r][pc])?;
                let better = match &best {
                    None => true,
                    Some((cur, row)) => {
                        let diff = cur.sub_c(&ratio)?;
                        diff.is_positive()
                            || (diff.is_zero() && self.basis[r] < self.basis[*row])
                    }
                };
                if better {
                    best = Some((ratio, r));
                }
            }
            let Some((_, pr)) = best else {
                return Some(Err(LpError::Unbounded));
            };
            self.pivot(pr, pc)?;
        }
    }
}

fn run<S: Scalar>(spec: &LpSpec) -> Option<Result<LpSolution, LpError>> {
    let n = spec.num_vars;
    assert_eq!(spec.objective.len(), n, "objective length");
    for row in &spec.rows {
        assert_eq!(row.coeffs.len(), n, "row length");
    }
    let m = spec.rows.len();

    // Orient every row with a nonnegative right-hand side.
    let mut coeffs: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut rels = Vec::with_capacity(m);
    let mut rhs_r = Vec::with_capacity(m);
    for row in &spec.rows {
        if row.rhs.is_negative() {
            coeffs.push(row.coeffs.iter().map(|c| -c).collect());
            rels.push(match row.rel {
                Rel::Le => Rel::Ge,
                Rel::Ge => Rel::Le,
                Rel::Eq => Rel::Eq,
            });
            rhs_r.push(-&row.rhs);
        } else {
            coeffs.push(row.coeffs.clone());
            rels.push(row.rel);
            rhs_r.push(row.rhs.clone());
        }
    }

    let n_slack = rels.iter().filter(|r| !matches!(r, Rel::Eq)).count();
    let n_art = rels.iter().filter(|r| !matches!(r, Rel::Le)).count();
    let art_start = n + n_slack;
    let total = art_start + n_art;

    let mut t = Tableau {
        a: vec![vec![S::zero(); total]; m],
        rhs: Vec::with_capacity(m),
        basis: vec![0; m],
        cost: vec![S::zero(); total],
        obj: S::zero(),
    };
    let mut slack_at = n;
    let mut art_at = art_start;
    for i in 0..m {
        for (j, c) in coeffs[i].iter().enumerate() {
            t.a[i][j] = S::from_rat(c)?;
        }
        t.rhs.push(S::from_rat(&rhs_r[i])?);
        match rels[i] {
            Rel::Le => {
                t.a[i][slack_at] = S::one();
                t.basis[i] = slack_at;
                slack_at += 1;
            }
            Rel::Ge => {
                t.a[i][slack_at] = S::zero().sub_c(&S::one())?;
                slack_at += 1;
                t.a[i][art_at] = S::one();
                t.basis[i] = art_at;
                art_at += 1;
            }
            Rel::Eq => {
                t.a[i][art_at] = S::one();
                t.basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    if n_art > 0 {
        // Phase 1: maximize minus the artificial sum; feasible iff 0.
        // With artificials basic, the reduced cost of column j is the sum
        // of its entries over artificial rows.
        for i in 0..m {
            if t.basis[i] >= art_start {
                for j in 0..total {
                    let add = t.a[i][j].clone();
                    t.cost[j] = t.cost[j].add_c(&add)?;
                }
                t.obj = t.obj.sub_c(&t.rhs[i])?;
            }
        }
        for j in art_start..total {
            t.cost[j] = S::zero();
        }
        match t.optimize(art_start)? {
            Ok(()) => {}
            Err(_) => unreachable!("phase 1 is bounded above by zero"),
        }
        if !t.obj.is_zero() {
            return Some(Err(LpError::Infeasible));
        }
        // Degenerate artificials still in the basis either pivot out on
        // any structural column or certify their row redundant.
        let mut drop_rows = Vec::new();
        for i in 0..m {
            if t.basis[i] < art_start {
                continue;
            }
            match (0..art_start).find(|&j| !t.a[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j)?;
                }
                None => drop_rows.push(i),
            }
        }
        for &i in drop_rows.iter().rev() {
            t.a.remove(i);
            t.rhs.remove(i);
            t.basis.remove(i);
        }
        for row in t.a.iter_mut() {
            row.truncate(art_start);
        }
    }

    // Phase 2 cost row: start from the true objective and eliminate the
    // basic columns.
    t.cost = vec![S::zero(); art_start];
    t.obj = S::zero();
    for (j, c) in spec.objective.iter().enumerate() {
        t.cost[j] = S::from_rat(c)?;
    }
    for i in 0..t.a.len() {
        let b = t.basis[i];
        if t.cost[b].is_zero() {
            continue;
        }
        let f = t.cost[b].clone();
        t.obj = t.obj.add_c(&f.mul_c(&t.rhs[i])?)?;
        let row = t.a[i].clone();
        for (v, rv) in t.cost.iter_mut().zip(&row) {
            *v = v.sub_c(&f.mul_c(rv)?)?;
        }
    }
    if let Err(e) = t.optimize(art_start)? {
        return Some(Err(e));
    }

    let mut x = vec![<Rat as num::Zero>::zero(); n];
    for i in 0..t.a.len() {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rhs[i].to_rat();
        }
    }
    Some(Ok(LpSolution { objective: t.obj.to_rat(), x }))
}

/// Maximize over the spec exactly. The name reflects the dominant use:
/// rate programs of the form max t with t bounded by decodability rows.
pub fn solve_maximin(spec: &LpSpec) -> Result<LpSolution, LpError> {
    if let Some(res) = run::<Q128>(spec) {
        return res;
    }
    run::<Rat>(spec).expect("arbitrary-precision run cannot overflow")
}

/// Minimize `objective . x` by negating through `solve_maximin`.
pub fn solve_minimize(spec: &LpSpec) -> Result<LpSolution, LpError> {
    let neg = LpSpec {
        num_vars: spec.num_vars,
        objective: spec.objective.iter().map(|c| -c).collect(),
        rows: spec.rows.clone(),
    };
    let mut sol = solve_maximin(&neg)?;
    sol.objective = -sol.objective;
    Ok(sol)
}
