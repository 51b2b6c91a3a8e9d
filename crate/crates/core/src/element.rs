//! Elements of Ω ⊗ Hom•(E, F): finite sums of terms ω_r ⊗ M with explicit
//! End-degree, their Koszul-signed composition, supercommutator and
//! supertrace, and flattening of homogeneous pieces into coordinate vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use nalgebra::DVector;

use crate::base::{BaseAlgebra, BaseElement};
use crate::error::{Error, Result};
use crate::graded::{c64, frobenius, CMatrix, GradedMap, GradedSpace, C64};
use crate::tol;

pub(crate) fn same_base(a: &Arc<BaseAlgebra>, b: &Arc<BaseAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn same_space(a: &Arc<GradedSpace>, b: &Arc<GradedSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn sign(exponent: i32) -> f64 {
    if exponent.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Terms are keyed by (basis index r, End-degree k); each matrix is the full
/// dim(F) × dim(E) matrix supported on the degree-k blocks.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    base: Arc<BaseAlgebra>,
    source: Arc<GradedSpace>,
    target: Arc<GradedSpace>,
    terms: BTreeMap<(usize, i32), CMatrix>,
}

impl AlgebraElement {
    pub fn zero(base: Arc<BaseAlgebra>, source: Arc<GradedSpace>, target: Arc<GradedSpace>) -> Self {
        Self { base, source, target, terms: BTreeMap::new() }
    }

    pub fn endo_zero(base: Arc<BaseAlgebra>, space: Arc<GradedSpace>) -> Self {
        Self::zero(base, space.clone(), space)
    }

    /// 1 ⊗ id_E.
    pub fn identity(base: Arc<BaseAlgebra>, space: Arc<GradedSpace>) -> Self {
        let mut x = Self::endo_zero(base, space.clone());
        if space.total_dim() > 0 {
            let n = space.total_dim();
            x.terms.insert((x.base.unit(), 0), CMatrix::identity(n, n));
        }
        x
    }

    /// ω_r ⊗ map.
    pub fn from_map(base: Arc<BaseAlgebra>, r: usize, map: &GradedMap) -> Result<Self> {
        let mut x = Self::zero(base, map.source().clone(), map.target().clone());
        x.add_term(r, map)?;
        Ok(x)
    }

    /// A zero element with the same base and spaces.
    pub fn zero_like(&self) -> Self {
        Self::zero(self.base.clone(), self.source.clone(), self.target.clone())
    }

    pub fn add_term(&mut self, r: usize, map: &GradedMap) -> Result<()> {
        if r >= self.base.dim() {
            return Err(Error::ShapeMismatch(format!("base index {r} out of range")));
        }
        if !same_space(map.source(), &self.source) || !same_space(map.target(), &self.target) {
            return Err(Error::ShapeMismatch("coefficient spaces differ from the element's".into()));
        }
        self.add_raw(r, map.degree(), map.matrix(), c64(1.0, 0.0));
        self.prune();
        Ok(())
    }

    pub(crate) fn add_raw(&mut self, r: usize, k: i32, m: &CMatrix, c: C64) {
        let entry = self
            .terms
            .entry((r, k))
            .or_insert_with(|| CMatrix::zeros(self.target.total_dim(), self.source.total_dim()));
        if c == c64(1.0, 0.0) {
            *entry += m;
        } else {
            entry.zip_apply(m, |a, b| *a += b * c);
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, m| frobenius(m) >= tol::PRUNE);
    }

    fn pruned(mut self) -> Self {
        self.prune();
        self
    }

    pub fn base(&self) -> &Arc<BaseAlgebra> {
        &self.base
    }

    pub fn source(&self) -> &Arc<GradedSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedSpace> {
        &self.target
    }

    pub fn is_endomorphism(&self) -> bool {
        same_space(&self.source, &self.target)
    }

    /// (r, End-degree, matrix) for every stored term.
    pub fn terms(&self) -> impl Iterator<Item = (usize, i32, &CMatrix)> {
        self.terms.iter().map(|(&(r, k), m)| (r, k, m))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, r: usize, end_degree: i32) -> Option<GradedMap> {
        self.terms.get(&(r, end_degree)).map(|m| {
            GradedMap::from_parts(self.source.clone(), self.target.clone(), end_degree, m.clone())
        })
    }

    fn term_degree(&self, r: usize, k: i32) -> i32 {
        self.base.degree(r) + k
    }

    /// Total degrees carried by nonzero terms.
    pub fn degrees(&self) -> BTreeSet<i32> {
        self.terms.keys().map(|&(r, k)| self.term_degree(r, k)).collect()
    }

    /// True for zero and for elements whose terms all have total degree k.
    pub fn is_homogeneous(&self, k: i32) -> bool {
        self.terms.keys().all(|&(r, j)| self.term_degree(r, j) == k)
    }

    pub fn degree_part(&self, k: i32) -> Self {
        let mut x = self.zero_like();
        for (&(r, j), m) in &self.terms {
            if self.term_degree(r, j) == k {
                x.terms.insert((r, j), m.clone());
            }
        }
        x
    }

    pub fn norm(&self) -> f64 {
        self.terms.values().map(|m| m.iter().map(|z| z.norm_sqr()).sum::<f64>()).fold(0.0, |a, b| a + b).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        same_base(&self.base, &other.base)
            && same_space(&self.source, &other.source)
            && same_space(&self.target, &other.target)
    }

    fn assert_shape(&self, other: &Self) {
        assert!(self.same_shape(other), "arithmetic on elements of different shapes");
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if !same_base(&self.base, &other.base) {
            return Err(Error::BaseMismatch);
        }
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("elements live in different Hom spaces".into()));
        }
        Ok(self + other)
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut x = self.clone();
        for m in x.terms.values_mut() {
            *m *= c;
        }
        x.pruned()
    }

    pub fn scaled_re(&self, c: f64) -> Self {
        self.scaled(c64(c, 0.0))
    }

    /// Applies a linear map on base-basis indices to every coefficient,
    /// landing over `base`.
    pub fn map_base(&self, base: Arc<BaseAlgebra>, f: impl Fn(usize) -> Vec<(usize, C64)>) -> Self {
        let mut x = Self::zero(base, self.source.clone(), self.target.clone());
        for (&(r, k), m) in &self.terms {
            for (u, c) in f(r) {
                x.add_raw(u, k, m, c);
            }
        }
        x.pruned()
    }

    /// d_Ω applied to the form coefficients.
    pub fn base_differential(&self) -> Self {
        let base = self.base.clone();
        self.map_base(self.base.clone(), |r| base.differential_of(r).to_vec())
    }

    /// Moves matrix entries along index maps into new spaces (entries whose
    /// row or column maps to `None` are dropped) and shifts End-degrees by
    /// `degree_shift`; used to embed or restrict along direct sums and shifts.
    pub fn reindex(
        &self,
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        source_pos: &[Option<usize>],
        target_pos: &[Option<usize>],
        degree_shift: i32,
    ) -> Self {
        let mut x = Self::zero(self.base.clone(), source.clone(), target.clone());
        for (&(r, k), m) in &self.terms {
            let mut out = CMatrix::zeros(target.total_dim(), source.total_dim());
            for c in 0..m.ncols() {
                let Some(c2) = source_pos[c] else { continue };
                for row in 0..m.nrows() {
                    if let Some(r2) = target_pos[row] {
                        out[(r2, c2)] = m[(row, c)];
                    }
                }
            }
            x.terms.insert((r, k + degree_shift), out);
        }
        x.pruned()
    }

    /// Rewrites every term matrix in place, keeping keys.
    pub fn map_matrices(&self, f: impl Fn(usize, i32, &CMatrix) -> CMatrix) -> Self {
        let mut x = self.clone();
        for (&(r, k), m) in x.terms.iter_mut() {
            *m = f(r, k, m);
        }
        x.pruned()
    }

    pub fn compose(&self, f: &Self) -> Result<Self> {
        compose(self, f)
    }

    pub fn bracket(&self, y: &Self) -> Result<Self> {
        supercommutator(self, y)
    }

    pub fn supertrace(&self) -> Result<BaseElement> {
        supertrace(self)
    }
}

/// g ∘ f with (μ⊗N)∘(ω⊗M) = (−1)^{deg N · deg ω} (μω) ⊗ (NM).
pub fn compose(g: &AlgebraElement, f: &AlgebraElement) -> Result<AlgebraElement> {
    if !same_base(&g.base, &f.base) {
        return Err(Error::BaseMismatch);
    }
    if !same_space(&f.target, &g.source) {
        return Err(Error::ChainMismatch("target of f differs from source of g".into()));
    }
    let base = &g.base;
    let mut out = AlgebraElement::zero(base.clone(), f.source.clone(), g.target.clone());
    for (&(r, k), n) in &g.terms {
        for (&(s, l), m) in &f.terms {
            let prod = base.product(r, s);
            if prod.is_empty() {
                continue;
            }
            let nm = n * m;
            let sg = sign(k * base.degree(s));
            for &(u, c) in prod {
                out.add_raw(u, k + l, &nm, c * sg);
            }
        }
    }
    Ok(out.pruned())
}

/// [x, y] = xy − (−1)^{|x||y|} yx, extended bilinearly over homogeneous parts.
pub fn supercommutator(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    if !same_base(&x.base, &y.base) {
        return Err(Error::BaseMismatch);
    }
    if !x.is_endomorphism() || !y.is_endomorphism() || !same_space(&x.source, &y.source) {
        return Err(Error::ModelMismatch("bracket needs endomorphisms of one space".into()));
    }
    let mut out = x.zero_like();
    for a in x.degrees() {
        let xa = x.degree_part(a);
        for b in y.degrees() {
            let yb = y.degree_part(b);
            out += &compose(&xa, &yb)?;
            let yx = compose(&yb, &xa)?;
            if sign(a * b) > 0.0 {
                out -= &yx;
            } else {
                out += &yx;
            }
        }
    }
    Ok(out)
}

/// Σ ω_r · Σ_i (−1)^i Tr(M|E^i) over terms with End-degree 0.
pub fn supertrace(x: &AlgebraElement) -> Result<BaseElement> {
    if !x.is_endomorphism() {
        return Err(Error::ModelMismatch("supertrace needs an endomorphism".into()));
    }
    let mut out = BaseElement::zeros(x.base.dim());
    for (&(r, k), m) in &x.terms {
        if k != 0 {
            continue;
        }
        for &(d, _) in x.source.components() {
            let range = x.source.range(d).unwrap();
            let tr: C64 = range.map(|i| m[(i, i)]).sum();
            out[r] += tr * sign(d);
        }
    }
    Ok(out)
}

impl AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        self.assert_shape(rhs);
        for (&(r, k), m) in &rhs.terms {
            self.add_raw(r, k, m, c64(1.0, 0.0));
        }
        self.prune();
    }
}

impl SubAssign<&AlgebraElement> for AlgebraElement {
    fn sub_assign(&mut self, rhs: &AlgebraElement) {
        self.assert_shape(rhs);
        for (&(r, k), m) in &rhs.terms {
            self.add_raw(r, k, m, c64(-1.0, 0.0));
        }
        self.prune();
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut x = self.clone();
        x += rhs;
        x
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        let mut x = self.clone();
        x -= rhs;
        x
    }
}

impl Add for AlgebraElement {
    type Output = AlgebraElement;
    fn add(mut self, rhs: AlgebraElement) -> AlgebraElement {
        self += &rhs;
        self
    }
}

impl Sub for AlgebraElement {
    type Output = AlgebraElement;
    fn sub(mut self, rhs: AlgebraElement) -> AlgebraElement {
        self -= &rhs;
        self
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scaled_re(-1.0)
    }
}

impl Neg for AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        self.scaled_re(-1.0)
    }
}

impl Mul<C64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, c: C64) -> AlgebraElement {
        self.scaled(c)
    }
}

#[derive(Clone, Debug)]
struct Segment {
    r: usize,
    end_degree: i32,
    offset: usize,
    cells: Arc<Vec<(usize, usize)>>,
}

/// Coordinates on the total-degree-k piece of Ω ⊗ Hom(E, F): one coordinate
/// per (basis index r, entry of a degree-(k − deg r) block), ordered by r,
/// then source degree, then row-major inside each block.
#[derive(Clone, Debug)]
pub struct Layout {
    base: Arc<BaseAlgebra>,
    source: Arc<GradedSpace>,
    target: Arc<GradedSpace>,
    degree: i32,
    segments: Vec<Segment>,
    lookup: HashMap<(usize, i32), usize>,
    dim: usize,
}

/// One coordinate of a [`Layout`]: base index, End-degree, matrix row and column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coordinate {
    pub r: usize,
    pub end_degree: i32,
    pub row: usize,
    pub col: usize,
}

impl Layout {
    pub fn new(
        base: Arc<BaseAlgebra>,
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        degree: i32,
    ) -> Self {
        let mut cells_by_degree: HashMap<i32, Arc<Vec<(usize, usize)>>> = HashMap::new();
        let mut segments = Vec::new();
        let mut lookup = HashMap::new();
        let mut offset = 0;
        for r in 0..base.dim() {
            let j = degree - base.degree(r);
            let cells = cells_by_degree
                .entry(j)
                .or_insert_with(|| {
                    let mut cells = Vec::new();
                    for &(i, _) in source.components() {
                        if let (Some(cols), Some(rows)) = (source.range(i), target.range(i + j)) {
                            for row in rows {
                                for col in cols.clone() {
                                    cells.push((row, col));
                                }
                            }
                        }
                    }
                    Arc::new(cells)
                })
                .clone();
            if cells.is_empty() {
                continue;
            }
            lookup.insert((r, j), segments.len());
            let len = cells.len();
            segments.push(Segment { r, end_degree: j, offset, cells });
            offset += len;
        }
        Self { base, source, target, degree, segments, lookup, dim: offset }
    }

    pub fn endo(base: Arc<BaseAlgebra>, space: Arc<GradedSpace>, degree: i32) -> Self {
        Self::new(base, space.clone(), space, degree)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn coordinates(&self) -> impl Iterator<Item = Coordinate> + '_ {
        self.segments.iter().flat_map(|s| {
            s.cells.iter().map(move |&(row, col)| Coordinate { r: s.r, end_degree: s.end_degree, row, col })
        })
    }

    /// Coordinates of the degree-k part of x; other degrees are ignored.
    pub fn to_vector(&self, x: &AlgebraElement) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim);
        for (&(r, k), m) in &x.terms {
            if let Some(&si) = self.lookup.get(&(r, k)) {
                let s = &self.segments[si];
                for (n, &(row, col)) in s.cells.iter().enumerate() {
                    v[s.offset + n] = m[(row, col)];
                }
            }
        }
        v
    }

    pub fn from_vector(&self, v: &DVector<C64>) -> AlgebraElement {
        let mut x = AlgebraElement::zero(self.base.clone(), self.source.clone(), self.target.clone());
        for s in &self.segments {
            let mut m = CMatrix::zeros(self.target.total_dim(), self.source.total_dim());
            for (n, &(row, col)) in s.cells.iter().enumerate() {
                m[(row, col)] = v[s.offset + n];
            }
            x.terms.insert((s.r, s.end_degree), m);
        }
        x.pruned()
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        let mut v = DVector::zeros(self.dim);
        v[i] = c64(1.0, 0.0);
        self.from_vector(&v)
    }
}
