//! Truncated multivariate power series in t₁..t_m with algebra-element
//! coefficients.

use std::collections::BTreeMap;
use std::fmt;

use crate::element::AlgebraElement;
use crate::error::{Error, Result};
use crate::graded::C64;

/// Exponent vector I of t^I.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(vars: usize) -> Self {
        Self(vec![0; vars])
    }

    pub fn unit(vars: usize, i: usize) -> Self {
        let mut v = vec![0; vars];
        v[i] = 1;
        Self(v)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.0.iter().zip(&other.0).map(|(a, b)| a.checked_sub(*b)).collect::<Option<Vec<_>>>().map(Self)
    }

    /// All indices with 1 ≤ |I| ≤ order, in the series order.
    pub fn all_up_to(vars: usize, order: u32) -> Vec<Self> {
        let mut out = vec![Vec::new()];
        for _ in 0..vars {
            out = out
                .into_iter()
                .flat_map(|v: Vec<u32>| {
                    let used: u32 = v.iter().sum();
                    (0..=order - used).map(move |e| {
                        let mut w = v.clone();
                        w.push(e);
                        w
                    })
                })
                .collect();
        }
        let mut idx: Vec<Self> = out.into_iter().map(Self).filter(|i| !i.is_zero()).collect();
        idx.sort();
        idx
    }

    /// Indices of total degree exactly `w`.
    pub fn of_total(vars: usize, w: u32) -> Vec<Self> {
        Self::all_up_to(vars, w).into_iter().filter(|i| i.total() == w).collect()
    }

    /// Ordered pairs (J, K) with J + K = self and both nonzero.
    pub fn splittings(&self) -> Vec<(Self, Self)> {
        Self::all_up_to(self.vars(), self.total())
            .into_iter()
            .filter_map(|j| {
                let k = self.checked_sub(&j)?;
                (!k.is_zero()).then_some((j, k))
            })
            .collect()
    }
}

/// Total degree first, then reverse lexicographic exponents so that t₁
/// precedes t₂.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total().cmp(&other.total()).then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Σ_I t^I x_I truncated at |I| ≤ order. Coefficients share the shape of
/// `zero`; absent indices are zero.
#[derive(Clone, Debug)]
pub struct Series {
    vars: usize,
    order: u32,
    zero: AlgebraElement,
    coeffs: BTreeMap<MultiIndex, AlgebraElement>,
}

/// Maurer–Cartan series: degree-1 coefficients, no constant term.
pub type McSeries = Series;
/// Gauge series: degree-0 coefficients, no constant term.
pub type GaugeSeries = Series;

impl Series {
    pub fn new(vars: usize, order: u32, zero: AlgebraElement) -> Self {
        Self { vars, order, zero: zero.zero_like(), coeffs: BTreeMap::new() }
    }

    pub fn empty_like(&self) -> Self {
        Self::new(self.vars, self.order, self.zero.clone())
    }

    /// Σ_i t_i x_i.
    pub fn linear(order: u32, directions: &[AlgebraElement]) -> Result<Self> {
        let first = directions.first().ok_or_else(|| Error::ParameterMismatch("no directions".into()))?;
        let mut s = Self::new(directions.len(), order, first.zero_like());
        for (i, x) in directions.iter().enumerate() {
            s.set(MultiIndex::unit(directions.len(), i), x.clone())?;
        }
        Ok(s)
    }

    /// The constant series x.
    pub fn constant(vars: usize, order: u32, x: AlgebraElement) -> Self {
        let mut s = Self::new(vars, order, x.zero_like());
        s.set(MultiIndex::zero(vars), x).expect("shape matches");
        s
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn zero_coefficient(&self) -> &AlgebraElement {
        &self.zero
    }

    pub fn set(&mut self, index: MultiIndex, x: AlgebraElement) -> Result<()> {
        if index.vars() != self.vars || index.total() > self.order {
            return Err(Error::ParameterMismatch(format!("index {index} outside {} variables, order {}", self.vars, self.order)));
        }
        if !x.same_shape(&self.zero) {
            return Err(Error::ShapeMismatch("series coefficient has the wrong shape".into()));
        }
        if x.is_zero() {
            self.coeffs.remove(&index);
        } else {
            self.coeffs.insert(index, x);
        }
        Ok(())
    }

    pub fn add_at(&mut self, index: &MultiIndex, x: &AlgebraElement) {
        if index.total() > self.order {
            return;
        }
        let sum = match self.coeffs.get(index) {
            Some(y) => y + x,
            None => x.clone(),
        };
        self.set(index.clone(), sum).expect("index and shape checked by caller");
    }

    pub fn get(&self, index: &MultiIndex) -> Option<&AlgebraElement> {
        self.coeffs.get(index)
    }

    pub fn coefficient(&self, index: &MultiIndex) -> AlgebraElement {
        self.coeffs.get(index).cloned().unwrap_or_else(|| self.zero.clone())
    }

    pub fn constant_term(&self) -> AlgebraElement {
        self.coefficient(&MultiIndex::zero(self.vars))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &AlgebraElement)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn has_constant_term(&self) -> bool {
        self.coeffs.contains_key(&MultiIndex::zero(self.vars))
    }

    /// Largest coefficient norm and where it sits.
    pub fn max_norm(&self) -> (f64, Option<MultiIndex>) {
        self.coeffs
            .iter()
            .map(|(i, x)| (x.norm(), Some(i.clone())))
            .fold((0.0, None), |a, b| if b.0 > a.0 { b } else { a })
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars || self.order != other.order {
            return Err(Error::ParameterMismatch(format!(
                "series over {} variables at order {} vs {} at order {}",
                self.vars, self.order, other.vars, other.order
            )));
        }
        Ok(())
    }

    /// Degree-k coefficients and no constant term.
    pub fn check_mc_shape(&self, k: i32) -> Result<()> {
        if self.has_constant_term() {
            return Err(Error::ParameterMismatch("series must vanish at the origin".into()));
        }
        if let Some((_, x)) = self.coeffs.iter().find(|(_, x)| !x.is_homogeneous(k)) {
            let _ = x;
            return Err(Error::NotHomogeneous { expected: k });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&AlgebraElement) -> AlgebraElement) -> Self {
        self.try_map(|x| Ok(f(x))).expect("infallible")
    }

    pub fn try_map(&self, f: impl Fn(&AlgebraElement) -> Result<AlgebraElement>) -> Result<Self> {
        let mut first = None;
        let mut coeffs = BTreeMap::new();
        for (i, x) in &self.coeffs {
            let y = f(x)?;
            if first.is_none() {
                first = Some(y.zero_like());
            }
            if !y.is_zero() {
                coeffs.insert(i.clone(), y);
            }
        }
        let zero = match first {
            Some(z) => z,
            None => f(&self.zero)?,
        };
        Ok(Self { vars: self.vars, order: self.order, zero: zero.zero_like(), coeffs })
    }

    pub fn scaled(&self, c: C64) -> Self {
        self.map(|x| x.scaled(c))
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (i, x) in &other.coeffs {
            if !x.same_shape(&self.zero) {
                return Err(Error::ShapeMismatch("series coefficients have different shapes".into()));
            }
            out.add_at(i, x);
        }
        Ok(out)
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.plus(&other.scaled(C64::new(-1.0, 0.0)))
    }

    /// Truncated Cauchy product Σ_{J+K=I} f(a_J, b_K).
    pub fn convolve(
        &self,
        other: &Self,
        f: impl Fn(&AlgebraElement, &AlgebraElement) -> Result<AlgebraElement>,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        let zero = f(&self.zero, &other.zero)?;
        let mut out = Self::new(self.vars, self.order, zero);
        for (j, a) in &self.coeffs {
            for (k, b) in &other.coeffs {
                let i = j.add(k);
                if i.total() <= self.order {
                    out.add_at(&i, &f(a, b)?);
                }
            }
        }
        Ok(out)
    }

    /// Coefficients of total degree ≤ `w` only.
    pub fn truncated(&self, w: u32) -> Self {
        let mut out = self.empty_like();
        out.coeffs = self.coeffs.iter().filter(|(i, _)| i.total() <= w).map(|(i, x)| (i.clone(), x.clone())).collect();
        out
    }

    /// Keeps the same coefficients with a different order bound.
    pub fn with_order(&self, order: u32) -> Self {
        let mut out = Self::new(self.vars, order, self.zero.clone());
        out.coeffs = self.coeffs.iter().filter(|(i, _)| i.total() <= order).map(|(i, x)| (i.clone(), x.clone())).collect();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseAlgebra;
    use crate::graded::{c64, CMatrix, GradedMap, GradedSpace};
    use std::sync::Arc;

    fn scalar(z: f64) -> AlgebraElement {
        let base = Arc::new(BaseAlgebra::point());
        let e = Arc::new(GradedSpace::new([(0, 1)]).unwrap());
        let m = GradedMap::from_blocks(e.clone(), e, 0, [(0, CMatrix::from_element(1, 1, c64(z, 0.0)))]).unwrap();
        AlgebraElement::from_map(base, 0, &m).unwrap()
    }

    #[test]
    fn index_enumeration_counts() {
        assert_eq!(MultiIndex::all_up_to(1, 6).len(), 6);
        assert_eq!(MultiIndex::all_up_to(2, 3).len(), 9);
        let idx = MultiIndex::all_up_to(2, 2);
        assert_eq!(idx[0], MultiIndex::new(vec![1, 0]));
        assert_eq!(idx[1], MultiIndex::new(vec![0, 1]));
        assert_eq!(idx[2].total(), 2);
        assert_eq!(MultiIndex::new(vec![1, 1]).splittings().len(), 2);
        assert_eq!(MultiIndex::new(vec![3]).splittings().len(), 2);
    }

    #[test]
    fn geometric_convolution_truncates() {
        // (t/(1)) * (t) = t² and nothing beyond order 2.
        let t = Series::linear(2, &[scalar(1.0)]).unwrap();
        let tt = t.convolve(&t, |a, b| a.compose(b)).unwrap();
        assert_eq!(tt.iter().count(), 1);
        let ttt = tt.convolve(&t, |a, b| a.compose(b)).unwrap();
        assert!(ttt.is_zero());
    }

    #[test]
    fn rejects_out_of_range_index() {
        let mut s = Series::new(1, 2, scalar(0.0));
        assert!(s.set(MultiIndex::new(vec![3]), scalar(1.0)).is_err());
        assert!(s.set(MultiIndex::new(vec![1, 0]), scalar(1.0)).is_err());
        assert!(s.set(MultiIndex::new(vec![2]), scalar(1.0)).is_ok());
    }
}
