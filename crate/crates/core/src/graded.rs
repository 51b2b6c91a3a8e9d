use std::ops::Range;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).fold(0.0, |a, b| a + b).sqrt()
}

/// Finite-dimensional ℤ-graded vector space with bounded support.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedSpace {
    components: Vec<(i32, usize)>,
    offsets: Vec<usize>,
}

impl GradedSpace {
    /// Components are (degree, dimension) pairs with strictly increasing degrees.
    pub fn new(components: impl IntoIterator<Item = (i32, usize)>) -> Result<Self> {
        let components: Vec<(i32, usize)> = components.into_iter().collect();
        for w in components.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidSpace(format!(
                    "degrees must be strictly increasing, got {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(d, _)) = components.iter().find(|c| c.1 == 0) {
            return Err(Error::InvalidSpace(format!("component in degree {d} has dimension 0")));
        }
        let mut offsets = Vec::with_capacity(components.len());
        let mut acc = 0;
        for &(_, n) in &components {
            offsets.push(acc);
            acc += n;
        }
        Ok(Self { components, offsets })
    }

    pub fn zero() -> Self {
        Self { components: Vec::new(), offsets: Vec::new() }
    }

    pub fn components(&self) -> &[(i32, usize)] {
        &self.components
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> + '_ {
        self.components.iter().map(|c| c.0)
    }

    pub fn total_dim(&self) -> usize {
        self.components.iter().map(|c| c.1).sum()
    }

    pub fn dim(&self, degree: i32) -> usize {
        self.position(degree).map_or(0, |p| self.components[p].1)
    }

    pub fn min_degree(&self) -> Option<i32> {
        self.components.first().map(|c| c.0)
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.components.last().map(|c| c.0)
    }

    fn position(&self, degree: i32) -> Option<usize> {
        self.components.binary_search_by_key(&degree, |c| c.0).ok()
    }

    /// Index range of the degree component inside the flattened space.
    pub fn range(&self, degree: i32) -> Option<Range<usize>> {
        self.position(degree).map(|p| self.offsets[p]..self.offsets[p] + self.components[p].1)
    }

    pub fn degree_of(&self, index: usize) -> i32 {
        let p = self.offsets.partition_point(|&o| o <= index) - 1;
        self.components[p].0
    }

    /// E[n] with E[n]^k = E^{k+n}.
    pub fn shift(&self, n: i32) -> Self {
        Self::new(self.components.iter().map(|&(d, k)| (d - n, k))).expect("shift preserves order")
    }

    /// Direct sum ordered by degree, `a` before `b` inside each degree. Also
    /// returns where each basis vector of `a` and `b` lands.
    pub fn direct_sum(a: &Self, b: &Self) -> (Self, Vec<usize>, Vec<usize>) {
        let mut degrees: Vec<i32> = a.degrees().chain(b.degrees()).collect();
        degrees.sort_unstable();
        degrees.dedup();
        let sum = Self::new(degrees.iter().map(|&d| (d, a.dim(d) + b.dim(d)))).unwrap();
        let mut pa = vec![0; a.total_dim()];
        let mut pb = vec![0; b.total_dim()];
        for &d in &degrees {
            let start = sum.range(d).unwrap().start;
            if let Some(r) = a.range(d) {
                for (j, i) in r.enumerate() {
                    pa[i] = start + j;
                }
            }
            if let Some(r) = b.range(d) {
                for (j, i) in r.enumerate() {
                    pb[i] = start + a.dim(d) + j;
                }
            }
        }
        (sum, pa, pb)
    }
}

/// Degree-k map between graded spaces, stored as a dense matrix that is zero
/// outside the blocks E^i → F^{i+k}.
#[derive(Clone, Debug)]
pub struct GradedMap {
    source: Arc<GradedSpace>,
    target: Arc<GradedSpace>,
    degree: i32,
    matrix: CMatrix,
}

impl GradedMap {
    pub fn zero(source: Arc<GradedSpace>, target: Arc<GradedSpace>, degree: i32) -> Self {
        let matrix = CMatrix::zeros(target.total_dim(), source.total_dim());
        Self { source, target, degree, matrix }
    }

    pub fn identity(space: Arc<GradedSpace>) -> Self {
        let n = space.total_dim();
        Self { source: space.clone(), target: space, degree: 0, matrix: CMatrix::identity(n, n) }
    }

    /// Blocks are keyed by source degree i and map E^i → F^{i+k}.
    pub fn from_blocks(
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        degree: i32,
        blocks: impl IntoIterator<Item = (i32, CMatrix)>,
    ) -> Result<Self> {
        let mut map = Self::zero(source, target, degree);
        for (i, b) in blocks {
            map.set_block(i, &b)?;
        }
        Ok(map)
    }

    /// Accepts a full matrix; entries outside the degree-k blocks must vanish.
    pub fn from_matrix(
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        degree: i32,
        matrix: CMatrix,
    ) -> Result<Self> {
        if matrix.shape() != (target.total_dim(), source.total_dim()) {
            return Err(Error::ShapeMismatch(format!(
                "expected {}x{}, got {}x{}",
                target.total_dim(),
                source.total_dim(),
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for c in 0..matrix.ncols() {
            for r in 0..matrix.nrows() {
                if matrix[(r, c)] != C64::new(0.0, 0.0)
                    && target.degree_of(r) != source.degree_of(c) + degree
                {
                    return Err(Error::ShapeMismatch(format!(
                        "entry ({r},{c}) lies outside the degree-{degree} blocks"
                    )));
                }
            }
        }
        Ok(Self { source, target, degree, matrix })
    }

    pub(crate) fn from_parts(
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        degree: i32,
        matrix: CMatrix,
    ) -> Self {
        Self { source, target, degree, matrix }
    }

    pub fn set_block(&mut self, source_degree: i32, block: &CMatrix) -> Result<()> {
        let (rows, cols) = self.block_ranges(source_degree).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "no block from source degree {source_degree} for a degree-{} map",
                self.degree
            ))
        })?;
        if block.shape() != (rows.len(), cols.len()) {
            return Err(Error::ShapeMismatch(format!(
                "block at source degree {source_degree} must be {}x{}, got {}x{}",
                rows.len(),
                cols.len(),
                block.nrows(),
                block.ncols()
            )));
        }
        self.matrix
            .view_mut((rows.start, cols.start), (rows.len(), cols.len()))
            .copy_from(block);
        Ok(())
    }

    fn block_ranges(&self, source_degree: i32) -> Option<(Range<usize>, Range<usize>)> {
        let cols = self.source.range(source_degree)?;
        let rows = self.target.range(source_degree + self.degree)?;
        Some((rows, cols))
    }

    pub fn block(&self, source_degree: i32) -> Option<CMatrix> {
        let (rows, cols) = self.block_ranges(source_degree)?;
        Some(self.matrix.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned())
    }

    pub fn source(&self) -> &Arc<GradedSpace> {
        &self.source
    }

    pub fn target(&self) -> &Arc<GradedSpace> {
        &self.target
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    /// `self ∘ f`.
    pub fn compose(&self, f: &GradedMap) -> Result<GradedMap> {
        if *f.target != *self.source {
            return Err(Error::ChainMismatch("target of f differs from source of g".into()));
        }
        Ok(Self {
            source: f.source.clone(),
            target: self.target.clone(),
            degree: self.degree + f.degree,
            matrix: &self.matrix * &f.matrix,
        })
    }
}
