//! Maurer–Cartan series over the endomorphism DGLA: residuals, gauge action,
//! the Kuranishi map and recursion, obstruction classes, slice gauge fixing
//! and the Kodaira–Spencer class.

use std::collections::BTreeMap;

use crate::cohesive::Dgla;
use crate::element::{supercommutator, AlgebraElement};
use crate::error::{Error, Result};
use crate::graded::{c64, C64};
use crate::hodge::HodgePackage;
use crate::series::{GaugeSeries, McSeries, MultiIndex, Series};
use crate::tol;

fn bracket_series(a: &Series, b: &Series) -> Result<Series> {
    a.convolve(b, supercommutator)
}

/// Coefficientwise d_ℰα_I + ½ Σ_{J+K=I} [α_J, α_K].
pub fn mc_residual(dgla: &Dgla, alpha: &McSeries) -> Result<Series> {
    let d = alpha.try_map(|x| dgla.differential(x))?;
    let half = bracket_series(alpha, alpha)?.scaled(c64(0.5, 0.0));
    d.plus(&half)
}

/// α′ with d + α′ = e^u (d + α) e^{−u}:
/// α′ = Σ_n ad_u^n(α)/n! − Σ_n ad_u^n(d_ℰu)/(n+1)!.
pub fn gauge_act(dgla: &Dgla, u: &GaugeSeries, alpha: &McSeries) -> Result<McSeries> {
    u.check_compatible(alpha)?;
    if u.has_constant_term() {
        return Err(Error::ParameterMismatch("gauge series must vanish at the origin".into()));
    }
    let du = u.try_map(|x| dgla.differential(x))?;
    let mut out = alpha.clone();
    let mut a_term = alpha.clone();
    let mut d_term = du.clone();
    out = out.minus(&d_term)?;
    let mut factorial = 1.0;
    for n in 1..=alpha.order() {
        a_term = bracket_series(u, &a_term)?;
        d_term = bracket_series(u, &d_term)?;
        if a_term.is_zero() && d_term.is_zero() {
            break;
        }
        factorial *= n as f64;
        out = out.plus(&a_term.scaled(c64(1.0 / factorial, 0.0)))?;
        out = out.minus(&d_term.scaled(c64(1.0 / (factorial * (n as f64 + 1.0)), 0.0)))?;
    }
    Ok(out)
}

/// ku(α) = α + ½ d*G[α, α], coefficientwise.
pub fn kuranishi_map(hp: &HodgePackage, alpha: &McSeries) -> Result<McSeries> {
    let br = bracket_series(alpha, alpha)?;
    alpha.plus(&br.map(|x| hp.codifferential(&hp.green(x))).scaled(c64(0.5, 0.0)))
}

/// Per multi-index: the harmonic class H[α, α]_I and its norm.
#[derive(Clone, Debug, Default)]
pub struct ObstructionTable {
    entries: BTreeMap<MultiIndex, (AlgebraElement, f64)>,
    order: u32,
}

impl ObstructionTable {
    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &AlgebraElement, f64)> {
        self.entries.iter().map(|(i, (x, n))| (i, x, *n))
    }

    pub fn get(&self, index: &MultiIndex) -> Option<&AlgebraElement> {
        self.entries.get(index).map(|e| &e.0)
    }

    pub fn norm(&self, index: &MultiIndex) -> f64 {
        self.entries.get(index).map_or(0.0, |e| e.1)
    }

    /// Smallest |I| with a nonvanishing obstruction.
    pub fn first_obstructed_order(&self) -> Option<u32> {
        self.entries.iter().filter(|(_, e)| e.1 > tol::RESIDUAL).map(|(i, _)| i.total()).min()
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.values().map(|e| e.1).fold(0.0, f64::max)
    }

    pub fn is_unobstructed(&self) -> bool {
        self.first_obstructed_order().is_none()
    }

    pub fn verdict(&self) -> String {
        match self.first_obstructed_order() {
            Some(k) => format!("obstructed at |I|={k}"),
            None => format!("unobstructed through order {}", self.order),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KuranishiSolution {
    pub alpha: McSeries,
    pub obstructions: ObstructionTable,
    /// True iff every obstruction vanishes; the series is then Maurer–Cartan.
    pub solved: bool,
}

/// Order-by-order solution of ku(α) = β with d*α = 0:
/// α_I = β_I − ½ d*G Σ_{J+K=I} [α_J, α_K], recording H[α, α]_I.
pub fn solve_kuranishi(hp: &HodgePackage, beta: &McSeries) -> Result<KuranishiSolution> {
    beta.check_mc_shape(1)?;
    for (i, b) in beta.iter() {
        let distance = hp.harmonic_distance(b);
        if distance > tol::HARMONIC {
            return Err(Error::NotHarmonic { index: i.to_string(), distance });
        }
    }
    let mut alpha = beta.empty_like();
    let mut table = ObstructionTable { entries: BTreeMap::new(), order: beta.order() };
    for w in 1..=beta.order() {
        for i in MultiIndex::of_total(beta.vars(), w) {
            let mut br = hp.model().zero_endo();
            if w >= 2 {
                for (j, k) in i.splittings() {
                    if let (Some(a), Some(b)) = (alpha.get(&j), alpha.get(&k)) {
                        br += &supercommutator(a, b)?;
                    }
                }
            }
            let correction = hp.codifferential(&hp.green(&br)).scaled(c64(-0.5, 0.0));
            alpha.set(i.clone(), &beta.coefficient(&i) + &correction)?;
            let obstruction = hp.harmonic_project(&br);
            let n = obstruction.norm();
            table.entries.insert(i, (obstruction, n));
        }
    }
    let solved = table.is_unobstructed();
    Ok(KuranishiSolution { alpha, obstructions: table, solved })
}

/// Gauge transformation u with coefficients in Im d* such that
/// α′ = gauge_act(u, α) satisfies d*α′ = 0 at every order.
pub fn slice_normalize(hp: &HodgePackage, alpha: &McSeries) -> Result<(GaugeSeries, McSeries)> {
    let dgla = hp.dgla();
    let mut u = Series::new(alpha.vars(), alpha.order(), hp.model().zero_endo());
    for w in 1..=alpha.order() {
        let current = gauge_act(dgla, &u, alpha)?;
        for i in MultiIndex::of_total(alpha.vars(), w) {
            let x = current.coefficient(&i);
            u.set(i, hp.green(&hp.codifferential(&x)))?;
        }
    }
    let normalized = gauge_act(dgla, &u, alpha)?;
    Ok((u, normalized))
}

/// H(Σ_i v_i α_{e_i}), the class of the first-order coefficient in direction v.
pub fn kodaira_spencer(hp: &HodgePackage, alpha: &McSeries, v: &[C64]) -> Result<AlgebraElement> {
    if v.len() != alpha.vars() {
        return Err(Error::ParameterMismatch(format!("direction has {} entries for {} variables", v.len(), alpha.vars())));
    }
    let mut first = hp.model().zero_endo();
    for (i, &c) in v.iter().enumerate() {
        first += &alpha.coefficient(&MultiIndex::unit(alpha.vars(), i)).scaled(c);
    }
    let residual = hp.differential(&first).norm();
    if residual > tol::CLOSED {
        return Err(Error::NotClosed { residual });
    }
    Ok(hp.harmonic_project(&first))
}

/// The three orthogonal pieces of the Maurer–Cartan equation, per coefficient:
/// d_ℰ(ku α), d*dG[α, α] and H[α, α].
#[derive(Clone, Debug)]
pub struct McSplit {
    pub closed_part: Series,
    pub coexact_part: Series,
    pub harmonic_part: Series,
}

impl McSplit {
    /// Worst norm of each piece.
    pub fn norms(&self) -> [f64; 3] {
        [self.closed_part.max_norm().0, self.coexact_part.max_norm().0, self.harmonic_part.max_norm().0]
    }

    pub fn all_vanish(&self, tolerance: f64) -> bool {
        self.norms().iter().all(|&n| n <= tolerance)
    }
}

pub fn mc_split(hp: &HodgePackage, alpha: &McSeries) -> Result<McSplit> {
    let br = bracket_series(alpha, alpha)?;
    let ku = kuranishi_map(hp, alpha)?;
    Ok(McSplit {
        closed_part: ku.map(|x| hp.differential(x)),
        coexact_part: br.map(|x| hp.codifferential(&hp.differential(&hp.green(x)))),
        harmonic_part: br.map(|x| hp.harmonic_project(x)),
    })
}
