//! Instances of the semi-linear system `d_t U - Lap U = P(U)` with
//! `P_j(U) = sum_{|l| = k} A_{j,l}(D) U^l`, truncated to the grid's
//! Fourier ball.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, PaddedSpace, SpectralField};

/// A Fourier multiplier homogeneous of some degree. Symbols are never
/// evaluated at `xi = 0`; [`Symbol::at_zero`] supplies that value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Symbol {
    /// `value`; degree 0.
    Constant { value: f64 },
    /// `scale * i xi_axis`; degree 1.
    Derivative { axis: usize, scale: f64 },
    /// `scale * |xi|^power`; degree `power`.
    Riesz { power: f64, scale: f64 },
    /// `-i xi_b (delta_{out,a} - xi_out xi_a / |xi|^2)`: the `(a, b)` entry
    /// of `-Leray div(u (x) u)` in component `out`; degree 1.
    LerayDivergence { out: usize, a: usize, b: usize },
}

impl Symbol {
    pub fn degree(&self) -> f64 {
        match self {
            Symbol::Constant { .. } => 0.0,
            Symbol::Derivative { .. } | Symbol::LerayDivergence { .. } => 1.0,
            Symbol::Riesz { power, .. } => *power,
        }
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        match *self {
            Symbol::Constant { value } => Complex64::new(value, 0.0),
            Symbol::Derivative { axis, scale } => Complex64::new(0.0, scale * xi[axis]),
            Symbol::Riesz { power, scale } => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                Complex64::new(scale * r2.powf(0.5 * power), 0.0)
            }
            Symbol::LerayDivergence { out, a, b } => {
                let r2: f64 = xi.iter().map(|x| x * x).sum();
                let delta = if out == a { 1.0 } else { 0.0 };
                let proj = delta - xi[out] * xi[a] / r2;
                Complex64::new(0.0, -xi[b] * proj)
            }
        }
    }

    /// Value used at `xi = 0`: the constant for degree-0 constants, zero for
    /// every homogeneous symbol of positive degree.
    pub fn at_zero(&self) -> Complex64 {
        match *self {
            Symbol::Constant { value } => Complex64::new(value, 0.0),
            Symbol::Riesz { power, scale } if power == 0.0 => Complex64::new(scale, 0.0),
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// One entry `A_{j,l}(D) U^l` of the multiplier table. Entries sharing
/// `(output, exponents)` are summed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub output: usize,
    pub exponents: Vec<u32>,
    pub symbol: Symbol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub components: usize,
    /// Nonlinearity order `k`.
    pub order: u32,
    /// Multiplier degree `beta`.
    pub beta: f64,
    pub terms: Vec<Term>,
    /// Optional truncation radius; when set it must match the grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
}

/// Scaling exponent and critical Sobolev index of a system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingData {
    pub alpha: f64,
    pub s_crit: f64,
    pub dim: usize,
    pub order: u32,
}

impl ScalingData {
    /// Kato-space Sobolev index `s_crit + 2/p`.
    pub fn kato_index(&self, p: f64) -> f64 {
        self.s_crit + 2.0 / p
    }

    /// Lower end of the admissible Kato exponents, `max(2/alpha, k)`.
    pub fn min_kato_exponent(&self) -> f64 {
        (2.0 / self.alpha).max(self.order as f64)
    }

    /// The well-posedness hypothesis `1/k < alpha <= d/k`.
    pub fn check_kato_hypothesis(&self) -> Result<()> {
        let k = self.order as f64;
        let lower = 1.0 / k;
        let upper = self.dim as f64 / k;
        if self.alpha > lower && self.alpha <= upper + 1e-12 {
            Ok(())
        } else {
            Err(Error::KatoHypothesis {
                alpha: self.alpha,
                lower,
                upper,
            })
        }
    }
}

const HOMOGENEITY_PROBES: [[f64; 3]; 3] = [[0.7, -1.3, 0.4], [2.0, 0.5, -1.1], [-0.3, 0.9, 1.7]];

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSystem(msg));
        if !(1..=3).contains(&self.dim) {
            return bad(format!("dimension {} not in 1..=3", self.dim));
        }
        if self.components == 0 {
            return bad("system needs at least one component".into());
        }
        if self.order < 2 {
            return bad(format!("nonlinearity order {} < 2", self.order));
        }
        if !(0.0..2.0).contains(&self.beta) {
            return bad(format!("multiplier degree {} not in [0, 2)", self.beta));
        }
        for (i, term) in self.terms.iter().enumerate() {
            if term.output >= self.components {
                return bad(format!("term {i}: output {} out of range", term.output));
            }
            if term.exponents.len() != self.components {
                return bad(format!("term {i}: multi-index has wrong length"));
            }
            if term.exponents.iter().sum::<u32>() != self.order {
                return bad(format!("term {i}: |l| != k = {}", self.order));
            }
            match term.symbol {
                Symbol::Derivative { axis, .. } if axis >= self.dim => {
                    return bad(format!("term {i}: derivative axis {axis} out of range"));
                }
                Symbol::LerayDivergence { out, a, b } => {
                    if self.components != self.dim || out.max(a).max(b) >= self.dim || out != term.output {
                        return bad(format!("term {i}: inconsistent Leray indices"));
                    }
                }
                _ => {}
            }
            if (term.symbol.degree() - self.beta).abs() > 1e-12 {
                return bad(format!(
                    "term {i}: symbol degree {} differs from beta {}",
                    term.symbol.degree(),
                    self.beta
                ));
            }
            for probe in &HOMOGENEITY_PROBES {
                let xi = &probe[..self.dim];
                let twice: Vec<f64> = xi.iter().map(|x| 2.0 * x).collect();
                let lhs = term.symbol.eval(&twice);
                let rhs = term.symbol.eval(xi) * 2f64.powf(self.beta);
                if (lhs - rhs).norm() > 1e-12 * (1.0 + rhs.norm()) {
                    return bad(format!("term {i}: symbol is not homogeneous of degree {}", self.beta));
                }
            }
        }
        Ok(())
    }

    /// `alpha = (2 - beta)/(k - 1)` and `s_crit = d/2 - alpha`.
    pub fn scaling_data(&self) -> Result<ScalingData> {
        self.validate()?;
        let alpha = (2.0 - self.beta) / (self.order as f64 - 1.0);
        Ok(ScalingData {
            alpha,
            s_crit: self.dim as f64 / 2.0 - alpha,
            dim: self.dim,
            order: self.order,
        })
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::InvalidSystem(format!(
                "system is {}-dimensional, grid is {}-dimensional",
                self.dim,
                grid.dim()
            )));
        }
        if let Some(n) = self.truncation_radius {
            if (n - grid.truncation()).abs() > 1e-12 * n.max(1.0) {
                return Err(Error::InvalidSystem(format!(
                    "truncation radius {n} does not match grid radius {}",
                    grid.truncation()
                )));
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_truncation(mut self, n: f64) -> Self {
        self.truncation_radius = Some(n);
        self
    }
}

/// `scaling_data` as a free function.
pub fn scaling_data(spec: &SystemSpec) -> Result<ScalingData> {
    spec.scaling_data()
}

fn unit_exponents(components: usize, hot: &[usize]) -> Vec<u32> {
    let mut e = vec![0; components];
    for &h in hot {
        e[h] += 1;
    }
    e
}

/// Incompressible Navier-Stokes with the pressure removed by the Leray
/// projector: `P(u) = -Leray div(u (x) u)`.
pub fn builtin_navier_stokes(dim: usize) -> Result<SystemSpec> {
    if !(2..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let mut terms = Vec::new();
    for out in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                terms.push(Term {
                    output: out,
                    exponents: unit_exponents(dim, &[a, b]),
                    symbol: Symbol::LerayDivergence { out, a, b },
                });
            }
        }
    }
    Ok(SystemSpec {
        name: format!("navier-stokes-{dim}d"),
        dim,
        components: dim,
        order: 2,
        beta: 1.0,
        terms,
        truncation_radius: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubicSign {
    /// `P(u) = -u^3`.
    Defocusing,
    /// `P(u) = +u^3`.
    Focusing,
}

pub fn builtin_cubic_heat(dim: usize, sign: CubicSign) -> Result<SystemSpec> {
    if !(1..=3).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let value = match sign {
        CubicSign::Defocusing => -1.0,
        CubicSign::Focusing => 1.0,
    };
    let tag = match sign {
        CubicSign::Defocusing => "",
        CubicSign::Focusing => "focusing-",
    };
    Ok(SystemSpec {
        name: format!("cubic-heat-{tag}{dim}d"),
        dim,
        components: 1,
        order: 3,
        beta: 0.0,
        terms: vec![Term {
            output: 0,
            exponents: vec![3],
            symbol: Symbol::Constant { value },
        }],
        truncation_radius: None,
    })
}

/// Viscous Burgers, `P(u) = -(1/2) d_x (u^2)`.
pub fn builtin_burgers() -> SystemSpec {
    SystemSpec {
        name: "burgers".into(),
        dim: 1,
        components: 1,
        order: 2,
        beta: 1.0,
        terms: vec![Term {
            output: 0,
            exponents: vec![2],
            symbol: Symbol::Derivative { axis: 0, scale: -0.5 },
        }],
        truncation_radius: None,
    }
}

/// The pure heat equation (empty multiplier table) with the scaling of
/// Burgers-type systems (`k = 2`, `beta = 1`).
pub fn builtin_heat(dim: usize, components: usize) -> SystemSpec {
    SystemSpec {
        name: format!("heat-{dim}d"),
        dim,
        components,
        order: 2,
        beta: 1.0,
        terms: Vec::new(),
        truncation_radius: None,
    }
}

/// Look up a builtin system by name.
pub fn builtin(name: &str) -> Result<SystemSpec> {
    match name {
        "burgers" => Ok(builtin_burgers()),
        "navier-stokes-2d" => builtin_navier_stokes(2),
        "navier-stokes-3d" => builtin_navier_stokes(3),
        "cubic-heat-1d" => builtin_cubic_heat(1, CubicSign::Defocusing),
        "cubic-heat-2d" => builtin_cubic_heat(2, CubicSign::Defocusing),
        "cubic-heat-3d" => builtin_cubic_heat(3, CubicSign::Defocusing),
        "cubic-heat-focusing-1d" => builtin_cubic_heat(1, CubicSign::Focusing),
        "cubic-heat-focusing-2d" => builtin_cubic_heat(2, CubicSign::Focusing),
        "cubic-heat-focusing-3d" => builtin_cubic_heat(3, CubicSign::Focusing),
        "heat-1d" => Ok(builtin_heat(1, 1)),
        "heat-2d" => Ok(builtin_heat(2, 1)),
        "heat-3d" => Ok(builtin_heat(3, 1)),
        other => Err(Error::InvalidSystem(format!("unknown builtin system '{other}'"))),
    }
}

/// Precomputed evaluator of `P_n(U)` on one grid: distinct monomials, the
/// padded product space, and the summed symbol of every `(output, monomial)`
/// pair tabulated on the retained modes.
#[derive(Debug)]
pub struct Nonlinearity {
    grid: Arc<Grid>,
    components: usize,
    monomials: Vec<Vec<u32>>,
    /// `(output, monomial index, symbol values per mode)`
    table: Vec<(usize, usize, Vec<Complex64>)>,
    space: PaddedSpace,
}

impl Nonlinearity {
    pub fn new(spec: &SystemSpec, grid: Arc<Grid>) -> Result<Self> {
        spec.validate()?;
        spec.check_grid(&grid)?;
        let mut monomials: Vec<Vec<u32>> = Vec::new();
        let mut entries: BTreeMap<(usize, usize), Vec<Complex64>> = BTreeMap::new();
        for term in &spec.terms {
            let q = match monomials.iter().position(|m| *m == term.exponents) {
                Some(q) => q,
                None => {
                    monomials.push(term.exponents.clone());
                    monomials.len() - 1
                }
            };
            let values = entries
                .entry((term.output, q))
                .or_insert_with(|| vec![Complex64::new(0.0, 0.0); grid.len()]);
            for (mode, v) in values.iter_mut().enumerate() {
                *v += if Some(mode) == grid.zero_mode() {
                    term.symbol.at_zero()
                } else {
                    term.symbol.eval(grid.wavevector(mode))
                };
            }
        }
        let table = entries.into_iter().map(|((j, q), v)| (j, q, v)).collect();
        let space = PaddedSpace::new(grid.clone(), spec.order as usize);
        Ok(Nonlinearity {
            grid,
            components: spec.components,
            monomials,
            table,
            space,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    pub fn eval(&self, u: &SpectralField) -> Result<SpectralField> {
        if !u.grid().same_as(&self.grid) || u.components() != self.components {
            return Err(Error::GridMismatch);
        }
        let mut out = SpectralField::zeros(self.grid.clone(), self.components);
        if self.table.is_empty() {
            return Ok(out);
        }
        let mut physical: Vec<Option<Vec<Complex64>>> = vec![None; self.components];
        for m in &self.monomials {
            for (j, &e) in m.iter().enumerate() {
                if e > 0 && physical[j].is_none() {
                    physical[j] = Some(self.space.to_physical(u.component(j)));
                }
            }
        }
        let products: Vec<Vec<Complex64>> = self
            .monomials
            .iter()
            .map(|m| {
                let len = self.space.size().pow(self.grid.dim() as u32);
                let mut acc = vec![Complex64::new(1.0, 0.0); len];
                for (j, &e) in m.iter().enumerate() {
                    let Some(values) = &physical[j] else { continue };
                    for _ in 0..e {
                        for (a, v) in acc.iter_mut().zip(values) {
                            *a *= v;
                        }
                    }
                }
                self.space.to_modes(acc)
            })
            .collect();
        for (j, q, symbol) in &self.table {
            let dst = out.component_mut(*j);
            for ((d, s), p) in dst.iter_mut().zip(symbol).zip(&products[*q]) {
                *d += s * p;
            }
        }
        Ok(out)
    }
}

/// One-shot evaluation of `P_n(U)`; build a [`Nonlinearity`] to reuse the
/// symbol tables across calls.
pub fn evaluate_nonlinearity(spec: &SystemSpec, u: &SpectralField) -> Result<SpectralField> {
    Nonlinearity::new(spec, u.grid().clone())?.eval(u)
}
