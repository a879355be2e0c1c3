//! JSON descriptions of grids and symbols, and the feature-name registry.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numgrid::{Grid, GridFunction};
use crate::symbols::{
    from_translation_invariant, universality_symbol, AnalyticTerm, DenseSymbol, Factor, Polynomial, SeparableSymbol,
    Symbol, Term,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfWidth {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub half_width: HalfWidth,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        match &self.half_width {
            HalfWidth::Uniform(h) => Grid::new(self.dim, self.n, *h),
            HalfWidth::PerAxis(h) => {
                if h.len() != self.dim {
                    return Err(Error::InvalidGrid(format!("half_width has {} entries for dim {}", h.len(), self.dim)));
                }
                Grid::with_half_widths(self.n, h.clone())
            }
        }
    }

    pub fn of(grid: &Grid) -> Self {
        let h = grid.half_widths();
        let half_width =
            if h.iter().all(|v| *v == h[0]) { HalfWidth::Uniform(h[0]) } else { HalfWidth::PerAxis(h.to_vec()) };
        Self { dim: grid.dim(), n: grid.points_per_axis(), half_width }
    }
}

/// Real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Real(f64),
    Complex([f64; 2]),
}

impl Coef {
    fn value(self) -> C64 {
        match self {
            Coef::Real(r) => C64::new(r, 0.0),
            Coef::Complex([re, im]) => C64::new(re, im),
        }
    }

    fn of(c: C64) -> Self {
        if c.im == 0.0 {
            Coef::Real(c.re)
        } else {
            Coef::Complex([c.re, c.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub index: Vec<usize>,
    pub coef: Coef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorObject {
    GaussHermite {
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        degree: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<Coef>,
    },
    PolyGauss {
        terms: Vec<Monomial>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
    },
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Constant {
        value: Coef,
    },
    /// Lattice samples in flat grid order.
    Grid {
        grid: GridSpec,
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
}

/// A registry name or a full object description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", untagged)]
pub enum FactorSpec {
    Named(String),
    Object(FactorObject),
}

impl TryFrom<Value> for FactorSpec {
    type Error = String;

    fn try_from(v: Value) -> std::result::Result<Self, String> {
        match v {
            Value::String(s) => Ok(FactorSpec::Named(s)),
            other => serde_json::from_value(other).map(FactorSpec::Object).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coef: Option<Coef>,
    pub f: FactorSpec,
    pub g: FactorSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Separable {
        dim: usize,
        terms: Vec<TermSpec>,
        /// Working `x` grid for commands that discretize the symbol.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<GridSpec>,
    },
    /// `F(x_i, y_j)` with `x` index outer.
    Dense {
        grid_x: GridSpec,
        grid_y: GridSpec,
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
    /// Kernel `k(s - t)` given by a profile sampled on the difference lattice.
    TranslationInvariant {
        grid: GridSpec,
        profile: FactorSpec,
    },
    Universality {
        eps: f64,
        polys: Vec<FactorSpec>,
        grid: GridSpec,
    },
}

/// A symbol with the grid its description pins, if any.
#[derive(Debug, Clone)]
pub struct BuiltSymbol {
    pub symbol: Symbol,
    pub grid: Option<Grid>,
}

impl BuiltSymbol {
    pub fn separable(&self) -> Result<&SeparableSymbol> {
        match &self.symbol {
            Symbol::Separable(s) => Ok(s),
            Symbol::Dense(_) => Err(Error::InvalidInput("this command needs a separable symbol".into())),
        }
    }

    /// Pinned grid, else the dense `x` grid, else the symbol's working grid.
    pub fn working_grid(&self) -> Result<Grid> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        match &self.symbol {
            Symbol::Separable(s) => s.working_grid(),
            Symbol::Dense(d) => Ok(d.grid_x().clone()),
        }
    }
}

fn complex_values(re: &[f64], im: Option<&[f64]>, len: usize, what: &str) -> Result<Vec<C64>> {
    if re.len() != len || im.is_some_and(|v| v.len() != len) {
        return Err(Error::InvalidInput(format!("{what} needs {len} values")));
    }
    Ok((0..len).map(|i| C64::new(re[i], im.map_or(0.0, |v| v[i]))).collect())
}

fn split_values(v: &[C64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let re = v.iter().map(|c| c.re).collect();
    let im = v.iter().any(|c| c.im != 0.0).then(|| v.iter().map(|c| c.im).collect());
    (re, im)
}

/// `const`, `coord_k`, `poly:c0,c1,..` (ascending powers of the first axis),
/// `hermite:n` or `hermite:n,m` (probabilists' Hermite polynomial).
pub fn named_feature(name: &str, dim: usize) -> Result<AnalyticTerm> {
    let bad = || {
        Error::InvalidInput(format!("unknown feature {name:?}; expected const, coord_k, poly:<coeffs> or hermite:<n>"))
    };
    if name == "const" {
        return Ok(AnalyticTerm::constant(1.0));
    }
    let poly = if let Some(k) = name.strip_prefix("coord_") {
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 || k > dim {
            return Err(Error::InvalidInput(format!("{name}: axis must be in 1..={dim}")));
        }
        let mut idx = [0; 2];
        idx[k - 1] = 1;
        Polynomial::new(dim, [(idx, C64::new(1.0, 0.0))])?
    } else if let Some(c) = name.strip_prefix("poly:") {
        let coeffs = c.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        Polynomial::univariate(dim, 0, &coeffs)?
    } else if let Some(n) = name.strip_prefix("hermite:") {
        let mut degrees =
            n.split(',').map(|s| s.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        if degrees.len() > dim {
            return Err(Error::InvalidInput(format!("{name}: at most {dim} degrees")));
        }
        degrees.resize(dim, 0);
        Polynomial::hermite_centered(&degrees, 1.0)?
    } else {
        return Err(bad());
    };
    Ok(AnalyticTerm::PolyGauss { poly, width: None })
}

impl FactorSpec {
    pub fn build(&self, dim: usize) -> Result<Factor> {
        let obj = match self {
            FactorSpec::Named(n) => return Ok(Factor::Analytic(named_feature(n, dim)?)),
            FactorSpec::Object(o) => o,
        };
        let term = match obj {
            FactorObject::GaussHermite { width, degree, center, scale } => AnalyticTerm::GaussHermite {
                degree: degree.clone().unwrap_or_else(|| vec![0; dim]),
                width: *width,
                center: center.clone().unwrap_or_else(|| vec![0.0; dim]),
                scale: scale.map_or(C64::new(1.0, 0.0), Coef::value),
            },
            FactorObject::PolyGauss { terms, width } => {
                let mono = terms
                    .iter()
                    .map(|m| {
                        if m.index.len() != dim {
                            return Err(Error::InvalidInput(format!(
                                "monomial index {:?} needs {dim} entries",
                                m.index
                            )));
                        }
                        let mut idx = [0; 2];
                        idx[..dim].copy_from_slice(&m.index);
                        Ok((idx, m.coef.value()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                AnalyticTerm::PolyGauss { poly: Polynomial::new(dim, mono)?, width: *width }
            }
            FactorObject::Indicator { lo, hi } => AnalyticTerm::Indicator { lo: lo.clone(), hi: hi.clone() },
            FactorObject::Constant { value } => AnalyticTerm::Constant { value: value.value() },
            FactorObject::Grid { grid, re, im } => {
                let grid = grid.build()?;
                let values = complex_values(re, im.as_deref(), grid.len(), "grid factor")?;
                return Ok(Factor::Grid(GridFunction::new(grid, values)?));
            }
        };
        if let Some(d) = term.validate()? {
            if d != dim {
                return Err(Error::InvalidInput(format!("factor has dimension {d}, symbol has {dim}")));
            }
        }
        Ok(Factor::Analytic(term))
    }

    pub fn of(f: &Factor) -> Self {
        let obj = match f {
            Factor::Grid(g) => {
                let (re, im) = split_values(g.values());
                FactorObject::Grid { grid: GridSpec::of(g.grid()), re, im }
            }
            Factor::Analytic(t) => match t {
                AnalyticTerm::GaussHermite { degree, width, center, scale } => FactorObject::GaussHermite {
                    width: *width,
                    degree: Some(degree.clone()),
                    center: Some(center.clone()),
                    scale: Some(Coef::of(*scale)),
                },
                AnalyticTerm::PolyGauss { poly, width } => FactorObject::PolyGauss {
                    terms: poly
                        .terms()
                        .map(|(idx, c)| Monomial { index: idx[..poly.dim()].to_vec(), coef: Coef::of(*c) })
                        .collect(),
                    width: *width,
                },
                AnalyticTerm::Indicator { lo, hi } => FactorObject::Indicator { lo: lo.clone(), hi: hi.clone() },
                AnalyticTerm::Constant { value } => FactorObject::Constant { value: Coef::of(*value) },
            },
        };
        FactorSpec::Object(obj)
    }
}

impl SymbolSpec {
    pub fn build(&self) -> Result<BuiltSymbol> {
        match self {
            SymbolSpec::Separable { dim, terms, grid } => {
                let terms = terms
                    .iter()
                    .map(|t| {
                        Ok(Term::new(
                            t.coef.map_or(C64::new(1.0, 0.0), Coef::value),
                            t.f.build(*dim)?,
                            t.g.build(*dim)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let grid = grid.as_ref().map(GridSpec::build).transpose()?;
                Ok(BuiltSymbol { symbol: SeparableSymbol::new(*dim, terms)?.into(), grid })
            }
            SymbolSpec::Dense { grid_x, grid_y, re, im } => {
                let (gx, gy) = (grid_x.build()?, grid_y.build()?);
                let v = complex_values(re, im.as_deref(), gx.len() * gy.len(), "dense symbol")?;
                let values = DMatrix::from_fn(gx.len(), gy.len(), |i, j| v[i * gy.len() + j]);
                Ok(BuiltSymbol { symbol: DenseSymbol::new(gx, gy, values)?.into(), grid: None })
            }
            SymbolSpec::TranslationInvariant { grid, profile } => {
                let grid = grid.build()?;
                let p = profile.build(grid.dim())?;
                let k = GridFunction::new(grid.clone(), p.sample(&grid)?)?;
                let sym = from_translation_invariant(&k)?;
                Ok(BuiltSymbol { symbol: sym.into(), grid: None })
            }
            SymbolSpec::Universality { eps, polys, grid } => {
                let grid = grid.build()?;
                let polys = polys
                    .iter()
                    .map(|p| match p.build(grid.dim())? {
                        Factor::Analytic(AnalyticTerm::PolyGauss { poly, width: None }) => Ok(poly),
                        Factor::Analytic(AnalyticTerm::Constant { value }) => {
                            Ok(Polynomial::constant(grid.dim(), value))
                        }
                        _ => Err(Error::InvalidInput("universality polys must be polynomials".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(BuiltSymbol { symbol: universality_symbol(*eps, &polys, &grid)?.into(), grid: Some(grid) })
            }
        }
    }

    pub fn of_separable(sym: &SeparableSymbol, grid: Option<&Grid>) -> Self {
        let terms = sym
            .terms()
            .iter()
            .map(|t| TermSpec { coef: Some(Coef::of(t.coef)), f: FactorSpec::of(&t.f), g: FactorSpec::of(&t.g) })
            .collect();
        SymbolSpec::Separable { dim: sym.dim(), terms, grid: grid.map(GridSpec::of) }
    }

    pub fn of_symbol(sym: &Symbol, grid: Option<&Grid>) -> Self {
        match sym {
            Symbol::Separable(s) => Self::of_separable(s, grid),
            Symbol::Dense(d) => {
                let v = d.values();
                let flat: Vec<C64> = (0..v.nrows()).flat_map(|i| (0..v.ncols()).map(move |j| v[(i, j)])).collect();
                let (re, im) = split_values(&flat);
                SymbolSpec::Dense { grid_x: GridSpec::of(d.grid_x()), grid_y: GridSpec::of(d.grid_y()), re, im }
            }
        }
    }
}
