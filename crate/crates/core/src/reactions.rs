//! The complete library of uni- and bimolecular mass-action reactions over
//! `d` species, and the polynomial ODE a rate vector induces on it.
//!
//! Each reaction contributes the column `ν_j a_j(y)` to the right-hand side
//! `y' = Σ_j k_j ν_j a_j(y)`, where `a_j` is the mass-action propensity
//! without its rate constant (`x`, `½x²` or `xz`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{variable_symbols, Monomial, PolynomialOde};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub index: usize,
    pub name: String,
}

impl Species {
    /// Upper-case symbol used when rendering reactions.
    pub fn symbol(&self) -> String {
        self.name.to_uppercase()
    }
}

/// One side of a reaction: multiplicity of each species, total at most 2.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex {
    counts: Vec<u8>,
}

impl Complex {
    pub fn empty(dim: usize) -> Self {
        Complex { counts: vec![0; dim] }
    }

    pub fn from_species(dim: usize, species: &[usize]) -> Result<Self> {
        let mut counts = vec![0u8; dim];
        for &s in species {
            if s >= dim {
                return Err(Error::InvalidArgument(format!("species index {s} out of range for d = {dim}")));
            }
            counts[s] += 1;
        }
        if species.len() > 2 {
            return Err(Error::InvalidArgument("complexes hold at most two molecules".into()));
        }
        Ok(Complex { counts })
    }

    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    pub fn order(&self) -> u32 {
        self.counts.iter().map(|&c| u32::from(c)).sum()
    }

    /// Species indices repeated by multiplicity, ascending.
    pub fn species_list(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    fn is_homodimer(&self) -> bool {
        self.counts.contains(&2)
    }
}

/// Mass-action propensity without rate constant: `coefficient · Π y_i^e_i`.
/// The coefficient is exactly 1/2 for homodimeric reactants and 1 otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropensityMonomial {
    pub coeff_num: u32,
    pub coeff_den: u32,
    pub exponents: Monomial,
}

impl PropensityMonomial {
    fn of(reactants: &Complex) -> Self {
        let coeff_den = if reactants.is_homodimer() { 2 } else { 1 };
        PropensityMonomial { coeff_num: 1, coeff_den, exponents: Monomial(reactants.counts.clone()) }
    }

    pub fn coefficient(&self) -> f64 {
        f64::from(self.coeff_num) / f64::from(self.coeff_den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ReactionRecord", into = "ReactionRecord")]
pub struct Reaction {
    id: usize,
    reactants: Complex,
    products: Complex,
    stoich: Vec<i32>,
    propensity: PropensityMonomial,
}

impl Reaction {
    pub fn new(id: usize, reactants: Complex, products: Complex) -> Result<Self> {
        if reactants.counts.len() != products.counts.len() {
            return Err(Error::DimensionMismatch { expected: reactants.counts.len(), got: products.counts.len() });
        }
        if !(1..=2).contains(&reactants.order()) {
            return Err(Error::InvalidArgument("reactant side must hold one or two molecules".into()));
        }
        if products.order() > 2 {
            return Err(Error::InvalidArgument("product side must hold at most two molecules".into()));
        }
        let stoich = stoich_of(&reactants, &products);
        let propensity = PropensityMonomial::of(&reactants);
        Ok(Reaction { id, reactants, products, stoich, propensity })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn dim(&self) -> usize {
        self.stoich.len()
    }

    pub fn reactants(&self) -> &Complex {
        &self.reactants
    }

    pub fn products(&self) -> &Complex {
        &self.products
    }

    pub fn stoich(&self) -> &[i32] {
        &self.stoich
    }

    pub fn propensity(&self) -> &PropensityMonomial {
        &self.propensity
    }

    /// Mass-action propensity at `state`, excluding the rate constant.
    pub fn propensity_eval(&self, state: &[f64]) -> Result<f64> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: state.len() });
        }
        Ok(self.propensity_unchecked(state))
    }

    pub(crate) fn propensity_unchecked(&self, state: &[f64]) -> f64 {
        self.propensity.coefficient() * self.propensity.exponents.eval(state)
    }

    /// Renders the reaction as e.g. `X + X -> Z` or `X -> 0`.
    pub fn render(&self, species: &[Species]) -> String {
        let side = |c: &Complex| {
            let names: Vec<String> = c.species_list().iter().map(|&i| species[i].symbol()).collect();
            if names.is_empty() {
                "0".to_string()
            } else {
                names.join(" + ")
            }
        };
        format!("{} -> {}", side(&self.reactants), side(&self.products))
    }
}

fn stoich_of(reactants: &Complex, products: &Complex) -> Vec<i32> {
    products
        .counts
        .iter()
        .zip(&reactants.counts)
        .map(|(&p, &r)| i32::from(p) - i32::from(r))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReactionRecord {
    pub id: usize,
    pub reactants: Vec<usize>,
    pub products: Vec<usize>,
    pub stoich: Vec<i32>,
    pub propensity: PropensityMonomial,
}

impl From<Reaction> for ReactionRecord {
    fn from(r: Reaction) -> Self {
        ReactionRecord {
            id: r.id,
            reactants: r.reactants.species_list(),
            products: r.products.species_list(),
            stoich: r.stoich,
            propensity: r.propensity,
        }
    }
}

impl TryFrom<ReactionRecord> for Reaction {
    type Error = Error;

    fn try_from(rec: ReactionRecord) -> Result<Self> {
        let dim = rec.stoich.len();
        let r = Reaction::new(
            rec.id,
            Complex::from_species(dim, &rec.reactants)?,
            Complex::from_species(dim, &rec.products)?,
        )?;
        if r.stoich != rec.stoich {
            return Err(Error::Parse(format!("reaction {}: stoichiometry does not match its complexes", rec.id)));
        }
        if r.propensity != rec.propensity {
            return Err(Error::Parse(format!("reaction {}: propensity does not match its reactants", rec.id)));
        }
        Ok(r)
    }
}

/// Ordered, duplicate-free list of every uni- and bimolecular reaction over
/// the species set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LibraryRecord")]
pub struct ReactionLibrary {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

#[derive(Deserialize)]
struct LibraryRecord {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

impl TryFrom<LibraryRecord> for ReactionLibrary {
    type Error = Error;

    fn try_from(rec: LibraryRecord) -> Result<Self> {
        let lib = ReactionLibrary { species: rec.species, reactions: rec.reactions };
        lib.validate()?;
        Ok(lib)
    }
}

/// Closed-form size of the complete library over `d` species.
pub fn library_size(d: usize) -> usize {
    2 * d * d + d * (d + 1) + 3 * d * (d.saturating_sub(1)) / 2
}

pub fn default_species(d: usize) -> Vec<Species> {
    variable_symbols(d)
        .into_iter()
        .enumerate()
        .map(|(index, name)| Species { index, name })
        .collect()
}

impl ReactionLibrary {
    /// Enumerates the complete library over `d` species.
    ///
    /// Families, in order: decay `X_i -> 0`; conversion `X_i -> X_j`;
    /// production `X_i -> X_i + X_j` (self-replication first);
    /// homodimer sink `2X_i -> 0`; homodimer conversion `2X_i -> X_j`
    /// (`j = i` first); heterodimer sink `X_i + X_j -> 0`; heterodimer
    /// absorption `X_i + X_j -> X_i`, `-> X_j`. At `d = 2` this is the
    /// 17-reaction list `X -> 0, Z -> 0, X -> Z, ..., X + Z -> Z`.
    pub fn enumerate(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("library needs at least one species".into()));
        }
        let one = |i: usize| Complex::from_species(d, &[i]);
        let two = |i: usize, j: usize| Complex::from_species(d, &[i, j]);
        let empty = Complex::empty(d);
        let mut sides: Vec<(Complex, Complex)> = Vec::with_capacity(library_size(d));
        let others = |i: usize| (0..d).filter(move |&j| j != i);

        for i in 0..d {
            sides.push((one(i)?, empty.clone()));
        }
        for i in 0..d {
            for j in others(i) {
                sides.push((one(i)?, one(j)?));
            }
        }
        for i in 0..d {
            sides.push((one(i)?, two(i, i)?));
            for j in others(i) {
                sides.push((one(i)?, two(i, j)?));
            }
        }
        for i in 0..d {
            sides.push((two(i, i)?, empty.clone()));
        }
        for i in 0..d {
            sides.push((two(i, i)?, one(i)?));
            for j in others(i) {
                sides.push((two(i, i)?, one(j)?));
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                sides.push((two(i, j)?, empty.clone()));
            }
        }
        for i in 0..d {
            for j in i + 1..d {
                sides.push((two(i, j)?, one(i)?));
                sides.push((two(i, j)?, one(j)?));
            }
        }

        let reactions = sides
            .into_iter()
            .enumerate()
            .map(|(id, (r, p))| Reaction::new(id, r, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(ReactionLibrary { species: default_species(d), reactions })
    }

    /// Library restricted to the given reactions; ids are kept so rates stay
    /// indexed by the original numbering.
    pub fn from_reactions(species: Vec<Species>, reactions: Vec<Reaction>) -> Result<Self> {
        let lib = ReactionLibrary { species, reactions };
        lib.validate()?;
        Ok(lib)
    }

    fn validate(&self) -> Result<()> {
        let d = self.species.len();
        if d == 0 {
            return Err(Error::InvalidDimension("library needs at least one species".into()));
        }
        for (i, s) in self.species.iter().enumerate() {
            if s.index != i {
                return Err(Error::Parse("species indices must be contiguous from 0".into()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for r in &self.reactions {
            if r.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: r.dim() });
            }
            if !seen.insert((r.reactants.clone(), r.products.clone())) {
                return Err(Error::Parse(format!("duplicate reaction {}", r.render(&self.species))));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.species.len()
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn render(&self, r: &Reaction) -> String {
        r.render(&self.species)
    }

    /// Looks a reaction up by its rendered form, ignoring whitespace and case.
    pub fn find(&self, text: &str) -> Option<&Reaction> {
        let norm = |s: &str| s.split_whitespace().collect::<String>().to_uppercase();
        let key = norm(text);
        self.reactions.iter().find(|r| norm(&self.render(r)) == key)
    }

    /// Polynomial ODE `y' = Σ_j k_j ν_j a_j(y)` induced by `rates`.
    pub fn assemble(&self, rates: &RateVector) -> Result<PolynomialOde> {
        if rates.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), got: rates.len() });
        }
        let mut p = PolynomialOde::zero(self.dim());
        for (r, &k) in self.reactions.iter().zip(rates.values()) {
            if k == 0.0 {
                continue;
            }
            let c = k * r.propensity.coefficient();
            for (i, &nu) in r.stoich.iter().enumerate() {
                if nu != 0 {
                    p.add_term(i, &r.propensity.exponents, c * f64::from(nu))?;
                }
            }
        }
        Ok(p)
    }
}

impl fmt::Display for ReactionLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.reactions {
            writeln!(f, "{:>3}  {}", r.id + 1, self.render(r))?;
        }
        Ok(())
    }
}

/// Non-negative rate constants, one per library reaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("rate {} is negative or non-finite: {}", j, values[j])));
        }
        Ok(RateVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        RateVector(vec![0.0; n])
    }

    /// Unit rate on reaction `j` (0-based).
    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        RateVector(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for RateVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        RateVector::new(v)
    }
}

impl From<RateVector> for Vec<f64> {
    fn from(r: RateVector) -> Self {
        r.0
    }
}
