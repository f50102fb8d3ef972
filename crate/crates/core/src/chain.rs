use std::collections::BTreeMap;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::complex::{CellSet, ComplexId};

/// Integer chain of a fixed degree: a sparse map cell index → nonzero multiplicity.
///
/// The orientation of the current on a cell is the cell's reference orientation times the sign
/// of its coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chain {
    complex: ComplexId,
    degree: usize,
    coeffs: BTreeMap<usize, i64>,
}

/// Serialized chain: `(index, coefficient)` pairs in ascending index order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDoc {
    pub degree: usize,
    pub coefficients: Vec<(usize, i64)>,
}

impl Chain {
    pub fn zero(complex: ComplexId, degree: usize) -> Self {
        Chain {
            complex,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub(crate) fn from_pairs(complex: ComplexId, degree: usize, pairs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (i, c) in pairs {
            *coeffs.entry(i).or_insert(0) += c;
        }
        coeffs.retain(|_, c| *c != 0);
        Chain {
            complex,
            degree,
            coeffs,
        }
    }

    pub fn complex_id(&self) -> ComplexId {
        self.complex
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn get(&self, index: usize) -> i64 {
        self.coeffs.get(&index).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of cells in the support.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.coeffs.iter().map(|(&i, &c)| (i, c))
    }

    pub fn support(&self) -> Vec<usize> {
        self.coeffs.keys().copied().collect()
    }

    pub fn max_abs_coefficient(&self) -> i64 {
        self.coeffs.values().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn scaled(&self, factor: i64) -> Chain {
        Chain::from_pairs(self.complex, self.degree, self.iter().map(|(i, c)| (i, c * factor)))
    }

    /// Keeps the coefficients on cells accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Chain {
        Chain {
            complex: self.complex,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(i, _)| keep(**i))
                .map(|(&i, &c)| (i, c))
                .collect(),
        }
    }

    pub fn restrict_to(&self, set: &CellSet) -> Chain {
        self.restrict(|i| set.contains(self.degree, i))
    }

    pub fn to_doc(&self) -> ChainDoc {
        ChainDoc {
            degree: self.degree,
            coefficients: self.iter().collect(),
        }
    }

    fn combine(&self, other: &Chain, sign: i64) -> Chain {
        assert_eq!(self.complex, other.complex, "chains live on different complexes");
        assert_eq!(self.degree, other.degree, "chains have different degrees");
        Chain::from_pairs(
            self.complex,
            self.degree,
            self.iter().chain(other.iter().map(|(i, c)| (i, sign * c))),
        )
    }
}

impl Add for &Chain {
    type Output = Chain;
    fn add(self, rhs: &Chain) -> Chain {
        self.combine(rhs, 1)
    }
}

impl Sub for &Chain {
    type Output = Chain;
    fn sub(self, rhs: &Chain) -> Chain {
        self.combine(rhs, -1)
    }
}

impl Neg for &Chain {
    type Output = Chain;
    fn neg(self) -> Chain {
        self.scaled(-1)
    }
}
