//! Symmetric atomic basis, truncated Fock basis and their product.
//!
//! Atomic states of `A` identical three-level atoms in the fully symmetric
//! subspace are labelled by occupations `(n1, n2, n3)` with `n1 + n2 + n3 = A`.
//! They are enumerated in descending lexicographic order, so for a single atom
//! the basis is `[(1,0,0), (0,1,0), (0,0,1)]`. The product basis keeps the field
//! index fastest-varying:
//!
//! ```text
//! flat = atomic_index * (n_max + 1) + n
//! ```

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atom count and Fock truncation defining the product Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    atoms: usize,
    n_max: usize,
}

impl SpaceSpec {
    pub fn new(atoms: usize, n_max: usize) -> Result<Self> {
        if atoms < 1 {
            return Err(Error::InvalidSpace("atoms must be >= 1".into()));
        }
        if n_max < 1 {
            return Err(Error::InvalidSpace("n_max must be >= 1".into()));
        }
        Ok(Self { atoms, n_max })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// Highest retained photon number.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn atomic_dim(&self) -> usize {
        (self.atoms + 1) * (self.atoms + 2) / 2
    }

    pub fn field_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn product_dim(&self) -> usize {
        self.atomic_dim() * self.field_dim()
    }
}

/// Level occupations `(n1, n2, n3)` of a symmetric atomic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomicBasisState(pub [usize; 3]);

impl AtomicBasisState {
    /// Occupation of level `level` (1-based).
    pub fn occupation(&self, level: usize) -> usize {
        self.0[level - 1]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductIndex {
    pub atomic_index: usize,
    pub fock_n: usize,
    pub flat: usize,
}

pub fn enumerate_atomic_basis(atoms: usize) -> Vec<AtomicBasisState> {
    let mut states = Vec::with_capacity((atoms + 1) * (atoms + 2) / 2);
    for n1 in (0..=atoms).rev() {
        for n2 in (0..=atoms - n1).rev() {
            states.push(AtomicBasisState([n1, n2, atoms - n1 - n2]));
        }
    }
    states
}

/// Bijection between `(atomic state, photon number)` and flat product indices.
#[derive(Debug, Clone)]
pub struct ProductBasis {
    spec: SpaceSpec,
    atomic: Vec<AtomicBasisState>,
    lookup: HashMap<AtomicBasisState, usize>,
}

pub fn index_map(spec: SpaceSpec) -> ProductBasis {
    let atomic = enumerate_atomic_basis(spec.atoms());
    let lookup = atomic.iter().enumerate().map(|(k, s)| (*s, k)).collect();
    ProductBasis { spec, atomic, lookup }
}

impl ProductBasis {
    pub fn spec(&self) -> SpaceSpec {
        self.spec
    }

    pub fn atomic_states(&self) -> &[AtomicBasisState] {
        &self.atomic
    }

    pub fn atomic_index(&self, state: &AtomicBasisState) -> Result<usize> {
        self.lookup
            .get(state)
            .copied()
            .ok_or(Error::UnknownAtomicState(state.0))
    }

    pub fn flat(&self, state: &AtomicBasisState, fock_n: usize) -> Result<usize> {
        if fock_n > self.spec.n_max() {
            return Err(Error::FockOutOfRange {
                n: fock_n,
                n_max: self.spec.n_max(),
            });
        }
        Ok(self.atomic_index(state)? * self.spec.field_dim() + fock_n)
    }

    pub fn decode(&self, flat: usize) -> ProductIndex {
        let nf = self.spec.field_dim();
        ProductIndex {
            atomic_index: flat / nf,
            fock_n: flat % nf,
            flat,
        }
    }

    /// Atomic occupations and photon number of a flat index.
    pub fn state_of(&self, flat: usize) -> (AtomicBasisState, usize) {
        let idx = self.decode(flat);
        (self.atomic[idx.atomic_index], idx.fock_n)
    }

    pub fn dim(&self) -> usize {
        self.spec.product_dim()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, AtomicBasisState, usize)> + '_ {
        (0..self.dim()).map(move |flat| {
            let (s, n) = self.state_of(flat);
            (flat, s, n)
        })
    }
}
