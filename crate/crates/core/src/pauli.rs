//! Symbolic diagonal statistics built from `I`, `(I+Z)/2` and `(I-Z)/2`.
//!
//! A statistic for clique `C` and local configuration `y` is the `2^n`
//! diagonal operator whose `j`-th entry is the indicator `φ_{C,y}(x^j)`. It is
//! stored as one factor per vertex and never expanded unless explicitly asked
//! for through [`materialize_statistic`].

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{vertex_bit, GraphicalModel};

/// Largest vertex count accepted by [`materialize_statistic`].
pub const MATERIALIZE_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolicFactor {
    /// `I`, diagonal (1, 1).
    Identity,
    /// `(I + Z) / 2`, diagonal (1, 0).
    ProjPlus,
    /// `(I - Z) / 2`, diagonal (0, 1).
    ProjMinus,
}

impl SymbolicFactor {
    /// Diagonal entry selected by a single bit.
    #[inline]
    pub fn diag(self, bit: usize) -> u8 {
        match self {
            SymbolicFactor::Identity => 1,
            SymbolicFactor::ProjPlus => (bit == 0) as u8,
            SymbolicFactor::ProjMinus => (bit == 1) as u8,
        }
    }
}

impl fmt::Display for SymbolicFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolicFactor::Identity => "I",
            SymbolicFactor::ProjPlus => "P+",
            SymbolicFactor::ProjMinus => "P-",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliMarkovStatistic {
    factors: Vec<SymbolicFactor>,
    clique: Vec<usize>,
    y: usize,
}

impl PauliMarkovStatistic {
    pub fn factors(&self) -> &[SymbolicFactor] {
        &self.factors
    }

    pub fn clique(&self) -> &[usize] {
        &self.clique
    }

    /// Local configuration, lowest clique vertex as most significant bit.
    pub fn y(&self) -> usize {
        self.y
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    /// Entry `j` of the diagonal in `O(n)`.
    pub fn diag_entry(&self, j: usize) -> Result<u8> {
        let n = self.n();
        if j >> n != 0 {
            return Err(Error::IndexOutOfRange { index: j, bits: n });
        }
        Ok(self
            .factors
            .iter()
            .enumerate()
            .map(|(v, f)| f.diag(vertex_bit(j, v, n)))
            .product())
    }
}

impl fmt::Display for PauliMarkovStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str(" ⊗ ")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

/// One factor per vertex, vertex 0 first, in a single pass.
///
/// `y` holds one bit per clique vertex, in clique order.
pub fn build_statistic(clique: &[usize], y: &[u8], n: usize) -> Result<PauliMarkovStatistic> {
    if y.len() != clique.len() {
        return Err(Error::LengthMismatch {
            expected: clique.len(),
            got: y.len(),
        });
    }
    if let Some(&v) = clique.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    if clique.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidModel(format!("clique {clique:?} is not strictly ascending")));
    }
    let mut factors = Vec::with_capacity(n);
    let mut next = 0;
    for v in 0..n {
        let factor = if next < clique.len() && clique[next] == v {
            let f = if y[next] == 1 {
                SymbolicFactor::ProjMinus
            } else {
                SymbolicFactor::ProjPlus
            };
            next += 1;
            f
        } else {
            SymbolicFactor::Identity
        };
        factors.push(factor);
    }
    let y_index = y.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize);
    Ok(PauliMarkovStatistic {
        factors,
        clique: clique.to_vec(),
        y: y_index,
    })
}

pub fn statistic_diag_entry(stat: &PauliMarkovStatistic, j: usize) -> Result<u8> {
    stat.diag_entry(j)
}

/// Full diagonal via Kronecker expansion. Test support; refuses `n > 12`.
pub fn materialize_statistic(stat: &PauliMarkovStatistic) -> Result<Vec<u8>> {
    if stat.n() > MATERIALIZE_LIMIT {
        return Err(Error::MaterializeLimit {
            size: stat.n(),
            limit: MATERIALIZE_LIMIT,
        });
    }
    let mut diag = vec![1u8];
    for f in &stat.factors {
        let pair = [f.diag(0), f.diag(1)];
        diag = diag
            .iter()
            .flat_map(|&a| pair.iter().map(move |&b| a * b))
            .collect();
    }
    Ok(diag)
}

/// `H_θ = -Σ_{C,y} θ_{C,y} Φ_{C,y}` kept as a term list.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<(f64, PauliMarkovStatistic)>,
}

impl Hamiltonian {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliMarkovStatistic)] {
        &self.terms
    }

    /// Diagonal entry `j`, equal to `-θᵀφ(x^j)`.
    pub fn diag_entry(&self, j: usize) -> Result<f64> {
        if j >> self.n != 0 {
            return Err(Error::IndexOutOfRange {
                index: j,
                bits: self.n,
            });
        }
        // Inactive terms contribute nothing, so only the active entry of each
        // clique is accumulated, in clique order.
        let mut s = 0.0;
        for (coef, stat) in &self.terms {
            if stat.diag_entry(j)? == 1 {
                s += coef;
            }
        }
        Ok(s)
    }
}

pub fn build_hamiltonian(model: &GraphicalModel) -> Hamiltonian {
    let n = model.n();
    let mut terms = Vec::with_capacity(model.dim());
    for (c, clique) in model.cliques().iter().enumerate() {
        let k = clique.len();
        for y in 0..1usize << k {
            let bits: Vec<u8> = (0..k).map(|i| ((y >> (k - 1 - i)) & 1) as u8).collect();
            let stat = build_statistic(clique, &bits, n).expect("model cliques are valid");
            terms.push((-model.theta_at(c, y), stat));
        }
    }
    Hamiltonian { n, terms }
}

pub fn hamiltonian_diag_entry(h: &Hamiltonian, j: usize) -> Result<f64> {
    h.diag_entry(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use SymbolicFactor::*;

    #[test]
    fn single_vertex_plus() {
        let s = build_statistic(&[0], &[0], 1).unwrap();
        assert_eq!(s.factors(), &[ProjPlus]);
        assert_eq!(materialize_statistic(&s).unwrap(), vec![1, 0]);
    }

    #[test]
    fn factor_branches() {
        let s = build_statistic(&[0, 2], &[1, 0], 3).unwrap();
        assert_eq!(s.factors(), &[ProjMinus, Identity, ProjPlus]);
        assert_eq!(s.to_string(), "P- ⊗ I ⊗ P+");
        let s = build_statistic(&[1], &[1], 2).unwrap();
        assert_eq!(s.factors(), &[Identity, ProjMinus]);
        assert_eq!(materialize_statistic(&s).unwrap(), vec![0, 1, 0, 1]);
    }

    #[test]
    fn diag_entries() {
        let s = build_statistic(&[0, 1], &[1, 0], 2).unwrap();
        let d: Vec<u8> = (0..4).map(|j| s.diag_entry(j).unwrap()).collect();
        assert_eq!(d, vec![0, 0, 1, 0]);
        assert!(s.diag_entry(4).is_err());
    }

    #[test]
    fn identity_only_is_all_ones() {
        let s = PauliMarkovStatistic {
            factors: vec![Identity; 3],
            clique: vec![],
            y: 0,
        };
        assert!((0..8).all(|j| s.diag_entry(j).unwrap() == 1));
    }

    #[test]
    fn build_errors() {
        assert!(matches!(
            build_statistic(&[0, 3], &[0, 0], 3),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
        assert!(matches!(
            build_statistic(&[0, 1], &[0], 3),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn materialize_gate() {
        let s = build_statistic(&[0], &[1], 13).unwrap();
        assert!(matches!(materialize_statistic(&s), Err(Error::MaterializeLimit { .. })));
        let d = materialize_statistic(&build_statistic(&[1, 3], &[0, 1], 5).unwrap()).unwrap();
        assert!(d.iter().all(|&v| v * v == v));
    }

    #[test]
    fn hamiltonian_examples() {
        let zero = GraphicalModel::zeros(2, vec![vec![0, 1]]).unwrap();
        let h = build_hamiltonian(&zero);
        assert!((0..4).all(|j| h.diag_entry(j).unwrap() == 0.0));
        let single = GraphicalModel::new(1, vec![vec![0]], vec![-1.0, 0.0]).unwrap();
        let h = build_hamiltonian(&single);
        assert_eq!(h.terms().len(), 2);
        assert_eq!(h.diag_entry(0).unwrap(), 1.0);
        assert_eq!(h.diag_entry(1).unwrap(), 0.0);
    }
}
