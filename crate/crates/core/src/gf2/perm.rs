use serde::{Deserialize, Serialize};

/// A bijection on `0..len`, stored as `map[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(len: usize) -> Self {
        Permutation((0..len).collect())
    }

    /// Wraps `map`, returning `None` unless it is a bijection on `0..map.len()`.
    pub fn from_vec(map: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; map.len()];
        for &m in &map {
            if m >= map.len() || std::mem::replace(&mut seen[m], true) {
                return None;
            }
        }
        Some(Permutation(map))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Source index placed at position `new`.
    #[inline]
    pub fn get(&self, new: usize) -> usize {
        self.0[new]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (new, &old) in self.0.iter().enumerate() {
            inv[old] = new;
        }
        Permutation(inv)
    }

    /// `self ∘ other`: first reorder by `other`, then by `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len());
        Permutation(self.0.iter().map(|&i| other.0[i]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Gathers `items` into permuted order: `out[new] = items[map[new]]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| items[i].clone()).collect()
    }

    /// Inverse of [`Permutation::apply`].
    pub fn unapply<T: Clone + Default>(&self, items: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); items.len()];
        for (new, &old) in self.0.iter().enumerate() {
            out[old] = items[new].clone();
        }
        out
    }
}

/// Row and column reorderings of a matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPair {
    pub row_perm: Permutation,
    pub col_perm: Permutation,
}

impl PermutationPair {
    pub fn identity(rows: usize, cols: usize) -> Self {
        PermutationPair {
            row_perm: Permutation::identity(rows),
            col_perm: Permutation::identity(cols),
        }
    }
}
