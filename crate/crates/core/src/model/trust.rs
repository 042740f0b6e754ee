use std::collections::BTreeSet;

use super::{ModelError, OperatorId, SliceRequest};

/// Binary relation over operators: `trusts(i, j)` iff operator `i` trusts
/// operator `j`. Always reflexive; neither symmetric nor transitive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustRelation {
    size: usize,
    matrix: Vec<bool>,
}

impl TrustRelation {
    /// Every operator trusts only itself.
    pub fn identity(size: usize) -> Self {
        let mut matrix = vec![false; size * size];
        for i in 0..size {
            matrix[i * size + i] = true;
        }
        Self { size, matrix }
    }

    /// Every operator trusts every other one.
    pub fn full(size: usize) -> Self {
        Self {
            size,
            matrix: vec![true; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Sets the entry for operator indices `i` and `j` (0-based). The
    /// diagonal stays true.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i != j {
            self.matrix[i * self.size + j] = value;
        }
    }

    pub fn trusts(&self, i: usize, j: usize) -> bool {
        self.matrix[i * self.size + j]
    }

    /// Same as [`Self::trusts`] on operator ids (numbered from 1).
    pub fn op_trusts(&self, a: OperatorId, b: OperatorId) -> bool {
        self.trusts(a.0 as usize - 1, b.0 as usize - 1)
    }

    /// Operators trusted by `origin`, in id order.
    pub fn trusted_by(&self, origin: OperatorId) -> impl Iterator<Item = OperatorId> + '_ {
        let i = origin.0 as usize - 1;
        (0..self.size)
            .filter(move |&j| self.trusts(i, j))
            .map(|j| OperatorId(j as u32 + 1))
    }

    /// Adjacency-list form as written in scenario files (diagonal omitted).
    pub fn to_adjacency(&self) -> Vec<(OperatorId, Vec<OperatorId>)> {
        (0..self.size)
            .map(|i| {
                let trusted = (0..self.size)
                    .filter(|&j| j != i && self.trusts(i, j))
                    .map(|j| OperatorId(j as u32 + 1))
                    .collect();
                (OperatorId(i as u32 + 1), trusted)
            })
            .collect()
    }
}

/// Operators whose resources `slice` may use:
/// `({j : origin T j} ∪ allow) \ deny`, deny taking precedence.
///
/// The origin always trusts itself, so the set is empty only when the
/// origin is denied; that case is reported as untrustable.
pub fn allowed_operators(
    slice: &SliceRequest,
    trust: &TrustRelation,
) -> Result<BTreeSet<OperatorId>, ModelError> {
    let spec = &slice.trust_spec;
    let mut allowed: BTreeSet<OperatorId> = trust.trusted_by(spec.origin).collect();
    allowed.extend(spec.allow.iter().copied());
    for d in &spec.deny {
        allowed.remove(d);
    }
    if allowed.is_empty() || !allowed.contains(&spec.origin) {
        return Err(ModelError::Untrustable {
            slice: slice.id,
            origin: spec.origin,
        });
    }
    Ok(allowed)
}
