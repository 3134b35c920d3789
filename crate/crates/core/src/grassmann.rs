//! Planes, two-step linear flags and the dimension bookkeeping of the
//! universal sequence over a Grassmannian.
//!
//! Planes are numeric row-span representations; containment is tested by
//! least-squares projection on unit-normalized bases with a default
//! tolerance of 1e-9.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{norm, orthonormal_rows, residual_norm, scale};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum PlaneError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("basis vector {index} has length {got}, ambient is {ambient}")]
    BadVectorLength {
        index: usize,
        got: usize,
        ambient: usize,
    },
    #[error("basis is rank deficient: rank {rank} < {vectors} vectors")]
    RankDeficient { rank: usize, vectors: usize },
    #[error("requested plane dimension {n} exceeds ambient {dim_v}")]
    PlaneTooLarge { n: usize, dim_v: usize },
    #[error("flag requires small inside big: residual {residual}")]
    NotNested { residual: f64 },
}

pub const DEFAULT_CONTAINMENT_TOL: f64 = 1e-9;

/// Linear subspace given by an independent spanning set of row vectors.
#[derive(Debug, Clone)]
pub struct Plane<T> {
    ambient_dim: usize,
    basis: Vec<Vec<T>>,
}

// Planes serialize as a JSON array of row vectors.
impl<T: Serialize> Serialize for Plane<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.basis.serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Plane<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let basis = Vec::<Vec<T>>::deserialize(deserializer)?;
        let ambient = basis.first().map(|r| r.len()).unwrap_or(0);
        Plane::new(ambient, basis).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Plane<T> {
    pub fn new(ambient_dim: usize, basis: Vec<Vec<T>>) -> Result<Self, PlaneError> {
        for (index, v) in basis.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(PlaneError::BadVectorLength {
                    index,
                    got: v.len(),
                    ambient: ambient_dim,
                });
            }
        }
        let tol = T::from_f64(1e-12).unwrap();
        let rank = orthonormal_rows(&basis, tol).len();
        if rank < basis.len() {
            return Err(PlaneError::RankDeficient {
                rank,
                vectors: basis.len(),
            });
        }
        Ok(Plane { ambient_dim, basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    /// Largest containment residual of the unit-normalized basis vectors of
    /// `small` after projecting onto the span of `self`.
    pub fn containment_residual(&self, small: &Plane<T>) -> Result<T, PlaneError> {
        if self.ambient_dim != small.ambient_dim {
            return Err(PlaneError::DimensionMismatch(
                self.ambient_dim,
                small.ambient_dim,
            ));
        }
        let q = orthonormal_rows(&self.basis, T::from_f64(1e-14).unwrap());
        let mut worst = T::zero();
        for v in &small.basis {
            let n = norm(v);
            let unit = scale(v, T::one() / n);
            worst = worst.max(residual_norm(&unit, &q));
        }
        Ok(worst)
    }

    /// True iff every basis vector of `small` lies in the span of `self`
    /// within `tol`.
    pub fn contains(&self, small: &Plane<T>, tol: T) -> Result<bool, PlaneError> {
        Ok(self.containment_residual(small)? <= tol)
    }
}

/// Nested pair of planes (big, small) with dim small = dim big - 1.
#[derive(Debug, Clone, Serialize)]
pub struct LinearFlag<T> {
    pub big: Plane<T>,
    pub small: Plane<T>,
}

impl<T: Scalar> LinearFlag<T> {
    pub fn new(big: Plane<T>, small: Plane<T>, tol: T) -> Result<Self, PlaneError> {
        let residual = big.containment_residual(&small)?;
        if residual > tol {
            return Err(PlaneError::NotNested {
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(LinearFlag { big, small })
    }
}

/// dim Gr(V, n) = (dim V - n) n.
pub fn grassmann_dim(dim_v: usize, n: usize) -> Result<usize, PlaneError> {
    if n > dim_v {
        return Err(PlaneError::PlaneTooLarge { n, dim_v });
    }
    Ok((dim_v - n) * n)
}

/// Ranks of the tautological and normal bundles: (n, dim V - n).
pub fn universal_ranks(dim_v: usize, n: usize) -> Result<(usize, usize), PlaneError> {
    if n > dim_v {
        return Err(PlaneError::PlaneTooLarge { n, dim_v });
    }
    Ok((n, dim_v - n))
}

/// Free entries of the reduced-echelon chart of an n-plane: the pattern
/// [I | A] pins n pivot columns and leaves an n x (dim V - n) block free.
/// Independent dimension count used to cross-check [`grassmann_dim`].
pub fn echelon_chart_entry_count(dim_v: usize, n: usize) -> Result<usize, PlaneError> {
    if n > dim_v {
        return Err(PlaneError::PlaneTooLarge { n, dim_v });
    }
    let mut free = 0;
    for _row in 0..n {
        // Each row carries one pivot 1, zeros under the other pivots, and
        // dim V - n unconstrained entries.
        free += dim_v - n;
    }
    Ok(free)
}
