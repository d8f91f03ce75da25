use serde::{Deserialize, Serialize};

/// Caps on the size of exact computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum number of entries in a dense tensor.
    pub max_tensor_size: u64,
    /// Maximum number of candidate cylinder intersections evaluated by a search.
    pub max_search: u64,
    /// Maximum number of distinct basis tensors fed to a norm LP.
    pub max_basis: u64,
    /// Maximum number of tableau entries (rows x columns) in one LP.
    pub max_lp_entries: u64,
    /// Maximum arity for truth tables.
    pub max_arity: u32,
    /// Maximum arity for approximate-degree LPs.
    pub max_adeg_arity: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_tensor_size: 1 << 20,
            max_search: 1 << 25,
            max_basis: 1 << 14,
            max_lp_entries: 1 << 24,
            max_arity: 20,
            max_adeg_arity: 6,
        }
    }
}
