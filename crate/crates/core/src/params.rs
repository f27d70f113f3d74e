//! Flat views over model parameters, shared by the optimizer and the
//! gradient checkers.

/// Mutable view of one parameter array.
pub struct ParamMut<'a> {
    pub name: String,
    pub values: &'a mut [f64],
    /// Whether decoupled weight decay applies (weight matrices only).
    pub decay: bool,
}

/// Read-only view of one parameter array.
pub struct ParamRef<'a> {
    pub name: String,
    pub values: &'a [f64],
}

/// Anything whose parameters can be enumerated in a fixed order.
///
/// `params` and `params_mut` must list arrays in the same order; gradient
/// containers mirror that order.
pub trait Parameterized {
    fn params(&self) -> Vec<ParamRef<'_>>;
    fn params_mut(&mut self) -> Vec<ParamMut<'_>>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.values.len()).sum()
    }
}
