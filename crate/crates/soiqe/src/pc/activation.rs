//! Generative-model activation functions, selectable by name at runtime.
//!
//! The default linear model keeps gradients exact; `tanh` is available for
//! a saturating generative model behind the same interface.

/// Elementwise activation applied to the linear combination of basis vectors.
pub trait Activation: Send + Sync {
    fn name(&self) -> &'static str;

    /// f(x)
    fn apply(&self, x: f64) -> f64;

    /// f'(x) evaluated at the pre-activation input.
    fn derivative(&self, x: f64) -> f64;
}

impl std::fmt::Debug for dyn Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Activation({})", self.name())
    }
}

/// f(x) = x.
pub struct IdentityActivation;

impl Activation for IdentityActivation {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn apply(&self, x: f64) -> f64 {
        x
    }

    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }
}

/// f(x) = tanh(x).
pub struct TanhActivation;

impl Activation for TanhActivation {
    fn name(&self) -> &'static str {
        "tanh"
    }

    fn apply(&self, x: f64) -> f64 {
        x.tanh()
    }

    fn derivative(&self, x: f64) -> f64 {
        let t = x.tanh();
        1.0 - t * t
    }
}

pub static IDENTITY: IdentityActivation = IdentityActivation;
pub static TANH: TanhActivation = TanhActivation;

static REGISTRY: &[&dyn Activation] = &[&IDENTITY, &TANH];

/// Look up an activation by its registered name.
pub fn activation_by_name(name: &str) -> Option<&'static dyn Activation> {
    REGISTRY.iter().copied().find(|a| a.name() == name)
}

/// Names of all registered activations.
pub fn activation_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|a| a.name()).collect()
}
