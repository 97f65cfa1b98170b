use super::diagnostics::gamma_kernel;
use super::spec::FGarchSpec;
use crate::error::{Error, Result};
use crate::function_space::{apply_kernel, Curve};

/// Truncated backward series `Σ_{k=0}^{K} Γ_{i,k} δ`, where `Γ_{i,0}` is the
/// identity and `Γ_{i,k} = γ_{i-1} ∘ … ∘ γ_{i-k}` composes the random kernels
/// `γ_j(t,s) = α(t,s) ε_j²(s) + β(t,s)`.
///
/// `eps_history[0]` is the most recent innovation `ε_{i-1}`. Evaluated in
/// nested form `δ + γ_{i-1}(δ + γ_{i-2}(δ + …))` with dense kernels.
pub fn series_solution(spec: &FGarchSpec, eps_history: &[Curve], k: usize) -> Result<Curve> {
    if k > eps_history.len() {
        return Err(Error::Argument(format!(
            "series order {k} exceeds innovation history of length {}",
            eps_history.len()
        )));
    }
    let mut acc = spec.delta().clone();
    for eps in eps_history[..k].iter().rev() {
        let gamma = gamma_kernel(spec, eps)?;
        acc = spec.delta().axpy(1.0, &apply_kernel(&gamma, &acc)?)?;
    }
    Ok(acc)
}
