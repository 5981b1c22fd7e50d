use crate::error::{Error, Result};
use crate::ladder::LadderModel;
use crate::statistics::joint::ReservoirModel;

/// Emission spectrum of the lowest transition with the reservoir held at `n_r`.
///
/// Gain from the reservoir narrows the line to an effective FWHM
/// `γ - γ_r·n_r`, and the reservoir blueshifts it by `g_r·n_r`. The Lorentzian
/// uses half width `(γ - γ_r·n_r)/2` and is normalized so that its integral over
/// `ω` (μeV) equals `mean_n`.
pub fn emission_spectrum(
    omega: &[f64],
    ladder: &LadderModel,
    mean_n: f64,
    n_r: f64,
    res: &ReservoirModel,
) -> Result<Vec<f64>> {
    ladder.validate()?;
    if !(mean_n >= 0.0) || !(n_r >= 0.0) {
        return Err(Error::invalid("mean_n and n_r must be non-negative"));
    }
    let width = ladder.gamma - res.gamma_r * n_r;
    if !(width > 0.0) {
        return Err(Error::Regime(format!(
            "effective linewidth gamma - gamma_r*n_r = {width} is not positive (at or above threshold)"
        )));
    }
    let center = ladder.transition_frequency(1)? + res.g_r * n_r;
    let hw = width / 2.0;
    Ok(omega
        .iter()
        .map(|w| mean_n * hw / std::f64::consts::PI / ((w - center).powi(2) + hw * hw))
        .collect())
}
