//! Volterra forward variance time-changed by an independent affine modulator.

pub mod conditional;
pub mod fourier;
pub mod mc;
pub mod model;
pub mod modulator;
pub mod riccati;
pub mod simulate;

pub use conditional::{conditional_law, ConditionalLawBuilder};
pub use fourier::{
    approximate_price_fourier, approximate_prices_fourier, characteristic_exponent, FourierPricer,
    LogAverageCharacteristic, WindowMeasure,
};
pub use mc::{doleans_means_modulated, price_vix_option_mc_modulated, price_vix_options_mc_modulated};
pub use model::{laplace_transform, ModulatedModel};
pub use modulator::{AffineModulator, ModulatorKind};
pub use riccati::{solve_psi_phi, PsiPhiSolution};
pub use simulate::{simulate_modulator, ModulatorPath};
