//! Chapters of the `book/` guide, compiled so their code blocks run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/phase-space.md")]
pub mod phase_space {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/thermal-trajectories.md")]
pub mod thermal_trajectories {}

#[doc = include_str!("../../../book/src/thermal-averages.md")]
pub mod thermal_averages {}

#[doc = include_str!("../../../book/src/wigner.md")]
pub mod wigner {}

#[doc = include_str!("../../../book/src/normal-forms.md")]
pub mod normal_forms {}

#[doc = include_str!("../../../book/src/quadrature.md")]
pub mod quadrature {}

#[doc = include_str!("../../../book/src/reference.md")]
pub mod reference {}

#[doc = include_str!("../../../book/src/configuration.md")]
pub mod configuration {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}
