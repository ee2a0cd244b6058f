//! Non-retarded dispersive (van der Waals / Casimir) interaction between a
//! spherical nanoparticle and a planar substrate.
//!
//! The sphere–substrate system is described by a real symmetric matrix per
//! azimuthal index `m`. Its eigenvalues are the geometric depolarization
//! factors of the coupled system; each one fixes a proper mode through the
//! pole condition `u(ω) = n` of the sphere's dielectric response. The
//! interaction energy is the zero-point energy of those modes minus that of
//! the isolated sphere, and the force follows from its derivative with
//! respect to the gap.
//!
//! Internally energies are in units of `ħω_p` and lengths in units of the
//! sphere radius `R`; conversion to eV, nm and newtons happens at the edges
//! (see [`units`]).
//!
//! ```
//! use sphere_casimir::prelude::*;
//!
//! let sphere = DrudeMaterial::aluminum();
//! let substrate = SubstrateMaterial::sapphire();
//! let geometry = Geometry::from_ratio(10.0).unwrap();
//! let result = interaction_energy(&geometry, &sphere, &substrate, &Truncation::fixed(4)).unwrap();
//! assert!(result.energy < 0.0);
//! ```

pub mod analysis;
pub mod cli_io;
pub mod coupling;
pub mod eigensolve;
pub mod energetics;
mod error;
pub mod materials;
pub mod special;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::analysis::{enhancement_ratio, fit_slope, SlopeFit, SweepCurve, SweepPoint};
    pub use crate::coupling::{build_all_blocks, build_block, coupling_coeff, Geometry, MBlock, MPolicy, Truncation};
    pub use crate::eigensolve::{eig_sym, eigen_derivative, EigenResult};
    pub use crate::energetics::{
        converge_in_l, convergence_study, converged_force, dipole_energy, force, interaction_energy, quadrupole_energy, EnergyResult,
        ConvergenceReport, ForceMethod, ForceResult,
    };
    pub use crate::materials::{contrast_factor, n0, omega_of_n, u_of_omega, DrudeMaterial, SpectralValue, SubstrateMaterial};
    pub use crate::spectrum::{modes_from_blocks, ModeSpectrum};
    pub use crate::{Error, Result};
}
