//! Small-amplitude time-periodic solutions of Benjamin-Ono type equations
//!
//! ```text
//! omega u_t + H u_xx + d_x(u^3) + N4(u) = 0,   (t, x) in T^2,
//! ```
//!
//! built constructively: multimodal bifurcation from the kernel of
//! `d_t + d_xx H`, reduction of the linearized operator to constant
//! coefficients (torus diffeomorphism plus a pseudo-differential descent),
//! Lyapunov-Schmidt inversion under a Diophantine condition, and a
//! Nash-Moser iteration. A parameter scan classifies amplitudes `eps` as good
//! or bad.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`] sparse real trigonometric polynomials, multipliers, projections
//! * [`grid`] dense FFT grids and composition at displaced nodes
//! * [`bifurcation`] mode sets, amplitudes, the kernel solution and its linearization
//! * [`nonlinearity`] the catalog of quartic perturbations, `F(u, eps)` and `F'`
//! * [`diffeo`] the change of variables and the operators `Psi`, `M`
//! * [`descent`] the descent chain, `Phi` and the normal form `D`
//! * [`stack`] the conjugated operator `L4` on a truncated ambient box
//! * [`inversion`] Diophantine check and the truncated inverse
//! * [`nash_moser`] the iteration and a dense Newton cross-check
//! * [`cantor`] parameter scans and exclusion widths
//! * [`config`], [`verify`] the batch front end used by the binary

pub mod bifurcation;
pub mod cantor;
pub mod config;
pub mod descent;
pub mod diffeo;
pub mod error;
pub mod grid;
pub mod inversion;
pub mod nash_moser;
pub mod nonlinearity;
pub mod spectral;
pub mod stack;
pub mod verify;

pub use error::{Error, Result};
pub use spectral::{ModeIndex, Multiplier, Parity, SpectralField, Subspace};
