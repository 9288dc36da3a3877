//! Heavy-tailed prior toolkit: Bessel `K`, the GIG mixing law, the
//! Generalized Hyperbolic family with its special and limiting cases, and
//! quadrature checks of the scale-mixture identities.

pub mod bessel;
pub mod gh;
pub mod gig;
pub mod limits;
pub mod mixture;
pub mod reference;
pub mod report;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use gh::{gh_pdf, ln_gh_pdf, GhParams};
pub use gig::{gig_pdf, ln_gig_pdf, GigParams};
pub use limits::{limit_deviation, LimitCase, XGrid};
pub use mixture::{gh_marginal_quadrature, student_from_inverse_gamma, student_mixture_quadrature};
pub use reference::{ln_reference_pdf, reference_pdf, Reference};
pub use report::{verify_priors, PriorsReport, VerifyConfig};
