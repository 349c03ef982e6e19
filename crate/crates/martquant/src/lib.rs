//! Quantization of probability measures that preserves the convex order,
//! and exact transport on the quantized problems.
//!
//! A quadratic-optimal primal (Voronoi) quantization sits below its source
//! measure in the convex order; any dual (Delaunay) quantization sits above.
//! Quantizing the smaller measure primally and the larger one dually
//! therefore keeps the pair ordered, the quantization errors are martingale
//! transport costs, and any martingale coupling between the originals can be
//! pushed to an explicit martingale coupling between the quantized measures.
//! On the finitely supported problems everything downstream is exact linear
//! programming: Wasserstein and martingale-Wasserstein distances, martingale
//! optimal transport values and bounds, and the adapted (nested) Wasserstein
//! distance between couplings.
//!
//! Modules follow that pipeline: [`measure`] (representations, potentials,
//! convex order), [`primal`] and [`dual`] (the two quantizations), [`lp`]
//! (the simplex core), [`transport`] (distances and MOT), [`coupling`]
//! (quantized martingale couplings and the adapted distance), [`sweep`] and
//! [`report`] (convergence studies and the worked-example reproduction).
//!
//! The data-parallel inner loops run on rayon under the `parallel` feature
//! (enabled by default) and fall back to sequential iteration without it;
//! results are identical either way.

pub mod coupling;
pub mod dual;
mod error;
pub mod lp;
pub mod measure;
pub mod par;
pub mod primal;
pub mod report;
pub mod sweep;
pub mod transport;
mod util;

pub use error::{Error, Result};
pub use util::fit_slope;
