//! Finite-mode laboratory for the temporal gauge of free electrodynamics.
//!
//! Everything lives on a momentum torus with finitely many modes. On top of
//! that substrate the crate builds the gauge Weyl algebra with its exact CCR
//! phases, the two inequivalent vacuum functionals (the positive non-regular
//! one and the indefinite regular one defined by a Källén-Lehmann measure),
//! exact time-correlation series with energy-support verdicts, and the
//! Euclidean Gaussian ensemble with Monte Carlo cross-checks.
//!
//! Start with the runnable examples, one per capability:
//!
//! ```bash
//! cargo run -p weylab --example weyl_ccr               # CCR phases and automorphisms
//! cargo run -p weylab --example nonregular_vacuum      # Gauss law, non-regularity
//! cargo run -p weylab --example translation_overlap    # discontinuous translations
//! cargo run -p weylab --example kallen_lehmann         # indefinite two-point function
//! cargo run -p weylab --example spectral_verdicts      # energy-support analysis
//! cargo run -p weylab --example theta_sectors          # background-field sectors
//! cargo run -p weylab --example longitudinal_gram      # null vectors, indefinite Gram
//! cargo run -p weylab --example euclidean_mc           # Gaussian ensemble vs analytics
//! cargo run -p weylab --example charge_superselection  # exponential correlations
//! ```
//!
//! The thin `weylab` binary runs the same machinery from config files; see
//! `docs/config_schema.md`. All sign and normalization conventions are
//! pinned once in `CONVENTIONS.md` and every run output embeds that file's
//! hash.

pub mod error;
pub mod euclidean;
pub mod grid;
pub mod linalg;
pub mod series;
pub mod spectral;
pub mod testfn;
pub mod states;
pub mod weyl;

pub use error::{Error, Result};
pub use grid::ModeGrid;

/// Version hash of the convention ledger, embedded in every run output.
pub fn conventions_hash() -> String {
    use sha2::{Digest, Sha256};
    let text = include_str!("../CONVENTIONS.md");
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let digest = h.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}
