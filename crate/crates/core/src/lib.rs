//! Exact q-expansion arithmetic for eta quotients and the weakly holomorphic
//! forms built from them, with Hecke operators and certified p-adic checks of
//! limit formulas of the shape `f | U(p^(2m+1)) / C(p^(2m+1)) → g`.

pub mod etaq;
pub mod heckebasis;
pub mod qring;
pub mod verify;

pub use etaq::{euler_expansion, CuspOrder, EtaCombination, EtaError, EtaQuotient};
pub use heckebasis::{CaseId, CaseStudy, Character, HeckeError};
pub use qring::{vp_int, QSeries, RatSeries, SeriesError, ValCertificate};
pub use verify::{GridSpec, ValuationReport, Verifier, VerifyError};
