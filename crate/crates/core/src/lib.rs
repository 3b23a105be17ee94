//! Khovanov and Khovanov–Rozansky sl(2) homology of oriented links, and the
//! chain-level isomorphism between their cubes of resolutions.

pub mod bridge;
pub mod diagram;
pub mod khcube;
pub mod krcube;
pub mod koszul;
pub mod linalg;
pub mod poly;
