pub mod algebra;
pub mod emulation;
pub mod equivalence;
pub mod scenario;
pub mod spacetime;
pub mod transport;
