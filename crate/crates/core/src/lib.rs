//! Maurer machines, regular threads, and strict load/store instruction set
//! architectures.
//!
//! The crate has five layers:
//!
//! * [`bta`]: polarized threads built from `stop`, `dead` and postconditional
//!   composition, given by finite linear recursive specifications. Projection,
//!   residuals and bisimulation checking live here, together with a small text
//!   format for thread files.
//! * [`maurer`]: machines with a finite memory, a state space of total
//!   assignments, and operations as total state transformers. Threads are
//!   applied to states; input/output regions of operations are computed by
//!   exhaustive enumeration.
//! * [`isa`]: strict load/store machines: an addressable data memory, an
//!   operating unit of single bits, load/store register pairs, a reply
//!   register, and data manipulation instructions given by explicit tables.
//! * [`reduce`]: the construction that removes the topmost operating unit
//!   bit of a strict load/store machine, quadrupling the data manipulation
//!   instructions and splitting each thread in two, together with equivalence
//!   verification and iteration down to an empty operating unit.
//! * [`tpfc`]: transformations of the external (data) memory: synthesis of a
//!   machine/thread pair realizing an arbitrary transformation, replay checks
//!   of the synthesized computations, and exact counting certificates showing
//!   when small machines cannot realize all transformations.

pub mod bta;
pub mod isa;
pub mod maurer;
pub mod reduce;
pub mod tpfc;
