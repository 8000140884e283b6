//! Priced timed Petri nets: exact semantics, the abstraction chain used to
//! decide cost-threshold and cost-optimality, and the supporting machinery
//! (constraint matrices, well-quasi-order procedures, transfer nets, automata).

pub mod acptpn;
pub mod aptpn;
pub mod encoder;
pub mod polytope;
pub mod ptpn;
pub mod sdtn;
pub mod solver;
pub mod wqo;
