//! Exact-simulation laboratory for duplication-free quantum neural networks
//! (DQNN) and two duplication-based baselines, the circuit-centric quantum
//! classifier (CCQ) and quantum circuit learning (QCL).
//!
//! The crate is organised bottom-up:
//!
//! * [`qsim`] is the statevector / density-matrix simulator.
//! * [`encoding`] maps classical data onto registers.
//! * [`circuits`] builds the layered R / controlled-R ansatz and counts its cost.
//! * [`models`] holds the three forward passes and their analytic gradients.
//! * [`noise`] perturbs circuit parameters (coherent noise).
//! * [`training`] has losses, metrics, gradients and the SGD / ADAM loop.
//! * [`datasets`] generates or loads every task, including spin-chain ground states.
//! * [`universality`] fits sigmoid-of-overlap expansions to targets on the encoded sphere.
//! * [`experiment`] ties everything to declarative configs and result files.

pub mod circuits;
pub mod datasets;
pub mod encoding;
pub mod experiment;
pub mod models;
pub mod noise;
pub mod qsim;
pub mod training;
pub mod universality;

pub(crate) mod rng;
