//! Certification of qubit graph states from uniform single-qubit
//! measurements: the same rotation on every qubit followed by a computational
//! readout. The library provides the Pauli/stabilizer algebra, dense
//! reference simulation, the estimation and decision protocol with its
//! fidelity bounds, a pulse-level model of the protocol on a Rydberg-atom
//! chain, and an exact decision procedure under a stabilizer promise.

pub mod certify;
pub mod pauli;
pub mod promise;
pub mod rydberg;
pub mod seeding;
pub mod stabilizer;
pub mod statevector;

pub use certify::{
    certify, certify_records, monte_carlo_validation, CertificationConfig, CertificationReport,
    CertifyError, EnsembleSampler, EstimationPlan, FidelityRegime, MonteCarloPoint, MonteCarloRow,
    ProtocolEstimates, Verdict,
};
pub use pauli::{Axis, AxisPair, PauliError, PauliString, SymmetricOperatorSet};
pub use promise::{
    certify_under_promise, classify_assignments, evaluate_conditions, witness_states,
    AssignmentDiagram, PromiseConditionSet, PromiseError, PromiseVerdict,
};
pub use rydberg::{
    measure_observables, ChainSimulator, PreparationMode, PulseSchedule, PulseSegment,
    RotationMode, RydbergChainConfig, RydbergError, RydbergRun, ScheduleLabel, SimOptions,
};
pub use stabilizer::{GraphSpec, StabilizerError, StabilizerTableau, StateClass};
pub use statevector::{
    MeasurementDirection, MeasurementRecord, MixedStateEnsemble, NoiseModel, StateVector,
    StateVectorError,
};
