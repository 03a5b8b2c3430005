//! Independent reference computations. Shares only the state and operator
//! types with the engine; every propagator here has its own code path.

mod exact;
mod metrics;
mod suite;
mod teleport;

use serde::{Deserialize, Serialize};

pub use exact::{exact_liouville_evolve, exact_propagator, exact_unitary_evolve, LIOUVILLE_DIM_CAP, UNITARY_DIM_CAP};
pub use metrics::{fidelity_metrics, FidelityMetrics};
pub use suite::{all_pass, verify_all, VerifyOptions};
pub use teleport::{
    checkpoint_state, hadamard, verify_teleportation, CorrectionTable, FrameGate, Gate, Pauli, QubitCircuit,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub engine_value: serde_json::Value,
    pub oracle_value: serde_json::Value,
    pub metric: String,
    pub distance: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    pub fn new(
        quantity: &str,
        engine_value: impl Serialize,
        oracle_value: impl Serialize,
        metric: &str,
        distance: f64,
        tolerance: f64,
    ) -> Self {
        let distance = distance.max(0.0);
        OracleReport {
            quantity: quantity.to_string(),
            engine_value: serde_json::to_value(engine_value).unwrap_or(serde_json::Value::Null),
            oracle_value: serde_json::to_value(oracle_value).unwrap_or(serde_json::Value::Null),
            metric: metric.to_string(),
            distance,
            tolerance,
            pass: distance <= tolerance,
        }
    }
}
