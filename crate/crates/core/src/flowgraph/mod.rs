//! Information flow graphs, worst-case schedules and transmissive profiles.

pub mod adversary;
pub mod graph;
pub mod profile;
pub mod transmissive;

pub use adversary::{adversarial_schedule, min_cut_over_types, verify_bound, BoundReport};
pub use graph::{
    build_demand_graph, build_graph, max_flow, max_flow_with_cut, Capacity, DataCollector, Edge, FlowResult,
    InfoFlowGraph, StageRepair, Vertex,
};
pub use profile::{majorized, majorized_vectors, profile, ProfileKind, RankProfile};
pub use transmissive::{verify_transmissive, TransmissiveReport};
