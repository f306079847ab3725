//! Route choice on a road network with congestion-dependent travel times.

mod curve;
mod network;
mod route;

pub use curve::{queue_consistency_check, smoothing_constants, QueueReport, TravelTimeCurve, TravelTimes};
pub use network::{load_network, BBox, DirectedEdge, RoadClass, RoadNetwork, OLDENBURG_BBOX};
pub use route::{build_route_choice_game, traffic_bounds, RouteChoice, RouteChoiceSpec, TrafficBounds};

/// Per-capita edge capacity (vehicles per second).
pub const DEFAULT_F: f64 = 4e-3;
/// Peak duration (seconds).
pub const DEFAULT_H: f64 = 7200.0;
/// f h for the congestion scenario, where caps actually matter.
pub const CONGESTION_FH: f64 = 0.3;
