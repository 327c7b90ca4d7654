"""citysense: deterministic simulation and analytics for urban air-quality
monitoring with mixed fixed/mobile sensor networks."""

from .analytics import (
    Association,
    ComparisonReport,
    ComparisonRow,
    Pmf,
    associate_mobile_to_fixed,
    compare_populations,
    estimate_pmf,
    relative_error,
    write_comparison_report,
)
from .domain import (
    Flag,
    GeoPoint,
    Measurement,
    NodeDescriptor,
    NodeKind,
    Quantity,
    Radio,
    ReportBatch,
    UNITS,
    ValidationError,
    co_mg_m3_to_ppm,
    co_ppm_to_mg_m3,
    haversine_distance,
    validate_measurement,
)
from .field import FieldModel, GaussianPlume, Path, field_value, path_position
from .indexes import (
    IndexColor,
    IndexComputer,
    IndexKind,
    IndexValue,
    TrafficAccessConfig,
    apparent_temperature_model,
    aqi_o3,
    aqi_pm,
    identity_thermal_model,
    tci,
    traffic_index,
)
from .netsim import (
    DeliveryOutcome,
    LinkModel,
    SimulationResult,
    coordinator_uplink,
    route_measurement,
    run,
)
from .nodes import NodeState, SensorSpec, default_sensor_spec, lag_filter, quantize, sample
from .scenario import ScenarioConfig, load_scenario, with_seed
from .store import MeasurementStore, QueryFilter, parse_measurement, serialize_measurement

__version__ = "0.1.0"
