"""Near-field IRS phase design and reconfiguration-overhead simulator."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    AnglePair,
    BlockageArea,
    CarrierConfig,
    IrsPanel,
    Point3,
    incidence_angles,
    passive_tau,
)
from .field import PhaseProfile, RadioConfig, reflected_field, gamma_max  # noqa: E402
from .phase_design import IlluminationSpec, focus_profile, wide_profile  # noqa: E402
from .protocol import ProtocolConfig, Scenario, run_protocol  # noqa: E402
from .overhead import OverheadParams  # noqa: E402
from .config import ConfigError, ScenarioConfig  # noqa: E402

__all__ = [
    "AnglePair", "BlockageArea", "CarrierConfig", "IrsPanel", "Point3", "incidence_angles",
    "passive_tau", "PhaseProfile", "RadioConfig", "reflected_field", "gamma_max",
    "IlluminationSpec", "focus_profile", "wide_profile", "ProtocolConfig", "Scenario",
    "run_protocol", "OverheadParams", "ConfigError", "ScenarioConfig",
]
