"""Flat ``key = value`` scenario configuration.

Lines starting with ``#`` are comments.  Vectors and lists are comma
separated.  Keys ending in ``_db``/``_dbm`` are converted to linear units
by the builder methods.  An empty value selects the documented automatic
default (e.g. half-wavelength element spacing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .field import RadioConfig, db_to_linear
from .geometry import BlockageArea, CarrierConfig, IrsPanel, Point3, passive_tau
from .overhead import OverheadParams
from .phase_design import IlluminationSpec
from .protocol import ProtocolConfig, Scenario


class ConfigError(ValueError):
    pass


def _float(s):
    return float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _vec3(s):
    parts = [float(p) for p in s.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {s!r}")
    return Point3.of(parts)


def _floats(s):
    return tuple(float(p) for p in s.split(",") if p.strip())


def _tokens(s):
    return tuple(p.strip() for p in s.split(",") if p.strip())


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _tau(s):
    return "passive" if s == "passive" else float(s)


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {s!r}")
        return s
    return parse


def _optional(parse):
    def inner(s):
        return None if s == "" else parse(s)
    return inner


# key -> (parser, default text, description)
SCHEMA = {
    "carrier.frequency_hz": (_float, "3e9", "carrier frequency"),
    "irs.center_m": (_vec3, "0,50,5", "IRS center, global frame"),
    "irs.side_y_m": (_float, "0.5", "IRS side along y (L_y)"),
    "irs.side_z_m": (_float, "0.5", "IRS side along z (L_z)"),
    "irs.spacing_y_m": (_optional(_float), "", "element spacing d_y; empty = half wavelength"),
    "irs.spacing_z_m": (_optional(_float), "", "element spacing d_z; empty = half wavelength"),
    "irs.tau": (_tau, "1", "field reflection magnitude; 'passive' = sqrt(A_x) towards the BS"),
    "irs.reflection_magnitude": (_float, "1", "baseband reflection amplitude; 1 = lossless"),
    "bs.position_m": (_vec3, "30,0,10", "BS position"),
    "mu.position_m": (_vec3, "20,60,1", "MU position (focus / illumination center)"),
    "radio.tx_power_dbm": (_float, "10", "transmit power"),
    "radio.tx_directivity_db": (_float, "12", "BS directivity"),
    "radio.rx_directivity_db": (_float, "0", "MU directivity"),
    "radio.noise_density_dbm_per_hz": (_float, "-174", "noise PSD N_0"),
    "radio.bandwidth_hz": (_float, "20e6", "bandwidth W"),
    "radio.noise_figure_db": (_float, "6", "noise figure"),
    "radio.impedance_ohm": (_float, "376.730", "free-space impedance"),
    "field.exact_amplitude": (_bool, "false", "use per-element 1/d amplitudes"),
    "blockage.center_m": (_vec3, "20,60,1", "blockage disc center"),
    "blockage.diameter_m": (_optional(_float), "", "blockage disc diameter; required, no default"),
    "illumination.delta_m": (_float, "0", "illumination square side; 0 = focusing"),
    "protocol.gamma_thr_db": (_float, "10", "SNR requirement"),
    "protocol.speed_m_per_s": (_float, "0.75", "MU speed"),
    "protocol.t_loc_s": (_optional(_float), "", "localization time; empty = C*N_pth*log(N_grd)*T_sym"),
    "protocol.t_irs_s": (_float, "0", "phase design / IRS update time"),
    "protocol.t_coh_s": (_float, "0.024", "coherence time"),
    "protocol.n_plt": (_int, "3", "pilots per estimate"),
    "protocol.t_sym_s": (_float, repr(1 / 15_000), "symbol time 1/W_sub"),
    "protocol.time_step_s": (_optional(_float), "", "simulation step; empty = T_coh/10"),
    "protocol.delta_inflation_m": (_float, "0", "extra illumination width for localization error"),
    "protocol.snr_mode": (_choice("los", "estimated"), "los", "SNR tracked by the trigger"),
    "protocol.snr_window": (_int, "8", "estimates averaged in estimated mode"),
    "overhead.n_pth": (_int, "5", "paths in the IRS-MU link"),
    "overhead.n_grd": (_int, "20", "angular grid points"),
    "overhead.n_cbk": (_int, "25", "codebook size"),
    "overhead.c_const": (_float, "1", "compressed-sensing constant C"),
    "overhead.log_base": (_choice("2", "e"), "2", "log base of the sparsity formula"),
    "sweep.axis": (_choice("x", "y", "z"), "x", "sweep direction"),
    "sweep.min_m": (_float, "-15", "first displacement"),
    "sweep.max_m": (_float, "15", "last displacement"),
    "sweep.step_m": (_float, "0.05", "displacement step"),
    "sweep.profile": (_choice("focus", "wide"), "wide", "focus forces delta = 0"),
    "map.axis_u": (_choice("x", "y", "z"), "x", "map first axis"),
    "map.axis_v": (_choice("x", "y", "z"), "y", "map second axis"),
    "map.half_u_m": (_float, "15", "map half width along u"),
    "map.half_v_m": (_float, "10", "map half width along v"),
    "map.step_m": (_float, "0.25", "map step"),
    "map.db_min": (_float, "-10", "heatmap black level"),
    "map.db_max": (_float, "30", "heatmap white level"),
    "experiment.gamma_thr_db_list": (_floats, "0,5,10,15", "thresholds for overhead-vs-snr"),
    "experiment.delta_m_list": (_floats, "0,8", "illumination widths for overhead-vs-snr"),
    "experiment.n_seeds": (_int, "200", "Monte Carlo crossings per point"),
    "experiment.d_blk_m_list": (_floats, "0,2,4,6,8,10,12,14,16,18,20", "diameters for min-power"),
    "experiment.delta_policy": (_tokens, "0,4,full", "min-power profiles: fixed delta or 'full'"),
    "grid.spacing_m": (_optional(_float), "", "disc grid spacing; empty = wavelength/4"),
}

# Element counts above this need --enable-28ghz.
LARGE_PANEL_ELEMENTS = 2500


def parse_text(text: str) -> dict:
    raw = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        raw[key] = value
    return raw


@dataclass(frozen=True)
class ScenarioConfig:
    values: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw: dict | None = None) -> "ScenarioConfig":
        raw = dict(raw or {})
        unknown = sorted(set(raw) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values = {}
        for key, (parse, default, _) in SCHEMA.items():
            text = str(raw.get(key, default)).strip()
            try:
                values[key] = parse(text)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        cfg = cls(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "ScenarioConfig":
        raw = parse_text(Path(path).read_text()) if path else {}
        raw.update(overrides or {})
        return cls.from_mapping(raw)

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **kw) -> "ScenarioConfig":
        """Copy with overrides; keys use ``__`` in place of ``.``."""
        raw = {k: _render(v) for k, v in self.values.items()}
        for k, v in kw.items():
            raw[k.replace("__", ".")] = _render(v)
        return ScenarioConfig.from_mapping(raw)

    def echo(self) -> str:
        return "".join(f"{k} = {_render(self.values[k])}\n" for k in SCHEMA)

    def validate(self):
        try:
            self.scenario()
            self.protocol_config()
            if self["blockage.diameter_m"] is not None:
                self.blockage()
            self.illumination()
            self.overhead_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self["map.axis_u"] == self["map.axis_v"]:
            raise ConfigError("map axes must differ")
        if self["sweep.step_m"] <= 0 or self["map.step_m"] <= 0:
            raise ConfigError("steps must be positive")
        if self["experiment.n_seeds"] < 1:
            raise ConfigError("experiment.n_seeds must be at least 1")
        for tok in self["experiment.delta_policy"]:
            if tok != "full":
                try:
                    if float(tok) < 0:
                        raise ValueError
                except ValueError:
                    raise ConfigError(f"bad delta policy {tok!r}") from None

    # builders -------------------------------------------------------------

    def carrier(self) -> CarrierConfig:
        return CarrierConfig(self["carrier.frequency_hz"])

    def panel(self) -> IrsPanel:
        lam = self.carrier().wavelength_m
        dy = self["irs.spacing_y_m"] or lam / 2
        dz = self["irs.spacing_z_m"] or lam / 2
        tau = self["irs.tau"]
        panel = IrsPanel(self["irs.center_m"], self["irs.side_y_m"], self["irs.side_z_m"],
                         dy, dz, 1.0 if tau == "passive" else tau)
        if tau == "passive":
            panel = replace(panel, tau=passive_tau(self["bs.position_m"], panel))
        return panel

    def radio(self) -> RadioConfig:
        return RadioConfig.from_db(
            tx_power_dbm=self["radio.tx_power_dbm"],
            tx_directivity_db=self["radio.tx_directivity_db"],
            rx_directivity_db=self["radio.rx_directivity_db"],
            noise_density_dbm_per_hz=self["radio.noise_density_dbm_per_hz"],
            bandwidth_hz=self["radio.bandwidth_hz"],
            noise_figure_db=self["radio.noise_figure_db"],
            impedance_ohm=self["radio.impedance_ohm"],
        )

    def scenario(self) -> Scenario:
        return Scenario(self.carrier(), self.panel(), self["bs.position_m"], self.radio())

    @property
    def bs(self) -> Point3:
        return self["bs.position_m"]

    @property
    def mu(self) -> Point3:
        return self["mu.position_m"]

    def blockage(self, diameter_m: float | None = None) -> BlockageArea:
        d = self["blockage.diameter_m"] if diameter_m is None else diameter_m
        if d is None:
            raise ConfigError("blockage.diameter_m is required for this command")
        return BlockageArea(self["blockage.center_m"], d)

    def illumination(self, delta_m: float | None = None, center=None) -> IlluminationSpec:
        d = self["illumination.delta_m"] if delta_m is None else delta_m
        return IlluminationSpec(center, d)

    def log_base(self) -> float:
        return math.e if self["overhead.log_base"] == "e" else 2.0

    def overhead_params(self, t_upd_s: float = 10.0) -> OverheadParams:
        return OverheadParams(
            q_elements=self.panel().element_count,
            n_plt=self["protocol.n_plt"],
            n_pth=self["overhead.n_pth"],
            n_grd=self["overhead.n_grd"],
            n_cbk=self["overhead.n_cbk"],
            c_const=self["overhead.c_const"],
            t_sym_s=self["protocol.t_sym_s"],
            t_coh_s=self["protocol.t_coh_s"],
            t_loc_s=self["protocol.t_loc_s"],
            t_upd_s=t_upd_s,
            log_base=self.log_base(),
        )

    def protocol_config(self, gamma_thr_db: float | None = None, seed: int = 0) -> ProtocolConfig:
        thr = self["protocol.gamma_thr_db"] if gamma_thr_db is None else gamma_thr_db
        return ProtocolConfig(
            gamma_thr_linear=db_to_linear(thr),
            t_loc_s=self.overhead_params().t_loc_s,
            t_coh_s=self["protocol.t_coh_s"],
            n_plt=self["protocol.n_plt"],
            t_sym_s=self["protocol.t_sym_s"],
            t_irs_s=self["protocol.t_irs_s"],
            time_step_s=self["protocol.time_step_s"],
            rng_seed=seed,
            delta_inflation_m=self["protocol.delta_inflation_m"],
            snr_mode=self["protocol.snr_mode"],
            snr_window=self["protocol.snr_window"],
        )

    def grid_spacing_m(self) -> float:
        return self["grid.spacing_m"] or self.carrier().wavelength_m / 4

    def is_large_panel(self) -> bool:
        return self.panel().element_count > LARGE_PANEL_ELEMENTS


def _render(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ",".join(_render(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def documented_defaults() -> str:
    """Default config file text with one comment per key."""
    lines = []
    for key, (_, default, doc) in SCHEMA.items():
        lines.append(f"# {doc}")
        lines.append(f"{key} = {default}")
    return "\n".join(lines) + "\n"
