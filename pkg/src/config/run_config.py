"""
src/config/run_config.py
Simulation run configuration: JSON documents to ClientConfig / ServerConfig / DatasetSpec
"""

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.simulation.data import DatasetSpec
from src.simulation.dp_sgd import ClipSchedule, SamplingMode
from src.simulation.server import ServerConfig, StepSchedule
from src.simulation.simulator import ClientConfig
from src.utils.errors import ConfigError
from src.utils.files import PathLike, atomic_write_json

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AccountingConfig:
    delta: float = 1e-5
    group: int = 1
    budget_eps: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta", f"must lie in (0, 1), got {self.delta}")
        if self.group < 1:
            raise ConfigError("group", f"must be >= 1, got {self.group}")
        if self.budget_eps is not None and not self.budget_eps > 0:
            raise ConfigError("budget_eps", f"must be positive, got {self.budget_eps}")


@dataclass(frozen=True)
class RunConfig:
    clients: Tuple[ClientConfig, ...]
    server: ServerConfig
    data: Tuple[DatasetSpec, ...]
    accounting: AccountingConfig = AccountingConfig()
    seed: int = 0
    max_ticks: Optional[int] = None
    profile: Optional[str] = None


def _scoped(path: str, build, *args, **kwargs):
    """Call a dataclass constructor, prefixing any ConfigError with path"""
    try:
        return build(*args, **kwargs)
    except ConfigError as e:
        raise ConfigError(f"{path}.{e.field}", str(e).split(": ", 1)[-1]) from None
    except TypeError as e:
        raise ConfigError(path, str(e)) from None


def _mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _check_keys(raw: dict, allowed, path: str):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(path, f"unknown keys {unknown}")


def _number(value, path: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if float(value) != int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _parse_clip(raw, path: str) -> ClipSchedule:
    if raw is None:
        return ClipSchedule.disabled()
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return _scoped(path, ClipSchedule, "constant", (_number(raw, path),))
    raw = _mapping(raw, path)
    _check_keys(raw, ("kind", "values"), path)
    values = raw.get("values", [])
    if not isinstance(values, list):
        raise ConfigError(f"{path}.values", "expected a list")
    values = tuple(_number(v, f"{path}.values[{i}]") for i, v in enumerate(values))
    return _scoped(path, ClipSchedule, raw.get("kind", "constant"), values)


def _parse_data(raw, path: str) -> DatasetSpec:
    raw = _mapping(raw, path)
    names = {f.name for f in fields(DatasetSpec)}
    _check_keys(raw, names, path)
    kwargs = {}
    for key, value in raw.items():
        integer = key in ("d", "N", "test_size", "seed")
        kwargs[key] = _number(value, f"{path}.{key}", integer=integer)
    return _scoped(path, DatasetSpec, **kwargs)


CLIENT_KEYS = ("N", "m", "E", "clip", "sigma", "sampling_mode", "staleness_bound", "isr_mode", "shaping")


def _parse_client(raw, path: str, data: DatasetSpec) -> ClientConfig:
    raw = _mapping(raw, path)
    _check_keys(raw, CLIENT_KEYS, path)
    for key in ("m", "E"):
        if key not in raw:
            raise ConfigError(f"{path}.{key}", "is required")

    N = _number(raw.get("N", data.N), f"{path}.N", integer=True)
    if N != data.N:
        raise ConfigError(f"{path}.N", f"{N} does not match the dataset size {data.N}")

    mode = raw.get("sampling_mode", "fixed")
    try:
        mode = SamplingMode(mode)
    except ValueError:
        raise ConfigError(f"{path}.sampling_mode", f"expected 'fixed' or 'poisson', got {mode!r}") from None

    staleness = raw.get("staleness_bound")
    shaping = raw.get("shaping")
    return _scoped(
        path, ClientConfig,
        N=N,
        m=_number(raw["m"], f"{path}.m", integer=True),
        E=_number(raw["E"], f"{path}.E"),
        clip=_parse_clip(raw.get("clip"), f"{path}.clip"),
        sigma=_number(raw.get("sigma", 0.0), f"{path}.sigma"),
        sampling_mode=mode,
        staleness_bound=None if staleness is None else _number(staleness, f"{path}.staleness_bound", integer=True),
        isr_mode=raw.get("isr_mode", "immediate"),
        shaping=None if shaping is None else _number(shaping, f"{path}.shaping"),
    )


def _parse_server(raw, path: str) -> ServerConfig:
    raw = _mapping(raw, path)
    _check_keys(raw, {f.name for f in fields(ServerConfig)}, path)

    step_raw = _mapping(raw.get("step_schedule", {}), f"{path}.step_schedule")
    step_path = f"{path}.step_schedule"
    _check_keys(step_raw, {f.name for f in fields(StepSchedule)}, step_path)
    step_kwargs = {k: (v if k == "rule" else _number(v, f"{step_path}.{k}", integer=(k == "patience")))
                   for k, v in step_raw.items()}
    step = _scoped(step_path, StepSchedule, **step_kwargs)

    kwargs = {"step_schedule": step}
    for key in ("window_length", "broadcast_period", "eval_period"):
        if raw.get(key) is not None:
            kwargs[key] = _number(raw[key], f"{path}.{key}", integer=True)
    if "drop_prob" in raw:
        kwargs["drop_prob"] = _number(raw["drop_prob"], f"{path}.drop_prob")
    if raw.get("client_weights") is not None:
        weights = raw["client_weights"]
        if not isinstance(weights, list):
            raise ConfigError(f"{path}.client_weights", "expected a list")
        kwargs["client_weights"] = tuple(
            _number(w, f"{path}.client_weights[{i}]") for i, w in enumerate(weights)
        )
    return _scoped(path, ServerConfig, **kwargs)


def parse_run_config(raw: dict) -> RunConfig:
    """
    Validate a run configuration document

    Args:
        raw: Parsed JSON object with keys seed, max_ticks, data, clients,
            server and accounting. A single data entry is shared by every
            client, each client drawing its own sample (seed + client index).

    Raises:
        ConfigError: naming the first offending field, e.g. clients[0].m
    """
    raw = _mapping(raw, "config")
    _check_keys(raw, ("profile", "description", "seed", "max_ticks", "data", "clients", "server", "accounting"),
                "config")

    clients_raw = raw.get("clients")
    if not isinstance(clients_raw, list) or not clients_raw:
        raise ConfigError("clients", "expected a non-empty list")

    data_raw = raw.get("data", [{}])
    if not isinstance(data_raw, list) or not data_raw:
        raise ConfigError("data", "expected a non-empty list")
    if len(data_raw) == 1:
        base = _parse_data(data_raw[0], "data[0]")
        data = tuple(DatasetSpec(**{**asdict(base), "seed": base.seed + i}) for i in range(len(clients_raw)))
    elif len(data_raw) == len(clients_raw):
        data = tuple(_parse_data(d, f"data[{i}]") for i, d in enumerate(data_raw))
    else:
        raise ConfigError("data", f"expected 1 or {len(clients_raw)} entries, got {len(data_raw)}")

    clients = tuple(_parse_client(c, f"clients[{i}]", data[i]) for i, c in enumerate(clients_raw))
    server = _parse_server(raw.get("server", {}), "server")
    if server.client_weights is not None and len(server.client_weights) != len(clients):
        raise ConfigError("server.client_weights", f"expected {len(clients)} weights")

    acc_raw = _mapping(raw.get("accounting", {}), "accounting")
    _check_keys(acc_raw, ("delta", "group", "budget_eps"), "accounting")
    accounting = _scoped(
        "accounting", AccountingConfig,
        delta=_number(acc_raw.get("delta", 1e-5), "accounting.delta"),
        group=_number(acc_raw.get("group", 1), "accounting.group", integer=True),
        budget_eps=None if acc_raw.get("budget_eps") is None
        else _number(acc_raw["budget_eps"], "accounting.budget_eps"),
    )

    max_ticks = raw.get("max_ticks")
    return RunConfig(
        clients=clients,
        server=server,
        data=data,
        accounting=accounting,
        seed=_number(raw.get("seed", 0), "seed", integer=True),
        max_ticks=None if max_ticks is None else _number(max_ticks, "max_ticks", integer=True),
        profile=raw.get("profile"),
    )


def load_run_config(path: PathLike, profile: Optional[str] = None) -> RunConfig:
    """
    Read a run configuration file

    The file holds either one configuration object or a list of them, each
    tagged with a "profile" name; a list needs `profile` unless it has a
    single entry.

    Raises:
        ConfigError: if the file is missing, is not JSON or fails validation
    """
    try:
        with open(Path(path), 'r') as f:
            raw = json.load(f)
    except OSError as e:
        raise ConfigError("config", f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"{path} is not valid JSON: {e}") from None

    if isinstance(raw, list):
        if profile is None and len(raw) == 1:
            raw = raw[0]
        else:
            matches = [c for c in raw if isinstance(c, dict) and c.get("profile") == profile]
            if not matches:
                names = [c.get("profile") for c in raw if isinstance(c, dict)]
                raise ConfigError("profile", f"'{profile}' not found, available: {names}")
            raw = matches[0]
    elif profile is not None and isinstance(raw, dict) and raw.get("profile") not in (None, profile):
        raise ConfigError("profile", f"'{profile}' not found in {path}")

    config = parse_run_config(raw)
    logger.info(f"Loaded run configuration from {path}"
                + (f" (profile '{config.profile}')" if config.profile else ""))
    return config


def _clip_to_dict(clip: ClipSchedule):
    if not clip.enabled:
        return None
    return {"kind": clip.kind, "values": list(clip.values)}


def run_config_to_dict(config: RunConfig) -> dict:
    """Inverse of parse_run_config; floats keep all 17 significant digits"""
    out: Dict[str, Any] = {}
    if config.profile is not None:
        out["profile"] = config.profile
    out["seed"] = config.seed
    out["max_ticks"] = config.max_ticks
    out["data"] = [asdict(spec) for spec in config.data]
    clients: List[dict] = []
    for c in config.clients:
        clients.append({
            "N": c.N,
            "m": c.m,
            "E": c.E,
            "clip": _clip_to_dict(c.clip),
            "sigma": c.sigma,
            "sampling_mode": c.sampling_mode.value,
            "staleness_bound": c.staleness_bound,
            "isr_mode": c.isr_mode,
            "shaping": c.shaping,
        })
    out["clients"] = clients
    server = asdict(config.server)
    if server["client_weights"] is not None:
        server["client_weights"] = list(server["client_weights"])
    out["server"] = server
    out["accounting"] = asdict(config.accounting)
    return out


def dump_run_config(config: RunConfig, path: PathLike) -> Path:
    return atomic_write_json(path, run_config_to_dict(config))
