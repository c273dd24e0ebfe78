"""Random small-cell cluster drops, large-scale path gains and power calibration.

A cluster holds ``M`` access nodes (ANs) dropped uniformly over a disk and
``K`` single-antenna UEs dropped over a co-centred (usually larger) disk.
Path gains are normalized by the thermal noise power so that ``p * g`` is an
interference-free SNR.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

UMI_NLOS = "UMI_NLOS"
PATHLOSS_MODELS = {UMI_NLOS: (36.7, 22.7, 26.0)}

# stream tags for seed derivation
STREAM_TOPOLOGY = 1
STREAM_SHADOWING = 2
STREAM_CALIBRATION = 3
STREAM_VALIDATION = 4

MAX_REDRAWS = 10_000

_MASK64 = (1 << 64) - 1


class ScenarioError(ValueError):
    """Invalid scenario configuration or unsatisfiable drop geometry."""


def splitmix64(x: int) -> int:
    """One splitmix64 output step applied to ``x``."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed: int, snapshot_index: int, stream_tag: int) -> int:
    """Mix ``(base_seed, snapshot_index, stream_tag)`` into a 64-bit seed.

    Each component is folded in with a splitmix64 round, so nearby indices
    give unrelated streams and snapshots can be generated in any order.
    """
    h = splitmix64(base_seed & _MASK64)
    h = splitmix64(h ^ (snapshot_index & _MASK64))
    return splitmix64(h ^ (stream_tag & _MASK64))


def snapshot_rng(base_seed: int, snapshot_index: int, stream_tag: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base_seed, snapshot_index, stream_tag))


@dataclass(frozen=True)
class ScenarioConfig:
    """All knobs of one cluster scenario.

    Defaults follow the outdoor small-cell cluster of the 3GPP dense
    small-cell study: ANs within 50 m, UEs within 70 m, 3.5 GHz carrier,
    -174 dBm/Hz noise density.
    """

    num_ans: int
    num_ues: int
    antennas_per_an: int
    target_snr_db: float = 30.0
    an_drop_radius_m: float = 50.0
    ue_drop_radius_m: float = 70.0
    min_pair_distance_m: float = 3.0
    carrier_ghz: float = 3.5
    noise_density_dbm_hz: float = -174.0
    bandwidth_mhz: float = 10.0
    pathloss_model: str = UMI_NLOS
    pathloss_a: float = 36.7
    pathloss_b: float = 22.7
    pathloss_c: float = 26.0
    shadowing_sigma_db: float = 0.0
    calibration_draws: int = 100_000
    base_seed: int = 0

    def __post_init__(self):
        if self.num_ans < 1 or self.num_ues < 1 or self.antennas_per_an < 1:
            raise ScenarioError("num_ans, num_ues and antennas_per_an must be >= 1")
        if self.an_drop_radius_m < 0 or self.ue_drop_radius_m <= 0:
            raise ScenarioError("drop radii must be positive")
        if self.min_pair_distance_m <= 0:
            raise ScenarioError("min_pair_distance_m must be positive")
        if self.carrier_ghz <= 0 or self.bandwidth_mhz <= 0:
            raise ScenarioError("carrier_ghz and bandwidth_mhz must be positive")
        if self.pathloss_model not in PATHLOSS_MODELS:
            raise ScenarioError(f"unknown pathloss model {self.pathloss_model!r}")
        if self.shadowing_sigma_db < 0:
            raise ScenarioError("shadowing_sigma_db must be >= 0")
        if self.calibration_draws < 1:
            raise ScenarioError("calibration_draws must be >= 1")
        if not 0 <= self.base_seed <= _MASK64:
            raise ScenarioError("base_seed must be an unsigned 64-bit integer")

    @property
    def pathloss_coefficients(self) -> tuple[float, float, float]:
        return (self.pathloss_a, self.pathloss_b, self.pathloss_c)

    @property
    def massive_mimo_regime(self) -> bool:
        """False when more UEs than antennas could land on one AN."""
        return self.num_ues <= self.antennas_per_an

    @property
    def noise_power_w(self) -> float:
        return 10 ** ((self.noise_density_dbm_hz - 30.0) / 10.0) * self.bandwidth_mhz * 1e6

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ClusterTopology:
    an_positions: np.ndarray  # (M, 2) metres
    ue_positions: np.ndarray  # (K, 2) metres
    snapshot_index: int = 0

    @property
    def num_ans(self) -> int:
        return len(self.an_positions)

    @property
    def num_ues(self) -> int:
        return len(self.ue_positions)

    def distances(self) -> np.ndarray:
        """UE x AN distance matrix in metres."""
        diff = self.ue_positions[:, None, :] - self.an_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class PathGainMatrix:
    """Noise-normalized large-scale gains; row ``k`` is UE ``k``, column ``m`` is AN ``m``."""

    gains: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 2 or g.size == 0:
            raise ScenarioError("gain matrix must be a non-empty K x M array")
        if not np.all(np.isfinite(g)) or np.any(g <= 0):
            raise ScenarioError("gains must be finite and strictly positive")
        object.__setattr__(self, "gains", g)

    @property
    def num_ues(self) -> int:
        return self.gains.shape[0]

    @property
    def num_ans(self) -> int:
        return self.gains.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.gains if dtype is None else self.gains.astype(dtype)


@dataclass(frozen=True)
class PowerConfig:
    total_power_linear: float
    per_an_power_linear: float
    mean_gain: float = field(default=float("nan"))

    @classmethod
    def from_total(cls, total: float, num_ans: int, mean_gain: float = float("nan")) -> "PowerConfig":
        if total <= 0:
            raise ScenarioError("total power must be positive")
        return cls(total, total / num_ans, mean_gain)


def _disk_points(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def generate_topology(config: ScenarioConfig, snapshot_index: int) -> ClusterTopology:
    """Drop ANs and UEs for one snapshot.

    UEs closer than ``min_pair_distance_m`` to any AN are redrawn; after
    ``MAX_REDRAWS`` failed attempts for a single UE a ScenarioError is raised.
    """
    rng = snapshot_rng(config.base_seed, snapshot_index, STREAM_TOPOLOGY)
    ans = _disk_points(rng, config.num_ans, config.an_drop_radius_m)
    ues = np.empty((config.num_ues, 2))
    dmin = config.min_pair_distance_m
    for k in range(config.num_ues):
        for _ in range(MAX_REDRAWS):
            pt = _disk_points(rng, 1, config.ue_drop_radius_m)[0]
            if np.min(np.hypot(*(ans - pt).T)) >= dmin:
                ues[k] = pt
                break
        else:
            raise ScenarioError(
                f"could not place UE {k} at >= {dmin} m from every AN after {MAX_REDRAWS} draws"
            )
    return ClusterTopology(ans, ues, snapshot_index)


def path_gain_db(distance_m, config: ScenarioConfig, rng: np.random.Generator | None = None):
    """Pathloss in dB, ``a log10(d) + b + c log10(f_GHz)``.

    Works elementwise on arrays. Log-normal shadowing with
    ``shadowing_sigma_db`` is added only when ``rng`` is given.
    """
    d = np.asarray(distance_m, dtype=float)
    if np.any(d < config.min_pair_distance_m):
        raise ScenarioError(
            f"distance below the minimum pair distance of {config.min_pair_distance_m} m"
        )
    a, b, c = config.pathloss_coefficients
    pl = a * np.log10(d) + b + c * math.log10(config.carrier_ghz)
    if rng is not None and config.shadowing_sigma_db > 0:
        pl = pl + rng.normal(0.0, config.shadowing_sigma_db, size=d.shape)
    return float(pl) if pl.ndim == 0 else pl


def gains_from_pathloss(pathloss_db, config: ScenarioConfig):
    return 10 ** (-np.asarray(pathloss_db) / 10.0) / config.noise_power_w


def compute_gain_matrix(topology: ClusterTopology, config: ScenarioConfig) -> PathGainMatrix:
    if topology.num_ans != config.num_ans or topology.num_ues != config.num_ues:
        raise ScenarioError("topology dimensions do not match the configuration")
    rng = None
    if config.shadowing_sigma_db > 0:
        rng = snapshot_rng(config.base_seed, topology.snapshot_index, STREAM_SHADOWING)
    pl = path_gain_db(topology.distances(), config, rng)
    return PathGainMatrix(gains_from_pathloss(pl, config))


def sample_pair_gains(config: ScenarioConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gains of ``n`` independent (AN, UE) drops, redrawing pairs that are too close."""
    out = np.empty(0)
    for _ in range(MAX_REDRAWS):
        need = n - len(out)
        an = _disk_points(rng, need, config.an_drop_radius_m)
        ue = _disk_points(rng, need, config.ue_drop_radius_m)
        d = np.hypot(*(ue - an).T)
        d = d[d >= config.min_pair_distance_m]
        out = np.concatenate((out, gains_from_pathloss(path_gain_db(d, config), config)))
        if len(out) >= n:
            return out[:n]
    raise ScenarioError("pair sampling failed to satisfy the minimum pair distance")


def calibrate_power(config: ScenarioConfig) -> PowerConfig:
    """Total cluster power that puts the spatially averaged SNR at the target.

    The average is the mean interference-free gain over random AN/UE pair
    drops; the budget does not depend on ``num_ans`` and is split equally.
    """
    rng = snapshot_rng(config.base_seed, 0, STREAM_CALIBRATION)
    mean_gain = float(np.mean(sample_pair_gains(config, config.calibration_draws, rng)))
    total = 10 ** (config.target_snr_db / 10.0) / mean_gain
    logger.debug("calibrated mean gain %.6g, total power %.6g", mean_gain, total)
    return PowerConfig.from_total(total, config.num_ans, mean_gain)


def validate_calibration(config: ScenarioConfig, power: PowerConfig, draws: int | None = None) -> float:
    """Average SNR in dB reached by ``power`` on a fresh, independent set of pair drops."""
    rng = snapshot_rng(config.base_seed, 0, STREAM_VALIDATION)
    gains = sample_pair_gains(config, draws or config.calibration_draws, rng)
    return 10 * math.log10(power.total_power_linear * float(np.mean(gains)))


# ---------------------------------------------------------------------------
# text formats

def _coerce(text: str, typ):
    text = text.strip()
    if typ in (int, "int"):
        return int(text, 0)
    if typ in (float, "float"):
        return float(text)
    return text


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_from_mapping(values: dict[str, str], **overrides) -> ScenarioConfig:
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    for key, value in values.items():
        if key not in fields:
            raise ScenarioError(f"unknown scenario key {key!r}")
        kwargs[key] = _coerce(value, fields[key].type)
    kwargs.update(overrides)
    missing = [k for k in ("num_ans", "num_ues", "antennas_per_an") if k not in kwargs]
    if missing:
        raise ScenarioError(f"missing scenario keys: {', '.join(missing)}")
    model = kwargs.get("pathloss_model", UMI_NLOS)
    if model in PATHLOSS_MODELS:
        for name, default in zip(("pathloss_a", "pathloss_b", "pathloss_c"), PATHLOSS_MODELS[model]):
            kwargs.setdefault(name, default)
    return ScenarioConfig(**kwargs)


def load_config(path, **overrides) -> ScenarioConfig:
    """Read a flat key-value scenario file; keys are the ScenarioConfig field names."""
    return config_from_mapping(parse_key_values(Path(path).read_text()), **overrides)


def dump_config(config: ScenarioConfig) -> str:
    return "".join(f"{f.name} = {getattr(config, f.name)}\n" for f in dataclasses.fields(config))


def write_topology_csv(topology: ClusterTopology, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "index", "x_m", "y_m"])
        for kind, pts in (("AN", topology.an_positions), ("UE", topology.ue_positions)):
            for i, (x, y) in enumerate(pts):
                w.writerow([kind, i, repr(float(x)), repr(float(y))])  # lossless


def read_topology_csv(path, snapshot_index: int = 0) -> ClusterTopology:
    pts = {"AN": {}, "UE": {}}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pts[row["kind"]][int(row["index"])] = (float(row["x_m"]), float(row["y_m"]))
    arr = {k: np.array([v[i] for i in range(len(v))], dtype=float).reshape(-1, 2) for k, v in pts.items()}
    return ClusterTopology(arr["AN"], arr["UE"], snapshot_index)
