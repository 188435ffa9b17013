"""
SPCAP instance data: definition, validation, synthetic generation and the
line-oriented instance file format.

File format (UTF-8):

    SPCAP v1 <|T|> <|B|> <|L|>
    LEVELS <P_1> ... <P_|L|>
    NOISE <N>
    T <id> <delta> <revenue> <coop_cost>      (one line per terminal)
    B <id>                                    (one line per base station)
    <a_t1> ... <a_t|B|>                       (|T| attenuation lines)

Numbers are written in decimal scientific notation with 17 significant
digits, so save/load round-trips every float exactly.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)

FILE_MAGIC = "SPCAP"
FILE_VERSION = "v1"


class InstanceFormatError(ValueError):
    """Raised when an instance file cannot be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")


class InstanceValidationError(ValueError):
    """Raised when parsed data violates the instance invariants."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid instance: " + "; ".join(self.violations))


@dataclass(frozen=True)
class Instance:
    """Immutable SPCAP problem data.

    Terminals and bases are addressed by position everywhere in the solver;
    the ids are only carried for files and reports. Power levels are indexed
    1..|L| in model variables, level 0 meaning "off".
    """

    bases: Tuple[str, ...]
    terminals: Tuple[str, ...]
    levels: Tuple[float, ...]
    atten: Tuple[Tuple[float, ...], ...]
    delta: Tuple[float, ...]
    noise: float
    revenue: Tuple[float, ...]
    coop_cost: Tuple[float, ...]
    name: str = field(default="instance", compare=False)

    @property
    def num_terminals(self) -> int:
        return len(self.terminals)

    @property
    def num_bases(self) -> int:
        return len(self.bases)

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def p_max(self) -> float:
        return self.levels[-1]

    @cached_property
    def atten_matrix(self) -> np.ndarray:
        return np.array(self.atten, dtype=float).reshape(self.num_terminals, self.num_bases)

    @cached_property
    def delta_vector(self) -> np.ndarray:
        return np.array(self.delta, dtype=float)

    @cached_property
    def level_vector(self) -> np.ndarray:
        """Power per level index, with index 0 = off (0 watts)."""
        return np.concatenate(([0.0], np.array(self.levels, dtype=float)))

    def power(self, level: int) -> float:
        return 0.0 if level == 0 else self.levels[level - 1]

    def powers(self, power_level: Sequence[int]) -> np.ndarray:
        return self.level_vector[np.asarray(power_level, dtype=int)]


@dataclass
class GenConfig:
    """Parameters of the synthetic WiMAX-like instance generator."""

    num_terminals: int = 100
    num_bases: int = 9
    num_levels: int = 4
    area_side: float = 1000.0
    path_loss_exponent: float = 3.5
    p_max: float = 1.0
    shadowing_db: float = 6.0
    delta: float = 2.0
    noise: float = 1e-7
    revenue: float = 1.0
    coop_cost: float = 0.2
    seed: int = 0
    ref_distance_ratio: float = 0.01

    def validate(self) -> List[str]:
        problems = []
        for name in ("num_terminals", "num_bases", "num_levels"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if self.path_loss_exponent <= 0:
            problems.append("path_loss_exponent must be > 0")
        if self.p_max <= 0:
            problems.append("p_max must be > 0")
        if self.area_side <= 0:
            problems.append("area_side must be > 0")
        if self.shadowing_db < 0:
            problems.append("shadowing_db must be >= 0")
        for name in ("delta", "noise", "revenue", "coop_cost"):
            if not _finite_positive(getattr(self, name)):
                problems.append(f"{name} must be finite and > 0")
        return problems


def _finite_positive(value: float) -> bool:
    return math.isfinite(value) and value > 0


def validate_instance(inst: Instance) -> List[str]:
    """Check every Instance invariant.

    Args:
        inst: Instance to check

    Returns:
        List[str]: One message per violated invariant, empty when valid
    """
    violations = []
    n_t, n_b = len(inst.terminals), len(inst.bases)

    if not inst.levels:
        violations.append("levels: at least one power level is required")
    elif (not all(math.isfinite(p) for p in inst.levels) or not inst.levels[0] > 0
          or any(not b > a for a, b in zip(inst.levels, inst.levels[1:]))):
        violations.append("levels: power levels must be finite with 0 < P_1 < ... < P_|L|")

    if len(inst.atten) != n_t or any(len(row) != n_b for row in inst.atten):
        violations.append(f"dimensions: attenuation matrix must be {n_t} x {n_b}")
    else:
        bad = [(t, b) for t, row in enumerate(inst.atten) for b, a in enumerate(row)
               if not 0.0 <= a <= 1.0]
        if bad:
            t, b = bad[0]
            violations.append(
                f"atten: {len(bad)} coefficient(s) outside [0,1], first a[{inst.terminals[t]}][{inst.bases[b]}]={inst.atten[t][b]}"
            )

    for name, values in (("delta", inst.delta), ("revenue", inst.revenue), ("coop_cost", inst.coop_cost)):
        if len(values) != n_t:
            violations.append(f"dimensions: {name} must have {n_t} entries")
            continue
        bad = [i for i, v in enumerate(values) if not _finite_positive(v)]
        if bad:
            violations.append(f"{name}: must be finite and > 0 (terminal {inst.terminals[bad[0]]}, {len(bad)} total)")

    if not _finite_positive(inst.noise):
        violations.append("noise: must be finite and > 0")

    if len(set(inst.terminals)) != n_t:
        violations.append("terminals: ids must be unique")
    if len(set(inst.bases)) != n_b:
        violations.append("bases: ids must be unique")
    return violations


def generate_instance(config: GenConfig) -> Instance:
    """Generate a synthetic instance with power-law path loss and shadowing.

    Bases and terminals are placed uniformly in a square. The attenuation is
    1 within the reference distance, and min(1, (d_ref/d)^gamma * shadow)
    beyond it, with a log-uniform shadowing factor of +/- shadowing_db.
    """
    problems = config.validate()
    if problems:
        raise ValueError("invalid GenConfig: " + "; ".join(problems))

    rng = np.random.default_rng(config.seed)
    side = config.area_side
    base_xy = rng.uniform(0.0, side, size=(config.num_bases, 2))
    term_xy = rng.uniform(0.0, side, size=(config.num_terminals, 2))
    shadow_db = rng.uniform(-config.shadowing_db, config.shadowing_db,
                            size=(config.num_terminals, config.num_bases))

    d_ref = config.ref_distance_ratio * side
    dist = np.linalg.norm(term_xy[:, None, :] - base_xy[None, :, :], axis=2)
    atten = attenuation_from_distance(dist, d_ref, config.path_loss_exponent, 10.0 ** (shadow_db / 10.0))

    levels = tuple(config.p_max / 2 ** (config.num_levels - 1 - k) for k in range(config.num_levels))
    inst = Instance(
        bases=tuple(f"b{b + 1}" for b in range(config.num_bases)),
        terminals=tuple(f"t{t + 1}" for t in range(config.num_terminals)),
        levels=levels,
        atten=tuple(tuple(float(a) for a in row) for row in atten),
        delta=(float(config.delta),) * config.num_terminals,
        noise=float(config.noise),
        revenue=(float(config.revenue),) * config.num_terminals,
        coop_cost=(float(config.coop_cost),) * config.num_terminals,
        name=f"syn_T{config.num_terminals}_B{config.num_bases}_L{config.num_levels}_s{config.seed}",
    )
    logger.info(f"Generated instance {inst.name}")
    return inst


def attenuation_from_distance(dist: np.ndarray, d_ref: float, gamma: float, shadow: np.ndarray) -> np.ndarray:
    """Path-loss model: 1 inside d_ref, capped power law with shadowing outside."""
    with np.errstate(divide="ignore"):
        ratio = np.where(dist > d_ref, d_ref / np.maximum(dist, d_ref), 1.0)
    faded = np.minimum(1.0, np.power(ratio, gamma) * shadow)
    return np.where(dist <= d_ref, 1.0, faded)


def _fmt(value: float) -> str:
    return format(float(value), ".16e")


def save_instance(inst: Instance) -> str:
    """Serialize an instance to the text format."""
    lines = [
        f"{FILE_MAGIC} {FILE_VERSION} {inst.num_terminals} {inst.num_bases} {inst.num_levels}",
        "LEVELS " + " ".join(_fmt(p) for p in inst.levels),
        f"NOISE {_fmt(inst.noise)}",
    ]
    for t, tid in enumerate(inst.terminals):
        lines.append(f"T {tid} {_fmt(inst.delta[t])} {_fmt(inst.revenue[t])} {_fmt(inst.coop_cost[t])}")
    for bid in inst.bases:
        lines.append(f"B {bid}")
    for row in inst.atten:
        lines.append(" ".join(_fmt(a) for a in row))
    return "\n".join(lines) + "\n"


def _parse_float(token: str, line_no: int, field_name: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise InstanceFormatError(f"not a number: '{token}'", line=line_no, field=field_name) from None
    if not math.isfinite(value):
        raise InstanceFormatError(f"not a finite number: '{token}'", line=line_no, field=field_name)
    return value


def load_instance(text: str, name: str = "instance", validate: bool = True) -> Instance:
    """Parse the instance text format.

    Args:
        text: File contents
        name: Name attached to the instance (used in reports)
        validate: Whether to run validate_instance on the result

    Returns:
        Instance: Parsed instance

    Raises:
        InstanceFormatError: On malformed input (with line/field location)
        InstanceValidationError: When the data violates an invariant
    """
    lines = [(i + 1, raw.strip()) for i, raw in enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InstanceFormatError("empty file", line=1)

    cursor = iter(lines)

    def next_line(expected: str) -> Tuple[int, List[str]]:
        try:
            no, ln = next(cursor)
        except StopIteration:
            raise InstanceFormatError(f"unexpected end of file, expected {expected}") from None
        return no, ln.split()

    no, head = next_line("header")
    if len(head) != 5 or head[0] != FILE_MAGIC or head[1] != FILE_VERSION:
        raise InstanceFormatError(f"header must read '{FILE_MAGIC} {FILE_VERSION} |T| |B| |L|'", line=no, field="header")
    try:
        n_t, n_b, n_l = (int(x) for x in head[2:])
    except ValueError:
        raise InstanceFormatError("sizes must be integers", line=no, field="header") from None
    if n_t < 1 or n_b < 1 or n_l < 1:
        raise InstanceFormatError("sizes must be >= 1", line=no, field="header")

    no, parts = next_line("LEVELS")
    if not parts or parts[0] != "LEVELS" or len(parts) != n_l + 1:
        raise InstanceFormatError(f"expected LEVELS with {n_l} values", line=no, field="LEVELS")
    levels = tuple(_parse_float(p, no, "LEVELS") for p in parts[1:])

    no, parts = next_line("NOISE")
    if len(parts) != 2 or parts[0] != "NOISE":
        raise InstanceFormatError("expected 'NOISE N'", line=no, field="NOISE")
    noise = _parse_float(parts[1], no, "NOISE")

    terminals, delta, revenue, coop = [], [], [], []
    for _ in range(n_t):
        no, parts = next_line("terminal line")
        if len(parts) != 5 or parts[0] != "T":
            raise InstanceFormatError("expected 'T id delta r c'", line=no, field="T")
        terminals.append(parts[1])
        delta.append(_parse_float(parts[2], no, "delta"))
        revenue.append(_parse_float(parts[3], no, "revenue"))
        coop.append(_parse_float(parts[4], no, "coop_cost"))

    bases = []
    for _ in range(n_b):
        no, parts = next_line("base line")
        if len(parts) != 2 or parts[0] != "B":
            raise InstanceFormatError("expected 'B id'", line=no, field="B")
        bases.append(parts[1])

    atten = []
    for t in range(n_t):
        no, parts = next_line("attenuation row")
        if len(parts) != n_b:
            raise InstanceFormatError(f"attenuation row must have {n_b} entries", line=no, field=f"atten[{terminals[t]}]")
        atten.append(tuple(_parse_float(p, no, f"atten[{terminals[t]}]") for p in parts))

    extra = next(cursor, None)
    if extra is not None:
        raise InstanceFormatError("trailing content after attenuation block", line=extra[0])

    inst = Instance(
        bases=tuple(bases),
        terminals=tuple(terminals),
        levels=levels,
        atten=tuple(atten),
        delta=tuple(delta),
        noise=noise,
        revenue=tuple(revenue),
        coop_cost=tuple(coop),
        name=name,
    )
    if validate:
        violations = validate_instance(inst)
        if violations:
            raise InstanceValidationError(violations)
    return inst


def read_instance_file(path: str) -> Instance:
    """Load an instance from disk, naming it after the file."""
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    name = os.path.splitext(os.path.basename(path))[0]
    return load_instance(text, name=name)


def write_instance_file(inst: Instance, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(save_instance(inst))
    logger.info(f"Instance saved to: {path}")
