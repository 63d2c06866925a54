"""Static configuration: node geometry, path-loss law, unit conversions, budgets.

All linear powers are in milliwatts; dBm inputs are converted once at scenario
load.  A Scenario is immutable after construction and safe to share across
concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace


def dbm_to_linear(x_dbm):
    """Convert dBm to linear power in mW."""
    return 10.0 ** (x_dbm / 10.0)


def path_loss(d, chi, l0_db, d0=1.0):
    """Distance power-law path loss on linear scale: 10^(L0/10) * (d/d0)^chi."""
    if d <= 0.0:
        raise ValueError(f"path_loss needs a positive distance, got d={d}")
    if d0 <= 0.0:
        raise ValueError(f"path_loss needs a positive reference distance, got d0={d0}")
    return 10.0 ** (l0_db / 10.0) * (d / d0) ** chi


@dataclass(frozen=True)
class PathLossSet:
    """Linear path losses for every link, plus the two derived warden quantities.

    phi is the loss ratio L_ar*L_rw/L_aw governing how strongly the reflected
    cover signal competes with the direct Alice-Willie link; lambda_n is the
    effective variance of the cascaded reflection channel seen by Willie.
    """

    l_ab: float
    l_aw: float
    l_ar: float
    l_rb: float
    l_rg: float
    l_rw: float
    phi: float
    lambda_n: float


@dataclass(frozen=True)
class Scenario:
    """Full static configuration of one experiment.

    Positions are 2-D coordinates in meters.  Element counts k_n (reflection,
    serving Bob) and k_m (transmission, serving Grace) partition the k-element
    surface.  epsilon is the covertness budget: solutions must keep the
    warden's minimum average detection-error probability at or above
    1 - epsilon.
    """

    pos_alice: tuple = (0.0, 0.0)
    pos_bob: tuple = (90.0, 0.0)
    pos_grace: tuple = (90.0, 10.0)
    pos_willie: tuple = (80.0, -5.0)
    pos_ris: tuple = (80.0, 5.0)
    chi_ab: float = 3.0
    chi_aw: float = 3.0
    chi_ar: float = 2.0
    chi_rb: float = 2.0
    chi_rg: float = 2.0
    chi_rw: float = 2.0
    l0_db: float = 30.0
    d0: float = 1.0
    lambda_ab: float = 1.0
    lambda_aw: float = 1.0
    lambda_ar: float = 1.0
    lambda_rb: float = 1.0
    lambda_rg: float = 1.0
    lambda_rw: float = 1.0
    sigma2_b_dbm: float = -90.0
    sigma2_g_dbm: float = -90.0
    sigma2_w_dbm: float = -90.0
    pt_dbm: float = 25.0
    k_n: int = 32
    k_m: int = 32
    epsilon: float = 0.05
    rg_min: float = 1.0
    omega: float = 0.01
    zeta1: float = 1e-4
    zeta2: float = 1e-4
    zeta3: float = 1e-4
    rho0: float = 10.0
    c1: float = 0.5
    seed: int = 1234

    def __post_init__(self):
        if self.k_n < 0 or self.k_m < 1:
            raise ValueError(f"need k_n >= 0 and k_m >= 1, got k_n={self.k_n}, k_m={self.k_m}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1}")
        if min(self.zeta1, self.zeta2, self.zeta3) <= 0.0:
            raise ValueError("stopping thresholds zeta1..zeta3 must be positive")
        if self.rg_min < 0.0:
            raise ValueError(f"rg_min must be nonnegative, got {self.rg_min}")
        for name in ("chi_ab", "chi_aw", "chi_ar", "chi_rb", "chi_rg", "chi_rw"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"path-loss exponent {name} must be nonnegative")
        for name in ("lambda_ab", "lambda_aw", "lambda_ar", "lambda_rb", "lambda_rg", "lambda_rw"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"fading variance {name} must be positive")

    @property
    def k(self):
        return self.k_n + self.k_m

    @property
    def pt(self):
        """Max transmit power in mW."""
        return dbm_to_linear(self.pt_dbm)

    @property
    def sigma2_b(self):
        return dbm_to_linear(self.sigma2_b_dbm)

    @property
    def sigma2_g(self):
        return dbm_to_linear(self.sigma2_g_dbm)

    @property
    def sigma2_w(self):
        return dbm_to_linear(self.sigma2_w_dbm)


def _distance(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def derive_path_losses(scenario: Scenario) -> PathLossSet:
    """Compute every link's linear path loss from the scenario geometry.

    Deterministic: identical scenarios produce identical sets.  Raises on
    coincident node positions (zero distance has no defined loss).
    """
    sc = scenario
    pairs = {
        "l_ab": (sc.pos_alice, sc.pos_bob, sc.chi_ab),
        "l_aw": (sc.pos_alice, sc.pos_willie, sc.chi_aw),
        "l_ar": (sc.pos_alice, sc.pos_ris, sc.chi_ar),
        "l_rb": (sc.pos_ris, sc.pos_bob, sc.chi_rb),
        "l_rg": (sc.pos_ris, sc.pos_grace, sc.chi_rg),
        "l_rw": (sc.pos_ris, sc.pos_willie, sc.chi_rw),
    }
    losses = {}
    for name, (p, q, chi) in pairs.items():
        d = _distance(p, q)
        if d <= 0.0:
            raise ValueError(f"coincident node positions for link {name[2:]}")
        losses[name] = path_loss(d, chi, sc.l0_db, sc.d0)
    phi = losses["l_ar"] * losses["l_rw"] / losses["l_aw"]
    lambda_n = sc.lambda_ar * sc.lambda_rw * sc.k_n
    return PathLossSet(phi=phi, lambda_n=lambda_n, **losses)


# --- scenario config files -------------------------------------------------
#
# Flat key=value text, one entry per line, '#' starts a comment.  Keys are the
# Scenario field names (units are spelled in the names, e.g. pt_dbm); positions
# are "x,y" pairs.  'k' may be given together with 'k_n' and k_m is derived.

_POSITION_FIELDS = {"pos_alice", "pos_bob", "pos_grace", "pos_willie", "pos_ris"}
_INT_FIELDS = {"k_n", "k_m", "seed"}


def _parse_value(key, raw):
    raw = raw.strip()
    if key in _POSITION_FIELDS:
        parts = [p for p in raw.replace("(", "").replace(")", "").split(",") if p.strip()]
        if len(parts) != 2:
            raise ValueError(f"{key}: expected 'x,y', got {raw!r}")
        return (float(parts[0]), float(parts[1]))
    if key in _INT_FIELDS or key == "k":
        return int(raw)
    return float(raw)


def parse_config(text):
    """Parse key=value config text into a dict of scenario field values."""
    known = {f.name for f in fields(Scenario)} | {"k"}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _parse_value(key, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return values


def scenario_from_values(values):
    """Build a Scenario from parsed config values; 'k' resolves k_m if needed."""
    values = dict(values)
    total = values.pop("k", None)
    if total is not None:
        if "k_n" in values and "k_m" not in values:
            values["k_m"] = total - values["k_n"]
        elif "k_m" in values and "k_n" not in values:
            values["k_n"] = total - values["k_m"]
        elif "k_n" in values and "k_m" in values:
            if values["k_n"] + values["k_m"] != total:
                raise ValueError("k, k_n, k_m are inconsistent")
        else:
            half = total // 2
            values["k_n"], values["k_m"] = half, total - half
    return Scenario(**values)


def load_scenario(path=None, overrides=None) -> Scenario:
    """Load a Scenario from a config file, then apply override values on top.

    CLI flag overrides take precedence over file values; both are optional.
    """
    values = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            values.update(parse_config(fh.read()))
    if overrides:
        for key, raw in overrides.items():
            if key == "k":
                values["k"] = int(raw) if isinstance(raw, str) else raw
            elif isinstance(raw, str):
                values[key] = _parse_value(key, raw)
            else:
                values[key] = raw
    return scenario_from_values(values)


def with_updates(scenario: Scenario, **updates) -> Scenario:
    """Return a copy of the scenario with the given fields replaced."""
    return replace(scenario, **updates)
