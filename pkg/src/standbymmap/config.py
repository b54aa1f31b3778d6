"""Model configuration: all parameters of the standby fleet.

A ModelConfig collects the PH distributions of the online unit, the shock
and damage machinery, the repair facility clocks, the fleet/vacation policy
knobs (n, R, preventive maintenance on/off) and the cost block.
"""

from dataclasses import dataclass, replace

import numpy as np

from .ph import PhDistribution, VALIDATION_ATOL


class ConfigError(ValueError):
    """Raised for inconsistent model parameters."""


@dataclass(frozen=True)
class CostBlock:
    """Scalar and per-phase cost/reward parameters."""

    gross_profit: float = 0.0        # B, per u.t. while operational
    downtime_loss: float = 0.0       # C, per u.t. while down
    repair_present: float = 0.0      # H, per u.t. with repairperson present
    vacation: float = 0.0            # F, per u.t. on vacation
    return_fixed: float = 0.0        # G, per return from vacation
    repairable_fixed: float = 0.0    # fcr, per repairable failure
    inspection_fixed: float = 0.0    # fmi, per major inspection
    new_unit: float = 0.0            # fnu, per unit of a fresh fleet
    operational: np.ndarray = None   # c0, length m
    damage: np.ndarray = None        # cd, length d
    corrective: np.ndarray = None    # cr1, length z1
    preventive: np.ndarray = None    # cr2, length z2

    def __post_init__(self):
        for name in ("operational", "damage", "corrective", "preventive"):
            v = getattr(self, name)
            v = np.zeros(0) if v is None else np.asarray(v, dtype=float).ravel()
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ModelConfig:
    """Full parameter set of one fleet model."""

    # Online unit
    internal: PhDistribution          # (alpha, T)
    internal_exit_repairable: np.ndarray    # T_r0
    internal_exit_nonrepairable: np.ndarray  # T_nr0
    minor_internal: int               # phases 1..minor_internal are minor

    # External shocks
    shock: PhDistribution             # (gamma, L)
    total_failure_prob: float         # omega0
    shock_effect: np.ndarray          # W, m x m substochastic
    shock_repairable: np.ndarray      # W_r0
    shock_nonrepairable: np.ndarray   # W_nr0

    # Cumulative damage chain
    damage_init: np.ndarray           # omega row vector, length d
    damage_matrix: np.ndarray         # d x d substochastic
    damage_exit: np.ndarray           # exit probabilities, length d
    minor_damage: int                 # phases 1..minor_damage are minor

    # Inspections
    inspection: PhDistribution        # (eta, M)

    # Repair facility
    vacation: PhDistribution          # (upsilon, V)
    corrective: PhDistribution        # (beta1, S1)
    preventive: PhDistribution        # (beta2, S2)

    # Fleet / policy
    units: int                        # n
    vacation_threshold: int           # R
    pm_enabled: bool = True

    costs: CostBlock = None

    def __post_init__(self):
        for name in ("internal_exit_repairable", "internal_exit_nonrepairable",
                     "shock_repairable", "shock_nonrepairable",
                     "damage_init", "damage_exit"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).ravel())
        for name in ("shock_effect", "damage_matrix"):
            object.__setattr__(self, name,
                               np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        if self.costs is None:
            object.__setattr__(self, "costs", CostBlock())
        self.validate()

    # Short dimension aliases used throughout the matrix construction.
    @property
    def m(self) -> int:
        return self.internal.order

    @property
    def t(self) -> int:
        return self.shock.order

    @property
    def d(self) -> int:
        return self.damage_init.size

    @property
    def eps(self) -> int:
        return self.inspection.order

    @property
    def v(self) -> int:
        return self.vacation.order

    @property
    def z(self) -> tuple:
        """Service orders by repair type: z[1] corrective, z[2] preventive."""
        return (None, self.corrective.order, self.preventive.order)

    def validate(self):
        m, d = self.m, self.d
        atol = 1e-9
        if self.units < 1:
            raise ConfigError("configuration error: need at least one unit")
        if not 1 <= self.vacation_threshold <= self.units:
            raise ConfigError("configuration error: R must satisfy 1 <= R <= n")
        if not 1 <= self.minor_internal < m:
            raise ConfigError("configuration error: minor_internal must be in [1, m)")
        if not 1 <= self.minor_damage < d:
            raise ConfigError("configuration error: minor_damage must be in [1, d)")
        if not 0 <= self.total_failure_prob <= 1:
            raise ConfigError("configuration error: omega0 must be a probability")
        split = (self.internal.subgen.sum(axis=1)
                 + self.internal_exit_repairable + self.internal_exit_nonrepairable)
        if np.max(np.abs(split)) > atol:
            raise ConfigError("configuration error: internal exit split "
                              "T 1 + T_r0 + T_nr0 must vanish")
        wsum = (self.shock_effect.sum(axis=1)
                + self.shock_repairable + self.shock_nonrepairable)
        if np.max(np.abs(wsum - 1)) > atol:
            raise ConfigError("configuration error: shock outcome rows must sum to 1")
        dsum = self.damage_matrix.sum(axis=1) + self.damage_exit
        if np.max(np.abs(dsum - 1)) > atol:
            raise ConfigError("configuration error: damage rows plus exit must sum to 1")
        if abs(self.damage_init.sum() - 1) > atol or np.any(self.damage_init < -VALIDATION_ATOL):
            raise ConfigError("configuration error: damage_init must be a distribution")
        if self.costs.operational.size and self.costs.operational.size != m:
            raise ConfigError("configuration error: operational cost length != m")
        if self.costs.damage.size and self.costs.damage.size != d:
            raise ConfigError("configuration error: damage cost length != d")
        if self.costs.corrective.size and self.costs.corrective.size != self.corrective.order:
            raise ConfigError("configuration error: corrective cost length != z1")
        if self.costs.preventive.size and self.costs.preventive.size != self.preventive.order:
            raise ConfigError("configuration error: preventive cost length != z2")

    def with_vacation(self, vacation: PhDistribution) -> "ModelConfig":
        return replace(self, vacation=vacation)

    def with_policy(self, units=None, vacation_threshold=None, pm_enabled=None,
                    vacation=None) -> "ModelConfig":
        kw = {}
        if units is not None:
            kw["units"] = units
        if vacation_threshold is not None:
            kw["vacation_threshold"] = vacation_threshold
        if pm_enabled is not None:
            kw["pm_enabled"] = pm_enabled
        if vacation is not None:
            kw["vacation"] = vacation
        return replace(self, **kw)


def exponential_vacation(a: float) -> PhDistribution:
    return PhDistribution(np.array([1.0]), np.array([[-a]]))


def erlang2_vacation(a: float, b: float) -> PhDistribution:
    return PhDistribution(np.array([1.0, 0.0]), np.array([[-a, a], [0.0, -b]]))


def vacation_from_params(family: str, params) -> PhDistribution:
    params = np.atleast_1d(np.asarray(params, dtype=float))
    if np.any(params <= 0):
        raise ConfigError("configuration error: vacation rates must be positive")
    if family in ("exp", "exponential"):
        if params.size != 1:
            raise ConfigError("configuration error: exponential vacation takes one rate")
        return exponential_vacation(params[0])
    if family in ("erlang2", "erlang"):
        if params.size != 2:
            raise ConfigError("configuration error: erlang2 vacation takes two rates")
        return erlang2_vacation(params[0], params[1])
    raise ConfigError(f"configuration error: unknown vacation family {family!r}")


def example_fleet_config(units: int = 4, vacation_threshold: int = 3,
                         pm_enabled: bool = True,
                         vacation: PhDistribution | None = None) -> ModelConfig:
    """The bundled four-unit fleet with shocks, two-stage damage and PM."""
    internal = PhDistribution(
        np.array([1.0, 0.0, 0.0, 0.0]),
        np.array([
            [-0.04, 0.02, 0.0, 0.0],
            [0.0, -0.03, 0.02, 0.0],
            [0.0, 0.0, -0.1, 0.04],
            [0.0, 0.0, 0.0, -0.4],
        ]),
    )
    shock = PhDistribution(
        np.array([1.0, 0.0]),
        np.array([[-0.1, 0.06], [0.0, -0.5]]),
    )
    inspection = PhDistribution(
        np.array([1.0, 0.0]),
        np.array([[-0.2, 0.15], [0.5, -0.6]]),
    )
    corrective = PhDistribution(
        np.array([1.0, 0.0, 0.0]),
        np.array([[-0.8, 0.5, 0.2], [0.3, -0.8, 0.4], [0.4, 0.1, -0.7]]),
    )
    preventive = PhDistribution(
        np.array([1.0, 0.0, 0.0]),
        np.array([[-0.8, 0.2, 0.05], [0.05, -0.9, 0.2], [0.1, 0.1, -0.8]]),
    )
    if vacation is None:
        vacation = erlang2_vacation(0.8297104, 0.8297099)
    costs = CostBlock(
        gross_profit=70.0,
        downtime_loss=70.0,
        repair_present=20.0,
        vacation=4.0,
        return_fixed=5.0,
        repairable_fixed=10.0,
        inspection_fixed=4.0,
        new_unit=150.0,
        operational=np.array([6.0, 14.0, 32.0, 42.0]),
        damage=np.array([1.0, 2.0]),
        corrective=np.array([20.0, 20.0, 20.0]),
        preventive=np.array([10.0, 10.0, 10.0]),
    )
    return ModelConfig(
        internal=internal,
        internal_exit_repairable=np.array([0.016, 0.008, 0.048, 0.32]),
        internal_exit_nonrepairable=np.array([0.004, 0.002, 0.012, 0.08]),
        minor_internal=2,
        shock=shock,
        total_failure_prob=0.2,
        shock_effect=np.array([
            [0.1, 0.05, 0.2, 0.05],
            [0.0, 0.05, 0.2, 0.05],
            [0.0, 0.0, 0.2, 0.05],
            [0.0, 0.0, 0.0, 0.05],
        ]),
        shock_repairable=np.array([0.6, 0.6, 0.65, 0.65]),
        shock_nonrepairable=np.array([0.0, 0.1, 0.1, 0.3]),
        damage_init=np.array([1.0, 0.0]),
        damage_matrix=np.array([[0.0, 1.0], [0.0, 0.0]]),
        damage_exit=np.array([0.0, 1.0]),
        minor_damage=1,
        inspection=inspection,
        vacation=vacation,
        corrective=corrective,
        preventive=preventive,
        units=units,
        vacation_threshold=vacation_threshold,
        pm_enabled=pm_enabled,
        costs=costs,
    )
