"""Transition blocks of the online unit.

The online unit lives on the phase grid (internal, shock, damage, inspection).
Its outflow splits into four labelled channels: repairable failure (A),
positive inspection sending the unit to preventive maintenance (B),
non-repairable failure (C) and everything else (O, block H0).  The primed
variants of A/B/C apply when the failing unit is the last operational one,
so no fresh unit is re-initialised and only the shock clock survives.
"""

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .ph import kron_sum


@dataclass(frozen=True)
class UnitBlocks:
    """Event blocks of the online unit on the (i, j, h, u) phase grid."""

    H0: np.ndarray
    HA: np.ndarray
    HB: np.ndarray
    HC: np.ndarray
    HA_p: np.ndarray   # primed variants: columns collapse to the shock clock
    HB_p: np.ndarray
    HC_p: np.ndarray


def build_selectors(config: ModelConfig):
    """Minor/major diagonal selectors for internal (U1, U2) and damage (V1, V2).

    Minor phases are 1..minor_internal (resp. 1..minor_damage); the selectors
    partition the diagonal, so U1 + U2 = I and V1 + V2 = I.
    """
    m, d = config.m, config.d
    u1 = np.zeros(m)
    u1[:config.minor_internal] = 1.0
    v1 = np.zeros(d)
    v1[:config.minor_damage] = 1.0
    return np.diag(u1), np.diag(1.0 - u1), np.diag(v1), np.diag(1.0 - v1)


def _shock_pieces(config: ModelConfig):
    """Shock-arrival factors shared by all event blocks."""
    L0 = config.shock.exit_vector
    gamma = config.shock.init
    renew = np.outer(L0, gamma)                     # L0 gamma
    return renew * (1 - config.total_failure_prob), renew * config.total_failure_prob


def build_HC(config: ModelConfig, has_spare: bool = True) -> np.ndarray:
    """Non-repairable failure channel of the online unit."""
    m, t, d = config.m, config.t, config.d
    alpha = config.internal.init
    omega = config.damage_init
    eta = config.inspection.init
    shock_sub, shock_total = _shock_pieces(config)
    dam_stay = config.damage_matrix.sum(axis=1)     # D 1
    em = np.ones(m)

    if has_spare:
        internal_f = np.outer(config.internal_exit_nonrepairable, alpha)
        wnr_f = np.outer(config.shock_nonrepairable, alpha)
        any_f = np.outer(em, alpha)
        dam_restart = np.outer(np.ones(d), omega)
        core = (np.kron(np.kron(internal_f, np.eye(t)), dam_restart)
                + np.kron(np.kron(wnr_f, shock_sub), np.outer(dam_stay, omega))
                + np.kron(np.kron(any_f, shock_sub), np.outer(config.damage_exit, omega))
                + np.kron(np.kron(any_f, shock_total), dam_restart))
        return np.kron(core, np.outer(np.ones(config.eps), eta))

    internal_f = config.internal_exit_nonrepairable[:, None]
    wnr_f = config.shock_nonrepairable[:, None]
    any_f = em[:, None]
    ones_d = np.ones((d, 1))
    core = (np.kron(np.kron(internal_f, np.eye(t)), ones_d)
            + np.kron(np.kron(wnr_f, shock_sub), dam_stay[:, None])
            + np.kron(np.kron(any_f, shock_sub), config.damage_exit[:, None])
            + np.kron(np.kron(any_f, shock_total), ones_d))
    return np.kron(core, np.ones((config.eps, 1)))


def build_HA(config: ModelConfig, has_spare: bool = True) -> np.ndarray:
    """Repairable failure channel of the online unit."""
    t, d = config.t, config.d
    alpha = config.internal.init
    omega = config.damage_init
    eta = config.inspection.init
    shock_sub, _ = _shock_pieces(config)
    dam_stay = config.damage_matrix.sum(axis=1)

    if has_spare:
        core = (np.kron(np.kron(np.outer(config.internal_exit_repairable, alpha),
                                np.eye(t)),
                        np.outer(np.ones(d), omega))
                + np.kron(np.kron(np.outer(config.shock_repairable, alpha), shock_sub),
                          np.outer(dam_stay, omega)))
        return np.kron(core, np.outer(np.ones(config.eps), eta))

    core = (np.kron(np.kron(config.internal_exit_repairable[:, None], np.eye(t)),
                    np.ones((d, 1)))
            + np.kron(np.kron(config.shock_repairable[:, None], shock_sub),
                      dam_stay[:, None]))
    return np.kron(core, np.ones((config.eps, 1)))


def build_HB(config: ModelConfig, has_spare: bool = True) -> np.ndarray:
    """Major-inspection channel (preventive maintenance trigger)."""
    m, t, d, eps = config.m, config.t, config.d, config.eps
    if not config.pm_enabled:
        cols = m * t * d * eps if has_spare else t
        return np.zeros((m * t * d * eps, cols))
    U1, U2, _, V2 = build_selectors(config)
    alpha = config.internal.init
    omega = config.damage_init
    insp = np.outer(config.inspection.exit_vector, config.inspection.init)

    if has_spare:
        return (np.kron(np.kron(np.kron(np.outer(U2 @ np.ones(m), alpha), np.eye(t)),
                                np.outer(np.ones(d), omega)), insp)
                + np.kron(np.kron(np.kron(np.outer(U1 @ np.ones(m), alpha), np.eye(t)),
                                  np.outer(V2 @ np.ones(d), omega)), insp))

    exit_col = config.inspection.exit_vector[:, None]
    return (np.kron(np.kron(np.kron((U2 @ np.ones(m))[:, None], np.eye(t)),
                            np.ones((d, 1))), exit_col)
            + np.kron(np.kron(np.kron((U1 @ np.ones(m))[:, None], np.eye(t)),
                              (V2 @ np.ones(d))[:, None]), exit_col))


def build_H0(config: ModelConfig) -> np.ndarray:
    """No-event block: internal/shock/inspection phase moves, harmless shocks
    and negative inspections."""
    t, d, eps = config.t, config.d, config.eps
    U1, U2, V1, V2 = build_selectors(config)
    shock_sub, _ = _shock_pieces(config)
    insp = np.outer(config.inspection.exit_vector, config.inspection.init)

    h0 = (np.kron(np.kron(kron_sum(config.internal.subgen, config.shock.subgen),
                          np.eye(d)), np.eye(eps))
          + np.kron(np.eye(config.m * t * d), config.inspection.subgen)
          + np.kron(np.kron(np.kron(config.shock_effect, shock_sub),
                            config.damage_matrix), np.eye(eps))
          + np.kron(np.kron(np.kron(U1, np.eye(t)), V1), insp))
    if not config.pm_enabled:
        # Major findings are ignored: the inspection renews, phases persist.
        h0 = h0 + (np.kron(np.kron(np.kron(U2, np.eye(t)), np.eye(d)), insp)
                   + np.kron(np.kron(np.kron(U1, np.eye(t)), V2), insp))
    return h0


def build_unit_blocks(config: ModelConfig) -> UnitBlocks:
    blocks = UnitBlocks(
        H0=build_H0(config),
        HA=build_HA(config, True),
        HB=build_HB(config, True),
        HC=build_HC(config, True),
        HA_p=build_HA(config, False),
        HB_p=build_HB(config, False),
        HC_p=build_HC(config, False),
    )
    residual = (blocks.H0 + blocks.HA + blocks.HB + blocks.HC).sum(axis=1)
    if np.max(np.abs(residual)) > 1e-10:
        raise ValueError(
            f"online-unit outflow does not balance, residual {np.max(np.abs(residual)):.2e}"
        )
    return blocks
