"""Attack injection.

Each of the five attack kinds perturbs the achieved metrics of exactly
one target node; analytic bounds are never touched, so detection can
compare perturbed reality against clean expectations. The perturbation
constants are calibration knobs rather than physics and every one of
them can be overridden per attack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping

from .channel import NodeBudget, secrecy_rate_bps
from .topology import LayeredTopology


class AttackKind(str, Enum):
    HALF_DUPLEX = "HalfDuplex"
    BANDWIDTH_SPOOFING = "BandwidthSpoofing"
    HANDOVER = "Handover"
    DOS = "DoS"
    UAV = "UAV"


class AttackError(Exception):
    """Base class for attack injection failures."""


class UnknownTargetError(AttackError):
    pass


class InapplicableAttackError(AttackError):
    pass


@dataclass(frozen=True)
class AttackConstants:
    """Perturbation strengths; defaults breach typical envelopes at
    intensity around 0.3."""

    halfduplex_factor: float = 0.5
    dos_factor: float = 0.9
    handover_penalty_db: float = 3.0
    bws_knee_m: float = 170.0
    uav_gain: float = 0.5


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    target: str
    intensity: float
    seed: int = 0
    constants: AttackConstants = AttackConstants()

    def __post_init__(self) -> None:
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity must be in [0, 1], got {self.intensity}")


@dataclass(frozen=True)
class GroundTruth:
    """Node ids labeled as attacked for the trial; scoring-side only."""

    attacked: frozenset[str]

    @staticmethod
    def clean() -> "GroundTruth":
        return GroundTruth(frozenset())


def _capacity_scaled(state: NodeBudget, factor: float) -> NodeBudget:
    """Scale achieved capacity; secrecy rate and EE follow from it."""
    b = state.budget
    cap = b.capacity_bps * factor
    sr = secrecy_rate_bps(cap, b.eavesdropper_capacity_bps)
    ee = cap / state.power_consumption_w
    budget = replace(b, capacity_bps=cap, secrecy_rate_bps=sr, energy_efficiency_bps_per_w=ee)
    envelope = replace(state.envelope, secrecy_achieved_bps=sr, ee_achieved=ee)
    return replace(state, budget=budget, envelope=envelope)


def apply_attack(
    spec: AttackSpec,
    topo: LayeredTopology,
    budgets: Mapping[str, NodeBudget],
) -> tuple[dict[str, NodeBudget], GroundTruth]:
    """Perturb the target's achieved metrics, returning a new budget map.

    Only the target entry changes; every other entry is passed through
    untouched. Intensity 0 is an exact pass-through but the target is
    still labeled attacked in the returned ground truth.
    """
    if spec.target not in budgets:
        raise UnknownTargetError(f"attack target {spec.target} has no link budget")
    state = budgets[spec.target]
    k = spec.constants
    i = spec.intensity

    if spec.kind is AttackKind.HANDOVER:
        node = topo.node(spec.target)
        last = len(topo.layers)
        if not node.mobile or topo.layer_of(spec.target) < last - 1:
            raise InapplicableAttackError(
                f"handover attack needs a mobile node in the outermost two layers; "
                f"{spec.target} is {'mobile' if node.mobile else 'static'} "
                f"in layer {topo.layer_of(spec.target)} of {last}"
            )

    out = dict(budgets)
    truth = GroundTruth(frozenset({spec.target}))
    if i == 0.0:
        return out, truth

    if spec.kind is AttackKind.HALF_DUPLEX:
        factor = 1.0 - k.halfduplex_factor * i
        b = state.budget
        budget = replace(
            b,
            secrecy_rate_bps=b.secrecy_rate_bps * factor,
            energy_efficiency_bps_per_w=b.energy_efficiency_bps_per_w * factor,
        )
        envelope = replace(
            state.envelope,
            secrecy_achieved_bps=budget.secrecy_rate_bps,
            ee_achieved=budget.energy_efficiency_bps_per_w,
        )
        out[spec.target] = replace(state, budget=budget, envelope=envelope)
    elif spec.kind is AttackKind.BANDWIDTH_SPOOFING:
        # Stronger with distance: full effect at and beyond the knee.
        reach = min(1.0, state.edge.distance_m / k.bws_knee_m)
        out[spec.target] = _capacity_scaled(state, 1.0 - i * reach)
    elif spec.kind is AttackKind.DOS:
        out[spec.target] = _capacity_scaled(state, 1.0 - k.dos_factor * i)
    elif spec.kind is AttackKind.UAV:
        # Masquerading stronger access point: pushes achieved values up.
        out[spec.target] = _capacity_scaled(state, 1.0 + k.uav_gain * i)
    elif spec.kind is AttackKind.HANDOVER:
        penalty = k.handover_penalty_db * i
        b = state.budget
        snr = b.snr_linear * 10.0 ** (-penalty / 10.0)
        # Effective bandwidth recovered from the stored operating point so
        # attacks compose multiplicatively.
        beta = b.capacity_bps / math.log2(1.0 + b.snr_linear)
        cap = beta * math.log2(1.0 + snr)
        sr = secrecy_rate_bps(cap, b.eavesdropper_capacity_bps)
        ee = cap / state.power_consumption_w
        budget = replace(
            b,
            extra_loss_db=b.extra_loss_db + penalty,
            snr_linear=snr,
            capacity_bps=cap,
            secrecy_rate_bps=sr,
            energy_efficiency_bps_per_w=ee,
        )
        envelope = replace(state.envelope, secrecy_achieved_bps=sr, ee_achieved=ee)
        out[spec.target] = replace(state, budget=budget, envelope=envelope)
    else:  # pragma: no cover - enum is closed
        raise AttackError(f"unhandled attack kind {spec.kind}")
    return out, truth


def apply_attacks(
    specs,
    topo: LayeredTopology,
    budgets: Mapping[str, NodeBudget],
) -> tuple[dict[str, NodeBudget], GroundTruth]:
    """Apply several attacks in order; overlapping targets compose."""
    out = dict(budgets)
    attacked: set[str] = set()
    for spec in specs:
        out, truth = apply_attack(spec, topo, out)
        attacked |= truth.attacked
    return out, GroundTruth(frozenset(attacked))
