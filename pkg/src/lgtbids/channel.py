"""Per-link physics: path loss, SNR, Shannon capacity, secrecy rate,
energy efficiency, and the analytic detection bounds.

Conventions: powers in dBm, losses in dB, rates in bit/s, energy
efficiency in bit/s per watt. A link's upper bound assumes free-space
path loss only; the lower bound adds the worst-case obstruction loss;
achieved values sit in between, at whatever obstruction loss the trial
actually sampled. For an honest link that ordering is guaranteed by
construction, which is exactly what makes out-of-envelope values a
detection signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .topology import Edge

SPEED_OF_LIGHT_M_S = 299_792_458.0

# 10*log10(e): converts a e^{-gamma*w} attenuation exponent to decibels.
_DB_PER_NEPER = 10.0 * math.log10(math.e)


class ChannelError(Exception):
    """Base class for channel computation failures."""


class NonPositiveDistanceError(ChannelError):
    pass


class NegativeDepthError(ChannelError):
    pass


class NegativeSnrError(ChannelError):
    pass


class NonPositivePowerError(ChannelError):
    pass


class AchievedLossOutOfRangeError(ChannelError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    """Cell-wide propagation constants."""

    frequency_hz: float
    bandwidth_hz: float
    noise_dbm: float
    pathloss_exponent: float = 2.0
    gamma_per_m: float = 0.0

    def __post_init__(self) -> None:
        if self.frequency_hz <= 0:
            raise ValueError("frequency_hz must be > 0")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be > 0")
        if self.pathloss_exponent < 1:
            raise ValueError("pathloss_exponent must be >= 1")
        if self.gamma_per_m < 0:
            raise ValueError("gamma_per_m must be >= 0")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0:
        raise ChannelError("cannot convert a non-positive linear value to dB")
    return 10.0 * math.log10(value)


def free_space_pathloss_db(params: ChannelParams, distance_m: float) -> float:
    """Log-distance path loss: 20*log10(4*pi*f/c) + 10*alpha*log10(d)."""
    if distance_m <= 0:
        raise NonPositiveDistanceError(f"distance must be > 0, got {distance_m}")
    reference = 20.0 * math.log10(4.0 * math.pi * params.frequency_hz / SPEED_OF_LIGHT_M_S)
    return reference + 10.0 * params.pathloss_exponent * math.log10(distance_m)


def extra_loss_db(params: ChannelParams, entity_depths_m) -> float:
    """Obstruction loss in dB for the e^{-gamma*sum(w)} attenuation model.

    Additive in the depths: splitting one obstruction into several of
    the same total depth changes nothing.
    """
    total = 0.0
    for w in entity_depths_m:
        if w < 0:
            raise NegativeDepthError(f"entity depth must be >= 0, got {w}")
        total += w
    return _DB_PER_NEPER * params.gamma_per_m * total


def snr_linear(params: ChannelParams, tx_power_dbm: float, total_loss_db: float) -> float:
    """Linear SNR from transmit power and total loss: 10^((P - L - N)/10)."""
    if not math.isfinite(total_loss_db):
        raise ChannelError("total_loss_db must be finite")
    return db_to_linear(tx_power_dbm - total_loss_db - params.noise_dbm)


def capacity_bps(params: ChannelParams, snr: float) -> float:
    """Shannon capacity beta*log2(1 + snr)."""
    if snr < 0:
        raise NegativeSnrError(f"snr must be >= 0, got {snr}")
    return params.bandwidth_hz * math.log2(1.0 + snr)


def secrecy_rate_bps(capacity: float, eavesdropper_capacity: float) -> float:
    """Capacity margin over the eavesdropper, floored at zero."""
    if capacity < 0 or eavesdropper_capacity < 0:
        raise ChannelError("capacities must be >= 0")
    if capacity >= eavesdropper_capacity:
        return capacity - eavesdropper_capacity
    return 0.0


def energy_efficiency(capacity: float, power_consumption_w: float) -> float:
    """Rate delivered per watt of total node consumption."""
    if power_consumption_w <= 0:
        raise NonPositivePowerError(
            f"power_consumption_w must be > 0, got {power_consumption_w}"
        )
    return capacity / power_consumption_w


@dataclass(frozen=True)
class LinkBudget:
    """Derived quantities of one link at one operating point.

    For honest links ``secrecy_rate_bps`` and ``energy_efficiency_bps_per_w``
    are coherent with ``capacity_bps`` (see ``validate``); attack
    perturbations deliberately break that coherence.
    """

    pathloss_db: float
    extra_loss_db: float
    snr_linear: float
    capacity_bps: float
    eavesdropper_capacity_bps: float
    secrecy_rate_bps: float
    energy_efficiency_bps_per_w: float

    def validate(self, power_consumption_w: float, rel_tol: float = 1e-9) -> None:
        """Check the honest-link invariants; raises ChannelError on breach."""
        if self.capacity_bps < 0 or self.secrecy_rate_bps < 0:
            raise ChannelError("capacity and secrecy rate must be >= 0")
        expected_sr = secrecy_rate_bps(self.capacity_bps, self.eavesdropper_capacity_bps)
        if not math.isclose(self.secrecy_rate_bps, expected_sr, rel_tol=rel_tol, abs_tol=1e-6):
            raise ChannelError("secrecy rate inconsistent with capacities")
        expected_ee = energy_efficiency(self.capacity_bps, power_consumption_w)
        if not math.isclose(
            self.energy_efficiency_bps_per_w, expected_ee, rel_tol=rel_tol, abs_tol=1e-12
        ):
            raise ChannelError("energy efficiency inconsistent with capacity")


@dataclass(frozen=True)
class BoundsEnvelope:
    """Per-link detection envelope plus the achieved values under test.

    Invariant (not enforced here so detectors can reject bad data
    explicitly): lower <= upper for both metrics.
    """

    secrecy_lower_bps: float
    secrecy_upper_bps: float
    ee_lower: float
    ee_upper: float
    secrecy_achieved_bps: float
    ee_achieved: float

    def is_valid(self) -> bool:
        return (
            self.secrecy_lower_bps <= self.secrecy_upper_bps
            and self.ee_lower <= self.ee_upper
        )


def _rates(
    params: ChannelParams,
    total_loss_db: float,
    tx_power_dbm: float,
    power_consumption_w: float,
    eavesdropper_bps: float,
    fading_gain: float = 1.0,
) -> tuple[float, float, float, float]:
    snr = snr_linear(params, tx_power_dbm, total_loss_db) * fading_gain
    cap = capacity_bps(params, snr)
    sr = secrecy_rate_bps(cap, eavesdropper_bps)
    ee = energy_efficiency(cap, power_consumption_w)
    return snr, cap, sr, ee


def link_budget(
    params: ChannelParams,
    *,
    distance_m: float,
    entity_depths_m,
    tx_power_dbm: float,
    power_consumption_w: float,
    eavesdropper_bps: float,
    achieved_extra_loss_db: float,
    fading_gain: float = 1.0,
) -> LinkBudget:
    """Achieved operating point of a link.

    ``achieved_extra_loss_db`` must lie inside [0, worst-case obstruction
    loss]; ``fading_gain`` multiplies the achieved SNR and defaults to 1
    (no fading) so honest links stay inside their envelopes.
    """
    pl = free_space_pathloss_db(params, distance_m)
    pe_max = extra_loss_db(params, entity_depths_m)
    if not 0.0 <= achieved_extra_loss_db <= pe_max:
        raise AchievedLossOutOfRangeError(
            f"achieved extra loss {achieved_extra_loss_db} dB outside [0, {pe_max}] dB"
        )
    snr, cap, sr, ee = _rates(
        params,
        pl + achieved_extra_loss_db,
        tx_power_dbm,
        power_consumption_w,
        eavesdropper_bps,
        fading_gain,
    )
    return LinkBudget(
        pathloss_db=pl,
        extra_loss_db=achieved_extra_loss_db,
        snr_linear=snr,
        capacity_bps=cap,
        eavesdropper_capacity_bps=eavesdropper_bps,
        secrecy_rate_bps=sr,
        energy_efficiency_bps_per_w=ee,
    )


def link_bounds(
    params: ChannelParams,
    edge: Edge,
    tx_power_dbm: float,
    p_cc_w: float,
    eavesdropper_capacity: float,
    achieved_extra_loss_db: float,
    fading_gain: float = 1.0,
) -> BoundsEnvelope:
    """Detection envelope of a link plus its achieved values.

    Upper bounds use free-space loss only; lower bounds add the full
    obstruction loss; achieved values use the sampled loss (and the
    optional fading gain, which only ever touches achieved values).
    """
    pl = free_space_pathloss_db(params, edge.distance_m)
    pe_max = extra_loss_db(params, edge.entity_depths_m)
    if not 0.0 <= achieved_extra_loss_db <= pe_max:
        raise AchievedLossOutOfRangeError(
            f"achieved extra loss {achieved_extra_loss_db} dB outside [0, {pe_max}] dB"
        )
    _, _, sr_upper, ee_upper = _rates(
        params, pl, tx_power_dbm, p_cc_w, eavesdropper_capacity
    )
    _, _, sr_lower, ee_lower = _rates(
        params, pl + pe_max, tx_power_dbm, p_cc_w, eavesdropper_capacity
    )
    _, _, sr_ach, ee_ach = _rates(
        params,
        pl + achieved_extra_loss_db,
        tx_power_dbm,
        p_cc_w,
        eavesdropper_capacity,
        fading_gain,
    )
    return BoundsEnvelope(
        secrecy_lower_bps=sr_lower,
        secrecy_upper_bps=sr_upper,
        ee_lower=ee_lower,
        ee_upper=ee_upper,
        secrecy_achieved_bps=sr_ach,
        ee_achieved=ee_ach,
    )


@dataclass(frozen=True)
class NodeBudget:
    """A node's detection-link state: the edge, its budget, its envelope."""

    edge: Edge
    power_consumption_w: float
    budget: LinkBudget
    envelope: BoundsEnvelope
