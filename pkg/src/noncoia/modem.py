"""PAM constellations, Fischer-Huber loading, and minimum-distance detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleRate


class PamConstellation:
    """Gray-mapped M-PAM with equispaced symmetric levels at unit average energy."""

    def __init__(self, order: int):
        if order < 2 or order & (order - 1):
            raise ValueError(f"PAM order must be a power of 2 >= 2, got {order}")
        self.order = order
        self.bits_per_symbol = order.bit_length() - 1
        levels = 2.0 * np.arange(order) - (order - 1)
        self.points = levels / np.sqrt(np.mean(levels**2))
        idx = np.arange(order)
        self.gray_of_index = idx ^ (idx >> 1)
        self.index_of_gray = np.argsort(self.gray_of_index)
        self._midpoints = 0.5 * (self.points[1:] + self.points[:-1])

    def modulate(self, values):
        """Map data words (0..M-1) to constellation points."""
        return self.points[self.index_of_gray[np.asarray(values)]]

    def detect(self, x):
        """Nearest-point slicing; exact midpoints resolve to the lower level."""
        idx = np.searchsorted(self._midpoints, np.asarray(x, dtype=float), side="left")
        return self.gray_of_index[idx]


def bits_to_values(bits: np.ndarray) -> np.ndarray:
    """Pack bit rows (MSB first) into integer data words."""
    bits = np.asarray(bits)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def values_to_bits(values, n_bits: int) -> np.ndarray:
    shifts = np.arange(n_bits - 1, -1, -1)
    return (np.asarray(values)[..., None] >> shifts) & 1


@dataclass(frozen=True, eq=False)
class LoadingPlan:
    """Rate and power allocation over the post-alignment parallel channels.

    ``active`` lists the users left in service; rates are integer bits per
    2-use block summing exactly to the rate target, and powers follow the
    minimum-distance-equalizing rule P_i proportional to 2^(2 R_i) / g_i.
    ``raw_rates`` keeps the pre-rounding allocation for diagnostics.
    """

    active: tuple
    rates: np.ndarray
    powers: np.ndarray
    gains: np.ndarray
    raw_rates: np.ndarray
    total_rate: int
    total_power: float


def _round_preserving_sum(raw: np.ndarray, gains: np.ndarray, total: int) -> np.ndarray:
    """Largest-fractional-part rounding; ties go to the stronger channel."""
    floors = np.floor(raw).astype(int)
    deficit = int(total - floors.sum())
    frac = raw - floors
    order = sorted(range(len(raw)), key=lambda m: (-frac[m], -gains[m], m))
    rates = floors.copy()
    for m in order[:deficit]:
        rates[m] += 1
    return rates


def _check_loading_args(gains, total_rate, total_power):
    gains = np.asarray(gains, dtype=float)
    if gains.ndim != 1 or len(gains) == 0:
        raise ValueError("gains must be a non-empty 1-D array")
    if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
        raise ValueError("gains must be finite and positive")
    if int(total_rate) != total_rate or total_rate < 1:
        raise InfeasibleRate(f"total rate must be an integer >= 1, got {total_rate}")
    if total_power <= 0:
        raise ValueError("total power must be positive")
    return gains, int(total_rate)


def fh_loading(gains, total_rate: int, total_power: float) -> LoadingPlan:
    """Fischer-Huber rate and power loading with geometric-mean normalization.

    Pre-rounding rates R_i = R_T/n + (1/2) log2(g_i / GM(g)) sum to R_T by
    the geometric-mean identity; users driven non-positive (or rounded to
    zero bits) are removed and the allocation recomputed on the remainder.
    Powers equalize the minimum distance across the active channels.
    """
    gains, total_rate = _check_loading_args(gains, total_rate, total_power)
    active = list(range(len(gains)))
    while True:
        g = gains[active]
        n = len(active)
        gm = np.exp(np.mean(np.log(g)))
        raw = total_rate / n + 0.5 * np.log2(g / gm)
        if np.any(raw <= 0):
            active = [u for u, r in zip(active, raw) if r > 0]
            if not active:
                raise InfeasibleRate("no channel can carry a positive rate")
            continue
        rates = _round_preserving_sum(raw, g, total_rate)
        if np.any(rates < 1):
            active = [u for u, r in zip(active, rates) if r >= 1]
            if not active:
                raise InfeasibleRate("rounding removed every channel")
            continue
        break
    weights = 2.0 ** (2 * rates) / g
    powers = total_power * weights / weights.sum()
    return LoadingPlan(tuple(active), rates, powers, g, raw, total_rate, total_power)


def uniform_loading(gains, total_rate: int, total_power: float) -> LoadingPlan:
    """Equal-split baseline: same rate and power for every (kept) channel."""
    gains, total_rate = _check_loading_args(gains, total_rate, total_power)
    active = list(range(len(gains)))
    while True:
        g = gains[active]
        n = len(active)
        raw = np.full(n, total_rate / n)
        rates = _round_preserving_sum(raw, g, total_rate)
        if np.any(rates < 1):
            active = [u for u, r in zip(active, rates) if r >= 1]
            if not active:
                raise InfeasibleRate("rounding removed every channel")
            continue
        break
    powers = np.full(n, total_power / n)
    return LoadingPlan(tuple(active), rates, powers, g, raw, total_rate, total_power)


def pam_modulate(bits_by_user, plan: LoadingPlan, k_users: int | None = None):
    """Modulate one or more blocks of bits into per-user PAM symbols.

    ``bits_by_user`` is aligned with ``plan.active``; entry m holds bits of
    shape (R_m,) or (n_blocks, R_m).  Each symbol is drawn from a
    2^R_m-ary unit-energy constellation and scaled by sqrt(2 P_m): the
    symbol's energy is spread over the 2 channel uses of the block, so the
    per-use power averages P_m.  Inactive users get zero symbols.  Returns
    shape (k_users,) for single blocks, else (n_blocks, k_users).
    """
    if len(bits_by_user) != len(plan.active):
        raise ValueError("need one bit array per active user")
    if k_users is None:
        k_users = max(plan.active) + 1
    single = np.asarray(bits_by_user[0]).ndim == 1 if bits_by_user else True
    n_blocks = 1 if single else np.asarray(bits_by_user[0]).shape[0]
    out = np.zeros((n_blocks, k_users))
    for m, user in enumerate(plan.active):
        bits = np.atleast_2d(np.asarray(bits_by_user[m]))
        rate = int(plan.rates[m])
        if bits.shape[1] != rate:
            raise ValueError(f"user {user} needs {rate} bits per block")
        const = PamConstellation(2**rate)
        out[:, user] = const.modulate(bits_to_values(bits)) * np.sqrt(2.0 * plan.powers[m])
    return out[0] if single else out


def pam_detect(observation, effective_gain: float, constellation: PamConstellation):
    """Invert the slicer: nearest constellation point, then inverse Gray map.

    ``effective_gain`` is the end-to-end amplitude multiplying a unit-energy
    constellation point (channel gain, filters, and the sqrt(2 P) scaling).
    """
    if effective_gain == 0:
        raise ValueError("effective gain must be nonzero")
    obs = np.asarray(observation, dtype=float)
    values = constellation.detect(obs / effective_gain)
    return values_to_bits(values, constellation.bits_per_symbol)
