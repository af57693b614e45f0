"""End-to-end Monte Carlo engine: rate sweeps, BER sweeps, and baselines.

Conventions: per-use transmit power P equals the linear SNR (noise standard
deviation fixed at 1), a PAM symbol carries energy 2P spread over the 2 uses
of a block, and rates are counted per channel use with the real-signal
normalization rate = (1/4) log2(1 + SINR).  Degrees of freedom are slopes of
sum rate against (1/2) log2(SNR); the capacity-scaling bound is drawn as
(K/2) (1/2) log2(1 + SNR).

All randomness is derived from (master_seed, trial indices) only, so reports
are bitwise identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .align import (
    IASolution,
    closed_form_ia3,
    desired_ratio,
    max_sinr_solve,
    min_leakage_solve,
)
from .channel import (
    ChannelRealization,
    EquivalentNetwork,
    NetworkConfig,
    build_equivalent_network,
    draw_channel,
    sample_branch_noise,
)
from .errors import AlignmentError, ConfigurationError, DegeneratePhase, InfeasibleRate
from .modem import (
    LoadingPlan,
    PamConstellation,
    fh_loading,
    pam_detect,
    pam_modulate,
    uniform_loading,
)
from .phases import sample_phase_plan

SOLVERS = ("closed3", "leakage", "maxsinr")
LOADINGS = ("fh", "uniform")

# Resampled-phase acceptance gates: a leakage-solver run only counts when it
# found a deep, non-silent alignment (stalls and silent fixed points are
# phase-plan degeneracies; the receiver just draws new offsets).
_RATE_LEAKAGE_GATE = 1e-9
_BER_LEAKAGE_GATE = 1e-6
_SILENT_GATE = 1e-6


@dataclass(frozen=True, eq=False)
class LinkConfig:
    """Configuration of one Monte Carlo experiment."""

    network: NetworkConfig
    solver: str = "closed3"
    snr_grid_db: tuple = tuple(range(0, 65, 5))
    trials: int = 200
    master_seed: int = 0
    noise_std: float = 1.0
    loading: str = "fh"
    total_rate: int | None = None     # BER target rate; default 2K
    total_power: float | None = None  # BER power budget; default K * snr
    phase_denominator: int = 360
    workers: int = 1
    max_phase_resamples: int = 100
    blocks_per_trial: int = 400
    min_errors: int = 100
    trial_cap: int = 200

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"unknown solver {self.solver!r}")
        if self.solver == "closed3" and self.network.k_users != 3:
            raise ConfigurationError("closed3 requires 3 users")
        if self.loading not in LOADINGS:
            raise ConfigurationError(f"unknown loading {self.loading!r}")
        grid = tuple(float(s) for s in self.snr_grid_db)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("snr_grid_db must be non-empty, strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.master_seed < 0:
            raise ConfigurationError("master_seed must be >= 0")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std must be >= 0")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


@dataclass(eq=False)
class LinkReport:
    """Per-SNR curves of one experiment (rate or BER mode)."""

    snr_grid_db: np.ndarray
    ia_mean: np.ndarray | None = None
    ia_stderr: np.ndarray | None = None
    tdma_mean: np.ndarray | None = None
    tdma_stderr: np.ndarray | None = None
    bound: np.ndarray | None = None
    dof_slope: float | None = None
    trials_used: np.ndarray | None = None
    skipped_trials: int = 0
    ber: np.ndarray | None = None
    bit_counts: np.ndarray | None = None
    error_counts: np.ndarray | None = None
    loading: str | None = None


def _rng(master_seed, *key):
    return np.random.default_rng(np.random.SeedSequence([int(master_seed)] + [int(x) for x in key]))


def per_user_sinr(net: EquivalentNetwork, solution: IASolution, snr: float,
                  noise_std: float = 1.0) -> np.ndarray:
    """Post-filter SINR per user at linear SNR (per-use power P = snr)."""
    k = net.k_users
    es = 2.0 * snr
    mv = np.einsum("jikt,it->jik", net.H, solution.V)
    proj = np.einsum("jik,jk->ji", mv, solution.U)
    sig = es * proj[np.arange(k), np.arange(k)] ** 2
    interf = es * (proj**2).sum(axis=1) - sig
    noise = noise_std**2 * np.einsum(
        "jk,jkl,jl->j", solution.U, net.noise_cov, solution.U
    )
    return sig / (noise + interf)


def per_user_rates(net: EquivalentNetwork, solution: IASolution, snr: float,
                   noise_std: float = 1.0) -> np.ndarray:
    """Shannon rates in bits per channel use: one real symbol per 2 uses."""
    return 0.25 * np.log2(1.0 + per_user_sinr(net, solution, snr, noise_std))


def tdma_baseline(realization: ChannelRealization, snr: float) -> float:
    """Orthogonal time sharing: each user alone in 1/K of the uses at power P.

    No power pooling during the active slot, coherent reception (the
    baseline pays no noncoherent loss).
    """
    h2 = (realization.gains**2).mean(axis=2)
    k = realization.k_users
    direct = np.diagonal(h2)
    return float(np.mean(0.5 * np.log2(1.0 + snr * direct))) if k else 0.0


def capacity_bound(k_users: int, snr) -> np.ndarray:
    """High-SNR sum-capacity scaling curve (K/2) (1/2) log2(1 + SNR)."""
    return (k_users / 2.0) * 0.5 * np.log2(1.0 + np.asarray(snr, dtype=float))


def fit_dof_slope(snr_grid_db, mean_rates) -> float:
    """Least-squares slope of rate against (1/2) log2(SNR), top half of grid."""
    snr_grid_db = np.asarray(snr_grid_db, dtype=float)
    mean_rates = np.asarray(mean_rates, dtype=float)
    x = 0.5 * np.log2(10.0 ** (snr_grid_db / 10.0))
    top = len(x) // 2
    if len(x) - top < 2:
        return float("nan")
    return float(np.polyfit(x[top:], mean_rates[top:], 1)[0])


def _solve_aligned(cfg: LinkConfig, net: EquivalentNetwork, snr: float | None,
                   leakage_gate: float):
    """One solver run; returns the solution or None when it should be retried."""
    if cfg.solver == "closed3":
        try:
            solution, _ = closed_form_ia3(net)
        except AlignmentError:
            return None
        return solution
    if cfg.solver == "leakage":
        solution = min_leakage_solve(net)
        if solution.leakage > leakage_gate:
            return None
        if desired_ratio(net.H, solution.V, solution.U) < _SILENT_GATE:
            return None
        return solution
    return max_sinr_solve(net, snr)


def _aligned_network(cfg: LinkConfig, chan: ChannelRealization, seed_key,
                     snr: float | None, leakage_gate: float):
    """Sample certified phase plans until the solver accepts one."""
    for attempt in range(cfg.max_phase_resamples):
        try:
            plan = sample_phase_plan(
                cfg.network, cfg.phase_denominator, _rng(cfg.master_seed, *seed_key, attempt)
            )
            net = build_equivalent_network(chan, plan)
        except DegeneratePhase:
            continue
        solution = _solve_aligned(cfg, net, snr, leakage_gate)
        if solution is not None:
            return net, solution
    return None


def _rate_trial(cfg: LinkConfig, trial: int):
    chan = draw_channel(cfg.network, _rng(cfg.master_seed, 0, trial, 0))
    snrs = 10.0 ** (np.asarray(cfg.snr_grid_db) / 10.0)
    if cfg.solver == "maxsinr":
        # Beamformers depend on the operating SNR; realign per grid point.
        ia = np.empty(len(snrs))
        got = _aligned_network(cfg, chan, (0, trial, 1), float(snrs[0]), _RATE_LEAKAGE_GATE)
        if got is None:
            return None
        net, _ = got
        for s, snr in enumerate(snrs):
            solution = max_sinr_solve(net, float(snr))
            ia[s] = per_user_rates(net, solution, float(snr), cfg.noise_std).sum()
    else:
        got = _aligned_network(cfg, chan, (0, trial, 1), None, _RATE_LEAKAGE_GATE)
        if got is None:
            return None
        net, solution = got
        ia = np.array(
            [per_user_rates(net, solution, float(snr), cfg.noise_std).sum() for snr in snrs]
        )
    tdma = np.array([tdma_baseline(chan, float(snr)) for snr in snrs])
    return ia, tdma


def _run_ordered(worker, items, n_workers: int):
    if n_workers <= 1:
        return [worker(it) for it in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, items))


def rate_sweep(cfg: LinkConfig) -> LinkReport:
    """Mean sum rate of the aligned network versus SNR, with baselines.

    Per trial: draw a channel and a certified phase plan (resampling phases
    on solver degeneracy up to the cap, then skipping the trial), solve the
    alignment, and accumulate sum rates; TDMA uses the same channel draw.
    """
    results = _run_ordered(lambda t: _rate_trial(cfg, t), range(cfg.trials), cfg.workers)
    kept = [r for r in results if r is not None]
    skipped = cfg.trials - len(kept)
    grid = np.asarray(cfg.snr_grid_db)
    snrs = 10.0 ** (grid / 10.0)
    report = LinkReport(snr_grid_db=grid, bound=capacity_bound(cfg.network.k_users, snrs))
    report.skipped_trials = skipped
    if not kept:
        return report
    ia = np.stack([r[0] for r in kept])
    td = np.stack([r[1] for r in kept])
    n = ia.shape[0]
    report.ia_mean = ia.mean(axis=0)
    report.tdma_mean = td.mean(axis=0)
    if n > 1:
        report.ia_stderr = ia.std(axis=0, ddof=1) / np.sqrt(n)
        report.tdma_stderr = td.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        report.ia_stderr = np.zeros(len(grid))
        report.tdma_stderr = np.zeros(len(grid))
    report.trials_used = np.full(len(grid), n)
    report.dof_slope = fit_dof_slope(grid, report.ia_mean)
    return report


def crossover_scan(report: LinkReport):
    """Smallest grid SNR where the aligned scheme beats TDMA, or None.

    Requires both curves' standard errors below 10% of the gap at that
    point, so a noisy crossing does not count.
    """
    if report.ia_mean is None or report.tdma_mean is None:
        return None
    for s, snr_db in enumerate(report.snr_grid_db):
        gap = report.ia_mean[s] - report.tdma_mean[s]
        if gap <= 0:
            continue
        if report.ia_stderr[s] < 0.1 * gap and report.tdma_stderr[s] < 0.1 * gap:
            return float(snr_db)
    return None


def effective_gains(net: EquivalentNetwork, solution: IASolution) -> np.ndarray:
    """Post-alignment channel gains g_i = (U_i' H_ii V_i)^2 / (U_i' Sigma_i U_i)."""
    k = net.k_users
    mv = np.einsum("jikt,it->jik", net.H, solution.V)
    diag = mv[np.arange(k), np.arange(k)]
    num = np.einsum("jk,jk->j", diag, solution.U) ** 2
    den = np.einsum("jk,jkl,jl->j", solution.U, net.noise_cov, solution.U)
    return num / den


def simulate_block_errors(net: EquivalentNetwork, solution: IASolution,
                          plan: LoadingPlan, n_blocks: int, rng,
                          noise_std: float = 1.0):
    """Transmit Gray-PAM blocks through the equivalent network and count errors.

    Returns (error_counts, bit_counts) per user.  Inactive users stay silent
    and accumulate no bits.
    """
    k = net.k_users
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    bits_by_user = [
        rng.integers(0, 2, size=(n_blocks, int(r))) for r in plan.rates
    ]
    symbols = pam_modulate(bits_by_user, plan, k_users=k)
    mv = np.einsum("jikt,it->jik", net.H, solution.V)
    received = np.einsum("jik,bi->bjk", mv, symbols)
    received = received + sample_branch_noise(net, noise_std, rng, draws=n_blocks)
    z = np.einsum("bjk,jk->bj", received, solution.U)
    errors = np.zeros(k, dtype=int)
    bits = np.zeros(k, dtype=int)
    for m, user in enumerate(plan.active):
        const = PamConstellation(2 ** int(plan.rates[m]))
        eff = float(solution.U[user] @ mv[user, user]) * np.sqrt(2.0 * plan.powers[m])
        got = pam_detect(z[:, user], eff, const)
        errors[user] = int((got != bits_by_user[m]).sum())
        bits[user] = got.size
    return errors, bits


def _ber_point(cfg: LinkConfig, s: int):
    k = cfg.network.k_users
    snr = 10.0 ** (cfg.snr_grid_db[s] / 10.0)
    total_rate = cfg.total_rate if cfg.total_rate is not None else 2 * k
    total_power = cfg.total_power if cfg.total_power is not None else k * snr
    errors = np.zeros(k, dtype=int)
    bits = np.zeros(k, dtype=int)
    trials_done = 0
    for trial in range(cfg.trial_cap):
        if errors.sum() >= cfg.min_errors:
            break
        chan = draw_channel(cfg.network, _rng(cfg.master_seed, 1, s, trial, 0))
        got = _aligned_network(cfg, chan, (1, s, trial, 1), snr, _BER_LEAKAGE_GATE)
        if got is None:
            continue
        net, solution = got
        gains = effective_gains(net, solution)
        loader = fh_loading if cfg.loading == "fh" else uniform_loading
        try:
            plan = loader(gains, total_rate, total_power)
        except InfeasibleRate:
            return None
        e, b = simulate_block_errors(
            net, solution, plan, cfg.blocks_per_trial,
            _rng(cfg.master_seed, 1, s, trial, 2), cfg.noise_std,
        )
        errors += e
        bits += b
        trials_done += 1
    return errors, bits, trials_done


def ber_sweep(cfg: LinkConfig) -> LinkReport:
    """Uncoded BER of the full transmit/align/filter/detect chain versus SNR.

    Per grid point, trials accumulate until at least ``min_errors`` total bit
    errors or the trial cap; each trial requires a solver leakage below the
    gate (resampling phases otherwise).  Infeasible loading skips the point
    (its counts stay zero).
    """
    results = _run_ordered(lambda s: _ber_point(cfg, s), range(len(cfg.snr_grid_db)), cfg.workers)
    grid = np.asarray(cfg.snr_grid_db)
    k = cfg.network.k_users
    errors = np.zeros((len(grid), k), dtype=int)
    bits = np.zeros((len(grid), k), dtype=int)
    trials_used = np.zeros(len(grid), dtype=int)
    for s, res in enumerate(results):
        if res is None:
            continue
        errors[s], bits[s], trials_used[s] = res
    with np.errstate(invalid="ignore", divide="ignore"):
        ber = np.where(bits > 0, errors / np.maximum(bits, 1), np.nan)
    return LinkReport(
        snr_grid_db=grid,
        ber=ber,
        bit_counts=bits,
        error_counts=errors,
        trials_used=trials_used,
        loading=cfg.loading,
    )
