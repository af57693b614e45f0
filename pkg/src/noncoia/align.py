"""Interference-alignment solvers over an equivalent network.

Closed form for 3 users (eigenvector of the chained cross-channel matrix),
alternating interference-leakage minimization for any K, and max-SINR with
colored branch noise.  All solvers are deterministic functions of their
inputs; alignment scalars in the 3-user chain are fixed to 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import EquivalentNetwork
from .errors import DegenerateAlignment, NoRealAlignment

# Sine-of-angle floor below which desired and interference directions are
# considered inseparable at a receiver.
EPS_DEG = 1e-6
_COND_LIMIT = 1e8


@dataclass(frozen=True, eq=False)
class IASolution:
    """Unit-norm precoders V[i] (2-vectors) and receive filters U[j]."""

    V: np.ndarray
    U: np.ndarray
    solver_tag: str
    leakage: float
    iterations_used: int
    leakage_history: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class AlignmentReport:
    """Diagnostics of the 3-user closed-form chain.

    E, F, G are the chained cross-channel matrices (scalars fixed to 1);
    eigenpair_used records which eigenvector of E was selected; residuals
    hold the sine of the angle between the two interference vectors at each
    receiver (zero means perfect alignment).
    """

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    eigenpair_used: tuple
    residuals: np.ndarray


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def _cross2(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def leakage_of(net: EquivalentNetwork, V: np.ndarray, U: np.ndarray) -> float:
    """Normalized residual interference power after filtering.

    sum_j sum_{i != j} (U_j' H_ji V_i)^2 over sum_j sum_{i != j} |H_ji V_i|^2.
    Zero iff every cross link is perfectly aligned and zero-forced.
    """
    mv = np.einsum("jikt,it->jik", net.H, np.asarray(V, dtype=float))
    proj = np.einsum("jik,jk->ji", mv, np.asarray(U, dtype=float))
    power = (mv**2).sum(axis=2)
    k = net.k_users
    off = ~np.eye(k, dtype=bool)
    num = float((proj[off] ** 2).sum())
    den = float(power[off].sum())
    if den == 0.0:
        return 0.0  # interference-free network: nothing to leak
    return num / den


def alignment_precoders(net: EquivalentNetwork):
    """Precoders of the 3-user closed-form chain, without receive filters.

    Returns (V, report) where V has shape (3, 2).  V[0] is the selected unit
    eigenvector of E (largest-magnitude real eigenvalue; ties broken toward
    the lexicographically larger first component); V[1] and V[2] follow from
    the alignment chain.  Raises NoRealAlignment for complex eigenvalues and
    DegenerateAlignment for ill-conditioned cross matrices.
    """
    if net.k_users != 3 or net.H.shape[2] != 2:
        raise ValueError("closed-form solver needs K = 3 with 2 branches")
    H = net.H
    cross = [H[0, 1], H[0, 2], H[1, 0], H[1, 2], H[2, 0], H[2, 1]]
    if max(np.linalg.cond(m) for m in cross) > _COND_LIMIT:
        raise DegenerateAlignment("ill-conditioned cross channel matrix")
    inv = np.linalg.inv
    E = inv(H[2, 0]) @ H[2, 1] @ inv(H[0, 1]) @ H[0, 2] @ inv(H[1, 2]) @ H[1, 0]
    F = inv(H[2, 1]) @ H[2, 0]
    G = inv(H[1, 2]) @ H[1, 0]

    eigvals, eigvecs = np.linalg.eig(E)
    if np.iscomplexobj(eigvals) and np.max(np.abs(eigvals.imag)) > 0.0:
        raise NoRealAlignment("complex eigenvalues of the alignment matrix")
    eigvals = eigvals.real
    eigvecs = eigvecs.real
    cands = [_canonical_sign(_unit(eigvecs[:, m])) for m in range(2)]
    if abs(eigvals[0]) > abs(eigvals[1]):
        chosen = 0
    elif abs(eigvals[1]) > abs(eigvals[0]):
        chosen = 1
    else:
        chosen = 0 if tuple(cands[0]) >= tuple(cands[1]) else 1

    V = np.empty((3, 2))
    V[0] = cands[chosen]
    V[1] = _canonical_sign(_unit(F @ V[0]))
    V[2] = _canonical_sign(_unit(G @ V[0]))

    residuals = np.empty(3)
    for j in range(3):
        p, q = [i for i in range(3) if i != j]
        a = H[j, p] @ V[p]
        b = H[j, q] @ V[q]
        residuals[j] = abs(_cross2(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))

    report = AlignmentReport(E, F, G, (chosen, float(eigvals[chosen])), residuals)
    return V, report


def closed_form_ia3(net: EquivalentNetwork):
    """Closed-form 3-user alignment with zero-forcing receive filters.

    U[j] is the unit vector orthogonal to the aligned interference direction
    at receiver j (the minimal filter proving separability).  Raises
    DegenerateAlignment when the desired direction falls within EPS_DEG of
    the interference direction at any receiver.
    """
    V, report = alignment_precoders(net)
    H = net.H
    U = np.empty((3, 2))
    for j in range(3):
        p, q = [i for i in range(3) if i != j]
        a = H[j, p] @ V[p]
        b = H[j, q] @ V[q]
        # Dominant direction of the (nearly rank-1) interference pair.
        left, _, _ = np.linalg.svd(np.column_stack([a, b]))
        interf_dir = left[:, 0]
        desired = H[j, j] @ V[j]
        sin_sep = abs(_cross2(desired, interf_dir)) / np.linalg.norm(desired)
        if sin_sep < EPS_DEG:
            raise DegenerateAlignment(
                f"desired direction within {EPS_DEG} of interference at receiver {j}"
            )
        U[j] = _canonical_sign(np.array([-interf_dir[1], interf_dir[0]]))
    solution = IASolution(V, U, "closed3", leakage_of(net, V, U), 0)
    return solution, report


@dataclass(frozen=True, eq=False)
class DiagonalityReport:
    """Zero-entry analysis of the closed-form precoders (the negative result)."""

    alignment: AlignmentReport
    precoders: np.ndarray
    min_abs_entries: np.ndarray
    has_zero_entry: bool


def diagonality_report(net, zero_tol: float = 1e-12) -> DiagonalityReport:
    """Check whether every closed-form precoder has a (numerically) zero entry.

    Accepts an EquivalentNetwork or raw per-pair matrices of shape (3, 3, 2, 2).
    Diagonal equivalent channels force axis-aligned eigenvectors, i.e. every
    transmitter silent in one channel use.
    """
    if not isinstance(net, EquivalentNetwork):
        net = EquivalentNetwork.from_pair_matrices(net)
    V, report = alignment_precoders(net)
    min_abs = np.abs(V).min(axis=1)
    return DiagonalityReport(report, V, min_abs, bool(np.all(min_abs < zero_tol)))


def _interference_covariances(H: np.ndarray, V: np.ndarray):
    """Per-receiver covariance of interfering directions, plus H_ji V_i."""
    k = H.shape[0]
    mv = np.einsum("jikt,it->jik", H, V)
    cov = np.einsum("jik,jil->jkl", mv, mv)
    diag = mv[np.arange(k), np.arange(k)]
    cov -= np.einsum("jk,jl->jkl", diag, diag)
    return cov, mv


def _reverse_covariances(H: np.ndarray, U: np.ndarray):
    """Reciprocal-network interference covariances (channels transposed)."""
    k = H.shape[0]
    g = np.einsum("jikt,jk->jit", H, U)       # H[j,i]^T U[j]
    cov = np.einsum("jit,jis->its", g, g)
    diag = g[np.arange(k), np.arange(k)]
    cov -= np.einsum("it,is->its", diag, diag)
    return cov, g


def _alternating_run(H, V0, budget, tol):
    """Alternating leakage minimization from one starting point.

    Returns (V, U, history, iterations, converged).  History holds the raw
    objective sum (U_j' H_ji V_i)^2 after every half-iteration; each half
    step exactly minimizes it, so the sequence is non-increasing.
    """
    k = H.shape[0]
    off = ~np.eye(k, dtype=bool)
    V = V0.copy()
    U = np.zeros((k, H.shape[2]))
    U[:, 0] = 1.0
    history = []
    iterations = 0
    converged = False

    def record(value):
        # Each half step minimizes the objective exactly, so a non-decrease
        # can only be rounding jitter on a stagnated plateau: drop the value
        # and stop iterating there.
        if history and value >= history[-1]:
            return True
        history.append(value)
        return False

    for iterations in range(1, budget + 1):
        cov, mv = _interference_covariances(H, V)
        _, vecs = np.linalg.eigh(cov)
        U = vecs[:, :, 0]
        proj = np.einsum("jik,jk->ji", mv, U)
        if record(float((proj[off] ** 2).sum())):
            break

        rcov, g = _reverse_covariances(H, U)
        _, rvecs = np.linalg.eigh(rcov)
        V = rvecs[:, :, 0]
        proj = np.einsum("jit,it->ji", g, V)
        raw = float((proj[off] ** 2).sum())
        if record(raw):
            break

        mv = np.einsum("jikt,it->jik", H, V)
        den = float(((mv**2).sum(axis=2))[off].sum())
        if raw / den < tol:
            converged = True
            break
    return V, U, history, iterations, converged


def _newton_polish(H, V, max_steps: int = 40):
    """Drive the per-receiver alignment determinants to zero by Newton steps.

    Alignment means the K-1 interference vectors at each receiver are
    linearly dependent, i.e. det[H_ji v(t_i)]_{i != j} = 0 for all j with
    V_i = (cos t_i, sin t_i).  Returns (V, U) with zero-forcing filters from
    the least singular direction of the interference stack, or None when the
    damped iteration fails to converge from this starting point.
    """
    k = H.shape[0]
    idx = [[i for i in range(k) if i != j] for j in range(k)]
    t = np.arctan2(V[:, 1], V[:, 0])

    def residuals(t_):
        vt = np.stack([np.cos(t_), np.sin(t_)], axis=1)
        mv = np.einsum("jikt,it->jik", H, vt)
        f = np.empty(k)
        scale = np.empty(k)
        for j in range(k):
            m = mv[j, idx[j]].T
            f[j] = np.linalg.det(m)
            scale[j] = max(float(np.prod(np.linalg.norm(m, axis=0))), 1e-300)
        return f, scale, mv

    f, scale, mv = residuals(t)
    for _ in range(max_steps):
        if np.all(np.abs(f) <= 1e-14 * scale):
            break
        dv = np.stack([-np.sin(t), np.cos(t)], axis=1)
        dmv = np.einsum("jikt,it->jik", H, dv)
        jac = np.zeros((k, k))
        for j in range(k):
            m = mv[j, idx[j]].T
            for c, i in enumerate(idx[j]):
                mc = m.copy()
                mc[:, c] = dmv[j, i]
                jac[j, i] = np.linalg.det(mc)
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        cost = float(np.sum((f / scale) ** 2))
        for _ in range(20):
            f_new, scale_new, mv_new = residuals(t + lam * step)
            if float(np.sum((f_new / scale_new) ** 2)) < cost:
                t = t + lam * step
                f, scale, mv = f_new, scale_new, mv_new
                break
            lam *= 0.5
        else:
            return None
    if not np.all(np.abs(f) <= 1e-12 * scale):
        return None
    vt = np.stack([np.cos(t), np.sin(t)], axis=1)
    vt = np.array([_canonical_sign(v) for v in vt])
    mv = np.einsum("jikt,it->jik", H, vt)
    u = np.empty((k, H.shape[2]))
    for j in range(k):
        left, _, _ = np.linalg.svd(mv[j, idx[j]].T)
        u[j] = _canonical_sign(left[:, -1])
    return vt, u


def desired_ratio(H, V, U) -> float:
    """Smallest |U_j' H_jj V_j| / |H_jj V_j| over receivers (0 = silent link)."""
    k = H.shape[0]
    mv = np.einsum("jikt,it->jik", H, V)
    diag = mv[np.arange(k), np.arange(k)]
    num = np.abs(np.einsum("jk,jk->j", diag, U))
    den = np.linalg.norm(diag, axis=1)
    return float((num / den).min())


# Deterministic restart schedule: starting angles for V_i = (cos a, sin a).
# The spec start (1, 0) comes first; for K >= 4 it sits on the degenerate
# zero-leakage fixed point that also nulls the desired links, which the
# silence check below detects and discards after one cheap iteration.
_INIT_ANGLES = (0.0, np.pi / 4, np.pi / 8, 3 * np.pi / 8, np.pi / 3, np.pi / 6)
_SILENT_RATIO = 1e-6


def min_leakage_solve(
    net: EquivalentNetwork,
    max_iters: int = 20000,
    tol: float = 1e-12,
    burn_in: int = 1500,
    polish: bool = True,
    restarts: int = 4,
) -> IASolution:
    """Alternating interference-leakage minimization with Newton polish.

    Each attempt starts from a fixed angle of the restart schedule and
    alternates: (a) U_j <- least eigenvector of the interference covariance
    Q_j = sum_{i != j} H_ji V_i V_i' H_ji'; (b) in the reciprocal network
    (every H transposed, V and U swapped) the same update for the precoders.
    Attempts that stall after ``burn_in`` iterations are handed to the
    Newton polish on the alignment determinants; solutions whose leakage is
    above ``tol`` or that null a desired link trigger the next restart.
    ``max_iters`` caps the total alternating iterations across restarts.

    The recorded leakage history is the raw alternating objective of the
    returned attempt (non-increasing across half-iterations; the polished
    value is appended only when it improves on the last entry).  The
    reported leakage is the normalized form.  Non-convergence is reported
    via the leakage value, never as an error.
    """
    H = net.H
    k = net.k_users
    best = None  # (silent_flag, leakage, V, U, history, iterations)
    total_iters = 0
    attempts = max(restarts + 1, 1)
    for attempt in range(attempts):
        if total_iters >= max_iters:
            break
        angle = _INIT_ANGLES[attempt % len(_INIT_ANGLES)]
        V0 = np.tile([np.cos(angle), np.sin(angle)], (k, 1))
        budget = max_iters - total_iters
        if polish:
            budget = min(budget, burn_in)
        V, U, history, used, converged = _alternating_run(H, V0, budget, tol)
        total_iters += used
        if polish and not converged:
            candidates = [_newton_polish(H, V)]
            # The fixed-angle basin may miss every useful root; retry the
            # polish from a deterministic batch of spread-out starts.
            retry_rng = np.random.default_rng(1000 + attempt)
            for _ in range(4):
                t0 = retry_rng.uniform(0.0, np.pi, k)
                candidates.append(
                    _newton_polish(H, np.stack([np.cos(t0), np.sin(t0)], axis=1))
                )
            for polished in candidates:
                if polished is None:
                    continue
                Vp, Up = polished
                if desired_ratio(H, Vp, Up) < _SILENT_RATIO:
                    continue
                leak_raw = _raw_leakage(H, Vp, Up)
                if not history or leak_raw < history[-1]:
                    V, U = Vp, Up
                    history.append(leak_raw)
                    break
        leak = leakage_of(net, V, U)
        silent = desired_ratio(H, V, U) < _SILENT_RATIO
        cand = (silent, leak, V, U, history, total_iters)
        if best is None or (cand[0], cand[1]) < (best[0], best[1]):
            best = cand
        if not silent and leak < tol:
            break
    silent, leak, V, U, history, iterations = best
    return IASolution(V, U, "leakage", leak, iterations, np.array(history))


def _raw_leakage(H, V, U) -> float:
    k = H.shape[0]
    off = ~np.eye(k, dtype=bool)
    mv = np.einsum("jikt,it->jik", H, V)
    proj = np.einsum("jik,jk->ji", mv, U)
    return float((proj[off] ** 2).sum())


def max_sinr_solve(
    net: EquivalentNetwork,
    snr: float,
    max_iters: int = 200,
    noise_var: float = 1.0,
) -> IASolution:
    """Alternating max-SINR filters under colored branch noise.

    U[j] is proportional to B_j^{-1} H_jj V_j with B_j the interference-plus-
    noise covariance (symbol energy 2*snr spread over the 2-use block, noise
    term noise_var * Sigma_j); the precoders get the mirror-image update in
    the reciprocal network with white 2-dimensional noise.  Runs a fixed
    iteration count; no convergence guarantee is claimed.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    H = net.H
    k = net.k_users
    es = 2.0 * snr
    V = np.tile(np.array([1.0, 0.0]), (k, 1))
    U = np.empty((k, net.branches))
    eye_rev = np.eye(2)
    for _ in range(max_iters):
        cov, mv = _interference_covariances(H, V)
        B = es * cov + noise_var * net.noise_cov
        diag = mv[np.arange(k), np.arange(k)]
        U = _batch_solve_normalize(B, diag)

        rcov, g = _reverse_covariances(H, U)
        Brev = es * rcov + noise_var * eye_rev[None, :, :]
        gdiag = g[np.arange(k), np.arange(k)]
        V = _batch_solve_normalize(Brev, gdiag)
    leak = leakage_of(net, V, U)
    return IASolution(V, U, "maxsinr", leak, max_iters)


def _batch_solve_normalize(mats: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve mats[m] x = rhs[m] per row and normalize; regularize if singular."""
    try:
        sol = np.linalg.solve(mats, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        reg = mats + 1e-12 * np.eye(mats.shape[-1])[None, :, :]
        sol = np.linalg.solve(reg, rhs[..., None])[..., 0]
    return sol / np.linalg.norm(sol, axis=1, keepdims=True)
