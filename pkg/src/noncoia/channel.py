"""Channel realizations and equivalent-channel builders.

Three equivalent models of a K-user single-antenna network under 2 symbol
extensions:

* naive extension -- per-pair 2x2 diagonal matrices diag(h1, h2);
* superposition   -- lower-triangular matrices from adding a scaled copy of
  the first received use onto the second, with one scaling factor per
  receiver (the inseparability constraint);
* noncoherent     -- the full (K-1)x2 matrices whose entries carry the
  cos(phi - theta) demodulation factors, plus the correlated branch-noise
  covariance produced by demodulating one noise waveform K-1 times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegeneratePhase
from .phases import EPS_COS, PhasePlan

EXTENSION = 2  # symbol extensions per block; the whole construction assumes 2


@dataclass(frozen=True, eq=False)
class NetworkConfig:
    """Static description of a (1x1)^K interference network.

    With 2 symbol extensions and N = K-1 artificial branches the equivalent
    network sits exactly on the alignment feasibility boundary
    N + 2 = (K+1)*1.
    """

    k_users: int
    channel_mode: str = "gaussian"
    deterministic_values: np.ndarray | None = None

    def __post_init__(self):
        if self.k_users < 3:
            raise ConfigurationError(f"need at least 3 users, got {self.k_users}")
        if self.channel_mode not in ("gaussian", "deterministic"):
            raise ConfigurationError(f"unknown channel mode {self.channel_mode!r}")
        if self.channel_mode == "deterministic":
            if self.deterministic_values is None:
                vals = np.ones((self.k_users, self.k_users, EXTENSION))
            else:
                vals = np.asarray(self.deterministic_values, dtype=float)
                vals = vals.reshape(self.k_users, self.k_users, EXTENSION)
            if not np.all(np.isfinite(vals)) or np.any(vals == 0.0):
                raise ConfigurationError(
                    "deterministic channel values must be finite and nonzero"
                )
            object.__setattr__(self, "deterministic_values", vals)
        elif self.deterministic_values is not None:
            raise ConfigurationError(
                "deterministic_values only allowed with channel_mode='deterministic'"
            )

    @property
    def branches(self) -> int:
        return self.k_users - 1


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Real channel scalars h[j, i, tau] for all K^2 links and 2 uses."""

    gains: np.ndarray

    @property
    def k_users(self) -> int:
        return self.gains.shape[0]


def draw_channel(config: NetworkConfig, rng_seed=0) -> ChannelRealization:
    """Draw one channel realization; identical seed gives identical output.

    Gaussian mode draws i.i.d. standard normal scalars (exact zeros are
    redrawn); deterministic mode copies the configured constants.
    """
    k = config.k_users
    if config.channel_mode == "deterministic":
        return ChannelRealization(config.deterministic_values.copy())
    rng = np.random.default_rng(rng_seed)
    gains = rng.standard_normal((k, k, EXTENSION))
    while np.any(gains == 0.0):
        mask = gains == 0.0
        gains[mask] = rng.standard_normal(int(mask.sum()))
    return ChannelRealization(gains)


def load_deterministic_values(path, k_users: int) -> np.ndarray:
    """Read K^2 lines of two reals (tau = 1, 2), row-major in j then i."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != EXTENSION:
                raise ConfigurationError(
                    f"expected {EXTENSION} values per line, got {len(parts)}"
                )
            rows.append([float(p) for p in parts])
    if len(rows) != k_users * k_users:
        raise ConfigurationError(
            f"expected {k_users * k_users} lines for K={k_users}, got {len(rows)}"
        )
    return np.array(rows).reshape(k_users, k_users, EXTENSION)


def naive_extension(real: ChannelRealization) -> np.ndarray:
    """Per-pair 2x2 diagonal equivalent matrices diag(h1, h2)."""
    k = real.k_users
    out = np.zeros((k, k, 2, 2))
    out[:, :, 0, 0] = real.gains[:, :, 0]
    out[:, :, 1, 1] = real.gains[:, :, 1]
    return out


def superposition_extension(real: ChannelRealization, lambdas) -> np.ndarray:
    """Per-pair lower-triangular matrices [[h1, 0], [lambda_j*h1, h2]].

    lambdas has one entry per receiver: the same scaling factor necessarily
    applies to every transmitter because the superimposed signal components
    cannot be separated before scaling.
    """
    k = real.k_users
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (k,):
        raise ValueError(f"lambdas must have shape ({k},)")
    out = np.zeros((k, k, 2, 2))
    out[:, :, 0, 0] = real.gains[:, :, 0]
    out[:, :, 1, 1] = real.gains[:, :, 1]
    out[:, :, 1, 0] = lambdas[:, None] * real.gains[:, :, 0]
    return out


@dataclass(frozen=True, eq=False)
class EquivalentNetwork:
    """Equivalent MIMO network: (K-1)x2 matrices plus branch-noise covariance.

    H[j, i] maps transmitter i's 2-vector onto receiver j's K-1 branches;
    noise_cov[j] is the branch-noise covariance Sigma with entries
    sum_tau cos(phi_k - phi_l) (diagonal exactly 2).  SNR-independent.
    """

    H: np.ndarray
    noise_cov: np.ndarray
    phase_plan: PhasePlan | None = field(default=None)

    @property
    def k_users(self) -> int:
        return self.H.shape[0]

    @property
    def branches(self) -> int:
        return self.H.shape[2]

    @classmethod
    def from_pair_matrices(cls, mats, noise_cov=None) -> "EquivalentNetwork":
        """Wrap hand-built per-pair matrices (e.g. naive or superposition).

        Without a phase plan the branch noise defaults to white (identity
        covariance), the coherent per-use model.
        """
        mats = np.asarray(mats, dtype=float)
        k, _, n, _ = mats.shape
        if noise_cov is None:
            noise_cov = np.broadcast_to(np.eye(n), (k, n, n)).copy()
        return cls(mats, np.asarray(noise_cov, dtype=float))


def build_equivalent_network(
    real: ChannelRealization, phases: PhasePlan
) -> EquivalentNetwork:
    """Assemble the noncoherent equivalent network for one realization.

    Entry rule: H[j, i, k, tau] = cos(phi[j, k, tau] - theta[i, tau]) * h[j, i, tau].
    Raises DegeneratePhase if any cosine factor falls below EPS_COS (the
    caller resamples the plan).
    """
    k = real.k_users
    if phases.k_users != k or phases.branches != k - 1:
        raise ConfigurationError(
            f"phase plan sized for K={phases.k_users}, channel has K={k}"
        )
    theta = phases.theta_radians()            # (K, 2)
    phi = phases.phi_radians()                # (K, K-1, 2)
    cosfac = np.cos(phi[:, None, :, :] - theta[None, :, None, :])  # (K, K, K-1, 2)
    if np.any(np.abs(cosfac) < EPS_COS):
        raise DegeneratePhase("cosine factor below degeneracy floor")
    H = cosfac * real.gains[:, :, None, :]
    noise_cov = np.cos(phi[:, :, None, :] - phi[:, None, :, :]).sum(axis=-1)
    return EquivalentNetwork(H, noise_cov, phases)


def sample_branch_noise(net: EquivalentNetwork, noise_std: float, rng, draws=None):
    """Draw branch-noise vectors whose covariance is noise_std^2 * Sigma.

    Each channel use carries an independent in-phase/quadrature noise pair;
    branch k sees sum_tau [nI_tau*cos(phi_k_tau) + nQ_tau*sin(phi_k_tau)],
    which reproduces the demodulate-one-waveform-many-times correlation.
    Returns shape (K, K-1), or (draws, K, K-1) when draws is given.
    """
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = 1 if draws is None else int(draws)
    k, nb = net.k_users, net.branches
    if net.phase_plan is not None:
        phi = net.phase_plan.phi_radians()    # (K, K-1, 2)
        n_i = noise_std * rng.standard_normal((n, k, EXTENSION))
        n_q = noise_std * rng.standard_normal((n, k, EXTENSION))
        out = np.einsum("djt,jkt->djk", n_i, np.cos(phi)) + np.einsum(
            "djt,jkt->djk", n_q, np.sin(phi)
        )
    else:
        # No plan attached: draw directly from the stored covariance.
        w, vecs = np.linalg.eigh(net.noise_cov)
        root = vecs * np.sqrt(np.clip(w, 0.0, None))[:, None, :]
        white = rng.standard_normal((n, k, nb))
        out = noise_std * np.einsum("jkl,djl->djk", root, white)
    return out[0] if draws is None else out
