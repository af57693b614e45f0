import numpy as np
import pytest

from noncoia.channel import (
    ChannelRealization,
    EquivalentNetwork,
    NetworkConfig,
    build_equivalent_network,
    draw_channel,
    load_deterministic_values,
    naive_extension,
    sample_branch_noise,
    superposition_extension,
)
from noncoia.errors import ConfigurationError, DegeneratePhase
from noncoia.phases import PhasePlan, RationalAngle, sample_phase_plan


def _plan_from_grids(theta_angles, phi_angles):
    """Build a PhasePlan out of nested RationalAngle lists (tests only)."""
    theta = tuple(tuple(row) for row in theta_angles)
    phi = tuple(tuple(tuple(branch) for branch in rx) for rx in phi_angles)
    return PhasePlan(theta, phi, certified=False, denominator_bound=360)


def _constant_plan(k, phi_angle, theta_angle=RationalAngle(0, 1)):
    return _plan_from_grids(
        [[theta_angle] * 2 for _ in range(k)],
        [[[phi_angle] * 2 for _ in range(k - 1)] for _ in range(k)],
    )


def test_network_config_validation():
    with pytest.raises(ConfigurationError):
        NetworkConfig(2)
    with pytest.raises(ConfigurationError):
        NetworkConfig(3, "rician")
    with pytest.raises(ConfigurationError):
        NetworkConfig(3, "gaussian", np.ones((3, 3, 2)))
    vals = np.ones((3, 3, 2))
    vals[1, 2, 0] = 0.0
    with pytest.raises(ConfigurationError):
        NetworkConfig(3, "deterministic", vals)
    cfg = NetworkConfig(4)
    assert cfg.branches == 3


def test_deterministic_defaults_to_all_ones():
    cfg = NetworkConfig(3, "deterministic")
    real = draw_channel(cfg, rng_seed=0)
    assert np.array_equal(real.gains, np.ones((3, 3, 2)))


def test_draw_channel_seed_determinism():
    cfg = NetworkConfig(3)
    a = draw_channel(cfg, rng_seed=99)
    b = draw_channel(cfg, rng_seed=99)
    assert np.array_equal(a.gains, b.gains)
    assert not np.array_equal(a.gains, draw_channel(cfg, rng_seed=100).gains)
    assert np.all(a.gains != 0.0)


def test_gaussian_statistics():
    # 500 draws of a 10-user network give 10^5 scalar samples.
    cfg = NetworkConfig(10)
    samples = np.concatenate(
        [draw_channel(cfg, rng_seed=s).gains.ravel() for s in range(500)]
    )
    assert samples.size == 100_000
    assert abs(samples.mean()) < 0.02
    assert abs(samples.var() - 1.0) < 0.05


def test_deterministic_values_file(tmp_path):
    path = tmp_path / "chan.txt"
    rows = ["# tau1 tau2"]
    rng = np.random.default_rng(1)
    vals = rng.uniform(0.5, 2.0, size=(9, 2))
    rows += [f"{a} {b}" for a, b in vals]
    path.write_text("\n".join(rows) + "\n")
    loaded = load_deterministic_values(path, 3)
    assert np.allclose(loaded, vals.reshape(3, 3, 2))
    cfg = NetworkConfig(3, "deterministic", loaded)
    assert np.allclose(draw_channel(cfg, 0).gains, loaded)
    with pytest.raises(ConfigurationError):
        load_deterministic_values(path, 4)


def test_naive_extension_shapes_and_values():
    gains = np.arange(1, 19, dtype=float).reshape(3, 3, 2)
    mats = naive_extension(ChannelRealization(gains))
    a, b = gains[1, 2]
    assert np.array_equal(mats[1, 2], [[a, 0.0], [0.0, b]])
    ones = naive_extension(ChannelRealization(np.ones((3, 3, 2))))
    assert np.array_equal(ones[0, 0], np.eye(2))


def test_naive_inverse_product_diagonal_oracle():
    # inv(diag(h1p, h2p)) @ diag(h1q, h2q) = diag(h1q/h1p, h2q/h2p)
    rng = np.random.default_rng(7)
    real = ChannelRealization(rng.standard_normal((3, 3, 2)))
    mats = naive_extension(real)
    for j in range(3):
        for p in range(3):
            for q in range(3):
                prod = np.linalg.inv(mats[j, p]) @ mats[j, q]
                expect = np.diag(real.gains[j, q] / real.gains[j, p])
                assert np.allclose(prod, expect, atol=1e-12)


def test_superposition_matches_naive_at_zero_lambda():
    rng = np.random.default_rng(3)
    real = ChannelRealization(rng.standard_normal((3, 3, 2)))
    assert np.array_equal(superposition_extension(real, np.zeros(3)), naive_extension(real))


def test_superposition_formula():
    gains = np.empty((3, 3, 2))
    gains[...] = [2.0, 4.0]
    mats = superposition_extension(ChannelRealization(gains), [3.0, 1.0, -1.0])
    assert np.array_equal(mats[0, 1], [[2.0, 0.0], [6.0, 4.0]])


def test_superposition_product_offdiagonal_cancels():
    rng = np.random.default_rng(11)
    for trial in range(50):
        real = ChannelRealization(rng.standard_normal((3, 3, 2)))
        lam = rng.uniform(0.2, 3.0, 3) * rng.choice([-1.0, 1.0], 3)
        mats = superposition_extension(real, lam)
        for j in range(3):
            for p in range(3):
                for q in range(3):
                    if p == j or q == j or p == q:
                        continue
                    prod = np.linalg.inv(mats[j, p]) @ mats[j, q]
                    assert abs(prod[0, 1]) < 1e-12
                    assert abs(prod[1, 0]) < 1e-12


def test_build_coherent_rows_and_noise_cov():
    real = ChannelRealization(np.random.default_rng(0).standard_normal((3, 3, 2)))
    net = build_equivalent_network(real, _constant_plan(3, RationalAngle(0, 1)))
    for j in range(3):
        for i in range(3):
            assert np.array_equal(net.H[j, i][0], real.gains[j, i])
            assert np.array_equal(net.H[j, i][1], real.gains[j, i])
    assert np.array_equal(net.noise_cov, np.full((3, 2, 2), 2.0))


def test_build_quarter_pi_scaling():
    real = ChannelRealization(np.random.default_rng(2).standard_normal((3, 3, 2)))
    net = build_equivalent_network(real, _constant_plan(3, RationalAngle(1, 4)))
    expect = (np.sqrt(2) / 2) * real.gains[:, :, None, :]
    assert np.allclose(net.H, np.broadcast_to(expect, net.H.shape), atol=1e-15)
    assert np.allclose(net.noise_cov, 2.0)


def test_build_reconstruction_and_scaling_factor():
    real = draw_channel(NetworkConfig(3), rng_seed=8)
    plan = sample_phase_plan(3, 360, rng_seed=21)
    net = build_equivalent_network(real, plan)
    theta = plan.theta_radians()
    phi = plan.phi_radians()
    for j in range(3):
        for i in range(3):
            for k in range(2):
                for tau in range(2):
                    cosfac = np.cos(phi[j, k, tau] - theta[i, tau])
                    ratio = net.H[j, i, k, tau] / real.gains[j, i, tau]
                    assert abs(ratio - cosfac) < 1e-14
            # the superposition scaling factor of the 2-branch construction
            lam = net.H[j, i, 1, 0] / net.H[j, i, 0, 0]
            expect = np.cos(phi[j, 1, 0] - theta[i, 0]) / np.cos(phi[j, 0, 0] - theta[i, 0])
            assert abs(lam - expect) < 1e-12


def test_noise_cov_symmetric_psd_diag_two():
    for seed in range(10):
        real = draw_channel(NetworkConfig(4), rng_seed=seed)
        net = build_equivalent_network(real, sample_phase_plan(4, 360, rng_seed=seed))
        for j in range(4):
            cov = net.noise_cov[j]
            assert np.array_equal(cov, cov.T)
            assert np.array_equal(np.diag(cov), np.full(3, 2.0))
            assert np.linalg.eigvalsh(cov).min() > -1e-10


def test_degenerate_phase_rejected():
    real = ChannelRealization(np.ones((3, 3, 2)))
    with pytest.raises(DegeneratePhase):
        build_equivalent_network(real, _constant_plan(3, RationalAngle(1, 2)))


def test_coherent_collapse_rank_one():
    vals = np.full((3, 3, 2), 1.3)  # h1 = h2
    net = build_equivalent_network(
        ChannelRealization(vals), _constant_plan(3, RationalAngle(1, 1), RationalAngle(1, 1))
    )
    for j in range(3):
        for i in range(3):
            assert np.array_equal(net.H[j, i][0], net.H[j, i][1])
            s = np.linalg.svd(net.H[j, i], compute_uv=False)
            assert s[1] < 1e-12


def test_branch_noise_coherent_and_zero():
    net = build_equivalent_network(ChannelRealization(np.ones((3, 3, 2))),
                                   _constant_plan(3, RationalAngle(0, 1)))
    draw = sample_branch_noise(net, 1.0, rng=0)
    assert draw.shape == (3, 2)
    for j in range(3):
        assert np.allclose(draw[j], draw[j][0])  # all branches identical
    zero = sample_branch_noise(net, 0.0, rng=0, draws=5)
    assert np.array_equal(zero, np.zeros((5, 3, 2)))


def test_branch_noise_covariance_monte_carlo():
    # A plan with clustered offsets keeps every covariance entry well away
    # from zero so the 1% relative check is statistically meaningful.
    k = 4
    phi = [[[RationalAngle(b + tau + 1, 24) for tau in range(2)] for b in range(k - 1)]
           for _ in range(k)]
    theta = [[RationalAngle(0, 1)] * 2 for _ in range(k)]
    plan = _plan_from_grids(theta, phi)
    net = build_equivalent_network(ChannelRealization(np.ones((k, k, 2))), plan)
    noise_std = 0.7
    draws = sample_branch_noise(net, noise_std, rng=123, draws=1_000_000)
    for j in range(k):
        emp = draws[:, j, :].T @ draws[:, j, :] / draws.shape[0]
        expect = noise_std**2 * net.noise_cov[j]
        assert np.all(np.abs(emp - expect) < 0.01 * np.abs(expect))


def test_from_pair_matrices_wraps_identity_noise():
    mats = naive_extension(ChannelRealization(np.ones((3, 3, 2))))
    net = EquivalentNetwork.from_pair_matrices(mats)
    assert net.phase_plan is None
    assert np.array_equal(net.noise_cov, np.broadcast_to(np.eye(2), (3, 2, 2)))
    noise = sample_branch_noise(net, 2.0, rng=5, draws=200_000)
    emp = np.einsum("djk,djl->jkl", noise, noise) / noise.shape[0]
    assert np.allclose(emp, 4.0 * np.eye(2), atol=0.05)
