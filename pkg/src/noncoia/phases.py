"""Rational-multiple-of-pi phase plans and exact irrationality certificates.

Transmit and receive carrier offsets are angles a*pi/b with integer a, b.
For such angles, t = 2*cos(angle) is an algebraic integer: it is a root of
a monic integer polynomial of degree b built from the recursion

    t_0 = 2,  t_1 = t,  t_n = t*t_{n-1} - t_{n-2},

because t_b evaluated at t = 2*cos(a*pi/b) equals 2*cos(a*pi) = 2*(-1)^a.
A monic integer polynomial has only integer or irrational roots, so checking
t against the integer divisors of the constant term yields an exact
certificate: either t equals a known integer (cosine is rational) or the
cosine is provably irrational.  The degenerate rational set is exactly
cos in {0, +-1/2, +-1}, i.e. reduced denominator b in {1, 2, 3}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError

# Cosine factors smaller than this destroy conditioning without meaning;
# the sampler rejects plans containing them.
EPS_COS = 1e-6

_CERTIFY_TOL = 1e-9


@dataclass(frozen=True)
class RationalAngle:
    """Angle num*pi/den, reduced so gcd(num, den) = 1 and 0 <= num < 2*den."""

    num: int
    den: int

    def __post_init__(self):
        if self.den == 0:
            raise ValueError("denominator must be nonzero")
        num, den = self.num, self.den
        if den < 0:
            num, den = -num, -den
        num %= 2 * den
        g = math.gcd(num, den)
        object.__setattr__(self, "num", num // g)
        object.__setattr__(self, "den", den // g)

    @property
    def radians(self) -> float:
        return math.pi * self.num / self.den

    def cos(self) -> float:
        return math.cos(self.radians)

    def __sub__(self, other: "RationalAngle") -> "RationalAngle":
        return RationalAngle(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def has_rational_cosine(self) -> bool:
        """Niven characterization: cos(a*pi/b) is rational iff b <= 3."""
        return self.den <= 3

    def rational_cosine(self) -> Fraction:
        if not self.has_rational_cosine():
            raise ValueError(f"cos({self.num}*pi/{self.den}) is irrational")
        return Fraction(round(2 * self.cos()), 2)

    def __str__(self) -> str:
        return f"{self.num}*pi/{self.den}"


ZERO_ANGLE = RationalAngle(0, 1)


@dataclass(frozen=True)
class PhasePlan:
    """Carrier offsets for K transmitters and K*(K-1) receiver branches.

    theta[i][tau] is the offset used by transmitter i in channel use tau;
    phi[j][k][tau] is the offset of branch k at receiver j in use tau.
    A certified plan guarantees every difference phi - theta entering the
    equivalent channel has an irrational cosine of magnitude >= EPS_COS.
    """

    theta: tuple
    phi: tuple
    certified: bool
    denominator_bound: int

    @property
    def k_users(self) -> int:
        return len(self.theta)

    @property
    def branches(self) -> int:
        return len(self.phi[0])

    def theta_radians(self) -> np.ndarray:
        return np.array([[t.radians for t in row] for row in self.theta])

    def phi_radians(self) -> np.ndarray:
        return np.array(
            [[[p.radians for p in branch] for branch in rx] for rx in self.phi]
        )

    def used_differences(self):
        """Yield (j, i, k, tau, phi - theta) for every factor in the channel."""
        for j in range(self.k_users):
            for i in range(self.k_users):
                for k in range(self.branches):
                    for tau in range(2):
                        yield j, i, k, tau, self.phi[j][k][tau] - self.theta[i][tau]


def check_phase_plan(plan: PhasePlan) -> bool:
    """True iff every used difference has an irrational cosine >= EPS_COS."""
    for _, _, _, _, delta in plan.used_differences():
        if delta.has_rational_cosine() or abs(delta.cos()) < EPS_COS:
            return False
    return True


@lru_cache(maxsize=8)
def _offset_pool(bound: int):
    """All reduced fractions (a, b) with b <= bound, 0 <= a < 2b."""
    pool = []
    for b in range(1, bound + 1):
        for a in range(0, 2 * b):
            if math.gcd(a, b) == 1:
                pool.append((a, b))
    return tuple(pool)


def _diff_admissible(a1: int, b1: int, a2: int, b2: int) -> bool:
    """Check (a1/b1 - a2/b2)*pi for irrational cosine and the EPS_COS floor."""
    d = b1 * b2
    n = (a1 * b2 - a2 * b1) % (2 * d)
    if d // math.gcd(n, d) <= 3:
        return False
    return abs(math.cos(math.pi * n / d)) >= EPS_COS


def sample_phase_plan(
    config,
    denominator_bound: int = 360,
    rng_seed=0,
    coherent_override: bool = False,
) -> PhasePlan:
    """Sample a certified phase plan, deterministic in the seed.

    ``config`` is either a NetworkConfig or a plain user count.  Transmitter
    offsets are drawn first; each receiver branch offset is then rejection
    sampled until its differences to all same-use transmitter offsets are
    admissible.  With ``coherent_override`` all offsets are zero and the plan
    is marked non-certified (control experiments only).
    """
    k = getattr(config, "k_users", config)
    if k < 3:
        raise ConfigurationError(f"need at least 3 users, got {k}")
    n_branches = k - 1

    if coherent_override:
        theta = tuple(tuple(ZERO_ANGLE for _ in range(2)) for _ in range(k))
        phi = tuple(
            tuple(tuple(ZERO_ANGLE for _ in range(2)) for _ in range(n_branches))
            for _ in range(k)
        )
        return PhasePlan(theta, phi, certified=False, denominator_bound=denominator_bound)

    if denominator_bound < 5:
        raise ConfigurationError(
            f"denominator_bound must be >= 5, got {denominator_bound}"
        )

    pool = _offset_pool(denominator_bound)
    rng = np.random.default_rng(rng_seed)

    for _ in range(64):
        theta_raw = [[pool[rng.integers(len(pool))] for _ in range(2)] for _ in range(k)]
        phi_raw = [[[None, None] for _ in range(n_branches)] for _ in range(k)]
        ok = True
        for j in range(k):
            for b in range(n_branches):
                for tau in range(2):
                    for _ in range(512):
                        a_p, b_p = pool[rng.integers(len(pool))]
                        if all(
                            _diff_admissible(a_p, b_p, *theta_raw[i][tau])
                            for i in range(k)
                        ):
                            phi_raw[j][b][tau] = (a_p, b_p)
                            break
                    else:
                        ok = False
                if not ok:
                    break
            if not ok:
                break
        if ok:
            theta = tuple(
                tuple(RationalAngle(a, b) for a, b in row) for row in theta_raw
            )
            phi = tuple(
                tuple(tuple(RationalAngle(a, b) for a, b in br) for br in rx)
                for rx in phi_raw
            )
            return PhasePlan(theta, phi, certified=True, denominator_bound=denominator_bound)

    raise ConfigurationError(
        f"could not sample a valid plan with denominator_bound={denominator_bound}"
    )


def mean_cos_squared(k_users: int, n_pairs: int, denominator_bound: int = 360, rng_seed=0) -> float:
    """Empirical mean of cos^2(phi - theta) over used pairs of sampled plans.

    Measures the average received-power factor of noncoherent demodulation;
    it converges to 1/2 (the coherent case would give exactly 1).
    """
    rng = np.random.default_rng(rng_seed)
    total = 0.0
    count = 0
    while count < n_pairs:
        plan = sample_phase_plan(
            k_users, denominator_bound, rng_seed=rng.integers(2**63)
        )
        diff = plan.phi_radians()[:, None, :, :] - plan.theta_radians()[None, :, None, :]
        c2 = np.cos(diff) ** 2
        total += float(c2.sum())
        count += c2.size
    return total / count


# ---------------------------------------------------------------------------
# Monic integer polynomials for t = 2*cos(a*pi/b)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CosinePolynomial:
    """Monic integer polynomial (descending coefficients) with root 2*cos(angle)."""

    angle: RationalAngle
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def eval_int(self, z: int) -> int:
        acc = 0
        for c in self.coeffs:
            acc = acc * z + c
        return acc

    def eval_float(self, x: float) -> float:
        """Evaluate at a float by exact rational Horner (no rounding noise).

        Plain float Horner loses ~1e-8 near the double roots at degree 24;
        exact arithmetic leaves only the error of the root argument itself.
        """
        acc = Fraction(0)
        fx = Fraction(x)
        for c in self.coeffs:
            acc = acc * fx + c
        return float(acc)


def cosine_min_poly(q: RationalAngle) -> CosinePolynomial:
    """Monic integer polynomial of degree b satisfied by t = 2*cos(a*pi/b).

    Uses the doubling-free recursion t_0 = 2, t_1 = t, t_n = t*t_{n-1} - t_{n-2}
    (each t_n is a monic integer polynomial in t with t_n(2*cos x) = 2*cos(n*x)),
    then subtracts the target value 2*(-1)^a of t_b at the root.
    """
    a, b = q.num, q.den
    prev = [2]      # ascending coefficients of t_0
    cur = [0, 1]    # t_1
    for _ in range(b - 1):
        shifted = [0] + cur                      # t * t_n
        nxt = [
            shifted[m] - (prev[m] if m < len(prev) else 0)
            for m in range(len(shifted))
        ]
        prev, cur = cur, nxt
    cur = cur[:]
    cur[0] -= 2 * (-1) ** a
    return CosinePolynomial(q, tuple(reversed(cur)))


def _divisors(n: int):
    n = abs(n)
    out = set()
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            out.update((d, -d, n // d, -(n // d)))
    return sorted(out)


def integer_roots(coeffs) -> list:
    """Integer roots of a monic integer polynomial via divisor enumeration."""
    coeffs = list(coeffs)
    roots = []
    # Strip t^m factors: 0 is a root iff the constant term vanishes.
    stripped = 0
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs.pop()
        stripped += 1
    if stripped:
        roots.append(0)
    if len(coeffs) > 1:
        for z in _divisors(coeffs[-1]):
            acc = 0
            for c in coeffs:
                acc = acc * z + c
            if acc == 0:
                roots.append(z)
    return sorted(roots)


@dataclass(frozen=True)
class CosineCertificate:
    angle: RationalAngle
    polynomial: CosinePolynomial
    is_irrational: bool
    rational_value: Fraction | None


def certify_irrational(q: RationalAngle) -> CosineCertificate:
    """Exact verdict on the rationality of cos(q).

    Builds the monic polynomial for t = 2*cos(q) and enumerates its integer
    roots (the only possible rational roots of a monic integer polynomial).
    If t sits on an integer root the cosine equals that integer over 2;
    otherwise the cosine is provably irrational.
    """
    poly = cosine_min_poly(q)
    t = 2.0 * q.cos()
    for z in integer_roots(poly.coeffs):
        if abs(t - z) < _CERTIFY_TOL:
            return CosineCertificate(q, poly, False, Fraction(z, 2))
    return CosineCertificate(q, poly, True, None)


# ---------------------------------------------------------------------------
# Exact polynomial helpers (Fraction arithmetic, small degrees only)
# ---------------------------------------------------------------------------


def _fpoly(coeffs):
    return [Fraction(c) for c in coeffs]


def _poly_trim(p):
    while len(p) > 1 and p[0] == 0:
        p = p[1:]
    return p


def poly_divmod(num, den):
    """Exact long division of descending-coefficient polynomials over Q."""
    num = _poly_trim(_fpoly(num))
    den = _poly_trim(_fpoly(den))
    if den == [Fraction(0)]:
        raise ZeroDivisionError("polynomial division by zero")
    if len(num) < len(den):
        return [Fraction(0)], num
    steps = len(num) - len(den) + 1
    quot = [Fraction(0)] * steps
    rem = num[:]
    for i in range(steps):
        factor = rem[i] / den[0]
        quot[i] = factor
        if factor != 0:
            for m in range(len(den)):
                rem[i + m] -= factor * den[m]
    return _poly_trim(quot), _poly_trim(rem[steps:] or [Fraction(0)])


def _poly_derivative(p):
    n = len(p) - 1
    if n == 0:
        return [Fraction(0)]
    return [c * (n - m) for m, c in enumerate(p[:-1])]


def _poly_gcd(a, b):
    a = _poly_trim(_fpoly(a))
    b = _poly_trim(_fpoly(b))
    while _poly_trim(b) != [Fraction(0)]:
        _, r = poly_divmod(a, b)
        a, b = b, r
    a = _poly_trim(a)
    return [c / a[0] for c in a]  # monic


def irrational_core(coeffs) -> tuple:
    """Square-free part of a monic integer polynomial with integer roots removed.

    Dividing out repeated factors and the obvious rational (integer-root)
    linear factors leaves the factor carrying the irrational roots, e.g.
    t^5 - 5t^3 + 5t + 2 reduces to t^2 - t - 1.
    """
    p = _fpoly(coeffs)
    g = _poly_gcd(p, _poly_derivative(p))
    sf, rem = poly_divmod(p, g)
    assert _poly_trim(rem) == [Fraction(0)]
    sf = [c / sf[0] for c in sf]
    int_sf = [int(c) for c in sf]
    if any(Fraction(i) != c for i, c in zip(int_sf, sf)):
        raise ValueError("square-free part is not integral")  # cannot happen: monic
    for z in integer_roots(int_sf):
        quot, rem = poly_divmod(int_sf, [1, -z])
        assert _poly_trim(rem) == [Fraction(0)]
        int_sf = [int(c) for c in quot]
    return tuple(int_sf)


# ---------------------------------------------------------------------------
# Moebius-transformation period check (the similarity-parameter device)
# ---------------------------------------------------------------------------


def mobius_period_check(p: int, a: int) -> bool:
    """True iff h(x) = 1 - 1/(sigma*x) with sigma = 4*cos^2(a*pi/p) has period p.

    The transformation is represented by M = [[sigma, -1], [sigma, 0]];
    periodicity of the iteration is equivalent to M^p being a scalar multiple
    of the identity.  Holds for every coprime pair (a, p), p >= 3.
    """
    if not 1 <= a < p:
        raise ValueError(f"need 1 <= a < p, got a={a}, p={p}")
    if math.gcd(a, p) != 1:
        raise ValueError(f"a={a} and p={p} must be coprime")
    sigma = 4.0 * math.cos(math.pi * a / p) ** 2
    if sigma < 1e-12:
        raise ConfigurationError("similarity parameter is degenerate (p = 2 case)")
    m = np.array([[sigma, -1.0], [sigma, 0.0]])
    mp = np.linalg.matrix_power(m, p)
    scale = np.linalg.norm(mp)
    off = max(abs(mp[0, 1]), abs(mp[1, 0]))
    diag_mismatch = abs(mp[0, 0] - mp[1, 1])
    return bool(off < 1e-9 * scale and diag_mismatch < 1e-9 * scale)


def reduced_fractions(max_den: int):
    """All RationalAngles a*pi/b with b <= max_den, ordered by (b, a)."""
    out = []
    for b in range(1, max_den + 1):
        for a in range(0, 2 * b):
            if math.gcd(a, b) == 1:
                out.append(RationalAngle(a, b))
    return out
