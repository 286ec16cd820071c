"""Numerical foundations: complex quadrature, Gaussian integrals, seeded RNG.

Complex numbers are Python's builtin ``complex`` (or ``numpy.complex128``
inside arrays); nothing here needs a custom complex type.
"""

from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "QuadratureError",
    "QuadratureSpec",
    "integrate_complex",
    "gaussian_integral",
    "gaussian_norm_sq",
    "gaussian_overlap_analytic",
    "RngStream",
    "rng_uniform",
    "uniform_at",
    "splitmix64",
]


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7/15) quadrature
# ---------------------------------------------------------------------------

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# 15 abscissae on [-1, 1]; Gauss nodes are the odd-indexed Kronrod nodes.
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[:-1][::-1]])
_KWEIGHTS = np.concatenate([_WK[:-1], [_WK[-1]], _WK[:-1][::-1]])
_GWEIGHTS = np.zeros(15)
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]
_GWEIGHTS[[13, 11, 9]] = _WG[:3]

_INITIAL_PANELS = 16


@dataclass(frozen=True)
class QuadratureSpec:
    lower: float
    upper: float
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise DomainError("quadrature bounds must be finite")
        if not self.lower < self.upper:
            raise DomainError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")

    @classmethod
    def around(cls, center: float, width: float, n_widths: float = 12.0,
               **kwargs) -> "QuadratureSpec":
        """Window of ``center +/- n_widths * width`` (Gaussian tails truncated)."""
        return cls(center - n_widths * width, center + n_widths * width, **kwargs)

    @classmethod
    def covering(cls, intervals, **kwargs) -> "QuadratureSpec":
        """Smallest window containing every ``(lo, hi)`` pair given."""
        lows, highs = zip(*intervals)
        return cls(min(lows), max(highs), **kwargs)


def _eval(f, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=complex)
        if y.shape == x.shape:
            return y
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(float(xi))) for xi in x])


def _gk15(f, a: float, b: float) -> tuple[complex, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = _eval(f, mid + half * _NODES)
    if not np.all(np.isfinite(y)):
        raise DomainError(f"integrand not finite on [{a}, {b}]")
    k = half * complex(np.dot(_KWEIGHTS, y))
    g = half * complex(np.dot(_GWEIGHTS, y))
    return k, abs(k - g)


def integrate_complex(f: Callable, spec: QuadratureSpec) -> complex:
    """Integrate a complex-valued function of one real variable.

    Globally adaptive Gauss-Kronrod 7/15: the panel with the largest error
    estimate is bisected until the summed estimate falls below
    ``max(abs_tol, rel_tol * |result|)``.

    ``f`` should accept a numpy array of abscissae; scalar-only callables
    are evaluated pointwise.

    Raises
    ------
    QuadratureError
        If the tolerance is not met within ``spec.max_subdivisions`` bisections.
    """
    edges = np.linspace(spec.lower, spec.upper, _INITIAL_PANELS + 1)
    heap: list[tuple[float, int, float, float, complex]] = []
    total = 0j
    err = 0.0
    counter = 0
    for a, b in zip(edges[:-1], edges[1:]):
        val, e = _gk15(f, float(a), float(b))
        heapq.heappush(heap, (-e, counter, float(a), float(b), val))
        counter += 1
        total += val
        err += e

    for _ in range(spec.max_subdivisions):
        if err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return total
        neg_e, _, a, b, val = heapq.heappop(heap)
        total -= val
        err += neg_e
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            v, e = _gk15(f, lo, hi)
            heapq.heappush(heap, (-e, counter, lo, hi, v))
            counter += 1
            total += v
            err += e
        # re-sum occasionally to stop drift in the running totals
        if counter % 256 == 0:
            total = sum(item[4] for item in heap)
            err = sum(-item[0] for item in heap)

    if err <= max(spec.abs_tol, spec.rel_tol * abs(total)):
        return total
    raise QuadratureError(
        f"no convergence after {spec.max_subdivisions} subdivisions: "
        f"estimate {total!r}, error {err:.3g}"
    )


# ---------------------------------------------------------------------------
# Closed-form Gaussian integrals
# ---------------------------------------------------------------------------

def gaussian_integral(a: complex, b: complex = 0.0, c: complex = 0.0) -> complex:
    """Exact value of the integral of ``exp(-a z**2 + b z + c)`` over the real line.

    Requires ``Re(a) > 0``; the principal square root is then the right branch.
    """
    a = complex(a)
    if not a.real > 0:
        raise DomainError(f"Re(a) must be positive, got {a}")
    return cmath.sqrt(math.pi / a) * cmath.exp(b * b / (4 * a) + c)


def _log_norm_sq(a: complex, b: complex, c: complex) -> float:
    ra = a.real
    return 0.5 * math.log(math.pi / (2 * ra)) + b.real ** 2 / (2 * ra) + 2 * c.real


def gaussian_norm_sq(a: complex, b: complex = 0.0, c: complex = 0.0) -> float:
    """Squared L2 norm of ``exp(-a z**2 + b z + c)`` on the real line."""
    a, b, c = complex(a), complex(b), complex(c)
    if not a.real > 0:
        raise DomainError(f"Re(a) must be positive, got {a}")
    return math.exp(_log_norm_sq(a, b, c))


def _as_quadratic(center: complex, w: complex, k: float) -> tuple[complex, complex, complex]:
    # -w (z - c)^2 + i k z  ->  -a z^2 + b z + c0
    return w, 2 * w * center + 1j * k, -w * center * center


def gaussian_overlap_analytic(c1: complex, c2: complex, w1: complex, w2: complex,
                              k1: float = 0.0, k2: float = 0.0) -> complex:
    """Overlap <g1|g2> of two unit-normalized Gaussians.

    ``g_j(z) = N_j exp(-w_j (z - c_j)**2 + 1j * k_j * z)`` with ``N_j > 0``
    chosen so that each ``g_j`` has unit norm.
    """
    c1, c2, w1, w2 = complex(c1), complex(c2), complex(w1), complex(w2)
    if not (w1.real > 0 and w2.real > 0):
        raise DomainError("inverse widths must have positive real part")
    if (c1, w1, k1) == (c2, w2, k2):
        return 1.0 + 0j
    a1, b1, g1 = _as_quadratic(c1, w1, k1)
    a2, b2, g2 = _as_quadratic(c2, w2, k2)
    a = a1.conjugate() + a2
    b = b1.conjugate() + b2
    g = g1.conjugate() + g2
    log_val = (0.5 * cmath.log(math.pi / a) + b * b / (4 * a) + g
               - 0.5 * _log_norm_sq(a1, b1, g1) - 0.5 * _log_norm_sq(a2, b2, g2))
    if log_val.real < -745:
        return 0j
    return cmath.exp(log_val)


# ---------------------------------------------------------------------------
# Counter-based SplitMix64 generator
# ---------------------------------------------------------------------------
#
# Output n of a stream is mix64(key + (n + 1) * GAMMA) mod 2**64, i.e. the
# SplitMix64 sequence (Steele, Lea & Flood 2014) started from ``key``. The key
# of stream (seed, stream_id) is mix64(seed) ^ mix64(mix64(stream_id) + STREAM_SALT).
# Doubles take the top 53 bits: (x >> 11) * 2**-53.

GAMMA = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
STREAM_SALT = 0x6A09E667F3BCC909
_MASK = (1 << 64) - 1


def splitmix64(x):
    """The SplitMix64 finalizer; works on ints and on uint64 arrays."""
    if isinstance(x, (np.ndarray, np.generic)):
        x = np.array(x, dtype=np.uint64)
        with np.errstate(over="ignore"):
            x ^= x >> np.uint64(30)
            x *= np.uint64(MIX1)
            x ^= x >> np.uint64(27)
            x *= np.uint64(MIX2)
            x ^= x >> np.uint64(31)
        return x
    x &= _MASK
    x = ((x ^ (x >> 30)) * MIX1) & _MASK
    x = ((x ^ (x >> 27)) * MIX2) & _MASK
    return x ^ (x >> 31)


def _stream_key(seed: int, stream_ids: np.ndarray) -> np.ndarray:
    sid = stream_ids.astype(np.uint64)
    with np.errstate(over="ignore"):
        inner = splitmix64(sid) + np.uint64(STREAM_SALT)
    seed_arr = np.full(sid.shape, seed & _MASK, dtype=np.uint64)
    return splitmix64(seed_arr) ^ splitmix64(inner)


def uniform_at(seed: int, stream_id, counter) -> np.ndarray:
    """Uniform doubles in [0, 1) at arbitrary (stream, position) coordinates.

    ``stream_id`` and ``counter`` broadcast against each other. This is the
    random-access view of :class:`RngStream`, used to vectorize many
    independent per-atom streams.
    """
    sid = np.asarray(stream_id, dtype=np.uint64)
    ctr = np.asarray(counter, dtype=np.uint64)
    key = _stream_key(int(seed), sid)
    with np.errstate(over="ignore"):
        x = key + (ctr + np.uint64(1)) * np.uint64(GAMMA)
    bits = splitmix64(np.asarray(x, dtype=np.uint64)) >> np.uint64(11)
    return bits.astype(np.float64) * 2.0 ** -53


@dataclass
class RngStream:
    """A reproducible stream of uniforms identified by ``(seed, stream_id)``.

    The stream keeps a cursor into its sequence; two streams built from the
    same pair produce the same values on every platform.
    """

    seed: int
    stream_id: int = 0
    position: int = field(default=0)

    def __post_init__(self):
        if self.stream_id < 0 or self.position < 0:
            raise DomainError("stream_id and position must be non-negative")
        self.seed = int(self.seed) & _MASK

    def uniforms(self, n: int) -> np.ndarray:
        out = uniform_at(self.seed, self.stream_id, np.arange(self.position, self.position + n))
        self.position += n
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int) -> np.ndarray:
        """Standard normals by Box-Muller; consumes ``2 * n`` uniforms."""
        u = self.uniforms(2 * n).reshape(n, 2)
        return box_muller(u[:, 0], u[:, 1])

    def spawn(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def box_muller(u1, u2):
    """Map two uniform arrays on [0, 1) to one standard normal array."""
    return np.sqrt(-2.0 * np.log1p(-np.asarray(u1))) * np.cos(2.0 * np.pi * np.asarray(u2))


def rng_uniform(stream: RngStream) -> float:
    """Draw the next uniform in [0, 1) from ``stream``."""
    return stream.uniform()
