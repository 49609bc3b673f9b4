"""Root system of type A_{d-1}, its Weyl group and the Plancherel proxy.

Vectors of the Cartan subalgebra and covectors of its dual are both stored in
the trace-zero chart of R^d.  The pairing between them is the Euclidean dot
product, which is the trace form ``<X, Y> = tr(XY)``.  With this convention
every root ``e_i - e_j`` has squared length 2 and is its own coroot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidArgument, InvalidDimension, InvalidRoot, OutOfRange

__all__ = [
    "ChamberVector",
    "SpectralParameter",
    "RootDatum",
    "build_root_datum",
    "pair_coroot",
    "weyl_apply",
    "weyl_compose",
    "weyl_orbit",
    "beta_tilde",
    "is_regular",
    "MAX_DIMENSION",
]

MAX_DIMENSION = 8
SUM_TOL = 1e-12

RootLike = Union[tuple, Sequence[float], np.ndarray]


def _frozen(a) -> np.ndarray:
    arr = np.array(a)
    arr.setflags(write=False)
    return arr


def _check_trace_zero(values: np.ndarray, what: str) -> None:
    scale = max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    if abs(complex(values.sum())) > SUM_TOL * scale * max(1, values.size):
        raise InvalidArgument(f"{what} coordinates must sum to zero", sum=float(abs(values.sum())))


@dataclass(frozen=True)
class ChamberVector:
    """A point of the Cartan subalgebra, as trace-zero coordinates.

    Parameters
    ----------
    coords : sequence of float
        The diagonal entries ``X_1, ..., X_d``.  Their sum must vanish to
        within ``1e-12`` (scaled by the magnitude of the entries).
    """

    coords: tuple

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=float).ravel()
        if arr.size < 2:
            raise InvalidDimension("a chamber vector needs at least two coordinates")
        _check_trace_zero(arr, "chamber vector")
        object.__setattr__(self, "coords", tuple(float(x) for x in arr))

    @classmethod
    def project(cls, values: Iterable[float]) -> "ChamberVector":
        """Orthogonal projection of an arbitrary vector onto the trace-zero plane."""
        arr = np.asarray(list(values), dtype=float)
        return cls(tuple(arr - arr.mean()))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @property
    def d(self) -> int:
        return len(self.coords)

    def norm2(self) -> float:
        return float(np.linalg.norm(self.array))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.array)))

    def in_closed_chamber(self, tol: float = 0.0) -> bool:
        """Weakly decreasing coordinates, up to ``tol``."""
        a = self.array
        return bool(np.all(a[:-1] - a[1:] >= -tol))

    def dot(self, other) -> float:
        return float(np.dot(self.array, _as_real(other)))

    def __len__(self) -> int:
        return len(self.coords)


def _as_real(v) -> np.ndarray:
    if isinstance(v, ChamberVector):
        return v.array
    return np.asarray(v, dtype=float)


def _as_complex(v) -> np.ndarray:
    if isinstance(v, SpectralParameter):
        return v.value
    if isinstance(v, ChamberVector):
        return v.array.astype(complex)
    return np.asarray(v, dtype=complex)


@dataclass(frozen=True)
class SpectralParameter:
    """A complex covector ``re + i*im`` in the trace-zero chart."""

    re: tuple
    im: tuple

    def __post_init__(self):
        re = np.asarray(self.re, dtype=float).ravel()
        im = np.asarray(self.im, dtype=float).ravel()
        if re.shape != im.shape:
            raise InvalidArgument("real and imaginary parts must have the same length")
        _check_trace_zero(re, "real part of spectral parameter")
        _check_trace_zero(im, "imaginary part of spectral parameter")
        object.__setattr__(self, "re", tuple(float(x) for x in re))
        object.__setattr__(self, "im", tuple(float(x) for x in im))

    @classmethod
    def from_complex(cls, values) -> "SpectralParameter":
        arr = np.asarray(values, dtype=complex).ravel()
        return cls(tuple(arr.real), tuple(arr.imag))

    @classmethod
    def imaginary(cls, values) -> "SpectralParameter":
        """The tempered parameter ``i * values``."""
        arr = np.asarray(values, dtype=float).ravel()
        return cls(tuple(np.zeros_like(arr)), tuple(arr))

    @property
    def value(self) -> np.ndarray:
        return np.asarray(self.re) + 1j * np.asarray(self.im)

    @property
    def d(self) -> int:
        return len(self.re)

    def is_tempered(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.re)) <= tol)

    def is_regular(self, c: float = 1e-6) -> bool:
        return is_regular(self, c)

    def __len__(self) -> int:
        return len(self.re)


@dataclass(frozen=True, eq=False)
class RootDatum:
    """Positive roots, simple roots, rho, fundamental weights and Weyl group."""

    d: int
    root_pairs: tuple
    positive_roots: np.ndarray
    simple_roots: np.ndarray
    coroots: np.ndarray
    rho: np.ndarray
    fundamental_weights: np.ndarray
    weyl: tuple = field(repr=False)

    @property
    def n_positive(self) -> int:
        return len(self.root_pairs)

    @property
    def simple_pairs(self) -> tuple:
        return tuple((i, i + 1) for i in range(self.d - 1))

    def root_index(self, alpha) -> int:
        """Index of ``alpha`` in ``positive_roots``; ``alpha`` is a pair or covector."""
        if isinstance(alpha, tuple) and len(alpha) == 2 and all(isinstance(k, (int, np.integer)) for k in alpha):
            try:
                return self.root_pairs.index((int(alpha[0]), int(alpha[1])))
            except ValueError:
                raise InvalidRoot(f"{alpha} is not a positive root pair for d={self.d}") from None
        vec = np.asarray(alpha, dtype=float)
        if vec.shape != (self.d,):
            raise InvalidRoot("root covector has the wrong length")
        hits = np.where(np.all(np.abs(self.positive_roots - vec) < 1e-12, axis=1))[0]
        if hits.size != 1:
            raise InvalidRoot(f"{vec.tolist()} is not a positive root")
        return int(hits[0])


def _signature(p: Sequence[int]) -> int:
    p = list(p)
    sign = 1
    seen = [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def build_root_datum(d: int) -> RootDatum:
    """Root datum of ``SL_d(R)`` with respect to the diagonal Cartan subalgebra.

    Parameters
    ----------
    d : int
        Matrix size, ``2 <= d <= 8``.  Larger values are refused because the
        Weyl group is stored as an explicit list of permutations.

    Returns
    -------
    RootDatum
        ``rho`` has coordinates ``((d-1)/2, (d-3)/2, ..., -(d-1)/2)``.
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidDimension(f"d must be an integer >= 2, got {d!r}")
    if d > MAX_DIMENSION:
        raise InvalidDimension(f"d={d} exceeds the supported ceiling {MAX_DIMENSION}")
    d = int(d)
    eye = np.eye(d)
    pairs = tuple((i, j) for i in range(d) for j in range(i + 1, d))
    roots = np.array([eye[i] - eye[j] for i, j in pairs])
    simple = np.array([eye[i] - eye[i + 1] for i in range(d - 1)])
    rho = 0.5 * roots.sum(axis=0)
    weights = []
    for i in range(1, d):
        w = np.zeros(d)
        w[:i] = 1.0
        weights.append(w - i / d)
    weyl = tuple((p, _signature(p)) for p in permutations(range(d)))
    return RootDatum(
        d=d,
        root_pairs=pairs,
        positive_roots=_frozen(roots),
        simple_roots=_frozen(simple),
        coroots=_frozen(roots.copy()),
        rho=_frozen(rho),
        fundamental_weights=_frozen(np.array(weights)),
        weyl=weyl,
    )


def pair_coroot(lam, alpha, datum: RootDatum | None = None) -> complex:
    """``<lam, alpha^vee>`` for a positive root ``alpha = e_i - e_j``."""
    values = _as_complex(lam)
    datum = datum or build_root_datum(values.size)
    idx = datum.root_index(alpha)
    i, j = datum.root_pairs[idx]
    return complex(values[i] - values[j])


def weyl_apply(w: Sequence[int], v):
    """Apply the permutation ``w`` to a vector or covector.

    Coordinate ``i`` of ``v`` moves to position ``w[i]``.  The return type
    follows the input: ``ChamberVector``, ``SpectralParameter`` or array.
    """
    perm = np.asarray(w, dtype=int)
    if isinstance(v, ChamberVector):
        out = np.empty(v.d)
        out[perm] = v.array
        return ChamberVector(tuple(out))
    if isinstance(v, SpectralParameter):
        out = np.empty(v.d, dtype=complex)
        out[perm] = v.value
        return SpectralParameter.from_complex(out)
    arr = np.asarray(v)
    out = np.empty_like(arr)
    out[..., perm] = arr
    return out


def weyl_compose(w1: Sequence[int], w2: Sequence[int]) -> tuple:
    """The permutation acting as ``w1`` after ``w2``."""
    return tuple(int(w1[k]) for k in w2)


def weyl_orbit(v, datum: RootDatum | None = None, decimals: int = 12) -> list:
    """Distinct elements of the Weyl orbit of an array-like vector."""
    arr = np.asarray(v)
    datum = datum or build_root_datum(arr.shape[-1])
    seen, orbit = set(), []
    for perm, _ in datum.weyl:
        image = weyl_apply(perm, arr)
        key = tuple(np.round(np.atleast_1d(image), decimals).tolist())
        if key not in seen:
            seen.add(key)
            orbit.append(image)
    return orbit


def is_regular(lam, c: float = 1e-6) -> bool:
    """True when ``|<lam, alpha^vee>| >= c`` for every positive root."""
    values = _as_complex(lam)
    diffs = values[:, None] - values[None, :]
    iu = np.triu_indices(values.size, 1)
    return bool(np.all(np.abs(diffs[iu]) >= c))


def beta_tilde(t: float, lam) -> float:
    """The product ``prod_{alpha > 0} (t + |<lam, alpha^vee>|)`` for ``t >= 1``."""
    if t < 1:
        raise OutOfRange(f"beta_tilde needs t >= 1, got {t}")
    values = _as_complex(lam)
    iu = np.triu_indices(values.size, 1)
    diffs = np.abs(values[:, None] - values[None, :])[iu]
    return float(np.prod(t + diffs))
