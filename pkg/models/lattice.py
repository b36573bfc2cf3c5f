import os
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from utils.errors import CapacityError, ConfigurationError, LatticeInputError

logger = logging.getLogger(__name__)

# Desk-scale memory bound for codebook and list enumeration
DEFAULT_ENUM_CAP = 2 ** 20

CODEBOOKS = ("message", "quant")

# Slack (in quant-lattice units) on the lower edge of a list region
REGION_TOLERANCE = 1e-9


def enumeration_cap() -> int:
    """Returns the enumeration cap, overridable through LATTICE_RELAY_ENUM_CAP."""
    raw = os.environ.get("LATTICE_RELAY_ENUM_CAP")
    if not raw:
        return DEFAULT_ENUM_CAP
    try:
        cap = int(float(raw))
    except ValueError:
        logger.warning(f"Ignoring non-numeric LATTICE_RELAY_ENUM_CAP={raw!r}, using {DEFAULT_ENUM_CAP}")
        return DEFAULT_ENUM_CAP
    return max(cap, 1)


@dataclass(frozen=True)
class ScaledLattice:
    """
    The self-similar lattice a·Z^n with the half-open cube [-a/2, a/2)^n as
    fundamental region.

    Args:
        n: Dimension.
        a: Scale (side of the fundamental cube).
    """
    n: int
    a: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationError(f"Lattice dimension must be a positive integer, got {self.n}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ConfigurationError(f"Lattice scale must be positive and finite, got {self.a}")

    @property
    def volume(self) -> float:
        return float(self.a) ** self.n

    @property
    def second_moment(self) -> float:
        return float(self.a) ** 2 / 12.0


@dataclass(frozen=True)
class NestedChain:
    """
    Nested chain coarse ⊆ fine ⊆ quant built by integer refinement of a·Z^n.

    The fine (message) lattice has scale a/k1 and the quantization lattice
    has scale a/(k1·k2).
    """
    coarse: ScaledLattice
    k1: int
    k2: int

    def __post_init__(self):
        if int(self.k1) != self.k1 or self.k1 < 2:
            raise ConfigurationError(f"k1 must be an integer >= 2, got {self.k1}")
        if int(self.k2) != self.k2 or self.k2 < 1:
            raise ConfigurationError(f"k2 must be an integer >= 1, got {self.k2}")

    @property
    def n(self) -> int:
        return self.coarse.n

    @property
    def quant_radix(self) -> int:
        return self.k1 * self.k2

    @property
    def fine(self) -> ScaledLattice:
        return ScaledLattice(self.n, self.coarse.a / self.k1)

    @property
    def quant(self) -> ScaledLattice:
        return ScaledLattice(self.n, self.coarse.a / self.quant_radix)

    @property
    def rate(self) -> float:
        """Message rate R in bits per dimension."""
        return float(np.log2(self.k1))

    @property
    def quant_rate(self) -> float:
        """Rate Rq of Q_quant(.) mod coarse, bits per dimension."""
        return float(np.log2(self.quant_radix))

    @property
    def nesting_ratio(self) -> float:
        return (self.coarse.volume / self.fine.volume) ** (1.0 / self.n)

    @property
    def sigma2_quant(self) -> float:
        return self.quant.second_moment

    @property
    def list_size(self) -> int:
        return self.k2 ** self.n

    def radix(self, which: str) -> int:
        if which not in CODEBOOKS:
            raise LatticeInputError(f"Unknown codebook {which!r}; expected one of {CODEBOOKS}")
        return self.k1 if which == "message" else self.quant_radix

    def lattice(self, which: str) -> ScaledLattice:
        self.radix(which)
        return self.fine if which == "message" else self.quant


@dataclass(frozen=True)
class CodewordIndex:
    """
    Index of a coset representative: one digit in [0, k) per dimension.

    k is k1 for the message codebook and k1·k2 for the quantization codebook.
    """
    digits: Tuple[int, ...]
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise LatticeInputError(f"Radix must be positive, got {self.k}")
        if any(d < 0 or d >= self.k for d in self.digits):
            raise LatticeInputError(f"Digits {self.digits} out of range for radix {self.k}")

    def to_int(self) -> int:
        value = 0
        for d in self.digits:
            value = value * self.k + int(d)
        return value

    @classmethod
    def from_int(cls, value: int, n: int, k: int) -> "CodewordIndex":
        if value < 0 or value >= k ** n:
            raise LatticeInputError(f"Index {value} out of range for {k}^{n} codewords")
        digits = []
        for _ in range(n):
            value, d = divmod(value, k)
            digits.append(d)
        return cls(tuple(reversed(digits)), k)

    @classmethod
    def from_array(cls, digits: np.ndarray, k: int) -> "CodewordIndex":
        return cls(tuple(int(d) for d in np.asarray(digits).ravel()), k)


def _as_vector(lat: ScaledLattice, x) -> np.ndarray:
    """Validates shape (..., n) and finiteness, returns a float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != lat.n:
        raise LatticeInputError(f"Expected vectors of length {lat.n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LatticeInputError("Input vector contains non-finite values")
    return arr


def lattice_coordinates(lat: ScaledLattice, x) -> np.ndarray:
    """
    Integer coordinates m of the nearest lattice point a·m.

    Ties (x/a exactly half-integer) round toward +inf so that the mod output
    stays in the half-open cube [-a/2, a/2).
    """
    arr = _as_vector(lat, x)
    return np.floor(arr / lat.a + 0.5).astype(np.int64)


def nearest_point(lat: ScaledLattice, x) -> np.ndarray:
    """Nearest-neighbour quantizer Q(x) of a·Z^n."""
    return lat.a * lattice_coordinates(lat, x).astype(float)


def mod_lattice(lat: ScaledLattice, x) -> np.ndarray:
    """
    x mod lattice := x - Q(x), folded into [-a/2, a/2) componentwise.
    """
    arr = _as_vector(lat, x)
    half = lat.a / 2.0
    residual = arr - nearest_point(lat, arr)
    # floating point can land a hair outside the half-open cube
    residual = np.where(residual >= half, residual - lat.a, residual)
    residual = np.where(residual < -half, residual + lat.a, residual)
    return residual


def sample_dither(lat: ScaledLattice, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Dither uniform over the fundamental cube: iid U[-a/2, a/2) per component.

    Args:
        lat: Lattice whose fundamental region the dither covers.
        rng: Seeded numpy Generator.
        size: Optional number of independent dithers (rows).

    Returns:
        Array of shape (n,) or (size, n).
    """
    shape = (lat.n,) if size is None else (size, lat.n)
    half = lat.a / 2.0
    return rng.uniform(-half, half, size=shape)


def is_member(lat: ScaledLattice, x, tol: float = 1e-9) -> np.ndarray:
    """True where the vector(s) x lie on the lattice (coordinate tolerance tol)."""
    arr = _as_vector(lat, x)
    coords = arr / lat.a
    return np.all(np.abs(coords - np.round(coords)) <= tol, axis=-1)


def build_chain(n: int, k1: int, k2: int, power: float = 1.0) -> NestedChain:
    """
    Builds the chain a·Z^n ⊆ (a/k1)·Z^n ⊆ (a/(k1·k2))·Z^n with second moment
    of the coarse lattice equal to the transmit power.

    Args:
        n: Dimension (>= 1).
        k1: Message nesting factor (>= 2).
        k2: Quantization refinement factor (>= 1).
        power: Transmit power; the coarse scale is a = sqrt(12·power).

    Returns:
        The NestedChain.
    """
    if not np.isfinite(power) or power <= 0:
        raise ConfigurationError(f"Power must be positive, got {power}")
    chain = NestedChain(ScaledLattice(int(n), float(np.sqrt(12.0 * power))), int(k1), int(k2))
    logger.debug(f"Built chain n={chain.n} k1={chain.k1} k2={chain.k2} R={chain.rate:.3f} Rq={chain.quant_rate:.3f}")
    return chain


def centered_residue(m, k: int) -> np.ndarray:
    """Maps integers to their residue mod k in [-floor(k/2), k - 1 - floor(k/2)]."""
    m = np.asarray(m, dtype=np.int64)
    half = k // 2
    return np.mod(m + half, k) - half


def index_to_point(chain: NestedChain, index: CodewordIndex, which: str = "message") -> np.ndarray:
    """Coset representative in the coarse fundamental cube for a codeword index."""
    k = chain.radix(which)
    if index.k != k or len(index.digits) != chain.n:
        raise LatticeInputError(f"Index radix/length ({index.k}, {len(index.digits)}) does not match "
                                f"{which} codebook ({k}, {chain.n})")
    step = chain.coarse.a / k
    return centered_residue(np.array(index.digits), k).astype(float) * step


def point_to_index(chain: NestedChain, point, which: str = "message") -> CodewordIndex:
    """Index of the coset (point mod coarse) in the chosen codebook; point must lie on that lattice."""
    k = chain.radix(which)
    coords = lattice_coordinates(chain.lattice(which), point)
    return CodewordIndex.from_array(np.mod(coords, k), k)


def enumerate_codebook(chain: NestedChain, which: str = "message", cap: Optional[int] = None) -> np.ndarray:
    """
    All coset representatives of the chosen codebook inside [-a/2, a/2)^n.

    Row i is the point of CodewordIndex.from_int(i, n, k).

    Raises:
        CapacityError: if k^n exceeds the enumeration cap.
    """
    k = chain.radix(which)
    cap = enumeration_cap() if cap is None else cap
    size = k ** chain.n
    if size > cap:
        raise CapacityError(size, cap)
    digits = np.indices((k,) * chain.n).reshape(chain.n, -1).T
    step = chain.coarse.a / k
    return centered_residue(digits, k).astype(float) * step


def enumerate_fine_in_region(chain: NestedChain, center, cap: Optional[int] = None) -> np.ndarray:
    """
    Quantization-lattice points p with p - center in the fine cell V(fine),
    reduced mod the coarse lattice.

    Per dimension the admissible integer coordinates form the half-open
    interval [c/aq - k2/2, c/aq + k2/2), which holds exactly k2 integers, so
    the result always has k2^n rows.
    """
    quant = chain.quant
    c = _as_vector(quant, center)
    if c.ndim != 1:
        raise LatticeInputError(f"Region center must be a single vector, got shape {c.shape}")
    size = chain.list_size
    cap = enumeration_cap() if cap is None else cap
    if size > cap:
        raise CapacityError(size, cap)
    # centers on the quant lattice must not drift one cell up through rounding in c / aq
    low = np.ceil(c / quant.a - chain.k2 / 2.0 - REGION_TOLERANCE).astype(np.int64)
    offsets = np.indices((chain.k2,) * chain.n).reshape(chain.n, -1).T
    coords = low[np.newaxis, :] + offsets
    return centered_residue(coords, chain.quant_radix).astype(float) * quant.a
