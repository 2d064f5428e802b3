"""Dual-polarization 4D constellations: generation, I/O, moments, energy levels.

A constellation is a set of M points in R^4, read as two complex symbols
(s_x = d1 + j*d2, s_y = d3 + j*d4). Everything downstream (NLI model, AIR
engine, optimizer) consumes either the raw points or the statistics computed
here.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ConstellationFormatError, EmptyCatalogSlotError

__all__ = [
    "Constellation4D",
    "MomentSet",
    "EnergyProfile",
    "normalize_unit_energy",
    "pm_from_2d",
    "generate_qam",
    "load_constellation",
    "load_2d",
    "save_constellation",
    "moments",
    "energy_levels",
    "catalog",
    "get_format",
    "CatalogEntry",
]


@dataclass
class Constellation4D:
    """M x 4 real-valued constellation with a text label.

    Attributes
    ----------
    points : ndarray
        Shape (M, 4), finite, no two rows identical.
    name : str
        Human-readable label carried through reports.
    """

    points: np.ndarray
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 4:
            raise ConfigError(f"expected an (M, 4) point array, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise ConfigError("a constellation needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ConfigError("constellation contains non-finite coordinates")
        if _min_pairwise_distance(pts) == 0.0:
            raise ConfigError("constellation contains duplicate points")
        self.points = pts

    @property
    def M(self) -> int:
        return self.points.shape[0]

    @property
    def bits(self) -> float:
        """log2(M), bits per 4D symbol at uniform input."""
        return float(np.log2(self.M))

    def sx(self) -> np.ndarray:
        return self.points[:, 0] + 1j * self.points[:, 1]

    def sy(self) -> np.ndarray:
        return self.points[:, 2] + 1j * self.points[:, 3]

    def energies(self) -> np.ndarray:
        """Per-point 4D symbol energies."""
        return np.sum(self.points**2, axis=1)

    def mean_energy(self) -> float:
        return float(np.mean(self.energies()))


@dataclass(frozen=True)
class MomentSet:
    """Uniform-average statistics of a unit-energy constellation.

    mu2_x/mu2_y are the per-polarization shares of the mean 4D energy and sum
    to 1. phi/psi are the excess-kurtosis and sixth-order terms of each
    polarization's complex symbol:

        phi_p = E|s_p|^4 / E|s_p|^2^2 - 2
        psi_p = E|s_p|^6 / E|s_p|^2^3 - 9 E|s_p|^4 / E|s_p|^2^2 + 12

    xpol4 is the normalized cross-polarization intensity correlation,
    zero for any product format. pseudo_x/pseudo_y and xcorr capture
    non-circularity and complex cross-correlation; they are reported but
    carry no weight in the bundled NLI model.
    """

    mu2_x: float
    mu2_y: float
    phi_x: float
    phi_y: float
    psi_x: float
    psi_y: float
    xpol4: float
    pseudo_x: float
    pseudo_y: float
    xcorr: tuple  # (|E[sx conj(sy)]|, |E[sx sy]|), both / sqrt(E|sx|^2 E|sy|^2)


@dataclass(frozen=True)
class EnergyProfile:
    """Clustered 4D energy levels of a unit-energy constellation."""

    levels: tuple  # ((energy, multiplicity), ...) sorted by energy
    tolerance: float

    @property
    def count(self) -> int:
        return len(self.levels)


def _min_pairwise_distance(pts: np.ndarray) -> float:
    m = pts.shape[0]
    if m > 2048:
        # chunked to bound the (M, M) distance matrix memory
        best = np.inf
        for i in range(0, m, 512):
            block = pts[i : i + 512]
            d2 = np.sum((block[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
            rows = np.arange(block.shape[0])
            d2[rows, i + rows] = np.inf
            best = min(best, float(np.sqrt(d2.min())))
        return best
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def min_distance(C: Constellation4D) -> float:
    """Minimum pairwise 4D Euclidean distance."""
    return _min_pairwise_distance(C.points)


def normalize_unit_energy(C: Constellation4D) -> Constellation4D:
    """Rescale so the mean 4D symbol energy is 1.

    Pure scaling, geometry untouched. Normalizing an already-normalized
    constellation returns the points unchanged, so the operation is
    idempotent bit-for-bit.
    """
    mean = C.mean_energy()
    if mean == 0.0:
        raise ConfigError("cannot normalize an all-zero constellation")
    if abs(mean - 1.0) < 1e-13:
        return Constellation4D(C.points.copy(), name=C.name)
    return Constellation4D(C.points / np.sqrt(mean), name=C.name)


def pm_from_2d(q: Sequence[complex], name: str = "") -> Constellation4D:
    """Cartesian product of a 2D constellation with itself.

    Produces the polarization-multiplexed 4D format: every ordered pair
    (q_a, q_b) becomes one point with s_x = q_a, s_y = q_b, so M = K^2.
    """
    q = np.asarray(q, dtype=complex).ravel()
    if q.size < 2:
        raise ConfigError("need at least 2 distinct 2D points")
    if np.unique(q).size != q.size:
        raise ConfigError("2D constellation has duplicate points")
    a = np.repeat(q, q.size)
    b = np.tile(q, q.size)
    pts = np.column_stack([a.real, a.imag, b.real, b.imag])
    return Constellation4D(pts, name=name)


def generate_qam(order: int) -> np.ndarray:
    """Standard QAM constellation as complex points, unit mean energy.

    Square grids for 4/16/64, the 6x6-minus-corners cross for 32, and a
    4x2 rectangular grid for 8 (see the catalog for a two-ring variant).
    """
    if order == 4:
        q = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
    elif order == 8:
        re = np.array([-3.0, -1.0, 1.0, 3.0])
        q = (re[:, None] + 1j * np.array([-1.0, 1.0])[None, :]).ravel()
    elif order in (16, 64):
        side = int(np.sqrt(order))
        axis = np.arange(-(side - 1), side, 2, dtype=float)
        q = (axis[:, None] + 1j * axis[None, :]).ravel()
    elif order == 32:
        axis = np.arange(-5.0, 7.0, 2.0)
        q = (axis[:, None] + 1j * axis[None, :]).ravel()
        q = q[np.abs(q.real * q.imag) != 25.0]  # drop the four corners
    else:
        raise ConfigError(f"unsupported QAM order {order}; choose 4, 8, 16, 32 or 64")
    return q / np.sqrt(np.mean(np.abs(q) ** 2))


def circular_8qam() -> np.ndarray:
    """Two-ring 8QAM: inner QPSK plus an outer QPSK rotated 45 degrees."""
    r2 = 1.0 + np.sqrt(3.0)
    inner = np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4)))
    outer = r2 * np.exp(1j * (np.pi / 2 * np.arange(4)))
    q = np.concatenate([inner, outer])
    return q / np.sqrt(np.mean(np.abs(q) ** 2))


def _parse_rows(path) -> tuple[np.ndarray, int]:
    """Read the `M N` header plus M rows of N floats; returns (points, N)."""
    text = Path(path).read_text()
    header = None
    rows = []
    row_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 2:
                raise ConstellationFormatError(
                    f"header must be 'M N', got {len(tokens)} tokens", line=lineno
                )
            try:
                header = (int(tokens[0]), int(tokens[1]))
            except ValueError:
                raise ConstellationFormatError(
                    f"header values must be integers, got {tokens!r}", line=lineno
                ) from None
            if header[1] not in (2, 4):
                raise ConstellationFormatError(
                    f"dimension N must be 2 or 4, got {header[1]}", line=lineno
                )
            if header[0] < 2:
                raise ConstellationFormatError(
                    f"cardinality M must be at least 2, got {header[0]}", line=lineno
                )
            continue
        if len(tokens) != header[1]:
            raise ConstellationFormatError(
                f"expected {header[1]} columns, got {len(tokens)}", line=lineno
            )
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            raise ConstellationFormatError(
                f"non-numeric value in row: {line!r}", line=lineno
            ) from None
        row_lines.append(lineno)
        if len(rows) > header[0]:
            raise ConstellationFormatError(
                f"more than the {header[0]} rows announced in the header", line=lineno
            )
    if header is None:
        raise ConstellationFormatError("file has no header line")
    if len(rows) != header[0]:
        raise ConstellationFormatError(
            f"header announced {header[0]} rows but file has {len(rows)}"
        )
    pts = np.array(rows, dtype=float)
    # duplicate detection names both offending lines
    order = np.lexsort(pts.T[::-1])
    for a, b in zip(order[:-1], order[1:]):
        if np.array_equal(pts[a], pts[b]):
            first, second = sorted((row_lines[a], row_lines[b]))
            raise ConstellationFormatError(
                f"duplicate of the point on line {first}", line=second
            )
    return pts, header[1]


def load_constellation(path) -> Constellation4D:
    """Load a 4D constellation from the plain-text format.

    Line 1 is `M 4`, then M rows of 4 whitespace-separated floats.
    `#` lines are comments. Points are returned exactly as stored, not
    normalized; call normalize_unit_energy when needed.
    """
    pts, n = _parse_rows(path)
    if n != 4:
        raise ConstellationFormatError(
            "file holds 2D points; load them with load_2d and expand via pm_from_2d"
        )
    return Constellation4D(pts, name=Path(path).stem)


def load_2d(path) -> np.ndarray:
    """Load a 2D constellation (header `M 2`) as complex points."""
    pts, n = _parse_rows(path)
    if n != 2:
        raise ConstellationFormatError("file holds 4D points; use load_constellation")
    return pts[:, 0] + 1j * pts[:, 1]


def save_constellation(C: Constellation4D, path) -> None:
    """Write a constellation in the plain-text format with full precision."""
    lines = [f"# {C.name}" if C.name else "#", f"{C.M} 4"]
    for row in C.points:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def moments(C: Constellation4D) -> MomentSet:
    """Compute the moment statistics used by the NLI model.

    The constellation is normalized to unit mean energy internally, so the
    result only depends on the geometry.
    """
    Cn = normalize_unit_energy(C)
    sx, sy = Cn.sx(), Cn.sy()
    ex = float(np.mean(np.abs(sx) ** 2))
    ey = float(np.mean(np.abs(sy) ** 2))

    def kur_terms(s, e):
        if e == 0.0:
            return 0.0, 0.0
        k4 = float(np.mean(np.abs(s) ** 4)) / e**2
        k6 = float(np.mean(np.abs(s) ** 6)) / e**3
        return k4 - 2.0, k6 - 9.0 * k4 + 12.0

    phi_x, psi_x = kur_terms(sx, ex)
    phi_y, psi_y = kur_terms(sy, ey)
    if ex > 0.0 and ey > 0.0:
        xpol4 = float(np.mean(np.abs(sx) ** 2 * np.abs(sy) ** 2)) / (ex * ey) - 1.0
        norm = np.sqrt(ex * ey)
        xcorr = (
            float(np.abs(np.mean(sx * np.conj(sy)))) / norm,
            float(np.abs(np.mean(sx * sy))) / norm,
        )
    else:
        xpol4 = 0.0
        xcorr = (0.0, 0.0)
    pseudo_x = float(np.abs(np.mean(sx**2))) / ex if ex > 0.0 else 0.0
    pseudo_y = float(np.abs(np.mean(sy**2))) / ey if ey > 0.0 else 0.0
    return MomentSet(
        mu2_x=ex,
        mu2_y=ey,
        phi_x=phi_x,
        phi_y=phi_y,
        psi_x=psi_x,
        psi_y=psi_y,
        xpol4=xpol4,
        pseudo_x=pseudo_x,
        pseudo_y=pseudo_y,
        xcorr=xcorr,
    )


def energy_levels(C: Constellation4D, tol: float = 0.02) -> EnergyProfile:
    """Cluster the sorted point energies by single linkage with gap `tol`.

    Adjacent clusters are merged until every pair of neighboring level
    centers is separated by more than `tol`, so the profile invariant holds
    even for stragglers inside a wide cluster.
    """
    if tol <= 0:
        raise ConfigError("clustering tolerance must be positive")
    e = np.sort(normalize_unit_energy(C).energies())
    clusters = []
    start = 0
    for i in range(1, e.size):
        if e[i] - e[i - 1] > tol:
            clusters.append(e[start:i])
            start = i
    clusters.append(e[start:])
    merged = [clusters[0]]
    for c in clusters[1:]:
        if float(np.mean(c)) - float(np.mean(merged[-1])) <= tol:
            merged[-1] = np.concatenate([merged[-1], c])
        else:
            merged.append(c)
    levels = tuple((float(np.mean(c)), int(c.size)) for c in merged)
    return EnergyProfile(levels=levels, tolerance=tol)


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    loader: Callable[[], Constellation4D] = field(repr=False)
    bundled: bool = True
    aliases: tuple = ()


def _data_file(filename: str):
    return importlib.resources.files("fibershaper.data").joinpath(filename)


def _bundled(filename: str, name: str) -> Constellation4D:
    with importlib.resources.as_file(_data_file(filename)) as p:
        C = load_constellation(p)
    C.name = name
    return C


def _empty_slot(name: str):
    def loader() -> Constellation4D:
        raise EmptyCatalogSlotError(
            f"catalog slot '{name}' has no bundled coordinates; obtain the "
            f"published point set and load it with load_constellation()"
        )

    return loader


def _pm(order: int, name: str, gen=generate_qam) -> Callable[[], Constellation4D]:
    return lambda: normalize_unit_energy(pm_from_2d(gen(order), name=name))


_CATALOG = [
    CatalogEntry(
        "pm-qpsk",
        "QPSK in each polarization, M=16, constant modulus",
        _pm(4, "pm-qpsk"),
    ),
    CatalogEntry(
        "pm-8qam",
        "rectangular 8QAM (4x2 grid) in each polarization, M=64",
        _pm(8, "pm-8qam"),
    ),
    CatalogEntry(
        "pm-8qam-circ",
        "two-ring 8QAM in each polarization, M=64",
        lambda: normalize_unit_energy(
            pm_from_2d(circular_8qam(), name="pm-8qam-circ")
        ),
    ),
    CatalogEntry(
        "pm-16qam",
        "square 16QAM in each polarization, M=256",
        _pm(16, "pm-16qam"),
    ),
    CatalogEntry(
        "prs64",
        "constant-modulus polarization-ring-switched format, M=64 "
        "(constructed in-repo, see data file header)",
        lambda: normalize_unit_energy(_bundled("prs64.txt", "prs64")),
        aliases=("4d-64prs",),
    ),
    CatalogEntry(
        "w4_64",
        "64-point 4D packing; coordinates not bundled",
        _empty_slot("w4_64"),
        bundled=False,
    ),
    CatalogEntry(
        "l4_128",
        "128-point 4D packing; coordinates not bundled",
        _empty_slot("l4_128"),
        bundled=False,
    ),
    CatalogEntry(
        "w4_256",
        "256-point 4D packing; coordinates not bundled",
        _empty_slot("w4_256"),
        bundled=False,
    ),
    CatalogEntry(
        "a4_512",
        "512-point 4D packing; coordinates not bundled",
        _empty_slot("a4_512"),
        bundled=False,
    ),
]


def catalog() -> dict:
    """Name -> CatalogEntry for every known format slot."""
    return {entry.name: entry for entry in _CATALOG}


def get_format(name: str) -> Constellation4D:
    """Resolve a catalog name (or alias) to a unit-energy constellation."""
    table = catalog()
    key = name.lower()
    if key not in table:
        for entry in table.values():
            if key in entry.aliases:
                key = entry.name
                break
        else:
            known = ", ".join(sorted(table))
            raise ConfigError(f"unknown format '{name}'; catalog has: {known}")
    return normalize_unit_energy(table[key].loader())
