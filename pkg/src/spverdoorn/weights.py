"""Distance-band, inverse-power spatial weights built from region centroids.

Raw weights are ``1 / d_ij**power`` for ``0 < d_ij <= cutoff_km`` and zero
otherwise; rows are then divided by their sums. Great-circle distances are
used throughout.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    AsymmetricWeightsError,
    DimensionMismatchError,
    DuplicateCoordinateError,
    IslandError,
    ValidationError,
)

__all__ = [
    "EARTH_RADIUS_KM",
    "Region",
    "SpatialWeights",
    "ConnectivityReport",
    "read_centroids",
    "haversine_distance",
    "distance_matrix",
    "build_weights",
    "connectivity_report",
    "save_weights",
    "load_weights",
]

EARTH_RADIUS_KM = 6371.0088
CENTROID_HEADER = ("region_id", "name", "lat", "lon")
WEIGHTS_FORMAT = "spverdoorn-weights"


@dataclass(frozen=True)
class Region:
    id: str
    name: str
    lat: float
    lon: float

    def __post_init__(self):
        if not self.id:
            raise ValidationError("region id must be non-empty")
        if not (math.isfinite(self.lat) and -90.0 <= self.lat <= 90.0):
            raise ValidationError(f"region {self.id!r}: latitude {self.lat} outside [-90, 90]")
        if not (math.isfinite(self.lon) and -180.0 <= self.lon <= 180.0):
            raise ValidationError(f"region {self.id!r}: longitude {self.lon} outside [-180, 180]")


def _check_unique(ids, what="region"):
    seen = set()
    for rid in ids:
        if rid in seen:
            raise ValidationError(f"duplicate {what} id {rid!r}")
        seen.add(rid)


def read_centroids(path) -> tuple[Region, ...]:
    """Read a ``region_id,name,lat,lon`` CSV into a tuple of regions."""
    path = Path(path)
    regions = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CENTROID_HEADER:
            raise ValidationError(
                f"{path}:1: expected header {','.join(CENTROID_HEADER)}, got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ValidationError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            rid, name, lat, lon = (c.strip() for c in row)
            try:
                regions.append(Region(rid, name, float(lat), float(lon)))
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
    try:
        _check_unique(r.id for r in regions)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return tuple(regions)


def haversine_distance(a: Region, b: Region) -> float:
    """Great-circle distance in kilometres between two region centroids."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlam = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def distance_matrix(regions) -> np.ndarray:
    n = len(regions)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = haversine_distance(regions[i], regions[j])
    return d


@dataclass(frozen=True, eq=False)
class SpatialWeights:
    """Row-standardized sparse weights in CSR layout.

    ``values`` hold the standardized ``w_ij`` and ``raw_values`` the
    pre-standardization ``W*_ij`` at the same positions. Island rows are
    empty.
    """

    ids: tuple
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    raw_values: np.ndarray
    cutoff_km: float
    power: float = 2.0
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("indptr", "indices", "values", "raw_values"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "_index", {rid: i for i, rid in enumerate(self.ids)})

    @property
    def n(self) -> int:
        return len(self.ids)

    def index_of(self, region_id) -> int:
        return self._index[region_id]

    def neighbor_counts(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def island_ids(self) -> tuple:
        counts = self.neighbor_counts()
        return tuple(rid for rid, c in zip(self.ids, counts) if c == 0)

    @property
    def rows(self) -> list[list[tuple[str, float]]]:
        """Per-region ``(neighbor id, w_ij)`` pairs."""
        out = []
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out.append([(self.ids[j], float(w)) for j, w in zip(self.indices[lo:hi], self.values[lo:hi])])
        return out

    @property
    def raw_rows(self) -> list[list[tuple[str, float]]]:
        out = []
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out.append(
                [(self.ids[j], float(w)) for j, w in zip(self.indices[lo:hi], self.raw_values[lo:hi])]
            )
        return out

    def dense(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.neighbor_counts())
        w[rows, self.indices] = self.values
        return w

    def dense_raw(self) -> np.ndarray:
        w = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.neighbor_counts())
        w[rows, self.indices] = self.raw_values
        return w

    def lag(self, x) -> np.ndarray:
        """Spatial lag ``W x`` (``x`` may be a vector or an n-row matrix)."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.n:
            raise DimensionMismatchError(f"vector of length {x.shape[0]} for {self.n} regions")
        rows = np.repeat(np.arange(self.n), self.neighbor_counts())
        contrib = self.values.reshape((-1,) + (1,) * (x.ndim - 1)) * x[self.indices]
        out = np.zeros_like(x, dtype=float)
        np.add.at(out, rows, contrib)
        return out

    def row_sums(self) -> np.ndarray:
        sums = np.zeros(self.n)
        np.add.at(sums, np.repeat(np.arange(self.n), self.neighbor_counts()), self.values)
        return sums

    def total_weight(self) -> float:
        """``S = sum_ij w_ij`` (equals n without islands)."""
        return float(self.values.sum())

    def reorder(self, ids) -> "SpatialWeights":
        """Same weights with rows/columns permuted into ``ids`` order."""
        ids = tuple(ids)
        if sorted(ids) != sorted(self.ids) or len(ids) != self.n:
            raise DimensionMismatchError("reorder ids must be a permutation of the weight ids")
        if ids == self.ids:
            return self
        perm = np.array([self._index[r] for r in ids])
        return _from_dense(ids, self.dense_raw()[np.ix_(perm, perm)], self.cutoff_km, self.power,
                           allow_islands=True)

    def validate(self, tol: float = 1e-12) -> None:
        """Raise if any structural invariant is violated."""
        if len(self.indptr) != self.n + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValidationError("malformed row pointer array")
        counts = self.neighbor_counts()
        rows = np.repeat(np.arange(self.n), counts)
        if np.any(rows == self.indices):
            raise ValidationError("weights contain self-neighbors (w_ii != 0)")
        if np.any(self.values <= 0) or np.any(self.raw_values <= 0):
            raise ValidationError("stored weights must be strictly positive")
        sums = self.row_sums()
        bad = [self.ids[i] for i in range(self.n) if counts[i] > 0 and abs(sums[i] - 1.0) > tol]
        if bad:
            raise ValidationError("rows not standardized: " + ", ".join(bad))
        raw = self.dense_raw()
        if not np.allclose(raw, raw.T, rtol=1e-12, atol=0.0):
            raise AsymmetricWeightsError("raw weights are not symmetric")


def _from_dense(ids, raw, cutoff_km, power, allow_islands) -> SpatialWeights:
    n = raw.shape[0]
    indptr = [0]
    indices, values, raw_values = [], [], []
    islands = []
    for i in range(n):
        js = np.flatnonzero(raw[i] > 0)
        if len(js) == 0:
            islands.append(ids[i])
        r = raw[i, js]
        indices.extend(js.tolist())
        raw_values.extend(r.tolist())
        values.extend((r / r.sum()).tolist() if len(js) else [])
        indptr.append(len(indices))
    if islands and not allow_islands:
        raise IslandError(islands)
    return SpatialWeights(
        ids=tuple(ids),
        indptr=np.array(indptr, dtype=np.int64),
        indices=np.array(indices, dtype=np.int64),
        values=np.array(values, dtype=float),
        raw_values=np.array(raw_values, dtype=float),
        cutoff_km=float(cutoff_km),
        power=float(power),
    )


def build_weights(regions, cutoff_km: float = 97.0, power: float = 2.0,
                  allow_islands: bool = False) -> SpatialWeights:
    """Inverse-distance weights with an inclusive distance cutoff.

    Parameters
    ----------
    regions : sequence of Region
    cutoff_km : float
        Pairs with ``d_ij <= cutoff_km`` are neighbors.
    power : float
        Distance decay exponent (2 gives ``1/d**2``).
    allow_islands : bool
        Keep regions without neighbors as zero rows instead of raising
        :class:`IslandError`.
    """
    regions = tuple(regions)
    if len(regions) < 2:
        raise ValidationError("at least two regions are required")
    if not cutoff_km > 0:
        raise ValidationError(f"cutoff_km must be positive, got {cutoff_km}")
    if not power > 0:
        raise ValidationError(f"power must be positive, got {power}")
    ids = [r.id for r in regions]
    _check_unique(ids)
    d = distance_matrix(regions)
    n = len(regions)
    for i in range(n):
        for j in range(i + 1, n):
            if d[i, j] == 0.0:
                raise DuplicateCoordinateError(ids[i], ids[j])
    raw = np.zeros((n, n))
    mask = (d <= cutoff_km) & ~np.eye(n, dtype=bool)
    raw[mask] = 1.0 / d[mask] ** power
    return _from_dense(ids, raw, cutoff_km, power, allow_islands)


@dataclass(frozen=True)
class ConnectivityReport:
    ids: tuple
    neighbor_count: tuple
    island_ids: tuple
    min_neighbors: int
    max_neighbors: int
    mean_neighbors: float


def connectivity_report(w: SpatialWeights) -> ConnectivityReport:
    counts = tuple(int(c) for c in w.neighbor_counts())
    return ConnectivityReport(
        ids=w.ids,
        neighbor_count=counts,
        island_ids=w.island_ids,
        min_neighbors=min(counts),
        max_neighbors=max(counts),
        mean_neighbors=sum(counts) / len(counts),
    )


def _num(x: float) -> str:
    return format(float(x), ".17g")


def dumps_weights(w: SpatialWeights) -> str:
    """Serialize to the self-describing weights document (JSON, 17 digits)."""
    lines = [
        "{",
        f'  "format": "{WEIGHTS_FORMAT}",',
        '  "version": 1,',
        f'  "cutoff_km": {_num(w.cutoff_km)},',
        f'  "power": {_num(w.power)},',
        f'  "ids": {json.dumps(list(w.ids), ensure_ascii=False)},',
        '  "rows": [',
    ]
    row_lines = []
    for i, rid in enumerate(w.ids):
        lo, hi = w.indptr[i], w.indptr[i + 1]
        pairs = ", ".join(
            f"[{json.dumps(w.ids[j], ensure_ascii=False)}, {_num(v)}, {_num(r)}]"
            for j, v, r in zip(w.indices[lo:hi], w.values[lo:hi], w.raw_values[lo:hi])
        )
        row_lines.append(f'    {{"id": {json.dumps(rid, ensure_ascii=False)}, "neighbors": [{pairs}]}}')
    lines.append(",\n".join(row_lines))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def save_weights(w: SpatialWeights, path) -> None:
    Path(path).write_text(dumps_weights(w), encoding="utf-8")


def loads_weights(text: str, source: str = "<string>") -> SpatialWeights:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}: invalid weights document: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != WEIGHTS_FORMAT:
        raise ValidationError(f"{source}: not a {WEIGHTS_FORMAT} document")
    try:
        ids = [str(i) for i in doc["ids"]]
        _check_unique(ids)
        index = {rid: k for k, rid in enumerate(ids)}
        rows = doc["rows"]
        if [r["id"] for r in rows] != ids:
            raise ValidationError("row ids do not match the ids list")
        indptr, indices, values, raw_values = [0], [], [], []
        for row in rows:
            for j, v, r in row["neighbors"]:
                indices.append(index[j])
                values.append(float(v))
                raw_values.append(float(r))
            indptr.append(len(indices))
        w = SpatialWeights(
            ids=tuple(ids),
            indptr=np.array(indptr, dtype=np.int64),
            indices=np.array(indices, dtype=np.int64),
            values=np.array(values, dtype=float),
            raw_values=np.array(raw_values, dtype=float),
            cutoff_km=float(doc["cutoff_km"]),
            power=float(doc["power"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise ValidationError(f"{source}: {exc}") from None
        raise ValidationError(f"{source}: malformed weights document ({exc!r})") from None
    w.validate()
    return w


def load_weights(path) -> SpatialWeights:
    path = Path(path)
    return loads_weights(path.read_text(encoding="utf-8"), source=str(path))
