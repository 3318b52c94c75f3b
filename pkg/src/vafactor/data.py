"""Mixed-type questionnaire data model.

A symptom column is one of five kinds and maps to the latent gaussian scale
through a deterministic link:

    binary               s = 1(z > 0)
    count                s = 0 if z < 0, else k with k-1 <= z < k
    continuous-identity  s = scale * z
    continuous-log       s = exp(scale * z)
    categorical          dummy-coded into T-1 binary columns, baseline first

Continuous columns are standardized by a scale factor fitted on training data
(sample SD of the transformed column, no centering); datasets keep values on
the observed scale and the scale is applied when constraints are compiled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

KINDS = ("binary", "continuous-identity", "continuous-log", "count", "categorical")

# kinds whose latent noise variance is a free parameter (binary and dummy
# columns pin sigma_j^2 = 1 for identifiability)
FREE_NOISE_KINDS = ("continuous-identity", "continuous-log", "count")


@dataclass(frozen=True)
class SymptomSpec:
    """Declared name and kind of one questionnaire item."""

    name: str
    kind: str
    categories: tuple[str, ...] | None = None  # baseline first, categorical only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symptom kind {self.kind!r}")
        if self.kind == "categorical":
            if self.categories is None or len(self.categories) < 2:
                raise ValueError(f"categorical symptom {self.name!r} needs >= 2 categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"categorical symptom {self.name!r} has duplicate categories")
        elif self.categories is not None:
            raise ValueError(f"{self.kind} symptom {self.name!r} must not declare categories")


@dataclass(frozen=True)
class LatentConstraint:
    """Restriction one observed cell places on its latent gaussian cell."""

    kind: str  # "point" | "interval" | "free"
    value: float = math.nan
    lo: float = -math.inf
    hi: float = math.inf

    @classmethod
    def point(cls, value: float) -> "LatentConstraint":
        return cls("point", value=float(value))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "LatentConstraint":
        if not lo < hi:
            raise ValueError(f"empty interval ({lo}, {hi})")
        return cls("interval", lo=float(lo), hi=float(hi))

    @classmethod
    def free(cls) -> "LatentConstraint":
        return cls("free")

    def contains(self, z: float) -> bool:
        if self.kind == "point":
            return z == self.value
        if self.kind == "interval":
            return self.lo < z < self.hi
        return True


def encode_constraint(spec: SymptomSpec, value: float, scale: float = 1.0) -> LatentConstraint:
    """Latent constraint for one observed cell (NaN means missing)."""
    if spec.kind == "categorical":
        raise ValueError("categorical columns must be dummy-expanded before encoding")
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return LatentConstraint.free()
    v = float(value)
    if spec.kind == "binary":
        if v == 1.0:
            return LatentConstraint.interval(0.0, math.inf)
        if v == 0.0:
            return LatentConstraint.interval(-math.inf, 0.0)
        raise ValueError(f"binary symptom {spec.name!r} saw value {v!r}")
    if spec.kind == "count":
        if v < 0.0 or v != int(v):
            raise ValueError(f"count symptom {spec.name!r} saw value {v!r}")
        if v == 0.0:
            return LatentConstraint.interval(-math.inf, 0.0)
        return LatentConstraint.interval(v - 1.0, v)
    if scale <= 0.0 or not math.isfinite(scale):
        raise ValueError(f"scale for {spec.name!r} must be positive and finite")
    if spec.kind == "continuous-identity":
        return LatentConstraint.point(v / scale)
    # continuous-log
    if v <= 0.0:
        raise ValueError(f"log-link symptom {spec.name!r} requires positive values, saw {v!r}")
    return LatentConstraint.point(math.log(v) / scale)


def decode_latent(spec: SymptomSpec, z: float, scale: float = 1.0) -> float:
    """Observed value implied by a latent cell (inverse of the link)."""
    if spec.kind == "binary":
        return 1.0 if z > 0.0 else 0.0
    if spec.kind == "count":
        return 0.0 if z < 0.0 else math.floor(z) + 1.0
    if spec.kind == "continuous-identity":
        return z * scale
    if spec.kind == "continuous-log":
        return math.exp(z * scale)
    raise ValueError(f"cannot decode kind {spec.kind!r}")


# ------------------------------------------------------------ categorical

def expand_categorical(spec: SymptomSpec, value) -> np.ndarray:
    """T-1 dummy indicators for one categorical cell; baseline maps to zeros."""
    if spec.kind != "categorical":
        raise ValueError(f"{spec.name!r} is not categorical")
    t = len(spec.categories)
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return np.full(t - 1, np.nan)
    if value not in spec.categories:
        raise ValueError(f"categorical symptom {spec.name!r} saw unknown label {value!r}")
    out = np.zeros(t - 1)
    idx = spec.categories.index(value)
    if idx > 0:
        out[idx - 1] = 1.0
    return out


def decode_categorical(spec: SymptomSpec, bits: np.ndarray):
    """Inverse of expand_categorical; all-zero rows decode to the baseline."""
    bits = np.asarray(bits, dtype=float)
    if bits.shape != (len(spec.categories) - 1,):
        raise ValueError("dummy width does not match category count")
    if np.any(np.isnan(bits)):
        return None
    on = np.flatnonzero(bits == 1.0)
    if np.any((bits != 0.0) & (bits != 1.0)) or len(on) > 1:
        raise ValueError(f"invalid dummy pattern for {spec.name!r}: {bits}")
    return spec.categories[0] if len(on) == 0 else spec.categories[on[0] + 1]


def expanded_specs(specs: tuple[SymptomSpec, ...]) -> tuple[SymptomSpec, ...]:
    """Schema after dummy-coding: categorical items become T-1 binary columns."""
    out: list[SymptomSpec] = []
    for spec in specs:
        if spec.kind == "categorical":
            out.extend(SymptomSpec(f"{spec.name}={cat}", "binary")
                       for cat in spec.categories[1:])
        else:
            out.append(spec)
    return tuple(out)


def expansion_map(specs: tuple[SymptomSpec, ...]) -> list[tuple[int, int | None]]:
    """Per expanded column: (raw spec index, dummy slot or None)."""
    out: list[tuple[int, int | None]] = []
    for i, spec in enumerate(specs):
        if spec.kind == "categorical":
            out.extend((i, j) for j in range(len(spec.categories) - 1))
        else:
            out.append((i, None))
    return out


# --------------------------------------------------------- standardization

def standardize_continuous(column: np.ndarray) -> tuple[np.ndarray, float]:
    """Scale a continuous column to unit sample variance (no centering).

    Returns the scaled column and the scale factor; missing entries pass
    through untouched.
    """
    column = np.asarray(column, dtype=float)
    obs = column[~np.isnan(column)]
    if obs.size < 2:
        raise ValueError("need at least two observed values to standardize")
    scale = float(np.std(obs, ddof=1))
    if scale < 1e-12:
        raise ValueError("cannot standardize a zero-variance column")
    return column / scale, scale


def fit_scale(spec: SymptomSpec, column: np.ndarray) -> float:
    """Scale factor for one expanded column (1.0 for non-continuous kinds)."""
    if spec.kind not in ("continuous-identity", "continuous-log"):
        return 1.0
    column = np.asarray(column, dtype=float)
    if spec.kind == "continuous-log":
        obs = column[~np.isnan(column)]
        if np.any(obs <= 0.0):
            raise ValueError(f"log-link symptom {spec.name!r} requires positive values")
        with np.errstate(invalid="ignore"):
            column = np.log(column)
    return standardize_continuous(column)[1]


# ------------------------------------------------------------------ dataset

@dataclass(frozen=True)
class Dataset:
    """Expanded observation table plus covariates and (partial) cause labels.

    values holds the dummy-expanded table on the observed scale with NaN for
    missing cells; y uses 0-based cause indices with -1 marking unknown.
    """

    specs_raw: tuple[SymptomSpec, ...]
    values: np.ndarray                 # (n, P) float, NaN = missing
    x: np.ndarray                      # (n, B), first column all ones
    y: np.ndarray                      # (n,) int, -1 = unknown
    n_causes: int
    scales: np.ndarray | None = None   # (P,) per-column scale factors
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=int)
        specs = expanded_specs(self.specs_raw)
        if values.ndim != 2 or values.shape[1] != len(specs):
            raise ValueError(f"values must be (n, {len(specs)}) after expansion")
        n = values.shape[0]
        if x.ndim != 2 or x.shape[0] != n or x.shape[1] < 1:
            raise ValueError("x must be (n, B) with B >= 1")
        if n > 0 and not np.all(x[:, 0] == 1.0):
            raise ValueError("x must carry an all-ones intercept in column 0")
        if y.shape != (n,):
            raise ValueError("y must be (n,)")
        if self.n_causes < 1:
            raise ValueError("n_causes must be >= 1")
        if np.any((y < -1) | (y >= self.n_causes)):
            raise ValueError("labels must be -1 (unknown) or in [0, n_causes)")
        scales = self.scales
        if scales is None:
            scales = np.ones(len(specs))
        else:
            scales = np.asarray(scales, dtype=float)
            if scales.shape != (len(specs),) or np.any(scales <= 0.0):
                raise ValueError("scales must be positive with one entry per expanded column")
        if self.ids is not None and len(self.ids) != n:
            raise ValueError("ids length must match row count")
        for j, spec in enumerate(specs):
            col = values[:, j]
            obs = col[~np.isnan(col)]
            if spec.kind == "binary" and not np.all(np.isin(obs, (0.0, 1.0))):
                raise ValueError(f"binary column {spec.name!r} has values outside {{0, 1}}")
            if spec.kind == "count" and (np.any(obs < 0) or np.any(obs != np.floor(obs))):
                raise ValueError(f"count column {spec.name!r} has non-integer or negative values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "specs_raw", tuple(self.specs_raw))
        object.__setattr__(self, "_specs", specs)

    @property
    def specs(self) -> tuple[SymptomSpec, ...]:
        return self._specs

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_symptoms(self) -> int:
        return self.values.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.x.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def with_labels_hidden(self) -> "Dataset":
        return replace(self, y=np.full(self.n, -1))

    def with_scales(self, scales: np.ndarray) -> "Dataset":
        return replace(self, scales=np.asarray(scales, dtype=float))

    def with_intercept_only(self) -> "Dataset":
        """Drop every covariate column, keeping just the intercept."""
        return replace(self, x=np.ones((self.n, 1)))


def fit_scales(dataset: Dataset) -> np.ndarray:
    """Per-column scale factors fitted on this dataset (training split)."""
    return np.array([fit_scale(spec, dataset.values[:, j])
                     for j, spec in enumerate(dataset.specs)])


@dataclass(frozen=True)
class LatentBounds:
    """Compiled per-cell latent constraints in array form for the sampler."""

    lo: np.ndarray         # (n, P), -inf where unbounded below
    hi: np.ndarray         # (n, P), +inf where unbounded above
    is_point: np.ndarray   # (n, P) bool
    point: np.ndarray      # (n, P) model-scale values where is_point
    fixed_noise: np.ndarray  # (P,) bool: columns with sigma_j^2 pinned to 1

    def satisfied(self, z: np.ndarray) -> np.ndarray:
        """Boolean mask of cells whose latent value honors its constraint."""
        ok_interval = (z > self.lo) & (z < self.hi)
        ok_point = z == self.point
        return np.where(self.is_point, ok_point, ok_interval)


def compile_constraints(dataset: Dataset) -> LatentBounds:
    """Vectorize every cell's LatentConstraint for the gibbs sweep."""
    n, p = dataset.values.shape
    lo = np.full((n, p), -np.inf)
    hi = np.full((n, p), np.inf)
    is_point = np.zeros((n, p), dtype=bool)
    point = np.full((n, p), np.nan)
    fixed = np.zeros(p, dtype=bool)
    for j, spec in enumerate(dataset.specs):
        fixed[j] = spec.kind not in FREE_NOISE_KINDS
        scale = float(dataset.scales[j])
        col = dataset.values[:, j]
        for i in range(n):
            c = encode_constraint(spec, col[i], scale)
            if c.kind == "point":
                is_point[i, j] = True
                point[i, j] = c.value
                lo[i, j] = hi[i, j] = c.value
            elif c.kind == "interval":
                lo[i, j] = c.lo
                hi[i, j] = c.hi
    return LatentBounds(lo=lo, hi=hi, is_point=is_point, point=point, fixed_noise=fixed)
