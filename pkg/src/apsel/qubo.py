"""Budget-constrained quadratic binary model: build, evaluate, convert, enumerate.

The selection objective rewards per-AP importance, penalizes pairwise
redundancy, and enforces the AP budget through a quadratic penalty on the
selection cardinality. Expanding the penalty with x_i^2 = x_i folds
everything into standard (linear, quadratic, offset) coefficients that any
binary-quadratic sampler can consume unmodified:

    linear[i]        = -alpha * importance_i + eta * (1 - 2k)
    quadratic[(i,j)] = (1 - alpha) * redundancy_ij + 2 * eta      (i < j)
    offset           = eta * k^2

Inactive APs receive no importance reward, leaving their selection strictly
dominated while preserving index alignment with the dataset. Their indices
ride along in ``params["clamped"]`` so samplers can pin them to zero instead
of wandering through a subspace that cannot contain the optimum.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import ImportanceVector, RedundancyMatrix
from .errors import ConfigError, SolverError

BRUTE_FORCE_MAX_N = 24
SPECTRUM_MAX_N = 16


@dataclass
class QuboModel:
    """Minimize sum(linear*x) + sum_{i<j} quadratic[(i,j)]*x_i*x_j + offset."""

    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=np.float64)
        n = self.n
        for i, j in self.quadratic:
            if not (0 <= i < j < n):
                raise ConfigError(f"quadratic key ({i}, {j}) is not an i<j pair below n={n}")

    @property
    def n(self) -> int:
        return self.linear.shape[0]

    @property
    def clamped_indices(self) -> np.ndarray:
        """Variables pinned to zero by samplers that honor params["clamped"]."""
        raw = self.params.get("clamped", ())
        idx = np.unique(np.asarray(raw, dtype=np.int64))
        if idx.size and not (0 <= idx[0] and idx[-1] < self.n):
            raise ConfigError(f"clamped indices must lie in [0, {self.n})")
        return idx

    def dense(self) -> np.ndarray:
        """Symmetric coefficient matrix with zero diagonal."""
        w = np.zeros((self.n, self.n), dtype=np.float64)
        for (i, j), v in self.quadratic.items():
            w[i, j] = v
            w[j, i] = v
        return w

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "linear": [float(v) for v in self.linear],
            "quadratic": [
                {"i": i, "j": j, "v": float(v)}
                for (i, j), v in sorted(self.quadratic.items())
            ],
            "offset": float(self.offset),
            "params": dict(self.params),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "QuboModel":
        n = int(doc["n"])
        linear = np.asarray(doc["linear"], dtype=np.float64)
        if linear.shape != (n,):
            raise ConfigError(f"model declares n={n} but has {linear.shape[0]} linear terms")
        quadratic = {
            (int(e["i"]), int(e["j"])): float(e["v"]) for e in doc["quadratic"]
        }
        return cls(linear=linear, quadratic=quadratic, offset=float(doc["offset"]),
                   params=dict(doc.get("params", {})))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "QuboModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class IsingModel:
    """Spin (+/-1) form: sum(h*s) + sum_{i<j} J[(i,j)]*s_i*s_j + offset."""

    h: np.ndarray
    couplings: dict[tuple[int, int], float]
    offset: float

    @property
    def n(self) -> int:
        return self.h.shape[0]

    def dense(self) -> np.ndarray:
        j = np.zeros((self.n, self.n), dtype=np.float64)
        for (a, b), v in self.couplings.items():
            j[a, b] = v
            j[b, a] = v
        return j

    def energy(self, spins: np.ndarray) -> np.ndarray | float:
        s = np.asarray(spins, dtype=np.float64)
        single = s.ndim == 1
        s = np.atleast_2d(s)
        j = self.dense()
        e = s @ self.h + 0.5 * np.einsum("ri,ij,rj->r", s, j, s) + self.offset
        return float(e[0]) if single else e


def build(
    imp: ImportanceVector,
    red: RedundancyMatrix,
    alpha: float,
    eta: float,
    k: int,
) -> QuboModel:
    """Assemble the budget-constrained selection model."""
    n = imp.n_aps
    if red.n_aps != n:
        raise ConfigError(f"redundancy is {red.n_aps}x{red.n_aps} for {n} importance entries")
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"alpha must be in [0, 1], got {alpha!r}")
    if not (eta > 0.0):
        raise ConfigError(f"eta must be positive, got {eta!r}")
    if not (1 <= k <= n):
        raise ConfigError(f"budget k must satisfy 1 <= k <= {n}, got {k!r}")

    reward = np.where(imp.active_mask, alpha * imp.scores, 0.0)
    linear = -reward + eta * (1.0 - 2.0 * k)
    iu, ju = np.triu_indices(n, k=1)
    vals = (1.0 - alpha) * red.values[iu, ju] + 2.0 * eta
    quadratic = {
        (int(i), int(j)): float(v) for i, j, v in zip(iu, ju, vals)
    }
    params = {
        "alpha": float(alpha),
        "eta": float(eta),
        "k": int(k),
        "metric": imp.metric.value,
    }
    inactive = np.flatnonzero(~imp.active_mask)
    if inactive.size:
        params["clamped"] = [int(i) for i in inactive]
    return QuboModel(linear=linear, quadratic=quadratic, offset=float(eta) * k * k,
                     params=params)


def energy(m: QuboModel, x: np.ndarray) -> np.ndarray | float:
    """Objective value of one bitvector or a batch (rows of a matrix)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != m.n:
        raise ConfigError(f"bitvector length {arr.shape[1]} does not match n={m.n}")
    w = m.dense()
    quad = 0.5 * np.einsum("ri,rj,ij->r", arr, arr, w, optimize=True)
    e = arr @ m.linear + quad + m.offset
    return float(e[0]) if single else e


def to_ising(m: QuboModel) -> IsingModel:
    """Substitute x_i = (s_i + 1)/2; energies agree state-by-state."""
    n = m.n
    h = m.linear / 2.0
    offset = m.offset + float(m.linear.sum()) / 2.0
    couplings: dict[tuple[int, int], float] = {}
    for (i, j), v in m.quadratic.items():
        couplings[(i, j)] = v / 4.0
        h[i] += v / 4.0
        h[j] += v / 4.0
        offset += v / 4.0
    return IsingModel(h=h, couplings=couplings, offset=offset)


def brute_force(m: QuboModel):
    """Exact minimizer by exhaustive enumeration (n <= 24).

    Ties break toward the lexicographically smallest bitvector. For n <= 16
    the full ascending energy spectrum is attached to the result.
    """
    from .anneal import SelectionResult, Sampler  # local import breaks the module cycle

    n = m.n
    if n > BRUTE_FORCE_MAX_N:
        raise SolverError(
            f"brute force refuses n={n} (> {BRUTE_FORCE_MAX_N} variables means "
            f"{2**n:,} states); use the sa/sqa samplers instead"
        )
    w = m.dense()
    best_energy = np.inf
    best_index = -1
    spectrum_parts: list[np.ndarray] = []
    want_spectrum = n <= SPECTRUM_MAX_N
    total = 1 << n
    chunk = min(total, 1 << 16)
    # bit i of a state index is taken from position (n-1-i), so ascending
    # index order equals lexicographic bitvector order and argmin's first-hit
    # rule implements the tie-break.
    shifts = np.arange(n - 1, -1, -1, dtype=np.uint32)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        e = bits @ m.linear + 0.5 * np.einsum("ri,rj,ij->r", bits, bits, w, optimize=True)
        e += m.offset
        if want_spectrum:
            spectrum_parts.append(e)
        local = int(np.argmin(e))
        if e[local] < best_energy:
            best_energy = float(e[local])
            best_index = start + local
    x = np.array([(best_index >> int(s)) & 1 for s in shifts], dtype=np.uint8)
    selected = np.flatnonzero(x).astype(int)
    spectrum = np.sort(np.concatenate(spectrum_parts)) if want_spectrum else None
    return SelectionResult(
        selected=selected,
        achieved_k=int(x.sum()),
        best_energy=best_energy,
        sampler=Sampler.EXACT,
        config=None,
        tts_seconds=None,
        bitvector=x,
        spectrum=spectrum,
    )
