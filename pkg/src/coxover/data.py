"""Ground-truth hazard models and synthetic survival data generation.

The generating process is the proportional-hazards model without
censoring: with linear predictor ``eta`` and a unit-rate exponential
deviate ``eps``, the event time is ``Lambda0^{-1}(eps * exp(-eta))``.

Two conventions for the stored true coefficients are supported:

* ``theory_sqrt_p`` — the linear predictor is ``beta . z / sqrt(p)`` and
  ``(1/p) sum beta^2 = S^2`` exactly;
* ``cox_raw``       — the linear predictor is ``beta . z`` (standard Cox
  convention), i.e. the stored vector is the former divided by sqrt(p).

Both store identical event times for the same seed: the generator always
evaluates the predictor on one code path and only the recorded truth
changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError, MatrixError, ParameterError


class HazardKind(str, Enum):
    CONSTANT = "constant"
    INVERSE_SQRT = "inverse_sqrt"


class Scaling(str, Enum):
    THEORY_SQRT_P = "theory_sqrt_p"
    COX_RAW = "cox_raw"


def default_amplitude(S: float) -> float:
    """Amplitude a = exp(S^2)/sqrt(2) of the 1/sqrt(t) hazard.

    Chosen so the mean event time under the generator equals one.
    """
    if S < 0:
        raise ParameterError("S must be nonnegative")
    return float(np.exp(S * S) / np.sqrt(2.0))


@dataclass(frozen=True)
class HazardModel:
    """True base hazard with closed-form cumulative hazard and inverse."""

    kind: HazardKind
    a: float | None = None

    def __post_init__(self):
        kind = HazardKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is HazardKind.INVERSE_SQRT:
            if self.a is None or not np.isfinite(self.a) or self.a <= 0:
                raise ParameterError("inverse_sqrt hazard needs amplitude a > 0")
        elif self.a is not None:
            raise ParameterError("constant hazard takes no amplitude")

    @classmethod
    def constant(cls) -> "HazardModel":
        return cls(kind=HazardKind.CONSTANT)

    @classmethod
    def inverse_sqrt(cls, a: float) -> "HazardModel":
        return cls(kind=HazardKind.INVERSE_SQRT, a=float(a))

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind is HazardKind.CONSTANT:
            return np.ones_like(t)
        return self.a / np.sqrt(t)

    def cumulative(self, t):
        """Integrated base hazard Lambda0(t)."""
        t = np.asarray(t, dtype=float)
        if self.kind is HazardKind.CONSTANT:
            return t.copy()
        return 2.0 * self.a * np.sqrt(t)

    def inverse(self, u):
        """Inverse of the cumulative hazard."""
        u = np.asarray(u, dtype=float)
        if self.kind is HazardKind.CONSTANT:
            return u.copy()
        return (u / (2.0 * self.a)) ** 2

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.a is not None:
            out["a"] = float(self.a)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "HazardModel":
        return cls(kind=HazardKind(d["kind"]), a=d.get("a"))


@dataclass(frozen=True)
class Truth:
    """Generating parameters attached to a synthetic dataset."""

    beta_star: np.ndarray
    S: float
    hazard: HazardModel
    scaling: Scaling
    seed: int
    correlated: bool = False

    def __post_init__(self):
        beta = np.asarray(self.beta_star, dtype=float)
        beta.setflags(write=False)
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "scaling", Scaling(self.scaling))


@dataclass(frozen=True)
class SurvivalDataset:
    """N event times plus N covariate vectors, optionally with truth."""

    times: np.ndarray
    covariates: np.ndarray
    truth: Truth | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        z = np.asarray(self.covariates, dtype=float)
        if times.ndim != 1 or z.ndim != 2 or z.shape[0] != times.shape[0]:
            raise DataError("times must be (N,), covariates (N, p)")
        if times.shape[0] < 2:
            raise DataError("need at least two samples")
        if np.any(~np.isfinite(times)) or np.any(times <= 0.0):
            raise DataError("event times must be finite and strictly positive")
        if np.unique(times).shape[0] != times.shape[0]:
            raise DataError("tied event times are not allowed")
        times.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "covariates", z)

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]


def subseed(master_seed: int, index: int) -> int:
    """Deterministic 64-bit sub-seed for replicate ``index``.

    Counter-splitting scheme: child ``index`` of ``master_seed`` is the
    first 64-bit word generated by ``SeedSequence([master_seed, index])``.
    """
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, np.uint64)[0])


def draw_beta_star(p: int, S: float, seed: int) -> np.ndarray:
    """Gaussian coefficient vector rescaled so (1/p) sum beta^2 = S^2 exactly.

    Theory convention (pairs with a predictor ``beta . z / sqrt(p)``).
    """
    if p < 1:
        raise ParameterError("p must be >= 1")
    if not np.isfinite(S) or S < 0:
        raise ParameterError("S must be finite and nonnegative")
    rng = np.random.default_rng(int(seed))
    raw = rng.standard_normal(p)
    if S == 0.0:
        return np.zeros(p)
    return raw * (S * np.sqrt(p) / np.linalg.norm(raw))


def _exponential_deviates(rng: np.random.Generator, n: int) -> np.ndarray:
    # Inverse CDF on the open unit interval, for cross-platform
    # reproducibility; a 0 draw (probability 2^-53) is nudged inside.
    u = rng.random(n)
    u[u == 0.0] = 2.0**-53
    return -np.log(u)


def _break_ties(times: np.ndarray) -> np.ndarray:
    # Ties are probability-zero; if an RNG collision happens anyway, nudge
    # the later sample upward by the smallest representable increment.
    for _ in range(64):
        order = np.argsort(times, kind="stable")
        sorted_times = times[order]
        dup = np.flatnonzero(np.diff(sorted_times) == 0.0)
        if dup.size == 0:
            return times
        for j in dup:
            idx = order[j + 1]
            times[idx] = np.nextafter(times[idx], np.inf)
    raise DataError("could not break ties in event times")


def generate_dataset(
    N: int,
    p: int,
    S: float,
    hazard: HazardModel,
    seed: int,
    scaling: Scaling | str = Scaling.THEORY_SQRT_P,
    beta_star: np.ndarray | None = None,
) -> SurvivalDataset:
    """Draw a synthetic proportional-hazards dataset without censoring.

    Covariates are i.i.d. standard normal; coefficients are drawn and
    rescaled to S exactly (or taken from ``beta_star``, theory
    convention); event times follow the inverse-cumulative-hazard
    transform. Deterministic for a fixed seed. ``p >= N`` is allowed: the
    generator must reach into the overfitting regime.

    Parameters
    ----------
    beta_star:
        Optional theory-convention coefficients, shared e.g. across
        replicates of an experiment. Bypasses the internal draw.
    """
    if N < 2:
        raise ParameterError("N must be >= 2")
    if p < 1:
        raise ParameterError("p must be >= 1")
    if not np.isfinite(S) or S < 0:
        raise ParameterError("S must be finite and nonnegative")
    scaling = Scaling(scaling)
    rng = np.random.default_rng(int(seed))

    z = rng.standard_normal((N, p))
    if beta_star is None:
        raw = rng.standard_normal(p)
        if S == 0.0:
            beta_theory = np.zeros(p)
        else:
            beta_theory = raw * (S * np.sqrt(p) / np.linalg.norm(raw))
    else:
        beta_theory = np.asarray(beta_star, dtype=float)
        if beta_theory.shape != (p,):
            raise ParameterError("beta_star must have shape (p,)")

    eps = _exponential_deviates(rng, N)
    # One code path for the predictor regardless of scaling convention, so
    # that the two conventions give bit-identical event times.
    eta = (z @ beta_theory) / np.sqrt(p)
    times = hazard.inverse(eps * np.exp(-eta))
    times = _break_ties(np.asarray(times))

    stored_beta = beta_theory if scaling is Scaling.THEORY_SQRT_P else beta_theory / np.sqrt(p)
    truth = Truth(
        beta_star=stored_beta,
        S=float(S),
        hazard=hazard,
        scaling=scaling,
        seed=int(seed),
    )
    return SurvivalDataset(times=times, covariates=z, truth=truth)


def spd_factor(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric positive-definite matrix.

    Returns ``(eigenvalues, eigenvectors)``; raises ``MatrixError`` if the
    matrix is not symmetric or any eigenvalue is below ``1e-12`` times the
    largest one.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MatrixError("matrix must be square")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise MatrixError("matrix must be symmetric")
    vals, vecs = np.linalg.eigh(A)
    if vals[-1] <= 0 or np.any(vals <= 1e-12 * vals[-1]):
        raise MatrixError("matrix must be positive definite")
    return vals, vecs


def spd_sqrt(A: np.ndarray) -> np.ndarray:
    """Symmetric square root of an SPD matrix."""
    vals, vecs = spd_factor(A)
    return (vecs * np.sqrt(vals)) @ vecs.T


def spd_inv_sqrt(A: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root of an SPD matrix."""
    vals, vecs = spd_factor(A)
    return (vecs / np.sqrt(vals)) @ vecs.T


def apply_correlation(
    data: SurvivalDataset, A: np.ndarray, z_bar: np.ndarray
) -> SurvivalDataset:
    """Map covariates z -> z_bar + A^{1/2} z, leaving event times unchanged.

    ``A`` must be symmetric positive definite; its symmetric square root
    is used. The truth block, when present, is flagged as correlated.
    """
    z_bar = np.asarray(z_bar, dtype=float)
    if z_bar.shape != (data.n_covariates,):
        raise ParameterError("z_bar must have shape (p,)")
    root = spd_sqrt(A)
    if root.shape[0] != data.n_covariates:
        raise MatrixError("A must be p x p")
    z_new = z_bar + data.covariates @ root  # symmetric root: A^{1/2} z == z A^{1/2}
    truth = replace(data.truth, correlated=True) if data.truth is not None else None
    return SurvivalDataset(times=data.times, covariates=z_new, truth=truth)


def write_dataset_csv(data: SurvivalDataset, path, truth_path=None) -> None:
    """Write ``t,z1,...,zp`` CSV, plus an optional truth sidecar JSON."""
    path = Path(path)
    p = data.n_covariates
    header = "t," + ",".join(f"z{j + 1}" for j in range(p))
    body = np.column_stack([data.times, data.covariates])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in body:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
    if truth_path is not None and data.truth is not None:
        t = data.truth
        payload = {
            "S": t.S,
            "beta_star": [float(b) for b in t.beta_star],
            "hazard_kind": t.hazard.kind.value,
            "a": None if t.hazard.a is None else float(t.hazard.a),
            "scaling": t.scaling.value,
            "seed": t.seed,
            "correlated": t.correlated,
        }
        Path(truth_path).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def read_dataset_csv(path, truth_path=None) -> SurvivalDataset:
    """Read a dataset written by :func:`write_dataset_csv`."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if not header or header[0] != "t":
            raise DataError("dataset CSV must start with a 't' column")
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    times = body[:, 0]
    covariates = body[:, 1:]
    truth = None
    if truth_path is not None:
        d = json.loads(Path(truth_path).read_text(encoding="utf-8"))
        hazard = HazardModel(kind=HazardKind(d["hazard_kind"]), a=d.get("a"))
        truth = Truth(
            beta_star=np.asarray(d["beta_star"], dtype=float),
            S=float(d["S"]),
            hazard=hazard,
            scaling=Scaling(d["scaling"]),
            seed=int(d["seed"]),
            correlated=bool(d.get("correlated", False)),
        )
    return SurvivalDataset(times=times, covariates=covariates, truth=truth)
