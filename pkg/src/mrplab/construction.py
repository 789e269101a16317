"""Model assembly and path/ensemble simulation.

A model pairs an indexed kernel family with a mixing measure.  Unconditional
sampling draws the structural parameter from the mixing measure and then the
interarrivals independently from the per-index kernel laws; conditional
sampling fixes the parameter.  The drawn parameter is stored on every path:
it is a first-class quantity here, which is what makes conditional checks
possible downstream.

Ensembles are reproducible: path ``i`` owns the child stream ``i`` of the
root seed (see :mod:`mrplab.rng`), so results are bitwise identical however
paths are chunked or threaded.  Infinite interarrival sequences are truncated
at a fixed per-path length, recorded in the ensemble metadata.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .counting import compensated_cumsum_rows
from .errors import (
    CapacityError,
    ConfigurationError,
    InvalidInterarrivalError,
    ParameterDomainError,
)
from .kernels import (
    KernelSpec,
    MixingMeasure,
    kernel_sample_batch,
    verify_mixing_mass,
)
from .rng import StreamBank, UniformStream, child_seed
from . import rng as _rng

MAX_ENSEMBLE_DRAWS = 50_000_000
_CHUNK = 65_536

SEED_RULE = "splitmix64-child-v1"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count for ensemble generation, capped by MRPLAB_THREADS."""
    cap = os.environ.get("MRPLAB_THREADS")
    cap = max(1, int(cap)) if cap else None
    if threads is None:
        threads = cap if cap is not None else 1
    if cap is not None:
        threads = min(threads, cap)
    return max(1, int(threads))


@dataclass(frozen=True)
class MrpModel:
    """A kernel family plus a mixing measure, cross-validated."""

    kernel: KernelSpec
    mixing: MixingMeasure
    is_proper_mrp: bool
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {"kernel": self.kernel.to_dict(), "mixing": self.mixing.to_dict()}

    def model_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    @property
    def param_dim(self) -> int:
        return self.kernel.param_dim


def build_model(kernel: KernelSpec, mixing: MixingMeasure) -> MrpModel:
    """Cross-validate a kernel family against a mixing measure.

    Raises
    ------
    InvalidInterarrivalError
        If the kernel puts mass outside (0, inf) (a Poisson kernel has an
        atom at 0, so it cannot drive interarrival times).
    ConfigurationError
        On dimension mismatch, support outside the admissible region, or a
        mixing density whose quadrature mass deviates from 1.
    """
    if not kernel.positive_support:
        raise InvalidInterarrivalError(
            f"{kernel.family} kernel puts mass at 0; interarrivals must be strictly positive"
        )
    if mixing.dim != kernel.param_dim:
        raise ConfigurationError(
            f"mixing has dimension {mixing.dim} but the kernel expects {kernel.param_dim} "
            "parameter component(s)"
        )
    for j, (lo, hi) in enumerate(mixing.support_box()):
        if lo < 0.0 or hi <= 0.0:
            raise ConfigurationError(
                f"mixing support component {j} = ({lo}, {hi}) is not inside the "
                "kernel-admissible region (positive parameters)"
            )
    if mixing.is_atomic:
        atoms = [mixing.point] if hasattr(mixing, "point") else list(mixing.atoms)
        for atom in atoms:
            if any(not v > 0.0 for v in atom):
                raise ConfigurationError(
                    f"atom {atom} lies outside the kernel-admissible region"
                )
    verify_mixing_mass(mixing)
    warnings = ()
    if not kernel.is_constant_family:
        warnings = (
            "kernel family varies with the index: the model is not a proper "
            "MRP (interarrivals are not conditionally identically distributed)",
        )
    return MrpModel(kernel, mixing, kernel.is_constant_family, warnings)


@dataclass(frozen=True)
class MrpPath:
    """One realization: the drawn parameter, interarrivals, and arrivals."""

    theta: tuple
    interarrivals: np.ndarray
    arrivals: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.interarrivals, dtype=np.float64)
        object.__setattr__(self, "interarrivals", w)
        bad = np.flatnonzero(~(w > 0.0))
        if bad.size:
            i = int(bad[0])
            raise InvalidInterarrivalError(
                f"interarrival {i + 1} is not strictly positive: {w[i]!r}"
            )

    @classmethod
    def from_interarrivals(cls, theta, interarrivals) -> "MrpPath":
        from .counting import arrivals_from_interarrivals

        w = np.asarray(interarrivals, dtype=np.float64)
        return cls(_as_theta_tuple(theta), w, arrivals_from_interarrivals(w))

    @property
    def n_events(self) -> int:
        return int(self.interarrivals.size)


def _as_theta_tuple(theta) -> tuple:
    if np.isscalar(theta):
        return (float(theta),)
    return tuple(float(v) for v in theta)


def _as_stream(rng: Union[int, UniformStream]) -> UniformStream:
    return rng if isinstance(rng, UniformStream) else UniformStream(int(rng))


def _draw_interarrivals(kernel: KernelSpec, thetas: np.ndarray, n_events: int, bank: StreamBank) -> np.ndarray:
    w = np.empty((len(bank), n_events), dtype=np.float64)
    for k in range(1, n_events + 1):
        w[:, k - 1] = kernel_sample_batch(kernel, k, thetas, bank)
    if not np.all(w > 0.0):
        raise InvalidInterarrivalError("sampler produced a nonpositive interarrival")
    return w


def sample_path(model: MrpModel, n_events: int, rng: Union[int, UniformStream]) -> MrpPath:
    """Draw theta from the mixing measure, then one path of interarrivals.

    Deterministic given the stream seed; arrival times are compensated
    prefix sums of the interarrivals.
    """
    if n_events < 1:
        raise ConfigurationError("n_events must be >= 1")
    stream = _as_stream(rng)
    thetas = model.mixing.sample_batch(stream.bank)
    w = _draw_interarrivals(model.kernel, thetas, n_events, stream.bank)
    return MrpPath.from_interarrivals(tuple(thetas[0]), w[0])


def sample_conditional_path(
    model: MrpModel, theta, n_events: int, rng: Union[int, UniformStream]
) -> MrpPath:
    """One path under a fixed parameter (the disintegrated, conditional law)."""
    if n_events < 1:
        raise ConfigurationError("n_events must be >= 1")
    pt = _as_theta_tuple(theta)
    if not model.mixing.contains(pt):
        raise ParameterDomainError(f"theta {pt} is outside the mixing support")
    stream = _as_stream(rng)
    thetas = np.asarray([pt], dtype=np.float64)
    if model.param_dim == 1:
        thetas = thetas[:, 0]
    w = _draw_interarrivals(model.kernel, thetas, n_events, stream.bank)
    return MrpPath.from_interarrivals(pt, w[0])


def sample_conditional_interarrivals(
    model: MrpModel, theta, n_samples: int, n_events: int, root_seed: int
) -> np.ndarray:
    """(n_samples, n_events) conditional interarrival draws at a fixed theta.

    Sample ``i`` uses child stream ``i`` of the root seed, matching
    `sample_conditional_path` draw for draw.
    """
    pt = _as_theta_tuple(theta)
    if not model.mixing.contains(pt):
        raise ParameterDomainError(f"theta {pt} is outside the mixing support")
    bank = StreamBank.from_root(root_seed, n_samples)
    th = np.tile(np.asarray(pt, dtype=np.float64), (n_samples, 1))
    if model.param_dim == 1:
        th = th[:, 0]
    return _draw_interarrivals(model.kernel, th, n_events, bank)


@dataclass(frozen=True)
class Ensemble:
    """A batch of independent paths plus the metadata to reproduce it."""

    model: MrpModel
    root_seed: int
    n_paths: int
    n_events: int
    thetas: np.ndarray  # (n_paths, dim)
    interarrivals: np.ndarray  # (n_paths, n_events)
    arrivals: np.ndarray  # (n_paths, n_events)
    created_at: str = ""
    metadata: dict = field(default_factory=dict)

    def path(self, i: int) -> MrpPath:
        arr = np.empty(self.n_events + 1)
        arr[0] = 0.0
        arr[1:] = self.arrivals[i]
        return MrpPath(tuple(self.thetas[i]), self.interarrivals[i], arr)

    def manifest(self) -> dict:
        return {
            "schema_version": 1,
            "model": self.model.to_dict(),
            "model_hash": self.model.model_hash(),
            "root_seed": self.root_seed,
            "n_paths": self.n_paths,
            "n_events": self.n_events,
            "truncation": self.n_events,
            "seed_rule": SEED_RULE,
            "created_at": self.created_at,
            **self.metadata,
        }


def _simulate_chunk(model: MrpModel, lo: int, hi: int, n_events: int, root_seed: int):
    bank = StreamBank.from_root(root_seed, hi - lo, offset=lo)
    thetas = model.mixing.sample_batch(bank)
    w = _draw_interarrivals(model.kernel, thetas if model.param_dim > 1 else thetas[:, 0], n_events, bank)
    return lo, thetas, w


def simulate_ensemble(
    model: MrpModel,
    n_paths: int,
    n_events: int,
    root_seed: int,
    threads: Optional[int] = None,
) -> Ensemble:
    """Simulate `n_paths` independent truncated paths.

    Per-path seeds derive deterministically from the root seed, so the result
    is a pure function of (model, n_paths, n_events, root_seed) regardless of
    chunking or thread schedule.
    """
    if n_paths < 1 or n_events < 1:
        raise ConfigurationError("n_paths and n_events must be >= 1")
    if n_paths * n_events > MAX_ENSEMBLE_DRAWS:
        raise CapacityError(
            f"requested {n_paths} x {n_events} draws exceeds the "
            f"{MAX_ENSEMBLE_DRAWS} ensemble capacity"
        )
    workers = resolve_threads(threads)
    spans = [(lo, min(lo + _CHUNK, n_paths)) for lo in range(0, n_paths, _CHUNK)]
    dim = model.param_dim
    thetas = np.empty((n_paths, dim), dtype=np.float64)
    w = np.empty((n_paths, n_events), dtype=np.float64)

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_chunk, model, lo, hi, n_events, root_seed)
                for lo, hi in spans
            ]
            for fut in futures:
                lo, th, wc = fut.result()
                thetas[lo : lo + th.shape[0]] = th
                w[lo : lo + wc.shape[0]] = wc
    else:
        for lo, hi in spans:
            lo, th, wc = _simulate_chunk(model, lo, hi, n_events, root_seed)
            thetas[lo : lo + th.shape[0]] = th
            w[lo : lo + wc.shape[0]] = wc

    from datetime import datetime, timezone

    return Ensemble(
        model=model,
        root_seed=int(root_seed),
        n_paths=int(n_paths),
        n_events=int(n_events),
        thetas=thetas,
        interarrivals=w,
        arrivals=compensated_cumsum_rows(w),
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def aux_seed(root_seed: int, tag: int) -> int:
    """Auxiliary substream seed (never collides with path streams)."""
    return child_seed(root_seed, _rng.AUX_INDEX_BASE + tag)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def atomic_write_text(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def ensemble_csv_text(ensemble: Ensemble) -> str:
    """Render the ensemble as CSV (path_id, theta components, k, w, t).

    Floats are written with shortest round-trip repr, so identical ensembles
    produce byte-identical files.
    """
    dim = ensemble.thetas.shape[1]
    theta_cols = ["theta"] if dim == 1 else [f"theta{j + 1}" for j in range(dim)]
    lines = [",".join(["path_id", *theta_cols, "k", "w", "t"])]
    for i in range(ensemble.n_paths):
        theta_txt = ",".join(repr(float(v)) for v in ensemble.thetas[i])
        for k in range(ensemble.n_events):
            lines.append(
                f"{i},{theta_txt},{k + 1},"
                f"{float(ensemble.interarrivals[i, k])!r},{float(ensemble.arrivals[i, k])!r}"
            )
    return "\n".join(lines) + "\n"


def write_ensemble(ensemble: Ensemble, csv_path: str, manifest_path: Optional[str] = None) -> str:
    """Write the ensemble CSV (and manifest JSON) atomically; returns manifest path."""
    if manifest_path is None:
        manifest_path = csv_path + ".manifest.json"
    atomic_write_text(csv_path, ensemble_csv_text(ensemble))
    manifest = dict(ensemble.manifest())
    manifest["csv"] = os.path.basename(csv_path)
    atomic_write_text(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
