"""Stationary random generator trajectories and their propagators.

A realization is a seeded, two-sided, piecewise-constant path of generators.
Three model families are provided:

  - iid collisions: one fresh generator per unit cell, with a uniformly random
    grid phase so the law is invariant under all real time shifts;
  - Markov-modulated: a finite set of generators switched by a stationary
    continuous-time Markov chain (reverse-time sampling uses the reversed
    chain, making the two-sided extension exactly stationary);
  - frozen disorder: a single generator drawn once per realization
    (stationary but not ergodic).

Time shifts are exact relabelings, never resampled, so the defining identity
propagator(shift(w, h), s, t) == propagator(w, s + h, t + h) holds bit for bit.
"""

import bisect
from dataclasses import dataclass

import numpy as np

from .errors import InvalidChain, InvalidModel, OrderViolation
from .lindblad import Lindbladian, Segment, to_superop
from .matkernel import dagger, matrix_exp
from .rngstream import rng_stream
from .superop import SuperOp, strict_positivity_certificate
from .tolerances import DEFAULT, Tolerances

# stream ids reserved inside one realization seed
_PHASE_STREAM = 0
_LABEL_STREAM = 1
_FORWARD_STREAM = 2
_BACKWARD_STREAM = 3
_CELL_STREAM_BASE = 16


# ---------------------------------------------------------------------------
# generator samplers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GUEGinibreSampler:
    """H Gaussian Hermitian with entry variance (hamiltonian_scale^2 / dim);
    jump operators i.i.d. complex Ginibre with entry variance 1/dim."""

    n_jumps: int = 2
    rate_scale: float = 1.0
    hamiltonian_scale: float = 1.0

    def sample(self, rng: np.random.Generator, dim: int) -> Lindbladian:
        sigma = self.hamiltonian_scale / np.sqrt(dim)
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = sigma * (g + dagger(g)) / 2.0
        jumps = []
        for _ in range(self.n_jumps):
            v = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            jumps.append(v / np.sqrt(2.0 * dim))
        rates = tuple(self.rate_scale for _ in range(self.n_jumps))
        return Lindbladian(hamiltonian=h, jumps=tuple(jumps), rates=rates)

    def to_json(self) -> dict:
        return {"type": "gue_ginibre", "n_jumps": self.n_jumps,
                "rate_scale": self.rate_scale,
                "hamiltonian_scale": self.hamiltonian_scale}


@dataclass(frozen=True)
class ChoiceSampler:
    """Discrete distribution over an explicit list of generators."""

    generators: tuple
    probs: tuple | None = None

    def sample(self, rng: np.random.Generator, dim: int) -> Lindbladian:
        k = len(self.generators)
        idx = int(rng.choice(k, p=self.probs))
        gen = self.generators[idx]
        if gen.dim != dim:
            raise InvalidModel("generator dimension does not match the model")
        return gen

    def to_json(self) -> dict:
        out = {"type": "choice"}
        if self.probs is not None:
            out["probs"] = list(self.probs)
        return out


def sampler_from_json(data: dict, generators=()):
    kind = data.get("type")
    if kind == "gue_ginibre":
        return GUEGinibreSampler(n_jumps=int(data.get("n_jumps", 2)),
                                 rate_scale=float(data.get("rate_scale", 1.0)),
                                 hamiltonian_scale=float(data.get("hamiltonian_scale", 1.0)))
    if kind == "choice":
        if not generators:
            raise InvalidModel("choice sampler requires an explicit generator list")
        probs = data.get("probs")
        return ChoiceSampler(generators=tuple(generators),
                             probs=tuple(probs) if probs is not None else None)
    raise InvalidModel(f"unknown sampler type {kind!r}")


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IIDCollision:
    dim: int
    sampler: object
    grid_step: float = 1.0

    def __post_init__(self):
        if self.grid_step != 1.0:
            raise InvalidModel("the collision grid step is fixed at 1")


@dataclass(frozen=True)
class MarkovModulated:
    dim: int
    generators: tuple
    rate_matrix: np.ndarray
    initial: np.ndarray = None  # stationary law of the chain; computed if omitted

    def __post_init__(self):
        q = np.asarray(self.rate_matrix, dtype=float)
        k = len(self.generators)
        if q.shape != (k, k):
            raise InvalidModel("rate matrix shape does not match the generator list")
        off = q - np.diag(np.diag(q))
        if np.any(off < -1e-12):
            raise InvalidChain("off-diagonal rates must be nonnegative")
        if np.max(np.abs(q.sum(axis=1))) > 1e-10:
            raise InvalidChain("rate-matrix rows must sum to zero")
        pi = self.initial
        if pi is None:
            pi = stationary_distribution(q)
        else:
            pi = np.asarray(pi, dtype=float)
            if np.any(pi < -1e-12) or abs(pi.sum() - 1.0) > 1e-10:
                raise InvalidModel("initial law must be a probability vector")
            if np.max(np.abs(pi @ q)) > 1e-12:
                raise InvalidModel("initial law is not stationary for the rate matrix")
        object.__setattr__(self, "rate_matrix", q)
        object.__setattr__(self, "initial", pi)

    @property
    def reversed_rates(self) -> np.ndarray:
        q = self.rate_matrix
        pi = self.initial
        qr = (q.T * pi[None, :]) / pi[:, None]
        return qr


@dataclass(frozen=True)
class FrozenDisorder:
    dim: int
    sampler: object


def model_from_json(data: dict):
    """Build an environment model from its JSON description.

    {"variant": "iid"|"markov"|"frozen", "dim": D, "generators": [...],
     "Q": [[...]], "sampler": {...}}
    """
    variant = data.get("variant")
    dim = int(data["dim"])
    generators = tuple(Lindbladian.from_json(g) for g in data.get("generators", []))
    if variant == "iid":
        sampler = sampler_from_json(data["sampler"], generators)
        return IIDCollision(dim=dim, sampler=sampler)
    if variant == "markov":
        if not generators:
            raise InvalidModel("markov variant requires a generator list")
        initial = data.get("initial")
        return MarkovModulated(dim=dim, generators=generators,
                               rate_matrix=np.asarray(data["Q"], dtype=float),
                               initial=None if initial is None
                               else np.asarray(initial, dtype=float))
    if variant == "frozen":
        sampler = sampler_from_json(data["sampler"], generators)
        return FrozenDisorder(dim=dim, sampler=sampler)
    raise InvalidModel(f"unknown environment variant {variant!r}")


def model_to_json(model) -> dict:
    if isinstance(model, IIDCollision):
        out = {"variant": "iid", "dim": model.dim, "sampler": model.sampler.to_json()}
        if isinstance(model.sampler, ChoiceSampler):
            out["generators"] = [g.to_json() for g in model.sampler.generators]
        return out
    if isinstance(model, MarkovModulated):
        return {"variant": "markov", "dim": model.dim,
                "generators": [g.to_json() for g in model.generators],
                "Q": model.rate_matrix.tolist(),
                "initial": model.initial.tolist()}
    if isinstance(model, FrozenDisorder):
        out = {"variant": "frozen", "dim": model.dim, "sampler": model.sampler.to_json()}
        if isinstance(model.sampler, ChoiceSampler):
            out["generators"] = [g.to_json() for g in model.sampler.generators]
        return out
    raise InvalidModel(f"unknown environment model {type(model).__name__}")


def stationary_distribution(q: np.ndarray) -> np.ndarray:
    """Probability vector pi with pi q = 0."""
    k = q.shape[0]
    a = np.vstack([q.T, np.ones(k)])
    b = np.zeros(k + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.any(pi < -1e-10):
        raise InvalidChain("chain has no nonnegative stationary law")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


# ---------------------------------------------------------------------------
# realized paths
# ---------------------------------------------------------------------------


class _BasePath:
    """Shared per-(model, seed) caches.  A path value is confined to one
    worker at a time; cross-seed parallelism is the supported axis."""

    def __init__(self, model, seed: int):
        self.model = model
        self.seed = int(seed)
        self._gen_superops: dict = {}
        self._expm_cache: dict = {}

    def segments(self, start: float, end: float):
        raise NotImplementedError

    def _superop_of(self, key, lind: Lindbladian) -> SuperOp:
        got = self._gen_superops.get(key)
        if got is None:
            got = to_superop(lind)
            self._gen_superops[key] = got
        return got

    def step(self, key, lind: Lindbladian, duration: float) -> np.ndarray:
        ck = (key, duration)
        got = self._expm_cache.get(ck)
        if got is None:
            gen = self._superop_of(key, lind)
            got = matrix_exp(gen.matrix * duration)
            self._expm_cache[ck] = got
            if len(self._expm_cache) > 4096:
                self._expm_cache.clear()
        return got


class _IIDPath(_BasePath):
    def __init__(self, model: IIDCollision, seed: int):
        super().__init__(model, seed)
        self.phase = float(rng_stream(seed, _PHASE_STREAM).uniform())
        self._cells: dict = {}

    def cell_generator(self, k: int) -> Lindbladian:
        got = self._cells.get(k)
        if got is None:
            zig = 2 * k if k >= 0 else -2 * k - 1
            rng = rng_stream(self.seed, _CELL_STREAM_BASE + zig)
            got = self.model.sampler.sample(rng, self.model.dim)
            self._cells[k] = got
        return got

    def segments(self, start: float, end: float):
        # cell k spans [phase + k, phase + k + 1)
        out = []
        t = start
        k = int(np.floor(t - self.phase))
        while t < end:
            right = self.phase + (k + 1)
            seg_end = min(right, end)
            if seg_end > t:
                out.append((k, self.cell_generator(k), seg_end - t))
            t = seg_end
            k += 1
        return out


class _MarkovPath(_BasePath):
    def __init__(self, model: MarkovModulated, seed: int):
        super().__init__(model, seed)
        rng0 = rng_stream(seed, _LABEL_STREAM)
        self.label0 = int(rng0.choice(len(model.generators), p=model.initial))
        self._fwd_rng = rng_stream(seed, _FORWARD_STREAM)
        self._bwd_rng = rng_stream(seed, _BACKWARD_STREAM)
        # forward: jump times after 0 and labels between them
        self._fwd_times = [0.0]
        self._fwd_labels = [self.label0]
        self._bwd_times = [0.0]
        self._bwd_labels = [self.label0]

    def _extend(self, times, labels, rng, rates, needed: float):
        while times[-1] < needed:
            i = labels[-1]
            out_rate = -rates[i, i]
            if out_rate <= 0:
                times.append(np.inf)
                labels.append(i)
                break
            hold = rng.exponential(1.0 / out_rate)
            probs = np.clip(rates[i].copy(), 0.0, None)
            probs[i] = 0.0
            probs = probs / probs.sum()
            nxt = int(rng.choice(len(probs), p=probs))
            times.append(times[-1] + hold)
            labels.append(nxt)

    def _label_at(self, x: float) -> int:
        if x >= 0:
            self._extend(self._fwd_times, self._fwd_labels, self._fwd_rng,
                         self.model.rate_matrix, x)
            idx = bisect.bisect_right(self._fwd_times, x) - 1
            return self._fwd_labels[idx]
        self._extend(self._bwd_times, self._bwd_labels, self._bwd_rng,
                     self.model.reversed_rates, -x)
        idx = bisect.bisect_right(self._bwd_times, -x) - 1
        return self._bwd_labels[idx]

    def _breakpoints(self, start: float, end: float):
        pts = [start]
        if start < 0:
            self._extend(self._bwd_times, self._bwd_labels, self._bwd_rng,
                         self.model.reversed_rates, -start)
            for t in self._bwd_times[1:]:
                x = -t
                if start < x < min(end, 0.0):
                    pts.append(x)
        if end > 0:
            self._extend(self._fwd_times, self._fwd_labels, self._fwd_rng,
                         self.model.rate_matrix, end)
            for t in self._fwd_times[1:]:
                if max(start, 0.0) < t < end:
                    pts.append(t)
        if start < 0 < end:
            pts.append(0.0)
        pts.append(end)
        return sorted(set(pts))

    def segments(self, start: float, end: float):
        pts = self._breakpoints(start, end)
        out = []
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= a:
                continue
            label = self._label_at((a + b) / 2.0 if a != -np.inf else a)
            out.append((label, self.model.generators[label], b - a))
        return out


class _FrozenPath(_BasePath):
    def __init__(self, model: FrozenDisorder, seed: int):
        super().__init__(model, seed)
        rng = rng_stream(seed, _LABEL_STREAM)
        self.generator = model.sampler.sample(rng, model.dim)

    def segments(self, start: float, end: float):
        return [(0, self.generator, end - start)]


@dataclass(frozen=True)
class EnvRealization:
    """One disorder realization with an exact shift origin."""

    path: _BasePath
    origin: float = 0.0

    @property
    def model(self):
        return self.path.model

    @property
    def seed(self) -> int:
        return self.path.seed

    @property
    def phase(self) -> float:
        return getattr(self.path, "phase", 0.0)


def realize(model, seed: int) -> EnvRealization:
    if isinstance(model, IIDCollision):
        return EnvRealization(_IIDPath(model, seed))
    if isinstance(model, MarkovModulated):
        return EnvRealization(_MarkovPath(model, seed))
    if isinstance(model, FrozenDisorder):
        return EnvRealization(_FrozenPath(model, seed))
    raise InvalidModel(f"unknown environment model {type(model).__name__}")


def shift(real: EnvRealization, h: float) -> EnvRealization:
    """Time shift: the shifted path at time t is the original at t + h."""
    return EnvRealization(path=real.path, origin=real.origin + h)


def propagator(real: EnvRealization, s: float, t: float) -> SuperOp:
    """Propagator from time s to time t along the realized path."""
    if not s < t:
        raise OrderViolation(f"need s < t, got s={s}, t={t}")
    a = real.origin + s
    b = real.origin + t
    total = None
    for key, lind, dur in real.path.segments(a, b):
        step = real.path.step(key, lind, dur)
        total = step if total is None else step @ total
    return SuperOp(total)


def segment_list(real: EnvRealization, s: float, t: float):
    """Segments of the path restricted to [s, t] as lindblad Segment values."""
    if not s < t:
        raise OrderViolation(f"need s < t, got s={s}, t={t}")
    out = []
    for key, lind, dur in real.path.segments(real.origin + s, real.origin + t):
        out.append(Segment(generator=real.path._superop_of(key, lind), duration=dur))
    return out


# ---------------------------------------------------------------------------
# strict-positivity onset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OnsetEstimate:
    """First grid time whose propagator certifies positivity improving.

    time is None when no grid point up to the horizon certified.
    """

    time: float | None
    horizon: float
    certificate: object | None
    direction: str = "forward"
    monotone: bool = True

    @property
    def found(self) -> bool:
        return self.time is not None


def strict_positivity_onset(real: EnvRealization, grid: float = 0.25,
                            horizon: float = 64.0, direction: str = "forward",
                            check_monotone: bool = False,
                            tol: Tolerances = DEFAULT) -> OnsetEstimate:
    """Scan grid times for the first certified positivity-improving window.

    forward scans phi_{0,t} for t = grid, 2 grid, ...; backward scans
    phi_{-t,0}.  Only the sufficient Choi criterion is used while scanning.
    With check_monotone, every later grid point is required to certify too.
    """
    if grid <= 0:
        raise ValueError("grid step must be positive")
    n_steps = int(np.floor(horizon / grid + 1e-9))
    found_at = None
    cert = None
    monotone = True
    for k in range(1, n_steps + 1):
        t = k * grid
        if direction == "forward":
            phi = propagator(real, 0.0, t)
        else:
            phi = propagator(real, -t, 0.0)
        c = strict_positivity_certificate(phi, restarts=0, tol=tol)
        if c.is_strict:
            if found_at is None:
                found_at, cert = t, c
                if not check_monotone:
                    break
        elif found_at is not None:
            monotone = False
    return OnsetEstimate(time=found_at, horizon=horizon, certificate=cert,
                         direction=direction, monotone=monotone)
