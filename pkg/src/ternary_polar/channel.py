"""Symmetric-capacity view of q-ary channels.

A channel is stored as a list of outputs, each carrying its probability
``W(y)`` under uniform inputs and its posterior vector
``v_x(y) = W(y|x) / (q W(y))``.  Every capacity functional used by the
polarization analysis depends on the channel only through these pairs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SUM_TOL = 1e-12


class ChannelError(ValueError):
    """Raised for malformed channels or posterior vectors."""


class AlphabetMismatchError(ChannelError):
    """Raised when two objects with different alphabet sizes are combined."""


def _check_posterior(v: np.ndarray, tol: float = SUM_TOL) -> None:
    if v.ndim != 1 or v.size < 2:
        raise ChannelError(f"posterior must be a 1-D vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ChannelError("posterior contains non-finite entries")
    if np.any(v < -tol) or np.any(v > 1 + tol):
        raise ChannelError(f"posterior entries must lie in [0, 1]: {v.tolist()}")
    if abs(v.sum() - 1.0) > tol:
        raise ChannelError(f"posterior must sum to 1 (got {v.sum()!r})")


@dataclass(frozen=True)
class PosteriorVector:
    """A point on the (q-1)-simplex."""

    v: np.ndarray

    def __post_init__(self):
        arr = np.array(self.v, dtype=float)
        _check_posterior(arr)
        arr = np.clip(arr, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)

    @property
    def q(self) -> int:
        return self.v.size

    def __array__(self, dtype=None, copy=None):
        return self.v if dtype is None else self.v.astype(dtype)

    def __len__(self):
        return self.v.size

    def __getitem__(self, i):
        return self.v[i]

    def tolist(self) -> list[float]:
        return self.v.tolist()


def _as_vector(v) -> np.ndarray:
    if isinstance(v, PosteriorVector):
        return v.v
    return np.asarray(v, dtype=float)


def entropy(v) -> float:
    """Base-q Shannon entropy of a posterior vector, with 0 log 0 = 0."""
    v = _as_vector(v)
    nz = v[v > 0]
    h = -float(np.sum(nz * np.log(nz))) / math.log(v.size)
    return min(max(h, 0.0), 1.0)


def entropies(vs: np.ndarray) -> np.ndarray:
    """Row-wise base-q entropy of a 2-D array of posteriors."""
    vs = np.asarray(vs, dtype=float)
    q = vs.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(vs > 0, vs * np.log(np.where(vs > 0, vs, 1.0)), 0.0)
    return np.clip(-terms.sum(axis=-1) / math.log(q), 0.0, 1.0)


def cross_correlate(v_b, v_a) -> np.ndarray:
    """Circular cross-correlation ``w_u = sum_u' v_b[u'] v_a[u + u' mod q]``.

    This is the posterior of the minus-combined channel at output
    ``(y1, y2)`` when ``v_a = v(y1)`` and ``v_b = v(y2)``.
    """
    vb = _as_vector(v_b)
    va = _as_vector(v_a)
    if vb.size != va.size:
        raise AlphabetMismatchError(f"alphabet sizes differ: {vb.size} vs {va.size}")
    q = va.size
    idx = (np.arange(q)[:, None] + np.arange(q)[None, :]) % q
    w = va[idx] @ vb
    return w / w.sum()


@dataclass(frozen=True)
class Channel:
    """q-ary input channel as (mass, posterior) pairs.

    ``masses[y]`` is ``W(y)`` and ``posteriors[y]`` is ``v(y)``.  Arrays are
    copied and frozen on construction.
    """

    q: int
    masses: np.ndarray
    posteriors: np.ndarray
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.masses, dtype=float).reshape(-1)
        p = np.array(self.posteriors, dtype=float)
        if p.ndim != 2 or p.shape[0] != m.size:
            raise ChannelError(
                f"expected {m.size} posteriors of length q, got array of shape {p.shape}")
        if p.shape[1] != self.q:
            raise AlphabetMismatchError(f"posterior length {p.shape[1]} != q={self.q}")
        if self._validate:
            if self.q < 2:
                raise ChannelError("q must be >= 2")
            if m.size == 0:
                raise ChannelError("channel has no outputs")
            if np.any(m < 0) or not np.all(np.isfinite(m)):
                raise ChannelError("output masses must be finite and nonnegative")
            if abs(m.sum() - 1.0) > SUM_TOL * max(1, m.size):
                raise ChannelError(f"output masses must sum to 1 (got {m.sum()!r})")
            for row in p:
                _check_posterior(row, tol=SUM_TOL * 10)
        p = np.clip(p, 0.0, 1.0)
        m.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "posteriors", p)

    @property
    def outputs(self) -> list[tuple[float, PosteriorVector]]:
        return [(float(w), PosteriorVector(v)) for w, v in zip(self.masses, self.posteriors)]

    def __len__(self):
        return self.masses.size

    @classmethod
    def from_outputs(cls, q: int, outputs) -> "Channel":
        outputs = list(outputs)
        masses = [float(w) for w, _ in outputs]
        posts = [_as_vector(v) for _, v in outputs]
        return cls(q, np.array(masses), np.array(posts).reshape(len(posts), q))

    @classmethod
    def from_transition_matrix(cls, W) -> "Channel":
        """Build from ``W[x, y] = W(y|x)`` (rows are inputs)."""
        W = np.asarray(W, dtype=float)
        q = W.shape[0]
        if not np.allclose(W.sum(axis=1), 1.0, atol=1e-12):
            raise ChannelError("rows of the transition matrix must sum to 1")
        masses = W.sum(axis=0) / q
        keep = masses > 0
        posts = (W[:, keep] / (q * masses[keep])).T
        return cls(q, masses[keep], posts)

    def to_transition_matrix(self) -> np.ndarray:
        return (self.q * self.masses[:, None] * self.posteriors).T

    def to_json(self) -> str:
        return json.dumps({
            "q": self.q,
            "outputs": [{"mass": float(w), "posterior": [float(x) for x in v]}
                        for w, v in zip(self.masses, self.posteriors)],
        })

    @classmethod
    def from_json(cls, text: str) -> "Channel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ChannelError(f"invalid channel JSON: {exc}") from None
        if not isinstance(data, dict) or "q" not in data or "outputs" not in data:
            raise ChannelError('channel JSON needs keys "q" and "outputs"')
        q = data["q"]
        if not isinstance(q, int) or q < 2:
            raise ChannelError(f'"q" must be an integer >= 2, got {q!r}')
        outs = data["outputs"]
        if not isinstance(outs, list) or not outs:
            raise ChannelError('"outputs" must be a non-empty list')
        masses, posts = [], []
        for k, o in enumerate(outs):
            if not isinstance(o, dict) or "mass" not in o or "posterior" not in o:
                raise ChannelError(f'output {k} needs "mass" and "posterior"')
            post = o["posterior"]
            if not isinstance(post, list) or len(post) != q:
                raise ChannelError(f"output {k}: posterior must be a list of {q} numbers")
            masses.append(float(o["mass"]))
            posts.append([float(x) for x in post])
        return cls(q, np.array(masses), np.array(posts))

    @classmethod
    def load(cls, path) -> "Channel":
        return cls.from_json(Path(path).read_text())


def qsc_channel(p: float, q: int = 3) -> Channel:
    """q-ary symmetric channel with error probability ``p``."""
    if not 0.0 <= p <= (q - 1) / q + 1e-15:
        raise ChannelError(f"QSC error probability must be in [0, (q-1)/q], got {p}")
    W = np.full((q, q), p / (q - 1))
    np.fill_diagonal(W, 1.0 - p)
    return Channel.from_transition_matrix(W)


def noiseless_channel(q: int = 3) -> Channel:
    return Channel(q, np.full(q, 1.0 / q), np.eye(q))


def useless_channel(q: int = 3) -> Channel:
    return Channel(q, np.ones(1), np.full((1, q), 1.0 / q))


def capacity(W: Channel) -> float:
    """Symmetric capacity in base-q units."""
    return float(np.dot(W.masses, 1.0 - entropies(W.posteriors)))


@dataclass(frozen=True)
class CapacityProfile:
    """Distribution of per-output capacity contributions ``G = 1 - H[v(y)]``."""

    bins: tuple[tuple[float, float], ...]

    @property
    def G(self) -> np.ndarray:
        return np.array([g for g, _ in self.bins])

    @property
    def mass(self) -> np.ndarray:
        return np.array([m for _, m in self.bins])

    def mean(self) -> float:
        return float(np.dot(self.G, self.mass))


def capacity_profile(W: Channel, tol: float = 1e-9) -> CapacityProfile:
    G = 1.0 - entropies(W.posteriors)
    order = np.argsort(G, kind="stable")
    bins: list[list[float]] = []
    for k in order:
        g, m = float(G[k]), float(W.masses[k])
        if bins and g - bins[-1][2] < tol:
            b = bins[-1]
            b[0] = (b[0] * b[1] + g * m) / (b[1] + m) if b[1] + m > 0 else b[0]
            b[1] += m
        else:
            # third slot anchors the bin so chains of near-equal values cannot drift
            bins.append([g, m, g])
    return CapacityProfile(tuple((b[0], b[1]) for b in bins))


def _check_pair(W_a: Channel, W_b: Channel) -> int:
    if W_a.q != W_b.q:
        raise AlphabetMismatchError(f"alphabet sizes differ: {W_a.q} vs {W_b.q}")
    return W_a.q


def _minus_posteriors(Pa: np.ndarray, Pb: np.ndarray) -> np.ndarray:
    q = Pa.shape[1]
    out = np.empty((Pa.shape[0], Pb.shape[0], q))
    for u in range(q):
        out[:, :, u] = Pa[:, (u + np.arange(q)) % q] @ Pb.T
    return out


def minus_transform(W_a: Channel, W_b: Channel) -> Channel:
    """The channel ``W_a ⊠ W_b`` seen by the first of two combined symbols."""
    q = _check_pair(W_a, W_b)
    masses = np.outer(W_a.masses, W_b.masses).reshape(-1)
    posts = _minus_posteriors(W_a.posteriors, W_b.posteriors).reshape(-1, q)
    posts /= posts.sum(axis=1, keepdims=True)
    return Channel(q, masses / masses.sum(), posts, _validate=False)


def plus_transform(W_a: Channel, W_b: Channel) -> Channel:
    """The channel seen by the second symbol once the first is known.

    Outputs are triples ``(y1, y2, u1)``; the posterior of ``u2`` is
    proportional to ``v_a[u1 + u2] * v_b[u2]``.  Zero-mass outputs are dropped.
    """
    q = _check_pair(W_a, W_b)
    Pa, Pb = W_a.posteriors, W_b.posteriors
    w = _minus_posteriors(Pa, Pb)  # (n1, n2, q): P(u1 | y1, y2)
    masses = W_a.masses[:, None, None] * W_b.masses[None, :, None] * w
    joint = np.empty(w.shape + (q,))
    for u1 in range(q):
        joint[:, :, u1, :] = Pa[:, None, (u1 + np.arange(q)) % q] * Pb[None, :, :]
    joint = joint.reshape(-1, q)
    masses = masses.reshape(-1)
    keep = masses > 0
    joint, masses = joint[keep], masses[keep]
    posts = joint / joint.sum(axis=1, keepdims=True)
    return Channel(q, masses / masses.sum(), posts, _validate=False)


def canonical_rotation(v) -> np.ndarray:
    """Lexicographically largest cyclic rotation (largest entry comes first)."""
    v = _as_vector(v)
    rots = [np.roll(v, -s) for s in range(v.size)]
    return max(rots, key=lambda r: tuple(r))


def merge_outputs(W: Channel, tol: float = 0.0) -> Channel:
    """Merge outputs whose posteriors agree up to cyclic shift within ``tol``.

    Merging replaces a group by one output carrying the summed mass and the
    mass-weighted mean posterior.  Shift-merging leaves every capacity
    functional of the polarization tree unchanged; tolerance merging can only
    lower capacity, by an amount that is empirically below
    ``q * tol * len(W)``.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    canon = np.array([canonical_rotation(v) for v in W.posteriors])
    order = sorted(range(len(W)), key=lambda k: tuple(canon[k]))
    groups: list[list[int]] = []
    anchor = None
    for k in order:
        if anchor is not None and np.max(np.abs(canon[k] - anchor)) <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
            anchor = canon[k]
    masses = np.array([W.masses[g].sum() for g in groups])
    posts = np.empty((len(groups), W.q))
    for i, g in enumerate(groups):
        m = W.masses[g]
        posts[i] = m @ canon[g] / m.sum() if m.sum() > 0 else canon[g].mean(axis=0)
    keep = masses > 0
    return Channel(W.q, masses[keep] / masses[keep].sum(), posts[keep], _validate=False)


def random_channel(rng: np.random.Generator, q: int = 3, n_min: int = 3, n_max: int = 8,
                   symmetrize: bool = True) -> Channel:
    """Random channel: Dirichlet(1) posteriors, uniform-then-normalized masses.

    With ``symmetrize`` every base output is expanded into its ``q`` cyclic
    shifts so that the outputs average to the uniform prior, i.e. the result
    is a genuine channel under uniform inputs.  Capacity functionals are
    unaffected by the expansion.
    """
    n = int(rng.integers(n_min, n_max + 1))
    posts = rng.dirichlet(np.ones(q), size=n)
    masses = rng.uniform(size=n)
    masses /= masses.sum()
    if symmetrize:
        posts = np.concatenate([np.roll(posts, s, axis=1) for s in range(q)])
        masses = np.concatenate([masses / q] * q)
    return Channel(q, masses, posts)
