"""Environment generators: homogeneous baseline, SSEP-driven rates and i.i.d.
per-site Markov chains, each started from its stationary law."""
import logging
import math
from typing import Annotated, Dict, Iterator, List, Literal, Optional, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..common.exceptions import ModelError
from ..common.models import Window
from ..common.rng import STREAM_SCHEME, StreamPurpose, site_stream, substream
from .core import EnvironmentTrajectory, LatentTrack, SiteRateTrack

logger = logging.getLogger(__name__)


#Model specifications
class ConstantModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["constant"] = "constant"
    p: float = Field(..., ge=0, description="Rate of jumps to the right.")
    q: float = Field(..., ge=0, description="Rate of jumps to the left.")

    @model_validator(mode="after")
    def _check_total_rate(self) -> "ConstantModelSpec":
        if not self.p + self.q > 0:
            raise ValueError("constant model needs p + q > 0")
        return self

    @property
    def tag(self) -> str:
        return f"constant(p={self.p:g},q={self.q:g})"


class SsepModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["ssep"] = "ssep"
    alpha: float = Field(..., gt=0, description="Rate towards the occupied-site preferred direction.")
    beta: float = Field(..., gt=0)
    rho: float = Field(..., gt=0, lt=1, description="Density of the initial Bernoulli product measure.")
    half_width: int = Field(..., ge=1, description="Torus radius L; sites are -L..L.")
    exchange_rate: float = Field(1.0, gt=0, description="Rate of each bond's stirring clock.")
    margin: Optional[int] = Field(None, ge=0, description="Distance kept from the torus edge; default L // 4.")

    @model_validator(mode="after")
    def _check_regime(self) -> "SsepModelSpec":
        if not self.beta < self.alpha:
            raise ValueError(f"SSEP rates need 0 < beta < alpha, got alpha={self.alpha}, beta={self.beta}")
        if self.margin is not None and self.margin >= self.half_width:
            raise ValueError(f"margin {self.margin} leaves no room on a torus of radius {self.half_width}")
        return self

    @property
    def tag(self) -> str:
        return f"ssep(alpha={self.alpha:g},beta={self.beta:g},rho={self.rho:g},L={self.half_width})"

    @property
    def safe_bounds(self) -> Tuple[int, int]:
        m = self.margin if self.margin is not None else self.half_width // 4
        return -self.half_width + m, self.half_width - m


class ChainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["iid_chain"] = "iid_chain"
    states: List[str] = Field(..., min_length=1, description="Finite state space E.")
    generator: List[List[float]] = Field(..., description="Rate matrix Q, rows indexed like states.")
    alpha_plus: Dict[str, float]
    alpha_minus: Dict[str, float]

    @model_validator(mode="after")
    def _check_chain(self) -> "ChainSpec":
        n = len(self.states)
        if len(set(self.states)) != n:
            raise ValueError("states must be distinct")
        q = np.asarray(self.generator, dtype=float)
        if q.shape != (n, n):
            raise ValueError(f"generator must be {n}x{n}, got shape {q.shape}")
        off = q[~np.eye(n, dtype=bool)]
        if np.any(off < 0):
            raise ValueError("generator off-diagonal entries must be nonnegative")
        scale = max(1.0, float(np.abs(q).max()))
        if np.any(np.abs(q.sum(axis=1)) > 1e-9 * scale):
            raise ValueError("generator rows must sum to zero")
        for name, rates in (("alpha_plus", self.alpha_plus), ("alpha_minus", self.alpha_minus)):
            if set(rates) != set(self.states):
                raise ValueError(f"{name} must map exactly the states {self.states}")
            if any(not v > 0 for v in rates.values()):
                raise ValueError(f"{name} must be strictly positive (elliptic model)")
        return self

    @property
    def tag(self) -> str:
        return f"iid_chain(states={len(self.states)})"

    @property
    def q_matrix(self) -> np.ndarray:
        return np.asarray(self.generator, dtype=float)

    def rate_vectors(self) -> Tuple[np.ndarray, np.ndarray]:
        plus = np.array([self.alpha_plus[s] for s in self.states], dtype=float)
        minus = np.array([self.alpha_minus[s] for s in self.states], dtype=float)
        return plus, minus


ModelSpec = Annotated[Union[ConstantModelSpec, SsepModelSpec, ChainSpec], Field(discriminator="kind")]


class StationaryDistribution(BaseModel):
    weights: Dict[str, float]

    @model_validator(mode="after")
    def _check_probability(self) -> "StationaryDistribution":
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("stationary weights must be nonnegative")
        if abs(sum(self.weights.values()) - 1.0) > 1e-12:
            raise ValueError("stationary weights must sum to 1")
        return self

    def vector(self, states: List[str]) -> np.ndarray:
        return np.array([self.weights[s] for s in states], dtype=float)


#Samplers
def sample_constant(spec: ConstantModelSpec, window: Window) -> EnvironmentTrajectory:
    tracks = {x: SiteRateTrack.constant(x, spec.p, spec.q, window.t_max) for x in window.sites}
    return EnvironmentTrajectory(window, tracks, spec.tag, {"base_seed": None, "scheme": STREAM_SCHEME})


def stationary_distribution(spec: ChainSpec) -> StationaryDistribution:
    q = spec.q_matrix
    n = len(spec.states)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((i, j) for i in range(n) for j in range(n) if i != j and q[i, j] > 0)
    if not nx.is_strongly_connected(graph):
        components = [sorted(spec.states[i] for i in c) for c in nx.strongly_connected_components(graph)]
        raise ModelError(f"generator is reducible; communicating classes: {components}")

    # pi Q = 0 with one balance equation replaced by the normalisation.
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as e:
        raise ModelError(f"stationary equations are singular: {e}") from e
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ q).max())
    if residual > 1e-10 * max(1.0, float(np.abs(q).max())):
        raise ModelError(f"stationary solve residual {residual:.3e} exceeds tolerance")
    return StationaryDistribution(weights={s: float(w) for s, w in zip(spec.states, pi)})


def _jump_tables(spec: ChainSpec) -> Tuple[np.ndarray, np.ndarray]:
    q = spec.q_matrix
    exit_rates = -np.diag(q).copy()
    cumulative = np.zeros_like(q)
    for i, rate in enumerate(exit_rates):
        if rate > 0:
            row = np.where(np.arange(len(q)) == i, 0.0, q[i]) / rate
            cumulative[i] = np.cumsum(row)
    return exit_rates, cumulative


def _sample_chain_site(
    x: int, t_end: float, seed: int, pi: np.ndarray, exit_rates: np.ndarray, cumulative: np.ndarray
) -> LatentTrack:
    rng = site_stream(seed, StreamPurpose.ENVIRONMENT, x)
    n = len(pi)
    state = min(int(np.searchsorted(np.cumsum(pi), rng.random(), side="right")), n - 1)
    times, states = [0.0], [state]
    t = 0.0
    while exit_rates[state] > 0:
        t += rng.exponential(1.0 / exit_rates[state])
        if t >= t_end:
            break
        state = min(int(np.searchsorted(cumulative[state], rng.random(), side="right")), n - 1)
        times.append(t)
        states.append(state)
    return LatentTrack(np.array(times, dtype=float), np.array(states, dtype=int))


def sample_iid_sites(spec: ChainSpec, window: Window, seed: int) -> EnvironmentTrajectory:
    pi = stationary_distribution(spec).vector(spec.states)
    exit_rates, cumulative = _jump_tables(spec)
    plus, minus = spec.rate_vectors()
    tracks, latent = {}, {}
    for x in window.sites:
        chain = _sample_chain_site(x, window.t_max, seed, pi, exit_rates, cumulative)
        latent[x] = chain
        tracks[x] = SiteRateTrack(x, chain.times, plus[chain.states], minus[chain.states], window.t_max)
    seed_info = {"base_seed": seed, "scheme": STREAM_SCHEME, "streams": "per-site"}
    return EnvironmentTrajectory(window, tracks, spec.tag, seed_info, latent)


def spread_half_width(alpha: float, beta: float, rho: float, T: float, margin_fraction: float = 0.25) -> int:
    """Torus radius whose safe region holds a walk for time ``T`` with room to spare.

    The reach is the largest mean drift ``|alpha - beta| |2 rho - 1| T`` plus four
    standard deviations of a walk jumping at total rate ``alpha + beta``.
    """
    if not 0 <= margin_fraction < 1:
        raise ModelError(f"margin fraction must lie in [0, 1), got {margin_fraction}")
    reach = abs(alpha - beta) * abs(2 * rho - 1) * T + 4.0 * math.sqrt((alpha + beta) * T)
    return max(2, math.ceil(reach / (1.0 - margin_fraction)))


def _stir(eta: List[int], bonds: List[int]) -> List[int]:
    """Play the bond rings in order; return the indices of rings that moved a particle."""
    last = len(eta) - 1
    effective: List[int] = []
    append = effective.append
    for k, a in enumerate(bonds):
        b = a + 1 if a < last else 0
        if eta[a] != eta[b]:
            eta[a], eta[b] = eta[b], eta[a]
            append(k)
    return effective


def sample_ssep(spec: SsepModelSpec, T: float, seed: int) -> EnvironmentTrajectory:
    """Stirring construction of SSEP on the torus {-L, ..., L} started from Bernoulli(rho).

    An effective ring toggles both endpoints, so a site's occupation is its initial
    value flipped at the effective rings of its two bonds.
    """
    if not T > 0:
        raise ModelError(f"SSEP horizon must be positive, got {T}")
    L = spec.half_width
    n = 2 * L + 1
    rng = substream(seed, StreamPurpose.SSEP)
    eta0 = (rng.random(n) < spec.rho).astype(np.int64)
    n_rings = int(rng.poisson(n * spec.exchange_rate * T))
    ring_times = np.sort(rng.uniform(0.0, T, n_rings))
    bonds = rng.integers(0, n, n_rings)
    effective = np.asarray(_stir(eta0.tolist(), bonds.tolist()), dtype=np.int64)
    logger.debug("[SSEP] %d sites, %d bond rings on [0, %g], %d effective", n, n_rings, T, len(effective))

    left = bonds[effective]
    sites = np.concatenate([left, (left + 1) % n])
    flip_times = np.concatenate([ring_times[effective], ring_times[effective]])
    order = np.argsort(sites, kind="stable")
    sites, flip_times = sites[order], flip_times[order]
    cuts = np.searchsorted(sites, np.arange(n + 1))

    tracks, latent = {}, {}
    for i in range(n):
        x = i - L
        flips = flip_times[cuts[i]:cuts[i + 1]]
        # Flips at time zero fold into the initial state.
        at_zero = int(np.searchsorted(flips, 0.0, side="right"))
        starts = np.concatenate([[0.0], flips[at_zero:]])
        occupied = (eta0[i] + at_zero + np.arange(len(starts))) % 2
        plus = np.where(occupied == 1, spec.alpha, spec.beta)
        minus = np.where(occupied == 1, spec.beta, spec.alpha)
        tracks[x] = SiteRateTrack(x, starts, plus, minus, T, compact=False)
        latent[x] = LatentTrack(starts, occupied)
    window = Window(x_min=-L, x_max=L, t_max=T)
    seed_info = {"base_seed": seed, "scheme": STREAM_SCHEME, "streams": "ssep", "rings": n_rings,
                 "effective_rings": int(len(effective))}
    return EnvironmentTrajectory(window, tracks, spec.tag, seed_info, latent)


def extend_window(env: EnvironmentTrajectory, spec, window: Window, seed: Optional[int]) -> EnvironmentTrajectory:
    """Enlarge ``env`` to ``window``; sites already realized keep their tracks."""
    if not window.contains(env.window) or window.t_max != env.window.t_max:
        raise ModelError(f"cannot extend {env.window} to {window}: must contain it with the same horizon")
    if isinstance(spec, ConstantModelSpec):
        return sample_constant(spec, window)
    if isinstance(spec, ChainSpec):
        pi = stationary_distribution(spec).vector(spec.states)
        exit_rates, cumulative = _jump_tables(spec)
        plus, minus = spec.rate_vectors()
        tracks = dict(env.tracks)
        latent = dict(env.aux_state or {})
        for x in window.sites:
            if x in tracks:
                continue
            chain = _sample_chain_site(x, window.t_max, seed, pi, exit_rates, cumulative)
            latent[x] = chain
            tracks[x] = SiteRateTrack(x, chain.times, plus[chain.states], minus[chain.states], window.t_max)
        return EnvironmentTrajectory(window, tracks, env.model_tag, env.seed_info, latent)
    raise ModelError(f"model {type(spec).__name__} cannot be extended site by site")


def build_environment(spec, window: Window, seed: int) -> EnvironmentTrajectory:
    if isinstance(spec, ConstantModelSpec):
        return sample_constant(spec, window)
    if isinstance(spec, ChainSpec):
        return sample_iid_sites(spec, window, seed)
    if isinstance(spec, SsepModelSpec):
        return sample_ssep(spec, window.t_max, seed)
    raise ModelError(f"unsupported model spec {type(spec).__name__}")


#Model properties
def rate_bounds(spec) -> Tuple[float, float]:
    if isinstance(spec, ConstantModelSpec):
        return min(spec.p, spec.q), max(spec.p, spec.q)
    if isinstance(spec, SsepModelSpec):
        return spec.beta, spec.alpha
    if isinstance(spec, ChainSpec):
        plus, minus = spec.rate_vectors()
        rates = np.concatenate([plus, minus])
        return float(rates.min()), float(rates.max())
    raise ModelError(f"unsupported model spec {type(spec).__name__}")


def _involutions(n: int) -> Iterator[List[int]]:
    def extend(perm: List[Optional[int]], i: int) -> Iterator[List[int]]:
        if i == n:
            yield list(perm)
            return
        if perm[i] is not None:
            yield from extend(perm, i + 1)
            return
        perm[i] = i
        yield from extend(perm, i + 1)
        for j in range(i + 1, n):
            if perm[j] is None:
                perm[i], perm[j] = j, i
                yield from extend(perm, i + 1)
                perm[j] = None
        perm[i] = None

    yield from extend([None] * n, 0)


def is_reflection_symmetric(spec) -> bool:
    if isinstance(spec, ConstantModelSpec):
        return spec.p == spec.q
    if isinstance(spec, SsepModelSpec):
        return spec.rho == 0.5
    if isinstance(spec, ChainSpec):
        q = spec.q_matrix
        plus, minus = spec.rate_vectors()
        for sigma in _involutions(len(spec.states)):
            if np.allclose(q[np.ix_(sigma, sigma)], q) and np.allclose(plus[sigma], minus):
                return True
        return False
    raise ModelError(f"unsupported model spec {type(spec).__name__}")
