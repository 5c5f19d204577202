"""Bosons in a chain of double wells driven by alternating hopping rounds.

States are kept in the fixed-particle-number sector as a sparse list of
occupation configurations, which keeps 12-site chains cheap.  The hopping
propagator is exp(+i t H) with H = a_L^dag a_R + a_R^dag a_L, so one round at
t = pi/4 maps |0,1> to (|0,1> + i|1,0>)/sqrt2.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import linalg as la
from .errors import CutoffLeak, TooLarge

LEAK_THRESHOLD = 1e-10
DEFAULT_CUTOFF = 4
HOP_TIME = np.pi / 4


@dataclass(frozen=True, eq=False)
class FockChain:
    """Amplitudes over occupation configurations; site 1 is column 0 of `configs`."""

    configs: np.ndarray  # (K, n) int, sorted by key
    amps: np.ndarray  # (K,) complex
    cutoff: int

    @property
    def n_sites(self) -> int:
        return self.configs.shape[1]

    @property
    def d(self) -> int:
        return self.cutoff + 1

    @property
    def particles(self) -> int:
        return int(self.configs[0].sum()) if len(self.configs) else 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def mean_particle_number(self) -> float:
        return float(np.sum(abs(self.amps) ** 2 * self.configs.sum(axis=1)))

    def dense(self, cap: int = 14) -> np.ndarray:
        """Tensor of shape (d,)*n with axis k holding site k+1."""
        if self.n_sites > cap:
            raise TooLarge(f"{self.n_sites} sites exceeds the dense cap of {cap}")
        out = np.zeros((self.d,) * self.n_sites, dtype=complex)
        out[tuple(self.configs.T)] = self.amps
        return out

    def amplitude(self, config) -> complex:
        key = _keys(np.atleast_2d(config), self.d)[0]
        k = np.searchsorted(_keys(self.configs, self.d), key)
        if k < len(self.amps) and np.array_equal(self.configs[k], config):
            return complex(self.amps[k])
        return 0j


def _keys(configs: np.ndarray, d: int) -> np.ndarray:
    weights = d ** np.arange(configs.shape[1], dtype=np.int64)
    return configs.astype(np.int64) @ weights


def _canonical(configs, amps, cutoff) -> FockChain:
    keys = _keys(configs, cutoff + 1)
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    summed = np.zeros(len(uniq), dtype=complex)
    np.add.at(summed, inv, amps)
    keep = abs(summed) > 1e-15
    return FockChain(configs[first][keep], summed[keep], cutoff)


def initial_state(n_pairs: int, cutoff: int = DEFAULT_CUTOFF) -> FockChain:
    """|0,1,0,1,...,0,1>: the right site of every double well holds one boson."""
    if cutoff < 1:
        raise ValueError("cutoff must allow at least one boson per site")
    if n_pairs < 1:
        raise ValueError("need at least one double well")
    config = np.tile([0, 1], n_pairs)[None, :]
    return FockChain(config, np.ones(1, dtype=complex), cutoff)


@lru_cache(maxsize=256)
def _sector_propagator(total: int, t: float) -> np.ndarray:
    """exp(i t H) on the states |k, total - k>, indexed by k."""
    k = np.arange(total)
    off = np.sqrt((k + 1) * (total - k))
    h = np.diag(off, -1) + np.diag(off, 1)
    return sla.expm(1j * t * h)


def hop_pair(c: FockChain, pair, t: float = HOP_TIME, leak_threshold: float = LEAK_THRESHOLD) -> FockChain:
    """Evolve the adjacent sites `pair` = (i, i+1), numbered from 1, for time t."""
    i, j = pair
    if j != i + 1 or i < 1 or j > c.n_sites:
        raise ValueError(f"{pair} is not an adjacent pair of a {c.n_sites}-site chain")
    li, ri = i - 1, j - 1
    left, right = c.configs[:, li], c.configs[:, ri]
    totals = left + right
    new_cfg, new_amp = [], []
    for total in np.unique(totals):
        rows = np.flatnonzero(totals == total)
        u = _sector_propagator(int(total), float(t))
        for k_new in range(total + 1):
            cfg = c.configs[rows].copy()
            cfg[:, li] = k_new
            cfg[:, ri] = total - k_new
            new_cfg.append(cfg)
            new_amp.append(u[k_new, left[rows]] * c.amps[rows])
    configs = np.concatenate(new_cfg)
    amps = np.concatenate(new_amp)
    over = (configs[:, li] > c.cutoff) | (configs[:, ri] > c.cutoff)
    if over.any():
        # sum amplitudes per configuration before judging the leak
        lost = _canonical(configs[over], amps[over], int(configs.max()))
        weight = float(np.sum(abs(lost.amps) ** 2))
        if weight > leak_threshold:
            raise CutoffLeak(f"{weight:.3g} of the norm lies above occupation {c.cutoff}", weight)
        configs, amps = configs[~over], amps[~over]
    return _canonical(configs, amps, c.cutoff)


def round_pairs(n_sites: int, round_index: int) -> list[tuple[int, int]]:
    """Pairs hopped in a round: (1,2),(3,4),... in odd rounds, (2,3),(4,5),... in even ones."""
    start = 1 if round_index % 2 == 1 else 2
    return [(i, i + 1) for i in range(start, n_sites, 2)]


def run_protocol(n_pairs: int, cutoff: int = DEFAULT_CUTOFF, n_shift_rounds: int = 2,
                 t: float = HOP_TIME) -> FockChain:
    """Alternate hopping rounds; round 1 acts inside the double wells."""
    c = initial_state(n_pairs, cutoff)
    for r in range(1, n_shift_rounds + 1):
        for pair in round_pairs(c.n_sites, r):
            c = hop_pair(c, pair, t)
    return c


def halfchain_entropy(c: FockChain, cut: int) -> float:
    """Entropy in bits between sites 1..cut and cut+1..n, block by block in particle number."""
    if cut <= 0 or cut >= c.n_sites:
        return 0.0
    left = c.configs[:, :cut]
    right = c.configs[:, cut:]
    lkey = _keys(left, c.d)
    rkey = _keys(right, c.d)
    nleft = left.sum(axis=1)
    probs = []
    for n in np.unique(nleft):
        rows = nleft == n
        lu, li = np.unique(lkey[rows], return_inverse=True)
        ru, ri = np.unique(rkey[rows], return_inverse=True)
        m = np.zeros((len(lu), len(ru)), dtype=complex)
        m[li, ri] = c.amps[rows]
        probs.append(np.linalg.svd(m, compute_uv=False) ** 2)
    return la.shannon_entropy(np.concatenate(probs))


def occupation_distribution(c: FockChain, site: int) -> np.ndarray:
    return np.bincount(c.configs[:, site - 1], weights=abs(c.amps) ** 2, minlength=c.d)[: c.d]


def tail_weight(c: FockChain, threshold: int) -> float:
    """Largest probability, over sites, of finding `threshold` or more bosons."""
    return max(float(occupation_distribution(c, s)[threshold:].sum()) for s in range(1, c.n_sites + 1))


def max_occupation(c: FockChain, tol: float = 1e-12) -> int:
    probs = np.zeros(c.d)
    for s in range(1, c.n_sites + 1):
        probs = np.maximum(probs, occupation_distribution(c, s))
    return int(np.flatnonzero(probs > tol).max())


@dataclass(frozen=True)
class EntropyRow:
    n_sites: int
    round: int
    cut: int
    entropy: float


def entropy_table(n_pairs: int, cutoff: int, rounds: int) -> list[EntropyRow]:
    """(round, cut, entropy) for every round 0..rounds and every cut."""
    c = initial_state(n_pairs, cutoff)
    rows = [EntropyRow(c.n_sites, 0, k, 0.0) for k in range(1, c.n_sites)]
    for r in range(1, rounds + 1):
        for pair in round_pairs(c.n_sites, r):
            c = hop_pair(c, pair)
        rows += [EntropyRow(c.n_sites, r, k, halfchain_entropy(c, k)) for k in range(1, c.n_sites)]
    return rows


@dataclass(frozen=True)
class ConvergenceRow:
    n_sites: int
    round: int
    max_entropy: float
    best_cut: int
    max_occupation: int


def convergence_table(max_sites: int = 12, rounds: int = 6) -> list[ConvergenceRow]:
    """Largest half-chain entropy per (size, round), computed without truncation."""
    out = []
    for n_pairs in range(1, max_sites // 2 + 1):
        c = initial_state(n_pairs, cutoff=n_pairs)
        for r in range(1, rounds + 1):
            for pair in round_pairs(c.n_sites, r):
                c = hop_pair(c, pair)
            ent = [halfchain_entropy(c, k) for k in range(1, c.n_sites)]
            k = int(np.argmax(ent)) if ent else 0
            out.append(ConvergenceRow(c.n_sites, r, float(ent[k]) if ent else 0.0, k + 1, max_occupation(c)))
    return out


def protocol_maximum(max_sites: int = 12, cutoff: int = DEFAULT_CUTOFF) -> tuple[float, int, int]:
    """Largest half-chain entropy of the two-round protocol over sizes up to max_sites.

    Returns (entropy, n_sites, cut).
    """
    best = (0.0, 0, 0)
    for n_pairs in range(1, max_sites // 2 + 1):
        c = run_protocol(n_pairs, cutoff, 2)
        for k in range(1, c.n_sites):
            e = halfchain_entropy(c, k)
            if e > best[0]:
                best = (e, c.n_sites, k)
    return best


@dataclass(frozen=True, eq=False)
class TransportDemo:
    """Correlation-space action of tilted number measurements on one block."""

    chis: np.ndarray
    operators: list
    unitarity_residuals: np.ndarray
    commutator_norm: float
    rotation_angles: np.ndarray
    schmidt_coefficients: np.ndarray


def block_tensor(n_pairs: int = 3, cutoff: int = DEFAULT_CUTOFF, block: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """MPS tensor A[m2, m3]_{b, a} of the block of sites (2k, 2k+1) after two rounds.

    The virtual indices come from Schmidt decompositions across the cuts
    inside neighboring double wells, where the state carries exactly one ebit.
    """
    c = run_protocol(n_pairs, cutoff, 2)
    psi = c.dense()
    d = c.d
    lo = 2 * block - 1  # cut after site 2k-1
    hi = lo + 2  # cut after site 2k+1
    u_lo, s_lo, _ = np.linalg.svd(psi.reshape(d**lo, -1), full_matrices=False)
    u_hi, s_hi, _ = np.linalg.svd(psi.reshape(d**hi, -1), full_matrices=False)
    left_lo = u_lo[:, :2]
    left_hi = u_hi[:, :2].reshape(d**lo, d, d, 2)
    # A[m1, m2]_{b, a} = <L_b| l_a, m1, m2>
    tensor = np.einsum("xa,xmnb->mnba", left_lo, left_hi.conj())
    return tensor, s_lo[:3], s_hi[:3]


def transport_demo(n_pairs: int = 3, n_angles: int = 9) -> TransportDemo:
    """Single-axis rotations from measuring a block in cos(chi)|1,0> + sin(chi)|0,1>.

    Within the one-boson sector of a block every such outcome acts on the
    correlation space as a unitary, and all of them commute: the rotations
    share one axis.
    """
    tensor, s_lo, s_hi = block_tensor(n_pairs)
    chis = np.linspace(0, np.pi, n_angles, endpoint=False)
    ops = []
    for chi in chis:
        op = np.cos(chi) * tensor[1, 0] + np.sin(chi) * tensor[0, 1]
        ops.append(op)
    resid = np.array([la.unitarity_residual(o) for o in ops])
    comm = max(np.linalg.norm(a @ b - b @ a) for a in ops for b in ops)
    angles = []
    for o in ops:
        ev = np.linalg.eigvals(la.dagger(ops[0]) @ o)
        angles.append(float(abs(np.angle(ev[1] / ev[0]))))
    return TransportDemo(chis, ops, resid, float(comm), np.array(angles), np.concatenate([s_lo, s_hi]))
