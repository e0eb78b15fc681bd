"""Knowledge bases, feasible BS sets, bit-to-message conversion, and the
stochastic knowledge-matching coefficient."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .seeding import substream

# Knowledge-matching draws must stay inside the open interval (0, 1).
ETA_CLAMP_EPS = 1e-9

# Roughly a 20-word sentence at 10 bits/word plus coding overhead.
DEFAULT_MSG_PER_BIT = 1.0 / 1600.0


@dataclass(frozen=True)
class KnowledgeModel:
    """Which knowledge domains each BS hosts and each user needs."""

    num_domains: int
    bs_kbs: tuple  # per-BS frozenset of domain labels in 1..K
    mu_needs: tuple  # per-MU frozenset of domain labels in 1..K

    def __post_init__(self):
        if self.num_domains < 1:
            raise ConfigError("num_domains must be >= 1")
        domains = set(range(1, self.num_domains + 1))
        for kb in self.bs_kbs:
            if not set(kb) <= domains:
                raise ConfigError("BS knowledge base outside domain range")
        for need in self.mu_needs:
            if not need:
                raise ConfigError("every user must need at least one domain")
            if not set(need) <= domains:
                raise ConfigError("user needs outside domain range")


@dataclass(frozen=True)
class FeasibleSets:
    """Per-user set of base stations achieving the maximum knowledge overlap."""

    num_bs: int
    sets: tuple  # per-MU sorted tuple of BS indices

    def __post_init__(self):
        for i, s in enumerate(self.sets):
            if not s:
                raise ConfigError(f"user {i} has an empty feasible set")
            if min(s) < 0 or max(s) >= self.num_bs:
                raise ConfigError(f"user {i}: BS index out of range")

    @property
    def num_users(self):
        return len(self.sets)

    def mask(self):
        out = np.zeros((len(self.sets), self.num_bs), dtype=bool)
        for i, s in enumerate(self.sets):
            out[i, list(s)] = True
        return out


def assign_knowledge(num_domains, kb_per_bs, needs_per_mu, topology, seed=0):
    """Draw uniform random domain subsets for every BS and every user."""
    if not 1 <= kb_per_bs <= num_domains:
        raise ConfigError("kb_per_bs must lie in [1, num_domains]")
    if not 1 <= needs_per_mu <= num_domains:
        raise ConfigError("needs_per_mu must lie in [1, num_domains]")
    bs_rng = substream(seed, "bs-knowledge")
    mu_rng = substream(seed, "mu-knowledge")
    bs_kbs = tuple(
        frozenset(int(v) + 1 for v in bs_rng.choice(num_domains, size=kb_per_bs, replace=False))
        for _ in range(topology.num_bs)
    )
    mu_needs = tuple(
        frozenset(int(v) + 1 for v in mu_rng.choice(num_domains, size=needs_per_mu, replace=False))
        for _ in range(topology.num_users)
    )
    return KnowledgeModel(num_domains=num_domains, bs_kbs=bs_kbs, mu_needs=mu_needs)


def feasible_bs_sets(model):
    """All base stations that maximize |KB(j) ∩ needs(i)|, ties included."""
    L = len(model.bs_kbs)
    sets = []
    for need in model.mu_needs:
        overlap = np.array([len(kb & need) for kb in model.bs_kbs])
        best = overlap.max()
        sets.append(tuple(int(j) for j in np.flatnonzero(overlap == best)))
    return FeasibleSets(num_bs=L, sets=tuple(sets))


@dataclass(frozen=True, eq=False)
class B2mProfile:
    """Linear bit-to-message transformation: rate_i(b) = msg_per_bit[i] * b."""

    msg_per_bit: np.ndarray

    def __post_init__(self):
        kappa = np.asarray(self.msg_per_bit, dtype=float)
        if np.any(kappa <= 0):
            raise ConfigError("msg_per_bit coefficients must be positive")
        object.__setattr__(self, "msg_per_bit", kappa)

    @classmethod
    def uniform(cls, num_users, msg_per_bit=DEFAULT_MSG_PER_BIT):
        return cls(np.full(num_users, float(msg_per_bit)))


def b2m_rate(profile, user, bit_rate_bps):
    """Message rate of one user under perfect knowledge matching."""
    b = np.asarray(bit_rate_bps, dtype=float)
    if np.any(b < 0):
        raise ValueError("bit rate must be nonnegative")
    return profile.msg_per_bit[user] * b


@dataclass(frozen=True)
class EtaModel:
    """Gaussian knowledge-matching coefficient: eta ~ N(tau, sigma^2)."""

    tau: float
    sigma: float

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must lie in (0, 1)")
        if self.sigma < 0.0:
            raise ConfigError("sigma must be nonnegative")


def sample_eta(model, num_users, seed=0, clamp=True):
    """Draw i.i.d. matching coefficients, clamped into (0, 1) by default."""
    rng = substream(seed, "eta")
    draws = rng.normal(model.tau, model.sigma, size=num_users)
    if clamp:
        np.clip(draws, ETA_CLAMP_EPS, 1.0 - ETA_CLAMP_EPS, out=draws)
    return draws
