"""Network-level performance metrics and a brute-force oracle for tiny
instances."""

import itertools
from dataclasses import dataclass

import numpy as np

_ORACLE_MAX_USERS = 8
_ORACLE_MAX_BS = 4
_ORACLE_MAX_COMBOS = 3_000_000


@dataclass(frozen=True, eq=False)
class PerformanceReport:
    expected_stm: float
    fbar: float
    bit_throughput: float
    served: int
    unserved: int
    per_mu_message_rate: np.ndarray


def per_user_message_rate(assoc, alloc, profile, channel):
    """Perfect-matching message rate of each user at its allocated bandwidth."""
    b = np.einsum("ml,ml->m", assoc.x * alloc.n, np.log2(1.0 + channel.gamma))
    return profile.msg_per_bit * b


def expected_stm(assoc, alloc, profile, channel, tau):
    """Expected system throughput in message: tau * sum of per-user rates."""
    return float(tau * per_user_message_rate(assoc, alloc, profile, channel).sum())


def realized_stm(assoc, alloc, profile, channel, eta):
    """System throughput for one realization of the matching coefficients."""
    s = per_user_message_rate(assoc, alloc, profile, channel)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != s.shape:
        raise ValueError("eta must have one entry per user")
    return float((eta * s).sum())


def bit_throughput(assoc, alloc, channel):
    """Total delivered bit-rate over all served links."""
    return float(np.einsum("ml,ml->", assoc.x * alloc.n, np.log2(1.0 + channel.gamma)))


def confidence_bound(rates, tau, sigma, q):
    """Alpha-confidence lower bound on the realized throughput."""
    s = np.asarray(rates, dtype=float)
    return float(tau * s.sum() - sigma * q * np.sqrt((s * s).sum()))


def instance_message_rates(assoc, alloc, inst):
    """Per-user message rates of a solution to a bare UaInstance."""
    return np.einsum("ml,ml->m", assoc.x * alloc.n, inst.rate_per_hz())


def instance_fbar(assoc, alloc, inst):
    obj = inst.objective
    return confidence_bound(instance_message_rates(assoc, alloc, inst), obj.tau, obj.sigma, obj.q)


def build_report(assoc, alloc, profile, channel, tau, sigma, q):
    s = per_user_message_rate(assoc, alloc, profile, channel)
    return PerformanceReport(
        expected_stm=float(tau * s.sum()),
        fbar=confidence_bound(s, tau, sigma, q),
        bit_throughput=bit_throughput(assoc, alloc, channel),
        served=assoc.served,
        unserved=len(assoc.unserved),
        per_mu_message_rate=s,
    )


def feasibility_violations(assoc, alloc, inst, check_feasible_membership=True):
    """Largest constraint violations of a solution, for assertions and reports.

    Returns a dict with the single-association defect count, the worst
    budget overshoot relative to N_j, and the worst mismatch of the
    full-allocation equality on active BSs relative to N_j. Membership in
    the feasible sets is skipped for the knowledge-oblivious baselines.
    """
    x = assoc.x
    row_sums = x.sum(axis=1)
    served = np.ones(x.shape[0], dtype=bool)
    if assoc.unserved:
        served[list(assoc.unserved)] = False
    bad_rows = int((row_sums[served] != 1).sum() + (row_sums[~served] != 0).sum())
    if check_feasible_membership and x.size:
        bad_rows += int((x.astype(bool) & ~inst.mask())[served].sum())
    loads = np.einsum("ml,ml->l", x, alloc.n)
    over = np.max((loads - inst.budgets) / inst.budgets) if loads.size else 0.0
    active = x.sum(axis=0) > 0
    if np.any(active):
        eq_gap = np.max(np.abs(loads[active] - inst.budgets[active]) / inst.budgets[active])
    else:
        eq_gap = 0.0
    return {
        "association_defects": bad_rows,
        "budget_overshoot_rel": float(max(over, 0.0)),
        "full_allocation_gap_rel": float(eq_gap),
    }


@dataclass(frozen=True, eq=False)
class OracleSolution:
    association: object
    allocation: object
    fbar: float


def _compositions(units, parts):
    """All tuples of `parts` nonnegative ints summing to `units` (lexicographic)."""
    if parts == 1:
        yield (units,)
        return
    for head in range(units, -1, -1):
        for rest in _compositions(units - head, parts - 1):
            yield (head,) + rest


def oracle_enumerate(inst, quantum=None):
    """Exhaustive search over associations and quantized residual splits.

    Enumerates every all-served binary association over the feasible sets;
    each BS's leftover bandwidth is split on a grid of roughly `quantum`
    Hz. When budgets admit no all-served association at all, the search is
    repeated with a per-user unserved option so a best blocking solution
    is still returned. Refuses instances beyond 8 users x 4 BSs.
    """
    m, l = inst.n_t.shape
    if m > _ORACLE_MAX_USERS or l > _ORACLE_MAX_BS:
        raise ValueError(
            f"oracle refuses instances beyond {_ORACLE_MAX_USERS} users x {_ORACLE_MAX_BS} BSs"
        )
    mask = inst.mask()
    if quantum is None:
        quantum = float(inst.n_t[mask].min())
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    options = [tuple(s) for s in inst.feasible.sets]
    result = _oracle_search(inst, options, quantum)
    if result is None:
        result = _oracle_search(inst, [opt + (None,) for opt in options], quantum)
    return result


def _oracle_search(inst, options, quantum):
    from .solver import Allocation, Association  # local import to avoid a cycle

    m, l = inst.n_t.shape
    c = inst.rate_per_hz()
    obj = inst.objective
    sq = obj.sigma * obj.q
    budgets = inst.budgets

    best_f = -np.inf
    best_combo = None
    best_pick = None
    best_dims = None
    for combo in itertools.product(*options):
        users_of = [[] for _ in range(l)]
        for i, j in enumerate(combo):
            if j is not None:
                users_of[j].append(i)
        feasible = True
        for j in range(l):
            if users_of[j] and inst.n_t[users_of[j], j].sum() > budgets[j] * (1 + 1e-12):
                feasible = False
                break
        if not feasible:
            continue
        s1 = np.zeros(1)
        s2 = np.zeros(1)
        dims = []
        for j in range(l):
            if not users_of[j]:
                continue
            s_opts = _bs_rate_options(inst, c, users_of[j], j, quantum)
            dims.append((j, s_opts.shape[0]))
            if s1.size * s_opts.shape[0] > _ORACLE_MAX_COMBOS:
                raise ValueError("oracle grid too fine; raise the quantum")
            s1 = (s1[:, None] + s_opts.sum(axis=1)[None, :]).ravel()
            s2 = (s2[:, None] + (s_opts**2).sum(axis=1)[None, :]).ravel()
        f = obj.tau * s1 - sq * np.sqrt(s2)
        idx = int(np.argmax(f))
        if f[idx] > best_f:
            best_f = float(f[idx])
            best_combo = combo
            best_dims = dims
            best_pick = np.unravel_index(idx, [d[1] for d in dims]) if dims else ()

    if best_combo is None:
        return None
    x = np.zeros((m, l), dtype=np.int8)
    n = np.zeros((m, l))
    unserved = []
    users_of = [[] for _ in range(l)]
    for i, j in enumerate(best_combo):
        if j is None:
            unserved.append(i)
        else:
            x[i, j] = 1
            users_of[j].append(i)
    for (j, _), pick in zip(best_dims, best_pick):
        users = users_of[j]
        n_opts = _bs_bandwidth_options(inst, users, j, quantum)
        n[users, j] = n_opts[pick]
    assoc = Association(x=x, unserved=tuple(unserved))
    alloc = Allocation(n=n)
    return OracleSolution(association=assoc, allocation=alloc, fbar=best_f)


def _bs_bandwidth_options(inst, users, j, quantum):
    floors = inst.n_t[users, j]
    residual = inst.budgets[j] - floors.sum()
    if residual <= 1e-12 * inst.budgets[j]:
        return floors[None, :].copy()
    units = max(1, int(round(residual / quantum)))
    comps = np.array(list(_compositions(units, len(users))), dtype=float)
    return floors[None, :] + residual * comps / units


def _bs_rate_options(inst, c, users, j, quantum):
    return _bs_bandwidth_options(inst, users, j, quantum) * c[users, j][None, :]
