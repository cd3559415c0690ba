"""Assembly and solution of the resilient-routing linear program.

Failure resilience is bought by adding, to each link's capacity row, the
worst virtual load the link could inherit from up to F failed links. The
inner maximization over virtual loads dualizes into per-link multipliers
(pi, lam), giving one linear program over

    x = r (+) p (+) pi (+) lam (+) mu

that minimizes the maximum link utilization mu subject to r and p being
routings, the dualized capacity rows, and optional transmitter-group
rows. Variable blocks follow that order; r and p live in [0, 1], the
multipliers and mu are nonnegative and unbounded above.

After a solve, links whose protection routing is stuck on themselves
(p_l(l) = 1, e.g. virtualization halves with no alternate path) are
flagged: they carry no foreign demand, cannot be protected, and are
carved out of the effective utilization so the congestion-free
certificate survives topology virtualization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import analysis
from .constraints import Mode, RoutingIndexer, build_protection_system, build_routing_system
from .lp import LinearProgram, LPSolution, SimplexConfig, solve_lp
from .reconfig import EPS_DIAG
from .topology import Topology, VirtualizedTopology, virtualize
from .wireless import build_wireless_rows


class R3InfeasibleError(RuntimeError):
    """Raised when no feasible routing pair exists; carries the demand
    pairs with no connecting path (the usual culprit)."""

    def __init__(self, message: str, unreachable_pairs=()):
        super().__init__(message)
        self.unreachable_pairs = tuple(unreachable_pairs)


@dataclass
class R3Instance:
    vt: VirtualizedTopology
    demand: np.ndarray
    F: int
    wireless: bool = False
    mode: Mode = "full"
    wireless_include_singletons: bool = False
    wireless_all_pairs: bool = False
    wireless_rhs_times_mu: bool = False

    def __post_init__(self) -> None:
        self.demand = np.asarray(self.demand, dtype=float)
        n = self.vt.base.n
        if self.demand.shape != (n, n):
            raise ValueError(f"demand must be {n}x{n}")
        if np.any(np.diagonal(self.demand) != 0):
            raise ValueError("demand diagonal must be zero")
        if np.any(self.demand < 0):
            raise ValueError("demand must be nonnegative")
        if not float(self.F).is_integer() or self.F < 0:
            raise ValueError("failure budget F must be a nonnegative integer")
        self.F = int(self.F)

    @classmethod
    def from_topology(cls, t: Topology, demand: np.ndarray, F: int, **kwargs) -> "R3Instance":
        return cls(vt=virtualize(t), demand=demand, F=F, **kwargs)

    def embedded_demand(self) -> np.ndarray:
        """Demand zero-padded onto the derived vertex set (virtual vertices
        neither emit nor attract traffic)."""
        n_d = self.vt.derived.n
        out = np.zeros((n_d, n_d))
        n = self.vt.base.n
        out[:n, :n] = self.demand
        return out


@dataclass
class R3Solution:
    r: np.ndarray
    p: np.ndarray
    pi: np.ndarray
    lam: np.ndarray
    mu: float
    effective_mu: float
    ignored_links: frozenset[int]
    iterations: int
    instance: R3Instance
    dropped_demands: tuple[tuple[int, int, float], ...] = ()

    def link_loads(self) -> np.ndarray:
        d = self.instance.embedded_demand()
        return np.einsum("ab,abl->l", d, self.r)


@dataclass(frozen=True)
class VariableLayout:
    n: int
    N: int

    @property
    def r_size(self) -> int:
        return self.n * self.n * self.N

    @property
    def p_start(self) -> int:
        return self.r_size

    @property
    def pi_start(self) -> int:
        return self.r_size + self.N * self.N

    @property
    def lam_start(self) -> int:
        return self.r_size + 2 * self.N * self.N

    @property
    def mu_index(self) -> int:
        return self.r_size + 2 * self.N * self.N + self.N

    @property
    def total(self) -> int:
        return self.mu_index + 1


def build_swap_matrix(N: int) -> sp.csr_matrix:
    """Involutory permutation of length-N^2 vectors swapping the two link
    indices: entry (l, l') moves to (l', l)."""
    if N < 1:
        raise ValueError("N must be at least 1")
    j = np.arange(1, N * N + 1)
    k = N * ((j - 1) % N) + 1 + (j - 1) // N
    return sp.csr_matrix(
        (np.ones(N * N), (j - 1, k - 1)), shape=(N * N, N * N)
    )


def assemble_r3lp(inst: R3Instance) -> LinearProgram:
    """Explicit matrix form of the resilient-routing program."""
    derived = inst.vt.derived
    n, N = derived.n, derived.n_links
    pairs = [(lk.src, lk.tgt) for lk in derived.links]
    if len(set(pairs)) != len(pairs):
        raise ValueError("derived topology still has parallel links")
    lay = VariableLayout(n, N)
    rs = build_routing_system(derived, inst.mode)
    ps = build_protection_system(rs, derived)
    nr = rs.n_rows

    offs_p, offs_pi, offs_lam, offs_mu = (
        lay.p_start,
        lay.pi_start,
        lay.lam_start,
        lay.mu_index,
    )
    A_eq = sp.vstack(
        [
            sp.hstack([rs.R, sp.csr_matrix((nr, lay.total - lay.r_size))]),
            sp.hstack(
                [
                    sp.csr_matrix((nr, lay.r_size)),
                    ps.P,
                    sp.csr_matrix((nr, lay.total - offs_pi)),
                ]
            ),
        ],
        format="csr",
    )
    b_eq = np.concatenate([rs.rho, ps.rhs])

    c_vec = np.array(derived.capacities())
    d_flat = inst.embedded_demand().reshape(1, -1)
    eye = sp.identity(N, format="csr")
    # capacity rows: actual demand + dual bound on virtual load <= c * mu
    cap_rows = sp.hstack(
        [
            sp.kron(d_flat, eye),
            sp.csr_matrix((N, N * N)),
            sp.kron(eye, np.ones((1, N))),
            float(inst.F) * eye,
            sp.csr_matrix(-c_vec.reshape(-1, 1)),
        ],
        format="csr",
    )
    # dual feasibility rows, one per (protected link l', loaded link l):
    # c_l' p_l'(l) <= pi_l(l') + lam_l
    dual_rows = sp.hstack(
        [
            sp.csr_matrix((N * N, lay.r_size)),
            sp.kron(sp.diags(c_vec), eye),
            -build_swap_matrix(N),
            -sp.kron(np.ones((N, 1)), eye),
            sp.csr_matrix((N * N, 1)),
        ],
        format="csr",
    )
    A_le_blocks = [cap_rows, dual_rows]
    b_le = [np.zeros(N + N * N)]

    if inst.wireless:
        rows = build_wireless_rows(
            inst.vt,
            inst.demand,
            include_singletons=inst.wireless_include_singletons,
            all_pairs=inst.wireless_all_pairs,
        )
        ix = RoutingIndexer(n, N)
        if rows:
            data, cols, indptr = [], [], [0]
            rhs = []
            for row in rows:
                acc: dict[int, float] = {}
                for (a, b), link, coef in row.terms:
                    col = ix.column(a, b, link)
                    acc[col] = acc.get(col, 0.0) + coef
                for col in sorted(acc):
                    cols.append(col)
                    data.append(acc[col])
                if inst.wireless_rhs_times_mu:
                    cols.append(offs_mu)
                    data.append(-row.rhs)
                    rhs.append(0.0)
                else:
                    rhs.append(row.rhs)
                indptr.append(len(cols))
            wireless_block = sp.csr_matrix(
                (np.array(data), np.array(cols, dtype=np.int64), np.array(indptr, dtype=np.int64)),
                shape=(len(rows), lay.total),
            )
            A_le_blocks.append(wireless_block)
            b_le.append(np.array(rhs))

    A_le = sp.vstack(A_le_blocks, format="csr")
    b_le_vec = np.concatenate(b_le)

    upper = np.full(lay.total, np.inf)
    upper[: offs_pi] = 1.0  # r and p are fractions
    objective = np.zeros(lay.total)
    objective[offs_mu] = 1.0
    return LinearProgram(
        objective=objective,
        A_eq=A_eq,
        b_eq=b_eq,
        A_le=A_le,
        b_le=b_le_vec,
        lower=np.zeros(lay.total),
        upper=upper,
    )


def _unreachable_demand_pairs(inst: R3Instance) -> list[tuple[int, int]]:
    base = inst.vt.base
    adj: dict[int, set[int]] = {}
    for lk in base.links:
        adj.setdefault(lk.src, set()).add(lk.tgt)
    out = []
    for a in range(1, base.n + 1):
        if not np.any(inst.demand[a - 1] > 0):
            continue
        seen = {a}
        frontier = [a]
        while frontier:
            v = frontier.pop()
            for w in adj.get(v, ()):
                if w not in seen:
                    seen.add(w)
                    frontier.append(w)
        for b in range(1, base.n + 1):
            if inst.demand[a - 1, b - 1] > 0 and b not in seen:
                out.append((a, b))
    return out


def _dual_completion(p: np.ndarray, c: np.ndarray, F: int) -> tuple[np.ndarray, np.ndarray]:
    """Minimal per-link multipliers certifying the worst virtual load.

    For each loaded link l, the inner maximization over virtual loads is a
    unit-weight fractional knapsack over chi_l' = c_l' p_l'(l); its dual
    optimum is lam = F-th largest chi (largest for F = 0) and
    pi = max(0, chi - lam). Replacing the LP's multipliers with these
    keeps every constraint satisfied, never increases a capacity row, and
    closes the per-link duality gap exactly.
    """
    N = p.shape[0]
    pi = np.zeros((N, N))
    lam = np.zeros(N)
    for l in range(N):
        chi = c * p[:, l]
        order = np.sort(chi)[::-1]
        if F <= 0:
            lam[l] = order[0] if N else 0.0
        elif F >= N:
            lam[l] = 0.0
        else:
            lam[l] = order[F - 1]
        pi[l] = np.maximum(0.0, chi - lam[l])
    return pi, lam


def _unpack(inst: R3Instance, lp_sol: LPSolution, mu_opt: float, iterations: int) -> R3Solution:
    derived = inst.vt.derived
    n, N = derived.n, derived.n_links
    lay = VariableLayout(n, N)
    x = lp_sol.x
    r = x[: lay.r_size].reshape(n, n, N).copy()
    p = x[lay.p_start : lay.pi_start].reshape(N, N).copy()
    c_caps = np.array(derived.capacities())
    pi, lam = _dual_completion(p, c_caps, inst.F)
    mu = mu_opt
    ignored = frozenset(
        int(l + 1) for l in range(N) if p[l, l] >= 1.0 - EPS_DIAG
    )
    loads = np.einsum("ab,abl->l", inst.embedded_demand(), r)
    eff = 0.0
    for l in range(1, N + 1):
        virt = analysis.max_virtual_load(
            p, c_caps, inst.F, l, carve_out=True, cross_check=False
        )
        if c_caps[l - 1] > 0:
            eff = max(eff, (loads[l - 1] + virt) / c_caps[l - 1])
    return R3Solution(
        r=r,
        p=p,
        pi=pi,
        lam=lam,
        mu=mu,
        effective_mu=float(eff),
        ignored_links=ignored,
        iterations=iterations,
        instance=inst,
    )


def solve_r3(
    inst: R3Instance,
    config: SimplexConfig | None = None,
    refine: bool = True,
) -> R3Solution:
    """Optimal routing pair, or ``R3InfeasibleError`` naming unreachable
    demand pairs when no routing exists.

    With ``refine`` (default) a second solve holds the optimal utilization
    fixed, caps each link's self-protection at the level the optimum
    already used, and minimizes total routing mass. Among the degenerate
    optima this picks shortest paths and detours and stops protection
    routings from leaning on other links' protected paths, keeping the
    online reconfiguration well-behaved across failure sequences.
    """
    derived0 = inst.vt.derived
    if derived0.n_links == 0:
        if np.any(inst.demand > 0):
            raise R3InfeasibleError(
                "no links to route demand over",
                [(int(a + 1), int(b + 1)) for a, b in zip(*np.nonzero(inst.demand > 0))],
            )
        n0 = derived0.n
        return R3Solution(
            r=np.zeros((n0, n0, 0)),
            p=np.zeros((0, 0)),
            pi=np.zeros((0, 0)),
            lam=np.zeros(0),
            mu=0.0,
            effective_mu=0.0,
            ignored_links=frozenset(),
            iterations=0,
            instance=inst,
        )
    lp = assemble_r3lp(inst)
    sol = solve_lp(lp, config)
    if sol.status == "infeasible":
        pairs = _unreachable_demand_pairs(inst)
        detail = f"; unreachable demand pairs: {pairs}" if pairs else ""
        raise R3InfeasibleError(
            "no feasible routing pair for this instance" + detail, pairs
        )
    if sol.status != "optimal":
        raise RuntimeError(f"unexpected LP status {sol.status!r} (mu is bounded below)")
    mu_opt = float(sol.objective_value)
    iterations = sol.iterations
    if refine:
        derived = inst.vt.derived
        N = derived.n_links
        lay = VariableLayout(derived.n, N)
        mass = np.zeros(lay.total)
        mass[: lay.pi_start] = 1.0  # total r and p flow
        diag_cols = lay.p_start + np.arange(N) * (N + 1)
        upper = lp.upper.copy()
        upper[diag_cols] = np.minimum(
            1.0, sol.x[diag_cols] + 1e-12
        )
        cap_row = sp.csr_matrix(
            (np.array([1.0]), (np.array([0]), np.array([lay.mu_index]))),
            shape=(1, lay.total),
        )
        refine_lp = LinearProgram(
            objective=mass,
            A_eq=lp.A_eq,
            b_eq=lp.b_eq,
            A_le=sp.vstack([lp.A_le, cap_row], format="csr"),
            b_le=np.concatenate([lp.b_le, [mu_opt * (1.0 + 1e-12) + 1e-15]]),
            lower=lp.lower,
            upper=upper,
        )
        refined = solve_lp(refine_lp, config)
        if refined.status == "optimal":
            sol = refined
            iterations += refined.iterations
    return _unpack(inst, sol, mu_opt, iterations)


def resolve_after_failures(
    inst: R3Instance,
    failed: set[int] | list[int] | tuple[int, ...],
    remaining_F: int,
    zero_unreachable: bool = True,
    config: SimplexConfig | None = None,
) -> R3Solution:
    """Fresh optimum on the surviving topology with the remaining budget.

    ``failed`` lists original link ids. Demands whose destination became
    unreachable are zeroed (and recorded on the solution) when
    ``zero_unreachable``; otherwise they make the instance infeasible.
    """
    base = inst.vt.base
    failed = set(int(f) for f in failed)
    for f in failed:
        if not 1 <= f <= base.n_links:
            raise ValueError(f"unknown link id {f}")
    survivors = [lk for lk in base.links if lk.id not in failed]
    remap = {lk.id: i + 1 for i, lk in enumerate(survivors)}
    groups = []
    for grp in base.groups:
        members = [remap[m] for m in grp.members if m in remap]
        if members:
            groups.append((grp.vertex, members, grp.capacity))
    new_base = Topology.build(
        base.n,
        [(lk.src, lk.tgt, lk.capacity) for lk in survivors],
        groups,
        names=base.names,
    )
    demand = inst.demand.copy()
    dropped: list[tuple[int, int, float]] = []
    probe = R3Instance(
        vt=virtualize(new_base),
        demand=np.zeros_like(demand),
        F=int(remaining_F),
        wireless=inst.wireless,
        mode=inst.mode,
        wireless_include_singletons=inst.wireless_include_singletons,
        wireless_all_pairs=inst.wireless_all_pairs,
        wireless_rhs_times_mu=inst.wireless_rhs_times_mu,
    )
    if zero_unreachable:
        probe.demand = demand
        for a, b in _unreachable_demand_pairs(probe):
            dropped.append((a, b, float(demand[a - 1, b - 1])))
            demand[a - 1, b - 1] = 0.0
    probe.demand = demand
    solution = solve_r3(probe, config)
    solution.dropped_demands = tuple(dropped)
    return solution
