"""Bimatrix games over {proceed, yield} and their mixed-strategy equilibria.

Two independent solution routes are kept side by side:

* ``lemke_howson`` — complementary pivoting on the labeled best-response
  polytopes (works for any m x n bimatrix game), and
* ``enumerate_equilibria`` — exhaustive 2x2 support enumeration with the
  closed-form indifference solution.

``solve_mixed_nash`` is the production selector: it prefers the completely
mixed equilibrium when one exists, because its probabilities respond
continuously to payoff changes and therefore carry usable decision
information; games without one are dominance-solvable and return the pure
equilibrium.  Every returned profile satisfies the no-unilateral-deviation
certificate (see ``deviation_gain``).
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PROCEED",
    "YIELD",
    "STRATEGY_CELLS",
    "DegenerateGame",
    "Bimatrix",
    "MixedProfile",
    "expected_payoffs",
    "deviation_gain",
    "enumerate_equilibria",
    "lemke_howson",
    "solve_mixed_nash",
    "solve_proceed_probs",
]

PROCEED = "proceed"
YIELD = "yield"

# Canonical joint-strategy order: rows are the left vehicle's action.
STRATEGY_CELLS = (
    (PROCEED, PROCEED),
    (PROCEED, YIELD),
    (YIELD, PROCEED),
    (YIELD, YIELD),
)


class DegenerateGame(ArithmeticError):
    """Pivoting cycled or no equilibrium certificate could be produced."""


@dataclass(frozen=True)
class Bimatrix:
    """2x2 payoffs; u_l rows index the left player's strategy (proceed,
    yield), columns the straight player's."""

    u_l: tuple[tuple[float, float], tuple[float, float]]
    u_s: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self):
        for mat in (self.u_l, self.u_s):
            for row in mat:
                for x in row:
                    if not math.isfinite(x):
                        raise ValueError("payoff entries must be finite")

    @classmethod
    def from_arrays(cls, u_l, u_s) -> "Bimatrix":
        tl = tuple(tuple(float(x) for x in row) for row in np.asarray(u_l))
        ts = tuple(tuple(float(x) for x in row) for row in np.asarray(u_s))
        return cls(tl, ts)


@dataclass(frozen=True)
class MixedProfile:
    """Mixed strategies as (proceed, yield) probability pairs."""

    p_l: tuple[float, float]
    p_s: tuple[float, float]

    def __post_init__(self):
        for pair in (self.p_l, self.p_s):
            if min(pair) < -1e-12 or abs(sum(pair) - 1.0) > 1e-12:
                raise ValueError(f"not a probability pair: {pair}")

    @property
    def proceed_l(self) -> float:
        return self.p_l[0]

    @property
    def proceed_s(self) -> float:
        return self.p_s[0]


def _profile(p: float, q: float) -> MixedProfile:
    p = min(max(p, 0.0), 1.0)
    q = min(max(q, 0.0), 1.0)
    return MixedProfile(p_l=(p, 1.0 - p), p_s=(q, 1.0 - q))


def expected_payoffs(game: Bimatrix, profile: MixedProfile) -> tuple[float, float]:
    """Bilinear expected payoffs for both players."""
    out = []
    for mat in (game.u_l, game.u_s):
        total = 0.0
        for i in range(2):
            for j in range(2):
                total += profile.p_l[i] * profile.p_s[j] * mat[i][j]
        out.append(total)
    return out[0], out[1]


def deviation_gain(game: Bimatrix, profile: MixedProfile) -> float:
    """Largest expected-payoff gain from a unilateral pure deviation.

    A profile is a Nash equilibrium iff this is <= 0 (up to tolerance).
    """
    base_l, base_s = expected_payoffs(game, profile)
    gain = -math.inf
    for i in range(2):
        row = sum(profile.p_s[j] * game.u_l[i][j] for j in range(2))
        gain = max(gain, row - base_l)
    for j in range(2):
        col = sum(profile.p_l[i] * game.u_s[i][j] for i in range(2))
        gain = max(gain, col - base_s)
    return gain


def _mixed_candidate(game: Bimatrix) -> tuple[float, float] | None:
    """Indifference solution: the row player's payoffs pin the column
    probability and vice versa.  Returns (p, q) or None."""
    (a, b), (c, d) = game.u_l
    (ua, ub), (uc, ud) = game.u_s
    den_q = a - b - c + d
    den_p = ua - ub - uc + ud
    if den_q == 0.0 or den_p == 0.0:
        return None
    q = (d - b) / den_q
    p = (ud - uc) / den_p
    if 0.0 < p < 1.0 and 0.0 < q < 1.0:
        return p, q
    return None


def enumerate_equilibria(game: Bimatrix) -> list[MixedProfile]:
    """All equilibria on pure and full supports, mixed candidate first."""
    found: list[MixedProfile] = []
    mixed = _mixed_candidate(game)
    if mixed is not None:
        found.append(_profile(*mixed))
    for i, j in itertools.product(range(2), repeat=2):
        if game.u_l[i][j] >= game.u_l[1 - i][j] and game.u_s[i][j] >= game.u_s[i][1 - j]:
            found.append(_profile(1.0 - i, 1.0 - j))
    deduped: list[MixedProfile] = []
    for prof in found:
        if not any(
            abs(prof.proceed_l - q.proceed_l) < 1e-12
            and abs(prof.proceed_s - q.proceed_s) < 1e-12
            for q in deduped
        ):
            deduped.append(prof)
    return deduped


def solve_mixed_nash(game: Bimatrix) -> MixedProfile:
    """Equilibrium selection for the decision engine.

    Preference order: the completely mixed equilibrium when it exists, else
    the first pure equilibrium in canonical cell order.  Deterministic and
    invariant to per-player affine payoff shifts.
    """
    candidates = enumerate_equilibria(game)
    if candidates:
        return candidates[0]
    # Cyclic game whose indifference point rounded onto/over the boundary:
    # clip it back; the certificate violation is at rounding scale.
    (a, b), (c, d) = game.u_l
    (ua, ub), (uc, ud) = game.u_s
    den_q = a - b - c + d
    den_p = ua - ub - uc + ud
    if den_q != 0.0 and den_p != 0.0:
        q = (d - b) / den_q
        p = (ud - uc) / den_p
        if -1e-9 <= p <= 1.0 + 1e-9 and -1e-9 <= q <= 1.0 + 1e-9:
            return _profile(p, q)
    raise DegenerateGame("no equilibrium found on pure or full supports")


def solve_proceed_probs(u_l: np.ndarray, u_s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``solve_mixed_nash`` over stacked games.

    ``u_l`` and ``u_s`` have shape (..., 2, 2); returns the proceed
    probabilities (p_left, p_straight) with the same leading shape, using
    the same selection rule as the scalar solver.
    """
    a = u_l[..., 0, 0]
    b = u_l[..., 0, 1]
    c = u_l[..., 1, 0]
    d = u_l[..., 1, 1]
    ua = u_s[..., 0, 0]
    ub = u_s[..., 0, 1]
    uc = u_s[..., 1, 0]
    ud = u_s[..., 1, 1]
    den_q = a - b - c + d
    den_p = ua - ub - uc + ud
    safe_q = np.where(den_q == 0.0, 1.0, den_q)
    safe_p = np.where(den_p == 0.0, 1.0, den_p)
    q_mix = np.where(den_q != 0.0, (d - b) / safe_q, np.nan)
    p_mix = np.where(den_p != 0.0, (ud - uc) / safe_p, np.nan)
    mixed_ok = (p_mix > 0.0) & (p_mix < 1.0) & (q_mix > 0.0) & (q_mix < 1.0)
    p = np.where(mixed_ok, p_mix, np.nan)
    q = np.where(mixed_ok, q_mix, np.nan)
    taken = mixed_ok.copy()
    # Pure cells in canonical order; first hit wins.
    for i, j in itertools.product(range(2), repeat=2):
        row_ok = u_l[..., i, j] >= u_l[..., 1 - i, j]
        col_ok = u_s[..., i, j] >= u_s[..., i, 1 - j]
        hit = ~taken & row_ok & col_ok
        p = np.where(hit, 1.0 - i, p)
        q = np.where(hit, 1.0 - j, q)
        taken |= hit
    # Cyclic games whose indifference point rounded onto the boundary.
    rescue = (
        ~taken
        & (p_mix >= -1e-9) & (p_mix <= 1.0 + 1e-9)
        & (q_mix >= -1e-9) & (q_mix <= 1.0 + 1e-9)
    )
    p = np.where(rescue, np.clip(p_mix, 0.0, 1.0), p)
    q = np.where(rescue, np.clip(q_mix, 0.0, 1.0), q)
    taken |= rescue
    if not bool(np.all(taken)):
        raise DegenerateGame("some stacked games have no pure or fully mixed equilibrium")
    return p, q


def _pivot(tableau: np.ndarray, basis: list[int], entering: int) -> int:
    """Min-ratio pivot; returns the leaving variable. Ties break on the
    smallest basic variable id so the path is deterministic."""
    col = tableau[:, entering]
    rhs = tableau[:, -1]
    best_row = -1
    best_ratio = math.inf
    for r in range(tableau.shape[0]):
        if col[r] > 1e-12:
            ratio = rhs[r] / col[r]
            if ratio < best_ratio - 1e-12 or (
                abs(ratio - best_ratio) <= 1e-12
                and (best_row < 0 or basis[r] < basis[best_row])
            ):
                best_ratio = ratio
                best_row = r
    if best_row < 0:
        raise DegenerateGame("unbounded pivot column")
    tableau[best_row] /= col[best_row]
    for r in range(tableau.shape[0]):
        if r != best_row and tableau[r, entering] != 0.0:
            tableau[r] -= tableau[r, entering] * tableau[best_row]
    leaving = basis[best_row]
    basis[best_row] = entering
    return leaving


def lemke_howson(game: Bimatrix, drop_label: int = 0, max_steps: int = 1000) -> MixedProfile:
    """Complementary pivoting from the artificial equilibrium.

    ``drop_label`` in [0, 4) picks which label to relax first; different
    labels may reach different equilibria of a multi-equilibrium game.  The
    endpoint always satisfies the equilibrium certificate.  Raises
    DegenerateGame if pivoting fails to terminate.
    """
    A = np.array(game.u_l, dtype=float)
    B = np.array(game.u_s, dtype=float)
    m, n = A.shape
    if not 0 <= drop_label < m + n:
        raise ValueError("drop_label out of range")
    A = A - A.min() + 1.0  # positive payoffs leave equilibria unchanged
    B = B - B.min() + 1.0
    # P-tableau rows: B^T x + s = 1 (basis s_j, ids m..m+n-1; columns x then s).
    tab_p = np.hstack([B.T, np.eye(n), np.ones((n, 1))])
    basis_p = list(range(m, m + n))
    # Q-tableau rows: r + A y = 1 (basis r_i, ids 0..m-1; columns r then y).
    tab_q = np.hstack([np.eye(m), A, np.ones((m, 1))])
    basis_q = list(range(m))

    entering = drop_label
    in_p = drop_label < m  # x variables enter the P system, y/r the Q system
    for _ in range(max_steps):
        if in_p:
            leaving = _pivot(tab_p, basis_p, entering)
        else:
            leaving = _pivot(tab_q, basis_q, entering)
        if leaving == drop_label:
            break
        entering = leaving  # complement shares the variable id
        in_p = not in_p
    else:
        raise DegenerateGame("pivoting did not terminate")

    x = np.zeros(m)
    for row, var in enumerate(basis_p):
        if var < m:
            x[var] = tab_p[row, -1]
    y = np.zeros(n)
    for row, var in enumerate(basis_q):
        if var >= m:
            y[var - m] = tab_q[row, -1]
    if x.sum() <= 0.0 or y.sum() <= 0.0:
        raise DegenerateGame("pivoting returned the artificial equilibrium")
    x /= x.sum()
    y /= y.sum()
    return _profile(float(x[0]), float(y[0]))
