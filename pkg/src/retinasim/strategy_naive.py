"""Per-spot estimation protocol: repeated interrogation of individual spots.

The oldest and most literal identification scheme: pick ``mu`` distinct
retinal spots, interrogate each one ``nu`` times at an intensity tuned so the
honest user sees each pulse with a common probability ``p_C``, and accept the
subject only if the per-spot "seen" count lands strictly inside an acceptance
window ``(n_L, n_R)`` for every spot.

An impostor who cannot sense the spot's transmission does best by picking an
answering bias p uniformly at random for each spot test, which makes her
count uniform on {0..nu}; the window width then fixes her per-spot pass
probability exactly at ``(n_R - n_L - 1) / (nu + 1)``.  The honest user's
failure probability is controlled through Chernoff bounds on the binomial
tails outside the window.

Because the tuned intensity differs from spot to spot, a photodetector-armed
impostor could in principle estimate it and reconstruct the spot's
transmission — this protocol predates the information-barrier designs and is
kept as the baseline they improve on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .alpha_map import AlphaMap
from .errors import ConfigError, DomainError, InfeasibleError
from .photon_stats import DEFAULT_THRESHOLD, gk_inverse
from .strategy_serial import relative_entropy
from .subjects import AliceSubject, EveContext, EveSubject, SubjectModel

__all__ = [
    "NaiveTestPlan",
    "NaiveResult",
    "acceptance_counts",
    "required_nu",
    "run_naive",
]

_NU_SEARCH_LIMIT = 10**6


@dataclass(frozen=True)
class NaiveTestPlan:
    """Full sizing of the per-spot protocol.

    ``nu``: interrogations per spot; ``mu``: number of spots; ``p_c``: tuned
    per-pulse seeing probability for the honest user; ``(n_l, n_r)``: open
    acceptance window on the per-spot count.
    """

    nu: int
    mu: int
    p_c: float
    n_l: int
    n_r: int

    def __post_init__(self) -> None:
        if self.nu < 1:
            raise DomainError(f"interrogations per spot must be >= 1, got {self.nu}")
        if self.mu < 1:
            raise ConfigError(f"spot count must be >= 1, got {self.mu}")
        if not (0.0 < self.p_c < 1.0):
            raise DomainError(f"p_c must lie in (0, 1), got {self.p_c!r}")
        if not (0 <= self.n_l < self.n_r <= self.nu):
            raise DomainError(
                f"acceptance counts must satisfy 0 <= n_l < n_r <= nu, got "
                f"({self.n_l}, {self.n_r}) with nu={self.nu}"
            )
        center = self.nu * self.p_c
        if not (self.n_l < center < self.n_r):
            raise DomainError(
                f"acceptance window ({self.n_l}, {self.n_r}) does not straddle "
                f"nu * p_c = {center!r}"
            )

    @property
    def p_l(self) -> float:
        return self.n_l / self.nu

    @property
    def p_r(self) -> float:
        return self.n_r / self.nu


def acceptance_counts(
    p_c: float, nu: int, p_fp: float, mu: int
) -> tuple[int, int]:
    """Widest acceptance window compatible with the impostor budget.

    The impostor's per-spot pass probability is exactly
    ``(n_r - n_l - 1) / (nu + 1)``; across ``mu`` independent spot tests the
    overall false-positive target ``p_fp`` therefore requires the per-spot
    probability to stay at or below ``p_fp ** (1/mu)``.  The window is the
    widest integer window meeting that budget, centred on ``nu * p_c``
    (rounding half up) and clipped into ``[0, nu]`` with a warning if the
    ideal symmetric window would overflow the count range.
    """
    p_c = float(p_c)
    if not (0.0 < p_c < 1.0):
        raise DomainError(f"p_c must lie in (0, 1), got {p_c!r}")
    if nu < 1:
        raise DomainError(f"interrogations per spot must be >= 1, got {nu}")
    if mu < 1:
        raise DomainError(f"spot count must be >= 1, got {mu}")
    p_fp = float(p_fp)
    if not (0.0 < p_fp <= 1.0):
        raise DomainError(f"p_fp must lie in (0, 1], got {p_fp!r}")

    per_spot_budget = p_fp ** (1.0 / mu)
    width = int(math.floor(per_spot_budget * (nu + 1))) + 1
    if width > nu + 1:
        raise InfeasibleError(
            f"per-spot budget {per_spot_budget!r} accepts every count 0..{nu}; "
            "the plan is vacuous"
        )
    if width < 2:
        raise InfeasibleError(
            f"per-spot budget {per_spot_budget!r} leaves no acceptable count "
            f"(p_fp**(1/mu) * (nu+1) = {per_spot_budget * (nu + 1)!r} < 1); "
            "increase nu or relax p_fp"
        )
    center = nu * p_c
    n_l = int(math.floor(center - width / 2.0 + 0.5))
    clipped = False
    if n_l < 0:
        n_l = 0
        clipped = True
    n_r = n_l + width
    if n_r > nu:
        n_r = nu
        n_l = n_r - width
        clipped = True
        if n_l < 0:
            n_l = 0
    if clipped:
        warnings.warn(
            f"acceptance window clipped to [{n_l}, {n_r}] within counts 0..{nu}",
            RuntimeWarning,
            stacklevel=2,
        )
    if not (n_l < center < n_r):
        raise InfeasibleError(
            f"cannot centre an acceptance window of width {width} on "
            f"nu * p_c = {center!r} within counts 0..{nu}"
        )
    return n_l, n_r


def required_nu(p_fp: float, p_fn: float, mu: int, p_c: float) -> int:
    """Smallest per-spot interrogation count meeting both error targets.

    For each candidate ``nu`` the acceptance window is sized for the
    impostor budget, and the honest user's failure probability across all
    ``mu`` spot tests is estimated through the Chernoff-style expression

        w(nu)  = (exp(-nu*H(p_r|p_c)) + exp(-nu*H(p_l|p_c))) / sqrt(2*nu),
        p_fail = 1 - (1 - w(nu))**mu,

    returning the first ``nu`` with ``p_fail <= p_fn``.
    """
    for name, value in (("p_fp", p_fp), ("p_fn", p_fn)):
        if not (0.0 < float(value) < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    if mu < 1:
        raise DomainError(f"spot count must be >= 1, got {mu}")
    p_c = float(p_c)
    if not (0.0 < p_c < 1.0):
        raise DomainError(f"p_c must lie in (0, 1), got {p_c!r}")

    for nu in range(1, _NU_SEARCH_LIMIT + 1):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                n_l, n_r = acceptance_counts(p_c, nu, p_fp, mu)
        except InfeasibleError:
            continue
        p_l = n_l / nu
        p_r = n_r / nu
        w = (
            math.exp(-nu * relative_entropy(p_r, p_c))
            + math.exp(-nu * relative_entropy(p_l, p_c))
        ) / math.sqrt(2.0 * nu)
        if w >= 1.0:
            continue
        p_fail = 1.0 - (1.0 - w) ** mu
        if p_fail <= p_fn:
            return nu
    raise InfeasibleError(
        f"no nu <= {_NU_SEARCH_LIMIT} meets p_fp={p_fp!r}, p_fn={p_fn!r} "
        f"with mu={mu}, p_c={p_c!r}"
    )


@dataclass(frozen=True)
class NaiveResult:
    accepted: bool
    spots_tested: int
    see_counts: tuple[int, ...]


def run_naive(
    subject: SubjectModel,
    alpha_map: AlphaMap,
    plan: NaiveTestPlan,
    rng: np.random.Generator,
    *,
    k: int = DEFAULT_THRESHOLD,
) -> NaiveResult:
    """Run one full per-spot identification session.

    The device samples ``mu`` distinct spots from the map, tunes the pulse
    intensity per spot so the enrolled user's seeing probability equals the
    plan's ``p_c`` (using the stored transmission value and the design
    threshold ``k``), and requires every spot's count to fall inside the
    acceptance window.  The session stops at the first failing spot.

    Impostor strategies are given a fresh session scope per spot test, so a
    once-per-scope bias (the uniform-bias strategy) is redrawn for every
    spot — answering all spots with a single shared bias would correlate the
    per-spot counts and is a strictly different game from the one the window
    sizing assumes.
    """
    if alpha_map.n_spots < plan.mu:
        raise ConfigError(
            f"map has {alpha_map.n_spots} spots but the plan needs {plan.mu}"
        )
    x_star = gk_inverse(k, plan.p_c)
    spot_indices = rng.choice(alpha_map.n_spots, size=plan.mu, replace=False)
    see_counts: list[int] = []
    accepted = True
    for spot_ordinal, spot in enumerate(spot_indices):
        alpha = float(alpha_map.alpha[int(spot)])
        i_tilde_spot = x_star / alpha
        count = 0
        if isinstance(subject, EveSubject):
            session = subject.strategy.session(rng)
            history: list[bool] = []
            for i in range(plan.nu):
                context = EveContext(
                    round_index=i,
                    photon_count=int(rng.poisson(i_tilde_spot)),
                    history=tuple(history),
                    spot_ordinal=spot_ordinal,
                )
                saw = session.respond(context, rng)
                history.append(saw)
                count += saw
        elif isinstance(subject, AliceSubject):
            photons = rng.poisson(alpha * i_tilde_spot, size=plan.nu)
            count = int(np.count_nonzero(photons >= subject.k))
        else:
            raise DomainError(f"unknown subject model {subject!r}")
        see_counts.append(count)
        if not (plan.n_l < count < plan.n_r):
            accepted = False
            break
    return NaiveResult(
        accepted=accepted,
        spots_tested=len(see_counts),
        see_counts=tuple(see_counts),
    )
