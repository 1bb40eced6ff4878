"""Sequential odds-ratio identification test.

Instead of fixing the number of interrogations in advance, the device keeps
the posterior odds that the subject is the enrolled user and stops as soon
as the odds leave a target interval.  After each round with transmission
value ``alpha_i`` and answer ``S_i`` the odds ratio updates multiplicatively,

    R_i = R_{i-1} * Z_A(alpha_i, S_i) / Z_E(p, S_i),

where ``Z_A`` is the honest-user likelihood of the answer (the seeing
probability or its complement) and ``Z_E`` is the designer's model of an
impostor: answer "seen" with a fixed probability ``p``, best chosen as the
average seeing probability over the interrogation distribution.  Viewed on a
log scale the test is a random walk with positive drift for the honest user
and negative drift for any impostor.

Stopping at the first exit from ``(x, y)`` with ``x = p_fn`` and
``y = 1/p_fp`` delivers the two error-rate guarantees by optional stopping:
``1/R_n`` is a martingale under the honest user and ``R_n`` is a
supermartingale under *every* admissible impostor strategy — adaptive ones
included — so neither side can improve their exit probabilities by cleverness.

This module provides the designer's ``p``, the per-round update, the session
runner, closed-form bounds on expected stopping times and per-round drift, a
universal lower bound on the mean length of *any* test achieving a given
false-positive target, and empirical martingale diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .alpha_map import (
    AlphaDistribution,
    PointPair,
    SpotClass,
    UniformBands,
    _sample_class_alpha,
)
from .errors import ConfigError, DomainError
from .photon_stats import DEFAULT_THRESHOLD, gk, solve_q_intensity
from .strategy_serial import relative_entropy
from .subjects import (
    AliceSubject,
    EveContext,
    EveSubject,
    SubjectModel,
    alice_response,
)

__all__ = [
    "Outcome",
    "Round",
    "OddsState",
    "SequentialPlan",
    "SequentialResult",
    "MartingaleReport",
    "initial_state",
    "prior_p",
    "design_wrong_probability",
    "update_odds",
    "run_sequential",
    "stopping_time_bounds",
    "drift_bounds",
    "optimality_lower_bound",
    "martingale_diagnostics",
]

DEFAULT_MAX_ROUNDS = 10_000


class Outcome(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    TIMEOUT = "timeout"


class Round(NamedTuple):
    """One transcript entry: what was flashed, what was answered, and the
    log-odds increment it produced."""

    alpha: float
    saw: bool
    increment: float


@dataclass(frozen=True)
class OddsState:
    """Running state of one session: current log odds ratio ln(R_n/R_0),
    rounds elapsed, and the per-round transcript."""

    log_odds: float
    n: int
    transcript: tuple[Round, ...] = ()


def initial_state() -> OddsState:
    return OddsState(log_odds=0.0, n=0, transcript=())


def prior_p(
    distribution: AlphaDistribution, i_tilde: float, k: int = DEFAULT_THRESHOLD
) -> float:
    """The designer's impostor answer probability: the exact expectation of
    the seeing probability over the interrogation distribution.

    Closed-form average for a two-point distribution; adaptive quadrature on
    each band for the uniform-bands distribution (the integrand is smooth and
    monotone, so quad resolves it to near machine precision).
    """
    i_tilde = float(i_tilde)
    if not math.isfinite(i_tilde) or i_tilde < 0.0:
        raise DomainError(f"pulse intensity must be finite and >= 0, got {i_tilde!r}")
    if isinstance(distribution, PointPair):
        return 0.5 * (
            gk(k, distribution.alpha_low * i_tilde)
            + gk(k, distribution.alpha_high * i_tilde)
        )
    if isinstance(distribution, UniformBands):
        means = []
        for band in (distribution.low_band, distribution.high_band):
            a, b = band
            if a == b:
                means.append(gk(k, a * i_tilde))
                continue
            integral, _err = quad(
                lambda alpha: gk(k, alpha * i_tilde), a, b, epsabs=1e-13, epsrel=1e-12
            )
            means.append(integral / (b - a))
        return 0.5 * (means[0] + means[1])
    raise DomainError(f"unknown interrogation distribution {distribution!r}")


def design_wrong_probability(
    distribution: AlphaDistribution, i_tilde: float, k: int = DEFAULT_THRESHOLD
) -> float:
    """Worst-case per-round wrong-answer probability of the honest user.

    A wrong answer is "seen" on a low spot or "not seen" on a high spot; the
    worst case over the distribution's support is attained at the top of the
    low range and the bottom of the high range.  For a symmetric operating
    design the two coincide.
    """
    if isinstance(distribution, PointPair):
        low_edge, high_edge = distribution.alpha_low, distribution.alpha_high
    elif isinstance(distribution, UniformBands):
        low_edge, high_edge = distribution.low_band[1], distribution.high_band[0]
    else:
        raise DomainError(f"unknown interrogation distribution {distribution!r}")
    return max(gk(k, low_edge * i_tilde), 1.0 - gk(k, high_edge * i_tilde))


@dataclass(frozen=True)
class SequentialPlan:
    """Operating parameters of one sequential test.

    ``p`` is the designer's impostor answer probability, ``x`` and ``y`` the
    lower and upper odds thresholds (``x = p_fn``, ``y = 1/p_fp``),
    ``i_tilde`` the common pulse intensity, ``k`` the design perception
    threshold and ``distribution`` the interrogation distribution.
    """

    p: float
    x: float
    y: float
    i_tilde: float
    k: int
    distribution: AlphaDistribution

    def __post_init__(self) -> None:
        if not (0.0 < self.x < 1.0 < self.y):
            raise DomainError(
                f"thresholds must satisfy 0 < x < 1 < y, got x={self.x!r}, y={self.y!r}"
            )
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"impostor model p must lie in (0, 1), got {self.p!r}")
        q = design_wrong_probability(self.distribution, self.i_tilde, self.k)
        if not ((1.0 - q) / 2.0 < self.p < (1.0 + q) / 2.0):
            raise ConfigError(
                f"impostor model p={self.p!r} is inconsistent with the interrogation "
                f"design: it must lie in ({(1.0 - q) / 2.0!r}, {(1.0 + q) / 2.0!r}) "
                f"for worst-case wrong-answer probability q={q!r}"
            )

    @classmethod
    def design(
        cls,
        distribution: AlphaDistribution,
        p_fp: float,
        p_fn: float,
        i_tilde: float | None = None,
        k: int = DEFAULT_THRESHOLD,
    ) -> "SequentialPlan":
        """Build a plan from error-rate targets.

        When ``i_tilde`` is omitted it is solved from the distribution's
        inner edges so the design is symmetric: the top of the low range is
        seen as often as the bottom of the high range is missed.
        """
        for name, value in (("p_fp", p_fp), ("p_fn", p_fn)):
            if not (0.0 < float(value) < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
        if i_tilde is None:
            if isinstance(distribution, PointPair):
                low_edge, high_edge = distribution.alpha_low, distribution.alpha_high
            elif isinstance(distribution, UniformBands):
                low_edge, high_edge = (
                    distribution.low_band[1],
                    distribution.high_band[0],
                )
            else:
                raise DomainError(
                    f"unknown interrogation distribution {distribution!r}"
                )
            _q, i_tilde = solve_q_intensity(low_edge, high_edge, k)
        p = prior_p(distribution, i_tilde, k)
        return cls(
            p=p,
            x=float(p_fn),
            y=1.0 / float(p_fp),
            i_tilde=float(i_tilde),
            k=k,
            distribution=distribution,
        )


def _log_increment(p_see: float, saw: bool, p: float) -> float:
    """ln(Z_A / Z_E) for one answer; -inf when the answer is impossible
    under the honest-user model."""
    z_a = p_see if saw else 1.0 - p_see
    z_e = p if saw else 1.0 - p
    if z_a <= 0.0:
        return -math.inf
    return math.log(z_a / z_e)


def update_odds(
    state: OddsState, alpha_i: float, saw: bool, plan: SequentialPlan
) -> OddsState:
    """Fold one answered round into the odds state.

    The increment is ln(Z_A/Z_E) as in the module preamble.  An answer that
    is impossible for the honest user (seeing a pulse that cannot reach the
    perception threshold) produces a -inf increment, after which the state is
    terminally rejecting — no later evidence can rescue it.
    """
    alpha_i = float(alpha_i)
    if not (0.0 <= alpha_i <= 1.0):
        raise DomainError(f"transmission coefficient must lie in [0, 1], got {alpha_i!r}")
    p_see = gk(plan.k, alpha_i * plan.i_tilde)
    increment = _log_increment(p_see, bool(saw), plan.p)
    return OddsState(
        log_odds=state.log_odds + increment,
        n=state.n + 1,
        transcript=state.transcript + (Round(alpha_i, bool(saw), increment),),
    )


@dataclass(frozen=True)
class SequentialResult:
    outcome: Outcome
    rounds: int
    state: OddsState


def run_sequential(
    subject: SubjectModel,
    plan: SequentialPlan,
    rng: np.random.Generator,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    *,
    record_transcript: bool = True,
) -> SequentialResult:
    """Interrogate until the log odds leave (ln x, ln y) or the round cap.

    Accept on an upper exit, reject on a lower exit (including the terminal
    -inf of an impossible answer), and report a distinct timeout outcome if
    the cap is reached — the walk terminates almost surely, so the cap is a
    plumbing guard, not part of the statistical design.

    ``record_transcript=False`` skips transcript assembly for bulk Monte
    Carlo runs; the returned state is identical apart from the empty
    transcript.
    """
    if max_rounds < 1:
        raise DomainError(f"round cap must be >= 1, got {max_rounds}")
    ln_x = math.log(plan.x)
    ln_y = math.log(plan.y)
    is_eve = isinstance(subject, EveSubject)
    if not is_eve and not isinstance(subject, AliceSubject):
        raise DomainError(f"unknown subject model {subject!r}")
    session = subject.strategy.session(rng) if is_eve else None
    history: list[bool] = []

    # Two-point distributions dominate bulk runs; memoise their seeing
    # probabilities instead of recomputing the gamma CDF every round.
    see_cache: dict[float, float] = {}
    if isinstance(plan.distribution, PointPair):
        for a in (plan.distribution.alpha_low, plan.distribution.alpha_high):
            see_cache[a] = gk(plan.k, a * plan.i_tilde)

    log_odds = 0.0
    rounds = 0
    outcome = Outcome.TIMEOUT
    transcript: list[Round] = []
    for i in range(max_rounds):
        spot_class = SpotClass.HIGH if rng.random() < 0.5 else SpotClass.LOW
        alpha = _sample_class_alpha(plan.distribution, spot_class, rng)
        if is_eve:
            context = EveContext(
                round_index=i,
                photon_count=int(rng.poisson(plan.i_tilde)),
                history=tuple(history),
            )
            saw = session.respond(context, rng)
            history.append(saw)
        else:
            saw = alice_response(alpha, plan.i_tilde, subject.k, rng)
        p_see = see_cache.get(alpha)
        if p_see is None:
            p_see = gk(plan.k, alpha * plan.i_tilde)
        increment = _log_increment(p_see, saw, plan.p)
        log_odds += increment
        rounds = i + 1
        if record_transcript:
            transcript.append(Round(alpha, saw, increment))
        if log_odds >= ln_y:
            outcome = Outcome.ACCEPT
            break
        if log_odds <= ln_x:
            outcome = Outcome.REJECT
            break
    state = OddsState(log_odds=log_odds, n=rounds, transcript=tuple(transcript))
    return SequentialResult(outcome=outcome, rounds=rounds, state=state)


def stopping_time_bounds(
    q: float, q_min: float, p_fp: float, p_fn: float
) -> tuple[float, float]:
    """Closed-form upper bounds on the expected stopping time.

    For the honest user (wrong-answer probability at most ``q`` per round):

        E[T] <= ln(2 / ((1 - q) * p_fp)) / H(q | 1/2).

    For an impostor, with ``q_min`` the smallest seeing/missing probability
    over the support (it controls the largest possible single-round drop):

        E[T] <= 2 * ln(2 * q_min * p_fn / (1 + q)) / ln(4 q (1 - q)).

    Both follow from optional stopping applied to the drift-corrected walk;
    numerator and denominator of the impostor bound are both negative.
    """
    q = float(q)
    if not (0.0 < q < 0.5):
        raise DomainError(f"q must lie in (0, 1/2), got {q!r}")
    q_min = float(q_min)
    if not (0.0 < q_min <= q):
        raise DomainError(f"q_min must lie in (0, q], got {q_min!r}")
    for name, value in (("p_fp", p_fp), ("p_fn", p_fn)):
        if not (0.0 < float(value) < 1.0):
            raise DomainError(f"{name} must lie in (0, 1), got {value!r}")
    bound_alice = math.log(2.0 / ((1.0 - q) * p_fp)) / relative_entropy(q, 0.5)
    bound_eve = (
        2.0
        * math.log(2.0 * q_min * p_fn / (1.0 + q))
        / math.log(4.0 * q * (1.0 - q))
    )
    return bound_alice, bound_eve


def drift_bounds(q: float) -> tuple[float, float]:
    """Per-round log-odds drift guarantees.

    Returns ``(mu_alice_min, mu_eve_max)``: the honest user's drift is at
    least ``H(q | 1/2) > 0`` and any impostor's drift is at most
    ``ln(4 q (1-q)) / 2 < 0``.  A symmetric two-point design attains both
    with equality.
    """
    q = float(q)
    if not (0.0 < q < 0.5):
        raise DomainError(f"q must lie in (0, 1/2), got {q!r}")
    return relative_entropy(q, 0.5), 0.5 * math.log(4.0 * q * (1.0 - q))


def optimality_lower_bound(q: float, p_fp: float) -> int:
    """Universal round-count floor for the given false-positive target.

    No identification test whose honest user errs with probability ``q`` per
    round can reach false-positive probability ``p_fp`` in fewer than about

        N * H(q|1/2) + ln(8 N q (1-q)) / 2  >=  ln(1/p_fp)

    rounds; the left side is strictly increasing in N, so the crossing point
    is unique.  Returns the integer part of the crossing point (at least 1)
    — a conservative floor for comparison against achievable mean stopping
    times.
    """
    q = float(q)
    if not (0.0 < q < 0.5):
        raise DomainError(f"q must lie in (0, 1/2), got {q!r}")
    p_fp = float(p_fp)
    if not (0.0 < p_fp < 1.0):
        raise DomainError(f"p_fp must lie in (0, 1), got {p_fp!r}")
    target = math.log(1.0 / p_fp)
    h = relative_entropy(q, 0.5)

    def excess(n: float) -> float:
        return n * h + 0.5 * math.log(8.0 * n * q * (1.0 - q)) - target

    hi = max(target / h + 10.0, 10.0)
    root = float(brentq(excess, 1e-12, hi, xtol=1e-12, maxiter=200))
    return max(1, int(math.floor(root)))


@dataclass(frozen=True)
class MartingaleReport:
    """Empirical checkpoint means of the martingale statistic.

    ``statistic`` names what was averaged: the odds ratio ``R_n`` for
    impostor subjects (a martingale under any admissible impostor strategy)
    or its reciprocal for the honest user.  Under the respective subject the
    expectation equals 1 at every checkpoint.
    """

    statistic: str
    n_trials: int
    checkpoints: tuple[int, ...]
    means: tuple[float, ...]
    stderrs: tuple[float, ...]

    def max_sigma_deviation(self) -> float:
        """Largest |mean - 1| / stderr across checkpoints."""
        worst = 0.0
        for mean, se in zip(self.means, self.stderrs):
            if se == 0.0:
                if mean != 1.0:
                    return math.inf
                continue
            worst = max(worst, abs(mean - 1.0) / se)
        return worst


def martingale_diagnostics(
    plan: SequentialPlan,
    subject: SubjectModel,
    n_trials: int,
    horizon: int,
    rng: np.random.Generator,
) -> MartingaleReport:
    """Estimate the martingale statistic at n = 1, horizon/2 and horizon.

    Walks are run *without* stopping (the martingale property concerns the
    unstopped chain).  For impostor subjects the statistic is R_n itself;
    for the honest user it is 1/R_n.
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    if n_trials < 2:
        raise DomainError(f"need at least 2 trials, got {n_trials}")
    checkpoints = sorted({1, max(1, horizon // 2), horizon})
    is_eve = isinstance(subject, EveSubject)
    if not is_eve and not isinstance(subject, AliceSubject):
        raise DomainError(f"unknown subject model {subject!r}")

    see_cache: dict[float, float] = {}
    if isinstance(plan.distribution, PointPair):
        for a in (plan.distribution.alpha_low, plan.distribution.alpha_high):
            see_cache[a] = gk(plan.k, a * plan.i_tilde)

    sums = {n: 0.0 for n in checkpoints}
    sumsq = {n: 0.0 for n in checkpoints}
    for _trial in range(n_trials):
        session = subject.strategy.session(rng) if is_eve else None
        history: list[bool] = []
        ratio = 1.0
        for i in range(horizon):
            spot_class = SpotClass.HIGH if rng.random() < 0.5 else SpotClass.LOW
            alpha = _sample_class_alpha(plan.distribution, spot_class, rng)
            if is_eve:
                context = EveContext(
                    round_index=i,
                    photon_count=int(rng.poisson(plan.i_tilde)),
                    history=tuple(history),
                )
                saw = session.respond(context, rng)
                history.append(saw)
            else:
                saw = alice_response(alpha, plan.i_tilde, subject.k, rng)
            p_see = see_cache.get(alpha)
            if p_see is None:
                p_see = gk(plan.k, alpha * plan.i_tilde)
            z_a = p_see if saw else 1.0 - p_see
            z_e = plan.p if saw else 1.0 - plan.p
            ratio *= z_a / z_e
            n = i + 1
            if n in sums:
                stat = ratio if is_eve else 1.0 / ratio
                sums[n] += stat
                sumsq[n] += stat * stat
    means = []
    stderrs = []
    for n in checkpoints:
        mean = sums[n] / n_trials
        var = max(sumsq[n] / n_trials - mean * mean, 0.0) * n_trials / (n_trials - 1)
        means.append(mean)
        stderrs.append(math.sqrt(var / n_trials))
    return MartingaleReport(
        statistic="R_n" if is_eve else "1/R_n",
        n_trials=n_trials,
        checkpoints=tuple(checkpoints),
        means=tuple(means),
        stderrs=tuple(stderrs),
    )
