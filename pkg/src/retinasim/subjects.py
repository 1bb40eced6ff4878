"""Response models for the tested subject.

Two kinds of subject can sit in front of the device:

* **Alice**, the enrolled user.  Her eye detects a Poisson number of photons
  with mean ``alpha * i_tilde`` and she reports "seen" exactly when the count
  reaches her perception threshold.  Her answers therefore depend on the
  illuminated spot's transmission — the biometric signal.

* **Eve**, an impostor.  The interface she answers through is deliberately
  narrow: a strategy receives only the round index, the photon count her own
  detector registered, her own past answers, and the ordinal of the spot test
  in progress.  There is no field through which the hidden spot class or the
  map could reach her — the information barrier is structural, and the test
  suite asserts it by introspecting :class:`EveContext`.

Eve may also carry an ideal photodetector.  :func:`eve_photon_view` models
what it records: i.i.d. Poisson counts at the session's common pulse
intensity, identical in law whatever the hidden class of each pulse — which
is exactly why the detector is useless to her.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .alpha_map import AlphaMap
from .errors import DomainError
from .photon_stats import DEFAULT_THRESHOLD

__all__ = [
    "EveContext",
    "EveStrategy",
    "EveSession",
    "FairCoin",
    "FixedP",
    "UniformP",
    "Adaptive",
    "AliceSubject",
    "EveSubject",
    "SubjectModel",
    "alice_response",
    "eve_response",
    "eve_photon_view",
]


@dataclass(frozen=True)
class EveContext:
    """Everything an impostor strategy is allowed to observe in one round.

    Adding a field to this class widens the impostor's information set;
    do not do that casually.  Deliberately absent: the spot's transmission
    value, its hidden class, and anything derived from the enrolled map.
    """

    round_index: int
    photon_count: int | None = None
    history: tuple[bool, ...] = ()
    spot_ordinal: int = 0


class EveSession(abc.ABC):
    """Per-scope answering state produced by :meth:`EveStrategy.session`."""

    @abc.abstractmethod
    def respond(self, context: EveContext, rng: np.random.Generator) -> bool:
        """Answer one round: ``True`` for "seen", ``False`` for "not seen"."""


class EveStrategy(abc.ABC):
    """Factory for per-session answering behaviour.

    Strategies themselves are immutable specifications.  Runners call
    :meth:`session` once per scope (one identification session, or one
    spot test for the per-spot protocol) so that strategies which hold
    state — like a once-drawn answering bias — start fresh each scope.
    """

    @abc.abstractmethod
    def session(self, rng: np.random.Generator) -> EveSession:
        """Create fresh answering state for one session."""


class _BernoulliSession(EveSession):
    def __init__(self, p_of_round: Callable[[EveContext], float]):
        self._p_of_round = p_of_round

    def respond(self, context: EveContext, rng: np.random.Generator) -> bool:
        p = float(self._p_of_round(context))
        if not (0.0 <= p <= 1.0) or not math.isfinite(p):
            raise DomainError(f"strategy produced invalid answer probability {p!r}")
        return bool(rng.random() < p)


@dataclass(frozen=True)
class FairCoin(EveStrategy):
    """Answer "seen" with probability 1/2, independently every round."""

    def session(self, rng: np.random.Generator) -> EveSession:
        return _BernoulliSession(lambda _ctx: 0.5)


@dataclass(frozen=True)
class FixedP(EveStrategy):
    """Answer "seen" with a fixed probability, or a per-round schedule.

    ``p`` may be a float or a callable mapping the round index to a
    probability.
    """

    p: float | Callable[[int], float] = 0.5

    def session(self, rng: np.random.Generator) -> EveSession:
        p = self.p
        if callable(p):
            return _BernoulliSession(lambda ctx: p(ctx.round_index))
        p_value = float(p)
        if not (0.0 <= p_value <= 1.0):
            raise DomainError(f"fixed answer probability must lie in [0, 1], got {p!r}")
        return _BernoulliSession(lambda _ctx: p_value)


@dataclass(frozen=True)
class UniformP(EveStrategy):
    """Draw a bias p ~ Uniform(0, 1) once per session, then answer i.i.d.
    Bernoulli(p).

    Over ``n`` rounds the total number of "seen" answers is uniform on
    ``{0, ..., n}`` — the classical exchangeable-coin construction, and the
    impostor's best memoryless play against a count-window acceptance test.
    """

    def session(self, rng: np.random.Generator) -> EveSession:
        p = float(rng.random())
        return _BernoulliSession(lambda _ctx: p)


@dataclass(frozen=True)
class Adaptive(EveStrategy):
    """Answer via an arbitrary callable on the (narrow) round context.

    ``rule`` maps an :class:`EveContext` to the probability of answering
    "seen"; returning 0.0 or 1.0 makes the strategy deterministic.  The rule
    can consult past answers and photon counts — nothing else exists in the
    context to consult.
    """

    rule: Callable[[EveContext], float]

    def session(self, rng: np.random.Generator) -> EveSession:
        return _BernoulliSession(self.rule)


@dataclass(frozen=True)
class AliceSubject:
    """The enrolled user: her map and her perception threshold."""

    alpha_map: AlphaMap
    k: int = DEFAULT_THRESHOLD


@dataclass(frozen=True)
class EveSubject:
    """An impostor answering through the given strategy."""

    strategy: EveStrategy


SubjectModel = Union[AliceSubject, EveSubject]


def alice_response(
    alpha: float, i_tilde: float, k: int, rng: np.random.Generator
) -> bool:
    """One honest answer: draw the retinal photon count and compare with the
    perception threshold.

    The count is Poisson with mean ``alpha * i_tilde``; the flash is seen
    when the count reaches ``k``.  Marginally this is a Bernoulli draw with
    success probability ``prob_see(alpha, i_tilde, k)``.
    """
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise DomainError(f"transmission coefficient must lie in [0, 1], got {alpha!r}")
    i_tilde = float(i_tilde)
    if not math.isfinite(i_tilde) or i_tilde < 0.0:
        raise DomainError(f"pulse intensity must be finite and >= 0, got {i_tilde!r}")
    if k < 1:
        raise DomainError(f"perception threshold must be >= 1, got {k}")
    return int(rng.poisson(alpha * i_tilde)) >= k


def eve_response(
    strategy: EveStrategy | EveSession,
    round_context: EveContext,
    rng: np.random.Generator,
) -> bool:
    """One impostor answer.

    Accepts either a live :class:`EveSession` (the normal case inside a
    runner, which keeps one session per scope) or a bare strategy, for which
    a throwaway single-round session is created.
    """
    session = (
        strategy.session(rng) if isinstance(strategy, EveStrategy) else strategy
    )
    return session.respond(round_context, rng)


def eve_photon_view(
    i_tilde: float, n_pulses: int, rng: np.random.Generator
) -> np.ndarray:
    """Counts an ideal photodetector records over ``n_pulses`` pulses.

    Every pulse in a session carries the same mean photon number, so the
    counts are i.i.d. Poisson(``i_tilde``) — independent of which retinal
    spot each pulse was aimed at.  The marginal law carries no trace of the
    hidden spot classes.
    """
    i_tilde = float(i_tilde)
    if not math.isfinite(i_tilde) or i_tilde < 0.0:
        raise DomainError(f"pulse intensity must be finite and >= 0, got {i_tilde!r}")
    if n_pulses < 0:
        raise DomainError(f"pulse count must be >= 0, got {n_pulses}")
    return rng.poisson(i_tilde, size=int(n_pulses))
