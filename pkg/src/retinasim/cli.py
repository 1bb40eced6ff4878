"""Command-line front end.

Subcommands: ``enroll`` (measure/store a map), ``identify`` (one session
against a stored map), ``montecarlo`` (bulk trials + CSV artifacts),
``solve`` (all protocol constants for a configuration), ``pattern``
(pattern-strategy rates and the intensity optimum), ``bounds``
(stopping-time/drift/optimality bounds and the eavesdropping physics).

Exit codes: 0 accept/success, 1 reject, 2 usage error (bad flags, values or
files), 3 infeasible plan (a configuration no protocol instance satisfies).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

from . import physics_bounds, strategy_pattern
from .alpha_map import save
from .errors import ConfigError, DomainError, InfeasibleError, MapFormatError
from .harness import (
    RunConfig,
    _resolve_map,
    load_config,
    montecarlo,
    prepare,
    trial_rng,
)
from .photon_stats import gk, solve_q_intensity
from .strategy_bayes import (
    Outcome,
    drift_bounds,
    optimality_lower_bound,
    run_sequential,
    stopping_time_bounds,
)
from .strategy_naive import acceptance_counts, required_nu, run_naive
from .strategy_pattern import false_positive_rate, optimize_intensity
from .strategy_serial import run_serial, solve_w_N
from .subjects import Adaptive, EveContext, EveSubject

__all__ = [
    "main",
    "cmd_enroll",
    "cmd_identify",
    "cmd_montecarlo",
    "cmd_solve",
    "cmd_pattern",
    "cmd_bounds",
]

_TRANSCRIPT_CAP = 2000


def _u64(text: str) -> int:
    value = int(text)
    if not (0 <= value < 2**64):
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retinasim",
        description="Photon-counting retinal identification: solvers and simulators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, subject: bool = True) -> None:
        p.add_argument("--config", metavar="FILE", help="JSON run configuration")
        p.add_argument("--seed", type=_u64, metavar="U64", help="master seed")
        p.add_argument("--trials", type=int, metavar="N", help="number of trials")
        p.add_argument(
            "--strategy",
            choices=("naive", "serial", "bayes", "pattern"),
            help="identification strategy",
        )
        if subject:
            p.add_argument(
                "--subject",
                metavar="KIND",
                help="alice | eve:<strategy> | interactive",
            )
        p.add_argument("--out", metavar="DIR", help="output directory")

    p_enroll = sub.add_parser("enroll", help="generate or import a stored map")
    common(p_enroll, subject=False)
    p_enroll.set_defaults(handler=cmd_enroll)

    p_identify = sub.add_parser("identify", help="run one identification session")
    common(p_identify)
    p_identify.set_defaults(handler=cmd_identify)

    p_mc = sub.add_parser("montecarlo", help="run bulk trials and emit artifacts")
    common(p_mc)
    p_mc.set_defaults(handler=cmd_montecarlo)

    p_solve = sub.add_parser("solve", help="print all protocol constants")
    common(p_solve, subject=False)
    p_solve.set_defaults(handler=cmd_solve)

    p_pattern = sub.add_parser("pattern", help="pattern-strategy rates and optimum")
    common(p_pattern, subject=False)
    p_pattern.set_defaults(handler=cmd_pattern)

    p_bounds = sub.add_parser("bounds", help="protocol bounds and physics report")
    common(p_bounds, subject=False)
    p_bounds.set_defaults(handler=cmd_bounds)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides: dict = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.strategy is not None:
        overrides["strategy"] = args.strategy
    if getattr(args, "subject", None) is not None:
        overrides["subject"] = args.subject
    if args.out is not None:
        overrides["out_dir"] = args.out
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_enroll(config: RunConfig) -> int:
    """Write the subject's map in the persistence format."""
    if config.out_dir is None:
        raise ConfigError("field 'out_dir' is required: pass --out or set it")
    alpha_map = _resolve_map(config)
    path = Path(config.out_dir) / "map.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    save(alpha_map, path)
    source = config.map_file if config.map_file else f"synthetic seed {config.map_seed}"
    print(f"enrolled map: {alpha_map.width}x{alpha_map.height} spots, "
          f"band [{alpha_map.alpha_min}, {alpha_map.alpha_max}] ({source})")
    print(f"wrote {path}")
    return 0


def _interactive_rule(context: EveContext) -> float:
    prompt = f"round {context.round_index + 1}: flash sent"
    if context.photon_count is not None:
        prompt += f" (detector count: {context.photon_count})"
    print(f"{prompt} - seen? [y/n] ", end="", flush=True)
    line = sys.stdin.readline()
    if not line:
        raise ConfigError("interactive session aborted: stdin closed")
    return 1.0 if line.strip().lower() in ("y", "yes", "1") else 0.0


def cmd_identify(config: RunConfig, subject_kind: str | None = None) -> int:
    """Run one session; print the transcript and the decision."""
    kind = subject_kind if subject_kind is not None else config.subject
    interactive = kind == "interactive"
    context = prepare(
        dataclasses.replace(config, subject="eve:faircoin" if interactive else kind)
    )
    if interactive:
        context = dataclasses.replace(
            context, subject=EveSubject(strategy=Adaptive(_interactive_rule))
        )
    rng = trial_rng(config.master_seed, 0)
    print(f"strategy: {config.strategy}   subject: {kind}   "
          f"seed: {config.master_seed}")

    if config.strategy == "bayes":
        plan = context.sequential_plan
        assert plan is not None
        print(f"plan: i_tilde={plan.i_tilde:.6g}  K={plan.k}  p={plan.p:.6g}  "
              f"thresholds=({plan.x:.3g}, {plan.y:.3g})")
        result = run_sequential(
            context.subject, plan, rng, max_rounds=config.max_rounds
        )
        print(f"{'n':>5} {'alpha':>10} {'S':>2} {'increment':>10} {'log_odds':>10}")
        log_odds = 0.0
        for n, step in enumerate(result.state.transcript, start=1):
            log_odds += step.increment
            if n <= _TRANSCRIPT_CAP:
                print(f"{n:>5} {step.alpha:>10.6f} {int(step.saw):>2} "
                      f"{step.increment:>+10.4f} {log_odds:>+10.4f}")
        if result.rounds > _TRANSCRIPT_CAP:
            print(f"... ({result.rounds - _TRANSCRIPT_CAP} more rounds)")
        print(f"outcome: {result.outcome.value} after {result.rounds} rounds "
              f"(final log odds {result.state.log_odds:+.4f})")
        return 0 if result.outcome is Outcome.ACCEPT else 1

    if config.strategy == "serial":
        plan = context.serial_plan
        assert plan is not None
        print(f"plan: i_tilde={context.i_tilde:.6g}  K={config.k}  "
              f"q={plan.q:.6g}  w={plan.w:.6g}  N={plan.n_rounds}")
        result = run_serial(
            context.subject,
            context.alpha_map,
            plan,
            context.i_tilde,
            config.k,
            rng,
            distribution=context.distribution,
        )
        allowed = plan.w * plan.n_rounds
        print(f"wrong answers: {result.wrong_answers} of {result.rounds} "
              f"(acceptance needs < {allowed:.2f})")
        print(f"outcome: {'accept' if result.accepted else 'reject'}")
        return 0 if result.accepted else 1

    if config.strategy == "naive":
        plan = context.naive_plan
        assert plan is not None
        print(f"plan: mu={plan.mu} spots, nu={plan.nu} pulses each, "
              f"window ({plan.n_l}, {plan.n_r}) around p_c={plan.p_c}")
        result = run_naive(
            context.subject, context.alpha_map, plan, rng, k=config.k
        )
        for ordinal, count in enumerate(result.see_counts):
            ok = plan.n_l < count < plan.n_r
            print(f"spot {ordinal + 1:>3}: {count:>5} seen  "
                  f"{'pass' if ok else 'FAIL'}")
        print(f"outcome: {'accept' if result.accepted else 'reject'} "
              f"({result.spots_tested} of {plan.mu} spots tested)")
        return 0 if result.accepted else 1

    rule = context.pattern_rule
    assert rule is not None
    result = strategy_pattern.run_pattern_test(
        context.subject,
        context.alpha_map,
        config.pattern_questions,
        config.pattern_menu,
        rule,
        rng,
        n_noise=config.pattern_noise,
        i_tilde=config.pattern_i_tilde,
        low_max=config.pattern_low_max,
        high_min=config.pattern_high_min,
        _index=context.pattern_index,
    )
    print(f"plan: {config.pattern_questions} questions, menu of "
          f"{config.pattern_menu}, i_tilde={config.pattern_i_tilde}")
    print(f"correct answers: {result.correct} of {result.questions}")
    print(f"outcome: {'accept' if result.accepted else 'reject'}")
    return 0 if result.accepted else 1


def cmd_montecarlo(config: RunConfig) -> int:
    """Run the configured trials, print the aggregate, write artifacts."""
    stats, _records = montecarlo(config)
    print(f"strategy: {config.strategy}   subject: {config.subject}   "
          f"trials: {stats.n_trials}   seed: {config.master_seed}")
    print(f"accepted: {stats.accepted}   rejected: {stats.rejected}   "
          f"timed out: {stats.timed_out}")
    if stats.t_mean is not None:
        se = stats.t_stderr if stats.t_stderr is not None else 0.0
        print(f"stopping time: mean {stats.t_mean:.3f} +- {se:.3f} "
              f"(terminated trials)")
    if stats.drift_mean is not None:
        print(f"per-round drift: {stats.drift_mean:+.5f} +- "
              f"{stats.drift_stderr:.5f}")
    print(f"boundary violations: {stats.boundary_violations}")
    if config.out_dir is not None:
        print(f"artifacts written to {config.out_dir}")
    return 0


def _operating_lines(config: RunConfig) -> list[str]:
    q, i_tilde = solve_q_intensity(config.alpha_low, config.alpha_high, config.k)
    lines = [
        "operating point",
        f"  classes: alpha_low={config.alpha_low}  alpha_high={config.alpha_high}  "
        f"K={config.k}",
        f"  wrong-answer probability q = {q:.6f}",
        f"  pulse intensity i_tilde    = {i_tilde:.4f}",
    ]
    return lines


def _bounds_lines(config: RunConfig) -> list[str]:
    q, i_tilde = solve_q_intensity(config.alpha_low, config.alpha_high, config.k)
    q_min = gk(config.k, config.map_alpha_min * i_tilde)
    bound_alice, bound_eve = stopping_time_bounds(q, q_min, config.p_fp, config.p_fn)
    mu_alice, mu_eve = drift_bounds(q)
    n_min = optimality_lower_bound(q, config.p_fp)
    return [
        "sequential-test bounds",
        f"  E[T | honest]   <= {bound_alice:.4f}  (ceil {math.ceil(bound_alice)})",
        f"  E[T | impostor] <= {bound_eve:.4f}  (ceil {math.ceil(bound_eve)}; "
        f"q_min={q_min:.6g})",
        f"  drift: honest >= {mu_alice:+.5f}/round, impostor <= {mu_eve:+.5f}/round",
        f"  any test with p_fp <= {config.p_fp:g} needs mean length >= {n_min}",
    ]


def _physics_lines() -> list[str]:
    model = physics_bounds.EyeThermalModel()
    d_theta = physics_bounds.temperature_resolution(model)
    thermal = physics_bounds.thermal_energy_resolution(model)
    magnetic = physics_bounds.magnetic_energy_resolution(1e-19, 1.0)
    dipole = physics_bounds.dipole_attenuation(0.01, 0.1)
    return [
        "eavesdropping physics (orders of magnitude)",
        f"  bulk heating per pulse:        {d_theta:.3e} K",
        f"  thermal detectability (hbar):  {thermal:.3e}",
        f"  magnetic detectability (hbar): {magnetic:.3e} "
        f"(1e-19 T/rtHz, 1 s)",
        f"  dipole falloff 1 cm -> 10 cm:  {dipole:.0f}x",
    ]


def _pattern_lines(config: RunConfig) -> list[str]:
    lines = ["pattern strategy"]
    menus = [(40, 6), (18, 8)]
    configured = (config.pattern_menu, config.pattern_questions)
    if configured not in menus:
        menus.append(configured)
    for m_entries, m_questions in menus:
        rate = false_positive_rate(m_entries, m_questions)
        lines.append(
            f"  menu {m_entries:>3}, {m_questions} questions: "
            f"p_fp = (1/{m_entries})^{m_questions} = {float(rate):.4e}"
        )
    lines.append("  honest-failure optimum over class-edge pairs "
                 "(25 pattern + 75 noise spots, limits 5/5, 6 questions):")
    pairs = sorted({
        (config.map_alpha_min, config.map_alpha_max),
        (config.map_alpha_min, config.pattern_high_min),
        (config.pattern_low_max, config.map_alpha_max),
        (config.pattern_low_max, config.pattern_high_min),
    })
    for alpha_low, alpha_high in pairs:
        try:
            i_star, p_fn_star = optimize_intensity(
                25, 75, 5, 5, alpha_low, alpha_high, config.k, 6
            )
            lines.append(f"    alpha=({alpha_low}, {alpha_high}): "
                         f"i_tilde* = {i_star:.1f}, p_fn* = {p_fn_star:.6e}")
        except InfeasibleError:
            lines.append(f"    alpha=({alpha_low}, {alpha_high}): "
                         f"bound vacuous over the whole intensity range")
    return lines


def _serial_naive_lines(config: RunConfig) -> list[str]:
    q, _i_tilde = solve_q_intensity(config.alpha_low, config.alpha_high, config.k)
    w, n_rounds = solve_w_N(q, config.p_fp, config.p_fn)
    lines = [
        "fixed-length test",
        f"  decision fraction w = {w:.6f}, rounds N = {n_rounds}",
        "per-spot counting test",
    ]
    try:
        nu = required_nu(config.p_fp, config.p_fn, config.naive_mu, config.naive_p_c)
        n_l, n_r = acceptance_counts(
            config.naive_p_c, nu, config.p_fp, config.naive_mu
        )
        lines.append(
            f"  mu = {config.naive_mu} spots, nu = {nu} pulses/spot "
            f"(total {config.naive_mu * nu}), window ({n_l}, {n_r})"
        )
    except InfeasibleError as exc:
        lines.append(f"  infeasible: {exc}")
    return lines


def cmd_solve(config: RunConfig) -> int:
    """Print every protocol constant for the configuration."""
    lines: list[str] = []
    lines += _operating_lines(config)
    lines += _serial_naive_lines(config)
    lines += _bounds_lines(config)
    lines += _pattern_lines(config)
    lines += _physics_lines()
    print("\n".join(lines))
    return 0


def cmd_pattern(config: RunConfig) -> int:
    """Print the pattern-strategy report."""
    print("\n".join(_pattern_lines(config)))
    return 0


def cmd_bounds(config: RunConfig) -> int:
    """Print the sequential bounds and the physics report."""
    print("\n".join(_bounds_lines(config) + _physics_lines()))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        config = _config_from_args(args)
        return args.handler(config)
    except (DomainError, MapFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
