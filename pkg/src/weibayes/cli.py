"""Command line interface: Phase I training, monitoring, and benchmarks.

Subcommands:

  phase1        absorb a training run and freeze the monitoring limits
  monitor       continue a saved chart against new subgroups
  simulate-arl  Monte Carlo run-length study for a scenario
  demo-padgett  end-to-end walkthrough on the bundled strength data
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from importlib import resources

import numpy as np

from .chart import ChartConfig, monitor as chart_monitor, run_phase1
from .io import (
    dump_state,
    ingest_samples,
    load_state,
    parse_chart_config,
    parse_scenario_config,
)
from .simulation import PRESETS, run_study

DEMO_RELIABILITY = 0.99
DEMO_ALPHA = 0.0027
DEMO_PRIOR = (2.4, 7.2, 1.22)
DEMO_RESAMPLE_SEED = 10
DEMO_EXTENDED_SAMPLES = 40
DEMO_WINDOW = 10


def _load_table1() -> np.ndarray:
    text = resources.files("weibayes").joinpath("data/table1.txt").read_text()
    return ingest_samples(text, n=5)


def _write(path: str, text: str):
    with open(path, "w") as fh:
        fh.write(text)


def _cmd_phase1(args) -> int:
    with open(args.config) as fh:
        config, _ = parse_chart_config(fh.read())
    with open(args.data) as fh:
        data = ingest_samples(fh.read(), n=config.n)
    if data.shape[0] != config.phase1_samples:
        raise ValueError(
            f"config asks for {config.phase1_samples} training subgroups, "
            f"data file has {data.shape[0]}"
        )
    chart = run_phase1(config, data)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "state.json"), dump_state(chart))
    from .report import emit_report

    emit_report(chart, args.out, stem="phase1")
    f = chart.frozen_xr
    print(f"phase 1 complete: {config.phase1_samples} subgroups absorbed")
    print(f"frozen percentile limits: lcl {f.lcl:.6g}  cl {f.cl:.6g}  ucl {f.ucl:.6g}")
    if chart.frozen_beta is not None:
        b = chart.frozen_beta
        print(f"frozen shape limits: lcl {b.lcl:.6g}  cl {b.cl:.6g}  ucl {b.ucl:.6g}")
    print(f"state written to {os.path.join(args.out, 'state.json')}")
    return 0


def _cmd_monitor(args) -> int:
    with open(args.state) as fh:
        chart = load_state(fh.read())
    with open(args.data) as fh:
        data = ingest_samples(fh.read(), n=chart.config.n)
    signals = []
    for row in data:
        chart = chart_monitor(chart, row)
        rec = chart.records[-1]
        if rec.signal != "none":
            signals.append(rec)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "state.json"), dump_state(chart))
    from .report import emit_report

    emit_report(chart, args.out, stem="monitor")
    print(f"monitored {data.shape[0]} subgroups, {len(signals)} signal(s)")
    for rec in signals:
        print(f"signal at subgroup {rec.sample_index}: {rec.signal}")
    return 0


def _cmd_simulate(args) -> int:
    if args.scenario in PRESETS:
        spec = PRESETS[args.scenario]
    else:
        with open(args.scenario) as fh:
            spec = parse_scenario_config(fh.read())
    overrides = {}
    if args.replications is not None:
        overrides["replications"] = args.replications
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    result = run_study(spec)
    os.makedirs(args.out, exist_ok=True)

    lines = [
        "run-length study",
        f"in-control model: delta {spec.ic.delta}, beta {spec.ic.beta}",
        f"out-of-control model: delta {spec.ooc.delta}, beta {spec.ooc.beta}",
        f"reliability {spec.r}, alpha {spec.alpha}, n {spec.n}, m {spec.m}",
        f"chart: {spec.chart}, replications {spec.replications}, seed {spec.seed}",
        f"ARL  {result.arl:.4f}",
        f"SDRL {result.sdrl:.4f}",
        f"standard error of ARL {result.se:.4f}",
        f"truncated at max_run={spec.max_run}: {result.truncated}",
    ]
    _write(os.path.join(args.out, "study_summary.txt"), "\n".join(lines) + "\n")
    rl_lines = ["replication\trun_length"]
    rl_lines += [f"{i + 1}\t{rl}" for i, rl in enumerate(result.run_lengths)]
    _write(os.path.join(args.out, "run_lengths.tsv"), "\n".join(rl_lines) + "\n")
    for line in lines[5:]:
        print(line)
    return 0


def _demo_config(**kw) -> ChartConfig:
    beta1, beta2, x_bar = DEMO_PRIOR
    base = dict(
        r=DEMO_RELIABILITY,
        alpha=DEMO_ALPHA,
        n=5,
        phase1_samples=10,
        prior_beta1=beta1,
        prior_beta2=beta2,
        prior_x_bar=x_bar,
    )
    base.update(kw)
    return ChartConfig(**base)


def _run_sequence(config: ChartConfig, train: np.ndarray, test: np.ndarray):
    chart = run_phase1(config, train)
    for row in test:
        chart = chart_monitor(chart, row)
    return chart


def _first_signal(chart, kinds) -> int | None:
    for rec in chart.records:
        if rec.signal in kinds:
            return rec.sample_index
    return None


def _cmd_demo(args) -> int:
    from .report import emit_report

    data = _load_table1()
    train, test = data[:10], data[10:]
    out = args.out
    os.makedirs(out, exist_ok=True)
    lines = []

    # percentile chart alone
    chart_a = _run_sequence(_demo_config(), train, test)
    emit_report(chart_a, os.path.join(out, "percentile"), stem="demo")
    fa = chart_a.frozen_xr
    sig_a = _first_signal(chart_a, ("xr_ooc", "both"))
    lines.append(
        f"percentile chart: frozen limits ({fa.lcl:.4f}, {fa.ucl:.4f}), "
        f"first signal at subgroup {sig_a} "
        f"({sig_a - 10} subgroups after the disturbance)"
    )

    # percentile chart with the companion shape chart
    chart_b = _run_sequence(_demo_config(enable_beta_chart=True), train, test)
    emit_report(chart_b, os.path.join(out, "with-shape"), stem="demo")
    sig_b = _first_signal(chart_b, ("beta_ooc", "both"))
    lines.append(
        f"shape chart: first signal at subgroup {sig_b} "
        f"({sig_b - 10} subgroups after the disturbance)"
    )

    # extended training run built by resampling the stable subgroups,
    # monitored through a trailing-window handoff
    rng = np.random.default_rng(DEMO_RESAMPLE_SEED)
    pool = train.ravel()
    extra = rng.choice(pool, size=(DEMO_EXTENDED_SAMPLES - train.shape[0], train.shape[1]))
    extended = np.vstack([train, extra])
    config_c = _demo_config(
        phase1_samples=DEMO_EXTENDED_SAMPLES, handoff_window=DEMO_WINDOW
    )
    chart_c = _run_sequence(config_c, extended, test)
    emit_report(chart_c, os.path.join(out, "extended"), stem="demo")
    fc = chart_c.frozen_xr
    sig_c = _first_signal(chart_c, ("xr_ooc", "both"))
    post_c = None if sig_c is None else sig_c - DEMO_EXTENDED_SAMPLES
    lines.append(
        f"extended training (resample seed {DEMO_RESAMPLE_SEED}): frozen limits "
        f"({fc.lcl:.4f}, {fc.ucl:.4f}), first signal {post_c} subgroups after "
        f"the disturbance"
    )
    lines.append(
        f"limit band width: basic {fa.ucl - fa.lcl:.4f}, extended {fc.ucl - fc.lcl:.4f}"
    )

    text = "\n".join(lines) + "\n"
    _write(os.path.join(out, "demo_summary.txt"), text)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weibayes",
        description="Bayesian control charts for Weibull percentiles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("phase1", help="absorb a training run and freeze limits")
    p1.add_argument("--config", required=True, help="chart config file")
    p1.add_argument("--data", required=True, help="training subgroups, one per line")
    p1.add_argument("--out", required=True, help="output directory")
    p1.set_defaults(func=_cmd_phase1)

    p2 = sub.add_parser("monitor", help="monitor new subgroups against a saved chart")
    p2.add_argument("--state", required=True, help="state file from phase1 or monitor")
    p2.add_argument("--data", required=True, help="new subgroups, one per line")
    p2.add_argument("--out", required=True, help="output directory")
    p2.set_defaults(func=_cmd_monitor)

    p3 = sub.add_parser("simulate-arl", help="Monte Carlo run-length study")
    p3.add_argument(
        "--scenario",
        required=True,
        help="preset name (" + ", ".join(sorted(PRESETS)) + ") or a scenario file",
    )
    p3.add_argument("--out", required=True, help="output directory")
    p3.add_argument("--replications", type=int, default=None)
    p3.add_argument("--seed", type=int, default=None)
    p3.set_defaults(func=_cmd_simulate)

    p4 = sub.add_parser(
        "demo-padgett", help="walkthrough on the bundled carbon fiber data"
    )
    p4.add_argument("--out", required=True, help="output directory")
    p4.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
