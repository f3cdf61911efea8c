"""Config files, sample ingestion, and state round-tripping for the CLI.

Config files are plain ``key = value`` lines with ``#`` comments. Data
files carry one subgroup per line, values separated by commas or
whitespace, with ``#`` comments allowed. Chart states round-trip through a
versioned JSON document so a monitoring run can continue where a previous
invocation stopped. All emitters are deterministic: the same state always
produces byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from typing import Optional, Sequence, Tuple

import numpy as np

from .chart import (
    ChartConfig,
    ChartRecord,
    ChartState,
    PHASE1,
    PHASE2,
)
from .distributions import WeibullModel
from .limits import ControlLimits
from .posterior import PosteriorState
from .prior import PriorSpec
from .simulation import ScenarioSpec

STATE_FORMAT = "weibayes-state"
STATE_VERSION = 1

_CHART_KEYS = {
    "reliability",
    "alpha",
    "subgroup_size",
    "phase1_samples",
    "prior.beta1",
    "prior.beta2",
    "prior.x_bar",
    "handoff_window",
    "enable_beta_chart",
    "seed",
}

_SCENARIO_KEYS = {
    "ic.delta",
    "ic.beta",
    "ooc.delta",
    "ooc.beta",
    "reliability",
    "alpha",
    "subgroup_size",
    "phase1_samples",
    "replications",
    "seed",
    "max_run",
    "chart",
    "prior_mode",
    "prior_shift",
}


def _parse_kv(text: str, allowed: set) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in allowed:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        values[key] = (lineno, val)
    return values


def _get(values: dict, key: str, conv, required: bool = True, default=None):
    if key not in values:
        if required:
            raise ValueError(f"missing required key {key!r}")
        return default
    lineno, raw = values[key]
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise ValueError(f"line {lineno}: invalid value {raw!r} for {key!r}") from None


def _to_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(raw)


def _to_optional_int(raw: str) -> Optional[int]:
    if raw.lower() in ("none", ""):
        return None
    return int(raw)


def parse_chart_config(text: str) -> Tuple[ChartConfig, Optional[int]]:
    """Parse a chart config file; returns the config and the optional seed."""
    values = _parse_kv(text, _CHART_KEYS)
    config = ChartConfig(
        r=_get(values, "reliability", float),
        alpha=_get(values, "alpha", float),
        n=_get(values, "subgroup_size", int),
        phase1_samples=_get(values, "phase1_samples", int),
        prior_beta1=_get(values, "prior.beta1", float),
        prior_beta2=_get(values, "prior.beta2", float),
        prior_x_bar=_get(values, "prior.x_bar", float),
        handoff_window=_get(values, "handoff_window", _to_optional_int, required=False),
        enable_beta_chart=_get(
            values, "enable_beta_chart", _to_bool, required=False, default=False
        ),
    )
    seed = _get(values, "seed", _to_optional_int, required=False)
    return config, seed


def parse_scenario_config(text: str) -> ScenarioSpec:
    """Parse a simulation scenario config file."""
    values = _parse_kv(text, _SCENARIO_KEYS)
    return ScenarioSpec(
        ic=WeibullModel(
            delta=_get(values, "ic.delta", float), beta=_get(values, "ic.beta", float)
        ),
        ooc=WeibullModel(
            delta=_get(values, "ooc.delta", float), beta=_get(values, "ooc.beta", float)
        ),
        r=_get(values, "reliability", float),
        alpha=_get(values, "alpha", float, required=False, default=0.0027),
        n=_get(values, "subgroup_size", int, required=False, default=5),
        m=_get(values, "phase1_samples", int, required=False, default=25),
        replications=_get(values, "replications", int, required=False, default=300),
        seed=_get(values, "seed", int, required=False, default=20260816),
        max_run=_get(values, "max_run", int, required=False, default=100_000),
        chart=_get(values, "chart", str, required=False, default="xr"),
        prior_mode=_get(values, "prior_mode", str, required=False, default="centered"),
        prior_shift=_get(values, "prior_shift", float, required=False, default=1.0),
    )


def ingest_samples(text: str, n: Optional[int] = None) -> np.ndarray:
    """Parse subgroup data, one subgroup per line.

    Values may be separated by commas, whitespace, or both; ``#`` starts a
    comment. Every parse or domain problem reports its line number. When
    ``n`` is given each line must carry exactly ``n`` values; otherwise the
    first data line fixes the subgroup size.
    """
    rows = []
    width = n
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: could not parse {line!r} as numbers") from None
        if width is None:
            width = len(vals)
        if len(vals) != width:
            raise ValueError(
                f"line {lineno}: expected {width} values per subgroup, got {len(vals)}"
            )
        bad = [v for v in vals if not (v > 0) or not np.isfinite(v)]
        if bad:
            raise ValueError(
                f"line {lineno}: observations must be positive and finite, got {bad[0]!r}"
            )
        rows.append(vals)
    if not rows:
        raise ValueError("no data lines found")
    return np.asarray(rows, dtype=float)


def _limits_to_dict(lims: Optional[ControlLimits]) -> Optional[dict]:
    return None if lims is None else asdict(lims)


def _limits_from_dict(d: Optional[dict]) -> Optional[ControlLimits]:
    return None if d is None else ControlLimits(**d)


def _posterior_to_dict(state: PosteriorState) -> dict:
    return {
        "observations": [float(v) for v in state.observations],
        "k": state.k,
        "n": state.n,
        "r": state.r,
        "prior": asdict(state.prior),
        "sum_log_x": state.sum_log_x,
        "beta_hat_history": [float(v) for v in state.beta_hat_history],
        "prior_scale_weight": state.prior_scale_weight,
        "anchor_b": state.anchor_b,
    }


def _posterior_from_dict(d: dict) -> PosteriorState:
    return PosteriorState(
        observations=np.asarray(d["observations"], dtype=float),
        k=d["k"],
        n=d["n"],
        r=d["r"],
        prior=PriorSpec(**d["prior"]),
        sum_log_x=d["sum_log_x"],
        beta_hat_history=tuple(d["beta_hat_history"]),
        prior_scale_weight=d["prior_scale_weight"],
        anchor_b=d["anchor_b"],
    )


def _record_to_dict(rec: ChartRecord) -> dict:
    return {
        "sample_index": rec.sample_index,
        "xr_point": rec.xr_point,
        "beta_point": rec.beta_point,
        "xr_limits_at_k": _limits_to_dict(rec.xr_limits_at_k),
        "beta_limits_at_k": _limits_to_dict(rec.beta_limits_at_k),
        "phase": rec.phase,
        "signal": rec.signal,
        "diagnostic": rec.diagnostic,
    }


def _record_from_dict(d: dict) -> ChartRecord:
    return ChartRecord(
        sample_index=d["sample_index"],
        xr_point=d["xr_point"],
        beta_point=d["beta_point"],
        xr_limits_at_k=_limits_from_dict(d["xr_limits_at_k"]),
        beta_limits_at_k=_limits_from_dict(d["beta_limits_at_k"]),
        phase=d["phase"],
        signal=d["signal"],
        diagnostic=d["diagnostic"],
    )


def dump_state(chart: ChartState) -> str:
    """Serialize a chart state to a versioned JSON document."""
    doc = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "config": asdict(chart.config),
        "phase": chart.phase,
        "records": [_record_to_dict(r) for r in chart.records],
        "frozen_xr": _limits_to_dict(chart.frozen_xr),
        "frozen_beta": _limits_to_dict(chart.frozen_beta),
        "posterior": _posterior_to_dict(chart.posterior),
        "rollback": None if chart.rollback is None else _posterior_to_dict(chart.rollback),
        "samples_seen": chart.samples_seen,
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def load_state(text: str) -> ChartState:
    """Rebuild a chart state from its JSON document, checking the version."""
    doc = json.loads(text)
    if doc.get("format") != STATE_FORMAT:
        raise ValueError(f"not a {STATE_FORMAT} document")
    if doc.get("version") != STATE_VERSION:
        raise ValueError(
            f"unsupported state version {doc.get('version')!r}, expected {STATE_VERSION}"
        )
    return ChartState(
        config=ChartConfig(**doc["config"]),
        posterior=_posterior_from_dict(doc["posterior"]),
        phase=doc["phase"],
        records=tuple(_record_from_dict(d) for d in doc["records"]),
        frozen_xr=_limits_from_dict(doc["frozen_xr"]),
        frozen_beta=_limits_from_dict(doc["frozen_beta"]),
        rollback=None if doc["rollback"] is None else _posterior_from_dict(doc["rollback"]),
        samples_seen=doc["samples_seen"],
    )


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(v, ".6g")


def report_table(chart: ChartState) -> str:
    """Tab-delimited table of every charted point and its limits."""
    header = [
        "sample_index",
        "phase",
        "xr_point",
        "xr_lcl",
        "xr_cl",
        "xr_ucl",
        "beta_point",
        "beta_lcl",
        "beta_cl",
        "beta_ucl",
        "signal",
        "diagnostic",
    ]
    lines = ["\t".join(header)]
    for rec in chart.records:
        xl = rec.xr_limits_at_k
        bl = rec.beta_limits_at_k
        lines.append(
            "\t".join(
                [
                    str(rec.sample_index),
                    rec.phase,
                    _fmt(rec.xr_point),
                    _fmt(xl.lcl),
                    _fmt(xl.cl),
                    _fmt(xl.ucl),
                    _fmt(rec.beta_point),
                    _fmt(None if bl is None else bl.lcl),
                    _fmt(None if bl is None else bl.cl),
                    _fmt(None if bl is None else bl.ucl),
                    rec.signal,
                    "yes" if rec.diagnostic else "no",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def report_summary(chart: ChartState) -> str:
    """Human-readable summary: configuration, frozen limits, signals."""
    c = chart.config
    out = []
    out.append("chart summary")
    out.append(f"reliability target R = {c.r}")
    out.append(f"false-alarm rate alpha = {c.alpha}")
    out.append(f"subgroup size n = {c.n}, phase 1 subgroups m = {c.phase1_samples}")
    out.append(
        f"anticipated shape interval ({c.prior_beta1}, {c.prior_beta2}), "
        f"anticipated percentile {c.prior_x_bar}"
    )
    if c.handoff_window is not None:
        out.append(f"handoff window: last {c.handoff_window} subgroups")
    out.append(f"phase: {chart.phase}, subgroups charted: {chart.samples_seen}")
    if chart.frozen_xr is not None:
        f = chart.frozen_xr
        out.append(
            f"frozen percentile limits: lcl {f.lcl:.6g}  cl {f.cl:.6g}  ucl {f.ucl:.6g}"
        )
    if chart.frozen_beta is not None:
        f = chart.frozen_beta
        out.append(
            f"frozen shape limits: lcl {f.lcl:.6g}  cl {f.cl:.6g}  ucl {f.ucl:.6g}"
        )
    signals = [r for r in chart.records if r.signal != "none"]
    if signals:
        for rec in signals:
            out.append(f"signal at subgroup {rec.sample_index}: {rec.signal}")
    else:
        out.append("no signals")
    diags = [r.sample_index for r in chart.records if r.phase == PHASE1 and r.diagnostic]
    if diags:
        out.append(
            "phase 1 diagnostics (outside the previous step's limits): "
            + ", ".join(str(i) for i in diags)
        )
    return "\n".join(out) + "\n"
