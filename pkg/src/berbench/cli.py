"""Operator front end: measurement plans, campaign runs, report rendering.

Commands
--------
plan     timing table for a rate list at a given resolution
run      execute a campaign and emit JSON + text reports
catalog  list converters and the resolved chain per interface
report   re-render a saved JSON report as text

Exit codes: 0 all interfaces pass, 1 some interface fails, 2 some
interface has no connector, 3 configuration error (3 beats 2 beats 1).

Human tables group thousands with a space ("15 625"); JSON carries plain
integers.  Text rendering is a pure function of the JSON report, so a
saved report re-renders byte-identically.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from . import channel as channel_mod
from .core import (
    BerValue,
    InterfaceKind,
    Outcome,
    REPORT_ORDER,
    exact_fraction,
    format_ber,
    format_duration,
    parse_interface,
)
from .meter import MeasurementConfig, required_duration
from .prbs import PrbsSpec
from .procedure import (
    CampaignPreconditionError,
    CampaignReport,
    VerdictPolicy,
    run_campaign,
)
from .testbed import (
    AnalyzerProfile,
    ConverterSpec,
    DEFAULT_ANALYZER,
    DutProfile,
    FrequencyRangeError,
    UnsupportedRateError,
    analyzer_from_dict,
    analyzer_to_dict,
    catalog_from_list,
    catalog_to_list,
    default_catalog,
    default_profile,
    profile_from_dict,
    profile_to_dict,
    resolve_chain,
)

CONFIG_SCHEMA = "ber-campaign-config/1"
REPORT_SCHEMA = "ber-campaign-report/1"
PLAN_SCHEMA = "ber-plan/1"

#: Rate families shown by the default plan.
PLAN_FAMILIES: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("V.35", (64, 128, 192, 256, 320, 384, 448, 512)),
    ("G.703, G.704 (others)", (256, 512, 1024, 2048)),
)


class ConfigError(Exception):
    """Anything wrong with a config document or command arguments."""


def group_thousands(n: int) -> str:
    return f"{n:,}".replace(",", " ")


def _fraction_float(value: Fraction) -> float:
    return float(value)


def _fraction_from_json(value) -> Fraction:
    # JSON numbers come back as shortest-repr floats; read them as the
    # decimal they print as, which restores 1e-08 to exactly 10**-8.
    return exact_fraction(value)


def _format_resolution(value: Fraction) -> str:
    return format_ber(BerValue(value, is_bound=True))[2:]  # strip "< "


# ---------------------------------------------------------------------------
# plan


def plan_rows(rates: Sequence[int], ber0, family: str | None = None) -> list[dict]:
    rows = []
    for rate in rates:
        seconds = required_duration(rate, ber0)
        rows.append(
            {
                "family": family,
                "rate_kbps": int(rate),
                "seconds": seconds,
                "duration": format_duration(seconds),
            }
        )
    return rows


def build_plan(rates: Sequence[int] | None, ber0) -> dict:
    ber0 = exact_fraction(ber0)
    if rates is None:
        rows = []
        for family, family_rates in PLAN_FAMILIES:
            rows.extend(plan_rows(family_rates, ber0, family))
    else:
        rows = plan_rows(rates, ber0)
    return {"schema": PLAN_SCHEMA, "ber0": _fraction_float(ber0), "rows": rows}


def render_plan_text(plan: dict) -> str:
    ber0 = _fraction_from_json(plan["ber0"])
    rows = plan["rows"]
    with_family = any(r.get("family") for r in rows)
    header = ["B (kbit/s)", "t0 (s)", "t0 (h:min:s)"]
    table = [
        [group_thousands(r["rate_kbps"]), group_thousands(r["seconds"]), r["duration"]]
        for r in rows
    ]
    if with_family:
        header.insert(0, "Interface family")
        for row, r in zip(table, rows):
            row.insert(0, r["family"] or "")
    widths = [max(len(header[c]), *(len(row[c]) for row in table)) if table else len(header[c])
              for c in range(len(header))]
    lines = [f"BER measurement plan (resolution {_format_resolution(ber0)})", ""]
    aligned = ["<"] + [">"] * 3 if with_family else [">"] * 3
    lines.append("  ".join(f"{h:{a}{w}}" for h, a, w in zip(header, aligned, widths)))
    for row in table:
        lines.append("  ".join(f"{v:{a}{w}}" for v, a, w in zip(row, aligned, widths)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# campaign configuration


@dataclass
class CampaignConfig:
    dut: DutProfile
    analyzer: AnalyzerProfile
    catalog: tuple[ConverterSpec, ...]
    interfaces: tuple[InterfaceKind, ...]
    rates: dict[InterfaceKind, tuple[int, ...]] | None
    ber0: Fraction
    ber_max: Fraction
    pattern: PrbsSpec


def default_config() -> CampaignConfig:
    return CampaignConfig(
        dut=default_profile(),
        analyzer=DEFAULT_ANALYZER,
        catalog=default_catalog(),
        interfaces=REPORT_ORDER,
        rates=None,
        ber0=Fraction(1, 10**8),
        ber_max=Fraction(1, 10**5),
        pattern=PrbsSpec(),
    )


def _load_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _resolve_section(value, base: Path, loader):
    if isinstance(value, str):
        doc = _load_json(base / value if not Path(value).is_absolute() else Path(value))
        return loader(doc)
    return loader(value)


def _channel_from_config(data: dict) -> channel_mod.ChannelModel:
    if "seed" not in data:
        raise ConfigError(
            f"channel {data.get('kind', '?')!r} has no seed; seeds must be explicit"
        )
    return channel_mod.model_from_dict(data)


def load_config(path: str | Path) -> CampaignConfig:
    path = Path(path)
    data = _load_json(path)
    if data.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(
            f"{path}: expected schema {CONFIG_SCHEMA!r}, got {data.get('schema')!r}"
        )
    base = path.parent
    cfg = default_config()
    try:
        if "dut" in data:
            cfg.dut = _resolve_section(data["dut"], base, profile_from_dict)
        if "analyzer" in data:
            cfg.analyzer = _resolve_section(data["analyzer"], base, analyzer_from_dict)
        if "catalog" in data:
            cfg.catalog = _resolve_section(data["catalog"], base, catalog_from_list)
        if "interfaces" in data:
            cfg.interfaces = tuple(parse_interface(n) for n in data["interfaces"])
        if "rates" in data:
            rates = data["rates"]
            if isinstance(rates, list):
                shared = tuple(int(r) for r in rates)
                cfg.rates = {kind: shared for kind in cfg.interfaces}
            else:
                cfg.rates = {
                    parse_interface(name): tuple(int(r) for r in values)
                    for name, values in rates.items()
                }
        if "ber0" in data:
            cfg.ber0 = exact_fraction(data["ber0"])
        if "ber_max" in data:
            cfg.ber_max = exact_fraction(data["ber_max"])
        if "pattern" in data:
            p = data["pattern"]
            cfg.pattern = PrbsSpec(
                order=int(p.get("order", 15)),
                taps=tuple(p["taps"]) if "taps" in p else None,
                seed=int(p["seed"]) if "seed" in p else None,
            )
        if "channel" in data:
            model = _channel_from_config(data["channel"])
            cfg.dut = dataclasses.replace(cfg.dut, loopback_channel=model)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


def parse_channel_spec(spec: str, seed: int) -> channel_mod.ChannelModel:
    kind, _, rest = spec.partition(":")
    try:
        if kind == "ideal":
            return channel_mod.Ideal(seed=seed)
        if kind == "bsc":
            return channel_mod.Bsc(p=float(rest), seed=seed)
        if kind == "ge":
            p_gb, p_bg, p_good, p_bad = (float(v) for v in rest.split(","))
            return channel_mod.GilbertElliott(p_gb, p_bg, p_good, p_bad, seed=seed)
        if kind == "mask":
            indices = tuple(int(v) for v in rest.split(",")) if rest else ()
            return channel_mod.FixedMask(indices=indices, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"bad channel spec {spec!r}: {exc}") from None
    raise ConfigError(
        f"unknown channel spec {spec!r}; use ideal, bsc:P, ge:PGB,PBG,PGOOD,PBAD or mask:I,J,..."
    )


# ---------------------------------------------------------------------------
# report serialization and rendering


def _measurement_to_dict(m) -> dict:
    return {
        "rate_kbps": m.rate_kbps,
        "freq_hz": m.freq_hz,
        "transmitted_bits": m.transmitted_bits,
        "errored_bits": m.errored_bits,
        "ber": {
            "kind": "upper_bound" if m.ber.is_bound else "point",
            "value": _fraction_float(m.ber.value),
        },
        "duration_s": m.duration_s,
        "sync_failed": m.sync_failed,
    }


def report_to_dict(report: CampaignReport) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "dut": report.dut_name,
        "analyzer": analyzer_to_dict(report.analyzer),
        "config": {
            "ber0": _fraction_float(report.ber0),
            "ber_max": _fraction_float(report.ber_max),
            "pattern": {
                "order": report.pattern_order,
                "taps": list(report.pattern_taps),
                "seed": report.pattern_seed,
            },
            "channel": channel_mod.model_to_dict(report.channel),
            "rates": {kind.value: list(rates) for kind, rates in report.rates},
        },
        "frequencies_hz": {
            "f0": report.frequencies.f0,
            "f1": report.frequencies.f1,
            "f2": report.frequencies.f2,
        },
        "results": [
            {
                "interface": r.iface.value,
                "verdict": r.verdict.outcome.value,
                "note": r.verdict.note,
                "converter_used": r.converter_used,
                "chain": list(r.chain.names()) if r.chain is not None else None,
                "measurements": [_measurement_to_dict(m) for m in r.measurements],
            }
            for r in report.results
        ],
        "timestamps": {
            "virtual_start_s": report.virtual_start_s,
            "virtual_end_s": report.virtual_end_s,
        },
        "log": [[t, msg] for t, msg in report.log],
    }


def _worst_ber(measurements: list[dict]) -> dict | None:
    def key(m):
        ber = m["ber"]
        value = (
            Fraction(m["errored_bits"], m["transmitted_bits"])
            if ber["kind"] == "point"
            else _fraction_from_json(ber["value"])
        )
        return (value, 0 if ber["kind"] == "upper_bound" else 1)

    return max(measurements, key=key) if measurements else None


def _render_ber_cell(m: dict | None) -> str:
    if m is None:
        return "-"
    ber = m["ber"]
    if ber["kind"] == "upper_bound":
        return format_ber(BerValue(_fraction_from_json(ber["value"]), is_bound=True))
    return format_ber(BerValue.point(m["errored_bits"], m["transmitted_bits"]))


def render_report_text(report: dict) -> str:
    cfg = report["config"]
    ber0 = _fraction_from_json(cfg["ber0"])
    ber_max = _fraction_from_json(cfg["ber_max"])
    pattern = cfg["pattern"]
    freqs = report["frequencies_hz"]
    chan = cfg["channel"]
    extras = " ".join(f"{k}={v}" for k, v in chan.items() if k not in ("kind", "seed"))
    chan_text = chan["kind"] + (f" {extras}" if extras else "") + f" (seed {chan['seed']})"

    lines = [
        "BER campaign report",
        "===================",
        f"DUT:        {report['dut']}",
        f"Pattern:    PRBS-{pattern['order']}, taps ({pattern['taps'][0]}, "
        f"{pattern['taps'][1]}), seed {pattern['seed']}",
        f"Resolution: BER_0 = {_format_resolution(ber0)}    "
        f"Pass threshold: BER_max = {_format_resolution(ber_max)}",
        f"Channel:    {chan_text}",
        f"Tuning:     f0 = {freqs['f0'] / 1e6:g} MHz, f1 = {freqs['f1'] / 1e6:g} MHz, "
        f"f2 = {freqs['f2'] / 1e6:g} MHz",
        "",
    ]
    header = ["Traffic interface", "BER result", "Converter used", "Verdict"]
    rows = []
    notes = []
    for result in report["results"]:
        worst = _worst_ber(result["measurements"])
        if result["verdict"] == Outcome.NO_CONNECTOR.value:
            rows.append([result["interface"], "-", "-", result["verdict"]])
        else:
            rows.append(
                [
                    result["interface"],
                    _render_ber_cell(worst),
                    "YES" if result["converter_used"] else "NO",
                    result["verdict"],
                ]
            )
        if result.get("note"):
            notes.append(f"  {result['interface']}: {result['note']}")
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
        for c in range(4)
    ]
    lines.append("  ".join(f"{h:<{w}}" for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(f"{v:<{w}}" for v, w in zip(row, widths)).rstrip())
    if notes:
        lines.append("")
        lines.append("notes:")
        lines.extend(notes)
    return "\n".join(lines) + "\n"


def exit_code_for(report: dict) -> int:
    verdicts = [r["verdict"] for r in report["results"]]
    if Outcome.NO_CONNECTOR.value in verdicts:
        return 2
    if Outcome.FAIL.value in verdicts:
        return 1
    return 0


def _dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands


def _parse_rates_arg(text: str) -> tuple[int, ...]:
    try:
        rates = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad rate list {text!r}; expected comma-separated integers") from None
    if not rates:
        raise ConfigError("empty rate list")
    return rates


def cmd_plan(args) -> int:
    rates = _parse_rates_arg(args.rates) if args.rates else None
    try:
        plan = build_plan(rates, exact_fraction(args.ber0))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    out = _dump_json(plan) if args.format == "json" else render_plan_text(plan)
    if args.out:
        _write_text(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return 0


def _configure(args) -> CampaignConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.ber0 is not None:
        cfg.ber0 = exact_fraction(args.ber0)
    if args.bermax is not None:
        cfg.ber_max = exact_fraction(args.bermax)
    if args.channel is not None:
        seed = args.seed if args.seed is not None else cfg.dut.loopback_channel.seed
        model = parse_channel_spec(args.channel, seed)
        cfg.dut = dataclasses.replace(cfg.dut, loopback_channel=model)
    elif args.seed is not None:
        model = dataclasses.replace(cfg.dut.loopback_channel, seed=args.seed)
        cfg.dut = dataclasses.replace(cfg.dut, loopback_channel=model)
    return cfg


def cmd_run(args) -> int:
    cfg = _configure(args)
    try:
        config = MeasurementConfig(ber0=cfg.ber0, pattern=cfg.pattern)
        policy = VerdictPolicy(ber_max=cfg.ber_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = run_campaign(
        cfg.dut, cfg.analyzer, cfg.catalog, cfg.interfaces, config, policy, rates=cfg.rates
    )
    report_dict = report_to_dict(report)
    json_text = _dump_json(report_dict)
    table_text = render_report_text(report_dict)
    base = Path(args.out) if args.out else Path("ber_campaign")
    _write_text(base.with_suffix(".json"), json_text)
    _write_text(base.with_suffix(".txt"), table_text)
    sys.stdout.write(json_text if args.format == "json" else table_text)
    return exit_code_for(report_dict)


def cmd_catalog(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        catalog, analyzer = cfg.catalog, cfg.analyzer
    else:
        catalog, analyzer = default_catalog(), DEFAULT_ANALYZER
    rate = args.rate
    lines = [f"Converter catalog ({len(catalog)} converters)", ""]
    name_w = max(len(c.name) for c in catalog)
    for conv in catalog:
        limit = f", up to {conv.max_rate_kbps} kbit/s" if conv.max_rate_kbps else ""
        note = f"  [{conv.notes}]" if conv.notes else ""
        lines.append(f"  {conv.name:<{name_w}}  {conv.describe()}{limit}{note}")
    lines.append("")
    lines.append(f"Chain preview at {rate} kbit/s:")
    kind_w = max(len(k.value) for k in REPORT_ORDER)
    for kind in REPORT_ORDER:
        chain = resolve_chain(analyzer, kind, catalog, rate)
        if chain is None:
            text = "no path (no connector)"
        elif not chain.converters:
            text = "native (no converter)"
        else:
            text = " + ".join(chain.names())
        lines.append(f"  {kind.value:<{kind_w}}  {text}")
    out = "\n".join(lines) + "\n"
    if args.out:
        _write_text(Path(args.out), out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_report(args) -> int:
    data = _load_json(Path(args.in_path))
    if data.get("schema") != REPORT_SCHEMA:
        raise ConfigError(
            f"{args.in_path}: expected schema {REPORT_SCHEMA!r}, got {data.get('schema')!r}"
        )
    text = render_report_text(data)
    if args.out:
        _write_text(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return exit_code_for(data)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="berbench",
        description="Deterministic BER test campaigns for modem traffic interfaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="measurement timing table")
    p_plan.add_argument("--rates", help="comma-separated bit rates in kbit/s")
    p_plan.add_argument("--ber0", default="1e-8", help="measurement resolution (default 1e-8)")
    p_plan.add_argument("--format", choices=("text", "json"), default="text")
    p_plan.add_argument("--out", help="write output to this path instead of stdout")
    p_plan.set_defaults(func=cmd_plan)

    p_run = sub.add_parser("run", help="execute a campaign")
    p_run.add_argument("--config", help="campaign config JSON (defaults are built in)")
    p_run.add_argument("--ber0", help="override measurement resolution")
    p_run.add_argument("--bermax", help="override pass threshold")
    p_run.add_argument("--seed", type=int, help="override channel seed")
    p_run.add_argument(
        "--channel", help="override channel: ideal | bsc:P | ge:PGB,PBG,PGOOD,PBAD | mask:I,J,..."
    )
    p_run.add_argument("--format", choices=("text", "json"), default="text")
    p_run.add_argument(
        "--out", help="base path for <out>.json and <out>.txt (default ber_campaign)"
    )
    p_run.set_defaults(func=cmd_run)

    p_cat = sub.add_parser("catalog", help="list converters and chain previews")
    p_cat.add_argument("--config", help="campaign config JSON")
    p_cat.add_argument("--rate", type=int, default=2048, help="preview rate (default 2048)")
    p_cat.add_argument("--out", help="write output to this path instead of stdout")
    p_cat.set_defaults(func=cmd_catalog)

    p_rep = sub.add_parser("report", help="re-render a saved JSON report")
    p_rep.add_argument("--in", dest="in_path", required=True, help="saved JSON report")
    p_rep.add_argument("--out", help="write text to this path instead of stdout")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        CampaignPreconditionError,
        UnsupportedRateError,
        FrequencyRangeError,
        ValueError,
        TypeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
