"""Campaign orchestration: frequency points, verdicts, interface sweeps.

A campaign walks the requested interfaces in order.  For each one it
checks connector availability (native analyzer port or converter chain),
then measures at every configured bit rate and at three tuning points of
the device's IF range:

    f0 = (f_max + f_min) / 2      midband
    f1 = 0.95 * f_max             upper edge, backed off 5%
    f2 = 1.05 * f_min             lower edge, backed off 5%

A measurement passes when its BER does not exceed the policy threshold;
an interface passes only when every measurement does.  A missing
connector is a recorded outcome, not an error.  All bookkeeping runs on a
virtual clock so reports are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import BerValue, InterfaceKind, Outcome, Verdict, check_freq_hz, exact_fraction
from .meter import BerMeasurement, MeasurementConfig, analyzer_self_test, measure
from .testbed import (
    AnalyzerProfile,
    ConverterChain,
    ConverterSpec,
    DutProfile,
    NoPortError,
    dut_open_session,
    resolve_chain,
)

#: Analyzer stabilization time charged to the virtual clock at campaign
#: start; unquantified by instrument documentation, fixed for determinism.
ANALYZER_WARMUP_S = 900

#: Default bit rate tested on every interface: the top rate every bench
#: path carries end to end.
DEFAULT_RATE_KBPS = 2048


class CampaignPreconditionError(Exception):
    """The tuning range cannot host the three frequency points."""


@dataclass(frozen=True)
class FrequencyPoints:
    f0: float
    f1: float
    f2: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.f0, self.f1, self.f2)


def compute_frequencies(f_min_hz: float, f_max_hz: float) -> FrequencyPoints:
    """The three tuning points for a device IF range."""
    f_min = check_freq_hz(f_min_hz)
    f_max = check_freq_hz(f_max_hz)
    if f_min > f_max:
        raise ValueError(f"inverted IF range: {f_min} > {f_max}")
    return FrequencyPoints(0.5 * (f_max + f_min), 0.95 * f_max, 1.05 * f_min)


@dataclass(frozen=True)
class VerdictPolicy:
    """Pass threshold for a single BER result."""

    ber_max: Fraction = Fraction(1, 10**5)

    def __post_init__(self):
        ber_max = exact_fraction(self.ber_max)
        if not 0 < ber_max < 1:
            raise ValueError(f"threshold must be in (0, 1), got {ber_max}")
        object.__setattr__(self, "ber_max", ber_max)


def apply_verdict(ber: BerValue, policy: VerdictPolicy) -> Outcome:
    """Non-strict comparison: a result exactly at the threshold passes.

    An upper bound passes only when the bound itself clears the threshold;
    a resolution coarser than the threshold can never prove compliance.
    """
    return Outcome.PASS if ber.value <= policy.ber_max else Outcome.FAIL


@dataclass(frozen=True)
class InterfaceResult:
    iface: InterfaceKind
    verdict: Verdict
    chain: ConverterChain | None
    converter_used: bool
    measurements: tuple[BerMeasurement, ...]


@dataclass(frozen=True)
class CampaignReport:
    dut_name: str
    analyzer: AnalyzerProfile
    results: tuple[InterfaceResult, ...]
    ber0: Fraction
    ber_max: Fraction
    pattern_order: int
    pattern_taps: tuple[int, int]
    pattern_seed: int
    channel: object
    rates: tuple[tuple[InterfaceKind, tuple[int, ...]], ...]
    frequencies: FrequencyPoints
    virtual_start_s: int
    virtual_end_s: int
    log: tuple[tuple[int, str], ...]


@dataclass
class _Clock:
    now_s: int = 0
    log: list[tuple[int, str]] = field(default_factory=list)
    measurement_index: int = 0

    def note(self, message: str) -> None:
        self.log.append((self.now_s, message))

    def advance(self, seconds: int, message: str) -> None:
        self.note(message)
        self.now_s += int(seconds)


def _mhz(freq_hz: float) -> str:
    return f"{freq_hz / 1e6:g} MHz"


def _run_interface(
    dut: DutProfile,
    analyzer: AnalyzerProfile,
    catalog: Iterable[ConverterSpec],
    iface: InterfaceKind,
    rates: Sequence[int],
    config: MeasurementConfig,
    policy: VerdictPolicy,
    points: FrequencyPoints,
    clock: _Clock,
) -> InterfaceResult:
    rates = list(rates)
    if not rates:
        raise ValueError(f"no bit rates configured for {iface}")
    chain = resolve_chain(analyzer, iface, catalog, max(rates))
    if chain is None:
        note = (
            f"no appropriate {iface} connector: analyzer has no native port "
            f"at {max(rates)} kbit/s and no converter chain exists"
        )
        clock.note(f"{iface}: {note}")
        return InterfaceResult(iface, Verdict(Outcome.NO_CONNECTOR, note), None, False, ())
    if chain.converters:
        clock.note(f"{iface}: connected via {' + '.join(chain.names())}")
    else:
        clock.note(f"{iface}: connected natively")

    measurements: list[BerMeasurement] = []
    for rate in rates:
        for freq in points.as_tuple():
            clock.measurement_index += 1
            try:
                session = dut_open_session(
                    dut, iface, rate, freq, seed_tag=clock.measurement_index
                )
            except NoPortError as exc:
                note = f"no appropriate interface connector: {exc}"
                clock.note(f"{iface}: {note}")
                return InterfaceResult(iface, Verdict(Outcome.NO_CONNECTOR, note), chain, bool(chain.converters), ())
            m = measure(session, config)
            measurements.append(m)
            clock.advance(
                m.duration_s,
                f"{iface} @ {rate} kbit/s, {_mhz(freq)}: "
                f"{m.errored_bits} errors / {m.transmitted_bits} bits",
            )
    ok = all(apply_verdict(m.ber, policy) is Outcome.PASS for m in measurements)
    verdict = Verdict(Outcome.PASS if ok else Outcome.FAIL)
    return InterfaceResult(iface, verdict, chain, bool(chain.converters), tuple(measurements))


def run_interface_test(
    dut: DutProfile,
    analyzer: AnalyzerProfile,
    catalog: Iterable[ConverterSpec],
    iface: InterfaceKind,
    rates: Sequence[int],
    config: MeasurementConfig,
    policy: VerdictPolicy,
) -> InterfaceResult:
    """Connector check, rate/frequency sweep, and verdict for one interface."""
    points = compute_frequencies(*dut.if_range_hz)
    return _run_interface(
        dut, analyzer, list(catalog), iface, rates, config, policy, points, _Clock()
    )


def _rates_for(
    iface: InterfaceKind, rates: Mapping | Sequence[int] | None
) -> tuple[int, ...]:
    if rates is None:
        return (DEFAULT_RATE_KBPS,)
    if isinstance(rates, Mapping):
        chosen = rates.get(iface, (DEFAULT_RATE_KBPS,))
        return tuple(chosen)
    return tuple(rates)


def run_campaign(
    dut: DutProfile,
    analyzer: AnalyzerProfile,
    catalog: Iterable[ConverterSpec],
    ifaces: Sequence[InterfaceKind],
    config: MeasurementConfig,
    policy: VerdictPolicy,
    rates: Mapping | Sequence[int] | None = None,
) -> CampaignReport:
    """The full procedure over an ordered interface list.

    `rates` may be a per-interface mapping, one list for all interfaces,
    or None for the single default rate.  Results come back in request
    order, one per requested interface (duplicates measured twice).
    """
    f_min, f_max = dut.if_range_hz
    if Fraction(f_max) < Fraction(21, 20) * Fraction(f_min):
        raise CampaignPreconditionError(
            f"IF range [{f_min:g}, {f_max:g}] Hz too narrow: the upper edge must "
            "be at least 1.05x the lower edge to host the three tuning points"
        )
    points = compute_frequencies(f_min, f_max)
    catalog = list(catalog)
    clock = _Clock()
    clock.advance(ANALYZER_WARMUP_S, "analyzer powered, waiting for stability")
    analyzer_self_test(config.pattern)
    clock.note("analyzer self-test: pattern self-loop clean")
    clock.note(f"EUT '{dut.name}' set up per its manual")
    clock.advance(dut.warmup_s, "EUT powered, waiting for stability")

    results = []
    rate_echo = []
    for iface in ifaces:
        iface_rates = _rates_for(iface, rates)
        rate_echo.append((iface, iface_rates))
        results.append(
            _run_interface(
                dut, analyzer, catalog, iface, iface_rates, config, policy, points, clock
            )
        )
    clock.note("campaign complete")
    return CampaignReport(
        dut_name=dut.name,
        analyzer=analyzer,
        results=tuple(results),
        ber0=config.ber0,
        ber_max=policy.ber_max,
        pattern_order=config.pattern.order,
        pattern_taps=config.pattern.taps,
        pattern_seed=config.pattern.seed,
        channel=dut.loopback_channel,
        rates=tuple(rate_echo),
        frequencies=points,
        virtual_start_s=0,
        virtual_end_s=clock.now_s,
        log=tuple(clock.log),
    )
