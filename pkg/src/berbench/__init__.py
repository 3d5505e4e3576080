"""Deterministic BER test-campaign engine for modem traffic interfaces.

A simulated bench (pattern generator, fault channel, modem loopback,
converter chains, BER meter) plus the orchestration that sweeps bit
rates, tuning frequencies, and interface types into a verdict table.
"""

from .channel import Bsc, FixedMask, GilbertElliott, Ideal
from .core import (
    BerValue,
    InterfaceKind,
    Outcome,
    REPORT_ORDER,
    Verdict,
    format_ber,
    format_duration,
    parse_interface,
)
from .meter import BerMeasurement, MeasurementConfig, measure, required_bits, required_duration
from .prbs import PrbsSpec, SyncState, count_errors, generate, synchronize
from .procedure import (
    CampaignReport,
    FrequencyPoints,
    InterfaceResult,
    VerdictPolicy,
    apply_verdict,
    compute_frequencies,
    run_campaign,
    run_interface_test,
)
from .testbed import (
    AnalyzerProfile,
    ConverterChain,
    ConverterSpec,
    DutProfile,
    default_catalog,
    default_profile,
    dut_open_session,
    loopback,
    resolve_chain,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyzerProfile",
    "BerMeasurement",
    "BerValue",
    "Bsc",
    "CampaignReport",
    "ConverterChain",
    "ConverterSpec",
    "DutProfile",
    "FixedMask",
    "FrequencyPoints",
    "GilbertElliott",
    "Ideal",
    "InterfaceKind",
    "InterfaceResult",
    "MeasurementConfig",
    "Outcome",
    "PrbsSpec",
    "REPORT_ORDER",
    "SyncState",
    "Verdict",
    "VerdictPolicy",
    "apply_verdict",
    "compute_frequencies",
    "count_errors",
    "default_catalog",
    "default_profile",
    "dut_open_session",
    "format_ber",
    "format_duration",
    "generate",
    "loopback",
    "measure",
    "parse_interface",
    "required_bits",
    "required_duration",
    "resolve_chain",
    "run_campaign",
    "run_interface_test",
    "synchronize",
    "__version__",
]
