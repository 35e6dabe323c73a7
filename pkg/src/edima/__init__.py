"""Early detection of scanning IoT malware from gateway traffic captures.

Pipeline: parse pcap captures, slice them into fixed windows per gateway,
keep only SYN probes aimed at the ports a malware family infects through,
summarise each window as a 4-feature vector, and classify those vectors
with small self-contained models (Gaussian naive Bayes, k-NN, random
forest). A feature store, a model registry with promote-on-improvement,
and a policy engine for acting on verdicts round out the toolkit.

Heavy loops run through ``edima.kernels``, which picks a numba backend
when available and falls back to pure numpy (override with the
``EDIMA_BACKEND`` environment variable: ``auto``, ``numba`` or ``numpy``).
"""

from .errors import EdimaError
from .packets import PACKET_DTYPE, int_to_ip, ip_to_int, packet
from .pcap import parse_pcap, write_pcap
from .sessions import (
    DEFAULT_WINDOW_MICROS,
    MalwareCategory,
    TargetPortList,
    TrafficSession,
    filter_session,
    slice_sessions,
    subsample,
)
from .features import FeatureVector, Label, extract_features

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_WINDOW_MICROS",
    "EdimaError",
    "FeatureVector",
    "Label",
    "MalwareCategory",
    "PACKET_DTYPE",
    "TargetPortList",
    "TrafficSession",
    "extract_features",
    "filter_session",
    "int_to_ip",
    "ip_to_int",
    "packet",
    "parse_pcap",
    "slice_sessions",
    "subsample",
    "write_pcap",
    "__version__",
]
