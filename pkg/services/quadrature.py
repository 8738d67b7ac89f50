import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Dict, Any, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad, IntegrationWarning
from scipy.optimize import minimize_scalar

from config import Config
from utils.errors import ConvergenceError, DomainError
from utils.logger import get_logger

logger = get_logger(__name__)

# uniform samples used to locate peaks the adaptive rule missed
PEAK_SCAN_POINTS = 4097
MAX_PEAKS = 16


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and budget for the adaptive engine"""
    rel_tol: float = Config.REL_TOL
    abs_tol: float = Config.ABS_TOL
    max_subdivisions: int = Config.MAX_SUBDIVISIONS
    tail_cut: float = Config.TAIL_CUT

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}", field='rel_tol')
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be > 0, got {self.abs_tol}", field='abs_tol')
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 10:
            raise DomainError(f"max_subdivisions must be an integer >= 10, got {self.max_subdivisions}",
                              field='max_subdivisions')
        if not self.tail_cut > 0:
            raise DomainError(f"tail_cut must be > 0, got {self.tail_cut}", field='tail_cut')

    @staticmethod
    def from_cfg(cfg: Dict[str, Any]) -> "QuadSpec":
        defaults = QuadSpec()
        return QuadSpec(
            rel_tol=float(cfg.get('rel_tol', defaults.rel_tol)),
            abs_tol=float(cfg.get('abs_tol', defaults.abs_tol)),
            max_subdivisions=int(cfg.get('max_subdivisions', defaults.max_subdivisions)),
            tail_cut=float(cfg.get('tail_cut', defaults.tail_cut)),
        )

    def tightened(self, factor: float = 10.0) -> "QuadSpec":
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)

    def with_tail_cut(self, tail_cut: float) -> "QuadSpec":
        return replace(self, tail_cut=tail_cut)


DEFAULT_QUAD = QuadSpec()


class QuadResult(NamedTuple):
    value: float
    error_estimate: float


def _quad_call(f: Callable, a: float, b: float, q: QuadSpec, **kwargs) -> Tuple[float, float, str]:
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', IntegrationWarning)
        out = quad(f, a, b, epsabs=q.abs_tol, epsrel=q.rel_tol, limit=int(q.max_subdivisions),
                   full_output=1, **kwargs)
    value, error = float(out[0]), float(out[1])
    message = str(out[3]).strip() if len(out) > 3 else ''

    if not math.isfinite(value):
        raise ConvergenceError(f"Non-finite integral on [{a}, {b}]", best_estimate=value, error_estimate=error)
    if 'input is invalid' in message.lower():
        raise ConvergenceError(message, best_estimate=value, error_estimate=error)
    return value, error, message


def _tolerance(value: float, q: QuadSpec) -> float:
    return max(q.abs_tol, q.rel_tol * abs(value))


def _acceptable(value: float, error: float, message: str, q: QuadSpec) -> bool:
    return not message or error <= _tolerance(value, q)


def _accept(value: float, error: float, message: str, a: float, b: float, q: QuadSpec) -> QuadResult:
    """A flagged result stands only if its error estimate still meets the tolerance"""
    if message and error > _tolerance(value, q):
        logger.error(f"Quadrature on [{a}, {b}] failed: {message} "
                     f"(best estimate {value!r} +/- {error:.3g})")
        raise ConvergenceError(message, best_estimate=value, error_estimate=error)
    if message:
        logger.debug(f"Quadrature on [{a}, {b}] reported: {message} (error {error:.3g} within tolerance)")
    return QuadResult(value, error)


def _interior_points(points: Optional[Iterable[float]], a: float, b: float) -> list:
    if points is None:
        return []
    return sorted({float(p) for p in points if a < p < b})


def _safe_abs(f: Callable, x: float) -> float:
    try:
        v = abs(float(f(x)))
    except (ArithmeticError, ValueError):
        return float('nan')
    return v if math.isfinite(v) else float('nan')


def _locate_peaks(f: Callable, a: float, b: float) -> List[float]:
    """Local maxima of |f| on a uniform scan, each refined by a bounded scalar search"""
    xs = np.linspace(a, b, PEAK_SCAN_POINTS)
    vs = np.array([_safe_abs(f, x) for x in xs])
    filled = np.where(np.isfinite(vs), vs, -np.inf)

    candidates = []
    for i in range(len(xs)):
        left = filled[i - 1] if i > 0 else -np.inf
        right = filled[i + 1] if i + 1 < len(xs) else -np.inf
        if filled[i] > left and filled[i] >= right and filled[i] > 0:
            candidates.append(i)
    candidates = sorted(candidates, key=lambda i: -filled[i])[:MAX_PEAKS]

    peaks = []
    for i in candidates:
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        found = minimize_scalar(lambda x: -float(np.nan_to_num(_safe_abs(f, x))),
                                bounds=(lo, hi), method='bounded', options={'xatol': 1e-12 * (b - a)})
        peaks.append(float(found.x) if found.success else float(xs[i]))
    return sorted(peaks)


def _refined_edges(peaks: Sequence[float], interior: Sequence[float], a: float, b: float) -> List[float]:
    offsets = [(b - a) * 10.0 ** -j for j in range(1, 11)]
    edges = set(interior) | set(peaks)
    for p in peaks:
        for d in offsets:
            edges.update((p - d, p + d))
    return [a] + _interior_points(edges, a, b) + [b]


def _integrate_refined(f: Callable, a: float, b: float, q: QuadSpec,
                       interior: Sequence[float]) -> Optional[Tuple[float, float, str]]:
    """Piecewise integral split geometrically around located peaks; None when no peak is found"""
    peaks = _locate_peaks(f, a, b)
    if not peaks:
        return None
    edges = _refined_edges(peaks, interior, a, b)
    logger.info(f"Retrying [{a}, {b}] in {len(edges) - 1} pieces around peaks {[f'{p:.6g}' for p in peaks]}")
    value, error, messages = 0.0, 0.0, []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, msg = _quad_call(f, lo, hi, q)
        value += v
        error += e
        if msg:
            messages.append(msg)
    message = messages[0] if messages else ''
    if not message and error > _tolerance(value, q):
        message = f"piecewise error estimate {error:.3g} above tolerance"
    return value, error, message


def integrate(f: Callable[[float], float], a: float, b: float, q: QuadSpec = DEFAULT_QUAD,
              points: Optional[Sequence[float]] = None) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of f over [a, b] with optional breakpoints

    A flagged first pass is retried piecewise around the peaks of |f|; a result whose error
    estimate still misses max(abs_tol, rel_tol |value|) raises ConvergenceError.
    """
    if not (a < b):
        raise DomainError(f"Integration requires a < b, got [{a}, {b}]")
    interior = _interior_points(points, a, b)
    kwargs = {'points': interior} if interior else {}
    first = _quad_call(f, a, b, q, **kwargs)
    outcome = first
    if first[2]:
        refined = _integrate_refined(f, a, b, q, interior)
        if refined is not None and (_acceptable(*refined, q) or not _acceptable(*first, q)):
            outcome = refined
    result = _accept(*outcome, a, b, q)
    logger.debug(f"integrate [{a}, {b}] -> {result.value!r} (err {result.error_estimate:.3g})")
    return result


def integrate_semi_infinite(f: Callable[[float], float], a: float, q: QuadSpec = DEFAULT_QUAD,
                            points: Optional[Sequence[float]] = None,
                            tail: Optional[Callable[[float], float]] = None) -> QuadResult:
    """Integral over [a, tail_cut] plus an analytic tail beyond the cut when one is supplied"""
    if not a < q.tail_cut:
        raise DomainError(f"Lower limit {a} must lie below tail_cut {q.tail_cut}")
    result = integrate(f, a, q.tail_cut, q, points=points)
    if tail is None:
        return result
    tail_value = float(tail(q.tail_cut))
    logger.debug(f"Tail beyond {q.tail_cut}: {tail_value!r}")
    return QuadResult(result.value + tail_value, result.error_estimate)


def _oscillatory_piece(f: Callable, lo: float, hi: float, q: QuadSpec, kind: str, frequency: float,
                       depth: int = 4) -> Tuple[float, float, str]:
    """Weighted rule on [lo, hi]; a flagged piece is halved until it passes or depth runs out"""
    value, error, message = _quad_call(f, lo, hi, q, weight=kind, wvar=frequency)
    if _acceptable(value, error, message, q) or depth == 0:
        return value, error, message
    mid = 0.5 * (lo + hi)
    left = _oscillatory_piece(f, lo, mid, q, kind, frequency, depth - 1)
    right = _oscillatory_piece(f, mid, hi, q, kind, frequency, depth - 1)
    return left[0] + right[0], left[1] + right[1], left[2] or right[2]


def integrate_oscillatory(f: Callable[[float], float], a: float, b: float, frequency: float,
                          kind: str = 'cos', q: QuadSpec = DEFAULT_QUAD,
                          points: Optional[Sequence[float]] = None) -> QuadResult:
    """Integral of f(w) cos(frequency w) or f(w) sin(frequency w) using the engine's oscillatory weight"""
    if kind not in ('cos', 'sin'):
        raise DomainError(f"kind must be 'cos' or 'sin', got {kind}")
    if not (a < b):
        raise DomainError(f"Integration requires a < b, got [{a}, {b}]")
    if frequency == 0:
        if kind == 'sin':
            return QuadResult(0.0, 0.0)
        return integrate(f, a, b, q, points=points)

    edges = [a] + _interior_points(points, a, b) + [b]
    value, error, messages = 0.0, 0.0, []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e, msg = _oscillatory_piece(f, lo, hi, q, kind, frequency)
        value += v
        error += e
        if msg and not _acceptable(v, e, msg, q):
            messages.append(msg)
    return _accept(value, error, messages[0] if messages else '', a, b, q)


def integrate_pv(f: Callable[[float], float], pole: float, a: float, b: float,
                 q: QuadSpec = DEFAULT_QUAD) -> float:
    """Principal value of the integral of f(w)/(w - pole) by subtracting f(pole)"""
    if not (a < pole < b):
        raise DomainError(f"Pole {pole} must lie strictly inside ({a}, {b})", field='pole')

    f_pole = float(f(pole))
    scale = max(abs(pole), b - a, 1.0)
    step = 1e-5 * min(scale, pole - a, b - pole)
    slope = (float(f(pole + step)) - float(f(pole - step))) / (2 * step)
    near = 1e-6 * min(scale, pole - a, b - pole)

    def regularized(w):
        d = w - pole
        if abs(d) < near:
            return slope
        return (float(f(w)) - f_pole) / d

    smooth = integrate(regularized, a, b, q, points=[pole]).value
    return smooth + f_pole * math.log((b - pole) / (pole - a))


@dataclass(frozen=True)
class NodeSet:
    """Fixed composite Gauss-Legendre rule"""
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def gauss_legendre_nodes(a: float, b: float, breakpoints: Sequence[float] = (), panels: int = 64,
                         order: int = 32) -> NodeSet:
    """Composite rule with `panels` equal panels between consecutive breakpoints"""
    if not (a < b):
        raise DomainError(f"Node set requires a < b, got [{a}, {b}]")
    x, w = leggauss(order)
    edges = [a] + _interior_points(breakpoints, a, b) + [b]
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cuts = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(cuts)
        mid = 0.5 * (cuts[:-1] + cuts[1:])
        nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    return NodeSet(nodes=np.concatenate(nodes), weights=np.concatenate(weights))


def lorentzian_tail_bound(gamma: float, tail_cut: float) -> float:
    """Upper bound on the weight of a unit Lorentzian beyond tail_cut"""
    return gamma / (math.pi * tail_cut)
