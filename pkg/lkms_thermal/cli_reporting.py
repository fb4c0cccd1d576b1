"""
Command-line surface: evaluate W on grids, run the residual suites, classify
beta fields and sample profiles along worldlines.

Input is one JSON document; output is CSV or JSON written to --out, the
config's output_path, or stdout. Logging goes to stderr only, so identical
config and seed always give byte-identical output.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .beta_classifier import (
    Verdict,
    Worldline,
    classify_affine,
    maximal_region,
    profile_along_worldline,
    representative_point,
)
from .constraint_checks import (
    ResidualReport,
    beta_jacobian,
    constraint1_residual,
    constraint2_residual,
    default_shell_samples,
    kms_detailed_balance,
    w_pde_residuals,
)
from .exceptions import BetaFieldError, ConfigError, DomainError, LKMSException, QuadratureError
from .minkowski import ConeRegion, FourVector
from .shell_tensor import antisymmetric_from_components
from .thermal_wightman import AffineBetaField, QuadratureConfig, StateSpec, evaluate_regular_part

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SUITE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3

THREADS_ENV = "LKMS_THREADS"
DEFAULT_PDE_SEPARATION = (0.2, 0.1, 0.0, 0.0)

EVAL_HEADER = ["q0", "q1", "q2", "q3", "z0", "z1", "z2", "z3", "W", "err_estimate"]
PROFILE_HEADER = ["tau", "T", "W"]


@dataclass(frozen=True)
class GridSpec:
    q_points: List[FourVector] = field(default_factory=list)
    z_points: List[FourVector] = field(default_factory=list)

    def pairs(self) -> List[tuple]:
        return [(q, z) for q in self.q_points for z in self.z_points]


@dataclass(frozen=True)
class WorldlineSpec:
    worldline: Worldline
    taus: List[float]


@dataclass(frozen=True)
class CheckSettings:
    h: float = 1e-2
    pde_tol: float = 1e-4
    constraint_tol: float = 1e-10
    balance_tol: float = 1e-13
    shell_directions: int = 20


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI run needs, parsed from a single JSON document"""
    mass: float
    beta: AffineBetaField
    grid: GridSpec = field(default_factory=GridSpec)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    seed: int = 0
    output_path: Optional[str] = None
    worldline: Optional[WorldlineSpec] = None
    checks: CheckSettings = field(default_factory=CheckSettings)
    domain_samples: List[FourVector] = field(default_factory=list)

    def state(self, domain: Optional[ConeRegion] = None) -> StateSpec:
        return StateSpec(self.mass, self.beta, domain or ConeRegion.everywhere())

    def sample_points(self) -> List[FourVector]:
        """Points the field is judged on: explicit samples, else grid midpoints, else one interior point"""
        if self.domain_samples:
            return list(self.domain_samples)
        if self.grid.q_points:
            return list(self.grid.q_points)
        return [representative_point(self.beta)]


# --- parsing -----------------------------------------------------------------

def _reject_unknown(section: str, data: Dict[str, Any], allowed: Iterable[str]):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _as_dict(section: str, value: Any) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{section} must be a JSON object")
    return value


def _four_vector(section: str, value: Any) -> FourVector:
    try:
        return FourVector.from_array([float(v) for v in value])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}: expected 4 finite numbers, got {value!r} ({e})") from e


def _points(section: str, value: Any) -> List[FourVector]:
    if isinstance(value, dict):
        _reject_unknown(section, value, ("linspace",))
        spec = _as_dict(f"{section}.linspace", value.get("linspace"))
        _reject_unknown(f"{section}.linspace", spec, ("start", "stop", "num"))
        try:
            start = _four_vector(f"{section}.linspace.start", spec["start"]).as_array()
            stop = _four_vector(f"{section}.linspace.stop", spec["stop"]).as_array()
            num = int(spec["num"])
        except KeyError as e:
            raise ConfigError(f"{section}.linspace is missing {e}") from e
        if num < 0:
            raise ConfigError(f"{section}.linspace.num must be >= 0, got {num}")
        return [FourVector.from_array(row) for row in np.linspace(start, stop, num)]
    if not isinstance(value, list):
        raise ConfigError(f"{section} must be a list of 4-vectors or a linspace spec")
    return [_four_vector(f"{section}[{i}]", v) for i, v in enumerate(value)]


def _parse_beta(value: Any) -> AffineBetaField:
    spec = _as_dict("beta", value)
    _reject_unknown("beta", spec, ("affine", "constant"))
    if len(spec) != 1:
        raise ConfigError("beta must contain exactly one of 'affine' or 'constant'")
    if "constant" in spec:
        return AffineBetaField(beta_tilde=_four_vector("beta.constant", spec["constant"]))

    affine = _as_dict("beta.affine", spec["affine"])
    _reject_unknown("beta.affine", affine, ("c", "C", "beta_tilde"))
    components = affine.get("C", [0.0] * 6)
    if not isinstance(components, list) or len(components) != 6:
        raise ConfigError("beta.affine.C must list the 6 entries C01, C02, C03, C12, C13, C23")
    try:
        C = antisymmetric_from_components(*[float(v) for v in components])
        return AffineBetaField(
            c=float(affine.get("c", 0.0)),
            C=C,
            beta_tilde=_four_vector("beta.affine.beta_tilde", affine.get("beta_tilde", [0.0] * 4)),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid beta.affine: {e}") from e


def _parse_dataclass(section: str, cls, value: Any):
    data = _as_dict(section, value)
    _reject_unknown(section, data, cls.__dataclass_fields__)
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid {section}: {e}") from e


def _parse_worldline(value: Any) -> WorldlineSpec:
    data = _as_dict("worldline", value)
    _reject_unknown("worldline", data, ("origin", "direction", "taus"))
    try:
        taus = [float(t) for t in data.get("taus", [])]
        origin = _four_vector("worldline.origin", data.get("origin", [0.0] * 4))
        direction = _four_vector("worldline.direction", data.get("direction", [1.0, 0.0, 0.0, 0.0]))
        return WorldlineSpec(Worldline(origin, direction), taus)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid worldline: {e}") from e


def parse_config(data: Any) -> RunConfig:
    """Build a RunConfig from a decoded JSON document; unknown keys raise ConfigError"""
    data = _as_dict("config", data)
    _reject_unknown("config", data, ("mass", "beta", "grid", "quadrature", "seed", "output_path",
                                     "worldline", "checks", "domain_samples"))
    if "mass" not in data or "beta" not in data:
        raise ConfigError("config needs both 'mass' and 'beta'")
    try:
        mass = float(data["mass"])
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid mass or seed: {e}") from e
    if not mass >= 0:
        raise ConfigError(f"mass must be non-negative, got {mass}")

    grid_data = _as_dict("grid", data.get("grid", {}))
    _reject_unknown("grid", grid_data, ("q_points", "z_points"))
    grid = GridSpec(_points("grid.q_points", grid_data.get("q_points", [])),
                    _points("grid.z_points", grid_data.get("z_points", [])))

    output_path = data.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path must be a string")

    return RunConfig(
        mass=mass,
        beta=_parse_beta(data["beta"]),
        grid=grid,
        quadrature=_parse_dataclass("quadrature", QuadratureConfig, data.get("quadrature", {})),
        seed=seed,
        output_path=output_path,
        worldline=_parse_worldline(data["worldline"]) if "worldline" in data else None,
        checks=_parse_dataclass("checks", CheckSettings, data.get("checks", {})),
        domain_samples=_points("domain_samples", data.get("domain_samples", [])),
    )


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    return parse_config(data)


# --- output ------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _open_output(path: Optional[str]):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _write_json(document: dict, path: Optional[str]):
    text = json.dumps(document, indent=2, ensure_ascii=False) + "\n"
    stream, owned = _open_output(path)
    try:
        stream.write(text)
    finally:
        if owned:
            stream.close()


def _pool_map(fn, items: Sequence, threads: int) -> Iterable:
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        yield from executor.map(fn, items)


# --- commands ----------------------------------------------------------------

def cmd_eval(config: RunConfig, threads: int = 1) -> int:
    """Write W and its error estimate for every (q, z) pair of the grid as CSV"""
    state = config.state()
    for q in config.grid.q_points or config.sample_points():
        try:
            state.beta_at(q)
        except (BetaFieldError, DomainError) as e:
            raise ConfigError(f"invalid beta field: {e}") from e

    pairs = config.grid.pairs()

    def row(pair) -> List[str]:
        q, z = pair
        result = evaluate_regular_part(q, z, state, config.quadrature)
        return [_fmt(v) for v in q.as_list() + z.as_list()] + [_fmt(result.value), _fmt(result.error_estimate)]

    stream, owned = _open_output(config.output_path)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(EVAL_HEADER)
        for cells in _pool_map(row, pairs, threads):
            writer.writerow(cells)
    except QuadratureError:
        if owned:
            stream.close()
            owned = False
            Path(config.output_path).unlink(missing_ok=True)
        raise
    finally:
        if owned:
            stream.close()
    logger.info("evaluated %d grid rows", len(pairs))
    return EXIT_OK


def _merge(reports: List[ResidualReport]) -> ResidualReport:
    worst = max(reports, key=lambda r: r.max_abs_residual)
    return replace(worst, sample_count=sum(r.sample_count for r in reports))


def run_suites(config: RunConfig, threads: int = 1) -> List[ResidualReport]:
    """Detailed balance, both beta constraints and both W equations over the configured points"""
    state = config.state()
    settings = config.checks
    points = config.sample_points()
    samples = default_shell_samples(config.mass, config.seed, settings.shell_directions)
    try:
        for q in points:
            state.beta_at(q)
    except (BetaFieldError, DomainError) as e:
        raise ConfigError(f"invalid beta field: {e}") from e

    balance, c1, c2 = [], [], []
    for q in points:
        balance.append(kms_detailed_balance(q, state, samples, settings.balance_tol))
        J = beta_jacobian(config.beta, q)
        c1.append(constraint1_residual(J, config.mass, samples, settings.constraint_tol))
        c2.append(constraint2_residual(config.beta, q, config.mass, samples, tol=settings.constraint_tol))

    separations = config.grid.z_points or [FourVector(*DEFAULT_PDE_SEPARATION)]
    pairs = [(q, z) for q in points for z in separations]

    def residuals(pair):
        q, z = pair
        return pair, w_pde_residuals(state, q, z, settings.h, config.quadrature)

    mixed, box = [], []
    for (q, z), (r_mixed, r_box) in _pool_map(residuals, pairs, threads):
        witness = (q.as_list(), z.as_list())
        mixed.append(ResidualReport("pde_mixed", abs(r_mixed), 1.0, 1, witness, settings.pde_tol))
        box.append(ResidualReport("pde_box", abs(r_box), 1.0, 1, witness, settings.pde_tol))

    return [_merge(balance), _merge(c1), _merge(c2), _merge(mixed), _merge(box)]


def cmd_check(config: RunConfig, threads: int = 1) -> int:
    reports = run_suites(config, threads)
    overall = bool(all(r.passed for r in reports))
    _write_json({"suites": [r.to_dict() for r in reports], "overall_pass": overall}, config.output_path)
    for r in reports:
        logger.info("suite %s: residual %.3e (%s)", r.name, r.max_abs_residual, "pass" if r.passed else "FAIL")
    return EXIT_OK if overall else EXIT_SUITE_FAILURE


def classify_config(config: RunConfig) -> Verdict:
    return classify_affine(config.beta, config.mass, config.sample_points())


def cmd_classify(config: RunConfig, threads: int = 1) -> int:
    verdict = classify_config(config)
    logger.info("verdict %s", verdict.kind.value)
    _write_json(verdict.to_dict(), config.output_path)
    return EXIT_OK


def cmd_profile(config: RunConfig, threads: int = 1) -> int:
    """CSV of tau, T(q(tau)), W(q(tau), 0) along the configured worldline"""
    if config.worldline is None:
        raise ConfigError("profile needs a 'worldline' section")
    verdict = classify_config(config)
    if verdict.is_lkms:
        domain = maximal_region(verdict)
    else:
        logger.warning("field is not LKMS (%s); profiling without a region", verdict.reason)
        domain = ConeRegion.everywhere()
    state = config.state(domain)
    rows = profile_along_worldline(state, config.worldline.worldline, config.worldline.taus,
                                   config.quadrature, threads)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PROFILE_HEADER)
    for r in rows:
        writer.writerow([_fmt(r.tau), _fmt(r.temperature), _fmt(r.coincidence)])
    stream, owned = _open_output(config.output_path)
    try:
        stream.write(buffer.getvalue())
    finally:
        if owned:
            stream.close()
    return EXIT_OK


COMMANDS = {
    "eval": cmd_eval,
    "check": cmd_check,
    "classify": cmd_classify,
    "profile": cmd_profile,
}

EPILOG = """exit codes:
  0  success (check: every suite passed)
  1  check: at least one suite failed (report still written)
  2  configuration error (unreadable or invalid JSON, unknown keys, invalid beta)
  3  numeric failure (quadrature did not converge, profile left the region)
"""


def _resolve_threads(flag: Optional[int]) -> int:
    if flag is not None:
        threads = flag
    else:
        env = os.environ.get(THREADS_ENV)
        try:
            threads = int(env) if env else 1
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from e
    if threads < 1:
        raise ConfigError(f"thread count must be >= 1, got {threads}")
    return threads


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lkms-thermal",
        description="LKMS thermal two-point functions of the free Klein-Gordon field",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Command to run")
    parser.add_argument("--config", "-c", type=Path, required=True, help="JSON run configuration")
    parser.add_argument("--out", "-o", help="Output file (overrides output_path; default stdout)")
    parser.add_argument("--threads", type=int, default=None, help=f"Worker threads (fallback ${THREADS_ENV})")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Command line interface for the LKMS toolkit"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        threads = _resolve_threads(args.threads)
        config = load_config(args.config)
        if args.out is not None:
            config = replace(config, output_path=args.out)
        return COMMANDS[args.command](config, threads)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG_ERROR
    except (QuadratureError, DomainError, BetaFieldError) as e:
        logger.error("numeric failure: %s", e)
        return EXIT_NUMERIC_FAILURE
    except LKMSException as e:
        logger.error("%s", e)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
