"""Command-line front end: ``motgv <command> [flags]``.

Commands: ``denoise``, ``eval-tgv``, ``verify``, ``experiments`` and
``make-pmap``. Settings come from an optional ``key = value`` file given with
``--config``; command-line flags override it.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable or malformed input, mismatched dimensions, resource limits),
3 numeric failure, 4 failed verification.
"""

import argparse
import os
import sys
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from .errors import ConfigError, InputError, MotgvError, NumericError, ResourceError
from .fields import GridField, cell_centres
from .grid_ops import blur_operator
from .io import Report, load_config, load_image, make_pmap, save_image
from .phi import ExponentMap, PowerConstant, VariableExponent
from .prox import check_phi_grid
from .solver import SolverConfig, denoise_tgv, stability_experiment, write_trace
from .tgv import (
    MAX_DUAL_GRID,
    TgvOptions,
    TgvWeights,
    decomposition_experiment,
    strip_exponent,
    tgv2_dual,
    tgv2_primal,
    tgv_scaling_check,
)
from .verify import DEFAULT_SUITES, SUITES, run_suites

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4

COMMANDS = ("denoise", "eval-tgv", "verify", "experiments", "make-pmap")
EXPERIMENTS = ("decomposition", "stability", "scaling")


class UsageError(MotgvError):
    pass


@dataclass
class RunConfig:
    """Resolved settings of one invocation (config file merged with flags)."""

    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    pmap: str = "edge"
    alpha1: float = 1.0
    alpha2: float = 1.0
    max_iters: int = 5000
    tol: float = 1e-6
    eval_every: int = 10
    seed: int = 0
    report: Optional[str] = None
    operator: str = "identity"
    k: float = 10.0
    sigma: float = 1.0
    experiments: str = ",".join(EXPERIMENTS)
    levels: int = 6
    suites: str = ",".join(str(s) for s in DEFAULT_SUITES)

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "tol", "sigma"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.k < 0:
            raise ConfigError("k must be non-negative")
        if self.max_iters < 1 or self.eval_every < 1:
            raise ConfigError("max_iters and eval_every must be positive")
        unknown = set(self.experiment_list) - set(EXPERIMENTS)
        if unknown:
            raise ConfigError(f"unknown experiment(s): {', '.join(sorted(unknown))}")
        bad = [s for s in self.suite_list if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s): {bad}")
        if self.input is not None and not os.path.exists(self.input):
            raise UsageError(f"input path does not exist: {self.input}")
        if not (self.pmap in ("edge",) or self.pmap.startswith("const:") or os.path.exists(self.pmap)):
            raise UsageError(f"p-map must be 'edge', 'const:P' or an existing CSV path, got {self.pmap!r}")

    @property
    def weights(self):
        return TgvWeights(self.alpha1, self.alpha2)

    @property
    def experiment_list(self):
        return [e.strip() for e in self.experiments.split(",") if e.strip()]

    @property
    def suite_list(self):
        try:
            return [int(s) for s in self.suites.split(",") if s.strip()]
        except ValueError as exc:
            raise ConfigError(f"suites must be a comma-separated list of integers, got {self.suites!r}") from exc

    def as_strings(self):
        return {k: str(v) for k, v in asdict(self).items()}

    @classmethod
    def from_sources(cls, command, file_values, overrides):
        known = {f.name: f.type for f in fields(cls)}
        merged = {}
        for source in (file_values, overrides):
            for key, value in source.items():
                if value is None:
                    continue
                if key not in known or key == "command":
                    raise ConfigError(f"unknown configuration key {key!r}")
                merged[key] = value
        converted = {}
        for key, value in merged.items():
            default = getattr(cls, key, None)
            try:
                if isinstance(default, bool):
                    converted[key] = str(value).lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    converted[key] = int(value)
                elif isinstance(default, float):
                    converted[key] = float(value)
                else:
                    converted[key] = str(value)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {value!r}") from exc
        return cls(command=command, **converted)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="motgv", description="Variable-growth total generalised variation tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "denoise": "denoise a PGM image",
        "eval-tgv": "evaluate TGV of an image (primal, dual and gap)",
        "verify": "run the property suites",
        "experiments": "run decomposition / stability / scaling sweeps",
        "make-pmap": "write an edge-adaptive exponent map as CSV",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--input", metavar="PATH")
        p.add_argument("--output", metavar="PATH")
        p.add_argument("--alpha1", type=float, metavar="R")
        p.add_argument("--alpha2", type=float, metavar="R")
        p.add_argument("--pmap", metavar="PATH|edge|const:P")
        p.add_argument("--seed", type=int, metavar="N")
        p.add_argument("--report", metavar="PATH")
        p.add_argument("--max-iters", dest="max_iters", type=int, metavar="N")
        p.add_argument("--tol", type=float, metavar="R")
        if name == "denoise":
            p.add_argument("--operator", metavar="identity|blur:SIGMA")
        if name in ("denoise", "make-pmap"):
            p.add_argument("--k", type=float, metavar="R", help="edge sensitivity of the adaptive p-map")
            p.add_argument("--sigma", type=float, metavar="R", help="pre-smoothing width in pixels")
        if name == "experiments":
            p.add_argument("--experiments", metavar="LIST", help="comma-separated subset of " + ",".join(EXPERIMENTS))
            p.add_argument("--levels", type=int, metavar="N")
        if name == "verify":
            p.add_argument("--suites", metavar="LIST", help="comma-separated suite numbers (1-9)")
    return parser


def _thread_cap():
    raw = os.environ.get("MOTGV_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        value = 0
    if value < 1:
        raise ConfigError(f"MOTGV_THREADS must be a positive integer, got {raw!r}")
    return value


def resolve_config(args):
    file_values = load_config(args.config) if args.config else {}
    skip = {"command", "config"}
    overrides = {k: v for k, v in vars(args).items() if k not in skip}
    return RunConfig.from_sources(args.command, file_values, overrides)


def _require_input(cfg):
    if cfg.input is None:
        raise UsageError(f"{cfg.command} needs --input")
    return load_image(cfg.input)


def _exponent_map(cfg, image):
    if cfg.pmap == "edge":
        return make_pmap(image, k=cfg.k, sigma=cfg.sigma)
    if cfg.pmap.startswith("const:"):
        try:
            p = float(cfg.pmap[len("const:") :])
        except ValueError as exc:
            raise ConfigError(f"invalid constant exponent in {cfg.pmap!r}") from exc
        return ExponentMap.constant(image.shape, p)
    return ExponentMap.from_csv(cfg.pmap)


def _phi_for(cfg, image):
    phi = VariableExponent(_exponent_map(cfg, image))
    check_phi_grid(phi, image.shape)
    return phi


def _operator(cfg, shape):
    if cfg.operator == "identity":
        return None
    if cfg.operator.startswith("blur:"):
        try:
            sigma = float(cfg.operator[len("blur:") :])
        except ValueError as exc:
            raise ConfigError(f"invalid blur width in {cfg.operator!r}") from exc
        return blur_operator(shape, sigma)
    raise ConfigError(f"operator must be 'identity' or 'blur:SIGMA', got {cfg.operator!r}")


def _finish_report(cfg, report, out):
    text = report.to_text()
    if cfg.report:
        report.write(cfg.report)
    out.write(text)


def cmd_denoise(cfg, out=None):
    out = out or sys.stdout
    image = _require_input(cfg)
    if cfg.output is None:
        raise UsageError("denoise needs --output")
    phi = _phi_for(cfg, image)
    K = _operator(cfg, image.shape)
    solver_cfg = SolverConfig(max_iters=cfg.max_iters, tol_gap=cfg.tol, eval_every=cfg.eval_every, seed=cfg.seed)
    result = denoise_tgv(image, K, phi, cfg.weights, solver_cfg)
    save_image(cfg.output, result.u_star)
    write_trace(cfg.output + ".energy.txt", result.energy_trace, result.trace_iterations)
    write_trace(cfg.output + ".gap.txt", result.gap_trace, result.trace_iterations)
    report = Report(cfg.as_strings(), cfg.seed)
    report.add("objective", float(result.objective))
    report.add("final_gap", float(result.gap_trace[-1]) if result.gap_trace else float("nan"))
    report.add("iterations", result.iters_used)
    report.add("converged", result.converged)
    _finish_report(cfg, report, out)
    return EXIT_OK


def cmd_eval_tgv(cfg, out=None):
    out = out or sys.stdout
    image = _require_input(cfg)
    phi = _phi_for(cfg, image)
    opts = TgvOptions(max_iters=cfg.max_iters, tol=cfg.tol)
    primal = tgv2_primal(phi, cfg.weights, image, opts)
    report = Report(cfg.as_strings(), cfg.seed)
    report.add("primal", float(primal.value))
    if max(image.shape) <= MAX_DUAL_GRID:
        dual = tgv2_dual(phi, cfg.weights, image, opts)
        report.add("dual", float(dual))
        report.add("gap", float(primal.value - dual))
    else:
        report.add("dual", "skipped (grid larger than %d)" % MAX_DUAL_GRID)
        report.add("primal_gap_bound", float(primal.gap))
    _finish_report(cfg, report, out)
    return EXIT_OK


def cmd_verify(cfg, out=None):
    out = out or sys.stdout
    results = run_suites(cfg.suite_list, seed=cfg.seed, stream=out)
    report = Report(cfg.as_strings(), cfg.seed)
    for res in results:
        report.add(f"suite_{res.number}", "pass" if res.passed else "fail")
    if cfg.report:
        report.write(cfg.report)
    failed = [r.number for r in results if not r.passed]
    if failed:
        print(f"verification failed: suites {failed}", file=out)
        return EXIT_VERIFY
    print(f"all {len(results)} suites passed", file=out)
    return EXIT_OK


def _stability_data(cfg):
    if cfg.input is not None:
        image = load_image(cfg.input)
        return image, _phi_for(cfg, image)
    n = 8
    h = 1.0 / n
    x1, x2 = cell_centres((n, n), h)
    f = GridField(np.where(x1 > 0.5, 1.0, 0.0) + 0.5 * x2, h)
    return f, VariableExponent(ExponentMap(np.where(np.abs(x1 - 0.5) < 0.2, 1.0, 2.0)))


def cmd_experiments(cfg, out=None):
    out = out or sys.stdout
    outdir = cfg.output or "."
    os.makedirs(outdir, exist_ok=True)
    report = Report(cfg.as_strings(), cfg.seed)
    chosen = cfg.experiment_list
    if "decomposition" in chosen:
        dec = decomposition_experiment(strip_exponent, 1.0, cfg.levels)
        dec.to_csv(os.path.join(outdir, "decomposition.csv"))
        _write_text(os.path.join(outdir, "decomposition.txt"), dec.to_text())
        report.add("decomposition_singular_final", float(dec.singular_estimates[-1]))
    if "stability" in chosen:
        f, phi = _stability_data(cfg)
        if max(f.shape) > MAX_DUAL_GRID:
            raise ResourceError(f"stability sweep limited to {MAX_DUAL_GRID}x{MAX_DUAL_GRID} images")
        solver_cfg = SolverConfig(max_iters=max(cfg.max_iters, 20000), tol_gap=min(cfg.tol, 1e-9))
        stab = stability_experiment(f, [0.2, 0.1, 0.05, 0.025, 0.0], phi, TgvWeights(0.05, 0.05), solver_cfg, cfg.seed)
        stab.to_csv(os.path.join(outdir, "stability.csv"))
        _write_text(os.path.join(outdir, "stability.txt"), stab.to_text())
        report.add("stability_monotone", stab.passed)
    if "scaling" in chosen:
        rng = np.random.default_rng(cfg.seed)
        u = GridField(rng.standard_normal((8, 8)))
        rows = ["p,zoom,zoomed_value,reference_value,ratio,expected_ratio,relative_error"]
        for p in (1.0, 1.5, 2.0):
            rep = tgv_scaling_check(PowerConstant(p), cfg.weights, u, 2)
            rows.append(
                f"{p!r},{rep.zoom},{rep.zoomed_value!r},{rep.reference_value!r},"
                f"{rep.ratio!r},{rep.expected_ratio!r},{rep.relative_error!r}"
            )
            report.add(f"scaling_rel_err_p{p:g}", float(rep.relative_error))
        _write_text(os.path.join(outdir, "scaling.csv"), "\n".join(rows) + "\n")
    _finish_report(cfg, report, out)
    return EXIT_OK


def cmd_make_pmap(cfg, out=None):
    out = out or sys.stdout
    image = _require_input(cfg)
    if cfg.output is None:
        raise UsageError("make-pmap needs --output")
    pmap = make_pmap(image, k=cfg.k, sigma=cfg.sigma)
    pmap.to_csv(cfg.output)
    report = Report(cfg.as_strings(), cfg.seed)
    report.add("p_min", float(pmap.values.min()))
    report.add("p_max", float(pmap.values.max()))
    _finish_report(cfg, report, out)
    return EXIT_OK


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


HANDLERS = {
    "denoise": cmd_denoise,
    "eval-tgv": cmd_eval_tgv,
    "verify": cmd_verify,
    "experiments": cmd_experiments,
    "make-pmap": cmd_make_pmap,
}


def exit_code_for(exc):
    """Map a library exception to the process exit code."""
    if isinstance(exc, (UsageError, ConfigError, FileNotFoundError)):
        return EXIT_USAGE
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (InputError, MotgvError, ResourceError, OSError, NotImplementedError)):
        return EXIT_DATA
    raise exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _thread_cap()
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = exit_code_for(exc)
        print(f"motgv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
