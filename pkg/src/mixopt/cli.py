"""``mixopt`` command line: similarity, spectrum, solve, discover, sample, gamma.

Exit codes: 0 success, 2 input/validation error, 3 incomplete data,
4 solver failure. Settings resolve as flags > ``--config`` JSON file >
built-in defaults; ``MIXOPT_THREADS`` backs ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

from . import io as mio
from .core import PotentialParams
from .discovery import affinity_trajectory, gamma_experiment, greedy_select
from .errors import CoverageWarning, MixoptError
from .qp import build_potentials, kkt_residual, solve
from .sampler import allocate, plan_with_manifest
from .similarity import build_similarity, read_predictions
from .spectral import eigen_spectrum

DEFAULTS = {
    "metric": "pmi",
    "jsd_mode": "raw",
    "beta": 20.0,
    "lambda": 10.0,
    "shift": "auto",
    "epsilon_rel": 1e-8,
    "budget": 0,
    "seed": 0,
    "k": None,
    "order": None,
    "mode": "multinomial",
    "n": 10,
    "trials": 100,
    "bins": 20,
    "capacities": None,
    "in": None,
    "out": None,
    "threads": None,
}


class CliError(Exception):
    def __init__(self, message, code=2):
        super().__init__(message)
        self.code = code


def _sibling(out, suffix: str) -> Path:
    out = Path(out)
    return out.with_name(out.stem + suffix)


def _emit(cfg, text: str) -> None:
    if cfg["out"]:
        mio.write_text(cfg["out"], text)
    else:
        sys.stdout.write(text)


def _threads(cfg) -> int:
    if cfg["threads"] is not None:
        return max(1, int(cfg["threads"]))
    env = os.environ.get("MIXOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"MIXOPT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _need_input(cfg) -> str:
    if not cfg["in"]:
        raise CliError("--in is required")
    return cfg["in"]


def _potentials(cfg):
    s = mio.read_similarity(_need_input(cfg))
    params = PotentialParams(beta=cfg["beta"], lam=cfg["lambda"])
    return build_potentials(s, params, cfg["shift"], cfg["epsilon_rel"])


def cmd_similarity(cfg) -> int:
    store = read_predictions(_need_input(cfg))
    s = build_similarity(store, cfg["metric"], jsd_mode=cfg["jsd_mode"], threads=_threads(cfg))
    if cfg["out"] and str(cfg["out"]).lower().endswith(".csv"):
        _emit(cfg, mio.similarity_to_csv(s))
    else:
        _emit(cfg, mio.dumps(mio.similarity_to_dict(s)))
    return 0


def cmd_spectrum(cfg) -> int:
    s = mio.read_similarity(_need_input(cfg))
    report = eigen_spectrum(s.values)
    _emit(cfg, mio.dumps(mio.spectrum_to_dict(report, s.tasks)))
    if cfg["out"]:
        mio.write_text(_sibling(cfg["out"], ".csv"), mio.spectrum_to_csv(report))
    return 0


def cmd_solve(cfg) -> int:
    pot = _potentials(cfg)
    sol = solve(pot)
    doc = mio.solution_to_dict(sol, pot, kkt_residual(sol, pot))
    _emit(cfg, mio.dumps(doc))
    return 0


def cmd_discover(cfg) -> int:
    pot = _potentials(cfg)
    k = cfg["k"]
    if cfg["order"]:
        trace = affinity_trajectory(pot, cfg["order"], k)
    else:
        trace = greedy_select(pot, pot.n if k is None else int(k))
    if any(b < a - 1e-9 for a, b in zip(trace.f_values, trace.f_values[1:])):
        raise CliError("self-check failed: F values decrease along the trace", code=4)
    _emit(cfg, mio.dumps(mio.trace_to_dict(trace)))
    return 0


def cmd_sample(cfg) -> int:
    path = _need_input(cfg)
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc.msg})") from None
    sol = mio.solution_from_dict(doc)
    caps = None
    if cfg["capacities"]:
        table = mio.read_capacities(cfg["capacities"])
        missing = [t for t in sol.tasks if t not in table]
        if missing:
            raise CliError(f"capacities file lacks tasks: {missing}")
        caps = [table[t] for t in sol.tasks]
    plan = allocate(sol.p, int(cfg["budget"]), int(cfg["seed"]), caps, sol.tasks, cfg["mode"])
    if caps is not None:
        plan = plan_with_manifest(plan)
    _emit(cfg, mio.dumps(mio.plan_to_dict(plan)))
    if plan.manifest is not None:
        target = _sibling(cfg["out"], ".manifest.csv") if cfg["out"] else None
        if target is not None:
            mio.write_text(target, mio.manifest_to_csv(plan.manifest))
    return 0


def cmd_gamma(cfg) -> int:
    params = PotentialParams(beta=cfg["beta"], lam=cfg["lambda"])
    report = gamma_experiment(
        int(cfg["n"]), params, int(cfg["trials"]), int(cfg["seed"]), _threads(cfg)
    )
    if cfg["out"]:
        mio.write_text(cfg["out"], mio.dumps(mio.gamma_to_dict(report)))
        if report.gammas:
            mio.write_text(
                _sibling(cfg["out"], ".hist.csv"), mio.gamma_histogram_csv(report, cfg["bins"])
            )
    if report.gammas:
        print(f"min gamma = {report.min_gamma!r} over {len(report.gammas)} trials "
              f"({report.degenerate} degenerate); eigenvalue bound {report.theory_bound:.3e}")
    else:
        print(f"all {report.trials} trials degenerate")
    if report.violations():
        print(f"{report.violations()} trial(s) fall below the eigenvalue bound", file=sys.stderr)
        return 4
    return 0


COMMANDS = {
    "similarity": (cmd_similarity, "build a PMI/JSD similarity matrix from prediction records"),
    "spectrum": (cmd_spectrum, "eigenvalue spectrum of a similarity matrix"),
    "solve": (cmd_solve, "optimal task mixture for a similarity matrix"),
    "discover": (cmd_discover, "greedy task selection or affinity trajectory"),
    "sample": (cmd_sample, "instance counts (and manifest) from a mixture"),
    "gamma": (cmd_gamma, "empirical submodularity ratios on random instances"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON file of settings (flags take precedence)")
    common.add_argument("--in", dest="in", help="input file")
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--threads", type=int)
    common.add_argument("--seed", type=int)

    model = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    model.add_argument("--beta", type=float, help="unary strength (default 20)")
    model.add_argument("--lambda", dest="lambda", type=float, help="diversity penalty (default 10)")
    model.add_argument("--shift", choices=["auto", "off"])
    model.add_argument("--epsilon-rel", dest="epsilon_rel", type=float)

    parser = argparse.ArgumentParser(prog="mixopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = {}
    for name, (_, help_) in COMMANDS.items():
        parents = [common, model] if name in ("solve", "discover", "gamma") else [common]
        p[name] = sub.add_parser(name, parents=parents, help=help_, argument_default=argparse.SUPPRESS)
    p["similarity"].add_argument("--metric", choices=["pmi", "jsd"])
    p["similarity"].add_argument("--jsd-mode", dest="jsd_mode", choices=["raw", "complement"])
    p["discover"].add_argument("--k", type=int)
    p["discover"].add_argument("--order", choices=["asc", "desc"])
    p["sample"].add_argument("--budget", type=int)
    p["sample"].add_argument("--capacities", help="CSV of task_id,size")
    p["sample"].add_argument("--mode", choices=["multinomial", "expected"])
    p["gamma"].add_argument("--n", type=int)
    p["gamma"].add_argument("--trials", type=int)
    p["gamma"].add_argument("--bins", type=int)
    return parser


def resolve_config(ns: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    path = getattr(ns, "config", None)
    if path:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise CliError("config file must hold a JSON object")
        section = doc.pop(ns.command, {})
        for src in (doc, section):
            for key, value in src.items():
                key = key.replace("-", "_")
                if key not in cfg:
                    raise CliError(f"unknown config key {key!r}")
                cfg[key] = value
    cfg.update(flags)
    return cfg


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CoverageWarning)
        try:
            cfg = resolve_config(ns)
            code = COMMANDS[ns.command][0](cfg)
        except CliError as exc:
            print(f"mixopt {ns.command}: {exc}", file=sys.stderr)
            code = exc.code
        except MixoptError as exc:
            print(f"mixopt {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = exc.exit_code
        except ValueError as exc:
            print(f"mixopt {ns.command}: {exc}", file=sys.stderr)
            code = 2
        except OSError as exc:
            print(f"mixopt {ns.command}: {exc}", file=sys.stderr)
            code = 2
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
