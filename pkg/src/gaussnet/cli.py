"""Command-line front end: ``gaussnet {analyze,approximate,study,verify}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .assembler import approximate
from .atoms import BudgetRule, DEFAULT_MARGIN, DEFAULT_SIGMA, choose_h, truncated_approximant
from .budget import SmoothnessParams, allocate
from .errors import GaussnetError, InputError
from .harness import (
    grid_for_tree,
    make_synthetic_tree,
    operator_bound_sweep,
    rate_study,
)
from .kernel_core import eval_gaussian_sum
from .wavelets import DEFAULT_CONTACT, CoefficientTree, WaveletIndex, analyze, build_meyer, eval_wavelet

CONFIG_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "version": CONFIG_VERSION,
    "d": 1,
    "s": 1.0,
    "p": 2.0,
    "N": 1024,
    "N_list": [64, 128, 256, 512, 1024, 2048, 4096],
    "seed": 0,
    "sigma": DEFAULT_SIGMA,
    "n0": None,
    "margin": DEFAULT_MARGIN,
    "M": None,
    "contact": DEFAULT_CONTACT,
    "tree": None,
    "levels": None,
    "domain": None,
    "target": {"name": "gaussian-bump"},
    "analysis": {"tol": 1e-9, "pad_cubes": 8.0, "pad_cap": 1.0},
    "synthetic": {"levels": [-5, 0], "per_level": 2},
    "grid": {"per_cube": 16, "pad_cubes": 8.0},
    "verify": {
        "full": {"h": [0.37, 0.35, 0.3, 0.25, 0.2], "sigma": DEFAULT_SIGMA, "allow_aliasing": False,
                 "min_step_slope": 8.0, "floor": 1e-13},
        "truncated": {"h": [50**-0.5, 100**-0.5, 200**-0.5, 400**-0.5], "k": [2, 4, 6], "sigma": DEFAULT_SIGMA,
                      "allow_aliasing": False},
        "localized": {"h": [50**-0.5, 100**-0.5, 200**-0.5, 400**-0.5], "k": 4, "max_spread": 10.0,
                      "sigma": DEFAULT_SIGMA, "allow_aliasing": False},
        "atom_budget": {"N": [101, 401], "min_exponent": 2.0},
    },
}

TARGET_KEYS = {
    "gaussian-bump": {"center", "width"},
    "windowed-cusp": {"center", "width", "alpha"},
    "sinusoid-packet": {"center", "width", "freq"},
    "wavelet": {"j", "k", "e", "value"},
    "sample-grid": {"path"},
}


class UsageError(GaussnetError, ValueError):
    pass


def _merge(base: dict, override: dict, path: str) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise UsageError(f"unknown config key '{where}'")
        if isinstance(base[key], dict) and key != "target":
            if not isinstance(val, dict):
                raise UsageError(f"config field '{where}' must be an object")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.lower() in ("inf", "infinity"):
            return math.inf
        raise UsageError(f"config field 'p' must be a number >= 1 or \"inf\", got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise UsageError(f"config field 'p' must be a number >= 1 or \"inf\", got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    """Validated run configuration; see ``DEFAULTS`` for the schema."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        if raw.get("version") != CONFIG_VERSION:
            raise UsageError(f"config field 'version' must be {CONFIG_VERSION}, got {raw.get('version')!r}")
        cfg = cls(_merge(DEFAULTS, raw, ""))
        cfg.validate()
        return cfg

    def override(self, **kwargs) -> "RunConfig":
        data = copy.deepcopy(self.data)
        for key, val in kwargs.items():
            if val is not None:
                data[key] = val
        cfg = RunConfig(data)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.data[key]

    @property
    def p(self) -> float:
        return _parse_p(self.data["p"])

    def validate(self):
        g = self.data
        if g["d"] not in (1, 2, 3):
            raise UsageError(f"config field 'd' must be 1, 2 or 3, got {g['d']!r}")
        if not (isinstance(g["s"], (int, float)) and g["s"] > 0):
            raise UsageError(f"config field 's' must be positive, got {g['s']!r}")
        if not self.p >= 1:
            raise UsageError(f"config field 'p' must be >= 1, got {g['p']!r}")
        if not (isinstance(g["N"], int) and g["N"] >= 1):
            raise UsageError(f"config field 'N' must be a positive integer, got {g['N']!r}")
        ns = g["N_list"]
        if not (isinstance(ns, list) and all(isinstance(n, int) and n >= 1 for n in ns)):
            raise UsageError("config field 'N_list' must be a list of positive integers")
        if not isinstance(g["seed"], int):
            raise UsageError(f"config field 'seed' must be an integer, got {g['seed']!r}")
        if not (isinstance(g["sigma"], (int, float)) and g["sigma"] > 0):
            raise UsageError(f"config field 'sigma' must be positive, got {g['sigma']!r}")
        if g["n0"] is not None and not (isinstance(g["n0"], int) and g["n0"] >= 1):
            raise UsageError(f"config field 'n0' must be a positive integer or null, got {g['n0']!r}")
        if not (isinstance(g["margin"], (int, float)) and g["margin"] >= 1):
            raise UsageError(f"config field 'margin' must be >= 1, got {g['margin']!r}")
        if not (isinstance(g["contact"], int) and 1 <= g["contact"] <= 15):
            raise UsageError(f"config field 'contact' must be an integer in [1, 15], got {g['contact']!r}")
        if g["levels"] is not None and not (
            isinstance(g["levels"], list) and len(g["levels"]) == 2 and g["levels"][0] <= g["levels"][1]
        ):
            raise UsageError("config field 'levels' must be [j_min, j_max] with j_min <= j_max")
        if g["domain"] is not None and not (
            isinstance(g["domain"], list) and len(g["domain"]) == g["d"]
            and all(isinstance(b, list) and len(b) == 2 and b[0] < b[1] for b in g["domain"])
        ):
            raise UsageError("config field 'domain' must list one [lo, hi] interval per axis")
        target = g["target"]
        if not isinstance(target, dict) or "name" not in target:
            raise UsageError("config field 'target' must be an object with a 'name'")
        if target["name"] not in TARGET_KEYS:
            raise UsageError(f"config field 'target.name': unknown target {target['name']!r}")
        extra = set(target) - {"name"} - TARGET_KEYS[target["name"]]
        if extra:
            raise UsageError(f"unknown config key 'target.{sorted(extra)[0]}'")
        syn = g["synthetic"]
        if not (isinstance(syn["per_level"], int) and syn["per_level"] >= 1):
            raise UsageError("config field 'synthetic.per_level' must be a positive integer")

    def params(self) -> SmoothnessParams:
        try:
            return SmoothnessParams(float(self.data["s"]), self.p, int(self.data["d"]))
        except InputError as exc:
            raise UsageError(f"config fields 's'/'p'/'d': {exc}") from exc

    def rule(self) -> BudgetRule:
        g = self.data
        return BudgetRule(sigma=float(g["sigma"]), n0=g["n0"], margin=float(g["margin"]))

    def wavelets(self, d: int):
        return build_meyer(d, self.data["M"], contact=self.data["contact"])

    def levels(self) -> tuple[int, int]:
        if self.data["levels"] is not None:
            return tuple(int(v) for v in self.data["levels"])
        return (-8, 4) if self.data["d"] == 1 else (-4, 4)

    def domain(self) -> list[tuple[float, float]]:
        if self.data["domain"] is not None:
            return [tuple(float(v) for v in b) for b in self.data["domain"]]
        return [(-4.0, 4.0)] * self.data["d"]


# -- IO helpers ---------------------------------------------------------------


def read_json(path: str | os.PathLike) -> Any:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    text = raw.decode("utf-8", errors="replace")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise UsageError(f"malformed JSON in {path} at byte offset {offset}: {exc.msg}") from exc


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


# -- targets ------------------------------------------------------------------


def _center(desc: dict, d: int) -> np.ndarray:
    c = desc.get("center", [0.0] * d)
    c = [c] * d if isinstance(c, (int, float)) else c
    if len(c) != d:
        raise UsageError("config field 'target.center' has the wrong dimension")
    return np.asarray(c, dtype=float)


def build_target(desc: dict, d: int, w=None) -> Callable[[np.ndarray], np.ndarray]:
    name = desc["name"]
    if name == "sample-grid":
        return _sample_grid_target(desc.get("path"), d)
    if name == "wavelet":
        idx = WaveletIndex(int(desc.get("j", 0)), tuple(desc.get("k", [0] * d)),
                           tuple(desc.get("e", [1] + [0] * (d - 1))))
        value = float(desc.get("value", 1.0))
        w = w or build_meyer(d)
        return lambda x: value * eval_wavelet(w, idx, x)
    c = _center(desc, d)
    width = float(desc.get("width", 1.0))
    if not width > 0:
        raise UsageError("config field 'target.width' must be positive")

    def envelope(x):
        return np.exp(-np.sum((x - c) ** 2, axis=1) / width**2)

    if name == "gaussian-bump":
        return envelope
    if name == "windowed-cusp":
        alpha = float(desc.get("alpha", 0.5))
        return lambda x: np.linalg.norm(x - c, axis=1) ** alpha * envelope(x)
    freq = float(desc.get("freq", 3.0))
    return lambda x: np.cos(freq * (x[:, 0] - c[0])) * envelope(x)


def _sample_grid_target(path, d: int):
    if not path:
        raise UsageError("config field 'target.path' is required for sample-grid targets")
    doc = read_json(path)
    try:
        axes = [np.asarray(a, dtype=float) for a in doc["axes"]]
        values = np.asarray(doc["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"sample grid {path}: {exc}") from exc
    if len(axes) != d or values.shape != tuple(len(a) for a in axes):
        raise UsageError(f"sample grid {path}: axes and values do not match d={d}")
    method = "cubic" if all(len(a) >= 4 for a in axes) else "linear"
    interp = RegularGridInterpolator(axes, values, method=method, bounds_error=False, fill_value=0.0)
    return lambda x: interp(x)


def load_tree(cfg: RunConfig, tree_path: str | None) -> CoefficientTree:
    path = tree_path or cfg["tree"]
    if path:
        try:
            tree = CoefficientTree.from_dict(read_json(path))
        except InputError as exc:
            raise UsageError(f"{path}: {exc}") from exc
        if tree.d != cfg["d"]:
            raise UsageError(f"tree {path} has d={tree.d}, config has d={cfg['d']}")
        return tree
    syn = cfg["synthetic"]
    return make_synthetic_tree(cfg["d"], float(cfg["s"]), tuple(syn["levels"]), syn["per_level"], cfg["seed"])


# -- verbs --------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig, out: Path) -> int:
    d = cfg["d"]
    w = cfg.wavelets(d)
    f = build_target(cfg["target"], d, w)
    an = cfg["analysis"]
    start = time.perf_counter()
    tree, report = analyze(f, w, cfg.levels(), cfg.domain(), pad_cubes=float(an["pad_cubes"]),
                           pad_cap=float(an["pad_cap"]), tol=float(an["tol"]))
    _log(f"analyze: {len(tree)} coefficients in {time.perf_counter() - start:.2f}s")
    diag = report.to_dict()
    diag["target"] = cfg["target"]
    diag["concentration"] = concentration_ratio(tree, _center(cfg["target"], d) if "center" in cfg["target"]
                                                else np.zeros(d))
    write_atomic(out / "tree.json", tree.to_json() + "\n")
    write_atomic(out / "analysis.json", _dump(diag))
    return 0


def concentration_ratio(tree: CoefficientTree, point: np.ndarray, fine_levels: int = 3) -> float:
    """Share of ``sum |f_I|`` over the finest levels carried by cubes within two sidelengths of ``point``."""
    if not len(tree):
        return 0.0
    jmin = min(i.j for i in tree)
    near = total = 0.0
    for idx, v in tree.items():
        if idx.j >= jmin + fine_levels:
            continue
        centre = (np.asarray(idx.k) + 0.5) * idx.side
        total += abs(v)
        if np.max(np.abs(centre - point)) <= 2.0 * idx.side:
            near += abs(v)
    return near / total if total > 0 else 0.0


def cmd_approximate(cfg: RunConfig, out: Path, tree_path: str | None) -> int:
    d = cfg["d"]
    tree = load_tree(cfg, tree_path)
    w = cfg.wavelets(d)
    params = cfg.params()
    rule = cfg.rule()
    alloc = allocate(tree, params, cfg["N"], rule.resolve_n0(w))
    s, report = approximate(tree, w, params, cfg["N"], rule, allocation=alloc)
    _log(f"approximate: {report.terms} terms, {report.funded} funded in {report.elapsed:.2f}s")
    write_atomic(out / "gaussians.json", s.to_json() + "\n")
    write_atomic(out / "report.json", _dump(report.to_dict()))
    write_atomic(out / "allocation.csv", alloc.to_csv())
    return 0


def cmd_study(cfg: RunConfig, out: Path, tree_path: str | None) -> int:
    d = cfg["d"]
    ns = cfg["N_list"]
    if len(ns) < 4:
        raise UsageError(f"config field 'N_list' needs at least 4 budgets, got {len(ns)}")
    tree = load_tree(cfg, tree_path)
    w = cfg.wavelets(d)
    params = cfg.params()
    g = cfg["grid"]
    grid = grid_for_tree(tree, params.p, pad_cubes=float(g["pad_cubes"]), per_cube=int(g["per_cube"]))
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        fit = rate_study(tree, w, params, ns, grid, cfg.rule())
    for item in caught:
        _log(f"warning: {item.message}")
    _log(f"study: slope {fit.slope:.3f} over {len(fit.N)} budgets in {time.perf_counter() - start:.2f}s")
    write_atomic(out / "study.csv", fit.to_csv())
    write_atomic(out / "study.json", fit.to_json() + "\n")
    return 0


def run_verify(cfg: RunConfig) -> list[dict]:
    """Run the operator sweeps; one row per check."""
    v = cfg["verify"]
    w = cfg.wavelets(1)
    rows = []

    full = v["full"]
    res = operator_bound_sweep("full", full["h"], w=w, sigma=float(full["sigma"]),
                               allow_aliasing=bool(full["allow_aliasing"]))
    slopes = res.step_slopes()
    ok = all(sl >= full["min_step_slope"] or res.errors[i] <= full["floor"] for i, sl in enumerate(slopes))
    rows.append({"check": "full", "value": min(slopes), "threshold": full["min_step_slope"], "pass": ok,
                 "detail": {"errors": res.errors, "step_slopes": slopes}})

    tr = v["truncated"]
    res = operator_bound_sweep("truncated", tr["h"], w=w, sigma=float(tr["sigma"]),
                               allow_aliasing=bool(tr["allow_aliasing"]))
    slope = res.fitted_slope
    for k in tr["k"]:
        rows.append({"check": f"truncated_k{k}", "value": slope, "threshold": k - 0.5, "pass": slope >= k - 0.5,
                     "detail": {"errors": res.errors}})

    loc = v["localized"]
    res = operator_bound_sweep("localized", loc["h"], float(loc["k"]), w=w, sigma=float(loc["sigma"]),
                               allow_aliasing=bool(loc["allow_aliasing"]))
    rows.append({"check": "localized", "value": res.spread, "threshold": loc["max_spread"],
                 "pass": res.spread < loc["max_spread"], "detail": {"metric": res.metric}})

    ab = v["atom_budget"]
    errs = []
    x = np.linspace(-20, 21, 4101)
    ref = w.eta_values(1, x)
    for n in ab["N"]:
        h, _ = choose_h(int(n), 1)
        atom = truncated_approximant(w.psi((1,)), float(cfg["sigma"]), h, aliasing_bound=w.aliasing_bound())
        errs.append(float(np.max(np.abs(eval_gaussian_sum(atom.terms, x[:, None]) - ref))))
    expo = float(np.polyfit(np.log(ab["N"]), -np.log(errs), 1)[0])
    rows.append({"check": "atom_budget", "value": expo, "threshold": ab["min_exponent"],
                 "pass": expo >= ab["min_exponent"], "detail": {"N": ab["N"], "errors": errs}})
    return rows


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    rows = run_verify(cfg)
    _log(f"verify: {sum(r['pass'] for r in rows)}/{len(rows)} checks pass in {time.perf_counter() - start:.2f}s")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["check", "value", "threshold", "pass"])
    for r in rows:
        wr.writerow([r["check"], repr(r["value"]), r["threshold"], "PASS" if r["pass"] else "FAIL"])
    write_atomic(out / "verify.csv", buf.getvalue())
    write_atomic(out / "verify.json", _dump(rows))
    return 0 if all(r["pass"] for r in rows) else 1


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussnet", description="N-term Gaussian approximation via wavelets")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("analyze", "approximate", "study", "verify"):
        sp = sub.add_parser(verb)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--n", type=int, help="override the budget N")
        sp.add_argument("--s", type=float, help="override the smoothness s")
        sp.add_argument("--p", help="override the norm index p (number or inf)")
        sp.add_argument("--d", type=int, help="override the dimension d")
        if verb in ("approximate", "study"):
            sp.add_argument("--tree", help="CoefficientTree JSON input")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        raw = read_json(args.config) if args.config else {"version": CONFIG_VERSION}
        cfg = RunConfig.from_dict(raw)
        p = None if args.p is None else (args.p if args.p.lower().startswith("inf") else float(args.p))
        cfg = cfg.override(seed=args.seed, N=args.n, s=args.s, p=p, d=args.d)
        if args.d is not None and args.d != raw.get("d", args.d) and cfg["domain"] is not None:
            raise UsageError("--d conflicts with the configured domain")
        out = Path(args.out)
        if args.verb == "analyze":
            return cmd_analyze(cfg, out)
        if args.verb == "approximate":
            return cmd_approximate(cfg, out, args.tree)
        if args.verb == "study":
            return cmd_study(cfg, out, args.tree)
        return cmd_verify(cfg, out)
    except ValueError as exc:
        # input, domain, degenerate-input and usage errors
        _log(f"error: {exc}")
        return 2
    except GaussnetError as exc:
        _log(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
