"""Experiment configuration: strict JSON schema, validation, defaults.

Configs are single JSON documents.  Unknown keys are rejected anywhere in
the tree, every error names the offending field path, and all module
preconditions that can be checked statically are checked here before any
computation starts.
"""

from __future__ import annotations

import json

from anderson1d.approx import ApproxSequence, clamp_sequence
from anderson1d.gauge import GaugeFunction
from anderson1d.potential import InvalidDistributionError, PotentialDistribution

EXPERIMENTS = {
    "lyapunov": "Lyapunov exponent over an energy grid (Monte Carlo)",
    "ids": "integrated density of states on an energy grid",
    "wegner": "density bound check on the fitted IDS derivative",
    "minami": "eigenvalue-count tail probabilities vs the factorial bound",
    "localization": "eigenfunction centers, counting band, decay fits",
    "blockmatch": "dyadic block spectra vs box eigenvalues, good/bad split",
    "khinchin": "covered-measure growth of eigenvalue neighborhoods",
    "jarnik": "gauge series partial sums and integrability verdicts",
    "nonlyap": "finite-horizon scans for below-Lyapunov growth",
    "propa": "transfer-product ceiling at localized eigenvalues",
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the field path."""


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}")


def _require(obj, path, keys, optional=()):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for k in obj:
        if k not in keys and k not in optional:
            _fail(f"{path}.{k}", "unknown key (strict schema)")
    for k in keys:
        if k not in obj:
            _fail(f"{path}.{k}", "missing required key")


def _number(obj, path, lo=None, hi=None, integer=False, lo_strict=False):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        _fail(path, f"expected a number, got {type(obj).__name__}")
    if integer and int(obj) != obj:
        _fail(path, f"expected an integer, got {obj}")
    if lo is not None and (obj <= lo if lo_strict else obj < lo):
        _fail(path, f"must be {'>' if lo_strict else '>='} {lo}, got {obj}")
    if hi is not None and obj > hi:
        _fail(path, f"must be <= {hi}, got {obj}")
    return int(obj) if integer else float(obj)


def _interval(obj, path):
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        _fail(path, "expected [lo, hi]")
    lo = _number(obj[0], f"{path}[0]")
    hi = _number(obj[1], f"{path}[1]")
    if hi <= lo:
        _fail(path, f"needs lo < hi, got [{lo}, {hi}]")
    return (lo, hi)


def parse_distribution(obj, path="distribution") -> PotentialDistribution:
    _require(obj, path, ("kind", "j_lo", "j_hi"), optional=("density_bound_A", "nodes"))
    kind = obj["kind"]
    if kind not in ("uniform", "piecewise"):
        _fail(f"{path}.kind", f"must be 'uniform' or 'piecewise', got {kind!r}")
    kwargs = dict(
        j_lo=_number(obj["j_lo"], f"{path}.j_lo"),
        j_hi=_number(obj["j_hi"], f"{path}.j_hi"),
        kind=kind,
    )
    if "density_bound_A" in obj:
        kwargs["density_bound_A"] = _number(
            obj["density_bound_A"], f"{path}.density_bound_A"
        )
    if kind == "piecewise":
        if "nodes" not in obj:
            _fail(f"{path}.nodes", "piecewise law needs density nodes")
        nodes = obj["nodes"]
        if not isinstance(nodes, list) or any(
            not isinstance(p, (list, tuple)) or len(p) != 2 for p in nodes
        ):
            _fail(f"{path}.nodes", "expected a list of [t, f] pairs")
        kwargs["nodes"] = tuple((float(t), float(f)) for t, f in nodes)
    try:
        return PotentialDistribution(**kwargs)
    except InvalidDistributionError as e:
        _fail(path, str(e))


def parse_alpha(obj, path="alpha") -> ApproxSequence:
    _require(obj, path, ("kind",), optional=("c", "p", "gamma_bar", "table", "clamp"))
    kind = obj["kind"]
    if kind not in ("exponential", "power", "harmonic", "table"):
        _fail(f"{path}.kind", f"unknown alpha kind {kind!r}")
    kwargs = {"kind": kind}
    if "c" in obj:
        kwargs["c"] = _number(obj["c"], f"{path}.c", lo=0, lo_strict=True)
    if "p" in obj:
        kwargs["p"] = _number(obj["p"], f"{path}.p", lo=0, lo_strict=True)
    if "gamma_bar" in obj:
        kwargs["gamma_bar"] = _number(
            obj["gamma_bar"], f"{path}.gamma_bar", lo=0, lo_strict=True
        )
    if "table" in obj:
        kwargs["table"] = tuple(
            _number(x, f"{path}.table[{i}]") for i, x in enumerate(obj["table"])
        )
    try:
        alpha = ApproxSequence(**kwargs)
    except (ValueError, TypeError) as e:
        _fail(path, str(e))
    if obj.get("clamp", False):
        alpha = clamp_sequence(alpha)
    return alpha


def parse_gauge(obj, path="gauge") -> GaugeFunction:
    _require(
        obj, path, ("kind",),
        optional=("s", "table_t", "table_v", "rho_over_t_nonincreasing"),
    )
    kind = obj["kind"]
    kwargs = {"kind": kind}
    if "s" in obj:
        kwargs["s"] = _number(obj["s"], f"{path}.s")
    if "table_t" in obj:
        kwargs["table_t"] = tuple(float(x) for x in obj["table_t"])
    if "table_v" in obj:
        kwargs["table_v"] = tuple(float(x) for x in obj["table_v"])
    if "rho_over_t_nonincreasing" in obj:
        kwargs["rho_over_t_nonincreasing"] = bool(obj["rho_over_t_nonincreasing"])
    try:
        return GaugeFunction(**kwargs)
    except ValueError as e:
        _fail(path, str(e))


def _tau(obj, path):
    t = _number(obj, path)
    if not (0.0 <= t < 1.0):
        _fail(path, f"must satisfy 0 ≤ τ < 1, got {t}")
    return t


def parse_e_grid(obj, path):
    """Either an explicit list of energies or {lo, hi, points}."""
    if isinstance(obj, list):
        if len(obj) < 1:
            _fail(path, "energy list must be nonempty")
        return [_number(x, f"{path}[{i}]") for i, x in enumerate(obj)]
    _require(obj, path, ("lo", "hi", "points"))
    lo = _number(obj["lo"], f"{path}.lo")
    hi = _number(obj["hi"], f"{path}.hi")
    pts = _number(obj["points"], f"{path}.points", lo=2, integer=True)
    if hi <= lo:
        _fail(path, "needs lo < hi")
    step = (hi - lo) / (pts - 1)
    return [lo + i * step for i in range(pts)]


_SIZES_KEYS = {
    "lyapunov": (("n", "E_grid"), ("min_ratio",)),
    "ids": (("L", "grid_lo", "grid_hi", "grid_step"), ()),
    "wegner": (("L", "grid_lo", "grid_hi", "grid_step"), ("tol",)),
    "minami": (("L", "r"), ()),
    "localization": (
        ("N", "tau", "K", "gamma_n", "gamma_trials"),
        ("count_Ls", "min_fraction", "bulk_margin"),
    ),
    "blockmatch": (("m", "N"), ("margin", "min_sigma_b_fraction")),
    "khinchin": (("K_max",), ("box_pad", "min_dominance")),
    "jarnik": (("K",), ("growth_rtol",)),
    "nonlyap": (("N", "tau", "E_grid", "gamma_n", "gamma_trials"), ()),
    "propa": (
        ("N", "k_min", "k_max", "tau", "gamma_n", "gamma_trials"),
        ("min_fraction",),
    ),
}

_NEEDS_DIST = {
    "lyapunov", "ids", "wegner", "minami", "localization",
    "blockmatch", "khinchin", "nonlyap", "propa",
}
_NEEDS_INTERVAL = {"minami", "khinchin"}
_NEEDS_ALPHA = {"khinchin", "jarnik"}
_NEEDS_GAUGE = {"jarnik"}


def validate_config(raw: dict) -> dict:
    """Validate a parsed JSON config; returns a normalized config dict.

    The normalized dict carries plain JSON values under the same keys plus
    constructed objects under '_dist', '_alpha', '_gauge' (underscore keys
    are never serialized).
    """
    top_required = ("experiment", "master_seed", "trials")
    top_optional = (
        "distribution", "interval", "alpha", "compare_alpha", "gauge",
        "sizes", "workers", "output",
    )
    _require(raw, "config", top_required, optional=top_optional)
    exp = raw["experiment"]
    if exp not in EXPERIMENTS:
        _fail(
            "config.experiment",
            f"unknown experiment {exp!r}; valid: {', '.join(sorted(EXPERIMENTS))}",
        )
    cfg = dict(raw)
    cfg["master_seed"] = _number(raw["master_seed"], "config.master_seed", integer=True)
    cfg["trials"] = _number(raw["trials"], "config.trials", lo=1, integer=True)
    cfg["workers"] = _number(
        raw.get("workers", 1), "config.workers", lo=1, integer=True
    )

    if exp in _NEEDS_DIST:
        if "distribution" not in raw:
            _fail("config.distribution", f"required for experiment {exp!r}")
        cfg["_dist"] = parse_distribution(raw["distribution"])
    if exp in _NEEDS_INTERVAL:
        if "interval" not in raw:
            _fail("config.interval", f"required for experiment {exp!r}")
        cfg["_interval"] = _interval(raw["interval"], "config.interval")
    elif "interval" in raw:
        cfg["_interval"] = _interval(raw["interval"], "config.interval")
    if exp in _NEEDS_ALPHA:
        if "alpha" not in raw:
            _fail("config.alpha", f"required for experiment {exp!r}")
        cfg["_alpha"] = parse_alpha(raw["alpha"])
    if "compare_alpha" in raw:
        if exp != "khinchin":
            _fail("config.compare_alpha", "only valid for the khinchin experiment")
        cfg["_compare_alpha"] = parse_alpha(raw["compare_alpha"], "compare_alpha")
    if exp in _NEEDS_GAUGE:
        if "gauge" not in raw:
            _fail("config.gauge", f"required for experiment {exp!r}")
        cfg["_gauge"] = parse_gauge(raw["gauge"])

    sizes = raw.get("sizes", {})
    req, opt = _SIZES_KEYS[exp]
    _require(sizes, "sizes", req, optional=opt)
    s = dict(sizes)

    if exp == "lyapunov":
        s["n"] = _number(sizes["n"], "sizes.n", lo=1000, integer=True)
        s["E_grid"] = parse_e_grid(sizes["E_grid"], "sizes.E_grid")
        s["min_ratio"] = _number(sizes.get("min_ratio", 5.0), "sizes.min_ratio", lo=0)
    elif exp in ("ids", "wegner"):
        s["L"] = _number(sizes["L"], "sizes.L", lo=16, integer=True)
        lo = _number(sizes["grid_lo"], "sizes.grid_lo")
        hi = _number(sizes["grid_hi"], "sizes.grid_hi")
        step = _number(sizes["grid_step"], "sizes.grid_step", lo=0, lo_strict=True)
        if hi <= lo:
            _fail("sizes.grid_hi", "needs grid_lo < grid_hi")
        if exp == "wegner":
            if step > 0.01:
                _fail("sizes.grid_step", f"must be <= 0.01 for wegner, got {step}")
            s["tol"] = _number(sizes.get("tol", 0.15), "sizes.tol", lo=0)
    elif exp == "minami":
        s["L"] = _number(sizes["L"], "sizes.L", lo=2, integer=True)
        s["r"] = _number(sizes["r"], "sizes.r", lo=0, integer=True)
        if cfg["trials"] < 1000:
            _fail("config.trials", "minami needs trials >= 1000")
    elif exp == "localization":
        s["N"] = _number(sizes["N"], "sizes.N", lo=16, integer=True)
        s["tau"] = _tau(sizes["tau"], "sizes.tau")
        if s["tau"] == 0.0:
            _fail("sizes.tau", "decay fits need tau in (0, 1)")
        s["K"] = _number(sizes["K"], "sizes.K", lo=1)
        s["gamma_n"] = _number(sizes["gamma_n"], "sizes.gamma_n", lo=1000, integer=True)
        s["gamma_trials"] = _number(
            sizes["gamma_trials"], "sizes.gamma_trials", lo=2, integer=True
        )
        s["count_Ls"] = [
            _number(L, f"sizes.count_Ls[{i}]", lo=1, integer=True)
            for i, L in enumerate(sizes.get("count_Ls", []))
        ]
        s["min_fraction"] = _number(
            sizes.get("min_fraction", 0.9), "sizes.min_fraction", lo=0, hi=1
        )
        s["bulk_margin"] = _number(
            sizes.get("bulk_margin", 32), "sizes.bulk_margin", lo=1, integer=True
        )
    elif exp == "blockmatch":
        s["m"] = _number(sizes["m"], "sizes.m", lo=1, integer=True)
        s["N"] = _number(sizes["N"], "sizes.N", lo=16, integer=True)
        if s["N"] < 2 * 4 ** s["m"]:
            _fail("sizes.N", f"box must cover the level-{s['m']} block")
        if "margin" in sizes:
            s["margin"] = _number(sizes["margin"], "sizes.margin", lo=1, integer=True)
        margin = s.get("margin", 2 ** s["m"])
        if 4 ** s["m"] - 2 * margin < 1:
            _fail(
                "sizes.margin",
                f"empty bulk window at m={s['m']}: need margin < 4^m/2, "
                f"got {margin}",
            )
        s["min_sigma_b_fraction"] = _number(
            sizes.get("min_sigma_b_fraction", 0.95),
            "sizes.min_sigma_b_fraction", lo=0, hi=1,
        )
    elif exp == "khinchin":
        s["K_max"] = _number(sizes["K_max"], "sizes.K_max", lo=2, integer=True)
        if "box_pad" in sizes:
            s["box_pad"] = _number(sizes["box_pad"], "sizes.box_pad", lo=1, integer=True)
        s["min_dominance"] = _number(
            sizes.get("min_dominance", 0.95), "sizes.min_dominance", lo=0, hi=1
        )
    elif exp == "jarnik":
        s["K"] = _number(sizes["K"], "sizes.K", lo=1, integer=True)
        s["growth_rtol"] = _number(
            sizes.get("growth_rtol", 0.05), "sizes.growth_rtol", lo=0
        )
    elif exp == "nonlyap":
        s["N"] = _number(sizes["N"], "sizes.N", lo=4, integer=True)
        s["tau"] = _tau(sizes["tau"], "sizes.tau")
        s["E_grid"] = parse_e_grid(sizes["E_grid"], "sizes.E_grid")
        s["gamma_n"] = _number(sizes["gamma_n"], "sizes.gamma_n", lo=1000, integer=True)
        s["gamma_trials"] = _number(
            sizes["gamma_trials"], "sizes.gamma_trials", lo=2, integer=True
        )
    elif exp == "propa":
        s["N"] = _number(sizes["N"], "sizes.N", lo=16, integer=True)
        s["k_min"] = _number(sizes["k_min"], "sizes.k_min", lo=1, integer=True)
        s["k_max"] = _number(sizes["k_max"], "sizes.k_max", lo=1, integer=True)
        if s["k_max"] < s["k_min"]:
            _fail("sizes.k_max", "needs k_min <= k_max")
        if s["N"] < 2 * s["k_max"]:
            _fail("sizes.N", "box must reach site 2*k_max")
        s["tau"] = _tau(sizes["tau"], "sizes.tau")
        s["gamma_n"] = _number(sizes["gamma_n"], "sizes.gamma_n", lo=1000, integer=True)
        s["gamma_trials"] = _number(
            sizes["gamma_trials"], "sizes.gamma_trials", lo=2, integer=True
        )
    cfg["sizes"] = s

    out = raw.get("output", {})
    _require(out, "output", (), optional=("dir", "prefix"))
    cfg["output"] = {
        "dir": str(out.get("dir", "out")),
        "prefix": str(out.get("prefix", exp)),
    }
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: invalid JSON in {path}: {e}") from e
    return validate_config(raw)


def public_config(cfg: dict) -> dict:
    """Config without constructed objects, for embedding in reports."""
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


SCHEMA_TEXT = """\
anderson1d experiment configuration (JSON, strict: unknown keys rejected)

Top level:
  experiment     one of: %(experiments)s
  master_seed    integer; all randomness derives from (master_seed, stream)
  trials         integer >= 1; Monte Carlo trials or realizations
  workers        integer >= 1 (optional, default 1); never changes results
  distribution   {kind: "uniform"|"piecewise", j_lo, j_hi,
                  density_bound_A?, nodes?: [[t, f], ...]}
  interval       [lo, hi] probe interval (required: minami, khinchin)
  alpha          {kind: "exponential"|"power"|"harmonic"|"table",
                  c?, p?, gamma_bar?, table?, clamp?: bool}
  compare_alpha  second alpha spec (khinchin only): dominance comparison
  gauge          {kind: "lebesgue"|"power"|"reciprocal_log"|"table",
                  s?, table_t?, table_v?, rho_over_t_nonincreasing?}
  sizes          experiment-specific knobs, see below
  output         {dir?: "out", prefix?: experiment name}

sizes by experiment:
  lyapunov      n (>=1000), E_grid ([..] or {lo, hi, points}), min_ratio?
  ids           L (>=16), grid_lo, grid_hi, grid_step
  wegner        ids keys; grid_step <= 0.01; tol? (default 0.15)
  minami        L, r; trials >= 1000
  localization  N, tau in (0,1), K, gamma_n, gamma_trials,
                count_Ls?, min_fraction? (0.9), bulk_margin? (32)
  blockmatch    m, N (>= 2*4^m), margin? (2^m), min_sigma_b_fraction? (0.95)
  khinchin      K_max, box_pad?, min_dominance? (0.95)
  jarnik        K, growth_rtol? (0.05)
  nonlyap       N, tau in [0,1), E_grid, gamma_n, gamma_trials
  propa         N, k_min, k_max (N >= 2*k_max), tau, gamma_n, gamma_trials

Environment overrides: ANDERSON1D_OUT (output dir),
ANDERSON1D_WORKERS (worker count).  Exit codes: 0 ok, 2 config error,
3 numeric error, 4 I/O error.

Report files (per run, under output dir):
  <prefix>.report.json   deterministic summary: config, content hash,
                         results, pass/fail checks with tolerances
  <prefix>.<table>.csv   detail tables, headers fixed per experiment,
                         floats with 17 significant digits
  <prefix>.runinfo.json  volatile sidecar: wall time, versions (excluded
                         from the determinism contract)
""" % {"experiments": ", ".join(sorted(EXPERIMENTS))}
