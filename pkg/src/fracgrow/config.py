"""JSON configuration documents: parsing with defaults, validation and canonical serialization.

A document has the sections ``domain``, ``modes``, ``operators``, ``alpha``,
``beta``, ``potential``, ``yosida``, ``proliferation``, ``time``, ``newton``,
``initial``, ``forcing`` and ``seed``; every one is optional.  Study
parameters used only by the command line (``sweep``, ``stability``,
``uniqueness``) live in their own sections and are validated by
:func:`study_options`.

Initial data and forcing profiles are given either as explicit
``{"coefficients": [...]}`` or as a preset::

    {"preset": "single_mode", "j": 2, "amplitude": 0.5}
    {"preset": "tanh_interface", "amplitude": 0.8, "width": 0.1, "center": 0.5}
    {"preset": "random_bandlimited", "seed": 7, "modes": 8, "amplitude": 0.5}
    {"preset": "constant", "value": 1.0}
    {"preset": "zero"}
    {"preset": "consistent"}            # mu only

Serialization always writes resolved coefficient lists, so a serialized
config parses back to the same problem.
"""

from __future__ import annotations

import copy
import hashlib
import json

import numpy as np

from .errors import ConfigError
from .potentials import Potential, Proliferation
from .scheme import Forcing, ProblemConfig
from .spectral import FractionalOperator, make_interval_basis, make_rectangle_basis

__all__ = [
    "DEFAULTS",
    "parse_config",
    "load_config",
    "load_document",
    "config_to_dict",
    "serialize_config",
    "config_hash",
    "configs_equal",
    "consistent_mu0",
    "study_options",
]

DEFAULTS = {
    "domain": {"dim": 1, "lengths": [1.0], "oversample": 2.0},
    "modes": 32,
    "operators": {
        "A": {"boundary": "neumann", "exponent": 0.5},
        "B": {"boundary": "neumann", "exponent": 0.5},
        "C": {"boundary": "neumann", "exponent": 0.5},
    },
    "alpha": 0.5,
    "beta": 0.5,
    "potential": {"kind": "regular", "c1": 2.0, "c2": 1.0},
    "yosida": {"lambda": 1e-2},
    "proliferation": {"kind": "constant", "p0": 0.5, "width": 1.0},
    "time": {"T": 0.25, "h": 1e-3},
    "newton": {"tol": 1e-10, "max_iter": 50},
    "initial": {
        "mu": {"preset": "zero"},
        "phi": {"preset": "tanh_interface"},
        "S": {"preset": "constant", "value": 1.0},
    },
    "forcing": {"mu": None, "phi": None, "S": None},
    "seed": 0,
}

STUDY_SECTIONS = ("sweep", "stability", "uniqueness")
_OP_FOR = {"mu": "A", "phi": "B", "S": "C"}


def _fail(path, msg):
    raise ConfigError(f"{path}: {msg}" if path else msg)


def _merge(defaults, doc, path=""):
    if not isinstance(doc, dict):
        _fail(path, f"expected an object, got {type(doc).__name__}")
    out = copy.deepcopy(defaults)
    for key, val in doc.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            _fail(where, "unknown key")
        base = defaults[key]
        if isinstance(base, dict) and key not in ("initial", "forcing") or key == "operators":
            out[key] = _merge(base, val, where)
        elif key in ("initial", "forcing"):
            if not isinstance(val, dict):
                _fail(where, "expected an object")
            for sub, spec in val.items():
                if sub not in base:
                    _fail(f"{where}.{sub}", "unknown field; expected mu, phi or S")
                out[key][sub] = spec
        else:
            out[key] = val
    return out


def _num(path, v, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected a number, got {v!r}")
    if integer:
        if int(v) != v:
            _fail(path, f"expected an integer, got {v!r}")
        return int(v)
    return float(v)


def _basis(doc, boundary):
    dom = doc["domain"]
    dim = _num("domain.dim", dom["dim"], integer=True)
    lengths = [_num("domain.lengths", v) for v in dom["lengths"]]
    n = _num("modes", doc["modes"], integer=True)
    over = _num("domain.oversample", dom["oversample"])
    if dim == 1:
        if len(lengths) != 1:
            _fail("domain.lengths", "a 1D domain takes one length")
        return make_interval_basis(boundary, n, lengths[0], over)
    if dim == 2:
        if len(lengths) == 1:
            lengths = lengths * 2
        return make_rectangle_basis(boundary, n, lengths, over)
    _fail("domain.dim", f"only dimensions 1 and 2 are supported, got {dim}")


def _operator(doc, name):
    spec = doc["operators"][name]
    path = f"operators.{name}"
    exp = _num(f"{path}.exponent", spec["exponent"])
    if not (np.isfinite(exp) and exp > 0):
        _fail(f"{path}.exponent", f"violates (A2): exponents must be fixed positive real numbers, got {exp}")
    return FractionalOperator(_basis(doc, spec["boundary"]), exp)


def _grid_profile(basis, values, path):
    c = basis.analyze(values)
    if not np.all(np.isfinite(c)):
        _fail(path, "profile is not finite")
    return c


def _preset(spec, basis, path, seed, allow_consistent=False):
    """Coefficients of a preset or explicit profile in ``basis``."""
    if not isinstance(spec, dict):
        _fail(path, "expected an object with 'preset' or 'coefficients'")
    if "coefficients" in spec:
        extra = set(spec) - {"coefficients", "profile", "frequency"}
        if extra:
            _fail(path, f"unexpected keys {sorted(extra)}")
        c = np.array([_num(path, v) for v in spec["coefficients"]], dtype=float)
        if c.shape != (basis.n_modes,):
            _fail(path, f"expected {basis.n_modes} coefficients, got {c.size}")
        return c
    kind = spec.get("preset")
    params = {k: v for k, v in spec.items() if k not in ("preset", "profile", "frequency")}

    def take(allowed):
        bad = set(params) - set(allowed)
        if bad:
            _fail(path, f"preset {kind!r} does not take {sorted(bad)}")
        return {k: params.get(k, d) for k, d in allowed.items()}

    x = basis.points[:, 0]
    if kind == "zero":
        take({})
        return np.zeros(basis.n_modes)
    if kind == "constant":
        p = take({"value": 1.0})
        return _grid_profile(basis, np.full_like(x, _num(f"{path}.value", p["value"])), path)
    if kind == "single_mode":
        p = take({"j": 2, "amplitude": 0.5})
        j = _num(f"{path}.j", p["j"], integer=True)
        if not 1 <= j <= basis.n_modes:
            _fail(f"{path}.j", f"mode index must lie in 1..{basis.n_modes}, got {j}")
        c = np.zeros(basis.n_modes)
        c[j - 1] = _num(f"{path}.amplitude", p["amplitude"])
        return c
    if kind == "tanh_interface":
        p = take({"amplitude": 0.8, "width": 0.1, "center": 0.5 * basis.lengths[0]})
        width = _num(f"{path}.width", p["width"])
        if not width > 0:
            _fail(f"{path}.width", "must be positive")
        amp, center = _num(f"{path}.amplitude", p["amplitude"]), _num(f"{path}.center", p["center"])
        return _grid_profile(basis, amp * np.tanh((x - center) / width), path)
    if kind == "random_bandlimited":
        p = take({"seed": seed, "modes": min(8, basis.n_modes), "amplitude": 0.5})
        k = _num(f"{path}.modes", p["modes"], integer=True)
        if not 1 <= k <= basis.n_modes:
            _fail(f"{path}.modes", f"band limit must lie in 1..{basis.n_modes}")
        rng = np.random.default_rng(_num(f"{path}.seed", p["seed"], integer=True))
        c = np.zeros(basis.n_modes)
        c[:k] = rng.standard_normal(k) / np.arange(1, k + 1)
        peak = np.max(np.abs(basis.synthesize(c)))
        return c * (_num(f"{path}.amplitude", p["amplitude"]) / peak) if peak > 0 else c
    if kind == "consistent":
        if not allow_consistent:
            _fail(path, "preset 'consistent' is only available for mu")
        take({})
        return None
    _fail(path, f"unknown preset {kind!r}")


def consistent_mu0(op_A, op_B, potential, lam, phi0):
    """``mu0`` solving the phi-equation at ``t = 0`` with zero time derivative.

    ``mu0 = Pi_A (B^{2 sigma} phi0 + f_lam(phi0))``; well-prepared data avoids an
    initial layer whose width scales with the vanishing relaxation parameter.
    """
    from .spectral import transfer_matrix

    B = op_B.basis
    rhs = op_B.multipliers(2.0) * phi0 + B.analyze(potential.yosida_f(lam, B.synthesize(phi0)))
    return transfer_matrix(op_A.basis, B) @ rhs


def _forcing(spec, basis, path, seed):
    if spec is None:
        return None
    c = _preset(spec, basis, path, seed)
    profile = spec.get("profile", "constant")
    freq = _num(f"{path}.frequency", spec.get("frequency", 1.0))
    return Forcing(c, profile, freq)


def _build(doc):
    ops = {name: _operator(doc, name) for name in ("A", "B", "C")}
    for key in ("alpha", "beta"):
        v = _num(key, doc[key])
        if not 0.0 <= v <= 1.0:
            _fail(key, f"range error: must lie in [0, 1], got {v}")
    pot = doc["potential"]
    potential = Potential(str(pot["kind"]), _num("potential.c1", pot["c1"]), _num("potential.c2", pot["c2"]))
    pr = doc["proliferation"]
    prolif = Proliferation(str(pr["kind"]), _num("proliferation.p0", pr["p0"]),
                           _num("proliferation.width", pr["width"]))
    lam = _num("yosida.lambda", doc["yosida"]["lambda"])
    seed = _num("seed", doc["seed"], integer=True)
    if seed < 0:
        _fail("seed", "must be nonnegative")

    init = {}
    for f in ("phi", "S", "mu"):
        init[f] = _preset(doc["initial"][f], ops[_OP_FOR[f]].basis, f"initial.{f}", seed,
                          allow_consistent=(f == "mu"))
    if init["mu"] is None:
        init["mu"] = consistent_mu0(ops["A"], ops["B"], potential, lam, init["phi"])
    forcing = {f: _forcing(doc["forcing"][f], ops[_OP_FOR[f]].basis, f"forcing.{f}", seed)
               for f in ("mu", "phi", "S")}
    t, nw = doc["time"], doc["newton"]
    return ProblemConfig(
        ops["A"], ops["B"], ops["C"], _num("alpha", doc["alpha"]), _num("beta", doc["beta"]),
        potential, lam, prolif, init["mu"], init["phi"], init["S"],
        _num("time.T", t["T"]), _num("time.h", t["h"]),
        forcing["mu"], forcing["phi"], forcing["S"],
        _num("newton.tol", nw["tol"]), _num("newton.max_iter", nw["max_iter"], integer=True), seed,
    )


def load_document(text):
    """Parse JSON text into a dict, reporting the location of syntax errors."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("parse error: top-level JSON value must be an object")
    return doc


def parse_config(text, seed=None):
    """Validated :class:`ProblemConfig` from a JSON document, with defaults applied.

    Parameters
    ----------
    text : str or dict
        JSON text or an already decoded document.
    seed : int, optional
        Overrides the document's ``seed``.

    Raises
    ------
    ConfigError
        On syntax errors (with line and column), unknown keys or invalid values.
    """
    doc = load_document(text) if isinstance(text, str) else dict(text)
    doc = {k: v for k, v in doc.items() if k not in STUDY_SECTIONS}
    if seed is not None:
        doc["seed"] = seed
    return _build(_merge(DEFAULTS, doc))


def load_config(path, seed=None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), seed=seed)


def _oversample(basis):
    per_axis = basis.n_points if basis.spatial_dim == 1 else round(basis.n_points ** 0.5)
    return per_axis / basis.n_modes


def _floats(a):
    return [float(v) for v in a]


def _forcing_dict(u):
    if u is None:
        return None
    return {"coefficients": _floats(u.coefficients), "profile": u.profile, "frequency": float(u.frequency)}


def config_to_dict(cfg):
    """Fully resolved document for ``cfg``; initial data as coefficient lists."""
    B = cfg.op_B.basis
    return {
        "domain": {"dim": B.spatial_dim, "lengths": _floats(B.lengths), "oversample": _oversample(B)},
        "modes": B.n_modes,
        "operators": {name: {"boundary": op.basis.boundary, "exponent": op.exponent}
                      for name, op in (("A", cfg.op_A), ("B", cfg.op_B), ("C", cfg.op_C))},
        "alpha": float(cfg.alpha),
        "beta": float(cfg.beta),
        "potential": {"kind": cfg.potential.kind, "c1": float(cfg.potential.c1), "c2": float(cfg.potential.c2)},
        "yosida": {"lambda": float(cfg.lam)},
        "proliferation": {"kind": cfg.proliferation.kind, "p0": float(cfg.proliferation.p0),
                          "width": float(cfg.proliferation.width)},
        "time": {"T": float(cfg.T), "h": float(cfg.h)},
        "newton": {"tol": float(cfg.newton_tol), "max_iter": int(cfg.newton_max_iter)},
        "initial": {"mu": {"coefficients": _floats(cfg.mu0)},
                    "phi": {"coefficients": _floats(cfg.phi0)},
                    "S": {"coefficients": _floats(cfg.S0)}},
        "forcing": {"mu": _forcing_dict(cfg.forcing_mu), "phi": _forcing_dict(cfg.forcing_phi),
                    "S": _forcing_dict(cfg.forcing_S)},
        "seed": int(cfg.seed),
    }


def serialize_config(cfg):
    """Canonical JSON text (sorted keys, shortest round-trip float repr)."""
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n"


def config_hash(cfg):
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def configs_equal(a, b):
    """Field-wise equality of two configurations (exact floats)."""
    return config_to_dict(a) == config_to_dict(b)


def study_options(doc):
    """Validated study sections of a document, with defaults.

    ``sweep``: ``regime``, ``values`` (or ``n`` for ``2^-1..2^-n``), ``fixed``,
    ``reference``.  ``stability``: ``alpha2``, ``beta2``, ``delta``.
    ``uniqueness``: ``kind``, ``seeds``.
    """
    out = {
        "sweep": {"regime": "alpha_to_zero", "n": 6, "values": None, "fixed": None, "reference": "limit"},
        "stability": {"alpha2": None, "beta2": None, "delta": 0.25},
        "uniqueness": {"kind": "newton_seed", "seeds": [1, 2]},
    }
    for sec in STUDY_SECTIONS:
        if sec in doc:
            out[sec] = _merge(out[sec], doc[sec], sec)
    sw = out["sweep"]
    if sw["values"] is None:
        n = _num("sweep.n", sw["n"], integer=True)
        if n < 1:
            _fail("sweep.n", "must be at least 1")
        sw["values"] = [2.0 ** -k for k in range(1, n + 1)]
    else:
        sw["values"] = [_num("sweep.values", v) for v in sw["values"]]
    if not _num("stability.delta", out["stability"]["delta"]) > 0:
        _fail("stability.delta", "must be positive")
    return out
