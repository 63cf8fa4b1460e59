"""INI run configuration.

Grammar (configparser syntax; ``#`` starts a comment anywhere, ``;`` only at
the start of a line because it separates custom terms)::

    [run]
    command = solve | evolve | verify-lemmas | inflate | norms | threshold
    symbol  = kdvks            # builtin name, or "custom" to use [symbol]
    seed    = 42
    output  = out              # overridden by --output

    [symbol]                   # only read when symbol = custom
    p       = 4
    eta     = 1
    q_bound = 2
    terms   = 1,2,0            # "c,i,j; c,i,j" for sum c xi^i |xi|^j

    [<command>]                # keys per COMMAND_SCHEMAS, all optional

Unknown sections or keys are errors.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .symbol import BUILTINS, SymbolSpec, builtin

COMMANDS = ("solve", "evolve", "verify-lemmas", "inflate", "norms", "threshold")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"[{key}] {message}")
        self.key = key


def _floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def _strings(text):
    return [x for x in text.replace(",", " ").split()]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


COMMAND_SCHEMAS = {
    "solve": {
        "s": (float, -1.0),
        "variant": (str, "X"),
        "xi_max": (float, 16.0),
        "n": (int, 256),
        "data_norm": (float, 0.1),
        "width": (float, 1.0),
        "tol": (float, 1e-10),
        "max_iter": (int, 50),
        "m": (int, 64),
        "T": (_opt_float, None),
        "trials": (int, 8),
        "compare_evolve": (_bool, True),
        "dt_steps": (int, 400),
    },
    "evolve": {
        "s": (float, -1.0),
        "nl": (str, "derivative_of_square"),
        "xi_max": (float, 16.0),
        "n": (int, 256),
        "data_norm": (float, 0.1),
        "width": (float, 1.0),
        "T": (float, 1e-3),
        "dt": (float, 1e-6),
        "linear_only": (_bool, False),
        "save_every": (int, 100),
    },
    "verify-lemmas": {
        "s": (float, -1.0),
        "weights": (_strings, ["xi_bracket_s", "bracket_s_only", "xi_only"]),
        "tau_min": (float, 1e-5),
        "tau_max": (float, 1.0),
        "tau_count": (int, 50),
        "eps": (float, 0.01),
    },
    "inflate": {
        "s": (float, -2.5),
        "gamma": (float, 1.0),
        "t_eval": (float, 0.1),
        "N_list": (_floats, [100.0, 200.0, 400.0, 800.0]),
        "which": (str, "derivative_nl"),
        "nodes_per_gamma": (int, 64),
        "slope_tol": (float, 0.10),
    },
    "norms": {
        "s": (float, -2.0),
        "N": (float, 50.0),
        "gamma": (float, 1.0),
        "T": (float, 1.0),
        "m": (int, 64),
        "nodes_per_gamma": (int, 16),
    },
    "threshold": {},
}


@dataclass
class RunConfig:
    command: str
    symbol: SymbolSpec
    symbol_ref: str
    params: dict
    output: Path
    seed: int = 42
    echo: dict = field(default_factory=dict)


def _parse_terms(text):
    terms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [x.strip() for x in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError(f"term {chunk!r} is not c,i,j")
        terms.append((float(parts[0]), int(parts[1]), int(parts[2])))
    return tuple(terms)


def load_config(path=None, text: str | None = None, command: str | None = None,
                output=None, seed: int | None = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        if text is not None:
            cp.read_string(text)
        elif path is not None:
            with open(path) as fh:
                cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError("file", f"unparseable configuration: {exc}") from None
    except OSError as exc:
        raise ConfigError("file", str(exc)) from None

    run = cp["run"] if cp.has_section("run") else {}
    for key in run:
        if key not in ("command", "symbol", "seed", "output"):
            raise ConfigError(f"run.{key}", "unknown key")
    cmd = command or run.get("command")
    if cmd is None:
        raise ConfigError("run.command", "missing (set it in [run] or on the command line)")
    if cmd not in COMMANDS:
        raise ConfigError("run.command", f"unknown command {cmd!r}; choose from {COMMANDS}")

    for sec in cp.sections():
        if sec not in ("run", "symbol") and sec not in COMMANDS:
            raise ConfigError(sec, "unknown section")

    ref = run.get("symbol", "kdvks")
    if ref == "custom":
        if not cp.has_section("symbol"):
            raise ConfigError("symbol", "symbol = custom needs a [symbol] section")
        sec = cp["symbol"]
        for key in sec:
            if key not in ("p", "eta", "q_bound", "terms"):
                raise ConfigError(f"symbol.{key}", "unknown key")
        try:
            p = float(sec["p"])
        except KeyError:
            raise ConfigError("symbol.p", "missing") from None
        except ValueError as exc:
            raise ConfigError("symbol.p", str(exc)) from None
        vals = {}
        for key, conv, default in (("eta", float, 1.0), ("q_bound", float, 0.0), ("terms", _parse_terms, ())):
            try:
                vals[key] = conv(sec[key]) if key in sec else default
            except ValueError as exc:
                raise ConfigError(f"symbol.{key}", str(exc)) from None
        try:
            spec = SymbolSpec(p=p, phi1_terms=vals["terms"], eta=vals["eta"], q_bound=vals["q_bound"], name="custom")
        except ValueError as exc:
            raise ConfigError("symbol", str(exc)) from None
    else:
        if ref not in BUILTINS:
            raise ConfigError("run.symbol", f"unknown builtin {ref!r}; choose from {sorted(BUILTINS)} or 'custom'")
        spec = builtin(ref)

    try:
        seed_val = int(run.get("seed", 42)) if seed is None else int(seed)
    except ValueError as exc:
        raise ConfigError("run.seed", str(exc)) from None
    out = Path(output if output is not None else run.get("output", "out"))

    schema = COMMAND_SCHEMAS[cmd]
    section = cp[cmd] if cp.has_section(cmd) else {}
    params = {}
    for key in section:
        if key not in schema:
            raise ConfigError(f"{cmd}.{key}", "unknown key")
    for key, (conv, default) in schema.items():
        if key in section:
            try:
                params[key] = conv(section[key])
            except ValueError as exc:
                raise ConfigError(f"{cmd}.{key}", str(exc)) from None
        else:
            params[key] = default

    echo = {"command": cmd, "symbol": ref, "seed": seed_val, "output": str(out),
            "symbol_spec": {"p": spec.p, "eta": spec.eta, "q_bound": spec.q_bound,
                            "terms": [list(t) for t in spec.phi1_terms]},
            "params": params}
    return RunConfig(cmd, spec, ref, params, out, seed_val, echo)
