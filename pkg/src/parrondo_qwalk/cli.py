"""Command-line front end.

Subcommands: ``period``, ``protocol``, ``attack``, ``bb84``, ``route`` and
``metrics``.  Each accepts a JSON config (``--config``) whose keys are
validated before anything runs; command-line flags override the config.
With ``--out DIR`` reports are written as JSON plus CSV tables; run
timing goes to ``provenance.json`` so that the report files themselves
are byte-identical across reruns of the same config and seed.

Exit codes: 0 success, 2 usage or config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import attacks, metrics, protocol, routing
from .noise import MODES, NoiseSpec
from .walk import (
    COIN_A,
    COIN_A_PRIME,
    COIN_B,
    COIN_B_PRIME,
    CoinParams,
    ParrondoSequence,
    WalkerInit,
    find_period,
    parse_pattern,
    sequence_period,
    walk_unitary,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
NAMED_COINS = {"A": COIN_A, "B": COIN_B, "A'": COIN_A_PRIME, "B'": COIN_B_PRIME}


class ConfigError(Exception):
    """Bad configuration or arguments; maps to exit code 2."""


# -- config schema -------------------------------------------------------------

_INT_OR_LIST = {"oneOf": [{"type": "integer", "minimum": 0}, {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}]}
_COIN = {
    "type": "object",
    "properties": {"s": {"type": "number"}, "gamma": {"type": "number"}, "delta": {"type": "number"}},
    "required": ["s"],
    "additionalProperties": False,
}
_NOISE = {
    "type": "object",
    "properties": {
        "mode": {"enum": list(MODES)},
        "p1": {"type": "number", "minimum": 0, "maximum": 1},
        "p2": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "trajectory": {"type": "boolean"},
    },
    "required": ["mode", "p1"],
    "additionalProperties": False,
}
_STRATEGY = {"enum": list(protocol.STRATEGIES)}


def _section(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "shots": {"type": ["integer", "null"], "minimum": 1},
        "out": {"type": "string"},
        "format": {"enum": ["json", "csv"]},
        "workers": {"type": "integer", "minimum": 1},
        "period": _section(
            {
                "cycle": {"type": "integer", "minimum": 2},
                "pattern": {"type": "string"},
                "repeat": {"type": "integer", "minimum": 1},
                "coin": _COIN,
                "t_max": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            }
        ),
        "protocol": _section(
            {
                "K": {"type": "integer", "minimum": 2},
                "k": _INT_OR_LIST,
                "x": _INT_OR_LIST,
                "theta": {"type": "number"},
                "omega": {"type": "number"},
                "transfer": {"oneOf": [_STRATEGY, {"type": "array", "items": _STRATEGY, "minItems": 1}]},
                "public_key_steps": {"type": "integer", "minimum": 0},
                "public_key_coin": {"type": "string"},
                "decrypt_pattern": {"type": "string"},
                "coins": {"type": "object", "additionalProperties": _COIN},
            }
        ),
        "noise": {"oneOf": [{"type": "null"}, _NOISE, {"type": "array", "items": {"oneOf": [{"type": "null"}, _NOISE]}, "minItems": 1}]},
        "attack": _section(
            {
                "n_seeds": {"type": "integer", "minimum": 1},
                "first_seed": {"type": "integer", "minimum": 0},
                "basis_choice": {"enum": list(attacks.BASIS_CHOICES)},
                "reencode": {"enum": list(attacks.REENCODINGS)},
                "threshold": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "compare_bb84": {"type": "integer", "minimum": 1},
            }
        ),
        "bb84": _section(
            {
                "n_bits": {"type": "integer", "minimum": 1},
                "eve": {"type": "boolean"},
                "bit_flip": {"type": "number", "minimum": 0, "maximum": 1},
                "log": {"type": "boolean"},
            }
        ),
        "routing": _section(
            {
                "graph": {"type": "string"},
                "layouts": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "strategies": {"type": "array", "items": _STRATEGY, "minItems": 1},
            }
        ),
        "metrics": _section(
            {
                "reference": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "observed": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
                "correct": {"type": "integer", "minimum": 0},
            }
        ),
    },
}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


# -- output helpers ------------------------------------------------------------


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


class Reporter:
    """Collects output files and writes them only once the command has succeeded."""

    def __init__(self, args, command: str, echo: dict):
        self.out = Path(args.out) if args.out else None
        self.fmt = args.format
        self.files: dict[str, str] = {}
        self.header = {"command": command, "version": __version__, "seed": args.seed, "shots": args.shots, "config": echo}
        self.t0 = time.perf_counter()

    def add_json(self, name: str, payload: dict) -> None:
        self.files[name] = _dumps({**self.header, **payload})

    def add_text(self, name: str, text: str) -> None:
        self.files[name] = text

    def finish(self, summary_json: dict, summary_rows: list[dict]) -> None:
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            for name, text in sorted(self.files.items()):
                path = self.out / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(text)
            prov = {
                "command": self.header["command"],
                "version": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "wall_time_s": round(time.perf_counter() - self.t0, 6),
                "finished_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            }
            (self.out / "provenance.json").write_text(_dumps(prov))
        if self.fmt == "csv":
            sys.stdout.write(_csv(summary_rows))
        else:
            sys.stdout.write(_dumps(summary_json))


def _pick(args, cfg_section: dict, name: str, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg_section.get(name, default)


def _int_list(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _parse_coin(text: str) -> CoinParams:
    """``s=0.5,g=0,d=0`` (``gamma``/``delta`` spelled out also accepted)."""
    vals = {"s": None, "gamma": 0.0, "delta": 0.0}
    alias = {"s": "s", "g": "gamma", "gamma": "gamma", "d": "delta", "delta": "delta"}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep or key.strip() not in alias:
            raise ConfigError(f"bad coin spec {text!r}; use s=..,g=..,d=..")
        try:
            vals[alias[key.strip()]] = float(value)
        except ValueError:
            raise ConfigError(f"bad number in coin spec {text!r}") from None
    if vals["s"] is None:
        raise ConfigError("coin spec needs s=")
    return _coin(vals)


def _coin(d: dict) -> CoinParams:
    try:
        return CoinParams(float(d["s"]), float(d.get("gamma", 0.0)), float(d.get("delta", 0.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- period --------------------------------------------------------------------


def cmd_period(args, cfg: dict) -> None:
    sec = cfg.get("period", {})
    K = _pick(args, sec, "cycle", 4)
    pattern = _pick(args, sec, "pattern")
    repeat = _pick(args, sec, "repeat", 1)
    coin_spec = args.coin if args.coin is not None else sec.get("coin")
    t_max = _pick(args, sec, "t_max")
    tol = _pick(args, sec, "tol")
    if (pattern is None) == (coin_spec is None):
        raise ConfigError("period needs exactly one of --pattern or --coin")
    rep = Reporter(args, "period", {"cycle": K, "pattern": pattern, "repeat": repeat, "coin": coin_spec, "t_max": t_max, "tol": tol})
    if pattern is not None:
        labels = parse_pattern(pattern) * repeat
        unknown = sorted(set(labels) - set(NAMED_COINS))
        if unknown:
            raise ConfigError(f"unknown coin labels {unknown}; named coins are {sorted(NAMED_COINS)}")
        seq = ParrondoSequence(NAMED_COINS, labels, K)
        report = sequence_period(seq, t_max, tol if tol is not None else 5e-3)
        what = {"pattern": pattern, "repeat": repeat}
    else:
        coin = _parse_coin(coin_spec) if isinstance(coin_spec, str) else _coin(coin_spec)
        report = find_period(walk_unitary(coin, K), t_max or 1000, tol if tol is not None else 1e-6)
        what = {"coin": {"s": coin.s, "gamma": coin.gamma, "delta": coin.delta}}
    body = {"cycle": K, **what, "report": report.to_dict()}
    rep.add_json("period.json", body)
    row = {"cycle": K, "period": report.period, "deviation": report.deviation_at_period, "searched_up_to": report.searched_up_to}
    rep.add_text("period.csv", _csv([row]))
    rep.finish(body, [row])


# -- protocol ------------------------------------------------------------------


def _noise_from(d: dict | None, seed: int) -> NoiseSpec | None:
    if d is None:
        return None
    return NoiseSpec(d["mode"], d["p1"], d.get("p2"), d.get("trajectory", False), seed)


def _noise_tag(n: NoiseSpec | None) -> str:
    return "ideal" if n is None else f"{n.mode}-p{n.p1:g}" + (f"-q{n.p2:g}" if n.p2 != n.p1 else "") + ("-traj" if n.trajectory else "")


def _noise_cells(args, cfg: dict) -> list[dict | None]:
    if args.noise_mode is not None or args.p1 is not None:
        if args.p1 is None:
            raise ConfigError("--noise-mode needs --p1")
        return [{"mode": args.noise_mode or "per-gate", "p1": args.p1, "p2": args.p2, "trajectory": args.trajectory}]
    return _as_list(cfg.get("noise"))


def _protocol_config(sec: dict, k: int, x: int, transfer: str, noise: NoiseSpec | None, shots, seed: int) -> protocol.ProtocolConfig:
    K = sec.get("K", 4)
    coins = {lab: _coin(c) for lab, c in sec["coins"].items()} if "coins" in sec else {"A": COIN_A, "B": COIN_B}
    kwargs = {}
    if "decrypt_pattern" in sec:
        kwargs["decrypt_pattern"] = sec["decrypt_pattern"]
    try:
        return protocol.ProtocolConfig(
            K=K,
            message_k=k,
            init=WalkerInit(sec.get("theta", 0.0), sec.get("omega", 0.0), x, K),
            coins=coins,
            public_key_steps=sec.get("public_key_steps", 2),
            public_key_coin=sec.get("public_key_coin", "B"),
            transfer=transfer,
            noise=noise,
            shots=shots,
            seed=seed,
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _run_cell(cfg: protocol.ProtocolConfig) -> dict:
    return protocol.run_protocol(cfg).to_dict()


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_protocol(args, cfg: dict) -> None:
    sec = cfg.get("protocol", {})
    K = sec.get("K", 4)
    ks = _int_list(args.k) or _as_list(sec.get("k", list(range(K))))
    xs = _int_list(args.x) or _as_list(sec.get("x", 0))
    transfers = [args.transfer] if args.transfer else _as_list(sec.get("transfer", "swap-only"))
    noises = [_noise_from(n, args.seed) for n in _noise_cells(args, cfg)]
    cells = []
    for transfer in transfers:
        for noise in noises:
            for k in ks:
                for x in xs:
                    cells.append(_protocol_config(sec, k, x, transfer, noise, args.shots, args.seed))
    rep = Reporter(args, "protocol", {"protocol": sec, "noise": [n.to_dict() if n else None for n in noises], "k": ks, "x": xs, "transfer": transfers})
    transcripts = _map(_run_cell, cells, args.workers)
    rows = []
    for c, t in zip(cells, transcripts):
        tag = f"{c.transfer}_{_noise_tag(c.noise)}_k{c.message_k}_x{c.init.x}"
        rep.add_json(f"transcripts/{tag}.json", {"transcript": t})
        m = t["metrics"]
        rows.append(
            {
                "transfer": c.transfer,
                "noise": _noise_tag(c.noise),
                "k": c.message_k,
                "x": c.init.x,
                "k_prime": t["k_prime"],
                "recovered_k": t["recovered_k"],
                "p_correct": 1.0 - m["qber"],
                "hellinger_fidelity": m["hellinger_fidelity"],
                "tvd": m["tvd"],
                "depth": t["depth"]["depth"],
            }
        )
    rep.add_json("summary.json", {"rows": rows})
    rep.add_text("summary.csv", _csv(rows))
    rep.finish({"rows": rows}, rows)


# -- attack --------------------------------------------------------------------


def cmd_attack(args, cfg: dict) -> None:
    sec = cfg.get("attack", {})
    psec = cfg.get("protocol", {})
    n_seeds = _pick(args, sec, "n_seeds", 200)
    first = sec.get("first_seed", 0)
    basis = _pick(args, sec, "basis_choice", "random")
    reencode = _pick(args, sec, "reencode", "haar-random-unitary")
    threshold = _pick(args, sec, "threshold", 0.5)
    bb84_bits = _pick(args, sec, "compare_bb84")
    cells = _noise_cells(args, cfg)
    if len(cells) != 1:
        raise ConfigError("attack takes a single noise setting")
    noise = _noise_from(cells[0], args.seed)
    k = (_int_list(args.k) or _as_list(psec.get("k", 1)))[0]
    x = (_int_list(args.x) or _as_list(psec.get("x", 0)))[0]
    pcfg = _protocol_config(psec, k, x, "swap-only", noise, args.shots, args.seed)
    try:
        template = attacks.EveConfig(basis, reencode)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not 0.0 < threshold < 1.0:
        raise ConfigError("threshold must lie in (0, 1)")
    camp = attacks.eve_campaign(pcfg, template, range(first, first + n_seeds))
    per_seed = []
    for s, pc in zip(camp.seeds, camp.p_correct):
        det = attacks.mitm_detection_check(1.0 - pc, threshold)
        per_seed.append({"seed": s, "p_correct": pc, "qber": 1.0 - pc, "detected": det["detected"]})
    aggregate = {
        "n_seeds": n_seeds,
        "mean_p_correct": camp.mean_p_correct,
        "mean_qber": camp.mean_qber,
        "mean_distribution": camp.mean_distribution,
        "detected_fraction": float(np.mean([r["detected"] for r in per_seed])),
        "aggregate_detected": camp.mean_qber > threshold,
        "threshold": threshold,
    }
    echo = {"protocol": pcfg.to_dict(), "eve": template.to_dict() | {"first_seed": first}, "compare_bb84": bb84_bits}
    rep = Reporter(args, "attack", echo)
    body = {"aggregate": aggregate, "per_seed": per_seed}
    if bb84_bits:
        comparison = []
        for eve_present in (False, True):
            b = attacks.bb84_run(attacks.Bb84Config(bb84_bits, eve_present, args.seed))
            comparison.append({"protocol": "bb84", "eve": eve_present, "qber": b.qber, "sifted_length": b.sifted_length})
        clean = protocol.run_protocol(pcfg)
        comparison.append({"protocol": "dtqw", "eve": False, "qber": clean.qber, "sifted_length": None})
        comparison.append({"protocol": "dtqw", "eve": True, "qber": camp.mean_qber, "sifted_length": None})
        body["comparison"] = comparison
        rep.add_text("comparison.csv", _csv(comparison))
    rep.add_json("attack.json", body)
    rep.add_text("attack_seeds.csv", _csv(per_seed))
    rep.finish({"aggregate": aggregate, **({"comparison": body["comparison"]} if bb84_bits else {})}, [aggregate | {"mean_distribution": " ".join(f"{p:.6g}" for p in camp.mean_distribution)}])


# -- bb84 ----------------------------------------------------------------------


def cmd_bb84(args, cfg: dict) -> None:
    sec = cfg.get("bb84", {})
    n_bits = _pick(args, sec, "n_bits", 10_000)
    eve = args.eve if args.eve is not None else sec.get("eve", False)
    bit_flip = _pick(args, sec, "bit_flip", 0.0)
    log = args.log or sec.get("log", False)
    try:
        bcfg = attacks.Bb84Config(n_bits, eve, args.seed, bit_flip)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    result = attacks.bb84_run(bcfg)
    rep = Reporter(args, "bb84", bcfg.to_dict())
    body = {"result": result.to_dict()}
    rep.add_json("bb84.json", body)
    if log:
        rep.add_text("bb84_rounds.csv", result.round_log())
    rep.finish(body, [bcfg.to_dict() | result.to_dict()])


# -- route ---------------------------------------------------------------------


def _graph(name: str) -> routing.CouplingGraph:
    bundled = ("line:N", "ring:N", "complete:N", "heavy-hex:R,C")
    kind = name.partition(":")[0]
    if ":" in name and kind in ("line", "ring", "complete", "heavy-hex"):
        try:
            return routing.load_graph(name)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"graph {name!r}: {exc}") from None
    path = Path(name)
    if not path.is_file():
        raise ConfigError(f"unknown graph {name!r}; bundled graphs: {', '.join(bundled)} or an edge-list file")
    try:
        return routing.load_graph(path)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _layout(spec: str, g: routing.CouplingGraph, registers: dict) -> routing.LayoutAssignment:
    if spec in routing.BUNDLED_LAYOUTS:
        try:
            return routing.bundled_layout(spec, g, registers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"layout file {spec} not found (bundled layouts: {', '.join(routing.BUNDLED_LAYOUTS)})")
    try:
        return routing.load_layout(path)
    except ValueError as exc:
        raise ConfigError(f"{spec}: {exc}") from None


def cmd_route(args, cfg: dict) -> None:
    sec = cfg.get("routing", {})
    gname = _pick(args, sec, "graph", "heavy-hex:3,9")
    layouts = args.layout or sec.get("layouts", ["compact", "separated"])
    strategies = args.strategy or sec.get("strategies", ["swap-only"])
    g = _graph(gname)
    cases = []
    for strategy in strategies:
        pcfg = _protocol_config(cfg.get("protocol", {}), 1, 0, strategy, None, None, args.seed)
        circ = protocol.build_protocol_circuit(pcfg).circuit
        regs = protocol.protocol_registers(strategy)
        for spec in layouts:
            lay = _layout(spec, g, regs)
            if len(lay) < circ.n_qubits:
                raise ConfigError(f"layout {spec} places {len(lay)} qubits, {strategy} needs {circ.n_qubits}")
            cases.append(routing.LayoutCase(f"{strategy}/{Path(spec).name}", lay, circ))
    try:
        if len(cases) == 1:
            r = routing.route(cases[0].circuit, g, cases[0].layout)
            d = r.depth
            rows = [routing.LayoutRow(cases[0].name, g.name, r.inserted_swaps, d.depth, d.two_qubit_count, d.gate_count, r.modularity_preserved).to_dict()]
        else:
            rows = [row.to_dict() for row in routing.compare_layouts(cases[0].circuit, g, cases).rows]
    except ValueError as exc:
        raise RuntimeError(str(exc)) from exc
    rep = Reporter(args, "route", {"graph": g.name, "layouts": layouts, "strategies": strategies})
    rep.add_json("route.json", {"rows": rows})
    rep.add_text("route.csv", _csv(rows))
    rep.finish({"rows": rows}, rows)


# -- metrics -------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_metrics(args, cfg: dict) -> None:
    sec = cfg.get("metrics", {})
    ref = _floats(args.reference) if args.reference else sec.get("reference")
    obs = _floats(args.observed) if args.observed else sec.get("observed")
    correct = _pick(args, sec, "correct")
    if ref is None or obs is None:
        raise ConfigError("metrics needs --reference and --observed")
    try:
        if args.shots:
            from .qmath import Distribution, sample_counts

            counts = sample_counts(Distribution.from_array(np.asarray(obs) / np.sum(obs)), args.shots, args.seed)
            obs = [counts.get(i, 0) for i in range(len(obs))]
        report = metrics.compare(ref, obs, correct)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rep = Reporter(args, "metrics", {"reference": ref, "observed": obs, "correct": correct})
    body = {"metrics": report.to_dict()}
    rep.add_json("metrics.json", body)
    rep.finish(body, [report.to_dict()])


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="global seed (default 0)")
    common.add_argument("--shots", type=int, default=None, help="sample this many shots")
    common.add_argument("--out", default=None, help="output directory for report files")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="stdout format")
    common.add_argument("--workers", type=int, default=None, help="processes for sweeps")

    noise = argparse.ArgumentParser(add_help=False)
    noise.add_argument("--noise-mode", choices=MODES, default=None)
    noise.add_argument("--p1", type=float, default=None)
    noise.add_argument("--p2", type=float, default=None)
    noise.add_argument("--trajectory", action="store_true")
    noise.add_argument("--k", default=None, help="message(s), comma separated")
    noise.add_argument("--x", default=None, help="initial vertex/vertices, comma separated")

    ap = argparse.ArgumentParser(prog="parrondo-qwalk", description="Parrondo quantum-walk cryptography simulator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("period", parents=[common], help="periodicity of a coin or coin sequence")
    p.add_argument("--cycle", type=int, default=None)
    p.add_argument("--pattern", default=None, help="coin labels, e.g. AABB or A'A'B'B'")
    p.add_argument("--repeat", type=int, default=None)
    p.add_argument("--coin", default=None, help="single coin, e.g. s=1,g=0,d=0")
    p.add_argument("--t-max", dest="t_max", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)

    p = sub.add_parser("protocol", parents=[common, noise], help="run the protocol over a (k, x, noise) grid")
    p.add_argument("--transfer", choices=protocol.STRATEGIES, default=None)

    p = sub.add_parser("attack", parents=[common, noise], help="intercept-resend campaign")
    p.add_argument("--seeds", dest="n_seeds", type=int, default=None, help="number of Eve seeds")
    p.add_argument("--basis", dest="basis_choice", choices=attacks.BASIS_CHOICES, default=None)
    p.add_argument("--reencode", choices=attacks.REENCODINGS, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--compare-bb84", dest="compare_bb84", type=int, default=None, metavar="N_BITS")

    p = sub.add_parser("bb84", parents=[common], help="BB84 baseline")
    p.add_argument("--n-bits", dest="n_bits", type=int, default=None)
    p.add_argument("--eve", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--bit-flip", dest="bit_flip", type=float, default=None)
    p.add_argument("--log", action="store_true", help="write the per-round log")

    p = sub.add_parser("route", parents=[common], help="route protocol circuits on a coupling graph")
    p.add_argument("--graph", default=None, help="line:N, ring:N, complete:N, heavy-hex:R,C or an edge-list file")
    p.add_argument("--layout", action="append", default=None, help="compact, separated or a layout file (repeatable)")
    p.add_argument("--strategy", action="append", choices=protocol.STRATEGIES, default=None)

    p = sub.add_parser("metrics", parents=[common], help="compare two distributions")
    p.add_argument("--reference", default=None, help="comma-separated probabilities")
    p.add_argument("--observed", default=None, help="comma-separated probabilities or counts")
    p.add_argument("--correct", type=int, default=None)
    return ap


COMMANDS = {
    "period": cmd_period,
    "protocol": cmd_protocol,
    "attack": cmd_attack,
    "bb84": cmd_bb84,
    "route": cmd_route,
    "metrics": cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        args.seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        args.shots = args.shots if args.shots is not None else cfg.get("shots")
        args.out = args.out or cfg.get("out")
        args.format = args.format or cfg.get("format", "json")
        args.workers = args.workers or cfg.get("workers", 1)
        if args.seed < 0 or (args.shots is not None and args.shots < 1) or args.workers < 1:
            raise ConfigError("--seed must be >= 0, --shots and --workers >= 1")
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
