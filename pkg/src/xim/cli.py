"""Command-line front end: ``xim {train,embed,evaluate,plot,synth}``.

Exit codes
----------
0  success
1  unexpected internal error
2  invalid configuration (unknown key, bad value, bad flag)
3  data error (missing/unreadable file, parse or structure error)
4  dimension mismatch between model and data
5  plot input is not two-dimensional

One ``key=value`` config file drives every command; ``--set KEY=VALUE``
and the dedicated flags override it (flags > file > defaults).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import analysis
from .core import (
    ConfigError,
    Dataset,
    DissimilarityMatrix,
    DomainError,
    ParseError,
    PrototypeSet,
    ShapeError,
    StructureError,
    TrainConfig,
    build_lattice,
    format_float,
    load_dataset,
    load_dissimilarity,
    load_lattice,
    save_dataset,
)
from .kernels import KernelSpec
from .mapping import embed_dataset, embed_from_distances
from .model import ModelFile, load_model, save_model
from .plot import scatter_svg

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DATA, EXIT_DIM, EXIT_PLOT = 0, 1, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# Config file
# --------------------------------------------------------------------------


def _bool(v):
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_int(v):
    return None if v.strip().lower() in ("", "none") else int(v)


def _list(v):
    return [s.strip() for s in v.split(",") if s.strip()]


KEYS = {
    "method": str,
    "methods": _list,
    "rows": int,
    "cols": int,
    "topology": str,
    "lattice_file": str,
    "t_max": int,
    "epsilon_start": float,
    "epsilon_end": float,
    "sigma_start": float,
    "sigma_end": float,
    "gamma_start": float,
    "gamma_end": float,
    "eta": float,
    "h_family": str,
    "best_match": str,
    "bandwidth": str,
    "k_start": float,
    "k_end": float,
    "perplexity": float,
    "weighting": str,
    "prefactor": _bool,
    "seed": int,
    "init": str,
    "log_stride": int,
    "damping": float,
    "max_iters": int,
    "tol": float,
    "anneal_iters": _opt_int,
    "candidates": str,
    "power": float,
    "runs": int,
    "fraction": float,
    "k_min": int,
    "k_max": int,
    "delimiter": str,
    "header": _bool,
    "label_column": _opt_int,
    "id_column": _opt_int,
    "data_kind": str,
}

DEFAULTS = {
    "rows": 10,
    "cols": 10,
    "topology": "rectangular",
    "power": 2.0,
    "runs": 10,
    "fraction": 0.95,
    "k_min": 1,
    "k_max": 50,
    "header": False,
    "data_kind": "vectors",
    "candidates": "all",
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(EXIT_CONFIG, f"{source}:{n}: expected key=value, got {raw.strip()!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = _convert(k, v, f"{source}:{n}")
    return out


def _convert(key, value, where):
    if key not in KEYS:
        raise CliError(EXIT_CONFIG, f"{where}: unknown config key {key!r}")
    try:
        return KEYS[key](value)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"{where}: bad value for {key!r}: {exc}") from None


def load_settings(config_path=None, overrides=()) -> dict:
    settings = dict(DEFAULTS)
    if config_path is not None:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(EXIT_DATA, f"cannot read config {config_path}: {exc}") from None
        settings.update(parse_config_text(text, str(config_path)))
    for item in overrides:
        if "=" not in item:
            raise CliError(EXIT_CONFIG, f"--set expects KEY=VALUE, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        settings[k] = _convert(k, v, "--set")
    return settings


def _pair(settings, name):
    a, b = settings.get(f"{name}_start"), settings.get(f"{name}_end")
    if a is None and b is None:
        return None
    if a is None or b is None:
        raise CliError(EXIT_CONFIG, f"{name}_start and {name}_end must be given together")
    return (a, b)


def train_config(settings, method=None) -> TrainConfig:
    names = {f.name for f in fields(TrainConfig)}
    kw = {k: v for k, v in settings.items() if k in names}
    if method is not None:
        kw["method"] = method
    for name in ("epsilon", "sigma", "gamma", "k"):
        p = _pair(settings, name)
        if p is not None:
            kw[name] = p
    try:
        return TrainConfig(**kw)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"invalid configuration: {exc}") from None


def lattice_from(settings):
    try:
        if settings.get("lattice_file"):
            return load_lattice(settings["lattice_file"])
        return build_lattice(settings["rows"], settings["cols"], settings["topology"])
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"invalid lattice: {exc}") from None


def read_dataset(path, settings) -> Dataset:
    return load_dataset(
        path,
        delimiter=settings.get("delimiter"),
        header=settings.get("header", False),
        label_column=settings.get("label_column"),
        id_column=settings.get("id_column"),
    )


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _config_echo(cfg: TrainConfig, settings) -> dict:
    meta = {}
    for f in fields(TrainConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(format_float(x) for x in v)
        elif isinstance(v, float):
            v = format_float(v)
        meta[f"config.{f.name}"] = v
    for k in ("rows", "cols", "topology", "power", "data_kind", "candidates"):
        meta[f"config.{k}"] = settings[k] if not isinstance(settings[k], float) else format_float(settings[k])
    return meta


def cmd_train(args) -> int:
    from .train_batch import batch_xim_train, median_xim_train
    from .train_online import train

    settings = load_settings(args.config, args.set)
    if args.seed is not None:
        settings["seed"] = args.seed
    cfg = train_config(settings)
    if cfg.method == "pca":
        raise CliError(EXIT_CONFIG, "method 'pca' has no trainable model; use evaluate")
    lattice = lattice_from(settings)
    log_path = Path(args.log) if args.log else Path(str(args.output) + ".log")
    meta = _config_echo(cfg, settings)
    protos = medians = None
    cost = float("nan")
    data_kind = settings["data_kind"]
    if data_kind not in ("vectors", "dissimilarity"):
        raise CliError(EXIT_CONFIG, f"data_kind must be 'vectors' or 'dissimilarity', got {data_kind!r}")
    if data_kind == "dissimilarity" and cfg.method != "median-xim":
        raise CliError(EXIT_CONFIG, "dissimilarity input requires method=median-xim")

    if cfg.method == "median-xim":
        if data_kind == "dissimilarity":
            diss = load_dissimilarity(args.data, settings.get("delimiter"))
        else:
            data = read_dataset(args.data, settings)
            diss = DissimilarityMatrix.from_points(data.points)
        state = median_xim_train(diss, lattice, cfg, cfg.max_iters, settings["candidates"])
        medians = state.medians
        if data_kind == "vectors":
            protos = data.points[medians]
        cost = float(state.costs.sum())
        rows = [(i + 1, format_float(float(new.sum()))) for i, (_, new) in enumerate(state.cost_trace)]
        _write_log(log_path, ("iteration", "weighted_cost"), rows)
        meta["converged"] = str(state.converged).lower()
        t_label = state.iterations
    else:
        data = read_dataset(args.data, settings)
        if cfg.method == "batch-xim":
            rep = batch_xim_train(data.points, lattice, cfg)
            w = rep.prototypes.weights
            rows = [(i + 1, format_float(r)) for i, r in enumerate(rep.history)]
            _write_log(log_path, ("iteration", "residual"), rows)
            meta["converged"] = str(rep.converged).lower()
            meta["stationarity"] = format_float(rep.stationarity)
            from .train_online import default_gamma, default_sigma

            sig = (cfg.sigma or default_sigma(lattice))[1]
            gam = (cfg.gamma or default_gamma(data.points))[1]
            t_label = rep.iterations
        else:
            res = train(data.points, lattice, cfg)
            w = res.prototypes.weights
            rows = [
                (int(r["t"]), format_float(r["epsilon"]), format_float(r["sigma"]), format_float(r["gamma"]), int(r["winner"]))
                for r in res.log
            ]
            _write_log(log_path, ("t", "epsilon", "sigma", "gamma", "winner"), rows)
            sig, gam = res.final_sigma, res.final_gamma
            t_label = cfg.t_max
        protos = w
        h = KernelSpec(cfg.kernel_family, sig)
        g = KernelSpec("gaussian", gam)
        cost = analysis.xim_cost(data.points, PrototypeSet(w, lattice), lattice, h, g).total
        meta["final_sigma"] = format_float(sig)
        meta["final_gamma"] = format_float(gam)
    meta["cost"] = format_float(cost)
    save_model(ModelFile(cfg.method, cfg.seed, lattice.nodes, protos, medians, meta), args.output)
    print(f"method={cfg.method} M={lattice.m} t_max={t_label} cost={format_float(cost)}")
    return EXIT_OK


def _write_log(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")


def write_embedding(path, coords, ids=None, labels=None):
    d = coords.shape[1]
    header = (["id"] if ids is not None else []) + [f"y{i + 1}" for i in range(d)]
    header += ["label"] if labels is not None else []
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i, row in enumerate(coords):
            cells = ([ids[i]] if ids is not None else []) + [format_float(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def read_embedding(path):
    """Returns (coords, ids or None, labels or None) from an embedding file."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise StructureError(f"empty embedding file {path}")
    header = lines[0].split(",")
    ycols = [i for i, h in enumerate(header) if h.startswith("y")]
    if not ycols:
        raise StructureError("embedding header has no coordinate columns")
    coords, ids, labels = [], [], []
    for r, ln in enumerate(lines[1:]):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise StructureError(f"embedding row {r} has {len(cells)} cells, expected {len(header)}")
        try:
            coords.append([float(cells[i]) for i in ycols])
        except ValueError:
            raise ParseError(r, ycols[0], ln, path) from None
        if "id" in header:
            ids.append(cells[header.index("id")])
        if "label" in header:
            labels.append(cells[header.index("label")])
    return np.array(coords, dtype=float), ids or None, labels or None


def cmd_embed(args) -> int:
    settings = load_settings(args.config, args.set)
    model = load_model(args.model)
    nodes = model.nodes
    power = float(model.meta.get("config.power", settings["power"]))
    if model.meta.get("config.data_kind") == "dissimilarity":
        q = np.array(_read_rows(args.data, settings), dtype=float)
        n_train = int(max(model.medians)) + 1
        if q.ndim != 2 or q.shape[1] < n_train:
            raise CliError(EXIT_DIM, f"dissimilarity rows need at least {n_train} columns, got {q.shape}")
        coords = embed_from_distances(q[:, model.medians], nodes, power)
        write_embedding(args.output, coords)
        return EXIT_OK
    data = read_dataset(args.data, settings)
    if model.prototypes is None:
        raise CliError(EXIT_DATA, "model has no prototype vectors")
    if data.dim != model.dim:
        raise CliError(EXIT_DIM, f"model dimension {model.dim} does not match data dimension {data.dim}")
    from .mapping import ReferencePairs

    emb = embed_dataset(data, ReferencePairs(model.prototypes, nodes), power)
    write_embedding(args.output, emb.coords, data.ids, data.labels)
    return EXIT_OK


def _read_rows(path, settings):
    from .core import _read_numeric_rows

    return _read_numeric_rows(path, settings.get("delimiter"), settings.get("header", False))


def cmd_evaluate(args) -> int:
    settings = load_settings(args.config, args.set)
    for key in ("runs", "fraction", "k_min", "k_max", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            settings[key] = val
    if args.methods:
        settings["methods"] = _list(args.methods)
    data = read_dataset(args.data, settings)
    methods = settings.get("methods") or [settings.get("method", "c-xim")]
    seed = settings.get("seed", 0)
    reports = []
    for m in methods:
        cfg = train_config(settings, method=m)
        spec = analysis.MethodSpec(m, cfg, settings["rows"], settings["cols"], settings["topology"], settings["power"])
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = analysis.evaluate_protocol(
                data.points, spec, settings["runs"], settings["fraction"], (settings["k_min"], settings["k_max"]), seed
            )
        reports.append(rep)
    prefix = Path(args.output)
    table = analysis.format_table(reports)
    notes = sorted({n for r in reports for n in r.notes})
    if notes:
        table += "".join(f"# note: {n}\n" for n in notes)
    Path(str(prefix) + ".txt").write_text(table, encoding="utf-8")
    Path(str(prefix) + ".kv").write_text(analysis.format_keyvalue(reports), encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


def cmd_plot(args) -> int:
    coords, _, labels = read_embedding(args.embedding)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise CliError(EXIT_PLOT, f"plot needs a 2-D embedding, got {coords.shape[1]} columns")
    if args.labels:
        with open(args.labels, "r", encoding="utf-8") as fh:
            labels = [ln.strip() for ln in fh if ln.strip()]
        if len(labels) != len(coords):
            raise CliError(EXIT_DATA, f"{len(labels)} labels for {len(coords)} points")
    svg = scatter_svg(coords, labels, title=args.title)
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import make_clusters

    try:
        sizes = [int(s) for s in args.clusters.split(",")]
    except ValueError:
        raise CliError(EXIT_CONFIG, f"--clusters expects comma separated integers, got {args.clusters!r}") from None
    data = make_clusters(args.n, args.dims, sizes, args.separation, args.seed)
    save_dataset(data, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="xim",
        description="Topographic embedding with XIM, t-XIM, c-XIM, batch and median XIM.",
        epilog="exit codes: 0 ok, 1 internal error, 2 configuration error, 3 data error, "
        "4 model/data dimension mismatch, 5 plot input not 2-D",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key=value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")

    sp = sub.add_parser("train", help="train a model")
    sp.add_argument("data")
    sp.add_argument("output", help="model file to write")
    common(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--log", help="training log path (default: <output>.log)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("embed", help="map data through a trained model")
    sp.add_argument("model")
    sp.add_argument("data")
    sp.add_argument("output")
    common(sp)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("evaluate", help="subsampled multi-run quality evaluation")
    sp.add_argument("data")
    sp.add_argument("output", help="report prefix; writes <prefix>.txt and <prefix>.kv")
    common(sp)
    sp.add_argument("--methods", help="comma separated method list")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--fraction", type=float)
    sp.add_argument("--k-min", dest="k_min", type=int)
    sp.add_argument("--k-max", dest="k_max", type=int)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("plot", help="SVG scatter of a 2-D embedding")
    sp.add_argument("embedding")
    sp.add_argument("output")
    sp.add_argument("--labels", help="file with one label per line (overrides the label column)")
    sp.add_argument("--title")
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("synth", help="write a labelled two-cluster surrogate dataset")
    sp.add_argument("output")
    sp.add_argument("--n", type=int, default=147)
    sp.add_argument("--dims", type=int, default=79)
    sp.add_argument("--clusters", default="22,125")
    sp.add_argument("--separation", type=float, default=6.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"xim: error: {exc}", file=sys.stderr)
        return exc.code
    except ShapeError as exc:
        print(f"xim: dimension error: {exc}", file=sys.stderr)
        return EXIT_DIM
    except ConfigError as exc:
        print(f"xim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ParseError, StructureError, DomainError) as exc:
        print(f"xim: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last resort, keeps the exit-code contract
        print(f"xim: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
