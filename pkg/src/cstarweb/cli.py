"""Command-line front end.

    cstarweb render  --lambda 32 --window -6,6,-6,6 --px 1024 --layer h-entry
    cstarweb trace   --kind preimage --window 0.05,3,-1,1 --resolution 401
    cstarweb verify  growth|halfline|channels|shadow [options]
    cstarweb topo    websheck|lift|separate --fixture circles-with-spoke

Exit status: 0 success, 1 a verification failed, 2 usage error. Every
artifact is written atomically and listed in ``<out>/manifest.json``.
Options may also come from a JSON file (``--config``); explicit flags win.
"""
import argparse
import hashlib
import json
import math
import os
import re
import sys

import numpy as np

from . import curves, fixtures, io, orbit, topology, verifier
from ._accel import default_backend
from .complex_map import MapParams, fixed_points_negative_axis
from .errors import CstarError
from .grids import GridSpec

DEFAULTS = {
    "lam": 32.0,
    "horizon": 12,
    "budget": 64,
    "px": "1024",
    "window": "-6,6,-6,6",
    "logpolar": None,
    "layer": "h-entry",
    "out": ".",
    "output": None,
    "threads": 0,
    "backend": None,
    "seed": 0,
    "kind": "preimage",
    "resolution": 401,
    "on_coarse": "raise",
    "n": None,
    "samples": None,
    "x_max": 60.0,
    "y_max": 60.0,
    "n_min": 5,
    "n_max": 50,
    "R": None,
    "L": 2.0,
    "K": 4.0,
    "parity": "auto",
    "chain": "constant",
    "steps": None,
    "depth": 60,
    "fixture": "circles-with-spoke",
    "size": None,
    "input": None,
    "cell": None,
    "point": None,
    "copies": 1,
}


class UsageError(Exception):
    pass


def _floats(text, count=None, name="value"):
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"bad {name}: {text!r}") from None
    if count is not None and len(vals) != count:
        raise UsageError(f"{name} needs {count} comma-separated numbers, got {text!r}")
    return vals


def _px(text):
    vals = [int(v) for v in _floats(text, name="--px")]
    if len(vals) == 1:
        vals *= 2
    if len(vals) != 2 or min(vals) <= 0:
        raise UsageError(f"bad --px {text!r}")
    return vals


def build_parser():
    p = argparse.ArgumentParser(prog="cstarweb", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--out", help="output directory (default: .)")
    p.add_argument("--threads", type=int, help="worker threads, 0 = auto (CSTAR_THREADS)")
    p.add_argument("--backend", choices=["numba", "numpy"])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--output", help="artifact path (relative to --out)")
        sp.add_argument("--seed", type=int)

    r = sub.add_parser("render", help="H-entry image or I_N complement raster")
    common(r)
    r.add_argument("--window", help="x0,x1,y0,y1 (cartesian)")
    r.add_argument("--logpolar", help="log10 r_min,log10 r_max (log-polar grid)")
    r.add_argument("--px", help="W or W,H")
    r.add_argument("--layer", choices=["h-entry", "i-complement"])
    r.add_argument("--horizon", type=int)
    r.add_argument("--budget", type=int)

    t = sub.add_parser("trace", help="trace implicit curves to CSV")
    common(t)
    t.add_argument("--kind", choices=["preimage", "barrier", "a-n-prime", "a-n"])
    t.add_argument("--window", help="x0,x1,y0,y1")
    t.add_argument("--resolution", type=int)
    t.add_argument("--n", type=int, help="index for a-n / a-n-prime")
    t.add_argument("--on-coarse", dest="on_coarse", choices=["raise", "skip"])

    v = sub.add_parser("verify", help="numerical checks; exit 1 on failure")
    vs = v.add_subparsers(dest="check", required=True)
    g = vs.add_parser("growth")
    common(g)
    g.add_argument("--x-max", dest="x_max", type=float)
    g.add_argument("--y-max", dest="y_max", type=float)
    g.add_argument("--samples", type=int)
    h = vs.add_parser("halfline")
    common(h)
    h.add_argument("--n-min", dest="n_min", type=int)
    h.add_argument("--n-max", dest="n_max", type=int)
    c = vs.add_parser("channels")
    common(c)
    c.add_argument("--R", type=float, help="channel radius (default: search by doubling)")
    c.add_argument("--L", type=float)
    c.add_argument("--K", type=float)
    c.add_argument("--samples", type=int)
    c.add_argument("--parity", choices=["as_written", "shifted", "auto"])
    s = vs.add_parser("shadow")
    common(s)
    s.add_argument("--chain", choices=["constant", "orbit"])
    s.add_argument("--point", help="re,im of the orbit start (orbit chain)")
    s.add_argument("--steps", type=int)
    s.add_argument("--depth", type=int)

    o = sub.add_parser("topo", help="raster topology checks")
    os_ = o.add_subparsers(dest="check", required=True)
    for name in ("websheck", "lift", "separate"):
        q = os_.add_parser(name)
        common(q)
        q.add_argument("--fixture", help=", ".join(fixtures.fixture_names()))
        q.add_argument("--input", help="PBM mask on a log-polar grid (with --logpolar)")
        q.add_argument("--logpolar", help="log10 r_min,log10 r_max for --input")
        q.add_argument("--n", type=int, help="number of circles")
        q.add_argument("--size", type=int)
        if name == "lift":
            q.add_argument("--copies", type=int)
        if name == "separate":
            q.add_argument("--cell", help="row,col")
    return p


def resolve(args):
    """Merge flags over the config file over defaults."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
    merged = dict(DEFAULTS)
    merged.update({k: v for k, v in cfg.items() if k in DEFAULTS})
    for k, v in vars(args).items():
        if v is not None:
            merged[k] = v
    return argparse.Namespace(**merged)


class Run:
    def __init__(self, cfg, argv):
        self.cfg = cfg
        self.argv = list(argv)
        self.artifacts = []

    def path(self, default):
        return os.path.join(self.cfg.out, self.cfg.output or default)

    def emit(self, path, data, kind, params):
        io.atomic_write_bytes(path, data)
        self.artifacts.append({"path": os.path.relpath(path, self.cfg.out), "kind": kind,
                               "sha256": hashlib.sha256(data).hexdigest(), "params": params})
        print(path)

    def emit_json(self, path, obj, kind, params):
        text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False, default=_jsonable)
        self.emit(path, (text + "\n").encode(), kind, params)

    def finish(self):
        mpath = os.path.join(self.cfg.out, "manifest.json")
        entries = {}
        if os.path.exists(mpath):
            try:
                with open(mpath) as fh:
                    entries = {e["path"]: e for e in json.load(fh).get("artifacts", [])}
            except (OSError, ValueError, KeyError, AttributeError):
                entries = {}
        for a in self.artifacts:
            entries[a["path"]] = dict(a, argv=self.argv)
        doc = {"artifacts": [entries[k] for k in sorted(entries)]}
        io.write_json(mpath, doc)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _clean(obj):
    """Replace non-finite floats so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


# -- commands -----------------------------------------------------------------


def _grid(cfg):
    w, h = _px(cfg.px)
    if cfg.logpolar:
        lo, hi = _floats(cfg.logpolar, 2, "--logpolar")
        return GridSpec.logpolar(lo, hi, w, h)
    x0, x1, y0, y1 = _floats(cfg.window, 4, "--window")
    return GridSpec.cartesian(x0, x1, y0, y1, w, h)


def cmd_render(run):
    cfg = run.cfg
    params = MapParams(cfg.lam).require(2.0, "render")
    grid = _grid(cfg)
    backend = cfg.backend or default_backend()
    meta = {"lambda": params.lam, "grid": grid.to_dict(), "horizon": cfg.horizon,
            "budget": cfg.budget, "layer": cfg.layer, "backend": backend}
    if cfg.layer == "h-entry":
        img = orbit.render(params, grid, cfg.budget, cfg.horizon, orbit.H_ENTRY_TIME,
                           threads=cfg.threads, backend=backend)
        run.emit(run.path("render.ppm"), io.ppm_bytes(img), "ppm", meta)
    else:
        r = orbit.render(params, grid, cfg.budget, cfg.horizon, orbit.I_COMPLEMENT,
                         threads=cfg.threads, backend=backend)
        run.emit(run.path("i_complement.pbm"), io.pbm_bytes(r.mask), "pbm", meta)
    return 0


def cmd_trace(run):
    cfg = run.cfg
    params = MapParams(cfg.lam)
    meta = {"lambda": params.lam, "kind": cfg.kind, "resolution": cfg.resolution,
            "on_coarse": cfg.on_coarse}
    if cfg.kind == "a-n":
        if not cfg.n:
            raise UsageError("--n is required for a-n")
        lines = [curves.approx_A_n(cfg.n)]
        meta["n"] = cfg.n
    else:
        window = _floats(cfg.window, 4, "--window")
        meta["window"] = window
        if cfg.kind == "preimage":
            lines = curves.trace_preimage_rplus(params, window, cfg.resolution, cfg.on_coarse)
        elif cfg.kind == "barrier":
            lines = curves.trace_barrier(window, cfg.resolution, cfg.on_coarse)
        else:
            if not cfg.n:
                raise UsageError("--n is required for a-n-prime")
            meta["n"] = cfg.n
            lines = [curves.approx_A_n_prime(cfg.n, window, cfg.resolution, cfg.on_coarse)]
    meta["polylines"] = len(lines)
    data = io.csv_bytes(curves.CSV_HEADER, curves.curves_rows(lines))
    run.emit(run.path(f"trace_{cfg.kind}.csv"), data, "csv", meta)
    return 0


def _report(run, name, reports, meta):
    reports = reports if isinstance(reports, list) else [reports]
    ok = all(r.passed for r in reports)
    doc = [_clean(r.to_dict()) for r in reports]
    run.emit_json(run.path(f"verify_{name}.json"), doc if len(doc) > 1 else doc[0], "json", meta)
    for r in reports:
        print(f"{r.lemma}: {'PASS' if r.passed else 'FAIL'} worst_margin={r.worst_margin:.6g}",
              file=sys.stderr)
    return 0 if ok else 1


def cmd_verify(run):
    cfg = run.cfg
    params = MapParams(cfg.lam)
    if cfg.check == "growth":
        samples = cfg.samples or 1_000_000
        rep = verifier.verify_growth(params, cfg.x_max, cfg.y_max, samples)
        return _report(run, "growth", rep, {"lambda": params.lam, "samples": samples})
    if cfg.check == "halfline":
        params.require(32.0, "verify halfline")
        rep = verifier.verify_halfline(params, range(cfg.n_min, cfg.n_max + 1))
        return _report(run, "halfline", rep, {"lambda": params.lam, "n": [cfg.n_min, cfg.n_max]})
    if cfg.check == "channels":
        samples = cfg.samples or 10_000
        if cfg.R is None:
            R, reps = verifier.find_channel_radius(params, cfg.L, cfg.K, samples, parity=cfg.parity)
        else:
            R = cfg.R
            reps = verifier.verify_channels(params, R, cfg.L, cfg.K, samples, parity=cfg.parity)
        return _report(run, "channels", reps, {"lambda": params.lam, "R": R, "L": cfg.L,
                                                "K": cfg.K, "parity": cfg.parity})
    # shadow
    params.require(2.0, "verify shadow")
    if cfg.chain == "constant":
        fp = fixed_points_negative_axis(params)
        if not fp:
            raise UsageError("no negative fixed point for this lambda")
        steps = cfg.steps if cfg.steps is not None else 20
        chain = verifier.constant_chain(fp[0], 0.04, steps)
        start = fp[0]
    else:
        start = complex(*_floats(cfg.point or "3,0", 2, "--point"))
        steps = cfg.steps if cfg.steps is not None else 6
        chain = verifier.orbit_chain(params, start, steps)
    z = verifier.shadow_orbit(params, chain, cfg.depth)
    ok = verifier.verify_shadow(params, chain, z)
    rep = verifier.MarginReport("shadow", len(chain), 0.0 if ok else -1.0, z,
                                {"lambda": params.lam, "chain": cfg.chain, "steps": steps},
                                {"start": start, "distance": abs(z - start),
                                 "boxes": [b.to_dict() for b in chain.boxes]})
    return _report(run, "shadow", rep, {"lambda": params.lam, "chain": cfg.chain, "steps": steps})


def _load_raster(cfg):
    if cfg.input:
        if not cfg.logpolar:
            raise UsageError("--input needs --logpolar bounds")
        lo, hi = _floats(cfg.logpolar, 2, "--logpolar")
        mask = io.read_pbm(cfg.input)
        return topology.RasterSet(GridSpec.logpolar(lo, hi, mask.shape[1], mask.shape[0]), mask)
    extra = {"n": cfg.n, "size": cfg.size}
    return fixtures.fixture(cfg.fixture, seed=cfg.seed, **extra)


def cmd_topo(run):
    cfg = run.cfg
    r = _load_raster(cfg)
    meta = {"fixture": None if cfg.input else cfg.fixture, "input": cfg.input, "n": cfg.n,
            "size": cfg.size, "seed": cfg.seed, "grid": r.grid.to_dict()}
    if cfg.check == "websheck":
        if r.grid.mode != "logpolar":
            r = topology.exp_project(r)
        ok, witness = topology.is_cstar_spiders_web(r)
        doc = {"is_cstar_spiders_web": ok, "rings": len(witness),
               "witness": topology.witness_report(witness)}
        run.emit_json(run.path("websheck.json"), doc, "json", meta)
        return 0 if ok else 1
    if cfg.check == "lift":
        lifted = topology.exp_lift(r, cfg.copies)
        ok = topology.is_plane_spiders_web(lifted)
        meta["copies"] = cfg.copies
        run.emit(run.path("lift.pbm"), io.pbm_bytes(lifted.mask), "pbm",
                 dict(meta, strip=lifted.grid.to_dict()))
        run.emit_json(run.path("lift.json"), {"plane_spiders_web": ok,
                                              "strip": lifted.grid.to_dict()}, "json", meta)
        return 0 if ok else 1
    # separate
    if cfg.cell:
        cell = tuple(int(v) for v in _floats(cfg.cell, 2, "--cell"))
    else:
        cell = (r.grid.height // 2, r.grid.width // 2)
    if r.mask[cell]:
        raise UsageError(f"cell {cell} lies in the set")
    ok = topology.separates(r, cell)
    run.emit_json(run.path("separate.json"), {"cell": list(cell), "separated": ok}, "json",
                  dict(meta, cell=list(cell)))
    return 0 if ok else 1


COMMANDS = {"render": cmd_render, "trace": cmd_trace, "verify": cmd_verify, "topo": cmd_topo}


def _attach_negative_values(argv):
    """Let ``--window -6,6,-6,6`` parse: argparse would read the value as a flag."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None
                and re.match(r"^-[0-9.]", nxt)):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_attach_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        if cfg.threads is not None:
            cfg.threads = int(cfg.threads)
        r = Run(cfg, argv)
        code = COMMANDS[cfg.command](r)
        r.finish()
        return code
    except (UsageError, ValueError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"cstarweb: error: {exc}", file=sys.stderr)
        return 2
    except CstarError as exc:
        print(f"cstarweb: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
