"""Command-line interface: ``invdesign <command> [options]``.

Exit status is 0 on success, 2 when the analysis returns a negative verdict
(target not reachable, constraint infeasible, candidate rejected, road too
long) and 1 on errors such as malformed input.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .design import design, flat_design, membership, sample_design, tv_and_hull_report, write_envelope
from .exceptions import ConstraintInfeasible, InverseDesignError, NotReachable
from .flux import make_flux
from .forward import evolve, godunov
from .localization import LocalizedTarget, restricted_design
from .profile import SampledProfile, read_profile_csv, resample, write_profile_csv
from .reachability import contact_set, oleinik_check, pi_map
from .svg import line_plot, step_xy
from .traffic import (OutflowRecord, admissible_inflow, detect_events, inflow_envelope,
                      max_road_length, upstream_window)

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


class CliError(Exception):
    """User-facing error with a one-line message."""


# ---------------------------------------------------------------- helpers

def _pair(text, name):
    try:
        a, b = (float(v) for v in str(text).split(","))
    except ValueError:
        raise CliError(f"{name} must be two comma-separated numbers, got {text!r}") from None
    if a > b:
        raise CliError(f"{name} must satisfy a <= b, got {text!r}")
    return a, b


def _flux(text):
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise CliError(f"cannot read flux file {text[1:]}: {exc.strerror}") from None
    try:
        return make_flux(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"flux specification is not valid JSON: {exc.msg}") from None


def _load(path, args):
    u = read_profile_csv(path)
    if args.grid_dx is not None:
        u = resample(u, args.grid_dx)
    return u


def _clean(obj):
    """JSON-safe copy: numpy scalars to floats, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isfinite(x):
            return x
        return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def _dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


class Output:
    def __init__(self, args):
        self.dir = Path(args.out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.format = args.format
        self.svg = args.svg
        self.quiet = getattr(args, "quiet", False)

    def json(self, name, obj, echo=True):
        p = self.dir / f"{name}.json"
        p.write_text(_dumps(obj))
        if echo and not self.quiet:
            sys.stdout.write(_dumps(obj))
        return p

    def profile(self, name, u: SampledProfile, header=("x", "value")):
        if self.format == "json":
            p = self.dir / f"{name}.json"
            p.write_text(_dumps({header[0]: u.grid.right.tolist(), header[1]: u.values.tolist()}))
            return p
        return write_profile_csv(u, self.dir / f"{name}.csv", header)

    def table(self, name, header, rows):
        if self.format == "json":
            cols = list(zip(*rows)) if rows else [[] for _ in header]
            p = self.dir / f"{name}.json"
            p.write_text(_dumps({h: [float(v) for v in c] for h, c in zip(header, cols)}))
            return p
        p = self.dir / f"{name}.csv"
        with p.open("w") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(repr(float(v)) for v in r) + "\n")
        return p

    def plot(self, name, series, title, xlabel="x"):
        if self.svg:
            line_plot(self.dir / f"{name}.svg", series, title, xlabel=xlabel)


# ---------------------------------------------------------------- commands

def cmd_reach(args, out):
    u = _load(args.input, args)
    flux = _flux(args.flux)
    v = oleinik_check(u, flux, args.T, args.slack)
    res = v.to_dict()
    if v.ok:
        cs = contact_set(pi_map(u, flux, args.T, args.slack))
        res["gaps"] = [g.to_dict() for g in cs.gaps]
        res["dependency_interval"] = list(cs.hull)
    out.json("reach", res)
    return EXIT_OK if v.ok else EXIT_VERDICT


def _design_verdict(env, u_T):
    return {
        "reachable": True,
        "T": env.T,
        "J": list(env.J),
        "x_check": env.x_check,
        "y_check": env.y_check,
        "window": [env.grid_o.x0, env.grid_o.x1],
        "gaps": [g.to_dict() for g in env.contact.gaps],
        "report": tv_and_hull_report(u_T, env),
    }


def cmd_design(args, out):
    u = _load(args.input, args)
    flux = _flux(args.flux)
    J = _pair(args.J, "--J") if args.J else None
    window = _pair(args.window, "--window") if args.window else None
    compact = J is not None and np.all(np.isfinite(J))
    build = design if compact else flat_design
    env = build(u, flux, args.T, J, args.x_check, window, args.slack)
    if compact:
        write_envelope(env, out.dir / "envelope.csv")
        for i in range(args.samples):
            s = sample_design(env, seed=None if args.seed is None else args.seed + i)
            out.profile(f"sample_{i:03d}", s)
    else:
        out.profile("u_flat", env.u_flat)
    series = [("u_flat", *step_xy(env.u_flat))]
    if compact:
        series.append(("u_sharp", *step_xy(env.u_sharp)))
    out.plot("envelope", series, "initial-data envelopes")
    out.json("design", _design_verdict(env, u))
    return EXIT_OK


def cmd_member(args, out):
    u = _load(args.input, args)
    cand = _load(args.candidate, args)
    flux = _flux(args.flux)
    env = design(u, flux, args.T, _pair(args.J, "--J"), args.x_check, None, args.slack)
    v = membership(cand, env)
    out.json("member", v.to_dict())
    return EXIT_OK if v.member else EXIT_VERDICT


def cmd_evolve(args, out):
    u = _load(args.input, args)
    flux = _flux(args.flux)
    window = _pair(args.window, "--window") if args.window else None
    if args.scheme == "hopflax":
        v = evolve(u, flux, args.t, window=window)
    else:
        v = godunov(u, flux, args.t, cfl=args.cfl, window=window)
    p = out.profile("evolved", v)
    out.plot("evolved", [("u_0", *step_xy(u)), (f"u_{args.t:g}", *step_xy(v))], "evolution")
    out.json("evolve", {"t": args.t, "scheme": args.scheme, "output": p.name,
                        "window": [v.grid.x0, v.grid.x1]})
    return EXIT_OK


def cmd_localize(args, out):
    u = _load(args.input, args)
    flux = _flux(args.flux)
    x1, x2 = _pair(args.window, "--window") if args.window else (u.grid.x0, u.grid.x1)
    J = _pair(args.J, "--J")
    target = LocalizedTarget((x1, x2), u.restrict(x1, x2), J, args.T)
    rd = restricted_design(target, flux, args.x_check, args.slack)
    env = rd.envelope
    if env.has_sharp:
        write_envelope(env, out.dir / "restricted.csv")
    else:
        out.profile("u_flat", env.u_flat)
    res = _design_verdict(env, target.profile)
    res.update({"K_o": list(rd.K_o), "degenerate": rd.degenerate,
                "point_value": rd.point_value})
    out.json("localize", res)
    return EXIT_OK


def _scenario(path):
    p = Path(path)
    try:
        sc = json.loads(p.read_text())
    except OSError as exc:
        raise CliError(f"cannot read scenario {p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"scenario {p} is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(sc, dict):
        raise CliError(f"scenario {p} must be a JSON object")
    return sc, p.parent


def run_traffic(sc, base, args, out):
    spec = {"kind": "traffic", "rho_bar": sc.get("rho_bar")}
    law = sc.get("speed_law", "greenshields")
    spec["speed"] = law
    for k in ("vmax", "R"):
        if k in sc:
            spec[k] = sc[k]
    flux = make_flux(spec)
    source = getattr(args, "input", None) or sc.get("outflow")
    if source is None:
        raise CliError("no outflow record: pass --input or set 'outflow' in the scenario")
    src = Path(source)
    if not src.is_absolute() and not src.exists():
        src = base / src
    q = _load(src, args)
    if "T1" in sc or "T2" in sc:
        q = q.restrict(float(sc.get("T1", q.grid.x0)), float(sc.get("T2", q.grid.x1)))
    rec = OutflowRecord(q, flux.q_bar)
    rep = max_road_length(rec, flux)
    verdict = {"q_bar": flux.q_bar, "T1": rec.T1, "T2": rec.T2, **rep.to_dict()}
    L = sc.get("L")
    if L is None:
        out.json("verdict", verdict)
        return EXIT_OK if rep.feasible else EXIT_VERDICT
    L = float(L)
    verdict["L"] = L
    verdict["reachable"] = rep.admits(L)
    if not rep.admits(L) or L == 0:
        out.json("verdict", verdict)
        return EXIT_VERDICT if not rep.admits(L) else EXIT_OK
    verdict["window"] = list(upstream_window(rec, L, flux))
    env = inflow_envelope(rec, L, flux)
    out.table("inflow_envelope", ("tau", "q_flat", "q_sharp", "Q_flat"), list(env.rows()))
    events = detect_events(env, sc.get("kink_threshold"))
    out.json("events", [e.to_dict() for e in events], echo=False)
    if "inflow" in sc:
        qi = Path(sc["inflow"])
        qi = qi if qi.is_absolute() or qi.exists() else base / qi
        verdict["inflow"] = admissible_inflow(_load(qi, args), env).to_dict()
    verdict["events"] = len(events)
    out.plot("inflow", [("q_flat", *step_xy(env.q_flat)), ("q_sharp", *step_xy(env.q_sharp))],
             "inflow envelopes", xlabel="tau")
    out.json("verdict", verdict)
    return EXIT_OK


def cmd_traffic(args, out):
    sc, base = _scenario(args.scenario)
    return run_traffic(sc, base, args, out)


def _batch_one(path, args):
    sub = argparse.Namespace(**vars(args))
    sub.out_dir = str(Path(args.out_dir) / Path(path).stem)
    sub.input = None
    sub.quiet = True
    out = Output(sub)
    try:
        sc, base = _scenario(path)
        code = run_traffic(sc, base, sub, out)
        return {"scenario": str(path), "exit": code}
    except (NotReachable, ConstraintInfeasible) as exc:
        return {"scenario": str(path), "exit": EXIT_VERDICT, "message": str(exc)}
    except (CliError, InverseDesignError, ValueError, OSError) as exc:
        return {"scenario": str(path), "exit": EXIT_ERROR, "message": str(exc)}


def cmd_batch(args, out):
    paths = sorted(args.scenarios)
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda p: _batch_one(p, args), paths))
    out.json("batch", {"results": results})
    codes = [r["exit"] for r in results]
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_VERDICT if EXIT_VERDICT in codes else EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="invdesign", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-dx", type=float, default=None,
                        help="conservatively resample input profiles to this spacing")
    common.add_argument("--out-dir", default=".", help="directory for output artifacts")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="format of emitted profiles")
    common.add_argument("--seed", type=int, default=None, help="seed for random sampling")
    common.add_argument("--svg", action="store_true", help="also write SVG line plots")
    sub = p.add_subparsers(dest="command", required=True)

    def target_cmd(name, help_):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--input", required=True, help="target profile CSV (x,value)")
        s.add_argument("--flux", default="burgers", help="flux name, JSON object or @file")
        s.add_argument("--T", type=float, required=True, help="horizon")
        s.add_argument("--slack", type=float, default=None,
                       help="tolerance added to 1/T in the Oleinik test")
        return s

    target_cmd("reach", "decide whether the target is reachable")
    s = target_cmd("design", "flat and sharp initial-data envelopes")
    s.add_argument("--J", default=None, help="constraint interval a,b")
    s.add_argument("--x-check", type=float, default=None, help="base point in the target window")
    s.add_argument("--window", default=None, help="initial-time window a,b")
    s.add_argument("--samples", type=int, default=0, help="number of random designs to emit")
    s = target_cmd("member", "test a candidate initial datum")
    s.add_argument("--candidate", required=True, help="candidate profile CSV")
    s.add_argument("--J", required=True, help="constraint interval a,b")
    s.add_argument("--x-check", type=float, default=None)
    s = target_cmd("localize", "design for a target known on a window")
    s.add_argument("--window", default=None, help="target window x1,x2 (default: the grid)")
    s.add_argument("--J", required=True, help="constraint interval a,b")
    s.add_argument("--x-check", type=float, default=None)

    s = sub.add_parser("evolve", parents=[common], help="forward entropy solution")
    s.add_argument("--input", required=True)
    s.add_argument("--flux", default="burgers")
    s.add_argument("--t", type=float, required=True, help="time")
    s.add_argument("--scheme", choices=("hopflax", "godunov"), default="hopflax")
    s.add_argument("--cfl", type=float, default=0.9)
    s.add_argument("--window", default=None, help="output window a,b")

    s = sub.add_parser("traffic", parents=[common], help="inflow reconstruction from outflow")
    s.add_argument("--scenario", required=True, help="scenario JSON")
    s.add_argument("--input", default=None, help="outflow CSV (t,q_out); overrides the scenario")

    s = sub.add_parser("batch", parents=[common], help="run traffic scenarios in parallel")
    s.add_argument("scenarios", nargs="+", help="scenario JSON files")
    s.add_argument("--workers", type=int, default=4)
    return p


COMMANDS = {
    "reach": cmd_reach,
    "design": cmd_design,
    "member": cmd_member,
    "evolve": cmd_evolve,
    "localize": cmd_localize,
    "traffic": cmd_traffic,
    "batch": cmd_batch,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("T", "t"):
        val = getattr(args, name, None)
        if val is not None and not val > 0:
            print(f"error: --{name} must be positive, got {val:g}", file=sys.stderr)
            return EXIT_ERROR
    try:
        out = Output(args)
        return COMMANDS[args.command](args, out)
    except (NotReachable, ConstraintInfeasible) as exc:
        res = {"reachable": False, "message": str(exc)}
        verdict = getattr(exc, "verdict", None)
        if verdict is not None and hasattr(verdict, "to_dict"):
            res.update(verdict.to_dict())
        res["reachable"] = False
        out.json(args.command, res)
        return EXIT_VERDICT
    except (CliError, InverseDesignError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
