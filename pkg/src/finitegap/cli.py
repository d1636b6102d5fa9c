"""Command-line interface: analyze, close, reconstruct, dress.

Exit codes: 0 success, 1 input error, 2 numerical or pipeline failure (the
failing stage is printed on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings

import numpy as np

from .closing import closure_residual, finite_gap_approximate
from .config import Settings
from .dressing import NonPeriodicDressingWarning, SimpleFactor, dress_potential, dressing_term
from .errors import FiniteGapError, InputError, NumericalError
from .frame import integrate_frame
from .potential import Potential
from .reconstruct import curve_rows, endpoint_gap, sym_reconstruct
from .spectral import perturbed_coeffs, zero_order_at

log = logging.getLogger("finitegap")


# ---------------------------------------------------------------------------
# serialization


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return json.dumps(None)
        return format(x, ".17g")
    if isinstance(x, (complex, np.complexfloating)):
        return _fmt([x.real, x.imag])
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, np.ndarray):
        return _fmt(x.tolist())
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps17(obj) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _fmt(obj) + "\n"


def _write(path, obj):
    text = dumps17(obj)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def load_potential(path) -> Potential:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno} column {exc.colno})") from exc
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return Potential.from_dict(data)


def parse_complex(text) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise InputError(f"cannot parse complex number {text!r}") from exc


def parse_line(text) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 2:
        raise InputError("line must be given as two comma-separated components, e.g. 1,1j")
    v = np.array([parse_complex(p) for p in parts])
    if np.linalg.norm(v) == 0.0:
        raise InputError("line vector must be nonzero")
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args, settings):
    q = load_potential(args.potential)
    if args.k_max < 0:
        raise InputError("--k-max must be non-negative")
    theta = q.theta if args.theta is None else args.theta
    samples = perturbed_coeffs(q, range(-args.k_max, args.k_max + 1), settings)
    closure = closure_residual(q, theta, settings, with_order=False)
    order = zero_order_at(q, 1j + theta, settings)
    out = {
        "lambda_k": [[sm.k, sm.lambda_k.real, sm.lambda_k.imag] for sm in samples],
        "z_k": [[sm.k, sm.z_k.real, sm.z_k.imag] for sm in samples],
        "order_reports": [order.to_dict()],
        "closure": {**closure.to_dict(), "n": order.n, "j0": order.j0},
    }
    _write(args.out, out)
    return 0


def cmd_close(args, settings, n_default):
    q = load_potential(args.potential)
    n = args.n if args.n is not None else n_default
    if n is None:
        raise InputError("close: give -n or an \"n\" entry in the config")
    theta = q.theta if args.theta is None else args.theta
    res = finite_gap_approximate(q, theta, int(n), settings)
    out = res.potential.to_dict()
    # wall time stays out of the file so repeated runs are byte-identical
    prov = res.provenance()
    log.info("close: n=%d finished in %.2f s", res.n, prov.pop("runtime_s"))
    out["provenance"] = prov
    _write(args.out, out)
    return 0


def cmd_reconstruct(args, settings):
    q = load_potential(args.potential)
    if args.samples < 8:
        raise InputError("--samples must be at least 8")
    curve = sym_reconstruct(q, args.theta, args.samples, settings)
    header, data = curve_rows(curve, args.chart)
    gap = endpoint_gap(curve)
    fmt = args.format or ("json" if str(args.out).endswith(".json") else "csv")
    if fmt == "json":
        _write(args.out, {"columns": header, "rows": data, "endpoint_gap": gap})
    else:
        lines = [",".join(header)] + [",".join(format(v, ".17g") for v in row) for row in data]
        text = "\n".join(lines) + "\n"
        if args.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.out, "w") as fh:
                fh.write(text)
    print(f"endpoint gap: {gap:.3e}", file=sys.stderr)
    return 0


def cmd_dress(args, settings):
    q = load_potential(args.potential)
    lam = parse_complex(args.lambda_star)
    if abs(lam.imag) < 1e-12:
        raise InputError("lambda* must have nonzero imaginary part")
    sf = SimpleFactor(lam, parse_line(args.line))
    frame = integrate_frame(q, lam, settings=settings)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonPeriodicDressingWarning)
        qd = dress_potential(q, sf, frame_at_star=frame, settings=settings)
    notes = [str(w.message) for w in caught if issubclass(w.category, NonPeriodicDressingWarning)]
    values = q.evaluate(frame.t) + dressing_term(sf, frame)
    stride = max(1, (frame.t.size - 1) // args.provenance_samples)
    out = qd.to_dict()
    out["provenance"] = {
        "lambda_star": lam,
        "line": sf.line.vector,
        "samples": {
            "t": frame.t[::stride],
            "re": values.real[::stride],
            "im": values.imag[::stride],
        },
    }
    if notes:
        out["warning"] = notes[0]
        print(f"warning: {notes[0]}", file=sys.stderr)
    _write(args.out, out)
    return 0


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON settings file")
    common.add_argument("--threads", type=int, help="worker cap for Jacobian columns")
    common.add_argument("--tol", type=float, help="Newton residual tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="finitegap", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="spectral data and closing diagnostics")
    a.add_argument("potential")
    a.add_argument("--k-max", type=int, default=10)
    a.add_argument("--theta", type=float)
    a.add_argument("-o", "--out")

    c = sub.add_parser("close", parents=[common], help="closed finite-gap approximation")
    c.add_argument("potential")
    c.add_argument("-n", type=int)
    c.add_argument("--theta", type=float)
    c.add_argument("-o", "--out")

    r = sub.add_parser("reconstruct", parents=[common], help="curve samples from a potential")
    r.add_argument("potential")
    r.add_argument("--samples", type=int, default=256)
    r.add_argument("--theta", type=float)
    chart = r.add_mutually_exclusive_group()
    chart.add_argument("--ball", dest="chart", action="store_const", const="ball")
    chart.add_argument("--hyperboloid", dest="chart", action="store_const", const="hyperboloid")
    chart.add_argument("--both", dest="chart", action="store_const", const="both")
    r.set_defaults(chart="hyperboloid")
    r.add_argument("--format", choices=("csv", "json"))
    r.add_argument("-o", "--out")

    d = sub.add_parser("dress", parents=[common], help="simple-factor dressing")
    d.add_argument("potential")
    d.add_argument("--lambda-star", required=True, help="pole, e.g. 1j or 0.3+1j")
    d.add_argument("--line", required=True, help="line vector, e.g. 1,1")
    d.add_argument("--provenance-samples", type=int, default=64)
    d.add_argument("-o", "--out")
    return p


def _settings(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
    s = Settings.from_dict(data)
    return s.updated(threads=args.threads, newton_tol=args.tol), data.get("n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings, n_cfg = _settings(args)
        if args.command == "analyze":
            return cmd_analyze(args, settings)
        if args.command == "close":
            return cmd_close(args, settings, n_cfg)
        if args.command == "reconstruct":
            return cmd_reconstruct(args, settings)
        return cmd_dress(args, settings)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"error [{exc.stage or args.command}]: {exc}", file=sys.stderr)
        return 2
    except FiniteGapError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
