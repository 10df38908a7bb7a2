"""Command line entry points.

Exit codes, one per error class:
  0  success
  2  usage or configuration error
  3  model file rejected by the schema
  4  empty sector or sector dimension over budget
  5  eigensolver failed to converge or could not separate a multiplet
  6  measurement subset over the density-matrix cap, or no feasible partition
  7  computed values outside the reference tolerances (table command)
"""

import argparse
import io
import sys

from . import pipeline
from .basis import BudgetExceeded, EmptySector
from .distinguishability import Infeasible, SubsetTooLarge
from .models import ClosedFormSizes, V15Composite
from .operators import ModelFormatError, model_to_json
from .pipeline import RunConfig
from .solver import AmbiguousMultiplet, NoConvergence
from .version import VERSION

EXIT_USAGE = 2
EXIT_MODEL_FORMAT = 3
EXIT_SECTOR = 4
EXIT_SOLVER = 5
EXIT_MEASUREMENT = 6
EXIT_TOLERANCE = 7


def parse_m(text):
    """Signed integer or half-integer: '2', '-2', '3/2', '-3/2', '1.5'."""
    t = text.strip()
    sign = 1.0
    if t[:1] in "+-":
        sign = -1.0 if t[0] == "-" else 1.0
        t = t[1:]
    if "/" in t:
        num, den = t.split("/")
        if int(den) != 2:
            raise argparse.ArgumentTypeError(
                "half-integer denominator must be 2: %r" % text)
        value = int(num) / 2.0
    else:
        value = float(t)
    if abs(2 * value - round(2 * value)) > 1e-9:
        raise argparse.ArgumentTypeError(
            "M must be integer or half-integer: %r" % text)
    return sign * value


def _add_common(p, with_phase=True):
    p.add_argument("--delta", type=float, default=0.01,
                   help="error-probability threshold for local "
                        "discrimination (default 0.01)")
    if with_phase:
        p.add_argument("--phi", type=float, default=0.0,
                       help="relative phase of the superposition, radians")
        p.add_argument("--phase-sweep", action="store_true",
                       help="also evaluate phi in {0, pi/2, pi, 3pi/2}")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="eigensolver tolerance")
    p.add_argument("--max-iter", type=int, default=20000)
    p.add_argument("--dense-threshold", type=int, default=4096,
                   help="sector size below which dense diagonalization is "
                        "used")
    p.add_argument("--max-sector-dim", type=float, default=5e6,
                   help="refuse sectors larger than this (default 5e6)")
    p.add_argument("--parallel", type=int, default=1,
                   help="worker threads for independent cells/subsets")
    p.add_argument("--out", default=None, help="write the primary payload "
                                               "(JSON or CSV) to this file")


def _config(args, **overrides):
    fields = dict(
        model=getattr(args, "model", ""),
        m1=getattr(args, "m1", None),
        m2=getattr(args, "m2", None),
        delta=getattr(args, "delta", 0.01),
        phi=getattr(args, "phi", 0.0),
        phase_sweep=getattr(args, "phase_sweep", False),
        closed_form=getattr(args, "closed_form", False),
        seed=args.seed,
        tol=args.tol,
        max_iter=args.max_iter,
        dense_threshold=args.dense_threshold,
        max_sector_dim=args.max_sector_dim,
        parallel=args.parallel,
        extended=getattr(args, "extended", False),
        out=args.out,
    )
    fields.update(overrides)
    return RunConfig(**fields)


def _emit(text, out_path, fallback=sys.stdout):
    if out_path:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        fallback.write(text)


def cmd_analyze(args):
    cfg = _config(args)
    res = pipeline.run_analysis(cfg)
    doc = res.to_json() + "\n"
    if cfg.out:
        print(pipeline.render_analysis(res))
        _emit(doc, cfg.out)
    else:
        print(pipeline.render_analysis(res), file=sys.stderr)
        sys.stdout.write(doc)
    return 0


def cmd_grid(args):
    cfg = _config(args)
    result = pipeline.grid(cfg)
    buf = io.StringIO()
    pipeline.write_grid_csv(result, buf)
    _emit(buf.getvalue(), cfg.out)
    return 0


def cmd_plm_sweep(args):
    cfg = _config(args)
    result = pipeline.plm_sweep(cfg)
    buf = io.StringIO()
    pipeline.write_plm_csv(result, buf)
    _emit(buf.getvalue(), cfg.out)
    return 0


def cmd_ring_scaling(args):
    cfg = _config(args, model="mn6")
    result = pipeline.ring_scaling(cfg)
    buf = io.StringIO()
    pipeline.write_ring_csv(result, buf)
    _emit(buf.getvalue(), cfg.out)
    return 0


def cmd_table1(args):
    cfg = _config(args, model="")
    result = pipeline.table1(cfg)
    print(pipeline.render_table1(result))
    if cfg.out:
        buf = io.StringIO()
        pipeline.write_table1_csv(result, buf)
        _emit(buf.getvalue(), cfg.out)
    return 0 if result.all_ok else EXIT_TOLERANCE


def cmd_export_model(args):
    key, model, _ = pipeline.resolve_model(args.model)
    if isinstance(model, (ClosedFormSizes, V15Composite)):
        raise ValueError("%r has no single exchange-model file form" % key)
    _emit(model_to_json(model) + "\n", args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spincat",
        description="Superposition sizes of molecular-nanomagnet cat states: "
                    "Fisher-information and local-distinguishability "
                    "measures from sector-resolved exact diagonalization.")
    parser.add_argument("--version", action="version",
                        version="spincat %s" % VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze",
                       help="superposition sizes for one (M1, M2) pair")
    p.add_argument("model", help="registry key or model JSON file")
    p.add_argument("--m1", type=parse_m, default=None)
    p.add_argument("--m2", type=parse_m, default=None)
    p.add_argument("--closed-form", action="store_true",
                   help="report the analytic single-domain sizes")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("grid",
                       help="D_FI/D_RFI over all ground-multiplet (M1, M2)")
    p.add_argument("model")
    _add_common(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("plm-sweep",
                       help="single-spin discrimination probabilities vs M")
    p.add_argument("model")
    _add_common(p, with_phase=False)
    p.set_defaults(func=cmd_plm_sweep)

    p = sub.add_parser("ring-scaling",
                       help="alternating-ring family sizes vs the large spin")
    _add_common(p)
    p.set_defaults(func=cmd_ring_scaling)

    p = sub.add_parser("table1",
                       help="recompute the summary table and compare to the "
                            "reference values")
    p.add_argument("--extended", action="store_true",
                   help="include the largest cluster rows (long)")
    _add_common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("export-model", help="write a model as JSON")
    p.add_argument("model")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export_model)
    return parser


def _join_m_flags(argv):
    """Fuse '--m2 -1/2' into '--m2=-1/2' so negative half-integers are not
    mistaken for option flags."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--m1", "--m2") and i + 1 < len(argv):
            out.append("%s=%s" % (argv[i], argv[i + 1]))
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_join_m_flags(argv))
    try:
        return args.func(args)
    except ModelFormatError as exc:
        return _fail(exc, EXIT_MODEL_FORMAT)
    except (EmptySector, BudgetExceeded) as exc:
        return _fail(exc, EXIT_SECTOR)
    except (NoConvergence, AmbiguousMultiplet) as exc:
        return _fail(exc, EXIT_SOLVER)
    except (SubsetTooLarge, Infeasible) as exc:
        return _fail(exc, EXIT_MEASUREMENT)
    except (KeyError, ValueError) as exc:
        return _fail(exc, EXIT_USAGE)


def _fail(exc, code):
    msg = exc.args[0] if exc.args else str(exc)
    print("error: %s" % msg, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
